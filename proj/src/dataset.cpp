#include "narx/dataset.hpp"
#include "narx/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace narx {

namespace {

std::vector<std::string> split_line(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, delim)) out.push_back(field);
    if (!line.empty() && line.back() == delim) out.emplace_back();
    return out;
}

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& s, double& out) {
    const std::string t = trim(s);
    if (t.empty()) return false;
    const char* first = t.data();
    const char* last = t.data() + t.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc{} && ptr == last;
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

LoadState parse_load(const std::string& s, std::size_t row) {
    const std::string t = trim(s);
    if (t == "loaded" || t == "1") return LoadState::Loaded;
    if (t == "empty" || t == "0") return LoadState::Empty;
    throw DataError("row " + std::to_string(row) +
                    ": load state must be loaded/empty, got '" + t + "'");
}

// Seeded Fisher-Yates; std::shuffle's distribution is not pinned by the
// standard, this one is reproducible everywhere.
template <typename T>
void deterministic_shuffle(std::vector<T>& v, std::mt19937_64& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(v[i - 1], v[j]);
    }
}

std::vector<std::vector<Eigen::Index>>
indices_by_class(const std::vector<int>& labels, int class_count) {
    std::vector<std::vector<Eigen::Index>> by_class(class_count);
    for (std::size_t i = 0; i < labels.size(); ++i)
        by_class[labels[i] - 1].push_back(static_cast<Eigen::Index>(i));
    return by_class;
}

} // namespace

void TimeSeriesDataset::validate() const {
    const auto n = sample_count();
    if (n < 1) throw DataError("dataset has no samples");
    if (static_cast<Eigen::Index>(channel_names.size()) != channel_count())
        throw DataError("channel name count does not match channel count");
    if (!channels.allFinite())
        throw DataError("dataset contains non-finite channel values");
    if (!labels.empty()) {
        if (static_cast<Eigen::Index>(labels.size()) != n)
            throw DataError("label count does not match sample count");
        const int c = class_count();
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i] < 1 || labels[i] > c)
                throw DataError("row " + std::to_string(i + 1) +
                                ": label " + std::to_string(labels[i]) +
                                " outside 1.." + std::to_string(c));
    }
    if (!load_state.empty() &&
        static_cast<Eigen::Index>(load_state.size()) != n)
        throw DataError("load-state count does not match sample count");
}

std::vector<Eigen::Index> FoldPlan::fold_indices(int fold) const {
    std::vector<Eigen::Index> out;
    for (std::size_t i = 0; i < assignments.size(); ++i)
        if (assignments[i] == fold) out.push_back(static_cast<Eigen::Index>(i));
    return out;
}

std::vector<Eigen::Index> FoldPlan::complement_indices(int fold) const {
    std::vector<Eigen::Index> out;
    for (std::size_t i = 0; i < assignments.size(); ++i)
        if (assignments[i] != fold) out.push_back(static_cast<Eigen::Index>(i));
    return out;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& x) const {
    if (x.cols() != means.size())
        throw DataError("standardizer: expected " + std::to_string(means.size()) +
                        " channels, got " + std::to_string(x.cols()));
    return (x.rowwise() - means.transpose()).array().rowwise() /
           stds.transpose().array();
}

Eigen::MatrixXd Standardizer::invert(const Eigen::MatrixXd& x) const {
    if (x.cols() != means.size())
        throw DataError("standardizer: expected " + std::to_string(means.size()) +
                        " channels, got " + std::to_string(x.cols()));
    return (x.array().rowwise() * stds.transpose().array()).matrix().rowwise() +
           means.transpose();
}

TimeSeriesDataset load_csv(const std::string& path, const CsvSchema& schema) {
    if (schema.input_columns.empty())
        throw ConfigError("schema must name at least one input column");

    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw DataError("'" + path + "' is empty");
    const auto header = split_line(line, schema.delimiter);

    auto column_of = [&](const std::string& name) -> int {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (trim(header[i]) == name) return static_cast<int>(i);
        return -1;
    };

    std::vector<int> input_cols;
    for (const auto& name : schema.input_columns) {
        int c = column_of(name);
        if (c < 0) throw DataError("missing input column '" + name + "'");
        input_cols.push_back(c);
    }
    int label_col = -1;
    if (!schema.label_column.empty()) {
        label_col = column_of(schema.label_column);
        if (label_col < 0)
            throw DataError("missing label column '" + schema.label_column + "'");
    }
    int load_col = -1;
    if (!schema.load_column.empty()) {
        load_col = column_of(schema.load_column);
        if (load_col < 0)
            throw DataError("missing load column '" + schema.load_column + "'");
    }

    const std::size_t p = input_cols.size();
    std::vector<double> values;        // row-major staging
    std::vector<std::string> label_strings;
    std::vector<LoadState> loads;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        ++row;
        const auto fields = split_line(line, schema.delimiter);
        if (fields.size() < header.size())
            throw DataError("row " + std::to_string(row) + ": expected " +
                            std::to_string(header.size()) + " fields, got " +
                            std::to_string(fields.size()));
        std::vector<double> row_vals(p);
        bool bad = false;
        for (std::size_t j = 0; j < p; ++j) {
            double v;
            if (!parse_double(fields[input_cols[j]], v) || !std::isfinite(v)) {
                if (schema.drop_bad_rows) { bad = true; break; }
                throw DataError("row " + std::to_string(row) + ": column '" +
                                schema.input_columns[j] +
                                "' has non-numeric or non-finite value '" +
                                trim(fields[input_cols[j]]) + "'");
            }
            row_vals[j] = v;
        }
        if (bad) continue;
        values.insert(values.end(), row_vals.begin(), row_vals.end());
        if (label_col >= 0) label_strings.push_back(trim(fields[label_col]));
        if (load_col >= 0) loads.push_back(parse_load(fields[load_col], row));
    }
    const std::size_t n = values.size() / p;
    if (n == 0) throw DataError("'" + path + "' has no data rows");

    TimeSeriesDataset ds;
    ds.channel_names = schema.input_columns;
    ds.channels.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < p; ++j)
            ds.channels(static_cast<Eigen::Index>(i),
                        static_cast<Eigen::Index>(j)) = values[i * p + j];
    ds.load_state = std::move(loads);

    if (label_col >= 0) {
        std::vector<std::string> classes = schema.class_names;
        if (classes.empty()) {
            std::set<std::string> uniq(label_strings.begin(), label_strings.end());
            classes.assign(uniq.begin(), uniq.end());
        }
        std::map<std::string, int> index;
        for (std::size_t v = 0; v < classes.size(); ++v)
            index[classes[v]] = static_cast<int>(v) + 1;
        ds.class_names = classes;
        ds.labels.reserve(n);
        for (std::size_t i = 0; i < label_strings.size(); ++i) {
            auto it = index.find(label_strings[i]);
            if (it == index.end())
                throw DataError("row " + std::to_string(i + 1) +
                                ": unknown label value '" + label_strings[i] + "'");
            ds.labels.push_back(it->second);
        }
    }
    ds.validate();
    return ds;
}

void save_csv(const TimeSeriesDataset& ds, const std::string& path,
              const std::string& label_column) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path + "'");
    for (std::size_t j = 0; j < ds.channel_names.size(); ++j) {
        if (j) out << ',';
        out << ds.channel_names[j];
    }
    if (!ds.labels.empty()) out << ',' << label_column;
    out << '\n';
    for (Eigen::Index i = 0; i < ds.sample_count(); ++i) {
        for (Eigen::Index j = 0; j < ds.channel_count(); ++j) {
            if (j) out << ',';
            out << format_double(ds.channels(i, j));
        }
        if (!ds.labels.empty())
            out << ',' << ds.class_names[ds.labels[static_cast<std::size_t>(i)] - 1];
        out << '\n';
    }
    if (!out) throw DataError("failed writing '" + path + "'");
}

std::pair<TimeSeriesDataset, TimeSeriesDataset>
train_validation_split(const TimeSeriesDataset& ds, double train_fraction,
                       std::uint64_t seed) {
    ds.validate();
    if (ds.labels.empty()) throw DataError("split requires labels");
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw ConfigError("train fraction must lie in (0,1)");
    const auto n = ds.sample_count();
    const int c = ds.class_count();
    if (train_fraction * static_cast<double>(n) < static_cast<double>(c))
        throw ConfigError("training share too small to represent every class");

    auto by_class = indices_by_class(ds.labels, c);
    for (int v = 0; v < c; ++v)
        if (by_class[v].size() < 2)
            throw DataError("class '" + ds.class_names[v] +
                            "' has fewer than 2 samples");

    // Largest-remainder allocation of the train quota across classes,
    // clamped so both parts keep at least one sample of every class.
    const std::int64_t target =
        std::llround(train_fraction * static_cast<double>(n));
    std::vector<std::int64_t> take(c);
    std::vector<double> frac(c);
    std::int64_t total = 0;
    for (int v = 0; v < c; ++v) {
        const double quota = train_fraction * static_cast<double>(by_class[v].size());
        take[v] = static_cast<std::int64_t>(std::floor(quota));
        frac[v] = quota - std::floor(quota);
        take[v] = std::clamp<std::int64_t>(
            take[v], 1, static_cast<std::int64_t>(by_class[v].size()) - 1);
        total += take[v];
    }
    std::vector<int> order(c);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return frac[a] > frac[b]; });
    std::size_t cursor = 0;
    while (total != target) {
        const int v = order[cursor % order.size()];
        const auto cap = static_cast<std::int64_t>(by_class[v].size()) - 1;
        if (total < target && take[v] < cap) { ++take[v]; ++total; }
        else if (total > target && take[v] > 1) { --take[v]; --total; }
        ++cursor;
        if (cursor > order.size() * static_cast<std::size_t>(n + 1)) break; // infeasible target, keep clamped fit
    }

    std::mt19937_64 rng(seed);
    std::vector<Eigen::Index> train_rows, val_rows;
    for (int v = 0; v < c; ++v) {
        auto members = by_class[v];
        deterministic_shuffle(members, rng);
        for (std::size_t i = 0; i < members.size(); ++i)
            (i < static_cast<std::size_t>(take[v]) ? train_rows : val_rows)
                .push_back(members[i]);
    }
    std::sort(train_rows.begin(), train_rows.end());
    std::sort(val_rows.begin(), val_rows.end());
    return {dataset_subset(ds, train_rows), dataset_subset(ds, val_rows)};
}

FoldPlan make_folds(const std::vector<int>& labels, int k, std::uint64_t seed) {
    const auto n = labels.size();
    if (k < 2) throw ConfigError("fold count must be at least 2");
    if (static_cast<std::size_t>(k) > n)
        throw ConfigError("fold count " + std::to_string(k) +
                          " exceeds sample count " + std::to_string(n));
    int c = 0;
    for (int y : labels) {
        if (y < 1) throw DataError("labels must be positive");
        c = std::max(c, y);
    }
    auto by_class = indices_by_class(labels, c);

    // Global fold sizes first (differ by at most one), then per-class
    // extras placed greedily into the folds with most remaining capacity.
    const std::size_t base = n / static_cast<std::size_t>(k);
    const std::size_t rem = n % static_cast<std::size_t>(k);
    std::vector<std::size_t> capacity(k);
    std::vector<std::vector<std::size_t>> count(c, std::vector<std::size_t>(k));
    for (int f = 0; f < k; ++f)
        capacity[f] = base + (static_cast<std::size_t>(f) < rem ? 1 : 0);
    for (int v = 0; v < c; ++v) {
        const std::size_t a = by_class[v].size() / static_cast<std::size_t>(k);
        std::size_t extras = by_class[v].size() % static_cast<std::size_t>(k);
        for (int f = 0; f < k; ++f) {
            count[v][f] = a;
            capacity[f] -= a;
        }
        std::vector<int> folds(k);
        std::iota(folds.begin(), folds.end(), 0);
        std::stable_sort(folds.begin(), folds.end(), [&](int x, int y) {
            return capacity[x] > capacity[y];
        });
        for (std::size_t e = 0; e < extras; ++e) {
            count[v][folds[e]] += 1;
            capacity[folds[e]] -= 1;
        }
    }

    std::mt19937_64 rng(seed);
    FoldPlan plan;
    plan.k = k;
    plan.seed = seed;
    plan.assignments.assign(n, -1);
    for (int v = 0; v < c; ++v) {
        auto members = by_class[v];
        deterministic_shuffle(members, rng);
        std::size_t pos = 0;
        for (int f = 0; f < k; ++f)
            for (std::size_t i = 0; i < count[v][f]; ++i)
                plan.assignments[static_cast<std::size_t>(members[pos++])] = f;
    }
    return plan;
}

FoldPlan make_folds(const TimeSeriesDataset& ds, int k, std::uint64_t seed) {
    ds.validate();
    if (ds.labels.empty()) throw DataError("folding requires labels");
    return make_folds(ds.labels, k, seed);
}

std::pair<TimeSeriesDataset, Standardizer>
standardize(const TimeSeriesDataset& ds) {
    ds.validate();
    const auto n = ds.sample_count();
    Standardizer st;
    st.means = ds.channels.colwise().mean();
    Eigen::MatrixXd centered = ds.channels.rowwise() - st.means.transpose();
    st.stds = (centered.array().square().colwise().sum() /
               static_cast<double>(n)).sqrt();
    for (Eigen::Index j = 0; j < st.stds.size(); ++j)
        if (st.stds(j) <= 0.0) st.stds(j) = 1.0;  // constant channel

    TimeSeriesDataset out = ds;
    out.channels = st.apply(ds.channels);
    return {std::move(out), std::move(st)};
}

TimeSeriesDataset dataset_subset(const TimeSeriesDataset& ds,
                                 const std::vector<Eigen::Index>& rows) {
    TimeSeriesDataset out;
    out.channel_names = ds.channel_names;
    out.class_names = ds.class_names;
    out.channels.resize(static_cast<Eigen::Index>(rows.size()), ds.channel_count());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] < 0 || rows[i] >= ds.sample_count())
            throw DataError("subset row index out of range");
        out.channels.row(static_cast<Eigen::Index>(i)) = ds.channels.row(rows[i]);
    }
    if (!ds.labels.empty()) {
        out.labels.reserve(rows.size());
        for (auto r : rows) out.labels.push_back(ds.labels[static_cast<std::size_t>(r)]);
    }
    if (!ds.load_state.empty()) {
        out.load_state.reserve(rows.size());
        for (auto r : rows)
            out.load_state.push_back(ds.load_state[static_cast<std::size_t>(r)]);
    }
    return out;
}

} // namespace narx
