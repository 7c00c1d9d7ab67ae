#include "narx/multiclass.hpp"
#include "narx/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace narx {

namespace {

Eigen::VectorXd one_vs_all_labels(const std::vector<int>& labels, int v) {
    Eigen::VectorXd y(static_cast<Eigen::Index>(labels.size()));
    for (std::size_t i = 0; i < labels.size(); ++i)
        y(static_cast<Eigen::Index>(i)) = labels[i] == v ? 1.0 : 0.0;
    return y;
}

std::vector<LogisticModel> fit_ova_models(const Eigen::MatrixXd& cols,
                                          const std::vector<int>& labels,
                                          int class_count, double lambda) {
    FitOptions opts;
    opts.lambda = lambda;
    std::vector<LogisticModel> models;
    models.reserve(static_cast<std::size_t>(class_count));
    for (int v = 1; v <= class_count; ++v)
        models.push_back(fit_mle(cols, one_vs_all_labels(labels, v), opts));
    return models;
}

std::vector<int> argmax_predict(const std::vector<LogisticModel>& models,
                                const Eigen::MatrixXd& cols) {
    Eigen::MatrixXd proba(cols.rows(), static_cast<Eigen::Index>(models.size()));
    for (std::size_t v = 0; v < models.size(); ++v)
        proba.col(static_cast<Eigen::Index>(v)) = predict_proba(models[v], cols);
    std::vector<int> out(static_cast<std::size_t>(cols.rows()));
    for (Eigen::Index i = 0; i < proba.rows(); ++i) {
        int best = 0;
        for (int v = 1; v < proba.cols(); ++v)
            if (proba(i, v) > proba(i, best)) best = v;
        out[static_cast<std::size_t>(i)] = best + 1;
    }
    return out;
}

CvSummary cv_multiclass_accuracy(const Eigen::MatrixXd& cols,
                                 const std::vector<int>& labels,
                                 int class_count, const FoldPlan& folds,
                                 double lambda) {
    std::vector<double> accs;
    for (int f = 0; f < folds.k; ++f) {
        const auto train = folds.complement_indices(f);
        const auto test = folds.fold_indices(f);
        Eigen::MatrixXd xtr(train.size(), cols.cols());
        std::vector<int> ytr(train.size());
        for (std::size_t i = 0; i < train.size(); ++i) {
            xtr.row(static_cast<Eigen::Index>(i)) = cols.row(train[i]);
            ytr[i] = labels[static_cast<std::size_t>(train[i])];
        }
        Eigen::MatrixXd xte(test.size(), cols.cols());
        std::vector<int> yte(test.size());
        for (std::size_t i = 0; i < test.size(); ++i) {
            xte.row(static_cast<Eigen::Index>(i)) = cols.row(test[i]);
            yte[i] = labels[static_cast<std::size_t>(test[i])];
        }
        const auto models = fit_ova_models(xtr, ytr, class_count, lambda);
        const auto pred = argmax_predict(models, xte);
        std::size_t hits = 0;
        for (std::size_t i = 0; i < yte.size(); ++i)
            if (pred[i] == yte[i]) ++hits;
        accs.push_back(static_cast<double>(hits) /
                       static_cast<double>(yte.size()));
    }
    CvSummary out;
    for (double a : accs) out.mean += a;
    out.mean /= static_cast<double>(accs.size());
    if (accs.size() > 1) {
        double ss = 0.0;
        for (double a : accs) ss += (a - out.mean) * (a - out.mean);
        out.stddev = std::sqrt(ss / static_cast<double>(accs.size() - 1));
    }
    return out;
}

Eigen::MatrixXd columns_for(const TermLibrary& lib, const std::vector<int>& idx) {
    Eigen::MatrixXd cols(lib.row_count(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i)
        cols.col(static_cast<Eigen::Index>(i)) = lib.design_matrix.col(idx[i]);
    return cols;
}

} // namespace

std::vector<CandidateTerm>
MultinomialNarxClassifier::class_terms(int v) const {
    const auto& trace = per_class.at(static_cast<std::size_t>(v));
    const int size = model_sizes.at(static_cast<std::size_t>(v));
    std::vector<CandidateTerm> out;
    out.reserve(static_cast<std::size_t>(size));
    for (int i = 0; i < size; ++i)
        out.push_back(trace.selected[static_cast<std::size_t>(i)].term);
    return out;
}

std::vector<int> effective_labels(const TimeSeriesDataset& ds,
                                  const LagSpec& spec) {
    if (ds.labels.empty()) throw DataError("dataset has no labels");
    // Mirror fit(): input_channels == 0 means "use the dataset's channels".
    const int channels = spec.input_channels == 0
                             ? static_cast<int>(ds.channel_count())
                             : spec.input_channels;
    int lag = spec.max_output_lag;
    if (channels > 0) lag = std::max(lag, spec.max_input_lag);
    if (static_cast<Eigen::Index>(lag) >= ds.sample_count())
        throw DataError("not enough samples for the requested lags");
    return {ds.labels.begin() + lag, ds.labels.end()};
}

MultinomialNarxClassifier fit(const TimeSeriesDataset& ds, const LagSpec& spec,
                              const FoldPlan& folds, const FitConfig& config) {
    ds.validate();
    if (ds.labels.empty()) throw DataError("fitting requires labels");
    const int c = ds.class_count();
    if (c < 2) throw DataError("need at least 2 classes");

    LagSpec resolved = spec;
    if (resolved.input_channels == 0)
        resolved.input_channels = static_cast<int>(ds.channel_count());
    if (resolved.input_channels != ds.channel_count())
        throw ConfigError("term spec expects " +
                          std::to_string(resolved.input_channels) +
                          " channels, dataset has " +
                          std::to_string(ds.channel_count()));
    resolved.validate();

    MultinomialNarxClassifier clf;
    clf.class_labels = ds.class_names;
    clf.channel_names = ds.channel_names;
    clf.term_spec = resolved;
    clf.mode = config.mode;
    clf.lambda = config.lambda;

    auto [std_ds, standardizer] = standardize(ds);
    clf.standardizer = std::move(standardizer);

    const TermLibrary library =
        build_design_matrix(std_ds, enumerate_terms(resolved));
    const std::vector<int>& y = library.labels;
    {
        std::set<int> present(y.begin(), y.end());
        for (int v = 1; v <= c; ++v)
            if (!present.count(v))
                throw DataError("class '" + ds.class_names[v - 1] +
                                "' absent from training data");
    }
    if (static_cast<Eigen::Index>(folds.assignments.size()) !=
        library.row_count())
        throw DataError("fold plan covers " +
                        std::to_string(folds.assignments.size()) +
                        " rows but the design matrix has " +
                        std::to_string(library.row_count()));

    FitOptions opts;
    opts.lambda = config.lambda;

    if (config.mode == FitMode::PerClass) {
        for (int v = 1; v <= c; ++v)
            clf.per_class.push_back(select_terms(library, one_vs_all_labels(y, v),
                                                 config.k_max, folds,
                                                 config.lambda));
    } else {
        std::vector<Eigen::VectorXd> y_ova;
        for (int v = 1; v <= c; ++v) y_ova.push_back(one_vs_all_labels(y, v));
        auto scorer = [&](const Eigen::VectorXd& w) {
            const Eigen::MatrixXd col = w;
            double sum = 0.0;
            for (int v = 0; v < c; ++v)
                sum += accuracy(fit_mle(col, y_ova[static_cast<std::size_t>(v)], opts),
                                col, y_ova[static_cast<std::size_t>(v)]);
            return sum / static_cast<double>(c);
        };
        auto evaluator = [&](const Eigen::MatrixXd& cols) {
            return cv_multiclass_accuracy(cols, y, c, folds, config.lambda);
        };
        SelectionTrace shared =
            run_greedy_selection(library, config.k_max, scorer, evaluator);
        const Eigen::MatrixXd cols = columns_for(library, shared.selected_indices());
        for (int v = 1; v <= c; ++v) {
            SelectionTrace trace = shared;
            trace.final_model =
                fit_mle(cols, y_ova[static_cast<std::size_t>(v - 1)], opts);
            clf.per_class.push_back(std::move(trace));
        }
    }

    // Resolve per-class model sizes and refit the consuming models.
    for (int v = 0; v < c; ++v) {
        auto& trace = clf.per_class[static_cast<std::size_t>(v)];
        int size = static_cast<int>(trace.selected.size());
        if (config.size_rule)
            size = std::min(size, choose_model_size(trace, *config.size_rule));
        clf.model_sizes.push_back(size);
        if (size == static_cast<int>(trace.selected.size())) {
            clf.models.push_back(trace.final_model);
        } else {
            const std::vector<int> chosen = trace.selected_indices();
            const std::vector<int> idx(chosen.begin(), chosen.begin() + size);
            clf.models.push_back(fit_mle(columns_for(library, idx),
                                         one_vs_all_labels(y, v + 1), opts));
        }
    }
    return clf;
}

PredictionResult predict_with_scores(const MultinomialNarxClassifier& clf,
                                     const TimeSeriesDataset& ds) {
    const int c = clf.class_count();
    if (c == 0) throw DataError("classifier is not fitted");
    if (ds.channel_count() !=
        static_cast<Eigen::Index>(clf.channel_names.size()))
        throw DataError("dataset has " + std::to_string(ds.channel_count()) +
                        " channels, model expects " +
                        std::to_string(clf.channel_names.size()));

    // Reorder the input channels to the training layout when names differ.
    std::vector<Eigen::Index> order;
    if (ds.channel_names == clf.channel_names) {
        for (Eigen::Index j = 0; j < ds.channel_count(); ++j) order.push_back(j);
    } else {
        for (const auto& name : clf.channel_names) {
            auto it = std::find(ds.channel_names.begin(), ds.channel_names.end(),
                                name);
            if (it == ds.channel_names.end())
                throw DataError("dataset is missing channel '" + name + "'");
            order.push_back(it - ds.channel_names.begin());
        }
    }
    TimeSeriesDataset aligned = ds;
    aligned.channel_names = clf.channel_names;
    for (std::size_t j = 0; j < order.size(); ++j)
        aligned.channels.col(static_cast<Eigen::Index>(j)) =
            ds.channels.col(order[j]);
    aligned.channels = clf.standardizer.apply(aligned.channels);

    // Evaluate the union of all class terms once; rows align across
    // classes because the union shares one maximum lag.
    std::vector<CandidateTerm> all_terms;
    std::map<std::string, int> term_index;
    std::vector<std::vector<int>> class_cols(static_cast<std::size_t>(c));
    for (int v = 0; v < c; ++v) {
        for (const auto& term : clf.class_terms(v)) {
            const std::string key = term.render();
            auto it = term_index.find(key);
            if (it == term_index.end()) {
                it = term_index.emplace(key, static_cast<int>(all_terms.size()))
                         .first;
                all_terms.push_back(term);
            }
            class_cols[static_cast<std::size_t>(v)].push_back(it->second);
        }
    }
    const TermLibrary lib = build_design_matrix(aligned, all_terms, false);

    PredictionResult result;
    result.effective_start = lib.effective_start;
    result.proba.resize(lib.row_count(), c);
    for (int v = 0; v < c; ++v) {
        Eigen::MatrixXd cols(lib.row_count(),
                             static_cast<Eigen::Index>(
                                 class_cols[static_cast<std::size_t>(v)].size()));
        for (std::size_t i = 0; i < class_cols[static_cast<std::size_t>(v)].size();
             ++i)
            cols.col(static_cast<Eigen::Index>(i)) = lib.design_matrix.col(
                class_cols[static_cast<std::size_t>(v)][i]);
        result.proba.col(v) =
            predict_proba(clf.models[static_cast<std::size_t>(v)], cols);
    }
    result.labels.resize(static_cast<std::size_t>(lib.row_count()));
    for (Eigen::Index i = 0; i < result.proba.rows(); ++i) {
        int best = 0;
        for (int v = 1; v < c; ++v)
            if (result.proba(i, v) > result.proba(i, best)) best = v;
        result.labels[static_cast<std::size_t>(i)] = best + 1;
    }
    return result;
}

std::vector<int> predict(const MultinomialNarxClassifier& clf,
                         const TimeSeriesDataset& ds) {
    return predict_with_scores(clf, ds).labels;
}

Eigen::MatrixXd predict_proba(const MultinomialNarxClassifier& clf,
                              const TimeSeriesDataset& ds) {
    return predict_with_scores(clf, ds).proba;
}

ImportanceReport feature_importance(const MultinomialNarxClassifier& clf) {
    if (clf.per_class.empty()) throw DataError("classifier is not fitted");
    std::map<std::string, ImportanceEntry> by_term;
    for (int v = 0; v < clf.class_count(); ++v) {
        const auto& trace = clf.per_class[static_cast<std::size_t>(v)];
        const auto& model = clf.models[static_cast<std::size_t>(v)];
        for (int i = 0; i < clf.model_sizes[static_cast<std::size_t>(v)]; ++i) {
            const auto& sel = trace.selected[static_cast<std::size_t>(i)];
            const std::string key = sel.term.render();
            auto [it, fresh] = by_term.try_emplace(key);
            auto& entry = it->second;
            if (fresh) {
                entry.term = sel.term;
                entry.term_string = key;
                entry.best_rank = i + 1;
                entry.best_score = sel.score;
            }
            entry.classes.push_back(v + 1);
            entry.scores.push_back(sel.score);
            entry.coefficients.push_back(model.weights(i));
            entry.best_rank = std::min(entry.best_rank, i + 1);
            entry.best_score = std::max(entry.best_score, sel.score);
        }
    }
    ImportanceReport report;
    for (auto& [key, entry] : by_term) report.entries.push_back(std::move(entry));
    std::stable_sort(report.entries.begin(), report.entries.end(),
                     [](const ImportanceEntry& a, const ImportanceEntry& b) {
                         if (a.best_score != b.best_score)
                             return a.best_score > b.best_score;
                         return a.best_rank < b.best_rank;
                     });
    return report;
}

} // namespace narx
