#include "narx/terms.hpp"
#include "narx/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace narx {

void LagSpec::validate() const {
    if (nonlinearity_degree < 1)
        throw ConfigError("nonlinearity degree must be at least 1");
    if (max_output_lag < 0 || max_input_lag < 0)
        throw ConfigError("lags must be non-negative");
    if (input_channels < 0)
        throw ConfigError("input channel count must be non-negative");
    if (variable_count() < 1)
        throw ConfigError("term spec yields no regression variables");
}

int LagSpec::variable_count() const {
    const int input_lags =
        allow_lag_zero_inputs ? max_input_lag + 1 : max_input_lag;
    return max_output_lag + input_channels * input_lags;
}

bool TermVariable::operator<(const TermVariable& o) const {
    if (is_output != o.is_output) return is_output;  // outputs first
    if (is_output) return lag < o.lag;
    if (channel != o.channel) return channel < o.channel;
    return lag < o.lag;
}

std::string TermVariable::render() const {
    std::string s = is_output ? "y" : "u" + std::to_string(channel + 1);
    s += "(k";
    if (lag > 0) s += "-" + std::to_string(lag);
    s += ")";
    return s;
}

int CandidateTerm::degree() const {
    int d = 0;
    for (const auto& f : factors) d += f.power;
    return d;
}

int CandidateTerm::max_lag() const {
    int m = 0;
    for (const auto& f : factors) m = std::max(m, f.var.lag);
    return m;
}

bool CandidateTerm::uses_output() const {
    return std::any_of(factors.begin(), factors.end(),
                       [](const Factor& f) { return f.var.is_output; });
}

void CandidateTerm::canonicalize() {
    std::sort(factors.begin(), factors.end(),
              [](const Factor& a, const Factor& b) { return a.var < b.var; });
    std::vector<Factor> merged;
    for (const auto& f : factors) {
        if (!merged.empty() && merged.back().var == f.var)
            merged.back().power += f.power;
        else
            merged.push_back(f);
    }
    factors = std::move(merged);
}

std::string CandidateTerm::render() const {
    std::string s;
    for (std::size_t i = 0; i < factors.size(); ++i) {
        if (i) s += "*";
        s += factors[i].var.render();
        if (factors[i].power > 1) s += "^" + std::to_string(factors[i].power);
    }
    return s;
}

namespace {

class TermParser {
public:
    explicit TermParser(const std::string& text) : text_(text) {}

    CandidateTerm parse() {
        CandidateTerm term;
        term.factors.push_back(factor());
        while (peek() == '*') {
            ++pos_;
            term.factors.push_back(factor());
        }
        skip_ws();
        if (pos_ != text_.size()) fail("trailing characters");
        term.canonicalize();
        return term;
    }

private:
    CandidateTerm::Factor factor() {
        CandidateTerm::Factor f;
        f.var = variable();
        if (peek() == '^') {
            ++pos_;
            f.power = integer();
            if (f.power < 1) fail("power must be positive");
        }
        return f;
    }

    TermVariable variable() {
        skip_ws();
        TermVariable v;
        if (peek() == 'y') {
            ++pos_;
            v.is_output = true;
        } else if (peek() == 'u') {
            ++pos_;
            v.channel = integer() - 1;
            if (v.channel < 0) fail("channel index must be positive");
        } else {
            fail("expected variable 'y' or 'u<i>'");
        }
        expect('(');
        expect('k');
        if (peek() == '-') {
            ++pos_;
            v.lag = integer();
            if (v.lag < 1) fail("lag must be positive");
        }
        expect(')');
        if (v.is_output && v.lag < 1)
            fail("outputs must be lagged; y(k) is the prediction target");
        return v;
    }

    int integer() {
        skip_ws();
        std::size_t start = pos_;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
        if (pos_ == start) fail("expected integer");
        return std::stoi(text_.substr(start, pos_ - start));
    }

    char peek() {
        skip_ws();
        return pos_ < text_.size() ? text_[pos_] : '\0';
    }

    void expect(char c) {
        if (peek() != c) fail(std::string("expected '") + c + "'");
        ++pos_;
    }

    void skip_ws() {
        while (pos_ < text_.size() &&
               std::isspace(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
    }

    [[noreturn]] void fail(const std::string& what) {
        throw DataError("invalid term '" + text_ + "' at position " +
                        std::to_string(pos_) + ": " + what);
    }

    const std::string& text_;
    std::size_t pos_ = 0;
};

void enumerate_recursive(const std::vector<TermVariable>& vars,
                         std::size_t first_var, int remaining_degree,
                         CandidateTerm& prefix,
                         std::vector<CandidateTerm>& out) {
    if (remaining_degree == 0) {
        CandidateTerm t = prefix;
        t.canonicalize();
        out.push_back(std::move(t));
        return;
    }
    for (std::size_t i = first_var; i < vars.size(); ++i) {
        prefix.factors.push_back({vars[i], 1});
        enumerate_recursive(vars, i, remaining_degree - 1, prefix, out);
        prefix.factors.pop_back();
    }
}

} // namespace

CandidateTerm parse_term(const std::string& text) {
    return TermParser(text).parse();
}

std::vector<CandidateTerm> enumerate_terms(const LagSpec& spec) {
    spec.validate();
    std::vector<TermVariable> vars;
    for (int lag = 1; lag <= spec.max_output_lag; ++lag)
        vars.push_back({true, 0, lag});
    const int lag0 = spec.allow_lag_zero_inputs ? 0 : 1;
    for (int ch = 0; ch < spec.input_channels; ++ch)
        for (int lag = lag0; lag <= spec.max_input_lag; ++lag)
            vars.push_back({false, ch, lag});

    std::vector<CandidateTerm> terms;
    CandidateTerm prefix;
    for (int degree = 1; degree <= spec.nonlinearity_degree; ++degree)
        enumerate_recursive(vars, 0, degree, prefix, terms);
    return terms;
}

TermLibrary build_design_matrix(const TimeSeriesDataset& ds,
                                const std::vector<CandidateTerm>& terms,
                                bool require_trainable) {
    if (terms.empty()) throw ConfigError("term list is empty");
    const auto n = ds.sample_count();
    const auto p = ds.channel_count();

    int max_lag = 0;
    bool needs_output = false;
    for (const auto& t : terms) {
        max_lag = std::max(max_lag, t.max_lag());
        needs_output = needs_output || t.uses_output();
        for (const auto& f : t.factors)
            if (!f.var.is_output && f.var.channel >= p)
                throw DataError("term '" + t.render() + "' references channel u" +
                                std::to_string(f.var.channel + 1) +
                                " but dataset has " + std::to_string(p));
    }
    if (needs_output && ds.labels.empty())
        throw DataError("terms use lagged outputs but dataset has no labels");

    const Eigen::Index n_eff = n - max_lag;
    if (n_eff < 1)
        throw DataError("not enough samples for the requested lags");
    if (require_trainable && n_eff < 2 * std::max(1, ds.class_count()))
        throw DataError("insufficient data: " + std::to_string(n_eff) +
                        " usable rows for " + std::to_string(ds.class_count()) +
                        " classes");

    TermLibrary lib;
    lib.terms = terms;
    lib.effective_start = max_lag + 1;
    lib.design_matrix.resize(n_eff, static_cast<Eigen::Index>(terms.size()));
    for (std::size_t j = 0; j < terms.size(); ++j) {
        for (Eigen::Index r = 0; r < n_eff; ++r) {
            const Eigen::Index k = r + max_lag;  // 0-based sample index
            double value = 1.0;
            for (const auto& f : terms[j].factors) {
                const double signal =
                    f.var.is_output
                        ? static_cast<double>(
                              ds.labels[static_cast<std::size_t>(k - f.var.lag)])
                        : ds.channels(k - f.var.lag, f.var.channel);
                for (int e = 0; e < f.power; ++e) value *= signal;
            }
            lib.design_matrix(r, static_cast<Eigen::Index>(j)) = value;
        }
    }
    if (!ds.labels.empty())
        lib.labels.assign(ds.labels.begin() + max_lag, ds.labels.end());
    return lib;
}

} // namespace narx
