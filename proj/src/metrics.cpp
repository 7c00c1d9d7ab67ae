#include "narx/metrics.hpp"
#include "narx/errors.hpp"

#include <cmath>
#include <set>

namespace narx {

Eigen::MatrixXd ConfusionMatrix::row_normalized() const {
    Eigen::MatrixXd out = counts.cast<double>();
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
        const double row_sum = out.row(i).sum();
        if (row_sum > 0.0) out.row(i) *= 100.0 / row_sum;
    }
    return out;
}

ConfusionMatrix confusion(const std::vector<int>& y_true,
                          const std::vector<int>& y_pred, int class_count,
                          std::vector<std::string> class_names) {
    if (y_true.size() != y_pred.size())
        throw DataError("true and predicted label lengths differ");
    if (class_count < 1) throw ConfigError("class count must be positive");

    ConfusionMatrix cm;
    cm.counts = Eigen::MatrixXi::Zero(class_count, class_count);
    if (class_names.empty())
        for (int v = 1; v <= class_count; ++v)
            class_names.push_back(std::to_string(v));
    if (static_cast<int>(class_names.size()) != class_count)
        throw DataError("class name count does not match class count");
    cm.class_names = std::move(class_names);

    for (std::size_t i = 0; i < y_true.size(); ++i) {
        if (y_true[i] < 1 || y_true[i] > class_count ||
            y_pred[i] < 1 || y_pred[i] > class_count)
            throw DataError("label outside 1.." + std::to_string(class_count) +
                            " at position " + std::to_string(i + 1));
        cm.counts(y_true[i] - 1, y_pred[i] - 1) += 1;
    }
    return cm;
}

MetricReport per_class_metrics(const ConfusionMatrix& cm) {
    const long total = cm.total();
    if (total <= 0) throw DataError("confusion matrix is empty");
    const int c = cm.class_count();

    MetricReport report;
    long diagonal = 0;
    for (int v = 0; v < c; ++v) {
        const long tp = cm.counts(v, v);
        const long fn = cm.counts.row(v).sum() - tp;
        const long fp = cm.counts.col(v).sum() - tp;
        const long tn = total - tp - fn - fp;
        diagonal += tp;

        ClassMetrics m;
        m.support = tp + fn;
        if (tp + fn > 0) {
            m.sensitivity = static_cast<double>(tp) / static_cast<double>(tp + fn);
            m.sensitivity_defined = true;
        }
        if (tn + fp > 0) {
            m.specificity = static_cast<double>(tn) / static_cast<double>(tn + fp);
            m.specificity_defined = true;
        }
        if (tp + fp > 0) {
            m.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
            m.precision_defined = true;
        }
        if (m.precision_defined && m.sensitivity_defined &&
            m.precision + m.sensitivity > 0.0) {
            m.f1 = 2.0 * m.precision * m.sensitivity /
                   (m.precision + m.sensitivity);
            m.f1_defined = true;
        }
        report.per_class.push_back(m);
    }

    report.average_accuracy =
        static_cast<double>(diagonal) / static_cast<double>(total);
    double wsum = 0.0;
    for (int v = 0; v < c; ++v) {
        const auto& m = report.per_class[static_cast<std::size_t>(v)];
        const double weight = static_cast<double>(m.support) /
                              static_cast<double>(total);
        report.macro_sensitivity += m.sensitivity;
        report.macro_specificity += m.specificity;
        report.macro_precision += m.precision;
        report.macro_f1 += m.f1;
        report.weighted_sensitivity += weight * m.sensitivity;
        report.weighted_specificity += weight * m.specificity;
        report.weighted_precision += weight * m.precision;
        report.weighted_f1 += weight * m.f1;
        wsum += weight;
    }
    report.macro_sensitivity /= c;
    report.macro_specificity /= c;
    report.macro_precision /= c;
    report.macro_f1 /= c;
    (void)wsum;  // weights sum to 1 by construction
    return report;
}

namespace {

void finalize(CvStat& s) {
    if (s.per_fold.empty()) return;
    for (double v : s.per_fold) s.mean += v;
    s.mean /= static_cast<double>(s.per_fold.size());
    if (s.per_fold.size() > 1) {
        double ss = 0.0;
        for (double v : s.per_fold) ss += (v - s.mean) * (v - s.mean);
        s.stddev = std::sqrt(ss / static_cast<double>(s.per_fold.size() - 1));
    }
}

} // namespace

CvMetrics cross_validate(const FitPredictFn& fit_predict,
                         const TimeSeriesDataset& ds, const FoldPlan& folds) {
    ds.validate();
    if (ds.labels.empty()) throw DataError("cross-validation requires labels");
    if (static_cast<Eigen::Index>(folds.assignments.size()) != ds.sample_count())
        throw DataError("fold plan does not cover the dataset");
    const int c = ds.class_count();

    CvMetrics out;
    for (int f = 0; f < folds.k; ++f) {
        const auto train = folds.complement_indices(f);
        const auto test = folds.fold_indices(f);

        std::set<int> seen;
        for (auto r : train) seen.insert(ds.labels[static_cast<std::size_t>(r)]);
        if (static_cast<int>(seen.size()) < c) {
            out.skipped_folds.push_back(f);
            out.warnings.push_back("fold " + std::to_string(f) +
                                   " skipped: training part lacks a class");
            continue;
        }

        const std::vector<int> predicted = fit_predict(ds, train, test);
        if (predicted.size() != test.size())
            throw DataError("fit/predict returned wrong number of labels");
        std::vector<int> truth;
        truth.reserve(test.size());
        for (auto r : test) truth.push_back(ds.labels[static_cast<std::size_t>(r)]);

        const MetricReport rep =
            per_class_metrics(confusion(truth, predicted, c, ds.class_names));
        out.average_accuracy.per_fold.push_back(rep.average_accuracy);
        out.macro_sensitivity.per_fold.push_back(rep.macro_sensitivity);
        out.macro_specificity.per_fold.push_back(rep.macro_specificity);
        out.macro_precision.per_fold.push_back(rep.macro_precision);
        out.macro_f1.per_fold.push_back(rep.macro_f1);
        out.weighted_precision.per_fold.push_back(rep.weighted_precision);
        out.weighted_sensitivity.per_fold.push_back(rep.weighted_sensitivity);
        out.weighted_f1.per_fold.push_back(rep.weighted_f1);
    }
    finalize(out.average_accuracy);
    finalize(out.macro_sensitivity);
    finalize(out.macro_specificity);
    finalize(out.macro_precision);
    finalize(out.macro_f1);
    finalize(out.weighted_precision);
    finalize(out.weighted_sensitivity);
    finalize(out.weighted_f1);
    return out;
}

} // namespace narx
