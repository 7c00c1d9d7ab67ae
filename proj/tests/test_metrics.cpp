#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "narx/errors.hpp"
#include "narx/metrics.hpp"

#include <string>
#include <vector>

using namespace narx;

namespace {

TimeSeriesDataset two_class_dataset(const std::vector<int>& labels) {
    TimeSeriesDataset ds;
    ds.channel_names = {"c1"};
    ds.channels.resize(static_cast<Eigen::Index>(labels.size()), 1);
    for (std::size_t i = 0; i < labels.size(); ++i)
        ds.channels(static_cast<Eigen::Index>(i), 0) =
            static_cast<double>(i);
    ds.labels = labels;
    ds.class_names = {"a", "b"};
    return ds;
}

} // namespace

TEST_CASE("confusion matrix counts and row percentages") {
    const std::vector<int> y_true = {1, 1, 2, 2, 3};
    const std::vector<int> y_pred = {1, 2, 2, 2, 3};
    const ConfusionMatrix cm = confusion(y_true, y_pred, 3);

    CHECK(cm.class_count() == 3);
    CHECK(cm.total() == 5);
    CHECK(cm.counts(0, 0) == 1);
    CHECK(cm.counts(0, 1) == 1);
    CHECK(cm.counts(0, 2) == 0);
    CHECK(cm.counts(1, 0) == 0);
    CHECK(cm.counts(1, 1) == 2);
    CHECK(cm.counts(1, 2) == 0);
    CHECK(cm.counts(2, 2) == 1);
    CHECK(cm.class_names == std::vector<std::string>{"1", "2", "3"});

    const Eigen::MatrixXd pct = cm.row_normalized();
    for (Eigen::Index r = 0; r < pct.rows(); ++r)
        CHECK(pct.row(r).sum() == doctest::Approx(100.0).epsilon(1e-12));
    CHECK(pct(0, 0) == doctest::Approx(50.0).epsilon(1e-12));
    CHECK(pct(1, 1) == doctest::Approx(100.0).epsilon(1e-12));

    // A class absent from both vectors keeps an all-zero (unnormalized) row.
    const ConfusionMatrix cm4 = confusion(y_true, y_pred, 4);
    CHECK(cm4.row_normalized().row(3).sum() == 0.0);
}

TEST_CASE("per-class and aggregate metrics match hand-computed values") {
    const ConfusionMatrix cm =
        confusion({1, 1, 2, 2, 3}, {1, 2, 2, 2, 3}, 3);
    const MetricReport rep = per_class_metrics(cm);

    REQUIRE(rep.per_class.size() == 3);
    const auto& c1 = rep.per_class[0];
    const auto& c2 = rep.per_class[1];
    const auto& c3 = rep.per_class[2];

    CHECK(c1.support == 2);
    CHECK(c1.sensitivity == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(c1.specificity == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(c1.precision == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(c1.f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-15));

    CHECK(c2.support == 2);
    CHECK(c2.sensitivity == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(c2.specificity == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(c2.precision == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(c2.f1 == doctest::Approx(0.8).epsilon(1e-15));

    CHECK(c3.support == 1);
    CHECK(c3.f1 == doctest::Approx(1.0).epsilon(1e-15));

    CHECK(rep.average_accuracy == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(rep.macro_sensitivity ==
          doctest::Approx(0.833333333333333).epsilon(1e-12));
    CHECK(rep.macro_specificity ==
          doctest::Approx(0.888888888888889).epsilon(1e-12));
    CHECK(rep.macro_precision ==
          doctest::Approx(0.888888888888889).epsilon(1e-12));
    CHECK(rep.macro_f1 == doctest::Approx(0.822222222222222).epsilon(1e-12));
    CHECK(rep.weighted_sensitivity == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(rep.weighted_specificity ==
          doctest::Approx(0.866666666666667).epsilon(1e-12));
    CHECK(rep.weighted_precision ==
          doctest::Approx(0.866666666666667).epsilon(1e-12));
    CHECK(rep.weighted_f1 == doctest::Approx(0.786666666666667).epsilon(1e-12));
}

TEST_CASE("F1 reproduces published-style precision/sensitivity pairs") {
    // Counts chosen so precision and sensitivity are exact decimals.
    ConfusionMatrix a;
    a.counts.resize(2, 2);
    a.counts << 68939268, 23870732, 5340732, 1000000;
    a.class_names = {"pos", "rest"};
    const MetricReport ra = per_class_metrics(a);
    CHECK(ra.per_class[0].precision == doctest::Approx(0.9281).epsilon(1e-12));
    CHECK(ra.per_class[0].sensitivity ==
          doctest::Approx(0.7428).epsilon(1e-12));
    CHECK(ra.per_class[0].f1 == doctest::Approx(0.825175).epsilon(1e-6));

    ConfusionMatrix b;
    b.counts.resize(2, 2);
    b.counts << 23022307, 1687693, 70147693, 1000000;
    b.class_names = {"pos", "rest"};
    const MetricReport rb = per_class_metrics(b);
    CHECK(rb.per_class[0].precision == doctest::Approx(0.2471).epsilon(1e-12));
    CHECK(rb.per_class[0].sensitivity ==
          doctest::Approx(0.9317).epsilon(1e-12));
    CHECK(rb.per_class[0].f1 == doctest::Approx(0.390606).epsilon(1e-6));
}

TEST_CASE("zero denominators leave metrics unset instead of NaN") {
    const ConfusionMatrix cm = confusion({2, 2}, {1, 1}, 2);
    const MetricReport rep = per_class_metrics(cm);

    const auto& c1 = rep.per_class[0];
    CHECK(!c1.sensitivity_defined);  // no true class-1 samples
    CHECK(c1.sensitivity == 0.0);
    CHECK(c1.specificity_defined);
    CHECK(c1.specificity == 0.0);
    CHECK(c1.precision_defined);
    CHECK(c1.precision == 0.0);
    CHECK(!c1.f1_defined);
    CHECK(c1.support == 0);

    const auto& c2 = rep.per_class[1];
    CHECK(c2.sensitivity_defined);
    CHECK(c2.sensitivity == 0.0);
    CHECK(!c2.specificity_defined);  // everything is class 2
    CHECK(!c2.precision_defined);    // class 2 never predicted
    CHECK(!c2.f1_defined);
    CHECK(rep.average_accuracy == 0.0);
}

TEST_CASE("confusion input validation") {
    CHECK_THROWS_AS(confusion({1, 2}, {1}, 2), DataError);
    CHECK_THROWS_AS(confusion({1}, {1}, 0), ConfigError);
    CHECK_THROWS_AS(confusion({1, 3}, {1, 1}, 2), DataError);
    CHECK_THROWS_AS(confusion({1, 0}, {1, 1}, 2), DataError);
    CHECK_THROWS_AS(confusion({1}, {1}, 2, {"only-one"}), DataError);

    try {
        confusion({1, 5}, {1, 1}, 2);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("position 2") != std::string::npos);
    }

    ConfusionMatrix empty;
    empty.counts = Eigen::MatrixXi::Zero(2, 2);
    empty.class_names = {"a", "b"};
    CHECK_THROWS_AS(per_class_metrics(empty), DataError);
}

TEST_CASE("cross-validation of a perfect predictor is exact") {
    const TimeSeriesDataset ds =
        two_class_dataset({1, 2, 1, 2, 1, 2, 1, 2, 1, 2, 1, 2});
    const FoldPlan folds = make_folds(ds, 3, 19);

    const FitPredictFn truth = [](const TimeSeriesDataset& d,
                                  const std::vector<Eigen::Index>&,
                                  const std::vector<Eigen::Index>& test) {
        std::vector<int> out;
        for (auto r : test) out.push_back(d.labels[static_cast<std::size_t>(r)]);
        return out;
    };

    const CvMetrics cv = cross_validate(truth, ds, folds);
    CHECK(cv.skipped_folds.empty());
    CHECK(cv.warnings.empty());
    REQUIRE(cv.average_accuracy.per_fold.size() == 3);
    CHECK(cv.average_accuracy.mean == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(cv.average_accuracy.stddev == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(cv.macro_f1.mean == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(cv.weighted_precision.mean == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("folds whose training part lacks a class are skipped") {
    // Exactly one class-2 sample: the training complement of the fold
    // holding it lacks class 2, so exactly one fold is skipped.
    const TimeSeriesDataset ds =
        two_class_dataset({1, 1, 1, 1, 1, 1, 1, 1, 2});
    const FoldPlan folds = make_folds(ds, 3, 5);

    const FitPredictFn constant = [](const TimeSeriesDataset&,
                                     const std::vector<Eigen::Index>&,
                                     const std::vector<Eigen::Index>& test) {
        return std::vector<int>(test.size(), 1);
    };

    const CvMetrics cv = cross_validate(constant, ds, folds);
    CHECK(cv.skipped_folds.size() == 1);
    REQUIRE(cv.warnings.size() == 1);
    CHECK(cv.warnings[0].find("lacks a class") != std::string::npos);
    CHECK(cv.average_accuracy.per_fold.size() == 2);
}

TEST_CASE("cross-validation input validation") {
    TimeSeriesDataset unlabeled = two_class_dataset({1, 2, 1, 2});
    const FoldPlan folds = make_folds(unlabeled, 2, 3);
    unlabeled.labels.clear();
    const FitPredictFn constant = [](const TimeSeriesDataset&,
                                     const std::vector<Eigen::Index>&,
                                     const std::vector<Eigen::Index>& test) {
        return std::vector<int>(test.size(), 1);
    };
    CHECK_THROWS_AS(cross_validate(constant, unlabeled, folds), DataError);

    const TimeSeriesDataset ds = two_class_dataset({1, 2, 1, 2, 1, 2});
    FoldPlan short_plan = make_folds(ds, 2, 3);
    short_plan.assignments.pop_back();
    CHECK_THROWS_AS(cross_validate(constant, ds, short_plan), DataError);

    const FitPredictFn miscounted = [](const TimeSeriesDataset&,
                                       const std::vector<Eigen::Index>&,
                                       const std::vector<Eigen::Index>&) {
        return std::vector<int>{1};
    };
    const FoldPlan good = make_folds(ds, 2, 3);
    CHECK_THROWS_AS(cross_validate(miscounted, ds, good), DataError);
}
