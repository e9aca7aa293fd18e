#include <doctest.h>

#include <cmath>
#include <map>

#include "synthflight/learners.hpp"
#include "synthflight/numkit.hpp"

using namespace synthflight;

namespace {

Dataset blobs(size_t nPerClass, uint64_t seed, double separation = 3.0) {
    Dataset data;
    data.cols = 2;
    RngStream rng(seed, 0);
    for (size_t i = 0; i < 2 * nPerClass; ++i) {
        const int label = i < nPerClass ? 0 : 1;
        const double cx = label == 0 ? 0.0 : separation;
        data.features.push_back(cx + rng.normal() * 0.5);
        data.features.push_back(cx + rng.normal() * 0.5);
        data.labels.push_back(label);
        data.rows++;
    }
    return data;
}

Dataset linearData(size_t n, uint64_t seed, double noise = 0.0) {
    Dataset data;
    data.cols = 1;
    RngStream rng(seed, 0);
    for (size_t i = 0; i < n; ++i) {
        const double x = rng.uniform(-5.0, 5.0);
        data.features.push_back(x);
        data.target.push_back(2.0 * x + 1.0 + noise * rng.normal());
        data.rows++;
    }
    return data;
}

}  // namespace

TEST_CASE("stratified folds: exact divisibility gives 10+10 per fold") {
    std::vector<int> labels(100);
    for (size_t i = 0; i < 100; ++i) labels[i] = i < 50 ? 0 : 1;
    const FoldPlan plan = stratifiedKfold(labels, 5, 3);
    REQUIRE(plan.folds.size() == 5);
    for (const auto& fold : plan.folds) {
        size_t zeros = 0, ones = 0;
        for (size_t idx : fold) (labels[idx] == 0 ? zeros : ones)++;
        CHECK(zeros == 10);
        CHECK(ones == 10);
    }
}

TEST_CASE("stratified folds: uneven classes stay within one sample of proportional") {
    std::vector<int> labels(103);
    for (size_t i = 0; i < 103; ++i) labels[i] = i < 60 ? 0 : 1;
    const FoldPlan plan = stratifiedKfold(labels, 5, 9);
    size_t total = 0;
    for (const auto& fold : plan.folds) {
        size_t zeros = 0, ones = 0;
        for (size_t idx : fold) (labels[idx] == 0 ? zeros : ones)++;
        // counting oracle: 60/5 = 12, 43/5 = 8.6
        CHECK(std::abs(static_cast<double>(zeros) - 12.0) <= 1.0);
        CHECK(std::abs(static_cast<double>(ones) - 8.6) <= 1.0);
        total += fold.size();
    }
    CHECK(total == 103);

    // partition: every index exactly once
    std::vector<int> seen(103, 0);
    for (const auto& fold : plan.folds) {
        for (size_t idx : fold) seen[idx]++;
    }
    for (int count : seen) CHECK(count == 1);
}

TEST_CASE("stratified folds: deterministic per seed, error on tiny classes") {
    std::vector<int> labels = {0, 0, 0, 0, 0, 1, 1, 1, 1, 1};
    const FoldPlan a = stratifiedKfold(labels, 5, 42);
    const FoldPlan b = stratifiedKfold(labels, 5, 42);
    CHECK(a.folds == b.folds);
    std::vector<int> tiny = {0, 0, 0, 1};
    CHECK_THROWS_AS(stratifiedKfold(tiny, 3, 1), ConfigError);
}

TEST_CASE("every classifier separates well-separated blobs") {
    const Dataset data = blobs(80, 5);
    for (ClassifierKind kind : allClassifiers()) {
        ClassifierSpec spec;
        spec.kind = kind;
        spec.seed = 7;
        auto model = makeClassifier(spec);
        model->fit(data);
        const auto predictions = model->predictAll(data);
        const auto metrics = classificationMetrics(predictions, data.labels);
        INFO(classifierName(kind));
        CHECK(metrics.accuracy >= 0.95);
    }
}

TEST_CASE("pure-noise labels give chance-level cross-validated accuracy") {
    Dataset data;
    data.cols = 3;
    RngStream rng(17, 0);
    for (size_t i = 0; i < 1000; ++i) {
        for (size_t j = 0; j < 3; ++j) data.features.push_back(rng.normal());
        data.labels.push_back(static_cast<int>(i % 2));
        data.rows++;
    }
    const FoldPlan plan = stratifiedKfold(data.labels, 5, 3);
    for (ClassifierKind kind :
         {ClassifierKind::LogisticRegression, ClassifierKind::GaussianNb, ClassifierKind::DecisionTree}) {
        double accuracySum = 0.0;
        for (const auto& fold : plan.folds) {
            std::vector<uint8_t> inFold(data.rows, 0);
            for (size_t idx : fold) inFold[idx] = 1;
            Dataset train, test;
            train.cols = test.cols = data.cols;
            for (size_t r = 0; r < data.rows; ++r) {
                Dataset& dst = inFold[r] ? test : train;
                dst.features.insert(dst.features.end(), data.row(r), data.row(r) + data.cols);
                dst.labels.push_back(data.labels[r]);
                dst.rows++;
            }
            ClassifierSpec spec;
            spec.kind = kind;
            spec.seed = 11;
            auto model = makeClassifier(spec);
            model->fit(train);
            accuracySum += classificationMetrics(model->predictAll(test), test.labels).accuracy;
        }
        INFO(classifierName(kind));
        CHECK(std::abs(accuracySum / 5.0 - 0.5) < 0.1);
    }
}

TEST_CASE("a depth-2 tree memorizes the 4-point XOR") {
    Dataset data;
    data.cols = 2;
    data.rows = 4;
    data.features = {0, 0, 0, 1, 1, 0, 1, 1};
    data.labels = {0, 1, 1, 0};
    ClassifierSpec spec;
    spec.kind = ClassifierKind::DecisionTree;
    auto model = makeClassifier(spec);
    model->fit(data);
    CHECK(model->predictAll(data) == data.labels);
}

TEST_CASE("ols recovers exact linear data to 1e-8") {
    const Dataset data = linearData(50, 2);
    RegressorSpec spec;
    spec.kind = RegressorKind::Ols;
    auto model = makeRegressor(spec);
    model->fit(data);
    const double x[] = {3.0};
    CHECK(std::abs(model->predict(x) - 7.0) < 1e-8);
    const double x2[] = {-4.0};
    CHECK(std::abs(model->predict(x2) - (-7.0)) < 1e-8);
}

TEST_CASE("ridge with vanishing lambda matches ols") {
    const Dataset data = linearData(80, 3, 0.5);
    RegressorSpec ols;
    ols.kind = RegressorKind::Ols;
    auto olsModel = makeRegressor(ols);
    olsModel->fit(data);
    RegressorSpec ridge;
    ridge.kind = RegressorKind::Ridge;
    ridge.params.ridgeLambda = 1e-10;
    auto ridgeModel = makeRegressor(ridge);
    ridgeModel->fit(data);
    for (double x = -5.0; x <= 5.0; x += 0.7) {
        const double features[] = {x};
        CHECK(std::abs(olsModel->predict(features) - ridgeModel->predict(features)) < 1e-6);
    }
}

TEST_CASE("lasso with huge lambda shrinks every coefficient to zero") {
    const Dataset data = linearData(80, 4, 0.5);
    RegressorSpec spec;
    spec.kind = RegressorKind::Lasso;
    spec.params.lassoLambda = 1e6;
    auto model = makeRegressor(spec);
    model->fit(data);
    const double mean = sampleMean(data.target);
    for (double x = -5.0; x <= 5.0; x += 1.1) {
        const double features[] = {x};
        CHECK(model->predict(features) == doctest::Approx(mean).epsilon(1e-9));
    }
}

TEST_CASE("ols on singular normal equations points at ridge") {
    Dataset data;
    data.cols = 2;
    RngStream rng(6, 0);
    for (size_t i = 0; i < 30; ++i) {
        const double x = rng.normal();
        data.features.push_back(x);
        data.features.push_back(x);  // perfectly collinear
        data.target.push_back(x);
        data.rows++;
    }
    RegressorSpec spec;
    spec.kind = RegressorKind::Ols;
    auto model = makeRegressor(spec);
    CHECK_THROWS_WITH_AS(model->fit(data), doctest::Contains("ridge"), NumericError);
}

TEST_CASE("every regressor learns a noisy linear trend reasonably") {
    const Dataset train = linearData(300, 7, 1.0);
    const Dataset test = linearData(100, 8, 1.0);
    for (RegressorKind kind : allRegressors()) {
        RegressorSpec spec;
        spec.kind = kind;
        spec.seed = 5;
        if (kind == RegressorKind::SgdReg) spec.params.sgdEpochs = 40;
        auto model = makeRegressor(spec);
        model->fit(train);
        const auto metrics = regressionMetrics(model->predictAll(test), test.target);
        INFO(regressorName(kind));
        CHECK(metrics.r2 > 0.8);
    }
}

TEST_CASE("a one-tree forest without bootstrap equals the plain tree") {
    const Dataset data = blobs(60, 9, 1.5);
    ClassifierSpec treeSpec;
    treeSpec.kind = ClassifierKind::DecisionTree;
    auto tree = makeClassifier(treeSpec);
    tree->fit(data);

    ClassifierSpec forestSpec;
    forestSpec.kind = ClassifierKind::RandomForest;
    forestSpec.params.forestTrees = 1;
    forestSpec.params.forestBootstrap = false;
    auto forest = makeClassifier(forestSpec);
    forest->fit(data);

    CHECK(tree->predictAll(data) == forest->predictAll(data));
}

TEST_CASE("learners are deterministic given spec, data, and seed") {
    const Dataset data = blobs(100, 12);
    for (ClassifierKind kind : {ClassifierKind::RandomForest, ClassifierKind::SgdLinear}) {
        ClassifierSpec spec;
        spec.kind = kind;
        spec.seed = 77;
        auto a = makeClassifier(spec);
        auto b = makeClassifier(spec);
        a->fit(data);
        b->fit(data);
        CHECK(a->predictAll(data) == b->predictAll(data));
    }
}

TEST_CASE("classification metrics on hand-counted confusions") {
    CHECK(classificationMetrics({1, 0, 1}, {1, 0, 1}).accuracy == 1.0);
    CHECK(classificationMetrics({1, 0, 1}, {1, 0, 1}).f1 == 1.0);
    // all-negative predictions on mixed truth
    CHECK(classificationMetrics({0, 0, 0, 0}, {1, 0, 1, 0}).f1 == 0.0);
    // TP=4 FP=1 FN=1 -> precision 0.8, recall 0.8, F1 0.8
    const std::vector<int> predictions = {1, 1, 1, 1, 1, 0, 0, 0};
    const std::vector<int> truth = {1, 1, 1, 1, 0, 1, 0, 0};
    CHECK(classificationMetrics(predictions, truth).f1 == doctest::Approx(0.8));
    CHECK_THROWS_AS(classificationMetrics({}, {}), ConfigError);
}

TEST_CASE("regression metrics definitions and degenerate cases") {
    const std::vector<double> truth = {1.0, 2.0, 3.0};
    const auto perfect = regressionMetrics(truth, truth);
    CHECK(perfect.mae == 0.0);
    CHECK(perfect.rmse == 0.0);
    CHECK(perfect.r2 == 1.0);

    const auto baseline = regressionMetrics({2.0, 2.0, 2.0}, truth);
    CHECK(baseline.r2 == doctest::Approx(0.0));

    // errors of +3 and -3: MAE = 3, RMSE = sqrt((9+9)/2) = 3
    const auto hand = regressionMetrics({4.0, -4.0}, {1.0, -1.0});
    CHECK(hand.mae == doctest::Approx(3.0));
    CHECK(hand.rmse == doctest::Approx(3.0));

    // zero-variance truth leaves R^2 undefined
    CHECK_THROWS_AS(regressionMetrics({1.0, 2.0}, {5.0, 5.0}), NumericError);
}

TEST_CASE("rmse dominates mae on random vectors") {
    RngStream rng(1, 0);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> predictions, truth;
        for (int i = 0; i < 20; ++i) {
            predictions.push_back(rng.normal() * 3.0);
            truth.push_back(rng.normal());
        }
        const auto metrics = regressionMetrics(predictions, truth);
        CHECK(metrics.rmse >= metrics.mae);
    }
}

TEST_CASE("gradient boosting trains with non-increasing squared loss") {
    // the trainer itself asserts monotonicity per round
    const Dataset data = linearData(200, 14, 2.0);
    RegressorSpec spec;
    spec.kind = RegressorKind::BoostingReg;
    auto model = makeRegressor(spec);
    CHECK_NOTHROW(model->fit(data));
}
