#pragma once

#include <memory>
#include <string>
#include <vector>

#include "synthflight/errors.hpp"

namespace synthflight {

struct Dataset {
    size_t rows = 0;
    size_t cols = 0;
    std::vector<double> features;  // row-major
    std::vector<int> labels;       // classification target
    std::vector<double> target;    // regression target
    std::vector<std::string> featureNames;

    const double* row(size_t r) const { return features.data() + r * cols; }
    void validate(bool classification) const;
};

enum class ClassifierKind {
    RandomForest,
    GradientBoosting,
    Knn,
    DecisionTree,
    GaussianNb,
    LogisticRegression,
    SgdLinear,
};

enum class RegressorKind {
    Ols,
    Ridge,
    Lasso,
    KnnReg,
    TreeReg,
    ForestReg,
    BoostingReg,
    SgdReg,
    PcaOls,
};

const char* classifierName(ClassifierKind kind);
ClassifierKind classifierFromName(const std::string& name);
const std::vector<ClassifierKind>& allClassifiers();  // the seven-model fidelity roster

const char* regressorName(RegressorKind kind);
RegressorKind regressorFromName(const std::string& name);
const std::vector<RegressorKind>& allRegressors();  // the nine-model utility roster

struct LearnerHyperparams {
    int forestTrees = 100;
    int forestMaxDepth = 12;
    bool forestBootstrap = true;  // disabled reduces a 1-tree forest to the plain tree
    int treeMaxDepth = 12;
    int boostingRounds = 100;
    int boostingDepth = 3;
    double boostingLearningRate = 0.1;
    int knnK = 5;
    double logisticLearningRate = 0.1;
    int logisticIterations = 500;
    int sgdEpochs = 5;
    double sgdLearningRate = 1e-3;
    double sgdL2 = 1e-4;
    double ridgeLambda = 1.0;
    double lassoLambda = 0.1;
    double lassoTolerance = 1e-7;
    int lassoMaxSweeps = 10000;
    double pcaOlsVarianceShare = 0.95;
};

struct ClassifierSpec {
    ClassifierKind kind = ClassifierKind::RandomForest;
    LearnerHyperparams params;
    uint64_t seed = 0;
};

struct RegressorSpec {
    RegressorKind kind = RegressorKind::Ols;
    LearnerHyperparams params;
    uint64_t seed = 0;
};

class Classifier {
public:
    virtual ~Classifier() = default;
    virtual void fit(const Dataset& data) = 0;
    virtual int predict(const double* features) const = 0;
    std::vector<int> predictAll(const Dataset& data) const;
};

class Regressor {
public:
    virtual ~Regressor() = default;
    virtual void fit(const Dataset& data) = 0;
    virtual double predict(const double* features) const = 0;
    std::vector<double> predictAll(const Dataset& data) const;
};

std::unique_ptr<Classifier> makeClassifier(const ClassifierSpec& spec);
std::unique_ptr<Regressor> makeRegressor(const RegressorSpec& spec);

struct FoldPlan {
    std::vector<std::vector<size_t>> folds;  // partition of all row indices
};

FoldPlan stratifiedKfold(const std::vector<int>& labels, size_t k, uint64_t seed);

struct ClassificationMetrics {
    double accuracy = 0.0;
    double f1 = 0.0;  // positive class is label 1
};
ClassificationMetrics classificationMetrics(const std::vector<int>& predictions,
                                            const std::vector<int>& truth);

struct RegressionMetrics {
    double mae = 0.0;
    double rmse = 0.0;
    double r2 = 0.0;
};
RegressionMetrics regressionMetrics(const std::vector<double>& predictions,
                                    const std::vector<double>& truth);

}  // namespace synthflight
