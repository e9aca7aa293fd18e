#include "synthflight/learners.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "synthflight/numkit.hpp"

namespace synthflight {

void Dataset::validate(bool classification) const {
    if (features.size() != rows * cols) throw SchemaError("dataset: feature matrix shape mismatch");
    if (classification && labels.size() != rows) throw SchemaError("dataset: label length mismatch");
    if (!classification && target.size() != rows) throw SchemaError("dataset: target length mismatch");
    for (double v : features) {
        if (!std::isfinite(v)) throw NumericError("dataset: non-finite feature value");
    }
    for (double v : target) {
        if (!std::isfinite(v)) throw NumericError("dataset: non-finite target value");
    }
}

std::vector<int> Classifier::predictAll(const Dataset& data) const {
    std::vector<int> out(data.rows);
    for (size_t r = 0; r < data.rows; ++r) out[r] = predict(data.row(r));
    return out;
}

std::vector<double> Regressor::predictAll(const Dataset& data) const {
    std::vector<double> out(data.rows);
    for (size_t r = 0; r < data.rows; ++r) out[r] = predict(data.row(r));
    return out;
}

const char* classifierName(ClassifierKind kind) {
    switch (kind) {
        case ClassifierKind::RandomForest: return "random_forest";
        case ClassifierKind::GradientBoosting: return "gradient_boosting";
        case ClassifierKind::Knn: return "knn";
        case ClassifierKind::DecisionTree: return "decision_tree";
        case ClassifierKind::GaussianNb: return "gaussian_nb";
        case ClassifierKind::LogisticRegression: return "logistic_regression";
        case ClassifierKind::SgdLinear: return "sgd_linear";
    }
    return "unknown";
}

ClassifierKind classifierFromName(const std::string& name) {
    for (ClassifierKind kind : allClassifiers()) {
        if (name == classifierName(kind)) return kind;
    }
    throw ConfigError("unknown classifier: " + name);
}

const std::vector<ClassifierKind>& allClassifiers() {
    static const std::vector<ClassifierKind> kinds = {
        ClassifierKind::RandomForest,   ClassifierKind::GradientBoosting,
        ClassifierKind::Knn,            ClassifierKind::DecisionTree,
        ClassifierKind::GaussianNb,     ClassifierKind::LogisticRegression,
        ClassifierKind::SgdLinear};
    return kinds;
}

const char* regressorName(RegressorKind kind) {
    switch (kind) {
        case RegressorKind::Ols: return "ols";
        case RegressorKind::Ridge: return "ridge";
        case RegressorKind::Lasso: return "lasso";
        case RegressorKind::KnnReg: return "knn_reg";
        case RegressorKind::TreeReg: return "tree_reg";
        case RegressorKind::ForestReg: return "forest_reg";
        case RegressorKind::BoostingReg: return "boosting_reg";
        case RegressorKind::SgdReg: return "sgd_reg";
        case RegressorKind::PcaOls: return "pca_ols";
    }
    return "unknown";
}

RegressorKind regressorFromName(const std::string& name) {
    for (RegressorKind kind : allRegressors()) {
        if (name == regressorName(kind)) return kind;
    }
    throw ConfigError("unknown regressor: " + name);
}

const std::vector<RegressorKind>& allRegressors() {
    static const std::vector<RegressorKind> kinds = {
        RegressorKind::Ols,     RegressorKind::Ridge,      RegressorKind::Lasso,
        RegressorKind::KnnReg,  RegressorKind::TreeReg,    RegressorKind::ForestReg,
        RegressorKind::BoostingReg, RegressorKind::SgdReg, RegressorKind::PcaOls};
    return kinds;
}

// ---------------------------------------------------------------------------
// CART core shared by trees, forests and boosting.
// ---------------------------------------------------------------------------
namespace {

struct TreeNode {
    int feature = -1;       // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;     // leaf: mean (regression) or majority class
};

struct CartConfig {
    int maxDepth = 12;
    size_t minLeaf = 1;
    size_t featureSubsample = 0;  // 0 = all features
    bool classification = false;
    int classCount = 2;
};

class CartTree {
public:
    void fit(const Dataset& data, const std::vector<double>& y, std::vector<size_t> rowIdx,
             const CartConfig& config, RngStream* rng) {
        config_ = config;
        nodes_.clear();
        build(data, y, std::move(rowIdx), 0, rng);
    }

    double predict(const double* features) const {
        int node = 0;
        while (nodes_[node].feature >= 0) {
            node = features[nodes_[node].feature] <= nodes_[node].threshold ? nodes_[node].left
                                                                            : nodes_[node].right;
        }
        return nodes_[node].value;
    }

    // Mean prediction over leaf rows is replaced by a caller-supplied value
    // (gradient boosting re-labels leaves with Newton steps).
    template <typename LeafFn>
    void relabelLeaves(const Dataset& data, LeafFn&& fn) {
        std::vector<std::vector<size_t>> leafRows(nodes_.size());
        for (size_t r = 0; r < data.rows; ++r) {
            int node = 0;
            while (nodes_[node].feature >= 0) {
                node = data.row(r)[nodes_[node].feature] <= nodes_[node].threshold
                           ? nodes_[node].left
                           : nodes_[node].right;
            }
            leafRows[static_cast<size_t>(node)].push_back(r);
        }
        for (size_t i = 0; i < nodes_.size(); ++i) {
            if (nodes_[i].feature < 0 && !leafRows[i].empty()) {
                nodes_[i].value = fn(leafRows[i]);
            }
        }
    }

private:
    int build(const Dataset& data, const std::vector<double>& y, std::vector<size_t> rows, int depth,
              RngStream* rng) {
        const int nodeIdx = static_cast<int>(nodes_.size());
        nodes_.emplace_back();

        double leafValue;
        bool pure = true;
        if (config_.classification) {
            std::vector<size_t> counts(static_cast<size_t>(config_.classCount), 0);
            for (size_t r : rows) counts[static_cast<size_t>(y[r])]++;
            size_t best = 0;
            for (size_t c = 1; c < counts.size(); ++c) {
                if (counts[c] > counts[best]) best = c;
            }
            leafValue = static_cast<double>(best);
            size_t nonZero = 0;
            for (size_t c : counts) nonZero += c > 0 ? 1 : 0;
            pure = nonZero <= 1;
        } else {
            double sum = 0.0;
            for (size_t r : rows) sum += y[r];
            leafValue = sum / static_cast<double>(rows.size());
            for (size_t r : rows) {
                if (y[r] != y[rows[0]]) {
                    pure = false;
                    break;
                }
            }
        }
        nodes_[nodeIdx].value = leafValue;
        if (pure || depth >= config_.maxDepth || rows.size() < 2 * config_.minLeaf ||
            rows.size() < 2) {
            return nodeIdx;
        }

        int bestFeature = -1;
        double bestThreshold = 0.0;
        double bestScore = std::numeric_limits<double>::infinity();
        std::vector<size_t> featurePool(data.cols);
        std::iota(featurePool.begin(), featurePool.end(), 0);
        if (config_.featureSubsample > 0 && config_.featureSubsample < data.cols && rng) {
            rng->shuffle(featurePool);
            featurePool.resize(config_.featureSubsample);
        }

        std::vector<std::pair<double, double>> sorted;  // (feature value, y)
        sorted.reserve(rows.size());
        for (size_t feature : featurePool) {
            sorted.clear();
            for (size_t r : rows) sorted.emplace_back(data.row(r)[feature], y[r]);
            std::sort(sorted.begin(), sorted.end());
            if (sorted.front().first == sorted.back().first) continue;

            if (config_.classification) {
                std::vector<double> leftCounts(static_cast<size_t>(config_.classCount), 0.0);
                std::vector<double> rightCounts(leftCounts);
                for (const auto& [value, label] : sorted) rightCounts[static_cast<size_t>(label)] += 1.0;
                double nl = 0.0, nr = static_cast<double>(sorted.size());
                for (size_t i = 0; i + 1 < sorted.size(); ++i) {
                    const size_t cls = static_cast<size_t>(sorted[i].second);
                    leftCounts[cls] += 1.0;
                    rightCounts[cls] -= 1.0;
                    nl += 1.0;
                    nr -= 1.0;
                    if (sorted[i].first == sorted[i + 1].first) continue;
                    if (nl < config_.minLeaf || nr < config_.minLeaf) continue;
                    double giniL = 1.0, giniR = 1.0;
                    for (size_t c = 0; c < leftCounts.size(); ++c) {
                        const double pl = leftCounts[c] / nl;
                        const double pr = rightCounts[c] / nr;
                        giniL -= pl * pl;
                        giniR -= pr * pr;
                    }
                    const double score = nl * giniL + nr * giniR;
                    if (score < bestScore) {
                        bestScore = score;
                        bestFeature = static_cast<int>(feature);
                        bestThreshold = 0.5 * (sorted[i].first + sorted[i + 1].first);
                    }
                }
            } else {
                double sumL = 0.0, sumR = 0.0, sqL = 0.0, sqR = 0.0;
                for (const auto& [value, label] : sorted) {
                    sumR += label;
                    sqR += label * label;
                }
                double nl = 0.0, nr = static_cast<double>(sorted.size());
                for (size_t i = 0; i + 1 < sorted.size(); ++i) {
                    const double label = sorted[i].second;
                    sumL += label;
                    sqL += label * label;
                    sumR -= label;
                    sqR -= label * label;
                    nl += 1.0;
                    nr -= 1.0;
                    if (sorted[i].first == sorted[i + 1].first) continue;
                    if (nl < config_.minLeaf || nr < config_.minLeaf) continue;
                    // within-node sum of squared deviations
                    const double score = (sqL - sumL * sumL / nl) + (sqR - sumR * sumR / nr);
                    if (score < bestScore) {
                        bestScore = score;
                        bestFeature = static_cast<int>(feature);
                        bestThreshold = 0.5 * (sorted[i].first + sorted[i + 1].first);
                    }
                }
            }
        }
        if (bestFeature < 0) return nodeIdx;

        std::vector<size_t> leftRows, rightRows;
        for (size_t r : rows) {
            if (data.row(r)[static_cast<size_t>(bestFeature)] <= bestThreshold) {
                leftRows.push_back(r);
            } else {
                rightRows.push_back(r);
            }
        }
        if (leftRows.empty() || rightRows.empty()) return nodeIdx;
        rows.clear();
        rows.shrink_to_fit();

        nodes_[nodeIdx].feature = bestFeature;
        nodes_[nodeIdx].threshold = bestThreshold;
        const int left = build(data, y, std::move(leftRows), depth + 1, rng);
        nodes_[nodeIdx].left = left;
        const int right = build(data, y, std::move(rightRows), depth + 1, rng);
        nodes_[nodeIdx].right = right;
        return nodeIdx;
    }

    CartConfig config_;
    std::vector<TreeNode> nodes_;
};

std::vector<size_t> allRows(size_t n) {
    std::vector<size_t> rows(n);
    std::iota(rows.begin(), rows.end(), 0);
    return rows;
}

int maxLabel(const std::vector<int>& labels) {
    int top = 0;
    for (int label : labels) {
        if (label < 0) throw ConfigError("labels must be non-negative");
        top = std::max(top, label);
    }
    return top;
}

std::vector<double> labelsAsDouble(const std::vector<int>& labels) {
    std::vector<double> y(labels.size());
    for (size_t i = 0; i < labels.size(); ++i) y[i] = static_cast<double>(labels[i]);
    return y;
}

// Feature standardization used by the distance- and gradient-based learners.
struct Standardizer {
    std::vector<double> mean, scale;

    void fit(const Dataset& data) {
        mean.assign(data.cols, 0.0);
        scale.assign(data.cols, 1.0);
        for (size_t j = 0; j < data.cols; ++j) {
            double sum = 0.0;
            for (size_t r = 0; r < data.rows; ++r) sum += data.row(r)[j];
            mean[j] = sum / static_cast<double>(data.rows);
            double ss = 0.0;
            for (size_t r = 0; r < data.rows; ++r) {
                const double d = data.row(r)[j] - mean[j];
                ss += d * d;
            }
            const double sd = std::sqrt(ss / std::max<size_t>(1, data.rows - 1));
            scale[j] = sd > 1e-12 ? sd : 1.0;
        }
    }

    void apply(const double* in, double* out) const {
        for (size_t j = 0; j < mean.size(); ++j) out[j] = (in[j] - mean[j]) / scale[j];
    }
};

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// ---------------------------------------------------------------------------
// Classifiers
// ---------------------------------------------------------------------------

class DecisionTreeClassifier : public Classifier {
public:
    explicit DecisionTreeClassifier(const ClassifierSpec& spec) : spec_(spec) {}
    void fit(const Dataset& data) override {
        data.validate(true);
        CartConfig config;
        config.classification = true;
        config.classCount = maxLabel(data.labels) + 1;
        config.maxDepth = spec_.params.treeMaxDepth;
        tree_.fit(data, labelsAsDouble(data.labels), allRows(data.rows), config, nullptr);
    }
    int predict(const double* features) const override {
        return static_cast<int>(tree_.predict(features));
    }

private:
    ClassifierSpec spec_;
    CartTree tree_;
};

class RandomForestClassifier : public Classifier {
public:
    explicit RandomForestClassifier(const ClassifierSpec& spec) : spec_(spec) {}
    void fit(const Dataset& data) override {
        data.validate(true);
        classCount_ = maxLabel(data.labels) + 1;
        CartConfig config;
        config.classification = true;
        config.classCount = classCount_;
        config.maxDepth = spec_.params.forestMaxDepth;
        config.featureSubsample = static_cast<size_t>(
            std::max(1.0, std::floor(std::sqrt(static_cast<double>(data.cols)))));
        if (!spec_.params.forestBootstrap && spec_.params.forestTrees == 1) {
            config.featureSubsample = 0;  // reduces to the plain decision tree
        }
        const auto y = labelsAsDouble(data.labels);
        trees_.resize(static_cast<size_t>(spec_.params.forestTrees));
        for (size_t t = 0; t < trees_.size(); ++t) {
            RngStream rng(spec_.seed, fnv1a64("forest") + t);
            std::vector<size_t> rows;
            if (spec_.params.forestBootstrap) {
                rows.resize(data.rows);
                for (auto& r : rows) r = rng.uniformIndex(data.rows);
            } else {
                rows = allRows(data.rows);
            }
            trees_[t].fit(data, y, std::move(rows), config, &rng);
        }
    }
    int predict(const double* features) const override {
        std::vector<size_t> votes(static_cast<size_t>(classCount_), 0);
        for (const auto& tree : trees_) {
            votes[static_cast<size_t>(tree.predict(features))]++;
        }
        size_t best = 0;
        for (size_t c = 1; c < votes.size(); ++c) {
            if (votes[c] > votes[best]) best = c;
        }
        return static_cast<int>(best);
    }

private:
    ClassifierSpec spec_;
    int classCount_ = 2;
    std::vector<CartTree> trees_;
};

class GradientBoostingClassifier : public Classifier {
public:
    explicit GradientBoostingClassifier(const ClassifierSpec& spec) : spec_(spec) {}
    void fit(const Dataset& data) override {
        data.validate(true);
        if (maxLabel(data.labels) > 1) {
            throw ConfigError("gradient_boosting classifier supports binary labels");
        }
        const size_t n = data.rows;
        double positives = 0.0;
        for (int label : data.labels) positives += label;
        const double p = std::clamp(positives / static_cast<double>(n), 1e-6, 1.0 - 1e-6);
        bias_ = std::log(p / (1.0 - p));

        std::vector<double> score(n, bias_);
        std::vector<double> residual(n);
        CartConfig config;
        config.maxDepth = spec_.params.boostingDepth;
        trees_.clear();
        for (int round = 0; round < spec_.params.boostingRounds; ++round) {
            for (size_t r = 0; r < n; ++r) {
                residual[r] = static_cast<double>(data.labels[r]) - sigmoid(score[r]);
            }
            CartTree tree;
            tree.fit(data, residual, allRows(n), config, nullptr);
            // Newton leaf values: sum(residual) / sum(p (1-p))
            tree.relabelLeaves(data, [&](const std::vector<size_t>& rows) {
                double num = 0.0, den = 0.0;
                for (size_t r : rows) {
                    const double pr = sigmoid(score[r]);
                    num += residual[r];
                    den += pr * (1.0 - pr);
                }
                return den > 1e-12 ? num / den : 0.0;
            });
            for (size_t r = 0; r < n; ++r) {
                score[r] += spec_.params.boostingLearningRate * tree.predict(data.row(r));
            }
            trees_.push_back(std::move(tree));
        }
    }
    int predict(const double* features) const override {
        double score = bias_;
        for (const auto& tree : trees_) {
            score += spec_.params.boostingLearningRate * tree.predict(features);
        }
        return score > 0.0 ? 1 : 0;
    }

private:
    ClassifierSpec spec_;
    double bias_ = 0.0;
    std::vector<CartTree> trees_;
};

class KnnClassifierImpl : public Classifier {
public:
    explicit KnnClassifierImpl(const ClassifierSpec& spec) : spec_(spec) {}
    void fit(const Dataset& data) override {
        data.validate(true);
        standardizer_.fit(data);
        classCount_ = maxLabel(data.labels) + 1;
        rows_ = data.rows;
        cols_ = data.cols;
        points_.resize(rows_ * cols_);
        for (size_t r = 0; r < rows_; ++r) {
            standardizer_.apply(data.row(r), points_.data() + r * cols_);
        }
        labels_ = data.labels;
    }
    int predict(const double* features) const override {
        std::vector<double> q(cols_);
        standardizer_.apply(features, q.data());
        const size_t k = std::min<size_t>(static_cast<size_t>(spec_.params.knnK), rows_);
        std::vector<std::pair<double, size_t>> heap;  // max-heap of (distance, index)
        heap.reserve(k + 1);
        for (size_t r = 0; r < rows_; ++r) {
            double dist = 0.0;
            const double* p = points_.data() + r * cols_;
            for (size_t j = 0; j < cols_; ++j) {
                const double d = q[j] - p[j];
                dist += d * d;
            }
            if (heap.size() < k) {
                heap.emplace_back(dist, r);
                std::push_heap(heap.begin(), heap.end());
            } else if (dist < heap.front().first ||
                       (dist == heap.front().first && r < heap.front().second)) {
                std::pop_heap(heap.begin(), heap.end());
                heap.back() = {dist, r};
                std::push_heap(heap.begin(), heap.end());
            }
        }
        std::vector<size_t> votes(static_cast<size_t>(classCount_), 0);
        for (const auto& [dist, r] : heap) votes[static_cast<size_t>(labels_[r])]++;
        size_t best = 0;
        for (size_t c = 1; c < votes.size(); ++c) {
            if (votes[c] > votes[best]) best = c;
        }
        return static_cast<int>(best);
    }

private:
    ClassifierSpec spec_;
    Standardizer standardizer_;
    size_t rows_ = 0, cols_ = 0;
    int classCount_ = 2;
    std::vector<double> points_;
    std::vector<int> labels_;
};

class GaussianNbClassifier : public Classifier {
public:
    explicit GaussianNbClassifier(const ClassifierSpec&) {}
    void fit(const Dataset& data) override {
        data.validate(true);
        const int classes = maxLabel(data.labels) + 1;
        cols_ = data.cols;
        priors_.assign(classes, 0.0);
        means_.assign(classes * data.cols, 0.0);
        variances_.assign(classes * data.cols, 0.0);
        std::vector<double> counts(classes, 0.0);
        for (size_t r = 0; r < data.rows; ++r) {
            const int c = data.labels[r];
            counts[c] += 1.0;
            for (size_t j = 0; j < data.cols; ++j) means_[c * cols_ + j] += data.row(r)[j];
        }
        for (int c = 0; c < classes; ++c) {
            if (counts[c] == 0) continue;
            for (size_t j = 0; j < cols_; ++j) means_[c * cols_ + j] /= counts[c];
            priors_[c] = counts[c] / static_cast<double>(data.rows);
        }
        double maxVar = 1e-12;
        for (size_t r = 0; r < data.rows; ++r) {
            const int c = data.labels[r];
            for (size_t j = 0; j < cols_; ++j) {
                const double d = data.row(r)[j] - means_[c * cols_ + j];
                variances_[c * cols_ + j] += d * d;
            }
        }
        for (int c = 0; c < classes; ++c) {
            if (counts[c] == 0) continue;
            for (size_t j = 0; j < cols_; ++j) {
                variances_[c * cols_ + j] /= counts[c];
                maxVar = std::max(maxVar, variances_[c * cols_ + j]);
            }
        }
        const double floor = 1e-9 * maxVar;
        for (auto& v : variances_) v = std::max(v, floor);
    }
    int predict(const double* features) const override {
        int best = 0;
        double bestLog = -std::numeric_limits<double>::infinity();
        for (size_t c = 0; c < priors_.size(); ++c) {
            if (priors_[c] <= 0.0) continue;
            double logp = std::log(priors_[c]);
            for (size_t j = 0; j < cols_; ++j) {
                const double var = variances_[c * cols_ + j];
                const double d = features[j] - means_[c * cols_ + j];
                logp += -0.5 * std::log(2.0 * M_PI * var) - 0.5 * d * d / var;
            }
            if (logp > bestLog) {
                bestLog = logp;
                best = static_cast<int>(c);
            }
        }
        return best;
    }

private:
    size_t cols_ = 0;
    std::vector<double> priors_, means_, variances_;
};

class LogisticRegressionClassifier : public Classifier {
public:
    explicit LogisticRegressionClassifier(const ClassifierSpec& spec) : spec_(spec) {}
    void fit(const Dataset& data) override {
        data.validate(true);
        if (maxLabel(data.labels) > 1) {
            throw ConfigError("logistic_regression supports binary labels");
        }
        standardizer_.fit(data);
        weights_.assign(data.cols + 1, 0.0);
        std::vector<double> z(data.cols);
        const double n = static_cast<double>(data.rows);
        std::vector<double> grad(data.cols + 1);
        for (int iter = 0; iter < spec_.params.logisticIterations; ++iter) {
            std::fill(grad.begin(), grad.end(), 0.0);
            for (size_t r = 0; r < data.rows; ++r) {
                standardizer_.apply(data.row(r), z.data());
                double score = weights_.back();
                for (size_t j = 0; j < data.cols; ++j) score += weights_[j] * z[j];
                const double err = sigmoid(score) - static_cast<double>(data.labels[r]);
                for (size_t j = 0; j < data.cols; ++j) grad[j] += err * z[j];
                grad.back() += err;
            }
            for (size_t j = 0; j < weights_.size(); ++j) {
                weights_[j] -= spec_.params.logisticLearningRate * grad[j] / n;
            }
        }
    }
    int predict(const double* features) const override {
        std::vector<double> z(weights_.size() - 1);
        standardizer_.apply(features, z.data());
        double score = weights_.back();
        for (size_t j = 0; j < z.size(); ++j) score += weights_[j] * z[j];
        return score > 0.0 ? 1 : 0;
    }

private:
    ClassifierSpec spec_;
    Standardizer standardizer_;
    std::vector<double> weights_;
};

class SgdLinearClassifier : public Classifier {
public:
    explicit SgdLinearClassifier(const ClassifierSpec& spec) : spec_(spec) {}
    void fit(const Dataset& data) override {
        data.validate(true);
        if (maxLabel(data.labels) > 1) throw ConfigError("sgd_linear supports binary labels");
        standardizer_.fit(data);
        weights_.assign(data.cols + 1, 0.0);
        std::vector<double> z(data.cols);
        std::vector<size_t> order = allRows(data.rows);
        for (int epoch = 0; epoch < spec_.params.sgdEpochs; ++epoch) {
            RngStream rng(spec_.seed, fnv1a64("sgd-epoch") + static_cast<uint64_t>(epoch));
            rng.shuffle(order);
            for (size_t r : order) {
                standardizer_.apply(data.row(r), z.data());
                double score = weights_.back();
                for (size_t j = 0; j < data.cols; ++j) score += weights_[j] * z[j];
                const double err = sigmoid(score) - static_cast<double>(data.labels[r]);
                const double lr = spec_.params.sgdLearningRate;
                for (size_t j = 0; j < data.cols; ++j) {
                    weights_[j] -= lr * (err * z[j] + spec_.params.sgdL2 * weights_[j]);
                }
                weights_.back() -= lr * err;
            }
        }
    }
    int predict(const double* features) const override {
        std::vector<double> z(weights_.size() - 1);
        standardizer_.apply(features, z.data());
        double score = weights_.back();
        for (size_t j = 0; j < z.size(); ++j) score += weights_[j] * z[j];
        return score > 0.0 ? 1 : 0;
    }

private:
    ClassifierSpec spec_;
    Standardizer standardizer_;
    std::vector<double> weights_;
};

// ---------------------------------------------------------------------------
// Regressors
// ---------------------------------------------------------------------------

// Normal-equation solve with an intercept column; lambda > 0 ridges the
// non-intercept diagonal.
std::vector<double> solveLinear(const Dataset& data, double lambda, const char* who) {
    const size_t d = data.cols + 1;
    std::vector<double> xtx(d * d, 0.0);
    std::vector<double> xty(d, 0.0);
    for (size_t r = 0; r < data.rows; ++r) {
        const double* x = data.row(r);
        for (size_t i = 0; i < data.cols; ++i) {
            for (size_t j = i; j < data.cols; ++j) xtx[i * d + j] += x[i] * x[j];
            xtx[i * d + data.cols] += x[i];
            xty[i] += x[i] * data.target[r];
        }
        xtx[data.cols * d + data.cols] += 1.0;
        xty[data.cols] += data.target[r];
    }
    for (size_t i = 0; i < d; ++i) {
        for (size_t j = 0; j < i; ++j) xtx[i * d + j] = xtx[j * d + i];
    }
    for (size_t i = 0; i < data.cols; ++i) xtx[i * d + i] += lambda;

    std::vector<double> chol;
    try {
        chol = choleskyLower(xtx, d, 1e-10);
    } catch (const NumericError&) {
        throw NumericError(std::string(who) +
                           ": normal equations are singular; use ridge regression instead");
    }
    // forward/back substitution
    std::vector<double> y(d, 0.0), w(d, 0.0);
    for (size_t i = 0; i < d; ++i) {
        double sum = xty[i];
        for (size_t k = 0; k < i; ++k) sum -= chol[i * d + k] * y[k];
        y[i] = sum / chol[i * d + i];
    }
    for (size_t i = d; i-- > 0;) {
        double sum = y[i];
        for (size_t k = i + 1; k < d; ++k) sum -= chol[k * d + i] * w[k];
        w[i] = sum / chol[i * d + i];
    }
    return w;
}

class LinearRegressor : public Regressor {
public:
    LinearRegressor(double lambda, const char* who) : lambda_(lambda), who_(who) {}
    void fit(const Dataset& data) override {
        data.validate(false);
        weights_ = solveLinear(data, lambda_, who_);
    }
    double predict(const double* features) const override {
        double out = weights_.back();
        for (size_t j = 0; j + 1 < weights_.size(); ++j) out += weights_[j] * features[j];
        return out;
    }

private:
    double lambda_;
    const char* who_;
    std::vector<double> weights_;
};

class LassoRegressor : public Regressor {
public:
    explicit LassoRegressor(const RegressorSpec& spec) : spec_(spec) {}
    void fit(const Dataset& data) override {
        data.validate(false);
        standardizer_.fit(data);
        const size_t n = data.rows;
        const size_t d = data.cols;
        std::vector<double> z(n * d);
        for (size_t r = 0; r < n; ++r) standardizer_.apply(data.row(r), z.data() + r * d);
        targetMean_ = sampleMean(data.target);
        std::vector<double> y(n);
        for (size_t r = 0; r < n; ++r) y[r] = data.target[r] - targetMean_;

        weights_.assign(d, 0.0);
        std::vector<double> residual = y;
        std::vector<double> colNorm(d, 0.0);
        for (size_t j = 0; j < d; ++j) {
            for (size_t r = 0; r < n; ++r) colNorm[j] += z[r * d + j] * z[r * d + j];
            colNorm[j] /= static_cast<double>(n);
        }
        const double lambda = spec_.params.lassoLambda;
        for (int sweep = 0; sweep < spec_.params.lassoMaxSweeps; ++sweep) {
            double maxChange = 0.0;
            for (size_t j = 0; j < d; ++j) {
                if (colNorm[j] <= 0.0) continue;
                double rho = 0.0;
                for (size_t r = 0; r < n; ++r) {
                    rho += z[r * d + j] * (residual[r] + z[r * d + j] * weights_[j]);
                }
                rho /= static_cast<double>(n);
                const double next =
                    (rho > lambda ? rho - lambda : (rho < -lambda ? rho + lambda : 0.0)) /
                    colNorm[j];
                const double delta = next - weights_[j];
                if (delta != 0.0) {
                    for (size_t r = 0; r < n; ++r) residual[r] -= delta * z[r * d + j];
                    weights_[j] = next;
                }
                maxChange = std::max(maxChange, std::abs(delta));
            }
            if (maxChange < spec_.params.lassoTolerance) break;
        }
    }
    double predict(const double* features) const override {
        std::vector<double> z(weights_.size());
        standardizer_.apply(features, z.data());
        double out = targetMean_;
        for (size_t j = 0; j < weights_.size(); ++j) out += weights_[j] * z[j];
        return out;
    }
    const std::vector<double>& coefficients() const { return weights_; }

private:
    RegressorSpec spec_;
    Standardizer standardizer_;
    std::vector<double> weights_;
    double targetMean_ = 0.0;
};

class KnnRegressor : public Regressor {
public:
    explicit KnnRegressor(const RegressorSpec& spec) : spec_(spec) {}
    void fit(const Dataset& data) override {
        data.validate(false);
        standardizer_.fit(data);
        rows_ = data.rows;
        cols_ = data.cols;
        points_.resize(rows_ * cols_);
        for (size_t r = 0; r < rows_; ++r) standardizer_.apply(data.row(r), points_.data() + r * cols_);
        targets_ = data.target;
    }
    double predict(const double* features) const override {
        std::vector<double> q(cols_);
        standardizer_.apply(features, q.data());
        const size_t k = std::min<size_t>(static_cast<size_t>(spec_.params.knnK), rows_);
        std::vector<std::pair<double, size_t>> heap;
        heap.reserve(k + 1);
        for (size_t r = 0; r < rows_; ++r) {
            double dist = 0.0;
            const double* p = points_.data() + r * cols_;
            for (size_t j = 0; j < cols_; ++j) {
                const double d = q[j] - p[j];
                dist += d * d;
            }
            if (heap.size() < k) {
                heap.emplace_back(dist, r);
                std::push_heap(heap.begin(), heap.end());
            } else if (dist < heap.front().first ||
                       (dist == heap.front().first && r < heap.front().second)) {
                std::pop_heap(heap.begin(), heap.end());
                heap.back() = {dist, r};
                std::push_heap(heap.begin(), heap.end());
            }
        }
        double sum = 0.0;
        for (const auto& [dist, r] : heap) sum += targets_[r];
        return sum / static_cast<double>(heap.size());
    }

private:
    RegressorSpec spec_;
    Standardizer standardizer_;
    size_t rows_ = 0, cols_ = 0;
    std::vector<double> points_;
    std::vector<double> targets_;
};

class TreeRegressor : public Regressor {
public:
    explicit TreeRegressor(const RegressorSpec& spec) : spec_(spec) {}
    void fit(const Dataset& data) override {
        data.validate(false);
        CartConfig config;
        config.maxDepth = spec_.params.treeMaxDepth;
        tree_.fit(data, data.target, allRows(data.rows), config, nullptr);
    }
    double predict(const double* features) const override { return tree_.predict(features); }

private:
    RegressorSpec spec_;
    CartTree tree_;
};

class ForestRegressor : public Regressor {
public:
    explicit ForestRegressor(const RegressorSpec& spec) : spec_(spec) {}
    void fit(const Dataset& data) override {
        data.validate(false);
        CartConfig config;
        config.maxDepth = spec_.params.forestMaxDepth;
        config.featureSubsample = static_cast<size_t>(
            std::max(1.0, std::floor(std::sqrt(static_cast<double>(data.cols)))));
        if (!spec_.params.forestBootstrap && spec_.params.forestTrees == 1) {
            config.featureSubsample = 0;
        }
        trees_.resize(static_cast<size_t>(spec_.params.forestTrees));
        for (size_t t = 0; t < trees_.size(); ++t) {
            RngStream rng(spec_.seed, fnv1a64("forest") + t);
            std::vector<size_t> rows;
            if (spec_.params.forestBootstrap) {
                rows.resize(data.rows);
                for (auto& r : rows) r = rng.uniformIndex(data.rows);
            } else {
                rows = allRows(data.rows);
            }
            trees_[t].fit(data, data.target, std::move(rows), config, &rng);
        }
    }
    double predict(const double* features) const override {
        double sum = 0.0;
        for (const auto& tree : trees_) sum += tree.predict(features);
        return sum / static_cast<double>(trees_.size());
    }

private:
    RegressorSpec spec_;
    std::vector<CartTree> trees_;
};

class BoostingRegressor : public Regressor {
public:
    explicit BoostingRegressor(const RegressorSpec& spec) : spec_(spec) {}
    void fit(const Dataset& data) override {
        data.validate(false);
        bias_ = sampleMean(data.target);
        std::vector<double> score(data.rows, bias_);
        std::vector<double> residual(data.rows);
        CartConfig config;
        config.maxDepth = spec_.params.boostingDepth;
        trees_.clear();
        trainLoss_.clear();
        for (int round = 0; round < spec_.params.boostingRounds; ++round) {
            double loss = 0.0;
            for (size_t r = 0; r < data.rows; ++r) {
                residual[r] = data.target[r] - score[r];
                loss += residual[r] * residual[r];
            }
            trainLoss_.push_back(loss / static_cast<double>(data.rows));
            CartTree tree;
            tree.fit(data, residual, allRows(data.rows), config, nullptr);
            for (size_t r = 0; r < data.rows; ++r) {
                score[r] += spec_.params.boostingLearningRate * tree.predict(data.row(r));
            }
            trees_.push_back(std::move(tree));
        }
        double loss = 0.0;
        for (size_t r = 0; r < data.rows; ++r) {
            const double d = data.target[r] - score[r];
            loss += d * d;
        }
        trainLoss_.push_back(loss / static_cast<double>(data.rows));
        for (size_t i = 1; i < trainLoss_.size(); ++i) {
            if (trainLoss_[i] > trainLoss_[i - 1] + 1e-9 * (1.0 + trainLoss_[i - 1])) {
                throw NumericError("boosting: training loss increased at round " +
                                   std::to_string(i));
            }
        }
    }
    double predict(const double* features) const override {
        double out = bias_;
        for (const auto& tree : trees_) {
            out += spec_.params.boostingLearningRate * tree.predict(features);
        }
        return out;
    }
    const std::vector<double>& trainLossTrace() const { return trainLoss_; }

private:
    RegressorSpec spec_;
    double bias_ = 0.0;
    std::vector<CartTree> trees_;
    std::vector<double> trainLoss_;
};

class SgdRegressor : public Regressor {
public:
    explicit SgdRegressor(const RegressorSpec& spec) : spec_(spec) {}
    void fit(const Dataset& data) override {
        data.validate(false);
        standardizer_.fit(data);
        targetMean_ = sampleMean(data.target);
        const double targetScale = std::max(1e-12, sampleStd(data.target));
        targetScale_ = targetScale;
        weights_.assign(data.cols + 1, 0.0);
        std::vector<double> z(data.cols);
        std::vector<size_t> order = allRows(data.rows);
        for (int epoch = 0; epoch < spec_.params.sgdEpochs; ++epoch) {
            RngStream rng(spec_.seed, fnv1a64("sgd-epoch") + static_cast<uint64_t>(epoch));
            rng.shuffle(order);
            for (size_t r : order) {
                standardizer_.apply(data.row(r), z.data());
                double score = weights_.back();
                for (size_t j = 0; j < data.cols; ++j) score += weights_[j] * z[j];
                const double err = score - (data.target[r] - targetMean_) / targetScale_;
                const double lr = spec_.params.sgdLearningRate;
                for (size_t j = 0; j < data.cols; ++j) {
                    weights_[j] -= lr * (err * z[j] + spec_.params.sgdL2 * weights_[j]);
                }
                weights_.back() -= lr * err;
            }
        }
    }
    double predict(const double* features) const override {
        std::vector<double> z(weights_.size() - 1);
        standardizer_.apply(features, z.data());
        double score = weights_.back();
        for (size_t j = 0; j < z.size(); ++j) score += weights_[j] * z[j];
        return targetMean_ + score * targetScale_;
    }

private:
    RegressorSpec spec_;
    Standardizer standardizer_;
    std::vector<double> weights_;
    double targetMean_ = 0.0;
    double targetScale_ = 1.0;
};

class PcaOlsRegressor : public Regressor {
public:
    explicit PcaOlsRegressor(const RegressorSpec& spec) : spec_(spec) {}
    void fit(const Dataset& data) override {
        data.validate(false);
        standardizer_.fit(data);
        const size_t n = data.rows;
        const size_t d = data.cols;
        std::vector<double> z(n * d);
        for (size_t r = 0; r < n; ++r) standardizer_.apply(data.row(r), z.data() + r * d);

        std::vector<double> corr(d * d, 0.0);
        for (size_t i = 0; i < d; ++i) {
            for (size_t j = i; j < d; ++j) {
                double sum = 0.0;
                for (size_t r = 0; r < n; ++r) sum += z[r * d + i] * z[r * d + j];
                corr[i * d + j] = corr[j * d + i] = sum / static_cast<double>(n - 1);
            }
        }
        std::vector<double> values, vectors;
        symmetricEigen(corr, d, values, vectors);
        double total = 0.0;
        for (double v : values) total += std::max(0.0, v);
        double cumulative = 0.0;
        size_t keep = 0;
        while (keep < d && cumulative / total < spec_.params.pcaOlsVarianceShare) {
            cumulative += std::max(0.0, values[keep]);
            ++keep;
        }
        keep = std::max<size_t>(1, keep);
        components_.assign(keep * d, 0.0);
        for (size_t c = 0; c < keep; ++c) {
            for (size_t j = 0; j < d; ++j) components_[c * d + j] = vectors[j * d + c];
        }

        Dataset projected;
        projected.rows = n;
        projected.cols = keep;
        projected.features.assign(n * keep, 0.0);
        projected.target = data.target;
        for (size_t r = 0; r < n; ++r) {
            for (size_t c = 0; c < keep; ++c) {
                double sum = 0.0;
                for (size_t j = 0; j < d; ++j) sum += z[r * d + j] * components_[c * d + j];
                projected.features[r * keep + c] = sum;
            }
        }
        weights_ = solveLinear(projected, 0.0, "pca_ols");
    }
    double predict(const double* features) const override {
        const size_t d = standardizer_.mean.size();
        const size_t keep = weights_.size() - 1;
        std::vector<double> z(d);
        standardizer_.apply(features, z.data());
        double out = weights_.back();
        for (size_t c = 0; c < keep; ++c) {
            double proj = 0.0;
            for (size_t j = 0; j < d; ++j) proj += z[j] * components_[c * d + j];
            out += weights_[c] * proj;
        }
        return out;
    }

private:
    RegressorSpec spec_;
    Standardizer standardizer_;
    std::vector<double> components_;
    std::vector<double> weights_;
};

}  // namespace

std::unique_ptr<Classifier> makeClassifier(const ClassifierSpec& spec) {
    switch (spec.kind) {
        case ClassifierKind::RandomForest: return std::make_unique<RandomForestClassifier>(spec);
        case ClassifierKind::GradientBoosting:
            return std::make_unique<GradientBoostingClassifier>(spec);
        case ClassifierKind::Knn: return std::make_unique<KnnClassifierImpl>(spec);
        case ClassifierKind::DecisionTree: return std::make_unique<DecisionTreeClassifier>(spec);
        case ClassifierKind::GaussianNb: return std::make_unique<GaussianNbClassifier>(spec);
        case ClassifierKind::LogisticRegression:
            return std::make_unique<LogisticRegressionClassifier>(spec);
        case ClassifierKind::SgdLinear: return std::make_unique<SgdLinearClassifier>(spec);
    }
    throw ConfigError("unknown classifier kind");
}

std::unique_ptr<Regressor> makeRegressor(const RegressorSpec& spec) {
    switch (spec.kind) {
        case RegressorKind::Ols: return std::make_unique<LinearRegressor>(0.0, "ols");
        case RegressorKind::Ridge:
            return std::make_unique<LinearRegressor>(spec.params.ridgeLambda, "ridge");
        case RegressorKind::Lasso: return std::make_unique<LassoRegressor>(spec);
        case RegressorKind::KnnReg: return std::make_unique<KnnRegressor>(spec);
        case RegressorKind::TreeReg: return std::make_unique<TreeRegressor>(spec);
        case RegressorKind::ForestReg: return std::make_unique<ForestRegressor>(spec);
        case RegressorKind::BoostingReg: return std::make_unique<BoostingRegressor>(spec);
        case RegressorKind::SgdReg: return std::make_unique<SgdRegressor>(spec);
        case RegressorKind::PcaOls: return std::make_unique<PcaOlsRegressor>(spec);
    }
    throw ConfigError("unknown regressor kind");
}

FoldPlan stratifiedKfold(const std::vector<int>& labels, size_t k, uint64_t seed) {
    if (k < 2) throw ConfigError("stratified_kfold: k must be at least 2");
    const int classes = maxLabel(labels) + 1;
    std::vector<std::vector<size_t>> byClass(static_cast<size_t>(classes));
    for (size_t i = 0; i < labels.size(); ++i) byClass[static_cast<size_t>(labels[i])].push_back(i);

    FoldPlan plan;
    plan.folds.assign(k, {});
    for (size_t c = 0; c < byClass.size(); ++c) {
        auto& members = byClass[c];
        if (members.empty()) continue;
        if (members.size() < k) {
            throw ConfigError("stratified_kfold: class " + std::to_string(c) + " has " +
                              std::to_string(members.size()) + " members, fewer than k=" +
                              std::to_string(k));
        }
        RngStream rng(seed, fnv1a64("kfold-class") + c);
        rng.shuffle(members);
        const size_t base = members.size() / k;
        const size_t extra = members.size() % k;
        size_t cursor = 0;
        for (size_t f = 0; f < k; ++f) {
            const size_t take = base + (f < extra ? 1 : 0);
            for (size_t i = 0; i < take; ++i) plan.folds[f].push_back(members[cursor++]);
        }
    }
    for (auto& fold : plan.folds) std::sort(fold.begin(), fold.end());
    return plan;
}

ClassificationMetrics classificationMetrics(const std::vector<int>& predictions,
                                            const std::vector<int>& truth) {
    if (predictions.size() != truth.size() || predictions.empty()) {
        throw ConfigError("classification_metrics: need equal non-empty vectors");
    }
    size_t correct = 0, tp = 0, fp = 0, fn = 0;
    for (size_t i = 0; i < truth.size(); ++i) {
        if (predictions[i] == truth[i]) ++correct;
        if (predictions[i] == 1 && truth[i] == 1) ++tp;
        if (predictions[i] == 1 && truth[i] != 1) ++fp;
        if (predictions[i] != 1 && truth[i] == 1) ++fn;
    }
    ClassificationMetrics metrics;
    metrics.accuracy = static_cast<double>(correct) / static_cast<double>(truth.size());
    const double precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    const double recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    metrics.f1 = precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    return metrics;
}

RegressionMetrics regressionMetrics(const std::vector<double>& predictions,
                                    const std::vector<double>& truth) {
    if (predictions.size() != truth.size() || predictions.empty()) {
        throw ConfigError("regression_metrics: need equal non-empty vectors");
    }
    double absSum = 0.0, sqSum = 0.0;
    for (size_t i = 0; i < truth.size(); ++i) {
        const double e = predictions[i] - truth[i];
        absSum += std::abs(e);
        sqSum += e * e;
    }
    const double n = static_cast<double>(truth.size());
    const double mean = sampleMean(truth);
    double totalSq = 0.0;
    for (double t : truth) totalSq += (t - mean) * (t - mean);
    if (totalSq <= 0.0) {
        throw NumericError("regression_metrics: R^2 undefined for zero-variance truth");
    }
    RegressionMetrics metrics;
    metrics.mae = absSum / n;
    metrics.rmse = std::sqrt(sqSum / n);
    metrics.r2 = 1.0 - sqSum / totalSq;
    return metrics;
}

}  // namespace synthflight
