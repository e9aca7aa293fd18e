#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "synthflight/encode.hpp"
#include "synthflight/table.hpp"

namespace synthflight {

struct TvaeArchitecture {
    int hidden1 = 128;
    int hidden2 = 128;
    int latent = 128;
};

struct TrainConfig {
    int epochs = 300;
    double learningRate = 1e-3;
    int batchSize = 500;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adamEpsilon = 1e-8;
    double weightDecay = 1e-5;
    uint64_t seed = 0;
    std::string lossTracePath;  // optional CSV: epoch,total,reconstruction,kl,active_dims
    TvaeArchitecture arch;
    bool modeNormalization = false;
    bool klWarmup = false;  // linear KL ramp over the first 10% of epochs
    bool stochasticCategorical = false;  // sample softmax heads instead of argmax

    void validate() const;
};

struct EpochStats {
    int epoch = 0;
    double total = 0.0;
    double reconstruction = 0.0;
    double kl = 0.0;
    int activeDims = 0;  // latent dims with mean KL > 0.01
};

struct TvaeLossValue {
    double total = 0.0;
    double reconstruction = 0.0;
    double kl = 0.0;
};

// Every trainable tensor; also reused as the gradient/optimizer-state shape.
struct TvaeParams {
    Eigen::MatrixXd W1, W2, Wmu, Wlv;   // encoder
    Eigen::MatrixXd V1, V2, Wout;       // decoder
    Eigen::RowVectorXd b1, b2, bmu, blv, c1, c2, bout;
    Eigen::VectorXd contLogVar;         // learned per-continuous-column log variance

    template <typename Fn>
    void forEachTensor(Fn&& fn) {
        fn(W1); fn(W2); fn(Wmu); fn(Wlv); fn(V1); fn(V2); fn(Wout);
        fn(b1); fn(b2); fn(bmu); fn(blv); fn(c1); fn(c2); fn(bout);
        fn(contLogVar);
    }
    template <typename Fn>
    void zip(TvaeParams& other, Fn&& fn) {
        fn(W1, other.W1); fn(W2, other.W2); fn(Wmu, other.Wmu); fn(Wlv, other.Wlv);
        fn(V1, other.V1); fn(V2, other.V2); fn(Wout, other.Wout);
        fn(b1, other.b1); fn(b2, other.b2); fn(bmu, other.bmu); fn(blv, other.blv);
        fn(c1, other.c1); fn(c2, other.c2); fn(bout, other.bout);
        fn(contLogVar, other.contLogVar);
    }
    bool allFinite() const;
};

// Output heads derived from the encoded block layout.
struct TvaeHead {
    bool continuous = false;
    size_t offset = 0;     // column offset in the encoded matrix / output layer
    size_t width = 1;      // one-hot width (categorical) or 1 (continuous)
    size_t contIndex = 0;  // index into contLogVar for continuous heads
    size_t modeOffset = 0; // mode one-hot block right after a mode scalar (width > 0)
    size_t modeWidth = 0;
};

class TvaeModel {
public:
    EncoderState encoder;
    TvaeParams params;
    TvaeArchitecture arch;
    std::vector<TvaeHead> heads;
    size_t inputDim = 0;
    bool stochasticCategorical = false;
    std::vector<EpochStats> trace;

    nlohmann::json toJson() const;
    static TvaeModel fromJson(const nlohmann::json& doc);
    void save(const std::string& path) const;
    static TvaeModel load(const std::string& path);
};

std::vector<TvaeHead> buildHeads(const EncoderState& state);

// -ELBO averaged over the batch, with the reparameterization noise supplied
// by the caller (rows x latent, row-major) so gradients can be checked under
// fixed noise.
TvaeLossValue tvaeLoss(const TvaeModel& model, const EncodedMatrix& batch,
                       const std::vector<double>& noise, double klWeight = 1.0);

// Exact reverse-mode gradients of tvaeLoss under the same fixed noise.
TvaeParams tvaeGrad(const TvaeModel& model, const EncodedMatrix& batch,
                    const std::vector<double>& noise, double klWeight = 1.0,
                    TvaeLossValue* lossOut = nullptr,
                    std::vector<double>* perDimKl = nullptr);

TvaeModel tvaeFit(const Table& frame, const TrainConfig& config);

Table tvaeSample(const TvaeModel& model, size_t n, uint64_t seed);

// Fresh randomly-initialized model over the given encoder state (exposed for
// the gradient self-check).
TvaeModel tvaeInit(const EncoderState& state, const TvaeArchitecture& arch, uint64_t seed);

// Fast finite-difference self-check on a toy model; returns the worst
// relative disagreement. Enforced before long training runs.
double tvaeGradCheck(uint64_t seed);

}  // namespace synthflight
