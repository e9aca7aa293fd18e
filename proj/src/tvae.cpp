#include "synthflight/tvae.hpp"

#include <cmath>
#include <fstream>
#include <numeric>

#include "synthflight/numkit.hpp"

namespace synthflight {

namespace {

constexpr double kLogVarFloor = -13.815510557964274;  // log(1e-6)
constexpr double kLog2Pi = 1.8378770664093453;

using Matrix = Eigen::MatrixXd;
using RowVector = Eigen::RowVectorXd;

Matrix relu(const Matrix& a) { return a.cwiseMax(0.0); }

void validateDims(const TvaeModel& model, const EncodedMatrix& batch) {
    if (batch.cols != model.inputDim) {
        throw SchemaError("tvae: batch has " + std::to_string(batch.cols) +
                          " columns, model expects " + std::to_string(model.inputDim));
    }
    if (batch.rows == 0) throw ConfigError("tvae: empty batch");
}

Matrix toEigen(const EncodedMatrix& batch) {
    Matrix x(batch.rows, batch.cols);
    for (size_t r = 0; r < batch.rows; ++r) {
        for (size_t c = 0; c < batch.cols; ++c) x(r, c) = batch.at(r, c);
    }
    return x;
}

Matrix noiseMatrix(const std::vector<double>& noise, size_t rows, size_t latent) {
    if (noise.size() != rows * latent) {
        throw ConfigError("tvae: noise must be rows x latent");
    }
    Matrix eps(rows, latent);
    for (size_t r = 0; r < rows; ++r) {
        for (size_t c = 0; c < latent; ++c) eps(r, c) = noise[r * latent + c];
    }
    return eps;
}

struct Forward {
    Matrix x, a1, a2, mu, lv, sig, z, d1, d2, y, eps;
};

Forward forwardPass(const TvaeModel& model, const EncodedMatrix& batch,
                    const std::vector<double>& noise) {
    validateDims(model, batch);
    const auto& p = model.params;
    Forward f;
    f.x = toEigen(batch);
    f.eps = noiseMatrix(noise, batch.rows, static_cast<size_t>(model.arch.latent));
    f.a1 = relu((f.x * p.W1).rowwise() + p.b1);
    f.a2 = relu((f.a1 * p.W2).rowwise() + p.b2);
    f.mu = (f.a2 * p.Wmu).rowwise() + p.bmu;
    f.lv = (f.a2 * p.Wlv).rowwise() + p.blv;
    f.sig = (0.5 * f.lv).array().exp();
    f.z = f.mu + f.sig.cwiseProduct(f.eps);
    f.d1 = relu((f.z * p.V1).rowwise() + p.c1);
    f.d2 = relu((f.d1 * p.V2).rowwise() + p.c2);
    f.y = (f.d2 * p.Wout).rowwise() + p.bout;
    return f;
}

// Per-head reconstruction loss and (optionally) the gradient w.r.t. y and
// the per-column log variances.
double reconstructionTerm(const TvaeModel& model, const Forward& f, Matrix* dY,
                          Eigen::VectorXd* dLogVar) {
    const auto& p = model.params;
    const auto n = f.x.rows();
    double total = 0.0;
    for (const auto& head : model.heads) {
        if (head.continuous) {
            const double logVar = std::max(p.contLogVar(static_cast<Eigen::Index>(head.contIndex)),
                                           kLogVarFloor);
            const double invVar = std::exp(-logVar);
            const auto xCol = f.x.col(static_cast<Eigen::Index>(head.offset));
            const auto yCol = f.y.col(static_cast<Eigen::Index>(head.offset));
            const Eigen::VectorXd diff = yCol - xCol;
            total += 0.5 * (kLog2Pi + logVar) * static_cast<double>(n) +
                     0.5 * invVar * diff.squaredNorm();
            if (dY) {
                dY->col(static_cast<Eigen::Index>(head.offset)) += invVar * diff;
                (*dLogVar)(static_cast<Eigen::Index>(head.contIndex)) +=
                    0.5 * (static_cast<double>(n) - invVar * diff.squaredNorm());
            }
            // a mode one-hot block behind the scalar is a categorical head
            if (head.modeWidth > 0) {
                const auto block = f.y.middleCols(static_cast<Eigen::Index>(head.modeOffset),
                                                  static_cast<Eigen::Index>(head.modeWidth));
                const auto target = f.x.middleCols(static_cast<Eigen::Index>(head.modeOffset),
                                                   static_cast<Eigen::Index>(head.modeWidth));
                const Eigen::VectorXd rowMax = block.rowwise().maxCoeff();
                const Matrix shifted = block.colwise() - rowMax;
                const Matrix expv = shifted.array().exp();
                const Eigen::VectorXd sum = expv.rowwise().sum();
                total += (rowMax.array() + sum.array().log()).sum() -
                         (block.cwiseProduct(target)).sum();
                if (dY) {
                    const Matrix softmax = expv.array().colwise() / sum.array();
                    dY->middleCols(static_cast<Eigen::Index>(head.modeOffset),
                                   static_cast<Eigen::Index>(head.modeWidth)) += softmax - target;
                }
            }
        } else {
            const auto block = f.y.middleCols(static_cast<Eigen::Index>(head.offset),
                                              static_cast<Eigen::Index>(head.width));
            const auto target = f.x.middleCols(static_cast<Eigen::Index>(head.offset),
                                               static_cast<Eigen::Index>(head.width));
            const Eigen::VectorXd rowMax = block.rowwise().maxCoeff();
            const Matrix shifted = block.colwise() - rowMax;
            const Matrix expv = shifted.array().exp();
            const Eigen::VectorXd sum = expv.rowwise().sum();
            total += (rowMax.array() + sum.array().log()).sum() -
                     (block.cwiseProduct(target)).sum();
            if (dY) {
                const Matrix softmax = expv.array().colwise() / sum.array();
                dY->middleCols(static_cast<Eigen::Index>(head.offset),
                               static_cast<Eigen::Index>(head.width)) += softmax - target;
            }
        }
    }
    return total;
}

}  // namespace

void TrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("tvae: epochs must be >= 1");
    if (!(learningRate > 0.0 && learningRate < 1.0)) {
        throw ConfigError("tvae: learning rate must be inside (0, 1)");
    }
    if (batchSize < 1) throw ConfigError("tvae: batch size must be >= 1");
    if (arch.hidden1 < 1 || arch.hidden2 < 1 || arch.latent < 1) {
        throw ConfigError("tvae: architecture sizes must be >= 1");
    }
}

bool TvaeParams::allFinite() const {
    bool ok = true;
    const_cast<TvaeParams*>(this)->forEachTensor([&](auto& tensor) {
        if (!tensor.allFinite()) ok = false;
    });
    return ok;
}

std::vector<TvaeHead> buildHeads(const EncoderState& state) {
    const auto layout = buildLayout(state);
    std::vector<TvaeHead> heads;
    size_t contIndex = 0;
    size_t c = 0;
    while (c < layout.size()) {
        const auto& descriptor = layout[c];
        TvaeHead head;
        switch (descriptor.role) {
            case MatrixRole::Scalar: {
                head.continuous = true;
                head.offset = c;
                head.contIndex = contIndex++;
                heads.push_back(head);
                ++c;
                break;
            }
            case MatrixRole::ModeScalar: {
                head.continuous = true;
                head.offset = c;
                head.contIndex = contIndex++;
                head.modeOffset = c + 1;
                head.modeWidth = 0;
                size_t k = c + 1;
                while (k < layout.size() && layout[k].role == MatrixRole::ModeOneHot &&
                       layout[k].sourceColumn == descriptor.sourceColumn) {
                    head.modeWidth++;
                    ++k;
                }
                heads.push_back(head);
                c = k;
                break;
            }
            case MatrixRole::OneHot: {
                head.continuous = false;
                head.offset = c;
                head.width = 0;
                size_t k = c;
                while (k < layout.size() && layout[k].role == MatrixRole::OneHot &&
                       layout[k].sourceColumn == descriptor.sourceColumn) {
                    head.width++;
                    ++k;
                }
                heads.push_back(head);
                c = k;
                break;
            }
            case MatrixRole::ModeOneHot:
                throw SchemaError("tvae: dangling mode one-hot block in layout");
        }
    }
    return heads;
}

TvaeModel tvaeInit(const EncoderState& state, const TvaeArchitecture& arch, uint64_t seed) {
    TvaeModel model;
    model.encoder = state;
    model.arch = arch;
    model.heads = buildHeads(state);
    model.inputDim = buildLayout(state).size();

    size_t continuousHeads = 0;
    for (const auto& head : model.heads) continuousHeads += head.continuous ? 1 : 0;

    RngStream rng(seed, fnv1a64("tvae-init"));
    auto init = [&](Matrix& m, Eigen::Index rows, Eigen::Index cols) {
        m.resize(rows, cols);
        const double scale = std::sqrt(2.0 / static_cast<double>(rows));
        for (Eigen::Index i = 0; i < rows; ++i) {
            for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.normal() * scale;
        }
    };
    auto& p = model.params;
    const auto in = static_cast<Eigen::Index>(model.inputDim);
    init(p.W1, in, arch.hidden1);
    init(p.W2, arch.hidden1, arch.hidden2);
    init(p.Wmu, arch.hidden2, arch.latent);
    init(p.Wlv, arch.hidden2, arch.latent);
    init(p.V1, arch.latent, arch.hidden1);
    init(p.V2, arch.hidden1, arch.hidden2);
    init(p.Wout, arch.hidden2, in);
    p.b1 = RowVector::Zero(arch.hidden1);
    p.b2 = RowVector::Zero(arch.hidden2);
    p.bmu = RowVector::Zero(arch.latent);
    p.blv = RowVector::Zero(arch.latent);
    p.c1 = RowVector::Zero(arch.hidden1);
    p.c2 = RowVector::Zero(arch.hidden2);
    p.bout = RowVector::Zero(in);
    p.contLogVar = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(continuousHeads));
    return model;
}

TvaeLossValue tvaeLoss(const TvaeModel& model, const EncodedMatrix& batch,
                       const std::vector<double>& noise, double klWeight) {
    const Forward f = forwardPass(model, batch, noise);
    const double n = static_cast<double>(batch.rows);
    TvaeLossValue value;
    value.reconstruction = reconstructionTerm(model, f, nullptr, nullptr) / n;
    value.kl = 0.5 * (f.lv.array().exp() + f.mu.array().square() - 1.0 - f.lv.array()).sum() / n;
    value.total = value.reconstruction + klWeight * value.kl;
    if (!std::isfinite(value.total)) {
        throw NumericError("tvae: non-finite loss");
    }
    return value;
}

TvaeParams tvaeGrad(const TvaeModel& model, const EncodedMatrix& batch,
                    const std::vector<double>& noise, double klWeight, TvaeLossValue* lossOut,
                    std::vector<double>* perDimKl) {
    const Forward f = forwardPass(model, batch, noise);
    const auto& p = model.params;
    const double n = static_cast<double>(batch.rows);

    TvaeParams g;
    g.W1 = Matrix::Zero(p.W1.rows(), p.W1.cols());
    g.W2 = Matrix::Zero(p.W2.rows(), p.W2.cols());
    g.Wmu = Matrix::Zero(p.Wmu.rows(), p.Wmu.cols());
    g.Wlv = Matrix::Zero(p.Wlv.rows(), p.Wlv.cols());
    g.V1 = Matrix::Zero(p.V1.rows(), p.V1.cols());
    g.V2 = Matrix::Zero(p.V2.rows(), p.V2.cols());
    g.Wout = Matrix::Zero(p.Wout.rows(), p.Wout.cols());
    g.b1 = RowVector::Zero(p.b1.cols());
    g.b2 = RowVector::Zero(p.b2.cols());
    g.bmu = RowVector::Zero(p.bmu.cols());
    g.blv = RowVector::Zero(p.blv.cols());
    g.c1 = RowVector::Zero(p.c1.cols());
    g.c2 = RowVector::Zero(p.c2.cols());
    g.bout = RowVector::Zero(p.bout.cols());
    g.contLogVar = Eigen::VectorXd::Zero(p.contLogVar.size());

    Matrix dY = Matrix::Zero(f.y.rows(), f.y.cols());
    const double recon = reconstructionTerm(model, f, &dY, &g.contLogVar);
    dY /= n;
    g.contLogVar /= n;

    const double kl =
        0.5 * (f.lv.array().exp() + f.mu.array().square() - 1.0 - f.lv.array()).sum() / n;
    if (lossOut) {
        lossOut->reconstruction = recon / n;
        lossOut->kl = kl;
        lossOut->total = lossOut->reconstruction + klWeight * kl;
    }
    if (perDimKl) {
        perDimKl->resize(static_cast<size_t>(f.lv.cols()));
        for (Eigen::Index j = 0; j < f.lv.cols(); ++j) {
            (*perDimKl)[static_cast<size_t>(j)] =
                0.5 *
                (f.lv.col(j).array().exp() + f.mu.col(j).array().square() - 1.0 -
                 f.lv.col(j).array())
                    .sum() /
                n;
        }
    }

    // decoder
    g.Wout = f.d2.transpose() * dY;
    g.bout = dY.colwise().sum();
    Matrix dD2 = (dY * p.Wout.transpose()).cwiseProduct((f.d2.array() > 0.0).cast<double>().matrix());
    g.V2 = f.d1.transpose() * dD2;
    g.c2 = dD2.colwise().sum();
    Matrix dD1 = (dD2 * p.V2.transpose()).cwiseProduct((f.d1.array() > 0.0).cast<double>().matrix());
    g.V1 = f.z.transpose() * dD1;
    g.c1 = dD1.colwise().sum();
    Matrix dZ = dD1 * p.V1.transpose();

    // reparameterization plus KL terms
    Matrix dMu = dZ + (klWeight / n) * f.mu;
    Matrix dLv = 0.5 * dZ.cwiseProduct(f.eps).cwiseProduct(f.sig) +
                 (klWeight * 0.5 / n) * (f.lv.array().exp() - 1.0).matrix();

    g.Wmu = f.a2.transpose() * dMu;
    g.bmu = dMu.colwise().sum();
    g.Wlv = f.a2.transpose() * dLv;
    g.blv = dLv.colwise().sum();

    Matrix dA2 = (dMu * p.Wmu.transpose() + dLv * p.Wlv.transpose())
                     .cwiseProduct((f.a2.array() > 0.0).cast<double>().matrix());
    g.W2 = f.a1.transpose() * dA2;
    g.b2 = dA2.colwise().sum();
    Matrix dA1 = (dA2 * p.W2.transpose()).cwiseProduct((f.a1.array() > 0.0).cast<double>().matrix());
    g.W1 = f.x.transpose() * dA1;
    g.b1 = dA1.colwise().sum();
    return g;
}

namespace {

EncodedMatrix sliceRows(const EncodedMatrix& all, const std::vector<size_t>& order, size_t begin,
                        size_t end) {
    EncodedMatrix out;
    out.rows = end - begin;
    out.cols = all.cols;
    out.layout = all.layout;
    out.data.resize(out.rows * out.cols);
    for (size_t i = begin; i < end; ++i) {
        const size_t src = order[i];
        std::copy(all.data.begin() + src * all.cols, all.data.begin() + (src + 1) * all.cols,
                  out.data.begin() + (i - begin) * out.cols);
    }
    return out;
}

}  // namespace

TvaeModel tvaeFit(const Table& frame, const TrainConfig& config) {
    config.validate();
    const Table split = splitMissing(frame, config.seed);
    EncodeOptions options;
    options.modeNormalization = config.modeNormalization;
    const EncoderState state = fitEncoder(split, EncodeTarget::Tvae, options, config.seed);
    const EncodedMatrix all = encodeTable(split, state, config.seed ^ fnv1a64("tvae-encode"));

    TvaeModel model = tvaeInit(state, config.arch, config.seed);
    model.stochasticCategorical = config.stochasticCategorical;

    // Adam state
    TvaeParams m = model.params, v = model.params;
    m.forEachTensor([](auto& tensor) { tensor.setZero(); });
    v.forEachTensor([](auto& tensor) { tensor.setZero(); });
    int64_t step = 0;

    RngStream noiseRng(config.seed, fnv1a64("tvae-noise"));
    const size_t n = all.rows;
    const size_t batchSize = std::min<size_t>(static_cast<size_t>(config.batchSize), n);
    const int warmupEpochs = std::max(1, config.epochs / 10);

    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> noise;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        RngStream shuffleRng(config.seed, fnv1a64("tvae-shuffle") + static_cast<uint64_t>(epoch));
        shuffleRng.shuffle(order);
        const double klWeight =
            config.klWarmup
                ? std::min(1.0, static_cast<double>(epoch + 1) / static_cast<double>(warmupEpochs))
                : 1.0;

        EpochStats stats;
        stats.epoch = epoch;
        std::vector<double> dimKl(static_cast<size_t>(config.arch.latent), 0.0);
        size_t seen = 0;
        for (size_t begin = 0; begin < n; begin += batchSize) {
            const size_t end = std::min(n, begin + batchSize);
            const EncodedMatrix batch = sliceRows(all, order, begin, end);
            noise.resize(batch.rows * static_cast<size_t>(config.arch.latent));
            for (auto& value : noise) value = noiseRng.normal();

            TvaeLossValue loss;
            std::vector<double> batchDimKl;
            TvaeParams grads = tvaeGrad(model, batch, noise, klWeight, &loss, &batchDimKl);
            if (!std::isfinite(loss.total)) {
                throw NumericError("tvae: training diverged at epoch " + std::to_string(epoch));
            }
            const double weight = static_cast<double>(batch.rows);
            stats.total += loss.total * weight;
            stats.reconstruction += loss.reconstruction * weight;
            stats.kl += loss.kl * weight;
            for (size_t j = 0; j < batchDimKl.size(); ++j) dimKl[j] += batchDimKl[j] * weight;
            seen += batch.rows;

            ++step;
            const double correction1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
            const double correction2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
            auto adam = [&](auto& param, const auto& gradient, auto& mState, auto& vState) {
                const auto decayed = (gradient + config.weightDecay * param).eval();
                mState = config.beta1 * mState + (1.0 - config.beta1) * decayed;
                vState = (config.beta2 * vState.array() +
                          (1.0 - config.beta2) * decayed.array().square())
                             .matrix();
                param.array() -= config.learningRate * (mState.array() / correction1) /
                                 ((vState.array() / correction2).sqrt() + config.adamEpsilon);
            };
            adam(model.params.W1, grads.W1, m.W1, v.W1);
            adam(model.params.W2, grads.W2, m.W2, v.W2);
            adam(model.params.Wmu, grads.Wmu, m.Wmu, v.Wmu);
            adam(model.params.Wlv, grads.Wlv, m.Wlv, v.Wlv);
            adam(model.params.V1, grads.V1, m.V1, v.V1);
            adam(model.params.V2, grads.V2, m.V2, v.V2);
            adam(model.params.Wout, grads.Wout, m.Wout, v.Wout);
            adam(model.params.b1, grads.b1, m.b1, v.b1);
            adam(model.params.b2, grads.b2, m.b2, v.b2);
            adam(model.params.bmu, grads.bmu, m.bmu, v.bmu);
            adam(model.params.blv, grads.blv, m.blv, v.blv);
            adam(model.params.c1, grads.c1, m.c1, v.c1);
            adam(model.params.c2, grads.c2, m.c2, v.c2);
            adam(model.params.bout, grads.bout, m.bout, v.bout);
            adam(model.params.contLogVar, grads.contLogVar, m.contLogVar, v.contLogVar);
            model.params.contLogVar = model.params.contLogVar.cwiseMax(kLogVarFloor);
        }

        if (!model.params.allFinite()) {
            throw NumericError("tvae: non-finite parameters after epoch " + std::to_string(epoch));
        }
        stats.total /= static_cast<double>(seen);
        stats.reconstruction /= static_cast<double>(seen);
        stats.kl /= static_cast<double>(seen);
        for (double value : dimKl) {
            if (value / static_cast<double>(seen) > 0.01) stats.activeDims++;
        }
        model.trace.push_back(stats);
    }

    if (!config.lossTracePath.empty()) {
        std::ofstream out(config.lossTracePath, std::ios::trunc);
        if (!out) throw IoError("cannot write loss trace: " + config.lossTracePath);
        out << "epoch,total,reconstruction,kl,active_dims\n";
        for (const auto& stats : model.trace) {
            out << stats.epoch << ',' << stats.total << ',' << stats.reconstruction << ','
                << stats.kl << ',' << stats.activeDims << '\n';
        }
    }
    return model;
}

Table tvaeSample(const TvaeModel& model, size_t n, uint64_t seed) {
    if (n == 0) throw ConfigError("tvae_sample: n must be at least 1");
    const auto& p = model.params;
    RngStream rng(seed, fnv1a64("tvae-sample"));

    Matrix z(n, model.arch.latent);
    for (Eigen::Index r = 0; r < z.rows(); ++r) {
        for (Eigen::Index c = 0; c < z.cols(); ++c) z(r, c) = rng.normal();
    }
    const Matrix d1 = relu((z * p.V1).rowwise() + p.c1);
    const Matrix d2 = relu((d1 * p.V2).rowwise() + p.c2);
    const Matrix y = (d2 * p.Wout).rowwise() + p.bout;

    EncodedMatrix matrix;
    matrix.layout = buildLayout(model.encoder);
    matrix.rows = n;
    matrix.cols = model.inputDim;
    matrix.data.assign(n * model.inputDim, 0.0);

    auto emitCategorical = [&](size_t row, size_t offset, size_t width) {
        Eigen::Index pick = 0;
        if (model.stochasticCategorical) {
            // softmax sampling
            double maxLogit = -std::numeric_limits<double>::infinity();
            for (size_t k = 0; k < width; ++k) {
                maxLogit = std::max(maxLogit, y(static_cast<Eigen::Index>(row),
                                                static_cast<Eigen::Index>(offset + k)));
            }
            double total = 0.0;
            std::vector<double> probs(width);
            for (size_t k = 0; k < width; ++k) {
                probs[k] = std::exp(y(static_cast<Eigen::Index>(row),
                                      static_cast<Eigen::Index>(offset + k)) -
                                    maxLogit);
                total += probs[k];
            }
            double u = rng.uniform01() * total;
            for (size_t k = 0; k < width; ++k) {
                u -= probs[k];
                if (u <= 0.0) {
                    pick = static_cast<Eigen::Index>(k);
                    break;
                }
                pick = static_cast<Eigen::Index>(k);
            }
        } else {
            y.row(static_cast<Eigen::Index>(row))
                .segment(static_cast<Eigen::Index>(offset), static_cast<Eigen::Index>(width))
                .maxCoeff(&pick);
        }
        matrix.at(row, offset + static_cast<size_t>(pick)) = 1.0;
    };

    for (size_t r = 0; r < n; ++r) {
        for (const auto& head : model.heads) {
            if (head.continuous) {
                matrix.at(r, head.offset) =
                    y(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(head.offset));
                if (head.modeWidth > 0) emitCategorical(r, head.modeOffset, head.modeWidth);
            } else {
                emitCategorical(r, head.offset, head.width);
            }
        }
    }
    return decodeMatrix(matrix, model.encoder);
}

double tvaeGradCheck(uint64_t seed) {
    // toy 4-feature model: two continuous scalars plus a 2-category block
    std::vector<ColumnSchema> schema = {{"u", ColumnKind::Numeric, "", false},
                                        {"v", ColumnKind::Numeric, "", false},
                                        {"c", ColumnKind::Categorical, "", false}};
    Table toy(schema, 6);
    RngStream rng(seed, fnv1a64("gradcheck-data"));
    for (size_t r = 0; r < 6; ++r) {
        toy.setNumber(0, r, rng.normal());
        toy.setNumber(1, r, rng.normal() * 0.5 + 0.3);
        toy.setCategory(2, r, r % 2 == 0 ? "a" : "b");
    }
    const EncoderState state = fitEncoder(toy, EncodeTarget::Tvae);
    const EncodedMatrix batch = encodeTable(toy, state, 0);

    TvaeArchitecture arch;
    arch.hidden1 = 4;
    arch.hidden2 = 3;
    arch.latent = 2;
    TvaeModel model = tvaeInit(state, arch, seed);

    std::vector<double> noise(batch.rows * static_cast<size_t>(arch.latent));
    RngStream noiseRng(seed, fnv1a64("gradcheck-noise"));
    for (auto& value : noise) value = noiseRng.normal();

    const TvaeParams analytic = tvaeGrad(model, batch, noise);
    double worst = 0.0;
    const double h = 1e-5;
    auto check = [&](auto& param, const auto& grad) {
        for (Eigen::Index i = 0; i < param.rows(); ++i) {
            for (Eigen::Index j = 0; j < param.cols(); ++j) {
                const double original = param(i, j);
                param(i, j) = original + h;
                const double up = tvaeLoss(model, batch, noise).total;
                param(i, j) = original - h;
                const double down = tvaeLoss(model, batch, noise).total;
                param(i, j) = original;
                const double fd = (up - down) / (2.0 * h);
                const double a = grad(i, j);
                const double rel = std::abs(a - fd) / std::max({1e-3, std::abs(a), std::abs(fd)});
                worst = std::max(worst, rel);
            }
        }
    };
    TvaeParams& p = model.params;
    check(p.W1, analytic.W1);
    check(p.W2, analytic.W2);
    check(p.Wmu, analytic.Wmu);
    check(p.Wlv, analytic.Wlv);
    check(p.V1, analytic.V1);
    check(p.V2, analytic.V2);
    check(p.Wout, analytic.Wout);
    check(p.b1, analytic.b1);
    check(p.b2, analytic.b2);
    check(p.bmu, analytic.bmu);
    check(p.blv, analytic.blv);
    check(p.c1, analytic.c1);
    check(p.c2, analytic.c2);
    check(p.bout, analytic.bout);
    check(p.contLogVar, analytic.contLogVar);
    return worst;
}

namespace {

nlohmann::json matrixToJson(const Matrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrixFromJson(const nlohmann::json& doc) {
    const size_t rows = doc.size();
    const size_t cols = rows ? doc[0].size() : 0;
    Matrix m(rows, cols);
    for (size_t r = 0; r < rows; ++r) {
        for (size_t c = 0; c < cols; ++c) m(r, c) = doc[r][c].get<double>();
    }
    return m;
}

}  // namespace

nlohmann::json TvaeModel::toJson() const {
    nlohmann::json doc;
    doc["kind"] = "tvae";
    doc["encoder"] = encoder.toJson();
    doc["arch"] = {{"hidden1", arch.hidden1}, {"hidden2", arch.hidden2}, {"latent", arch.latent}};
    doc["stochastic_categorical"] = stochasticCategorical;
    doc["params"] = {{"W1", matrixToJson(params.W1)},   {"W2", matrixToJson(params.W2)},
                     {"Wmu", matrixToJson(params.Wmu)}, {"Wlv", matrixToJson(params.Wlv)},
                     {"V1", matrixToJson(params.V1)},   {"V2", matrixToJson(params.V2)},
                     {"Wout", matrixToJson(params.Wout)}};
    auto rowVec = [](const RowVector& v) {
        std::vector<double> out(v.data(), v.data() + v.size());
        return out;
    };
    doc["params"]["b1"] = rowVec(params.b1);
    doc["params"]["b2"] = rowVec(params.b2);
    doc["params"]["bmu"] = rowVec(params.bmu);
    doc["params"]["blv"] = rowVec(params.blv);
    doc["params"]["c1"] = rowVec(params.c1);
    doc["params"]["c2"] = rowVec(params.c2);
    doc["params"]["bout"] = rowVec(params.bout);
    doc["params"]["cont_log_var"] =
        std::vector<double>(params.contLogVar.data(),
                            params.contLogVar.data() + params.contLogVar.size());
    nlohmann::json trace = nlohmann::json::array();
    for (const auto& stats : this->trace) {
        trace.push_back({{"epoch", stats.epoch},
                         {"total", stats.total},
                         {"reconstruction", stats.reconstruction},
                         {"kl", stats.kl},
                         {"active_dims", stats.activeDims}});
    }
    doc["trace"] = std::move(trace);
    return doc;
}

TvaeModel TvaeModel::fromJson(const nlohmann::json& doc) {
    if (doc.value("kind", "") != std::string("tvae")) throw ParseError("not a tvae model file");
    TvaeModel model;
    model.encoder = EncoderState::fromJson(doc.at("encoder"));
    model.arch.hidden1 = doc.at("arch").at("hidden1").get<int>();
    model.arch.hidden2 = doc.at("arch").at("hidden2").get<int>();
    model.arch.latent = doc.at("arch").at("latent").get<int>();
    model.stochasticCategorical = doc.value("stochastic_categorical", false);
    model.heads = buildHeads(model.encoder);
    model.inputDim = buildLayout(model.encoder).size();
    const auto& params = doc.at("params");
    model.params.W1 = matrixFromJson(params.at("W1"));
    model.params.W2 = matrixFromJson(params.at("W2"));
    model.params.Wmu = matrixFromJson(params.at("Wmu"));
    model.params.Wlv = matrixFromJson(params.at("Wlv"));
    model.params.V1 = matrixFromJson(params.at("V1"));
    model.params.V2 = matrixFromJson(params.at("V2"));
    model.params.Wout = matrixFromJson(params.at("Wout"));
    auto rowVec = [](const nlohmann::json& doc) {
        RowVector v(doc.size());
        for (size_t i = 0; i < doc.size(); ++i) v(static_cast<Eigen::Index>(i)) = doc[i].get<double>();
        return v;
    };
    model.params.b1 = rowVec(params.at("b1"));
    model.params.b2 = rowVec(params.at("b2"));
    model.params.bmu = rowVec(params.at("bmu"));
    model.params.blv = rowVec(params.at("blv"));
    model.params.c1 = rowVec(params.at("c1"));
    model.params.c2 = rowVec(params.at("c2"));
    model.params.bout = rowVec(params.at("bout"));
    const auto logVar = params.at("cont_log_var").get<std::vector<double>>();
    model.params.contLogVar = Eigen::Map<const Eigen::VectorXd>(logVar.data(),
                                                                static_cast<Eigen::Index>(logVar.size()));
    for (const auto& stats : doc.value("trace", nlohmann::json::array())) {
        model.trace.push_back({stats.at("epoch").get<int>(), stats.at("total").get<double>(),
                               stats.at("reconstruction").get<double>(),
                               stats.at("kl").get<double>(), stats.at("active_dims").get<int>()});
    }
    return model;
}

void TvaeModel::save(const std::string& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write model file: " + path);
    out << toJson().dump() << "\n";
}

TvaeModel TvaeModel::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open model file: " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("model file: ") + e.what());
    }
    return fromJson(doc);
}

}  // namespace synthflight
