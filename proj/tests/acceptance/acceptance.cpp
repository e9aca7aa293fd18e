// Acceptance suite: one pass/fail line per criterion, every tolerance pinned
// in code. Exits non-zero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <vector>

#include "synthflight/copula.hpp"
#include "synthflight/evaluate.hpp"
#include "synthflight/mock.hpp"
#include "synthflight/pipeline.hpp"
#include "synthflight/reconstruct.hpp"
#include "synthflight/table_io.hpp"
#include "synthflight/tvae.hpp"

#include "../unit/helpers.hpp"

using namespace synthflight;

namespace {

int gFailures = 0;

class Criterion {
public:
    explicit Criterion(int id, std::string title) : id_(id), title_(std::move(title)) {
        start_ = std::chrono::steady_clock::now();
    }

    void check(bool ok, const std::string& what) {
        if (!ok) failures_.push_back(what);
    }

    template <typename T>
    void checkLe(T value, T bound, const std::string& what) {
        std::ostringstream os;
        os << what << " = " << value << " (bound " << bound << ")";
        check(value <= bound, os.str());
        notes_.push_back(os.str());
    }

    template <typename T>
    void checkGe(T value, T bound, const std::string& what) {
        std::ostringstream os;
        os << what << " = " << value << " (bound " << bound << ")";
        check(value >= bound, os.str());
        notes_.push_back(os.str());
    }

    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

    void checkRuntime(double limitSeconds) {
        std::ostringstream os;
        os.precision(1);
        os << std::fixed << "runtime " << seconds() << "s (limit " << limitSeconds << "s)";
        check(seconds() <= limitSeconds, os.str());
        notes_.push_back(os.str());
    }

    ~Criterion() {
        if (failures_.empty()) {
            std::printf("[PASS] criterion %d: %s", id_, title_.c_str());
            if (!notes_.empty()) std::printf(" -- %s", notes_.back().c_str());
            std::printf("\n");
        } else {
            ++gFailures;
            std::printf("[FAIL] criterion %d: %s\n", id_, title_.c_str());
            for (const auto& failure : failures_) {
                std::printf("       %s\n", failure.c_str());
            }
        }
        std::fflush(stdout);
    }

private:
    int id_;
    std::string title_;
    std::vector<std::string> failures_;
    std::vector<std::string> notes_;
    std::chrono::steady_clock::time_point start_;
};

std::string workDir() {
    const auto dir = std::filesystem::temp_directory_path() / "synthflight_acceptance";
    std::filesystem::create_directories(dir);
    return dir.string();
}

// ---------------------------------------------------------------------------
// 1. Encoder round trip
// ---------------------------------------------------------------------------
void criterion1() {
    Criterion c(1, "encoder round trip on 100 randomized mixed-type tables");
    double worstNumeric = 0.0;
    for (uint64_t trial = 0; trial < 100; ++trial) {
        const Table t = testkit::randomTable(9000 + trial, 500);
        const EncodeTarget target = trial % 2 == 0 ? EncodeTarget::Copula : EncodeTarget::Tvae;
        const Table split = splitMissing(t, trial);
        EncodeOptions options;
        options.modeNormalization = trial % 4 == 3;  // exercise the GMM path too
        const EncoderState state = fitEncoder(split, target, options, trial);
        const EncodedMatrix matrix = encodeTable(split, state, trial + 1);
        const Table back = decodeMatrix(matrix, state);

        bool ok = back.rowCount() == t.rowCount() && back.columnCount() == t.columnCount();
        for (size_t col = 0; ok && col < t.columnCount(); ++col) {
            for (size_t row = 0; ok && row < t.rowCount(); ++row) {
                if (back.isMissing(col, row) != t.isMissing(col, row)) {
                    ok = false;
                    break;
                }
                if (t.isMissing(col, row)) continue;
                switch (t.schemaAt(col).kind) {
                    case ColumnKind::Numeric: {
                        const double a = t.numberAt(col, row), b = back.numberAt(col, row);
                        const double rel = std::abs(a - b) / std::max(1.0, std::abs(a));
                        worstNumeric = std::max(worstNumeric, rel);
                        ok = rel <= 1e-9;
                        break;
                    }
                    case ColumnKind::Datetime:
                        ok = back.timestampAt(col, row) == t.timestampAt(col, row);
                        break;
                    case ColumnKind::Categorical:
                        ok = back.categoryAt(col, row) == t.categoryAt(col, row);
                        break;
                    case ColumnKind::Boolean:
                        ok = back.flagAt(col, row) == t.flagAt(col, row);
                        break;
                }
            }
        }
        c.check(ok, "table " + std::to_string(trial) + " failed to round trip");
        if (!ok) break;
    }
    {
        std::ostringstream os;
        os << "worst numeric rel err " << worstNumeric;
        c.check(worstNumeric <= 1e-9, os.str());
    }
    c.checkRuntime(30.0);
}

// ---------------------------------------------------------------------------
// 2. Numeric kernels
// ---------------------------------------------------------------------------
void criterion2() {
    Criterion c(2, "numeric kernels: normal CDF/quantile, Cholesky, PCA, KDE");
    // Phi round trip through the well-conditioned tail sign (p near 1 cannot
    // encode x tighter than ~1e-8 in a double)
    double worstPhi = 0.0;
    for (double x = 0.0; x <= 6.0; x += 0.0625) {
        worstPhi = std::max(worstPhi, std::abs(normalQuantile(normalCdf(-x)) + x));
    }
    c.checkLe(worstPhi, 1e-9, "Phi/Phi^-1 round trip err, |x| <= 6");

    // Cholesky reconstruction on random correlation-like matrices
    std::mt19937_64 rng(77);
    std::normal_distribution<double> gauss(0.0, 1.0);
    double worstChol = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const size_t d = 2 + trial % 4;
        std::vector<double> b(d * d);
        for (auto& v : b) v = gauss(rng);
        std::vector<double> a(d * d, 0.0);
        for (size_t i = 0; i < d; ++i) {
            for (size_t j = 0; j < d; ++j) {
                double sum = 0.0;
                for (size_t k = 0; k < d; ++k) sum += b[i * d + k] * b[j * d + k];
                a[i * d + j] = sum;
            }
        }
        for (size_t i = 0; i < d; ++i) a[i * d + i] += 0.1;
        const CorrelationMatrix factored = choleskyPsd(a, d);
        for (size_t i = 0; i < d; ++i) {
            for (size_t j = 0; j < d; ++j) {
                double sum = 0.0;
                for (size_t k = 0; k < d; ++k) {
                    sum += factored.chol[i * d + k] * factored.chol[j * d + k];
                }
                worstChol = std::max(worstChol, std::abs(sum - factored.at(i, j)));
            }
        }
    }
    c.checkLe(worstChol, 1e-10, "Cholesky reconstruction err");

    // power iteration vs closed-form eigenvalues on 200 random 2x2 / 3x3
    double worstEig = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const size_t d = trial % 2 ? 3 : 2;
        std::vector<double> b(d * d);
        for (auto& v : b) v = gauss(rng);
        std::vector<double> a(d * d, 0.0);
        for (size_t i = 0; i < d; ++i) {
            for (size_t j = 0; j < d; ++j) {
                double sum = 0.0;
                for (size_t k = 0; k < d; ++k) sum += b[i * d + k] * b[j * d + k];
                a[i * d + j] = sum;
            }
        }
        for (size_t i = 0; i < d; ++i) a[i * d + i] += 0.05;
        std::vector<double> v1, v2;
        double l1 = 0.0, l2 = 0.0;
        topTwoEigen(a, d, v1, l1, v2, l2);
        // closed-form eigenvalues via the characteristic polynomial
        std::vector<double> oracle;
        if (d == 2) {
            const double tr = a[0] + a[3];
            const double det = a[0] * a[3] - a[1] * a[2];
            const double disc = std::sqrt(std::max(0.0, tr * tr / 4.0 - det));
            oracle = {tr / 2.0 + disc, tr / 2.0 - disc};
        } else {
            const double q = (a[0] + a[4] + a[8]) / 3.0;
            double p2 = 0.0;
            for (size_t i = 0; i < 3; ++i) {
                for (size_t j = 0; j < 3; ++j) {
                    const double e = a[i * 3 + j] - (i == j ? q : 0.0);
                    p2 += e * e;
                }
            }
            const double p = std::sqrt(p2 / 6.0);
            double bb[9];
            for (size_t i = 0; i < 9; ++i) bb[i] = (a[i] - (i % 4 == 0 ? q : 0.0)) / p;
            const double detB = bb[0] * (bb[4] * bb[8] - bb[5] * bb[7]) -
                                bb[1] * (bb[3] * bb[8] - bb[5] * bb[6]) +
                                bb[2] * (bb[3] * bb[7] - bb[4] * bb[6]);
            const double r = std::clamp(detB / 2.0, -1.0, 1.0);
            const double phi = std::acos(r) / 3.0;
            const double e1 = q + 2.0 * p * std::cos(phi);
            const double e3 = q + 2.0 * p * std::cos(phi + 2.0 * M_PI / 3.0);
            oracle = {e1, 3.0 * q - e1 - e3, e3};
            std::sort(oracle.rbegin(), oracle.rend());
        }
        const double scale = std::max(1.0, oracle[0]);
        worstEig = std::max(worstEig, std::abs(l1 - oracle[0]) / scale);
        worstEig = std::max(worstEig, std::abs(l2 - oracle[1]) / scale);
    }
    c.checkLe(worstEig, 1e-6, "power iteration vs closed-form eigenvalues");

    // KDE quantile/cdf round trip inside the support
    std::vector<double> samples(1200);
    for (auto& v : samples) v = gauss(rng) * 2.5 + 1.0;
    const KdeMarginal kde = KdeMarginal::fit(samples);
    double worstKde = 0.0;
    for (double x = -5.0; x <= 7.0; x += 0.11) {
        worstKde = std::max(worstKde, std::abs(kde.quantile(kde.cdf(x)) - x));
    }
    c.checkLe(worstKde, 1e-6, "kde quantile(cdf(x)) round trip err");
}

// ---------------------------------------------------------------------------
// 3. Copula recovery
// ---------------------------------------------------------------------------
void criterion3() {
    Criterion c(3, "copula recovery of rho=0.7 dependence under exp marginals");
    const double rho = 0.7;
    RngStream rng(501, 0);
    std::vector<ColumnSchema> schema = {{"x", ColumnKind::Numeric, "", false},
                                        {"y", ColumnKind::Numeric, "", false}};
    Table fitData(schema, 5000);
    for (size_t r = 0; r < 5000; ++r) {
        const double a = rng.normal();
        const double b = rng.normal();
        fitData.setNumber(0, r, std::exp(a));
        fitData.setNumber(1, r, std::exp(rho * a + std::sqrt(1.0 - rho * rho) * b));
    }
    const FittedCopula model = gcFit(fitData, 77);
    const Table sampled = gcSample(model, 5000, 99);

    // normal scores of the sampled data through the fitted marginals
    std::vector<double> zx, zy;
    for (size_t r = 0; r < sampled.rowCount(); ++r) {
        zx.push_back(normalQuantile(model.marginals[0].cdf(sampled.numberAt(0, r))));
        zy.push_back(normalQuantile(model.marginals[1].cdf(sampled.numberAt(1, r))));
    }
    const double sampledRho = pearsonCorrelation(zx, zy);
    {
        std::ostringstream os;
        os << "sampled normal-scores correlation " << sampledRho << " vs 0.7";
        c.check(std::abs(sampledRho - rho) <= 0.05, os.str());
    }
    for (size_t col = 0; col < 2; ++col) {
        std::vector<double> fitValues, sampleValues;
        for (size_t r = 0; r < 5000; ++r) fitValues.push_back(fitData.numberAt(col, r));
        for (size_t r = 0; r < sampled.rowCount(); ++r) {
            sampleValues.push_back(sampled.numberAt(col, r));
        }
        const double ks = ksStatistic(fitValues, sampleValues);
        std::ostringstream os;
        os << "column " << col << " KS(fit, sampled) = " << ks;
        c.check(ks <= 0.05, os.str());
    }
    c.checkRuntime(120.0);
}

// ---------------------------------------------------------------------------
// 4. TVAE gradient check
// ---------------------------------------------------------------------------
void criterion4() {
    Criterion c(4, "tvae reverse-mode gradients vs central finite differences");
    const double worst = tvaeGradCheck(4242);
    c.checkLe(worst, 1e-4, "worst relative gradient disagreement");
    c.checkRuntime(10.0);
}

// ---------------------------------------------------------------------------
// 5. TVAE learning on the two-cluster toy
// ---------------------------------------------------------------------------
void criterion5() {
    Criterion c(5, "tvae learns the two-cluster toy (0 and 100, sigma 5)");
    std::vector<ColumnSchema> schema = {{"value", ColumnKind::Numeric, "", false}};
    Table toy(schema, 2000);
    RngStream rng(11, 0);
    for (size_t r = 0; r < 2000; ++r) {
        const double center = r % 2 == 0 ? 0.0 : 100.0;
        toy.setNumber(0, r, center + rng.normal() * 5.0);
    }
    TrainConfig config;
    config.epochs = 50;
    config.batchSize = 250;
    config.seed = 6;
    config.arch = {64, 64, 8};
    config.modeNormalization = true;  // the bimodal column is the GMM showcase
    const TvaeModel model = tvaeFit(toy, config);

    double early = 0.0, late = 0.0;
    for (int e = 0; e < 10; ++e) early += model.trace[e].total;
    for (int e = 40; e < 50; ++e) late += model.trace[e].total;
    {
        std::ostringstream os;
        os << "mean loss epochs 41-50 = " << late / 10.0 << " vs epochs 1-10 = " << early / 10.0;
        c.check(late < early, os.str());
    }

    const Table sampled = tvaeSample(model, 2000, 31);
    std::vector<double> low, high;
    for (size_t r = 0; r < sampled.rowCount(); ++r) {
        const double v = sampled.numberAt(0, r);
        (v < 50.0 ? low : high).push_back(v);
    }
    {
        std::ostringstream os;
        os << "cluster sizes " << low.size() << "/" << high.size();
        c.check(low.size() >= 200 && high.size() >= 200, os.str());
    }
    if (!low.empty() && !high.empty()) {
        const double meanLow = sampleMean(low);
        const double meanHigh = sampleMean(high);
        std::ostringstream os;
        os << "cluster means " << meanLow << " and " << meanHigh;
        c.check(std::abs(meanLow - 0.0) <= 2.5 && std::abs(meanHigh - 100.0) <= 2.5, os.str());
    }
    c.checkRuntime(180.0);
}

// ---------------------------------------------------------------------------
// 6. Metric oracles
// ---------------------------------------------------------------------------
void criterion6() {
    Criterion c(6, "metric oracles: KS brute force, TVD/contingency sums, RMSE >= MAE");
    RngStream rng(600, 0);
    auto ecdfKs = [](const std::vector<double>& a, const std::vector<double>& b) {
        double d = 0.0;
        auto ecdf = [](const std::vector<double>& v, double x) {
            size_t count = 0;
            for (double value : v) count += value <= x ? 1 : 0;
            return static_cast<double>(count) / static_cast<double>(v.size());
        };
        for (double x : a) d = std::max(d, std::abs(ecdf(a, x) - ecdf(b, x)));
        for (double x : b) d = std::max(d, std::abs(ecdf(a, x) - ecdf(b, x)));
        return d;
    };
    bool ksExact = true;
    for (int trial = 0; trial < 500 && ksExact; ++trial) {
        std::vector<double> a, b;
        const size_t na = 1 + rng.uniformIndex(50);
        const size_t nb = 1 + rng.uniformIndex(50);
        for (size_t i = 0; i < na; ++i) a.push_back(std::floor(rng.uniform(-8.0, 8.0)));
        for (size_t i = 0; i < nb; ++i) b.push_back(std::floor(rng.uniform(-8.0, 8.0)));
        ksExact = ksStatistic(a, b) == ecdfKs(a, b);
    }
    c.check(ksExact, "merged-sort KS != brute-force sup on some pair");

    bool tvdExact = true;
    const char* pool[] = {"a", "b", "c", "d"};
    for (int trial = 0; trial < 200 && tvdExact; ++trial) {
        std::vector<std::string> real, synth;
        const size_t nr = 1 + rng.uniformIndex(60);
        const size_t ns = 1 + rng.uniformIndex(60);
        for (size_t i = 0; i < nr; ++i) real.push_back(pool[rng.uniformIndex(4)]);
        for (size_t i = 0; i < ns; ++i) synth.push_back(pool[rng.uniformIndex(4)]);
        double l1 = 0.0;
        for (const char* cat : pool) {
            double p = 0.0, q = 0.0;
            for (const auto& v : real) p += v == cat ? 1.0 : 0.0;
            for (const auto& v : synth) q += v == cat ? 1.0 : 0.0;
            l1 += std::abs(p / static_cast<double>(nr) - q / static_cast<double>(ns));
        }
        tvdExact = tvdScore(real, synth) == 1.0 - 0.5 * l1;
    }
    c.check(tvdExact, "tvd_score != direct summation on some pair");

    bool contingencyExact = true;
    for (int trial = 0; trial < 200 && contingencyExact; ++trial) {
        std::vector<std::string> ra, rb, sa, sb;
        const size_t nr = 1 + rng.uniformIndex(60);
        const size_t ns = 1 + rng.uniformIndex(60);
        for (size_t i = 0; i < nr; ++i) {
            ra.push_back(pool[rng.uniformIndex(3)]);
            rb.push_back(pool[rng.uniformIndex(3)]);
        }
        for (size_t i = 0; i < ns; ++i) {
            sa.push_back(pool[rng.uniformIndex(3)]);
            sb.push_back(pool[rng.uniformIndex(3)]);
        }
        double l1 = 0.0;
        for (const char* x : pool) {
            for (const char* y : pool) {
                double p = 0.0, q = 0.0;
                for (size_t i = 0; i < nr; ++i) p += ra[i] == x && rb[i] == y ? 1.0 : 0.0;
                for (size_t i = 0; i < ns; ++i) q += sa[i] == x && sb[i] == y ? 1.0 : 0.0;
                l1 += std::abs(p / static_cast<double>(nr) - q / static_cast<double>(ns));
            }
        }
        contingencyExact = contingencySimilarity(ra, rb, sa, sb) == 1.0 - 0.5 * l1;
    }
    c.check(contingencyExact, "contingency_similarity != joint summation on some pair");

    bool rmseDominates = true;
    for (int trial = 0; trial < 1000 && rmseDominates; ++trial) {
        std::vector<double> predictions, truth;
        const size_t n = 2 + rng.uniformIndex(30);
        for (size_t i = 0; i < n; ++i) {
            predictions.push_back(rng.normal() * 5.0);
            truth.push_back(rng.normal());
        }
        const auto metrics = regressionMetrics(predictions, truth);
        rmseDominates = metrics.rmse >= metrics.mae;
    }
    c.check(rmseDominates, "found predictions with RMSE < MAE");
}

// ---------------------------------------------------------------------------
// Shared mock corpus for criteria 7-10
// ---------------------------------------------------------------------------
Table buildMockFull(size_t rows, uint64_t seed, const std::string& tag, MockFiles* filesOut) {
    MockConfig config;
    config.rows = rows;
    config.seed = seed;
    const MockFiles files = writeMockData(workDir() + "/" + tag, config);
    if (filesOut) *filesOut = files;
    const AirportDirectory airports = AirportDirectory::loadCsv(files.airportsCsv);
    const Table raw = readRawFlights(files.rawCsv);
    return engineerFeatures(localizeAndConvert(raw, airports), airports);
}

// ---------------------------------------------------------------------------
// 7. Fidelity calibration
// ---------------------------------------------------------------------------
void criterion7() {
    Criterion c(7, "fidelity calibration: chance on identical halves, certainty on noise");
    const Table full = buildMockFull(4000, 70, "c7", nullptr);
    RngStream rng(71, 0);
    const auto firstIdx = rng.sampleWithoutReplacement(full.rowCount(), full.rowCount() / 2);
    std::vector<uint8_t> inFirst(full.rowCount(), 0);
    for (size_t idx : firstIdx) inFirst[idx] = 1;
    std::vector<uint8_t> inSecond(full.rowCount());
    for (size_t r = 0; r < full.rowCount(); ++r) inSecond[r] = inFirst[r] ? 0 : 1;
    const Table half1 = full.filterRows(inFirst);
    const Table half2 = full.filterRows(inSecond);

    std::vector<ClassifierSpec> specs;
    for (ClassifierKind kind : allClassifiers()) specs.push_back({kind, {}, 7});
    const FidelitySection halves = fidelityStage(half1, half2, specs, 72);
    {
        std::ostringstream os;
        os << "identical-halves average accuracy " << halves.averageAccuracy;
        c.check(halves.averageAccuracy >= 0.45 && halves.averageAccuracy <= 0.55, os.str());
    }

    // uniform noise inside each column's observed range
    Table noise = half2;
    RngStream noiseRng(73, 0);
    for (size_t col = 0; col < noise.columnCount(); ++col) {
        const auto kind = noise.schemaAt(col).kind;
        if (kind == ColumnKind::Numeric || kind == ColumnKind::Datetime) {
            double lo = 1e300, hi = -1e300;
            for (size_t r = 0; r < half1.rowCount(); ++r) {
                if (half1.isMissing(col, r)) continue;
                const double v = kind == ColumnKind::Numeric
                                     ? half1.numberAt(col, r)
                                     : static_cast<double>(half1.timestampAt(col, r));
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            for (size_t r = 0; r < noise.rowCount(); ++r) {
                if (noise.isMissing(col, r)) continue;
                const double v = noiseRng.uniform(lo, hi);
                if (kind == ColumnKind::Numeric) {
                    noise.setNumber(col, r, v);
                } else {
                    noise.setTimestamp(col, r, static_cast<int64_t>(v));
                }
            }
        }
    }
    const FidelitySection separable = fidelityStage(half1, noise, specs, 74);
    {
        std::ostringstream os;
        os << "real-vs-noise average accuracy " << separable.averageAccuracy;
        c.check(separable.averageAccuracy >= 0.95, os.str());
    }
}

// ---------------------------------------------------------------------------
// 8. Utility sanity
// ---------------------------------------------------------------------------
void criterion8() {
    Criterion c(8, "utility sanity: TSTR == TRTR on real-train, planted linear target");
    const Table full = buildMockFull(3000, 80, "c8", nullptr);

    std::vector<std::string> columns = predictionFeatures();
    columns.push_back(kPredictionTarget);
    const Table view = full.selectColumns(columns);
    std::vector<uint8_t> complete(view.rowCount(), 1);
    for (size_t r = 0; r < view.rowCount(); ++r) {
        for (size_t col = 0; col < view.columnCount(); ++col) {
            if (view.isMissing(col, r)) {
                complete[r] = 0;
                break;
            }
        }
    }
    const Table realComplete = view.filterRows(complete);

    const uint64_t seed = 88;
    RngStream splitRng(seed, fnv1a64("utility-split"));
    const size_t holdoutCount = std::max<size_t>(1, realComplete.rowCount() / 5);
    const auto holdoutIdx = splitRng.sampleWithoutReplacement(realComplete.rowCount(), holdoutCount);
    std::vector<uint8_t> isTrain(realComplete.rowCount(), 1);
    for (size_t idx : holdoutIdx) isTrain[idx] = 0;
    const Table syntheticTrain = realComplete.filterRows(isTrain);

    std::vector<RegressorSpec> specs;
    for (RegressorKind kind : allRegressors()) specs.push_back({kind, {}, 8});
    const UtilitySection identical = utilityStage(full, syntheticTrain, specs, seed);
    bool allEqual = true;
    for (const auto& entry : identical.perRegressor) {
        if (entry.failed || entry.trtr.mae != entry.tstr.mae || entry.trtr.rmse != entry.tstr.rmse ||
            entry.trtr.r2 != entry.tstr.r2) {
            allEqual = false;
            c.check(false, "regressor " + entry.regressor + " TSTR != TRTR" +
                               (entry.failed ? " (failed: " + entry.error + ")" : ""));
        }
    }
    c.check(allEqual, "TSTR must equal TRTR exactly when synthetic == real-train");

    // planted linear target: y = X beta + eps over numeric prediction features
    Table planted = full;
    RngStream eps(81, 0);
    const size_t target = planted.columnIndex(kPredictionTarget);
    for (size_t r = 0; r < planted.rowCount(); ++r) {
        if (planted.isMissing(planted.columnIndex(col::kDepDelta), r) ||
            planted.isMissing(planted.columnIndex(col::kTaxiOut), r)) {
            continue;
        }
        const double y = 0.9 * planted.numberAt(planted.columnIndex(col::kDepDelta), r) +
                         0.5 * planted.numberAt(planted.columnIndex(col::kTaxiOut), r) +
                         0.01 * planted.numberAt(planted.columnIndex(col::kDistance), r) +
                         0.05 * planted.numberAt(planted.columnIndex(col::kSchedElapsed), r) +
                         eps.normal() * 2.0;
        planted.setNumber(target, r, y);
    }
    // oracle generator: seeded bootstrap resample of the real rows
    RngStream boot(82, 0);
    std::vector<uint8_t> keep(planted.rowCount(), 0);
    Table resampled(planted.schema(), 0);
    {
        std::vector<uint8_t> pickMask(planted.rowCount(), 0);
        const auto picks = boot.sampleWithoutReplacement(planted.rowCount(),
                                                         planted.rowCount() * 3 / 4);
        for (size_t idx : picks) pickMask[idx] = 1;
        resampled = planted.filterRows(pickMask);
    }
    const UtilitySection plantedResult = utilityStage(planted, resampled, specs, 89);
    {
        std::ostringstream os;
        os << "planted-linear TSTR R2 " << plantedResult.tstrAverage.r2 << " vs TRTR R2 "
           << plantedResult.trtrAverage.r2;
        c.check(std::abs(plantedResult.tstrAverage.r2 - plantedResult.trtrAverage.r2) <= 0.05,
                os.str());
    }
    (void)keep;
}

// ---------------------------------------------------------------------------
// 9. End-to-end preset-5 analogue on 5000 mock flights
// ---------------------------------------------------------------------------
void criterion9() {
    Criterion c(9, "preset-5 analogue: GC on 5000 mock flights, full pipeline");
    MockFiles files;
    MockConfig mockConfig;
    mockConfig.rows = 5000;
    mockConfig.seed = 90;
    files = writeMockData(workDir() + "/c9", mockConfig);

    ExperimentConfig config = ExperimentConfig::fromPreset(5);
    config.seed = 91;
    config.rawPath = files.rawCsv;
    config.airportsPath = files.airportsCsv;
    config.outDir = workDir() + "/c9/out";
    const PipelineResult result = runPipeline(config);

    nlohmann::json report;
    {
        std::ifstream in(config.outDir + "/evaluation/report.json");
        in >> report;
    }
    const double statisticalAverage = report["statistical"]["average"].get<double>();
    c.checkGe(statisticalAverage, 0.85, "statistical average");
    const double fidelityAccuracy = report["fidelity"]["average_accuracy"].get<double>();
    c.checkLe(fidelityAccuracy, 0.80, "fidelity average accuracy");

    nlohmann::json cleaning;
    {
        std::ifstream in(config.outDir + "/cleaning_report.json");
        in >> cleaning;
    }
    const size_t input = cleaning["input_rows"].get<size_t>();
    const size_t output = cleaning["output_rows"].get<size_t>();
    const size_t dropped = cleaning["route_rejected"].get<size_t>() +
                           cleaning["negative_duration"].get<size_t>() +
                           cleaning["elapsed_inconsistent"].get<size_t>() +
                           cleaning["speed_implausible"].get<size_t>();
    c.check(input == output + dropped, "cleaning report accounting must balance");

    const Table cleaned = readTableAuto(config.outDir + "/synthetic_cleaned.csv");
    const RouteDirectory routes = RouteDirectory::loadCsv(config.outDir + "/routes.csv");
    bool allRoutesValid = true;
    for (size_t r = 0; r < cleaned.rowCount(); ++r) {
        if (!routes.contains(cleaned.categoryAt(cleaned.columnIndex(col::kOriginId), r),
                             cleaned.categoryAt(cleaned.columnIndex(col::kDestId), r))) {
            allRoutesValid = false;
            break;
        }
    }
    c.check(allRoutesValid, "every surviving route must exist in the directory");
    {
        std::ostringstream os;
        os << "cleaned rows " << output << " of " << input;
        c.check(output > 0, os.str());
    }
    c.checkRuntime(600.0);
}

// ---------------------------------------------------------------------------
// 10. End-to-end preset-3 analogue on 20000 mock flights
// ---------------------------------------------------------------------------
void criterion10() {
    Criterion c(10, "preset-3 analogue: TVAE on 20000 mock flights, 100 epochs");
    MockFiles files;
    MockConfig mockConfig;
    mockConfig.rows = 20000;
    mockConfig.seed = 100;
    files = writeMockData(workDir() + "/c10", mockConfig);

    ExperimentConfig config = ExperimentConfig::fromPreset(3);
    config.seed = 101;
    config.tvae.epochs = 100;
    config.tvae.modeNormalization = true;
    config.tvae.stochasticCategorical = true;
    config.rawPath = files.rawCsv;
    config.airportsPath = files.airportsCsv;
    config.outDir = workDir() + "/c10/out";
    config.sampleCount = 20000;
    const auto trainStart = std::chrono::steady_clock::now();
    const PipelineResult result = runPipeline(config);
    const double totalSeconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - trainStart).count();
    {
        std::ostringstream os;
        os << "pipeline with 100-epoch training took " << totalSeconds << "s";
        c.check(totalSeconds <= 1200.0, os.str());
    }

    const Table cleaned = readTableAuto(config.outDir + "/synthetic_cleaned.csv");
    const RouteDirectory routes = RouteDirectory::loadCsv(config.outDir + "/routes.csv");

    // every historical route appears at least once in the cleaned output
    std::map<std::pair<std::string, std::string>, size_t> seen;
    for (size_t r = 0; r < cleaned.rowCount(); ++r) {
        seen[{cleaned.categoryAt(cleaned.columnIndex(col::kOriginId), r),
              cleaned.categoryAt(cleaned.columnIndex(col::kDestId), r)}]++;
    }
    size_t missing = 0;
    for (const auto& [route, distance] : routes.all()) {
        if (!seen.count(route)) ++missing;
    }
    {
        std::ostringstream os;
        os << "routes covered " << routes.size() - missing << " of " << routes.size();
        c.check(missing == 0, os.str());
    }

    nlohmann::json report;
    {
        std::ifstream in(config.outDir + "/evaluation/report.json");
        in >> report;
    }
    const double gap = report["diversity"]["max_balance_gap_pct"].get<double>();
    c.checkLe(gap, 10.0, "delay-label class balance gap (pct points)");
    (void)result;
}

}  // namespace

int main() {
    std::printf("synthflight acceptance suite\n");
    criterion1();
    criterion2();
    criterion3();
    criterion4();
    criterion5();
    criterion6();
    criterion7();
    criterion8();
    criterion9();
    criterion10();
    if (gFailures == 0) {
        std::printf("all criteria passed\n");
        return 0;
    }
    std::printf("%d criteria failed\n", gFailures);
    return 1;
}
