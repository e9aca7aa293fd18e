#include "synthflight/numkit.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace synthflight {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;
constexpr double kInvSqrt2Pi = 0.3989422804014327;
constexpr double kKernelCutoff = 8.0;  // Phi(8) == 1 within 1e-15

uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

}  // namespace

RngStream::RngStream(uint64_t seed, uint64_t streamId) {
    uint64_t state = seed;
    const uint64_t a = splitmix64(state);
    state ^= streamId * 0xD1342543DE82EF95ull + 0x2545F4914F6CDD1Dull;
    const uint64_t b = splitmix64(state);
    engine_.seed(a ^ (b + 0x9E3779B97F4A7C15ull));
}

double RngStream::uniform01() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

double RngStream::normal() { return normalQuantile(uniform01()); }

uint64_t RngStream::uniformIndex(uint64_t n) {
    if (n == 0) throw ConfigError("uniformIndex: empty range");
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t x;
    do {
        x = engine_();
    } while (x >= limit);
    return x % n;
}

std::vector<size_t> RngStream::sampleWithoutReplacement(size_t population, size_t count) {
    if (count > population) throw ConfigError("subsample larger than population");
    std::vector<size_t> out;
    out.reserve(count);
    size_t needed = count;
    for (size_t i = 0; i < population && needed > 0; ++i) {
        const size_t remaining = population - i;
        if (uniformIndex(remaining) < needed) {
            out.push_back(i);
            --needed;
        }
    }
    return out;
}

uint64_t fnv1a64(const std::string& text) {
    uint64_t hash = 0xCBF29CE484222325ull;
    for (unsigned char c : text) {
        hash ^= c;
        hash *= 0x100000001B3ull;
    }
    return hash;
}

double normalCdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

double normalPdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double normalQuantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw NumericError("normalQuantile: p must be inside (0,1), got " + std::to_string(p));
    }
    // Acklam's rational approximation, then one Halley refinement against the
    // erfc-based CDF.
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double pLow = 0.02425;

    double x;
    if (p < pLow) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - pLow) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (std::abs(x) < 8.0) {
        const double err = normalCdf(x) - p;
        const double u = err / normalPdf(x);
        x -= u / (1.0 + 0.5 * x * u);
    }
    return x;
}

double sampleMean(const std::vector<double>& values) {
    double sum = 0.0;
    for (double v : values) sum += v;
    return values.empty() ? 0.0 : sum / static_cast<double>(values.size());
}

double sampleStd(const std::vector<double>& values) {
    if (values.size() < 2) return 0.0;
    const double mean = sampleMean(values);
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

KdeMarginal KdeMarginal::fit(const std::vector<double>& samples) {
    if (samples.size() < 2) throw NumericError("KDE fit needs at least 2 samples");
    for (double v : samples) {
        if (!std::isfinite(v)) throw NumericError("KDE fit: non-finite sample");
    }
    KdeMarginal kde;
    kde.sorted_ = samples;
    std::sort(kde.sorted_.begin(), kde.sorted_.end());
    const double sigma = sampleStd(samples);
    const double n = static_cast<double>(samples.size());
    // Silverman's robust rule of thumb. The IQR term keeps heavy-tailed
    // columns (delays, lognormal-like durations) from being oversmoothed.
    const size_t last = kde.sorted_.size() - 1;
    const double iqr = kde.sorted_[last * 3 / 4] - kde.sorted_[last / 4];
    double spread = sigma;
    if (iqr > 0.0) spread = std::min(spread, iqr / 1.34);
    kde.bandwidth_ = spread > 0.0 ? 0.9 * spread * std::pow(n, -0.2) : 1e-6;
    kde.lo_ = kde.sorted_.front() - 3.0 * kde.bandwidth_;
    kde.hi_ = kde.sorted_.back() + 3.0 * kde.bandwidth_;
    kde.buildQuantileGrid();
    return kde;
}

KdeMarginal KdeMarginal::fromParts(std::vector<double> sortedSamples, double bandwidth) {
    if (sortedSamples.size() < 2 || bandwidth <= 0.0) {
        throw NumericError("invalid KDE parts");
    }
    KdeMarginal kde;
    kde.sorted_ = std::move(sortedSamples);
    kde.bandwidth_ = bandwidth;
    kde.lo_ = kde.sorted_.front() - 3.0 * bandwidth;
    kde.hi_ = kde.sorted_.back() + 3.0 * bandwidth;
    kde.buildQuantileGrid();
    return kde;
}

double KdeMarginal::cdf(double x) const {
    const double h = bandwidth_;
    const size_t n = sorted_.size();
    // Samples far below x contribute 1 each, far above contribute 0; only a
    // +-8h window needs kernel evaluations.
    const auto below = std::lower_bound(sorted_.begin(), sorted_.end(), x - kKernelCutoff * h);
    const auto above = std::upper_bound(below, sorted_.end(), x + kKernelCutoff * h);
    double sum = static_cast<double>(below - sorted_.begin());
    for (auto it = below; it != above; ++it) {
        sum += normalCdf((x - *it) / h);
    }
    const double value = sum / static_cast<double>(n);
    return std::min(1.0 - 1e-6, std::max(1e-6, value));
}

void KdeMarginal::buildQuantileGrid() {
    constexpr size_t kGridPoints = 513;
    gridX_.resize(kGridPoints);
    gridU_.resize(kGridPoints);
    const double step = (hi_ - lo_) / static_cast<double>(kGridPoints - 1);
    for (size_t i = 0; i < kGridPoints; ++i) {
        gridX_[i] = lo_ + step * static_cast<double>(i);
        gridU_[i] = cdf(gridX_[i]);
    }
}

double KdeMarginal::quantile(double u) const {
    double lo = lo_, hi = hi_;
    const double uLo = cdf(lo), uHi = cdf(hi);
    if (u <= uLo) return lo;
    if (u >= uHi) return hi;
    // Tighten the bracket from the precomputed grid before bisecting.
    const auto it = std::lower_bound(gridU_.begin(), gridU_.end(), u);
    if (it != gridU_.begin() && it != gridU_.end()) {
        const size_t idx = static_cast<size_t>(it - gridU_.begin());
        lo = gridX_[idx - 1];
        hi = gridX_[idx];
    }
    double mid = 0.5 * (lo + hi);
    for (int iter = 0; iter < 200; ++iter) {
        mid = 0.5 * (lo + hi);
        const double c = cdf(mid);
        if (hi - lo <= 1e-9 * (1.0 + std::abs(mid)) && std::abs(c - u) <= 1e-8) break;
        if (hi - lo <= 1e-13 * (1.0 + std::abs(mid))) break;  // resolution floor
        if (c < u) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return mid;
}

std::vector<double> choleskyLower(const std::vector<double>& matrix, size_t dim,
                                  double relativePivotFloor) {
    std::vector<double> lower(dim * dim, 0.0);
    for (size_t i = 0; i < dim; ++i) {
        for (size_t j = 0; j <= i; ++j) {
            double sum = matrix[i * dim + j];
            for (size_t k = 0; k < j; ++k) sum -= lower[i * dim + k] * lower[j * dim + k];
            if (i == j) {
                if (!(sum > relativePivotFloor * std::abs(matrix[i * dim + i]))) {
                    throw NumericError("matrix is not positive definite (pivot " +
                                       std::to_string(sum) + " at " + std::to_string(i) + ")");
                }
                lower[i * dim + i] = std::sqrt(sum);
            } else {
                lower[i * dim + j] = sum / lower[j * dim + j];
            }
        }
    }
    return lower;
}

void symmetricEigen(const std::vector<double>& matrix, size_t dim, std::vector<double>& values,
                    std::vector<double>& vectors) {
    std::vector<double> a = matrix;
    vectors.assign(dim * dim, 0.0);
    for (size_t i = 0; i < dim; ++i) vectors[i * dim + i] = 1.0;

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (size_t i = 0; i < dim; ++i) {
            for (size_t j = i + 1; j < dim; ++j) off += a[i * dim + j] * a[i * dim + j];
        }
        if (off < 1e-24) break;
        for (size_t p = 0; p < dim; ++p) {
            for (size_t q = p + 1; q < dim; ++q) {
                const double apq = a[p * dim + q];
                if (std::abs(apq) < 1e-300) continue;
                const double app = a[p * dim + p];
                const double aqq = a[q * dim + q];
                const double tau = (aqq - app) / (2.0 * apq);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double cos = 1.0 / std::sqrt(1.0 + t * t);
                const double sin = t * cos;
                for (size_t k = 0; k < dim; ++k) {
                    const double akp = a[k * dim + p];
                    const double akq = a[k * dim + q];
                    a[k * dim + p] = cos * akp - sin * akq;
                    a[k * dim + q] = sin * akp + cos * akq;
                }
                for (size_t k = 0; k < dim; ++k) {
                    const double apk = a[p * dim + k];
                    const double aqk = a[q * dim + k];
                    a[p * dim + k] = cos * apk - sin * aqk;
                    a[q * dim + k] = sin * apk + cos * aqk;
                }
                for (size_t k = 0; k < dim; ++k) {
                    const double vkp = vectors[k * dim + p];
                    const double vkq = vectors[k * dim + q];
                    vectors[k * dim + p] = cos * vkp - sin * vkq;
                    vectors[k * dim + q] = sin * vkp + cos * vkq;
                }
            }
        }
    }
    values.resize(dim);
    for (size_t i = 0; i < dim; ++i) values[i] = a[i * dim + i];

    std::vector<size_t> order(dim);
    for (size_t i = 0; i < dim; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](size_t x, size_t y) { return values[x] > values[y]; });
    std::vector<double> sortedValues(dim);
    std::vector<double> sortedVectors(dim * dim);
    for (size_t c = 0; c < dim; ++c) {
        sortedValues[c] = values[order[c]];
        for (size_t r = 0; r < dim; ++r) sortedVectors[r * dim + c] = vectors[r * dim + order[c]];
    }
    values = std::move(sortedValues);
    vectors = std::move(sortedVectors);
}

CorrelationMatrix choleskyPsd(const std::vector<double>& symmetric, size_t dim) {
    if (symmetric.size() != dim * dim) throw NumericError("choleskyPsd: bad dimensions");
    for (size_t i = 0; i < dim; ++i) {
        for (size_t j = i + 1; j < dim; ++j) {
            if (std::abs(symmetric[i * dim + j] - symmetric[j * dim + i]) > 1e-10) {
                throw NumericError("choleskyPsd: matrix is not symmetric");
            }
        }
    }
    CorrelationMatrix out;
    out.dim = dim;
    out.theta.resize(dim * dim);
    for (size_t i = 0; i < dim; ++i) {
        for (size_t j = 0; j < dim; ++j) {
            out.theta[i * dim + j] = 0.5 * (symmetric[i * dim + j] + symmetric[j * dim + i]);
        }
    }
    try {
        out.chol = choleskyLower(out.theta, dim);
        return out;
    } catch (const NumericError&) {
        // fall through to PSD repair
    }
    std::vector<double> values, vectors;
    symmetricEigen(out.theta, dim, values, vectors);
    for (double& v : values) v = std::max(v, 1e-6);
    std::vector<double> repaired(dim * dim, 0.0);
    for (size_t i = 0; i < dim; ++i) {
        for (size_t j = 0; j < dim; ++j) {
            double sum = 0.0;
            for (size_t k = 0; k < dim; ++k) {
                sum += vectors[i * dim + k] * values[k] * vectors[j * dim + k];
            }
            repaired[i * dim + j] = sum;
        }
    }
    // rescale to unit diagonal
    std::vector<double> scale(dim);
    for (size_t i = 0; i < dim; ++i) scale[i] = 1.0 / std::sqrt(repaired[i * dim + i]);
    for (size_t i = 0; i < dim; ++i) {
        for (size_t j = 0; j < dim; ++j) {
            repaired[i * dim + j] *= scale[i] * scale[j];
        }
        repaired[i * dim + i] = 1.0;
    }
    for (size_t i = 0; i < dim; ++i) {
        for (size_t j = i + 1; j < dim; ++j) {
            const double avg = 0.5 * (repaired[i * dim + j] + repaired[j * dim + i]);
            repaired[i * dim + j] = avg;
            repaired[j * dim + i] = avg;
        }
    }
    out.theta = repaired;
    out.repaired = true;
    try {
        out.chol = choleskyLower(out.theta, dim);
    } catch (const NumericError&) {
        // clipping plus rescaling can leave a marginally indefinite matrix;
        // shrink toward the identity until it factors
        for (double blend = 1e-8; blend < 1e-2; blend *= 10.0) {
            std::vector<double> shrunk = out.theta;
            for (size_t i = 0; i < dim; ++i) {
                for (size_t j = 0; j < dim; ++j) {
                    shrunk[i * dim + j] = i == j ? 1.0 : shrunk[i * dim + j] * (1.0 - blend);
                }
            }
            try {
                out.chol = choleskyLower(shrunk, dim);
                out.theta = shrunk;
                return out;
            } catch (const NumericError&) {
            }
        }
        throw;
    }
    return out;
}

double pearsonCorrelation(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw NumericError("pearsonCorrelation: need two equal-length vectors, n >= 2");
    }
    const double mx = sampleMean(x);
    const double my = sampleMean(y);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

namespace {

// Power iteration for the dominant eigenpair of a PSD matrix.
void dominantEigen(const std::vector<double>& matrix, size_t dim, std::vector<double>& vector,
                   double& value) {
    std::vector<std::vector<double>> starts;
    starts.emplace_back(dim, 1.0 / std::sqrt(static_cast<double>(dim)));
    for (size_t j = 0; j < dim && starts.size() < 4; ++j) {
        std::vector<double> e(dim, 0.0);
        e[j] = 1.0;
        starts.push_back(std::move(e));
    }
    for (auto& v : starts) {
        std::vector<double> w(dim);
        double lambda = 0.0;
        bool usable = false;
        for (int iter = 0; iter < 1000; ++iter) {
            for (size_t i = 0; i < dim; ++i) {
                double sum = 0.0;
                for (size_t j = 0; j < dim; ++j) sum += matrix[i * dim + j] * v[j];
                w[i] = sum;
            }
            double norm = 0.0;
            for (double wi : w) norm += wi * wi;
            norm = std::sqrt(norm);
            if (norm < 1e-14) break;  // start vector is in the null space
            double delta = 0.0;
            for (size_t i = 0; i < dim; ++i) {
                const double next = w[i] / norm;
                delta = std::max(delta, std::abs(next - v[i]));
                v[i] = next;
            }
            lambda = norm;
            usable = true;
            if (delta < 1e-10) break;
        }
        if (usable) {
            vector = v;
            value = lambda;
            return;
        }
    }
    // null matrix: any unit vector is an eigenvector with eigenvalue 0
    vector.assign(dim, 0.0);
    vector[0] = 1.0;
    value = 0.0;
}

void applySignConvention(std::vector<double>& v) {
    size_t arg = 0;
    for (size_t i = 1; i < v.size(); ++i) {
        if (std::abs(v[i]) > std::abs(v[arg])) arg = i;
    }
    if (v[arg] < 0.0) {
        for (double& x : v) x = -x;
    }
}

}  // namespace

void topTwoEigen(const std::vector<double>& psd, size_t dim, std::vector<double>& v1,
                 double& lambda1, std::vector<double>& v2, double& lambda2) {
    if (psd.size() != dim * dim || dim < 2) throw NumericError("topTwoEigen: bad dimensions");
    dominantEigen(psd, dim, v1, lambda1);
    std::vector<double> deflated = psd;
    for (size_t a = 0; a < dim; ++a) {
        for (size_t b = 0; b < dim; ++b) deflated[a * dim + b] -= lambda1 * v1[a] * v1[b];
    }
    dominantEigen(deflated, dim, v2, lambda2);
    double dot = 0.0;
    for (size_t a = 0; a < dim; ++a) dot += v1[a] * v2[a];
    double norm = 0.0;
    for (size_t a = 0; a < dim; ++a) {
        v2[a] -= dot * v1[a];
        norm += v2[a] * v2[a];
    }
    norm = std::sqrt(norm);
    if (norm > 1e-12) {
        for (double& x : v2) x /= norm;
    }
    applySignConvention(v1);
    applySignConvention(v2);
}

PcaModel pcaFit(const std::vector<double>& matrix, size_t rows, size_t cols) {
    if (rows < 3 || cols < 2) throw NumericError("pcaFit: need at least 3 rows and 2 columns");
    if (matrix.size() != rows * cols) throw NumericError("pcaFit: bad dimensions");

    PcaModel model;
    model.means.assign(cols, 0.0);
    model.scales.assign(cols, 0.0);
    for (size_t j = 0; j < cols; ++j) {
        double sum = 0.0;
        for (size_t i = 0; i < rows; ++i) sum += matrix[i * cols + j];
        model.means[j] = sum / static_cast<double>(rows);
        double ss = 0.0;
        for (size_t i = 0; i < rows; ++i) {
            const double d = matrix[i * cols + j] - model.means[j];
            ss += d * d;
        }
        const double sd = std::sqrt(ss / static_cast<double>(rows - 1));
        model.scales[j] = sd > 1e-12 ? sd : 0.0;  // 0 marks a dropped constant column
    }
    std::vector<size_t> kept;
    for (size_t j = 0; j < cols; ++j) {
        if (model.scales[j] > 0.0) kept.push_back(j);
    }
    const size_t k = kept.size();
    if (k < 2) throw NumericError("pcaFit: fewer than 2 non-constant columns");

    std::vector<double> corr(k * k, 0.0);
    for (size_t a = 0; a < k; ++a) {
        for (size_t b = a; b < k; ++b) {
            double sum = 0.0;
            const size_t ja = kept[a], jb = kept[b];
            for (size_t i = 0; i < rows; ++i) {
                const double za = (matrix[i * cols + ja] - model.means[ja]) / model.scales[ja];
                const double zb = (matrix[i * cols + jb] - model.means[jb]) / model.scales[jb];
                sum += za * zb;
            }
            corr[a * k + b] = corr[b * k + a] = sum / static_cast<double>(rows - 1);
        }
    }

    std::vector<double> v1, v2;
    double lambda1 = 0.0, lambda2 = 0.0;
    topTwoEigen(corr, k, v1, lambda1, v2, lambda2);

    model.component1.assign(cols, 0.0);
    model.component2.assign(cols, 0.0);
    for (size_t a = 0; a < k; ++a) {
        model.component1[kept[a]] = v1[a];
        model.component2[kept[a]] = v2[a];
    }
    model.explained1 = std::max(0.0, lambda1) / static_cast<double>(k);
    model.explained2 = std::max(0.0, lambda2) / static_cast<double>(k);
    return model;
}

std::vector<double> pcaProject(const PcaModel& model, const std::vector<double>& matrix, size_t rows,
                               size_t cols) {
    if (cols != model.means.size()) throw SchemaError("pcaProject: column count mismatch");
    if (matrix.size() != rows * cols) throw NumericError("pcaProject: bad dimensions");
    std::vector<double> coords(rows * 2, 0.0);
    for (size_t i = 0; i < rows; ++i) {
        double c1 = 0.0, c2 = 0.0;
        for (size_t j = 0; j < cols; ++j) {
            if (model.scales[j] <= 0.0) continue;
            const double z = (matrix[i * cols + j] - model.means[j]) / model.scales[j];
            c1 += z * model.component1[j];
            c2 += z * model.component2[j];
        }
        coords[i * 2] = c1;
        coords[i * 2 + 1] = c2;
    }
    return coords;
}

double ksStatistic(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw NumericError("ksStatistic: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() || j < b.size()) {
        double x;
        if (i < a.size() && j < b.size()) {
            x = std::min(a[i], b[j]);
        } else if (i < a.size()) {
            x = a[i];
        } else {
            x = b[j];
        }
        while (i < a.size() && a[i] == x) ++i;
        while (j < b.size() && b[j] == x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

}  // namespace synthflight
