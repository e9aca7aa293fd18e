#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "synthflight/errors.hpp"

namespace synthflight {

// ---------------------------------------------------------------------------
// Seeded RNG streams. Same (seed, stream) gives the same sequence on every
// platform: mt19937_64 is fully specified and draws are derived from raw bits
// only, never from the platform's distribution implementations.
// ---------------------------------------------------------------------------
class RngStream {
public:
    RngStream(uint64_t seed, uint64_t streamId);

    double uniform01();                   // strictly inside (0, 1)
    double uniform(double lo, double hi);
    double normal();                      // standard normal via inverse CDF
    uint64_t uniformIndex(uint64_t n);    // unbiased integer in [0, n)

    template <typename T>
    void shuffle(std::vector<T>& values) {
        for (size_t i = values.size(); i > 1; --i) {
            std::swap(values[i - 1], values[uniformIndex(i)]);
        }
    }

    // Seeded uniform subsample without replacement, original order preserved.
    std::vector<size_t> sampleWithoutReplacement(size_t population, size_t count);

    uint64_t nextBits() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

// Hash used to derive stream ids from stage/column names.
uint64_t fnv1a64(const std::string& text);

// ---------------------------------------------------------------------------
// Standard normal CDF and quantile.
// ---------------------------------------------------------------------------
double normalCdf(double x);       // |err| <= 1e-12
double normalPdf(double x);
double normalQuantile(double p);  // p in (0,1); |Phi(result) - p| <= 1e-10

// ---------------------------------------------------------------------------
// Gaussian-kernel KDE marginal with Silverman bandwidth.
// ---------------------------------------------------------------------------
class KdeMarginal {
public:
    KdeMarginal() = default;
    static KdeMarginal fit(const std::vector<double>& samples);  // n >= 2

    double cdf(double x) const;       // clamped to [1e-6, 1 - 1e-6]
    double quantile(double u) const;  // bisection on cdf over the support

    double bandwidth() const { return bandwidth_; }
    double supportLo() const { return lo_; }
    double supportHi() const { return hi_; }
    size_t sampleCount() const { return sorted_.size(); }
    const std::vector<double>& sortedSamples() const { return sorted_; }

    static KdeMarginal fromParts(std::vector<double> sortedSamples, double bandwidth);

private:
    void buildQuantileGrid();

    std::vector<double> sorted_;
    double bandwidth_ = 0.0;
    double lo_ = 0.0, hi_ = 0.0;
    // coarse monotone grid used only to bracket quantile bisection
    std::vector<double> gridX_, gridU_;
};

// ---------------------------------------------------------------------------
// Correlation matrices: symmetric storage, PSD repair, Cholesky factor.
// ---------------------------------------------------------------------------
struct CorrelationMatrix {
    size_t dim = 0;
    std::vector<double> theta;  // row-major dim x dim, unit diagonal
    std::vector<double> chol;   // lower triangular, row-major
    bool repaired = false;

    double at(size_t i, size_t j) const { return theta[i * dim + j]; }
};

// Plain Cholesky of an SPD matrix; throws NumericError when not SPD. A
// positive relativePivotFloor also rejects pivots that collapse to rounding
// noise (near-singular normal equations).
std::vector<double> choleskyLower(const std::vector<double>& matrix, size_t dim,
                                  double relativePivotFloor = 0.0);

// Symmetry checked to 1e-10. Non-PD inputs are repaired by clipping
// eigenvalues at 1e-6 and rescaling back to unit diagonal.
CorrelationMatrix choleskyPsd(const std::vector<double>& symmetric, size_t dim);

// Jacobi eigendecomposition of a symmetric matrix (values descending).
void symmetricEigen(const std::vector<double>& matrix, size_t dim,
                    std::vector<double>& values, std::vector<double>& vectors);

// Top-2 eigenpairs of a symmetric PSD matrix by deflated power iteration
// (tolerance 1e-10, max 1000 iterations). Sign: largest-magnitude entry
// positive. This is the kernel behind pcaFit.
void topTwoEigen(const std::vector<double>& psd, size_t dim, std::vector<double>& v1, double& lambda1,
                 std::vector<double>& v2, double& lambda2);

double pearsonCorrelation(const std::vector<double>& x, const std::vector<double>& y);

// ---------------------------------------------------------------------------
// Two-component PCA by deflated power iteration on the correlation matrix.
// ---------------------------------------------------------------------------
struct PcaModel {
    std::vector<double> means;    // per input column
    std::vector<double> scales;   // 0 marks a dropped constant column
    std::vector<double> component1, component2;  // length = input columns
    double explained1 = 0.0, explained2 = 0.0;
};

PcaModel pcaFit(const std::vector<double>& matrix, size_t rows, size_t cols);
std::vector<double> pcaProject(const PcaModel& model, const std::vector<double>& matrix,
                               size_t rows, size_t cols);  // n x 2, row-major

// ---------------------------------------------------------------------------
// Misc shared kernels.
// ---------------------------------------------------------------------------
double sampleMean(const std::vector<double>& values);
double sampleStd(const std::vector<double>& values);  // n-1 denominator

// Exact two-sample Kolmogorov-Smirnov statistic over the merged sample.
double ksStatistic(std::vector<double> a, std::vector<double> b);

}  // namespace synthflight
