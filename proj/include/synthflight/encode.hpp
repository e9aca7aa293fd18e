#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "synthflight/table.hpp"

namespace synthflight {

enum class EncodeTarget { Copula, Tvae };

struct EncodeOptions {
    bool modeNormalization = false;  // GMM mode-specific normalization (tvae only)
    int maxModes = 10;
};

// GMM over one continuous column. All fitted components are kept alongside
// the retained mask (weight >= 0.005 after convergence).
struct ModeNormalizer {
    std::vector<double> weights;
    std::vector<double> means;
    std::vector<double> variances;
    std::vector<uint8_t> retained;
    double logLikelihood = 0.0;
    int iterations = 0;

    std::vector<size_t> retainedIndices() const;
    size_t retainedCount() const;
};

ModeNormalizer fitModeNormalizer(const std::vector<double>& column, int kMax);

// [lo, hi) on the unit interval; width equals the category's empirical
// frequency. Ordered by descending frequency, ties lexicographic.
struct CategoryInterval {
    std::string category;
    double lo = 0.0;
    double hi = 0.0;
};

struct ColumnEncoder {
    std::string name;
    ColumnKind kind = ColumnKind::Numeric;
    std::string unit;
    std::vector<CategoryInterval> intervals;   // categorical/boolean
    double center = 0.0;                       // affine: encoded = (x - center) / scale
    double scale = 1.0;
    std::optional<ModeNormalizer> modes;       // engaged mode normalization
};

struct IndicatorLink {
    std::string valueColumn;
    std::string indicatorColumn;
};

struct EncoderState {
    EncodeTarget target = EncodeTarget::Copula;
    std::vector<ColumnEncoder> columns;          // post-split column order
    std::vector<IndicatorLink> indicators;
    std::vector<ColumnSchema> originalSchema;    // pre-split schema, for decode
    uint64_t fillSeed = 0;

    nlohmann::json toJson() const;
    static EncoderState fromJson(const nlohmann::json& doc);
};

enum class MatrixRole { Scalar, OneHot, ModeScalar, ModeOneHot };

struct MatrixColumnDescriptor {
    size_t sourceColumn = 0;  // index into EncoderState::columns
    MatrixRole role = MatrixRole::Scalar;
    int index = -1;  // category index (OneHot) or mode index (ModeOneHot)
};

struct EncodedMatrix {
    size_t rows = 0;
    size_t cols = 0;
    std::vector<double> data;  // row-major, no NaN/Inf
    std::vector<MatrixColumnDescriptor> layout;

    double at(size_t r, size_t c) const { return data[r * cols + c]; }
    double& at(size_t r, size_t c) { return data[r * cols + c]; }
};

std::vector<MatrixColumnDescriptor> buildLayout(const EncoderState& state);

struct DecodeStats {
    size_t clampedCategorical = 0;
    size_t malformedOneHot = 0;
};

// Table II pipeline: each column with missing cells becomes a filled value
// column plus a "Yes"/"No" indicator column placed right after it. Fills are
// uniform draws from the column's observed values, stream (seed, column).
Table splitMissing(const Table& table, uint64_t seed);
Table mergeMissing(const Table& table, const EncoderState& state);

EncoderState fitEncoder(const Table& table, EncodeTarget target, const EncodeOptions& options = {},
                        uint64_t fillSeed = 0);
EncodedMatrix encodeTable(const Table& table, const EncoderState& state, uint64_t seed);
Table decodeMatrix(const EncodedMatrix& matrix, const EncoderState& state,
                   DecodeStats* stats = nullptr);

// Name given to the companion indicator column of a nullable column.
std::string indicatorColumnName(const std::string& valueColumn);

}  // namespace synthflight
