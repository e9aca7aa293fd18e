#include "synthflight/encode.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "synthflight/numkit.hpp"

namespace synthflight {

namespace {

constexpr const char* kPresent = "Yes";
constexpr const char* kAbsent = "No";
constexpr double kVarianceFloor = 1e-6;

std::string cellAsCategory(const Table& table, size_t col, size_t row) {
    switch (table.schemaAt(col).kind) {
        case ColumnKind::Categorical: return table.categoryAt(col, row);
        case ColumnKind::Boolean: return table.flagAt(col, row) ? "true" : "false";
        default: throw SchemaError("column is not categorical");
    }
}

double cellAsScalar(const Table& table, size_t col, size_t row) {
    switch (table.schemaAt(col).kind) {
        case ColumnKind::Numeric: return table.numberAt(col, row);
        case ColumnKind::Datetime: return static_cast<double>(table.timestampAt(col, row));
        default: throw SchemaError("column is not continuous");
    }
}

bool isContinuous(ColumnKind kind) {
    return kind == ColumnKind::Numeric || kind == ColumnKind::Datetime;
}

// Frequency-descending category order, ties broken lexicographically.
std::vector<std::pair<std::string, size_t>> categoryCounts(const Table& table, size_t col) {
    std::map<std::string, size_t> counts;
    for (size_t r = 0; r < table.rowCount(); ++r) {
        counts[cellAsCategory(table, col, r)]++;
    }
    std::vector<std::pair<std::string, size_t>> ordered(counts.begin(), counts.end());
    std::stable_sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    return ordered;
}

int findInterval(const std::vector<CategoryInterval>& intervals, const std::string& category) {
    for (size_t i = 0; i < intervals.size(); ++i) {
        if (intervals[i].category == category) return static_cast<int>(i);
    }
    return -1;
}

void requireFullyPopulated(const Table& table, const char* op) {
    for (size_t c = 0; c < table.columnCount(); ++c) {
        for (size_t r = 0; r < table.rowCount(); ++r) {
            if (table.isMissing(c, r)) {
                throw SchemaError(std::string(op) + ": column '" + table.schemaAt(c).name +
                                  "' still has missing cells; run split_missing first");
            }
        }
    }
}

}  // namespace

std::string indicatorColumnName(const std::string& valueColumn) {
    return valueColumn + "__present";
}

std::vector<size_t> ModeNormalizer::retainedIndices() const {
    std::vector<size_t> idx;
    for (size_t i = 0; i < retained.size(); ++i) {
        if (retained[i]) idx.push_back(i);
    }
    return idx;
}

size_t ModeNormalizer::retainedCount() const { return retainedIndices().size(); }

namespace {

// One EM run with a fixed component count. Quantile-initialized, variance
// floored, log-likelihood asserted non-decreasing per iteration.
ModeNormalizer runEm(const std::vector<double>& column, size_t k) {
    const size_t n = column.size();
    ModeNormalizer gmm;
    gmm.weights.assign(k, 1.0 / static_cast<double>(k));
    gmm.means.resize(k);
    gmm.variances.resize(k);
    std::vector<double> values = column;
    std::sort(values.begin(), values.end());
    const double totalVar = std::max(kVarianceFloor, sampleStd(column) * sampleStd(column));
    for (size_t c = 0; c < k; ++c) {
        const double q = (static_cast<double>(c) + 0.5) / static_cast<double>(k);
        gmm.means[c] = values[std::min(n - 1, static_cast<size_t>(q * static_cast<double>(n)))];
        gmm.variances[c] = totalVar;
    }

    std::vector<double> resp(n * k);
    std::vector<double> logs(k);
    double prevLl = -std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < 100; ++iter) {
        // E step with log-sum-exp
        double ll = 0.0;
        for (size_t i = 0; i < n; ++i) {
            double maxLog = -std::numeric_limits<double>::infinity();
            for (size_t c = 0; c < k; ++c) {
                if (gmm.weights[c] <= 0.0) {
                    logs[c] = -std::numeric_limits<double>::infinity();
                    continue;
                }
                const double var = gmm.variances[c];
                const double d = column[i] - gmm.means[c];
                logs[c] = std::log(gmm.weights[c]) - 0.5 * std::log(2.0 * M_PI * var) -
                          0.5 * d * d / var;
                maxLog = std::max(maxLog, logs[c]);
            }
            double sum = 0.0;
            for (size_t c = 0; c < k; ++c) sum += std::exp(logs[c] - maxLog);
            const double logSum = maxLog + std::log(sum);
            ll += logSum;
            for (size_t c = 0; c < k; ++c) resp[i * k + c] = std::exp(logs[c] - logSum);
        }
        if (ll + 1e-8 * (1.0 + std::abs(ll)) < prevLl) {
            throw NumericError("EM log-likelihood decreased at iteration " + std::to_string(iter));
        }
        gmm.logLikelihood = ll;
        gmm.iterations = iter + 1;
        if (iter > 0 && std::abs(ll - prevLl) < 1e-6) break;
        prevLl = ll;
        // M step
        for (size_t c = 0; c < k; ++c) {
            double nc = 0.0, mean = 0.0;
            for (size_t i = 0; i < n; ++i) {
                nc += resp[i * k + c];
                mean += resp[i * k + c] * column[i];
            }
            if (nc < 1e-12) {
                gmm.weights[c] = 0.0;
                continue;
            }
            mean /= nc;
            double var = 0.0;
            for (size_t i = 0; i < n; ++i) {
                const double d = column[i] - mean;
                var += resp[i * k + c] * d * d;
            }
            var /= nc;
            gmm.weights[c] = nc / static_cast<double>(n);
            gmm.means[c] = mean;
            gmm.variances[c] = std::max(var, kVarianceFloor);
        }
    }
    return gmm;
}

}  // namespace

ModeNormalizer fitModeNormalizer(const std::vector<double>& column, int kMax) {
    std::vector<double> distinct = column;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() < 2) {
        throw NumericError("mode normalizer needs at least 2 distinct values");
    }
    const size_t upper = std::min<size_t>(std::max(1, kMax), distinct.size());
    const size_t n = column.size();

    // Component count by BIC on an evenly-strided subsample, then a final EM
    // on the full column at the winning k.
    std::vector<double> selection;
    constexpr size_t kSelectionCap = 5000;
    if (n > kSelectionCap) {
        std::vector<double> values = column;
        std::sort(values.begin(), values.end());
        for (size_t i = 0; i < kSelectionCap; ++i) {
            selection.push_back(values[i * n / kSelectionCap]);
        }
    } else {
        selection = column;
    }
    size_t bestK = 1;
    double bestBic = std::numeric_limits<double>::infinity();
    const double logN = std::log(static_cast<double>(selection.size()));
    for (size_t k = 1; k <= upper; ++k) {
        const ModeNormalizer candidate = runEm(selection, k);
        const double params = static_cast<double>(3 * k - 1);
        const double bic = -2.0 * candidate.logLikelihood + params * logN;
        if (bic < bestBic - 1e-9) {
            bestBic = bic;
            bestK = k;
        }
    }

    ModeNormalizer gmm = runEm(column, bestK);
    gmm.retained.assign(bestK, 0);
    double retainedWeight = 0.0;
    for (size_t c = 0; c < bestK; ++c) {
        if (gmm.weights[c] >= 0.005) {
            gmm.retained[c] = 1;
            retainedWeight += gmm.weights[c];
        }
    }
    if (retainedWeight <= 0.0) {
        const size_t arg = static_cast<size_t>(
            std::max_element(gmm.weights.begin(), gmm.weights.end()) - gmm.weights.begin());
        gmm.retained[arg] = 1;
        retainedWeight = gmm.weights[arg];
    }
    for (size_t c = 0; c < bestK; ++c) {
        gmm.weights[c] = gmm.retained[c] ? gmm.weights[c] / retainedWeight : 0.0;
    }
    return gmm;
}

Table splitMissing(const Table& table, uint64_t seed) {
    Table out = table;
    size_t insertShift = 0;
    for (size_t original = 0; original < table.columnCount(); ++original) {
        const size_t col = original + insertShift;
        size_t missingCount = 0;
        for (size_t r = 0; r < table.rowCount(); ++r) {
            missingCount += table.isMissing(original, r) ? 1 : 0;
        }
        if (missingCount == 0) continue;
        if (missingCount == table.rowCount()) {
            throw NumericError("split_missing: column '" + table.schemaAt(original).name +
                               "' is entirely missing and cannot be filled");
        }

        std::vector<size_t> observed;
        for (size_t r = 0; r < table.rowCount(); ++r) {
            if (!table.isMissing(original, r)) observed.push_back(r);
        }
        RngStream stream(seed, original);

        Column indicator;
        indicator.missing.assign(table.rowCount(), 0);
        indicator.categories.codes.resize(table.rowCount());
        const int32_t yes = indicator.categories.intern(kPresent);
        const int32_t no = indicator.categories.intern(kAbsent);

        for (size_t r = 0; r < table.rowCount(); ++r) {
            if (!table.isMissing(original, r)) {
                indicator.categories.codes[r] = yes;
                continue;
            }
            indicator.categories.codes[r] = no;
            const size_t donor = observed[stream.uniformIndex(observed.size())];
            switch (table.schemaAt(original).kind) {
                case ColumnKind::Numeric:
                    out.setNumber(col, r, table.numberAt(original, donor));
                    break;
                case ColumnKind::Datetime:
                    out.setTimestamp(col, r, table.timestampAt(original, donor));
                    break;
                case ColumnKind::Categorical:
                    out.setCategory(col, r, table.categoryAt(original, donor));
                    break;
                case ColumnKind::Boolean:
                    out.setFlag(col, r, table.flagAt(original, donor));
                    break;
            }
        }

        ColumnSchema indicatorSchema;
        indicatorSchema.name = indicatorColumnName(table.schemaAt(original).name);
        indicatorSchema.kind = ColumnKind::Categorical;
        indicatorSchema.nullable = false;
        out.insertColumn(col + 1, indicatorSchema, std::move(indicator));
        ++insertShift;
    }
    // all value columns are now fully populated
    return out;
}

Table mergeMissing(const Table& table, const EncoderState& state) {
    Table out = table;
    for (const auto& link : state.indicators) {
        const int valueIdx = out.findColumn(link.valueColumn);
        const int indicatorIdx = out.findColumn(link.indicatorColumn);
        if (valueIdx < 0 || indicatorIdx < 0) {
            throw SchemaError("merge_missing: missing column pair " + link.valueColumn + " / " +
                              link.indicatorColumn);
        }
        const size_t vi = static_cast<size_t>(valueIdx);
        const size_t ii = static_cast<size_t>(indicatorIdx);
        if (out.schemaAt(ii).kind != ColumnKind::Categorical) {
            throw SchemaError("merge_missing: indicator '" + link.indicatorColumn +
                              "' is not categorical");
        }
        for (size_t r = 0; r < out.rowCount(); ++r) {
            const std::string& flag = out.categoryAt(ii, r);
            if (flag == kAbsent) {
                out.setMissing(vi, r);
            } else if (flag != kPresent) {
                throw SchemaError("merge_missing: indicator '" + link.indicatorColumn +
                                  "' has unexpected value '" + flag + "'");
            }
        }
    }
    for (const auto& link : state.indicators) {
        out.dropColumn(out.columnIndex(link.indicatorColumn));
    }
    // restore pre-split nullability
    if (!state.originalSchema.empty()) {
        if (out.columnCount() != state.originalSchema.size()) {
            throw SchemaError("merge_missing: column count does not match original schema");
        }
        Table restored(state.originalSchema, out.rowCount());
        for (size_t c = 0; c < out.columnCount(); ++c) {
            if (out.schemaAt(c).name != state.originalSchema[c].name ||
                out.schemaAt(c).kind != state.originalSchema[c].kind) {
                throw SchemaError("merge_missing: schema mismatch at '" + out.schemaAt(c).name + "'");
            }
            for (size_t r = 0; r < out.rowCount(); ++r) {
                if (out.isMissing(c, r)) {
                    restored.setMissing(c, r);
                    continue;
                }
                switch (out.schemaAt(c).kind) {
                    case ColumnKind::Numeric: restored.setNumber(c, r, out.numberAt(c, r)); break;
                    case ColumnKind::Datetime:
                        restored.setTimestamp(c, r, out.timestampAt(c, r));
                        break;
                    case ColumnKind::Categorical:
                        restored.setCategory(c, r, out.categoryAt(c, r));
                        break;
                    case ColumnKind::Boolean: restored.setFlag(c, r, out.flagAt(c, r)); break;
                }
            }
        }
        restored.validate();
        return restored;
    }
    return out;
}

EncoderState fitEncoder(const Table& table, EncodeTarget target, const EncodeOptions& options,
                        uint64_t fillSeed) {
    if (table.rowCount() == 0 || table.columnCount() == 0) {
        throw ConfigError("fit_encoder: empty table");
    }
    requireFullyPopulated(table, "fit_encoder");

    EncoderState state;
    state.target = target;
    state.fillSeed = fillSeed;

    for (size_t c = 0; c < table.columnCount(); ++c) {
        const auto& schema = table.schemaAt(c);
        ColumnEncoder enc;
        enc.name = schema.name;
        enc.kind = schema.kind;
        enc.unit = schema.unit;

        if (schema.kind == ColumnKind::Categorical || schema.kind == ColumnKind::Boolean) {
            const auto counts = categoryCounts(table, c);
            const double n = static_cast<double>(table.rowCount());
            double cursor = 0.0;
            for (size_t i = 0; i < counts.size(); ++i) {
                CategoryInterval interval;
                interval.category = counts[i].first;
                interval.lo = cursor;
                cursor += static_cast<double>(counts[i].second) / n;
                interval.hi = i + 1 == counts.size() ? 1.0 : cursor;
                enc.intervals.push_back(std::move(interval));
            }
        } else {
            std::vector<double> values(table.rowCount());
            for (size_t r = 0; r < table.rowCount(); ++r) values[r] = cellAsScalar(table, c, r);
            if (target == EncodeTarget::Copula && schema.kind == ColumnKind::Numeric) {
                enc.center = 0.0;
                enc.scale = 1.0;  // copula numerics pass through
            } else {
                enc.center = sampleMean(values);
                const double sd = sampleStd(values);
                enc.scale = sd > 0.0 ? sd : 1.0;
            }
            if (target == EncodeTarget::Tvae && options.modeNormalization) {
                std::vector<double> distinct = values;
                std::sort(distinct.begin(), distinct.end());
                distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
                if (distinct.size() >= 2) {
                    enc.modes = fitModeNormalizer(values, options.maxModes);
                }
            }
        }
        state.columns.push_back(std::move(enc));
    }

    // record indicator links and reconstruct the pre-split schema
    std::vector<ColumnSchema> original;
    for (size_t c = 0; c < table.columnCount(); ++c) {
        const auto& schema = table.schemaAt(c);
        const bool isIndicator =
            c > 0 && schema.name == indicatorColumnName(table.schemaAt(c - 1).name) &&
            schema.kind == ColumnKind::Categorical;
        if (isIndicator) {
            state.indicators.push_back({table.schemaAt(c - 1).name, schema.name});
            original.back().nullable = true;
        } else {
            original.push_back(schema);
            original.back().nullable = false;
        }
    }
    state.originalSchema = std::move(original);
    return state;
}

std::vector<MatrixColumnDescriptor> buildLayout(const EncoderState& state) {
    std::vector<MatrixColumnDescriptor> layout;
    for (size_t c = 0; c < state.columns.size(); ++c) {
        const auto& enc = state.columns[c];
        if (enc.kind == ColumnKind::Categorical || enc.kind == ColumnKind::Boolean) {
            if (state.target == EncodeTarget::Copula) {
                layout.push_back({c, MatrixRole::Scalar, -1});
            } else {
                for (size_t k = 0; k < enc.intervals.size(); ++k) {
                    layout.push_back({c, MatrixRole::OneHot, static_cast<int>(k)});
                }
            }
        } else if (enc.modes.has_value()) {
            layout.push_back({c, MatrixRole::ModeScalar, -1});
            const size_t modes = enc.modes->retainedCount();
            for (size_t k = 0; k < modes; ++k) {
                layout.push_back({c, MatrixRole::ModeOneHot, static_cast<int>(k)});
            }
        } else {
            layout.push_back({c, MatrixRole::Scalar, -1});
        }
    }
    return layout;
}

EncodedMatrix encodeTable(const Table& table, const EncoderState& state, uint64_t seed) {
    if (table.columnCount() != state.columns.size()) {
        throw SchemaError("encode: table has " + std::to_string(table.columnCount()) +
                          " columns, state expects " + std::to_string(state.columns.size()));
    }
    for (size_t c = 0; c < state.columns.size(); ++c) {
        if (table.schemaAt(c).name != state.columns[c].name ||
            table.schemaAt(c).kind != state.columns[c].kind) {
            throw SchemaError("encode: schema mismatch at column '" + table.schemaAt(c).name + "'");
        }
    }
    requireFullyPopulated(table, "encode");

    EncodedMatrix matrix;
    matrix.layout = buildLayout(state);
    matrix.rows = table.rowCount();
    matrix.cols = matrix.layout.size();
    matrix.data.assign(matrix.rows * matrix.cols, 0.0);

    size_t out = 0;
    for (size_t c = 0; c < state.columns.size(); ++c) {
        const auto& enc = state.columns[c];
        if (enc.kind == ColumnKind::Categorical || enc.kind == ColumnKind::Boolean) {
            if (state.target == EncodeTarget::Copula) {
                RngStream stream(seed, c);
                for (size_t r = 0; r < matrix.rows; ++r) {
                    const std::string value = cellAsCategory(table, c, r);
                    const int idx = findInterval(enc.intervals, value);
                    if (idx < 0) {
                        throw DirectoryError("encode: unseen category '" + value + "' in column '" +
                                             enc.name + "'");
                    }
                    const auto& iv = enc.intervals[static_cast<size_t>(idx)];
                    matrix.at(r, out) = iv.lo + (iv.hi - iv.lo) * stream.uniform01();
                }
                out += 1;
            } else {
                for (size_t r = 0; r < matrix.rows; ++r) {
                    const std::string value = cellAsCategory(table, c, r);
                    const int idx = findInterval(enc.intervals, value);
                    if (idx < 0) {
                        throw DirectoryError("encode: unseen category '" + value + "' in column '" +
                                             enc.name + "'");
                    }
                    matrix.at(r, out + static_cast<size_t>(idx)) = 1.0;
                }
                out += enc.intervals.size();
            }
        } else if (enc.modes.has_value()) {
            const auto& gmm = *enc.modes;
            const auto retained = gmm.retainedIndices();
            for (size_t r = 0; r < matrix.rows; ++r) {
                const double x = cellAsScalar(table, c, r);
                // responsibility argmax over retained components
                size_t best = 0;
                double bestLog = -std::numeric_limits<double>::infinity();
                for (size_t k = 0; k < retained.size(); ++k) {
                    const size_t comp = retained[k];
                    const double var = gmm.variances[comp];
                    const double d = x - gmm.means[comp];
                    const double logp =
                        std::log(gmm.weights[comp]) - 0.5 * std::log(var) - 0.5 * d * d / var;
                    if (logp > bestLog) {
                        bestLog = logp;
                        best = k;
                    }
                }
                const size_t comp = retained[best];
                matrix.at(r, out) = (x - gmm.means[comp]) / std::sqrt(gmm.variances[comp]);
                matrix.at(r, out + 1 + best) = 1.0;
            }
            out += 1 + retained.size();
        } else {
            for (size_t r = 0; r < matrix.rows; ++r) {
                matrix.at(r, out) = (cellAsScalar(table, c, r) - enc.center) / enc.scale;
            }
            out += 1;
        }
    }

    for (double v : matrix.data) {
        if (!std::isfinite(v)) throw NumericError("encode: produced non-finite value");
    }
    return matrix;
}

namespace {

// Interval membership with clamping; values land in the category whose
// [lo, hi) contains them, 1.0 belongs to the last interval.
size_t intervalIndexFor(const std::vector<CategoryInterval>& intervals, double value,
                        size_t* clamped) {
    double v = value;
    if (v < 0.0 || v > 1.0) {
        if (clamped) ++*clamped;
        v = std::min(1.0, std::max(0.0, v));
    }
    for (size_t i = 0; i + 1 < intervals.size(); ++i) {
        if (v < intervals[i].hi) return i;
    }
    return intervals.size() - 1;
}

size_t argmaxBlock(const EncodedMatrix& matrix, size_t row, size_t offset, size_t width,
                   size_t* malformed) {
    double sum = 0.0;
    bool negative = false;
    size_t best = 0;
    double bestValue = -std::numeric_limits<double>::infinity();
    for (size_t k = 0; k < width; ++k) {
        const double v = matrix.at(row, offset + k);
        sum += v;
        if (v < -1e-9) negative = true;
        if (v > bestValue) {
            bestValue = v;
            best = k;
        }
    }
    if (malformed && (negative || std::abs(sum - 1.0) > 1e-6)) ++*malformed;
    return best;
}

}  // namespace

Table decodeMatrix(const EncodedMatrix& matrix, const EncoderState& state, DecodeStats* stats) {
    const auto layout = buildLayout(state);
    if (matrix.cols != layout.size()) {
        throw SchemaError("decode: matrix has " + std::to_string(matrix.cols) +
                          " columns, layout expects " + std::to_string(layout.size()));
    }
    DecodeStats local;
    DecodeStats* counters = stats ? stats : &local;

    std::vector<ColumnSchema> postSplitSchema;
    for (const auto& enc : state.columns) {
        ColumnSchema schema;
        schema.name = enc.name;
        schema.kind = enc.kind;
        schema.unit = enc.unit;
        schema.nullable = false;
        postSplitSchema.push_back(std::move(schema));
    }
    Table table(postSplitSchema, matrix.rows);

    size_t offset = 0;
    for (size_t c = 0; c < state.columns.size(); ++c) {
        const auto& enc = state.columns[c];
        if (enc.kind == ColumnKind::Categorical || enc.kind == ColumnKind::Boolean) {
            const size_t width = enc.intervals.size();
            for (size_t r = 0; r < matrix.rows; ++r) {
                size_t idx;
                if (state.target == EncodeTarget::Copula) {
                    idx = intervalIndexFor(enc.intervals, matrix.at(r, offset),
                                           &counters->clampedCategorical);
                } else {
                    idx = argmaxBlock(matrix, r, offset, width, &counters->malformedOneHot);
                }
                const std::string& category = enc.intervals[idx].category;
                if (enc.kind == ColumnKind::Boolean) {
                    table.setFlag(c, r, category == "true");
                } else {
                    table.setCategory(c, r, category);
                }
            }
            offset += state.target == EncodeTarget::Copula ? 1 : width;
        } else if (enc.modes.has_value()) {
            const auto& gmm = *enc.modes;
            const auto retained = gmm.retainedIndices();
            for (size_t r = 0; r < matrix.rows; ++r) {
                const double scalar = matrix.at(r, offset);
                const size_t mode =
                    argmaxBlock(matrix, r, offset + 1, retained.size(), &counters->malformedOneHot);
                const size_t comp = retained[mode];
                const double x = gmm.means[comp] + scalar * std::sqrt(gmm.variances[comp]);
                if (enc.kind == ColumnKind::Datetime) {
                    table.setTimestamp(c, r, static_cast<int64_t>(std::llround(x)));
                } else {
                    table.setNumber(c, r, x);
                }
            }
            offset += 1 + retained.size();
        } else {
            for (size_t r = 0; r < matrix.rows; ++r) {
                const double x = enc.center + enc.scale * matrix.at(r, offset);
                if (enc.kind == ColumnKind::Datetime) {
                    table.setTimestamp(c, r, static_cast<int64_t>(std::llround(x)));
                } else {
                    table.setNumber(c, r, x);
                }
            }
            offset += 1;
        }
    }

    if (!state.indicators.empty()) {
        return mergeMissing(table, state);
    }
    if (!state.originalSchema.empty()) {
        return mergeMissing(table, state);  // also restores schema flags
    }
    return table;
}

nlohmann::json EncoderState::toJson() const {
    nlohmann::json doc;
    doc["target"] = target == EncodeTarget::Copula ? "copula" : "tvae";
    doc["fill_seed"] = fillSeed;
    doc["columns"] = nlohmann::json::array();
    for (const auto& enc : columns) {
        nlohmann::json col;
        col["name"] = enc.name;
        col["kind"] = columnKindName(enc.kind);
        if (!enc.unit.empty()) col["unit"] = enc.unit;
        col["center"] = enc.center;
        col["scale"] = enc.scale;
        if (!enc.intervals.empty()) {
            nlohmann::json intervals = nlohmann::json::array();
            for (const auto& iv : enc.intervals) {
                intervals.push_back({{"category", iv.category}, {"lo", iv.lo}, {"hi", iv.hi}});
            }
            col["intervals"] = std::move(intervals);
        }
        if (enc.modes.has_value()) {
            col["modes"] = {{"weights", enc.modes->weights},
                            {"means", enc.modes->means},
                            {"variances", enc.modes->variances},
                            {"retained", enc.modes->retained}};
        }
        doc["columns"].push_back(std::move(col));
    }
    doc["indicators"] = nlohmann::json::array();
    for (const auto& link : indicators) {
        doc["indicators"].push_back({{"value", link.valueColumn}, {"indicator", link.indicatorColumn}});
    }
    doc["original_schema"] = nlohmann::json::array();
    for (const auto& schema : originalSchema) {
        nlohmann::json entry;
        entry["name"] = schema.name;
        entry["kind"] = columnKindName(schema.kind);
        if (!schema.unit.empty()) entry["unit"] = schema.unit;
        entry["nullable"] = schema.nullable;
        doc["original_schema"].push_back(std::move(entry));
    }
    return doc;
}

EncoderState EncoderState::fromJson(const nlohmann::json& doc) {
    EncoderState state;
    state.target = doc.at("target").get<std::string>() == "copula" ? EncodeTarget::Copula
                                                                   : EncodeTarget::Tvae;
    state.fillSeed = doc.value("fill_seed", 0ull);
    for (const auto& col : doc.at("columns")) {
        ColumnEncoder enc;
        enc.name = col.at("name").get<std::string>();
        enc.kind = columnKindFromName(col.at("kind").get<std::string>());
        enc.unit = col.value("unit", std::string());
        enc.center = col.value("center", 0.0);
        enc.scale = col.value("scale", 1.0);
        if (col.contains("intervals")) {
            for (const auto& iv : col["intervals"]) {
                enc.intervals.push_back({iv.at("category").get<std::string>(),
                                         iv.at("lo").get<double>(), iv.at("hi").get<double>()});
            }
        }
        if (col.contains("modes")) {
            ModeNormalizer gmm;
            gmm.weights = col["modes"].at("weights").get<std::vector<double>>();
            gmm.means = col["modes"].at("means").get<std::vector<double>>();
            gmm.variances = col["modes"].at("variances").get<std::vector<double>>();
            gmm.retained = col["modes"].at("retained").get<std::vector<uint8_t>>();
            enc.modes = std::move(gmm);
        }
        state.columns.push_back(std::move(enc));
    }
    for (const auto& link : doc.value("indicators", nlohmann::json::array())) {
        state.indicators.push_back(
            {link.at("value").get<std::string>(), link.at("indicator").get<std::string>()});
    }
    for (const auto& entry : doc.value("original_schema", nlohmann::json::array())) {
        ColumnSchema schema;
        schema.name = entry.at("name").get<std::string>();
        schema.kind = columnKindFromName(entry.at("kind").get<std::string>());
        schema.unit = entry.value("unit", std::string());
        schema.nullable = entry.value("nullable", false);
        state.originalSchema.push_back(std::move(schema));
    }
    return state;
}

}  // namespace synthflight
