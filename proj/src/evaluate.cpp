#include "synthflight/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "synthflight/encode.hpp"
#include "synthflight/ingest.hpp"
#include "synthflight/table_io.hpp"

namespace synthflight {

namespace {

void requireSameSchema(const Table& real, const Table& synth, const char* stage) {
    if (real.columnCount() != synth.columnCount()) {
        throw SchemaError(std::string(stage) + ": column count mismatch (" +
                          std::to_string(real.columnCount()) + " vs " +
                          std::to_string(synth.columnCount()) + ")");
    }
    for (size_t c = 0; c < real.columnCount(); ++c) {
        if (real.schemaAt(c).name != synth.schemaAt(c).name ||
            real.schemaAt(c).kind != synth.schemaAt(c).kind) {
            throw SchemaError(std::string(stage) + ": schema mismatch at column '" +
                              real.schemaAt(c).name + "'");
        }
    }
}

bool isContinuousKind(ColumnKind kind) {
    return kind == ColumnKind::Numeric || kind == ColumnKind::Datetime;
}

std::vector<double> continuousValues(const Table& t, size_t col) {
    std::vector<double> out;
    for (size_t r = 0; r < t.rowCount(); ++r) {
        if (t.isMissing(col, r)) continue;
        out.push_back(t.schemaAt(col).kind == ColumnKind::Datetime
                          ? static_cast<double>(t.timestampAt(col, r))
                          : t.numberAt(col, r));
    }
    return out;
}

std::vector<std::string> categoryValues(const Table& t, size_t col) {
    std::vector<std::string> out;
    for (size_t r = 0; r < t.rowCount(); ++r) {
        if (t.isMissing(col, r)) continue;
        out.push_back(t.schemaAt(col).kind == ColumnKind::Boolean
                          ? (t.flagAt(col, r) ? "true" : "false")
                          : t.categoryAt(col, r));
    }
    return out;
}

std::map<std::string, double> frequencies(const std::vector<std::string>& values) {
    std::map<std::string, double> freq;
    for (const auto& v : values) freq[v] += 1.0;
    for (auto& [key, count] : freq) count /= static_cast<double>(values.size());
    return freq;
}

// Decile boundaries from the real-data side; both sides are discretized with
// the same cut points.
std::vector<double> decileBoundaries(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    std::vector<double> cuts;
    for (int i = 1; i < 10; ++i) {
        cuts.push_back(values[values.size() * static_cast<size_t>(i) / 10]);
    }
    return cuts;
}

// Values of a column restricted to rows where both columns are present.
void pairwiseComplete(const Table& t, size_t colA, size_t colB, std::vector<double>& a,
                      std::vector<double>& b) {
    a.clear();
    b.clear();
    auto value = [&](size_t col, size_t r) {
        return t.schemaAt(col).kind == ColumnKind::Datetime
                   ? static_cast<double>(t.timestampAt(col, r))
                   : t.numberAt(col, r);
    };
    for (size_t r = 0; r < t.rowCount(); ++r) {
        if (t.isMissing(colA, r) || t.isMissing(colB, r)) continue;
        a.push_back(value(colA, r));
        b.push_back(value(colB, r));
    }
}

void pairwiseCompleteCats(const Table& t, size_t colA, size_t colB,
                          const std::vector<double>* cutsA, const std::vector<double>* cutsB,
                          std::vector<std::string>& a, std::vector<std::string>& b) {
    a.clear();
    b.clear();
    auto value = [&](size_t col, size_t r, const std::vector<double>* cuts) -> std::string {
        const ColumnKind kind = t.schemaAt(col).kind;
        if (kind == ColumnKind::Categorical) return t.categoryAt(col, r);
        if (kind == ColumnKind::Boolean) return t.flagAt(col, r) ? "true" : "false";
        const double v = kind == ColumnKind::Datetime ? static_cast<double>(t.timestampAt(col, r))
                                                      : t.numberAt(col, r);
        const size_t bin = static_cast<size_t>(
            std::upper_bound(cuts->begin(), cuts->end(), v) - cuts->begin());
        return "d" + std::to_string(bin);
    };
    for (size_t r = 0; r < t.rowCount(); ++r) {
        if (t.isMissing(colA, r) || t.isMissing(colB, r)) continue;
        a.push_back(value(colA, r, cutsA));
        b.push_back(value(colB, r, cutsB));
    }
}

double meanOf(const std::vector<double>& values) {
    double sum = 0.0;
    for (double v : values) sum += v;
    return values.empty() ? 0.0 : sum / static_cast<double>(values.size());
}

}  // namespace

double tvdScore(const std::vector<std::string>& real, const std::vector<std::string>& synth) {
    if (real.empty() || synth.empty()) throw ConfigError("tvd_score: empty column");
    const auto p = frequencies(real);
    const auto q = frequencies(synth);
    std::map<std::string, double> unionKeys;
    for (const auto& [key, value] : p) unionKeys[key] = 0.0;
    for (const auto& [key, value] : q) unionKeys[key] = 0.0;
    double l1 = 0.0;
    for (const auto& [key, unused] : unionKeys) {
        const double pv = p.count(key) ? p.at(key) : 0.0;
        const double qv = q.count(key) ? q.at(key) : 0.0;
        l1 += std::abs(pv - qv);
    }
    return 1.0 - 0.5 * l1;
}

double ksScore(const std::vector<double>& real, const std::vector<double>& synth) {
    if (real.empty() || synth.empty()) throw ConfigError("ks_score: empty column");
    return 1.0 - ksStatistic(real, synth);
}

std::optional<double> correlationSimilarity(const std::vector<double>& realX,
                                            const std::vector<double>& realY,
                                            const std::vector<double>& synthX,
                                            const std::vector<double>& synthY) {
    auto distinctCount = [](const std::vector<double>& v) {
        std::vector<double> sorted = v;
        std::sort(sorted.begin(), sorted.end());
        sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
        return sorted.size();
    };
    if (realX.size() < 2 || synthX.size() < 2) return std::nullopt;
    if (distinctCount(realX) < 2 || distinctCount(realY) < 2 || distinctCount(synthX) < 2 ||
        distinctCount(synthY) < 2) {
        return std::nullopt;
    }
    const double rhoReal = pearsonCorrelation(realX, realY);
    const double rhoSynth = pearsonCorrelation(synthX, synthY);
    return 1.0 - std::abs(rhoReal - rhoSynth) / 2.0;
}

double contingencySimilarity(const std::vector<std::string>& realA,
                             const std::vector<std::string>& realB,
                             const std::vector<std::string>& synthA,
                             const std::vector<std::string>& synthB) {
    if (realA.size() != realB.size() || synthA.size() != synthB.size() || realA.empty() ||
        synthA.empty()) {
        throw ConfigError("contingency_similarity: malformed inputs");
    }
    std::map<std::pair<std::string, std::string>, double> p, q;
    for (size_t i = 0; i < realA.size(); ++i) p[{realA[i], realB[i]}] += 1.0;
    for (size_t i = 0; i < synthA.size(); ++i) q[{synthA[i], synthB[i]}] += 1.0;
    for (auto& [key, count] : p) count /= static_cast<double>(realA.size());
    for (auto& [key, count] : q) count /= static_cast<double>(synthA.size());
    std::map<std::pair<std::string, std::string>, double> unionKeys = p;
    for (const auto& [key, value] : q) unionKeys.emplace(key, 0.0);
    double l1 = 0.0;
    for (const auto& [key, unused] : unionKeys) {
        const double pv = p.count(key) ? p.at(key) : 0.0;
        const double qv = q.count(key) ? q.at(key) : 0.0;
        l1 += std::abs(pv - qv);
    }
    return 1.0 - 0.5 * l1;
}

namespace {

// Reshapes a table into the post-split schema recorded by the encoder state:
// missing cells are filled from the table's own observed values (the real
// table donates when a column is entirely missing) and indicator columns are
// rebuilt from the table's masks.
Table alignToSplitSchema(const Table& t, const EncoderState& state, const Table& donor,
                         uint64_t seed) {
    std::vector<ColumnSchema> schema;
    for (const auto& enc : state.columns) {
        schema.push_back({enc.name, enc.kind, enc.unit, false});
    }
    Table out(schema, t.rowCount());

    std::map<std::string, std::string> indicatorOf;  // value column -> indicator column
    for (const auto& link : state.indicators) indicatorOf[link.valueColumn] = link.indicatorColumn;

    for (size_t c = 0; c < state.columns.size(); ++c) {
        const auto& enc = state.columns[c];
        const bool isIndicator = c > 0 && indicatorOf.count(state.columns[c - 1].name) &&
                                 indicatorOf[state.columns[c - 1].name] == enc.name;
        if (isIndicator) {
            const size_t src = t.columnIndex(state.columns[c - 1].name);
            for (size_t r = 0; r < t.rowCount(); ++r) {
                out.setCategory(c, r, t.isMissing(src, r) ? "No" : "Yes");
            }
            continue;
        }
        const size_t src = t.columnIndex(enc.name);
        std::vector<size_t> observed;
        for (size_t r = 0; r < t.rowCount(); ++r) {
            if (!t.isMissing(src, r)) observed.push_back(r);
        }
        RngStream stream(seed, src);
        const size_t donorCol = donor.columnIndex(enc.name);
        std::vector<size_t> donorObserved;
        if (observed.empty()) {
            for (size_t r = 0; r < donor.rowCount(); ++r) {
                if (!donor.isMissing(donorCol, r)) donorObserved.push_back(r);
            }
            if (donorObserved.empty()) {
                throw NumericError("learner_encode: column '" + enc.name +
                                   "' has no observed values anywhere");
            }
        }
        for (size_t r = 0; r < t.rowCount(); ++r) {
            const Table* from = &t;
            size_t row = r;
            if (t.isMissing(src, r)) {
                if (!observed.empty()) {
                    row = observed[stream.uniformIndex(observed.size())];
                } else {
                    from = &donor;
                    row = donorObserved[stream.uniformIndex(donorObserved.size())];
                }
            }
            const size_t fromCol = from == &t ? src : donorCol;
            switch (enc.kind) {
                case ColumnKind::Numeric: out.setNumber(c, r, from->numberAt(fromCol, row)); break;
                case ColumnKind::Datetime:
                    out.setTimestamp(c, r, from->timestampAt(fromCol, row));
                    break;
                case ColumnKind::Categorical:
                    out.setCategory(c, r, from->categoryAt(fromCol, row));
                    break;
                case ColumnKind::Boolean: out.setFlag(c, r, from->flagAt(fromCol, row)); break;
            }
        }
    }
    return out;
}

// Midpoint encoding of a post-split table; categories unseen by the encoder
// land on the interval midpoint 0.5.
void midpointEncode(const Table& split, const EncoderState& state, std::vector<double>& out) {
    const size_t cols = state.columns.size();
    out.assign(split.rowCount() * cols, 0.0);
    for (size_t c = 0; c < cols; ++c) {
        const auto& enc = state.columns[c];
        for (size_t r = 0; r < split.rowCount(); ++r) {
            double value;
            if (!enc.intervals.empty()) {
                const std::string cell = split.schemaAt(c).kind == ColumnKind::Boolean
                                             ? (split.flagAt(c, r) ? "true" : "false")
                                             : split.categoryAt(c, r);
                double mid = 0.5;
                for (const auto& iv : enc.intervals) {
                    if (iv.category == cell) {
                        mid = 0.5 * (iv.lo + iv.hi);
                        break;
                    }
                }
                value = mid;
            } else {
                const double raw = split.schemaAt(c).kind == ColumnKind::Datetime
                                       ? static_cast<double>(split.timestampAt(c, r))
                                       : split.numberAt(c, r);
                value = (raw - enc.center) / enc.scale;
            }
            out[r * cols + c] = value;
        }
    }
}

}  // namespace

NumericView learnerEncodePair(const Table& real, const Table& synth, uint64_t seed) {
    requireSameSchema(real, synth, "learner_encode");
    // the encoder is fit on the real side only so real-side numbers never
    // depend on the synthetic input
    const Table realSplit = splitMissing(real, seed);
    const EncoderState state = fitEncoder(realSplit, EncodeTarget::Copula, {}, seed);
    const Table synthSplit = alignToSplitSchema(synth, state, real, seed ^ fnv1a64("synth-fill"));

    std::vector<double> realAll, synthAll;
    midpointEncode(realSplit, state, realAll);
    midpointEncode(synthSplit, state, synthAll);

    // constant real columns carry no signal and break linear solvers
    const size_t cols = state.columns.size();
    std::vector<uint8_t> keep(cols, 0);
    std::vector<size_t> kept;
    for (size_t c = 0; c < cols; ++c) {
        const double first = realAll.empty() ? 0.0 : realAll[c];
        for (size_t r = 0; r < real.rowCount(); ++r) {
            if (realAll[r * cols + c] != first) {
                keep[c] = 1;
                break;
            }
        }
        if (keep[c]) kept.push_back(c);
    }

    NumericView view;
    view.cols = kept.size();
    for (size_t c : kept) view.names.push_back(state.columns[c].name);
    view.realMatrix.resize(real.rowCount() * view.cols);
    view.synthMatrix.resize(synth.rowCount() * view.cols);
    for (size_t r = 0; r < real.rowCount(); ++r) {
        for (size_t k = 0; k < kept.size(); ++k) {
            view.realMatrix[r * view.cols + k] = realAll[r * cols + kept[k]];
        }
    }
    for (size_t r = 0; r < synth.rowCount(); ++r) {
        for (size_t k = 0; k < kept.size(); ++k) {
            view.synthMatrix[r * view.cols + k] = synthAll[r * cols + kept[k]];
        }
    }
    return view;
}

DiversitySection diversityStage(const Table& real, const Table& synth, uint64_t seed) {
    requireSameSchema(real, synth, "diversity_stage");
    DiversitySection section;

    const NumericView view = learnerEncodePair(real, synth, seed ^ fnv1a64("diversity-encode"));
    const PcaModel pca = pcaFit(view.realMatrix, real.rowCount(), view.cols);
    section.realCoords = pcaProject(pca, view.realMatrix, real.rowCount(), view.cols);
    section.synthCoords = pcaProject(pca, view.synthMatrix, synth.rowCount(), view.cols);
    section.explained1 = pca.explained1;
    section.explained2 = pca.explained2;

    for (const char* column : {col::kDepDelayLabel, col::kArrDelayLabel}) {
        if (!real.hasColumn(column)) continue;
        const auto realCats = categoryValues(real, real.columnIndex(column));
        const auto synthCats = categoryValues(synth, synth.columnIndex(column));
        const auto p = frequencies(realCats);
        const auto q = synthCats.empty() ? std::map<std::string, double>{} : frequencies(synthCats);
        std::map<std::string, double> unionKeys;
        for (const auto& [key, value] : p) unionKeys[key] = 0.0;
        for (const auto& [key, value] : q) unionKeys[key] = 0.0;
        for (const auto& [key, unused] : unionKeys) {
            BalanceRow row;
            row.column = column;
            row.label = key;
            row.realPct = (p.count(key) ? p.at(key) : 0.0) * 100.0;
            row.synthPct = (q.count(key) ? q.at(key) : 0.0) * 100.0;
            section.maxBalanceGapPct =
                std::max(section.maxBalanceGapPct, std::abs(row.realPct - row.synthPct));
            section.classBalance.push_back(std::move(row));
        }
    }
    return section;
}

StatisticalSection statisticalStage(const Table& real, const Table& synth) {
    requireSameSchema(real, synth, "statistical_stage");
    StatisticalSection section;

    for (size_t c = 0; c < real.columnCount(); ++c) {
        const auto& schema = real.schemaAt(c);
        ColumnScore score;
        score.column = schema.name;
        if (isContinuousKind(schema.kind)) {
            const auto realValues = continuousValues(real, c);
            const auto synthValues = continuousValues(synth, c);
            if (realValues.empty() || synthValues.empty()) {
                section.skipped.push_back(schema.name + ": no observed values on one side");
                continue;
            }
            score.metric = "ks";
            score.score = ksScore(realValues, synthValues);
        } else {
            const auto realValues = categoryValues(real, c);
            const auto synthValues = categoryValues(synth, c);
            if (realValues.empty() || synthValues.empty()) {
                section.skipped.push_back(schema.name + ": no observed values on one side");
                continue;
            }
            score.metric = "tvd";
            score.score = tvdScore(realValues, synthValues);
        }
        section.marginal.push_back(std::move(score));
    }

    // decile cut points from the real side, reused for both tables
    std::vector<std::vector<double>> cuts(real.columnCount());
    for (size_t c = 0; c < real.columnCount(); ++c) {
        if (isContinuousKind(real.schemaAt(c).kind)) {
            const auto values = continuousValues(real, c);
            if (!values.empty()) cuts[c] = decileBoundaries(values);
        }
    }

    std::vector<double> ax, ay, bx, by;
    std::vector<std::string> ca, cb, sa, sb;
    for (size_t i = 0; i < real.columnCount(); ++i) {
        for (size_t j = i + 1; j < real.columnCount(); ++j) {
            const bool bothContinuous = isContinuousKind(real.schemaAt(i).kind) &&
                                        isContinuousKind(real.schemaAt(j).kind);
            PairScore score;
            score.columnA = real.schemaAt(i).name;
            score.columnB = real.schemaAt(j).name;
            if (bothContinuous) {
                pairwiseComplete(real, i, j, ax, ay);
                pairwiseComplete(synth, i, j, bx, by);
                if (ax.size() < 2 || bx.size() < 2) {
                    section.skipped.push_back(score.columnA + "/" + score.columnB +
                                              ": too few complete rows");
                    continue;
                }
                const auto similarity = correlationSimilarity(ax, ay, bx, by);
                if (!similarity.has_value()) {
                    section.skipped.push_back(score.columnA + "/" + score.columnB +
                                              ": constant column in pair");
                    continue;
                }
                score.metric = "correlation";
                score.score = *similarity;
            } else {
                const std::vector<double>* cutsA = cuts[i].empty() ? nullptr : &cuts[i];
                const std::vector<double>* cutsB = cuts[j].empty() ? nullptr : &cuts[j];
                if ((isContinuousKind(real.schemaAt(i).kind) && !cutsA) ||
                    (isContinuousKind(real.schemaAt(j).kind) && !cutsB)) {
                    section.skipped.push_back(score.columnA + "/" + score.columnB +
                                              ": no observed values for deciles");
                    continue;
                }
                pairwiseCompleteCats(real, i, j, cutsA, cutsB, ca, cb);
                pairwiseCompleteCats(synth, i, j, cutsA, cutsB, sa, sb);
                if (ca.empty() || sa.empty()) {
                    section.skipped.push_back(score.columnA + "/" + score.columnB +
                                              ": too few complete rows");
                    continue;
                }
                score.metric = "contingency";
                score.score = contingencySimilarity(ca, cb, sa, sb);
            }
            section.bivariate.push_back(std::move(score));
        }
    }

    std::vector<double> marginalScores, bivariateScores;
    for (const auto& s : section.marginal) marginalScores.push_back(s.score);
    for (const auto& s : section.bivariate) bivariateScores.push_back(s.score);
    section.marginalAggregate = meanOf(marginalScores);
    section.bivariateAggregate = meanOf(bivariateScores);
    section.average = 0.5 * (section.marginalAggregate + section.bivariateAggregate);
    return section;
}

FidelitySection fidelityStage(const Table& real, const Table& synth,
                              const std::vector<ClassifierSpec>& specs, uint64_t seed) {
    requireSameSchema(real, synth, "fidelity_stage");
    if (real.rowCount() == 0 || synth.rowCount() == 0) {
        throw ConfigError("fidelity_stage: empty table");
    }
    FidelitySection section;

    // balance class sizes by downsampling the larger side
    const size_t m = std::min(real.rowCount(), synth.rowCount());
    section.rowsPerClass = m;
    auto downsample = [&](const Table& t, uint64_t streamId) {
        if (t.rowCount() == m) return t;
        RngStream rng(seed, streamId);
        const auto picks = rng.sampleWithoutReplacement(t.rowCount(), m);
        std::vector<uint8_t> keep(t.rowCount(), 0);
        for (size_t idx : picks) keep[idx] = 1;
        return t.filterRows(keep);
    };
    const Table realBalanced = downsample(real, fnv1a64("fidelity-downsample-real"));
    const Table synthBalanced = downsample(synth, fnv1a64("fidelity-downsample-synth"));

    const NumericView view =
        learnerEncodePair(realBalanced, synthBalanced, seed ^ fnv1a64("fidelity-encode"));

    Dataset all;
    all.rows = 2 * m;
    all.cols = view.cols;
    all.featureNames = view.names;
    all.features = view.realMatrix;
    all.features.insert(all.features.end(), view.synthMatrix.begin(), view.synthMatrix.end());
    all.labels.assign(2 * m, 0);
    for (size_t r = m; r < 2 * m; ++r) all.labels[r] = 1;  // synthetic = positive class

    const FoldPlan plan = stratifiedKfold(all.labels, 5, seed ^ fnv1a64("fidelity-folds"));

    for (const auto& spec : specs) {
        FidelityEntry entry;
        entry.classifier = classifierName(spec.kind);
        try {
            double accuracySum = 0.0, f1Sum = 0.0;
            for (size_t f = 0; f < plan.folds.size(); ++f) {
                std::vector<uint8_t> inFold(all.rows, 0);
                for (size_t idx : plan.folds[f]) inFold[idx] = 1;

                Dataset train, test;
                train.cols = test.cols = all.cols;
                for (size_t r = 0; r < all.rows; ++r) {
                    Dataset& dst = inFold[r] ? test : train;
                    dst.features.insert(dst.features.end(), all.row(r), all.row(r) + all.cols);
                    dst.labels.push_back(all.labels[r]);
                    dst.rows++;
                }
                ClassifierSpec foldSpec = spec;
                foldSpec.seed = spec.seed ^ fnv1a64(entry.classifier) ^ (seed + f);
                auto model = makeClassifier(foldSpec);
                model->fit(train);
                const auto predictions = model->predictAll(test);
                const auto metrics = classificationMetrics(predictions, test.labels);
                accuracySum += metrics.accuracy;
                f1Sum += metrics.f1;
            }
            entry.accuracy = accuracySum / static_cast<double>(plan.folds.size());
            entry.f1 = f1Sum / static_cast<double>(plan.folds.size());
        } catch (const Error& e) {
            entry.failed = true;
            entry.error = e.what();
        }
        section.perClassifier.push_back(std::move(entry));
    }

    std::vector<double> accuracies, f1s;
    for (const auto& entry : section.perClassifier) {
        if (entry.failed) continue;
        accuracies.push_back(entry.accuracy);
        f1s.push_back(entry.f1);
    }
    if (accuracies.empty()) throw NumericError("fidelity_stage: every classifier failed");
    section.averageAccuracy = meanOf(accuracies);
    section.averageF1 = meanOf(f1s);
    return section;
}

UtilitySection utilityStage(const Table& real, const Table& synth,
                            const std::vector<RegressorSpec>& specs, uint64_t seed) {
    std::vector<std::string> columns = predictionFeatures();
    columns.push_back(kPredictionTarget);
    const Table realView = real.selectColumns(columns);   // throws if the target is absent
    const Table synthView = synth.selectColumns(columns);

    // utility rows need a fully observed feature set and target
    auto completeRows = [&](const Table& t) {
        std::vector<uint8_t> keep(t.rowCount(), 1);
        for (size_t r = 0; r < t.rowCount(); ++r) {
            for (size_t c = 0; c < t.columnCount(); ++c) {
                if (t.isMissing(c, r)) {
                    keep[r] = 0;
                    break;
                }
            }
        }
        return t.filterRows(keep);
    };
    const Table realComplete = completeRows(realView);
    const Table synthComplete = completeRows(synthView);
    if (realComplete.rowCount() < 10 || synthComplete.rowCount() < 10) {
        throw ConfigError("utility_stage: fewer than 10 complete rows");
    }

    UtilitySection section;

    // 80/20 split, order-preserving so that synthetic == real-train implies
    // identical training matrices
    RngStream splitRng(seed, fnv1a64("utility-split"));
    const size_t holdoutCount = std::max<size_t>(1, realComplete.rowCount() / 5);
    const auto holdoutIdx =
        splitRng.sampleWithoutReplacement(realComplete.rowCount(), holdoutCount);
    std::vector<uint8_t> isHoldout(realComplete.rowCount(), 0);
    for (size_t idx : holdoutIdx) isHoldout[idx] = 1;
    section.holdoutRows = holdoutCount;
    section.holdoutTooSmall = holdoutCount < 100;

    const NumericView view =
        learnerEncodePair(realComplete, synthComplete, seed ^ fnv1a64("utility-encode"));
    size_t targetCol = view.names.size();
    for (size_t c = 0; c < view.names.size(); ++c) {
        if (view.names[c] == kPredictionTarget) targetCol = c;
    }
    if (targetCol == view.names.size()) {
        throw SchemaError("utility_stage: target column vanished during encoding");
    }
    const size_t featureCols = view.cols - 1;

    auto buildDataset = [&](const std::vector<double>& matrix, size_t rows,
                            const std::vector<uint8_t>* mask, bool wantMasked) {
        Dataset data;
        data.cols = featureCols;
        for (size_t c = 0; c < view.names.size(); ++c) {
            if (c != targetCol) data.featureNames.push_back(view.names[c]);
        }
        for (size_t r = 0; r < rows; ++r) {
            if (mask && (*mask)[r] != (wantMasked ? 1 : 0)) continue;
            for (size_t c = 0; c < view.cols; ++c) {
                if (c != targetCol) data.features.push_back(matrix[r * view.cols + c]);
            }
            data.rows++;
        }
        return data;
    };
    auto collectTargets = [&](const Table& t, const std::vector<uint8_t>* mask, bool wantMasked) {
        std::vector<double> out;
        const size_t c = t.columnIndex(kPredictionTarget);
        for (size_t r = 0; r < t.rowCount(); ++r) {
            if (mask && (*mask)[r] != (wantMasked ? 1 : 0)) continue;
            out.push_back(t.numberAt(c, r));
        }
        return out;
    };

    Dataset realTrain = buildDataset(view.realMatrix, realComplete.rowCount(), &isHoldout, false);
    realTrain.target = collectTargets(realComplete, &isHoldout, false);
    Dataset holdout = buildDataset(view.realMatrix, realComplete.rowCount(), &isHoldout, true);
    holdout.target = collectTargets(realComplete, &isHoldout, true);
    Dataset synthTrain = buildDataset(view.synthMatrix, synthComplete.rowCount(), nullptr, false);
    synthTrain.target = collectTargets(synthComplete, nullptr, false);

    for (const auto& spec : specs) {
        UtilityEntry entry;
        entry.regressor = regressorName(spec.kind);
        try {
            RegressorSpec runSpec = spec;
            runSpec.seed = spec.seed ^ fnv1a64(entry.regressor) ^ seed;
            auto trtrModel = makeRegressor(runSpec);
            trtrModel->fit(realTrain);
            entry.trtr = regressionMetrics(trtrModel->predictAll(holdout), holdout.target);

            auto tstrModel = makeRegressor(runSpec);
            tstrModel->fit(synthTrain);
            entry.tstr = regressionMetrics(tstrModel->predictAll(holdout), holdout.target);
        } catch (const Error& e) {
            entry.failed = true;
            entry.error = e.what();
        }
        section.perRegressor.push_back(std::move(entry));
    }

    std::vector<double> trtrMae, trtrRmse, trtrR2, tstrMae, tstrRmse, tstrR2;
    for (const auto& entry : section.perRegressor) {
        if (entry.failed) continue;
        trtrMae.push_back(entry.trtr.mae);
        trtrRmse.push_back(entry.trtr.rmse);
        trtrR2.push_back(entry.trtr.r2);
        tstrMae.push_back(entry.tstr.mae);
        tstrRmse.push_back(entry.tstr.rmse);
        tstrR2.push_back(entry.tstr.r2);
    }
    if (trtrMae.empty()) throw NumericError("utility_stage: every regressor failed");
    section.trtrAverage = {meanOf(trtrMae), meanOf(trtrRmse), meanOf(trtrR2)};
    section.tstrAverage = {meanOf(tstrMae), meanOf(tstrRmse), meanOf(tstrR2)};
    return section;
}

namespace {

void crossCheckAggregate(double stored, const std::vector<double>& parts, const char* what) {
    double sum = 0.0;
    for (double v : parts) sum += v;
    const double mean = parts.empty() ? 0.0 : sum / static_cast<double>(parts.size());
    if (std::abs(mean - stored) > 1e-12) {
        throw Error(std::string("assemble_report: aggregate mismatch for ") + what);
    }
}

}  // namespace

EvaluationReport assembleReport(std::optional<DiversitySection> diversity,
                                std::optional<StatisticalSection> statistical,
                                std::optional<FidelitySection> fidelity,
                                std::optional<UtilitySection> utility, Provenance provenance) {
    if (!diversity && !statistical && !fidelity && !utility) {
        throw ConfigError("assemble_report: at least one stage is required");
    }
    EvaluationReport report;
    report.provenance = std::move(provenance);

    if (statistical) {
        std::vector<double> marginal, bivariate;
        for (const auto& s : statistical->marginal) marginal.push_back(s.score);
        for (const auto& s : statistical->bivariate) bivariate.push_back(s.score);
        crossCheckAggregate(statistical->marginalAggregate, marginal, "marginal");
        crossCheckAggregate(statistical->bivariateAggregate, bivariate, "bivariate");
        crossCheckAggregate(statistical->average,
                            {statistical->marginalAggregate, statistical->bivariateAggregate},
                            "statistical average");
    }
    if (fidelity) {
        std::vector<double> accuracy, f1;
        for (const auto& entry : fidelity->perClassifier) {
            if (entry.failed) continue;
            accuracy.push_back(entry.accuracy);
            f1.push_back(entry.f1);
        }
        crossCheckAggregate(fidelity->averageAccuracy, accuracy, "fidelity accuracy");
        crossCheckAggregate(fidelity->averageF1, f1, "fidelity F1");
    }
    if (utility) {
        std::vector<double> mae, rmse, r2;
        for (const auto& entry : utility->perRegressor) {
            if (entry.failed) continue;
            mae.push_back(entry.tstr.mae);
            rmse.push_back(entry.tstr.rmse);
            r2.push_back(entry.tstr.r2);
        }
        crossCheckAggregate(utility->tstrAverage.mae, mae, "tstr mae");
        crossCheckAggregate(utility->tstrAverage.rmse, rmse, "tstr rmse");
        crossCheckAggregate(utility->tstrAverage.r2, r2, "tstr r2");
    }

    report.diversity = std::move(diversity);
    report.statistical = std::move(statistical);
    report.fidelity = std::move(fidelity);
    report.utility = std::move(utility);
    return report;
}

nlohmann::json EvaluationReport::toJson() const {
    nlohmann::json doc;
    doc["provenance"] = {{"seed", provenance.seed},
                         {"config_hash", provenance.configHash},
                         {"tool_version", provenance.toolVersion},
                         {"real_fingerprint", provenance.realFingerprint},
                         {"synth_fingerprint", provenance.synthFingerprint},
                         {"notes", provenance.notes}};
    if (diversity) {
        nlohmann::json section;
        section["explained_variance"] = {diversity->explained1, diversity->explained2};
        section["real_points"] = diversity->realCoords.size() / 2;
        section["synth_points"] = diversity->synthCoords.size() / 2;
        section["max_balance_gap_pct"] = diversity->maxBalanceGapPct;
        section["class_balance"] = nlohmann::json::array();
        for (const auto& row : diversity->classBalance) {
            section["class_balance"].push_back({{"column", row.column},
                                                {"label", row.label},
                                                {"real_pct", row.realPct},
                                                {"synth_pct", row.synthPct}});
        }
        doc["diversity"] = std::move(section);
    }
    if (statistical) {
        nlohmann::json section;
        section["marginal"] = nlohmann::json::array();
        for (const auto& s : statistical->marginal) {
            section["marginal"].push_back(
                {{"column", s.column}, {"metric", s.metric}, {"score", s.score}});
        }
        section["bivariate"] = nlohmann::json::array();
        for (const auto& s : statistical->bivariate) {
            section["bivariate"].push_back({{"column_a", s.columnA},
                                            {"column_b", s.columnB},
                                            {"metric", s.metric},
                                            {"score", s.score}});
        }
        section["skipped"] = statistical->skipped;
        section["marginal_aggregate"] = statistical->marginalAggregate;
        section["bivariate_aggregate"] = statistical->bivariateAggregate;
        section["average"] = statistical->average;
        doc["statistical"] = std::move(section);
    }
    if (fidelity) {
        nlohmann::json section;
        section["per_classifier"] = nlohmann::json::array();
        for (const auto& entry : fidelity->perClassifier) {
            nlohmann::json e = {{"classifier", entry.classifier},
                                {"accuracy", entry.accuracy},
                                {"f1", entry.f1},
                                {"failed", entry.failed}};
            if (entry.failed) e["error"] = entry.error;
            section["per_classifier"].push_back(std::move(e));
        }
        section["average_accuracy"] = fidelity->averageAccuracy;
        section["average_f1"] = fidelity->averageF1;
        section["rows_per_class"] = fidelity->rowsPerClass;
        doc["fidelity"] = std::move(section);
    }
    if (utility) {
        nlohmann::json section;
        section["per_regressor"] = nlohmann::json::array();
        for (const auto& entry : utility->perRegressor) {
            nlohmann::json e = {{"regressor", entry.regressor}, {"failed", entry.failed}};
            if (entry.failed) {
                e["error"] = entry.error;
            } else {
                e["trtr"] = {{"mae", entry.trtr.mae}, {"rmse", entry.trtr.rmse}, {"r2", entry.trtr.r2}};
                e["tstr"] = {{"mae", entry.tstr.mae}, {"rmse", entry.tstr.rmse}, {"r2", entry.tstr.r2}};
            }
            section["per_regressor"].push_back(std::move(e));
        }
        section["trtr_average"] = {{"mae", utility->trtrAverage.mae},
                                   {"rmse", utility->trtrAverage.rmse},
                                   {"r2", utility->trtrAverage.r2}};
        section["tstr_average"] = {{"mae", utility->tstrAverage.mae},
                                   {"rmse", utility->tstrAverage.rmse},
                                   {"r2", utility->tstrAverage.r2}};
        section["holdout_rows"] = utility->holdoutRows;
        section["holdout_too_small"] = utility->holdoutTooSmall;
        doc["utility"] = std::move(section);
    }
    return doc;
}

namespace {

std::string pct(double fraction) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(2);
    os << fraction * 100.0 << "%";
    return os.str();
}

std::string fixed2(double v) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(2);
    os << v;
    return os.str();
}

}  // namespace

std::string renderSummaryMarkdown(const EvaluationReport& report) {
    std::ostringstream md;
    md << "# Synthetic data evaluation\n\n";
    md << "seed " << report.provenance.seed << ", config " << report.provenance.configHash << "\n\n";

    if (report.diversity) {
        md << "## Diversity\n\n";
        md << "PCA explained variance: " << fixed2(report.diversity->explained1 * 100.0) << "% / "
           << fixed2(report.diversity->explained2 * 100.0) << "%\n\n";
        md << "| Delay label | Real | Synthetic |\n|---|---|---|\n";
        for (const auto& row : report.diversity->classBalance) {
            md << "| " << row.column << " = " << row.label << " | " << fixed2(row.realPct)
               << "% | " << fixed2(row.synthPct) << "% |\n";
        }
        md << "\n";
    }
    if (report.statistical) {
        md << "## Statistical similarity\n\n";
        md << "| Statistical similarity | Score |\n|---|---|\n";
        md << "| Marginal distribution | " << pct(report.statistical->marginalAggregate) << " |\n";
        md << "| Bivariate distributions | " << pct(report.statistical->bivariateAggregate)
           << " |\n";
        md << "| Average | " << pct(report.statistical->average) << " |\n\n";
    }
    if (report.fidelity) {
        md << "## Fidelity (discriminative score)\n\n";
        md << "| Discriminative score | Value |\n|---|---|\n";
        md << "| Average Accuracy | " << pct(report.fidelity->averageAccuracy) << " |\n";
        md << "| Average F1 Score | " << pct(report.fidelity->averageF1) << " |\n\n";
        md << "| Classifier | Accuracy | F1 |\n|---|---|---|\n";
        for (const auto& entry : report.fidelity->perClassifier) {
            if (entry.failed) {
                md << "| " << entry.classifier << " | failed | failed |\n";
            } else {
                md << "| " << entry.classifier << " | " << pct(entry.accuracy) << " | "
                   << pct(entry.f1) << " |\n";
            }
        }
        md << "\n";
    }
    if (report.utility) {
        md << "## Utility (arrival delay prediction)\n\n";
        md << "| Predictive score | TRTR | TSTR |\n|---|---|---|\n";
        md << "| Average RMSE | " << fixed2(report.utility->trtrAverage.rmse) << " | "
           << fixed2(report.utility->tstrAverage.rmse) << " |\n";
        md << "| Average MAE | " << fixed2(report.utility->trtrAverage.mae) << " | "
           << fixed2(report.utility->tstrAverage.mae) << " |\n";
        md << "| Average R2 | " << fixed2(report.utility->trtrAverage.r2) << " | "
           << fixed2(report.utility->tstrAverage.r2) << " |\n\n";
    }
    return md.str();
}

void writeReportFiles(const EvaluationReport& report, const std::string& outDir) {
    std::filesystem::create_directories(outDir);
    {
        std::ofstream out(outDir + "/report.json", std::ios::trunc);
        if (!out) throw IoError("cannot write report: " + outDir);
        out << report.toJson().dump(2) << "\n";
    }
    {
        std::ofstream out(outDir + "/summary.md", std::ios::trunc);
        out << renderSummaryMarkdown(report);
    }
    if (report.diversity) {
        std::filesystem::create_directories(outDir + "/plots");
        auto writeCoords = [&](const std::vector<double>& coords, const std::string& path) {
            std::ofstream out(path, std::ios::trunc);
            out << "pc1,pc2\n";
            for (size_t i = 0; i + 1 < coords.size(); i += 2) {
                out << formatNumber(coords[i]) << ',' << formatNumber(coords[i + 1]) << '\n';
            }
        };
        writeCoords(report.diversity->realCoords, outDir + "/plots/pca_real.csv");
        writeCoords(report.diversity->synthCoords, outDir + "/plots/pca_synthetic.csv");
        std::ofstream balance(outDir + "/plots/class_balance.csv", std::ios::trunc);
        balance << "column,label,real_pct,synth_pct\n";
        for (const auto& row : report.diversity->classBalance) {
            balance << row.column << ',' << row.label << ',' << formatNumber(row.realPct) << ','
                    << formatNumber(row.synthPct) << '\n';
        }
    }
    if (report.statistical) {
        std::filesystem::create_directories(outDir + "/plots");
        std::ofstream marginal(outDir + "/plots/marginal_scores.csv", std::ios::trunc);
        marginal << "column,metric,score\n";
        for (const auto& s : report.statistical->marginal) {
            marginal << s.column << ',' << s.metric << ',' << formatNumber(s.score) << '\n';
        }
        std::ofstream bivariate(outDir + "/plots/bivariate_scores.csv", std::ios::trunc);
        bivariate << "column_a,column_b,metric,score\n";
        for (const auto& s : report.statistical->bivariate) {
            bivariate << s.columnA << ',' << s.columnB << ',' << s.metric << ','
                      << formatNumber(s.score) << '\n';
        }
    }
}

}  // namespace synthflight
