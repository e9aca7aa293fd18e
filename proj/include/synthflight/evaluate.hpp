#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "synthflight/learners.hpp"
#include "synthflight/numkit.hpp"
#include "synthflight/table.hpp"

namespace synthflight {

// --------------------------------------------------------------------------
// Column / pair scores (all in [0, 1], 1 = identical distributions).
// --------------------------------------------------------------------------

// 1 - L1/2 over the union of categories.
double tvdScore(const std::vector<std::string>& real, const std::vector<std::string>& synth);

// 1 - sup |ECDF_real - ECDF_synth|, exact over the merged sample.
double ksScore(const std::vector<double>& real, const std::vector<double>& synth);

// 1 - |rho_real - rho_synth| / 2; nullopt when either pair is degenerate.
std::optional<double> correlationSimilarity(const std::vector<double>& realX,
                                            const std::vector<double>& realY,
                                            const std::vector<double>& synthX,
                                            const std::vector<double>& synthY);

// 1 - L1/2 over the union of joint categories.
double contingencySimilarity(const std::vector<std::string>& realA,
                             const std::vector<std::string>& realB,
                             const std::vector<std::string>& synthA,
                             const std::vector<std::string>& synthB);

// --------------------------------------------------------------------------
// Report sections
// --------------------------------------------------------------------------

struct BalanceRow {
    std::string column;
    std::string label;
    double realPct = 0.0;
    double synthPct = 0.0;
};

struct DiversitySection {
    std::vector<double> realCoords;   // n x 2 row-major PCA projections
    std::vector<double> synthCoords;
    double explained1 = 0.0;
    double explained2 = 0.0;
    std::vector<BalanceRow> classBalance;
    double maxBalanceGapPct = 0.0;
};

struct ColumnScore {
    std::string column;
    std::string metric;  // "tvd" or "ks"
    double score = 0.0;
};

struct PairScore {
    std::string columnA;
    std::string columnB;
    std::string metric;  // "correlation" or "contingency"
    double score = 0.0;
};

struct StatisticalSection {
    std::vector<ColumnScore> marginal;
    std::vector<PairScore> bivariate;
    std::vector<std::string> skipped;  // degenerate columns/pairs, with reasons
    double marginalAggregate = 0.0;
    double bivariateAggregate = 0.0;
    double average = 0.0;
};

struct FidelityEntry {
    std::string classifier;
    double accuracy = 0.0;
    double f1 = 0.0;
    bool failed = false;
    std::string error;
};

struct FidelitySection {
    std::vector<FidelityEntry> perClassifier;
    double averageAccuracy = 0.0;  // lower = better fidelity
    double averageF1 = 0.0;
    size_t rowsPerClass = 0;
};

struct UtilityEntry {
    std::string regressor;
    RegressionMetrics trtr;
    RegressionMetrics tstr;
    bool failed = false;
    std::string error;
};

struct UtilitySection {
    std::vector<UtilityEntry> perRegressor;
    RegressionMetrics trtrAverage;
    RegressionMetrics tstrAverage;
    size_t holdoutRows = 0;
    bool holdoutTooSmall = false;  // < 100 rows
};

struct Provenance {
    uint64_t seed = 0;
    std::string configHash;
    std::string toolVersion;
    std::string realFingerprint;
    std::string synthFingerprint;
    std::string notes;
};

struct EvaluationReport {
    std::optional<DiversitySection> diversity;
    std::optional<StatisticalSection> statistical;
    std::optional<FidelitySection> fidelity;
    std::optional<UtilitySection> utility;
    Provenance provenance;

    nlohmann::json toJson() const;
};

// --------------------------------------------------------------------------
// Stages. Both tables must share a schema (names and kinds).
// --------------------------------------------------------------------------

DiversitySection diversityStage(const Table& real, const Table& synth, uint64_t seed);
StatisticalSection statisticalStage(const Table& real, const Table& synth);
FidelitySection fidelityStage(const Table& real, const Table& synth,
                              const std::vector<ClassifierSpec>& specs, uint64_t seed);
UtilitySection utilityStage(const Table& real, const Table& synth,
                            const std::vector<RegressorSpec>& specs, uint64_t seed);

// Merges sections, recomputes and cross-checks every aggregate (1e-12).
EvaluationReport assembleReport(std::optional<DiversitySection> diversity,
                                std::optional<StatisticalSection> statistical,
                                std::optional<FidelitySection> fidelity,
                                std::optional<UtilitySection> utility, Provenance provenance);

// report.json + plot-data CSVs + summary.md under outDir.
void writeReportFiles(const EvaluationReport& report, const std::string& outDir);
std::string renderSummaryMarkdown(const EvaluationReport& report);

// Shared numeric view for the learner-driven stages: split_missing followed
// by frequency-interval midpoints for categoricals and standardized epochs
// for datetimes. The encoder is fit on the union of both tables so synthetic
// categories unseen in the real data still encode.
struct NumericView {
    std::vector<std::string> names;
    std::vector<double> realMatrix;   // nReal x cols
    std::vector<double> synthMatrix;  // nSynth x cols
    size_t cols = 0;
};
NumericView learnerEncodePair(const Table& real, const Table& synth, uint64_t seed);

}  // namespace synthflight
