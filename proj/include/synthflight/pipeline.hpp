#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "synthflight/copula.hpp"
#include "synthflight/evaluate.hpp"
#include "synthflight/ingest.hpp"
#include "synthflight/reconstruct.hpp"
#include "synthflight/tvae.hpp"

namespace synthflight {

inline constexpr const char* kToolVersion = "synthflight 0.1.0";

enum class GeneratorKind { Gc, Tvae };
const char* generatorName(GeneratorKind kind);
GeneratorKind generatorFromName(const std::string& name);

// One experiment: generator, input frame, sizes, cleaning and evaluation
// settings, all reproduced from a single master seed. Presets 1-5 bind
// (generator, frame, caps) to the fixed experiment matrix:
//   1 tvae/utc_ts   2 tvae/utc_d   3 tvae/utc_d_2
//   4 gc/utc_ts cap 5000           5 gc/utc_d_2 cap 5000
struct ExperimentConfig {
    int preset = 0;  // 0 = custom
    GeneratorKind generator = GeneratorKind::Gc;
    FrameVariant frame = FrameVariant::UtcD2;
    size_t trainRowCap = 0;   // 0 = uncapped
    size_t sampleCount = 0;   // 0 = one synthetic row per (capped) training row
    uint64_t seed = 42;
    TrainConfig tvae;
    GcOptions gc;
    FilterConfig cleaning;
    std::vector<std::string> stages = {"diversity", "statistical", "fidelity", "utility"};
    std::vector<std::string> classifiers;  // empty = full seven-model roster
    std::vector<std::string> regressors;   // empty = full nine-model roster

    std::string rawPath;
    std::string airportsPath;
    std::string mappingPath;  // empty = built-in BTS mapping
    std::string outDir;

    static ExperimentConfig fromPreset(int id);
    nlohmann::json toJson() const;
    static ExperimentConfig fromJson(const nlohmann::json& doc);
    std::string hash() const;  // stable hex digest of the canonical JSON

    std::vector<ClassifierSpec> classifierSpecs() const;
    std::vector<RegressorSpec> regressorSpecs() const;
    uint64_t stageSeed(const char* stage) const { return seed ^ fnv1a64(stage); }
};

// Hex FNV-1a of a file's bytes; the manifest's artifact digest.
std::string fileDigest(const std::string& path);

// Sidecar provenance for CSV artifacts: <path>.meta.json
void writeArtifactMeta(const std::string& artifactPath, const std::string& configHash,
                       uint64_t seed);

struct PipelineResult {
    nlohmann::json manifest;
    std::string manifestPath;
};

// ingest -> fit -> sample -> reconstruct -> evaluate, stopping at the first
// failing stage; the manifest records completed stages and artifact digests.
PipelineResult runPipeline(const ExperimentConfig& config);

// Individual stages, shared by the CLI subcommands.
struct IngestArtifacts {
    std::string fullTableCsv;
    std::vector<std::string> frameCsvs;
    std::string routesCsv;
    std::string reportJson;
};
IngestArtifacts runIngest(const std::string& rawPath, const std::string& airportsPath,
                          const std::string& mappingPath, const std::vector<FrameVariant>& frames,
                          const std::string& outDir);

}  // namespace synthflight
