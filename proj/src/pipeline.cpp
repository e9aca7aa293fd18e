#include "synthflight/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "synthflight/table_io.hpp"

namespace synthflight {

namespace {

nlohmann::json filterToJson(const FilterConfig& f) {
    return {{"non_negative_durations", f.nonNegativeDurations},
            {"elapsed_consistency", f.elapsedConsistency},
            {"elapsed_tolerance_min", f.elapsedToleranceMin},
            {"speed_plausibility", f.speedPlausibility},
            {"speed_min_mph", f.speedMinMph},
            {"speed_max_mph", f.speedMaxMph}};
}

FilterConfig filterFromJson(const nlohmann::json& doc) {
    FilterConfig f;
    f.nonNegativeDurations = doc.value("non_negative_durations", f.nonNegativeDurations);
    f.elapsedConsistency = doc.value("elapsed_consistency", f.elapsedConsistency);
    f.elapsedToleranceMin = doc.value("elapsed_tolerance_min", f.elapsedToleranceMin);
    f.speedPlausibility = doc.value("speed_plausibility", f.speedPlausibility);
    f.speedMinMph = doc.value("speed_min_mph", f.speedMinMph);
    f.speedMaxMph = doc.value("speed_max_mph", f.speedMaxMph);
    return f;
}

}  // namespace

const char* generatorName(GeneratorKind kind) {
    return kind == GeneratorKind::Gc ? "gc" : "tvae";
}

GeneratorKind generatorFromName(const std::string& name) {
    if (name == "gc") return GeneratorKind::Gc;
    if (name == "tvae") return GeneratorKind::Tvae;
    throw ConfigError("unknown generator: " + name);
}

ExperimentConfig ExperimentConfig::fromPreset(int id) {
    ExperimentConfig config;
    config.preset = id;
    switch (id) {
        case 1:
            config.generator = GeneratorKind::Tvae;
            config.frame = FrameVariant::UtcTs;
            break;
        case 2:
            config.generator = GeneratorKind::Tvae;
            config.frame = FrameVariant::UtcD;
            break;
        case 3:
            config.generator = GeneratorKind::Tvae;
            config.frame = FrameVariant::UtcD2;
            break;
        case 4:
            config.generator = GeneratorKind::Gc;
            config.frame = FrameVariant::UtcTs;
            config.trainRowCap = 5000;
            break;
        case 5:
            config.generator = GeneratorKind::Gc;
            config.frame = FrameVariant::UtcD2;
            config.trainRowCap = 5000;
            break;
        default:
            throw ConfigError("preset must be 1..5, got " + std::to_string(id));
    }
    return config;
}

nlohmann::json ExperimentConfig::toJson() const {
    nlohmann::json doc;
    doc["preset"] = preset;
    doc["generator"] = generatorName(generator);
    doc["frame"] = frameVariantName(frame);
    doc["train_row_cap"] = trainRowCap;
    doc["sample_count"] = sampleCount;
    doc["seed"] = seed;
    doc["tvae"] = {{"epochs", tvae.epochs},
                   {"learning_rate", tvae.learningRate},
                   {"batch_size", tvae.batchSize},
                   {"weight_decay", tvae.weightDecay},
                   {"hidden1", tvae.arch.hidden1},
                   {"hidden2", tvae.arch.hidden2},
                   {"latent", tvae.arch.latent},
                   {"mode_normalization", tvae.modeNormalization},
                   {"kl_warmup", tvae.klWarmup},
                   {"stochastic_categorical", tvae.stochasticCategorical}};
    doc["gc"] = {{"row_cap", gc.rowCap}};
    doc["cleaning"] = filterToJson(cleaning);
    doc["stages"] = stages;
    doc["classifiers"] = classifiers;
    doc["regressors"] = regressors;
    doc["paths"] = {{"raw", rawPath},
                    {"airports", airportsPath},
                    {"mapping", mappingPath},
                    {"out_dir", outDir}};
    return doc;
}

ExperimentConfig ExperimentConfig::fromJson(const nlohmann::json& doc) {
    ExperimentConfig config;
    if (doc.contains("preset") && doc["preset"].get<int>() >= 1) {
        config = fromPreset(doc["preset"].get<int>());
    }
    if (doc.contains("generator")) config.generator = generatorFromName(doc["generator"]);
    if (doc.contains("frame")) config.frame = frameVariantFromName(doc["frame"]);
    config.trainRowCap = doc.value("train_row_cap", config.trainRowCap);
    config.sampleCount = doc.value("sample_count", config.sampleCount);
    config.seed = doc.value("seed", config.seed);
    if (doc.contains("tvae")) {
        const auto& t = doc["tvae"];
        config.tvae.epochs = t.value("epochs", config.tvae.epochs);
        config.tvae.learningRate = t.value("learning_rate", config.tvae.learningRate);
        config.tvae.batchSize = t.value("batch_size", config.tvae.batchSize);
        config.tvae.weightDecay = t.value("weight_decay", config.tvae.weightDecay);
        config.tvae.arch.hidden1 = t.value("hidden1", config.tvae.arch.hidden1);
        config.tvae.arch.hidden2 = t.value("hidden2", config.tvae.arch.hidden2);
        config.tvae.arch.latent = t.value("latent", config.tvae.arch.latent);
        config.tvae.modeNormalization = t.value("mode_normalization", config.tvae.modeNormalization);
        config.tvae.klWarmup = t.value("kl_warmup", config.tvae.klWarmup);
        config.tvae.stochasticCategorical =
            t.value("stochastic_categorical", config.tvae.stochasticCategorical);
    }
    if (doc.contains("gc")) config.gc.rowCap = doc["gc"].value("row_cap", config.gc.rowCap);
    if (doc.contains("cleaning")) config.cleaning = filterFromJson(doc["cleaning"]);
    if (doc.contains("stages")) config.stages = doc["stages"].get<std::vector<std::string>>();
    if (doc.contains("classifiers")) {
        config.classifiers = doc["classifiers"].get<std::vector<std::string>>();
    }
    if (doc.contains("regressors")) {
        config.regressors = doc["regressors"].get<std::vector<std::string>>();
    }
    if (doc.contains("paths")) {
        const auto& p = doc["paths"];
        config.rawPath = p.value("raw", config.rawPath);
        config.airportsPath = p.value("airports", config.airportsPath);
        config.mappingPath = p.value("mapping", config.mappingPath);
        config.outDir = p.value("out_dir", config.outDir);
    }
    return config;
}

std::string ExperimentConfig::hash() const {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(toJson().dump())));
    return buf;
}

std::vector<ClassifierSpec> ExperimentConfig::classifierSpecs() const {
    std::vector<ClassifierSpec> specs;
    if (classifiers.empty()) {
        for (ClassifierKind kind : allClassifiers()) specs.push_back({kind, {}, seed});
    } else {
        for (const auto& name : classifiers) specs.push_back({classifierFromName(name), {}, seed});
    }
    return specs;
}

std::vector<RegressorSpec> ExperimentConfig::regressorSpecs() const {
    std::vector<RegressorSpec> specs;
    if (regressors.empty()) {
        for (RegressorKind kind : allRegressors()) specs.push_back({kind, {}, seed});
    } else {
        for (const auto& name : regressors) specs.push_back({regressorFromName(name), {}, seed});
    }
    return specs;
}

std::string fileDigest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot hash missing file: " + path);
    uint64_t hash = 0xCBF29CE484222325ull;
    char buffer[65536];
    while (in.read(buffer, sizeof(buffer)) || in.gcount() > 0) {
        const std::streamsize got = in.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            hash ^= static_cast<unsigned char>(buffer[i]);
            hash *= 0x100000001B3ull;
        }
    }
    char hex[20];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(hash));
    return hex;
}

void writeArtifactMeta(const std::string& artifactPath, const std::string& configHash,
                       uint64_t seed) {
    nlohmann::json meta = {{"tool_version", kToolVersion},
                           {"config_hash", configHash},
                           {"seed", seed}};
    std::ofstream out(artifactPath + ".meta.json", std::ios::trunc);
    if (!out) throw IoError("cannot write meta for: " + artifactPath);
    out << meta.dump(2) << "\n";
}

IngestArtifacts runIngest(const std::string& rawPath, const std::string& airportsPath,
                          const std::string& mappingPath, const std::vector<FrameVariant>& frames,
                          const std::string& outDir) {
    std::filesystem::create_directories(outDir);
    const RawMapping mapping =
        mappingPath.empty() ? RawMapping::defaults() : RawMapping::loadJson(mappingPath);
    const AirportDirectory airports = AirportDirectory::loadCsv(airportsPath);
    const Table raw = readRawFlights(rawPath, mapping);
    const Table localized = localizeAndConvert(raw, airports);
    IngestReport report;
    const Table full = engineerFeatures(localized, airports, &report);
    const RouteDirectory routes = buildRouteDirectory(full);

    IngestArtifacts artifacts;
    artifacts.fullTableCsv = outDir + "/flights_full.csv";
    writeTableWithSchema(full, artifacts.fullTableCsv);
    for (FrameVariant variant : frames) {
        const std::string path =
            outDir + "/frame_" + std::string(frameVariantName(variant)) + ".csv";
        writeTableWithSchema(buildFrame(full, variant), path);
        artifacts.frameCsvs.push_back(path);
    }
    artifacts.routesCsv = outDir + "/routes.csv";
    routes.writeCsv(artifacts.routesCsv);
    artifacts.reportJson = outDir + "/ingest_report.json";
    nlohmann::json reportDoc = {{"input_rows", report.inputRows},
                                {"dropped_missing_tail", report.droppedMissingTail},
                                {"dropped_inconsistent", report.droppedInconsistent},
                                {"cancelled_kept", report.cancelledKept},
                                {"output_rows", report.outputRows},
                                {"airports", airports.size()},
                                {"routes", routes.size()}};
    std::ofstream out(artifacts.reportJson, std::ios::trunc);
    out << reportDoc.dump(2) << "\n";
    return artifacts;
}

PipelineResult runPipeline(const ExperimentConfig& config) {
    if (config.rawPath.empty() || config.airportsPath.empty() || config.outDir.empty()) {
        throw ConfigError("pipeline: raw, airports, and out_dir paths are required");
    }
    std::filesystem::create_directories(config.outDir);
    const std::string configHash = config.hash();

    nlohmann::json manifest;
    manifest["tool_version"] = kToolVersion;
    manifest["config"] = config.toJson();
    manifest["config_hash"] = configHash;
    manifest["seed"] = config.seed;
    manifest["stages"] = nlohmann::json::array();
    std::vector<std::pair<std::string, std::string>> artifacts;  // (name, path)

    auto addArtifact = [&](const std::string& name, const std::string& path) {
        artifacts.emplace_back(name, path);
    };
    auto finishStage = [&](const std::string& name) {
        manifest["stages"].push_back({{"name", name}, {"status", "completed"}});
    };
    auto writeManifest = [&]() {
        manifest["artifacts"] = nlohmann::json::array();
        for (const auto& [name, path] : artifacts) {
            manifest["artifacts"].push_back(
                {{"name", name},
                 {"path", std::filesystem::relative(path, config.outDir).string()},
                 {"digest", fileDigest(path)}});
        }
        PipelineResult result;
        result.manifestPath = config.outDir + "/manifest.json";
        std::ofstream out(result.manifestPath, std::ios::trunc);
        if (!out) throw IoError("cannot write manifest: " + result.manifestPath);
        out << manifest.dump(2) << "\n";
        result.manifest = manifest;
        return result;
    };

    try {
        // ingest
        const auto ingest = runIngest(config.rawPath, config.airportsPath, config.mappingPath,
                                      {config.frame}, config.outDir);
        addArtifact("flights_full", ingest.fullTableCsv);
        addArtifact("frame", ingest.frameCsvs.front());
        addArtifact("routes", ingest.routesCsv);
        addArtifact("ingest_report", ingest.reportJson);
        writeArtifactMeta(ingest.fullTableCsv, configHash, config.seed);
        writeArtifactMeta(ingest.frameCsvs.front(), configHash, config.seed);
        finishStage("ingest");

        const Table full = readTableAuto(ingest.fullTableCsv);
        Table frame = readTableAuto(ingest.frameCsvs.front());
        const AirportDirectory airports = AirportDirectory::loadCsv(config.airportsPath);
        const RouteDirectory routes = RouteDirectory::loadCsv(ingest.routesCsv);

        // seeded subsample down to the training cap
        if (config.trainRowCap > 0 && frame.rowCount() > config.trainRowCap) {
            RngStream rng(config.stageSeed("subsample"), 0);
            const auto picks = rng.sampleWithoutReplacement(frame.rowCount(), config.trainRowCap);
            std::vector<uint8_t> keep(frame.rowCount(), 0);
            for (size_t idx : picks) keep[idx] = 1;
            frame = frame.filterRows(keep);
            manifest["subsampled_to"] = config.trainRowCap;
            const std::string path = config.outDir + "/frame_train_subsample.csv";
            writeTableWithSchema(frame, path);
            writeArtifactMeta(path, configHash, config.seed);
            addArtifact("frame_train_subsample", path);
        }

        // fit
        const uint64_t fitSeed = config.stageSeed("fit");
        std::string modelPath;
        FittedCopula gcModel;
        TvaeModel tvaeModel;
        if (config.generator == GeneratorKind::Gc) {
            GcOptions options = config.gc;
            if (config.trainRowCap > 0) options.rowCap = std::max(options.rowCap, config.trainRowCap);
            gcModel = gcFit(frame, fitSeed, options);
            modelPath = config.outDir + "/gc_model.json";
            gcModel.save(modelPath);
        } else {
            TrainConfig train = config.tvae;
            train.seed = fitSeed;
            train.lossTracePath = config.outDir + "/tvae_loss_trace.csv";
            tvaeModel = tvaeFit(frame, train);
            modelPath = config.outDir + "/tvae_model.json";
            tvaeModel.save(modelPath);
            addArtifact("loss_trace", train.lossTracePath);
        }
        addArtifact("model", modelPath);
        finishStage("fit");

        // sample
        const size_t sampleCount = config.sampleCount > 0 ? config.sampleCount : frame.rowCount();
        const uint64_t sampleSeed = config.stageSeed("sample");
        const Table sampled = config.generator == GeneratorKind::Gc
                                  ? gcSample(gcModel, sampleCount, sampleSeed)
                                  : tvaeSample(tvaeModel, sampleCount, sampleSeed);
        const std::string sampledPath = config.outDir + "/sampled_frame.csv";
        writeTableWithSchema(sampled, sampledPath);
        writeArtifactMeta(sampledPath, configHash, config.seed);
        addArtifact("sampled_frame", sampledPath);
        finishStage("sample");

        // reconstruct + reject
        const Table reconstructed = reconstruct(sampled, config.frame, airports, routes);
        const std::string reconstructedPath = config.outDir + "/reconstructed.csv";
        writeTableWithSchema(reconstructed, reconstructedPath);
        writeArtifactMeta(reconstructedPath, configHash, config.seed);
        addArtifact("reconstructed", reconstructedPath);

        const CleaningResult cleaning = rejectInvalid(reconstructed, routes, config.cleaning);
        const std::string cleanedPath = config.outDir + "/synthetic_cleaned.csv";
        writeTableWithSchema(cleaning.cleaned, cleanedPath);
        writeArtifactMeta(cleanedPath, configHash, config.seed);
        addArtifact("synthetic_cleaned", cleanedPath);
        const std::string rejectedPath = config.outDir + "/rejected_rows.csv";
        writeTableWithSchema(cleaning.rejected, rejectedPath);
        addArtifact("rejected_rows", rejectedPath);
        {
            nlohmann::json report = cleaning.report.toJson();
            report["config_hash"] = configHash;
            report["seed"] = config.seed;
            report["tool_version"] = kToolVersion;
            std::ofstream out(config.outDir + "/cleaning_report.json", std::ios::trunc);
            out << report.dump(2) << "\n";
        }
        addArtifact("cleaning_report", config.outDir + "/cleaning_report.json");
        finishStage("reconstruct");

        // evaluate
        std::optional<DiversitySection> diversity;
        std::optional<StatisticalSection> statistical;
        std::optional<FidelitySection> fidelity;
        std::optional<UtilitySection> utility;
        const uint64_t evalSeed = config.stageSeed("evaluate");
        for (const auto& stage : config.stages) {
            if (stage == "diversity") {
                diversity = diversityStage(full, cleaning.cleaned, evalSeed);
            } else if (stage == "statistical") {
                statistical = statisticalStage(full, cleaning.cleaned);
            } else if (stage == "fidelity") {
                fidelity = fidelityStage(full, cleaning.cleaned, config.classifierSpecs(), evalSeed);
            } else if (stage == "utility") {
                utility = utilityStage(full, cleaning.cleaned, config.regressorSpecs(), evalSeed);
            } else {
                throw ConfigError("unknown evaluation stage: " + stage);
            }
        }
        Provenance provenance;
        provenance.seed = config.seed;
        provenance.configHash = configHash;
        provenance.toolVersion = kToolVersion;
        provenance.realFingerprint = fileDigest(ingest.fullTableCsv);
        provenance.synthFingerprint = fileDigest(cleanedPath);
        const EvaluationReport report = assembleReport(std::move(diversity), std::move(statistical),
                                                       std::move(fidelity), std::move(utility),
                                                       std::move(provenance));
        const std::string evalDir = config.outDir + "/evaluation";
        writeReportFiles(report, evalDir);
        addArtifact("report", evalDir + "/report.json");
        addArtifact("summary", evalDir + "/summary.md");
        finishStage("evaluate");
    } catch (...) {
        writeManifest();  // manifest records the stages that completed
        throw;
    }
    return writeManifest();
}

}  // namespace synthflight
