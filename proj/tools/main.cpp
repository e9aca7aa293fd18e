// synthflight CLI: mock data generation, ingestion, generator fitting and
// sampling, reconstruction, evaluation, and full pipeline runs.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "synthflight/copula.hpp"
#include "synthflight/evaluate.hpp"
#include "synthflight/mock.hpp"
#include "synthflight/pipeline.hpp"
#include "synthflight/table_io.hpp"
#include "synthflight/tvae.hpp"

using namespace synthflight;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitQualityGate = 1;
constexpr int kExitOperational = 2;

std::string defaultOutDir() {
    const char* env = std::getenv("SYNTHFLIGHT_OUT");
    return env && *env ? env : ".";
}

nlohmann::json readJsonFile(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    nlohmann::json doc;
    in >> doc;
    return doc;
}

std::vector<FrameVariant> parseFrameList(const std::string& value) {
    if (value == "all") {
        return {FrameVariant::UtcTs, FrameVariant::UtcD, FrameVariant::UtcD2};
    }
    return {frameVariantFromName(value)};
}

int runCommands(int argc, char** argv) {
    CLI::App app{"synthetic flight data generation and evaluation"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    // make-mock
    auto* mock = app.add_subcommand("make-mock", "write a deterministic BTS-shaped mock corpus");
    size_t mockRows = 5000;
    uint64_t mockSeed = 1;
    std::string mockOut = defaultOutDir();
    mock->add_option("--rows", mockRows, "number of flights");
    mock->add_option("--seed", mockSeed, "rng seed");
    mock->add_option("--out", mockOut, "output directory");
    mock->callback([&] {
        MockConfig config;
        config.rows = mockRows;
        config.seed = mockSeed;
        const MockFiles files = writeMockData(mockOut, config);
        std::cout << "wrote " << files.rawCsv << "\n      " << files.airportsCsv << "\n      "
                  << files.mappingJson << "\n";
    });

    // ingest
    auto* ingest = app.add_subcommand("ingest", "raw extract -> cleaned table and input frames");
    std::string rawPath, airportsPath, mappingPath;
    std::string frameChoice = "all";
    std::string ingestOut = defaultOutDir();
    ingest->add_option("--raw", rawPath, "raw on-time-performance CSV")->required();
    ingest->add_option("--airports", airportsPath, "airport directory CSV")->required();
    ingest->add_option("--mapping", mappingPath, "raw->canonical column mapping JSON");
    ingest->add_option("--frame", frameChoice, "utc_ts | utc_d | utc_d_2 | all");
    ingest->add_option("--out", ingestOut, "output directory");
    ingest->callback([&] {
        const auto artifacts =
            runIngest(rawPath, airportsPath, mappingPath, parseFrameList(frameChoice), ingestOut);
        std::cout << "wrote " << artifacts.fullTableCsv << "\n";
        for (const auto& frame : artifacts.frameCsvs) std::cout << "      " << frame << "\n";
        std::cout << "      " << artifacts.routesCsv << "\n      " << artifacts.reportJson << "\n";
    });

    // fit
    auto* fit = app.add_subcommand("fit", "fit a generator on an input frame");
    std::string fitFrame, fitModel;
    std::string generatorChoice = "gc";
    uint64_t fitSeed = 42;
    size_t gcCap = 5000;
    int epochs = 300;
    int batchSize = 500;
    double learningRate = 1e-3;
    int latent = 128, hidden = 128;
    bool modeNorm = false, klWarmup = false, stochasticCats = false;
    fit->add_option("--frame", fitFrame, "input frame CSV (with .schema.json sidecar)")->required();
    fit->add_option("--generator", generatorChoice, "gc | tvae")->required();
    fit->add_option("--model", fitModel, "output model JSON")->required();
    fit->add_option("--seed", fitSeed, "rng seed");
    fit->add_option("--cap", gcCap, "gc training row cap");
    fit->add_option("--epochs", epochs, "tvae epochs");
    fit->add_option("--batch", batchSize, "tvae batch size");
    fit->add_option("--lr", learningRate, "tvae learning rate");
    fit->add_option("--latent", latent, "tvae latent dimension");
    fit->add_option("--hidden", hidden, "tvae hidden width");
    fit->add_flag("--mode-normalization", modeNorm, "tvae GMM mode-specific normalization");
    fit->add_flag("--kl-warmup", klWarmup, "tvae linear KL warm-up over the first 10% of epochs");
    fit->add_flag("--stochastic-categorical", stochasticCats,
                  "sample tvae categorical heads from softmax instead of argmax");
    fit->callback([&] {
        const Table frame = readTableAuto(fitFrame);
        if (generatorFromName(generatorChoice) == GeneratorKind::Gc) {
            GcOptions options;
            options.rowCap = gcCap;
            gcFit(frame, fitSeed, options).save(fitModel);
        } else {
            TrainConfig config;
            config.epochs = epochs;
            config.batchSize = batchSize;
            config.learningRate = learningRate;
            config.arch.latent = latent;
            config.arch.hidden1 = hidden;
            config.arch.hidden2 = hidden;
            config.seed = fitSeed;
            config.modeNormalization = modeNorm;
            config.klWarmup = klWarmup;
            config.stochasticCategorical = stochasticCats;
            config.lossTracePath =
                (std::filesystem::path(fitModel).parent_path() / "tvae_loss_trace.csv").string();
            tvaeFit(frame, config).save(fitModel);
        }
        std::cout << "wrote " << fitModel << "\n";
    });

    // sample
    auto* sample = app.add_subcommand("sample", "draw synthetic rows from a fitted model");
    std::string samplePath, sampleOut;
    size_t sampleN = 0;
    uint64_t sampleSeed = 42;
    sample->add_option("--model", samplePath, "model JSON")->required();
    sample->add_option("--n", sampleN, "rows to sample")->required();
    sample->add_option("--seed", sampleSeed, "rng seed");
    sample->add_option("--out", sampleOut, "output CSV")->required();
    sample->callback([&] {
        const nlohmann::json doc = readJsonFile(samplePath);
        const std::string kind = doc.value("kind", "");
        Table sampled;
        if (kind == "gaussian_copula") {
            sampled = gcSample(FittedCopula::fromJson(doc), sampleN, sampleSeed);
        } else if (kind == "tvae") {
            sampled = tvaeSample(TvaeModel::fromJson(doc), sampleN, sampleSeed);
        } else {
            throw ParseError("unrecognized model kind in " + samplePath);
        }
        writeTableWithSchema(sampled, sampleOut);
        std::cout << "wrote " << sampleOut << " (" << sampled.rowCount() << " rows)\n";
    });

    // reconstruct
    auto* rec = app.add_subcommand("reconstruct",
                                   "expand a sampled frame to 30 columns and reject invalid rows");
    std::string recSampled, recVariant, recAirports, recRoutes;
    std::string recOut = defaultOutDir();
    double elapsedTol = 5.0, speedMin = 100.0, speedMax = 700.0;
    rec->add_option("--sampled", recSampled, "sampled frame CSV")->required();
    rec->add_option("--variant", recVariant, "utc_ts | utc_d | utc_d_2")->required();
    rec->add_option("--airports", recAirports, "airport directory CSV")->required();
    rec->add_option("--routes", recRoutes, "route directory CSV")->required();
    rec->add_option("--out", recOut, "output directory");
    rec->add_option("--elapsed-tolerance", elapsedTol, "elapsed consistency tolerance (min)");
    rec->add_option("--speed-min", speedMin, "minimum plausible speed (mph)");
    rec->add_option("--speed-max", speedMax, "maximum plausible speed (mph)");
    rec->callback([&] {
        std::filesystem::create_directories(recOut);
        const Table sampled = readTableAuto(recSampled);
        const AirportDirectory airports = AirportDirectory::loadCsv(recAirports);
        const RouteDirectory routes = RouteDirectory::loadCsv(recRoutes);
        const Table reconstructed =
            reconstruct(sampled, frameVariantFromName(recVariant), airports, routes);
        writeTableWithSchema(reconstructed, recOut + "/reconstructed.csv");
        FilterConfig filters;
        filters.elapsedToleranceMin = elapsedTol;
        filters.speedMinMph = speedMin;
        filters.speedMaxMph = speedMax;
        const CleaningResult result = rejectInvalid(reconstructed, routes, filters);
        writeTableWithSchema(result.cleaned, recOut + "/synthetic_cleaned.csv");
        writeTableWithSchema(result.rejected, recOut + "/rejected_rows.csv");
        std::ofstream report(recOut + "/cleaning_report.json", std::ios::trunc);
        report << result.report.toJson().dump(2) << "\n";
        std::cout << "cleaned " << result.cleaned.rowCount() << " of "
                  << reconstructed.rowCount() << " rows\n";
    });

    // evaluate
    auto* eval = app.add_subcommand("evaluate", "grade synthetic data against real data");
    std::string evalReal, evalSynth;
    std::string evalStages = "diversity,statistical,fidelity,utility";
    std::string evalOut = defaultOutDir();
    uint64_t evalSeed = 42;
    double minStatistical = -1.0, maxFidelity = -1.0;
    eval->add_option("--real", evalReal, "real table CSV")->required();
    eval->add_option("--synthetic", evalSynth, "synthetic table CSV")->required();
    eval->add_option("--stages", evalStages, "comma-separated stage list");
    eval->add_option("--seed", evalSeed, "rng seed");
    eval->add_option("--out", evalOut, "output directory");
    eval->add_option("--min-statistical", minStatistical,
                     "quality gate: exit 1 when the statistical average falls below this");
    eval->add_option("--max-fidelity", maxFidelity,
                     "quality gate: exit 1 when discriminator accuracy exceeds this");
    eval->callback([&] {
        const Table real = readTableAuto(evalReal);
        const Table synth = readTableAuto(evalSynth);

        std::optional<DiversitySection> diversity;
        std::optional<StatisticalSection> statistical;
        std::optional<FidelitySection> fidelity;
        std::optional<UtilitySection> utility;
        std::stringstream stages(evalStages);
        std::string stage;
        while (std::getline(stages, stage, ',')) {
            if (stage == "diversity") diversity = diversityStage(real, synth, evalSeed);
            else if (stage == "statistical") statistical = statisticalStage(real, synth);
            else if (stage == "fidelity") {
                std::vector<ClassifierSpec> specs;
                for (ClassifierKind kind : allClassifiers()) specs.push_back({kind, {}, evalSeed});
                fidelity = fidelityStage(real, synth, specs, evalSeed);
            } else if (stage == "utility") {
                std::vector<RegressorSpec> specs;
                for (RegressorKind kind : allRegressors()) specs.push_back({kind, {}, evalSeed});
                utility = utilityStage(real, synth, specs, evalSeed);
            } else {
                throw ConfigError("unknown stage: " + stage);
            }
        }
        Provenance provenance;
        provenance.seed = evalSeed;
        provenance.toolVersion = kToolVersion;
        provenance.realFingerprint = fileDigest(evalReal);
        provenance.synthFingerprint = fileDigest(evalSynth);
        const bool gateStatistical = minStatistical >= 0.0 && statistical.has_value() &&
                                     statistical->average < minStatistical;
        const bool gateFidelity =
            maxFidelity >= 0.0 && fidelity.has_value() && fidelity->averageAccuracy > maxFidelity;
        const EvaluationReport report =
            assembleReport(std::move(diversity), std::move(statistical), std::move(fidelity),
                           std::move(utility), std::move(provenance));
        writeReportFiles(report, evalOut);
        std::cout << renderSummaryMarkdown(report);
        if (gateStatistical || gateFidelity) {
            std::cerr << "quality gate failed\n";
            std::exit(kExitQualityGate);
        }
    });

    // pipeline
    auto* pipe = app.add_subcommand("pipeline", "ingest -> fit -> sample -> reconstruct -> evaluate");
    int preset = 0;
    std::string pipeConfig, pipeRaw, pipeAirports, pipeMapping;
    std::string pipeOut = defaultOutDir();
    uint64_t pipeSeed = 42;
    size_t pipeSampleCount = 0;
    pipe->add_option("--preset", preset, "experiment preset 1..5");
    pipe->add_option("--config", pipeConfig, "full experiment config JSON");
    pipe->add_option("--raw", pipeRaw, "raw on-time-performance CSV");
    pipe->add_option("--airports", pipeAirports, "airport directory CSV");
    pipe->add_option("--mapping", pipeMapping, "column mapping JSON");
    pipe->add_option("--out", pipeOut, "output directory");
    pipe->add_option("--seed", pipeSeed, "master seed");
    pipe->add_option("--sample-count", pipeSampleCount, "synthetic rows to draw");
    pipe->callback([&] {
        ExperimentConfig config;
        if (!pipeConfig.empty()) {
            config = ExperimentConfig::fromJson(readJsonFile(pipeConfig));
        } else if (preset >= 1) {
            config = ExperimentConfig::fromPreset(preset);
        } else {
            throw ConfigError("pipeline needs --preset or --config");
        }
        if (!pipeRaw.empty()) config.rawPath = pipeRaw;
        if (!pipeAirports.empty()) config.airportsPath = pipeAirports;
        if (!pipeMapping.empty()) config.mappingPath = pipeMapping;
        if (pipeOut != ".") config.outDir = pipeOut;
        if (config.outDir.empty()) config.outDir = pipeOut;
        if (pipe->count("--seed")) config.seed = pipeSeed;
        if (pipeSampleCount > 0) config.sampleCount = pipeSampleCount;
        const PipelineResult result = runPipeline(config);
        std::cout << "wrote " << result.manifestPath << "\n";
    });

    CLI11_PARSE(app, argc, argv);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return runCommands(argc, argv);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitOperational;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return kExitOperational;
    }
}
