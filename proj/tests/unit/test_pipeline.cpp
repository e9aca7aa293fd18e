#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "synthflight/mock.hpp"
#include "synthflight/pipeline.hpp"
#include "synthflight/table_io.hpp"

using namespace synthflight;

namespace {

std::string testRoot() {
    const auto dir = std::filesystem::temp_directory_path() / "synthflight_pipeline_tests";
    std::filesystem::create_directories(dir);
    return dir.string();
}

const MockFiles& smallMock() {
    static const MockFiles files = [] {
        MockConfig config;
        config.rows = 900;
        config.seed = 31;
        return writeMockData(testRoot() + "/mock", config);
    }();
    return files;
}

#ifdef SYNTHFLIGHT_CLI_PATH
int runCli(const std::string& args) {
    const std::string command = std::string(SYNTHFLIGHT_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(command.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}
#endif

}  // namespace

TEST_CASE("presets bind generator, frame, and caps exactly") {
    const ExperimentConfig p1 = ExperimentConfig::fromPreset(1);
    CHECK(p1.generator == GeneratorKind::Tvae);
    CHECK(p1.frame == FrameVariant::UtcTs);
    CHECK(p1.trainRowCap == 0);
    const ExperimentConfig p2 = ExperimentConfig::fromPreset(2);
    CHECK(p2.generator == GeneratorKind::Tvae);
    CHECK(p2.frame == FrameVariant::UtcD);
    const ExperimentConfig p3 = ExperimentConfig::fromPreset(3);
    CHECK(p3.generator == GeneratorKind::Tvae);
    CHECK(p3.frame == FrameVariant::UtcD2);
    const ExperimentConfig p4 = ExperimentConfig::fromPreset(4);
    CHECK(p4.generator == GeneratorKind::Gc);
    CHECK(p4.frame == FrameVariant::UtcTs);
    CHECK(p4.trainRowCap == 5000);
    const ExperimentConfig p5 = ExperimentConfig::fromPreset(5);
    CHECK(p5.generator == GeneratorKind::Gc);
    CHECK(p5.frame == FrameVariant::UtcD2);
    CHECK(p5.trainRowCap == 5000);
    CHECK_THROWS_AS(ExperimentConfig::fromPreset(6), ConfigError);
}

TEST_CASE("experiment configs survive a JSON round trip") {
    ExperimentConfig config = ExperimentConfig::fromPreset(3);
    config.seed = 123;
    config.sampleCount = 777;
    config.tvae.epochs = 42;
    config.tvae.modeNormalization = true;
    config.cleaning.speedMaxMph = 650.0;
    config.stages = {"statistical"};
    config.rawPath = "/data/raw.csv";
    const ExperimentConfig back = ExperimentConfig::fromJson(config.toJson());
    CHECK(back.toJson() == config.toJson());
    CHECK(back.hash() == config.hash());
    config.seed = 124;
    CHECK(back.hash() != config.hash());
}

TEST_CASE("mock corpus generation is deterministic") {
    MockConfig config;
    config.rows = 200;
    config.seed = 5;
    const MockFiles a = writeMockData(testRoot() + "/det_a", config);
    const MockFiles b = writeMockData(testRoot() + "/det_b", config);
    CHECK(fileDigest(a.rawCsv) == fileDigest(b.rawCsv));
    CHECK(fileDigest(a.airportsCsv) == fileDigest(b.airportsCsv));
}

TEST_CASE("pipeline runs end to end and reruns bit-identically") {
    const MockFiles& mock = smallMock();
    ExperimentConfig config = ExperimentConfig::fromPreset(5);
    config.seed = 7;
    config.trainRowCap = 350;
    config.gc.rowCap = 350;
    config.sampleCount = 350;
    config.rawPath = mock.rawCsv;
    config.airportsPath = mock.airportsCsv;
    config.outDir = testRoot() + "/run_a";
    const PipelineResult a = runPipeline(config);
    const PipelineResult rerun = runPipeline(config);  // same config, same directory

    REQUIRE(a.manifest.contains("artifacts"));
    CHECK(a.manifest["stages"].size() == 5);
    CHECK(a.manifest.value("subsampled_to", 0u) == 350u);

    // identical config => identical digests, artifact for artifact
    CHECK(a.manifest == rerun.manifest);

    // a different output directory changes only the artifacts that embed the
    // config hash (reports); the data artifacts stay bit-identical
    config.outDir = testRoot() + "/run_b";
    const PipelineResult b = runPipeline(config);
    REQUIRE(a.manifest["artifacts"].size() == b.manifest["artifacts"].size());
    for (size_t i = 0; i < a.manifest["artifacts"].size(); ++i) {
        const auto& artA = a.manifest["artifacts"][i];
        const auto& artB = b.manifest["artifacts"][i];
        const std::string name = artA["name"].get<std::string>();
        if (name == "cleaning_report" || name == "report" || name == "summary") continue;
        INFO(name);
        CHECK(artA["digest"] == artB["digest"]);
    }

    // cleaned output re-reads and the report parses
    const Table cleaned = readTableAuto(config.outDir + "/synthetic_cleaned.csv");
    CHECK(cleaned.columnCount() == 30);
    std::ifstream report(config.outDir + "/evaluation/report.json");
    nlohmann::json doc;
    report >> doc;
    CHECK(doc.contains("statistical"));
    CHECK(doc.contains("fidelity"));
    CHECK(doc.contains("utility"));
    CHECK(doc.contains("diversity"));
    CHECK(doc["provenance"]["config_hash"] == config.hash());

    // provenance sidecars for CSV artifacts
    CHECK(std::filesystem::exists(config.outDir + "/synthetic_cleaned.csv.meta.json"));
}

TEST_CASE("pipeline without required paths fails cleanly") {
    ExperimentConfig config = ExperimentConfig::fromPreset(5);
    CHECK_THROWS_AS(runPipeline(config), ConfigError);
}

#ifdef SYNTHFLIGHT_CLI_PATH
TEST_CASE("cli: sample twice with one seed is byte-identical") {
    const MockFiles& mock = smallMock();
    const std::string dir = testRoot() + "/cli";
    std::filesystem::create_directories(dir);
    REQUIRE(runCli("ingest --raw " + mock.rawCsv + " --airports " + mock.airportsCsv +
                   " --frame utc_d_2 --out " + dir) == 0);
    REQUIRE(runCli("fit --frame " + dir + "/frame_utc_d_2.csv --generator gc --cap 2000 --model " +
                   dir + "/model.json --seed 3") == 0);
    REQUIRE(runCli("sample --model " + dir + "/model.json --n 200 --seed 7 --out " + dir +
                   "/s1.csv") == 0);
    REQUIRE(runCli("sample --model " + dir + "/model.json --n 200 --seed 7 --out " + dir +
                   "/s2.csv") == 0);
    CHECK(fileDigest(dir + "/s1.csv") == fileDigest(dir + "/s2.csv"));

    REQUIRE(runCli("reconstruct --sampled " + dir + "/s1.csv --variant utc_d_2 --airports " +
                   mock.airportsCsv + " --routes " + dir + "/routes.csv --out " + dir) == 0);
    CHECK(std::filesystem::exists(dir + "/synthetic_cleaned.csv"));
    CHECK(std::filesystem::exists(dir + "/rejected_rows.csv"));
    CHECK(std::filesystem::exists(dir + "/cleaning_report.json"));

    REQUIRE(runCli("evaluate --real " + dir + "/flights_full.csv --synthetic " + dir +
                   "/synthetic_cleaned.csv --stages statistical --out " + dir + "/eval") == 0);
    CHECK(std::filesystem::exists(dir + "/eval/report.json"));
}

TEST_CASE("cli: operational failures exit with code 2") {
    CHECK(runCli("ingest --raw /nonexistent.csv --airports /also_missing.csv --out /tmp") == 2);
    CHECK(runCli("reconstruct --sampled /missing.csv --variant utc_d_2 --airports x --routes y "
                 "--out /tmp") == 2);
}
#endif
