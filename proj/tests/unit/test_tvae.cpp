#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "synthflight/numkit.hpp"
#include "synthflight/tvae.hpp"

using namespace synthflight;

namespace {

Table continuousToy(size_t n, uint64_t seed) {
    std::vector<ColumnSchema> schema = {{"x", ColumnKind::Numeric, "", false},
                                        {"y", ColumnKind::Numeric, "", false}};
    Table t(schema, n);
    RngStream rng(seed, 0);
    for (size_t r = 0; r < n; ++r) {
        t.setNumber(0, r, rng.normal());
        t.setNumber(1, r, rng.normal() + 2.0);
    }
    return t;
}

Table twoClusterToy(size_t n, uint64_t seed) {
    std::vector<ColumnSchema> schema = {{"value", ColumnKind::Numeric, "", false}};
    Table t(schema, n);
    RngStream rng(seed, 0);
    for (size_t r = 0; r < n; ++r) {
        const double center = r % 2 == 0 ? 0.0 : 100.0;
        t.setNumber(0, r, center + rng.normal() * 5.0);
    }
    return t;
}

std::vector<double> drawNoise(size_t rows, int latent, uint64_t seed) {
    std::vector<double> noise(rows * static_cast<size_t>(latent));
    RngStream rng(seed, 1);
    for (auto& v : noise) v = rng.normal();
    return noise;
}

void zeroParams(TvaeModel& model) {
    model.params.forEachTensor([](auto& tensor) { tensor.setZero(); });
}

}  // namespace

TEST_CASE("kl term vanishes at the prior and is never negative") {
    const Table toy = continuousToy(32, 3);
    const EncoderState state = fitEncoder(toy, EncodeTarget::Tvae);
    const EncodedMatrix batch = encodeTable(toy, state, 0);

    TvaeArchitecture arch{8, 8, 4};
    TvaeModel model = tvaeInit(state, arch, 5);
    zeroParams(model);  // mu = 0, log sigma^2 = 0 for every input
    const auto atPrior = tvaeLoss(model, batch, drawNoise(batch.rows, arch.latent, 2));
    CHECK(atPrior.kl == doctest::Approx(0.0).epsilon(1e-15));

    TvaeModel random = tvaeInit(state, arch, 6);
    for (int trial = 0; trial < 10; ++trial) {
        const auto value =
            tvaeLoss(random, batch, drawNoise(batch.rows, arch.latent, 100 + trial));
        CHECK(value.kl >= 0.0);
    }
}

TEST_CASE("perfect reconstruction pins the gaussian term at its closed form") {
    // two continuous columns plus one 2-category block; zero network emits
    // bout, so set bout to reproduce a constant batch exactly
    std::vector<ColumnSchema> schema = {{"a", ColumnKind::Numeric, "", false},
                                        {"b", ColumnKind::Numeric, "", false},
                                        {"c", ColumnKind::Categorical, "", false}};
    Table toy(schema, 8);
    for (size_t r = 0; r < 8; ++r) {
        toy.setNumber(0, r, 1.5);
        toy.setNumber(1, r, -0.5);
        toy.setCategory(2, r, r < 7 ? "hot" : "cold");
    }
    EncoderState state = fitEncoder(toy, EncodeTarget::Tvae);
    // bypass standardization so the targets equal the raw values
    state.columns[0].center = 0.0;
    state.columns[0].scale = 1.0;
    state.columns[1].center = 0.0;
    state.columns[1].scale = 1.0;

    Table constant(schema, 4);
    for (size_t r = 0; r < 4; ++r) {
        constant.setNumber(0, r, 1.5);
        constant.setNumber(1, r, -0.5);
        constant.setCategory(2, r, "hot");
    }
    const EncodedMatrix batch = encodeTable(constant, state, 0);

    TvaeArchitecture arch{4, 4, 2};
    TvaeModel model = tvaeInit(state, arch, 9);
    zeroParams(model);
    model.params.bout(0) = 1.5;
    model.params.bout(1) = -0.5;
    model.params.bout(2) = 60.0;  // softmax probability of "hot" within 1e-26 of 1
    model.params.bout(3) = 0.0;

    const auto value = tvaeLoss(model, batch, drawNoise(batch.rows, arch.latent, 4));
    const double expected = 0.5 * std::log(2.0 * M_PI) * 2.0;  // two continuous columns
    CHECK(value.reconstruction == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("kl gradient with respect to mu equals mu when sigma is 1") {
    const Table toy = continuousToy(16, 12);
    const EncoderState state = fitEncoder(toy, EncodeTarget::Tvae);
    const EncodedMatrix batch = encodeTable(toy, state, 0);
    TvaeArchitecture arch{4, 4, 3};
    TvaeModel model = tvaeInit(state, arch, 13);
    zeroParams(model);
    model.params.bmu << 0.7, -0.3, 1.1;  // mu constant per row, sigma = 1

    const TvaeParams grads = tvaeGrad(model, batch, drawNoise(batch.rows, arch.latent, 5));
    // decoder is all zeros, so the only bmu gradient is the KL term: mu itself
    CHECK(grads.bmu(0) == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(grads.bmu(1) == doctest::Approx(-0.3).epsilon(1e-12));
    CHECK(grads.bmu(2) == doctest::Approx(1.1).epsilon(1e-12));
}

TEST_CASE("zero-weight decoder bias gradients match the hand derivation") {
    // with all weights zero and unit variances, d(loss)/d(bout_j) for a
    // continuous head is mean(bout_j - x_j) = -mean(x_j)
    const Table toy = continuousToy(64, 21);
    const EncoderState state = fitEncoder(toy, EncodeTarget::Tvae);
    const EncodedMatrix batch = encodeTable(toy, state, 0);
    TvaeArchitecture arch{4, 4, 2};
    TvaeModel model = tvaeInit(state, arch, 22);
    zeroParams(model);

    double mean0 = 0.0, mean1 = 0.0;
    for (size_t r = 0; r < batch.rows; ++r) {
        mean0 += batch.at(r, 0);
        mean1 += batch.at(r, 1);
    }
    mean0 /= static_cast<double>(batch.rows);
    mean1 /= static_cast<double>(batch.rows);

    const TvaeParams grads = tvaeGrad(model, batch, drawNoise(batch.rows, arch.latent, 6));
    CHECK(grads.bout(0) == doctest::Approx(-mean0).epsilon(1e-12));
    CHECK(grads.bout(1) == doctest::Approx(-mean1).epsilon(1e-12));
}

TEST_CASE("analytic gradients agree with central finite differences") {
    const double worst = tvaeGradCheck(31);
    CHECK(worst <= 1e-4);
}

TEST_CASE("training reduces the loss on the two-cluster toy") {
    TrainConfig config;
    config.epochs = 30;
    config.batchSize = 100;
    config.seed = 3;
    config.arch = {32, 32, 4};
    const Table toy = twoClusterToy(400, 8);
    const TvaeModel model = tvaeFit(toy, config);
    REQUIRE(model.trace.size() == 30);
    double early = 0.0, late = 0.0;
    for (int e = 0; e < 10; ++e) early += model.trace[e].total;
    for (int e = 20; e < 30; ++e) late += model.trace[e].total;
    CHECK(late < early);
    for (const auto& stats : model.trace) CHECK(stats.kl >= 0.0);
}

TEST_CASE("same seed and data give an identical loss trace") {
    TrainConfig config;
    config.epochs = 5;
    config.batchSize = 64;
    config.seed = 17;
    config.arch = {16, 16, 4};
    const Table toy = continuousToy(200, 4);
    const TvaeModel a = tvaeFit(toy, config);
    const TvaeModel b = tvaeFit(toy, config);
    REQUIRE(a.trace.size() == b.trace.size());
    for (size_t e = 0; e < a.trace.size(); ++e) {
        CHECK(a.trace[e].total == b.trace[e].total);
        CHECK(a.trace[e].kl == b.trace[e].kl);
        CHECK(a.trace[e].activeDims == b.trace[e].activeDims);
    }
}

TEST_CASE("sampling is deterministic, shaped, and schema-conformant") {
    TrainConfig config;
    config.epochs = 8;
    config.batchSize = 64;
    config.seed = 5;
    config.arch = {16, 16, 4};
    const Table toy = continuousToy(200, 6);
    const TvaeModel model = tvaeFit(toy, config);
    const Table s1 = tvaeSample(model, 150, 9);
    const Table s2 = tvaeSample(model, 150, 9);
    CHECK(s1.rowCount() == 150);
    CHECK(s1.columnCount() == toy.columnCount());
    CHECK(s1.contentEquals(s2));
}

TEST_CASE("loss trace CSV carries the posterior-collapse telemetry") {
    const auto dir = std::filesystem::temp_directory_path() / "synthflight_tvae_tests";
    std::filesystem::create_directories(dir);
    TrainConfig config;
    config.epochs = 3;
    config.batchSize = 64;
    config.seed = 2;
    config.arch = {8, 8, 4};
    config.lossTracePath = (dir / "trace.csv").string();
    tvaeFit(continuousToy(128, 9), config);
    std::ifstream in(config.lossTracePath);
    std::string header;
    std::getline(in, header);
    CHECK(header == "epoch,total,reconstruction,kl,active_dims");
    std::string row;
    size_t rows = 0;
    while (std::getline(in, row)) {
        if (!row.empty()) ++rows;
    }
    CHECK(rows == 3);
}

TEST_CASE("model files round trip through JSON") {
    TrainConfig config;
    config.epochs = 4;
    config.batchSize = 64;
    config.seed = 23;
    config.arch = {8, 8, 4};
    const Table toy = continuousToy(160, 10);
    const TvaeModel model = tvaeFit(toy, config);
    const auto dir = std::filesystem::temp_directory_path() / "synthflight_tvae_tests";
    std::filesystem::create_directories(dir);
    const std::string path = (dir / "model.json").string();
    model.save(path);
    const TvaeModel loaded = TvaeModel::load(path);
    CHECK(tvaeSample(model, 80, 1).contentEquals(tvaeSample(loaded, 80, 1)));
}

TEST_CASE("training aborts with the epoch number when the config is invalid") {
    TrainConfig config;
    config.epochs = 0;
    CHECK_THROWS_AS(config.validate(), ConfigError);
    config.epochs = 10;
    config.learningRate = 2.0;
    CHECK_THROWS_AS(config.validate(), ConfigError);
}
