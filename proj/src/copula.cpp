#include "synthflight/copula.hpp"

#include <cmath>
#include <fstream>

namespace synthflight {

namespace {

uint64_t subSeed(uint64_t seed, const char* stage) { return seed ^ fnv1a64(stage); }

}  // namespace

FittedCopula gcFit(const Table& frame, uint64_t seed, const GcOptions& options) {
    if (frame.rowCount() < options.minRows) {
        throw ConfigError("gc_fit: need at least " + std::to_string(options.minRows) +
                          " rows, got " + std::to_string(frame.rowCount()));
    }
    if (frame.rowCount() > options.rowCap) {
        throw ConfigError("gc_fit: input has " + std::to_string(frame.rowCount()) +
                          " rows but the fit cap is " + std::to_string(options.rowCap) +
                          "; subsample the input to the cap (seeded, uniform without replacement) "
                          "or raise the cap explicitly");
    }

    FittedCopula model;
    const Table split = splitMissing(frame, seed);
    model.encoder = fitEncoder(split, EncodeTarget::Copula, {}, seed);
    const EncodedMatrix encoded = encodeTable(split, model.encoder, subSeed(seed, "gc-encode"));

    const size_t n = encoded.rows;
    const size_t d = encoded.cols;
    model.fitRows = n;
    model.marginals.reserve(d);
    for (size_t c = 0; c < d; ++c) {
        model.columnOrder.push_back(model.encoder.columns[encoded.layout[c].sourceColumn].name);
    }

    // normal scores z_ij = Phi^-1(F_j(x_ij))
    std::vector<double> scores(n * d);
    std::vector<double> columnValues(n);
    for (size_t c = 0; c < d; ++c) {
        for (size_t r = 0; r < n; ++r) columnValues[r] = encoded.at(r, c);
        KdeMarginal kde = KdeMarginal::fit(columnValues);
        if (kde.bandwidth() <= 1e-6) model.constantColumns++;
        for (size_t r = 0; r < n; ++r) {
            scores[r * d + c] = normalQuantile(kde.cdf(columnValues[r]));
        }
        model.marginals.push_back(std::move(kde));
    }

    std::vector<double> corr(d * d, 0.0);
    std::vector<double> colA(n), colB(n);
    for (size_t a = 0; a < d; ++a) {
        corr[a * d + a] = 1.0;
        for (size_t b = a + 1; b < d; ++b) {
            for (size_t r = 0; r < n; ++r) {
                colA[r] = scores[r * d + a];
                colB[r] = scores[r * d + b];
            }
            const double rho = pearsonCorrelation(colA, colB);
            corr[a * d + b] = rho;
            corr[b * d + a] = rho;
        }
    }
    model.theta = choleskyPsd(corr, d);
    return model;
}

Table gcSample(const FittedCopula& model, size_t n, uint64_t seed) {
    if (n == 0) throw ConfigError("gc_sample: n must be at least 1");
    const size_t d = model.marginals.size();
    if (d == 0 || model.theta.dim != d) {
        throw SchemaError("gc_sample: model marginals and correlation matrix disagree");
    }

    EncodedMatrix matrix;
    matrix.layout = buildLayout(model.encoder);
    if (matrix.layout.size() != d) {
        throw SchemaError("gc_sample: encoder layout does not match marginal count");
    }
    matrix.rows = n;
    matrix.cols = d;
    matrix.data.assign(n * d, 0.0);

    RngStream stream(seed, fnv1a64("gc-sample"));
    std::vector<double> noise(d);
    for (size_t r = 0; r < n; ++r) {
        for (size_t j = 0; j < d; ++j) noise[j] = stream.normal();
        for (size_t j = 0; j < d; ++j) {
            double z = 0.0;
            for (size_t k = 0; k <= j; ++k) z += model.theta.chol[j * d + k] * noise[k];
            const double u = normalCdf(z);
            matrix.at(r, j) = model.marginals[j].quantile(std::clamp(u, 1e-6, 1.0 - 1e-6));
        }
    }
    return decodeMatrix(matrix, model.encoder);
}

nlohmann::json FittedCopula::toJson() const {
    nlohmann::json doc;
    doc["kind"] = "gaussian_copula";
    doc["encoder"] = encoder.toJson();
    doc["fit_rows"] = fitRows;
    doc["constant_columns"] = constantColumns;
    doc["column_order"] = columnOrder;
    doc["marginals"] = nlohmann::json::array();
    for (const auto& kde : marginals) {
        doc["marginals"].push_back(
            {{"samples", kde.sortedSamples()}, {"bandwidth", kde.bandwidth()}});
    }
    doc["theta"] = theta.theta;
    doc["dim"] = theta.dim;
    return doc;
}

FittedCopula FittedCopula::fromJson(const nlohmann::json& doc) {
    if (doc.value("kind", "") != std::string("gaussian_copula")) {
        throw ParseError("not a gaussian copula model file");
    }
    FittedCopula model;
    model.encoder = EncoderState::fromJson(doc.at("encoder"));
    model.fitRows = doc.value("fit_rows", 0u);
    model.constantColumns = doc.value("constant_columns", 0u);
    model.columnOrder = doc.at("column_order").get<std::vector<std::string>>();
    for (const auto& entry : doc.at("marginals")) {
        model.marginals.push_back(KdeMarginal::fromParts(
            entry.at("samples").get<std::vector<double>>(), entry.at("bandwidth").get<double>()));
    }
    const size_t dim = doc.at("dim").get<size_t>();
    model.theta = choleskyPsd(doc.at("theta").get<std::vector<double>>(), dim);
    return model;
}

void FittedCopula::save(const std::string& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write model file: " + path);
    out << toJson().dump() << "\n";
}

FittedCopula FittedCopula::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open model file: " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("model file: ") + e.what());
    }
    return fromJson(doc);
}

}  // namespace synthflight
