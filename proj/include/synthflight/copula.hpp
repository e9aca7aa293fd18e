#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "synthflight/encode.hpp"
#include "synthflight/numkit.hpp"
#include "synthflight/table.hpp"

namespace synthflight {

struct GcOptions {
    // Fit cost is O(n^2 * d) through the KDE CDF evaluations, so training is
    // capped; larger inputs must be subsampled by the caller.
    size_t rowCap = 5000;
    size_t minRows = 10;
};

// KDE marginals per encoded column plus the normal-scores correlation matrix.
// Model files embed the training values (the KDE sample points), so treat
// them as sensitive as the training data itself.
struct FittedCopula {
    EncoderState encoder;
    std::vector<KdeMarginal> marginals;
    CorrelationMatrix theta;
    std::vector<std::string> columnOrder;
    size_t fitRows = 0;
    size_t constantColumns = 0;  // marginals that hit the bandwidth floor

    nlohmann::json toJson() const;
    static FittedCopula fromJson(const nlohmann::json& doc);
    void save(const std::string& path) const;
    static FittedCopula load(const std::string& path);
};

FittedCopula gcFit(const Table& frame, uint64_t seed, const GcOptions& options = {});

// Sampling draws z ~ N(0, theta) through the Cholesky factor, maps each
// coordinate through Phi and the marginal quantile, then decodes. Cost is
// O(n * d^2) plus the KDE inversions.
Table gcSample(const FittedCopula& model, size_t n, uint64_t seed);

}  // namespace synthflight
