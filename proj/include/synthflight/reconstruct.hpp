#pragma once

#include <string>
#include <utility>

#include <json.hpp>

#include "synthflight/ingest.hpp"
#include "synthflight/table.hpp"

namespace synthflight {

struct FilterConfig {
    bool nonNegativeDurations = true;
    bool elapsedConsistency = true;
    double elapsedToleranceMin = 5.0;
    bool speedPlausibility = true;
    double speedMinMph = 100.0;
    double speedMaxMph = 700.0;
};

struct CleaningReport {
    size_t inputRows = 0;
    size_t routeRejected = 0;
    size_t negativeDuration = 0;
    size_t elapsedInconsistent = 0;
    size_t speedImplausible = 0;
    size_t outputRows = 0;

    bool balances() const {
        return inputRows ==
               outputRows + routeRejected + negativeDuration + elapsedInconsistent + speedImplausible;
    }
    nlohmann::json toJson() const;
};

// Expands a generated frame back to the full 30-column table using the fixed
// identities: scheduled arrival = scheduled departure + scheduled elapsed,
// actual arrival = scheduled arrival + arrival delta, wheels off = actual
// departure + taxi out, wheels on = actual arrival - taxi in. Duration
// columns are rounded to whole minutes (the raw feed's granularity) so the
// identities hold exactly. Routes absent from the directory leave a masked
// distance for the rejection pass to remove.
Table reconstruct(const Table& frame, FrameVariant variant, const AirportDirectory& airports,
                  const RouteDirectory& routes);

struct CleaningResult {
    Table cleaned;
    Table rejected;  // rejection_reason column followed by the 30 features
    CleaningReport report;
};

// Rejection sampling in fixed order: unknown routes first, then non-negative
// durations, elapsed consistency, speed plausibility.
CleaningResult rejectInvalid(const Table& reconstructed, const RouteDirectory& routes,
                             const FilterConfig& filters = {});

}  // namespace synthflight
