#pragma once

#include <string>

#include "synthflight/ingest.hpp"
#include "synthflight/table.hpp"

namespace synthflight {

// Deterministic BTS-shaped corpus: NY-centric network of two dozen airports
// across four time zones, directed routes with fixed great-circle distances,
// duration-consistent schedules, ~20% delayed flights, a few cancellations
// and missing tail numbers.
struct MockConfig {
    size_t rows = 5000;
    uint64_t seed = 1;
    double cancelRate = 0.015;
    double missingTailRate = 0.004;
    int year = 2023;
    int month = 1;
};

struct MockFiles {
    std::string rawCsv;
    std::string airportsCsv;
    std::string mappingJson;
};

AirportDirectory mockAirports();

// Writes raw_flights.csv (BTS column names), airports.csv, bts_mapping.json.
MockFiles writeMockData(const std::string& outDir, const MockConfig& config);

}  // namespace synthflight
