#pragma once

#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "synthflight/table.hpp"
#include "synthflight/timezone.hpp"

namespace synthflight {

// Canonical names of the full 30-feature flight table, in presentation order.
namespace col {
inline constexpr const char* kCarrier = "carrier";
inline constexpr const char* kTailNumber = "tail_number";
inline constexpr const char* kOriginId = "origin_airport_id";
inline constexpr const char* kOriginIcao = "origin_icao";
inline constexpr const char* kOriginCity = "origin_city";
inline constexpr const char* kOriginStateCode = "origin_state_code";
inline constexpr const char* kOriginStateName = "origin_state_name";
inline constexpr const char* kDestId = "dest_airport_id";
inline constexpr const char* kDestIcao = "dest_icao";
inline constexpr const char* kDestCity = "dest_city";
inline constexpr const char* kDestStateCode = "dest_state_code";
inline constexpr const char* kDestStateName = "dest_state_name";
inline constexpr const char* kQuarter = "quarter";
inline constexpr const char* kDayOfWeek = "day_of_week";
inline constexpr const char* kSchedDep = "sched_dep_utc";
inline constexpr const char* kActualDep = "actual_dep_utc";
inline constexpr const char* kDepDelta = "dep_delta_min";
inline constexpr const char* kDepDelayLabel = "dep_delay_label";
inline constexpr const char* kTaxiOut = "taxi_out_min";
inline constexpr const char* kWheelsOff = "wheels_off_utc";
inline constexpr const char* kWheelsOn = "wheels_on_utc";
inline constexpr const char* kTaxiIn = "taxi_in_min";
inline constexpr const char* kSchedArr = "sched_arr_utc";
inline constexpr const char* kActualArr = "actual_arr_utc";
inline constexpr const char* kArrDelta = "arr_delta_min";
inline constexpr const char* kArrDelayLabel = "arr_delay_label";
inline constexpr const char* kSchedElapsed = "sched_elapsed_min";
inline constexpr const char* kActualElapsed = "actual_elapsed_min";
inline constexpr const char* kAirTime = "air_time_min";
inline constexpr const char* kDistance = "distance_miles";
}  // namespace col

// A delay label is 1 when the corresponding delta is >= this many minutes
// (DOT on-time reporting convention).
inline constexpr double kDelayThresholdMin = 15.0;

enum class FrameVariant { UtcTs, UtcD, UtcD2 };

const char* frameVariantName(FrameVariant variant);
FrameVariant frameVariantFromName(const std::string& name);
const std::vector<std::string>& frameColumns(FrameVariant variant);
std::vector<ColumnSchema> fullFlightSchema();

// Feature set of the delay-prediction task plus its target column.
const std::vector<std::string>& predictionFeatures();
inline constexpr const char* kPredictionTarget = col::kArrDelta;

struct AirportInfo {
    std::string icao;
    std::string city;
    std::string stateCode;
    std::string stateName;
    std::string tzName;
};

class AirportDirectory {
public:
    void add(const std::string& id, AirportInfo info);  // validates the timezone
    const AirportInfo& resolve(const std::string& id) const;  // throws DirectoryError
    bool contains(const std::string& id) const;
    size_t size() const { return airports_.size(); }
    const std::map<std::string, AirportInfo>& all() const { return airports_; }

    static AirportDirectory loadCsv(const std::string& path);
    void writeCsv(const std::string& path) const;

private:
    std::map<std::string, AirportInfo> airports_;
};

class RouteDirectory {
public:
    void add(const std::string& origin, const std::string& dest, double distanceMiles);
    bool contains(const std::string& origin, const std::string& dest) const;
    double distance(const std::string& origin, const std::string& dest) const;
    size_t size() const { return distances_.size(); }
    const std::map<std::pair<std::string, std::string>, double>& all() const { return distances_; }

    static RouteDirectory loadCsv(const std::string& path);
    void writeCsv(const std::string& path) const;

private:
    std::map<std::pair<std::string, std::string>, double> distances_;
};

// Raw BTS column name -> canonical feature name.
struct RawMapping {
    std::unordered_map<std::string, std::string> rawToCanonical;

    static RawMapping defaults();
    static RawMapping loadJson(const std::string& path);
    void writeJson(const std::string& path) const;
};

// Reads a raw on-time-performance CSV into a typed table with canonical
// column names (HHMM local times kept as numerics at this stage).
Table readRawFlights(const std::string& path, const RawMapping& mapping = RawMapping::defaults());

struct IngestReport {
    size_t inputRows = 0;
    size_t droppedMissingTail = 0;
    size_t droppedInconsistent = 0;
    size_t cancelledKept = 0;
    size_t outputRows = 0;
};

// HHMM local clock fields + flight date -> timezone-aware UTC datetimes.
// Arrival-side dates are inferred from duration features (overnight rollover).
Table localizeAndConvert(const Table& raw, const AirportDirectory& airports);

// Builds the full 30-column flight table: directory lookups, quarter and
// day-of-week, delay deltas and labels. Rows with a missing tail number are
// dropped; cancelled flights keep masked actual-time fields.
Table engineerFeatures(const Table& localized, const AirportDirectory& airports,
                       IngestReport* report = nullptr, double durationToleranceMin = 1.0);

Table buildFrame(const Table& flights, FrameVariant variant);

RouteDirectory buildRouteDirectory(const Table& flights);

}  // namespace synthflight
