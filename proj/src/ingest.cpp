#include "synthflight/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "synthflight/table_io.hpp"

namespace synthflight {

namespace {

// Raw canonical columns produced by readRawFlights.
namespace raw {
constexpr const char* kFlightDate = "flight_date";
constexpr const char* kCrsDep = "crs_dep_hhmm";
constexpr const char* kDep = "dep_hhmm";
constexpr const char* kDepDelay = "dep_delay_min";
constexpr const char* kTaxiOut = "taxi_out_min";
constexpr const char* kWheelsOff = "wheels_off_hhmm";
constexpr const char* kWheelsOn = "wheels_on_hhmm";
constexpr const char* kTaxiIn = "taxi_in_min";
constexpr const char* kCrsArr = "crs_arr_hhmm";
constexpr const char* kArr = "arr_hhmm";
constexpr const char* kArrDelay = "arr_delay_min";
constexpr const char* kCancelled = "cancelled";
constexpr const char* kCrsElapsed = "crs_elapsed_min";
constexpr const char* kActualElapsed = "actual_elapsed_min";
constexpr const char* kAirTime = "air_time_min";
}  // namespace raw

struct RawColumnSpec {
    const char* canonical;
    ColumnKind kind;
    bool nullable;
    const char* unit;
};

const std::vector<RawColumnSpec>& rawColumnSpecs() {
    static const std::vector<RawColumnSpec> specs = {
        {raw::kFlightDate, ColumnKind::Categorical, false, ""},
        {col::kCarrier, ColumnKind::Categorical, false, ""},
        {col::kTailNumber, ColumnKind::Categorical, true, ""},
        {col::kOriginId, ColumnKind::Categorical, false, ""},
        {col::kDestId, ColumnKind::Categorical, false, ""},
        {raw::kCrsDep, ColumnKind::Numeric, false, "hhmm"},
        {raw::kDep, ColumnKind::Numeric, true, "hhmm"},
        {raw::kDepDelay, ColumnKind::Numeric, true, "min"},
        {raw::kTaxiOut, ColumnKind::Numeric, true, "min"},
        {raw::kWheelsOff, ColumnKind::Numeric, true, "hhmm"},
        {raw::kWheelsOn, ColumnKind::Numeric, true, "hhmm"},
        {raw::kTaxiIn, ColumnKind::Numeric, true, "min"},
        {raw::kCrsArr, ColumnKind::Numeric, false, "hhmm"},
        {raw::kArr, ColumnKind::Numeric, true, "hhmm"},
        {raw::kArrDelay, ColumnKind::Numeric, true, "min"},
        {raw::kCancelled, ColumnKind::Numeric, false, ""},
        {raw::kCrsElapsed, ColumnKind::Numeric, false, "min"},
        {raw::kActualElapsed, ColumnKind::Numeric, true, "min"},
        {raw::kAirTime, ColumnKind::Numeric, true, "min"},
        {col::kDistance, ColumnKind::Numeric, false, "miles"},
    };
    return specs;
}

int64_t parseFlightDateDays(const std::string& text) {
    int y, m, d;
    if (std::sscanf(text.c_str(), "%4d-%2d-%2d", &y, &m, &d) != 3 || text.size() != 10) {
        throw ParseError("invalid flight date: '" + text + "'");
    }
    return daysFromCivil(y, m, d);
}

// HHMM integer to seconds past local midnight; 2400 wraps to the next day.
int64_t hhmmToSeconds(double hhmm, int64_t* dayCarry) {
    const int value = static_cast<int>(std::llround(hhmm));
    int hours = value / 100;
    const int minutes = value % 100;
    if (value < 0 || hours > 24 || minutes > 59 || (hours == 24 && minutes != 0)) {
        throw ParseError("invalid HHMM time: " + std::to_string(value));
    }
    *dayCarry = 0;
    if (hours == 24) {
        hours = 0;
        *dayCarry = 1;
    }
    return hours * 3600 + minutes * 60;
}

// Snaps a local HHMM clock reading to the UTC instant nearest the target,
// trying day offsets around the flight date.
int64_t snapLocalClock(const Timezone& tz, int64_t flightDays, double hhmm, int64_t targetUtc) {
    int64_t carry = 0;
    const int64_t daySeconds = hhmmToSeconds(hhmm, &carry);
    int64_t best = 0;
    int64_t bestGap = std::numeric_limits<int64_t>::max();
    for (int64_t offset = -1; offset <= 2; ++offset) {
        const int64_t local = (flightDays + carry + offset) * 86400 + daySeconds;
        const int64_t utc = tz.localToUtc(local);
        const int64_t gap = std::abs(utc - targetUtc);
        if (gap < bestGap) {
            bestGap = gap;
            best = utc;
        }
    }
    return best;
}

double minutesBetween(int64_t fromUtc, int64_t toUtc) {
    return static_cast<double>(toUtc - fromUtc) / 60.0;
}

struct LocalCivil {
    int year, month, day, weekday;  // weekday: 1 = Monday .. 7 = Sunday
};

LocalCivil localCivil(const Timezone& tz, int64_t utc) {
    const int64_t local = tz.utcToLocal(utc);
    int64_t days = local / 86400;
    if (local % 86400 < 0) days -= 1;
    LocalCivil out{};
    civilFromDays(days, out.year, out.month, out.day);
    out.weekday = static_cast<int>(((days + 3) % 7 + 7) % 7) + 1;  // 1970-01-01 was a Thursday
    return out;
}

}  // namespace

const char* frameVariantName(FrameVariant variant) {
    switch (variant) {
        case FrameVariant::UtcTs: return "utc_ts";
        case FrameVariant::UtcD: return "utc_d";
        case FrameVariant::UtcD2: return "utc_d_2";
    }
    return "unknown";
}

FrameVariant frameVariantFromName(const std::string& name) {
    if (name == "utc_ts") return FrameVariant::UtcTs;
    if (name == "utc_d") return FrameVariant::UtcD;
    if (name == "utc_d_2") return FrameVariant::UtcD2;
    throw ConfigError("unknown frame variant: " + name);
}

const std::vector<std::string>& frameColumns(FrameVariant variant) {
    static const std::vector<std::string> utcTs = {
        col::kCarrier, col::kTailNumber, col::kOriginId,  col::kDestId,   col::kSchedDep,
        col::kActualDep, col::kWheelsOff, col::kWheelsOn, col::kSchedArr, col::kActualArr};
    static const std::vector<std::string> utcD = {
        col::kCarrier,  col::kTailNumber,   col::kOriginId,      col::kDestId, col::kSchedDep,
        col::kDepDelta, col::kTaxiOut,      col::kSchedElapsed,  col::kActualElapsed,
        col::kAirTime};
    static const std::vector<std::string> utcD2 = {
        col::kCarrier,  col::kTailNumber, col::kOriginId, col::kDestId,       col::kSchedDep,
        col::kActualDep, col::kDepDelta,  col::kTaxiOut,  col::kTaxiIn,       col::kArrDelta,
        col::kSchedElapsed, col::kActualElapsed, col::kAirTime};
    switch (variant) {
        case FrameVariant::UtcTs: return utcTs;
        case FrameVariant::UtcD: return utcD;
        case FrameVariant::UtcD2: return utcD2;
    }
    throw ConfigError("unknown frame variant");
}

const std::vector<std::string>& predictionFeatures() {
    static const std::vector<std::string> features = {
        col::kCarrier,  col::kTailNumber, col::kOriginIcao,  col::kDestIcao,
        col::kQuarter,  col::kDayOfWeek,  col::kSchedDep,    col::kActualDep,
        col::kDepDelta, col::kTaxiOut,    col::kWheelsOff,   col::kSchedArr,
        col::kSchedElapsed, col::kDistance};
    return features;
}

std::vector<ColumnSchema> fullFlightSchema() {
    auto cat = [](const char* name, bool nullable = false) {
        return ColumnSchema{name, ColumnKind::Categorical, "", nullable};
    };
    auto num = [](const char* name, const char* unit, bool nullable = false) {
        return ColumnSchema{name, ColumnKind::Numeric, unit, nullable};
    };
    auto dt = [](const char* name, bool nullable = false) {
        return ColumnSchema{name, ColumnKind::Datetime, "", nullable};
    };
    return {
        cat(col::kCarrier),       cat(col::kTailNumber),      cat(col::kOriginId),
        cat(col::kOriginIcao),    cat(col::kOriginCity),      cat(col::kOriginStateCode),
        cat(col::kOriginStateName), cat(col::kDestId),        cat(col::kDestIcao),
        cat(col::kDestCity),      cat(col::kDestStateCode),   cat(col::kDestStateName),
        cat(col::kQuarter),       cat(col::kDayOfWeek),       dt(col::kSchedDep),
        dt(col::kActualDep, true), num(col::kDepDelta, "min", true),
        cat(col::kDepDelayLabel, true), num(col::kTaxiOut, "min", true),
        dt(col::kWheelsOff, true), dt(col::kWheelsOn, true),  num(col::kTaxiIn, "min", true),
        dt(col::kSchedArr),       dt(col::kActualArr, true),  num(col::kArrDelta, "min", true),
        cat(col::kArrDelayLabel, true), num(col::kSchedElapsed, "min"),
        num(col::kActualElapsed, "min", true), num(col::kAirTime, "min", true),
        num(col::kDistance, "miles"),
    };
}

void AirportDirectory::add(const std::string& id, AirportInfo info) {
    if (!TimezoneDb::instance().isKnown(info.tzName)) {
        throw DirectoryError("airport " + id + " has unknown timezone '" + info.tzName + "'");
    }
    airports_[id] = std::move(info);
}

const AirportInfo& AirportDirectory::resolve(const std::string& id) const {
    auto it = airports_.find(id);
    if (it == airports_.end()) throw DirectoryError("unknown airport id: " + id);
    return it->second;
}

bool AirportDirectory::contains(const std::string& id) const { return airports_.count(id) > 0; }

AirportDirectory AirportDirectory::loadCsv(const std::string& path) {
    const auto rows = readCsvRows(path);
    if (rows.empty()) throw ParseError("empty airport directory: " + path);
    const std::vector<std::string> expected = {"id",         "icao",       "city",
                                               "state_code", "state_name", "tz_name"};
    if (rows.front() != expected) {
        throw SchemaError("airport directory header mismatch in " + path);
    }
    AirportDirectory dir;
    for (size_t r = 1; r < rows.size(); ++r) {
        if (rows[r].size() != expected.size()) {
            throw ParseError("airport directory row " + std::to_string(r) + " malformed");
        }
        dir.add(rows[r][0], {rows[r][1], rows[r][2], rows[r][3], rows[r][4], rows[r][5]});
    }
    return dir;
}

void AirportDirectory::writeCsv(const std::string& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write airport directory: " + path);
    out << "id,icao,city,state_code,state_name,tz_name\n";
    for (const auto& [id, info] : airports_) {
        out << csvEscape(id) << ',' << csvEscape(info.icao) << ',' << csvEscape(info.city) << ','
            << csvEscape(info.stateCode) << ',' << csvEscape(info.stateName) << ','
            << csvEscape(info.tzName) << '\n';
    }
}

void RouteDirectory::add(const std::string& origin, const std::string& dest, double distanceMiles) {
    if (!(distanceMiles > 0.0)) {
        throw DirectoryError("route " + origin + "->" + dest + " has non-positive distance");
    }
    const auto key = std::make_pair(origin, dest);
    auto it = distances_.find(key);
    if (it != distances_.end()) {
        if (std::abs(it->second - distanceMiles) > 1.0) {
            throw DirectoryError("route " + origin + "->" + dest + " has conflicting distances " +
                                 formatNumber(it->second) + " vs " + formatNumber(distanceMiles));
        }
        return;
    }
    distances_.emplace(key, distanceMiles);
}

bool RouteDirectory::contains(const std::string& origin, const std::string& dest) const {
    return distances_.count(std::make_pair(origin, dest)) > 0;
}

double RouteDirectory::distance(const std::string& origin, const std::string& dest) const {
    auto it = distances_.find(std::make_pair(origin, dest));
    if (it == distances_.end()) {
        throw DirectoryError("unknown route: " + origin + "->" + dest);
    }
    return it->second;
}

RouteDirectory RouteDirectory::loadCsv(const std::string& path) {
    const auto rows = readCsvRows(path);
    if (rows.empty()) throw ParseError("empty route directory: " + path);
    const std::vector<std::string> expected = {"origin_id", "dest_id", "distance_miles"};
    if (rows.front() != expected) {
        throw SchemaError("route directory header mismatch in " + path);
    }
    RouteDirectory dir;
    for (size_t r = 1; r < rows.size(); ++r) {
        if (rows[r].size() != expected.size()) {
            throw ParseError("route directory row " + std::to_string(r) + " malformed");
        }
        dir.add(rows[r][0], rows[r][1], parseNumber(rows[r][2]));
    }
    return dir;
}

void RouteDirectory::writeCsv(const std::string& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write route directory: " + path);
    out << "origin_id,dest_id,distance_miles\n";
    for (const auto& [key, distance] : distances_) {
        out << csvEscape(key.first) << ',' << csvEscape(key.second) << ',' << formatNumber(distance)
            << '\n';
    }
}

RawMapping RawMapping::defaults() {
    RawMapping mapping;
    mapping.rawToCanonical = {
        {"FlightDate", raw::kFlightDate},
        {"Reporting_Airline", col::kCarrier},
        {"Tail_Number", col::kTailNumber},
        {"OriginAirportID", col::kOriginId},
        {"DestAirportID", col::kDestId},
        {"CRSDepTime", raw::kCrsDep},
        {"DepTime", raw::kDep},
        {"DepDelay", raw::kDepDelay},
        {"TaxiOut", raw::kTaxiOut},
        {"WheelsOff", raw::kWheelsOff},
        {"WheelsOn", raw::kWheelsOn},
        {"TaxiIn", raw::kTaxiIn},
        {"CRSArrTime", raw::kCrsArr},
        {"ArrTime", raw::kArr},
        {"ArrDelay", raw::kArrDelay},
        {"Cancelled", raw::kCancelled},
        {"CRSElapsedTime", raw::kCrsElapsed},
        {"ActualElapsedTime", raw::kActualElapsed},
        {"AirTime", raw::kAirTime},
        {"Distance", col::kDistance},
    };
    return mapping;
}

RawMapping RawMapping::loadJson(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open mapping file: " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("mapping file " + path + ": " + e.what());
    }
    RawMapping mapping;
    for (const auto& [key, value] : doc.items()) {
        mapping.rawToCanonical[key] = value.get<std::string>();
    }
    return mapping;
}

void RawMapping::writeJson(const std::string& path) const {
    nlohmann::json doc = nlohmann::json::object();
    for (const auto& [key, value] : rawToCanonical) doc[key] = value;
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write mapping file: " + path);
    out << doc.dump(2) << "\n";
}

Table readRawFlights(const std::string& path, const RawMapping& mapping) {
    const auto rows = readCsvRows(path);
    if (rows.empty()) throw ParseError("empty raw flight file: " + path);
    const auto& header = rows.front();

    std::unordered_map<std::string, size_t> canonicalToRawIdx;
    for (size_t c = 0; c < header.size(); ++c) {
        auto it = mapping.rawToCanonical.find(header[c]);
        if (it != mapping.rawToCanonical.end()) canonicalToRawIdx[it->second] = c;
    }

    std::vector<ColumnSchema> schema;
    std::vector<size_t> sourceIdx;
    for (const auto& spec : rawColumnSpecs()) {
        auto it = canonicalToRawIdx.find(spec.canonical);
        if (it == canonicalToRawIdx.end()) {
            throw SchemaError("raw flight file is missing a column mapping to '" +
                              std::string(spec.canonical) + "'");
        }
        schema.push_back({spec.canonical, spec.kind, spec.unit, spec.nullable});
        sourceIdx.push_back(it->second);
    }

    Table table(schema, rows.size() - 1);
    for (size_t r = 1; r < rows.size(); ++r) {
        if (rows[r].size() != header.size()) {
            throw ParseError("raw row " + std::to_string(r) + " has " +
                             std::to_string(rows[r].size()) + " fields, header has " +
                             std::to_string(header.size()));
        }
        for (size_t c = 0; c < schema.size(); ++c) {
            const std::string& text = rows[r][sourceIdx[c]];
            if (text.empty()) {
                if (!schema[c].nullable) {
                    throw ParseError("raw row " + std::to_string(r) + ": required field '" +
                                     schema[c].name + "' is empty");
                }
                table.setMissing(c, r - 1);
                continue;
            }
            try {
                if (schema[c].kind == ColumnKind::Categorical) {
                    table.setCategory(c, r - 1, text);
                } else {
                    table.setNumber(c, r - 1, parseNumber(text));
                }
            } catch (const ParseError& e) {
                throw ParseError("raw row " + std::to_string(r) + ", column '" + schema[c].name +
                                 "': " + e.what());
            }
        }
    }
    table.validate();
    return table;
}

Table localizeAndConvert(const Table& rawTable, const AirportDirectory& airports) {
    const size_t n = rawTable.rowCount();
    auto idx = [&](const char* name) { return rawTable.columnIndex(name); };
    const size_t cDate = idx(raw::kFlightDate);
    const size_t cCarrier = idx(col::kCarrier);
    const size_t cTail = idx(col::kTailNumber);
    const size_t cOrigin = idx(col::kOriginId);
    const size_t cDest = idx(col::kDestId);
    const size_t cCrsDep = idx(raw::kCrsDep);
    const size_t cDep = idx(raw::kDep);
    const size_t cDepDelay = idx(raw::kDepDelay);
    const size_t cTaxiOut = idx(raw::kTaxiOut);
    const size_t cWheelsOff = idx(raw::kWheelsOff);
    const size_t cWheelsOn = idx(raw::kWheelsOn);
    const size_t cTaxiIn = idx(raw::kTaxiIn);
    const size_t cCrsArr = idx(raw::kCrsArr);
    const size_t cArr = idx(raw::kArr);
    const size_t cArrDelay = idx(raw::kArrDelay);
    const size_t cCancelled = idx(raw::kCancelled);
    const size_t cCrsElapsed = idx(raw::kCrsElapsed);
    const size_t cActualElapsed = idx(raw::kActualElapsed);
    const size_t cAirTime = idx(raw::kAirTime);
    const size_t cDistance = idx(col::kDistance);

    auto cat = [](const char* name) { return ColumnSchema{name, ColumnKind::Categorical, "", false}; };
    std::vector<ColumnSchema> schema = {
        cat(col::kCarrier),
        {col::kTailNumber, ColumnKind::Categorical, "", true},
        cat(col::kOriginId),
        cat(col::kDestId),
        {col::kSchedDep, ColumnKind::Datetime, "", false},
        {col::kActualDep, ColumnKind::Datetime, "", true},
        {col::kWheelsOff, ColumnKind::Datetime, "", true},
        {col::kWheelsOn, ColumnKind::Datetime, "", true},
        {col::kSchedArr, ColumnKind::Datetime, "", false},
        {col::kActualArr, ColumnKind::Datetime, "", true},
        {col::kTaxiOut, ColumnKind::Numeric, "min", true},
        {col::kTaxiIn, ColumnKind::Numeric, "min", true},
        {col::kSchedElapsed, ColumnKind::Numeric, "min", false},
        {col::kActualElapsed, ColumnKind::Numeric, "min", true},
        {col::kAirTime, ColumnKind::Numeric, "min", true},
        {col::kDistance, ColumnKind::Numeric, "miles", false},
        {raw::kCancelled, ColumnKind::Boolean, "", false},
    };
    Table out(schema, n);

    for (size_t r = 0; r < n; ++r) {
        const auto context = [&](const std::string& what) {
            return "row " + std::to_string(r) + ": " + what;
        };
        const auto& origin = airports.resolve(rawTable.categoryAt(cOrigin, r));
        const auto& dest = airports.resolve(rawTable.categoryAt(cDest, r));
        const Timezone& originTz = TimezoneDb::instance().zone(origin.tzName);
        const Timezone& destTz = TimezoneDb::instance().zone(dest.tzName);

        const int64_t flightDays = parseFlightDateDays(rawTable.categoryAt(cDate, r));

        int64_t carry = 0;
        const int64_t depSeconds = hhmmToSeconds(rawTable.numberAt(cCrsDep, r), &carry);
        const int64_t schedDep = originTz.localToUtc((flightDays + carry) * 86400 + depSeconds);

        const double crsElapsed = rawTable.numberAt(cCrsElapsed, r);
        const int64_t schedArr = snapLocalClock(destTz, flightDays, rawTable.numberAt(cCrsArr, r),
                                                schedDep + static_cast<int64_t>(crsElapsed * 60.0));
        if (schedArr <= schedDep) {
            throw ParseError(context("scheduled arrival not after departure for any day offset"));
        }

        out.setCategory(0, r, rawTable.categoryAt(cCarrier, r));
        if (rawTable.isMissing(cTail, r)) {
            out.setMissing(1, r);
        } else {
            out.setCategory(1, r, rawTable.categoryAt(cTail, r));
        }
        out.setCategory(2, r, rawTable.categoryAt(cOrigin, r));
        out.setCategory(3, r, rawTable.categoryAt(cDest, r));
        out.setTimestamp(4, r, schedDep);
        out.setTimestamp(8, r, schedArr);
        out.setNumber(12, r, minutesBetween(schedDep, schedArr));
        out.setNumber(15, r, rawTable.numberAt(cDistance, r));
        out.setFlag(16, r, rawTable.numberAt(cCancelled, r) != 0.0);

        const bool hasDep = !rawTable.isMissing(cDep, r);
        int64_t actualDep = 0;
        if (hasDep) {
            const double depDelay =
                rawTable.isMissing(cDepDelay, r) ? 0.0 : rawTable.numberAt(cDepDelay, r);
            actualDep = snapLocalClock(originTz, flightDays, rawTable.numberAt(cDep, r),
                                       schedDep + static_cast<int64_t>(depDelay * 60.0));
            out.setTimestamp(5, r, actualDep);
        } else {
            out.setMissing(5, r);
        }

        if (hasDep && !rawTable.isMissing(cWheelsOff, r) && !rawTable.isMissing(cTaxiOut, r)) {
            const int64_t target =
                actualDep + static_cast<int64_t>(rawTable.numberAt(cTaxiOut, r) * 60.0);
            out.setTimestamp(6, r, snapLocalClock(originTz, flightDays,
                                                  rawTable.numberAt(cWheelsOff, r), target));
        } else {
            out.setMissing(6, r);
        }

        const bool hasArr = !rawTable.isMissing(cArr, r);
        int64_t actualArr = 0;
        if (hasArr) {
            int64_t target;
            if (hasDep && !rawTable.isMissing(cActualElapsed, r)) {
                target = actualDep + static_cast<int64_t>(rawTable.numberAt(cActualElapsed, r) * 60.0);
            } else {
                const double arrDelay =
                    rawTable.isMissing(cArrDelay, r) ? 0.0 : rawTable.numberAt(cArrDelay, r);
                target = schedArr + static_cast<int64_t>(arrDelay * 60.0);
            }
            actualArr = snapLocalClock(destTz, flightDays, rawTable.numberAt(cArr, r), target);
            if (hasDep && actualArr <= actualDep) {
                throw ParseError(context("actual arrival not after departure for any day offset"));
            }
            out.setTimestamp(9, r, actualArr);
        } else {
            out.setMissing(9, r);
        }

        if (hasArr && !rawTable.isMissing(cWheelsOn, r) && !rawTable.isMissing(cTaxiIn, r)) {
            const int64_t target =
                actualArr - static_cast<int64_t>(rawTable.numberAt(cTaxiIn, r) * 60.0);
            out.setTimestamp(7, r, snapLocalClock(destTz, flightDays,
                                                  rawTable.numberAt(cWheelsOn, r), target));
        } else {
            out.setMissing(7, r);
        }

        auto copyNullable = [&](size_t dst, size_t src) {
            if (rawTable.isMissing(src, r)) {
                out.setMissing(dst, r);
            } else {
                out.setNumber(dst, r, rawTable.numberAt(src, r));
            }
        };
        copyNullable(10, cTaxiOut);
        copyNullable(11, cTaxiIn);
        copyNullable(13, cActualElapsed);
        copyNullable(14, cAirTime);
    }
    out.validate();
    return out;
}

Table engineerFeatures(const Table& localized, const AirportDirectory& airports,
                       IngestReport* report, double durationToleranceMin) {
    IngestReport local;
    IngestReport* stats = report ? report : &local;
    stats->inputRows = localized.rowCount();

    const size_t n = localized.rowCount();
    auto src = [&](const char* name) { return localized.columnIndex(name); };
    const size_t cCancelled = src("cancelled");

    Table out(fullFlightSchema(), n);
    std::vector<uint8_t> keep(n, 1);

    auto outIdx = [&](const char* name) { return out.columnIndex(name); };
    const size_t oCarrier = outIdx(col::kCarrier);
    const size_t oTail = outIdx(col::kTailNumber);
    const size_t oOriginId = outIdx(col::kOriginId);
    const size_t oDestId = outIdx(col::kDestId);

    for (size_t r = 0; r < n; ++r) {
        if (localized.isMissing(src(col::kTailNumber), r)) {
            keep[r] = 0;
            stats->droppedMissingTail++;
            continue;
        }
        const std::string& originId = localized.categoryAt(src(col::kOriginId), r);
        const std::string& destId = localized.categoryAt(src(col::kDestId), r);
        const AirportInfo& origin = airports.resolve(originId);
        const AirportInfo& dest = airports.resolve(destId);
        const Timezone& originTz = TimezoneDb::instance().zone(origin.tzName);

        const int64_t schedDep = localized.timestampAt(src(col::kSchedDep), r);
        const int64_t schedArr = localized.timestampAt(src(col::kSchedArr), r);
        const double schedElapsed = minutesBetween(schedDep, schedArr);
        const double rawSchedElapsed = localized.numberAt(src(col::kSchedElapsed), r);
        if (std::abs(schedElapsed - rawSchedElapsed) > durationToleranceMin) {
            keep[r] = 0;
            stats->droppedInconsistent++;
            continue;
        }

        const bool cancelled = localized.flagAt(cCancelled, r);
        const bool hasDep = !localized.isMissing(src(col::kActualDep), r);
        const bool hasArr = !localized.isMissing(src(col::kActualArr), r);

        double actualElapsed = 0.0;
        bool hasElapsed = false;
        if (hasDep && hasArr) {
            const int64_t actualDep = localized.timestampAt(src(col::kActualDep), r);
            const int64_t actualArr = localized.timestampAt(src(col::kActualArr), r);
            actualElapsed = minutesBetween(actualDep, actualArr);
            hasElapsed = true;
            const bool hasTaxiOut = !localized.isMissing(src(col::kTaxiOut), r);
            const bool hasTaxiIn = !localized.isMissing(src(col::kTaxiIn), r);
            const bool hasAir = !localized.isMissing(src(col::kAirTime), r);
            if (hasTaxiOut && hasTaxiIn && hasAir) {
                const double parts = localized.numberAt(src(col::kTaxiOut), r) +
                                     localized.numberAt(src(col::kAirTime), r) +
                                     localized.numberAt(src(col::kTaxiIn), r);
                if (std::abs(actualElapsed - parts) > durationToleranceMin) {
                    keep[r] = 0;
                    stats->droppedInconsistent++;
                    continue;
                }
            }
        }
        if (cancelled) stats->cancelledKept++;

        out.setCategory(oCarrier, r, localized.categoryAt(src(col::kCarrier), r));
        out.setCategory(oTail, r, localized.categoryAt(src(col::kTailNumber), r));
        out.setCategory(oOriginId, r, originId);
        out.setCategory(oDestId, r, destId);
        out.setCategory(outIdx(col::kOriginIcao), r, origin.icao);
        out.setCategory(outIdx(col::kOriginCity), r, origin.city);
        out.setCategory(outIdx(col::kOriginStateCode), r, origin.stateCode);
        out.setCategory(outIdx(col::kOriginStateName), r, origin.stateName);
        out.setCategory(outIdx(col::kDestIcao), r, dest.icao);
        out.setCategory(outIdx(col::kDestCity), r, dest.city);
        out.setCategory(outIdx(col::kDestStateCode), r, dest.stateCode);
        out.setCategory(outIdx(col::kDestStateName), r, dest.stateName);

        const LocalCivil depLocal = localCivil(originTz, schedDep);
        out.setCategory(outIdx(col::kQuarter), r, std::to_string((depLocal.month - 1) / 3 + 1));
        out.setCategory(outIdx(col::kDayOfWeek), r, std::to_string(depLocal.weekday));

        out.setTimestamp(outIdx(col::kSchedDep), r, schedDep);
        out.setTimestamp(outIdx(col::kSchedArr), r, schedArr);
        out.setNumber(outIdx(col::kSchedElapsed), r, schedElapsed);
        out.setNumber(outIdx(col::kDistance), r, localized.numberAt(src(col::kDistance), r));

        if (hasDep) {
            const int64_t actualDep = localized.timestampAt(src(col::kActualDep), r);
            out.setTimestamp(outIdx(col::kActualDep), r, actualDep);
            const double delta = minutesBetween(schedDep, actualDep);
            out.setNumber(outIdx(col::kDepDelta), r, delta);
            out.setCategory(outIdx(col::kDepDelayLabel), r,
                            delta >= kDelayThresholdMin ? "1" : "0");
        } else {
            out.setMissing(outIdx(col::kActualDep), r);
            out.setMissing(outIdx(col::kDepDelta), r);
            out.setMissing(outIdx(col::kDepDelayLabel), r);
        }
        if (hasArr) {
            const int64_t actualArr = localized.timestampAt(src(col::kActualArr), r);
            out.setTimestamp(outIdx(col::kActualArr), r, actualArr);
            const double delta = minutesBetween(schedArr, actualArr);
            out.setNumber(outIdx(col::kArrDelta), r, delta);
            out.setCategory(outIdx(col::kArrDelayLabel), r,
                            delta >= kDelayThresholdMin ? "1" : "0");
        } else {
            out.setMissing(outIdx(col::kActualArr), r);
            out.setMissing(outIdx(col::kArrDelta), r);
            out.setMissing(outIdx(col::kArrDelayLabel), r);
        }
        if (hasElapsed) {
            out.setNumber(outIdx(col::kActualElapsed), r, actualElapsed);
        } else {
            out.setMissing(outIdx(col::kActualElapsed), r);
        }

        auto copyOptional = [&](const char* name) {
            if (localized.isMissing(src(name), r)) {
                out.setMissing(outIdx(name), r);
            } else {
                out.setNumber(outIdx(name), r, localized.numberAt(src(name), r));
            }
        };
        copyOptional(col::kTaxiOut);
        copyOptional(col::kTaxiIn);
        copyOptional(col::kAirTime);
        auto copyOptionalDt = [&](const char* name) {
            if (localized.isMissing(src(name), r)) {
                out.setMissing(outIdx(name), r);
            } else {
                out.setTimestamp(outIdx(name), r, localized.timestampAt(src(name), r));
            }
        };
        copyOptionalDt(col::kWheelsOff);
        copyOptionalDt(col::kWheelsOn);
    }

    Table result = out.filterRows(keep);
    result.validate();
    stats->outputRows = result.rowCount();
    return result;
}

Table buildFrame(const Table& flights, FrameVariant variant) {
    return flights.selectColumns(frameColumns(variant));
}

RouteDirectory buildRouteDirectory(const Table& flights) {
    RouteDirectory dir;
    const size_t cOrigin = flights.columnIndex(col::kOriginId);
    const size_t cDest = flights.columnIndex(col::kDestId);
    const size_t cDistance = flights.columnIndex(col::kDistance);
    for (size_t r = 0; r < flights.rowCount(); ++r) {
        dir.add(flights.categoryAt(cOrigin, r), flights.categoryAt(cDest, r),
                flights.numberAt(cDistance, r));
    }
    return dir;
}

}  // namespace synthflight
