#include "synthflight/mock.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "synthflight/numkit.hpp"
#include "synthflight/table_io.hpp"
#include "synthflight/timezone.hpp"

namespace synthflight {

namespace {

struct MockAirport {
    const char* id;
    const char* icao;
    const char* city;
    const char* stateCode;
    const char* stateName;
    const char* tz;
    double lat;
    double lon;
};

// NY hubs and regionals first, then outstations.
const MockAirport kAirports[] = {
    {"12478", "KJFK", "New York", "NY", "New York", "America/New_York", 40.6413, -73.7781},
    {"12953", "KLGA", "New York", "NY", "New York", "America/New_York", 40.7769, -73.8740},
    {"10792", "KBUF", "Buffalo", "NY", "New York", "America/New_York", 42.9405, -78.7322},
    {"14307", "KROC", "Rochester", "NY", "New York", "America/New_York", 43.1189, -77.6724},
    {"15096", "KSYR", "Syracuse", "NY", "New York", "America/New_York", 43.1112, -76.1063},
    {"10257", "KALB", "Albany", "NY", "New York", "America/New_York", 42.7483, -73.8017},
    {"11983", "KHPN", "White Plains", "NY", "New York", "America/New_York", 41.0670, -73.7076},
    {"12391", "KISP", "Islip", "NY", "New York", "America/New_York", 40.7952, -73.1002},
    {"13930", "KORD", "Chicago", "IL", "Illinois", "America/Chicago", 41.9742, -87.9073},
    {"10397", "KATL", "Atlanta", "GA", "Georgia", "America/New_York", 33.6407, -84.4277},
    {"12892", "KLAX", "Los Angeles", "CA", "California", "America/Los_Angeles", 33.9416, -118.4085},
    {"11298", "KDFW", "Dallas-Fort Worth", "TX", "Texas", "America/Chicago", 32.8998, -97.0403},
    {"11292", "KDEN", "Denver", "CO", "Colorado", "America/Denver", 39.8561, -104.6737},
    {"14771", "KSFO", "San Francisco", "CA", "California", "America/Los_Angeles", 37.6213, -122.3790},
    {"13303", "KMIA", "Miami", "FL", "Florida", "America/New_York", 25.7959, -80.2870},
    {"10721", "KBOS", "Boston", "MA", "Massachusetts", "America/New_York", 42.3656, -71.0096},
    {"11278", "KDCA", "Washington", "DC", "District of Columbia", "America/New_York", 38.8512, -77.0402},
    {"11057", "KCLT", "Charlotte", "NC", "North Carolina", "America/New_York", 35.2144, -80.9473},
    {"13487", "KMSP", "Minneapolis", "MN", "Minnesota", "America/Chicago", 44.8848, -93.2223},
    {"14747", "KSEA", "Seattle", "WA", "Washington", "America/Los_Angeles", 47.4502, -122.3088},
    {"14107", "KPHX", "Phoenix", "AZ", "Arizona", "America/Phoenix", 33.4342, -112.0116},
    {"12266", "KIAH", "Houston", "TX", "Texas", "America/Chicago", 29.9902, -95.3368},
    {"11433", "KDTW", "Detroit", "MI", "Michigan", "America/New_York", 42.2162, -83.3554},
    {"13204", "KMCO", "Orlando", "FL", "Florida", "America/New_York", 28.4312, -81.3081},
};
constexpr size_t kAirportCount = sizeof(kAirports) / sizeof(kAirports[0]);
constexpr size_t kOutstationStart = 8;

const char* kCarriers[] = {"AA", "DL", "UA", "B6", "WN", "AS", "NK", "F9", "YX"};
constexpr size_t kCarrierCount = sizeof(kCarriers) / sizeof(kCarriers[0]);

double haversineMiles(const MockAirport& a, const MockAirport& b) {
    const double rad = M_PI / 180.0;
    const double dlat = (b.lat - a.lat) * rad;
    const double dlon = (b.lon - a.lon) * rad;
    const double h = std::sin(dlat / 2) * std::sin(dlat / 2) +
                     std::cos(a.lat * rad) * std::cos(b.lat * rad) * std::sin(dlon / 2) *
                         std::sin(dlon / 2);
    return 2.0 * 3958.8 * std::asin(std::min(1.0, std::sqrt(h)));
}

struct MockRoute {
    size_t origin;
    size_t dest;
    double distance;
    double weight;
};

std::vector<MockRoute> buildRoutes() {
    std::vector<MockRoute> routes;
    auto addPair = [&](size_t a, size_t b, double weight) {
        const double miles = std::round(haversineMiles(kAirports[a], kAirports[b]));
        routes.push_back({a, b, miles, weight});
        routes.push_back({b, a, miles, weight});
    };
    // outstations to the three biggest NY airports
    for (size_t o = kOutstationStart; o < kAirportCount; ++o) {
        addPair(o, 0, 3.0);  // JFK
        addPair(o, 1, 2.5);  // LGA
        addPair(o, 2, 1.0);  // BUF
    }
    // NY hub to NY regional shuttles
    for (size_t hub = 0; hub < 2; ++hub) {
        for (size_t regional = 2; regional < 6; ++regional) {
            addPair(hub, regional, 1.5);
        }
    }
    // keep HPN and ISP connected beyond the hubs
    addPair(6, 8, 0.8);   // HPN-ORD
    addPair(6, 9, 0.8);   // HPN-ATL
    addPair(7, 9, 0.8);   // ISP-ATL
    addPair(7, 14, 0.8);  // ISP-MIA
    return routes;
}

int hhmmAtLocal(const Timezone& tz, int64_t utc) {
    const int64_t local = tz.utcToLocal(utc);
    int64_t rem = local % 86400;
    if (rem < 0) rem += 86400;
    return static_cast<int>(rem / 3600) * 100 + static_cast<int>(rem / 60 % 60);
}

std::string localDate(const Timezone& tz, int64_t utc) {
    const int64_t local = tz.utcToLocal(utc);
    int64_t days = local / 86400;
    if (local % 86400 < 0) days -= 1;
    int y, m, d;
    civilFromDays(days, y, m, d);
    char buf[12];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", y, m, d);
    return buf;
}

int daysInMonth(int y, int m) {
    static const int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    const bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
    return m == 2 && leap ? 29 : kDays[m - 1];
}

}  // namespace

AirportDirectory mockAirports() {
    AirportDirectory dir;
    for (const auto& a : kAirports) {
        dir.add(a.id, {a.icao, a.city, a.stateCode, a.stateName, a.tz});
    }
    return dir;
}

MockFiles writeMockData(const std::string& outDir, const MockConfig& config) {
    std::filesystem::create_directories(outDir);
    MockFiles files;
    files.rawCsv = outDir + "/raw_flights.csv";
    files.airportsCsv = outDir + "/airports.csv";
    files.mappingJson = outDir + "/bts_mapping.json";

    mockAirports().writeCsv(files.airportsCsv);
    RawMapping::defaults().writeJson(files.mappingJson);

    const auto routes = buildRoutes();
    double totalWeight = 0.0;
    for (const auto& r : routes) totalWeight += r.weight;

    // per-carrier tail pools
    std::vector<std::vector<std::string>> tails(kCarrierCount);
    for (size_t c = 0; c < kCarrierCount; ++c) {
        for (int i = 0; i < 14; ++i) {
            char buf[12];
            std::snprintf(buf, sizeof(buf), "N%03zu%s", 100 + c * 20 + static_cast<size_t>(i),
                          kCarriers[c]);
            tails[c].push_back(buf);
        }
    }

    RngStream rng(config.seed, fnv1a64("make-mock"));
    const auto& db = TimezoneDb::instance();
    const int monthDays = daysInMonth(config.year, config.month);

    std::string csv =
        "FlightDate,Reporting_Airline,Tail_Number,OriginAirportID,DestAirportID,CRSDepTime,DepTime,"
        "DepDelay,TaxiOut,WheelsOff,WheelsOn,TaxiIn,CRSArrTime,ArrTime,ArrDelay,Cancelled,"
        "CRSElapsedTime,ActualElapsedTime,AirTime,Distance\n";

    char hhmm[8];
    for (size_t row = 0; row < config.rows; ++row) {
        // weighted route pick
        double pick = rng.uniform01() * totalWeight;
        size_t routeIdx = 0;
        for (; routeIdx + 1 < routes.size(); ++routeIdx) {
            pick -= routes[routeIdx].weight;
            if (pick <= 0.0) break;
        }
        const MockRoute& route = routes[routeIdx];
        const MockAirport& origin = kAirports[route.origin];
        const MockAirport& dest = kAirports[route.dest];
        const Timezone& originTz = db.zone(origin.tz);
        const Timezone& destTz = db.zone(dest.tz);

        // a route leans on three carriers, with occasional interlopers
        const size_t carrierIdx = rng.uniform01() < 0.9
                                      ? (routeIdx + rng.uniformIndex(3)) % kCarrierCount
                                      : rng.uniformIndex(kCarrierCount);
        const char* carrier = kCarriers[carrierIdx];
        const std::string& tail = tails[carrierIdx][rng.uniformIndex(tails[carrierIdx].size())];

        // scheduled departure: a day of the month, 05:00..22:55 local, 5-min grid
        const int day = 1 + static_cast<int>(rng.uniformIndex(monthDays));
        const int depMinutes = 300 + static_cast<int>(rng.uniformIndex(215)) * 5;
        const int64_t localWall =
            (daysFromCivil(config.year, config.month, day)) * 86400 + depMinutes * 60;
        const int64_t schedDep = originTz.localToUtc(localWall);

        // schedule built from a cruise-speed draw plus fixed pads
        const double cruise = std::clamp(455.0 + rng.normal() * 25.0, 380.0, 520.0);
        const int airSched = static_cast<int>(std::lround(route.distance / cruise * 60.0 + 18.0));
        const int buffer = 5 + static_cast<int>(rng.uniformIndex(16));
        const int schedElapsed = airSched + 15 + 8 + buffer;
        const int64_t schedArr = schedDep + static_cast<int64_t>(schedElapsed) * 60;

        const std::string flightDate = localDate(originTz, schedDep);
        const bool cancelled = rng.uniform01() < config.cancelRate;
        const bool missingTail = rng.uniform01() < config.missingTailRate;

        csv += flightDate;
        csv += ',';
        csv += carrier;
        csv += ',';
        if (!missingTail) csv += tail;
        csv += ',';
        csv += origin.id;
        csv += ',';
        csv += dest.id;
        csv += ',';
        std::snprintf(hhmm, sizeof(hhmm), "%04d", hhmmAtLocal(originTz, schedDep));
        csv += hhmm;
        csv += ',';

        if (cancelled) {
            std::snprintf(hhmm, sizeof(hhmm), "%04d", hhmmAtLocal(destTz, schedArr));
            csv += ",,,,,,";  // DepTime..TaxiIn empty
            csv += hhmm;     // CRSArrTime
            csv += ",,,1,";  // ArrTime, ArrDelay empty; Cancelled
            csv += std::to_string(schedElapsed);
            csv += ",,,";  // ActualElapsed, AirTime empty
            csv += formatNumber(route.distance);
            csv += '\n';
            continue;
        }

        // departure delay mixture: early, mild, heavy tail (~20% >= 15 min)
        const double u = rng.uniform01();
        int depDelay;
        if (u < 0.52) {
            depDelay = -static_cast<int>(rng.uniformIndex(10));
        } else if (u < 0.80) {
            depDelay = 1 + static_cast<int>(rng.uniformIndex(14));
        } else {
            depDelay = 15 + static_cast<int>(std::lround(-25.0 * std::log(rng.uniform01())));
            depDelay = std::min(depDelay, 240);
        }

        const int airLo = static_cast<int>(std::lround(route.distance / 620.0 * 60.0)) + 6;
        const int airHi = static_cast<int>(std::lround(route.distance / 180.0 * 60.0)) + 6;
        int airTime = airSched + static_cast<int>(std::lround(rng.normal() * 7.0));
        airTime = std::clamp(airTime, airLo, airHi);
        const int taxiOut = 8 + static_cast<int>(std::lround(-9.0 * std::log(rng.uniform01())));
        const int taxiIn = 4 + static_cast<int>(std::lround(-5.0 * std::log(rng.uniform01())));
        const int actualElapsed = taxiOut + airTime + taxiIn;
        const int arrDelay = depDelay + actualElapsed - schedElapsed;

        const int64_t actualDep = schedDep + static_cast<int64_t>(depDelay) * 60;
        const int64_t wheelsOff = actualDep + static_cast<int64_t>(taxiOut) * 60;
        const int64_t actualArr = actualDep + static_cast<int64_t>(actualElapsed) * 60;
        const int64_t wheelsOn = actualArr - static_cast<int64_t>(taxiIn) * 60;

        std::snprintf(hhmm, sizeof(hhmm), "%04d", hhmmAtLocal(originTz, actualDep));
        csv += hhmm;
        csv += ',';
        csv += std::to_string(depDelay);
        csv += ',';
        csv += std::to_string(taxiOut);
        csv += ',';
        std::snprintf(hhmm, sizeof(hhmm), "%04d", hhmmAtLocal(originTz, wheelsOff));
        csv += hhmm;
        csv += ',';
        std::snprintf(hhmm, sizeof(hhmm), "%04d", hhmmAtLocal(destTz, wheelsOn));
        csv += hhmm;
        csv += ',';
        csv += std::to_string(taxiIn);
        csv += ',';
        std::snprintf(hhmm, sizeof(hhmm), "%04d", hhmmAtLocal(destTz, schedArr));
        csv += hhmm;
        csv += ',';
        std::snprintf(hhmm, sizeof(hhmm), "%04d", hhmmAtLocal(destTz, actualArr));
        csv += hhmm;
        csv += ',';
        csv += std::to_string(arrDelay);
        csv += ",0,";
        csv += std::to_string(schedElapsed);
        csv += ',';
        csv += std::to_string(actualElapsed);
        csv += ',';
        csv += std::to_string(airTime);
        csv += ',';
        csv += formatNumber(route.distance);
        csv += '\n';
    }

    std::ofstream out(files.rawCsv, std::ios::trunc);
    if (!out) throw IoError("cannot write mock data: " + files.rawCsv);
    out << csv;
    return files;
}

}  // namespace synthflight
