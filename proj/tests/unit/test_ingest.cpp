#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "helpers.hpp"
#include "synthflight/ingest.hpp"
#include "synthflight/table_io.hpp"
#include "synthflight/timezone.hpp"

using namespace synthflight;

namespace {

std::string tempDir() {
    auto dir = std::filesystem::temp_directory_path() / "synthflight_ingest_tests";
    std::filesystem::create_directories(dir);
    return dir.string();
}

void writeFile(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::trunc);
    out << content;
}

std::string airportsCsv() {
    return "id,icao,city,state_code,state_name,tz_name\n"
           "10800,KBUF,Buffalo,NY,New York,America/New_York\n"
           "12478,KJFK,New York,NY,New York,America/New_York\n"
           "12892,KLAX,Los Angeles,CA,California,America/Los_Angeles\n"
           "14107,KPHX,Phoenix,AZ,Arizona,America/Phoenix\n";
}

const char* kRawHeader =
    "FlightDate,Reporting_Airline,Tail_Number,OriginAirportID,DestAirportID,CRSDepTime,DepTime,"
    "DepDelay,TaxiOut,WheelsOff,WheelsOn,TaxiIn,CRSArrTime,ArrTime,ArrDelay,Cancelled,"
    "CRSElapsedTime,ActualElapsedTime,AirTime,Distance\n";

AirportDirectory loadTestAirports() {
    const std::string dir = tempDir();
    writeFile(dir + "/airports.csv", airportsCsv());
    return AirportDirectory::loadCsv(dir + "/airports.csv");
}

Table ingestRaw(const std::string& rows) {
    const std::string dir = tempDir();
    writeFile(dir + "/raw.csv", kRawHeader + rows);
    const AirportDirectory airports = loadTestAirports();
    const Table raw = readRawFlights(dir + "/raw.csv");
    return localizeAndConvert(raw, airports);
}

}  // namespace

TEST_CASE("timezones: winter offsets, DST, and local round trips") {
    const auto& db = TimezoneDb::instance();
    const Timezone& ny = db.zone("America/New_York");
    // frozen oracle: 2023-01-15T19:30:00Z
    CHECK(ny.offsetAtUtc(1673811000) == -5 * 3600);
    CHECK(ny.localToUtc(testkit::epochByCounting(2023, 1, 15, 14, 30, 0)) == 1673811000);
    // July is daylight time
    CHECK(ny.offsetAtUtc(testkit::epochByCounting(2023, 7, 15, 12, 0, 0)) == -4 * 3600);
    // Phoenix has no DST
    const Timezone& phx = db.zone("America/Phoenix");
    CHECK(phx.offsetAtUtc(testkit::epochByCounting(2023, 1, 15, 12, 0, 0)) == -7 * 3600);
    CHECK(phx.offsetAtUtc(testkit::epochByCounting(2023, 7, 15, 12, 0, 0)) == -7 * 3600);
    CHECK_THROWS_AS(db.zone("Atlantis/Nowhere"), DirectoryError);
}

TEST_CASE("builtin fallback rules agree with the zoneinfo database in 2023") {
    TimezoneDb fallback("/nonexistent_zoneinfo_root");
    const auto& db = TimezoneDb::instance();
    for (const char* name : {"America/New_York", "America/Chicago", "America/Denver",
                             "America/Phoenix", "America/Los_Angeles"}) {
        const Timezone& a = db.zone(name);
        const Timezone& b = fallback.zone(name);
        for (int month = 1; month <= 12; ++month) {
            const int64_t t = testkit::epochByCounting(2023, month, 20, 12, 0, 0);
            CHECK(a.offsetAtUtc(t) == b.offsetAtUtc(t));
        }
    }
}

TEST_CASE("localize: HHMM 1430 at a UTC-5 airport lands on 19:30Z") {
    // JFK -> LAX; dep delay 15, 330 air minutes, taxi 20/10
    const Table t = ingestRaw(
        "2023-01-15,AA,N101AA,12478,12892,1430,1445,15,20,1505,1735,10,1740,1745,5,0,370,360,330,"
        "2475\n");
    REQUIRE(t.rowCount() == 1);
    CHECK(t.timestampAt(t.columnIndex(col::kSchedDep), 0) == 1673811000);
    CHECK(t.timestampAt(t.columnIndex(col::kActualDep), 0) == 1673811000 + 15 * 60);
    // scheduled arrival: 19:30Z + 370 min
    CHECK(t.timestampAt(t.columnIndex(col::kSchedArr), 0) == 1673811000 + 370 * 60);
    // wheels off at 15:05 EST
    CHECK(t.timestampAt(t.columnIndex(col::kWheelsOff), 0) ==
          testkit::epochByCounting(2023, 1, 15, 20, 5, 0));
}

TEST_CASE("localize: overnight arrival rolls to the next day") {
    // departure 23:50 local, scheduled elapsed 80 min -> arrival 01:10 next day
    const Table t = ingestRaw(
        "2023-01-20,UA,N202UA,12478,10800,2350,2350,0,10,0000,0103,7,0110,0110,0,0,80,80,63,301\n");
    REQUIRE(t.rowCount() == 1);
    const int64_t schedDep = t.timestampAt(t.columnIndex(col::kSchedDep), 0);
    const int64_t schedArr = t.timestampAt(t.columnIndex(col::kSchedArr), 0);
    CHECK(schedDep == testkit::epochByCounting(2023, 1, 21, 4, 50, 0));
    CHECK(schedArr - schedDep == 80 * 60);
}

TEST_CASE("localize: HHMM 0000 means midnight on the flight date") {
    const Table t = ingestRaw(
        "2023-01-15,DL,N303DL,12478,10800,0000,0000,0,10,0010,0113,7,0120,0120,0,0,80,80,63,301\n");
    CHECK(t.timestampAt(t.columnIndex(col::kSchedDep), 0) ==
          testkit::epochByCounting(2023, 1, 15, 5, 0, 0));
}

TEST_CASE("localize: unresolvable airport fails") {
    CHECK_THROWS_AS(
        ingestRaw("2023-01-15,AA,N1,99999,12892,1430,1445,15,20,1505,1735,10,1740,1745,5,0,370,360,"
                  "330,2475\n"),
        DirectoryError);
}

TEST_CASE("engineer_features: labels, schedule identity, quarter and weekday") {
    const Table localized = ingestRaw(
        "2023-01-15,AA,N101AA,12478,12892,1430,1450,20,20,1510,1801,10,1740,1811,31,0,370,381,351,"
        "2475\n"
        "2023-01-15,AA,N102AA,12478,12892,1430,1427,-3,20,1447,1728,10,1740,1738,-2,0,370,371,341,"
        "2475\n");
    const AirportDirectory airports = loadTestAirports();
    IngestReport report;
    const Table full = engineerFeatures(localized, airports, &report);
    REQUIRE(full.rowCount() == 2);
    REQUIRE(full.columnCount() == 30);

    // delay labels at the 15-minute threshold
    CHECK(full.numberAt(full.columnIndex(col::kDepDelta), 0) == 20.0);
    CHECK(full.categoryAt(full.columnIndex(col::kDepDelayLabel), 0) == "1");
    CHECK(full.numberAt(full.columnIndex(col::kArrDelta), 0) == 31.0);
    CHECK(full.categoryAt(full.columnIndex(col::kArrDelayLabel), 0) == "1");
    CHECK(full.numberAt(full.columnIndex(col::kDepDelta), 1) == -3.0);
    CHECK(full.categoryAt(full.columnIndex(col::kDepDelayLabel), 1) == "0");
    CHECK(full.categoryAt(full.columnIndex(col::kArrDelayLabel), 1) == "0");

    // schedule identity holds exactly
    for (size_t r = 0; r < full.rowCount(); ++r) {
        const double elapsed = full.numberAt(full.columnIndex(col::kSchedElapsed), r);
        const int64_t dep = full.timestampAt(full.columnIndex(col::kSchedDep), r);
        const int64_t arr = full.timestampAt(full.columnIndex(col::kSchedArr), r);
        CHECK(static_cast<double>(arr - dep) == elapsed * 60.0);
        const double actualElapsed = full.numberAt(full.columnIndex(col::kActualElapsed), r);
        const double parts = full.numberAt(full.columnIndex(col::kTaxiOut), r) +
                             full.numberAt(full.columnIndex(col::kAirTime), r) +
                             full.numberAt(full.columnIndex(col::kTaxiIn), r);
        CHECK(actualElapsed == parts);
    }

    // 2023-01-15 was a Sunday in Q1; lookups resolve
    CHECK(full.categoryAt(full.columnIndex(col::kQuarter), 0) == "1");
    CHECK(full.categoryAt(full.columnIndex(col::kDayOfWeek), 0) == "7");
    CHECK(full.categoryAt(full.columnIndex(col::kOriginIcao), 0) == "KJFK");
    CHECK(full.categoryAt(full.columnIndex(col::kDestCity), 0) == "Los Angeles");
    CHECK(full.categoryAt(full.columnIndex(col::kDestStateName), 0) == "California");
}

TEST_CASE("engineer_features: missing tail number drops the row") {
    const Table localized = ingestRaw(
        "2023-01-15,AA,N101AA,12478,12892,1430,1445,15,20,1505,1735,10,1740,1745,5,0,370,360,330,"
        "2475\n"
        "2023-01-15,AA,,12478,12892,1430,1445,15,20,1505,1735,10,1740,1745,5,0,370,360,330,2475\n");
    const AirportDirectory airports = loadTestAirports();
    IngestReport report;
    const Table full = engineerFeatures(localized, airports, &report);
    CHECK(full.rowCount() == 1);
    CHECK(report.droppedMissingTail == 1);
}

TEST_CASE("engineer_features: cancelled flights keep masked actuals") {
    const Table localized = ingestRaw(
        "2023-01-15,AA,N101AA,12478,12892,1430,,,,,,,1740,,,1,370,,,2475\n");
    const AirportDirectory airports = loadTestAirports();
    IngestReport report;
    const Table full = engineerFeatures(localized, airports, &report);
    REQUIRE(full.rowCount() == 1);
    CHECK(report.cancelledKept == 1);
    CHECK(full.isMissing(full.columnIndex(col::kActualDep), 0));
    CHECK(full.isMissing(full.columnIndex(col::kActualArr), 0));
    CHECK(full.isMissing(full.columnIndex(col::kArrDelta), 0));
    CHECK(full.isMissing(full.columnIndex(col::kArrDelayLabel), 0));
    CHECK_FALSE(full.isMissing(full.columnIndex(col::kSchedDep), 0));
    CHECK_FALSE(full.isMissing(full.columnIndex(col::kSchedArr), 0));
}

TEST_CASE("engineer_features: inconsistent durations drop the row") {
    const Table localized = ingestRaw(
        "2023-01-15,AA,N101AA,12478,12892,1430,1445,15,20,1505,1735,10,1740,1745,5,0,370,360,100,"
        "2475\n");  // air time of 100 cannot match elapsed 360 with taxi 20+10
    const AirportDirectory airports = loadTestAirports();
    IngestReport report;
    const Table full = engineerFeatures(localized, airports, &report);
    CHECK(full.rowCount() == 0);
    CHECK(report.droppedInconsistent == 1);
}

TEST_CASE("build_frame: column sets match the variant definitions exactly") {
    const Table localized = ingestRaw(
        "2023-01-15,AA,N101AA,12478,12892,1430,1445,15,20,1505,1735,10,1740,1745,5,0,370,360,330,"
        "2475\n");
    const AirportDirectory airports = loadTestAirports();
    const Table full = engineerFeatures(localized, airports);

    const Table ts = buildFrame(full, FrameVariant::UtcTs);
    const std::vector<std::string> tsExpected = {
        col::kCarrier,  col::kTailNumber, col::kOriginId, col::kDestId,   col::kSchedDep,
        col::kActualDep, col::kWheelsOff, col::kWheelsOn, col::kSchedArr, col::kActualArr};
    REQUIRE(ts.columnCount() == 10);
    for (size_t c = 0; c < tsExpected.size(); ++c) CHECK(ts.schemaAt(c).name == tsExpected[c]);
    for (size_t c = 0; c < ts.columnCount(); ++c) {
        const auto kind = ts.schemaAt(c).kind;
        CHECK((c < 4 ? kind == ColumnKind::Categorical : kind == ColumnKind::Datetime));
    }

    const Table d = buildFrame(full, FrameVariant::UtcD);
    const std::vector<std::string> dExpected = {
        col::kCarrier, col::kTailNumber, col::kOriginId, col::kDestId,        col::kSchedDep,
        col::kDepDelta, col::kTaxiOut,   col::kSchedElapsed, col::kActualElapsed, col::kAirTime};
    REQUIRE(d.columnCount() == 10);
    for (size_t c = 0; c < dExpected.size(); ++c) CHECK(d.schemaAt(c).name == dExpected[c]);

    const Table d2 = buildFrame(full, FrameVariant::UtcD2);
    const std::vector<std::string> d2Expected = {
        col::kCarrier,  col::kTailNumber, col::kOriginId, col::kDestId,  col::kSchedDep,
        col::kActualDep, col::kDepDelta,  col::kTaxiOut,  col::kTaxiIn,  col::kArrDelta,
        col::kSchedElapsed, col::kActualElapsed, col::kAirTime};
    REQUIRE(d2.columnCount() == 13);
    for (size_t c = 0; c < d2Expected.size(); ++c) CHECK(d2.schemaAt(c).name == d2Expected[c]);

    // projection is idempotent
    CHECK(buildFrame(d2, FrameVariant::UtcD2).contentEquals(d2));
}

TEST_CASE("route directory: directed pairs, counts, conflicts") {
    const Table localized = ingestRaw(
        "2023-01-15,AA,N101AA,12478,12892,1430,1445,15,20,1505,1735,10,1740,1745,5,0,370,360,330,"
        "2475\n"
        "2023-01-16,AA,N102AA,12892,12478,0800,0810,10,15,0825,1556,9,1605,1605,0,0,305,295,271,"
        "2475\n"
        "2023-01-17,AA,N103AA,12478,12892,0900,0905,5,18,0923,1155,9,1210,1204,-6,0,370,359,332,"
        "2475\n");
    const AirportDirectory airports = loadTestAirports();
    const Table full = engineerFeatures(localized, airports);
    const RouteDirectory routes = buildRouteDirectory(full);
    CHECK(routes.size() == 2);  // JFK->LAX and LAX->JFK are distinct directed pairs
    CHECK(routes.contains("12478", "12892"));
    CHECK(routes.contains("12892", "12478"));
    CHECK(routes.distance("12478", "12892") == 2475.0);
    CHECK_FALSE(routes.contains("12478", "10800"));

    RouteDirectory conflict;
    conflict.add("a", "b", 100.0);
    conflict.add("a", "b", 100.5);  // within the 1-mile tolerance
    CHECK_THROWS_AS(conflict.add("a", "b", 150.0), DirectoryError);

    const std::string dir = tempDir();
    routes.writeCsv(dir + "/routes.csv");
    const RouteDirectory loaded = RouteDirectory::loadCsv(dir + "/routes.csv");
    CHECK(loaded.size() == routes.size());
    CHECK(loaded.distance("12892", "12478") == 2475.0);
}

TEST_CASE("raw mapping files round trip and drive header resolution") {
    const std::string dir = tempDir();
    RawMapping mapping = RawMapping::defaults();
    mapping.writeJson(dir + "/mapping.json");
    const RawMapping loaded = RawMapping::loadJson(dir + "/mapping.json");
    CHECK(loaded.rawToCanonical.at("FlightDate") == "flight_date");
    CHECK(loaded.rawToCanonical.size() == mapping.rawToCanonical.size());

    writeFile(dir + "/missing.csv", "FlightDate,Reporting_Airline\n2023-01-01,AA\n");
    CHECK_THROWS_WITH_AS(readRawFlights(dir + "/missing.csv"), doctest::Contains("tail_number"),
                         SchemaError);
}
