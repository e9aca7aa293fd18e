#include "synthflight/reconstruct.hpp"

#include <cmath>

#include "synthflight/table_io.hpp"
#include "synthflight/timezone.hpp"

namespace synthflight {

namespace {

// A cell-level optional<int64> view over datetimes and minute columns.
struct MaybeValue {
    bool present = false;
    int64_t value = 0;
};

// Generated datetimes snap to whole minutes (the raw feed's HHMM
// granularity), which keeps every duration identity exact.
MaybeValue maybeTimestamp(const Table& t, int col, size_t row) {
    if (col < 0 || t.isMissing(static_cast<size_t>(col), row)) return {};
    const int64_t seconds = t.timestampAt(static_cast<size_t>(col), row);
    return {true, std::llround(static_cast<double>(seconds) / 60.0) * 60};
}

MaybeValue maybeMinutes(const Table& t, int col, size_t row) {
    if (col < 0 || t.isMissing(static_cast<size_t>(col), row)) return {};
    return {true, static_cast<int64_t>(std::llround(t.numberAt(static_cast<size_t>(col), row)))};
}

void setMaybeTimestamp(Table& t, size_t col, size_t row, const MaybeValue& v) {
    if (v.present) {
        t.setTimestamp(col, row, v.value);
    } else {
        t.setMissing(col, row);
    }
}

void setMaybeMinutes(Table& t, size_t col, size_t row, const MaybeValue& v) {
    if (v.present) {
        t.setNumber(col, row, static_cast<double>(v.value));
    } else {
        t.setMissing(col, row);
    }
}

void setDelayLabel(Table& t, size_t col, size_t row, const MaybeValue& deltaMin) {
    if (deltaMin.present) {
        t.setCategory(col, row,
                      static_cast<double>(deltaMin.value) >= kDelayThresholdMin ? "1" : "0");
    } else {
        t.setMissing(col, row);
    }
}

MaybeValue sum(const MaybeValue& a, const MaybeValue& b, int64_t scaleB) {
    if (!a.present || !b.present) return {};
    return {true, a.value + b.value * scaleB};
}

MaybeValue minutesBetween(const MaybeValue& from, const MaybeValue& to) {
    if (!from.present || !to.present) return {};
    return {true, (to.value - from.value) / 60};
}

}  // namespace

nlohmann::json CleaningReport::toJson() const {
    return {{"input_rows", inputRows},
            {"route_rejected", routeRejected},
            {"negative_duration", negativeDuration},
            {"elapsed_inconsistent", elapsedInconsistent},
            {"speed_implausible", speedImplausible},
            {"output_rows", outputRows}};
}

Table reconstruct(const Table& frame, FrameVariant variant, const AirportDirectory& airports,
                  const RouteDirectory& routes) {
    const auto& expected = frameColumns(variant);
    if (frame.columnCount() != expected.size()) {
        throw SchemaError("reconstruct: frame has " + std::to_string(frame.columnCount()) +
                          " columns, variant " + frameVariantName(variant) + " needs " +
                          std::to_string(expected.size()));
    }
    for (size_t c = 0; c < expected.size(); ++c) {
        if (frame.schemaAt(c).name != expected[c]) {
            throw SchemaError("reconstruct: column '" + frame.schemaAt(c).name +
                              "' does not match variant column '" + expected[c] + "'");
        }
    }

    auto schema = fullFlightSchema();
    for (auto& colSchema : schema) {
        if (colSchema.name == col::kDistance) colSchema.nullable = true;  // masked => rejected later
    }
    const size_t n = frame.rowCount();
    Table out(schema, n);

    auto in = [&](const char* name) { return frame.findColumn(name); };
    const int fSchedDep = in(col::kSchedDep);
    const int fActualDep = in(col::kActualDep);
    const int fWheelsOff = in(col::kWheelsOff);
    const int fWheelsOn = in(col::kWheelsOn);
    const int fSchedArr = in(col::kSchedArr);
    const int fActualArr = in(col::kActualArr);
    const int fDepDelta = in(col::kDepDelta);
    const int fArrDelta = in(col::kArrDelta);
    const int fTaxiOut = in(col::kTaxiOut);
    const int fTaxiIn = in(col::kTaxiIn);
    const int fSchedElapsed = in(col::kSchedElapsed);
    const int fActualElapsed = in(col::kActualElapsed);
    const int fAirTime = in(col::kAirTime);

    auto o = [&](const char* name) { return out.columnIndex(name); };
    const auto& db = TimezoneDb::instance();

    for (size_t r = 0; r < n; ++r) {
        const std::string& originId = frame.categoryAt(frame.columnIndex(col::kOriginId), r);
        const std::string& destId = frame.categoryAt(frame.columnIndex(col::kDestId), r);
        const AirportInfo& origin = airports.resolve(originId);
        const AirportInfo& dest = airports.resolve(destId);

        out.setCategory(o(col::kCarrier), r, frame.categoryAt(frame.columnIndex(col::kCarrier), r));
        out.setCategory(o(col::kTailNumber), r,
                        frame.categoryAt(frame.columnIndex(col::kTailNumber), r));
        out.setCategory(o(col::kOriginId), r, originId);
        out.setCategory(o(col::kDestId), r, destId);
        out.setCategory(o(col::kOriginIcao), r, origin.icao);
        out.setCategory(o(col::kOriginCity), r, origin.city);
        out.setCategory(o(col::kOriginStateCode), r, origin.stateCode);
        out.setCategory(o(col::kOriginStateName), r, origin.stateName);
        out.setCategory(o(col::kDestIcao), r, dest.icao);
        out.setCategory(o(col::kDestCity), r, dest.city);
        out.setCategory(o(col::kDestStateCode), r, dest.stateCode);
        out.setCategory(o(col::kDestStateName), r, dest.stateName);

        // identity fields present in every variant
        const MaybeValue schedDep = maybeTimestamp(frame, fSchedDep, r);
        if (!schedDep.present) {
            throw SchemaError("reconstruct: scheduled departure is missing at row " +
                              std::to_string(r));
        }
        out.setTimestamp(o(col::kSchedDep), r, schedDep.value);

        MaybeValue schedArr, actualDep, actualArr, wheelsOff, wheelsOn;
        MaybeValue depDelta, arrDelta, taxiOut, taxiIn, schedElapsed, actualElapsed, airTime;

        switch (variant) {
            case FrameVariant::UtcTs: {
                actualDep = maybeTimestamp(frame, fActualDep, r);
                wheelsOff = maybeTimestamp(frame, fWheelsOff, r);
                wheelsOn = maybeTimestamp(frame, fWheelsOn, r);
                schedArr = maybeTimestamp(frame, fSchedArr, r);
                actualArr = maybeTimestamp(frame, fActualArr, r);
                schedElapsed = minutesBetween(schedDep, schedArr);
                depDelta = minutesBetween(schedDep, actualDep);
                arrDelta = minutesBetween(schedArr, actualArr);
                taxiOut = minutesBetween(actualDep, wheelsOff);
                taxiIn = minutesBetween(wheelsOn, actualArr);
                airTime = minutesBetween(wheelsOff, wheelsOn);
                actualElapsed = minutesBetween(actualDep, actualArr);
                break;
            }
            case FrameVariant::UtcD: {
                depDelta = maybeMinutes(frame, fDepDelta, r);
                taxiOut = maybeMinutes(frame, fTaxiOut, r);
                schedElapsed = maybeMinutes(frame, fSchedElapsed, r);
                actualElapsed = maybeMinutes(frame, fActualElapsed, r);
                airTime = maybeMinutes(frame, fAirTime, r);
                actualDep = sum(schedDep, depDelta, 60);
                schedArr = sum(schedDep, schedElapsed, 60);
                if (actualElapsed.present && taxiOut.present && airTime.present) {
                    taxiIn = {true, actualElapsed.value - taxiOut.value - airTime.value};
                }
                actualArr = sum(actualDep, actualElapsed, 60);
                arrDelta = minutesBetween(schedArr, actualArr);
                wheelsOff = sum(actualDep, taxiOut, 60);
                wheelsOn = sum(actualArr, taxiIn, -60);
                break;
            }
            case FrameVariant::UtcD2: {
                actualDep = maybeTimestamp(frame, fActualDep, r);
                depDelta = maybeMinutes(frame, fDepDelta, r);
                taxiOut = maybeMinutes(frame, fTaxiOut, r);
                taxiIn = maybeMinutes(frame, fTaxiIn, r);
                arrDelta = maybeMinutes(frame, fArrDelta, r);
                schedElapsed = maybeMinutes(frame, fSchedElapsed, r);
                actualElapsed = maybeMinutes(frame, fActualElapsed, r);
                airTime = maybeMinutes(frame, fAirTime, r);
                schedArr = sum(schedDep, schedElapsed, 60);
                actualArr = sum(schedArr, arrDelta, 60);
                wheelsOff = sum(actualDep, taxiOut, 60);
                wheelsOn = sum(actualArr, taxiIn, -60);
                break;
            }
        }

        if (!schedArr.present) {
            throw SchemaError("reconstruct: scheduled arrival is underivable at row " +
                              std::to_string(r));
        }
        setMaybeTimestamp(out, o(col::kSchedArr), r, schedArr);
        setMaybeTimestamp(out, o(col::kActualDep), r, actualDep);
        setMaybeTimestamp(out, o(col::kActualArr), r, actualArr);
        setMaybeTimestamp(out, o(col::kWheelsOff), r, wheelsOff);
        setMaybeTimestamp(out, o(col::kWheelsOn), r, wheelsOn);
        setMaybeMinutes(out, o(col::kDepDelta), r, depDelta);
        setMaybeMinutes(out, o(col::kArrDelta), r, arrDelta);
        setMaybeMinutes(out, o(col::kTaxiOut), r, taxiOut);
        setMaybeMinutes(out, o(col::kTaxiIn), r, taxiIn);
        setMaybeMinutes(out, o(col::kSchedElapsed), r, schedElapsed);
        setMaybeMinutes(out, o(col::kActualElapsed), r, actualElapsed);
        setMaybeMinutes(out, o(col::kAirTime), r, airTime);
        setDelayLabel(out, o(col::kDepDelayLabel), r, depDelta);
        setDelayLabel(out, o(col::kArrDelayLabel), r, arrDelta);

        const Timezone& originTz = db.zone(origin.tzName);
        const int64_t local = originTz.utcToLocal(schedDep.value);
        int64_t days = local / 86400;
        if (local % 86400 < 0) days -= 1;
        int year, month, day;
        civilFromDays(days, year, month, day);
        out.setCategory(o(col::kQuarter), r, std::to_string((month - 1) / 3 + 1));
        out.setCategory(o(col::kDayOfWeek), r,
                        std::to_string(static_cast<int>(((days + 3) % 7 + 7) % 7) + 1));

        if (routes.contains(originId, destId)) {
            out.setNumber(o(col::kDistance), r, routes.distance(originId, destId));
        } else {
            out.setMissing(o(col::kDistance), r);
        }
    }
    out.validate();
    return out;
}

namespace {

const char* evaluateRow(const Table& t, size_t r, const RouteDirectory& routes,
                        const FilterConfig& filters) {
    const std::string& origin = t.categoryAt(t.columnIndex(col::kOriginId), r);
    const std::string& dest = t.categoryAt(t.columnIndex(col::kDestId), r);
    if (!routes.contains(origin, dest)) return "route";

    auto minutes = [&](const char* name) -> MaybeValue {
        const size_t c = t.columnIndex(name);
        if (t.isMissing(c, r)) return {};
        return {true, static_cast<int64_t>(std::llround(t.numberAt(c, r)))};
    };
    const MaybeValue taxiOut = minutes(col::kTaxiOut);
    const MaybeValue taxiIn = minutes(col::kTaxiIn);
    const MaybeValue airTime = minutes(col::kAirTime);
    const MaybeValue elapsed = minutes(col::kActualElapsed);

    if (filters.nonNegativeDurations) {
        for (const MaybeValue* v : {&taxiOut, &taxiIn, &airTime, &elapsed}) {
            if (v->present && v->value < 0) return "negative_duration";
        }
        const size_t c = t.columnIndex(col::kSchedElapsed);
        if (!t.isMissing(c, r) && t.numberAt(c, r) < 0) return "negative_duration";
    }
    if (filters.elapsedConsistency && elapsed.present && taxiOut.present && taxiIn.present &&
        airTime.present) {
        const double gap = std::abs(static_cast<double>(elapsed.value) -
                                    static_cast<double>(taxiOut.value + airTime.value + taxiIn.value));
        if (gap > filters.elapsedToleranceMin) return "elapsed_inconsistent";
    }
    if (filters.speedPlausibility && airTime.present) {
        const size_t c = t.columnIndex(col::kDistance);
        if (!t.isMissing(c, r)) {
            const double distance = t.numberAt(c, r);
            const double hours = static_cast<double>(airTime.value) / 60.0;
            const double speed = hours > 0.0 ? distance / hours
                                             : std::numeric_limits<double>::infinity();
            if (speed < filters.speedMinMph || speed > filters.speedMaxMph) {
                return "speed_implausible";
            }
        }
    }
    return nullptr;
}

}  // namespace

CleaningResult rejectInvalid(const Table& reconstructed, const RouteDirectory& routes,
                             const FilterConfig& filters) {
    CleaningResult result;
    result.report.inputRows = reconstructed.rowCount();

    std::vector<uint8_t> keep(reconstructed.rowCount(), 1);
    std::vector<const char*> reasons(reconstructed.rowCount(), nullptr);
    for (size_t r = 0; r < reconstructed.rowCount(); ++r) {
        const char* reason = evaluateRow(reconstructed, r, routes, filters);
        if (!reason) continue;
        keep[r] = 0;
        reasons[r] = reason;
        if (std::string(reason) == "route") result.report.routeRejected++;
        else if (std::string(reason) == "negative_duration") result.report.negativeDuration++;
        else if (std::string(reason) == "elapsed_inconsistent") result.report.elapsedInconsistent++;
        else result.report.speedImplausible++;
    }

    result.cleaned = reconstructed.filterRows(keep);
    result.report.outputRows = result.cleaned.rowCount();

    std::vector<uint8_t> dropped(keep.size());
    for (size_t r = 0; r < keep.size(); ++r) dropped[r] = keep[r] ? 0 : 1;
    Table rejectedRows = reconstructed.filterRows(dropped);
    Column reasonColumn;
    reasonColumn.missing.assign(rejectedRows.rowCount(), 0);
    reasonColumn.categories.codes.resize(rejectedRows.rowCount());
    size_t w = 0;
    for (size_t r = 0; r < keep.size(); ++r) {
        if (keep[r]) continue;
        reasonColumn.categories.codes[w++] = reasonColumn.categories.intern(reasons[r]);
    }
    rejectedRows.insertColumn(0, {"rejection_reason", ColumnKind::Categorical, "", false},
                              std::move(reasonColumn));
    result.rejected = std::move(rejectedRows);

    if (!result.report.balances()) {
        throw NumericError("cleaning report does not balance");
    }
    return result;
}

}  // namespace synthflight
