#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "synthflight/errors.hpp"

namespace synthflight {

// IANA timezone with enough coverage for flight-schedule work: TZif files
// from the system zoneinfo database when present, otherwise a built-in set of
// US zones evaluated from their POSIX rule strings (post-2007 rules only).
class Timezone {
public:
    const std::string& name() const { return name_; }

    // Offset (seconds east of UTC) in effect at a UTC instant.
    int32_t offsetAtUtc(int64_t epochSeconds) const;

    // Wall-clock seconds (civil time encoded as "epoch seconds as if UTC")
    // to the UTC instant. Ambiguous local times resolve to the earliest
    // instant; nonexistent (spring-forward) times use the post-gap offset.
    int64_t localToUtc(int64_t localWallSeconds) const;

    int64_t utcToLocal(int64_t epochSeconds) const {
        return epochSeconds + offsetAtUtc(epochSeconds);
    }

private:
    friend class TimezoneDb;

    struct ZoneType {
        int32_t utoff = 0;
        bool isdst = false;
    };

    // "M3.2.0/2" style rule date: d-th weekday (0=Sunday) in week w of month m.
    struct RuleDate {
        int month = 0, week = 0, weekday = 0;
        int32_t timeOfDay = 7200;
    };

    struct PosixRule {
        bool valid = false;
        bool hasDst = false;
        int32_t stdOffset = 0;
        int32_t dstOffset = 0;
        RuleDate dstStart, dstEnd;
    };

    int32_t footerOffsetAtUtc(int64_t epochSeconds) const;
    static int64_t ruleInstantUtc(const RuleDate& rule, int year, int32_t prevailingOffset);
    static PosixRule parsePosix(const std::string& tz);

    std::string name_;
    std::vector<int64_t> transitions_;
    std::vector<uint8_t> typeIndex_;
    std::vector<ZoneType> types_;
    PosixRule footer_;
};

class TimezoneDb {
public:
    static TimezoneDb& instance();

    const Timezone& zone(const std::string& ianaName) const;  // throws DirectoryError
    bool isKnown(const std::string& ianaName) const;

    // Overridable for tests; defaults to /usr/share/zoneinfo.
    explicit TimezoneDb(std::string zoneinfoRoot = "/usr/share/zoneinfo");

private:
    std::shared_ptr<Timezone> load(const std::string& name) const;

    std::string root_;
    mutable std::vector<std::shared_ptr<Timezone>> cache_;
};

}  // namespace synthflight
