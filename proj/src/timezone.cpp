#include "synthflight/timezone.hpp"

#include <algorithm>
#include <cctype>
#include <cstring>
#include <fstream>
#include <mutex>
#include <unordered_map>

#include "synthflight/table_io.hpp"

namespace synthflight {

namespace {

std::mutex gCacheMutex;
std::unordered_map<std::string, std::shared_ptr<Timezone>>& cacheMap() {
    static std::unordered_map<std::string, std::shared_ptr<Timezone>> map;
    return map;
}

uint32_t readU32(const unsigned char* p) {
    return (uint32_t(p[0]) << 24) | (uint32_t(p[1]) << 16) | (uint32_t(p[2]) << 8) | uint32_t(p[3]);
}

int64_t readI64(const unsigned char* p) {
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | p[i];
    return static_cast<int64_t>(v);
}

int32_t readI32(const unsigned char* p) { return static_cast<int32_t>(readU32(p)); }

struct TzifCounts {
    uint32_t isutcnt, isstdcnt, leapcnt, timecnt, typecnt, charcnt;
};

// Size of a TZif data block given its counts and time width.
size_t blockSize(const TzifCounts& c, size_t timeSize) {
    return c.timecnt * timeSize + c.timecnt + c.typecnt * 6 + c.charcnt + c.leapcnt * (timeSize + 4) +
           c.isstdcnt + c.isutcnt;
}

bool validIanaName(const std::string& name) {
    if (name.empty() || name[0] == '/' || name.find("..") != std::string::npos) return false;
    for (char c : name) {
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '/' || c == '_' || c == '-' ||
              c == '+')) {
            return false;
        }
    }
    return true;
}

// Built-in fallback rules for environments without a zoneinfo database.
// Post-2007 US rules only.
const std::unordered_map<std::string, std::string>& builtinRules() {
    static const std::unordered_map<std::string, std::string> rules = {
        {"UTC", "UTC0"},
        {"Etc/UTC", "UTC0"},
        {"America/New_York", "EST5EDT,M3.2.0,M11.1.0"},
        {"America/Chicago", "CST6CDT,M3.2.0,M11.1.0"},
        {"America/Denver", "MST7MDT,M3.2.0,M11.1.0"},
        {"America/Phoenix", "MST7"},
        {"America/Los_Angeles", "PST8PDT,M3.2.0,M11.1.0"},
        {"America/Anchorage", "AKST9AKDT,M3.2.0,M11.1.0"},
        {"Pacific/Honolulu", "HST10"},
        {"America/Detroit", "EST5EDT,M3.2.0,M11.1.0"},
        {"America/Indiana/Indianapolis", "EST5EDT,M3.2.0,M11.1.0"},
    };
    return rules;
}

}  // namespace

int32_t Timezone::offsetAtUtc(int64_t t) const {
    if (transitions_.empty() || (footer_.valid && !transitions_.empty() && t >= transitions_.back())) {
        if (footer_.valid) return footerOffsetAtUtc(t);
    }
    if (transitions_.empty()) {
        return types_.empty() ? 0 : types_[0].utoff;
    }
    if (t < transitions_.front()) {
        // first non-DST type, per TZif convention
        for (const auto& type : types_) {
            if (!type.isdst) return type.utoff;
        }
        return types_[0].utoff;
    }
    auto it = std::upper_bound(transitions_.begin(), transitions_.end(), t);
    const size_t idx = static_cast<size_t>(it - transitions_.begin()) - 1;
    return types_[typeIndex_[idx]].utoff;
}

int32_t Timezone::footerOffsetAtUtc(int64_t t) const {
    if (!footer_.hasDst) return footer_.stdOffset;
    int year, month, day;
    civilFromDays((t >= 0 ? t : t - 86399) / 86400, year, month, day);
    const int64_t start = ruleInstantUtc(footer_.dstStart, year, footer_.stdOffset);
    const int64_t end = ruleInstantUtc(footer_.dstEnd, year, footer_.dstOffset);
    bool inDst;
    if (start <= end) {
        inDst = t >= start && t < end;  // northern hemisphere
    } else {
        inDst = t >= start || t < end;
    }
    return inDst ? footer_.dstOffset : footer_.stdOffset;
}

int64_t Timezone::ruleInstantUtc(const RuleDate& rule, int year, int32_t prevailingOffset) {
    // d-th `weekday` of month, week 5 meaning last occurrence
    static const int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    const bool leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
    const int monthDays = (rule.month == 2 && leap) ? 29 : kDays[rule.month - 1];
    const int64_t firstOfMonth = daysFromCivil(year, rule.month, 1);
    // daysFromCivil(1970,1,1)=0 was a Thursday; weekday 0=Sunday
    const int firstDow = static_cast<int>(((firstOfMonth + 4) % 7 + 7) % 7);
    int day = 1 + ((rule.weekday - firstDow) % 7 + 7) % 7 + (rule.week - 1) * 7;
    while (day > monthDays) day -= 7;
    const int64_t localSeconds = (firstOfMonth + day - 1) * 86400 + rule.timeOfDay;
    return localSeconds - prevailingOffset;
}

int64_t Timezone::localToUtc(int64_t localWallSeconds) const {
    std::vector<int32_t> offsets;
    for (const auto& type : types_) offsets.push_back(type.utoff);
    if (footer_.valid) {
        offsets.push_back(footer_.stdOffset);
        if (footer_.hasDst) offsets.push_back(footer_.dstOffset);
    }
    std::sort(offsets.begin(), offsets.end());
    offsets.erase(std::unique(offsets.begin(), offsets.end()), offsets.end());

    int64_t best = 0;
    bool found = false;
    for (int32_t offset : offsets) {
        const int64_t candidate = localWallSeconds - offset;
        if (offsetAtUtc(candidate) == offset) {
            if (!found || candidate < best) best = candidate;
            found = true;
        }
    }
    if (found) return best;
    // Nonexistent local time (spring-forward gap): shift by the post-gap offset.
    const int64_t approx = localWallSeconds - offsetAtUtc(localWallSeconds);
    return localWallSeconds - offsetAtUtc(approx);
}

Timezone::PosixRule Timezone::parsePosix(const std::string& tz) {
    PosixRule rule;
    size_t i = 0;
    const size_t n = tz.size();
    auto skipName = [&] {
        if (i < n && tz[i] == '<') {
            while (i < n && tz[i] != '>') ++i;
            if (i < n) ++i;
        } else {
            while (i < n && (std::isalpha(static_cast<unsigned char>(tz[i])))) ++i;
        }
    };
    auto parseOffset = [&](bool& ok) -> int32_t {
        ok = false;
        int sign = 1;
        if (i < n && (tz[i] == '+' || tz[i] == '-')) {
            if (tz[i] == '-') sign = -1;
            ++i;
        }
        if (i >= n || !std::isdigit(static_cast<unsigned char>(tz[i]))) return 0;
        int h = 0, m = 0, s = 0;
        while (i < n && std::isdigit(static_cast<unsigned char>(tz[i]))) h = h * 10 + (tz[i++] - '0');
        if (i < n && tz[i] == ':') {
            ++i;
            while (i < n && std::isdigit(static_cast<unsigned char>(tz[i]))) m = m * 10 + (tz[i++] - '0');
            if (i < n && tz[i] == ':') {
                ++i;
                while (i < n && std::isdigit(static_cast<unsigned char>(tz[i]))) s = s * 10 + (tz[i++] - '0');
            }
        }
        ok = true;
        // POSIX offsets are west-positive; utoff is east-positive
        return -sign * (h * 3600 + m * 60 + s);
    };
    auto parseRuleDate = [&](RuleDate& out) -> bool {
        if (i >= n || tz[i] != 'M') return false;  // Julian forms not needed here
        ++i;
        int fields[3] = {0, 0, 0};
        for (int f = 0; f < 3; ++f) {
            if (i >= n || !std::isdigit(static_cast<unsigned char>(tz[i]))) return false;
            while (i < n && std::isdigit(static_cast<unsigned char>(tz[i]))) {
                fields[f] = fields[f] * 10 + (tz[i++] - '0');
            }
            if (f < 2) {
                if (i >= n || tz[i] != '.') return false;
                ++i;
            }
        }
        out.month = fields[0];
        out.week = fields[1];
        out.weekday = fields[2];
        out.timeOfDay = 7200;
        if (i < n && tz[i] == '/') {
            ++i;
            bool ok = false;
            out.timeOfDay = -parseOffset(ok);  // rule time is east-positive wall time
            if (!ok) return false;
        }
        return true;
    };

    skipName();
    bool ok = false;
    rule.stdOffset = parseOffset(ok);
    if (!ok) return rule;
    rule.valid = true;
    if (i >= n) return rule;

    skipName();
    if (i < n && tz[i] != ',') {
        bool dstOk = false;
        rule.dstOffset = parseOffset(dstOk);
        if (!dstOk) rule.dstOffset = rule.stdOffset + 3600;
    } else {
        rule.dstOffset = rule.stdOffset + 3600;
    }
    if (i < n && tz[i] == ',') {
        ++i;
        if (!parseRuleDate(rule.dstStart)) {
            rule.valid = false;
            return rule;
        }
        if (i < n && tz[i] == ',') {
            ++i;
            if (!parseRuleDate(rule.dstEnd)) {
                rule.valid = false;
                return rule;
            }
        }
        rule.hasDst = true;
    }
    return rule;
}

TimezoneDb::TimezoneDb(std::string zoneinfoRoot) : root_(std::move(zoneinfoRoot)) {}

TimezoneDb& TimezoneDb::instance() {
    static TimezoneDb db;
    return db;
}

bool TimezoneDb::isKnown(const std::string& ianaName) const {
    try {
        zone(ianaName);
        return true;
    } catch (const DirectoryError&) {
        return false;
    }
}

const Timezone& TimezoneDb::zone(const std::string& ianaName) const {
    {
        std::lock_guard<std::mutex> lock(gCacheMutex);
        auto it = cacheMap().find(ianaName);
        if (it != cacheMap().end()) {
            if (!it->second) throw DirectoryError("unknown timezone: " + ianaName);
            return *it->second;
        }
    }
    std::shared_ptr<Timezone> loaded;
    try {
        loaded = load(ianaName);
    } catch (const DirectoryError&) {
        loaded = nullptr;
    }
    std::lock_guard<std::mutex> lock(gCacheMutex);
    auto [it, inserted] = cacheMap().emplace(ianaName, loaded);
    if (!it->second) throw DirectoryError("unknown timezone: " + ianaName);
    return *it->second;
}

std::shared_ptr<Timezone> TimezoneDb::load(const std::string& name) const {
    if (!validIanaName(name)) throw DirectoryError("unknown timezone: " + name);

    auto zone = std::make_shared<Timezone>();
    zone->name_ = name;

    std::ifstream in(root_ + "/" + name, std::ios::binary);
    if (!in) {
        auto it = builtinRules().find(name);
        if (it == builtinRules().end()) throw DirectoryError("unknown timezone: " + name);
        zone->footer_ = Timezone::parsePosix(it->second);
        if (!zone->footer_.valid) throw DirectoryError("unknown timezone: " + name);
        return zone;
    }
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const auto* p = reinterpret_cast<const unsigned char*>(content.data());
    const size_t size = content.size();
    if (size < 44 || std::memcmp(p, "TZif", 4) != 0) {
        throw DirectoryError("invalid TZif file for timezone: " + name);
    }
    const char version = static_cast<char>(p[4]);

    auto parseCounts = [&](size_t at) {
        TzifCounts c{};
        c.isutcnt = readU32(p + at);
        c.isstdcnt = readU32(p + at + 4);
        c.leapcnt = readU32(p + at + 8);
        c.timecnt = readU32(p + at + 12);
        c.typecnt = readU32(p + at + 16);
        c.charcnt = readU32(p + at + 20);
        return c;
    };

    TzifCounts counts = parseCounts(20);
    size_t offset = 44;
    size_t timeSize = 4;
    if (version >= '2') {
        offset += blockSize(counts, 4);
        if (offset + 44 > size) throw DirectoryError("truncated TZif file: " + name);
        counts = parseCounts(offset + 20);
        offset += 44;
        timeSize = 8;
    }
    if (offset + blockSize(counts, timeSize) > size) {
        throw DirectoryError("truncated TZif file: " + name);
    }

    const unsigned char* cursor = p + offset;
    zone->transitions_.resize(counts.timecnt);
    for (uint32_t i = 0; i < counts.timecnt; ++i) {
        zone->transitions_[i] = timeSize == 8 ? readI64(cursor) : readI32(cursor);
        cursor += timeSize;
    }
    zone->typeIndex_.assign(cursor, cursor + counts.timecnt);
    cursor += counts.timecnt;
    zone->types_.resize(counts.typecnt);
    for (uint32_t i = 0; i < counts.typecnt; ++i) {
        zone->types_[i].utoff = readI32(cursor);
        zone->types_[i].isdst = cursor[4] != 0;
        cursor += 6;
    }
    cursor += counts.charcnt + counts.leapcnt * (timeSize + 4) + counts.isstdcnt + counts.isutcnt;

    if (version >= '2') {
        const char* rest = content.data() + (cursor - p);
        const char* end = content.data() + size;
        if (rest < end && *rest == '\n') {
            const char* close = static_cast<const char*>(memchr(rest + 1, '\n', end - rest - 1));
            if (close && close > rest + 1) {
                zone->footer_ = Timezone::parsePosix(std::string(rest + 1, close));
            }
        }
    }
    if (zone->types_.empty() && !zone->footer_.valid) {
        throw DirectoryError("empty TZif file: " + name);
    }
    return zone;
}

}  // namespace synthflight
