#pragma once

// Shared test fixtures: deterministic random mixed-type tables and an
// independent calendar oracle (plain day-counting loop).

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "synthflight/table.hpp"

namespace testkit {

inline bool leapYear(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

// Epoch seconds by explicit year/month day counting; independent of the
// library's civil-date arithmetic.
inline int64_t epochByCounting(int y, int mo, int d, int h, int mi, int s) {
    static const int kMonthDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    int64_t days = 0;
    for (int year = 1970; year < y; ++year) days += leapYear(year) ? 366 : 365;
    for (int m = 1; m < mo; ++m) days += (m == 2 && leapYear(y)) ? 29 : kMonthDays[m - 1];
    days += d - 1;
    return days * 86400 + h * 3600 + mi * 60 + s;
}

// Random mixed-type table with nullable columns and missing cells.
inline synthflight::Table randomTable(uint64_t seed, size_t maxRows = 500) {
    using namespace synthflight;
    std::mt19937_64 rng(seed);
    auto randInt = [&](int lo, int hi) {
        return lo + static_cast<int>(rng() % static_cast<uint64_t>(hi - lo + 1));
    };

    const size_t cols = static_cast<size_t>(randInt(2, 7));
    const size_t rows = static_cast<size_t>(randInt(2, static_cast<int>(maxRows)));

    std::vector<ColumnSchema> schema;
    for (size_t c = 0; c < cols; ++c) {
        ColumnSchema s;
        s.name = "col_" + std::to_string(c);
        switch (randInt(0, 3)) {
            case 0: s.kind = ColumnKind::Categorical; break;
            case 1: s.kind = ColumnKind::Numeric; break;
            case 2: s.kind = ColumnKind::Datetime; break;
            default: s.kind = ColumnKind::Boolean; break;
        }
        s.nullable = randInt(0, 2) == 0;
        schema.push_back(s);
    }

    static const char* kCategoryPool[] = {"alpha", "beta",  "gamma",   "delta", "comma,inside",
                                          "quote\"inside", "epsilon", "zeta",  "eta"};
    Table table(schema, rows);
    for (size_t c = 0; c < cols; ++c) {
        const int poolSize = randInt(2, 9);
        for (size_t r = 0; r < rows; ++r) {
            if (schema[c].nullable && randInt(0, 4) == 0) {
                table.setMissing(c, r);
                continue;
            }
            switch (schema[c].kind) {
                case ColumnKind::Categorical:
                    table.setCategory(c, r, kCategoryPool[randInt(0, poolSize - 1)]);
                    break;
                case ColumnKind::Numeric: {
                    const double v = (static_cast<double>(rng() % 2000000) - 1000000.0) / 128.0;
                    table.setNumber(c, r, v);
                    break;
                }
                case ColumnKind::Datetime:
                    table.setTimestamp(c, r, static_cast<int64_t>(rng() % 4102444800ull) - 86400 * 365);
                    break;
                case ColumnKind::Boolean:
                    table.setFlag(c, r, randInt(0, 1) == 1);
                    break;
            }
        }
    }
    table.validate();
    return table;
}

}  // namespace testkit
