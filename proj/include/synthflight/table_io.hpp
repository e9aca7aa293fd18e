#pragma once

#include <string>
#include <vector>

#include "synthflight/table.hpp"

namespace synthflight {

// Data files are UTF-8 CSV: comma separated, header row, empty field =
// missing, datetimes ISO-8601 UTC with seconds precision. The schema sidecar
// is a JSON array of {name, kind, unit?, nullable} in column order.

Table readTable(const std::string& csvPath, const std::string& schemaPath);
void writeTable(const Table& table, const std::string& csvPath);

std::vector<ColumnSchema> readSchema(const std::string& schemaPath);
void writeSchema(const std::vector<ColumnSchema>& schema, const std::string& schemaPath);

// Writes table.csv plus table.schema.json next to it and returns both paths.
struct TablePaths {
    std::string csv;
    std::string schema;
};
TablePaths writeTableWithSchema(const Table& table, const std::string& csvPath);
Table readTableAuto(const std::string& csvPath);  // expects <csv>.schema.json sidecar

// Cell-level codecs, shared by CSV and raw-feed parsing.
int64_t parseIso8601Utc(const std::string& text);          // throws ParseError
std::string formatIso8601Utc(int64_t epochSeconds);
double parseNumber(const std::string& text);               // throws ParseError
std::string formatNumber(double value);                    // shortest round-trip
bool parseBool(const std::string& text);                   // true/false/1/0

// Civil-calendar helpers (proleptic Gregorian, UTC).
int64_t daysFromCivil(int year, int month, int day);
void civilFromDays(int64_t days, int& year, int& month, int& day);

// Low-level CSV codec (RFC 4180 quoting).
std::vector<std::vector<std::string>> readCsvRows(const std::string& path);
std::string csvEscape(const std::string& field);

}  // namespace synthflight
