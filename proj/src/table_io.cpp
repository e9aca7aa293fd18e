#include "synthflight/table_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace synthflight {

namespace {

std::string readWholeFile(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void writeWholeFile(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write file: " + path);
    out << content;
    if (!out) throw IoError("write failed: " + path);
}

bool isLeap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

int daysInMonth(int y, int m) {
    static const int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (m == 2 && isLeap(y)) return 29;
    return kDays[m - 1];
}

}  // namespace

int64_t daysFromCivil(int y, int m, int d) {
    y -= m <= 2;
    const int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2u) / 5u +
                         static_cast<unsigned>(d) - 1u;
    const unsigned doe = yoe * 365u + yoe / 4u - yoe / 100u + doy;
    return era * 146097 + static_cast<int64_t>(doe) - 719468;
}

void civilFromDays(int64_t z, int& year, int& month, int& day) {
    z += 719468;
    const int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const int64_t y = static_cast<int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    day = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    month = static_cast<int>(mp < 10 ? mp + 3 : mp - 9);
    year = static_cast<int>(y + (month <= 2 ? 1 : 0));
}

int64_t parseIso8601Utc(const std::string& text) {
    // YYYY-MM-DDThh:mm:ssZ
    int y, mo, d, h, mi, s;
    char t, z;
    if (std::sscanf(text.c_str(), "%4d-%2d-%2d%c%2d:%2d:%2d%c", &y, &mo, &d, &t, &h, &mi, &s, &z) != 8 ||
        (t != 'T' && t != ' ') || z != 'Z' || text.size() != 20) {
        throw ParseError("invalid ISO-8601 UTC datetime: '" + text + "'");
    }
    if (mo < 1 || mo > 12 || d < 1 || d > daysInMonth(y, mo) || h > 23 || mi > 59 || s > 60 ||
        h < 0 || mi < 0 || s < 0) {
        throw ParseError("out-of-range datetime components: '" + text + "'");
    }
    return daysFromCivil(y, mo, d) * 86400 + h * 3600 + mi * 60 + s;
}

std::string formatIso8601Utc(int64_t epochSeconds) {
    int64_t days = epochSeconds / 86400;
    int64_t rem = epochSeconds % 86400;
    if (rem < 0) {
        rem += 86400;
        days -= 1;
    }
    int y, mo, d;
    civilFromDays(days, y, mo, d);
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02lld:%02lld:%02lldZ", y, mo, d,
                  static_cast<long long>(rem / 3600), static_cast<long long>(rem / 60 % 60),
                  static_cast<long long>(rem % 60));
    return buf;
}

double parseNumber(const std::string& text) {
    double value = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) {
        throw ParseError("invalid number: '" + text + "'");
    }
    return value;
}

std::string formatNumber(double value) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    if (ec != std::errc()) throw NumericError("number formatting failed");
    return std::string(buf, ptr);
}

bool parseBool(const std::string& text) {
    if (text == "true" || text == "1") return true;
    if (text == "false" || text == "0") return false;
    throw ParseError("invalid boolean: '" + text + "'");
}

std::string csvEscape(const std::string& field) {
    if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

std::vector<std::vector<std::string>> readCsvRows(const std::string& path) {
    const std::string content = readWholeFile(path);
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    bool fieldStarted = false;
    size_t i = 0;
    const size_t n = content.size();
    auto endField = [&] {
        row.push_back(std::move(field));
        field.clear();
        fieldStarted = false;
    };
    auto endRow = [&] {
        endField();
        rows.push_back(std::move(row));
        row.clear();
    };
    while (i < n) {
        const char c = content[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < n && content[i + 1] == '"') {
                    field += '"';
                    i += 2;
                } else {
                    quoted = false;
                    ++i;
                }
            } else {
                field += c;
                ++i;
            }
            continue;
        }
        switch (c) {
            case '"':
                if (!fieldStarted && field.empty()) {
                    quoted = true;
                    fieldStarted = true;
                } else {
                    field += c;  // stray quote inside unquoted field
                }
                ++i;
                break;
            case ',':
                endField();
                ++i;
                break;
            case '\r':
                if (i + 1 < n && content[i + 1] == '\n') ++i;
                endRow();
                ++i;
                break;
            case '\n':
                endRow();
                ++i;
                break;
            default:
                field += c;
                fieldStarted = true;
                ++i;
        }
    }
    if (fieldStarted || !field.empty() || !row.empty()) endRow();
    return rows;
}

std::vector<ColumnSchema> readSchema(const std::string& schemaPath) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(readWholeFile(schemaPath));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("schema file " + schemaPath + ": " + e.what());
    }
    if (!doc.is_array()) throw ParseError("schema file must be a JSON array: " + schemaPath);
    std::vector<ColumnSchema> schema;
    for (const auto& entry : doc) {
        ColumnSchema col;
        col.name = entry.at("name").get<std::string>();
        col.kind = columnKindFromName(entry.at("kind").get<std::string>());
        if (entry.contains("unit")) col.unit = entry["unit"].get<std::string>();
        col.nullable = entry.value("nullable", false);
        schema.push_back(std::move(col));
    }
    return schema;
}

void writeSchema(const std::vector<ColumnSchema>& schema, const std::string& schemaPath) {
    nlohmann::json doc = nlohmann::json::array();
    for (const auto& col : schema) {
        nlohmann::json entry;
        entry["name"] = col.name;
        entry["kind"] = columnKindName(col.kind);
        if (!col.unit.empty()) entry["unit"] = col.unit;
        entry["nullable"] = col.nullable;
        doc.push_back(std::move(entry));
    }
    writeWholeFile(schemaPath, doc.dump(2) + "\n");
}

Table readTable(const std::string& csvPath, const std::string& schemaPath) {
    const auto schema = readSchema(schemaPath);
    const auto rows = readCsvRows(csvPath);
    if (rows.empty()) throw ParseError("empty CSV (missing header): " + csvPath);

    const auto& header = rows.front();
    if (header.size() != schema.size()) {
        throw SchemaError("header has " + std::to_string(header.size()) + " columns, schema has " +
                          std::to_string(schema.size()) + ": " + csvPath);
    }
    for (size_t c = 0; c < schema.size(); ++c) {
        if (header[c] != schema[c].name) {
            throw SchemaError("header/schema mismatch at column " + std::to_string(c) + ": '" +
                              header[c] + "' vs '" + schema[c].name + "'");
        }
    }

    Table table(schema, rows.size() - 1);
    for (size_t r = 1; r < rows.size(); ++r) {
        const auto& cells = rows[r];
        if (cells.size() != schema.size()) {
            throw ParseError("row " + std::to_string(r) + " has " + std::to_string(cells.size()) +
                             " fields, expected " + std::to_string(schema.size()));
        }
        for (size_t c = 0; c < schema.size(); ++c) {
            const std::string& text = cells[c];
            const size_t row = r - 1;
            if (text.empty()) {
                if (!schema[c].nullable) {
                    throw ParseError("row " + std::to_string(r) + ", column '" + schema[c].name +
                                     "': empty field in non-nullable column");
                }
                table.setMissing(c, row);
                continue;
            }
            try {
                switch (schema[c].kind) {
                    case ColumnKind::Numeric: table.setNumber(c, row, parseNumber(text)); break;
                    case ColumnKind::Datetime: table.setTimestamp(c, row, parseIso8601Utc(text)); break;
                    case ColumnKind::Categorical: table.setCategory(c, row, text); break;
                    case ColumnKind::Boolean: table.setFlag(c, row, parseBool(text)); break;
                }
            } catch (const ParseError& e) {
                throw ParseError("row " + std::to_string(r) + ", column '" + schema[c].name +
                                 "': " + e.what());
            }
        }
    }
    table.validate();
    return table;
}

void writeTable(const Table& table, const std::string& csvPath) {
    std::string out;
    const auto& schema = table.schema();
    for (size_t c = 0; c < schema.size(); ++c) {
        if (c) out += ',';
        out += csvEscape(schema[c].name);
    }
    out += '\n';
    for (size_t r = 0; r < table.rowCount(); ++r) {
        for (size_t c = 0; c < schema.size(); ++c) {
            if (c) out += ',';
            if (table.isMissing(c, r)) continue;
            switch (schema[c].kind) {
                case ColumnKind::Numeric: out += formatNumber(table.numberAt(c, r)); break;
                case ColumnKind::Datetime: out += formatIso8601Utc(table.timestampAt(c, r)); break;
                case ColumnKind::Categorical: out += csvEscape(table.categoryAt(c, r)); break;
                case ColumnKind::Boolean: out += table.flagAt(c, r) ? "true" : "false"; break;
            }
        }
        out += '\n';
    }
    writeWholeFile(csvPath, out);
}

TablePaths writeTableWithSchema(const Table& table, const std::string& csvPath) {
    TablePaths paths{csvPath, csvPath + ".schema.json"};
    writeTable(table, paths.csv);
    writeSchema(table.schema(), paths.schema);
    return paths;
}

Table readTableAuto(const std::string& csvPath) {
    return readTable(csvPath, csvPath + ".schema.json");
}

}  // namespace synthflight
