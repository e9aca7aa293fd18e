#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "synthflight/errors.hpp"

namespace synthflight {

enum class ColumnKind { Categorical, Numeric, Datetime, Boolean };

const char* columnKindName(ColumnKind kind);
ColumnKind columnKindFromName(const std::string& name);

// Datetime columns are always UTC; values are signed epoch seconds.
struct ColumnSchema {
    std::string name;
    ColumnKind kind = ColumnKind::Numeric;
    std::string unit;  // empty when unitless, e.g. "min", "miles"
    bool nullable = false;

    bool operator==(const ColumnSchema&) const = default;
};

// Interned categorical storage: codes index into the dictionary, which keeps
// first-appearance order. Code -1 is the missing sentinel.
struct CategoricalValues {
    std::vector<int32_t> codes;
    std::vector<std::string> dictionary;

    int32_t intern(const std::string& category);
    int32_t find(const std::string& category) const;  // -1 when absent

private:
    std::unordered_map<std::string, int32_t> index_;
};

struct Column {
    std::vector<double> numbers;       // Numeric; NaN sentinel for missing
    std::vector<int64_t> timestamps;   // Datetime; 0 sentinel
    CategoricalValues categories;      // Categorical; -1 sentinel
    std::vector<uint8_t> flags;        // Boolean; 0 sentinel
    std::vector<uint8_t> missing;      // 1 = missing, authoritative
};

// Immutable-after-construction columnar table. Build with the set*() calls
// (single writer), then validate(); afterwards share freely across readers.
class Table {
public:
    Table() = default;
    Table(std::vector<ColumnSchema> schema, size_t nRows);

    size_t rowCount() const { return rows_; }
    size_t columnCount() const { return schema_.size(); }

    const std::vector<ColumnSchema>& schema() const { return schema_; }
    const ColumnSchema& schemaAt(size_t col) const { return schema_.at(col); }

    int findColumn(const std::string& name) const;
    size_t columnIndex(const std::string& name) const;  // throws SchemaError
    bool hasColumn(const std::string& name) const { return findColumn(name) >= 0; }

    const Column& column(size_t col) const { return columns_.at(col); }
    Column& column(size_t col) { return columns_.at(col); }

    bool isMissing(size_t col, size_t row) const;
    double numberAt(size_t col, size_t row) const;
    int64_t timestampAt(size_t col, size_t row) const;
    const std::string& categoryAt(size_t col, size_t row) const;
    bool flagAt(size_t col, size_t row) const;

    void setNumber(size_t col, size_t row, double value);
    void setTimestamp(size_t col, size_t row, int64_t epochSeconds);
    void setCategory(size_t col, size_t row, const std::string& category);
    void setFlag(size_t col, size_t row, bool value);
    void setMissing(size_t col, size_t row);

    // Appends a fully-formed column; length must match rowCount().
    void appendColumn(ColumnSchema schema, Column column);
    void insertColumn(size_t position, ColumnSchema schema, Column column);
    void dropColumn(size_t col);

    void validate() const;  // throws SchemaError on any invariant violation

    Table selectColumns(const std::vector<std::string>& names) const;
    Table filterRows(const std::vector<uint8_t>& keep) const;
    Table head(size_t n) const;
    static Table concatRows(const Table& top, const Table& bottom);

    bool cellEquals(const Table& other, size_t col, size_t row) const;
    bool contentEquals(const Table& other) const;

private:
    void checkKind(size_t col, ColumnKind kind) const;

    std::vector<ColumnSchema> schema_;
    std::vector<Column> columns_;
    std::unordered_map<std::string, size_t> byName_;
    size_t rows_ = 0;
};

}  // namespace synthflight
