#include "synthflight/table.hpp"

#include <cmath>
#include <limits>

namespace synthflight {

namespace {
constexpr double kNumberSentinel = std::numeric_limits<double>::quiet_NaN();
}

const char* columnKindName(ColumnKind kind) {
    switch (kind) {
        case ColumnKind::Categorical: return "categorical";
        case ColumnKind::Numeric: return "numeric";
        case ColumnKind::Datetime: return "datetime";
        case ColumnKind::Boolean: return "boolean";
    }
    return "unknown";
}

ColumnKind columnKindFromName(const std::string& name) {
    if (name == "categorical") return ColumnKind::Categorical;
    if (name == "numeric") return ColumnKind::Numeric;
    if (name == "datetime") return ColumnKind::Datetime;
    if (name == "boolean") return ColumnKind::Boolean;
    throw SchemaError("unknown column kind: " + name);
}

int32_t CategoricalValues::intern(const std::string& category) {
    auto it = index_.find(category);
    if (it != index_.end()) return it->second;
    const auto code = static_cast<int32_t>(dictionary.size());
    dictionary.push_back(category);
    index_.emplace(category, code);
    return code;
}

int32_t CategoricalValues::find(const std::string& category) const {
    auto it = index_.find(category);
    return it == index_.end() ? -1 : it->second;
}

Table::Table(std::vector<ColumnSchema> schema, size_t nRows)
    : schema_(std::move(schema)), rows_(nRows) {
    columns_.resize(schema_.size());
    for (size_t c = 0; c < schema_.size(); ++c) {
        auto& column = columns_[c];
        column.missing.assign(rows_, 0);
        switch (schema_[c].kind) {
            case ColumnKind::Numeric:
                column.numbers.assign(rows_, kNumberSentinel);
                break;
            case ColumnKind::Datetime:
                column.timestamps.assign(rows_, 0);
                break;
            case ColumnKind::Categorical:
                column.categories.codes.assign(rows_, -1);
                break;
            case ColumnKind::Boolean:
                column.flags.assign(rows_, 0);
                break;
        }
        if (!byName_.emplace(schema_[c].name, c).second) {
            throw SchemaError("duplicate column name: " + schema_[c].name);
        }
    }
}

int Table::findColumn(const std::string& name) const {
    auto it = byName_.find(name);
    return it == byName_.end() ? -1 : static_cast<int>(it->second);
}

size_t Table::columnIndex(const std::string& name) const {
    const int idx = findColumn(name);
    if (idx < 0) throw SchemaError("unknown column: " + name);
    return static_cast<size_t>(idx);
}

void Table::checkKind(size_t col, ColumnKind kind) const {
    if (schema_.at(col).kind != kind) {
        throw SchemaError("column '" + schema_[col].name + "' is " +
                          columnKindName(schema_[col].kind) + ", accessed as " +
                          columnKindName(kind));
    }
}

bool Table::isMissing(size_t col, size_t row) const {
    return columns_.at(col).missing.at(row) != 0;
}

double Table::numberAt(size_t col, size_t row) const {
    checkKind(col, ColumnKind::Numeric);
    return columns_[col].numbers.at(row);
}

int64_t Table::timestampAt(size_t col, size_t row) const {
    checkKind(col, ColumnKind::Datetime);
    return columns_[col].timestamps.at(row);
}

const std::string& Table::categoryAt(size_t col, size_t row) const {
    checkKind(col, ColumnKind::Categorical);
    const auto& cat = columns_[col].categories;
    const int32_t code = cat.codes.at(row);
    if (code < 0) throw SchemaError("reading missing categorical cell in '" + schema_[col].name + "'");
    return cat.dictionary[static_cast<size_t>(code)];
}

bool Table::flagAt(size_t col, size_t row) const {
    checkKind(col, ColumnKind::Boolean);
    return columns_[col].flags.at(row) != 0;
}

void Table::setNumber(size_t col, size_t row, double value) {
    checkKind(col, ColumnKind::Numeric);
    columns_[col].numbers.at(row) = value;
    columns_[col].missing.at(row) = 0;
}

void Table::setTimestamp(size_t col, size_t row, int64_t epochSeconds) {
    checkKind(col, ColumnKind::Datetime);
    columns_[col].timestamps.at(row) = epochSeconds;
    columns_[col].missing.at(row) = 0;
}

void Table::setCategory(size_t col, size_t row, const std::string& category) {
    checkKind(col, ColumnKind::Categorical);
    columns_[col].categories.codes.at(row) = columns_[col].categories.intern(category);
    columns_[col].missing.at(row) = 0;
}

void Table::setFlag(size_t col, size_t row, bool value) {
    checkKind(col, ColumnKind::Boolean);
    columns_[col].flags.at(row) = value ? 1 : 0;
    columns_[col].missing.at(row) = 0;
}

void Table::setMissing(size_t col, size_t row) {
    auto& column = columns_.at(col);
    column.missing.at(row) = 1;
    switch (schema_[col].kind) {
        case ColumnKind::Numeric: column.numbers.at(row) = kNumberSentinel; break;
        case ColumnKind::Datetime: column.timestamps.at(row) = 0; break;
        case ColumnKind::Categorical: column.categories.codes.at(row) = -1; break;
        case ColumnKind::Boolean: column.flags.at(row) = 0; break;
    }
}

void Table::appendColumn(ColumnSchema schema, Column column) {
    insertColumn(schema_.size(), std::move(schema), std::move(column));
}

void Table::insertColumn(size_t position, ColumnSchema schema, Column column) {
    if (position > schema_.size()) throw SchemaError("insert position out of range");
    if (column.missing.size() != rows_) {
        throw SchemaError("column '" + schema.name + "' has wrong length");
    }
    if (byName_.count(schema.name)) {
        throw SchemaError("duplicate column name: " + schema.name);
    }
    schema_.insert(schema_.begin() + static_cast<ptrdiff_t>(position), std::move(schema));
    columns_.insert(columns_.begin() + static_cast<ptrdiff_t>(position), std::move(column));
    byName_.clear();
    for (size_t c = 0; c < schema_.size(); ++c) byName_.emplace(schema_[c].name, c);
}

void Table::dropColumn(size_t col) {
    if (col >= schema_.size()) throw SchemaError("drop position out of range");
    schema_.erase(schema_.begin() + static_cast<ptrdiff_t>(col));
    columns_.erase(columns_.begin() + static_cast<ptrdiff_t>(col));
    byName_.clear();
    for (size_t c = 0; c < schema_.size(); ++c) byName_.emplace(schema_[c].name, c);
}

void Table::validate() const {
    for (size_t c = 0; c < schema_.size(); ++c) {
        const auto& column = columns_[c];
        const auto& meta = schema_[c];
        size_t n = 0;
        switch (meta.kind) {
            case ColumnKind::Numeric: n = column.numbers.size(); break;
            case ColumnKind::Datetime: n = column.timestamps.size(); break;
            case ColumnKind::Categorical: n = column.categories.codes.size(); break;
            case ColumnKind::Boolean: n = column.flags.size(); break;
        }
        if (n != rows_ || column.missing.size() != rows_) {
            throw SchemaError("column '" + meta.name + "' length mismatch");
        }
        for (size_t r = 0; r < rows_; ++r) {
            if (column.missing[r] && !meta.nullable) {
                throw SchemaError("non-nullable column '" + meta.name + "' has a missing cell");
            }
            if (meta.kind == ColumnKind::Categorical && !column.missing[r] &&
                column.categories.codes[r] < 0) {
                throw SchemaError("categorical column '" + meta.name + "' has unset cell");
            }
            if (meta.kind == ColumnKind::Numeric && !column.missing[r] &&
                !std::isfinite(column.numbers[r])) {
                throw SchemaError("numeric column '" + meta.name + "' has non-finite cell");
            }
        }
    }
}

Table Table::selectColumns(const std::vector<std::string>& names) const {
    std::vector<ColumnSchema> schema;
    schema.reserve(names.size());
    for (const auto& name : names) schema.push_back(schema_[columnIndex(name)]);
    Table out(std::move(schema), rows_);
    for (size_t c = 0; c < names.size(); ++c) {
        out.columns_[c] = columns_[columnIndex(names[c])];
    }
    return out;
}

Table Table::filterRows(const std::vector<uint8_t>& keep) const {
    if (keep.size() != rows_) throw SchemaError("row filter length mismatch");
    size_t kept = 0;
    for (uint8_t k : keep) kept += k ? 1 : 0;
    Table out(schema_, kept);
    for (size_t c = 0; c < schema_.size(); ++c) {
        const auto& src = columns_[c];
        auto& dst = out.columns_[c];
        // keep the source dictionary so category codes stay stable
        dst.categories.dictionary.clear();
        if (schema_[c].kind == ColumnKind::Categorical) {
            for (const auto& cat : src.categories.dictionary) dst.categories.intern(cat);
            dst.categories.codes.assign(kept, -1);
        }
        size_t w = 0;
        for (size_t r = 0; r < rows_; ++r) {
            if (!keep[r]) continue;
            dst.missing[w] = src.missing[r];
            switch (schema_[c].kind) {
                case ColumnKind::Numeric: dst.numbers[w] = src.numbers[r]; break;
                case ColumnKind::Datetime: dst.timestamps[w] = src.timestamps[r]; break;
                case ColumnKind::Categorical: dst.categories.codes[w] = src.categories.codes[r]; break;
                case ColumnKind::Boolean: dst.flags[w] = src.flags[r]; break;
            }
            ++w;
        }
    }
    return out;
}

Table Table::head(size_t n) const {
    std::vector<uint8_t> keep(rows_, 0);
    for (size_t r = 0; r < rows_ && r < n; ++r) keep[r] = 1;
    return filterRows(keep);
}

Table Table::concatRows(const Table& top, const Table& bottom) {
    if (top.columnCount() != bottom.columnCount()) {
        throw SchemaError("concat: column count mismatch");
    }
    for (size_t c = 0; c < top.columnCount(); ++c) {
        if (top.schema_[c].name != bottom.schema_[c].name ||
            top.schema_[c].kind != bottom.schema_[c].kind) {
            throw SchemaError("concat: schema mismatch at column " + top.schema_[c].name);
        }
    }
    std::vector<ColumnSchema> schema = top.schema_;
    for (size_t c = 0; c < schema.size(); ++c) {
        schema[c].nullable = top.schema_[c].nullable || bottom.schema_[c].nullable;
    }
    Table out(schema, top.rows_ + bottom.rows_);
    for (size_t c = 0; c < schema.size(); ++c) {
        for (int half = 0; half < 2; ++half) {
            const Table& part = half == 0 ? top : bottom;
            const size_t base = half == 0 ? 0 : top.rows_;
            const auto& src = part.columns_[c];
            for (size_t r = 0; r < part.rows_; ++r) {
                if (src.missing[r]) {
                    out.setMissing(c, base + r);
                    continue;
                }
                switch (schema[c].kind) {
                    case ColumnKind::Numeric: out.setNumber(c, base + r, src.numbers[r]); break;
                    case ColumnKind::Datetime: out.setTimestamp(c, base + r, src.timestamps[r]); break;
                    case ColumnKind::Categorical:
                        out.setCategory(c, base + r,
                                        src.categories.dictionary[static_cast<size_t>(src.categories.codes[r])]);
                        break;
                    case ColumnKind::Boolean: out.setFlag(c, base + r, src.flags[r] != 0); break;
                }
            }
        }
    }
    return out;
}

bool Table::cellEquals(const Table& other, size_t col, size_t row) const {
    const bool missA = isMissing(col, row);
    const bool missB = other.isMissing(col, row);
    if (missA || missB) return missA == missB;
    switch (schema_[col].kind) {
        case ColumnKind::Numeric: return numberAt(col, row) == other.numberAt(col, row);
        case ColumnKind::Datetime: return timestampAt(col, row) == other.timestampAt(col, row);
        case ColumnKind::Categorical: return categoryAt(col, row) == other.categoryAt(col, row);
        case ColumnKind::Boolean: return flagAt(col, row) == other.flagAt(col, row);
    }
    return false;
}

bool Table::contentEquals(const Table& other) const {
    if (rows_ != other.rows_ || schema_.size() != other.schema_.size()) return false;
    for (size_t c = 0; c < schema_.size(); ++c) {
        if (schema_[c].name != other.schema_[c].name) return false;
        if (schema_[c].kind != other.schema_[c].kind) return false;
        for (size_t r = 0; r < rows_; ++r) {
            if (!cellEquals(other, c, r)) return false;
        }
    }
    return true;
}

}  // namespace synthflight
