#pragma once

#include <stdexcept>
#include <string>

namespace synthflight {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input files; messages carry row/column context where known.
class ParseError : public Error {
public:
    using Error::Error;
};

// Table/schema mismatches: unknown columns, kind conflicts, ragged data.
class SchemaError : public Error {
public:
    using Error::Error;
};

// Invalid options, experiment configs, or out-of-range arguments.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Failed directory lookups (airports, routes, categories).
class DirectoryError : public Error {
public:
    using Error::Error;
};

// Numerical failures: divergence, singular systems, non-finite values.
class NumericError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace synthflight
