#pragma once

#include <stdexcept>
#include <string>

namespace bagsel {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Bad argument values, out-of-range config fields, length mismatches.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Schema/column problems: unknown columns, column-order mismatches.
class SchemaError : public Error {
public:
    using Error::Error;
};

/// Malformed input files; the message names the offending row or column.
class IngestError : public Error {
public:
    using Error::Error;
};

/// Metric is undefined for the given labels (e.g. a single-class vector).
class UndefinedMetricError : public Error {
public:
    using Error::Error;
};

/// A class has too few instances to stratify.
class StratificationError : public Error {
public:
    using Error::Error;
};

/// Requested dimensionality exceeds what the data supports.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Model training failed (non-finite loss, degenerate inputs).
class TrainingError : public Error {
public:
    using Error::Error;
};

/// No candidate survived the bagging admission filter. Carries the best
/// observed averaged Gini so the caller can decide whether to lower the
/// threshold.
class EmptyBaggingError : public Error {
public:
    EmptyBaggingError(const std::string& msg, double best_gini)
        : Error(msg), best_observed_gini(best_gini) {}
    double best_observed_gini;
};

/// A required upstream artifact (e.g. a bagging for a split/kind pair) is missing.
class DependencyError : public Error {
public:
    using Error::Error;
};

}  // namespace bagsel
