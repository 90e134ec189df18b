#pragma once

#include <stdexcept>
#include <string>

namespace gsteal {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Missing or unreadable input files.
struct IngestionError : Error { using Error::Error; };
// Malformed file or wire contents.
struct FormatError : Error { using Error::Error; };
// Shape or feature-width mismatches.
struct DimensionError : Error { using Error::Error; };
// Out-of-range class, node or label indices.
struct IndexError : Error { using Error::Error; };
// Invalid configuration values.
struct ConfigError : Error { using Error::Error; };
// Lookup of a key that does not exist (e.g. scoring an unknown edge).
struct KeyError : Error { using Error::Error; };
// Metric undefined on the given inputs (single-class AUC, all-tied tau).
struct UndefinedMetricError : Error { using Error::Error; };

// Training diverged; carries the epoch where it happened.
struct TrainingError : Error {
    int epoch;
    TrainingError(const std::string& what, int epoch_idx)
        : Error(what), epoch(epoch_idx) {}
};

// Oracle refused a query because the budget is spent.
struct BudgetExhaustedError : Error { using Error::Error; };
// Retriable connection-level failure.
struct TransportError : Error { using Error::Error; };
// Fatal wire decode failure.
struct ProtocolError : Error { using Error::Error; };

}  // namespace gsteal
