#pragma once

#include <stdexcept>
#include <string>

namespace smilegrid {

// Base class for all library failures.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid user input: bad smile, bad config, malformed file.
struct validation_error : error {
    using error::error;
};

// Non-finite intermediate inside a model evaluation.
struct evaluation_error : error {
    using error::error;
};

// s(0) root bracketing or grid bracketing failure.
struct calibration_error : error {
    using error::error;
};

// Lookup-table construction exceeded its size budget.
struct table_error : error {
    using error::error;
};

} // namespace smilegrid
