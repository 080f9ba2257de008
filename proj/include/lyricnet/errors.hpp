#pragma once

#include <stdexcept>
#include <string>

namespace lyricnet {

// shape disagreement between operands; message names both shapes
struct DimensionError : std::invalid_argument {
    explicit DimensionError(const std::string& msg) : std::invalid_argument(msg) {}
};

// NaN/Inf surfaced in a forward or backward pass; message names the op
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// bad configuration (fractions, empty splits, unknown model type, ...)
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// malformed input file; message carries the line number where known
struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace lyricnet
