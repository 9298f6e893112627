#pragma once

#include <stdexcept>
#include <string>

namespace ulab {

// Shape/dimension disagreement between tensor operands.
struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid configuration value (e.g. d_model not divisible by n_heads).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Sequence does not fit the model context.
struct LengthError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Caller violated an operation contract (empty batch, k > n, ...).
struct ContractError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Character outside the corpus alphabet.
struct TokenizeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Source text rejected by the module grammar.
struct ParseError : std::runtime_error {
    ParseError(int line_, int col_, const std::string& what_)
        : std::runtime_error("parse error at " + std::to_string(line_) + ":" +
                             std::to_string(col_) + ": " + what_),
          line(line_),
          col(col_) {}
    int line;
    int col;
};

// Expression references an identifier that is not a declared port.
struct UndeclaredIdentifierError : ParseError {
    UndeclaredIdentifierError(int line_, int col_, const std::string& name)
        : ParseError(line_, col_, "undeclared identifier '" + name + "'") {}
};

// Checkpoint file has wrong magic or unsupported version.
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Checkpoint file is truncated or fails its checksum.
struct CorruptionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// NaN/Inf surfaced during training; carries the offending epoch/step.
struct NumericsError : std::runtime_error {
    NumericsError(int epoch_, int step_, const std::string& what_)
        : std::runtime_error("non-finite value at epoch " + std::to_string(epoch_) +
                             ", step " + std::to_string(step_) + ": " + what_),
          epoch(epoch_),
          step(step_) {}
    int epoch;
    int step;
};

}  // namespace ulab
