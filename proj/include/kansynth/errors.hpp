#pragma once

#include <stdexcept>
#include <string>

namespace kansynth {

// Base class for everything thrown by this library.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Structural problems: dimension mismatches, broken invariants, unknown ids.
struct ValidationError : Error {
    explicit ValidationError(const std::string& what) : Error(what) {}
};

// Evaluation produced a non-finite value; carries the offending layer.
struct EvalError : Error {
    EvalError(const std::string& what, int layer) : Error(what), layer_index(layer) {}
    int layer_index;
};

// A gadget would exceed its configured fan-out bound.
struct GadgetSizeError : ValidationError {
    explicit GadgetSizeError(const std::string& what) : ValidationError(what) {}
};

// The finite-difference quadratic is too ill-conditioned to invert.
struct ConditioningError : Error {
    explicit ConditioningError(const std::string& what) : Error(what) {}
};

// Least-squares fitting failed (singular normal equations etc).
struct FitError : Error {
    explicit FitError(const std::string& what) : Error(what) {}
};

// Malformed documents, schema violations, unreadable files.
struct ParseError : Error {
    explicit ParseError(const std::string& what) : Error(what) {}
};

} // namespace kansynth
