#pragma once

#include <stdexcept>
#include <string>

namespace qvfdag {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Graph-structure violations: cycles, self loops, duplicate or out-of-range edges.
class StructuralError : public Error {
public:
    using Error::Error;
};

/// Malformed or out-of-domain input (non-finite values, bad CSV, family/column mismatch).
class InputError : public Error {
public:
    using Error::Error;
};

/// A quantity that should be estimated is undefined for this data
/// (zero-mean column, vanishing QVF weight).
class DegenerateError : public Error {
public:
    using Error::Error;
};

/// Numerical failure inside an iterative solver.
class NumericError : public Error {
public:
    using Error::Error;
};

}  // namespace qvfdag
