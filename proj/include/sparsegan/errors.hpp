#pragma once

#include <stdexcept>
#include <string>

namespace sparsegan {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Dimension mismatches. Messages name both offending shapes.
class ShapeError : public Error {
public:
    using Error::Error;
};

class EmptyInputError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

// Malformed input file contents; message carries the line number.
class ParseError : public Error {
public:
    using Error::Error;
};

// Every selectable atom is already in the support.
class ExhaustedDictionaryError : public Error {
public:
    using Error::Error;
};

class EmptySupportError : public Error {
public:
    using Error::Error;
};

// Non-finite loss during training; message carries a diagnostic dump.
class TrainAbortError : public Error {
public:
    using Error::Error;
};

} // namespace sparsegan
