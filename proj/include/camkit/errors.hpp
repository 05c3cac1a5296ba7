#pragma once

#include <stdexcept>
#include <string>

namespace camkit {

/// Base of every error raised by the library. Each subclass names one
/// failure category so callers (and the CLI exit-code mapping) can
/// dispatch on type.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
public:
  using Error::Error;
};

class MissingComponent : public Error {
public:
  using Error::Error;
};

class NonFiniteData : public Error {
public:
  using Error::Error;
};

class FormatError : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

class ConfigError : public Error {
public:
  using Error::Error;
};

class RangeError : public Error {
public:
  using Error::Error;
};

class ModelLoadError : public Error {
public:
  using Error::Error;
};

/// Raised by a scorer that cannot produce logits for an input
/// (e.g. a stub lookup miss or an unsupported graph operator at run time).
class ScorerError : public Error {
public:
  using Error::Error;
};

class AnnotationError : public Error {
public:
  using Error::Error;
};

} // namespace camkit
