// Copyright 2026 The Moonlet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace moonlet {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input file could not be parsed; the message names the offending field.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Parsed input violates a domain invariant (rank, counts, charges...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Bad user configuration (unknown key, missing file, bad value).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Non-finite value produced by a numerical kernel.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class UnsupportedElementError : public Error {
 public:
  using Error::Error;
};

class InfeasibleValencyError : public Error {
 public:
  using Error::Error;
};

class BasisTooSmallError : public Error {
 public:
  using Error::Error;
};

}  // namespace moonlet
