// Copyright 2026 The visualgpt-desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace vgpt {

/// Base class of every error raised by the library. `kind()` is a short
/// stable token used by the CLI in its machine-parseable error line.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& m) : Error("dimension", m) {}
};

class LookupError : public Error {
 public:
  explicit LookupError(const std::string& m) : Error("lookup", m) {}
};

class ContractError : public Error {
 public:
  explicit ContractError(const std::string& m) : Error("contract", m) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& m) : Error("config", m) {}
};

class TokenizationError : public Error {
 public:
  explicit TokenizationError(const std::string& m) : Error("tokenization", m) {}
};

class LengthError : public Error {
 public:
  explicit LengthError(const std::string& m) : Error("length", m) {}
};

class ContextError : public Error {
 public:
  explicit ContextError(const std::string& m) : Error("context", m) {}
};

class IncompatibilityError : public Error {
 public:
  explicit IncompatibilityError(const std::string& m) : Error("incompatible", m) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& m) : Error("numeric", m) {}
};

class IoError : public Error {
 public:
  IoError(const std::string& path, const std::string& m)
      : Error("io", path + ": " + m), path_(path) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

class FormatError : public Error {
 public:
  explicit FormatError(const std::string& m) : Error("format", m) {}
};

class AnalysisError : public Error {
 public:
  explicit AnalysisError(const std::string& m) : Error("analysis", m) {}
};

}  // namespace vgpt
