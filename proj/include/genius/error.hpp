// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace genius {

// Base of every error the library throws. Callers that only care about
// "something in genius failed" catch this.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArchitecture : public Error {
 public:
  explicit InvalidArchitecture(const std::string& what, std::string raw = {})
      : Error(what), raw_(std::move(raw)) {}
  // Advisor text that produced the architecture, when there was one.
  const std::string& raw() const { return raw_; }

 private:
  std::string raw_;
};

class KeyParseError : public Error {
 public:
  KeyParseError(const std::string& key, std::size_t token, const std::string& reason)
      : Error("cannot parse key '" + key + "' at token " + std::to_string(token) + ": " + reason),
        token_(token) {}
  // Same error, located at `line` of a file (1-based).
  KeyParseError(const KeyParseError& e, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + e.what()), token_(e.token_), line_(line) {}
  std::size_t token() const { return token_; }
  std::size_t line() const { return line_; }

 private:
  std::size_t token_;
  std::size_t line_ = 0;
};

class SpaceTooLarge : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  FormatError(std::size_t line, const std::string& reason)
      : Error("line " + std::to_string(line) + ": " + reason), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class DuplicateKey : public FormatError {
 public:
  DuplicateKey(std::size_t line, const std::string& key)
      : FormatError(line, "duplicate key '" + key + "'"), key_(key) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

class UnknownArchitecture : public Error {
 public:
  explicit UnknownArchitecture(const std::string& key)
      : Error("architecture '" + key + "' is not in the benchmark"), key_(key) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::string raw) : Error(what), raw_(std::move(raw)) {}
  const std::string& raw() const { return raw_; }

 private:
  std::string raw_;
};

// Wire-level failure talking to a chat endpoint. Retryable.
class TransportError : public Error {
 public:
  using Error::Error;
};

class AdvisorFailed : public Error {
 public:
  using Error::Error;
};

class ConstraintUnsatisfied : public Error {
 public:
  ConstraintUnsatisfied(double last_flops_m, double limit_m, int retries)
      : Error("FLOPs constraint unsatisfied after " + std::to_string(retries) + " retries"),
        last_flops_m_(last_flops_m),
        limit_m_(limit_m),
        retries_(retries) {}
  double last_flops_m() const { return last_flops_m_; }
  double limit_m() const { return limit_m_; }
  int retries() const { return retries_; }

 private:
  double last_flops_m_;
  double limit_m_;
  int retries_;
};

class EmptyTrace : public Error {
 public:
  EmptyTrace() : Error("trace has no successful record") {}
};

class MixedRuns : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace genius
