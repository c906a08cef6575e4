#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace semlink {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoFailure : public Error {
 public:
  using Error::Error;
};

/// A corpus or checkpoint document that does not match its schema.
class SchemaViolation : public Error {
 public:
  SchemaViolation(std::string field, std::size_t line, const std::string& detail)
      : Error("schema violation at line " + std::to_string(line) + ", field '" + field +
              "': " + detail),
        field_(std::move(field)),
        line_(line) {}

  const std::string& field() const noexcept { return field_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string field_;
  std::size_t line_;
};

class EmptyCorpus : public Error {
 public:
  EmptyCorpus() : Error("corpus is empty") {}
};

class ParseFailure : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class VersionMismatch : public Error {
 public:
  using Error::Error;
};

class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

/// Network-level failure talking to a remote service. Always retryable.
class TransportFailure : public Error {
 public:
  using Error::Error;
};

/// A remote service answered, but the answer breaks the wire contract.
class ProtocolViolation : public Error {
 public:
  using Error::Error;
};

class ServerRejection : public Error {
 public:
  ServerRejection(int status, std::string body)
      : Error("server rejected request with status " + std::to_string(status) + ": " + body),
        status_(status),
        body_(std::move(body)) {}

  int status() const noexcept { return status_; }
  const std::string& body() const noexcept { return body_; }

 private:
  int status_;
  std::string body_;
};

class NoSourceFeatures : public Error {
 public:
  NoSourceFeatures() : Error("NoSourceFeatures: hyperlink has no usable source text") {}
};

class NoTargetFeatures : public Error {
 public:
  NoTargetFeatures() : Error("NoTargetFeatures: page has no usable target text") {}
};

class EmptyTrainSet : public Error {
 public:
  EmptyTrainSet() : Error("training split is empty") {}
};

}  // namespace semlink
