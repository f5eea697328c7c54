#pragma once

#include <stdexcept>
#include <string>

namespace triage {

// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad or inconsistent configuration (unknown column, bad grid, invalid range).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Input data could not be read or parsed.
class IngestError : public Error {
 public:
  IngestError(const std::string& msg, std::size_t row)
      : Error("row " + std::to_string(row) + ": " + msg), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

// A label string outside the known category set.
class UnknownLabelError : public Error {
 public:
  explicit UnknownLabelError(std::string label)
      : Error("unknown label: \"" + label + "\""), label_(std::move(label)) {}
  const std::string& label() const noexcept { return label_; }

 private:
  std::string label_;
};

// Operation called with arguments that violate its contract.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// Persisted artifact does not match its recorded fingerprint.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

// A required file of a persisted artifact is absent.
class MissingArtifactError : public Error {
 public:
  using Error::Error;
};

// Entity recognizer backend could not be reached.
class RecognizerUnavailable : public Error {
 public:
  using Error::Error;
};

// Embedding backend failed while scoring similarity.
class EncoderError : public Error {
 public:
  using Error::Error;
};

// Generative backend failed after all retries.
class GeneratorUnavailable : public Error {
 public:
  using Error::Error;
};

// Loss became NaN or infinite during training.
class TrainingDiverged : public Error {
 public:
  using Error::Error;
};

}  // namespace triage
