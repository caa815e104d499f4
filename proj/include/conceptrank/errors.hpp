#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace conceptrank {

/// Base class for every error raised by the engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed on-disk record. `line` is 1-based, 0 when not applicable.
class FormatError : public Error {
 public:
  FormatError(std::string path, std::size_t line, const std::string& what)
      : Error(path + (line ? ":" + std::to_string(line) : std::string()) + ": " + what),
        path_(std::move(path)),
        line_(line) {}
  const std::string& path() const noexcept { return path_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string path_;
  std::size_t line_;
};

class DuplicateId : public Error {
 public:
  explicit DuplicateId(std::string id) : Error("duplicate id: " + id), id_(std::move(id)) {}
  const std::string& id() const noexcept { return id_; }

 private:
  std::string id_;
};

class DuplicateTopic : public Error {
 public:
  explicit DuplicateTopic(std::string name)
      : Error("duplicate topic after canonicalization: " + name), name_(std::move(name)) {}
  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

class UnknownId : public Error {
 public:
  explicit UnknownId(std::string id) : Error("unknown id: " + id), id_(std::move(id)) {}
  const std::string& id() const noexcept { return id_; }

 private:
  std::string id_;
};

class SizeMismatch : public Error {
 public:
  SizeMismatch(std::size_t expected, std::size_t actual)
      : Error("size mismatch: expected " + std::to_string(expected) + " bytes, got " +
              std::to_string(actual)),
        expected_(expected),
        actual_(actual) {}
  std::size_t expected() const noexcept { return expected_; }
  std::size_t actual() const noexcept { return actual_; }

 private:
  std::size_t expected_;
  std::size_t actual_;
};

class NonFiniteValue : public Error {
 public:
  explicit NonFiniteValue(std::size_t row)
      : Error("non-finite value in row " + std::to_string(row)), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

class DimensionMismatch : public Error {
 public:
  DimensionMismatch(std::size_t expected, std::size_t actual)
      : Error("dimension mismatch: expected " + std::to_string(expected) + ", got " +
              std::to_string(actual)) {}
};

class MissingConcepts : public Error {
 public:
  explicit MissingConcepts(std::vector<std::string> missing)
      : Error(describe(missing)), missing_(std::move(missing)) {}
  const std::vector<std::string>& missing() const noexcept { return missing_; }

 private:
  static std::string describe(const std::vector<std::string>& missing) {
    std::string out = "missing embeddings for:";
    for (const auto& m : missing) out += " \"" + m + "\"";
    return out;
  }
  std::vector<std::string> missing_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class UnboundPlaceholder : public Error {
 public:
  explicit UnboundPlaceholder(std::string name)
      : Error("unbound placeholder: {" + name + "}"), name_(std::move(name)) {}
  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

class ParseFailure : public Error {
 public:
  ParseFailure(std::string tag, std::string raw)
      : Error("no complete <" + tag + "> span in LLM response"),
        tag_(std::move(tag)),
        raw_(std::move(raw)) {}
  const std::string& tag() const noexcept { return tag_; }
  const std::string& raw() const noexcept { return raw_; }

 private:
  std::string tag_;
  std::string raw_;
};

class TransportError : public Error {
 public:
  using Error::Error;
};

class ReplayMiss : public Error {
 public:
  explicit ReplayMiss(std::string hash) : Error("no recorded response for prompt " + hash),
                                          hash_(std::move(hash)) {}
  const std::string& hash() const noexcept { return hash_; }

 private:
  std::string hash_;
};

class TrainingDiverged : public Error {
 public:
  TrainingDiverged(int epoch, std::size_t batch)
      : Error("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
              std::to_string(batch)),
        epoch_(epoch),
        batch_(batch) {}
  int epoch() const noexcept { return epoch_; }
  std::size_t batch() const noexcept { return batch_; }

 private:
  int epoch_;
  std::size_t batch_;
};

}  // namespace conceptrank
