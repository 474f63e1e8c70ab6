#ifndef CITYEXPO_ERRORS_H_
#define CITYEXPO_ERRORS_H_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cityexpo {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Problems with input data: files, records, configurations, datasets that
// cannot support the requested computation.
class DataError : public Error {
 public:
  using Error::Error;
};

// Problems with trained models or model bundles.
class ModelError : public Error {
 public:
  using Error::Error;
};

class ParseError : public DataError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public DataError {
 public:
  using DataError::DataError;
};

class UnknownUser : public DataError {
 public:
  explicit UnknownUser(const std::string& id)
      : DataError("unknown user '" + id + "'") {}
};

class ConfigError : public DataError {
 public:
  using DataError::DataError;
};

class EmptyInput : public DataError {
 public:
  using DataError::DataError;
};

class OutOfRange : public DataError {
 public:
  using DataError::DataError;
};

class DegenerateTrainingSet : public DataError {
 public:
  using DataError::DataError;
};

class DegenerateDataset : public DataError {
 public:
  using DataError::DataError;
};

class EmptyScores : public Error {
 public:
  EmptyScores() : Error("location scores are empty") {}
};

class EmptyCluster : public Error {
 public:
  EmptyCluster() : Error("cluster has no members") {}
};

class Abstained : public Error {
 public:
  Abstained() : Error("prediction abstained; no coordinate") {}
};

class NonConvergence : public ModelError {
 public:
  explicit NonConvergence(double gradient_norm)
      : ModelError("logistic training did not converge; final gradient "
                   "inf-norm " +
                   std::to_string(gradient_norm)),
        gradient_norm_(gradient_norm) {}
  double gradient_norm() const { return gradient_norm_; }

 private:
  double gradient_norm_;
};

class BundleError : public ModelError {
 public:
  using ModelError::ModelError;
};

}  // namespace cityexpo

#endif  // CITYEXPO_ERRORS_H_
