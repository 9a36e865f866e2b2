#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace lmo {

/// Base class for every failure raised by the library.
///
/// `name()` is the stable identifier the experiment runner prints when a
/// pipeline aborts (exit code 3), e.g. "NoConvergence" or "SectionEscapes".
class Error : public std::runtime_error {
 public:
  Error(std::string name, const std::string& message)
      : std::runtime_error(name + ": " + message), name_(std::move(name)) {}

  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

class InvalidInput : public Error {
 public:
  explicit InvalidInput(const std::string& m) : Error("InvalidInput", m) {}
};

class DegenerateInput : public Error {
 public:
  explicit DegenerateInput(const std::string& m) : Error("DegenerateInput", m) {}
};

class EmptyImage : public Error {
 public:
  explicit EmptyImage(const std::string& m) : Error("EmptyImage", m) {}
};

class NoConvergence : public Error {
 public:
  NoConvergence(const std::string& m, double last_residual, int iterations)
      : Error("NoConvergence", m + " (last residual " + std::to_string(last_residual) +
                                   " after " + std::to_string(iterations) + " iterations)"),
        last_residual_(last_residual),
        iterations_(iterations) {}

  double last_residual() const noexcept { return last_residual_; }
  int iterations() const noexcept { return iterations_; }

 private:
  double last_residual_;
  int iterations_;
};

class NonMonotoneStencil : public Error {
 public:
  explicit NonMonotoneStencil(const std::string& m) : Error("NonMonotoneStencil", m) {}
};

class InvalidInitialGuess : public Error {
 public:
  explicit InvalidInitialGuess(const std::string& m) : Error("InvalidInitialGuess", m) {}
};

class EmptyFreeBoundary : public Error {
 public:
  explicit EmptyFreeBoundary(const std::string& m) : Error("EmptyFreeBoundary", m) {}
};

class PreconditionViolation : public Error {
 public:
  explicit PreconditionViolation(const std::string& m) : Error("PreconditionViolation", m) {}
};

class SectionEscapes : public Error {
 public:
  explicit SectionEscapes(const std::string& m) : Error("SectionEscapes", m) {}
};

class InsufficientData : public Error {
 public:
  explicit InsufficientData(const std::string& m) : Error("InsufficientData", m) {}
};

}  // namespace lmo
