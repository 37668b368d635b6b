#pragma once

#include <stdexcept>
#include <string>

namespace ratrec {

// Exceptions thrown across the library.  Each names the contract it guards;
// all derive from std::runtime_error so callers can catch coarsely.

struct MissingAssignment : std::runtime_error {
  explicit MissingAssignment(const std::string& what) : std::runtime_error(what) {}
};

struct OutOfBasis : std::runtime_error {
  explicit OutOfBasis(const std::string& what) : std::runtime_error(what) {}
};

struct InvalidRegime : std::runtime_error {
  explicit InvalidRegime(const std::string& what) : std::runtime_error(what) {}
};

struct InvalidModel : std::runtime_error {
  explicit InvalidModel(const std::string& what) : std::runtime_error(what) {}
};

struct OrderTooSmall : std::runtime_error {
  explicit OrderTooSmall(const std::string& what) : std::runtime_error(what) {}
};

struct SizeCapExceeded : std::runtime_error {
  explicit SizeCapExceeded(const std::string& what) : std::runtime_error(what) {}
};

struct NoConvergence : std::runtime_error {
  explicit NoConvergence(const std::string& what) : std::runtime_error(what) {}
};

struct StepTooLarge : std::runtime_error {
  explicit StepTooLarge(const std::string& what) : std::runtime_error(what) {}
};

struct NumericalBreakdown : std::runtime_error {
  explicit NumericalBreakdown(const std::string& what) : std::runtime_error(what) {}
};

struct DegenerateTruth : std::runtime_error {
  explicit DegenerateTruth(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ratrec
