#pragma once

#include <stdexcept>
#include <string>

namespace sgnd {

struct QuadratureFailure : std::runtime_error {
  explicit QuadratureFailure(const std::string& msg) : std::runtime_error(msg) {}
};

struct NonFiniteLikelihood : std::runtime_error {
  explicit NonFiniteLikelihood(const std::string& msg) : std::runtime_error(msg) {}
};

struct SingularDesign : std::runtime_error {
  explicit SingularDesign(const std::string& msg) : std::runtime_error(msg) {}
};

struct DegenerateColumn : std::runtime_error {
  explicit DegenerateColumn(const std::string& msg) : std::runtime_error(msg) {}
};

struct BlockSolveFailure : std::runtime_error {
  explicit BlockSolveFailure(const std::string& msg) : std::runtime_error(msg) {}
};

struct NoAscentDirection : std::runtime_error {
  explicit NoAscentDirection(const std::string& msg) : std::runtime_error(msg) {}
};

struct SingularInformation : std::runtime_error {
  explicit SingularInformation(const std::string& msg) : std::runtime_error(msg) {}
};

struct VariableNotActive : std::runtime_error {
  explicit VariableNotActive(const std::string& msg) : std::runtime_error(msg) {}
};

struct CsvError : std::runtime_error {
  explicit CsvError(const std::string& msg) : std::runtime_error(msg) {}
};

struct MissingColumn : CsvError {
  explicit MissingColumn(const std::string& msg) : CsvError(msg) {}
};

struct NonNumericCell : CsvError {
  explicit NonNumericCell(const std::string& msg) : CsvError(msg) {}
};

struct MissingValue : CsvError {
  explicit MissingValue(const std::string& msg) : CsvError(msg) {}
};

struct UnknownCovariate : std::runtime_error {
  explicit UnknownCovariate(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace sgnd
