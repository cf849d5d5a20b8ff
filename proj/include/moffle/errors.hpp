#pragma once

#include <stdexcept>
#include <string>

namespace moffle {

struct MoffleError : std::runtime_error {
  explicit MoffleError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ShapeMismatch : MoffleError {
  explicit ShapeMismatch(const std::string& msg) : MoffleError("ShapeMismatch: " + msg) {}
};

struct NonStochasticRow : MoffleError {
  explicit NonStochasticRow(const std::string& msg) : MoffleError("NonStochasticRow: " + msg) {}
};

struct PolicyHorizonMismatch : MoffleError {
  explicit PolicyHorizonMismatch(const std::string& msg)
      : MoffleError("PolicyHorizonMismatch: " + msg) {}
};

struct RewardOutOfRange : MoffleError {
  explicit RewardOutOfRange(const std::string& msg) : MoffleError("RewardOutOfRange: " + msg) {}
};

struct LevelMismatch : MoffleError {
  explicit LevelMismatch(const std::string& msg) : MoffleError("LevelMismatch: " + msg) {}
};

struct DimMismatch : MoffleError {
  explicit DimMismatch(const std::string& msg) : MoffleError("DimMismatch: " + msg) {}
};

struct EmptyClass : MoffleError {
  explicit EmptyClass(const std::string& msg) : MoffleError("EmptyClass: " + msg) {}
};

struct MissingLevelData : MoffleError {
  explicit MissingLevelData(const std::string& msg) : MoffleError("MissingLevelData: " + msg) {}
};

struct CoordOutOfRange : MoffleError {
  explicit CoordOutOfRange(const std::string& msg) : MoffleError("CoordOutOfRange: " + msg) {}
};

struct GenerationFailed : MoffleError {
  explicit GenerationFailed(const std::string& msg) : MoffleError("GenerationFailed: " + msg) {}
};

struct InvalidArgument : MoffleError {
  explicit InvalidArgument(const std::string& msg) : MoffleError("InvalidArgument: " + msg) {}
};

struct IoError : MoffleError {
  explicit IoError(const std::string& msg) : MoffleError("IoError: " + msg) {}
};

}  // namespace moffle
