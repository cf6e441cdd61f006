#pragma once

#include <stdexcept>
#include <string>

namespace locogan {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NonPositiveOutput : public Error {
 public:
  NonPositiveOutput(int layer, long long size)
      : Error("layer " + std::to_string(layer) + " produces non-positive size " +
              std::to_string(size)),
        layer_(layer) {}
  /// One-based layer number, as in the layer tables.
  int layer() const noexcept { return layer_; }

 private:
  int layer_;
};

#define LOCOGAN_ERROR(Name)          \
  class Name : public Error {        \
   public:                           \
    using Error::Error;              \
  }

LOCOGAN_ERROR(MarginTooSmall);
LOCOGAN_ERROR(PeriodMismatch);
LOCOGAN_ERROR(RegionOutOfBounds);
LOCOGAN_ERROR(ConfigMismatch);
LOCOGAN_ERROR(ShapeMismatch);
LOCOGAN_ERROR(DegenerateMatrix);
LOCOGAN_ERROR(DomainError);
LOCOGAN_ERROR(EmptyDataset);
LOCOGAN_ERROR(CropLargerThanImage);
LOCOGAN_ERROR(EmptySet);
LOCOGAN_ERROR(CheckpointError);
LOCOGAN_ERROR(IoError);
LOCOGAN_ERROR(ConfigError);

#undef LOCOGAN_ERROR

}  // namespace locogan
