#pragma once

#include <stdexcept>
#include <string>

namespace nexus {

// Base class for all library errors so callers can catch everything at once.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Geometry.
struct DegenerateBaseline : Error {
  using Error::Error;
};
struct DegenerateLine : Error {
  using Error::Error;
};
struct PointAtCameraPlane : Error {
  using Error::Error;
};
struct NonPositiveDepth : Error {
  using Error::Error;
};
struct InvalidCamera : Error {
  using Error::Error;
};

// Flow and grids.
struct OutOfBoundsPixel : Error {
  using Error::Error;
};
struct DimensionMismatch : Error {
  using Error::Error;
};

// File formats.
struct BadMagic : Error {
  using Error::Error;
};
struct TruncatedStream : Error {
  using Error::Error;
};
struct NonFiniteDimensions : Error {
  using Error::Error;
};
struct IoFailure : Error {
  using Error::Error;
};

// Triangulation and blending.
struct NumericBlowup : Error {
  using Error::Error;
};
struct DegenerateGeometry : Error {
  using Error::Error;
};
struct NoCandidates : Error {
  using Error::Error;
};

// Scene level.
struct MissingFlow : Error {
  using Error::Error;
};
struct InconsistentScene : Error {
  using Error::Error;
};
struct BadPreset : Error {
  using Error::Error;
};

// Evaluation.
struct NoOverlap : Error {
  using Error::Error;
};
struct EmptyCloud : Error {
  using Error::Error;
};

}  // namespace nexus
