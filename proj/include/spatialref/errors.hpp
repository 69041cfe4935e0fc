#pragma once

#include <stdexcept>
#include <string>

namespace spatialref
{

/// Base class for every error raised by the library.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Vector or matrix sizes that do not agree.
class DimensionError : public Error
{
public:
  using Error::Error;
};

/// Invalid model, manifold or problem description (including parse errors).
class ConfigError : public Error
{
public:
  using Error::Error;
};

/// The human carries (almost) all of the robot weight; the static ZMP is undefined.
class UnsupportedLift : public Error
{
public:
  using Error::Error;
};

/// Vertical contact force vanished; the dynamic ZMP is undefined.
class ContactLoss : public Error
{
public:
  using Error::Error;
};

/// Manifold was planned for a different robot model.
class FingerprintMismatch : public Error
{
public:
  using Error::Error;
};

} // namespace spatialref
