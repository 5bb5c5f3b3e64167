// common.hpp - shared aliases and error types for the dflow library.
#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace dflow {

using Vec3 = Eigen::Vector3d;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

// Error hierarchy. Everything user-facing derives from Error so the CLI can
// map failures onto its exit codes in one place.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidArgumentError : Error {
  using Error::Error;
};

struct UnsupportedElementError : Error {
  using Error::Error;
};

struct DegenerateElementError : Error {
  using Error::Error;
};

struct RegionLookupError : Error {
  using Error::Error;
};

struct ConstitutiveViolationError : Error {
  using Error::Error;
};

// Boundary-condition problems: two prescriptions fighting over one DOF, or a
// pressure field with no datum anywhere.
struct ConflictError : Error {
  using Error::Error;
};

struct MissingDatumError : Error {
  using Error::Error;
};

// Gamma_v = boundary with net prescribed inflow != 0 (ill-posed).
struct CompatibilityError : Error {
  using Error::Error;
};

struct LinearSolverError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

}  // namespace dflow
