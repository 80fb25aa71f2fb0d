#pragma once

#include <stdexcept>
#include <string>

namespace saf {

/// Base class for all toolkit errors.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A physical or structural invariant was violated (non-zero-sum tern,
/// duty outside [0,1], spectrum with duplicate orders, ...).
class ConstraintError : public Error {
  public:
    using Error::Error;
};

/// A caller-supplied input is unusable (empty trajectory, inconsistent
/// derivative samples, non-integer analysis window, malformed CSV).
class InputError : public Error {
  public:
    using Error::Error;
};

/// Scenario/sizing configuration file problems, with key and line context.
class ConfigError : public Error {
  public:
    using Error::Error;
};

/// Controller gain synthesis could not produce a valid result.
class SynthesisError : public Error {
  public:
    using Error::Error;
};

/// A design inequality cannot be met (phi0 discriminant, voltage window).
class InfeasibleError : public Error {
  public:
    using Error::Error;
};

/// DC-link voltage fell below the floor: the division law u = u_bar / v
/// is no longer trustworthy and the run must stop.
class ControllabilityLossError : public Error {
  public:
    using Error::Error;
};

} // namespace saf
