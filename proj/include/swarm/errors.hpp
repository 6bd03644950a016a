// Exception hierarchy shared by all toolkit modules. The CLI maps these to
// process exit codes (input -> 2, numerical -> 3, certification -> 4).

#pragma once

#include <stdexcept>
#include <string>

namespace swarm {

// Bad user input: malformed config, shape mismatch, invalid parameter.
class InputError : public std::runtime_error {
 public:
  explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

// Operation called on the wrong coupling variant or model kind.
class UsageError : public InputError {
 public:
  explicit UsageError(const std::string& what) : InputError(what) {}
};

// Coupling matrix has an eigenvalue below the negative tolerance.
class NotPsdError : public InputError {
 public:
  explicit NotPsdError(const std::string& what) : InputError(what) {}
};

class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite state or right-hand side during integration.
class BlowUpError : public NumericalError {
 public:
  BlowUpError(const std::string& what, double t)
      : NumericalError(what + " at t=" + std::to_string(t)), time(t) {}
  double time;
};

// Adaptive step fell below h_min.
class StiffnessError : public NumericalError {
 public:
  StiffnessError(const std::string& what, double t)
      : NumericalError(what + " at t=" + std::to_string(t)), time(t) {}
  double time;
};

// Matrix factorization / inversion failed (singular or ill-conditioned).
class DecompositionError : public NumericalError {
 public:
  explicit DecompositionError(const std::string& what) : NumericalError(what) {}
};

// Parameter search or decrease verification could not produce a certificate.
class CertificationError : public std::runtime_error {
 public:
  explicit CertificationError(const std::string& what) : std::runtime_error(what) {}
};

// Lyapunov derivative requested on the nonsmooth set |x_k| = a.
class NonsmoothPointError : public std::runtime_error {
 public:
  explicit NonsmoothPointError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace swarm
