#pragma once

#include <stdexcept>
#include <string>

namespace logpot {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input violates an operation's precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// The equilibrium density does not vanish at the edge of the solve window.
class SupportTouchesWindow : public Error {
 public:
  SupportTouchesWindow(const std::string& what, double edge_density)
      : Error(what), edge_density_(edge_density) {}
  double edge_density() const noexcept { return edge_density_; }

 private:
  double edge_density_;
};

/// Declared growth constants of a potential fail on the probed range.
class NotConfining : public Error {
 public:
  NotConfining(const std::string& what, double location)
      : Error(what), location_(location) {}
  double location() const noexcept { return location_; }

 private:
  double location_;
};

/// Logarithmic potential evaluated on an atom.
class DivergentPotential : public Error {
 public:
  using Error::Error;
};

/// An iterative procedure ran out of its budget.
class ConvergenceFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace logpot
