#ifndef POTLAB_ERROR_HPP_
#define POTLAB_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace potlab {

// Invalid input: malformed shapes, bad configuration, violated preconditions.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A consistency check failed inside the library. Indicates a bug, not bad
// input.
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// The behavior distribution misses mass the reference policy needs.
class UncoveredError : public Error {
 public:
  UncoveredError(const std::string& what, int player, int context, int joint)
      : Error(what), player(player), context(context), joint(joint) {}
  int player;
  int context;
  int joint;
};

// An iterative solver stopped before reaching its tolerance.
class NonConvergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace potlab

#endif  // POTLAB_ERROR_HPP_
