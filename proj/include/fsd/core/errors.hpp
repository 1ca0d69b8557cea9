#pragma once

#include <stdexcept>
#include <string>

namespace fsd {

// An innovation covariance could not be inverted; carries its condition estimate.
class SingularInnovationError : public std::runtime_error {
 public:
  explicit SingularInnovationError(double condition)
      : std::runtime_error("singular innovation covariance (condition " + std::to_string(condition) + ")"),
        condition_(condition) {}
  double condition() const { return condition_; }

 private:
  double condition_;
};

}  // namespace fsd
