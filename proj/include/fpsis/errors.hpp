#pragma once

#include <stdexcept>
#include <string>

namespace fpsis {

/// Invalid graph data or a generator that could not realize its request.
class GraphError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical kernel left its domain (iterate escaped [0,1], singular
/// innovation covariance, solver did not converge, ...).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fpsis
