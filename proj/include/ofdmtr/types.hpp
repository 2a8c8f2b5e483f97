#ifndef OFDMTR_TYPES_HPP
#define OFDMTR_TYPES_HPP

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace ofdmtr {

using Cplx = std::complex<double>;
using CplxVec = std::vector<Cplx>;

/// Shape or index mismatch between related objects.
class DimensionError : public std::invalid_argument {
 public:
  explicit DimensionError(const std::string& msg) : std::invalid_argument(msg) {}
};

/// Metric requested on input where it is undefined (e.g. an all-zero signal).
class UndefinedMetricError : public std::domain_error {
 public:
  explicit UndefinedMetricError(const std::string& msg) : std::domain_error(msg) {}
};

/// Invalid or inconsistent experiment configuration.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace ofdmtr

#endif
