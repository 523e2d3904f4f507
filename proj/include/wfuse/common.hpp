#pragma once

#include <stdexcept>
#include <string>

namespace wfuse {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kSchemaVersion = 1;

// Tolerance used by normalization / exactness checks throughout the library.
inline constexpr double kAmplitudeTol = 1e-12;

/// A state (or product of states) would need more than two total excitations.
struct truncation_error : std::domain_error {
  using std::domain_error::domain_error;
};

/// Witness certification was requested outside the k > 2N/3 regime the
/// two-block reduction is derived for.
struct unsupported_regime : std::domain_error {
  using std::domain_error::domain_error;
};

/// The parameter lattice contained no valid witness at the given step.
struct scan_too_coarse : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace wfuse
