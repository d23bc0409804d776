#pragma once

// Domain types shared by every lightstack module.
//
// Units: the pump wavelength is 1 (so k = 2*pi), epsilon_0 = 1, and field
// amplitudes are measured relative to the pump. Intensities are |E|^2 in
// these units; forces and energies are per unit transverse area.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace lightstack {

using cplx = std::complex<double>;

inline constexpr double kWavelength = 1.0;
inline constexpr double kWavenumber = 2.0 * std::numbers::pi / kWavelength;

/// Closest two scatterers may sit before they are treated as coincident.
inline constexpr double kMinimumGap = 1e-9;

enum class ErrorCode {
  EmptyStack,
  NoPump,
  NonFiniteValue,
  ZeroPolarizability,
  ComplexPolarizability,
  OverlappingScatterers,
  IndexOutOfRange,
  StepCausesCrossing,
  NotIdenticalClouds,
  InvalidArgument,
  InvalidConfig,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyStack: return "EmptyStack";
    case ErrorCode::NoPump: return "NoPump";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::ZeroPolarizability: return "ZeroPolarizability";
    case ErrorCode::ComplexPolarizability: return "ComplexPolarizability";
    case ErrorCode::OverlappingScatterers: return "OverlappingScatterers";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::StepCausesCrossing: return "StepCausesCrossing";
    case ErrorCode::NotIdenticalClouds: return "NotIdenticalClouds";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + " " + detail), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// One infinitely thin cloud or mirror: position and real polarizability density.
struct Scatterer {
  double position = 0.0;
  double lambda_param = 0.0;

  friend bool operator==(const Scatterer&, const Scatterer&) = default;
};

/// Incoming plane waves. `left` travels rightward and is referenced at the
/// leftmost scatterer; `right` travels leftward and is referenced at the
/// rightmost scatterer.
struct Pump {
  cplx left{1.0, 0.0};
  cplx right{0.0, 0.0};

  static Pump left_only(cplx amplitude = 1.0) { return {amplitude, 0.0}; }
  static Pump symmetric(cplx amplitude = 1.0) { return {amplitude, amplitude}; }

  /// Equal-intensity beams with relative phase (-1)^(n-1). With the
  /// outer-scatterer phase reference this is the drive under which a regular
  /// chain of n identical clouds at the free-space lattice constant is force free.
  static Pump phase_matched(std::size_t n, cplx amplitude = 1.0) {
    return {amplitude, (n % 2 == 1) ? amplitude : -amplitude};
  }

  friend bool operator==(const Pump&, const Pump&) = default;
};

struct Stack {
  std::vector<Scatterer> scatterers;
  Pump pump;

  std::size_t size() const noexcept { return scatterers.size(); }
  double position(std::size_t j) const { return scatterers[j].position; }

  friend bool operator==(const Stack&, const Stack&) = default;
};

/// Returns a sorted copy of `stack` or throws lightstack::Error naming the
/// first offending field.
inline Stack validate_stack(Stack stack) {
  if (stack.scatterers.empty()) throw Error(ErrorCode::EmptyStack, "stack has no scatterers");
  auto finite = [](cplx c) { return std::isfinite(c.real()) && std::isfinite(c.imag()); };
  if (!finite(stack.pump.left)) throw Error(ErrorCode::NonFiniteValue, "at pump.left");
  if (!finite(stack.pump.right)) throw Error(ErrorCode::NonFiniteValue, "at pump.right");
  if (stack.pump.left == cplx{} && stack.pump.right == cplx{})
    throw Error(ErrorCode::NoPump, "both pump amplitudes are zero");

  for (std::size_t j = 0; j < stack.size(); ++j) {
    const auto& s = stack.scatterers[j];
    if (!std::isfinite(s.position) || !std::isfinite(s.lambda_param))
      throw Error(ErrorCode::NonFiniteValue, "at index " + std::to_string(j));
    if (s.lambda_param == 0.0)
      throw Error(ErrorCode::ZeroPolarizability, "at index " + std::to_string(j));
  }

  std::stable_sort(stack.scatterers.begin(), stack.scatterers.end(),
                   [](const Scatterer& a, const Scatterer& b) { return a.position < b.position; });

  for (std::size_t j = 1; j < stack.size(); ++j) {
    if (stack.position(j) - stack.position(j - 1) < kMinimumGap)
      throw Error(ErrorCode::OverlappingScatterers, "at index " + std::to_string(j));
  }
  return stack;
}

/// Regular chain of identical clouds starting at `first`.
inline Stack regular_lattice(std::size_t count, double spacing, double lambda_param, Pump pump,
                             double first = 0.0) {
  Stack stack;
  stack.pump = pump;
  stack.scatterers.reserve(count);
  for (std::size_t j = 0; j < count; ++j)
    stack.scatterers.push_back({first + spacing * static_cast<double>(j), lambda_param});
  return stack;
}

/// Consecutive gaps z_{j+1} - z_j.
inline std::vector<double> spacings(const Stack& stack) {
  std::vector<double> gaps;
  for (std::size_t j = 1; j < stack.size(); ++j) gaps.push_back(stack.position(j) - stack.position(j - 1));
  return gaps;
}

/// Complement of `frozen` in 0..n-1, ascending.
inline std::vector<std::size_t> mobile_indices(std::size_t n, std::span<const std::size_t> frozen) {
  std::vector<bool> is_frozen(n, false);
  for (std::size_t j : frozen) {
    if (j >= n) throw Error(ErrorCode::IndexOutOfRange, "frozen index " + std::to_string(j));
    is_frozen[j] = true;
  }
  std::vector<std::size_t> mobile;
  for (std::size_t j = 0; j < n; ++j)
    if (!is_frozen[j]) mobile.push_back(j);
  return mobile;
}

}  // namespace lightstack
