#pragma once

// Exact solution of the 1D Helmholtz equation with delta-function
// polarizability, using 2x2 transfer matrices referenced at each scatterer.
//
// Scatterer j (0-based) separates region j (left) from region j+1 (right).
// Region 0 is referenced at z_0; region j >= 1 is referenced at z_{j-1}.
// Inside region j:  E(z) = R_j exp(ik(z - ref_j)) + L_j exp(-ik(z - ref_j)).

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <vector>

#include "lightstack/core.hpp"

namespace lightstack {

/// Row-major [[a, b], [c, d]] acting on (rightward, leftward) column vectors.
template <class T>
struct BasicMat2 {
  using value_type = std::complex<T>;
  value_type a{1}, b{}, c{}, d{1};

  static BasicMat2 identity() { return {}; }

  value_type det() const { return a * d - b * c; }

  template <class U>
  BasicMat2<U> cast() const {
    using V = std::complex<U>;
    return {V(a), V(b), V(c), V(d)};
  }

  friend BasicMat2 operator*(const BasicMat2& x, const BasicMat2& y) {
    return {x.a * y.a + x.b * y.c, x.a * y.b + x.b * y.d,
            x.c * y.a + x.d * y.c, x.c * y.b + x.d * y.d};
  }
};

using Mat2 = BasicMat2<double>;
// Products of many large-norm factors lose about eps*|a||d| of unimodularity,
// so the full-stack product is accumulated and kept in extended precision.
using WideMat2 = BasicMat2<long double>;

struct WavePair {
  cplx rightward;
  cplx leftward;
};

inline WavePair operator*(const Mat2& m, const WavePair& v) {
  return {m.a * v.rightward + m.b * v.leftward, m.c * v.rightward + m.d * v.leftward};
}

struct BsCoefficients {
  cplx r;
  cplx t;
};

/// Reflection and transmission of a single delta scatterer:
/// r = i*Lambda/(1 - i*Lambda), t = 1/(1 - i*Lambda).
inline BsCoefficients bs_coefficients(double lambda_param) {
  const cplx denom{1.0, -lambda_param};
  return {cplx{0.0, lambda_param} / denom, 1.0 / denom};
}

/// Maps the field just left of a scatterer onto the field just right of it,
/// both referenced at the scatterer. Follows from continuity of E and the
/// derivative jump dE(z-) - dE(z+) = 2k*Lambda*E(z).
inline Mat2 bs_transfer_matrix(double lambda_param) {
  const cplx i_lambda{0.0, lambda_param};
  return {1.0 + i_lambda, i_lambda, -i_lambda, 1.0 - i_lambda};
}

/// Re-references a region's amplitudes from z to z + gap.
inline Mat2 propagation_matrix(double gap) {
  const cplx phase = std::polar(1.0, kWavenumber * gap);
  return {phase, 0.0, 0.0, std::conj(phase)};
}

struct RegionAmplitudes {
  cplx rightward;
  cplx leftward;
  double reference_point = 0.0;

  cplx field(double z) const {
    const cplx phase = std::polar(1.0, kWavenumber * (z - reference_point));
    return rightward * phase + leftward * std::conj(phase);
  }

  cplx gradient(double z) const {
    const cplx phase = std::polar(1.0, kWavenumber * (z - reference_point));
    return cplx{0.0, kWavenumber} * (rightward * phase - leftward * std::conj(phase));
  }

  /// Amplitudes re-expressed with phases referenced at `z`.
  WavePair at(double z) const {
    const cplx phase = std::polar(1.0, kWavenumber * (z - reference_point));
    return {rightward * phase, leftward * std::conj(phase)};
  }

  /// Largest |E|^2 reached anywhere in the region's standing-wave pattern.
  double peak_intensity() const {
    const double s = std::abs(rightward) + std::abs(leftward);
    return s * s;
  }
};

/// The four plane-wave amplitudes touching one scatterer, all referenced at
/// its position: A, B on the left (incoming, outgoing), C, D on the right
/// (outgoing, incoming).
struct ScattererPorts {
  cplx left_rightward;   // A
  cplx left_leftward;    // B
  cplx right_rightward;  // C
  cplx right_leftward;   // D
};

struct FieldSolution {
  Stack stack;
  std::vector<RegionAmplitudes> regions;  // size N + 1

  std::size_t scatterer_count() const noexcept { return stack.size(); }

  ScattererPorts ports(std::size_t j) const {
    const double z = stack.position(j);
    const WavePair left = regions[j].at(z);
    const WavePair right = regions[j + 1].at(z);
    return {left.rightward, left.leftward, right.rightward, right.leftward};
  }

  /// Index of the region containing z (points on a scatterer belong to the right side).
  std::size_t region_index(double z) const {
    const auto& s = stack.scatterers;
    const auto it = std::upper_bound(s.begin(), s.end(), z,
                                     [](double value, const Scatterer& sc) { return value < sc.position; });
    return static_cast<std::size_t>(it - s.begin());
  }
};

/// Product of all scatterer and gap matrices, mapping region 0 onto region N.
inline WideMat2 total_transfer_matrix(const Stack& stack) {
  using W = WideMat2::value_type;
  WideMat2 total;
  for (std::size_t j = 0; j < stack.size(); ++j) {
    if (j > 0) {
      const long double gap = static_cast<long double>(stack.position(j)) - stack.position(j - 1);
      const W phase = std::polar(1.0L, static_cast<long double>(kWavenumber) * gap);
      total = WideMat2{phase, W{}, W{}, std::conj(phase)} * total;
    }
    const W i_lambda{0.0L, static_cast<long double>(stack.scatterers[j].lambda_param)};
    total = WideMat2{1.0L + i_lambda, i_lambda, -i_lambda, 1.0L - i_lambda} * total;
  }
  return total;
}

/// Solves for every regional amplitude pair. `stack` must already be validated.
inline FieldSolution solve(const Stack& stack) {
  const WideMat2 total = total_transfer_matrix(stack);
  const cplx r0 = stack.pump.left;
  // Real Lambda keeps every matrix unimodular with |total.d| >= 1.
  const cplx l0{(WideMat2::value_type(stack.pump.right) - total.c * WideMat2::value_type(r0)) / total.d};

  FieldSolution sol;
  sol.stack = stack;
  sol.regions.reserve(stack.size() + 1);
  sol.regions.push_back({r0, l0, stack.position(0)});

  WavePair v{r0, l0};
  for (std::size_t j = 0; j < stack.size(); ++j) {
    if (j > 0) v = propagation_matrix(stack.position(j) - stack.position(j - 1)) * v;
    v = bs_transfer_matrix(stack.scatterers[j].lambda_param) * v;
    sol.regions.push_back({v.rightward, v.leftward, stack.position(j)});
  }
  return sol;
}

inline cplx field_at(const FieldSolution& sol, double z) {
  return sol.regions[sol.region_index(z)].field(z);
}

struct ProfileSample {
  double z;
  double intensity;
};

inline std::vector<ProfileSample> intensity_profile(const FieldSolution& sol, double z_min, double z_max,
                                                    std::size_t n_points) {
  if (!(z_min < z_max) || n_points < 2)
    throw Error(ErrorCode::InvalidArgument, "intensity_profile needs z_min < z_max and n_points >= 2");
  std::vector<ProfileSample> samples;
  samples.reserve(n_points);
  const double dz = (z_max - z_min) / static_cast<double>(n_points - 1);
  for (std::size_t i = 0; i < n_points; ++i) {
    const double z = (i + 1 == n_points) ? z_max : z_min + dz * static_cast<double>(i);
    samples.push_back({z, std::norm(field_at(sol, z))});
  }
  return samples;
}

/// Peak |E|^2 over the regions strictly between the first and last scatterer.
inline double peak_interior_intensity(const FieldSolution& sol) {
  double peak = 0.0;
  for (std::size_t j = 1; j + 1 < sol.regions.size(); ++j) peak = std::max(peak, sol.regions[j].peak_intensity());
  return peak;
}

struct Transmission {
  double transmitted;
  double reflected;
};

/// Power transmission and reflection for a unit wave incident from the left.
inline Transmission stack_transmission(const Stack& stack) {
  const WideMat2 m = total_transfer_matrix(stack);
  // With no wave entering from the right: l0 = -c/d, transmitted amplitude = 1/d.
  const auto t = static_cast<double>(1.0L / std::norm(m.d));
  const auto r = static_cast<double>(std::norm(m.c / m.d));
  return {t, r};
}

}  // namespace lightstack
