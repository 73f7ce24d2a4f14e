#pragma once

// Locally convex closed curves in tangent-angle parametrization: support
// function p(theta), radius of curvature rho = p + p'', and the plane curve
// X(theta) they determine.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "curveflow/errors.hpp"
#include "curveflow/spectral.hpp"

namespace curveflow {

/// One term a*sin(k*theta/m) + b*cos(k*theta/m) of a trigonometric support function.
struct TrigHarmonic {
  int k = 1;
  double a = 0.0;
  double b = 0.0;

  bool operator==(const TrigHarmonic&) const = default;
};

/// p(theta) = constant + sum_k a_k sin(k theta/m) + b_k cos(k theta/m).
struct TrigSupportSpec {
  double constant = 1.0;
  std::vector<TrigHarmonic> harmonics;

  int max_numerator() const {
    int out = 0;
    for (const auto& h : harmonics) out = std::max(out, h.k);
    return out;
  }

  bool operator==(const TrigSupportSpec&) const = default;
};

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Point2 operator*(double s, Point2 a) { return {s * a.x, s * a.y}; }
  bool operator==(const Point2&) const = default;
};

inline double norm(Point2 p) { return std::hypot(p.x, p.y); }

/// Sampled support function on the m-fold circle.
class SupportProfile {
public:
  SupportProfile(TangentAngleGrid grid, std::vector<double> values)
      : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.size()) {
      throw GridMismatchError("support profile: expected " + std::to_string(grid_.n()) +
                              " samples, got " + std::to_string(values_.size()));
    }
    for (double v : values_) {
      if (!std::isfinite(v)) throw ValidationError("support profile: non-finite sample");
    }
  }

  const TangentAngleGrid& grid() const noexcept { return grid_; }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t j) const { return values_[j]; }

private:
  TangentAngleGrid grid_;
  std::vector<double> values_;
};

/// Sampled radius of curvature; strictly positive at every node.
class RadiusProfile {
public:
  RadiusProfile(TangentAngleGrid grid, std::vector<double> values)
      : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.size()) {
      throw GridMismatchError("radius profile: expected " + std::to_string(grid_.n()) +
                              " samples, got " + std::to_string(values_.size()));
    }
    auto it = std::min_element(values_.begin(), values_.end());
    for (double v : values_) {
      if (!std::isfinite(v)) throw ValidationError("radius profile: non-finite sample");
    }
    if (*it <= 0.0) {
      const auto j = static_cast<std::size_t>(it - values_.begin());
      std::ostringstream msg;
      msg << "curve is not locally convex: radius of curvature " << *it << " at theta="
          << grid_.node(j);
      throw NotLocallyConvexError(msg.str(), *it);
    }
  }

  const TangentAngleGrid& grid() const noexcept { return grid_; }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t j) const { return values_[j]; }
  double min() const { return *std::min_element(values_.begin(), values_.end()); }
  double max() const { return *std::max_element(values_.begin(), values_.end()); }

private:
  TangentAngleGrid grid_;
  std::vector<double> values_;
};

/// Curve points X(theta_j).
class PlaneCurve {
public:
  PlaneCurve(TangentAngleGrid grid, std::vector<Point2> points)
      : grid_(grid), points_(std::move(points)) {
    if (points_.size() != grid_.size()) {
      throw GridMismatchError("plane curve: point count does not match grid");
    }
  }

  const TangentAngleGrid& grid() const noexcept { return grid_; }
  std::span<const Point2> points() const noexcept { return points_; }
  const Point2& operator[](std::size_t j) const { return points_[j]; }

private:
  TangentAngleGrid grid_;
  std::vector<Point2> points_;
};

struct GeometricSummary {
  double length = 0.0;
  double elastic_energy = 0.0;
  double rho_min = 0.0;
  double rho_max = 0.0;
  int winding = 0;
  double closure_defect = 0.0;
};

inline constexpr double kDefaultClosureTolerance = 1e-8;

// --- conversions -----------------------------------------------------------

inline RadiusProfile radius_from_support(const SupportProfile& p,
                                         DerivativeMethod method = DerivativeMethod::spectral) {
  auto p_tt = derivative(p.grid(), p.values(), 2, method);
  for (std::size_t j = 0; j < p_tt.size(); ++j) p_tt[j] += p[j];
  return RadiusProfile(p.grid(), std::move(p_tt));
}

/// Samples a trigonometric support function; rejects specs that are not
/// locally convex or are under-resolved (n must exceed 4 * max k).
inline SupportProfile eval_trig_support(const TrigSupportSpec& spec, const TangentAngleGrid& grid) {
  if (const int kmax = spec.max_numerator(); grid.n() <= 4 * kmax) {
    throw ValidationError("grid: n=" + std::to_string(grid.n()) + " must exceed 4*max k = " +
                          std::to_string(4 * kmax));
  }
  for (const auto& h : spec.harmonics) {
    if (h.k < 1) throw ValidationError("support spec: harmonic numerator k must be >= 1");
  }
  std::vector<double> values(grid.size());
  for (std::size_t j = 0; j < values.size(); ++j) {
    const double theta = grid.node(j);
    double v = spec.constant;
    for (const auto& h : spec.harmonics) {
      const double arg = h.k * theta / grid.m();
      v += h.a * std::sin(arg) + h.b * std::cos(arg);
    }
    values[j] = v;
  }
  SupportProfile p(grid, std::move(values));
  (void)radius_from_support(p);  // throws NotLocallyConvexError
  return p;
}

/// (integral rho cos, integral rho sin) over the m-fold circle.
inline Point2 closure_vector(const RadiusProfile& rho) {
  const auto& g = rho.grid();
  Point2 acc;
  for (std::size_t j = 0; j < g.size(); ++j) {
    const double theta = g.node(j);
    acc.x += rho[j] * std::cos(theta);
    acc.y += rho[j] * std::sin(theta);
  }
  return g.spacing() * acc;
}

inline double closure_defect(const RadiusProfile& rho) { return norm(closure_vector(rho)); }

/// Inverts p + p'' = rho mode by mode. The kernel modes (frequency 1, DFT
/// index m) encode translation; they come from `reference` or are zero.
inline SupportProfile support_from_radius(const RadiusProfile& rho,
                                          const std::optional<SupportProfile>& reference = {},
                                          double closure_tolerance = kDefaultClosureTolerance) {
  const auto& g = rho.grid();
  const auto m = static_cast<std::size_t>(g.m());
  if (2 * m >= g.size()) {
    throw ValidationError("support_from_radius: grid too coarse to resolve frequency-1 modes");
  }
  if (const double defect = closure_defect(rho); defect > closure_tolerance) {
    std::ostringstream msg;
    msg << "cannot invert radius profile: closure defect " << defect << " exceeds tolerance "
        << closure_tolerance;
    throw ClosureError(msg.str(), defect);
  }
  auto coeffs = rfft(rho.values());
  for (std::size_t q = 0; q < coeffs.size(); ++q) {
    if (q == m) continue;
    const double w = g.frequency(static_cast<int>(q));
    coeffs[q] /= (1.0 - w * w);
  }
  if (reference) {
    require_same_grid(g, reference->grid(), "support_from_radius");
    coeffs[m] = rfft(reference->values())[m];
  } else {
    coeffs[m] = 0.0;
  }
  return SupportProfile(g, irfft(coeffs, g.size()));
}

/// X(theta) = basepoint + integral_0^theta rho(phi) (cos phi, sin phi) dphi,
/// by spectral integration of the periodic part plus the exact mean drift.
inline PlaneCurve reconstruct_curve(const RadiusProfile& rho, Point2 basepoint = {}) {
  const auto& g = rho.grid();
  const std::size_t n = g.size();
  std::vector<Complex> integrand(n);
  for (std::size_t j = 0; j < n; ++j) integrand[j] = rho[j] * std::polar(1.0, g.node(j));
  auto coeffs = fft(integrand);
  const Complex mean = coeffs[0] / static_cast<double>(n);
  coeffs[0] = 0.0;
  coeffs[n / 2] = 0.0;
  for (std::size_t q = 1; q < n; ++q) {
    if (q == n / 2) continue;
    coeffs[q] /= Complex(0.0, g.frequency(signed_index(q, n)));
  }
  const auto antiderivative = ifft(coeffs);
  std::vector<Point2> points(n);
  for (std::size_t j = 0; j < n; ++j) {
    const Complex z = antiderivative[j] - antiderivative[0] + mean * g.node(j);
    points[j] = basepoint + Point2{z.real(), z.imag()};
  }
  return PlaneCurve(g, std::move(points));
}

/// X = p' T - p N with T = (cos, sin), N = (-sin, cos).
inline PlaneCurve curve_from_support(const SupportProfile& p,
                                     DerivativeMethod method = DerivativeMethod::spectral) {
  const auto& g = p.grid();
  const auto p_t = derivative(g, p.values(), 1, method);
  std::vector<Point2> points(g.size());
  for (std::size_t j = 0; j < g.size(); ++j) {
    const double c = std::cos(g.node(j));
    const double s = std::sin(g.node(j));
    points[j] = {p_t[j] * c + p[j] * s, p_t[j] * s - p[j] * c};
  }
  return PlaneCurve(g, std::move(points));
}

inline double length(const RadiusProfile& rho) { return integrate(rho.grid(), rho.values()); }

/// Elastic energy: integral of kappa^2 ds = integral of dtheta / rho.
inline double elastic_energy(const RadiusProfile& rho) {
  double sum = 0.0;
  for (double v : rho.values()) sum += 1.0 / v;
  return rho.grid().spacing() * sum;
}

inline GeometricSummary summarize(const RadiusProfile& rho) {
  return {length(rho), elastic_energy(rho), rho.min(), rho.max(), rho.grid().m(),
          closure_defect(rho)};
}

/// Tiles a one-fold profile m times over [0, 2*pi*m).
inline RadiusProfile mfold_cover(const RadiusProfile& rho_1fold, int m) {
  if (rho_1fold.grid().m() != 1) {
    throw ValidationError("mfold_cover: input profile must have winding number 1");
  }
  if (m < 1) throw ValidationError("mfold_cover: m must be >= 1");
  const std::size_t n1 = rho_1fold.grid().size();
  std::vector<double> values;
  values.reserve(n1 * static_cast<std::size_t>(m));
  for (int copy = 0; copy < m; ++copy) {
    values.insert(values.end(), rho_1fold.values().begin(), rho_1fold.values().end());
  }
  return RadiusProfile(TangentAngleGrid(m, rho_1fold.grid().n() * m), std::move(values));
}

struct RescaledProfile {
  RadiusProfile profile;
  double scale;
};

/// Scaling a curve by s scales rho by s and the elastic energy by 1/s.
inline RescaledProfile rescale_to_match_energy(const RadiusProfile& target, double desired_energy) {
  if (!(desired_energy > 0.0) || !std::isfinite(desired_energy)) {
    throw ValidationError("rescale_to_match_energy: desired energy must be positive");
  }
  const double scale = elastic_energy(target) / desired_energy;
  std::vector<double> values(target.values().begin(), target.values().end());
  for (double& v : values) v *= scale;
  return {RadiusProfile(target.grid(), std::move(values)), scale};
}

/// Total turning of a closed polyline divided by 2*pi, rounded.
inline int winding_number(std::span<const Point2> points) {
  const std::size_t n = points.size();
  if (n < 3) throw InvalidPolylineError("winding_number: need at least 3 points");
  std::vector<Point2> edges(n);
  double longest = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    edges[i] = points[(i + 1) % n] - points[i];
    longest = std::max(longest, norm(edges[i]));
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (norm(edges[i]) <= 1e-14 * longest || longest == 0.0) {
      throw InvalidPolylineError("winding_number: degenerate edge at index " + std::to_string(i));
    }
  }
  double turning = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 a = edges[i];
    const Point2 b = edges[(i + 1) % n];
    turning += std::atan2(a.x * b.y - a.y * b.x, a.x * b.x + a.y * b.y);
  }
  return static_cast<int>(std::lround(turning / kTwoPi));
}

inline int winding_number(const PlaneCurve& curve) { return winding_number(curve.points()); }

}  // namespace curveflow
