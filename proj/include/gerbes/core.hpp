#pragma once

// Small shared kernel: fixed-capacity vectors, raw-vs-reduced circle angles,
// the smooth step used for collars and profiles, low-discrepancy samplers,
// and Gauss-Legendre rules.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace gerbes {

inline constexpr double pi = std::numbers::pi;
inline constexpr double tau = 2.0 * std::numbers::pi;

using Complexd = std::complex<double>;

// Representative in (-pi, pi] up to the measure-zero boundary tie, where the
// sign is unspecified. Comparisons always go through circle_dist, which is
// insensitive to that tie.
inline double reduce_angle(double a) { return std::remainder(a, tau); }

inline double circle_dist(double a, double b) {
  return std::abs(std::remainder(a - b, tau));
}

// Accumulated U(1) angle. `raw` can drift by multiples of 2*pi depending on
// how a value was assembled, so equality of phases is circle_dist on reduced
// values, never equality of raw accumulators.
struct Phase {
  double raw = 0.0;

  Phase& operator*=(Phase o) {
    raw += o.raw;
    return *this;
  }
  friend Phase operator*(Phase a, Phase b) { return a *= b; }
  Phase inverse() const { return {-raw}; }
  double reduced() const { return reduce_angle(raw); }
  Complexd unit() const { return std::polar(1.0, raw); }
};

inline double phase_dist(Phase a, Phase b) { return circle_dist(a.raw, b.raw); }

// Dense vector of dimension <= 4 (ambient points, chart coordinates,
// tangent directions). Fixed capacity keeps hot paths allocation-free.
struct Vec {
  std::array<double, 4> x{0.0, 0.0, 0.0, 0.0};
  int n = 0;

  Vec() = default;
  Vec(std::initializer_list<double> v) {
    if (v.size() > 4) throw std::runtime_error("Vec: dimension > 4");
    n = static_cast<int>(v.size());
    int i = 0;
    for (double e : v) x[i++] = e;
  }
  static Vec zero(int dim) {
    Vec v;
    v.n = dim;
    return v;
  }

  double& operator[](int i) { return x[i]; }
  double operator[](int i) const { return x[i]; }

  Vec& operator+=(const Vec& o) {
    for (int i = 0; i < n; ++i) x[i] += o.x[i];
    return *this;
  }
  Vec& operator-=(const Vec& o) {
    for (int i = 0; i < n; ++i) x[i] -= o.x[i];
    return *this;
  }
  Vec& operator*=(double s) {
    for (int i = 0; i < n; ++i) x[i] *= s;
    return *this;
  }
  friend Vec operator+(Vec a, const Vec& b) { return a += b; }
  friend Vec operator-(Vec a, const Vec& b) { return a -= b; }
  friend Vec operator*(double s, Vec a) { return a *= s; }
  friend Vec operator*(Vec a, double s) { return a *= s; }
  Vec operator-() const {
    Vec v = *this;
    for (int i = 0; i < n; ++i) v.x[i] = -v.x[i];
    return v;
  }
};

inline double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (int i = 0; i < a.n; ++i) s += a.x[i] * b.x[i];
  return s;
}
inline double norm(const Vec& a) { return std::sqrt(dot(a, a)); }
inline double dist(const Vec& a, const Vec& b) { return norm(a - b); }
inline Vec normalized(const Vec& a) {
  double r = norm(a);
  if (r == 0.0) throw std::runtime_error("normalized: zero vector");
  return (1.0 / r) * a;
}
inline Vec cross3(const Vec& a, const Vec& b) {
  Vec c = Vec::zero(3);
  c[0] = a[1] * b[2] - a[2] * b[1];
  c[1] = a[2] * b[0] - a[0] * b[2];
  c[2] = a[0] * b[1] - a[1] * b[0];
  return c;
}

namespace detail {
inline double exp_bump(double x) { return x > 0.0 ? std::exp(-1.0 / x) : 0.0; }
inline double exp_bump_prime(double x) {
  return x > 0.0 ? std::exp(-1.0 / x) / (x * x) : 0.0;
}
}  // namespace detail

// C-infinity step: 0 on (-inf, 1/3], 1 on [2/3, inf), strictly increasing in
// between, with beta_step(t) + beta_step(1 - t) = 1 and beta_step(1/2) = 1/2.
// Every collar, profile, and reparametrization in the library is built from
// this one function so smoothness arguments localize here.
inline double beta_step(double t) {
  double u = 3.0 * t - 1.0;
  double a = detail::exp_bump(u);
  double b = detail::exp_bump(1.0 - u);
  return a / (a + b);
}

inline double beta_step_prime(double t) {
  double u = 3.0 * t - 1.0;
  double a = detail::exp_bump(u);
  double b = detail::exp_bump(1.0 - u);
  double ap = detail::exp_bump_prime(u);
  double bp = detail::exp_bump_prime(1.0 - u);
  double s = a + b;
  return 3.0 * (ap * b + a * bp) / (s * s);
}

// Radial chart profile: 1 for x <= 0.85, 0 for x >= 0.95. The supports
// {x < 0.95} of the shipped atlases still cover their manifolds, which the
// partition-of-unity constructions rely on.
inline double chart_profile(double x) {
  return 1.0 - beta_step((x - 0.75) / 0.3);
}

// Halton radical inverse; i >= 1 gives the usual sequence (1/2, 1/4, 3/4, ...).
inline double halton(std::uint64_t i, std::uint64_t base) {
  double f = 1.0, r = 0.0;
  while (i > 0) {
    f /= static_cast<double>(base);
    r += f * static_cast<double>(i % base);
    i /= base;
  }
  return r;
}

inline std::mt19937_64 make_rng(std::uint64_t seed) {
  return std::mt19937_64{seed};
}

// Gauss-Legendre rule on [-1, 1]; nodes ascending. Cached per order.
struct GLRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

inline const GLRule& gl_rule(int order) {
  static std::map<int, GLRule> cache;
  auto it = cache.find(order);
  if (it != cache.end()) return it->second;
  if (order < 1 || order > 64) throw std::runtime_error("gl_rule: bad order");
  GLRule r;
  r.nodes.resize(order);
  r.weights.resize(order);
  int m = (order + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double x = std::cos(pi * (i + 0.75) / (order + 0.5));
    double pp = 0.0;
    for (int it2 = 0; it2 < 100; ++it2) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < order; ++j) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
      }
      pp = order * (x * p0 - p1) / (x * x - 1.0);
      double dx = p0 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    r.nodes[i] = -x;
    r.nodes[order - 1 - i] = x;
    double w = 2.0 / ((1.0 - x * x) * pp * pp);
    r.weights[i] = w;
    r.weights[order - 1 - i] = w;
  }
  return cache.emplace(order, std::move(r)).first->second;
}

// Tuning knobs shared by holonomy and reconstruction. `analytic()` is the
// default used by the checks; `fast_oracle()` trades accuracy for speed when
// an oracle is queried thousands of times inside reconstruction.
struct Numerics {
  int quad_order = 8;
  int panels_per_unit = 16;
  double fd_step = 1e-5;
  // Cells must probe this deep inside a chart to take its label; the slack
  // absorbs whatever image motion hides between probe points.
  double lebesgue_margin = 0.90;
  int max_grid_depth = 14;
  double phase_guard = pi / 4.0;

  static Numerics analytic() { return Numerics{}; }
  static Numerics fast_oracle() {
    Numerics n;
    n.quad_order = 4;
    n.panels_per_unit = 4;
    n.lebesgue_margin = 0.9;
    return n;
  }
};

}  // namespace gerbes
