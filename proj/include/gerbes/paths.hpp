#pragma once

// Parametrized paths and surfaces with smooth-concatenation discipline:
// every constructor collars its parametrization with the smooth step, so
// paths sit still near their endpoints and composites stay smooth. Collared
// evaluations are well defined for parameters slightly outside [0, 1], which
// lets reparametrizations overshoot harmlessly.

#include <memory>

#include "gerbes/geometry.hpp"

namespace gerbes {

struct Path {
  std::function<Vec(double)> eval;

  Vec operator()(double t) const { return eval(t); }
  Vec start() const { return eval(0.0); }
  Vec end() const { return eval(1.0); }
  bool closed(double tol = 1e-9) const { return dist(start(), end()) < tol; }
};

inline Path constant_path(const Vec& p) {
  return {[p](double) { return p; }};
}

inline Path reverse(const Path& p) {
  auto f = p.eval;
  return {[f](double t) { return f(1.0 - t); }};
}

inline Path reparam(const Path& p, std::function<double(double)> kappa) {
  auto f = p.eval;
  return {[f, kappa](double t) { return f(kappa(t)); }};
}

// Collared restriction to [x0, x1] (reversed when x0 > x1); same trace.
inline Path sub_path(const Path& p, double x0, double x1) {
  auto f = p.eval;
  return {[f, x0, x1](double t) { return f(x0 + beta_step(t) * (x1 - x0)); }};
}

inline Path concat(const Path& a, const Path& b) {
  if (dist(a.end(), b.start()) > 1e-9)
    throw std::runtime_error("concat: endpoint mismatch");
  auto fa = a.eval;
  auto fb = b.eval;
  return {[fa, fb](double t) { return t <= 0.5 ? fa(2.0 * t) : fb(2.0 * t - 1.0); }};
}

inline Path chain(std::vector<Path> ps) {
  if (ps.empty()) throw std::runtime_error("chain: empty");
  for (size_t i = 0; i + 1 < ps.size(); ++i)
    if (dist(ps[i].end(), ps[i + 1].start()) > 1e-9)
      throw std::runtime_error("chain: endpoint mismatch");
  auto shared = std::make_shared<std::vector<Path>>(std::move(ps));
  size_t n = shared->size();
  return {[shared, n](double t) {
    double x = std::clamp(t, 0.0, 1.0) * n;
    size_t i = std::min<size_t>(static_cast<size_t>(x), n - 1);
    return (*shared)[i].eval(x - i);
  }};
}

// Straight chart-coordinate segment, collared.
inline Path chart_segment(const Chart& ch, Vec u0, Vec u1) {
  auto fc = ch.from_coords;
  return {[fc, u0, u1](double t) { return fc(u0 + beta_step(t) * (u1 - u0)); }};
}

// Near-constant-speed reparametrization. Speed concentrated in a narrow
// parameter window defeats the grid labellers and quadrature downstream, so
// sweeps are assembled from evened building blocks. Arc length is tabulated
// and inverted with a monotone cubic, keeping the velocity continuous; flat
// runs of the input are skipped rather than preserved.
inline Path even_speed(const Path& p, int samples = 4096) {
  auto f = p.eval;
  std::vector<double> xs{0.0}, ys{0.0};
  {
    std::vector<double> acc(samples + 1, 0.0);
    Vec prev = f(0.0);
    for (int i = 1; i <= samples; ++i) {
      Vec cur = f(static_cast<double>(i) / samples);
      acc[i] = acc[i - 1] + dist(prev, cur);
      prev = cur;
    }
    if (acc[samples] < 1e-12) return p;
    for (int i = 1; i <= samples; ++i) {
      double x = acc[i] / acc[samples];
      if (x > xs.back() + 1e-9) {
        xs.push_back(x);
        ys.push_back(static_cast<double>(i) / samples);
      }
    }
    xs.back() = 1.0;
    ys.back() = 1.0;
  }
  size_t n = xs.size() - 1;
  std::vector<double> slope(n + 1);
  auto sec = [&](size_t i) { return (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]); };
  slope[0] = sec(0);
  slope[n] = sec(n - 1);
  for (size_t i = 1; i < n; ++i) {
    double dl = sec(i - 1), dr = sec(i);
    slope[i] = 2.0 * dl * dr / (dl + dr);  // harmonic mean keeps it monotone
  }
  auto tab = std::make_shared<std::array<std::vector<double>, 3>>(
      std::array<std::vector<double>, 3>{xs, ys, slope});
  return {[f, tab](double t) {
    const auto& [x, y, m] = *tab;
    if (t <= 0.0) return f(0.0);
    if (t >= 1.0) return f(1.0);
    size_t i = std::upper_bound(x.begin(), x.end(), t) - x.begin() - 1;
    i = std::min(i, x.size() - 2);
    double h = x[i + 1] - x[i];
    double u = (t - x[i]) / h;
    double u2 = u * u, u3 = u2 * u;
    double tau = y[i] * (2 * u3 - 3 * u2 + 1) + h * m[i] * (u3 - 2 * u2 + u) +
                 y[i + 1] * (3 * u2 - 2 * u3) + h * m[i + 1] * (u3 - u2);
    return f(tau);
  }};
}

// From the chart center straight out to y (which must lie in the chart).
inline Path radial_path(const Chart& ch, const Vec& y) {
  return chart_segment(ch, Vec::zero(ch.coord_dim), ch.to_coords(y));
}

// Canonical hub-to-y path of an overlap pair (see Atlas::OverlapInfo),
// evened because the crescent detours concentrate speed.
inline Path overlap_path(const Atlas& at, int a, int b, const Vec& y) {
  return even_speed({pair_curve(at, a, b, y)});
}

// --- surfaces ---------------------------------------------------------------

// Smooth map [0,1]^2 -> M. The first parameter sweeps stages, the second
// runs along slices. A closed surface here is one of: every slice closed
// with constant end stages (a tube capped by points), or the whole boundary
// collapsed to one point.
struct TwoPath {
  std::function<Vec(double, double)> eval;
  // Interior parameter values where the map is only piecewise smooth. Grid
  // builders seed their cut lines with these so no quadrature panel ever
  // straddles a kink.
  std::vector<double> seam_s, seam_t;
  Vec operator()(double s, double t) const { return eval(s, t); }
};

inline TwoPath constant_surface(const Vec& p) {
  return {[p](double, double) { return p; }};
}

// Stage sweep of a path family; the sweep parameter is collared, and the
// family is evaluated once per distinct collared stage value.
inline TwoPath sweep(std::function<Path(double)> family) {
  auto cache = std::make_shared<std::map<double, Path>>();
  return {[family, cache](double s, double t) {
    double ss = beta_step(s);
    auto it = cache->find(ss);
    if (it == cache->end()) it = cache->emplace(ss, family(ss)).first;
    return it->second.eval(t);
  }};
}

inline TwoPath reverse_sweep(const TwoPath& s) {
  auto f = s.eval;
  return {[f](double a, double t) { return f(1.0 - a, t); }};
}

inline TwoPath compose_sweep(const TwoPath& a, const TwoPath& b) {
  for (double t : {0.0, 0.37, 0.8, 1.0})
    if (dist(a.eval(1.0, t), b.eval(0.0, t)) > 1e-9)
      throw std::runtime_error("compose_sweep: stage mismatch");
  auto fa = a.eval;
  auto fb = b.eval;
  return {[fa, fb](double s, double t) {
    return s <= 0.5 ? fa(2.0 * s, t) : fb(2.0 * s - 1.0, t);
  }};
}

inline TwoPath chain_sweep(std::vector<TwoPath> ss) {
  if (ss.empty()) throw std::runtime_error("chain_sweep: empty");
  for (size_t i = 0; i + 1 < ss.size(); ++i)
    for (double t : {0.0, 0.37, 0.8, 1.0})
      if (dist(ss[i].eval(1.0, t), ss[i + 1].eval(0.0, t)) > 1e-9)
        throw std::runtime_error("chain_sweep: stage mismatch");
  auto shared = std::make_shared<std::vector<TwoPath>>(std::move(ss));
  size_t n = shared->size();
  return {[shared, n](double s, double t) {
    double x = std::clamp(s, 0.0, 1.0) * n;
    size_t i = std::min<size_t>(static_cast<size_t>(x), n - 1);
    return (*shared)[i].eval(x - i, t);
  }};
}

// Cone in chart coordinates from an apex over a base path: stage 0 is the
// constant apex, stage 1 the base.
inline TwoPath cone(const Chart& ch, Vec apex_coords, const Path& base) {
  auto fc = ch.from_coords;
  auto tc = ch.to_coords;
  auto f = base.eval;
  return {[fc, tc, f, apex_coords](double s, double t) {
    Vec u = tc(f(t));
    return fc(apex_coords + beta_step(s) * (u - apex_coords));
  }};
}

// Closed tube through a loop lying in both charts of a pair: cone up from
// the pair hub in chart a, then back down in chart b.
inline TwoPath double_cone(const Atlas& at, int a, int b, const Path& loop) {
  if (!loop.closed()) throw std::runtime_error("double_cone: open base");
  const Vec hub = at.pair_info(a, b).hub;
  TwoPath up = cone(at.charts[a], at.charts[a].to_coords(hub), loop);
  TwoPath down = cone(at.charts[b], at.charts[b].to_coords(hub), loop);
  return compose_sweep(up, reverse_sweep(down));
}

// Straight-line homotopy between two paths through one chart's coordinates;
// the chart ball is convex, so it stays in the chart when both paths do.
inline TwoPath straightline_homotopy(const Chart& ch, const Path& a, const Path& b) {
  auto fc = ch.from_coords;
  auto tc = ch.to_coords;
  auto fa = a.eval;
  auto fb = b.eval;
  return {[fc, tc, fa, fb](double s, double t) {
    Vec ua = tc(fa(t));
    Vec ub = tc(fb(t));
    return fc(ua + beta_step(s) * (ub - ua));
  }};
}

// --- deterministic deformations for invariance tests ------------------------

// Monotone endpoint-fixing time reparametrization; coefficient budget keeps
// the derivative at least 0.2.
inline std::function<double(double)> random_reparam(std::mt19937_64& rng, int modes = 3) {
  std::uniform_real_distribution<double> un(-1.0, 1.0);
  std::vector<double> a(modes);
  double budget = 0.8;
  for (int k = 0; k < modes; ++k) a[k] = un(rng) * budget / (modes * (k + 1) * pi);
  return [a](double t) {
    double s = t;
    for (size_t k = 0; k < a.size(); ++k) s += a[k] * std::sin((k + 1) * pi * t);
    return s;
  };
}

// Endpoint-fixing warp strong enough to fold back on itself (thin wandering):
// amplitude times mode frequency always exceeds one.
inline std::function<double(double)> random_backtrack_warp(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> un(0.3, 0.45);
  std::uniform_int_distribution<int> mode(2, 3);
  double amp = un(rng);
  int k = mode(rng);
  double phase = un(rng);
  return [amp, k, phase](double t) {
    return t + amp * std::sin(k * pi * t) * std::cos(pi * phase * t);
  };
}

// Square deformation homotopic to the identity: independent monotone warps
// of stage and slice plus a shear vanishing on the whole boundary, so glued
// slice ends stay glued and constant end stages stay constant.
inline std::function<std::pair<double, double>(double, double)> random_square_warp(
    std::mt19937_64& rng) {
  auto k1 = random_reparam(rng);
  auto k2 = random_reparam(rng);
  std::uniform_real_distribution<double> un(-0.25, 0.25);
  double c = un(rng);
  return [k1, k2, c](double s, double t) {
    double shear = c * std::sin(pi * s) * std::sin(pi * t);
    return std::make_pair(k1(s) + shear, k2(t));
  };
}

inline TwoPath warp_surface(const TwoPath& s,
                            std::function<std::pair<double, double>(double, double)> w) {
  auto f = s.eval;
  return {[f, w](double a, double b) {
    auto [x, y] = w(a, b);
    return f(x, y);
  }};
}

}  // namespace gerbes
