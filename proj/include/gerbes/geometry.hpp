#pragma once

// Charts, atlases with stored verification samples, canonical in-overlap
// path families, and chart-local differential forms with a finite-difference
// exterior derivative.

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <utility>

#include "gerbes/core.hpp"

namespace gerbes {

// A coordinate chart on an embedded manifold. Coordinates fill the open unit
// ball: center_frac(p) < 1 iff p lies in the chart, and center_frac is the
// geodesic (resp. flat) distance fraction from the chart center. The
// coordinate radius |to_coords(p)| reaches 1 exactly where center_frac does,
// though the two radial scales differ in between. to_coords/from_coords stay
// valid well beyond the chart boundary, which finite differences rely on.
struct Chart {
  std::string name;
  int coord_dim = 0;
  int ambient_dim = 0;
  Vec center_ambient;
  double cap_radius = 0.0;  // geodesic radius for sphere caps, else 0
  std::function<double(const Vec&)> center_frac;
  std::function<Vec(const Vec&)> to_coords;
  std::function<Vec(const Vec&)> from_coords;

  bool contains(const Vec& p, double margin = 1.0) const {
    return center_frac(p) < margin;
  }
};

namespace detail {

// Rotation taking unit vector c to the last coordinate axis; identity on the
// orthogonal complement of their span.
struct AxisRotation {
  std::array<std::array<double, 4>, 4> m{};
  int n = 0;

  static AxisRotation to_last_axis(const Vec& c) {
    AxisRotation r;
    r.n = c.n;
    for (int i = 0; i < c.n; ++i)
      for (int j = 0; j < c.n; ++j) r.m[i][j] = (i == j) ? 1.0 : 0.0;
    int last = c.n - 1;
    double cn = c[last];
    Vec tang = c;
    tang[last] = 0.0;
    double t = norm(tang);
    if (t < 1e-14) {
      if (cn > 0.0) return r;  // already the north axis
      // Antipode: rotate by pi in the (e1, elast) plane.
      r.m[0][0] = -1.0;
      r.m[last][last] = -1.0;
      return r;
    }
    Vec a = (1.0 / t) * tang;
    double ct = cn, st = t;  // cos/sin of the angle from c to the axis
    for (int i = 0; i < c.n; ++i)
      for (int j = 0; j < c.n; ++j) {
        double en_i = (i == last) ? 1.0 : 0.0;
        double en_j = (j == last) ? 1.0 : 0.0;
        r.m[i][j] += (ct - 1.0) * (a[i] * a[j] + en_i * en_j) +
                     st * (en_i * a[j] - a[i] * en_j);
      }
    return r;
  }

  Vec apply(const Vec& v) const {
    Vec w = Vec::zero(n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) w[i] += m[i][j] * v[j];
    return w;
  }
  Vec apply_transpose(const Vec& v) const {
    Vec w = Vec::zero(n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) w[i] += m[j][i] * v[j];
    return w;
  }
};

}  // namespace detail

// Geodesic cap {angle(p, center) < rho0} on the unit sphere, with scaled
// stereographic coordinates: |u| = tan(angle/2)/tan(rho0/2), so the chart
// fills the open unit ball exactly. Stereographic images of circles are
// circles, which the overlap path machinery below exploits.
inline Chart cap_chart(std::string name, const Vec& center, double rho0) {
  Chart ch;
  ch.name = std::move(name);
  ch.ambient_dim = center.n;
  ch.coord_dim = center.n - 1;
  ch.center_ambient = center;
  ch.cap_radius = rho0;
  const detail::AxisRotation rot = detail::AxisRotation::to_last_axis(center);
  const double s = std::tan(rho0 / 2.0);
  const int m = ch.coord_dim;
  ch.center_frac = [center, rho0](const Vec& p) {
    double c = std::clamp(dot(p, center), -1.0, 1.0);
    return std::acos(c) / rho0;
  };
  ch.to_coords = [rot, s, m](const Vec& p) {
    Vec q = rot.apply(p);
    double denom = 1.0 + q[m];
    if (denom <= 1e-14) throw std::runtime_error("cap_chart: antipodal point");
    Vec u = Vec::zero(m);
    for (int i = 0; i < m; ++i) u[i] = q[i] / (denom * s);
    return u;
  };
  ch.from_coords = [rot, s, m](const Vec& u) {
    double r2 = 0.0;
    for (int i = 0; i < m; ++i) r2 += (s * u[i]) * (s * u[i]);
    Vec q = Vec::zero(m + 1);
    for (int i = 0; i < m; ++i) q[i] = 2.0 * s * u[i] / (1.0 + r2);
    q[m] = (1.0 - r2) / (1.0 + r2);
    return rot.apply_transpose(q);
  };
  return ch;
}

// Metric ball on the flat 2-torus, embedded in R^4 as
// (cos x, sin x, cos y, sin y). Radius must stay below pi so the periodic
// offsets are single-valued on the chart.
inline Chart torus_chart(std::string name, double x0, double y0, double radius) {
  Chart ch;
  ch.name = std::move(name);
  ch.ambient_dim = 4;
  ch.coord_dim = 2;
  ch.center_ambient = Vec{std::cos(x0), std::sin(x0), std::cos(y0), std::sin(y0)};
  auto offsets = [x0, y0](const Vec& p) {
    double x = std::atan2(p[1], p[0]);
    double y = std::atan2(p[3], p[2]);
    return Vec{std::remainder(x - x0, tau), std::remainder(y - y0, tau)};
  };
  ch.center_frac = [offsets, radius](const Vec& p) {
    return norm(offsets(p)) / radius;
  };
  ch.to_coords = [offsets, radius](const Vec& p) {
    return (1.0 / radius) * offsets(p);
  };
  ch.from_coords = [x0, y0, radius](const Vec& u) {
    double x = x0 + radius * u[0];
    double y = y0 + radius * u[1];
    return Vec{std::cos(x), std::sin(x), std::cos(y), std::sin(y)};
  };
  return ch;
}

// Interpolation between unit vectors inside their spanned plane, smooth in
// both endpoints while they are not antipodal.
inline Vec slerp(const Vec& a, const Vec& b, double s) {
  double c = std::clamp(dot(a, b), -1.0, 1.0);
  double th = std::acos(c);
  if (th > pi - 1e-7) throw std::runtime_error("slerp: antipodal endpoints");
  if (th < 1e-7) return normalized(a + s * (b - a));
  double sn = std::sin(th);
  return (std::sin((1.0 - s) * th) / sn) * a + (std::sin(s * th) / sn) * b;
}

// Chart cover of a manifold plus deterministic verification data: stored
// low-discrepancy samples of every nonempty chart overlap, and for each pair
// a designated hub together with a canonical in-overlap path family that
// reaches every stored sample (see pair_curve). reach_margin records how far
// inside both charts the family stays; consumers that need the paths assert
// it is positive.
struct Atlas {
  struct OverlapInfo {
    int path_chart = -1;
    Vec hub;         // ambient
    Vec hub_coords;  // path-chart coordinates
    // When the second chart's complement shows up in path-chart coordinates
    // as a disk biting into the unit ball, straight segments cannot reach
    // around it; the path family then detours along the crescent spine.
    bool crescent = false;
    Vec hole_center;
    double hole_radius = 0.0;
    Vec bite_dir;
    double reach_margin = -1.0;
  };

  std::string name;
  int dim = 0;
  int ambient_dim = 0;
  std::vector<Chart> charts;
  Vec basepoint;
  int hub_chart = 0;  // contains the basepoint and overlaps every chart
  std::vector<std::vector<Vec>> chart_samples;
  std::map<std::vector<int>, std::vector<Vec>> overlap_samples;
  std::map<std::pair<int, int>, OverlapInfo> overlap_info;

  int n_charts() const { return static_cast<int>(charts.size()); }

  const std::vector<Vec>& samples(std::vector<int> tuple) const {
    auto it = overlap_samples.find(tuple);
    if (it == overlap_samples.end())
      throw std::runtime_error(name + ": no samples for requested overlap");
    return it->second;
  }
  bool overlap_nonempty(std::vector<int> tuple) const {
    return overlap_samples.count(tuple) > 0;
  }
  const OverlapInfo& pair_info(int a, int b) const {
    auto it = overlap_info.find({std::min(a, b), std::max(a, b)});
    if (it == overlap_info.end())
      throw std::runtime_error(name + ": no overlap info for pair");
    return it->second;
  }
  std::vector<std::vector<int>> tuples(size_t size) const {
    std::vector<std::vector<int>> out;
    for (const auto& [k, v] : overlap_samples)
      if (k.size() == size) out.push_back(k);
    return out;
  }
};

namespace detail {

inline void enumerate_tuples(int n, int size, std::vector<std::vector<int>>& out) {
  std::vector<int> cur;
  std::function<void(int)> rec = [&](int start) {
    if (static_cast<int>(cur.size()) == size) {
      out.push_back(cur);
      return;
    }
    for (int i = start; i < n; ++i) {
      cur.push_back(i);
      rec(i + 1);
      cur.pop_back();
    }
  };
  rec(0);
}

// Containment margin of p in every chart of the tuple, in fraction units;
// positive iff p is inside all of them.
inline double tuple_margin(const Atlas& at, const std::vector<int>& tup,
                           const Vec& p, double limit = 1.0) {
  double worst = 0.0;
  for (int c : tup) worst = std::max(worst, at.charts[c].center_frac(p));
  return limit - worst;
}

inline std::function<Vec(double)> straight_curve(const Chart* pc, Vec hub_coords,
                                                 Vec y_coords) {
  return [pc, hub_coords, y_coords](double t) {
    return pc->from_coords(hub_coords + beta_step(t) * (y_coords - hub_coords));
  };
}

// In path-chart coordinates the other chart's complement is the round hole
// (m, rh) biting through the unit ball in direction bite. The curve runs
// from the hub (on the hole axis, opposite the bite) along the crescent
// spine, halfway between hole and ball boundary, to the azimuth of y, then
// radially out or in to y. Collared so each leg sits still at its ends.
inline std::function<Vec(double)> crescent_curve(const Chart* pc, Vec m, double rh,
                                                 Vec bite, Vec y_coords) {
  Vec w = y_coords - m;
  double ry = norm(w);
  if (ry <= rh) throw std::runtime_error("crescent_curve: point inside hole");
  Vec wh = (1.0 / ry) * w;
  double m2 = dot(m, m);
  auto rho_spine = [m, m2, rh](const Vec& e) {
    double me = dot(m, e);
    double disc = me * me + 1.0 - m2;
    if (disc <= 0.0) throw std::runtime_error("crescent_curve: no ball exit");
    double t_ball = -me + std::sqrt(disc);
    return 0.5 * (rh + t_ball);
  };
  Vec nb = -bite;
  return [pc, m, wh, ry, nb, rho_spine](double t) {
    if (t <= 0.5) {
      Vec e = slerp(nb, wh, beta_step(2.0 * t));
      return pc->from_coords(m + rho_spine(e) * e);
    }
    double r1 = rho_spine(wh);
    double r = r1 + beta_step(2.0 * t - 1.0) * (ry - r1);
    return pc->from_coords(m + r * wh);
  };
}

// Detects the crescent configuration of pair (path chart pc, other chart oc):
// the image of oc's complement cap is a genuine disk in pc coordinates that
// bites through the unit ball on exactly one side of the hole axis.
struct CrescentModel {
  Vec hole_center;
  double hole_radius = 0.0;
  Vec bite_dir;
};

inline std::optional<CrescentModel> crescent_model(const Chart& pc, const Chart& oc) {
  if (pc.cap_radius <= 0.0 || oc.cap_radius <= 0.0) return std::nullopt;
  Vec q0 = -oc.center_ambient;
  double sigma = pi - oc.cap_radius;
  double gamma = std::acos(std::clamp(dot(q0, pc.center_ambient), -1.0, 1.0));
  // The complement cap must miss pc's projection point (-center), otherwise
  // its image is unbounded and the overlap is an intersection of disks.
  if (!(pi - gamma > sigma + 1e-9)) return std::nullopt;
  if (std::sin(gamma) < 1e-9) return std::nullopt;  // concentric: annulus
  Vec t_hat = normalized(pc.center_ambient - std::cos(gamma) * q0);
  Vec bp = std::cos(sigma) * q0 + std::sin(sigma) * t_hat;
  Vec bm = std::cos(sigma) * q0 - std::sin(sigma) * t_hat;
  Vec up = pc.to_coords(bp);
  Vec um = pc.to_coords(bm);
  CrescentModel cm;
  cm.hole_center = 0.5 * (up + um);
  cm.hole_radius = 0.5 * dist(up, um);
  Vec dh = normalized(up - um);
  double mu = dot(cm.hole_center, dh);
  bool bite_plus = mu + cm.hole_radius > 1.0;
  bool bite_minus = mu - cm.hole_radius < -1.0;
  if (bite_plus == bite_minus) return std::nullopt;  // annulus or split overlap
  cm.bite_dir = bite_plus ? dh : -dh;
  return cm;
}

}  // namespace detail

// Canonical in-overlap curve from the designated hub of pair {a, b} to y,
// on [0, 1], sitting still near its ends. Certified at atlas build to stay
// inside both charts for every stored overlap sample; pair_info(a, b)
// reports the achieved margin.
inline std::function<Vec(double)> pair_curve(const Atlas& at, int a, int b,
                                             const Vec& y) {
  const Atlas::OverlapInfo& info = at.pair_info(a, b);
  const Chart* pc = &at.charts[info.path_chart];
  Vec uy = pc->to_coords(y);
  if (info.crescent)
    return detail::crescent_curve(pc, info.hole_center, info.hole_radius,
                                  info.bite_dir, uy);
  return detail::straight_curve(pc, info.hub_coords, uy);
}

// Fills chart_samples, overlap_samples, and overlap_info. Fully
// deterministic: Halton draws in the coordinate ball of the first chart of
// each tuple, rejected unless every chart of the tuple contains the point
// with margin. Tuples where almost nothing lands are recorded as empty.
inline void finalize_atlas(Atlas& at, int pair_n = 200, int triple_n = 60,
                           int quad_n = 30, int chart_n = 100) {
  static constexpr std::uint64_t bases[3] = {2, 3, 5};
  const int m = at.dim;

  auto draw = [&](std::uint64_t idx) {
    Vec u = Vec::zero(m);
    for (int d = 0; d < m; ++d) u[d] = 2.0 * halton(idx, bases[d]) - 1.0;
    return u;
  };

  at.chart_samples.assign(at.charts.size(), {});
  for (size_t c = 0; c < at.charts.size(); ++c) {
    for (std::uint64_t idx = 1001; static_cast<int>(at.chart_samples[c].size()) < chart_n; ++idx) {
      if (idx > 1001 + 100000) throw std::runtime_error("finalize_atlas: chart sampling stalled");
      Vec u = draw(idx);
      if (norm(u) >= 0.9) continue;
      at.chart_samples[c].push_back(at.charts[c].from_coords(u));
    }
  }

  for (int size = 2; size <= std::min(4, at.n_charts()); ++size) {
    std::vector<std::vector<int>> tuples;
    detail::enumerate_tuples(at.n_charts(), size, tuples);
    int want = size == 2 ? pair_n : (size == 3 ? triple_n : quad_n);
    for (const auto& tup : tuples) {
      std::vector<Vec> pts;
      const Chart& ch0 = at.charts[tup[0]];
      for (std::uint64_t idx = 21; idx <= 21 + 300000 && static_cast<int>(pts.size()) < want; ++idx) {
        Vec u = draw(idx);
        if (norm(u) >= 0.97) continue;
        Vec p = ch0.from_coords(u);
        if (detail::tuple_margin(at, tup, p, 0.97) > 0.0) pts.push_back(p);
      }
      if (pts.size() >= 8) at.overlap_samples.emplace(tup, std::move(pts));
    }
  }

  // Designated hub and path family per pair. Candidates: straight segments
  // from well-centered samples in either chart's coordinates, and the
  // crescent detour when that configuration is detected. The candidate whose
  // family keeps the deepest containment margin over every stored sample of
  // the pair (and of all larger tuples containing it) wins.
  for (const auto& [tup, pts] : at.overlap_samples) {
    if (tup.size() != 2) continue;
    std::vector<const Vec*> cert;
    for (const auto& [t2, p2] : at.overlap_samples)
      if (std::includes(t2.begin(), t2.end(), tup.begin(), tup.end()))
        for (const Vec& p : p2) cert.push_back(&p);

    Atlas::OverlapInfo best;
    best.reach_margin = -1e9;
    auto certify = [&](const std::function<std::function<Vec(double)>(const Vec&)>& family) {
      double margin = 1e9;
      for (const Vec* pp : cert) {
        std::function<Vec(double)> cur;
        try {
          cur = family(*pp);
        } catch (...) {
          return -1e9;
        }
        for (int j = 0; j <= 32; ++j) {
          Vec q;
          try {
            q = cur(j / 32.0);
          } catch (...) {
            return -1e9;
          }
          margin = std::min(margin, detail::tuple_margin(at, tup, q));
          if (margin <= best.reach_margin) return margin;
        }
      }
      return margin;
    };

    for (int which = 0; which < 2; ++which) {
      const Chart* pc = &at.charts[tup[which]];
      const Chart& oc = at.charts[tup[1 - which]];

      std::vector<size_t> order(pts.size());
      for (size_t i = 0; i < order.size(); ++i) order[i] = i;
      std::sort(order.begin(), order.end(), [&](size_t x, size_t y) {
        return detail::tuple_margin(at, tup, pts[x]) > detail::tuple_margin(at, tup, pts[y]);
      });
      for (size_t ci = 0; ci < std::min<size_t>(24, order.size()); ++ci) {
        Vec hub = pts[order[ci]];
        Vec hc = pc->to_coords(hub);
        double mg = certify([pc, hc](const Vec& y) {
          return detail::straight_curve(pc, hc, pc->to_coords(y));
        });
        if (mg > best.reach_margin) {
          best = Atlas::OverlapInfo{tup[which], hub, hc, false, {}, 0.0, {}, mg};
        }
      }

      if (auto cm = detail::crescent_model(*pc, oc)) {
        Vec nb = -cm->bite_dir;
        double me = dot(cm->hole_center, nb);
        double disc = me * me + 1.0 - dot(cm->hole_center, cm->hole_center);
        if (disc > 0.0) {
          double rho0 = 0.5 * (cm->hole_radius + (-me + std::sqrt(disc)));
          Vec hc = cm->hole_center + rho0 * nb;
          double mg = certify([pc, &cm](const Vec& y) {
            return detail::crescent_curve(pc, cm->hole_center, cm->hole_radius,
                                          cm->bite_dir, pc->to_coords(y));
          });
          if (mg > best.reach_margin) {
            best = Atlas::OverlapInfo{tup[which], pc->from_coords(hc), hc, true,
                                      cm->hole_center, cm->hole_radius,
                                      cm->bite_dir, mg};
          }
        }
      }
    }
    at.overlap_info[{tup[0], tup[1]}] = best;
  }
}

// --- shipped atlases ------------------------------------------------------

inline const Atlas& atlas_s2_two() {
  static const Atlas at = [] {
    Atlas a;
    a.name = "s2-two-caps";
    a.dim = 2;
    a.ambient_dim = 3;
    a.charts = {cap_chart("north", Vec{0, 0, 1}, 2.0 * pi / 3.0),
                cap_chart("south", Vec{0, 0, -1}, 2.0 * pi / 3.0)};
    a.basepoint = Vec{0, 0, 1};
    a.hub_chart = 0;
    finalize_atlas(a);
    return a;
  }();
  return at;
}

inline const Atlas& atlas_s2_four() {
  static const Atlas at = [] {
    Atlas a;
    a.name = "s2-tetra-caps";
    a.dim = 2;
    a.ambient_dim = 3;
    double r = 1.0 / std::sqrt(3.0);
    std::array<Vec, 4> centers = {Vec{r, r, r}, Vec{r, -r, -r}, Vec{-r, r, -r},
                                  Vec{-r, -r, r}};
    for (int i = 0; i < 4; ++i)
      a.charts.push_back(cap_chart("tetra" + std::to_string(i), centers[i], 1.45));
    a.basepoint = Vec{0, 0, 1};
    a.hub_chart = 0;
    finalize_atlas(a);
    return a;
  }();
  return at;
}

inline const Atlas& atlas_s3_two() {
  static const Atlas at = [] {
    Atlas a;
    a.name = "s3-two-caps";
    a.dim = 3;
    a.ambient_dim = 4;
    a.charts = {cap_chart("north", Vec{0, 0, 0, 1}, 2.0 * pi / 3.0),
                cap_chart("south", Vec{0, 0, 0, -1}, 2.0 * pi / 3.0)};
    a.basepoint = Vec{0, 0, 0, 1};
    a.hub_chart = 0;
    finalize_atlas(a);
    return a;
  }();
  return at;
}

// One big northern cap plus three caps tilted off the south pole. All pair,
// triple, and the quadruple overlap are nonempty, so every cocycle identity
// gets exercised on actual sample points, and every pair admits a certified
// canonical path family (the big-small pairs via the crescent detour).
inline const Atlas& atlas_s3_four() {
  static const Atlas at = [] {
    Atlas a;
    a.name = "s3-four-caps";
    a.dim = 3;
    a.ambient_dim = 4;
    a.charts.push_back(cap_chart("big", Vec{0, 0, 0, 1}, 2.0 * pi / 3.0));
    double alpha = 0.55;
    for (int k = 0; k < 3; ++k) {
      double phi = tau * k / 3.0;
      Vec c{std::sin(alpha) * std::cos(phi), std::sin(alpha) * std::sin(phi), 0.0,
            -std::cos(alpha)};
      a.charts.push_back(cap_chart("tilt" + std::to_string(k), c, 1.45));
    }
    a.basepoint = Vec{0, 0, 0, 1};
    a.hub_chart = 0;
    finalize_atlas(a);
    return a;
  }();
  return at;
}

inline const Atlas& atlas_t2() {
  static const Atlas at = [] {
    Atlas a;
    a.name = "t2-four-balls";
    a.dim = 2;
    a.ambient_dim = 4;
    a.charts = {torus_chart("b00", 0.0, 0.0, 2.5), torus_chart("b10", pi, 0.0, 2.5),
                torus_chart("b01", 0.0, pi, 2.5), torus_chart("b11", pi, pi, 2.5)};
    a.basepoint = Vec{1, 0, 1, 0};
    a.hub_chart = 0;
    finalize_atlas(a);
    return a;
  }();
  return at;
}

// --- chart-local differential forms ---------------------------------------

// A k-form on one chart, evaluated multilinearly on chart-coordinate tangent
// vectors. d_eval, when present, is a closed-form exterior derivative.
struct KForm {
  int degree = 0;
  int chart = -1;
  std::function<double(const Vec&, std::span<const Vec>)> eval;
  std::function<double(const Vec&, std::span<const Vec>)> d_eval;

  double operator()(const Vec& u, std::span<const Vec> vs) const {
    return eval(u, vs);
  }
};

// Exterior derivative. Uses the closed form when provided, otherwise central
// differences; the evaluation vectors are held constant in u, so the
// commutator terms of the general formula vanish.
inline KForm exterior_derivative(const KForm& w, double fd_step = 1e-5) {
  KForm d;
  d.degree = w.degree + 1;
  d.chart = w.chart;
  if (w.d_eval) {
    d.eval = w.d_eval;
    return d;
  }
  d.eval = [w, fd_step](const Vec& u, std::span<const Vec> vs) {
    double sum = 0.0;
    std::array<Vec, 3> rest;
    for (size_t i = 0; i < vs.size(); ++i) {
      size_t k = 0;
      for (size_t j = 0; j < vs.size(); ++j)
        if (j != i) rest[k++] = vs[j];
      std::span<const Vec> rs(rest.data(), k);
      double plus = w.eval(u + fd_step * vs[i], rs);
      double minus = w.eval(u - fd_step * vs[i], rs);
      double term = (plus - minus) / (2.0 * fd_step);
      sum += (i % 2 == 0) ? term : -term;
    }
    return sum;
  };
  return d;
}

// Tangent vector given in chart i coordinates, re-expressed in chart j
// coordinates by differencing through the ambient embedding.
inline Vec transition_vector(const Atlas& at, int i, int j, const Vec& p,
                             const Vec& vi, double h = 1e-6) {
  const Chart& ci = at.charts[i];
  const Chart& cj = at.charts[j];
  Vec ui = ci.to_coords(p);
  Vec up = cj.to_coords(ci.from_coords(ui + h * vi));
  Vec um = cj.to_coords(ci.from_coords(ui - h * vi));
  return (1.0 / (2.0 * h)) * (up - um);
}

}  // namespace gerbes
