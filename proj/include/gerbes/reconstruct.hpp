#pragma once

// Local data recovered from holonomy alone. Transition phases are
// holonomies of chart-switching basepoint loops, connection forms are first
// log-derivatives of holonomies over short straight runs, curvatures are
// mixed second log-derivatives over coordinate squares, and the gerbe
// triple phases are holonomies of closed sweeps that carry the constant
// loop at the probe point onto a product of basepoint pair lassos and
// contract it. The recovered
// data reproduces every oracle value and differs from the data behind the
// oracle by a gauge.

#include "gerbes/cech.hpp"
#include "gerbes/paths.hpp"

namespace gerbes {

using LoopOracle = std::function<Phase(const Path&)>;
using SurfaceOracle = std::function<Phase(const TwoPath&)>;

struct ReconstructOptions {
  double conn_step = 1e-3;   // step of the first log-derivatives
  double curv_step = 3e-2;   // step of the mixed second log-derivative
  double dform_step = 1e-2;  // step baked into d_eval of recovered forms
};

namespace detail {

// Recovered forms carry oracle noise, so their exterior derivative gets a
// much wider difference step than the analytic-data default.
inline void attach_fd_derivative(KForm& w, double step) {
  KForm base = w;
  base.d_eval = nullptr;
  w.d_eval = exterior_derivative(base, step).eval;
}

// Reference path from the basepoint to each chart center: radial inside the
// hub chart, then hops along a breadth-first tree of the overlap graph,
// radial out to the shared hub point and radial in to the next center.
inline std::vector<Path> center_paths(const Atlas& at) {
  int n = at.n_charts();
  // Legs are kept flat and chained once per chart; nesting concats would pile
  // up collars and leave the grid labeller unable to resolve the fast spots.
  std::vector<std::vector<Path>> legs(n);
  std::vector<Path> ps(n);
  std::vector<int> order{at.hub_chart};
  std::vector<char> seen(n, 0);
  seen[at.hub_chart] = 1;
  Path root = reverse(radial_path(at.charts[at.hub_chart], at.basepoint));
  if (dist(root.start(), root.end()) > 1e-12) legs[at.hub_chart].push_back(root);
  for (size_t q = 0; q < order.size(); ++q) {
    int c = order[q];
    for (int d = 0; d < n; ++d) {
      if (seen[d] || !at.overlap_nonempty({std::min(c, d), std::max(c, d)}))
        continue;
      const Vec hub = at.pair_info(c, d).hub;
      legs[d] = legs[c];
      legs[d].push_back(radial_path(at.charts[c], hub));
      legs[d].push_back(reverse(radial_path(at.charts[d], hub)));
      seen[d] = 1;
      order.push_back(d);
    }
  }
  for (int c = 0; c < n; ++c) {
    if (!seen[c]) throw std::runtime_error("center_paths: chart unreachable");
    if (legs[c].empty())
      ps[c] = constant_path(at.basepoint);
    else if (legs[c].size() == 1)
      ps[c] = legs[c].front();
    else
      ps[c] = chain(legs[c]);
  }
  return ps;
}

}  // namespace detail

// Basepoint-to-x path whose free end moves inside chart i only.
inline Path section_path(const Atlas& at, const Path& to_center, int i,
                         const Vec& x) {
  return concat(to_center, radial_path(at.charts[i], x));
}

// Out through chart i, back through chart j; its holonomy is the recovered
// transition phase at x.
inline Path transition_loop(const Atlas& at, const Path& pi, const Path& pj,
                            int i, int j, const Vec& x) {
  return concat(section_path(at, pi, i, x),
                reverse(section_path(at, pj, j, x)));
}

inline LineData reconstruct_line(const Atlas& at, const LoopOracle& H,
                                 const ReconstructOptions& opts = {}) {
  LineData out;
  out.atlas = &at;
  const Atlas* atp = &at;
  auto ps = std::make_shared<std::vector<Path>>(detail::center_paths(at));
  for (const auto& tup : at.tuples(2)) {
    int i = tup[0], j = tup[1];
    out.g[{i, j}] = [atp, ps, i, j, H](const Vec& x) {
      return H(transition_loop(*atp, (*ps)[i], (*ps)[j], i, j, x));
    };
  }
  for (int i = 0; i < at.n_charts(); ++i) {
    KForm A;
    A.degree = 1;
    A.chart = i;
    double h = opts.conn_step;
    A.eval = [atp, ps, i, H, h](const Vec& u, std::span<const Vec> vs) {
      const Chart& ch = atp->charts[i];
      auto probe = [&](double k) {
        Vec u1 = u + k * vs[0];
        Path out_leg = section_path(*atp, (*ps)[i], i, ch.from_coords(u));
        Path run = chart_segment(ch, u, u1);
        Path back = section_path(*atp, (*ps)[i], i, ch.from_coords(u1));
        return H(chain({out_leg, run, reverse(back)})).raw;
      };
      return reduce_angle(probe(h) - probe(-h)) / (2.0 * h);
    };
    detail::attach_fd_derivative(A, opts.dform_step);
    out.A.push_back(A);
  }
  return out;
}

namespace detail {

inline Path twopath_slice(const TwoPath& tp, double s) {
  auto f = tp.eval;
  return {[f, s](double t) { return f(s, t); }};
}

// Loop in the overlap of a pair, based at its hub: out to y, a straight
// chart-a run, and back.
inline Path overlap_probe(const Atlas& at, int a, int b, const Vec& u,
                          const Vec& X, double k) {
  const Chart& ch = at.charts[a];
  Vec u1 = u + k * X;
  Path lead = overlap_path(at, a, b, ch.from_coords(u));
  Path run = chart_segment(ch, u, u1);
  Path back = overlap_path(at, a, b, ch.from_coords(u1));
  return chain({lead, run, reverse(back)});
}

// Sphere over an overlap loop: cone up from the chart-a center, back down
// to the chart-b center. Unlike double_cone this apexes at the centers,
// which is what ties the recovered pair forms to the recovered curvatures.
inline TwoPath center_double_cone(const Atlas& at, int a, int b,
                                  const Path& loop) {
  TwoPath up = cone(at.charts[a], Vec::zero(at.charts[a].coord_dim), loop);
  TwoPath down = cone(at.charts[b], Vec::zero(at.charts[b].coord_dim), loop);
  return compose_sweep(up, reverse_sweep(down));
}

// Sphere sweeping the coordinate square spanned by k*X and l*Y at u, then
// coning its perimeter down to the chart center.
inline TwoPath square_cone(const Atlas& at, int a, const Vec& u, const Vec& X,
                           const Vec& Y, double k, double l) {
  const Chart& ch = at.charts[a];
  auto fc = ch.from_coords;
  Vec kX = k * X, lY = l * Y;
  auto rim = [u, kX, lY](double t) -> Vec {
    double q = 4.0 * std::clamp(t, 0.0, 1.0);
    double cx, cy;
    if (q <= 1.0) {
      cx = q, cy = 0.0;
    } else if (q <= 2.0) {
      cx = 1.0, cy = q - 1.0;
    } else if (q <= 3.0) {
      cx = 3.0 - q, cy = 1.0;
    } else {
      cx = 0.0, cy = 4.0 - q;
    }
    return u + cx * kX + cy * lY;
  };
  return {[fc, rim, u](double s, double t) {
    if (s <= 0.5) {
      double g = beta_step(2.0 * s);
      return fc(u + g * (rim(t) - u));
    }
    double g = 1.0 - beta_step(2.0 * s - 1.0);
    return fc(g * rim(t));
  }};
}

// --- triple phase ------------------------------------------------------------
//
// The triple phase at y is the holonomy of one closed sweep. The constant
// loop at y unzips along the corner radials into the three chart lassos
// through y; chart-straight homotopies carry those onto the center-to-hub
// triangle, cancelling the telescope of section legs; the corners grow
// basepoint tails, turning the slice into the product of the three
// basepoint pair lassos; that product contracts to the basepoint through
// minor arcs, and the leftover whisker parks at a chart center. Only the
// homotopy stage depends on y, and a pair's contraction disk enters the two
// triples of a quadruple that share the pair with opposite orientations,
// which is what cancels the quadruple cocycle.

inline double path_span(const Path& p, int samples = 24) {
  double len = 0.0;
  Vec prev = p.eval(0.0);
  for (int m = 1; m <= samples; ++m) {
    Vec cur = p.eval(static_cast<double>(m) / samples);
    len += dist(prev, cur);
    prev = cur;
  }
  return len;
}

// Dyadic slot windows sized by geometric length, keeping the traversal
// speed even enough for the surface grid to resolve.
inline std::vector<double> weighted_cuts(const std::vector<double>& lens,
                                         int quanta) {
  size_t n = lens.size();
  double total = 0.0;
  for (double l : lens) total += l;
  std::vector<int> q(n, 1);
  std::vector<double> frac(n, 0.0);
  int used = static_cast<int>(n);
  for (size_t m = 0; m < n; ++m) {
    double ideal = total > 0.0 ? quanta * lens[m] / total : 1.0;
    int extra = std::max(0, static_cast<int>(ideal) - 1);
    q[m] += extra;
    used += extra;
    frac[m] = ideal - std::floor(ideal);
  }
  while (used < quanta) {
    size_t pick = 0;
    for (size_t m = 1; m < n; ++m)
      if (frac[m] > frac[pick]) pick = m;
    ++q[pick];
    frac[pick] = -1.0;
    ++used;
  }
  std::vector<double> cuts(n + 1, 0.0);
  for (size_t m = 0; m < n; ++m) cuts[m + 1] = cuts[m] + q[m];
  for (double& c : cuts) c /= cuts[n];
  return cuts;
}

// Chain over prescribed slot windows. A sweep built from per-slice chains
// must share one window layout across all slices, so the windows are fixed
// up front from worst-case slot lengths.
inline Path chain_on_cuts(const std::vector<Path>& slots,
                          const std::vector<double>& cuts) {
  for (size_t m = 0; m + 1 < slots.size(); ++m)
    if (dist(slots[m].eval(1.0), slots[m + 1].eval(0.0)) > 1e-9)
      throw std::runtime_error("chain_on_cuts: slot endpoints mismatch");
  auto sl = std::make_shared<std::vector<Path>>(slots);
  auto cu = std::make_shared<std::vector<double>>(cuts);
  return {[sl, cu](double t) {
    t = std::clamp(t, 0.0, 1.0);
    size_t m = std::upper_bound(cu->begin(), cu->end(), t) - cu->begin();
    m = std::min(std::max<size_t>(m, 1) - 1, sl->size() - 1);
    double w = (*cu)[m + 1] - (*cu)[m];
    return (*sl)[m].eval((t - (*cu)[m]) / w);
  }};
}

struct TripleSweep {
  const Atlas* at;
  Vec base;
  Path a[3];                   // corner radials, center to y
  Path b[3];                   // overlap paths, pair hub to y
  Path rho_u[3], rho_v[3];     // center-to-hub radials per edge
  TwoPath gam_u[3], gam_v[3];  // chart-straight homotopies per edge
  Path p[3];                   // basepoint-to-center references
  Path legs[12];               // the assembled lasso product, contraction profile
};

// Linear window restriction; unlike sub_path it adds no collar, so window
// speed never compounds across nesting levels.
inline Path window(const Path& p, double x0, double x1) {
  auto f = p.eval;
  return {[f, x0, x1](double t) {
    return f(x0 + std::clamp(t, 0.0, 1.0) * (x1 - x0));
  }};
}

// Slots of the sweep at stage s: a head, four slots per triangle edge, and a
// tail. Stage arguments are collared per band, so consecutive bands agree
// exactly near their shared boundary, and slice closure holds at every
// stage.
inline std::vector<Path> triple_slots(const TripleSweep& st, double s) {
  std::vector<Path> sl(14);
  if (s <= 0.2) {  // unzip from the constant loop at y
    double w = beta_step(s / 0.2);
    for (int m = 0; m < 3; ++m) {
      sl[4 * m + 1] = constant_path(st.a[m].eval(1.0 - w));
      sl[4 * m + 2] = concat(window(st.a[m], 1.0 - w, 1.0),
                             window(reverse(st.b[m]), 0.0, w));
      sl[4 * m + 3] = concat(window(st.b[m], 1.0 - w, 1.0),
                             window(reverse(st.a[(m + 1) % 3]), 0.0, w));
      sl[4 * m + 4] = constant_path(st.a[(m + 1) % 3].eval(1.0 - w));
    }
    sl[0] = constant_path(st.a[0].eval(1.0 - w));
    sl[13] = sl[0];
  } else if (s <= 0.45) {  // chart-straight morph onto the triangle
    double tau = std::clamp((s - 0.2) / 0.25, 0.0, 1.0);
    for (int m = 0; m < 3; ++m) {
      sl[4 * m + 1] = constant_path(st.a[m].eval(0.0));
      sl[4 * m + 2] = twopath_slice(st.gam_u[m], tau);
      sl[4 * m + 3] = reverse(twopath_slice(st.gam_v[m], tau));
      sl[4 * m + 4] = constant_path(st.a[(m + 1) % 3].eval(0.0));
    }
    sl[0] = constant_path(st.a[0].eval(0.0));
    sl[13] = sl[0];
  } else if (s <= 0.55) {  // grow basepoint tails at the corners
    double w = beta_step((s - 0.45) / 0.1);
    for (int m = 0; m < 3; ++m) {
      sl[4 * m + 1] = window(st.p[m], 1.0 - w, 1.0);
      sl[4 * m + 2] = st.rho_u[m];
      sl[4 * m + 3] = reverse(st.rho_v[m]);
      sl[4 * m + 4] = window(reverse(st.p[(m + 1) % 3]), 0.0, w);
    }
    sl[0] = window(reverse(st.p[0]), 0.0, w);
    sl[13] = window(st.p[0], 1.0 - w, 1.0);
  } else if (s <= 0.9) {  // contract the lasso product to the basepoint
    double q = 1.0 - beta_step((s - 0.55) / 0.35);
    for (int m = 0; m < 12; ++m) {
      Path leg = st.legs[m];
      Vec base = st.base;
      sl[m + 1] = {[leg, base, q](double t) {
        return slerp(base, leg.eval(t), q);
      }};
    }
    sl[0] = reverse(st.p[0]);
    sl[13] = st.p[0];
  } else {  // park the whisker at the chart center
    double v = 1.0 - beta_step((s - 0.9) / 0.1);
    Vec park = st.p[0].eval(1.0 - v);
    for (int m = 1; m <= 12; ++m) sl[m] = constant_path(park);
    sl[0] = window(reverse(st.p[0]), 0.0, v);
    sl[13] = window(st.p[0], 1.0 - v, 1.0);
  }
  return sl;
}

inline TwoPath triple_sphere(const Atlas& at, const std::vector<Path>& ps,
                             int i, int j, int k, const Vec& y) {
  auto st = std::make_shared<TripleSweep>();
  st->at = &at;
  st->base = at.basepoint;
  int idx[3] = {i, j, k};
  for (int m = 0; m < 3; ++m) {
    int u = idx[m], v = idx[(m + 1) % 3];
    const Vec hub = at.pair_info(u, v).hub;
    st->a[m] = even_speed(radial_path(at.charts[idx[m]], y));
    st->b[m] = overlap_path(at, u, v, y);
    st->rho_u[m] = even_speed(radial_path(at.charts[u], hub));
    st->rho_v[m] = even_speed(radial_path(at.charts[v], hub));
    st->p[m] = even_speed(ps[idx[m]]);
  }
  for (int m = 0; m < 3; ++m) {
    int u = idx[m], v = idx[(m + 1) % 3];
    Path su = concat(st->a[m], reverse(st->b[m]));
    Path sv = concat(st->a[(m + 1) % 3], reverse(st->b[m]));
    st->gam_u[m] = straightline_homotopy(at.charts[u], su, st->rho_u[m]);
    st->gam_v[m] = straightline_homotopy(at.charts[v], sv, st->rho_v[m]);
  }
  for (int m = 0; m < 3; ++m) {
    st->legs[4 * m + 0] = st->p[m];
    st->legs[4 * m + 1] = st->rho_u[m];
    st->legs[4 * m + 2] = reverse(st->rho_v[m]);
    st->legs[4 * m + 3] = reverse(st->p[(m + 1) % 3]);
  }
  for (const Path& leg : st->legs) {
    for (int m = 0; m <= 24; ++m) {
      Vec q = leg.eval(m / 24.0);
      if (std::abs(norm(q) - 1.0) > 1e-6)
        throw std::runtime_error("triple_sphere: ambient unit sphere required");
      if (std::acos(std::clamp(dot(st->base, q), -1.0, 1.0)) > pi - 0.15)
        throw std::runtime_error("triple_sphere: sweep reaches the antipodal ball");
    }
  }
  std::vector<double> lens(14, 0.0);
  for (double s : {0.1, 0.2, 0.325, 0.45, 0.55, 0.725, 0.9}) {
    auto sl = triple_slots(*st, s);
    for (int m = 0; m < 14; ++m) lens[m] = std::max(lens[m], path_span(sl[m]));
  }
  auto cu = std::make_shared<std::vector<double>>(weighted_cuts(lens, 64));
  auto cache = std::make_shared<std::map<double, Path>>();
  TwoPath out;
  out.eval = [st, cu, cache](double s, double t) {
    auto it = cache->find(s);
    if (it == cache->end())
      it = cache->emplace(s, chain_on_cuts(triple_slots(*st, s), *cu)).first;
    return it->second.eval(t);
  };
  // Stage kinks at the band boundaries; slice kinks at the slot cuts and at
  // the rail slots' midpoints, where two windows meet inside one slot.
  out.seam_s = {0.2, 0.45, 0.55, 0.9};
  out.seam_t.assign(cu->begin() + 1, cu->end() - 1);
  for (int k : {2, 3, 6, 7, 10, 11})
    out.seam_t.push_back(0.5 * ((*cu)[k] + (*cu)[k + 1]));
  return out;
}

}  // namespace detail

inline GerbeData reconstruct_gerbe(const Atlas& at, const SurfaceOracle& W,
                                   const ReconstructOptions& opts = {}) {
  GerbeData out;
  out.atlas = &at;
  const Atlas* atp = &at;
  for (const auto& tup : at.tuples(2)) {
    int a = tup[0], b = tup[1];
    KForm A;
    A.degree = 1;
    A.chart = a;
    double h = opts.conn_step;
    A.eval = [atp, a, b, W, h](const Vec& u, std::span<const Vec> vs) {
      auto probe = [&](double k) {
        Path loop = detail::overlap_probe(*atp, a, b, u, vs[0], k);
        return W(detail::center_double_cone(*atp, a, b, loop)).raw;
      };
      return reduce_angle(probe(h) - probe(-h)) / (2.0 * h);
    };
    detail::attach_fd_derivative(A, opts.dform_step);
    out.A[{a, b}] = A;
  }
  for (int a = 0; a < at.n_charts(); ++a) {
    KForm F;
    F.degree = 2;
    F.chart = a;
    double h = opts.curv_step;
    F.eval = [atp, a, W, h](const Vec& u, std::span<const Vec> vs) {
      auto probe = [&](double k, double l) {
        return reduce_angle(
            W(detail::square_cone(*atp, a, u, vs[0], vs[1], k, l)).raw);
      };
      double mixed = probe(h, h) - probe(h, -h) - probe(-h, h) + probe(-h, -h);
      return reduce_angle(mixed) / (4.0 * h * h);
    };
    detail::attach_fd_derivative(F, opts.dform_step);
    out.F.push_back(F);
  }
  auto psh = std::make_shared<std::vector<Path>>(detail::center_paths(at));
  for (const auto& tup : at.tuples(3)) {
    int i = tup[0], j = tup[1], k = tup[2];
    out.g[{i, j, k}] = [atp, psh, i, j, k, W](const Vec& y) {
      return W(detail::triple_sphere(*atp, *psh, i, j, k, y));
    };
  }
  return out;
}

}  // namespace gerbes
