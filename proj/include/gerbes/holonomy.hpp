#pragma once

// Holonomy from chart-local data: dyadic parameter grids labelled by
// admissible charts, the cell/edge/vertex accumulation formulas for loops
// and closed surfaces, and the global curvature integrals producing the
// integer invariants.

#include "gerbes/cech.hpp"
#include "gerbes/paths.hpp"

namespace gerbes {

// --- chart-labelled parameter grids ---------------------------------------------

struct LabelledGrid1 {
  std::vector<double> cuts;  // 0 = cuts[0] < ... < cuts[m] = 1, dyadic
  std::vector<int> label;    // size m, chart of each cell
};

struct LabelledGrid2 {
  std::vector<double> scuts, tcuts;     // uniform dyadic cut lines
  std::vector<std::vector<int>> label;  // [s cell][t cell]
};

namespace detail {

// Lowest chart whose margin-shrunk domain contains every probe, or -1.
inline int lowest_admissible(const Atlas& at, const std::vector<Vec>& pts,
                             double margin) {
  for (int c = 0; c < at.n_charts(); ++c) {
    bool ok = true;
    for (const Vec& p : pts)
      if (!at.charts[c].contains(p, margin)) {
        ok = false;
        break;
      }
    if (ok) return c;
  }
  return -1;
}

inline std::vector<Vec> cell_probes(const TwoPath& surf, double s0, double s1,
                                    double t0, double t1) {
  std::vector<Vec> pts;
  pts.reserve(16);
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      pts.push_back(
          surf(s0 + (s1 - s0) * a / 3.0, t0 + (t1 - t0) * b / 3.0));
  return pts;
}

}  // namespace detail

// Dyadic cell decomposition of the parameter interval, each cell labelled by
// the lowest chart containing its sampled image inside the margin. Starts at
// 16 cells and bisects where needed.
inline LabelledGrid1 label_path(const Atlas& at, const Path& p,
                                const Numerics& nm) {
  LabelledGrid1 g;
  g.cuts.push_back(0.0);
  std::function<void(double, double, int)> go = [&](double a, double b,
                                                    int depth) {
    std::vector<Vec> probes;
    probes.reserve(9);
    for (int i = 0; i <= 8; ++i) probes.push_back(p(a + (b - a) * i / 8.0));
    int c = detail::lowest_admissible(at, probes, nm.lebesgue_margin);
    if (c < 0) {
      if (depth >= nm.max_grid_depth)
        throw std::runtime_error("label_path: no admissible chart at depth limit");
      go(a, 0.5 * (a + b), depth + 1);
      go(0.5 * (a + b), b, depth + 1);
      return;
    }
    g.cuts.push_back(b);
    g.label.push_back(c);
  };
  for (int k = 0; k < 16; ++k) go(k / 16.0, (k + 1) / 16.0, 4);
  return g;
}

// Tensor-product grid over the parameter square, refined where the labelling
// fails. Cut lines start from a dyadic 8x8 lattice merged with the surface's
// declared seams, so piecewise-smooth sweeps are integrated panel by smooth
// panel. The first and last cell of every row are probed and labelled
// together, so a surface whose slices close across the t-seam picks up no
// unaccounted seam terms. A cell with no admissible chart splits whichever
// parameter axis sweeps the longer image arc; the split inserts a full cut
// line, and the grid is capped at 1 << max_grid_depth cells.
inline LabelledGrid2 label_surface(const Atlas& at, const TwoPath& surf,
                                   const Numerics& nm) {
  LabelledGrid2 g;
  auto seed = [](const std::vector<double>& seams) {
    std::vector<double> cuts;
    for (int i = 0; i <= 8; ++i) cuts.push_back(i / 8.0);
    for (double x : seams)
      if (x > 1e-9 && x < 1.0 - 1e-9) cuts.push_back(x);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end(),
                           [](double a, double b) { return b - a < 1e-9; }),
               cuts.end());
    return cuts;
  };
  g.scuts = seed(surf.seam_s);
  g.tcuts = seed(surf.seam_t);
  g.label.assign(g.scuts.size() - 1,
                 std::vector<int>(g.tcuts.size() - 1, -2));
  // Longest s-wise and t-wise polyline through the 4x4 probe array.
  auto spans = [](const std::vector<Vec>& pts) {
    double ds = 0.0, dt = 0.0;
    for (int b = 0; b < 4; ++b) {
      double acc = 0.0;
      for (int a = 0; a + 1 < 4; ++a) acc += dist(pts[4 * (a + 1) + b], pts[4 * a + b]);
      ds = std::max(ds, acc);
    }
    for (int a = 0; a < 4; ++a) {
      double acc = 0.0;
      for (int b = 0; b + 1 < 4; ++b) acc += dist(pts[4 * a + b + 1], pts[4 * a + b]);
      dt = std::max(dt, acc);
    }
    return std::pair<double, double>(ds, dt);
  };
  struct Split {
    int axis;  // 0 splits an scuts interval, 1 a tcuts interval
    double lo, hi;
  };
  for (;;) {
    std::vector<Split> splits;
    int ns = static_cast<int>(g.label.size());
    int nt = static_cast<int>(g.label[0].size());
    for (int i = 0; i < ns; ++i) {
      for (int j = 0; j < nt; ++j) {
        if (g.label[i][j] != -2) continue;
        // Seam columns stay paired: if the first column failed, it already
        // recorded a split for the pair, so the last column skips.
        if (j == nt - 1 && g.label[i][0] == -2) continue;
        auto pts = detail::cell_probes(surf, g.scuts[i], g.scuts[i + 1],
                                       g.tcuts[j], g.tcuts[j + 1]);
        bool seam = (j == 0 || j == nt - 1);
        int jo = (j == 0) ? nt - 1 : 0;
        std::vector<Vec> all = pts;
        std::vector<Vec> partner;
        if (seam) {
          partner = detail::cell_probes(surf, g.scuts[i], g.scuts[i + 1],
                                        g.tcuts[jo], g.tcuts[jo + 1]);
          all.insert(all.end(), partner.begin(), partner.end());
        }
        int c = detail::lowest_admissible(at, all, nm.lebesgue_margin);
        if (c >= 0) {
          g.label[i][j] = c;
          if (seam) g.label[i][jo] = c;
          continue;
        }
        auto [ds, dt] = spans(pts);
        int jt = j;
        if (seam) {
          auto [dso, dto] = spans(partner);
          if (std::max(dso, dto) > std::max(ds, dt)) {
            ds = dso;
            dt = dto;
            jt = jo;
          }
        }
        if (ds > dt)
          splits.push_back({0, g.scuts[i], g.scuts[i + 1]});
        else
          splits.push_back({1, g.tcuts[jt], g.tcuts[jt + 1]});
      }
    }
    if (splits.empty()) return g;
    std::sort(splits.begin(), splits.end(), [](const Split& a, const Split& b) {
      return a.axis != b.axis ? a.axis < b.axis : a.lo < b.lo;
    });
    splits.erase(std::unique(splits.begin(), splits.end(),
                             [](const Split& a, const Split& b) {
                               return a.axis == b.axis && a.lo == b.lo;
                             }),
                 splits.end());
    for (const auto& sp : splits) {
      auto& cuts = (sp.axis == 0) ? g.scuts : g.tcuts;
      int q = static_cast<int>(std::lower_bound(cuts.begin(), cuts.end(), sp.lo) -
                               cuts.begin());
      double mid = 0.5 * (sp.lo + sp.hi);
      if (q + 1 < static_cast<int>(cuts.size()) && cuts[q + 1] <= mid) continue;
      long ns2 = static_cast<long>(g.label.size());
      long nt2 = static_cast<long>(g.label[0].size());
      long cells = (sp.axis == 0) ? (ns2 + 1) * nt2 : ns2 * (nt2 + 1);
      if (cells > (1L << nm.max_grid_depth))
        throw std::runtime_error("label_surface: no admissible chart at depth limit");
      cuts.insert(cuts.begin() + q + 1, mid);
      if (sp.axis == 0) {
        g.label.insert(g.label.begin() + q + 1, g.label[q]);
        g.label[q].assign(nt2, -2);
        g.label[q + 1].assign(nt2, -2);
      } else {
        for (auto& row : g.label) {
          row.insert(row.begin() + q + 1, row[q]);
          row[q] = row[q + 1] = -2;
          if (q == 0 || q + 2 == static_cast<int>(row.size())) {
            row.front() = -2;
            row.back() = -2;
          }
        }
      }
    }
  }
}

// --- pullback integration over surface patches -----------------------------------

// Integral of a chart-local 2-form over a parameter rectangle of a surface.
// Panels per axis follow the parameter width and the swept arc, whichever
// asks for more, so cells whose slices move fast keep quadrature points in
// proportion to the motion.
inline double integrate_2form(const KForm& w, const Chart& ch, const TwoPath& surf,
                              double s0, double s1, double t0, double t1,
                              const Numerics& nm) {
  auto f = [&](double s, double t) {
    auto uc = [&](double a, double b) { return ch.to_coords(surf(a, b)); };
    double h = nm.fd_step;
    Vec us = (1.0 / (2.0 * h)) * (uc(s + h, t) - uc(s - h, t));
    Vec ut = (1.0 / (2.0 * h)) * (uc(s, t + h) - uc(s, t - h));
    std::array<Vec, 2> vs{us, ut};
    return w.eval(uc(s, t), std::span<const Vec>(vs.data(), 2));
  };
  double ds = 0.0, dt = 0.0;
  for (int b = 0; b < 4; ++b) {
    double acc = 0.0;
    for (int a = 0; a + 1 < 4; ++a)
      acc += dist(surf(s0 + (s1 - s0) * (a + 1) / 3.0, t0 + (t1 - t0) * b / 3.0),
                  surf(s0 + (s1 - s0) * a / 3.0, t0 + (t1 - t0) * b / 3.0));
    ds = std::max(ds, acc);
  }
  for (int a = 0; a < 4; ++a) {
    double acc = 0.0;
    for (int b = 0; b + 1 < 4; ++b)
      acc += dist(surf(s0 + (s1 - s0) * a / 3.0, t0 + (t1 - t0) * (b + 1) / 3.0),
                  surf(s0 + (s1 - s0) * a / 3.0, t0 + (t1 - t0) * b / 3.0));
    dt = std::max(dt, acc);
  }
  int n1 = std::max<long>(std::lround((s1 - s0) * nm.panels_per_unit),
                          std::lround(std::ceil(ds * nm.panels_per_unit / 4.0)));
  int n2 = std::max<long>(std::lround((t1 - t0) * nm.panels_per_unit),
                          std::lround(std::ceil(dt * nm.panels_per_unit / 4.0)));
  return integrate_gl2_n(f, s0, s1, t0, t1, nm.quad_order, n1, n2);
}

// --- loop holonomy and transport ---------------------------------------------------

// Sum over cells of the labelled connection integral, plus the transition
// argument at every label switch, including the wrap-around switch at the
// seam. Well defined modulo full turns; all comparisons are reduced.
inline Phase line_holonomy(const LineData& ld, const Path& loop,
                           const Numerics& nm = {}) {
  const Atlas& at = *ld.atlas;
  if (ld.A.size() != static_cast<size_t>(at.n_charts()))
    throw std::runtime_error("line_holonomy: data carries no connection");
  if (!loop.closed())
    throw std::runtime_error("line_holonomy: loop does not close");
  LabelledGrid1 g = label_path(at, loop, nm);
  int m = static_cast<int>(g.label.size());
  double total = 0.0;
  for (int k = 0; k < m; ++k) {
    int c = g.label[k];
    total += integrate_1form(ld.A[c], at.charts[c], loop.eval, g.cuts[k],
                             g.cuts[k + 1], nm);
    int nxt = g.label[(k + 1) % m];
    if (nxt != c) total += ld.trans(c, nxt, loop(g.cuts[k + 1])).raw;
  }
  return Phase{total};
}

// Open-path transport between stated endpoint charts: entry transition,
// labelled integrals with switches, exit transition. Concatenation of
// transports composes additively modulo full turns.
inline Phase path_transport(const LineData& ld, const Path& path, int chart_in,
                            int chart_out, const Numerics& nm = {}) {
  const Atlas& at = *ld.atlas;
  if (ld.A.size() != static_cast<size_t>(at.n_charts()))
    throw std::runtime_error("path_transport: data carries no connection");
  if (!at.charts[chart_in].contains(path.start()) ||
      !at.charts[chart_out].contains(path.end()))
    throw std::runtime_error("path_transport: endpoint outside stated chart");
  LabelledGrid1 g = label_path(at, path, nm);
  int m = static_cast<int>(g.label.size());
  double total = ld.trans(chart_in, g.label[0], path.start()).raw;
  for (int k = 0; k < m; ++k) {
    int c = g.label[k];
    total += integrate_1form(ld.A[c], at.charts[c], path.eval, g.cuts[k],
                             g.cuts[k + 1], nm);
    if (k + 1 < m && g.label[k + 1] != c)
      total += ld.trans(c, g.label[k + 1], path(g.cuts[k + 1])).raw;
  }
  total += ld.trans(g.label[m - 1], chart_out, path.end()).raw;
  return Phase{total};
}

// --- surface holonomy ---------------------------------------------------------------

namespace detail {

// Accumulation over an explicit grid: curvature over faces; the pair form
// along interior edges, oriented counterclockwise around the cell on the
// lower side of each cut; and at interior vertices the two triple phases of
// the label quad (a, b, c, d) read counterclockwise from the lower-left
// cell, split along the a-c diagonal. The cocycle identity makes the value
// independent of the starting corner.
inline double holonomy_over_grid(const GerbeData& gd, const TwoPath& surf,
                                 const LabelledGrid2& g, const Numerics& nm) {
  const Atlas& at = *gd.atlas;
  int ns = static_cast<int>(g.label.size());
  int nt = static_cast<int>(g.label[0].size());
  double total = 0.0;
  for (int i = 0; i < ns; ++i)
    for (int j = 0; j < nt; ++j) {
      const KForm& F = gd.F[g.label[i][j]];
      total += integrate_2form(F, at.charts[F.chart], surf, g.scuts[i],
                               g.scuts[i + 1], g.tcuts[j], g.tcuts[j + 1], nm);
    }
  for (int i = 1; i < ns; ++i)
    for (int j = 0; j < nt; ++j) {
      int a = g.label[i - 1][j], b = g.label[i][j];
      if (a == b) continue;
      double si = g.scuts[i];
      std::function<Vec(double)> e = [&surf, si](double t) { return surf(si, t); };
      total += integrate_pair_form(gd, a, b, e, g.tcuts[j], g.tcuts[j + 1], nm);
    }
  for (int j = 1; j < nt; ++j)
    for (int i = 0; i < ns; ++i) {
      int a = g.label[i][j - 1], b = g.label[i][j];
      if (a == b) continue;
      double tj = g.tcuts[j];
      std::function<Vec(double)> e = [&surf, tj](double s) { return surf(s, tj); };
      total -= integrate_pair_form(gd, a, b, e, g.scuts[i], g.scuts[i + 1], nm);
    }
  for (int i = 1; i < ns; ++i)
    for (int j = 1; j < nt; ++j) {
      int a = g.label[i - 1][j - 1], b = g.label[i][j - 1];
      int c = g.label[i][j], d = g.label[i - 1][j];
      if (a == b && b == c && c == d) continue;
      Vec p = surf(g.scuts[i], g.tcuts[j]);
      total += gd.triple(a, b, c, p).raw - gd.triple(a, d, c, p).raw;
    }
  return total;
}

}  // namespace detail

// Surface holonomy of a closed parametrized surface: every slice must close
// and both end stages must sit at points, which covers sphere-like sweeps
// and based two-parameter loops alike.
inline Phase gerbe_holonomy(const GerbeData& gd, const TwoPath& surf,
                            const Numerics& nm = {}) {
  for (double s : {0.0, 0.31, 0.5, 0.77, 1.0})
    if (dist(surf(s, 0.0), surf(s, 1.0)) > 1e-8)
      throw std::runtime_error("gerbe_holonomy: slices must close");
  for (double t : {0.23, 0.5, 0.81}) {
    if (dist(surf(0.0, t), surf(0.0, 0.0)) > 1e-8 ||
        dist(surf(1.0, t), surf(1.0, 0.0)) > 1e-8)
      throw std::runtime_error("gerbe_holonomy: end stages must be points");
  }
  LabelledGrid2 g = label_surface(*gd.atlas, surf, nm);
  return Phase{detail::holonomy_over_grid(gd, surf, g, nm)};
}

// --- phase tracks --------------------------------------------------------------------

// Continuous lift of a sequence of raw angles whose consecutive reduced
// differences stay below a half turn.
inline std::vector<double> lift_track(const std::vector<double>& raw) {
  std::vector<double> out(raw.size());
  if (raw.empty()) return out;
  out[0] = reduce_angle(raw[0]);
  for (std::size_t k = 1; k < raw.size(); ++k)
    out[k] = out[k - 1] + reduce_angle(raw[k] - raw[k - 1]);
  return out;
}

// --- global curvature integrals -------------------------------------------------------

namespace detail {

inline int argmin_chart(const Atlas& at, const Vec& p) {
  int best = 0;
  double bf = at.charts[0].center_frac(p);
  for (int c = 1; c < at.n_charts(); ++c) {
    double f = at.charts[c].center_frac(p);
    if (f < bf) {
      bf = f;
      best = c;
    }
  }
  return best;
}

}  // namespace detail

// Integral of the connection's curvature over the whole surface-type
// manifold. The curvature is globally defined, so each quadrature node uses
// the chart of deepest containment.
inline double curvature_integral(const LineData& ld, const Numerics& nm = {}) {
  const Atlas& at = *ld.atlas;
  if (ld.A.size() != static_cast<size_t>(at.n_charts()))
    throw std::runtime_error("curvature_integral: data carries no connection");
  if (at.dim != 2)
    throw std::runtime_error("curvature_integral: needs a surface atlas");
  std::vector<KForm> dA;
  for (const KForm& a : ld.A) dA.push_back(exterior_derivative(a, nm.fd_step));
  std::function<Vec(double, double)> cover;
  if (at.ambient_dim == 3)
    cover = [](double s, double t) {
      double chi = pi * s, phi = tau * t;
      return Vec{std::sin(chi) * std::cos(phi), std::sin(chi) * std::sin(phi),
                 std::cos(chi)};
    };
  else
    cover = [](double s, double t) {
      return Vec{std::cos(tau * s), std::sin(tau * s), std::cos(tau * t),
                 std::sin(tau * t)};
    };
  auto f = [&](double s, double t) {
    Vec p = cover(s, t);
    int c = detail::argmin_chart(at, p);
    const Chart& ch = at.charts[c];
    auto uc = [&](double a, double b) { return ch.to_coords(cover(a, b)); };
    double h = nm.fd_step;
    Vec us = (1.0 / (2.0 * h)) * (uc(s + h, t) - uc(s - h, t));
    Vec ut = (1.0 / (2.0 * h)) * (uc(s, t + h) - uc(s, t - h));
    std::array<Vec, 2> vs{us, ut};
    return dA[c].eval(uc(s, t), std::span<const Vec>(vs.data(), 2));
  };
  return integrate_gl2(f, 0.0, 1.0, 0.0, 1.0, nm.quad_order, nm.panels_per_unit);
}

inline double chern_number(const LineData& ld, const Numerics& nm = {}) {
  return curvature_integral(ld, nm) / tau;
}

// Integral of the curvature derivative over the 3-sphere, via the polar
// sweep of slice spheres; same per-node chart selection.
inline double charge_integral(const GerbeData& gd, const Numerics& nm = {}) {
  const Atlas& at = *gd.atlas;
  if (at.dim != 3)
    throw std::runtime_error("charge_integral: needs a 3-sphere atlas");
  std::vector<KForm> dF;
  for (const KForm& f : gd.F) dF.push_back(exterior_derivative(f, nm.fd_step));
  auto cover = [](double a, double b, double c) {
    double chi = pi * a, th = pi * b, ph = tau * c;
    double sc = std::sin(chi);
    return Vec{sc * std::sin(th) * std::cos(ph), sc * std::sin(th) * std::sin(ph),
               sc * std::cos(th), std::cos(chi)};
  };
  auto f3 = [&](double a, double b, double c) {
    Vec p = cover(a, b, c);
    int ci = detail::argmin_chart(at, p);
    const Chart& ch = at.charts[ci];
    auto uc = [&](double x, double y, double z) {
      return ch.to_coords(cover(x, y, z));
    };
    double h = nm.fd_step;
    Vec ua = (1.0 / (2.0 * h)) * (uc(a + h, b, c) - uc(a - h, b, c));
    Vec ub = (1.0 / (2.0 * h)) * (uc(a, b + h, c) - uc(a, b - h, c));
    Vec uz = (1.0 / (2.0 * h)) * (uc(a, b, c + h) - uc(a, b, c - h));
    std::array<Vec, 3> vs{ua, ub, uz};
    return dF[ci].eval(uc(a, b, c), std::span<const Vec>(vs.data(), 3));
  };
  auto bc = [&](double a) {
    return integrate_gl2([&](double b, double c) { return f3(a, b, c); }, 0.0,
                         1.0, 0.0, 1.0, nm.quad_order, nm.panels_per_unit);
  };
  // radial profiles concentrate along the polar sweep, so it gets finer panels
  return integrate_gl(bc, 0.0, 1.0, nm.quad_order, 3 * nm.panels_per_unit);
}

inline double dd_number(const GerbeData& gd, const Numerics& nm = {}) {
  return charge_integral(gd, nm) / tau;
}

}  // namespace gerbes
