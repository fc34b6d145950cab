#pragma once

// Local transition data on an atlas: circle-bundle data (pair phases plus
// chart 1-forms) and gerbe data (triple phases, pair 1-forms, chart 2-forms),
// with index antisymmetry handled by accessors. Ships the identity residual
// checkers driven by the stored overlap samples, gauge moves, and the
// partition-of-unity connection induced by transition phases alone.

#include <cstdint>
#include <memory>

#include "gerbes/geometry.hpp"
#include "gerbes/quadrature.hpp"

namespace gerbes {

// --- continuous argument tracking -------------------------------------------

namespace detail {

inline double arg_step(const std::function<Phase(double)>& f, double a, double fa,
                       double b, double fb, double guard, int depth) {
  double d = reduce_angle(fb - fa);
  if (std::abs(d) <= guard) return d;
  if (depth >= 40) throw std::runtime_error("arg_increment: step will not shrink");
  double m = 0.5 * (a + b);
  double fm = f(m).raw;
  return arg_step(f, a, fa, m, fm, guard, depth + 1) +
         arg_step(f, m, fm, b, fb, guard, depth + 1);
}

}  // namespace detail

// Continuous increment of arg f along [t0, t1], assembled from reduced steps
// that are bisected until each stays under guard. The initial sixteenfold
// split keeps one step from swallowing a whole winding at the angular speeds
// this library produces.
inline double arg_increment(const std::function<Phase(double)>& f, double t0,
                            double t1, double guard = pi / 4.0) {
  double total = 0.0;
  double pt = t0, pa = f(t0).raw;
  for (int k = 1; k <= 16; ++k) {
    double t = t0 + (t1 - t0) * k / 16.0;
    double a = f(t).raw;
    total += detail::arg_step(f, pt, pa, t, a, guard, 0);
    pt = t;
    pa = a;
  }
  return total;
}

// --- data containers ---------------------------------------------------------

// Circle-bundle data. g is keyed by ordered pairs i < j; trans supplies
// inverses and identities. A[i] is a real 1-form in chart i coordinates.
// Pair identity on overlaps: A_j - A_i = darg g_ij.
struct LineData {
  const Atlas* atlas = nullptr;
  std::map<std::pair<int, int>, std::function<Phase(const Vec&)>> g;
  std::vector<KForm> A;

  Phase trans(int i, int j, const Vec& p) const {
    if (i == j) return Phase{0.0};
    if (i < j) return g.at({i, j})(p);
    return g.at({j, i})(p).inverse();
  }
};

namespace detail {

inline std::pair<std::array<int, 3>, int> sort3(int i, int j, int k) {
  std::array<int, 3> a{i, j, k};
  int sgn = 1;
  if (a[0] > a[1]) { std::swap(a[0], a[1]); sgn = -sgn; }
  if (a[1] > a[2]) { std::swap(a[1], a[2]); sgn = -sgn; }
  if (a[0] > a[1]) { std::swap(a[0], a[1]); sgn = -sgn; }
  return {a, sgn};
}

}  // namespace detail

// Gerbe data. g is keyed by ordered triples i < j < k and alternates under
// index swaps; A is keyed by ordered pairs i < j, written in chart i
// coordinates, with A_ji = -A_ij; F[i] is a real 2-form in chart i
// coordinates. Identities on overlaps:
//   quadruple:  g_jkl g_ikl^-1 g_ijl g_ijk^-1 = 1
//   triple:     A_ij + A_jk + A_ki = -darg g_ijk
//   pair:       F_j - F_i = dA_ij
struct GerbeData {
  const Atlas* atlas = nullptr;
  std::map<std::array<int, 3>, std::function<Phase(const Vec&)>> g;
  std::map<std::pair<int, int>, KForm> A;
  std::vector<KForm> F;

  Phase triple(int i, int j, int k, const Vec& p) const {
    if (i == j || j == k || i == k) return Phase{0.0};
    auto [key, sgn] = detail::sort3(i, j, k);
    Phase v = g.at(key)(p);
    return sgn > 0 ? v : v.inverse();
  }
};

// --- form algebra -------------------------------------------------------------

inline KForm zero_form(int chart, int degree) {
  KForm w;
  w.degree = degree;
  w.chart = chart;
  w.eval = [](const Vec&, std::span<const Vec>) { return 0.0; };
  w.d_eval = w.eval;
  return w;
}

inline KForm form_sum(const KForm& a, const KForm& b) {
  if (a.degree != b.degree || a.chart != b.chart)
    throw std::runtime_error("form_sum: mismatched forms");
  KForm s;
  s.degree = a.degree;
  s.chart = a.chart;
  s.eval = [ae = a.eval, be = b.eval](const Vec& u, std::span<const Vec> vs) {
    return ae(u, vs) + be(u, vs);
  };
  if (a.d_eval && b.d_eval)
    s.d_eval = [ad = a.d_eval, bd = b.d_eval](const Vec& u, std::span<const Vec> vs) {
      return ad(u, vs) + bd(u, vs);
    };
  return s;
}

inline KForm form_scale(double c, const KForm& a) {
  KForm s;
  s.degree = a.degree;
  s.chart = a.chart;
  s.eval = [c, ae = a.eval](const Vec& u, std::span<const Vec> vs) {
    return c * ae(u, vs);
  };
  if (a.d_eval)
    s.d_eval = [c, ad = a.d_eval](const Vec& u, std::span<const Vec> vs) {
      return c * ad(u, vs);
    };
  return s;
}

// The same geometric form re-expressed in another chart's coordinates by
// passing points and tangents through the ambient embedding. The atlas must
// outlive the returned form.
inline KForm form_pullback(const Atlas& at, int chart, const KForm& w,
                           double h = 1e-6) {
  if (w.chart == chart) return w;
  KForm out;
  out.degree = w.degree;
  out.chart = chart;
  const Atlas* atp = &at;
  int src = w.chart;
  auto push_eval = [atp, chart, src, h](const std::function<double(const Vec&, std::span<const Vec>)>& e,
                                        const Vec& u, std::span<const Vec> vs) {
    const Chart& ca = atp->charts[chart];
    const Chart& cb = atp->charts[src];
    Vec p = ca.from_coords(u);
    Vec us = cb.to_coords(p);
    std::array<Vec, 3> pushed;
    for (size_t t = 0; t < vs.size(); ++t)
      pushed[t] = transition_vector(*atp, chart, src, p, vs[t], h);
    return e(us, std::span<const Vec>(pushed.data(), vs.size()));
  };
  out.eval = [push_eval, e = w.eval](const Vec& u, std::span<const Vec> vs) {
    return push_eval(e, u, vs);
  };
  if (w.d_eval)
    out.d_eval = [push_eval, e = w.d_eval](const Vec& u, std::span<const Vec> vs) {
      return push_eval(e, u, vs);
    };
  return out;
}

// Argument differential of an ambient phase function, as a 1-form in the
// given chart. Exact, so its derivative is zero.
inline KForm darg_form(const Atlas& at, int chart,
                       std::function<Phase(const Vec&)> h, double fd_step = 1e-5) {
  KForm w;
  w.degree = 1;
  w.chart = chart;
  w.eval = [fc = at.charts[chart].from_coords, h, fd_step](const Vec& u,
                                                           std::span<const Vec> vs) {
    double ap = h(fc(u + fd_step * vs[0])).raw;
    double am = h(fc(u - fd_step * vs[0])).raw;
    return reduce_angle(ap - am) / (2.0 * fd_step);
  };
  w.d_eval = [](const Vec&, std::span<const Vec>) { return 0.0; };
  return w;
}

// --- pullback integration ------------------------------------------------------

// Integral of a chart-local 1-form over an ambient curve segment; the curve
// is pulled into the form's chart and differentiated there. Panels follow
// the parameter width and the swept arc, whichever asks for more, so fast
// stretches get quadrature points in proportion to the motion.
inline double integrate_1form(const KForm& w, const Chart& ch,
                              const std::function<Vec(double)>& curve, double t0,
                              double t1, const Numerics& nm) {
  auto f = [&](double t) {
    Vec up = ch.to_coords(curve(t + nm.fd_step));
    Vec um = ch.to_coords(curve(t - nm.fd_step));
    Vec du = (1.0 / (2.0 * nm.fd_step)) * (up - um);
    std::array<Vec, 1> vs{du};
    return w.eval(ch.to_coords(curve(t)), std::span<const Vec>(vs.data(), 1));
  };
  double arc = 0.0;
  Vec prev = curve(t0);
  for (int k = 1; k <= 8; ++k) {
    Vec cur = curve(t0 + (t1 - t0) * k / 8.0);
    arc += dist(cur, prev);
    prev = cur;
  }
  int n = std::max<long>(std::lround((t1 - t0) * nm.panels_per_unit),
                         std::lround(std::ceil(arc * nm.panels_per_unit / 4.0)));
  return integrate_gl_n(f, t0, t1, nm.quad_order, n);
}

// Integral over an ambient curve of the gerbe pair form A_uv (A_vu = -A_uv).
inline double integrate_pair_form(const GerbeData& gd, int u, int v,
                                  const std::function<Vec(double)>& curve,
                                  double t0, double t1, const Numerics& nm) {
  if (u == v) return 0.0;
  if (u > v) return -integrate_pair_form(gd, v, u, curve, t0, t1, nm);
  const KForm& w = gd.A.at({u, v});
  return integrate_1form(w, gd.atlas->charts[w.chart], curve, t0, t1, nm);
}

// --- identity residuals ---------------------------------------------------------

// Worst-case residuals over the stored overlap samples. Phase defects are in
// radians; connection entries compare short-probe integrals against tracked
// argument increments, so clean data sits at finite-difference noise while a
// genuine defect shows up near its own size.
struct CheckReport {
  double cocycle = 0.0;
  double connection = 0.0;
  double curvature = 0.0;
  double curvature_glue = 0.0;

  double worst() const {
    return std::max({cocycle, connection, curvature, curvature_glue});
  }
};

namespace detail {

inline std::vector<const Vec*> spread(const std::vector<Vec>& pts, int want) {
  std::vector<const Vec*> out;
  size_t stride = std::max<size_t>(1, pts.size() / std::max(1, want));
  for (size_t s = 0; s < pts.size(); s += stride) out.push_back(&pts[s]);
  return out;
}

inline Vec random_unit(std::mt19937_64& rng, int dim) {
  std::normal_distribution<double> gauss;
  Vec v = Vec::zero(dim);
  double r = 0.0;
  while (r < 1e-3) {
    for (int d = 0; d < dim; ++d) v[d] = gauss(rng);
    r = norm(v);
  }
  return (1.0 / r) * v;
}

}  // namespace detail

inline CheckReport check_line_data(const LineData& ld, const Numerics& nm = {},
                                   std::uint64_t seed = 7, int per_overlap = 24) {
  const Atlas& at = *ld.atlas;
  CheckReport rep;
  auto rng = make_rng(seed);

  for (const auto& tup : at.tuples(3))
    for (const Vec* p : detail::spread(at.samples(tup), per_overlap)) {
      Phase d = ld.trans(tup[0], tup[1], *p) * ld.trans(tup[1], tup[2], *p) *
                ld.trans(tup[2], tup[0], *p);
      rep.cocycle = std::max(rep.cocycle, circle_dist(d.raw, 0.0));
    }

  if (ld.A.size() != at.charts.size()) return rep;  // phases only, nothing more to check

  const double len = 0.02;
  for (const auto& tup : at.tuples(2)) {
    int i = tup[0], j = tup[1];
    const Chart& ci = at.charts[i];
    for (const Vec* p : detail::spread(at.samples(tup), per_overlap)) {
      Vec v = len * detail::random_unit(rng, at.dim);
      Vec u0 = ci.to_coords(*p);
      auto curve = [&ci, u0, v](double t) { return ci.from_coords(u0 + t * v); };
      double lhs =
          integrate_1form(ld.A[j], at.charts[ld.A[j].chart], curve, -1.0, 1.0, nm) -
          integrate_1form(ld.A[i], at.charts[ld.A[i].chart], curve, -1.0, 1.0, nm);
      double rhs = arg_increment(
          [&](double t) { return ld.trans(i, j, curve(t)); }, -1.0, 1.0,
          nm.phase_guard);
      rep.connection = std::max(rep.connection, std::abs(lhs - rhs));
    }
  }
  return rep;
}

inline CheckReport check_gerbe_data(const GerbeData& gd, const Numerics& nm = {},
                                    std::uint64_t seed = 7, int per_overlap = 16) {
  const Atlas& at = *gd.atlas;
  CheckReport rep;
  auto rng = make_rng(seed);

  for (const auto& tup : at.tuples(4))
    for (const Vec* p : detail::spread(at.samples(tup), per_overlap)) {
      int i = tup[0], j = tup[1], k = tup[2], l = tup[3];
      Phase d = gd.triple(j, k, l, *p) * gd.triple(i, k, l, *p).inverse() *
                gd.triple(i, j, l, *p) * gd.triple(i, j, k, *p).inverse();
      rep.cocycle = std::max(rep.cocycle, circle_dist(d.raw, 0.0));
    }

  const double len = 0.02;
  for (const auto& tup : at.tuples(3)) {
    int i = tup[0], j = tup[1], k = tup[2];
    const Chart& ci = at.charts[i];
    for (const Vec* p : detail::spread(at.samples(tup), per_overlap)) {
      Vec v = len * detail::random_unit(rng, at.dim);
      Vec u0 = ci.to_coords(*p);
      auto curve = [&ci, u0, v](double t) { return ci.from_coords(u0 + t * v); };
      double lhs = integrate_pair_form(gd, i, j, curve, -1.0, 1.0, nm) +
                   integrate_pair_form(gd, j, k, curve, -1.0, 1.0, nm) +
                   integrate_pair_form(gd, k, i, curve, -1.0, 1.0, nm);
      double rhs = -arg_increment(
          [&](double t) { return gd.triple(i, j, k, curve(t)); }, -1.0, 1.0,
          nm.phase_guard);
      rep.connection = std::max(rep.connection, std::abs(lhs - rhs));
    }
  }

  for (const auto& tup : at.tuples(2)) {
    int i = tup[0], j = tup[1];
    KForm dA = exterior_derivative(gd.A.at({i, j}), nm.fd_step);
    KForm dFi = exterior_derivative(gd.F[i], nm.fd_step);
    KForm dFj = exterior_derivative(gd.F[j], nm.fd_step);
    for (const Vec* p : detail::spread(at.samples(tup), per_overlap)) {
      Vec v = detail::random_unit(rng, at.dim);
      Vec w = detail::random_unit(rng, at.dim);
      Vec ui = at.charts[i].to_coords(*p);
      Vec uj = at.charts[j].to_coords(*p);
      std::array<Vec, 2> ti{v, w};
      std::array<Vec, 2> tj{transition_vector(at, i, j, *p, v),
                            transition_vector(at, i, j, *p, w)};
      double fi = gd.F[i].eval(ui, std::span<const Vec>(ti.data(), 2));
      double fj = gd.F[j].eval(uj, std::span<const Vec>(tj.data(), 2));
      double da = dA.eval(ui, std::span<const Vec>(ti.data(), 2));
      rep.curvature = std::max(rep.curvature, std::abs(fj - fi - da));

      if (at.dim >= 3) {
        Vec x = detail::random_unit(rng, at.dim);
        std::array<Vec, 3> si{v, w, x};
        std::array<Vec, 3> sj{tj[0], tj[1], transition_vector(at, i, j, *p, x)};
        double gi = dFi.eval(ui, std::span<const Vec>(si.data(), 3));
        double gj = dFj.eval(uj, std::span<const Vec>(sj.data(), 3));
        rep.curvature_glue = std::max(rep.curvature_glue, std::abs(gi - gj));
      }
    }
  }
  return rep;
}

// --- gauge moves -----------------------------------------------------------------

struct LineGauge {
  std::vector<std::function<Phase(const Vec&)>> h;  // one per chart
};

// g'_ij = g_ij h_j h_i^-1, A'_i = A_i + darg h_i. Holonomy is unchanged.
inline LineData apply_gauge(const LineData& ld, const LineGauge& gg,
                            double fd_step = 1e-5) {
  const Atlas& at = *ld.atlas;
  if (gg.h.size() != at.charts.size())
    throw std::runtime_error("apply_gauge: one phase per chart required");
  LineData out;
  out.atlas = ld.atlas;
  for (const auto& [key, fn] : ld.g) {
    auto hi = gg.h[key.first];
    auto hj = gg.h[key.second];
    out.g[key] = [fn, hi, hj](const Vec& p) {
      return fn(p) * hj(p) * hi(p).inverse();
    };
  }
  for (size_t i = 0; i < ld.A.size(); ++i)
    out.A.push_back(
        form_sum(ld.A[i], darg_form(at, static_cast<int>(i), gg.h[i], fd_step)));
  return out;
}

struct GerbeGauge {
  std::map<std::pair<int, int>, std::function<Phase(const Vec&)>> h;  // i < j
  std::vector<KForm> B;  // one 1-form per chart
};

// g'_ijk = g_ijk h_jk h_ik^-1 h_ij, A'_ij = A_ij + B_j - B_i - darg h_ij,
// F'_i = F_i + dB_i. Surface holonomy is unchanged.
inline GerbeData apply_gauge(const GerbeData& gd, const GerbeGauge& gg,
                             double fd_step = 1e-5) {
  const Atlas& at = *gd.atlas;
  GerbeData out;
  out.atlas = gd.atlas;
  for (const auto& [key, fn] : gd.g) {
    auto hij = gg.h.at({key[0], key[1]});
    auto hik = gg.h.at({key[0], key[2]});
    auto hjk = gg.h.at({key[1], key[2]});
    out.g[key] = [fn, hij, hik, hjk](const Vec& p) {
      return fn(p) * hjk(p) * hik(p).inverse() * hij(p);
    };
  }
  for (const auto& [key, w] : gd.A) {
    KForm nw = form_sum(w, form_pullback(at, w.chart, gg.B[key.second]));
    nw = form_sum(nw, form_scale(-1.0, form_pullback(at, w.chart, gg.B[key.first])));
    nw = form_sum(nw, form_scale(-1.0, darg_form(at, w.chart, gg.h.at(key), fd_step)));
    out.A.emplace(key, std::move(nw));
  }
  for (size_t i = 0; i < gd.F.size(); ++i)
    out.F.push_back(form_sum(gd.F[i], exterior_derivative(gg.B[i], fd_step)));
  return out;
}

// --- deterministic gauge generators -----------------------------------------------

// Smooth ambient phase with modest argument swing; raw values are globally
// smooth, so argument differentials need no branch handling.
inline std::function<Phase(const Vec&)> random_phase_fn(std::mt19937_64& rng,
                                                        int ambient_dim) {
  std::uniform_real_distribution<double> un(-0.8, 0.8);
  double c0 = un(rng);
  Vec c = Vec::zero(ambient_dim);
  for (int a = 0; a < ambient_dim; ++a) c[a] = un(rng);
  double q = 0.5 * un(rng);
  return [c0, c, q](const Vec& p) {
    return Phase{c0 + dot(c, p) + q * p[0] * p[p.n - 1]};
  };
}

inline LineGauge random_line_gauge(const Atlas& at, std::mt19937_64& rng) {
  LineGauge g;
  for (int i = 0; i < at.n_charts(); ++i)
    g.h.push_back(random_phase_fn(rng, at.ambient_dim));
  return g;
}

// Chart 1-form with affine coefficients and a closed-form derivative.
inline KForm random_linear_form(std::mt19937_64& rng, int chart, int dim) {
  std::uniform_real_distribution<double> un(-0.5, 0.5);
  Vec b = Vec::zero(dim);
  std::array<std::array<double, 4>, 4> m{};
  for (int a = 0; a < dim; ++a) {
    b[a] = un(rng);
    for (int c = 0; c < dim; ++c) m[a][c] = un(rng);
  }
  KForm w;
  w.degree = 1;
  w.chart = chart;
  w.eval = [b, m, dim](const Vec& u, std::span<const Vec> vs) {
    double s = 0.0;
    for (int a = 0; a < dim; ++a) {
      double f = b[a];
      for (int c = 0; c < dim; ++c) f += m[a][c] * u[c];
      s += f * vs[0][a];
    }
    return s;
  };
  w.d_eval = [m, dim](const Vec&, std::span<const Vec> vs) {
    double s = 0.0;
    for (int a = 0; a < dim; ++a)
      for (int c = 0; c < dim; ++c)
        s += m[a][c] * (vs[0][c] * vs[1][a] - vs[1][c] * vs[0][a]);
    return s;
  };
  return w;
}

inline GerbeGauge random_gerbe_gauge(const Atlas& at, std::mt19937_64& rng) {
  GerbeGauge g;
  for (const auto& tup : at.tuples(2))
    g.h[{tup[0], tup[1]}] = random_phase_fn(rng, at.ambient_dim);
  for (int i = 0; i < at.n_charts(); ++i)
    g.B.push_back(random_linear_form(rng, i, at.dim));
  return g;
}

// --- trivial data and the induced connection ---------------------------------------

inline LineData trivial_line_data(const Atlas& at) {
  LineData ld;
  ld.atlas = &at;
  for (const auto& tup : at.tuples(2))
    ld.g[{tup[0], tup[1]}] = [](const Vec&) { return Phase{0.0}; };
  for (int i = 0; i < at.n_charts(); ++i) ld.A.push_back(zero_form(i, 1));
  return ld;
}

inline GerbeData trivial_gerbe_data(const Atlas& at) {
  GerbeData gd;
  gd.atlas = &at;
  for (const auto& tup : at.tuples(3))
    gd.g[{tup[0], tup[1], tup[2]}] = [](const Vec&) { return Phase{0.0}; };
  for (const auto& tup : at.tuples(2))
    gd.A.emplace(std::pair<int, int>{tup[0], tup[1]}, zero_form(tup[0], 1));
  for (int i = 0; i < at.n_charts(); ++i) gd.F.push_back(zero_form(i, 2));
  return gd;
}

// Normalized chart profile weights at p. Throws where all profiles vanish;
// the shipped atlases are sized so that never happens.
inline std::vector<double> chart_partition(const Atlas& at, const Vec& p) {
  std::vector<double> w(at.charts.size());
  double tot = 0.0;
  for (size_t a = 0; a < w.size(); ++a) {
    w[a] = chart_profile(at.charts[a].center_frac(p));
    tot += w[a];
  }
  if (tot <= 1e-9)
    throw std::runtime_error(at.name + ": chart profiles vanish at a point");
  for (double& x : w) x /= tot;
  return w;
}

// Connection induced by the transition phases: A_i = sum_a rho_a darg g_ai.
// Satisfies the pair identity whenever g satisfies the cocycle identity.
inline void set_default_connection(LineData& ld, double fd_step = 1e-5) {
  const Atlas* atp = ld.atlas;
  auto gmap = std::make_shared<
      const std::map<std::pair<int, int>, std::function<Phase(const Vec&)>>>(ld.g);
  ld.A.clear();
  for (int i = 0; i < atp->n_charts(); ++i) {
    KForm w;
    w.degree = 1;
    w.chart = i;
    w.eval = [atp, gmap, i, fd_step](const Vec& u, std::span<const Vec> vs) {
      const Chart& ci = atp->charts[i];
      Vec p = ci.from_coords(u);
      Vec pp = ci.from_coords(u + fd_step * vs[0]);
      Vec pm = ci.from_coords(u - fd_step * vs[0]);
      std::vector<double> rho = chart_partition(*atp, p);
      double s = 0.0;
      for (int a = 0; a < atp->n_charts(); ++a) {
        if (a == i || rho[a] == 0.0) continue;
        auto it = gmap->find({std::min(a, i), std::max(a, i)});
        if (it == gmap->end())
          throw std::runtime_error("default connection: missing transition");
        Phase gp = a < i ? it->second(pp) : it->second(pp).inverse();
        Phase gm = a < i ? it->second(pm) : it->second(pm).inverse();
        s += rho[a] * reduce_angle(gp.raw - gm.raw) / (2.0 * fd_step);
      }
      return s;
    };
    ld.A.push_back(std::move(w));
  }
}

}  // namespace gerbes
