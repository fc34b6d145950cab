#pragma once

// Concrete data sets: the charge-n circle bundle on the sphere in two
// presentations, flat torus bundles, and the charge-n gerbe on the
// 3-sphere in two presentations, together with the loops and closed
// surfaces the verification suites probe them with.

#include "gerbes/cech.hpp"
#include "gerbes/paths.hpp"

namespace gerbes {

// --- charge-n bundle on the two-cap sphere -----------------------------------

// Both caps use the same coordinate formula, with s^2 = 3 the squared
// coordinate scale: A = n s^2 (u0 du1 - u1 du0)/(1 + s^2 |u|^2), whose
// derivative 2 n s^2/(1 + s^2 |u|^2)^2 du0^du1 integrates to 2 pi n over the
// sphere. The transition phase is -n times the ambient azimuth; smoothness
// of both chart forms pins that sign.
inline LineData monopole_line(int n) {
  const Atlas& at = atlas_s2_two();
  LineData ld;
  ld.atlas = &at;
  ld.g[{0, 1}] = [n](const Vec& p) {
    return Phase{-n * std::atan2(p[1], p[0])};
  };
  const double s2 = 3.0;
  for (int i = 0; i < 2; ++i) {
    KForm w;
    w.degree = 1;
    w.chart = i;
    w.eval = [n, s2](const Vec& u, std::span<const Vec> vs) {
      double r2 = u[0] * u[0] + u[1] * u[1];
      return n * s2 * (u[0] * vs[0][1] - u[1] * vs[0][0]) / (1.0 + s2 * r2);
    };
    w.d_eval = [n, s2](const Vec& u, std::span<const Vec> vs) {
      double r2 = u[0] * u[0] + u[1] * u[1];
      double den = 1.0 + s2 * r2;
      return 2.0 * n * s2 / (den * den) *
             (vs[0][0] * vs[1][1] - vs[0][1] * vs[1][0]);
    };
    ld.A.push_back(std::move(w));
  }
  return ld;
}

// --- charge-n bundle from rotor sections on the tetrahedral cover -------------

namespace detail {

struct Quat {
  double w = 1.0, x = 0.0, y = 0.0, z = 0.0;
};

inline Quat qmul(const Quat& a, const Quat& b) {
  return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
          a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
          a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
          a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}
inline Quat qconj(const Quat& a) { return {a.w, -a.x, -a.y, -a.z}; }
inline Quat qnormalize(const Quat& a) {
  double r = std::sqrt(a.w * a.w + a.x * a.x + a.y * a.y + a.z * a.z);
  if (r < 1e-14) throw std::runtime_error("qnormalize: zero quaternion");
  return {a.w / r, a.x / r, a.y / r, a.z / r};
}
inline Quat qimag(const Vec& p) { return {0.0, p[0], p[1], p[2]}; }

// Unit quaternion conjugating the unit imaginary c onto p; defined while
// p != -c.
inline Quat rotor(const Vec& c, const Vec& p) {
  Quat pc = qmul(qimag(p), qimag(c));
  return qnormalize({1.0 - pc.w, -pc.x, -pc.y, -pc.z});
}

}  // namespace detail

// Each chart carries the section p -> rotor(c_a -> p) rotor(c_0 -> c_a) of
// the unit-quaternion bundle over the sphere. Transitions divide two
// sections of the same fiber and land in the circle stabilizing c_0, so the
// cocycle identity holds exactly, not merely to quadrature accuracy. The
// charge-n data takes the n-th power; the connection is the induced one.
inline LineData rotor_line(int n) {
  const Atlas& at = atlas_s2_four();
  LineData ld;
  ld.atlas = &at;
  const Vec c0 = at.charts[0].center_ambient;
  std::array<detail::Quat, 4> frame;
  for (int a = 0; a < 4; ++a)
    frame[a] = detail::rotor(c0, at.charts[a].center_ambient);
  for (const auto& tup : at.tuples(2)) {
    int a = tup[0], b = tup[1];
    Vec ca = at.charts[a].center_ambient;
    Vec cb = at.charts[b].center_ambient;
    detail::Quat ha = frame[a], hb = frame[b];
    ld.g[{a, b}] = [n, ca, cb, ha, hb, c0](const Vec& p) {
      detail::Quat za = detail::qmul(detail::rotor(ca, p), ha);
      detail::Quat zb = detail::qmul(detail::rotor(cb, p), hb);
      detail::Quat z = detail::qmul(detail::qconj(zb), za);
      double y = z.x * c0[0] + z.y * c0[1] + z.z * c0[2];
      return Phase{n * std::atan2(y, z.w)};
    };
  }
  set_default_connection(ld);
  return ld;
}

// --- flat bundles on the torus -------------------------------------------------

// Trivial transitions with the translation-invariant connection whose
// cycle holonomies are a and b. Chart coordinates are angle offsets over
// radius 2.5, hence the constant conversion factor.
inline LineData torus_flat_line(double a, double b) {
  const Atlas& at = atlas_t2();
  LineData ld = trivial_line_data(at);
  for (int i = 0; i < at.n_charts(); ++i) {
    KForm w = zero_form(i, 1);
    w.eval = [a, b](const Vec&, std::span<const Vec> vs) {
      return (2.5 / tau) * (a * vs[0][0] + b * vs[0][1]);
    };
    ld.A[i] = std::move(w);
  }
  return ld;
}

// --- charge-n gerbe on the three-sphere ----------------------------------------

// Monotone profile of the polar angle, rising from 0 to 1 strictly inside
// the two-cap overlap band (flat outside [4 pi/9, 5 pi/9]).
inline double s3_profile(double chi) {
  return beta_step((chi - pi / 3.0) / (pi / 3.0));
}
inline double s3_profile_prime(double chi) {
  return beta_step_prime((chi - pi / 3.0) / (pi / 3.0)) * 3.0 / pi;
}

namespace detail {

inline double s3_polar(const Vec& p) {
  return std::acos(std::clamp(p[3], -1.0, 1.0));
}

// Pullback of the unit-sphere area form under the direction map
// p -> (p1, p2, p3)/|(p1, p2, p3)|, on ambient tangents of the 3-sphere.
inline double omega_ambient(const Vec& p, const Vec& X, const Vec& Y) {
  Vec d{p[0], p[1], p[2]};
  double rho = norm(d);
  Vec D = (1.0 / rho) * d;
  Vec x3{X[0], X[1], X[2]};
  Vec y3{Y[0], Y[1], Y[2]};
  Vec dx = (1.0 / rho) * (x3 - dot(D, x3) * D);
  Vec dy = (1.0 / rho) * (y3 - dot(D, y3) * D);
  return dot(D, cross3(dx, dy));
}

// The global curvature 3-form on ambient tangents: (n/2) mu'(chi) dchi ^ omega.
inline double curv3_ambient(int n, const Vec& p, const Vec& X, const Vec& Y,
                            const Vec& Z) {
  double chi = s3_polar(p);
  double mp = s3_profile_prime(chi);
  if (mp == 0.0) return 0.0;
  double sn = std::sqrt(std::max(1e-300, 1.0 - p[3] * p[3]));
  auto dchi = [sn](const Vec& V) { return -V[3] / sn; };
  return 0.5 * n * mp *
         (dchi(X) * omega_ambient(p, Y, Z) - dchi(Y) * omega_ambient(p, X, Z) +
          dchi(Z) * omega_ambient(p, X, Y));
}

// Chart 2-form evaluating an ambient-defined 2-form through the embedding.
inline KForm ambient_2form(const Atlas& at, int chart,
                           std::function<double(const Vec&, const Vec&, const Vec&)> w2,
                           std::function<double(const Vec&, const Vec&, const Vec&,
                                                const Vec&)> dw3,
                           double h = 1e-6) {
  KForm f;
  f.degree = 2;
  f.chart = chart;
  auto fc = at.charts[chart].from_coords;
  auto push = [fc, h](const Vec& u, const Vec& v) {
    return (1.0 / (2.0 * h)) * (fc(u + h * v) - fc(u - h * v));
  };
  f.eval = [fc, push, w2](const Vec& u, std::span<const Vec> vs) {
    return w2(fc(u), push(u, vs[0]), push(u, vs[1]));
  };
  f.d_eval = [fc, push, dw3](const Vec& u, std::span<const Vec> vs) {
    return dw3(fc(u), push(u, vs[0]), push(u, vs[1]), push(u, vs[2]));
  };
  return f;
}

}  // namespace detail

namespace detail {

// Northern curvature in big-cap coordinates (scale s = sqrt 3): the profile
// times the direction-sphere area form O_w/|w|^3, with w = s u.
inline KForm s3_north_form(int n, int chart) {
  const double s = std::sqrt(3.0);
  KForm f;
  f.degree = 2;
  f.chart = chart;
  f.eval = [n, s](const Vec& u, std::span<const Vec> vs) {
    Vec w = s * u;
    double r = norm(w);
    double m = s3_profile(2.0 * std::atan(r));
    if (m == 0.0) return 0.0;
    return 0.5 * n * m * dot(w, cross3(s * vs[0], s * vs[1])) / (r * r * r);
  };
  f.d_eval = [n, s](const Vec& u, std::span<const Vec> vs) {
    Vec w = s * u;
    double r = norm(w);
    double mp = s3_profile_prime(2.0 * std::atan(r));
    if (mp == 0.0) return 0.0;
    double det = dot(s * vs[0], cross3(s * vs[1], s * vs[2]));
    return n * mp / ((1.0 + r * r) * r * r) * det;
  };
  return f;
}

// Southern curvature in antipodal-cap coordinates; the coordinate flip makes
// the direction form appear with the opposite sign, and the profile enters
// through chi = pi - 2 atan |v|.
inline KForm s3_south_form(int n, int chart) {
  const double s = std::sqrt(3.0);
  KForm f;
  f.degree = 2;
  f.chart = chart;
  f.eval = [n, s](const Vec& u, std::span<const Vec> vs) {
    Vec v = s * u;
    double r = norm(v);
    double m = s3_profile(pi - 2.0 * std::atan(r));
    if (m == 1.0) return 0.0;
    return 0.5 * n * (1.0 - m) * dot(v, cross3(s * vs[0], s * vs[1])) / (r * r * r);
  };
  f.d_eval = [n, s](const Vec& u, std::span<const Vec> vs) {
    Vec v = s * u;
    double r = norm(v);
    double mp = s3_profile_prime(pi - 2.0 * std::atan(r));
    if (mp == 0.0) return 0.0;
    double det = dot(s * vs[0], cross3(s * vs[1], s * vs[2]));
    return n * mp / ((1.0 + r * r) * r * r) * det;
  };
  return f;
}

// Overlap potential in big-cap coordinates with the string along -d: the
// covector (d x w) / (r (r + d.w)), regular wherever w is not a negative
// multiple of d. Each consumer picks d so its own overlap never meets the
// string; dd is the direction-sphere area form no matter where d points.
inline KForm s3_pair_form_dir(int n, int chart, double d0, double d1,
                              double d2) {
  const double s = std::sqrt(3.0);
  KForm f;
  f.degree = 1;
  f.chart = chart;
  f.eval = [n, s, d0, d1, d2](const Vec& u, std::span<const Vec> vs) {
    Vec w = s * u;
    double r = norm(w);
    Vec a = s * vs[0];
    Vec d{{d0, d1, d2, 0.0}, 3};
    return -0.5 * n * dot(cross3(d, w), a) / (r * (r + dot(d, w)));
  };
  f.d_eval = [n, s](const Vec& u, std::span<const Vec> vs) {
    Vec w = s * u;
    double r = norm(w);
    return -0.5 * n * dot(w, cross3(s * vs[0], s * vs[1])) / (r * r * r);
  };
  return f;
}

inline KForm s3_pair_form(int n, int chart) {
  return s3_pair_form_dir(n, chart, 0.0, 0.0, 1.0);
}

// Phase of the spinor overlap <chi_j | 1 + dir(p).sigma | chi_k> for
// equatorial axes at azimuths phj and phk. Its darg is half the difference
// of the matching string potentials, and the phases around any axis
// triangle telescope to zero exactly, which is what keeps the triple
// identity and the quadruple cocycle sharp at once.
inline double s3_axis_overlap_arg(double phj, double phk, const Vec& p) {
  double r = std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
  double x = p[0] / r, y = p[1] / r, z = p[2] / r;
  std::complex<double> iu(0.0, 1.0);
  std::complex<double> v = (1.0 + z) + (x - iu * y) * std::exp(iu * phk) +
                           std::exp(-iu * phj) * (x + iu * y) +
                           std::exp(iu * (phk - phj)) * (1.0 - z);
  return std::arg(v);
}

}  // namespace detail

// Two-cap presentation. No triple overlaps exist, so the data is the pair
// potential and the two chart curvatures; their difference identity and the
// total flux 2 pi n are what the checkers and oracles verify. The overlap
// band wraps a whole direction sphere, so no string-free potential exists
// on it: the string runs along the negative w2 meridian, and consumers keep
// their probes off that meridian.
inline GerbeData gerbe_s3_two(int n) {
  const Atlas& at = atlas_s3_two();
  GerbeData gd;
  gd.atlas = &at;
  gd.A.emplace(std::pair<int, int>{0, 1}, detail::s3_pair_form(n, 0));
  gd.F.push_back(detail::s3_north_form(n, 0));
  gd.F.push_back(detail::s3_south_form(n, 1));
  return gd;
}

// Four-cap presentation: the big cap refines the northern one and the three
// tilted caps refine the southern one. Each big-small pair takes the string
// potential pointed away from its own lens (a string into the lens would
// put a pole where the holonomy graders integrate), so crossing from pair
// to pair rotates the string, and the big-chart triple phases pick up the
// spinor overlap of the two axes. Tilted pairs see matching curvatures and
// carry closed potentials. A fixed coboundary twist h_ab = exp(i c_ab p4)
// then makes every triple phase nontrivial without changing any holonomy.
inline GerbeData gerbe_s3_four(int n) {
  const Atlas& at = atlas_s3_four();
  const double c[4][4] = {{0.0, 0.7, -0.4, 1.1},
                          {-0.7, 0.0, 0.5, -0.8},
                          {0.4, -0.5, 0.0, 0.3},
                          {-1.1, 0.8, -0.3, 0.0}};
  auto az = [](int k) { return tau * (k - 1) / 3.0; };
  GerbeData gd;
  gd.atlas = &at;
  for (const auto& tup : at.tuples(3)) {
    double e = c[tup[0]][tup[1]] + c[tup[1]][tup[2]] - c[tup[0]][tup[2]];
    if (tup[0] == 0) {
      double phj = az(tup[1]), phk = az(tup[2]);
      gd.g[{tup[0], tup[1], tup[2]}] = [e, n, phj, phk](const Vec& p) {
        return Phase{e * p[3] - n * detail::s3_axis_overlap_arg(phj, phk, p)};
      };
    } else {
      gd.g[{tup[0], tup[1], tup[2]}] = [e](const Vec& p) {
        return Phase{e * p[3]};
      };
    }
  }
  for (const auto& tup : at.tuples(2)) {
    int a = tup[0], b = tup[1];
    KForm base = a == 0 ? detail::s3_pair_form_dir(n, 0, std::cos(az(b)),
                                                   std::sin(az(b)), 0.0)
                        : zero_form(a, 1);
    auto h = [cab = c[a][b]](const Vec& p) { return Phase{cab * p[3]}; };
    gd.A.emplace(std::pair<int, int>{a, b},
                 form_sum(base, form_scale(-1.0, darg_form(at, a, h))));
  }
  gd.F.push_back(detail::s3_north_form(n, 0));
  for (int k = 1; k < 4; ++k)
    gd.F.push_back(detail::ambient_2form(
        at, k,
        [n](const Vec& p, const Vec& X, const Vec& Y) {
          double m = s3_profile(detail::s3_polar(p));
          if (m == 1.0) return 0.0;
          return -0.5 * n * (1.0 - m) * detail::omega_ambient(p, X, Y);
        },
        [n](const Vec& p, const Vec& X, const Vec& Y, const Vec& Z) {
          return detail::curv3_ambient(n, p, X, Y, Z);
        }));
  return gd;
}

// --- loops and closed surfaces ---------------------------------------------------

inline Path latitude_loop(double theta) {
  return {[theta](double t) {
    double phi = tau * t;
    return Vec{std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi),
               std::cos(theta)};
  }};
}

// Pole-to-pole lune boundary: down the phi1 meridian, back up phi2.
inline Path meridian_bigon(double phi1, double phi2) {
  Path down = {[phi1](double t) {
    double th = pi * beta_step(t);
    return Vec{std::sin(th) * std::cos(phi1), std::sin(th) * std::sin(phi1),
               std::cos(th)};
  }};
  Path up = {[phi2](double t) {
    double th = pi * (1.0 - beta_step(t));
    return Vec{std::sin(th) * std::cos(phi2), std::sin(th) * std::sin(phi2),
               std::cos(th)};
  }};
  return concat(down, up);
}

inline Path torus_loop(int k1, int k2) {
  return {[k1, k2](double t) {
    double x = tau * k1 * t, y = tau * k2 * t;
    return Vec{std::cos(x), std::sin(x), std::cos(y), std::sin(y)};
  }};
}

namespace detail {

// Rotation within span{a, b} taking unit a to unit b, identity elsewhere.
inline std::function<Vec(const Vec&)> plane_rotation(const Vec& a, const Vec& b) {
  double ct = std::clamp(dot(a, b), -1.0, 1.0);
  if (ct < -1.0 + 1e-9)
    throw std::runtime_error("plane_rotation: antipodal endpoints");
  if (ct > 1.0 - 1e-12) return [](const Vec& x) { return x; };
  Vec e1 = a;
  Vec e2 = normalized(b - ct * a);
  double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
  return [e1, e2, ct, st](const Vec& x) {
    double x1 = dot(x, e1), x2 = dot(x, e2);
    return x + (ct - 1.0) * (x1 * e1 + x2 * e2) + st * (x1 * e2 - x2 * e1);
  };
}

}  // namespace detail

// Random smooth loop on the unit sphere of the atlas's ambient space,
// rotated to start and end at the basepoint and collared there.
inline Path based_fourier_loop(const Atlas& at, std::mt19937_64& rng,
                               int modes = 3, double amp = 0.15) {
  std::uniform_real_distribution<double> un(-1.0, 1.0);
  int dim = at.ambient_dim;
  std::vector<Vec> ca(modes, Vec::zero(dim)), cb(modes, Vec::zero(dim));
  for (int k = 0; k < modes; ++k)
    for (int d = 0; d < dim; ++d) {
      ca[k][d] = amp * un(rng) / (k + 1);
      cb[k][d] = amp * un(rng) / (k + 1);
    }
  Vec center = at.basepoint;
  auto raw = [center, ca, cb, modes](double t) {
    Vec p = center;
    for (int k = 0; k < modes; ++k) {
      p += std::cos(tau * (k + 1) * t) * ca[k];
      p += std::sin(tau * (k + 1) * t) * cb[k];
    }
    return normalized(p);
  };
  auto rot = detail::plane_rotation(raw(0.0), at.basepoint);
  return sub_path({[raw, rot](double t) { return rot(raw(t)); }}, 0.0, 1.0);
}

// The whole sphere swept by latitude circles; both end stages sit at poles.
inline TwoPath full_sphere_surface() {
  return {[](double s, double t) {
    double chi = pi * beta_step(s);
    double phi = tau * t;
    return Vec{std::sin(chi) * std::cos(phi), std::sin(chi) * std::sin(phi),
               std::cos(chi)};
  }};
}

// The slice 2-sphere of the 3-sphere at polar angle chi0, swept pole to
// pole. Sweep poles point along the first axis and the azimuth carries a
// fixed offset, keeping dyadic parameter lines off the potential's string.
inline TwoPath slice_sphere(double chi0) {
  return {[chi0](double s, double t) {
    double th = pi * beta_step(s);
    double phi = tau * t + 0.37;
    double sc = std::sin(chi0);
    return Vec{sc * std::cos(th), sc * std::sin(th) * std::cos(phi),
               sc * std::sin(th) * std::sin(phi), std::cos(chi0)};
  }};
}

}  // namespace gerbes
