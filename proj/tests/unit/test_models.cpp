#include <catch2/catch_amalgamated.hpp>

#include "gerbes/models.hpp"
#include "gerbes/quadrature.hpp"

using namespace gerbes;

namespace {

// Flux of a chart 2-form through the coordinate sphere of radius R,
// evaluated in polar coordinates; the form supplies the Jacobian.
double sphere_flux(const KForm& f, double R, int order = 10) {
  return integrate_gl2(
      [&](double th, double ph) {
        Vec u{R * std::sin(th) * std::cos(ph), R * std::sin(th) * std::sin(ph),
              R * std::cos(th)};
        Vec dth{R * std::cos(th) * std::cos(ph), R * std::cos(th) * std::sin(ph),
                -R * std::sin(th)};
        Vec dph{-R * std::sin(th) * std::sin(ph), R * std::sin(th) * std::cos(ph),
                0.0};
        std::array<Vec, 2> vs{dth, dph};
        return f.eval(u, std::span<const Vec>(vs));
      },
      0.0, pi, 0.0, tau, order, 3);
}

}  // namespace

TEST_CASE("two-cap charge data satisfies its identities and carries flux 2 pi n") {
  for (int n : {1, 2}) {
    LineData ld = monopole_line(n);
    CheckReport rep = check_line_data(ld);
    CAPTURE(n, rep.cocycle, rep.connection);
    CHECK(rep.worst() < 1e-8);

    // Flux through each cap's half, measured on the form itself in polar
    // coordinates: the equator sits at coordinate radius 1/sqrt(3), where
    // each half contributes pi n.
    double req = 1.0 / std::sqrt(3.0);
    for (int i = 0; i < 2; ++i) {
      double half = integrate_gl2(
          [&](double r, double ph) {
            Vec u{r * std::cos(ph), r * std::sin(ph)};
            Vec dr{std::cos(ph), std::sin(ph)};
            Vec dph{-r * std::sin(ph), r * std::cos(ph)};
            std::array<Vec, 2> vs{dr, dph};
            return exterior_derivative(ld.A[i]).eval(u, std::span<const Vec>(vs));
          },
          0.0, req, 0.0, tau, 10, 8);
      CHECK(half == Catch::Approx(pi * n).margin(1e-9));
    }

    // Closed-form derivative agrees with finite differencing of the form.
    KForm fd = ld.A[0];
    fd.d_eval = nullptr;
    std::mt19937_64 rng = make_rng(31);
    std::uniform_real_distribution<double> un(-0.6, 0.6);
    for (int k = 0; k < 10; ++k) {
      Vec u{un(rng), un(rng)};
      std::array<Vec, 2> vs{Vec{1.0, 0.3}, Vec{-0.2, 1.1}};
      double a = exterior_derivative(ld.A[0]).eval(u, std::span<const Vec>(vs));
      double b = exterior_derivative(fd).eval(u, std::span<const Vec>(vs));
      CHECK(std::abs(a - b) < 1e-7);
    }
  }
}

TEST_CASE("rotor sections give an exact cocycle and a compatible connection") {
  for (int n : {1, 2}) {
    LineData ld = rotor_line(n);
    CheckReport rep = check_line_data(ld);
    CAPTURE(n, rep.cocycle, rep.connection);
    CHECK(rep.cocycle < 1e-12);
    CHECK(rep.connection < 1e-6);
  }
}

TEST_CASE("flat torus data is exact to roundoff") {
  CheckReport rep = check_line_data(torus_flat_line(0.9, -1.7));
  CHECK(rep.worst() < 1e-10);
}

TEST_CASE("two-cap gerbe identities, slice fluxes, and total charge") {
  const double s = std::sqrt(3.0);
  for (int n : {1, 2}) {
    GerbeData gd = gerbe_s3_two(n);
    CheckReport rep = check_gerbe_data(gd);
    CAPTURE(n, rep.curvature, rep.curvature_glue);
    CHECK(rep.worst() < 1e-6);

    // Slice-sphere flux of the northern curvature equals 2 pi n times the
    // profile; at the profile's midpoint symmetry makes it exactly pi n.
    for (double chi : {4.0 * pi / 9.0, 1.3, pi / 2.0, 5.0 * pi / 9.0}) {
      double R = std::tan(chi / 2.0) / s;
      double flux = sphere_flux(gd.F[0], R);
      CHECK(flux == Catch::Approx(tau * n * s3_profile(chi)).margin(1e-8));
    }
    CHECK(s3_profile(pi / 2.0) == Catch::Approx(0.5).margin(1e-15));

    // Radial quadrature of the closed-form curvature derivative over its
    // supporting shell recovers the total charge.
    double total = integrate_gl(
        [&](double r) {
          Vec u{r, 0.0, 0.0};
          std::array<Vec, 3> vs{Vec{1.0, 0.0, 0.0}, Vec{0.0, 1.0, 0.0},
                                Vec{0.0, 0.0, 1.0}};
          return gd.F[0].d_eval(u, std::span<const Vec>(vs)) * 2.0 * tau * r * r;
        },
        0.42, 0.73, 12, 60);
    CHECK(total == Catch::Approx(tau * n).margin(1e-8));
  }
}

TEST_CASE("coordinate and ambient curvature evaluations agree") {
  const Atlas& at = atlas_s3_two();
  int n = 2;
  GerbeData gd = gerbe_s3_two(n);
  KForm north_amb = detail::ambient_2form(
      at, 0,
      [n](const Vec& p, const Vec& X, const Vec& Y) {
        double m = s3_profile(detail::s3_polar(p));
        if (m == 0.0) return 0.0;
        return 0.5 * n * m * detail::omega_ambient(p, X, Y);
      },
      [n](const Vec& p, const Vec& X, const Vec& Y, const Vec& Z) {
        return detail::curv3_ambient(n, p, X, Y, Z);
      });
  KForm south_amb = detail::ambient_2form(
      at, 1,
      [n](const Vec& p, const Vec& X, const Vec& Y) {
        double m = s3_profile(detail::s3_polar(p));
        if (m == 1.0) return 0.0;
        return -0.5 * n * (1.0 - m) * detail::omega_ambient(p, X, Y);
      },
      [n](const Vec& p, const Vec& X, const Vec& Y, const Vec& Z) {
        return detail::curv3_ambient(n, p, X, Y, Z);
      });
  std::mt19937_64 rng = make_rng(77);
  std::uniform_real_distribution<double> un(-0.55, 0.55);
  for (int k = 0; k < 12; ++k) {
    Vec u{un(rng), un(rng), un(rng)};
    std::array<Vec, 3> vs{Vec{1.0, 0.1, -0.2}, Vec{0.0, 1.0, 0.4},
                          Vec{0.3, -0.1, 1.0}};
    std::span<const Vec> pair(vs.data(), 2), triple(vs.data(), 3);
    CHECK(std::abs(gd.F[0].eval(u, pair) - north_amb.eval(u, pair)) < 1e-7);
    CHECK(std::abs(gd.F[1].eval(u, pair) - south_amb.eval(u, pair)) < 1e-7);
    CHECK(std::abs(gd.F[0].d_eval(u, triple) - north_amb.d_eval(u, triple)) < 1e-6);
    CHECK(std::abs(gd.F[1].d_eval(u, triple) - south_amb.d_eval(u, triple)) < 1e-6);
  }
}

TEST_CASE("four-cap gerbe refinement passes the checkers, twisted and gauged") {
  GerbeData gd = gerbe_s3_four(1);
  CheckReport rep = check_gerbe_data(gd);
  CAPTURE(rep.cocycle, rep.connection, rep.curvature, rep.curvature_glue);
  CHECK(rep.cocycle < 1e-10);
  CHECK(rep.worst() < 1e-6);

  std::mt19937_64 rng = make_rng(5);
  GerbeData gauged = apply_gauge(gd, random_gerbe_gauge(*gd.atlas, rng));
  CheckReport rep2 = check_gerbe_data(gauged);
  CAPTURE(rep2.cocycle, rep2.connection, rep2.curvature, rep2.curvature_glue);
  CHECK(rep2.worst() < 1e-5);
}

TEST_CASE("loop constructors produce closed unit-norm traces") {
  Path lat = latitude_loop(pi / 3.0);
  CHECK(lat.closed());
  for (double t : {0.0, 0.2, 0.45, 0.8}) CHECK(norm(lat(t)) == Catch::Approx(1.0));
  Vec q = lat(0.25);
  CHECK(q[1] == Catch::Approx(std::sin(pi / 3.0)).margin(1e-12));
  CHECK(q[2] == Catch::Approx(0.5).margin(1e-12));

  Path big = meridian_bigon(0.3, 1.1);
  CHECK(big.closed());
  CHECK(dist(big(0.0), Vec{0.0, 0.0, 1.0}) < 1e-12);
  CHECK(dist(big(0.5), Vec{0.0, 0.0, -1.0}) < 1e-12);
  for (double t : {0.1, 0.35, 0.62, 0.9}) CHECK(norm(big(t)) == Catch::Approx(1.0));

  Path tor = torus_loop(2, 3);
  CHECK(tor.closed());
  Vec w = tor(0.25);
  CHECK(dist(w, Vec{-1.0, 0.0, 0.0, -1.0}) < 1e-12);

  std::mt19937_64 rng = make_rng(42);
  for (const Atlas* at : {&atlas_s2_two(), &atlas_s3_four()}) {
    Path f = based_fourier_loop(*at, rng);
    CHECK(dist(f(0.0), at->basepoint) < 1e-12);
    CHECK(dist(f(1.0), at->basepoint) < 1e-12);
    CHECK(dist(f(0.03), at->basepoint) < 1e-12);
    for (double t : {0.2, 0.5, 0.77}) CHECK(norm(f(t)) == Catch::Approx(1.0));
  }
}

TEST_CASE("closed surface constructors collapse their ends and close slices") {
  TwoPath sph = full_sphere_surface();
  CHECK(dist(sph(0.0, 0.3), Vec{0.0, 0.0, 1.0}) < 1e-12);
  CHECK(dist(sph(0.08, 0.7), Vec{0.0, 0.0, 1.0}) < 1e-12);
  CHECK(dist(sph(1.0, 0.2), Vec{0.0, 0.0, -1.0}) < 1e-12);
  for (double s : {0.3, 0.5, 0.82}) {
    CHECK(dist(sph(s, 0.0), sph(s, 1.0)) < 1e-12);
    CHECK(norm(sph(s, 0.44)) == Catch::Approx(1.0));
  }

  double chi = 1.2;
  TwoPath sl = slice_sphere(chi);
  for (double s : {0.0, 0.35, 0.67, 1.0}) {
    CHECK(dist(sl(s, 0.0), sl(s, 1.0)) < 1e-12);
    Vec p = sl(s, 0.31);
    CHECK(norm(p) == Catch::Approx(1.0));
    CHECK(p[3] == Catch::Approx(std::cos(chi)).margin(1e-12));
  }
  CHECK(dist(sl(0.0, 0.1), sl(0.0, 0.9)) < 1e-12);
  CHECK(dist(sl(1.0, 0.1), sl(1.0, 0.9)) < 1e-12);
}
