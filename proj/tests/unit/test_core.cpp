#include <catch2/catch_amalgamated.hpp>

#include "gerbes/core.hpp"

using namespace gerbes;

TEST_CASE("beta_step is a symmetric smooth step") {
  CHECK(beta_step(-2.0) == 0.0);
  CHECK(beta_step(0.0) == 0.0);
  CHECK(beta_step(1.0 / 3.0) == 0.0);
  CHECK(beta_step(2.0 / 3.0) == 1.0);
  CHECK(beta_step(1.0) == 1.0);
  CHECK(beta_step(5.0) == 1.0);
  CHECK(beta_step(0.5) == Catch::Approx(0.5).margin(1e-15));
  // Complementarity on a grid.
  for (int k = 0; k <= 40; ++k) {
    double t = k / 40.0;
    CHECK(beta_step(t) + beta_step(1.0 - t) == Catch::Approx(1.0).margin(1e-14));
  }
  // Monotone.
  double prev = -1.0;
  for (int k = 0; k <= 100; ++k) {
    double v = beta_step(k / 100.0);
    CHECK(v >= prev);
    prev = v;
  }
  // Flat to all orders at the joins: values just inside are astronomically small.
  CHECK(beta_step(1.0 / 3.0 + 1e-4) < 1e-100);
  CHECK(1.0 - beta_step(2.0 / 3.0 - 1e-4) < 1e-100);
}

TEST_CASE("beta_step_prime matches central differences") {
  for (double t : {0.36, 0.42, 0.5, 0.58, 0.64}) {
    double h = 1e-6;
    double fd = (beta_step(t + h) - beta_step(t - h)) / (2.0 * h);
    CHECK(beta_step_prime(t) == Catch::Approx(fd).margin(1e-6));
  }
  CHECK(beta_step_prime(0.2) == 0.0);
  CHECK(beta_step_prime(0.9) == 0.0);
}

TEST_CASE("chart_profile plateau and support") {
  CHECK(chart_profile(0.0) == 1.0);
  CHECK(chart_profile(0.85) == 1.0);
  CHECK(chart_profile(0.95) == 0.0);
  CHECK(chart_profile(1.5) == 0.0);
  CHECK(chart_profile(0.9) == Catch::Approx(0.5).margin(1e-15));
}

TEST_CASE("angle reduction and circle distance") {
  CHECK(circle_dist(0.1, 0.1 + 5.0 * tau) == Catch::Approx(0.0).margin(1e-12));
  CHECK(circle_dist(pi - 0.01, -pi + 0.01) == Catch::Approx(0.02).margin(1e-12));
  // Boundary tie: the sign of the +-pi representative is unspecified.
  CHECK(std::abs(reduce_angle(3.0 * pi)) == Catch::Approx(pi).margin(1e-12));
  CHECK(std::abs(reduce_angle(1234.567)) <= pi + 1e-12);
  Phase p{tau + 0.3};
  CHECK(p.reduced() == Catch::Approx(0.3).margin(1e-12));
  CHECK(phase_dist(Phase{0.3}, Phase{0.3 - 3 * tau}) == Catch::Approx(0.0).margin(1e-12));
  CHECK((Phase{0.2} * Phase{0.5}).raw == Catch::Approx(0.7));
  CHECK(Phase{0.2}.inverse().raw == Catch::Approx(-0.2));
  CHECK(std::abs(Phase{0.4}.unit() - std::polar(1.0, 0.4)) < 1e-15);
}

TEST_CASE("Vec arithmetic") {
  Vec a{1.0, 2.0, 3.0};
  Vec b{0.5, -1.0, 2.0};
  CHECK((a + b)[1] == Catch::Approx(1.0));
  CHECK((a - b)[2] == Catch::Approx(1.0));
  CHECK(dot(a, b) == Catch::Approx(1.0 * 0.5 - 2.0 + 6.0));
  CHECK(norm(Vec{3.0, 4.0}) == Catch::Approx(5.0));
  Vec c = cross3(Vec{1.0, 0.0, 0.0}, Vec{0.0, 1.0, 0.0});
  CHECK(c[2] == Catch::Approx(1.0));
  CHECK(norm(normalized(a)) == Catch::Approx(1.0));
}

TEST_CASE("halton radical inverse") {
  CHECK(halton(1, 2) == Catch::Approx(0.5));
  CHECK(halton(2, 2) == Catch::Approx(0.25));
  CHECK(halton(3, 2) == Catch::Approx(0.75));
  CHECK(halton(4, 2) == Catch::Approx(0.125));
  CHECK(halton(1, 3) == Catch::Approx(1.0 / 3.0));
  CHECK(halton(2, 3) == Catch::Approx(2.0 / 3.0));
  CHECK(halton(3, 3) == Catch::Approx(1.0 / 9.0));
}

TEST_CASE("Gauss-Legendre rules are exact for polynomials") {
  for (int order : {2, 4, 8, 16}) {
    const GLRule& r = gl_rule(order);
    REQUIRE(r.nodes.size() == static_cast<size_t>(order));
    double wsum = 0.0;
    for (double w : r.weights) wsum += w;
    CHECK(wsum == Catch::Approx(2.0).margin(1e-13));
    // Exact through degree 2*order - 1; integral over [-1,1] is 0 for odd
    // powers and 2/(k+1) for even powers.
    for (int k = 0; k <= 2 * order - 1; ++k) {
      double q = 0.0;
      for (int i = 0; i < order; ++i) q += r.weights[i] * std::pow(r.nodes[i], k);
      double exact = (k % 2 == 1) ? 0.0 : 2.0 / (k + 1.0);
      CHECK(q == Catch::Approx(exact).margin(1e-12));
    }
    // Ascending, symmetric nodes.
    for (size_t i = 1; i < r.nodes.size(); ++i) CHECK(r.nodes[i] > r.nodes[i - 1]);
    CHECK(r.nodes.front() == Catch::Approx(-r.nodes.back()).margin(1e-14));
  }
}

TEST_CASE("numerics presets") {
  Numerics a = Numerics::analytic();
  CHECK(a.quad_order == 8);
  CHECK(a.panels_per_unit == 16);
  Numerics f = Numerics::fast_oracle();
  CHECK(f.quad_order == 4);
  CHECK(f.panels_per_unit == 4);
}
