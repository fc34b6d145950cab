#include <catch2/catch_amalgamated.hpp>

#include "gerbes/holonomy.hpp"
#include "gerbes/models.hpp"

using namespace gerbes;

namespace {

Numerics fine_numerics() {
  Numerics nm;
  nm.quad_order = 12;
  nm.panels_per_unit = 64;
  return nm;
}

// Geodesic circle of radius r around a point, inside both charts of an
// equatorial overlap.
Path overlap_circle(const Vec& center, double r) {
  Vec a{1, 0, 0, 0}, b{0, 1, 0, 0};
  a = normalized(a - dot(a, center) * center);
  b = normalized(b - dot(b, center) * center - dot(b, a) * a);
  return {[center, a, b, r](double t) {
    return std::cos(r) * center + std::sin(r) * std::cos(tau * t) * a +
           std::sin(r) * std::sin(tau * t) * b;
  }};
}

int distinct_vertex_count(const LabelledGrid2& g) {
  int ns = static_cast<int>(g.label.size());
  int nt = static_cast<int>(g.label[0].size());
  int count = 0;
  for (int i = 1; i < ns; ++i)
    for (int j = 1; j < nt; ++j) {
      int lab[4] = {g.label[i - 1][j - 1], g.label[i][j - 1], g.label[i][j],
                    g.label[i - 1][j]};
      int uniq = 0;
      for (int x = 0; x < 4; ++x) {
        bool seen = false;
        for (int y = 0; y < x; ++y) seen = seen || lab[y] == lab[x];
        if (!seen) ++uniq;
      }
      if (uniq >= 3) ++count;
    }
  return count;
}

}  // namespace

TEST_CASE("labelled grids cover the parameter domain") {
  Numerics nm;
  Atlas at = atlas_s2_two();

  LabelledGrid1 g = label_path(at, latitude_loop(2.0), nm);
  REQUIRE(g.cuts.front() == 0.0);
  REQUIRE(g.cuts.back() == 1.0);
  REQUIRE(g.label.size() + 1 == g.cuts.size());
  for (std::size_t k = 0; k + 1 < g.cuts.size(); ++k) {
    CHECK(g.cuts[k] < g.cuts[k + 1]);
    CHECK(g.label[k] >= 0);
    CHECK(g.label[k] < at.n_charts());
  }

  Atlas at3 = atlas_s3_two();
  LabelledGrid2 g2 = label_surface(at3, slice_sphere(1.5), nm);
  REQUIRE(g2.label.size() + 1 == g2.scuts.size());
  REQUIRE(g2.label[0].size() + 1 == g2.tcuts.size());
  for (auto& row : g2.label)
    for (int c : row) {
      CHECK(c >= 0);
      CHECK(c < at3.n_charts());
    }
  // rows share the label across the slice seam
  for (std::size_t i = 0; i < g2.label.size(); ++i)
    CHECK(g2.label[i].front() == g2.label[i].back());
}

TEST_CASE("loop holonomy matches the closed-form latitude values") {
  Numerics nm;
  double worst = 0.0;
  for (int n : {1, 2, 3}) {
    LineData ld = monopole_line(n);
    for (double th : {pi / 4, pi / 2, 3 * pi / 4}) {
      Phase h = line_holonomy(ld, latitude_loop(th), nm);
      worst = std::max(worst, circle_dist(h.raw, pi * n * (1.0 - std::cos(th))));
    }
  }
  CHECK(worst < 1e-8);
}

TEST_CASE("bigon holonomy sees only the wedge between its meridians") {
  Numerics nm;
  LineData ld = monopole_line(2);
  Phase h = line_holonomy(ld, meridian_bigon(0.4, 1.3), nm);
  CHECK(circle_dist(h.raw, 2.0 * (1.3 - 0.4)) < 1e-9);
}

TEST_CASE("flat torus holonomy reads off the cycle angles") {
  Numerics nm;
  LineData ld = torus_flat_line(0.3, 0.8);
  CHECK(circle_dist(line_holonomy(ld, torus_loop(1, 0), nm).raw, 0.3) < 1e-9);
  CHECK(circle_dist(line_holonomy(ld, torus_loop(0, 1), nm).raw, 0.8) < 1e-9);
  CHECK(circle_dist(line_holonomy(ld, torus_loop(2, -1), nm).raw, 2 * 0.3 - 0.8) <
        1e-9);
}

TEST_CASE("holonomy is a homomorphism on based loops") {
  Numerics nm = fine_numerics();
  LineData ld = monopole_line(1);
  auto rng = make_rng(21);
  double worst = 0.0, winv = 0.0;
  for (int k = 0; k < 6; ++k) {
    Path l1 = based_fourier_loop(*ld.atlas, rng);
    Path l2 = based_fourier_loop(*ld.atlas, rng);
    Phase h1 = line_holonomy(ld, l1, nm);
    Phase h2 = line_holonomy(ld, l2, nm);
    Phase h12 = line_holonomy(ld, concat(l1, l2), nm);
    worst = std::max(worst, circle_dist(h12.raw, h1.raw + h2.raw));
    winv = std::max(winv,
                    circle_dist(line_holonomy(ld, reverse(l1), nm).raw, -h1.raw));
  }
  CHECK(worst < 1e-7);
  CHECK(winv < 1e-10);
}

TEST_CASE("holonomy is invariant under thin deformations") {
  Numerics nm = fine_numerics();
  LineData ld = monopole_line(2);
  auto rng = make_rng(22);
  Path loop = based_fourier_loop(*ld.atlas, rng);
  Phase h0 = line_holonomy(ld, loop, nm);
  double wr = 0.0, wb = 0.0;
  for (int k = 0; k < 6; ++k) {
    wr = std::max(
        wr, circle_dist(h0.raw,
                        line_holonomy(ld, reparam(loop, random_reparam(rng)), nm).raw));
    wb = std::max(
        wb,
        circle_dist(
            h0.raw,
            line_holonomy(ld, reparam(loop, random_backtrack_warp(rng)), nm).raw));
  }
  CHECK(wr < 1e-8);
  CHECK(wb < 1e-7);
  // degenerate sweep: a loop that goes out and comes straight back
  Path there = sub_path(loop, 0.0, 0.4);
  Phase h = line_holonomy(ld, concat(there, reverse(there)), nm);
  CHECK(circle_dist(h.raw, 0.0) < 1e-8);
}

TEST_CASE("transport composes over subdivision and matches loop holonomy") {
  Numerics nm = fine_numerics();
  LineData ld = monopole_line(1);
  auto rng = make_rng(23);
  Path loop = based_fourier_loop(*ld.atlas, rng);
  Phase whole = line_holonomy(ld, loop, nm);
  std::uniform_real_distribution<double> un(0.15, 0.85);
  double worst = 0.0;
  for (int k = 0; k < 8; ++k) {
    double s = un(rng);
    int mid = detail::argmin_chart(*ld.atlas, loop(s));
    Phase a = path_transport(ld, sub_path(loop, 0.0, s), 0, mid, nm);
    Phase b = path_transport(ld, sub_path(loop, s, 1.0), mid, 0, nm);
    worst = std::max(worst, circle_dist(whole.raw, a.raw + b.raw));
  }
  CHECK(worst < 1e-7);
}

TEST_CASE("holonomy is unchanged by gauge moves") {
  Numerics nm;
  LineData ld = monopole_line(2);
  auto rng = make_rng(11);
  Path loop = based_fourier_loop(*ld.atlas, rng);
  Phase before = line_holonomy(ld, loop, nm);
  double worst = 0.0;
  for (int k = 0; k < 5; ++k) {
    LineData ld2 = apply_gauge(ld, random_line_gauge(*ld.atlas, rng));
    worst = std::max(worst, circle_dist(before.raw, line_holonomy(ld2, loop, nm).raw));
  }
  // floor set by the finite-difference argument derivative in the gauge forms
  CHECK(worst < 1e-4);
}

TEST_CASE("holonomy rejects open loops and bad endpoint charts") {
  Numerics nm;
  LineData ld = monopole_line(1);
  Path arc = sub_path(latitude_loop(1.0), 0.0, 0.5);
  CHECK_THROWS(line_holonomy(ld, arc, nm));
  // south chart does not contain the north-pole basepoint
  auto rng = make_rng(5);
  Path loop = based_fourier_loop(*ld.atlas, rng);
  CHECK_THROWS(path_transport(ld, loop, 1, 0, nm));
}

TEST_CASE("surface holonomy matches the slice flux profile") {
  Numerics nm;
  for (int n : {1, 2}) {
    GerbeData gd = gerbe_s3_two(n);
    double worst = 0.0;
    for (double chi : {1.1, 1.45, 1.5, pi / 2, 1.65, 1.9, 2.4}) {
      Phase w = gerbe_holonomy(gd, slice_sphere(chi), nm);
      worst = std::max(worst, circle_dist(w.raw, n * tau * s3_profile(chi)));
    }
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("surface holonomy agrees across the two gerbe presentations") {
  Numerics nm;
  GerbeData g2 = gerbe_s3_two(1);
  GerbeData g4 = gerbe_s3_four(1);

  // a slice too wide for the big cap, so the tilted charts participate
  TwoPath far_slice = slice_sphere(2.03);
  LabelledGrid2 grid = label_surface(*g4.atlas, far_slice, nm);
  CHECK(distinct_vertex_count(grid) >= 1);
  Phase w4 = gerbe_holonomy(g4, far_slice, nm);
  Phase w2 = gerbe_holonomy(g2, far_slice, nm);
  CHECK(circle_dist(w4.raw, w2.raw) < 1e-8);

  for (double chi : {1.5, 1.65}) {
    TwoPath s = slice_sphere(chi);
    CHECK(circle_dist(gerbe_holonomy(g4, s, nm).raw,
                      gerbe_holonomy(g2, s, nm).raw) < 1e-7);
  }

  Vec hub = g2.atlas->pair_info(0, 1).hub;
  for (double r : {0.3, 0.55}) {
    TwoPath dc = double_cone(*g2.atlas, 0, 1, overlap_circle(hub, r));
    CHECK(circle_dist(gerbe_holonomy(g4, dc, nm).raw,
                      gerbe_holonomy(g2, dc, nm).raw) < 1e-7);
  }
}

TEST_CASE("surface holonomy does not depend on admissible label choices") {
  Numerics nm;
  GerbeData g4 = gerbe_s3_four(1);
  TwoPath surf = slice_sphere(2.03);
  LabelledGrid2 g = label_surface(*g4.atlas, surf, nm);
  double base = detail::holonomy_over_grid(g4, surf, g, nm);
  int ns = static_cast<int>(g.label.size());
  int nt = static_cast<int>(g.label[0].size());
  int flips = 0;
  for (int i = 1; i + 1 < ns && flips < 4; ++i)
    for (int j = 1; j + 1 < nt && flips < 4; ++j) {
      int cur = g.label[i][j];
      bool border = g.label[i - 1][j] != cur || g.label[i + 1][j] != cur ||
                    g.label[i][j - 1] != cur || g.label[i][j + 1] != cur;
      if (!border) continue;
      auto pts = detail::cell_probes(surf, g.scuts[i], g.scuts[i + 1],
                                     g.tcuts[j], g.tcuts[j + 1]);
      for (int c = 0; c < g4.atlas->n_charts(); ++c) {
        if (c == cur) continue;
        bool ok = true;
        for (const Vec& p : pts)
          ok = ok && g4.atlas->charts[c].contains(p, nm.lebesgue_margin);
        if (!ok) continue;
        LabelledGrid2 flipped = g;
        flipped.label[i][j] = c;
        double alt = detail::holonomy_over_grid(g4, surf, flipped, nm);
        CHECK(circle_dist(base, alt) < 1e-7);
        ++flips;
        break;
      }
    }
  REQUIRE(flips >= 2);
}

TEST_CASE("surface holonomy is invariant under square warps and gauges") {
  Numerics nm;
  GerbeData g2 = gerbe_s3_two(1);
  auto rng = make_rng(16);
  TwoPath surf = slice_sphere(1.5);
  Phase w0 = gerbe_holonomy(g2, surf, nm);
  for (int k = 0; k < 3; ++k) {
    TwoPath warped = warp_surface(surf, random_square_warp(rng));
    CHECK(circle_dist(w0.raw, gerbe_holonomy(g2, warped, nm).raw) < 1e-6);
  }

  GerbeData g4 = gerbe_s3_four(1);
  TwoPath far_slice = slice_sphere(2.03);
  Phase before = gerbe_holonomy(g4, far_slice, nm);
  auto rng2 = make_rng(24);
  for (int k = 0; k < 4; ++k) {
    GerbeData gauged = apply_gauge(g4, random_gerbe_gauge(*g4.atlas, rng2));
    CHECK(circle_dist(before.raw, gerbe_holonomy(gauged, far_slice, nm).raw) < 1e-6);
  }
}

TEST_CASE("surface holonomy validates closure") {
  Numerics nm;
  GerbeData gd = gerbe_s3_two(1);
  TwoPath open_tube{[](double s, double t) {
    double chi = 1.2 + 0.4 * s;
    return Vec{std::sin(chi) * std::cos(tau * t), std::sin(chi) * std::sin(tau * t),
               0.0, std::cos(chi)};
  }};
  CHECK_THROWS(gerbe_holonomy(gd, open_tube, nm));
}

TEST_CASE("curvature integrals land on the integers") {
  Numerics nm;
  CHECK(std::abs(chern_number(monopole_line(0), nm) - 0.0) < 1e-9);
  CHECK(std::abs(chern_number(monopole_line(1), nm) - 1.0) < 1e-6);
  CHECK(std::abs(chern_number(monopole_line(2), nm) - 2.0) < 1e-6);
  CHECK(std::abs(chern_number(monopole_line(3), nm) - 3.0) < 1e-6);
  CHECK(std::abs(chern_number(torus_flat_line(0.3, 0.8), nm)) < 1e-12);

  // the default connection needs finer panels around its partition seams
  Numerics fine = fine_numerics();
  CHECK(std::abs(chern_number(rotor_line(1), fine) - 1.0) < 1e-6);
  CHECK(std::abs(chern_number(rotor_line(2), fine) - 2.0) < 2e-6);

  CHECK(std::abs(dd_number(gerbe_s3_two(1), nm) - 1.0) < 1e-5);
  CHECK(std::abs(dd_number(gerbe_s3_two(2), nm) - 2.0) < 1e-5);
  CHECK(std::abs(dd_number(gerbe_s3_four(1), nm) - 1.0) < 1e-5);
}

TEST_CASE("phase tracks lift continuously") {
  std::vector<double> raw;
  for (int k = 0; k <= 40; ++k) {
    double v = 0.3 * k;
    raw.push_back(reduce_angle(v));
  }
  std::vector<double> lifted = lift_track(raw);
  for (int k = 0; k <= 40; ++k)
    CHECK(std::abs(lifted[k] - 0.3 * k) < 1e-12);
}
