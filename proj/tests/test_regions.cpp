#include <doctest.h>

#include "blenderlab/regions.hpp"

using namespace blenderlab;

TEST_CASE("disc and annulus margins") {
    Region d = Region::disc(cplx(0.0), 1.0);
    CHECK(d.margin(cplx(0.0)) == doctest::Approx(1.0));
    CHECK(d.margin(cplx(2.0)) == doctest::Approx(-1.0));

    Region a = Region::annulus(cplx(0.0), 0.25, 4.0);
    CHECK(a.margin(cplx(1.0)) == doctest::Approx(0.75));
    CHECK(a.margin(cplx(0.1)) < 0);
    CHECK(a.margin(cplx(5.0)) < 0);
}

TEST_CASE("scaling equivariance of disc margins") {
    Rng rng(11);
    Region d = Region::disc(cplx(0.4, -0.3), 1.7);
    for (int k = 0; k < 50; ++k) {
        cplx t = rng.in_disc(3.0);
        if (std::abs(t) < 0.1) t += cplx(0.5);
        cplx x = rng.in_disc(4.0);
        Region s = Region::scaled(d, t);
        CHECK(s.margin(t * x) == doctest::Approx(std::abs(t) * d.margin(x)).epsilon(1e-12));
    }
}

TEST_CASE("polygon membership is stable under boundary refinement") {
    Rng rng(17);
    auto circle_polygon = [](int n) {
        std::vector<cplx> pts;
        for (int k = 0; k < n; ++k)
            pts.push_back(std::polar(1.0, 2.0 * kPi * k / n) + cplx(0.2, 0.1));
        return Region::polygon(pts);
    };
    Region coarse = circle_polygon(64);
    Region fine = circle_polygon(128);
    double max_edge = 2.0 * kPi / 64.0;
    for (int k = 0; k < 300; ++k) {
        cplx x = cplx(0.2, 0.1) + rng.in_disc(1.6);
        double m = coarse.margin(x);
        if (std::abs(m) <= 2.0 * max_edge) continue;  // too close to call
        CHECK((coarse.margin(x) >= 0) == (fine.margin(x) >= 0));
    }
}

TEST_CASE("affine transport is exact for discs") {
    Region d = Region::disc(cplx(1.0, 1.0), 0.5);
    Region img = d.affine(cplx(0.0, 2.0), cplx(-1.0));
    CHECK(img.kind() == Region::Kind::disc);
    CHECK(std::abs(img.center() - (cplx(0.0, 2.0) * cplx(1.0, 1.0) - 1.0)) < 1e-15);
    CHECK(img.radius() == doctest::Approx(1.0));
}

TEST_CASE("triangle cover on the cube roots of unity") {
    cplx c1(1.0), c2 = std::polar(1.0, 2.0 * kPi / 3.0), c3 = std::polar(1.0, 4.0 * kPi / 3.0);
    CoveringConstants cc = triangle_cover(c1, c2, c3);
    CHECK(cc.eps0 > 0.0);
    CHECK(cc.alpha0 > 0.0);
    CHECK(cc.cover_margin >= 1e-3);
    CHECK(cc.h_margin >= 1e-3);
    CHECK(cc.h_third_margin >= 1e-3);

    // grid certificate for both extreme moduli
    for (double rho : {1.0 - cc.alpha0, 1.0 + cc.alpha0}) {
        std::vector<Region> images;
        for (int j = 0; j < 3; ++j)
            images.push_back(Region::disc(cc.eps0 * cc.c[std::size_t(j)], rho));
        Certificate cert = covering_check(Region::disc(cplx(0.0), 1.0), images, 400, 1e-3);
        CHECK(cert.pass);
        CHECK(cert.worst_margin >= 1e-3);
    }

    // independent oracle: exhaustive grid membership without Region machinery
    {
        double rho = 1.0 + cc.alpha0;
        double worst = 1e9;
        for (int i = 0; i < 400; ++i)
            for (int j = 0; j < 400; ++j) {
                cplx zpt(-1.0 + 2.0 * (i + 0.5) / 400.0, -1.0 + 2.0 * (j + 0.5) / 400.0);
                if (std::abs(zpt) > 1.0) continue;
                double best = -1e9;
                for (cplx c : {c1, c2, c3})
                    best = std::max(best, rho - std::abs(zpt - cc.eps0 * c));
                worst = std::min(worst, best);
            }
        CHECK(worst >= 1e-3);
    }

    // the H pieces tile the disc and map into it
    cplx rho = cc.rho_h;
    for (int r = 1; r <= 6; ++r)
        for (int k = 0; k < 48; ++k) {
            cplx zpt = std::polar(0.995 * r / 6.0, 2.0 * kPi * k / 48.0);
            bool inside = false;
            for (const auto& H : cc.h_regions) inside = inside || H.contains(zpt);
            CHECK(inside);
        }
    for (int j = 0; j < 3; ++j) {
        for (cplx b : cc.h_regions[std::size_t(j)].boundary(128)) {
            cplx img = rho * b + cc.eps0 * cc.c[std::size_t(j)];
            CHECK(std::abs(img) < 1.0);
            cplx img3 = rho * (b / 3.0) + cc.eps0 * cc.c[std::size_t(j)];
            CHECK(std::abs(img3) < 1.0 / 3.0);
        }
    }
}

TEST_CASE("triangle cover rejects degenerate inputs") {
    CHECK_THROWS_AS(triangle_cover(cplx(-1.0), cplx(0.0), cplx(1.0)), Collinear);
    CHECK_THROWS_AS(triangle_cover(cplx(1.0), cplx(1.0, 1.0), cplx(0.5)), SumNonzero);
}

TEST_CASE("triangle cover is rotation invariant") {
    cplx c1(1.0), c2 = std::polar(1.0, 2.0 * kPi / 3.0), c3 = std::polar(1.0, 4.0 * kPi / 3.0);
    CoveringConstants base = triangle_cover(c1, c2, c3);
    for (double th : {0.3, 1.1, 2.7}) {
        cplx u = std::polar(1.0, th);
        CoveringConstants rot = triangle_cover(u * c1, u * c2, u * c3);
        CHECK(std::abs(rot.eps0 - base.eps0) < 1e-9);
        CHECK(std::abs(rot.alpha0 - base.alpha0) < 1e-9);
        CHECK(std::abs(rot.cover_margin - base.cover_margin) < 1e-9);
    }
}

TEST_CASE("covering check basics and monotonicity") {
    Region target = Region::disc(cplx(0.0), 1.0);
    Certificate pass = covering_check(target, {Region::disc(cplx(0.0), 2.0)}, 64);
    CHECK(pass.pass);
    CHECK(pass.worst_margin == doctest::Approx(1.0).epsilon(0.05));

    Certificate fail = covering_check(target, {Region::disc(cplx(0.0), 0.5)}, 64);
    CHECK_FALSE(fail.pass);
    CHECK(fail.worst_margin < 0);

    // enlarging an image never flips pass to fail on the same grid
    Rng rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        cplx c = rng.in_disc(0.5);
        double r = 0.8 + rng.next_double();
        Certificate small = covering_check(target, {Region::disc(c, r)}, 32);
        Certificate big = covering_check(target, {Region::disc(c, r + 0.3)}, 32);
        if (small.pass) CHECK(big.pass);
        CHECK(big.worst_margin >= small.worst_margin - 1e-12);
    }
}

TEST_CASE("union and complement margins") {
    Region u = Region::runion({Region::disc(cplx(-1.0), 1.0), Region::disc(cplx(1.0), 1.0)});
    CHECK(u.margin(cplx(-1.0)) == doctest::Approx(1.0));
    CHECK(u.margin(cplx(0.0)) <= 1e-12);  // on both boundaries
    CHECK(u.margin(cplx(3.0)) < 0);

    Region comp = Region::complement_in_disc(cplx(0.0), 2.0, Region::disc(cplx(0.0), 1.0));
    CHECK(comp.margin(cplx(1.5)) > 0);
    CHECK(comp.margin(cplx(0.5)) < 0);
    CHECK(comp.margin(cplx(2.5)) < 0);
}

TEST_CASE("product block margins") {
    ProductBlock block{Region::disc(cplx(0.0), 1.0), Region::disc(cplx(2.0), 0.5), 1};
    CHECK(block.margin(cplx(0.0), cplx(2.0)) == doctest::Approx(0.5));
    CHECK(block.margin(cplx(0.9), cplx(2.0)) == doctest::Approx(0.1));
    CHECK(block.margin(cplx(0.0), cplx(3.0)) < 0);
}
