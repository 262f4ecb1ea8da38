#include <doctest.h>

#include "blenderlab/blender.hpp"

using namespace blenderlab;

namespace {

std::array<PeriodicOrbit, 3> cube_root_orbits(const Polynomial& q) {
    std::array<PeriodicOrbit, 3> orbits;
    for (int j = 0; j < 3; ++j) {
        PeriodicOrbit o;
        o.points = {j == 0 ? cplx(1.0) : std::polar(1.0, 2.0 * kPi * j / 3.0)};
        o.period = 1;
        o.multiplier = q.eval_jet(o.points[0]).second;
        o.classification = classify_multiplier(o.multiplier);
        orbits[std::size_t(j)] = std::move(o);
    }
    return orbits;
}

struct W4Fixture {
    Polynomial q = Polynomial::monomial(4);
    std::array<PeriodicOrbit, 3> orbits = cube_root_orbits(q);
    CoveringConstants cc = triangle_cover(cplx(1.0), std::polar(1.0, 2.0 * kPi / 3.0),
                                          std::polar(1.0, 4.0 * kPi / 3.0));
    VerticalNeighborhoods nb = build_vertical_neighborhoods(q, orbits, 2);
};

W4Fixture& fixture() {
    static W4Fixture f;
    return f;
}

}  // namespace

TEST_CASE("vertical neighborhoods satisfy the tower relations") {
    auto& f = fixture();
    const auto& nb = f.nb;

    // pullback relation q^{m1}(V^{l+1}) = V^l on boundary samples
    for (int i = 0; i < 3; ++i) {
        const Region& deeper = nb.tower.back()[std::size_t(i)];
        const Region& level = nb.tower[nb.tower.size() - 2][std::size_t(i)];
        for (cplx w : deeper.boundary(64)) {
            cplx img = iterate(nb.q, w, nb.m1);
            CHECK(std::abs(level.margin(img)) < 1e-6);
        }
    }

    // exponential diameter decay, ratio near 1/multiplier
    CHECK(nb.diam_ratio < 1.0);
    CHECK(nb.diam_ratio == doctest::Approx(0.25).epsilon(0.15));

    // expansion of the iterate on the working level
    CHECK(nb.expansion_floor > 1.0);

    // mutual covering margins
    CHECK(nb.cover_margin > 0.0);
}

TEST_CASE("diameter ratio approaches the reciprocal multiplier") {
    auto& f = fixture();
    VerticalNeighborhoods deep = build_vertical_neighborhoods(f.q, f.orbits, 4);
    std::vector<double> diams;
    for (const auto& lvl : deep.tower) diams.push_back(lvl[0].diameter());
    double ratio = diams[diams.size() - 1] / diams[diams.size() - 2];
    CHECK(ratio == doctest::Approx(0.25).epsilon(0.05));
}

TEST_CASE("inverse branches follow the pinned branch") {
    auto& f = fixture();
    const auto& nb = f.nb;
    int L = nb.level * nb.m1;

    // the fixed point is its own preimage
    CHECK(std::abs(inverse_branch(nb, 0, 0, cplx(1.0)) - cplx(1.0)) < 1e-10);

    // principal root for a target near the fixed point 1
    cplx target = std::polar(1.012, 0.03);
    REQUIRE(nb.region(0).margin(target) > 0);
    cplx w = inverse_branch(nb, 0, 0, target);
    CHECK(std::abs(w - std::exp(std::log(target) / std::pow(4.0, nb.level))) < 1e-9);
    CHECK(std::abs(iterate(nb.q, w, L) - target) < 1e-9);

    // cross branches land inside their source neighborhood and push forward
    Rng rng(31);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            cplx rj = nb.base_points[std::size_t(j)];
            for (int t = 0; t < 8; ++t) {
                cplx tgt = rj + 0.3 * nb.region(j).diameter() * rng.in_disc(1.0);
                if (nb.region(j).margin(tgt) <= 0) continue;
                cplx pre = inverse_branch(nb, i, j, tgt);
                CHECK(nb.region(i).margin(pre) > 0);
                CHECK(std::abs(iterate(nb.q, pre, L) - tgt) <= 1e-9 * std::max(1.0, std::abs(tgt)));
            }
        }
}

TEST_CASE("graph transform of a constant graph under the model map") {
    auto& f = fixture();
    const auto& nb = f.nb;
    cplx rho(1.0 + f.cc.alpha0);
    SkewMap g = make_model_skew(rho, f.cc.eps0, f.cc.c, nb.base_points, f.q, nb.level);

    cplx z0(0.1, 0.05);
    VerticalGraph sigma = constant_graph(nb, 0, z0);
    CHECK(sigma.slope_bound == doctest::Approx(0.0));
    for (int j = 0; j < 3; ++j) {
        VerticalGraph out = graph_transform(g, nb, sigma, 0, j);
        cplx expect = rho * z0 + f.cc.eps0 * f.cc.c[0];  // source block sets the offset
        for (cplx v : out.nodes_sigma) CHECK(std::abs(v - expect) < 1e-12);
        CHECK(out.slope_bound < 1e-10);
    }
}

TEST_CASE("cone propagation: slopes stay below delta0 under the transform") {
    auto& f = fixture();
    const auto& nb = f.nb;
    cplx rho(1.0 + f.cc.alpha0);
    SkewMap g = make_model_skew(rho, f.cc.eps0, f.cc.c, nb.base_points, f.q, nb.level);
    double delta0 = 0.1;

    Rng rng(77);
    for (int trial = 0; trial < 50; ++trial) {
        int i = int(rng.next_u64() % 3);
        int j = int(rng.next_u64() % 3);
        cplx z0 = 0.3 * rng.unit();
        cplx slope = delta0 * 0.9 * rng.next_double() * rng.unit();
        cplx ri = nb.base_points[std::size_t(i)];
        VerticalGraph sigma =
            make_graph(nb, i, [z0, slope, ri](cplx w) { return z0 + slope * (w - ri); });
        REQUIRE(sigma.slope_bound < delta0);
        VerticalGraph out = graph_transform(g, nb, sigma, i, j);
        CHECK(out.slope_bound < delta0);
    }
}

TEST_CASE("two transforms equal one transform of the composed map") {
    auto& f = fixture();
    const auto& nb = f.nb;
    cplx rho(1.0 + f.cc.alpha0);
    SkewMap g = make_model_skew(rho, f.cc.eps0, f.cc.c, nb.base_points, f.q, nb.level);

    cplx ri = nb.base_points[0];
    VerticalGraph sigma = make_graph(nb, 0, [ri](cplx w) { return 0.1 + 0.05 * (w - ri); });
    VerticalGraph step1 = graph_transform(g, nb, sigma, 0, 1);
    VerticalGraph step2 = graph_transform(g, nb, step1, 1, 2);

    // composed route: h(h(sigma(v), v), q^L(v)) with v the two-step branch preimage
    int L = nb.level * nb.m1;
    BranchSolver b12 = nb.branch(1, 2);
    BranchSolver b01 = nb.branch(0, 1);
    double worst = 0;
    for (std::size_t k = 0; k < step2.nodes_w.size(); k += 8) {
        cplx w = step2.nodes_w[k];
        cplx u = b12.solve(w);
        cplx v = b01.solve(u);
        cplx direct = g.h_value(g.h_value(sigma.eval(v), v), iterate(nb.q, v, L));
        worst = std::max(worst, std::abs(direct - step2.nodes_sigma[k]));
    }
    CHECK(worst < 1e-7);
}

TEST_CASE("model map certifies and yields a long verified witness") {
    auto& f = fixture();
    const auto& nb = f.nb;
    cplx rho(1.0 + f.cc.alpha0);
    SkewMap g = make_model_skew(rho, f.cc.eps0, f.cc.c, nb.base_points, f.q, nb.level);

    BlenderCertificate cert = certify_repelling_blender(g, f.cc, nb, rho);
    REQUIRE(cert.pass);
    CHECK(cert.delta0 > 0);
    // the model is exactly the reference, so the proximity deviation is zero
    for (const auto& sub : cert.cert.sub_certificates)
        if (sub.check_name == "proximity")
            CHECK(sub.worst_margin == doctest::Approx(cert.delta0));

    VerticalGraph sigma = constant_graph(nb, 0, cplx(0.0));
    IntersectionWitness wit = blender_intersect(g, nb, cert.blocks, sigma, 50);
    CHECK(wit.worst_block_margin >= 0.0);
    CHECK(wit.max_step_residual < 1e-8);
    Certificate replay = verify_witness(g, cert.blocks, wit);
    CHECK(replay.pass);

    // nesting: a witness through the inner blocks also certifies on the full blocks
    IntersectionWitness inner = blender_intersect(g, nb, cert.blocks_inner, sigma, 30);
    Certificate on_full = verify_witness(g, cert.blocks, inner);
    CHECK(on_full.pass);
}

TEST_CASE("constant itinerary witness matches the fixed-point formula") {
    auto& f = fixture();
    const auto& nb = f.nb;
    cplx rho = -(1.0 + f.cc.alpha0);  // negative multiplier pulls the fixed point into the block
    SkewMap g = make_model_skew(rho, f.cc.eps0, f.cc.c, nb.base_points, f.q, nb.level);
    BlenderCertificate cert = certify_repelling_blender(g, f.cc, nb, rho);
    REQUIRE(cert.pass);

    cplx z_star = f.cc.eps0 * f.cc.c[0] / (cplx(1.0) - rho);
    VerticalGraph sigma = constant_graph(nb, 0, z_star);
    IntersectionWitness wit = blender_intersect(g, nb, cert.blocks, sigma, 50);
    for (int idx : wit.itinerary) CHECK(idx == 0);
    CHECK(std::abs(wit.z - z_star) < 1e-9);
    CHECK(std::abs(wit.w - cplx(1.0)) < 1e-9);
    CHECK(wit.max_step_residual < 1e-12);
}

TEST_CASE("graphs valued outside the horizontal pieces are rejected") {
    auto& f = fixture();
    const auto& nb = f.nb;
    cplx rho(1.0 + f.cc.alpha0);
    SkewMap g = make_model_skew(rho, f.cc.eps0, f.cc.c, nb.base_points, f.q, nb.level);
    BlenderCertificate cert = certify_repelling_blender(g, f.cc, nb, rho);
    VerticalGraph bad = constant_graph(nb, 0, cplx(5.0));
    CHECK_THROWS_AS(blender_intersect(g, nb, cert.blocks, bad, 5), NoAdmissibleBlock);
}

TEST_CASE("proximity clause fails under an oversized perturbation") {
    auto& f = fixture();
    const auto& nb = f.nb;
    cplx rho(1.0 + f.cc.alpha0);
    SkewMap g = make_model_skew(rho, f.cc.eps0, f.cc.c, nb.base_points, f.q, nb.level);
    BlenderCertificate base = certify_repelling_blender(g, f.cc, nb, rho);
    REQUIRE(base.pass);

    SkewMap bumped = perturb_skew(g, BivariatePolynomial::constant(2.0 * base.delta0));
    BlenderCertificate cert = certify_repelling_blender(bumped, f.cc, nb, rho);
    CHECK_FALSE(cert.pass);
    bool prox_failed = false;
    for (const auto& sub : cert.cert.sub_certificates)
        if (sub.check_name == "proximity" && !sub.pass) prox_failed = true;
    CHECK(prox_failed);
}

TEST_CASE("saddle model certifies; wrong modulus is reported, not thrown") {
    auto& f = fixture();
    const auto& nb = f.nb;
    cplx rho_s(1.0 - f.cc.alpha0);
    SkewMap gs = make_model_skew(rho_s, f.cc.eps0, f.cc.c, nb.base_points, f.q, nb.level);
    BlenderCertificate cert = certify_saddle_blender(gs, f.cc, nb, rho_s);
    CHECK(cert.pass);

    cplx rho_r(1.0 + f.cc.alpha0);
    SkewMap gr = make_model_skew(rho_r, f.cc.eps0, f.cc.c, nb.base_points, f.q, nb.level);
    BlenderCertificate wrong = certify_saddle_blender(gr, f.cc, nb, rho_r);
    CHECK_FALSE(wrong.pass);
    REQUIRE(!wrong.cert.sub_certificates.empty());
    CHECK(wrong.cert.sub_certificates[0].check_name == "rho_modulus");
    CHECK_FALSE(wrong.cert.sub_certificates[0].pass);
}

TEST_CASE("saddle witness stays in the blocks through the image covering") {
    auto& f = fixture();
    const auto& nb = f.nb;
    cplx rho_s(1.0 - f.cc.alpha0);
    SkewMap gs = make_model_skew(rho_s, f.cc.eps0, f.cc.c, nb.base_points, f.q, nb.level);
    BlenderCertificate cert = certify_saddle_blender(gs, f.cc, nb, rho_s);
    REQUIRE(cert.pass);
    IntersectionWitness wit = saddle_backward_witness(gs, f.cc, nb, rho_s, cert.blocks, 50);
    CHECK(wit.worst_block_margin >= 0.0);
    CHECK(wit.max_step_residual < 1e-8);
    CHECK(verify_witness(gs, cert.blocks, wit).pass);
}

TEST_CASE("robustness shadow at quarter and double margin") {
    auto& f = fixture();
    const auto& nb = f.nb;
    cplx rho(1.0 + f.cc.alpha0);
    SkewMap g = make_model_skew(rho, f.cc.eps0, f.cc.c, nb.base_points, f.q, nb.level);
    BlenderCertificate base = certify_repelling_blender(g, f.cc, nb, rho);
    REQUIRE(base.pass);
    double m = base.cert.worst_margin;
    REQUIRE(m > 0);

    auto random_perturbation = [&](double target_sup, std::uint64_t seed) {
        Rng rng(seed);
        std::vector<std::vector<cplx>> tab(3, std::vector<cplx>(3));
        for (auto& row : tab)
            for (auto& c : row) c = rng.in_disc(1.0);
        BivariatePolynomial p{tab};
        double sup = 0;
        for (cplx z : detail::sample_disc(2.0, 4, 16))
            for (int j = 0; j < 3; ++j)
                for (cplx w : nb.region(j).boundary(16)) sup = std::max(sup, std::abs(p(z, w)));
        return p * cplx(target_sup / sup);
    };

    auto proximity_margin = [](const BlenderCertificate& c) {
        for (const auto& sub : c.cert.sub_certificates)
            if (sub.check_name == "proximity") return sub.worst_margin;
        return -1.0;
    };
    double base_prox = proximity_margin(base);

    int pass_small = 0, degraded_large = 0;
    for (int t = 0; t < 5; ++t) {
        SkewMap small = perturb_skew(g, random_perturbation(m / 4.0, 1000 + t));
        BlenderCertificate cs = certify_repelling_blender(small, f.cc, nb, rho);
        if (cs.pass) ++pass_small;
        SkewMap large = perturb_skew(g, random_perturbation(2.0 * m, 2000 + t));
        BlenderCertificate cl = certify_repelling_blender(large, f.cc, nb, rho);
        // fail outright, or the proximity clause visibly lost its slack
        if (!cl.pass || proximity_margin(cl) <= base_prox - m) ++degraded_large;
    }
    CHECK(pass_small == 5);
    CHECK(degraded_large == 5);
}

TEST_CASE("vertical line under a product map develops a flat admissible graph") {
    auto& f = fixture();
    const auto& nb = f.nb;
    std::vector<ProductBlock> blocks;
    auto hs = make_h_regions(f.cc.c, f.cc.eta, cplx(1.0 + f.cc.alpha0));
    for (int j = 0; j < 3; ++j) blocks.push_back({hs[std::size_t(j)], nb.region(j), j});

    SkewMap prod = make_poly_skew(BivariatePolynomial::monomial(2, 0), f.q, nb.level, "product");
    CurveCheckResult good = postcritical_curve_check(prod, cplx(0.45), nb, blocks, 3);
    CHECK(good.cert.pass);
    CHECK(good.cert.params["slope"].get<double>() == doctest::Approx(0.0));
    REQUIRE(good.witness.has_value());
    CHECK(good.witness->worst_block_margin >= 0.0);

    // a nearly horizontal image curve can never be cone tangent
    SkewMap steep =
        make_poly_skew(BivariatePolynomial::monomial(0, 1, 40.0), f.q, nb.level, "steep");
    CurveCheckResult bad = postcritical_curve_check(steep, cplx(0.3), nb, blocks, 3);
    CHECK_FALSE(bad.cert.pass);
}

TEST_CASE("branch seeds respect the extra cover targets") {
    Polynomial q7 = Polynomial::monomial(7);
    std::array<PeriodicOrbit, 3> s_orbits;
    for (int j = 0; j < 3; ++j) {
        PeriodicOrbit o;
        o.points = {-(j == 0 ? cplx(1.0) : std::polar(1.0, 2.0 * kPi * j / 3.0))};
        o.period = 1;
        o.multiplier = q7.eval_jet(o.points[0]).second;
        o.classification = classify_multiplier(o.multiplier);
        s_orbits[std::size_t(j)] = std::move(o);
    }
    NbOptions opts;
    for (int j = 0; j < 3; ++j)
        opts.extra_cover_targets.push_back(j == 0 ? cplx(1.0)
                                                  : std::polar(1.0, 2.0 * kPi * j / 3.0));
    VerticalNeighborhoods nb = build_vertical_neighborhoods(q7, s_orbits, 2, opts);
    REQUIRE(nb.extra_targets.size() == 3);
    for (int i = 0; i < 3; ++i)
        for (int t = 0; t < 3; ++t) {
            BranchSolver bs = nb.extra_branch(i, t);
            cplx pre = bs.solve(nb.extra_targets[std::size_t(t)]);
            CHECK(nb.region(i).margin(pre) > 0);
            CHECK(std::abs(iterate(q7, pre, nb.level) - nb.extra_targets[std::size_t(t)]) < 1e-9);
        }
}
