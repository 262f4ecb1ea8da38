#include <doctest.h>

#include "blenderlab/renorm.hpp"

using namespace blenderlab;

TEST_CASE("family presets carry primitive cube-root multipliers") {
    for (const ParabolicFamily& fam : {family_lambda_z_plus_z2(), family_period2_quadratic()}) {
        cplx rho0 = multiplier_of_family(fam, fam.lambda0);
        CHECK(std::abs(std::abs(rho0) - 1.0) < 1e-10);
        cplx r3 = rho0 * rho0 * rho0;
        CHECK(std::abs(r3 - cplx(1.0)) < 1e-10);
        CHECK(std::abs(rho0 - cplx(1.0)) > 0.5);  // primitive, not 1
    }
}

TEST_CASE("marked-orbit multipliers") {
    ParabolicFamily fam = family_lambda_z_plus_z2();
    CHECK(std::abs(multiplier_of_family(fam, cplx(0.5)) - cplx(0.5)) < 1e-14);
    cplx l0 = std::polar(1.0, 2.0 * kPi / 3.0);
    CHECK(std::abs(multiplier_of_family(fam, l0) - l0) < 1e-14);
}

TEST_CASE("segment multipliers: powers of lambda for the affine-quadratic family") {
    ParabolicFamily fam = family_lambda_z_plus_z2();  // m0 = 1, t0 = 3
    cplx lam(0.4, 0.2);
    auto b = segment_multipliers(fam, lam, -3, 6);
    CHECK(std::abs(b.at(0) - lam * lam) < 1e-14);
    CHECK(std::abs(b.at(1) - lam) < 1e-14);
    CHECK(std::abs(b.at(2) - cplx(1.0)) < 1e-14);
    CHECK(std::abs(b.at(-1) - lam * lam * lam) < 1e-14);  // the t0-th multiplier power
}

TEST_CASE("segment recurrence across random parameters") {
    Rng rng(5);
    for (const ParabolicFamily& fam : {family_lambda_z_plus_z2(), family_period2_quadratic()}) {
        int m1 = fam.m1();
        for (int t = 0; t < 50; ++t) {
            cplx lam = fam.lambda0 + 0.05 * rng.in_disc(1.0);
            auto b = segment_multipliers(fam, lam, -m1, 2 * m1);
            cplx rho = multiplier_of_family(fam, lam);
            for (int i = -m1; i + fam.m0 <= 2 * m1; ++i)
                CHECK(std::abs(b.at(i) - rho * b.at(i + fam.m0)) <=
                      1e-12 * std::max(1.0, std::abs(b.at(i))));
            cplx rho_t0 = rho;
            for (int k = 1; k < fam.t0; ++k) rho_t0 *= rho;
            CHECK(std::abs(b.at(-1) - rho_t0) <= 1e-12 * std::max(1.0, std::abs(rho_t0)));
        }
    }
}

TEST_CASE("period-2 family matches direct chain-rule products") {
    ParabolicFamily fam = family_period2_quadratic();
    cplx lam = fam.lambda0 * 1.01;
    Polynomial p = fam.at(lam);
    auto b = segment_multipliers(fam, lam, 0, fam.m1() - 1);
    // direct product of p' along the tail of the marked orbit
    std::vector<cplx> orbit{cplx(0.0)};
    for (int k = 0; k < fam.m1(); ++k) orbit.push_back(p(orbit.back()));
    for (int i = 0; i < fam.m1(); ++i) {
        cplx direct = 1.0;
        for (int k = i + 1; k < fam.m1(); ++k) direct *= p.eval_jet(orbit[std::size_t(k)]).second;
        CHECK(std::abs(b.at(i) - direct) <= 1e-12 * std::max(1.0, std::abs(direct)));
    }
}

TEST_CASE("coupling values vanish on fixed points and obey the equivariance") {
    ParabolicFamily fam = family_lambda_z_plus_z2();
    Polynomial q = Polynomial::monomial(2);
    cplx rho0 = multiplier_of_family(fam, fam.lambda0);

    // a fixed point of q fed in as a (non-minimal) period-3 point
    auto c_fixed = coupling_values(fam, q, {cplx(1.0)});
    CHECK(std::abs(c_fixed[0]) < 1e-10);
    CHECK(std::abs(coupling_function(fam, q, cplx(0.0))) < 1e-14);

    // equivariance over every period-3 solution
    auto orbits = periodic_points(q, 3);
    for (const auto& o : orbits)
        for (cplx r : o.points) {
            cplx lhs = coupling_function(fam, q, iterate(q, r, fam.m0));
            cplx rhs = rho0 * coupling_function(fam, q, r);
            CHECK(std::abs(lhs - rhs) < 1e-8);
        }
}

TEST_CASE("recursion base case and closed form at the return time") {
    ParabolicFamily fam = family_lambda_z_plus_z2();
    Polynomial q = Polynomial::monomial(2);
    cplx lam = 1.0007 * fam.lambda0;
    cplx eps(0.013, -0.004);

    RenormJet j0 = renorm_recursion(fam, lam, q, eps, 0);
    CHECK(std::abs(j0.g_k0) == 0.0);
    CHECK(std::abs(j0.g_k1(cplx(0.3, 0.1), cplx(0.9)) - cplx(0.3, 0.1)) < 1e-15);

    int m1 = fam.m1();
    RenormJet jm = renorm_recursion(fam, lam, q, eps, m1);
    CHECK(std::abs(jm.g_k0) < 1e-12);
    auto b = segment_multipliers(fam, lam, -1, m1 - 1);
    Rng rng(11);
    for (int t = 0; t < 100; ++t) {
        cplx z = rng.in_disc(2.0), w = rng.in_disc(1.5);
        cplx closed = b.at(-1) * z;
        cplx x = w;
        for (int i = 0; i < m1; ++i) {
            closed += eps * b.at(i) * x;
            x = q(x);
        }
        cplx got = jm.g_k1(z, w);
        CHECK(std::abs(got - closed) <= 1e-10 * std::max(1.0, std::abs(closed)));
    }
}

TEST_CASE("finite differences of the direct iterate match the recursion") {
    ParabolicFamily fam = family_lambda_z_plus_z2();
    Polynomial q = Polynomial::monomial(2);
    cplx lam = (1.0 + 1e-3) * fam.lambda0;
    cplx eps(0.01, 0.002);
    Rng rng(42);
    double h = 1e-6;
    for (int k = 0; k <= 9; ++k) {
        RenormJet jet = renorm_recursion(fam, lam, q, eps, k);
        for (int t = 0; t < 25; ++t) {
            // the vertical orbit must stay bounded for the value comparison,
            // so the fiber samples live in the closed unit disc
            cplx z = rng.in_disc(2.0), w = rng.in_disc(0.95);
            auto sG = [&](double s) {
                return cplx(s) * direct_renormalized_iterate(fam, lam, q, eps, cplx(s), k, z, w);
            };
            cplx exact = jet.g_k1(z, w);
            cplx central = (sG(h) - sG(-h)) / (2.0 * h);
            CHECK(std::abs(central - exact) <= 1e-5 * std::max(1.0, std::abs(exact)));
            cplx half = (sG(h / 2) - sG(-h / 2)) / h;
            cplx richardson = (4.0 * half - central) / 3.0;
            CHECK(std::abs(richardson - exact) <= 1e-9 * std::max(1.0, std::abs(exact)));
            cplx value = (sG(h) + sG(-h)) / 2.0;
            CHECK(std::abs(value - jet.g_k0) <= 1e-5 * std::max(1.0, std::abs(jet.g_k0)));
        }
    }
}

TEST_CASE("closed-form iterate agrees with the recursion at depth m1 l") {
    ParabolicFamily fam = family_lambda_z_plus_z2();
    Polynomial q = Polynomial::monomial(2);
    cplx lam = (1.0 + 2e-3) * fam.lambda0;
    cplx eps(0.02, 0.0);
    Rng rng(9);
    for (int l : {1, 2, 3}) {
        auto closed = closed_form_iterate(fam, lam, q, eps, l);
        RenormJet jet = renorm_recursion(fam, lam, q, eps, fam.m1() * l);
        for (int t = 0; t < 40; ++t) {
            cplx z = rng.in_disc(2.0), w = rng.in_disc(1.2);
            cplx a = closed(z, w), b = jet.g_k1(z, w);
            CHECK(std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b)));
        }
    }
}

TEST_CASE("closed-form inner sum is dominated by its last term for real expanding rho") {
    // with rho^{t0} real > 1 the k = l-1 term carries the bounded orbit factor
    ParabolicFamily fam = family_lambda_z_plus_z2();
    Polynomial q = Polynomial::monomial(2);
    cplx lam = 1.1 * fam.lambda0;
    auto b = segment_multipliers(fam, lam, -1, 2);
    double rho_t0 = std::abs(b.at(-1));
    CHECK(rho_t0 > 1.0);
    // ratio of successive outer weights |rho^{t0 k}| grows, so the tail ratio
    // reported to users exceeds one
    CHECK(rho_t0 == doctest::Approx(std::pow(1.1, 3.0)).epsilon(1e-10));
}

TEST_CASE("perturbation plan minimizes the modulus gap at its level") {
    ParabolicFamily fam = family_lambda_z_plus_z2();
    Polynomial q = Polynomial::monomial(2);
    GoodTriple triple = triple_census_search(q, fam);
    CoveringConstants cc = triangle_cover(triple.c[0], triple.c[1], triple.c[2]);
    VerticalNeighborhoods nb = build_vertical_neighborhoods(q, triple.orbits, 2);

    cplx lam_n = (1.0 + 1e-3) * fam.lambda0;
    RenormPlan plan = perturbation_plan(fam, lam_n, cc, Regime::repelling, nb);
    cplx rho_t0 = segment_multipliers(fam, lam_n, -1, -1).at(-1);
    auto gap = [&](int l) {
        return std::abs(std::pow(std::abs(rho_t0), l) - (1.0 + cc.alpha0));
    };
    for (int dl = -2; dl <= 2; ++dl) {
        int l = plan.iterate_level + dl;
        if (l < 1) continue;
        CHECK(gap(plan.iterate_level) <= gap(l) + 1e-15);
    }
    CHECK(plan.s_cap > 0.0);
    CHECK(std::abs(plan.perturbation_budget - plan.coupling_eps * plan.s_cap) < 1e-15);
    CHECK(plan.linearization_radius > 0.0);

    // the coupling shrinks monotonically along a parameter ray toward lambda0
    double prev = std::numeric_limits<double>::infinity();
    for (double d : {4e-3, 2e-3, 1e-3, 5e-4}) {
        cplx lam = (1.0 + d) * fam.lambda0;
        RenormPlan p = perturbation_plan(fam, lam, cc, Regime::repelling, nb);
        CHECK(std::abs(p.coupling_eps) < prev);
        prev = std::abs(p.coupling_eps);
    }
}

TEST_CASE("wrong regimes are rejected") {
    ParabolicFamily fam = family_lambda_z_plus_z2();
    Polynomial q = Polynomial::monomial(2);
    GoodTriple triple = triple_census_search(q, fam);
    CoveringConstants cc = triangle_cover(triple.c[0], triple.c[1], triple.c[2]);
    VerticalNeighborhoods nb = build_vertical_neighborhoods(q, triple.orbits, 2);

    cplx contracting = (1.0 - 1e-3) * fam.lambda0;
    CHECK_THROWS_AS(perturbation_plan(fam, contracting, cc, Regime::repelling, nb), WrongRegime);
    cplx expanding = (1.0 + 1e-3) * fam.lambda0;
    CHECK_THROWS_AS(perturbation_plan(fam, expanding, cc, Regime::saddle, nb), WrongRegime);
    CHECK_THROWS_AS(perturbation_plan(fam, fam.lambda0, cc, Regime::repelling, nb), WrongRegime);
}

TEST_CASE("good triple search for the period-2 family on the squaring map") {
    ParabolicFamily fam = family_period2_quadratic();  // m0 = 2, m1 = 6
    Polynomial q = Polynomial::monomial(2);
    GoodTriple triple = good_triple_search(q, fam);
    cplx rho0 = multiplier_of_family(fam, fam.lambda0);

    CHECK(std::abs(triple.c[0] + triple.c[1] + triple.c[2]) < 1e-8);
    CHECK(std::abs(triple.c[1] - rho0 * triple.c[0]) < 1e-8);
    CHECK(std::abs(triple.c[2] - rho0 * rho0 * triple.c[0]) < 1e-8);
    CHECK(std::abs(std::abs(triple.c[0]) - std::abs(triple.c[1])) < 1e-8);
    CHECK(std::abs(std::abs(triple.c[1]) - std::abs(triple.c[2])) < 1e-8);
    for (const auto& o : triple.orbits) {
        CHECK(o.classification == Stability::repelling);
        CHECK(std::abs(iterate(q, o.representative(), fam.m1()) - o.representative()) < 1e-8);
    }
    // the three representatives march along the orbit by q^{m0}
    CHECK(std::abs(iterate(q, triple.orbits[0].representative(), fam.m0) -
                   triple.orbits[1].representative()) < 1e-9);
    CHECK(std::abs(iterate(q, triple.orbits[1].representative(), fam.m0) -
                   triple.orbits[2].representative()) < 1e-9);

    CHECK(triple.census.candidates == 64);

    // the guarded operation rejects m0 = 1 families
    CHECK_THROWS_AS(good_triple_search(q, family_lambda_z_plus_z2()), Error);
}

TEST_CASE("renormalized skew derivatives agree with finite differences") {
    ParabolicFamily fam = family_lambda_z_plus_z2();
    Polynomial q = Polynomial::monomial(2);
    cplx lam = (1.0 + 1e-3) * fam.lambda0;
    SkewMap g = make_renormalized_skew(fam.at(lam), cplx(0.002, 0.0005), q, 9, cplx(0.03));
    Rng rng(21);
    double h = 1e-7;
    for (int t = 0; t < 30; ++t) {
        cplx z = rng.in_disc(1.5), w = rng.in_disc(0.95);
        HJet jet = g.h_jet(z, w);
        cplx dz_fd = (g.h_value(z + h, w) - g.h_value(z - h, w)) / (2.0 * h);
        cplx dw_fd = (g.h_value(z, w + h) - g.h_value(z, w - h)) / (2.0 * h);
        double scale = std::max(1.0, std::abs(jet.dz));
        CHECK(std::abs(jet.dz - dz_fd) <= 1e-6 * scale);
        scale = std::max(1.0, std::abs(jet.dw));
        CHECK(std::abs(jet.dw - dw_fd) <= 1e-6 * scale);
    }
}

TEST_CASE("the end-to-end pipeline certifies both regimes with verified witnesses") {
    ParabolicFamily fam = family_lambda_z_plus_z2();
    Polynomial q = Polynomial::monomial(2);

    PlanOutcome rep = run_perturbation_pipeline(fam, q, (1.0 + 1e-3) * fam.lambda0,
                                                Regime::repelling, cplx(0.5), 20);
    CHECK(rep.certificate.pass);
    REQUIRE(rep.witness.has_value());
    CHECK(rep.witness_replay.pass);
    CHECK(rep.witness->worst_block_margin >= 0.0);

    PlanOutcome sad = run_perturbation_pipeline(fam, q, (1.0 - 1e-3) * fam.lambda0,
                                                Regime::saddle, cplx(0.5), 20);
    CHECK(sad.certificate.pass);
    REQUIRE(sad.witness.has_value());
    CHECK(sad.witness_replay.pass);
}
