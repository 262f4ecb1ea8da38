// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Each criterion pins its tolerances and runtime budget in code.

#include <chrono>
#include <cstdio>
#include <string>

#include "blenderlab/gallery.hpp"
#include "blenderlab/parse.hpp"

using namespace blenderlab;

namespace {

int failures = 0;

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

void report(int idx, bool pass, double seconds, double budget, const std::string& detail) {
    bool ok = pass && seconds <= budget;
    if (!ok) ++failures;
    std::printf("criterion %2d: %s  [%6.1fs / budget %5.0fs]  %s\n", idx, ok ? "PASS" : "FAIL",
                seconds, budget, detail.c_str());
    std::fflush(stdout);
}

// 1. seven fixed points of w^7, six of unit modulus with multiplier 7
void criterion_1() {
    Timer t;
    bool ok = false;
    std::string detail;
    try {
        auto orbits = periodic_points(Polynomial::monomial(7), 1);
        int unit = 0;
        double worst = 0;
        for (const auto& o : orbits)
            if (std::abs(o.points[0]) > 0.5) {
                ++unit;
                worst = std::max(worst, std::abs(o.multiplier - cplx(7.0)));
            }
        ok = orbits.size() == 7 && unit == 6 && worst <= 1e-10;
        detail = "7 fixed points, multiplier error " + std::to_string(worst);
    } catch (const Error& e) {
        detail = e.what();
    }
    report(1, ok, t.seconds(), 1.0, detail);
}

// 2. triangle covering constants certified on a 400x400 grid at both moduli
void criterion_2() {
    Timer t;
    bool ok = false;
    std::string detail;
    try {
        cplx c1(1.0), c2 = std::polar(1.0, 2.0 * kPi / 3.0), c3 = std::polar(1.0, 4.0 * kPi / 3.0);
        CoveringConstants cc = triangle_cover(c1, c2, c3);
        double worst = 1e9;
        for (double rho : {1.0 - cc.alpha0, 1.0 + cc.alpha0}) {
            std::vector<Region> images;
            for (int j = 0; j < 3; ++j)
                images.push_back(Region::disc(cc.eps0 * cc.c[std::size_t(j)], rho));
            Certificate cert = covering_check(Region::disc(cplx(0.0), 1.0), images, 400, 1e-3);
            worst = std::min(worst, cert.worst_margin);
            if (!cert.pass) worst = std::min(worst, -1.0);
        }
        ok = worst >= 1e-3;
        detail = "eps0 " + std::to_string(cc.eps0) + ", alpha0 " + std::to_string(cc.alpha0) +
                 ", grid margin " + std::to_string(worst);
    } catch (const Error& e) {
        detail = e.what();
    }
    report(2, ok, t.seconds(), 10.0, detail);
}

// 3. recursion oracle: finite differences at s = 0 to 1e-5 for k <= 9 and
// the closed form at the return time to 1e-10
void criterion_3() {
    Timer t;
    bool ok = false;
    std::string detail;
    try {
        ParabolicFamily fam = family_lambda_z_plus_z2();
        Polynomial q = Polynomial::monomial(2);
        cplx lam = (1.0 + 1e-3) * fam.lambda0;
        cplx eps(0.01, 0.002);
        Rng rng(kDefaultSeed);
        double h = 1e-6;
        double worst_fd = 0, worst_closed = 0;
        for (int k = 0; k <= 9; ++k) {
            RenormJet jet = renorm_recursion(fam, lam, q, eps, k);
            for (int s = 0; s < 100; ++s) {
                cplx z = rng.in_disc(2.0), w = rng.in_disc(0.95);
                auto sG = [&](double hv) {
                    return cplx(hv) *
                           direct_renormalized_iterate(fam, lam, q, eps, cplx(hv), k, z, w);
                };
                cplx exact = jet.g_k1(z, w);
                cplx central = (sG(h) - sG(-h)) / (2.0 * h);
                worst_fd = std::max(worst_fd, std::abs(central - exact) /
                                                  std::max(1.0, std::abs(exact)));
            }
        }
        int m1 = fam.m1();
        RenormJet jm = renorm_recursion(fam, lam, q, eps, m1);
        auto b = segment_multipliers(fam, lam, -1, m1 - 1);
        for (int s = 0; s < 100; ++s) {
            cplx z = rng.in_disc(2.0), w = rng.in_disc(0.95);
            cplx closed = b.at(-1) * z;
            cplx x = w;
            for (int i = 0; i < m1; ++i) {
                closed += eps * b.at(i) * x;
                x = q(x);
            }
            worst_closed = std::max(worst_closed, std::abs(jm.g_k1(z, w) - closed));
        }
        ok = worst_fd <= 1e-5 && worst_closed <= 1e-10;
        detail = "fd error " + std::to_string(worst_fd) + ", closed-form error " +
                 std::to_string(worst_closed);
    } catch (const Error& e) {
        detail = e.what();
    }
    report(3, ok, t.seconds(), 5.0, detail);
}

// 4. identity suite for the segment multipliers and the coupling function
void criterion_4() {
    Timer t;
    bool ok = false;
    std::string detail;
    try {
        Rng rng(kDefaultSeed);
        double worst_rec = 0, worst_rho = 0, worst_equiv = 0, worst_fixed = 0;
        for (const ParabolicFamily& fam :
             {family_lambda_z_plus_z2(), family_period2_quadratic()}) {
            int m1 = fam.m1();
            for (int s = 0; s < 25; ++s) {
                cplx lam = fam.lambda0 + 0.04 * rng.in_disc(1.0);
                auto b = segment_multipliers(fam, lam, -m1, 2 * m1);
                cplx rho = multiplier_of_family(fam, lam);
                for (int i = -m1; i + fam.m0 <= 2 * m1; ++i)
                    worst_rec = std::max(worst_rec,
                                         std::abs(b.at(i) - rho * b.at(i + fam.m0)) /
                                             std::max(1.0, std::abs(b.at(i))));
                cplx rho_t0 = rho;
                for (int k = 1; k < fam.t0; ++k) rho_t0 *= rho;
                worst_rho = std::max(worst_rho, std::abs(b.at(-1) - rho_t0));
            }
        }
        ParabolicFamily fam = family_lambda_z_plus_z2();
        Polynomial q = Polynomial::monomial(2);
        cplx rho0 = multiplier_of_family(fam, fam.lambda0);
        auto orbits = periodic_points(q, fam.m1());
        int counted = 0;
        for (const auto& o : orbits)
            for (cplx r : o.points) {
                cplx lhs = coupling_function(fam, q, iterate(q, r, fam.m0));
                cplx rhs = rho0 * coupling_function(fam, q, r);
                worst_equiv = std::max(worst_equiv, std::abs(lhs - rhs));
                ++counted;
            }
        for (const auto& o : periodic_points(q, 1))
            worst_fixed =
                std::max(worst_fixed, std::abs(coupling_function(fam, q, o.points[0])));
        ok = worst_rec <= 1e-12 && worst_rho <= 1e-12 && worst_equiv <= 1e-8 &&
             worst_fixed <= 1e-10 && counted >= 8;
        detail = "recurrence " + std::to_string(worst_rec) + ", return multiplier " +
                 std::to_string(worst_rho) + ", equivariance " + std::to_string(worst_equiv) +
                 ", fixed-point coupling " + std::to_string(worst_fixed);
    } catch (const Error& e) {
        detail = e.what();
    }
    report(4, ok, t.seconds(), 30.0, detail);
}

// 5. the perturbation pipeline certifies both regimes with verified witnesses
void criterion_5() {
    ParabolicFamily fam = family_lambda_z_plus_z2();
    Polynomial q = Polynomial::monomial(2);
    for (int which = 0; which < 2; ++which) {
        Timer t;
        bool ok = false;
        std::string detail;
        Regime regime = which == 0 ? Regime::repelling : Regime::saddle;
        try {
            cplx lam = (1.0 + (which == 0 ? 1e-3 : -1e-3)) * fam.lambda0;
            PlanOutcome out = run_perturbation_pipeline(fam, q, lam, regime, cplx(0.5), 50);
            ok = out.certificate.pass && out.witness.has_value() &&
                 out.witness->worst_block_margin >= 0.0 && out.witness_replay.pass &&
                 int(out.witness->orbit.size()) == 51;
            detail = std::string(to_string(regime)) + ": level " +
                     std::to_string(out.plan.iterate_level) + ", witness margin " +
                     (out.witness ? std::to_string(out.witness->worst_block_margin) : "-") +
                     ", step residual " +
                     (out.witness ? std::to_string(out.witness->max_step_residual) : "-");
        } catch (const Error& e) {
            detail = e.what();
        }
        report(5, ok, t.seconds(), 120.0, detail);
    }
}

// 6. robustness shadow: twenty random perturbations at m/4 certify, twenty at
// 2m fail or visibly lose their proximity slack
void criterion_6() {
    Timer t;
    bool ok = false;
    std::string detail;
    try {
        Polynomial q = Polynomial::monomial(4);
        std::array<PeriodicOrbit, 3> orbits;
        for (int j = 0; j < 3; ++j) {
            PeriodicOrbit o;
            o.points = {j == 0 ? cplx(1.0) : std::polar(1.0, 2.0 * kPi * j / 3.0)};
            o.period = 1;
            o.multiplier = q.eval_jet(o.points[0]).second;
            o.classification = classify_multiplier(o.multiplier);
            orbits[std::size_t(j)] = std::move(o);
        }
        CoveringConstants cc = triangle_cover(orbits[0].points[0], orbits[1].points[0],
                                              orbits[2].points[0]);
        VerticalNeighborhoods nb = build_vertical_neighborhoods(q, orbits, 2);
        cplx rho(1.0 + cc.alpha0);
        SkewMap g = make_model_skew(rho, cc.eps0, cc.c, nb.base_points, q, nb.level);
        BlenderCertificate base = certify_repelling_blender(g, cc, nb, rho);
        double m = base.cert.worst_margin;
        auto prox_margin = [](const BlenderCertificate& c) {
            for (const auto& sub : c.cert.sub_certificates)
                if (sub.check_name == "proximity") return sub.worst_margin;
            return -1.0;
        };
        double base_prox = prox_margin(base);

        auto random_perturbation = [&](double target_sup, std::uint64_t seed) {
            Rng rng(seed);
            std::vector<std::vector<cplx>> tab(3, std::vector<cplx>(3));
            for (auto& row : tab)
                for (auto& c : row) c = rng.in_disc(1.0);
            BivariatePolynomial p{tab};
            double sup = 0;
            for (cplx z : detail::sample_disc(2.0, 4, 16))
                for (int j = 0; j < 3; ++j)
                    for (cplx w : nb.region(j).boundary(16))
                        sup = std::max(sup, std::abs(p(z, w)));
            return p * cplx(target_sup / sup);
        };

        int pass_small = 0, degraded_large = 0;
        for (int k = 0; k < 20; ++k) {
            SkewMap small = perturb_skew(g, random_perturbation(m / 4.0, kDefaultSeed + 10 + k));
            if (certify_repelling_blender(small, cc, nb, rho).pass) ++pass_small;
            SkewMap large =
                perturb_skew(g, random_perturbation(2.0 * m, kDefaultSeed + 500 + k));
            BlenderCertificate cl = certify_repelling_blender(large, cc, nb, rho);
            if (!cl.pass || prox_margin(cl) <= base_prox - m) ++degraded_large;
        }
        ok = base.pass && pass_small == 20 && degraded_large == 20;
        detail = "margin " + std::to_string(m) + ", m/4 passes " + std::to_string(pass_small) +
                 "/20, 2m degraded " + std::to_string(degraded_large) + "/20";
    } catch (const Error& e) {
        detail = e.what();
    }
    report(6, ok, t.seconds(), 240.0, detail);
}

// 7. double blender with the heteroclinic witness and the exact algebra
void criterion_7() {
    Timer t;
    bool ok = false;
    std::string detail;
    try {
        double algebra = 0;
        for (int j = 0; j < 3; ++j) {
            cplx r = j == 0 ? cplx(1.0) : std::polar(1.0, 2.0 * kPi * j / 3.0);
            algebra = std::max(algebra, std::abs((r * r * r + 1.0) / 2.0 - 1.0));
            algebra = std::max(algebra, std::abs(((-r) * (-r) * (-r) + 1.0) / 2.0));
        }
        DoubleBlender db = double_blender_build();
        CycleCheckResult cyc = cycle_check(db);
        bool witness_ok = cyc.witness.has_value() && cyc.witness->worst_block_margin >= 0.0 &&
                          verify_witness(db.F, db.cert_repelling.blocks, *cyc.witness).pass;
        ok = algebra <= 1e-14 && db.cert_repelling.pass && db.cert_saddle.pass &&
             cyc.cert.pass && witness_ok;
        detail = "level " + std::to_string(db.level) + ", algebra " + std::to_string(algebra) +
                 ", witness margin " +
                 (cyc.witness ? std::to_string(cyc.witness->worst_block_margin) : "-");
    } catch (const Error& e) {
        detail = e.what();
    }
    report(7, ok, t.seconds(), 300.0, detail);
}

// 8. fat attractor: all certificate clauses, the pencil critical check, and
// a solid band around the invariant line in the forward render
void criterion_8() {
    Timer t;
    bool ok = false;
    std::string detail;
    try {
        Attractor att = attractor_build();
        Certificate cert = attractor_certify(att);
        Certificate base = base_map_critical_check(att.params.l_tilde,
                                                   att.params.l * att.params.N);
        double base_res = 0;
        for (const auto& entry : base.params["landings"])
            base_res = std::max(base_res, entry["residual"].get<double>());

        RenderWindow win{-2.5, 2.5, -0.25, 0.25};
        Raster raster = render_attractor_band(att, win, 1024, 1536, 640, 24);
        int res = 1024, center = res / 2, band = 32;
        int ok_cols = 0, checked = 0;
        for (int col = res / 10; col < res - res / 10; ++col) {
            ++checked;
            int run = 0, best = 0;
            for (int row = center - band; row <= center + band; ++row) {
                bool lit = raster.rgb[(std::size_t(row) * res + col) * 3] > 0;
                run = lit ? run + 1 : 0;
                best = std::max(best, run);
            }
            if (best >= 3) ++ok_cols;
        }
        bool band_ok = ok_cols >= (95 * checked) / 100;
        ok = cert.pass && base.pass && base_res < 1e-9 && band_ok;
        detail = "clauses " + std::string(cert.pass ? "pass" : "fail") + ", landing residual " +
                 std::to_string(base_res) + ", band columns " + std::to_string(ok_cols) + "/" +
                 std::to_string(checked);
    } catch (const Error& e) {
        detail = e.what();
    }
    report(8, ok, t.seconds(), 300.0, detail);
}

// 9. perturbed composition: trapping region, repelling cycles, and the
// strictly nested removal stages
void criterion_9() {
    Timer t;
    bool ok = false;
    std::string detail;
    try {
        HenonMap hm = henon_standard_example();
        double R = 4.0;
        Certificate trap = henon_trapping_certify(hm, R);
        auto cycles = henon_repelling_cycles(hm, R, 2);
        std::vector<CycleInfo> repelling;
        for (const auto& c : cycles)
            if (c.repelling) repelling.push_back(c);
        bool eig_ok = !repelling.empty();
        for (const auto& c : repelling)
            eig_ok = eig_ok && std::abs(c.eigenvalues[0]) > 1.0 + 1e-8 &&
                     std::abs(c.eigenvalues[1]) > 1.0 + 1e-8;
        Certificate nested = nested_trapping(hm, R, repelling);
        int stages = 0;
        for (const auto& sub : nested.sub_certificates)
            if (sub.check_name.rfind("stage_", 0) == 0 && sub.pass) ++stages;
        ok = trap.pass && eig_ok && nested.pass && stages >= 2 && repelling.size() >= 2;
        detail = std::to_string(cycles.size()) + " cycles found, " +
                 std::to_string(repelling.size()) + " repelling, " + std::to_string(stages) +
                 " nested stages certified";
    } catch (const Error& e) {
        detail = e.what();
    }
    report(9, ok, t.seconds(), 300.0, detail);
}

// 10. determinism: identical runs give byte-identical certificates and rasters
void criterion_10() {
    Timer t;
    bool ok = false;
    std::string detail;
    try {
        ParabolicFamily fam = family_lambda_z_plus_z2();
        Polynomial q = Polynomial::monomial(2);
        auto run_cert = [&] {
            PlanOutcome out = run_perturbation_pipeline(fam, q, (1.0 + 1e-3) * fam.lambda0,
                                                        Regime::repelling, cplx(0.5), 15);
            return out.certificate.cert.to_json().dump() + out.plan.to_json().dump() +
                   (out.witness ? out.witness->to_json().dump() : "");
        };
        auto run_raster = [&] {
            return render_escape(Polynomial::monomial(4), {-2, 2, -2, 2}, 40, 256).to_ppm();
        };
        bool cert_eq = run_cert() == run_cert();
        bool raster_eq = run_raster() == run_raster();
        Attractor att = attractor_build();
        RenderWindow win{-2.5, 2.5, -0.25, 0.25};
        bool band_eq = render_attractor_band(att, win, 256).to_ppm() ==
                       render_attractor_band(att, win, 256).to_ppm();
        ok = cert_eq && raster_eq && band_eq;
        detail = std::string("certificates ") + (cert_eq ? "identical" : "differ") +
                 ", rasters " + (raster_eq && band_eq ? "identical" : "differ");
    } catch (const Error& e) {
        detail = e.what();
    }
    report(10, ok, t.seconds(), 300.0, detail);
}

}  // namespace

int main() {
    std::printf("acceptance suite (%s)\n", kToolVersion);
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    criterion_10();
    if (failures == 0) {
        std::printf("all criteria passed\n");
        return 0;
    }
    std::printf("%d criteria failed\n", failures);
    return 1;
}
