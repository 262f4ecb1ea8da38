// blenderlab command line: periodic-point censuses, blender certificates,
// the perturbation pipeline, and raster rendering.
//
// Exit codes: 0 pass, 1 fail certificate, 2 usage, 3 degree cap,
//             4 search exhausted, 5 I/O failure.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "blenderlab/gallery.hpp"
#include "blenderlab/parse.hpp"

namespace bl = blenderlab;

namespace {

bool write_atomic(const std::string& path, const std::string& data) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary);
        if (!f) return false;
        f.write(data.data(), std::streamsize(data.size()));
        if (!f) return false;
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    return !ec;
}

bool write_json(const std::string& path, const bl::json& j) {
    return write_atomic(path, j.dump(2) + "\n");
}

void print_cert_summary(const bl::Certificate& c, int depth = 0) {
    std::string indent(std::size_t(depth) * 2, ' ');
    std::printf("%s%-32s %s  margin % .6g  samples %lld\n", indent.c_str(), c.check_name.c_str(),
                c.pass ? "PASS" : "FAIL", c.worst_margin, c.samples);
    for (const auto& s : c.sub_certificates) print_cert_summary(s, depth + 1);
}

std::string out_path(const std::string& dir, const std::string& name) {
    if (dir.empty() || dir == ".") return name;
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    return dir + "/" + name;
}

int cmd_periodic(const std::string& q_str, int m, int degree_cap, std::uint64_t seed,
                 const std::string& out) {
    bl::Polynomial q;
    try {
        q = bl::parse_polynomial(q_str);
    } catch (const bl::Error& e) {
        std::fprintf(stderr, "parse error: %s\n", e.what());
        return 2;
    }
    std::vector<bl::PeriodicOrbit> orbits;
    try {
        orbits = bl::periodic_points(q, m, degree_cap, seed);
    } catch (const bl::DegreeCapExceeded& e) {
        std::fprintf(stderr, "degree cap: %s\n", e.what());
        return 3;
    } catch (const bl::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    std::printf("%-28s %-8s %-28s %s\n", "point", "period", "multiplier", "class");
    bl::json jorbits = bl::json::array();
    for (const auto& o : orbits) {
        std::printf("%12.8f %+12.8fi  %-8d %12.8f %+12.8fi  %s\n", o.points[0].real(),
                    o.points[0].imag(), o.period, o.multiplier.real(), o.multiplier.imag(),
                    bl::to_string(o.classification));
        bl::json pts = bl::json::array();
        for (auto p : o.points) pts.push_back(bl::cplx_to_json(p));
        jorbits.push_back(bl::json{{"points", pts},
                                   {"period", o.period},
                                   {"multiplier", bl::cplx_to_json(o.multiplier)},
                                   {"class", bl::to_string(o.classification)}});
    }
    if (!out.empty()) {
        bl::json doc{{"q", bl::poly_to_json(q)}, {"m", m}, {"orbits", jorbits},
                     {"tool_version", bl::kToolVersion}, {"seed", seed}};
        if (!write_json(out, doc)) return 5;
    }
    return 0;
}

std::array<bl::PeriodicOrbit, 3> cube_root_orbits(const bl::Polynomial& q) {
    std::array<bl::PeriodicOrbit, 3> orbits;
    for (int j = 0; j < 3; ++j) {
        bl::PeriodicOrbit o;
        o.points = {j == 0 ? bl::cplx(1.0) : std::polar(1.0, 2.0 * bl::kPi * j / 3.0)};
        o.period = 1;
        o.multiplier = q.eval_jet(o.points[0]).second;
        o.classification = bl::classify_multiplier(o.multiplier);
        orbits[std::size_t(j)] = std::move(o);
    }
    return orbits;
}

int cmd_blender_model(int l_lo, int l_hi, const bl::RunConfig& rc, const std::string& out_dir) {
    bl::Polynomial q = bl::Polynomial::monomial(4);
    auto orbits = cube_root_orbits(q);
    bl::CoveringConstants cc =
        bl::triangle_cover(orbits[0].points[0], orbits[1].points[0], orbits[2].points[0]);
    for (int l = l_lo; l <= l_hi; ++l) {
        try {
            bl::VerticalNeighborhoods nb = bl::build_vertical_neighborhoods(q, orbits, l);
            bl::cplx rho(1.0 + cc.alpha0);
            bl::SkewMap g =
                bl::make_model_skew(rho, cc.eps0, cc.c, nb.base_points, q, l);
            bl::CertifyConfig cfg;
            cfg.margin_floor = rc.margin_floor;
            bl::BlenderCertificate cert = bl::certify_repelling_blender(g, cc, nb, rho, cfg);
            print_cert_summary(cert.cert);
            if (!cert.pass) continue;
            bl::VerticalGraph sigma = bl::constant_graph(nb, 0, bl::cplx(0.0));
            bl::IntersectionWitness wit = bl::blender_intersect(g, nb, cert.blocks, sigma, 50);
            bl::Certificate replay = bl::verify_witness(g, cert.blocks, wit);
            if (!write_json(out_path(out_dir, "model_certificate.json"), cert.to_json()))
                return 5;
            if (!write_json(out_path(out_dir, "model_witness.json"), wit.to_json())) return 5;
            std::printf("model self-test certified at level %d (witness margin %.3g)\n", l,
                        wit.worst_block_margin);
            return replay.pass ? 0 : 1;
        } catch (const bl::Error& e) {
            std::fprintf(stderr, "level %d: %s\n", l, e.what());
        }
    }
    std::fprintf(stderr, "no level in [%d, %d] certifies\n", l_lo, l_hi);
    return 4;
}

int cmd_blender_cycle(const bl::RunConfig& rc, const std::string& out_dir) {
    try {
        bl::DoubleBlender db = bl::double_blender_build();
        print_cert_summary(db.cert_repelling.cert);
        print_cert_summary(db.cert_saddle.cert);
        bl::CycleCheckResult cyc = bl::cycle_check(db);
        print_cert_summary(cyc.cert);
        if (!write_json(out_path(out_dir, "cycle_repelling_certificate.json"),
                        db.cert_repelling.to_json()))
            return 5;
        if (!write_json(out_path(out_dir, "cycle_saddle_certificate.json"),
                        db.cert_saddle.to_json()))
            return 5;
        if (!write_atomic(out_path(out_dir, "cycle_unstable_graph.csv"),
                          bl::graph_to_csv(cyc.unstable_graph)))
            return 5;
        if (!write_atomic(out_path(out_dir, "cycle_pushed_graph.csv"),
                          bl::graph_to_csv(cyc.pushed_graph)))
            return 5;
        if (!write_json(out_path(out_dir, "cycle_certificate.json"), cyc.cert.to_json())) return 5;
        if (cyc.witness &&
            !write_json(out_path(out_dir, "cycle_witness.json"), cyc.witness->to_json()))
            return 5;
        (void)rc;
        return (db.cert_repelling.pass && db.cert_saddle.pass && cyc.cert.pass) ? 0 : 1;
    } catch (const bl::SearchFailed& e) {
        std::fprintf(stderr, "search exhausted: %s\n", e.what());
        return 4;
    }
}

int cmd_blender_attractor(const bl::RunConfig& rc, const std::string& out_dir) {
    try {
        bl::Attractor att = bl::attractor_build();
        bl::Certificate cert = bl::attractor_certify(att, rc.margin_floor);
        print_cert_summary(cert);
        if (!write_json(out_path(out_dir, "attractor_certificate.json"), cert.to_json()))
            return 5;
        return cert.pass ? 0 : 1;
    } catch (const bl::Error& e) {
        std::fprintf(stderr, "attractor: %s\n", e.what());
        return 4;
    }
}

int cmd_blender_henon(const bl::RunConfig& rc, const std::string& out_dir) {
    try {
        bl::HenonMap hm = bl::henon_standard_example();
        double R = 4.0;
        bl::Certificate trap = bl::henon_trapping_certify(hm, R, rc.margin_floor);
        print_cert_summary(trap);
        auto cycles = bl::henon_repelling_cycles(hm, R, 2, rc.seed);
        std::vector<bl::CycleInfo> repelling;
        for (const auto& c : cycles)
            if (c.repelling) repelling.push_back(c);
        std::printf("cycles found: %zu (repelling: %zu)\n", cycles.size(), repelling.size());
        bl::Certificate nested = bl::nested_trapping(hm, R, repelling, rc.margin_floor);
        print_cert_summary(nested);
        bl::json cyc = bl::json::array();
        for (const auto& c : repelling) {
            bl::json pts = bl::json::array();
            for (const auto& p : c.points)
                pts.push_back(bl::json::array({bl::cplx_to_json(p[0]), bl::cplx_to_json(p[1])}));
            cyc.push_back(bl::json{{"period", c.period},
                                   {"points", pts},
                                   {"eigenvalues",
                                    bl::json::array({bl::cplx_to_json(c.eigenvalues[0]),
                                                     bl::cplx_to_json(c.eigenvalues[1])})}});
        }
        bl::json doc{{"trapping", trap.to_json()},
                     {"nested", nested.to_json()},
                     {"repelling_cycles", cyc}};
        if (!write_json(out_path(out_dir, "henon_certificates.json"), doc)) return 5;
        return (trap.pass && nested.pass && !repelling.empty()) ? 0 : 1;
    } catch (const bl::Error& e) {
        std::fprintf(stderr, "henon: %s\n", e.what());
        return 4;
    }
}

bl::ParabolicFamily family_by_name(const std::string& name) {
    if (name == "lambda_z_plus_z2") return bl::family_lambda_z_plus_z2();
    if (name == "period2_quadratic") return bl::family_period2_quadratic();
    throw bl::Error("unknown family '" + name + "'");
}

int cmd_blender_generic(const std::string& q_str, const std::string& family,
                        const std::string& regime_str, const std::string& rho_str, int l_lo,
                        int l_hi, const bl::RunConfig& rc, const std::string& out_dir) {
    bl::Polynomial q;
    bl::ParabolicFamily fam;
    try {
        q = bl::parse_polynomial(q_str);
        fam = family_by_name(family);
    } catch (const bl::Error& e) {
        std::fprintf(stderr, "parse error: %s\n", e.what());
        return 2;
    }
    try {
        bl::GoodTriple triple = bl::triple_census_search(q, fam, 1e-3, rc.degree_cap, rc.seed);
        bl::CoveringConstants cc = bl::triangle_cover(triple.c[0], triple.c[1], triple.c[2]);
        bool saddle = regime_str == "saddle";
        bl::cplx rho = saddle ? bl::cplx(1.0 - cc.alpha0) : bl::cplx(1.0 + cc.alpha0);
        if (!rho_str.empty()) rho = bl::parse_complex(rho_str);
        double expect = saddle ? 1.0 - cc.alpha0 : 1.0 + cc.alpha0;
        if (std::abs(std::abs(rho) - expect) > 1e-9) {
            std::fprintf(stderr, "WrongRegime: |rho| = %.9f but the %s regime needs %.9f\n",
                         std::abs(rho), regime_str.c_str(), expect);
            return 4;
        }
        for (int l = l_lo; l <= l_hi; ++l) {
            try {
                bl::VerticalNeighborhoods nb = bl::build_vertical_neighborhoods(q, triple.orbits, l);
                bl::SkewMap g =
                    bl::make_model_skew(rho, cc.eps0, cc.c, nb.base_points, q, l * nb.m1);
                bl::CertifyConfig cfg;
                cfg.margin_floor = rc.margin_floor;
                bl::BlenderCertificate cert =
                    saddle ? bl::certify_saddle_blender(g, cc, nb, rho, cfg)
                           : bl::certify_repelling_blender(g, cc, nb, rho, cfg);
                print_cert_summary(cert.cert);
                if (!cert.pass) continue;
                if (!write_json(out_path(out_dir, "blender_certificate.json"),
                                cert.to_json()))
                    return 5;
                if (!saddle) {
                    bl::VerticalGraph sigma = bl::constant_graph(nb, 0, bl::cplx(0.0));
                    bl::IntersectionWitness wit =
                        bl::blender_intersect(g, nb, cert.blocks, sigma, 50);
                    if (!write_json(out_path(out_dir, "blender_witness.json"), wit.to_json()))
                        return 5;
                }
                return 0;
            } catch (const bl::Error& e) {
                std::fprintf(stderr, "level %d: %s\n", l, e.what());
            }
        }
        std::fprintf(stderr, "no level in [%d, %d] certifies\n", l_lo, l_hi);
        return 4;
    } catch (const bl::DegreeCapExceeded& e) {
        std::fprintf(stderr, "degree cap: %s\n", e.what());
        return 3;
    } catch (const bl::NoneFound& e) {
        std::fprintf(stderr, "search exhausted: %s\n", e.what());
        return 4;
    }
}

int cmd_theorem41(const std::string& family, const std::string& q_str,
                  const std::string& lambda_str, const std::string& regime_str, double alpha,
                  const bl::RunConfig& rc, const std::string& out_dir) {
    bl::ParabolicFamily fam;
    bl::Polynomial q;
    bl::cplx lambda;
    try {
        fam = family_by_name(family);
        q = bl::parse_polynomial(q_str);
        lambda = bl::parse_complex(lambda_str);
    } catch (const bl::Error& e) {
        std::fprintf(stderr, "parse error: %s\n", e.what());
        return 2;
    }
    bl::Regime regime = (regime_str == "saddle") ? bl::Regime::saddle : bl::Regime::repelling;
    try {
        bl::CertifyConfig cfg;
        cfg.margin_floor = rc.margin_floor;
        bl::PlanOutcome out = bl::run_perturbation_pipeline(fam, q, lambda, regime,
                                                            bl::cplx(alpha), 50, cfg,
                                                            rc.degree_cap, rc.seed);
        std::printf("plan: level %d, |eps_n| = %.6g, |beta_n| = %.6g, s_cap = %.6g\n",
                    out.plan.iterate_level, std::abs(out.plan.coupling_eps),
                    std::abs(out.plan.perturbation_budget), out.plan.s_cap);
        print_cert_summary(out.certificate.cert);
        if (!write_json(out_path(out_dir, "theorem41_plan.json"), out.plan.to_json())) return 5;
        if (!write_json(out_path(out_dir, "theorem41_certificate.json"),
                        out.certificate.to_json()))
            return 5;
        if (out.witness) {
            if (!write_json(out_path(out_dir, "theorem41_witness.json"), out.witness->to_json()))
                return 5;
            print_cert_summary(out.witness_replay);
        }
        return (out.certificate.pass && out.witness && out.witness_replay.pass) ? 0 : 1;
    } catch (const bl::WrongRegime& e) {
        std::fprintf(stderr, "WrongRegime: %s\n", e.what());
        return 4;
    } catch (const bl::DegreeCapExceeded& e) {
        std::fprintf(stderr, "degree cap: %s\n", e.what());
        return 3;
    } catch (const bl::NoneFound& e) {
        std::fprintf(stderr, "search exhausted: %s\n", e.what());
        return 4;
    } catch (const bl::SearchFailed& e) {
        std::fprintf(stderr, "search exhausted: %s\n", e.what());
        return 4;
    }
}

int cmd_render(const std::string& mode, const std::string& q_str, const std::string& gallery,
               int res, int iters, const std::string& window_str, const std::string& out) {
    if (res < 1 || res > 4096) {
        std::fprintf(stderr, "usage: resolution must be in [1, 4096]\n");
        return 2;
    }
    bl::RenderWindow win;
    if (!window_str.empty()) {
        double a, b, c, d;
        if (std::sscanf(window_str.c_str(), "%lf:%lf:%lf:%lf", &a, &b, &c, &d) != 4) {
            std::fprintf(stderr, "usage: window must be x0:x1:y0:y1\n");
            return 2;
        }
        win = {a, b, c, d};
    }
    bl::Raster raster;
    try {
        if (mode == "escape") {
            if (q_str.empty()) {
                std::fprintf(stderr, "usage: escape mode needs --q\n");
                return 2;
            }
            raster = bl::render_escape(bl::parse_polynomial(q_str), win, iters, res);
        } else if (mode == "forward") {
            if (gallery != "attractor") {
                std::fprintf(stderr, "usage: forward mode supports --gallery attractor\n");
                return 2;
            }
            bl::Attractor att = bl::attractor_build();
            win = {-2.5, 2.5, -0.25, 0.25};
            (void)iters;
            raster = bl::render_attractor_band(att, win, res);
        } else {
            std::fprintf(stderr, "usage: mode must be escape or forward\n");
            return 2;
        }
    } catch (const bl::Error& e) {
        std::fprintf(stderr, "render: %s\n", e.what());
        return 2;
    }
    if (!write_atomic(out, raster.to_ppm())) {
        std::fprintf(stderr, "I/O failure writing %s\n", out.c_str());
        return 5;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"blenderlab: certified blenders, fat attractors, trapping regions"};
    app.require_subcommand(1);
    app.fallthrough();  // global options are accepted after the subcommand

    bl::RunConfig rc;
    std::string out_dir = ".";
    app.add_option("--margin", rc.margin_floor, "margin floor for pass verdicts");
    app.add_option("--grid", rc.grid_n, "grid resolution for covering checks");
    app.add_option("--seed", rc.seed, "seed for randomized sweeps");
    app.add_option("--degree-cap", rc.degree_cap, "symbolic iterate degree cap");
    app.add_option("--out", out_dir, "output directory");

    auto* periodic = app.add_subcommand("periodic", "periodic point census with multipliers");
    std::string q_str;
    int m = 1;
    std::string out_file;
    periodic->add_option("--q", q_str, "polynomial, e.g. \"w^7\"")->required();
    periodic->add_option("--m", m, "period")->required();
    periodic->add_option("--json", out_file, "also write a JSON report");

    auto* blender = app.add_subcommand("blender", "build and certify a blender");
    bool model = false;
    std::string gallery, family = "lambda_z_plus_z2", regime = "repelling", l_range = "1:6";
    std::string rho_str, bq_str;
    blender->add_flag("--model", model, "model-map self test");
    blender->add_option("--gallery", gallery, "attractor | cycle | henon");
    blender->add_option("--q", bq_str, "vertical polynomial");
    blender->add_option("--family", family, "parabolic family preset");
    blender->add_option("--regime", regime, "repelling | saddle");
    blender->add_option("--rho", rho_str, "explicit horizontal multiplier");
    blender->add_option("--l-range", l_range, "level range lo:hi");

    auto* theorem = app.add_subcommand("theorem41", "perturbation-plan pipeline");
    std::string t_family = "lambda_z_plus_z2", t_q = "w^2", t_lambda, t_regime = "repelling";
    double t_alpha = 0.5;
    theorem->add_option("--family", t_family, "parabolic family preset");
    theorem->add_option("--q", t_q, "vertical polynomial");
    theorem->add_option("--lambda", t_lambda, "parameter, e.g. \"1.001*(-0.5+0.86602540378i)\"")
        ->required();
    theorem->add_option("--regime", t_regime, "repelling | saddle");
    theorem->add_option("--alpha", t_alpha, "perturbation dial in (0,1)");

    auto* render = app.add_subcommand("render", "raster rendering of invariant sets");
    std::string r_mode = "escape", r_q, r_gallery, r_window, r_out = "out.ppm";
    int r_res = 512, r_iters = 60;
    render->add_option("--mode", r_mode, "escape | forward");
    render->add_option("--q", r_q, "polynomial for escape mode");
    render->add_option("--gallery", r_gallery, "attractor (forward mode)");
    render->add_option("--res", r_res, "resolution");
    render->add_option("--iters", r_iters, "iteration count");
    render->add_option("--window", r_window, "x0:x1:y0:y1");
    render->add_option("--file", r_out, "output PPM path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    if (periodic->parsed())
        return cmd_periodic(q_str, m, rc.degree_cap, rc.seed, out_file);
    if (blender->parsed()) {
        int lo = 1, hi = 6;
        std::sscanf(l_range.c_str(), "%d:%d", &lo, &hi);
        if (model) return cmd_blender_model(lo, hi, rc, out_dir);
        if (gallery == "cycle") return cmd_blender_cycle(rc, out_dir);
        if (gallery == "attractor") return cmd_blender_attractor(rc, out_dir);
        if (gallery == "henon") return cmd_blender_henon(rc, out_dir);
        if (bq_str.empty()) {
            std::fprintf(stderr, "usage: blender needs --model, --gallery, or --q\n");
            return 2;
        }
        return cmd_blender_generic(bq_str, family, regime, rho_str, lo, hi, rc, out_dir);
    }
    if (theorem->parsed())
        return cmd_theorem41(t_family, t_q, t_lambda, t_regime, t_alpha, rc, out_dir);
    if (render->parsed())
        return cmd_render(r_mode, r_q, r_gallery, r_res, r_iters, r_window,
                          out_path(out_dir, r_out));
    return 2;
}
