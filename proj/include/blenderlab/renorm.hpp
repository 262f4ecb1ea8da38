#pragma once

// Renormalization calculus around a marked periodic point: the segment
// multipliers b_i, the coupling values c_j, the closed-form renormalized
// iterate with its recursion oracle, perturbation plans toward blenders,
// and the search for a good equilateral triple.

#include <map>

#include "blenderlab/blender.hpp"

namespace blenderlab {

// degree-d family p_lambda(z) = sum a_i(lambda) z^i with a marked periodic
// orbit through 0; coefficients are polynomials in the parameter
struct ParabolicFamily {
    std::vector<Polynomial> coeff_in_lambda;  // a_i(lambda), ascending i
    int m0 = 1;        // period of the marked point 0
    int t0 = 1;        // rho(lambda0) is a primitive t0-th root of unity
    cplx lambda0{0.0};
    std::string name;

    int m1() const { return m0 * t0; }

    Polynomial at(cplx lambda) const {
        std::vector<cplx> c;
        c.reserve(coeff_in_lambda.size());
        for (const auto& a : coeff_in_lambda) c.push_back(a(lambda));
        return Polynomial(std::move(c));
    }
};

// p_lambda(z) = lambda z + z^2, marked fixed point 0, lambda0 = e^{2 pi i/3}
inline ParabolicFamily family_lambda_z_plus_z2() {
    ParabolicFamily f;
    f.coeff_in_lambda = {Polynomial::constant(0.0), Polynomial::monomial(1),
                         Polynomial::constant(1.0)};
    f.m0 = 1;
    f.t0 = 3;
    f.lambda0 = std::polar(1.0, 2.0 * kPi / 3.0);
    f.name = "lambda_z_plus_z2";
    return f;
}

// p_c(z) = z^2 - (1+c) z + c with marked 2-cycle {0, c}; multiplier 1 - c^2,
// lambda0 = sqrt(1 - e^{2 pi i / 3}) on the principal branch
inline ParabolicFamily family_period2_quadratic() {
    ParabolicFamily f;
    f.coeff_in_lambda = {Polynomial::monomial(1),
                         Polynomial({cplx(-1.0), cplx(-1.0)}),
                         Polynomial::constant(1.0)};
    f.m0 = 2;
    f.t0 = 3;
    f.lambda0 = std::sqrt(cplx(1.0) - std::polar(1.0, 2.0 * kPi / 3.0));
    f.name = "period2_quadratic";
    return f;
}

// marked orbit 0 -> p(0) -> ... -> p^{m0}(0) = 0; throws if it broke
inline std::vector<cplx> marked_orbit(const ParabolicFamily& fam, cplx lambda) {
    Polynomial p = fam.at(lambda);
    std::vector<cplx> orbit{cplx(0.0)};
    for (int k = 0; k < fam.m1(); ++k) orbit.push_back(p(orbit.back()));
    double scale = std::max(1.0, p.coeff_norm());
    if (std::abs(orbit[std::size_t(fam.m0)]) > 1e-8 * scale)
        throw OrbitBroken("marked periodic orbit does not persist at this parameter");
    return orbit;
}

inline cplx multiplier_of_family(const ParabolicFamily& fam, cplx lambda) {
    Polynomial p = fam.at(lambda);
    auto orbit = marked_orbit(fam, lambda);
    cplx rho = 1.0;
    for (int k = 0; k < fam.m0; ++k) rho *= p.eval_jet(orbit[std::size_t(k)]).second;
    return rho;
}

// segment multipliers: for 0 <= i <= m1-1 the derivative of p^{m1-i-1} at
// p^{i+1}(0); extended over [i_lo, i_hi] by b_i = rho * b_{i+m0}
struct SegmentMultipliers {
    int i_lo = 0, i_hi = 0;
    std::vector<cplx> values;  // values[i - i_lo]
    cplx rho{0.0};

    cplx at(int i) const { return values[std::size_t(i - i_lo)]; }
};

inline SegmentMultipliers segment_multipliers(const ParabolicFamily& fam, cplx lambda,
                                              int i_lo, int i_hi) {
    int m1 = fam.m1();
    if (i_lo < -m1 || i_hi > 2 * m1 || i_lo > i_hi)
        throw Error("segment_multipliers: range must sit within [-m1, 2 m1]");
    Polynomial p = fam.at(lambda);
    auto orbit = marked_orbit(fam, lambda);
    std::vector<cplx> d(static_cast<std::size_t>(m1));
    for (int k = 0; k < m1; ++k) d[std::size_t(k)] = p.eval_jet(orbit[std::size_t(k % m1)]).second;
    cplx rho = 1.0;
    for (int k = 0; k < fam.m0; ++k) rho *= d[std::size_t(k)];

    // core b_0..b_{m1-1} by suffix products, then the recurrence both ways
    std::map<int, cplx> b;
    cplx acc = 1.0;
    for (int i = m1 - 1; i >= 0; --i) {
        b[i] = acc;
        acc *= d[std::size_t(i)];
    }
    for (int i = -1; i >= -m1; --i) b[i] = rho * b[i + fam.m0];
    for (int i = m1; i <= 2 * m1; ++i) b[i] = b[i - fam.m0] / rho;

    SegmentMultipliers out;
    out.i_lo = i_lo;
    out.i_hi = i_hi;
    out.rho = rho;
    for (int i = i_lo; i <= i_hi; ++i) out.values.push_back(b[i]);
    return out;
}

// coupling function c(w) = sum_{i<m1} b_i(lambda0) q^i(w) and the triple
// values c_j = c(r_j)
inline cplx coupling_function(const ParabolicFamily& fam, const Polynomial& q, cplx w) {
    auto b = segment_multipliers(fam, fam.lambda0, 0, fam.m1() - 1);
    cplx acc = 0.0, x = w;
    for (int i = 0; i < fam.m1(); ++i) {
        acc += b.at(i) * x;
        x = q(x);
    }
    return acc;
}

inline std::vector<cplx> coupling_values(const ParabolicFamily& fam, const Polynomial& q,
                                         const std::vector<cplx>& points) {
    int m1 = fam.m1();
    for (cplx r : points)
        if (std::abs(iterate(q, r, m1) - r) > 1e-8 * std::max(1.0, std::abs(r)))
            throw Error("coupling_values: input point is not period-m1 for q");
    std::vector<cplx> out;
    out.reserve(points.size());
    for (cplx r : points) out.push_back(coupling_function(fam, q, r));
    return out;
}

// ---------------------------------------------------------------------------
// renormalized iterate: phi^-1 o f o phi with f(z,w) = (p(z) + s eps w, q(w))
// and phi(z,w) = (s z, w). The first coordinate of the k-th iterate expands
// as g_{k,0}/s + g_{k,1} + O(s); the recursion below produces g_{k,0} and
// g_{k,1} without touching s.
// ---------------------------------------------------------------------------

struct RenormJet {
    cplx g_k0{0.0};                          // coefficient of 1/s
    std::function<cplx(cplx, cplx)> g_k1;    // coefficient of s^0, as map of (z, w)
};

inline RenormJet renorm_recursion(const ParabolicFamily& fam, cplx lambda, const Polynomial& q,
                                  cplx epsilon, int k) {
    if (k < 0) throw Error("renorm_recursion: k >= 0 required");
    Polynomial p = fam.at(lambda);
    // g_{0,0} = 0, g_{0,1} = z; then
    // g_{n+1,0} = p(g_{n,0}),  g_{n+1,1} = g_{n,1} p'(g_{n,0}) + eps q^n(w)
    cplx g0 = 0.0;
    cplx zcoef = 1.0;                 // coefficient of z in g_{n,1}
    std::vector<cplx> wcoef;          // g_{n,1} = zcoef z + eps sum_i wcoef[i] q^i(w)
    for (int n = 0; n < k; ++n) {
        cplx pd = p.eval_jet(g0).second;
        zcoef *= pd;
        for (auto& c : wcoef) c *= pd;
        wcoef.push_back(cplx(1.0));
        g0 = p(g0);
    }
    RenormJet out;
    out.g_k0 = g0;
    Polynomial qq = q;
    out.g_k1 = [zcoef, wcoef, epsilon, qq](cplx z, cplx w) {
        cplx acc = zcoef * z, x = w;
        for (const auto& c : wcoef) {
            acc += epsilon * c * x;
            x = qq(x);
        }
        return acc;
    };
    return out;
}

// first coordinate of the directly iterated renormalized map at parameter s
inline cplx direct_renormalized_iterate(const ParabolicFamily& fam, cplx lambda,
                                        const Polynomial& q, cplx epsilon, cplx s, int k,
                                        cplx z, cplx w) {
    Polynomial p = fam.at(lambda);
    cplx x = z, y = w;
    for (int n = 0; n < k; ++n) {
        cplx nx = p(s * x) / s + epsilon * y;
        y = q(y);
        x = nx;
    }
    return x;
}

// s-free part of the (m1 l)-th renormalized iterate:
// rho^{t0 l} z + eps sum_i b_i sum_k rho^{t0 k} q^{i + (l-1-k) m1}(w)
inline std::function<cplx(cplx, cplx)> closed_form_iterate(const ParabolicFamily& fam,
                                                           cplx lambda, const Polynomial& q,
                                                           cplx epsilon, int l) {
    if (l < 1) throw Error("closed_form_iterate: l >= 1 required");
    int m1 = fam.m1();
    auto b = segment_multipliers(fam, lambda, -1, m1 - 1);
    cplx rho_t0 = b.at(-1);  // the derivative of p^{m1} at the marked point

    std::vector<cplx> bvals;
    for (int i = 0; i < m1; ++i) bvals.push_back(b.at(i));
    Polynomial qq = q;
    return [bvals, rho_t0, epsilon, qq, m1, l](cplx z, cplx w) {
        // orbit cache: q^n(w) for n = 0 .. m1 l - 1
        std::vector<cplx> orb(std::size_t(m1 * l));
        orb[0] = w;
        for (std::size_t n = 1; n < orb.size(); ++n) orb[n] = qq(orb[n - 1]);
        cplx rho_pow_l = 1.0;
        for (int k = 0; k < l; ++k) rho_pow_l *= rho_t0;
        cplx acc = rho_pow_l * z;
        cplx rho_k = 1.0;
        for (int k = 0; k < l; ++k) {
            for (int i = 0; i < m1; ++i)
                acc += epsilon * bvals[std::size_t(i)] * rho_k *
                       orb[std::size_t(i + (l - 1 - k) * m1)];
            rho_k *= rho_t0;
        }
        return acc;
    };
}

// ---------------------------------------------------------------------------
// perturbation plan toward a blender at parameter lambda_n
// ---------------------------------------------------------------------------

enum class Regime { repelling, saddle };

inline const char* to_string(Regime r) { return r == Regime::repelling ? "repelling" : "saddle"; }

struct RenormPlan {
    Regime regime = Regime::repelling;
    int iterate_level = 1;        // l_n
    cplx coupling_eps{0.0};       // eps_n
    cplx perturbation_budget{0.0};  // beta_n = eps_n * s_cap
    cplx target_rho{0.0};         // rho_n with |rho_n| = 1 +- alpha0
    double s_cap = 0.0;
    double tail_error_bound = 0.0;  // geometric-sum bound on the orbit tail
    double diam_scale = 0.0, diam_ratio = 0.0;
    double linearization_radius = 0.0;  // largest disc at 0 with contracting pullback

    json to_json() const {
        return json{{"regime", to_string(regime)},
                    {"iterate_level", iterate_level},
                    {"coupling_eps", cplx_to_json(coupling_eps)},
                    {"perturbation_budget", cplx_to_json(perturbation_budget)},
                    {"target_rho", cplx_to_json(target_rho)},
                    {"s_cap", s_cap},
                    {"tail_error_bound", tail_error_bound},
                    {"diam_scale", diam_scale},
                    {"diam_ratio", diam_ratio},
                    {"linearization_radius", linearization_radius}};
    }
};

inline double linearization_radius_at_zero(const Polynomial& p, int m0) {
    // bisection on the largest disc around the repelling marked point whose
    // p^{m0}-pullback stays strictly inside and close to the linear model
    cplx chi = iterate_jet(p, cplx(0.0), m0).second;
    if (std::abs(chi) <= 1.0) return 0.0;
    double lo = 0.0, hi = 1.0;
    auto works = [&](double r) {
        if (r <= 0) return true;
        for (int k = 0; k < 64; ++k) {
            double t = 2.0 * kPi * k / 64.0;
            cplx target = r * cplx(std::cos(t), std::sin(t));
            auto res = detail::newton_iterate_eq(p, m0, target, target / chi, 1e-12);
            if (!res.ok) return false;
            if (std::abs(res.x) >= r * (1.0 - 1e-9)) return false;
            if (std::abs(res.x - target / chi) > 0.5 * r) return false;  // wrong branch
        }
        return true;
    };
    for (int it = 0; it < 40; ++it) {
        double mid = 0.5 * (lo + hi);
        if (works(mid)) lo = mid; else hi = mid;
    }
    return lo;
}

inline RenormPlan perturbation_plan(const ParabolicFamily& fam, cplx lambda_n,
                                    const CoveringConstants& cc, Regime regime,
                                    const VerticalNeighborhoods& nb, double delta0 = 0.1) {
    cplx rho = multiplier_of_family(fam, lambda_n);
    cplx rho_t0 = segment_multipliers(fam, lambda_n, -1, -1).at(-1);  // rho^{t0}
    double mod = std::abs(rho);
    if (std::abs(std::abs(rho_t0) - 1.0) < 1e-12)
        throw WrongRegime("multiplier sits on the unit circle");
    if (regime == Regime::repelling && mod <= 1.0)
        throw WrongRegime("repelling regime needs |rho| > 1");
    if (regime == Regime::saddle && mod >= 1.0)
        throw WrongRegime("saddle regime needs |rho| < 1");

    RenormPlan plan;
    plan.regime = regime;
    double target = (regime == Regime::repelling) ? 1.0 + cc.alpha0 : 1.0 - cc.alpha0;

    int best_l = 1;
    double best_gap = std::numeric_limits<double>::infinity();
    double log_mod_t0 = std::log(std::abs(rho_t0));
    for (int l = 1; l <= 4096; ++l) {
        double gap = std::abs(std::exp(l * log_mod_t0) - target);
        if (gap < best_gap) {
            best_gap = gap;
            best_l = l;
        }
    }
    plan.iterate_level = best_l;

    cplx rho_t0l = std::pow(rho_t0, best_l);
    plan.coupling_eps = cc.eps0 * (rho_t0 - cplx(1.0)) / (rho_t0l - cplx(1.0));
    plan.target_rho = target * rho_t0l / std::abs(rho_t0l);

    plan.diam_scale = nb.diam_scale;
    plan.diam_ratio = nb.diam_ratio;
    {
        // tail bound C^2 a1 a2 |eps| ((a2 |rho^{t0}|)^l - 1)/((a2 |rho^{t0}|) - 1)
        // with C fitted from the sampled orbit-tail deviation quotient on the
        // deepest available tower level
        double a1 = nb.diam_scale, a2 = nb.diam_ratio;
        double big_c = 1.0;
        const Polynomial& q = nb.q;
        int m1 = nb.m1;
        int l_eff = nb.level;
        for (int j = 0; j < 3; ++j) {
            cplx rj = nb.base_points[std::size_t(j)];
            auto bpts = nb.region(j).boundary(16);
            for (cplx w : bpts)
                for (int i = 0; i < m1; ++i)
                    for (int k = 0; k < std::min(l_eff, 3); ++k) {
                        double dev = std::abs(iterate(q, w, i + (l_eff - 1 - k) * m1) -
                                              iterate(q, rj, i));
                        double denom = a1 * std::pow(a2, k + 1);
                        if (denom > 1e-300 && std::isfinite(dev))
                            big_c = std::max(big_c, dev / denom);
                    }
        }
        double ratio = a2 * std::abs(rho_t0);
        double gsum = (std::abs(ratio - 1.0) < 1e-12)
                          ? double(best_l)
                          : (std::pow(ratio, best_l) - 1.0) / (ratio - 1.0);
        plan.tail_error_bound = big_c * big_c * a1 * a2 * std::abs(plan.coupling_eps) * gsum;
    }

    // s_cap: largest s with the sampled closed-form residual below delta0/2
    {
        auto closed = closed_form_iterate(fam, lambda_n, nb.q, plan.coupling_eps, best_l);
        int m1 = fam.m1();
        std::vector<std::pair<cplx, cplx>> samples;
        auto zsamp = detail::sample_disc(2.0, 3, 8);
        for (int j = 0; j < 3; ++j) {
            auto ws = nb.region(j).boundary(12);
            ws.push_back(nb.base_points[std::size_t(j)]);
            for (cplx w : ws)
                for (cplx z : zsamp) samples.push_back({z, w});
        }
        auto residual = [&](double s) {
            double worst = 0;
            for (const auto& [z, w] : samples) {
                cplx direct = direct_renormalized_iterate(fam, lambda_n, nb.q, plan.coupling_eps,
                                                          cplx(s), m1 * best_l, z, w);
                worst = std::max(worst, std::abs(direct - closed(z, w)));
                if (worst > delta0) break;
            }
            return worst;
        };
        double lo = 0.0, hi = 1.0;
        if (residual(1.0 - 1e-9) <= delta0 / 2.0) {
            lo = 1.0 - 1e-9;
        } else {
            for (int it = 0; it < 40; ++it) {
                double mid = 0.5 * (lo + hi);
                if (residual(mid) <= delta0 / 2.0) lo = mid; else hi = mid;
            }
        }
        plan.s_cap = lo;
    }
    plan.perturbation_budget = plan.coupling_eps * plan.s_cap;
    plan.linearization_radius = linearization_radius_at_zero(fam.at(lambda_n), fam.m0);
    return plan;
}

// ---------------------------------------------------------------------------
// good triple search: a repelling period-m1 point r, off the sampled
// postcritical orbit, with c(r) != 0; the triple (r, q^{m0} r, q^{2 m0} r)
// has coupling values forming an equilateral triangle summing to zero
// ---------------------------------------------------------------------------

struct TripleCensus {
    int candidates = 0;
    int non_repelling = 0;
    int postcritical = 0;
    int small_coupling = 0;
    int wrong_period = 0;
};

struct GoodTriple {
    std::array<PeriodicOrbit, 3> orbits;
    std::array<cplx, 3> c;
    TripleCensus census;
};

// shared census scan; the public operation adds the m0 >= 2 guard
inline GoodTriple triple_census_search(const Polynomial& q, const ParabolicFamily& fam,
                                       double c_floor_rel = 1e-3, int degree_cap = 4096,
                                       std::uint64_t seed = kDefaultSeed) {
    if (fam.t0 != 3) throw Error("triple search: t0 = 3 required");
    int m1 = fam.m1();
    auto orbs = periodic_points(q, m1, degree_cap, seed);

    struct Candidate {
        cplx r;
        double abs_c;
        cplx c;
        const PeriodicOrbit* orbit;
    };
    std::vector<Candidate> good;
    TripleCensus census;
    double max_c = 0.0;
    std::vector<std::pair<const PeriodicOrbit*, cplx>> screened;
    for (const auto& o : orbs) {
        for (cplx r : o.points) {
            ++census.candidates;
            // the triple needs q^{m0}(r) != r, so minimal periods dividing m0
            // are out
            if (fam.m0 % o.period == 0) {
                ++census.wrong_period;
                continue;
            }
            if (std::abs(cycle_multiplier(q, r, m1)) <= 1.0 + 1e-8) {
                ++census.non_repelling;
                continue;
            }
            if (postcritical_test(q, r, 100, 1e-6, seed)) {
                ++census.postcritical;
                continue;
            }
            cplx cv = coupling_function(fam, q, r);
            max_c = std::max(max_c, std::abs(cv));
            screened.push_back({&o, r});
        }
    }
    double floor_abs = c_floor_rel * max_c;
    for (const auto& [op, r] : screened) {
        cplx cv = coupling_function(fam, q, r);
        if (std::abs(cv) <= floor_abs) {
            ++census.small_coupling;
            continue;
        }
        good.push_back({r, std::abs(cv), cv, op});
    }
    if (good.empty()) {
        throw NoneFound("triple search: no candidate passed (candidates " +
                        std::to_string(census.candidates) + ", non-repelling " +
                        std::to_string(census.non_repelling) + ", postcritical " +
                        std::to_string(census.postcritical) + ", small coupling " +
                        std::to_string(census.small_coupling) + ")");
    }
    // deterministic winner: largest |c|, first index on ties
    std::size_t win = 0;
    for (std::size_t k = 1; k < good.size(); ++k)
        if (good[k].abs_c > good[win].abs_c + 1e-15) win = k;

    GoodTriple out;
    out.census = census;
    cplx r1 = good[win].r;
    std::array<cplx, 3> reps{r1, iterate(q, r1, fam.m0), iterate(q, r1, 2 * fam.m0)};
    for (int j = 0; j < 3; ++j) {
        PeriodicOrbit o;
        cplx x = reps[std::size_t(j)];
        o.points.push_back(x);
        for (int k = 1; k < m1; ++k) {
            x = q(x);
            if (std::abs(x - reps[std::size_t(j)]) < 1e-9) break;
            o.points.push_back(x);
        }
        o.period = int(o.points.size());
        o.multiplier = cycle_multiplier(q, o.points.front(), o.period);
        o.classification = classify_multiplier(o.multiplier);
        out.orbits[std::size_t(j)] = std::move(o);
        out.c[std::size_t(j)] = coupling_function(fam, q, reps[std::size_t(j)]);
    }
    return out;
}

inline GoodTriple good_triple_search(const Polynomial& q, const ParabolicFamily& fam,
                                     double c_floor_rel = 1e-3, int degree_cap = 4096,
                                     std::uint64_t seed = kDefaultSeed) {
    if (fam.t0 != 3 || fam.m0 < 2)
        throw Error("good_triple_search: t0 = 3 and m0 >= 2 required");
    double deg = std::pow(double(q.degree()), double(fam.m1()));
    if (deg > double(degree_cap))
        throw DegreeCapExceeded("good_triple_search: d^{m1} exceeds the degree cap");
    return triple_census_search(q, fam, c_floor_rel, degree_cap, seed);
}

// ---------------------------------------------------------------------------
// end-to-end plan: assemble f(z,w) = (p(z) + alpha beta_n w, q(w)), certify
// the (m1 l_n)-th iterate of its renormalization on the triangle blocks
// ---------------------------------------------------------------------------

struct PlanOutcome {
    GoodTriple triple;
    CoveringConstants cc;
    RenormPlan plan;
    BlenderCertificate certificate;
    std::optional<IntersectionWitness> witness;
    Certificate witness_replay;
};

inline PlanOutcome run_perturbation_pipeline(const ParabolicFamily& fam, const Polynomial& q,
                                             cplx lambda_n, Regime regime, cplx alpha = cplx(0.5),
                                             int witness_steps = 50,
                                             const CertifyConfig& cfg = {},
                                             int degree_cap = 4096,
                                             std::uint64_t seed = kDefaultSeed) {
    PlanOutcome out;
    out.triple = triple_census_search(q, fam, 1e-3, degree_cap, seed);
    out.cc = triangle_cover(out.triple.c[0], out.triple.c[1], out.triple.c[2]);

    // provisional level from the multiplier, then the neighborhoods at the
    // larger of that and the minimal admissible level
    cplx rho_t0 = segment_multipliers(fam, lambda_n, -1, -1).at(-1);
    if (std::abs(std::abs(rho_t0) - 1.0) < 1e-12)
        throw WrongRegime("multiplier sits on the unit circle");
    double target = (regime == Regime::repelling) ? 1.0 + out.cc.alpha0 : 1.0 - out.cc.alpha0;
    if (regime == Regime::repelling && std::abs(rho_t0) <= 1.0)
        throw WrongRegime("repelling regime needs |rho^{t0}| > 1");
    if (regime == Regime::saddle && std::abs(rho_t0) >= 1.0)
        throw WrongRegime("saddle regime needs |rho^{t0}| < 1");
    (void)target;

    NbOptions nopts;
    int lmin = minimal_level(q, out.triple.orbits, nopts);
    // plan first with a provisional tower at lmin to fit diameters, then
    // rebuild at the planned level if deeper
    VerticalNeighborhoods nb = build_vertical_neighborhoods(q, out.triple.orbits, lmin, nopts);
    out.plan = perturbation_plan(fam, lambda_n, out.cc, regime, nb, cfg.delta0_cap);
    int level = std::max(out.plan.iterate_level, lmin);
    if (level != out.plan.iterate_level)
        throw SearchFailed("planned iterate level " + std::to_string(out.plan.iterate_level) +
                           " is below the minimal admissible level " + std::to_string(lmin));
    if (level > nb.level) nb = build_vertical_neighborhoods(q, out.triple.orbits, level, nopts);
    out.plan = perturbation_plan(fam, lambda_n, out.cc, regime, nb, cfg.delta0_cap);

    cplx s = alpha * out.plan.s_cap;
    SkewMap g = make_renormalized_skew(fam.at(lambda_n), s * out.plan.coupling_eps, q,
                                       fam.m1() * out.plan.iterate_level, s);
    g.description = "renormalized perturbation of (" + fam.name + ", q)";

    if (regime == Regime::repelling) {
        out.certificate = certify_repelling_blender(g, out.cc, nb, out.plan.target_rho, cfg);
    } else {
        out.certificate = certify_saddle_blender(g, out.cc, nb, out.plan.target_rho, cfg);
    }

    if (out.certificate.pass) {
        if (regime == Regime::repelling) {
            VerticalGraph sigma = constant_graph(nb, 0, cplx(0.0));
            out.witness = blender_intersect(g, nb, out.certificate.blocks, sigma, witness_steps);
        } else {
            out.witness = saddle_backward_witness(g, out.cc, nb, out.plan.target_rho,
                                                  out.certificate.blocks, witness_steps);
        }
        out.witness_replay = verify_witness(g, out.certificate.blocks, *out.witness);
    }
    return out;
}

}  // namespace blenderlab
