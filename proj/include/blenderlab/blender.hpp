#pragma once

// Vertical neighborhood towers around repelling periodic points, inverse
// branches by Newton continuation, the vertical graph transform, nested-branch
// intersection witnesses, and certification of repelling and saddle blenders.

#include <deque>
#include <optional>

#include "blenderlab/regions.hpp"

namespace blenderlab {

// ---------------------------------------------------------------------------
// skew maps (z,w) -> (h(z,w), q^L(w)) with first derivatives of h
// ---------------------------------------------------------------------------

struct HJet {
    cplx value{0.0}, dz{0.0}, dw{0.0};
};

struct SkewMap {
    std::function<HJet(cplx, cplx)> h;
    Polynomial q;
    int vertical_power = 1;  // number of q applications in the second factor
    std::string description;

    HJet h_jet(cplx z, cplx w) const { return h(z, w); }
    cplx h_value(cplx z, cplx w) const { return h(z, w).value; }
    cplx vertical(cplx w) const { return iterate(q, w, vertical_power); }
    std::pair<cplx, cplx> vertical_jet(cplx w) const { return iterate_jet(q, w, vertical_power); }
    std::pair<cplx, cplx> operator()(cplx z, cplx w) const {
        return {h(z, w).value, vertical(w)};
    }
};

inline SkewMap make_poly_skew(const BivariatePolynomial& h, const Polynomial& q, int power,
                              std::string desc = "polynomial skew") {
    BivariatePolynomial hz = h.d_z(), hw = h.d_w();
    SkewMap g;
    g.h = [h, hz, hw](cplx z, cplx w) { return HJet{h(z, w), hz(z, w), hw(z, w)}; };
    g.q = q;
    g.vertical_power = power;
    g.description = std::move(desc);
    return g;
}

// piecewise model map: h = rho z + eps0 c_j on the block over the j-th
// vertical region; the regions are separated so dispatch by nearest center
inline SkewMap make_model_skew(cplx rho, double eps0, const std::array<cplx, 3>& c,
                               const std::array<cplx, 3>& centers, const Polynomial& q,
                               int power) {
    SkewMap g;
    g.h = [rho, eps0, c, centers](cplx z, cplx w) {
        int best = 0;
        double bd = std::abs(w - centers[0]);
        for (int j = 1; j < 3; ++j) {
            double d = std::abs(w - centers[std::size_t(j)]);
            if (d < bd) { bd = d; best = j; }
        }
        return HJet{rho * z + eps0 * c[std::size_t(best)], rho, cplx(0.0)};
    };
    g.q = q;
    g.vertical_power = power;
    g.description = "model skew";
    return g;
}

inline SkewMap perturb_skew(const SkewMap& g, const BivariatePolynomial& delta) {
    BivariatePolynomial dz = delta.d_z(), dw = delta.d_w();
    SkewMap out = g;
    auto base = g.h;
    out.h = [base, delta, dz, dw](cplx z, cplx w) {
        HJet j = base(z, w);
        return HJet{j.value + delta(z, w), j.dz + dz(z, w), j.dw + dw(z, w)};
    };
    out.description = g.description + " + perturbation";
    return out;
}

// conjugation by (z,w) -> (t z, w); blocks shrink by t in the z direction
inline SkewMap conjugate_zscale(const SkewMap& g, cplx t) {
    SkewMap out = g;
    auto base = g.h;
    out.h = [base, t](cplx z, cplx w) {
        HJet j = base(t * z, w);
        return HJet{j.value / t, j.dz, j.dw / t};
    };
    out.description = g.description + " (z-rescaled)";
    return out;
}

// first coordinate of phi^-1 o f^steps o phi with f(z,w) = (p(z)+coupling*w, q(w))
// and phi(z,w) = (scale*z, w); derivatives by Jacobian propagation
inline SkewMap make_renormalized_skew(const Polynomial& p, cplx coupling, const Polynomial& q,
                                      int steps, cplx scale) {
    SkewMap g;
    g.h = [p, coupling, q, steps, scale](cplx z, cplx w) {
        cplx x = scale * z, y = w;
        cplx az = 1.0, bz = 0.0, bw = 1.0;  // d(x_k)/dz0*scale, d(x_k)/dw0, d(y_k)/dw0
        for (int k = 0; k < steps; ++k) {
            auto [pv, pd] = p.eval_jet(x);
            auto [qv, qd] = q.eval_jet(y);
            cplx naz = pd * az, nbz = pd * bz + coupling * bw;
            x = pv + coupling * y;
            y = qv;
            az = naz;
            bz = nbz;
            bw = qd * bw;
        }
        return HJet{x / scale, az, bz / scale};
    };
    g.q = q;
    g.vertical_power = steps;
    g.description = "renormalized iterate";
    return g;
}

// ---------------------------------------------------------------------------
// Newton continuation along inverse branches of q^L
// ---------------------------------------------------------------------------

namespace detail {

struct NewtonResult {
    cplx x;
    bool ok = false;
};

inline NewtonResult newton_iterate_eq(const Polynomial& q, int L, cplx target, cplx seed,
                                      double tol, int max_it = 50) {
    cplx x = seed;
    double scale = std::max(1.0, std::abs(target));
    for (int it = 0; it < max_it; ++it) {
        auto [v, d] = iterate_jet(q, x, L);
        cplx r = v - target;
        if (std::abs(r) <= tol * scale) return {x, true};
        if (!(std::abs(d) > 1e-300) || !std::isfinite(std::abs(v))) return {x, false};
        cplx step = r / d;
        // at machine resolution of x the forward residual is as small as the
        // expansion of q^L allows
        if (std::abs(step) <= 4e-16 * std::max(1.0, std::abs(x))) return {x, true};
        x -= step;
        if (!std::isfinite(std::abs(x)) || std::abs(x) > 1e9) return {x, false};
    }
    auto [v, d] = iterate_jet(q, x, L);
    cplx r = v - target;
    return {x, std::abs(r) <= tol * scale ||
                   std::abs(r / d) <= 4e-16 * std::max(1.0, std::abs(x))};
}

inline double segment_point_distance(cplx a, cplx b, cplx p) {
    cplx ab = b - a;
    double len2 = std::norm(ab);
    double t = len2 > 0 ? std::clamp(((p - a) * std::conj(ab)).real() / len2, 0.0, 1.0) : 0.0;
    return std::abs(p - (a + t * ab));
}

}  // namespace detail

// One inverse branch of q^L: the branch is pinned by a known preimage of an
// anchor point, and targets are reached by continuation along a path from the
// anchor. A step that would cross a small disc around a critical value of the
// iterate aborts with BranchJump.
struct BranchSolver {
    Polynomial q;
    int steps = 1;  // L
    cplx anchor{0.0};
    cplx anchor_preimage{0.0};
    std::vector<cplx> crit_values;
    double tol = 1e-12;
    double crit_avoid = 1e-4;

    cplx solve(cplx target) const { return solve_from(target, anchor, anchor_preimage); }

    // continuation from a known pair (from, x0) with q^L(x0) = from
    cplx solve_from(cplx target, cplx from, cplx x0) const {
        cplx cur_t = from, cur_x = x0;
        // direct attempt first; subdivide on failure
        std::deque<cplx> agenda{target};
        double total = std::max(std::abs(target - from), 1e-30);
        while (!agenda.empty()) {
            cplx t = agenda.front();
            guard_segment(cur_t, t);
            auto r = detail::newton_iterate_eq(q, steps, t, cur_x, tol);
            if (r.ok) {
                cur_x = r.x;
                cur_t = t;
                agenda.pop_front();
                continue;
            }
            if (std::abs(t - cur_t) / total < 1e-6)
                throw BranchJump("inverse branch continuation stalled near critical value");
            agenda.push_front(0.5 * (cur_t + t));
        }
        return cur_x;
    }

  private:
    void guard_segment(cplx a, cplx b) const {
        for (cplx cv : crit_values)
            if (detail::segment_point_distance(a, b, cv) < crit_avoid)
                throw BranchJump("continuation step crosses a critical value of the iterate");
    }
};

// ---------------------------------------------------------------------------
// vertical neighborhoods: towers V_i^l with q^{m1}(V_i^{l+1}) = V_i^l around
// three repelling period-m1 points, expansion bound, mutual covering, and
// seeds for the nine inverse branches psi_ij : V_j^l -> W_ij inside V_i^l
// ---------------------------------------------------------------------------

struct NbOptions {
    int nodes = 256;               // boundary nodes per region
    double r_start_factor = 0.45;  // initial disc radius vs min pairwise distance
    int l1_cap = 8;                // deepest forward power probed for mutual covering
    double contraction = 0.8;      // pullback must land within this fraction of the disc
    double newton_tol = 1e-12;
    double crit_avoid = 1e-4;
    int postcritical_steps = 100;
    double postcritical_tol = 1e-6;
    int cover_samples = 64;
    double base_expansion = 1.02;  // min |(q^{m1})'| required on the base disc
    // additional points every region's forward image must reach (used when a
    // second family of neighborhoods has to sit inside these images)
    std::vector<cplx> extra_cover_targets;
};

struct VerticalNeighborhoods {
    Polynomial q;
    int m1 = 1;
    int level = 1;       // regions() are the V_i^level
    int base_level = 1;  // the level at which the tower is an explicit disc
    std::array<cplx, 3> base_points{};
    std::array<cplx, 3> multipliers{};  // (q^{m1})'(r_i)
    std::array<double, 3> base_radius{};
    std::vector<std::array<Region, 3>> tower;         // tower[k][i] = V_i^{base_level+k}
    std::array<std::array<cplx, 3>, 3> seeds{};       // seeds[i][j]: q^{level*m1} preimage of r_j in V_i^level
    std::vector<cplx> extra_targets;
    std::vector<std::array<cplx, 3>> extra_seeds;     // extra_seeds[t][i] in V_i^level
    std::vector<cplx> crit_values;
    double diam_scale = 0.0, diam_ratio = 0.0;  // diam(V^l) <= diam_scale * diam_ratio^l
    double expansion_floor = 0.0;               // min |(q^{level*m1})'| over V_i^level
    double expansion_const = 0.0;               // fitted A in |(q^{l m1})'| >= A chi^l
    double cover_margin = 0.0;                  // lifted-boundary membership margin
    double newton_tol = 1e-12;
    double crit_avoid = 1e-4;

    const std::array<Region, 3>& regions() const {
        return tower[std::size_t(level - base_level)];
    }
    const Region& region(int i) const { return regions()[std::size_t(i)]; }
    Region region_at(int i, int lvl) const {
        return tower[std::size_t(lvl - base_level)][std::size_t(i)];
    }

    BranchSolver branch(int i, int j) const {
        BranchSolver b;
        b.q = q;
        b.steps = level * m1;
        b.anchor = base_points[std::size_t(j)];
        b.anchor_preimage = seeds[std::size_t(i)][std::size_t(j)];
        b.crit_values = crit_values;
        b.tol = newton_tol;
        b.crit_avoid = crit_avoid;
        return b;
    }
    // inverse branch of q^{level*m1} from near the t-th extra target into V_i
    BranchSolver extra_branch(int i, int t) const {
        BranchSolver b;
        b.q = q;
        b.steps = level * m1;
        b.anchor = extra_targets[std::size_t(t)];
        b.anchor_preimage = extra_seeds[std::size_t(t)][std::size_t(i)];
        b.crit_values = crit_values;
        b.tol = newton_tol;
        b.crit_avoid = crit_avoid;
        return b;
    }
};

namespace detail {

// candidate paths from a to b dodging the avoid set; first clear one wins
inline std::vector<cplx> plan_path(cplx a, cplx b, const std::vector<cplx>& avoid,
                                   double clearance, int n = 24) {
    auto sample_arc = [&](double bulge) {
        std::vector<cplx> path;
        cplx perp = (b - a) * cplx(0.0, 1.0);
        for (int k = 0; k <= n; ++k) {
            double t = double(k) / n;
            path.push_back(a + t * (b - a) + bulge * 4.0 * t * (1.0 - t) * perp);
        }
        return path;
    };
    auto log_path = [&]() {
        std::vector<cplx> path;
        double ra = std::abs(a), rb = std::abs(b);
        if (ra < 1e-12 || rb < 1e-12) return path;
        double ta = std::arg(a), tb = std::arg(b);
        double dth = tb - ta;
        while (dth > kPi) dth -= 2.0 * kPi;
        while (dth < -kPi) dth += 2.0 * kPi;
        for (int k = 0; k <= n; ++k) {
            double t = double(k) / n;
            double r = ra * std::pow(rb / ra, t);
            double th = ta + t * dth;
            path.push_back(r * cplx(std::cos(th), std::sin(th)));
        }
        return path;
    };
    auto clear = [&](const std::vector<cplx>& path) {
        if (path.empty()) return false;
        for (std::size_t k = 0; k + 1 < path.size(); ++k)
            for (cplx cv : avoid)
                if (segment_point_distance(path[k], path[k + 1], cv) < clearance) return false;
        return true;
    };
    for (auto cand : {log_path(), sample_arc(0.0), sample_arc(0.3), sample_arc(-0.3),
                      sample_arc(0.8), sample_arc(-0.8)})
        if (clear(cand)) return cand;
    throw PostcriticalObstruction("no continuation path clears the critical values");
}

// lift a closed loop through the branch of (q^L)^-1 starting at x0 over loop[0]
inline std::vector<cplx> lift_loop(const Polynomial& q, int L, const std::vector<cplx>& loop,
                                   cplx x0, const std::vector<cplx>& crit_values, double tol,
                                   double crit_avoid) {
    BranchSolver bs{q, L, loop[0], x0, crit_values, tol, crit_avoid};
    std::vector<cplx> out;
    out.reserve(loop.size());
    cplx cur_t = loop[0], cur_x = x0;
    for (std::size_t k = 0; k < loop.size(); ++k) {
        cur_x = bs.solve_from(loop[k], cur_t, cur_x);
        cur_t = loop[k];
        out.push_back(cur_x);
    }
    // closure check: marching all the way around must return to the start
    cplx back = bs.solve_from(loop[0], cur_t, cur_x);
    if (std::abs(back - x0) > 1e-6 * std::max(1.0, std::abs(x0)))
        throw BranchJump("boundary lift does not close; region wraps a critical value");
    return out;
}

}  // namespace detail

inline VerticalNeighborhoods build_vertical_neighborhoods(
    const Polynomial& q, const std::array<PeriodicOrbit, 3>& orbits, int l,
    const NbOptions& opts = {}) {
    VerticalNeighborhoods nb;
    nb.q = q;
    nb.m1 = orbits[0].period;
    nb.newton_tol = opts.newton_tol;
    nb.crit_avoid = opts.crit_avoid;

    // shared period m1: every orbit's minimal period must divide a common m1
    int m1 = 1;
    for (const auto& o : orbits) m1 = std::max(m1, o.period);
    for (const auto& o : orbits)
        if (m1 % o.period != 0)
            throw Error("vertical neighborhoods: orbit periods do not share a common m1");
    nb.m1 = m1;

    for (int i = 0; i < 3; ++i) {
        cplx r = orbits[std::size_t(i)].representative();
        nb.base_points[std::size_t(i)] = r;
        if (std::abs(iterate(q, r, m1) - r) > 1e-7 * std::max(1.0, std::abs(r)))
            throw Error("vertical neighborhoods: base point is not period-m1");
        cplx chi = cycle_multiplier(q, r, m1);
        nb.multipliers[std::size_t(i)] = chi;
        if (std::abs(chi) <= 1.0 + 1e-8)
            throw ExpansionTooWeak("vertical neighborhoods: base point not repelling");
        if (postcritical_test(q, r, opts.postcritical_steps, opts.postcritical_tol))
            throw PostcriticalObstruction("base point lies on the sampled postcritical orbit");
    }

    nb.crit_values = postcritical_orbit(q, (opts.l1_cap + std::max(l, 1) + 2) * m1);

    double min_dist = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j)
            min_dist = std::min(min_dist,
                                std::abs(nb.base_points[std::size_t(i)] - nb.base_points[std::size_t(j)]));
    if (!(min_dist > 0)) throw Error("vertical neighborhoods: base points must be distinct");

    // Base regions: the largest shape from a deterministic shrinking schedule
    // whose q^{m1} pullback is a closed loop strictly inside it and on which
    // q^{m1} is expanding throughout. When the base points share a circle the
    // shape is an annular sector (radially thin, angularly wide): its forward
    // images cover the other base points quickly without the derivative
    // collapse a deep round disc would suffer near the critical orbits.
    std::array<std::vector<cplx>, 3> base_loop;
    double mod_lo = std::abs(nb.base_points[0]), mod_hi = mod_lo;
    for (int i = 1; i < 3; ++i) {
        mod_lo = std::min(mod_lo, std::abs(nb.base_points[std::size_t(i)]));
        mod_hi = std::max(mod_hi, std::abs(nb.base_points[std::size_t(i)]));
    }
    bool sector_shape = mod_lo > 0.2 && mod_hi / mod_lo < 1.3;
    double min_angle = 2.0 * kPi;
    if (sector_shape)
        for (int i = 0; i < 3; ++i)
            for (int j = i + 1; j < 3; ++j) {
                double da = std::abs(std::arg(nb.base_points[std::size_t(i)] /
                                              nb.base_points[std::size_t(j)]));
                min_angle = std::min(min_angle, da);
            }

    for (int i = 0; i < 3; ++i) {
        cplx r = nb.base_points[std::size_t(i)];
        cplx chi = nb.multipliers[std::size_t(i)];
        double theta0 = sector_shape ? opts.r_start_factor * min_angle : 0.0;
        double rad = opts.r_start_factor * min_dist;
        bool ok = false;
        for (int attempt = 0; attempt < 60 && !ok; ++attempt) {
            std::vector<cplx> loop;
            double scale;  // thinnest half-width, the margin unit below
            if (sector_shape) {
                double h0 = std::min(0.5 * theta0, 0.10);
                scale = h0 * std::abs(r);
                int per_side = opts.nodes / 4;
                double a0 = std::arg(r);
                for (int k = 0; k < per_side; ++k)  // outer arc
                    loop.push_back(std::polar(std::abs(r) * (1.0 + h0),
                                              a0 - theta0 + 2.0 * theta0 * k / per_side));
                for (int k = 0; k < per_side; ++k)  // radial side down
                    loop.push_back(std::polar(std::abs(r) * (1.0 + h0 - 2.0 * h0 * k / per_side),
                                              a0 + theta0));
                for (int k = 0; k < per_side; ++k)  // inner arc back
                    loop.push_back(std::polar(std::abs(r) * (1.0 - h0),
                                              a0 + theta0 - 2.0 * theta0 * k / per_side));
                for (int k = 0; k < per_side; ++k)  // radial side up
                    loop.push_back(std::polar(std::abs(r) * (1.0 - h0 + 2.0 * h0 * k / per_side),
                                              a0 - theta0));
            } else {
                scale = rad;
                for (int k = 0; k < opts.nodes; ++k) {
                    double t = 2.0 * kPi * k / opts.nodes;
                    loop.push_back(r + rad * cplx(std::cos(t), std::sin(t)));
                }
            }

            // q^{m1} must expand on the whole shape
            Region shape = Region::polygon(loop);
            double min_deriv = std::numeric_limits<double>::infinity();
            for (cplx w : loop) min_deriv = std::min(min_deriv, std::abs(iterate_jet(q, w, m1).second));
            for (int k = 0; k < 32; ++k)
                min_deriv = std::min(min_deriv,
                                     std::abs(iterate_jet(q, r + (loop[std::size_t(k * loop.size() / 32)] - r) * 0.5,
                                                          m1)
                                                  .second));
            if (min_deriv < opts.base_expansion) {
                theta0 /= 1.4;
                rad /= 1.4;
                continue;
            }
            try {
                cplx x0 = detail::newton_iterate_eq(q, m1, loop[0], r + (loop[0] - r) / chi,
                                                    opts.newton_tol)
                              .x;
                if (std::abs(iterate(q, x0, m1) - loop[0]) > 1e-9 * std::max(1.0, std::abs(loop[0])))
                    throw BranchJump("pullback seed rejected");
                auto lifted = detail::lift_loop(q, m1, loop, x0, nb.crit_values, opts.newton_tol,
                                                opts.crit_avoid);
                double worst_margin = std::numeric_limits<double>::infinity();
                for (cplx x : lifted) worst_margin = std::min(worst_margin, shape.margin(x));
                if (worst_margin >= (1.0 - opts.contraction) * 0.25 * scale) {
                    ok = true;
                    nb.base_radius[std::size_t(i)] = scale;
                    base_loop[std::size_t(i)] = loop;
                } else {
                    theta0 /= 1.4;
                    rad /= 1.4;
                }
            } catch (const BranchJump&) {
                theta0 /= 1.4;
                rad /= 1.4;
            }
        }
        if (!ok)
            throw PostcriticalObstruction(
                "no expanding base region with a contracting pullback was found");
    }

    // minimal forward power l1 with every cross seed (base points plus any
    // extra cover targets) landing inside the discs
    nb.extra_targets = opts.extra_cover_targets;
    std::vector<cplx> all_targets(nb.base_points.begin(), nb.base_points.end());
    all_targets.insert(all_targets.end(), nb.extra_targets.begin(), nb.extra_targets.end());
    int l1 = 0;
    std::vector<std::array<cplx, 3>> seeds_l1(all_targets.size());
    std::array<Region, 3> base_region;
    for (int i = 0; i < 3; ++i) base_region[std::size_t(i)] = Region::polygon(base_loop[std::size_t(i)]);
    for (int k = 1; k <= opts.l1_cap && l1 == 0; ++k) {
        bool all_ok = true;
        std::vector<std::array<cplx, 3>> cand(all_targets.size());
        for (int i = 0; i < 3 && all_ok; ++i) {
            for (std::size_t tj = 0; tj < all_targets.size() && all_ok; ++tj) {
                cplx ri = nb.base_points[std::size_t(i)], tgt = all_targets[tj];
                if (std::abs(tgt - ri) < 1e-12) {
                    cand[tj][std::size_t(i)] = ri;
                    continue;
                }
                try {
                    auto path = detail::plan_path(ri, tgt, nb.crit_values,
                                                  std::max(opts.crit_avoid, 0.02 * min_dist));
                    BranchSolver bs{q, k * m1, ri, ri, nb.crit_values, opts.newton_tol,
                                    opts.crit_avoid};
                    cplx cur_t = ri, cur_x = ri;
                    for (cplx t : path) {
                        cur_x = bs.solve_from(t, cur_t, cur_x);
                        cur_t = t;
                    }
                    double margin = base_region[std::size_t(i)].margin(cur_x);
                    if (margin < 0.1 * nb.base_radius[std::size_t(i)]) {
                        all_ok = false;
                    } else {
                        cand[tj][std::size_t(i)] = cur_x;
                    }
                } catch (const Error&) {
                    all_ok = false;
                }
            }
        }
        if (all_ok) {
            l1 = k;
            seeds_l1 = cand;
        }
    }
    if (l1 == 0)
        throw PostcriticalObstruction("mutual covering level not found within the probe cap");
    nb.base_level = l1;
    if (l < l1)
        throw Error("vertical neighborhoods: requested level " + std::to_string(l) +
                    " is below the minimal admissible level " + std::to_string(l1));
    nb.level = l;

    // tower of pullbacks, one extra level for the pullback-relation check
    nb.tower.clear();
    std::array<std::vector<cplx>, 3> cur = base_loop;
    {
        std::array<Region, 3> lvl;
        for (int i = 0; i < 3; ++i) lvl[std::size_t(i)] = Region::polygon(cur[std::size_t(i)]);
        nb.tower.push_back(lvl);
    }
    for (int k = l1; k <= l; ++k) {
        std::array<Region, 3> lvl;
        for (int i = 0; i < 3; ++i) {
            cplx r = nb.base_points[std::size_t(i)];
            cplx chi = nb.multipliers[std::size_t(i)];
            const auto& loop = cur[std::size_t(i)];
            cplx x0 = detail::newton_iterate_eq(q, m1, loop[0], r + (loop[0] - r) / chi,
                                                opts.newton_tol)
                          .x;
            auto lifted = detail::lift_loop(q, m1, loop, x0, nb.crit_values, opts.newton_tol,
                                            opts.crit_avoid);
            cur[std::size_t(i)] = lifted;
            lvl[std::size_t(i)] = Region::polygon(lifted);
        }
        nb.tower.push_back(lvl);
    }

    // branch seeds at the output level: pull the l1 seeds down through the
    // branch fixing r_i
    auto pull_seed = [&](cplx s, int i) {
        cplx r = nb.base_points[std::size_t(i)];
        cplx chi = nb.multipliers[std::size_t(i)];
        for (int k = l1; k < l; ++k) {
            auto res = detail::newton_iterate_eq(q, m1, s, r + (s - r) / chi, opts.newton_tol);
            if (!res.ok) {
                BranchSolver bs{q, m1, r, r, nb.crit_values, opts.newton_tol, opts.crit_avoid};
                res.x = bs.solve(s);
            }
            s = res.x;
        }
        return s;
    };
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            cplx s = pull_seed(seeds_l1[std::size_t(j)][std::size_t(i)], i);
            nb.seeds[std::size_t(i)][std::size_t(j)] = s;
            if (nb.region(i).margin(s) < 0)
                throw PostcriticalObstruction("branch seed escaped its vertical neighborhood");
        }
    nb.extra_seeds.assign(nb.extra_targets.size(), {});
    for (std::size_t t = 0; t < nb.extra_targets.size(); ++t)
        for (int i = 0; i < 3; ++i) {
            cplx s = pull_seed(seeds_l1[3 + t][std::size_t(i)], i);
            nb.extra_seeds[t][std::size_t(i)] = s;
            if (nb.region(i).margin(s) < 0)
                throw PostcriticalObstruction("extra-target seed escaped its neighborhood");
        }

    // diameter decay fit over the tower
    {
        std::vector<double> xs, ys;
        for (std::size_t k = 0; k < nb.tower.size(); ++k) {
            double d = 0;
            for (int i = 0; i < 3; ++i) d = std::max(d, nb.tower[k][std::size_t(i)].diameter());
            xs.push_back(double(l1 + int(k)));
            ys.push_back(std::log(d));
        }
        auto [a, b] = linear_fit(xs, ys);
        nb.diam_ratio = std::exp(b);
        nb.diam_scale = std::exp(a) * 1.05;  // slack so the fit is an upper bound
    }

    // expansion of q^{l m1} over the output regions
    {
        double floor_val = std::numeric_limits<double>::infinity();
        double a_fit = std::numeric_limits<double>::infinity();
        for (int i = 0; i < 3; ++i) {
            std::vector<cplx> samples = nb.region(i).boundary(opts.cover_samples);
            samples.push_back(nb.base_points[std::size_t(i)]);
            double chi_l = std::pow(std::abs(nb.multipliers[std::size_t(i)]), double(l));
            for (cplx w : samples) {
                double d = std::abs(iterate_jet(q, w, l * m1).second);
                floor_val = std::min(floor_val, d);
                a_fit = std::min(a_fit, d / chi_l);
            }
        }
        nb.expansion_floor = floor_val;
        nb.expansion_const = a_fit;
        if (!(floor_val > 1.0))
            throw ExpansionTooWeak("sampled |(q^{l m1})'| does not exceed 1 on the regions");
    }

    // mutual covering: lifted boundary samples of every V_j^l must land inside
    // V_i^l with positive margin
    {
        double worst = std::numeric_limits<double>::infinity();
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                BranchSolver bs = nb.branch(i, j);
                std::vector<cplx> targets = nb.region(j).boundary(opts.cover_samples / 2);
                targets.push_back(nb.base_points[std::size_t(j)]);
                cplx cur_t = nb.base_points[std::size_t(j)];
                cplx cur_x = nb.seeds[std::size_t(i)][std::size_t(j)];
                for (cplx t : targets) {
                    cplx x = bs.solve_from(t, cur_t, cur_x);
                    cur_t = t;
                    cur_x = x;
                    worst = std::min(worst, nb.region(i).margin(x));
                }
            }
        nb.cover_margin = worst;
        if (!(worst > 0))
            throw PostcriticalObstruction("mutual covering failed at the requested level");
    }

    return nb;
}

// probe the minimal admissible level without keeping the result
inline int minimal_level(const Polynomial& q, const std::array<PeriodicOrbit, 3>& orbits,
                         const NbOptions& opts = {}) {
    for (int l = 1; l <= opts.l1_cap; ++l) {
        try {
            build_vertical_neighborhoods(q, orbits, l, opts);
            return l;
        } catch (const Error&) {
            continue;
        }
    }
    throw PostcriticalObstruction("no admissible level within the probe cap");
}

// w in W_ij with q^{l m1}(w) = target, following the branch pinned at r_j
inline cplx inverse_branch(const VerticalNeighborhoods& nb, int i, int j, cplx target) {
    return nb.branch(i, j).solve(target);
}

// ---------------------------------------------------------------------------
// vertical graphs and their transform under a skew map
// ---------------------------------------------------------------------------

struct VerticalGraph {
    int domain_index = 0;
    Region domain;
    std::vector<cplx> nodes_w;
    std::vector<cplx> nodes_sigma;
    double slope_bound = 0.0;  // max adjacent divided difference
    std::function<cplx(cplx)> eval;
};

inline double graph_slope(const std::vector<cplx>& ws, const std::vector<cplx>& ss) {
    double s = 0;
    std::size_t n = ws.size();
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t k2 = (k + 1) % n;
        double dw = std::abs(ws[k2] - ws[k]);
        if (dw > 1e-14) s = std::max(s, std::abs(ss[k2] - ss[k]) / dw);
    }
    return s;
}

inline VerticalGraph make_graph(const VerticalNeighborhoods& nb, int i,
                                std::function<cplx(cplx)> fn) {
    VerticalGraph g;
    g.domain_index = i;
    g.domain = nb.region(i);
    g.nodes_w = g.domain.points();
    for (cplx w : g.nodes_w) g.nodes_sigma.push_back(fn(w));
    g.slope_bound = graph_slope(g.nodes_w, g.nodes_sigma);
    g.eval = std::move(fn);
    return g;
}

inline VerticalGraph constant_graph(const VerticalNeighborhoods& nb, int i, cplx z0) {
    return make_graph(nb, i, [z0](cplx) { return z0; });
}

// CSV rows w_re, w_im, sigma_re, sigma_im over the sampled nodes
inline std::string graph_to_csv(const VerticalGraph& g) {
    std::string out = "w_re,w_im,sigma_re,sigma_im\n";
    char line[128];
    for (std::size_t k = 0; k < g.nodes_w.size(); ++k) {
        std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%.17g\n", g.nodes_w[k].real(),
                      g.nodes_w[k].imag(), g.nodes_sigma[k].real(), g.nodes_sigma[k].imag());
        out += line;
    }
    return out;
}

// sigma_1(w) = h(sigma(psi_ij(w)), psi_ij(w)) over V_j^l
inline VerticalGraph graph_transform(const SkewMap& g, const VerticalNeighborhoods& nb,
                                     const VerticalGraph& sigma, int i, int j) {
    if (sigma.domain_index != i) throw Error("graph_transform: domain index mismatch");
    BranchSolver bs = nb.branch(i, j);
    auto h = g.h;
    auto prev = sigma.eval;

    VerticalGraph out;
    out.domain_index = j;
    out.domain = nb.region(j);
    out.nodes_w = out.domain.points();
    out.nodes_sigma.reserve(out.nodes_w.size());
    cplx cur_t = bs.anchor, cur_x = bs.anchor_preimage;
    for (cplx w : out.nodes_w) {
        cur_x = bs.solve_from(w, cur_t, cur_x);
        cur_t = w;
        out.nodes_sigma.push_back(h(prev(cur_x), cur_x).value);
    }
    out.slope_bound = graph_slope(out.nodes_w, out.nodes_sigma);
    out.eval = [bs, h, prev](cplx w) {
        cplx u = bs.solve(w);
        return h(prev(u), u).value;
    };
    return out;
}

// ---------------------------------------------------------------------------
// nested-branch intersection: the maximal invariant set in the blocks meets
// every admissible vertical graph; the witness orbit is built backwards
// through the inverse branches, so each step replays forward to Newton
// tolerance
// ---------------------------------------------------------------------------

struct IntersectionWitness {
    cplx z{0.0}, w{0.0};
    std::vector<int> itinerary;                 // block index per step
    std::vector<std::array<cplx, 2>> orbit;     // (z_n, w_n), orbit[0] = (z, w)
    double worst_block_margin = 0.0;
    double max_step_residual = 0.0;

    json to_json() const {
        json it = json::array();
        for (int i : itinerary) it.push_back(i);
        json orb = json::array();
        for (const auto& p : orbit)
            orb.push_back(json::array({cplx_to_json(p[0]), cplx_to_json(p[1])}));
        return json{{"z", cplx_to_json(z)},         {"w", cplx_to_json(w)},
                    {"itinerary", it},              {"orbit", orb},
                    {"worst_block_margin", worst_block_margin},
                    {"max_step_residual", max_step_residual}};
    }
};

inline IntersectionWitness blender_intersect(const SkewMap& g, const VerticalNeighborhoods& nb,
                                             const std::vector<ProductBlock>& blocks,
                                             const VerticalGraph& sigma, int n_steps) {
    if (blocks.size() != 3) throw Error("blender_intersect: three blocks expected");
    int i0 = sigma.domain_index;
    {
        double m = std::numeric_limits<double>::infinity();
        for (cplx v : sigma.nodes_sigma)
            m = std::min(m, blocks[std::size_t(i0)].horizontal.margin(v));
        if (m < 0)
            throw NoAdmissibleBlock("input graph is not valued in its horizontal piece");
    }

    std::vector<VerticalGraph> chain{sigma};
    std::vector<int> itin{i0};
    for (int n = 0; n < n_steps; ++n) {
        int cur = itin.back();
        int best_j = -1;
        double best_m = -std::numeric_limits<double>::infinity();
        VerticalGraph best_g;
        for (int j = 0; j < 3; ++j) {
            VerticalGraph cand = graph_transform(g, nb, chain.back(), cur, j);
            double m = std::numeric_limits<double>::infinity();
            for (cplx v : cand.nodes_sigma)
                m = std::min(m, blocks[std::size_t(j)].horizontal.margin(v));
            if (m > best_m) {
                best_m = m;
                best_j = j;
                best_g = std::move(cand);
            }
        }
        if (best_m < 0)
            throw NoAdmissibleBlock("no block admits the transformed graph at step " +
                                    std::to_string(n + 1) + " (best margin " +
                                    std::to_string(best_m) + ")");
        itin.push_back(best_j);
        chain.push_back(std::move(best_g));
    }

    // nested branch limit: compose the inverse branches back from the tail
    std::vector<cplx> ws(itin.size());
    ws.back() = nb.base_points[std::size_t(itin.back())];
    for (std::size_t n = itin.size() - 1; n-- > 0;)
        ws[n] = nb.branch(itin[n], itin[n + 1]).solve(ws[n + 1]);

    IntersectionWitness wit;
    wit.itinerary = itin;
    wit.w = ws[0];
    wit.z = chain[0].eval(ws[0]);
    wit.orbit.reserve(itin.size());
    for (std::size_t n = 0; n < itin.size(); ++n)
        wit.orbit.push_back({chain[n].eval(ws[n]), ws[n]});

    double res = 0, margin = std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n < wit.orbit.size(); ++n) {
        margin = std::min(margin, blocks[std::size_t(itin[n])].margin(wit.orbit[n][0],
                                                                      wit.orbit[n][1]));
        if (n + 1 < wit.orbit.size()) {
            auto [hz, qv] = g(wit.orbit[n][0], wit.orbit[n][1]);
            res = std::max(res, std::max(std::abs(hz - wit.orbit[n + 1][0]),
                                         std::abs(qv - wit.orbit[n + 1][1])));
        }
    }
    wit.worst_block_margin = margin;
    wit.max_step_residual = res;
    return wit;
}

// a forward orbit pinned inside the saddle blocks, built backwards through
// the image covering closure(Z) in g(Z): every preimage step solves
// g(x_prev) = x with x_prev back in Z
inline IntersectionWitness saddle_backward_witness(const SkewMap& g,
                                                   const CoveringConstants& cc,
                                                   const VerticalNeighborhoods& nb, cplx rho,
                                                   const std::vector<ProductBlock>& blocks,
                                                   int n_steps) {
    std::vector<std::array<cplx, 2>> rev;
    std::vector<int> rev_idx;
    cplx z(0.0), w = nb.base_points[0];
    int cur = 0;
    rev.push_back({z, w});
    rev_idx.push_back(cur);
    for (int n = 0; n < n_steps; ++n) {
        int j0 = 0;
        double best = -std::numeric_limits<double>::infinity();
        for (int t = 0; t < 3; ++t) {
            double m = std::abs(rho) - std::abs(z - cc.eps0 * cc.c[std::size_t(t)]);
            if (m > best) { best = m; j0 = t; }
        }
        if (best <= 0)
            throw NoAdmissibleBlock("backward witness: covering failed at step " +
                                    std::to_string(n));
        cplx w1 = nb.branch(j0, cur).solve(w);
        cplx z1 = (z - cc.eps0 * cc.c[std::size_t(j0)]) / rho;
        bool conv = false;
        for (int it = 0; it < 60; ++it) {
            HJet jet = g.h_jet(z1, w1);
            cplx r = jet.value - z;
            if (std::abs(r) < 1e-11 * std::max(1.0, std::abs(z))) { conv = true; break; }
            if (std::abs(jet.dz) < 1e-300) break;
            z1 -= r / jet.dz;
        }
        if (!conv) throw NoAdmissibleBlock("backward witness: preimage solve failed");
        rev.push_back({z1, w1});
        rev_idx.push_back(j0);
        z = z1;
        w = w1;
        cur = j0;
    }

    IntersectionWitness wit;
    wit.orbit.assign(rev.rbegin(), rev.rend());
    wit.itinerary.assign(rev_idx.rbegin(), rev_idx.rend());
    wit.z = wit.orbit.front()[0];
    wit.w = wit.orbit.front()[1];
    double res = 0, margin = std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n < wit.orbit.size(); ++n) {
        margin = std::min(margin, blocks[std::size_t(wit.itinerary[n])].margin(wit.orbit[n][0],
                                                                               wit.orbit[n][1]));
        if (n + 1 < wit.orbit.size()) {
            auto [hz, qv] = g(wit.orbit[n][0], wit.orbit[n][1]);
            res = std::max(res, std::max(std::abs(hz - wit.orbit[n + 1][0]),
                                         std::abs(qv - wit.orbit[n + 1][1])));
        }
    }
    wit.worst_block_margin = margin;
    wit.max_step_residual = res;
    return wit;
}

// replay the witness through plain skew-map evaluation, no branch data
inline Certificate verify_witness(const SkewMap& g, const std::vector<ProductBlock>& blocks,
                                  const IntersectionWitness& wit, double residual_tol = 1e-8) {
    Certificate cert = Certificate::make("witness_replay");
    MarginTracker tracker;
    double res = 0;
    for (std::size_t n = 0; n < wit.orbit.size(); ++n) {
        int bi = wit.itinerary[n];
        double m = blocks[std::size_t(bi)].margin(wit.orbit[n][0], wit.orbit[n][1]);
        tracker.observe(m, {wit.orbit[n][0].real(), wit.orbit[n][0].imag(),
                            wit.orbit[n][1].real(), wit.orbit[n][1].imag()});
        if (n + 1 < wit.orbit.size()) {
            auto [hz, qv] = g(wit.orbit[n][0], wit.orbit[n][1]);
            res = std::max(res, std::max(std::abs(hz - wit.orbit[n + 1][0]),
                                         std::abs(qv - wit.orbit[n + 1][1])));
        }
    }
    tracker.commit(cert);
    cert.params["max_step_residual"] = res;
    cert.params["residual_tol"] = residual_tol;
    cert.pass = tracker.worst >= 0.0 && res <= residual_tol;
    return cert;
}

// ---------------------------------------------------------------------------
// blender certification
// ---------------------------------------------------------------------------

struct CertifyConfig {
    double margin_floor = 1e-3;
    double delta0_cap = 0.1;
    int z_rings = 5;
    int z_angles = 24;
    int w_samples = 48;
};

struct BlenderCertificate {
    std::string kind;  // "repelling" or "saddle"
    double delta0 = 0.0;
    std::array<Region, 3> h_regions;
    std::vector<ProductBlock> blocks;        // H_j x V_j^l
    std::vector<ProductBlock> blocks_inner;  // (H_j/3) x V_j^l
    Certificate cert;
    bool pass = false;

    json to_json() const {
        json jblocks = json::array(), jinner = json::array();
        for (const auto& b : blocks)
            jblocks.push_back(json{{"horizontal", b.horizontal.to_json()},
                                   {"vertical", b.vertical.to_json()},
                                   {"label", b.label}});
        for (const auto& b : blocks_inner)
            jinner.push_back(json{{"horizontal", b.horizontal.to_json()},
                                  {"vertical", b.vertical.to_json()},
                                  {"label", b.label}});
        return json{{"kind", kind},     {"delta0", delta0},      {"pass", pass},
                    {"blocks", jblocks}, {"blocks_inner", jinner}, {"certificate", cert.to_json()}};
    }
};

namespace detail {

inline std::vector<cplx> sample_disc(double radius, int rings, int angles) {
    std::vector<cplx> out{cplx(0.0)};
    for (int r = 1; r <= rings; ++r)
        for (int a = 0; a < angles; ++a) {
            double rr = radius * r / rings;
            double th = 2.0 * kPi * a / angles + 0.1 * r;  // stagger rings
            out.push_back(rr * cplx(std::cos(th), std::sin(th)));
        }
    return out;
}

inline std::vector<cplx> region_samples(const Region& reg, cplx center, int n) {
    std::vector<cplx> out = reg.boundary(n);
    std::size_t m = out.size();
    for (std::size_t k = 0; k < m; k += 4) out.push_back(0.5 * (out[k] + center));
    out.push_back(center);
    return out;
}

struct ConeSample {
    double hz, hw, qd;
};

}  // namespace detail

inline BlenderCertificate certify_repelling_blender(const SkewMap& g, const CoveringConstants& cc,
                                                    const VerticalNeighborhoods& nb, cplx rho,
                                                    const CertifyConfig& cfg = {}) {
    BlenderCertificate bc;
    bc.kind = "repelling";
    bc.h_regions = make_h_regions(cc.c, cc.eta, rho);
    for (int j = 0; j < 3; ++j) {
        bc.blocks.push_back({bc.h_regions[std::size_t(j)], nb.region(j), j});
        bc.blocks_inner.push_back(
            {Region::scaled(bc.h_regions[std::size_t(j)], cplx(1.0 / 3.0)), nb.region(j), j});
    }
    Certificate root = Certificate::make("repelling_blender");
    root.params["rho"] = cplx_to_json(rho);
    root.params["eps0"] = cc.eps0;
    root.params["alpha0"] = cc.alpha0;
    root.params["level"] = nb.level;

    {
        Certificate pre = Certificate::make("rho_modulus");
        double gap = std::abs(std::abs(rho) - (1.0 + cc.alpha0));
        pre.worst_margin = 1e-9 - gap;
        pre.samples = 1;
        pre.pass = gap <= 1e-9;
        pre.params["expected_modulus"] = 1.0 + cc.alpha0;
        root.add_sub(pre);
        if (!pre.pass) {
            bc.cert = root;
            bc.cert.finalize(0.0);
            bc.pass = false;
            return bc;
        }
    }

    auto zs2 = detail::sample_disc(2.0, cfg.z_rings, cfg.z_angles);
    auto zs1 = detail::sample_disc(1.0, cfg.z_rings, cfg.z_angles);

    // proximity deviation and cone data in one sweep over the blocks
    double prox_dev = 0.0;
    std::vector<double> prox_worst{0, 0, 0, 0};
    std::vector<detail::ConeSample> cone;
    double min_hz = std::numeric_limits<double>::infinity();
    std::vector<double> exp_worst{0, 0};
    for (int j = 0; j < 3; ++j) {
        auto ws = detail::region_samples(nb.region(j), nb.base_points[std::size_t(j)],
                                         cfg.w_samples);
        for (cplx w : ws) {
            double qd = std::abs(g.vertical_jet(w).second);
            for (cplx z : zs2) {
                cplx dev = g.h_value(z, w) - (rho * z + cc.eps0 * cc.c[std::size_t(j)]);
                if (std::abs(dev) > prox_dev) {
                    prox_dev = std::abs(dev);
                    prox_worst = {z.real(), z.imag(), w.real(), w.imag()};
                }
            }
            for (cplx z : zs1) {
                HJet jet = g.h_jet(z, w);
                cone.push_back({std::abs(jet.dz), std::abs(jet.dw), qd});
                if (std::abs(jet.dz) < min_hz) {
                    min_hz = std::abs(jet.dz);
                    exp_worst = {z.real(), z.imag()};
                }
            }
        }
    }

    // largest delta0 <= cap passing proximity and cone contraction
    auto cone_bound = [&](double delta) {
        double b = 0;
        for (const auto& s : cone) b = std::max(b, (s.hz * delta + s.hw) / s.qd);
        return b;
    };
    auto feasible = [&](double delta) {
        return prox_dev <= delta - cfg.margin_floor &&
               cone_bound(delta) <= delta - cfg.margin_floor;
    };
    double delta0 = 0.0;
    if (feasible(cfg.delta0_cap)) {
        delta0 = cfg.delta0_cap;
    } else {
        double lo = 0.0, hi = cfg.delta0_cap;
        for (int it = 0; it < 60; ++it) {
            double mid = 0.5 * (lo + hi);
            if (feasible(mid)) lo = mid; else hi = mid;
        }
        delta0 = feasible(lo) ? lo : 0.0;
    }
    bc.delta0 = delta0;
    root.params["delta0"] = delta0;

    {
        Certificate c = Certificate::make("proximity");
        c.worst_margin = delta0 - prox_dev;
        c.worst_point = prox_worst;
        c.samples = static_cast<long long>(cone.size());
        c.params["max_deviation"] = prox_dev;
        c.pass = delta0 > 0 && c.worst_margin >= cfg.margin_floor;
        root.add_sub(c);
    }
    {
        Certificate c = Certificate::make("cone_contraction");
        double b = cone_bound(delta0);
        c.worst_margin = delta0 - b;
        c.samples = static_cast<long long>(cone.size());
        c.params["contracted_delta"] = b;
        c.pass = delta0 > 0 && c.worst_margin >= cfg.margin_floor;
        root.add_sub(c);
    }
    {
        Certificate c = Certificate::make("horizontal_expansion");
        c.worst_margin = min_hz - 1.0;
        c.worst_point = exp_worst;
        c.samples = static_cast<long long>(cone.size());
        c.pass = c.worst_margin >= cfg.margin_floor;
        root.add_sub(c);
    }

    // surjectivity over the unit blocks by preimage solving
    {
        Certificate c = Certificate::make("surjective_covering");
        MarginTracker tracker;
        std::array<double, 3> vdiam{nb.region(0).diameter(), nb.region(1).diameter(),
                                    nb.region(2).diameter()};
        bool all_ok = true;
        for (int j = 0; j < 3 && all_ok; ++j) {
            auto ws = detail::region_samples(nb.region(j), nb.base_points[std::size_t(j)], 24);
            for (cplx w0 : ws) {
                for (cplx z0 : zs1) {
                    int j0 = 0;
                    double best = -std::numeric_limits<double>::infinity();
                    for (int t = 0; t < 3; ++t) {
                        double m = std::abs(rho) - std::abs(z0 - cc.eps0 * cc.c[std::size_t(t)]);
                        if (m > best) { best = m; j0 = t; }
                    }
                    try {
                        cplx w1 = nb.branch(j0, j).solve(w0);
                        cplx z1 = (z0 - cc.eps0 * cc.c[std::size_t(j0)]) / rho;
                        bool conv = false;
                        for (int it = 0; it < 50; ++it) {
                            HJet jet = g.h_jet(z1, w1);
                            cplx r = jet.value - z0;
                            if (std::abs(r) < 1e-10) { conv = true; break; }
                            if (std::abs(jet.dz) < 1e-300) break;
                            z1 -= r / jet.dz;
                        }
                        double m = conv ? std::min(1.0 - std::abs(z1),
                                                   nb.region(j0).margin(w1) /
                                                       vdiam[std::size_t(j0)])
                                        : -1.0;
                        tracker.observe(m, {z0.real(), z0.imag(), w0.real(), w0.imag()});
                    } catch (const Error&) {
                        tracker.observe(-1.0, {z0.real(), z0.imag(), w0.real(), w0.imag()});
                        all_ok = false;
                        break;
                    }
                }
            }
        }
        tracker.commit(c);
        c.pass = tracker.worst >= cfg.margin_floor;
        root.add_sub(c);
    }

    root.finalize(0.0);
    // the modulus precheck is a tolerance gate, not a perturbation budget;
    // the certificate's margin is the worst clause margin
    {
        double m = std::numeric_limits<double>::infinity();
        for (const auto& sub : root.sub_certificates)
            if (sub.check_name != "rho_modulus") m = std::min(m, sub.worst_margin);
        root.worst_margin = m;
    }
    bc.cert = root;
    bc.pass = root.pass;
    return bc;
}

inline BlenderCertificate certify_saddle_blender(const SkewMap& g, const CoveringConstants& cc,
                                                 const VerticalNeighborhoods& nb, cplx rho,
                                                 const CertifyConfig& cfg = {}) {
    BlenderCertificate bc;
    bc.kind = "saddle";
    bc.h_regions = make_h_regions(cc.c, cc.eta, rho);
    for (int j = 0; j < 3; ++j) {
        bc.blocks.push_back({Region::disc(cplx(0.0), 1.0), nb.region(j), j});
        bc.blocks_inner.push_back({Region::disc(cplx(0.0), 1.0 / 3.0), nb.region(j), j});
    }
    Certificate root = Certificate::make("saddle_blender");
    root.params["rho"] = cplx_to_json(rho);
    root.params["eps0"] = cc.eps0;
    root.params["alpha0"] = cc.alpha0;
    root.params["level"] = nb.level;

    {
        Certificate pre = Certificate::make("rho_modulus");
        double gap = std::abs(std::abs(rho) - (1.0 - cc.alpha0));
        pre.worst_margin = 1e-9 - gap;
        pre.samples = 1;
        pre.pass = gap <= 1e-9;
        pre.params["expected_modulus"] = 1.0 - cc.alpha0;
        root.add_sub(pre);
        if (!pre.pass) {
            bc.cert = root;
            bc.cert.finalize(0.0);
            bc.pass = false;
            return bc;
        }
    }

    auto zs2 = detail::sample_disc(2.0, cfg.z_rings, cfg.z_angles);
    auto zs1 = detail::sample_disc(1.0, cfg.z_rings, cfg.z_angles);

    double prox_dev = 0.0;
    std::vector<double> prox_worst{0, 0, 0, 0};
    double max_hz = 0.0;
    std::vector<double> con_worst{0, 0};
    long long nsamp = 0;
    for (int j = 0; j < 3; ++j) {
        auto ws = detail::region_samples(nb.region(j), nb.base_points[std::size_t(j)],
                                         cfg.w_samples);
        for (cplx w : ws) {
            for (cplx z : zs2) {
                cplx dev = g.h_value(z, w) - (rho * z + cc.eps0 * cc.c[std::size_t(j)]);
                ++nsamp;
                if (std::abs(dev) > prox_dev) {
                    prox_dev = std::abs(dev);
                    prox_worst = {z.real(), z.imag(), w.real(), w.imag()};
                }
            }
            for (cplx z : zs1) {
                HJet jet = g.h_jet(z, w);
                if (std::abs(jet.dz) > max_hz) {
                    max_hz = std::abs(jet.dz);
                    con_worst = {z.real(), z.imag()};
                }
            }
        }
    }

    double delta0 = (prox_dev + cfg.margin_floor <= cfg.delta0_cap) ? cfg.delta0_cap : 0.0;
    bc.delta0 = delta0;
    root.params["delta0"] = delta0;

    {
        Certificate c = Certificate::make("proximity");
        c.worst_margin = delta0 - prox_dev;
        c.worst_point = prox_worst;
        c.samples = nsamp;
        c.params["max_deviation"] = prox_dev;
        c.pass = delta0 > 0 && c.worst_margin >= cfg.margin_floor;
        root.add_sub(c);
    }
    {
        Certificate c = Certificate::make("horizontal_contraction");
        c.worst_margin = 1.0 - max_hz;
        c.worst_point = con_worst;
        c.samples = nsamp;
        c.pass = c.worst_margin >= cfg.margin_floor;
        root.add_sub(c);
    }

    // closure(Z) in g(Z) for Z the union of unit blocks, by preimage solving
    {
        Certificate c = Certificate::make("image_covering");
        MarginTracker tracker;
        std::array<double, 3> vdiam{nb.region(0).diameter(), nb.region(1).diameter(),
                                    nb.region(2).diameter()};
        for (int j = 0; j < 3; ++j) {
            auto ws = detail::region_samples(nb.region(j), nb.base_points[std::size_t(j)], 24);
            for (cplx w0 : ws) {
                for (cplx z0 : zs1) {
                    int j0 = 0;
                    double best = -std::numeric_limits<double>::infinity();
                    for (int t = 0; t < 3; ++t) {
                        double m = std::abs(rho) - std::abs(z0 - cc.eps0 * cc.c[std::size_t(t)]);
                        if (m > best) { best = m; j0 = t; }
                    }
                    try {
                        cplx w1 = nb.branch(j0, j).solve(w0);
                        cplx z1 = (z0 - cc.eps0 * cc.c[std::size_t(j0)]) / rho;
                        bool conv = false;
                        for (int it = 0; it < 50; ++it) {
                            HJet jet = g.h_jet(z1, w1);
                            cplx r = jet.value - z0;
                            if (std::abs(r) < 1e-10) { conv = true; break; }
                            if (std::abs(jet.dz) < 1e-300) break;
                            z1 -= r / jet.dz;
                        }
                        double m = conv ? std::min(1.0 - std::abs(z1),
                                                   nb.region(j0).margin(w1) /
                                                       vdiam[std::size_t(j0)])
                                        : -1.0;
                        tracker.observe(m, {z0.real(), z0.imag(), w0.real(), w0.imag()});
                    } catch (const Error&) {
                        tracker.observe(-1.0, {z0.real(), z0.imag(), w0.real(), w0.imag()});
                    }
                }
            }
        }
        tracker.commit(c);
        c.pass = tracker.worst >= cfg.margin_floor;
        root.add_sub(c);
    }

    root.finalize(0.0);
    {
        double m = std::numeric_limits<double>::infinity();
        for (const auto& sub : root.sub_certificates)
            if (sub.check_name != "rho_modulus") m = std::min(m, sub.worst_margin);
        root.worst_margin = m;
    }
    bc.cert = root;
    bc.pass = root.pass;
    return bc;
}

// ---------------------------------------------------------------------------
// forward images of a vertical line: detect a cone-tangent sub-graph over
// some V_j with values in H_j, then attach an intersection witness
// ---------------------------------------------------------------------------

struct CurveCheckResult {
    Certificate cert;
    std::optional<IntersectionWitness> witness;
};

inline CurveCheckResult postcritical_curve_check(const SkewMap& g, cplx z1,
                                                 const VerticalNeighborhoods& nb,
                                                 const std::vector<ProductBlock>& blocks,
                                                 int n_steps, double delta0 = 0.1,
                                                 double param_radius = 2.0,
                                                 int witness_steps = 12) {
    CurveCheckResult out;
    Certificate cert = Certificate::make("postcritical_curve_check");
    cert.params["z1"] = cplx_to_json(z1);
    cert.params["delta0"] = delta0;

    // parameter cloud on the initial vertical line. Only parameters with
    // near-unit modulus survive deep iteration of the vertical polynomial,
    // so the unit circle carries the bulk of the samples; golden-ratio
    // spacing keeps the power-map images from aliasing onto a few points.
    std::vector<cplx> params;
    {
        const double golden = 0.6180339887498949;
        double frac = 0.0;
        for (int a = 0; a < 4096; ++a) {
            frac += golden;
            frac -= std::floor(frac);
            double th = 2.0 * kPi * frac;
            params.push_back(cplx(std::cos(th), std::sin(th)));
        }
    }
    for (int r = 1; r <= 6; ++r)
        for (int a = 0; a < 128; ++a) {
            double rr = param_radius * r / 6.0;
            double th = 2.0 * kPi * a / 128.0 + 0.05 * r;
            params.push_back(rr * cplx(std::cos(th), std::sin(th)));
        }
    std::vector<cplx> zs(params.size(), z1), wsv = params;
    std::vector<bool> alive(params.size(), true);

    int L = g.vertical_power;
    double escape = 10.0 * std::max(2.0, g.q.root_radius_bound());

    for (int n = 1; n <= n_steps; ++n) {
        for (std::size_t k = 0; k < params.size(); ++k) {
            if (!alive[k]) continue;
            auto [hz, qv] = g(zs[k], wsv[k]);
            zs[k] = hz;
            wsv[k] = qv;
            if (!std::isfinite(std::abs(hz)) || !std::isfinite(std::abs(qv)) ||
                std::abs(qv) > escape || std::abs(hz) > 1e12)
                alive[k] = false;
        }
        for (int j = 0; j < 3; ++j) {
            cplx rj = nb.base_points[std::size_t(j)];
            double best = std::numeric_limits<double>::infinity();
            std::size_t best_k = 0;
            for (std::size_t k = 0; k < params.size(); ++k) {
                if (!alive[k]) continue;
                double d = std::abs(wsv[k] - rj);
                if (d < best) { best = d; best_k = k; }
            }
            if (best > 0.45 * std::max(nb.region(j).diameter(), 1e-12)) continue;

            // reconstruct the sub-graph over V_j by Newton on the parameter
            int total = n * L;
            auto solve_param = [&](cplx target, cplx seed) -> detail::NewtonResult {
                return detail::newton_iterate_eq(g.q, total, target, seed, 1e-12);
            };
            std::vector<cplx> nodes_w = nb.region(j).points();
            std::vector<cplx> node_params(nodes_w.size());
            bool ok = true;
            cplx seed = params[best_k];
            {
                auto r0 = solve_param(rj, seed);
                if (!r0.ok) continue;
                seed = r0.x;
            }
            for (std::size_t k = 0; k < nodes_w.size() && ok; ++k) {
                auto rr = solve_param(nodes_w[k], k == 0 ? seed : node_params[k - 1]);
                if (!rr.ok) ok = false;
                else node_params[k] = rr.x;
            }
            if (!ok) continue;

            auto z_of_param = [&, nloc = n](cplx p) {
                cplx z = z1, w = p;
                for (int s = 0; s < nloc; ++s) {
                    auto [hz, qv] = g(z, w);
                    z = hz;
                    w = qv;
                }
                return z;
            };
            std::vector<cplx> nodes_sigma(nodes_w.size());
            for (std::size_t k = 0; k < nodes_w.size(); ++k)
                nodes_sigma[k] = z_of_param(node_params[k]);
            double slope = graph_slope(nodes_w, nodes_sigma);
            double hmargin = std::numeric_limits<double>::infinity();
            for (cplx v : nodes_sigma)
                hmargin = std::min(hmargin, blocks[std::size_t(j)].horizontal.margin(v));

            cert.params["step"] = n;
            cert.params["block"] = j;
            cert.params["slope"] = slope;
            cert.worst_margin = std::min(hmargin, delta0 - slope);
            cert.samples = static_cast<long long>(nodes_w.size());
            if (slope < delta0 && hmargin >= 0) {
                VerticalGraph sub;
                sub.domain_index = j;
                sub.domain = nb.region(j);
                sub.nodes_w = nodes_w;
                sub.nodes_sigma = nodes_sigma;
                sub.slope_bound = slope;
                cplx p0 = node_params[0];
                Polynomial qq = g.q;
                sub.eval = [qq, total, p0, z_of_param](cplx w) {
                    auto rr = detail::newton_iterate_eq(qq, total, w, p0, 1e-12);
                    return z_of_param(rr.x);
                };
                try {
                    out.witness = blender_intersect(g, nb, blocks, sub, witness_steps);
                    cert.pass = true;
                    out.cert = cert;
                    return out;
                } catch (const NoAdmissibleBlock&) {
                    // keep iterating; a later image may land admissibly
                }
            }
        }
    }
    cert.pass = false;
    if (cert.samples == 0) cert.worst_margin = -1.0;
    out.cert = cert;
    return out;
}

}  // namespace blenderlab
