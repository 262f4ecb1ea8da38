#pragma once

// Concrete certified systems: projective-plane evaluation, the pencil base
// map check, the fat attractor with its trapping cone, the double blender
// with a heteroclinic witness, and Hénon perturbations with nested trapping
// regions. Also the raster renderer for invariant sets.

#include <fstream>

#include "blenderlab/renorm.hpp"

namespace blenderlab {

// ---------------------------------------------------------------------------
// projective plane
// ---------------------------------------------------------------------------

struct ProjectivePoint {
    std::array<cplx, 3> h{cplx(0.0), cplx(0.0), cplx(1.0)};  // [z : w : t]

    static ProjectivePoint affine(cplx z, cplx w) { return {{z, w, cplx(1.0)}}; }

    void normalize() {
        double m0 = std::abs(h[0]), m1 = std::abs(h[1]), m2 = std::abs(h[2]);
        std::size_t k = (m0 >= m1 && m0 >= m2) ? 0 : (m1 >= m2 ? 1 : 2);
        cplx pivot = h[k];
        if (pivot == cplx(0.0) || !std::isfinite(std::abs(pivot)))
            throw Error("projective point has no usable pivot coordinate");
        for (auto& c : h) c /= pivot;
    }
    bool is_affine(double tol = 1e-12) const { return std::abs(h[2]) > tol; }
    cplx z() const { return h[0] / h[2]; }
    cplx w() const { return h[1] / h[2]; }
};

inline double chordal_distance(const ProjectivePoint& a, const ProjectivePoint& b) {
    // Fubini-Study flavored: norm of the pairwise cross products
    double num = 0;
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j)
            num += std::norm(a.h[std::size_t(i)] * b.h[std::size_t(j)] -
                             a.h[std::size_t(j)] * b.h[std::size_t(i)]);
    double na = 0, nb = 0;
    for (int i = 0; i < 3; ++i) {
        na += std::norm(a.h[std::size_t(i)]);
        nb += std::norm(b.h[std::size_t(i)]);
    }
    return std::sqrt(num / (na * nb));
}

struct HomTerm {
    int a = 0, b = 0, c = 0;  // z^a w^b t^c
    cplx coef{0.0};
};

inline cplx cpow(cplx base, int e) {
    cplx acc(1.0);
    while (e > 0) {
        if (e & 1) acc *= base;
        base *= base;
        e >>= 1;
    }
    return acc;
}

struct HomComponent {
    int degree = 0;
    std::vector<HomTerm> terms;

    cplx eval(cplx z, cplx w, cplx t) const {
        cplx acc(0.0);
        for (const auto& tm : terms)
            acc += tm.coef * cpow(z, tm.a) * cpow(w, tm.b) * cpow(t, tm.c);
        return acc;
    }
    // value and z,w partials at t = 1
    HJet affine_jet(cplx z, cplx w) const {
        HJet out;
        for (const auto& tm : terms) {
            cplx za = cpow(z, tm.a), wb = cpow(w, tm.b);
            out.value += tm.coef * za * wb;
            if (tm.a > 0) out.dz += tm.coef * double(tm.a) * cpow(z, tm.a - 1) * wb;
            if (tm.b > 0) out.dw += tm.coef * double(tm.b) * za * cpow(w, tm.b - 1);
        }
        return out;
    }
    // restriction to the line at infinity as a polynomial in z (w = 1)
    Polynomial at_infinity() const {
        std::vector<cplx> coeffs(std::size_t(degree) + 1, cplx(0.0));
        for (const auto& tm : terms)
            if (tm.c == 0) coeffs[std::size_t(tm.a)] += tm.coef;
        return Polynomial(std::move(coeffs));
    }
    bool is_t_power() const {
        for (const auto& tm : terms)
            if (tm.coef != cplx(0.0) && (tm.a != 0 || tm.b != 0)) return false;
        return true;
    }
};

inline HomComponent homogenize(const BivariatePolynomial& p, int degree) {
    HomComponent out;
    out.degree = degree;
    const auto& tab = p.table();
    for (int a = 0; a <= p.deg_z(); ++a)
        for (int b = 0; b <= p.deg_w(); ++b) {
            cplx coef = tab[std::size_t(a)][std::size_t(b)];
            if (coef == cplx(0.0)) continue;
            if (a + b > degree) throw Error("homogenize: degree too small");
            out.terms.push_back({a, b, degree - a - b, coef});
        }
    return out;
}

struct HomFactor {
    int degree = 1;
    std::array<HomComponent, 3> comp;
    std::string name;

    ProjectivePoint eval(ProjectivePoint x) const {
        x.normalize();  // keep high powers of the coordinates in range
        ProjectivePoint y;
        for (int i = 0; i < 3; ++i)
            y.h[std::size_t(i)] = comp[std::size_t(i)].eval(x.h[0], x.h[1], x.h[2]);
        y.normalize();
        return y;
    }
    // affine chart map (z,w) -> (P1/P3, P2/P3)(z,w,1) with 2x2 Jacobian
    std::pair<std::array<cplx, 2>, std::array<std::array<cplx, 2>, 2>> affine_jet(
        cplx z, cplx w) const {
        HJet p1 = comp[0].affine_jet(z, w);
        HJet p2 = comp[1].affine_jet(z, w);
        HJet p3 = comp[2].affine_jet(z, w);
        if (std::abs(p3.value) < 1e-300) throw Error("affine chart evaluation hit the line at infinity");
        cplx iz = 1.0 / p3.value;
        std::array<cplx, 2> v{p1.value * iz, p2.value * iz};
        std::array<std::array<cplx, 2>, 2> J;
        J[0][0] = (p1.dz - v[0] * p3.dz) * iz;
        J[0][1] = (p1.dw - v[0] * p3.dw) * iz;
        J[1][0] = (p2.dz - v[1] * p3.dz) * iz;
        J[1][1] = (p2.dw - v[1] * p3.dw) * iz;
        return {v, J};
    }
};

inline HomFactor factor_from_affine(const BivariatePolynomial& a1, const BivariatePolynomial& a2,
                                    std::string name = "") {
    int deg = 0;
    for (const BivariatePolynomial* p : {&a1, &a2})
        for (int az = 0; az <= p->deg_z(); ++az)
            for (int bw = 0; bw <= p->deg_w(); ++bw)
                if (p->table()[std::size_t(az)][std::size_t(bw)] != cplx(0.0))
                    deg = std::max(deg, az + bw);
    deg = std::max(deg, 1);
    HomFactor f;
    f.degree = deg;
    f.comp[0] = homogenize(a1, deg);
    f.comp[1] = homogenize(a2, deg);
    f.comp[2] = HomComponent{deg, {HomTerm{0, 0, deg, cplx(1.0)}}};
    f.name = std::move(name);
    return f;
}

// the automorphism [z : i w + t : i t + w]
inline HomFactor psi_factor() {
    HomFactor f;
    f.degree = 1;
    f.name = "psi";
    f.comp[0] = HomComponent{1, {HomTerm{1, 0, 0, cplx(1.0)}}};
    f.comp[1] = HomComponent{1, {HomTerm{0, 1, 0, cplx(0.0, 1.0)}, HomTerm{0, 0, 1, cplx(1.0)}}};
    f.comp[2] = HomComponent{1, {HomTerm{0, 0, 1, cplx(0.0, 1.0)}, HomTerm{0, 1, 0, cplx(1.0)}}};
    return f;
}

struct ProjectiveMap {
    std::vector<HomFactor> factors;  // applied in order

    ProjectivePoint eval(ProjectivePoint x) const {
        for (const auto& f : factors) x = f.eval(x);
        return x;
    }
    std::array<cplx, 2> affine_eval(cplx z, cplx w) const {
        for (const auto& f : factors) {
            auto [v, J] = f.affine_jet(z, w);
            (void)J;
            z = v[0];
            w = v[1];
        }
        return {z, w};
    }
    std::pair<std::array<cplx, 2>, std::array<std::array<cplx, 2>, 2>> affine_jet(cplx z,
                                                                                  cplx w) const {
        std::array<std::array<cplx, 2>, 2> J{{{cplx(1.0), cplx(0.0)}, {cplx(0.0), cplx(1.0)}}};
        for (const auto& f : factors) {
            auto [v, Jf] = f.affine_jet(z, w);
            std::array<std::array<cplx, 2>, 2> Jn;
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j)
                    Jn[std::size_t(i)][std::size_t(j)] =
                        Jf[std::size_t(i)][0] * J[0][std::size_t(j)] +
                        Jf[std::size_t(i)][1] * J[1][std::size_t(j)];
            J = Jn;
            z = v[0];
            w = v[1];
        }
        return {{z, w}, J};
    }
    double degree() const {
        double d = 1.0;
        for (const auto& f : factors) d *= double(f.degree);
        return d;
    }
    std::vector<int> factor_degrees() const {
        std::vector<int> out;
        for (const auto& f : factors) out.push_back(f.degree);
        return out;
    }
};

// common zeros of one factor's components; with a t^deg third component the
// only candidates sit on the line t = 0
inline std::vector<ProjectivePoint> factor_indeterminacy(const HomFactor& f, double tol = 1e-9) {
    std::vector<ProjectivePoint> out;
    if (f.degree == 1) {
        // linear: indeterminate iff the coefficient matrix is singular; the
        // shipped linear factors are automorphisms, checked by sampling
        return out;
    }
    Polynomial p1 = f.comp[0].at_infinity();
    Polynomial p2 = f.comp[1].at_infinity();
    auto check_candidate = [&](cplx zc, bool at_inf_point) {
        ProjectivePoint pt{{zc, at_inf_point ? cplx(0.0) : cplx(1.0), cplx(0.0)}};
        if (at_inf_point) pt.h = {cplx(1.0), cplx(0.0), cplx(0.0)};
        double v1 = std::abs(f.comp[0].eval(pt.h[0], pt.h[1], pt.h[2]));
        double v2 = std::abs(f.comp[1].eval(pt.h[0], pt.h[1], pt.h[2]));
        double v3 = std::abs(f.comp[2].eval(pt.h[0], pt.h[1], pt.h[2]));
        if (v1 < tol && v2 < tol && v3 < tol) out.push_back(pt);
    };
    if (p1.is_zero()) {
        if (p2.is_zero()) {
            // whole line at infinity is indeterminate for these two; flag via
            // the representative points
            check_candidate(cplx(0.0), false);
            check_candidate(cplx(0.0), true);
            return out;
        }
        if (p2.degree() >= 1)
            for (cplx r : roots(p2)) check_candidate(r, false);
        check_candidate(cplx(0.0), true);  // [1:0:0]
        return out;
    }
    if (p1.degree() >= 1)
        for (cplx r : roots(p1)) check_candidate(r, false);
    // the point [1:0:0] escapes the w = 1 chart
    check_candidate(cplx(0.0), true);
    return out;
}

inline std::vector<ProjectivePoint> indeterminacy_points(const ProjectiveMap& m) {
    std::vector<ProjectivePoint> out;
    for (const auto& f : m.factors) {
        auto pts = factor_indeterminacy(f);
        out.insert(out.end(), pts.begin(), pts.end());
    }
    return out;
}

// ---------------------------------------------------------------------------
// trapping regions on the projective plane
// ---------------------------------------------------------------------------

struct TrappingRegion {
    enum class Kind { cone, complement_w_minus, product };
    Kind kind = Kind::cone;
    double rho = 0.5;  // cone: |z| < rho max(|w|,|t|)
    double R = 1.0;    // complement: |z| < 2 max(R|t|, |w|)
    Region zone, wzone;

    static TrappingRegion cone_region(double rho) {
        TrappingRegion t;
        t.kind = Kind::cone;
        t.rho = rho;
        return t;
    }
    static TrappingRegion complement_of_w_minus(double R) {
        TrappingRegion t;
        t.kind = Kind::complement_w_minus;
        t.R = R;
        return t;
    }
    static TrappingRegion product(Region z, Region w) {
        TrappingRegion t;
        t.kind = Kind::product;
        t.zone = std::move(z);
        t.wzone = std::move(w);
        return t;
    }

    double margin(ProjectivePoint p) const {
        p.normalize();
        switch (kind) {
            case Kind::cone:
                return rho * std::max(std::abs(p.h[1]), std::abs(p.h[2])) - std::abs(p.h[0]);
            case Kind::complement_w_minus:
                return 2.0 * std::max(R * std::abs(p.h[2]), std::abs(p.h[1])) - std::abs(p.h[0]);
            case Kind::product: {
                if (!p.is_affine()) return -1.0;
                return std::min(zone.margin(p.z()), wzone.margin(p.w()));
            }
        }
        return 0.0;
    }

    std::vector<ProjectivePoint> boundary_samples(int n) const {
        std::vector<ProjectivePoint> out;
        auto circle = [](double r, double th) { return r * cplx(std::cos(th), std::sin(th)); };
        switch (kind) {
            case Kind::cone:
                for (int a = 0; a < n; ++a)
                    for (int b = 0; b < n; ++b)
                        for (int s = 0; s <= 4; ++s)
                            for (int cch = 0; cch < 2; ++cch) {
                                double tz = 2.0 * kPi * a / n, tw = 2.0 * kPi * b / n;
                                double mag = s / 4.0;
                                ProjectivePoint p;
                                if (cch == 0)
                                    p.h = {circle(rho, tz), circle(1.0, tw),
                                           circle(mag, 0.7 * tw + 0.3)};
                                else
                                    p.h = {circle(rho, tz), circle(mag, 0.7 * tw + 0.3),
                                           circle(1.0, tw)};
                                out.push_back(p);
                            }
                break;
            case Kind::complement_w_minus:
                for (int a = 0; a < n; ++a)
                    for (int b = 0; b < n; ++b)
                        for (int s = 0; s <= 4; ++s) {
                            double tz = 2.0 * kPi * a / n, tw = 2.0 * kPi * b / n;
                            // chart |w| <= R|t| = R: z on the cylinder |z| = 2R
                            ProjectivePoint p1;
                            p1.h = {circle(2.0 * R, tz), circle(R * s / 4.0, tw), cplx(1.0)};
                            out.push_back(p1);
                            // chart |w| >= R|t|, normalized |w| = 1
                            ProjectivePoint p2;
                            p2.h = {circle(2.0, tz), circle(1.0, tw),
                                    circle(s / (4.0 * R), 0.7 * tw + 0.3)};
                            out.push_back(p2);
                        }
                break;
            case Kind::product: {
                auto zb = zone.boundary(n);
                auto wb = wzone.boundary(n);
                auto zin = zone.boundary(std::max(4, n / 4));
                auto win = wzone.boundary(std::max(4, n / 4));
                for (cplx z : zb)
                    for (cplx w : win) out.push_back(ProjectivePoint::affine(z, 0.75 * w));
                for (cplx w : wb)
                    for (cplx z : zin) out.push_back(ProjectivePoint::affine(0.75 * z, w));
                break;
            }
        }
        return out;
    }
};

// ---------------------------------------------------------------------------
// base pencil map m = q^a o psi o q^b on the sphere, q = w^4,
// psi(w) = (i w + 1)/(w + i): every critical orbit must land on the fixed
// repelling point 1
// ---------------------------------------------------------------------------

namespace detail {

struct P1Point {
    cplx u{0.0}, v{1.0};  // [u : v]
    void normalize() {
        if (std::abs(u) >= std::abs(v)) {
            if (u == cplx(0.0)) throw Error("zero point on the sphere");
            v /= u;
            u = 1.0;
        } else {
            u /= v;
            v = 1.0;
        }
    }
};

inline P1Point p1_pow4(P1Point p) {
    P1Point o;
    o.u = p.u * p.u * p.u * p.u;
    o.v = p.v * p.v * p.v * p.v;
    o.normalize();
    return o;
}
inline P1Point p1_psi(P1Point p) {
    P1Point o;
    o.u = cplx(0.0, 1.0) * p.u + p.v;
    o.v = p.u + cplx(0.0, 1.0) * p.v;
    o.normalize();
    return o;
}
inline double p1_dist(const P1Point& a, const P1Point& b) {
    double num = std::abs(a.u * b.v - a.v * b.u);
    return num / (std::sqrt(std::norm(a.u) + std::norm(a.v)) *
                  std::sqrt(std::norm(b.u) + std::norm(b.v)));
}

}  // namespace detail

inline Certificate base_map_critical_check(int a, int b, int enumeration_cap = 4096) {
    if (a < 1 || b < 1) throw Error("base_map_critical_check: a, b >= 1 required");
    Certificate cert = Certificate::make("base_map_critical_check");
    cert.params["a"] = a;
    cert.params["b"] = b;

    using detail::P1Point;
    auto step = [a, b](P1Point p) {
        for (int k = 0; k < b; ++k) p = detail::p1_pow4(p);
        p = detail::p1_psi(p);
        for (int k = 0; k < a; ++k) p = detail::p1_pow4(p);
        return p;
    };
    P1Point one{cplx(1.0), cplx(1.0)};

    // critical points: 0, infinity, and the q^b preimages of +-i (where the
    // outer iterate's critical points 0, infinity are hit). All preimages of
    // +-i share one forward orbit after the first step, so past the
    // enumeration cap they are tracked as two classes.
    struct Orbit {
        std::string label;
        P1Point start;
        bool start_is_midstage = false;  // start value taken after q^b
        long long count = 1;
    };
    std::vector<Orbit> orbits;
    orbits.push_back({"0", P1Point{cplx(0.0), cplx(1.0)}, false, 1});
    orbits.push_back({"inf", P1Point{cplx(1.0), cplx(0.0)}, false, 1});
    double pow4b = std::pow(4.0, double(b));
    bool enumerated = pow4b <= double(enumeration_cap);
    if (enumerated) {
        long long n = (long long)(pow4b);
        for (int sgn = 0; sgn < 2; ++sgn) {
            double base_arg = (sgn == 0 ? 0.5 : -0.5) * kPi;
            for (long long k = 0; k < n; ++k) {
                double th = (base_arg + 2.0 * kPi * double(k)) / pow4b;
                orbits.push_back({std::string(sgn == 0 ? "preimage_of_i_" : "preimage_of_-i_") +
                                      std::to_string(k),
                                  P1Point{std::polar(1.0, th), cplx(1.0)}, false, 1});
            }
        }
    } else {
        orbits.push_back(
            {"class_preimages_of_i", P1Point{cplx(0.0, 1.0), cplx(1.0)}, true, (long long)pow4b});
        orbits.push_back({"class_preimages_of_-i", P1Point{cplx(0.0, -1.0), cplx(1.0)}, true,
                          (long long)pow4b});
    }

    MarginTracker tracker;
    json landing = json::array();
    bool all_land = true;
    int max_steps = a + b + 4;
    for (auto& orb : orbits) {
        P1Point p = orb.start;
        if (orb.start_is_midstage) {
            // value sits after q^b; finish the first map application
            p = detail::p1_psi(p);
            for (int k = 0; k < a; ++k) p = detail::p1_pow4(p);
        }
        int landed_at = -1;
        double res = detail::p1_dist(p, one);
        if (orb.start_is_midstage && res < 1e-9) landed_at = 1;
        for (int n = orb.start_is_midstage ? 1 : 0; n < max_steps && landed_at < 0; ++n) {
            if (!orb.start_is_midstage || n > 0) p = step(p);
            res = detail::p1_dist(p, one);
            if (res < 1e-9) landed_at = n + 1;
        }
        all_land = all_land && landed_at > 0;
        tracker.observe(landed_at > 0 ? 1e-9 - res : -1.0, {p.u.real(), p.u.imag()});
        landing.push_back(json{{"critical_point", orb.label},
                               {"count", orb.count},
                               {"landing_time", landed_at},
                               {"residual", res}});
    }
    tracker.commit(cert);
    cert.params["landings"] = landing;
    cert.params["enumerated"] = enumerated;
    cert.pass = all_land;
    cert.worst_margin = all_land ? tracker.worst : -1.0;
    return cert;
}

// ---------------------------------------------------------------------------
// fat attractor: f = F_eta o Psi o G_{alpha,eta}^N with
// G(z,w) = (lambda z + alpha w + eta q^l(z), q^l(w)),
// F(z,w) = (lambda~ z + eta q^l~(z), q^l~(w)),  q = w^4
// ---------------------------------------------------------------------------

struct AttractorParams {
    double R = 6.0;
    int l = 0;             // vertical power per G factor; 0 = derive from the towers
    int l_tilde = 1;
    double lambda = 0.9;   // 1 - alpha0 from the covering-only pair
    double eps0 = 0.5;     // covering offset scale
    double lambda_tilde = 14.0;
    cplx alpha{1e-3, 0.0};
    cplx eta{1e-3, 0.0};
    int N = 40;
    double rho = 0.5;      // trapping cone aperture
    int tower_extra = 2;   // pullback depth past the annulus-covering power

    json to_json() const {
        return json{{"R", R},       {"l", l},
                    {"l_tilde", l_tilde},
                    {"lambda", lambda},
                    {"eps0", eps0}, {"lambda_tilde", lambda_tilde},
                    {"alpha", cplx_to_json(alpha)},
                    {"eta", cplx_to_json(eta)},
                    {"N", N},       {"rho", rho},
                    {"tower_extra", tower_extra}};
    }
};

struct Attractor {
    AttractorParams params;
    ProjectiveMap f;
    Polynomial q;                       // w^4
    std::array<cplx, 3> fixed_points;   // cube roots of unity
    VerticalNeighborhoods nb;           // towers around the fixed points
    int annulus_power = 0;              // q^k(base disc) covers the annulus
    Region annulus;
    TrappingRegion trap;
    double z_radius = 0.0;              // |alpha| / eps0
};

namespace detail {

inline std::array<PeriodicOrbit, 3> unit_cube_root_orbits(const Polynomial& q) {
    std::array<PeriodicOrbit, 3> orbits;
    for (int j = 0; j < 3; ++j) {
        PeriodicOrbit o;
        o.points = {std::polar(1.0, 2.0 * kPi * j / 3.0)};
        if (j == 0) o.points = {cplx(1.0)};
        o.period = 1;
        o.multiplier = q.eval_jet(o.points[0]).second;
        o.classification = classify_multiplier(o.multiplier);
        orbits[std::size_t(j)] = std::move(o);
    }
    return orbits;
}

// smallest k with lifts of annulus probes through q^{-k} landing inside the
// base discs
inline int annulus_cover_power(const VerticalNeighborhoods& nb, const Region& annulus, int cap) {
    auto probes = annulus.boundary(24);
    probes.push_back(cplx(1.0 / std::sqrt(annulus.radius() * annulus.inner_radius())));
    for (int k = 1; k <= cap; ++k) {
        bool ok = true;
        for (int j = 0; j < 3 && ok; ++j) {
            cplx rj = nb.base_points[std::size_t(j)];
            BranchSolver bs{nb.q, k * nb.m1, rj, rj, nb.crit_values, nb.newton_tol, nb.crit_avoid};
            for (cplx t : probes) {
                try {
                    auto path = plan_path(rj, t, nb.crit_values, 0.05);
                    cplx cur_t = rj, cur_x = rj;
                    for (cplx p : path) {
                        cur_x = bs.solve_from(p, cur_t, cur_x);
                        cur_t = p;
                    }
                    if (std::abs(cur_x - rj) > 0.92 * nb.base_radius[std::size_t(j)]) {
                        ok = false;
                        break;
                    }
                } catch (const Error&) {
                    ok = false;
                    break;
                }
            }
        }
        if (ok) return k;
    }
    throw PostcriticalObstruction("annulus covering power not found");
}

inline cplx mobius_psi_inverse(cplx x) { return (cplx(1.0) - cplx(0.0, 1.0) * x) / (x - cplx(0.0, 1.0)); }

}  // namespace detail

inline Attractor attractor_build(const AttractorParams& params = {}) {
    if (params.eta == cplx(0.0))
        throw IndeterminacyHit("eta = 0: the shear factor does not extend to the plane");
    if (params.alpha == cplx(0.0)) throw Error("alpha must be nonzero");

    Attractor att;
    att.params = params;
    att.q = Polynomial::monomial(4);
    att.annulus = Region::annulus(cplx(0.0), 1.0 / params.R, params.R);
    att.trap = TrappingRegion::cone_region(params.rho);
    att.z_radius = std::abs(params.alpha) / params.eps0;

    auto orbits = detail::unit_cube_root_orbits(att.q);
    for (int j = 0; j < 3; ++j) {
        cplx pre = detail::mobius_psi_inverse(orbits[std::size_t(j)].points[0]);
        if (att.annulus.margin(pre) <= 0)
            throw Error("psi preimage of a fixed point escapes the annulus");
        att.fixed_points[std::size_t(j)] = orbits[std::size_t(j)].points[0];
    }

    NbOptions nopts;
    int lmin = minimal_level(att.q, orbits, nopts);
    att.nb = build_vertical_neighborhoods(att.q, orbits, lmin + params.tower_extra, nopts);
    att.annulus_power = detail::annulus_cover_power(att.nb, att.annulus, 6);

    int l = att.annulus_power + (att.nb.level - att.nb.base_level);
    if (params.l > 0 && l != params.l)
        throw Error("attractor_build: params.l must equal annulus power + tower depth (" +
                    std::to_string(l) + ")");
    att.params.l = l;

    // the towers must stay inside the annulus together with their psi preimages
    for (int j = 0; j < 3; ++j) {
        for (cplx w : att.nb.region(j).boundary(32)) {
            if (att.annulus.margin(w) <= 0) throw Error("vertical tower escapes the annulus");
            if (att.annulus.margin(detail::mobius_psi_inverse(w)) <= 0)
                throw Error("psi preimage of a vertical tower escapes the annulus");
        }
    }

    int L = 1;
    for (int k = 0; k < att.params.l; ++k) L *= 4;
    int Lt = 1;
    for (int k = 0; k < params.l_tilde; ++k) Lt *= 4;

    BivariatePolynomial gz = BivariatePolynomial::monomial(1, 0, params.lambda) +
                             BivariatePolynomial::monomial(0, 1, params.alpha) +
                             BivariatePolynomial::monomial(L, 0, params.eta);
    BivariatePolynomial gw = BivariatePolynomial::monomial(0, L);
    HomFactor G = factor_from_affine(gz, gw, "shear");

    BivariatePolynomial fz = BivariatePolynomial::monomial(1, 0, params.lambda_tilde) +
                             BivariatePolynomial::monomial(Lt, 0, params.eta);
    BivariatePolynomial fw = BivariatePolynomial::monomial(0, Lt);
    HomFactor F = factor_from_affine(fz, fw, "return");

    att.f.factors.clear();
    for (int k = 0; k < params.N; ++k) att.f.factors.push_back(G);
    att.f.factors.push_back(psi_factor());
    att.f.factors.push_back(F);

    for (const auto& fac : att.f.factors) {
        auto ind = factor_indeterminacy(fac);
        if (!ind.empty()) throw IndeterminacyHit("factor has an indeterminacy point");
    }
    return att;
}

// four sampled inclusions: the shear covering of the annulus block, the
// return covering including the invariant line, the trapping cone, and the
// self-covering of the small product block; plus the pencil base-map check
inline Certificate attractor_certify(const Attractor& att, double margin_floor = 1e-3) {
    Certificate root = Certificate::make("attractor_certificate");
    root.params["params"] = att.params.to_json();
    const auto& P = att.params;
    double zr = att.z_radius;

    // clause 1: closure(zr D x annulus) in G(zr D x union U_j)
    {
        Certificate c = Certificate::make("shear_block_covering");
        MarginTracker tracker;
        auto zs = detail::sample_disc(zr, 3, 12);
        std::vector<cplx> wts;
        for (int ring = 0; ring <= 6; ++ring) {
            double r = std::exp(std::log(1.0 / P.R) +
                                (std::log(P.R) - std::log(1.0 / P.R)) * ring / 6.0);
            for (int aIdx = 0; aIdx < 16; ++aIdx)
                wts.push_back(std::polar(r, 2.0 * kPi * aIdx / 16.0 + 0.07 * ring));
        }
        for (cplx z0 : zs) {
            for (cplx w0 : wts) {
                int j0 = 0;
                double best = -std::numeric_limits<double>::infinity();
                for (int j = 0; j < 3; ++j) {
                    double m = P.lambda -
                               std::abs(z0 * P.eps0 / P.alpha -
                                        P.eps0 * att.fixed_points[std::size_t(j)]);
                    if (m > best) { best = m; j0 = j; }
                }
                double m = -1.0;
                try {
                    // r_j is a fixed point, so it is its own q^l preimage
                    cplx rj = att.nb.base_points[std::size_t(j0)];
                    BranchSolver bs{att.q, P.l, rj, rj,
                                    att.nb.crit_values, att.nb.newton_tol, att.nb.crit_avoid};
                    auto path = detail::plan_path(rj, w0, att.nb.crit_values, 0.05);
                    cplx cur_t = rj, cur_x = rj;
                    for (cplx t : path) {
                        cur_x = bs.solve_from(t, cur_t, cur_x);
                        cur_t = t;
                    }
                    cplx w1 = cur_x;
                    double wmargin = att.nb.region(j0).margin(w1);
                    // Newton on z: lambda z1 + alpha w1 + eta q^l(z1) = z0
                    cplx z1 = (z0 - P.alpha * w1) / P.lambda;
                    bool conv = false;
                    for (int it = 0; it < 60; ++it) {
                        cplx qz = z1;
                        cplx dq = 1.0;
                        for (int k = 0; k < P.l; ++k) {
                            dq = dq * 4.0 * qz * qz * qz;
                            qz = qz * qz * qz * qz;
                        }
                        cplx rres = P.lambda * z1 + P.alpha * w1 + P.eta * qz - z0;
                        if (std::abs(rres) < 1e-12 * std::max(1.0, zr)) { conv = true; break; }
                        z1 -= rres / (P.lambda + P.eta * dq);
                    }
                    double zmargin = (zr - std::abs(z1)) / zr;  // relative to the block scale
                    m = conv ? std::min(wmargin / att.nb.region(j0).diameter(), zmargin) : -1.0;
                } catch (const Error&) {
                    m = -1.0;
                }
                tracker.observe(m, {z0.real(), z0.imag(), w0.real(), w0.imag()});
            }
        }
        tracker.commit(c);
        c.pass = tracker.worst >= margin_floor;
        root.add_sub(c);
    }

    // clause 2: X union closure(zr D x union U_j) in F o Psi (zr D x annulus)
    {
        Certificate c = Certificate::make("return_covering_with_line");
        MarginTracker tracker;
        int Lt = 1;
        for (int k = 0; k < P.l_tilde; ++k) Lt *= 4;
        auto solve_w = [&](cplx target_w) -> std::pair<cplx, double> {
            // pick the 4^{l~}-th root u of target_w whose psi preimage sits
            // deepest in the annulus
            double best = -std::numeric_limits<double>::infinity();
            cplx best_w{0.0};
            double mod = std::pow(std::abs(target_w), 1.0 / double(Lt));
            double base_arg = std::arg(target_w) / double(Lt);
            for (int k = 0; k < Lt; ++k) {
                cplx u = std::polar(mod, base_arg + 2.0 * kPi * k / double(Lt));
                cplx w = detail::mobius_psi_inverse(u);
                double m = att.annulus.margin(w);
                if (m > best) { best = m; best_w = w; }
            }
            return {best_w, best};
        };
        auto solve_z = [&](cplx z0, cplx w) -> std::pair<cplx, bool> {
            // F o Psi first coordinate: lambda~ Z + eta Z^{Lt} with Z = z/(w+i)
            cplx Z = z0 / P.lambda_tilde;
            bool conv = false;
            for (int it = 0; it < 60; ++it) {
                cplx val = cpow(Z, Lt);
                cplx d = cpow(Z, Lt - 1);
                cplx res = P.lambda_tilde * Z + P.eta * val - z0;
                if (std::abs(res) < 1e-13 * std::max(1.0, std::abs(z0))) { conv = true; break; }
                Z -= res / (P.lambda_tilde + P.eta * double(Lt) * d);
            }
            return {Z * (w + cplx(0.0, 1.0)), conv};
        };
        // line targets: the invariant line {z = 0} sampled over the sphere
        for (int k = 0; k < 48; ++k) {
            double th = 2.0 * kPi * k / 48.0;
            for (double mod : {0.0, 0.4, 1.0, 2.5, 8.0}) {
                cplx v = std::polar(mod, th);
                auto [w, wm] = solve_w(v);
                auto [z, conv] = solve_z(cplx(0.0), w);
                double m = (conv && std::abs(z) < 1e-9) ? std::min(wm, 1.0) : -1.0;
                tracker.observe(m, {v.real(), v.imag()});
            }
        }
        // block targets
        auto zs = detail::sample_disc(zr, 2, 8);
        for (int j = 0; j < 3; ++j) {
            auto ws = att.nb.region(j).boundary(16);
            ws.push_back(att.nb.base_points[std::size_t(j)]);
            for (cplx w0 : ws)
                for (cplx z0 : zs) {
                    auto [w, wm] = solve_w(w0);
                    auto [z, conv] = solve_z(z0, w);
                    double m = conv ? std::min(wm, (zr - std::abs(z)) / zr) : -1.0;
                    tracker.observe(m, {z0.real(), z0.imag(), w0.real(), w0.imag()});
                }
        }
        tracker.commit(c);
        c.pass = tracker.worst >= margin_floor;
        root.add_sub(c);
    }

    // clause 3: the cone is a trapping region for the composite map
    {
        Certificate c = Certificate::make("cone_trapping");
        MarginTracker tracker;
        for (const auto& x : att.trap.boundary_samples(10)) {
            ProjectivePoint y = att.f.eval(x);
            double m = att.trap.margin(y);
            tracker.observe(m, {std::abs(x.h[0]), std::abs(x.h[1]), std::abs(x.h[2])});
        }
        tracker.commit(c);
        c.pass = tracker.worst >= margin_floor;
        root.add_sub(c);
    }

    // clause 4: X union Z_alpha in f(Z_alpha), walking the factor chain
    // backwards through clauses 1 and 2
    {
        Certificate c = Certificate::make("line_and_block_in_image");
        MarginTracker tracker;
        double zblock = att.trap.margin(ProjectivePoint::affine(
            cplx(zr), att.nb.base_points[0]));
        c.params["block_inside_cone_margin"] = zblock;
        bool precondition = zblock > 0;
        c.params["block_inside_cone"] = precondition;

        int Lt = 1;
        for (int k = 0; k < P.l_tilde; ++k) Lt *= 4;
        (void)Lt;
        auto pull_fpsi = [&](cplx z0, cplx w0) -> std::array<cplx, 3> {
            // returns (z, w, ok flag in third slot real part)
            double best = -std::numeric_limits<double>::infinity();
            cplx bw{0.0};
            int LT = 1;
            for (int k = 0; k < P.l_tilde; ++k) LT *= 4;
            double mod = std::pow(std::abs(w0), 1.0 / double(LT));
            double base_arg = std::arg(w0) / double(LT);
            for (int k = 0; k < LT; ++k) {
                cplx u = std::polar(mod, base_arg + 2.0 * kPi * k / double(LT));
                cplx w = detail::mobius_psi_inverse(u);
                double m = att.annulus.margin(w);
                if (m > best) { best = m; bw = w; }
            }
            cplx Z = z0 / P.lambda_tilde;
            for (int it = 0; it < 60; ++it) {
                cplx res = P.lambda_tilde * Z + P.eta * cpow(Z, LT) - z0;
                if (std::abs(res) < 1e-13) break;
                Z -= res / (P.lambda_tilde + P.eta * double(LT) * cpow(Z, LT - 1));
            }
            return {Z * (bw + cplx(0.0, 1.0)), bw, cplx(best, 0.0)};
        };
        auto pull_g = [&](cplx z0, cplx w0) -> std::array<cplx, 3> {
            int j0 = 0;
            double best = -std::numeric_limits<double>::infinity();
            for (int j = 0; j < 3; ++j) {
                double m = P.lambda - std::abs(z0 * P.eps0 / P.alpha -
                                               P.eps0 * att.fixed_points[std::size_t(j)]);
                if (m > best) { best = m; j0 = j; }
            }
            cplx rj = att.nb.base_points[std::size_t(j0)];
            BranchSolver bs{att.q, P.l, rj, rj, att.nb.crit_values, att.nb.newton_tol,
                            att.nb.crit_avoid};
            auto path = detail::plan_path(rj, w0, att.nb.crit_values, 0.05);
            cplx cur_t = rj, cur_x = rj;
            for (cplx t : path) {
                cur_x = bs.solve_from(t, cur_t, cur_x);
                cur_t = t;
            }
            cplx w1 = cur_x;
            cplx z1 = (z0 - P.alpha * w1) / P.lambda;
            for (int it = 0; it < 60; ++it) {
                cplx qz = z1, dq = 1.0;
                for (int k = 0; k < P.l; ++k) {
                    dq = dq * 4.0 * qz * qz * qz;
                    qz = qz * qz * qz * qz;
                }
                cplx res = P.lambda * z1 + P.alpha * w1 + P.eta * qz - z0;
                if (std::abs(res) < 1e-13 * std::max(1.0, zr)) break;
                z1 -= res / (P.lambda + P.eta * dq);
            }
            double m = std::min(att.nb.region(j0).margin(w1) / att.nb.region(j0).diameter(),
                                (zr - std::abs(z1)) / zr);
            return {z1, w1, cplx(m, 0.0)};
        };

        std::vector<std::pair<cplx, cplx>> targets;
        for (int j = 0; j < 3; ++j) {
            auto ws = att.nb.region(j).boundary(8);
            ws.push_back(att.nb.base_points[std::size_t(j)]);
            for (cplx w : ws)
                for (cplx z : detail::sample_disc(zr, 2, 6)) targets.push_back({z, w});
        }
        for (int k = 0; k < 12; ++k)
            targets.push_back({cplx(0.0), std::polar(1.0, 2.0 * kPi * k / 12.0)});

        for (auto [z0, w0] : targets) {
            double m = -1.0;
            try {
                bool on_line = std::abs(z0) < 1e-12;
                auto s1 = pull_fpsi(z0, w0);
                double worst = s1[2].real();
                if (on_line) worst = std::min(worst, 1.0);
                cplx z = s1[0], w = s1[1];
                // the pulled point must sit in zr D x annulus
                worst = std::min(worst, (zr - std::abs(z)) / zr);
                for (int k = 0; k < P.N; ++k) {
                    auto s2 = pull_g(z, w);
                    worst = std::min(worst, s2[2].real());
                    z = s2[0];
                    w = s2[1];
                    if (worst < 0) break;
                }
                m = worst;
            } catch (const Error&) {
                m = -1.0;
            }
            tracker.observe(m, {z0.real(), z0.imag(), w0.real(), w0.imag()});
        }
        tracker.commit(c);
        c.pass = precondition && tracker.worst >= margin_floor;
        root.add_sub(c);
    }

    root.add_sub(base_map_critical_check(att.params.l_tilde, att.params.l * att.params.N));
    root.finalize(0.0);
    return root;
}

// ---------------------------------------------------------------------------
// double blender: F_l(z,w) = (z + (a1 z + e1 w)(w^3+1)/2 - a2 z - e2 w, w^{7l})
// with a repelling blender over the cube roots of unity and a saddle blender
// over their negatives
// ---------------------------------------------------------------------------

struct DoubleBlender {
    int level = 2;
    double alpha1 = 0, alpha2 = 0, eps1 = 0, eps2 = 0;
    double R = 3.0;
    Polynomial q;  // w^7
    SkewMap F;
    CoveringConstants tc;
    VerticalNeighborhoods nb_v;  // towers at the cube roots (repelling side)
    VerticalNeighborhoods nb_u;  // towers at their negatives (saddle side)
    BlenderCertificate cert_repelling;
    BlenderCertificate cert_saddle;
};

inline BivariatePolynomial double_blender_h(double a1, double a2, double e1, double e2) {
    // z (1 - a2 + a1/2) + (a1/2) z w^3 + (e1/2) w^4 + (e1/2 - e2) w
    BivariatePolynomial h = BivariatePolynomial::monomial(1, 0, 1.0 - a2 + 0.5 * a1) +
                            BivariatePolynomial::monomial(1, 3, 0.5 * a1) +
                            BivariatePolynomial::monomial(0, 4, 0.5 * e1) +
                            BivariatePolynomial::monomial(0, 1, 0.5 * e1 - e2);
    return h;
}

inline DoubleBlender double_blender_build(int level = -1, const CertifyConfig& cfg = {}) {
    DoubleBlender db;
    db.q = Polynomial::monomial(7);

    std::array<PeriodicOrbit, 3> r_orbits, s_orbits;
    for (int j = 0; j < 3; ++j) {
        cplx r = (j == 0) ? cplx(1.0) : std::polar(1.0, 2.0 * kPi * j / 3.0);
        PeriodicOrbit o;
        o.points = {r};
        o.period = 1;
        o.multiplier = db.q.eval_jet(r).second;
        o.classification = classify_multiplier(o.multiplier);
        r_orbits[std::size_t(j)] = o;
        PeriodicOrbit s = o;
        s.points = {-r};
        s.multiplier = db.q.eval_jet(-r).second;
        s_orbits[std::size_t(j)] = s;
    }

    db.tc = triangle_cover(r_orbits[0].points[0], r_orbits[1].points[0], r_orbits[2].points[0]);
    db.alpha2 = db.tc.alpha0;
    db.alpha1 = 2.0 * db.tc.alpha0;
    db.eps2 = db.tc.eps0 / 4.0;
    db.eps1 = db.tc.eps0 + db.eps2;
    if (!(0.1 > db.alpha1 && db.alpha1 > db.alpha2 && db.alpha2 > 0))
        throw SearchFailed("double blender: parameter constraint 1/10 > a1 > a2 > 0 failed");

    NbOptions nopts_v, nopts_u;
    // the saddle towers must also push onto the repelling neighborhoods
    for (const auto& o : r_orbits) nopts_u.extra_cover_targets.push_back(o.points[0]);

    int lo = (level > 0) ? level : 2;
    int hi = (level > 0) ? level : 8;
    std::string last_failure = "no level attempted";
    for (int l = lo; l <= hi; ++l) {
        try {
            db.level = l;
            db.nb_v = build_vertical_neighborhoods(db.q, r_orbits, l, nopts_v);
            db.nb_u = build_vertical_neighborhoods(db.q, s_orbits, l, nopts_u);
            db.F = make_poly_skew(double_blender_h(db.alpha1, db.alpha2, db.eps1, db.eps2), db.q,
                                  l, "double blender");
            cplx rho_r(1.0 + db.tc.alpha0);
            db.cert_repelling = certify_repelling_blender(db.F, db.tc, db.nb_v, rho_r, cfg);
            if (!db.cert_repelling.pass) {
                last_failure = "repelling certificate failed at level " + std::to_string(l);
                continue;
            }
            SkewMap G = conjugate_zscale(db.F, cplx(0.25));
            cplx rho_s(1.0 - db.tc.alpha0);
            db.cert_saddle = certify_saddle_blender(G, db.tc, db.nb_u, rho_s, cfg);
            if (!db.cert_saddle.pass) {
                last_failure = "saddle certificate failed at level " + std::to_string(l);
                continue;
            }
            return db;
        } catch (const Error& e) {
            last_failure = e.what();
        }
    }
    throw SearchFailed("double blender search exhausted: " + last_failure);
}

struct CycleCheckResult {
    Certificate cert;
    std::optional<IntersectionWitness> witness;
    VerticalGraph unstable_graph;
    VerticalGraph pushed_graph;
};

// a local unstable graph of the saddle set, relaxed by the graph transform
// inside the saddle blocks, pushed once onto a repelling block; the landing
// graph feeds the nested-branch intersection
inline CycleCheckResult cycle_check(const DoubleBlender& db, int relax_steps = 120,
                                    int witness_steps = 50) {
    CycleCheckResult out;
    Certificate root = Certificate::make("blender_cycle");

    const SkewMap& F = db.F;
    double zcap = 0.25;

    // cone contraction on the invariant annulus carrying both tower families
    {
        Certificate c = Certificate::make("annulus_cone_contraction");
        MarginTracker tracker;
        double delta = std::max(db.cert_repelling.delta0, 1e-3);
        double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
        for (const VerticalNeighborhoods* nb : {&db.nb_v, &db.nb_u})
            for (int j = 0; j < 3; ++j)
                for (cplx w : nb->region(j).boundary(32)) {
                    lo = std::min(lo, std::abs(w));
                    hi = std::max(hi, std::abs(w));
                }
        for (int ring = 0; ring <= 4; ++ring) {
            double rw = lo + (hi - lo) * ring / 4.0;
            for (int k = 0; k < 24; ++k) {
                cplx w = std::polar(rw, 2.0 * kPi * k / 24.0);
                for (cplx z : detail::sample_disc(2.0, 2, 8)) {
                    HJet jet = F.h_jet(z, w);
                    double qd = std::abs(F.vertical_jet(w).second);
                    double bound = (std::abs(jet.dz) * delta + std::abs(jet.dw)) / qd;
                    tracker.observe(delta - bound, {z.real(), z.imag(), w.real(), w.imag()});
                }
            }
        }
        tracker.commit(c);
        c.params["delta"] = delta;
        c.params["annulus"] = json::array({lo, hi});
        c.pass = tracker.worst > 0;
        root.add_sub(c);
    }

    // relax a graph inside the saddle blocks; block choice keeps the values
    // smallest so the graph stays in the z-cap disc
    VerticalGraph tau = constant_graph(db.nb_u, 0, cplx(0.0));
    int cur = 0;
    for (int n = 0; n < relax_steps; ++n) {
        int best_j = 0;
        double best_sup = std::numeric_limits<double>::infinity();
        VerticalGraph best_g;
        for (int j = 0; j < 3; ++j) {
            VerticalGraph cand = graph_transform(F, db.nb_u, tau, cur, j);
            double sup = 0;
            for (cplx v : cand.nodes_sigma) sup = std::max(sup, std::abs(v));
            if (sup < best_sup) {
                best_sup = sup;
                best_j = j;
                best_g = std::move(cand);
            }
        }
        if (best_sup > zcap) break;  // values would leave the saddle block
        tau = std::move(best_g);
        cur = best_j;
    }
    out.unstable_graph = tau;
    {
        Certificate c = Certificate::make("unstable_graph");
        double sup = 0;
        for (cplx v : tau.nodes_sigma) sup = std::max(sup, std::abs(v));
        c.worst_margin = zcap - sup;
        c.samples = static_cast<long long>(tau.nodes_sigma.size());
        c.params["slope_bound"] = tau.slope_bound;
        c.params["block"] = cur;
        c.pass = sup <= zcap && tau.slope_bound < db.cert_repelling.delta0;
        root.add_sub(c);
    }

    // push once onto each repelling block and take the best admissible landing
    int best_target = -1;
    double best_margin = -std::numeric_limits<double>::infinity();
    VerticalGraph pushed;
    for (int j = 0; j < 3; ++j) {
        BranchSolver bs = db.nb_u.extra_branch(cur, j);
        VerticalGraph cand;
        cand.domain_index = j;
        cand.domain = db.nb_v.region(j);
        cand.nodes_w = cand.domain.points();
        bool ok = true;
        cplx cur_t = bs.anchor, cur_x = bs.anchor_preimage;
        auto h = F.h;
        auto prev = tau.eval;
        try {
            for (cplx w : cand.nodes_w) {
                cur_x = bs.solve_from(w, cur_t, cur_x);
                cur_t = w;
                cand.nodes_sigma.push_back(h(prev(cur_x), cur_x).value);
            }
        } catch (const Error&) {
            ok = false;
        }
        if (!ok) continue;
        cand.slope_bound = graph_slope(cand.nodes_w, cand.nodes_sigma);
        BranchSolver bs_copy = bs;
        cand.eval = [bs_copy, h, prev](cplx w) {
            cplx u = bs_copy.solve(w);
            return h(prev(u), u).value;
        };
        double m = std::numeric_limits<double>::infinity();
        for (cplx v : cand.nodes_sigma)
            m = std::min(m, db.cert_repelling.blocks[std::size_t(j)].horizontal.margin(v));
        if (m > best_margin) {
            best_margin = m;
            best_target = j;
            pushed = std::move(cand);
        }
    }
    if (best_target < 0) throw NoAdmissibleBlock("no pushed unstable graph could be built");
    out.pushed_graph = pushed;
    {
        Certificate c = Certificate::make("pushed_graph_in_block");
        c.worst_margin = best_margin;
        c.samples = static_cast<long long>(pushed.nodes_sigma.size());
        c.params["block"] = best_target;
        c.params["slope_bound"] = pushed.slope_bound;
        c.pass = best_margin >= 0 && pushed.slope_bound < db.cert_repelling.delta0;
        root.add_sub(c);
        if (best_margin < 0)
            throw NoAdmissibleBlock("pushed unstable graph misses every repelling block");
    }

    out.witness = blender_intersect(F, db.nb_v, db.cert_repelling.blocks, pushed, witness_steps);
    root.add_sub(verify_witness(F, db.cert_repelling.blocks, *out.witness));
    root.finalize(0.0);
    out.cert = root;
    return out;
}

// ---------------------------------------------------------------------------
// Hénon perturbations
// ---------------------------------------------------------------------------

struct HenonMap {
    Polynomial p_plus, p_minus;
    double c = 0.5;
    double epsilon = 0.0;
    cplx a_eps{0.0};
    int d = 2;
    ProjectiveMap f;  // h_eps^- o h_eps^+
    HomFactor plus_factor, minus_factor;
};

inline HenonMap henon_build(const Polynomial& p_plus, const Polynomial& p_minus, double c,
                            double epsilon, cplx a_eps) {
    if (!(c > 0.0 && c < 1.0)) throw Error("henon_build: 0 < c < 1 required");
    if (p_plus.degree() != p_minus.degree() || p_plus.degree() < 2)
        throw Error("henon_build: p+ and p- need equal degree >= 2");
    HenonMap hm;
    hm.p_plus = p_plus;
    hm.p_minus = p_minus;
    hm.c = c;
    hm.epsilon = epsilon;
    hm.a_eps = a_eps;
    hm.d = p_plus.degree();

    auto build_factor = [&](double cz, const Polynomial& p, const char* name) {
        BivariatePolynomial a1 = BivariatePolynomial::monomial(0, 1) +
                                 BivariatePolynomial::monomial(hm.d, 0, a_eps);
        BivariatePolynomial a2 = BivariatePolynomial::monomial(1, 0, cz) +
                                 BivariatePolynomial::from_w(p);
        return factor_from_affine(a1, a2, name);
    };
    hm.plus_factor = build_factor(c + epsilon, p_plus, "henon_plus");
    hm.minus_factor = build_factor(1.0 / c, p_minus, "henon_minus");
    hm.f.factors = {hm.plus_factor, hm.minus_factor};

    auto ind = indeterminacy_points(hm.f);
    if (!ind.empty())
        throw IndeterminacyDetected("perturbed composition still has an indeterminacy point");
    return hm;
}

// coefficient-based escape radius for both polynomials
inline double henon_escape_radius(const HenonMap& hm) {
    double bound = 1.0;
    for (const Polynomial* p : {&hm.p_plus, &hm.p_minus}) {
        double lead = std::abs(p->leading());
        double rest = 0;
        for (int i = 0; i < p->degree(); ++i) rest += std::abs(p->coeffs()[std::size_t(i)]);
        bound = std::max(bound, (2.0 + 1.0 / hm.c + rest) / lead);
    }
    return bound;
}

inline Certificate henon_trapping_certify(const HenonMap& hm, double R,
                                          double margin_floor = 1e-3) {
    Certificate root = Certificate::make("henon_trapping");
    root.params["R"] = R;
    double resc = henon_escape_radius(hm);
    root.params["escape_radius_bound"] = resc;
    if (R < resc) {
        root.params["note"] = "R below the coefficient escape bound";
    }

    TrappingRegion U = TrappingRegion::complement_of_w_minus(R);
    {
        Certificate c = Certificate::make("u_trapping");
        MarginTracker tracker;
        for (const auto& x : U.boundary_samples(14)) {
            ProjectivePoint y = hm.f.eval(x);
            double m = U.margin(y) / (2.0 * R);  // normalized by the cylinder scale
            tracker.observe(m, {std::abs(x.h[0]), std::abs(x.h[1]), std::abs(x.h[2])});
        }
        // interior spread: a coarse affine grid inside U must stay inside
        for (int gi = -3; gi <= 3; ++gi)
            for (int gj = -3; gj <= 3; ++gj) {
                cplx z(0.6 * R * gi / 3.0, 0.3 * R * gj / 3.0);
                cplx w(0.5 * R * gj / 3.0, -0.4 * R * gi / 3.0);
                ProjectivePoint x = ProjectivePoint::affine(z, w);
                if (U.margin(x) <= 0) continue;
                double m = U.margin(hm.f.eval(x)) / (2.0 * R);
                tracker.observe(m, {z.real(), z.imag(), w.real(), w.imag()});
            }
        tracker.commit(c);
        c.pass = tracker.worst >= margin_floor;
        root.add_sub(c);
    }

    // forward invariance of V+ under both factors, sampled on its boundary
    for (const auto& [factor, name] :
         {std::pair<const HomFactor*, const char*>{&hm.plus_factor, "v_plus_forward_plus"},
          {&hm.minus_factor, "v_plus_forward_minus"}}) {
        Certificate c = Certificate::make(name);
        MarginTracker tracker;
        for (int a = 0; a < 20; ++a)
            for (int b = 0; b < 12; ++b)
                for (double rz : {0.0, 0.5, 1.0}) {
                    cplx w = std::polar(R, 2.0 * kPi * a / 20.0);
                    cplx z = std::polar(rz * R, 2.0 * kPi * b / 12.0 + 0.2);
                    auto [v, J] = factor->affine_jet(z, w);
                    (void)J;
                    double m = (std::abs(v[1]) - std::max(R, std::abs(v[0]))) / R;
                    tracker.observe(m, {z.real(), z.imag(), w.real(), w.imag()});
                }
        tracker.commit(c);
        c.pass = tracker.worst >= margin_floor;
        root.add_sub(c);
    }

    // the volume distortion of the perturbed composition on the bidisc
    {
        Certificate c = Certificate::make("volume_increase");
        MarginTracker tracker;
        for (int gi = -2; gi <= 2; ++gi)
            for (int gj = -2; gj <= 2; ++gj) {
                cplx z(0.4 * R * gi / 2.0, 0.2 * R * gj / 2.0);
                cplx w(0.4 * R * gj / 2.0, -0.2 * R * gi / 2.0);
                auto [v, J] = hm.f.affine_jet(z, w);
                (void)v;
                cplx det = J[0][0] * J[1][1] - J[0][1] * J[1][0];
                tracker.observe(std::abs(det) - 1.0, {z.real(), z.imag(), w.real(), w.imag()});
            }
        tracker.commit(c);
        c.pass = tracker.worst > 0;
        root.add_sub(c);
    }

    root.finalize(0.0);
    return root;
}

struct CycleInfo {
    std::vector<std::array<cplx, 2>> points;
    int period = 1;
    std::array<cplx, 2> eigenvalues{};
    bool repelling = false;
    double residual = 0.0;
};

inline std::vector<CycleInfo> henon_repelling_cycles(const HenonMap& hm, double R,
                                                     int max_period,
                                                     std::uint64_t seed = kDefaultSeed) {
    if (max_period > 4) throw Error("henon_repelling_cycles: max_period <= 4");
    std::vector<CycleInfo> found;
    Rng rng(seed);

    // 32 deterministic starts per coordinate, paired exhaustively
    std::vector<cplx> starts1;
    for (int r = 1; r <= 4; ++r)
        for (int a = 0; a < 8; ++a)
            starts1.push_back(std::polar(R * r / 4.5, 2.0 * kPi * a / 8.0 + 0.1 * r));

    auto fn = [&](std::array<cplx, 2> x, int n) {
        std::array<std::array<cplx, 2>, 2> J{{{cplx(1.0), cplx(0.0)}, {cplx(0.0), cplx(1.0)}}};
        for (int k = 0; k < n; ++k) {
            auto [v, Jf] = hm.f.affine_jet(x[0], x[1]);
            std::array<std::array<cplx, 2>, 2> Jn;
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j)
                    Jn[std::size_t(i)][std::size_t(j)] =
                        Jf[std::size_t(i)][0] * J[0][std::size_t(j)] +
                        Jf[std::size_t(i)][1] * J[1][std::size_t(j)];
            J = Jn;
            x = {v[0], v[1]};
        }
        return std::make_pair(x, J);
    };

    for (int period = 1; period <= max_period; ++period) {
        for (cplx s1 : starts1)
            for (cplx s2 : starts1) {
                std::array<cplx, 2> x{s1, s2};
                bool conv = false;
                for (int it = 0; it < 60; ++it) {
                    auto [fx, J] = fn(x, period);
                    std::array<cplx, 2> Fv{fx[0] - x[0], fx[1] - x[1]};
                    double res = std::max(std::abs(Fv[0]), std::abs(Fv[1]));
                    if (res < 1e-11) { conv = true; break; }
                    // solve (J - I) dx = F
                    cplx a = J[0][0] - 1.0, bq = J[0][1], cq = J[1][0], dq = J[1][1] - 1.0;
                    cplx det = a * dq - bq * cq;
                    if (std::abs(det) < 1e-14) break;
                    cplx dx0 = (dq * Fv[0] - bq * Fv[1]) / det;
                    cplx dx1 = (-cq * Fv[0] + a * Fv[1]) / det;
                    double cap = 0.5 * R;
                    double nrm = std::max(std::abs(dx0), std::abs(dx1));
                    if (nrm > cap) {
                        dx0 *= cap / nrm;
                        dx1 *= cap / nrm;
                    }
                    x[0] -= dx0;
                    x[1] -= dx1;
                    if (std::max(std::abs(x[0]), std::abs(x[1])) > 4.0 * R) break;
                }
                if (!conv) continue;
                if (std::max(std::abs(x[0]), std::abs(x[1])) >= R) continue;
                // minimal period
                bool lower = false;
                for (int k = 1; k < period; ++k) {
                    if (period % k != 0) continue;
                    auto [fx, J] = fn(x, k);
                    (void)J;
                    if (std::abs(fx[0] - x[0]) < 1e-8 && std::abs(fx[1] - x[1]) < 1e-8) {
                        lower = true;
                        break;
                    }
                }
                if (lower) continue;
                // dedup against found cycles
                bool dup = false;
                for (const auto& cyc : found)
                    for (const auto& p : cyc.points)
                        if (std::abs(p[0] - x[0]) < 1e-6 && std::abs(p[1] - x[1]) < 1e-6) dup = true;
                if (dup) continue;

                CycleInfo info;
                info.period = period;
                std::array<cplx, 2> cur = x;
                for (int k = 0; k < period; ++k) {
                    info.points.push_back(cur);
                    auto [v, J] = hm.f.affine_jet(cur[0], cur[1]);
                    (void)J;
                    cur = {v[0], v[1]};
                }
                auto [fx, J] = fn(x, period);
                info.residual = std::max(std::abs(fx[0] - x[0]), std::abs(fx[1] - x[1]));
                cplx tr = J[0][0] + J[1][1];
                cplx det = J[0][0] * J[1][1] - J[0][1] * J[1][0];
                cplx disc = std::sqrt(tr * tr - 4.0 * det);
                info.eigenvalues = {(tr + disc) / 2.0, (tr - disc) / 2.0};
                info.repelling = std::abs(info.eigenvalues[0]) > 1.0 + 1e-8 &&
                                 std::abs(info.eigenvalues[1]) > 1.0 + 1e-8;
                found.push_back(std::move(info));
            }
    }
    return found;
}

// prepared parameters: the unperturbed composition carries two elliptic
// fixed points (traces 1.5 and 0 with unit determinant), so the
// volume-increasing perturbation turns both into repelling points inside
// the bidisc
inline HenonMap henon_standard_example(double epsilon = 0.1, cplx a_eps = cplx(1e-4)) {
    double c = 0.5;
    double tau1 = 1.5, tau2 = 0.0;
    double a1 = (tau1 - c - 1.0 / c) / 4.0;
    double a2 = (tau2 - c - 1.0 / c) / 4.0;
    // two fixed points (a_k / w_k, w_k) of the unperturbed map must share the
    // polynomial constants; refine the known branch of the 2x2 system
    cplx w1(0.216364, 0.389373), w2(0.379712, -0.593196);
    auto system = [&](cplx u1, cplx u2) {
        cplx z1 = a1 / u1, z2 = a2 / u2;
        cplx A = (1.0 - c) * (z1 - z2) - u1 * u1 + u2 * u2;
        cplx B = -(1.0 - c) / c * (u1 - u2) - z1 * z1 + z2 * z2;
        return std::array<cplx, 2>{A, B};
    };
    for (int it = 0; it < 80; ++it) {
        auto F = system(w1, w2);
        if (std::max(std::abs(F[0]), std::abs(F[1])) < 1e-14) break;
        double h = 1e-7;
        auto Fa = system(w1 + h, w2);
        auto Fc = system(w1, w2 + h);
        cplx J11 = (Fa[0] - F[0]) / h, J12 = (Fc[0] - F[0]) / h;
        cplx J21 = (Fa[1] - F[1]) / h, J22 = (Fc[1] - F[1]) / h;
        cplx det = J11 * J22 - J12 * J21;
        if (std::abs(det) < 1e-14) break;
        cplx d1 = (J22 * F[0] - J12 * F[1]) / det;
        cplx d2 = (-J21 * F[0] + J11 * F[1]) / det;
        double n = std::max(std::abs(d1), std::abs(d2));
        if (n > 0.1) {
            d1 *= 0.1 / n;
            d2 *= 0.1 / n;
        }
        w1 -= d1;
        w2 -= d2;
    }
    cplx z1 = a1 / w1;
    cplx kp = (1.0 - c) * z1 - w1 * w1;
    cplx km = -(1.0 - c) / c * w1 - z1 * z1;
    Polynomial pp({kp, cplx(0.0), cplx(1.0)});
    Polynomial pm({km, cplx(0.0), cplx(1.0)});
    return henon_build(pp, pm, c, epsilon, a_eps);
}

// Nested trapping regions: around each repelling cycle an eigenframe box
// with closure(B) in f(B) (round balls fail when the Jacobian is far from
// normal); removing the boxes one by one keeps trapping.
struct AdaptedBox {
    std::array<cplx, 2> center;
    std::array<std::array<cplx, 2>, 2> frame;      // columns = eigenvectors
    std::array<std::array<cplx, 2>, 2> frame_inv;
    double r = 0.0;        // radius in the adapted sup norm
    double circum = 0.0;   // Euclidean circumradius

    double adapted_norm(const std::array<cplx, 2>& x) const {
        cplx d0 = x[0] - center[0], d1 = x[1] - center[1];
        cplx u0 = frame_inv[0][0] * d0 + frame_inv[0][1] * d1;
        cplx u1 = frame_inv[1][0] * d0 + frame_inv[1][1] * d1;
        return std::max(std::abs(u0), std::abs(u1));
    }
    double margin(const std::array<cplx, 2>& x) const { return r - adapted_norm(x); }
    std::array<cplx, 2> embed(cplx u0, cplx u1) const {
        return {center[0] + frame[0][0] * u0 + frame[0][1] * u1,
                center[1] + frame[1][0] * u0 + frame[1][1] * u1};
    }
};

namespace detail {

inline std::array<std::array<cplx, 2>, 2> eigenframe(
    const std::array<std::array<cplx, 2>, 2>& J) {
    cplx tr = J[0][0] + J[1][1];
    cplx det = J[0][0] * J[1][1] - J[0][1] * J[1][0];
    cplx disc = std::sqrt(tr * tr - 4.0 * det);
    cplx l1 = (tr + disc) / 2.0, l2 = (tr - disc) / 2.0;
    auto eigvec = [&](cplx lam) -> std::array<cplx, 2> {
        std::array<cplx, 2> a{J[0][1], lam - J[0][0]};
        std::array<cplx, 2> b{lam - J[1][1], J[1][0]};
        double na = std::max(std::abs(a[0]), std::abs(a[1]));
        double nb = std::max(std::abs(b[0]), std::abs(b[1]));
        auto v = (na >= nb) ? a : b;
        double n = std::sqrt(std::norm(v[0]) + std::norm(v[1]));
        if (n < 1e-14) return {cplx(1.0), cplx(0.0)};
        return {v[0] / n, v[1] / n};
    };
    auto v1 = eigvec(l1), v2 = eigvec(l2);
    // near-defective: fall back to the standard frame
    cplx gram = std::conj(v1[0]) * v2[0] + std::conj(v1[1]) * v2[1];
    if (std::abs(gram) > 1.0 - 1e-8)
        return {{{cplx(1.0), cplx(0.0)}, {cplx(0.0), cplx(1.0)}}};
    return {{{v1[0], v2[0]}, {v1[1], v2[1]}}};
}

inline std::array<std::array<cplx, 2>, 2> invert2(const std::array<std::array<cplx, 2>, 2>& M) {
    cplx det = M[0][0] * M[1][1] - M[0][1] * M[1][0];
    return {{{M[1][1] / det, -M[0][1] / det}, {-M[1][0] / det, M[0][0] / det}}};
}

// boundary of the adapted sup-norm box: both faces, phases times radii
inline std::vector<std::array<cplx, 2>> box_boundary(const AdaptedBox& box, int n_phase = 8,
                                                     int n_inner = 5) {
    std::vector<std::array<cplx, 2>> out;
    for (int a = 0; a < n_phase; ++a)
        for (int b = 0; b < n_phase; ++b)
            for (int s = 0; s <= n_inner; ++s) {
                cplx u_face = box.r * std::polar(1.0, 2.0 * kPi * a / n_phase);
                cplx u_in = box.r * double(s) / n_inner *
                            std::polar(1.0, 2.0 * kPi * b / n_phase + 0.3);
                out.push_back(box.embed(u_face, u_in));
                out.push_back(box.embed(u_in, u_face));
            }
    return out;
}

}  // namespace detail

inline Certificate nested_trapping(const HenonMap& hm, double R,
                                   const std::vector<CycleInfo>& cycles,
                                   double margin_floor = 1e-3) {
    Certificate root = Certificate::make("nested_trapping");
    root.params["R"] = R;
    TrappingRegion U = TrappingRegion::complement_of_w_minus(R);

    // adapted frames from the full-period Jacobian at each cycle point
    std::vector<std::vector<AdaptedBox>> boxes(cycles.size());
    for (std::size_t b = 0; b < cycles.size(); ++b) {
        for (const auto& p : cycles[b].points) {
            std::array<cplx, 2> x = p;
            std::array<std::array<cplx, 2>, 2> J{{{cplx(1.0), cplx(0.0)},
                                                  {cplx(0.0), cplx(1.0)}}};
            for (int k = 0; k < cycles[b].period; ++k) {
                auto [v, Jf] = hm.f.affine_jet(x[0], x[1]);
                std::array<std::array<cplx, 2>, 2> Jn;
                for (int i = 0; i < 2; ++i)
                    for (int j = 0; j < 2; ++j)
                        Jn[std::size_t(i)][std::size_t(j)] =
                            Jf[std::size_t(i)][0] * J[0][std::size_t(j)] +
                            Jf[std::size_t(i)][1] * J[1][std::size_t(j)];
                J = Jn;
                x = {v[0], v[1]};
            }
            AdaptedBox box;
            box.center = p;
            box.frame = detail::eigenframe(J);
            box.frame_inv = detail::invert2(box.frame);
            boxes[b].push_back(box);
        }
    }

    double min_gap = std::numeric_limits<double>::infinity();
    {
        std::vector<std::array<cplx, 2>> all;
        for (const auto& cyc : cycles)
            for (const auto& p : cyc.points) all.push_back(p);
        for (std::size_t i = 0; i < all.size(); ++i)
            for (std::size_t j = i + 1; j < all.size(); ++j)
                min_gap = std::min(min_gap,
                                   std::max(std::abs(all[i][0] - all[j][0]),
                                            std::abs(all[i][1] - all[j][1])));
        if (all.size() <= 1) min_gap = 1.0;
    }

    // preimages of the next box boundary must land well inside the current box
    auto box_expands = [&](std::size_t b, double r) {
        int n = int(boxes[b].size());
        for (int k = 0; k < n; ++k) {
            AdaptedBox src = boxes[b][std::size_t(k)];
            AdaptedBox dst = boxes[b][std::size_t((k + 1) % n)];
            src.r = r;
            dst.r = r;
            for (const auto& y : detail::box_boundary(dst)) {
                std::array<cplx, 2> x = src.center;
                bool conv = false;
                for (int it = 0; it < 60; ++it) {
                    auto [v, J] = hm.f.affine_jet(x[0], x[1]);
                    std::array<cplx, 2> Fv{v[0] - y[0], v[1] - y[1]};
                    if (std::max(std::abs(Fv[0]), std::abs(Fv[1])) < 1e-12) {
                        conv = true;
                        break;
                    }
                    cplx det = J[0][0] * J[1][1] - J[0][1] * J[1][0];
                    if (std::abs(det) < 1e-14) break;
                    cplx dx0 = (J[1][1] * Fv[0] - J[0][1] * Fv[1]) / det;
                    cplx dx1 = (-J[1][0] * Fv[0] + J[0][0] * Fv[1]) / det;
                    x[0] -= dx0;
                    x[1] -= dx1;
                }
                if (!conv) return false;
                if (src.adapted_norm(x) > 0.97 * r) return false;
            }
        }
        return true;
    };

    json ball_info = json::array();
    for (std::size_t b = 0; b < cycles.size(); ++b) {
        double frame_norm = 0;
        for (const auto& box : boxes[b]) {
            double fn = 0;
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j) fn += std::abs(box.frame[i][j]);
            frame_norm = std::max(frame_norm, fn);
        }
        double cap = std::min(0.25, min_gap / (3.0 * frame_norm));
        double lo = 0.0, hi = cap;
        for (int it = 0; it < 24; ++it) {
            double mid = 0.5 * (lo + hi);
            if (mid > 0 && box_expands(b, mid)) lo = mid;
            else hi = mid;
        }
        if (lo <= 0) {
            Certificate c = Certificate::make("box_expansion");
            c.pass = false;
            c.params["period"] = cycles[b].period;
            root.add_sub(c);
            root.finalize(0.0);
            return root;
        }
        double r = 0.9 * lo;
        for (auto& box : boxes[b]) {
            box.r = r;
            box.circum = r * frame_norm;
        }
        ball_info.push_back(json{{"period", cycles[b].period}, {"radius", r},
                                 {"circumradius", r * frame_norm}});
    }
    root.params["balls"] = ball_info;

    // pairwise disjointness through the Euclidean circumradii
    for (std::size_t i = 0; i < cycles.size(); ++i)
        for (std::size_t j = i + 1; j < cycles.size(); ++j)
            for (const auto& bi : boxes[i])
                for (const auto& bj : boxes[j]) {
                    double d = std::max(std::abs(bi.center[0] - bj.center[0]),
                                        std::abs(bi.center[1] - bj.center[1]));
                    if (d <= bi.circum + bj.circum)
                        throw BallsOverlap("removed boxes are not pairwise disjoint");
                }

    {
        Certificate c = Certificate::make("box_covering");
        c.pass = true;
        c.samples = 0;
        double worst = std::numeric_limits<double>::infinity();
        for (std::size_t b = 0; b < cycles.size(); ++b) {
            if (!box_expands(b, boxes[b][0].r)) c.pass = false;
            worst = std::min(worst, 0.03 * boxes[b][0].r);  // slack left by the 0.97 factor
            c.samples += static_cast<long long>(detail::box_boundary(boxes[b][0]).size() *
                                                boxes[b].size());
        }
        c.worst_margin = c.pass ? worst : -1.0;
        root.add_sub(c);
    }

    // each removal stage stays trapping: the outer boundary and the removed
    // box boundaries map into the region and away from every removed box
    for (std::size_t stage = 1; stage <= cycles.size(); ++stage) {
        Certificate c = Certificate::make("stage_" + std::to_string(stage) + "_trapping");
        MarginTracker tracker;
        auto check_point = [&](const std::array<cplx, 2>& x) {
            auto v = hm.f.affine_eval(x[0], x[1]);
            double m = U.margin(ProjectivePoint::affine(v[0], v[1])) / (2.0 * R);
            for (std::size_t b = 0; b < stage; ++b)
                for (const auto& box : boxes[b])
                    m = std::min(m, box.adapted_norm({v[0], v[1]}) - box.r);
            tracker.observe(m, {x[0].real(), x[0].imag(), x[1].real(), x[1].imag()});
        };
        for (const auto& hpt : U.boundary_samples(10)) {
            if (!hpt.is_affine(1e-9)) continue;  // the line at infinity maps into the
                                                 // affine part; checked projectively in
                                                 // the trapping certificate
            check_point({hpt.z(), hpt.w()});
        }
        for (std::size_t b = 0; b < stage; ++b)
            for (const auto& box : boxes[b])
                for (const auto& y : detail::box_boundary(box)) check_point(y);
        tracker.commit(c);
        c.pass = tracker.worst >= margin_floor * 1e-2;
        c.params["removed_cycles"] = stage;
        root.add_sub(c);
    }

    // preimage census: preimages of the cycle points inside the region must
    // lie in their own boxes (the injectivity surrogate)
    {
        Certificate c = Certificate::make("preimage_census");
        c.pass = true;
        long long checked = 0;
        for (std::size_t b = 0; b < cycles.size(); ++b) {
            for (const auto& target : cycles[b].points) {
                for (int gi = 0; gi < 6; ++gi)
                    for (int gj = 0; gj < 6; ++gj) {
                        std::array<cplx, 2> x{
                            std::polar(R * (gi + 1) / 7.0, 2.0 * kPi * gi / 6.0),
                            std::polar(R * (gj + 1) / 7.0, 2.0 * kPi * gj / 6.0)};
                        bool conv = false;
                        for (int it = 0; it < 60; ++it) {
                            auto [v, J] = hm.f.affine_jet(x[0], x[1]);
                            std::array<cplx, 2> Fv{v[0] - target[0], v[1] - target[1]};
                            if (std::max(std::abs(Fv[0]), std::abs(Fv[1])) < 1e-10) {
                                conv = true;
                                break;
                            }
                            cplx det = J[0][0] * J[1][1] - J[0][1] * J[1][0];
                            if (std::abs(det) < 1e-14) break;
                            cplx dx0 = (J[1][1] * Fv[0] - J[0][1] * Fv[1]) / det;
                            cplx dx1 = (-J[1][0] * Fv[0] + J[0][0] * Fv[1]) / det;
                            double cap = 0.5 * R;
                            double nrm = std::max(std::abs(dx0), std::abs(dx1));
                            if (nrm > cap) {
                                dx0 *= cap / nrm;
                                dx1 *= cap / nrm;
                            }
                            x[0] -= dx0;
                            x[1] -= dx1;
                            if (std::max(std::abs(x[0]), std::abs(x[1])) > 5.0 * R) break;
                        }
                        if (!conv) continue;
                        ProjectivePoint px = ProjectivePoint::affine(x[0], x[1]);
                        if (U.margin(px) <= 0) continue;
                        ++checked;
                        bool in_box = false;
                        for (std::size_t bb = 0; bb < cycles.size(); ++bb)
                            for (const auto& box : boxes[bb])
                                if (box.margin(x) > 0) in_box = true;
                        if (!in_box) c.pass = false;
                    }
            }
        }
        c.samples = checked;
        c.worst_margin = c.pass ? 1.0 : -1.0;
        root.add_sub(c);
    }

    json witness = json::array();
    for (std::size_t b = 0; b < cycles.size(); ++b)
        witness.push_back(json{{"cycle_period", cycles[b].period},
                               {"strictly_removed_at_stage", b + 1}});
    root.params["strictness_witnesses"] = witness;
    root.finalize(0.0);
    return root;
}

// ---------------------------------------------------------------------------
// raster rendering
// ---------------------------------------------------------------------------

struct Raster {
    int width = 0, height = 0;
    std::vector<std::uint8_t> rgb;  // row-major, top-left origin

    std::string to_ppm() const {
        std::string out = "P6\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
        out.append(reinterpret_cast<const char*>(rgb.data()), rgb.size());
        return out;
    }
    bool write_ppm(const std::string& path) const {
        std::ofstream f(path, std::ios::binary);
        if (!f) return false;
        std::string s = to_ppm();
        f.write(s.data(), std::streamsize(s.size()));
        return bool(f);
    }
};

struct RenderWindow {
    double x0 = -2, x1 = 2, y0 = -2, y1 = 2;
};

// escape-time picture of the one-variable factor w  ->  q(w)
inline Raster render_escape(const Polynomial& q, const RenderWindow& win, int iterations,
                            int resolution) {
    if (resolution < 1 || resolution > 4096) throw Error("render: resolution out of range");
    Raster r;
    r.width = resolution;
    r.height = resolution;
    r.rgb.assign(std::size_t(resolution) * std::size_t(resolution) * 3, 0);
    double escape = std::max(4.0, 2.0 * q.root_radius_bound());
    parallel_for(std::size_t(resolution) * std::size_t(resolution), [&](std::size_t idx) {
        int px = int(idx % std::size_t(resolution));
        int py = int(idx / std::size_t(resolution));
        cplx w(win.x0 + (win.x1 - win.x0) * (px + 0.5) / resolution,
               win.y1 - (win.y1 - win.y0) * (py + 0.5) / resolution);
        int n = 0;
        while (n < iterations && std::abs(w) <= escape) {
            w = q(w);
            ++n;
        }
        std::uint8_t v = std::uint8_t(255.0 * n / iterations);
        r.rgb[idx * 3 + 0] = v;
        r.rgb[idx * 3 + 1] = v;
        r.rgb[idx * 3 + 2] = v;
    });
    return r;
}

// forward-push picture of the fat attractor. The composite has degree 4^(lN+l~),
// so a double orbit cannot pass twice through the shear's w-power: anything off
// the unit circle flushes to the absorbing fiber. Instead the block Z_alpha is
// pushed through one shear, the automorphism and the return factor; since
// Z_alpha sits inside its own shear image, every plotted point lies in
// f(Z_alpha), hence in the attracting set.
inline Raster render_attractor_band(const Attractor& att, const RenderWindow& win,
                                    int resolution, int angular = 384, int radial = 192,
                                    int z_samples = 12) {
    if (resolution < 1 || resolution > 4096) throw Error("render: resolution out of range");
    Raster r;
    r.width = resolution;
    r.height = resolution;
    std::vector<std::uint32_t> hits(std::size_t(resolution) * std::size_t(resolution), 0);

    const auto& P = att.params;
    int L = 1;
    for (int k = 0; k < P.l; ++k) L *= 4;
    int Lt = 1;
    for (int k = 0; k < P.l_tilde; ++k) Lt *= 4;

    auto plot = [&](cplx zf, cplx wf) {
        double xw = wf.real(), yz = zf.real();
        int px = int((xw - win.x0) / (win.x1 - win.x0) * resolution);
        int py = int((win.y1 - yz) / (win.y1 - win.y0) * resolution);
        if (px < 0 || px >= resolution || py < 0 || py >= resolution) return;
        ++hits[std::size_t(py) * std::size_t(resolution) + std::size_t(px)];
    };

    for (int j = 0; j < 3; ++j) {
        const Region& tower = att.nb.region(j);
        cplx center = att.nb.base_points[std::size_t(j)];
        // log-polar extent of the tower around its base point
        double th_lo = 0, th_hi = 0, lr_lo = 0, lr_hi = 0;
        for (cplx b : tower.boundary(128)) {
            double dth = std::remainder(std::arg(b) - std::arg(center), 2.0 * kPi);
            double dlr = std::log(std::abs(b) / std::abs(center));
            th_lo = std::min(th_lo, dth);
            th_hi = std::max(th_hi, dth);
            lr_lo = std::min(lr_lo, dlr);
            lr_hi = std::max(lr_hi, dlr);
        }
        // concentrate the radial samples on the sub-band whose shear image
        // stays within plotting range of the window
        double lr_cap = std::log(24.0 + 4.0 * std::max(std::abs(win.x0), std::abs(win.x1))) / L;
        lr_lo = std::max(lr_lo, -lr_cap);
        lr_hi = std::min(lr_hi, lr_cap);
        for (int a = 0; a < angular; ++a)
            for (int rr = 0; rr < radial; ++rr) {
                // log-polar grid over the tower, trimmed by membership
                double th = std::arg(center) + th_lo + (th_hi - th_lo) * (a + 0.5) / angular;
                double lr = lr_lo + (lr_hi - lr_lo) * (rr + 0.5) / radial;
                cplx w = std::polar(std::abs(center) * std::exp(lr), th);
                if (tower.margin(w) <= 0) continue;
                cplx wg = cpow(w, L);  // shear w-image
                if (!std::isfinite(std::abs(wg))) continue;
                for (int zi = 0; zi < z_samples; ++zi) {
                    cplx z = (zi == 0) ? cplx(0.0)
                                       : att.z_radius * (0.25 + 0.7 * ((zi - 1) % 4) / 4.0) *
                                             std::polar(1.0, 2.0 * kPi * zi / z_samples);
                    cplx zg = P.lambda * z + P.alpha * w + P.eta * cpow(z, L);
                    // automorphism in the affine chart, then the return factor
                    cplx den = wg + cplx(0.0, 1.0);
                    if (std::abs(den) < 1e-12) continue;
                    cplx Z = zg / den;
                    cplx W = (cplx(0.0, 1.0) * wg + 1.0) / den;
                    cplx zf = P.lambda_tilde * Z + P.eta * cpow(Z, Lt);
                    cplx wf = cpow(W, Lt);
                    if (!std::isfinite(std::abs(zf)) || !std::isfinite(std::abs(wf))) continue;
                    plot(zf, wf);
                }
            }
    }

    r.rgb.assign(hits.size() * 3, 0);
    for (std::size_t i = 0; i < hits.size(); ++i) {
        double v = hits[i] == 0 ? 0.0
                                : std::min(1.0, 0.25 + 0.25 * std::log2(double(hits[i]) + 1.0));
        std::uint8_t b = std::uint8_t(255.0 * v);
        r.rgb[i * 3 + 0] = b;
        r.rgb[i * 3 + 1] = b;
        r.rgb[i * 3 + 2] = b;
    }
    return r;
}

// generic forward-push picture: seed the window grid inside the trapping
// region, iterate, and accumulate hits of (Re w, Re z) after a warmup
inline Raster render_attracting_forward(const ProjectiveMap& f, const TrappingRegion& trap,
                                        const RenderWindow& win, int iterations, int resolution,
                                        int seed_grid = 192, int warmup = 10) {
    if (resolution < 1 || resolution > 4096) throw Error("render: resolution out of range");
    Raster r;
    r.width = resolution;
    r.height = resolution;
    std::vector<std::uint32_t> hits(std::size_t(resolution) * std::size_t(resolution), 0);

    std::vector<std::vector<std::uint32_t>> partial(static_cast<std::size_t>(seed_grid));
    parallel_for(std::size_t(seed_grid), [&](std::size_t col) {
        std::vector<std::uint32_t> local(std::size_t(resolution) * std::size_t(resolution), 0);
        for (int row = 0; row < seed_grid; ++row) {
            cplx w(win.x0 + (win.x1 - win.x0) * (double(col) + 0.5) / seed_grid, 0.0);
            cplx z(win.y0 + (win.y1 - win.y0) * (row + 0.5) / seed_grid, 0.0);
            ProjectivePoint p = ProjectivePoint::affine(z, w);
            if (trap.margin(p) <= 0) continue;
            for (int n = 0; n < iterations; ++n) {
                try {
                    p = f.eval(p);
                } catch (const Error&) {
                    break;  // orbit left the representable range
                }
                if (n < warmup) continue;
                if (!p.is_affine(1e-9)) continue;
                double xw = p.w().real(), yz = p.z().real();
                int px = int((xw - win.x0) / (win.x1 - win.x0) * resolution);
                int py = int((win.y1 - yz) / (win.y1 - win.y0) * resolution);
                if (px < 0 || px >= resolution || py < 0 || py >= resolution) continue;
                ++local[std::size_t(py) * std::size_t(resolution) + std::size_t(px)];
            }
        }
        partial[col] = std::move(local);
    });
    for (const auto& local : partial)
        for (std::size_t i = 0; i < hits.size(); ++i) hits[i] += local[i];

    r.rgb.assign(hits.size() * 3, 0);
    for (std::size_t i = 0; i < hits.size(); ++i) {
        double v = hits[i] == 0 ? 0.0 : std::min(1.0, 0.25 + 0.25 * std::log2(double(hits[i]) + 1.0));
        std::uint8_t b = std::uint8_t(255.0 * v);
        r.rgb[i * 3 + 0] = b;
        r.rgb[i * 3 + 1] = b;
        r.rgb[i * 3 + 2] = b;
    }
    return r;
}

}  // namespace blenderlab
