#pragma once

// Complex polynomials in one and two variables: arithmetic, an
// Aberth-Ehrlich all-roots solver, periodic points with multipliers,
// and postcritical orbit tests.

#include <limits>

#include "blenderlab/common.hpp"

namespace blenderlab {

class Polynomial {
  public:
    Polynomial() : coeffs_{cplx(0.0)} {}
    explicit Polynomial(std::vector<cplx> coeffs) : coeffs_(std::move(coeffs)) { normalize(); }

    static Polynomial monomial(int degree, cplx lead = cplx(1.0)) {
        std::vector<cplx> c(std::size_t(degree) + 1, cplx(0.0));
        c.back() = lead;
        return Polynomial(std::move(c));
    }
    static Polynomial constant(cplx v) { return Polynomial({v}); }

    // coefficients in ascending degree; leading coefficient nonzero unless
    // this is the zero polynomial
    const std::vector<cplx>& coeffs() const { return coeffs_; }
    int degree() const { return int(coeffs_.size()) - 1; }
    bool is_zero() const { return coeffs_.size() == 1 && coeffs_[0] == cplx(0.0); }
    cplx leading() const { return coeffs_.back(); }

    cplx operator()(cplx w) const {
        cplx acc = coeffs_.back();
        for (std::size_t i = coeffs_.size() - 1; i-- > 0;) acc = acc * w + coeffs_[i];
        return acc;
    }

    // value and first derivative in one pass
    std::pair<cplx, cplx> eval_jet(cplx w) const {
        cplx p = coeffs_.back(), dp = cplx(0.0);
        for (std::size_t i = coeffs_.size() - 1; i-- > 0;) {
            dp = dp * w + p;
            p = p * w + coeffs_[i];
        }
        return {p, dp};
    }

    Polynomial derivative() const {
        if (degree() < 1) return Polynomial();
        std::vector<cplx> d(coeffs_.size() - 1);
        for (std::size_t i = 1; i < coeffs_.size(); ++i) d[i - 1] = double(i) * coeffs_[i];
        return Polynomial(std::move(d));
    }

    Polynomial operator+(const Polynomial& o) const {
        std::vector<cplx> c(std::max(coeffs_.size(), o.coeffs_.size()), cplx(0.0));
        for (std::size_t i = 0; i < coeffs_.size(); ++i) c[i] += coeffs_[i];
        for (std::size_t i = 0; i < o.coeffs_.size(); ++i) c[i] += o.coeffs_[i];
        return Polynomial(std::move(c));
    }
    Polynomial operator-(const Polynomial& o) const {
        std::vector<cplx> c(std::max(coeffs_.size(), o.coeffs_.size()), cplx(0.0));
        for (std::size_t i = 0; i < coeffs_.size(); ++i) c[i] += coeffs_[i];
        for (std::size_t i = 0; i < o.coeffs_.size(); ++i) c[i] -= o.coeffs_[i];
        return Polynomial(std::move(c));
    }
    Polynomial operator*(const Polynomial& o) const {
        if (is_zero() || o.is_zero()) return Polynomial();
        std::vector<cplx> c(coeffs_.size() + o.coeffs_.size() - 1, cplx(0.0));
        for (std::size_t i = 0; i < coeffs_.size(); ++i)
            for (std::size_t j = 0; j < o.coeffs_.size(); ++j) c[i + j] += coeffs_[i] * o.coeffs_[j];
        return Polynomial(std::move(c));
    }
    Polynomial operator*(cplx s) const {
        std::vector<cplx> c = coeffs_;
        for (auto& x : c) x *= s;
        return Polynomial(std::move(c));
    }

    // this(other(w)), expanded symbolically
    Polynomial compose(const Polynomial& inner) const {
        Polynomial acc = Polynomial::constant(coeffs_.back());
        for (std::size_t i = coeffs_.size() - 1; i-- > 0;)
            acc = acc * inner + Polynomial::constant(coeffs_[i]);
        return acc;
    }

    double coeff_norm() const {
        double s = 0;
        for (const auto& c : coeffs_) s = std::max(s, std::abs(c));
        return s;
    }

    // Cauchy bound: all roots lie in |w| <= this
    double root_radius_bound() const {
        if (degree() < 1) return 1.0;
        double m = 0;
        for (int i = 0; i < degree(); ++i)
            m = std::max(m, std::abs(coeffs_[std::size_t(i)] / leading()));
        return 1.0 + m;
    }

  private:
    std::vector<cplx> coeffs_;
    void normalize() {
        while (coeffs_.size() > 1 && coeffs_.back() == cplx(0.0)) coeffs_.pop_back();
        if (coeffs_.empty()) coeffs_.push_back(cplx(0.0));
    }
};

inline cplx iterate(const Polynomial& q, cplx w, int n) {
    for (int i = 0; i < n; ++i) w = q(w);
    return w;
}

// value and derivative of the n-th iterate at w (chain rule, pointwise)
inline std::pair<cplx, cplx> iterate_jet(const Polynomial& q, cplx w, int n) {
    cplx d = 1.0;
    for (int i = 0; i < n; ++i) {
        auto [v, dv] = q.eval_jet(w);
        d *= dv;
        w = v;
    }
    return {w, d};
}

// q composed with itself n times, expanded symbolically; degree d^n
inline Polynomial iterate_poly(const Polynomial& q, int n, int degree_cap = 4096) {
    double deg = std::pow(double(std::max(q.degree(), 1)), double(n));
    if (deg > double(degree_cap))
        throw DegreeCapExceeded("iterate degree " + std::to_string(deg) + " exceeds cap " +
                                std::to_string(degree_cap));
    Polynomial acc = Polynomial::monomial(1);
    for (int i = 0; i < n; ++i) acc = q.compose(acc);
    return acc;
}

// ---------------------------------------------------------------------------
// all roots at once: Aberth-Ehrlich simultaneous iteration.
// Initial guesses sit on a circle of radius the Cauchy bound with a small
// seeded angular jitter; clustered roots are merged afterwards and repeated
// with their multiplicity.
// ---------------------------------------------------------------------------

inline std::vector<cplx> roots(const Polynomial& p, std::uint64_t seed = kDefaultSeed,
                               int max_iter = 500, double cluster_tol = 1e-7) {
    int n = p.degree();
    if (n < 1) throw Error("roots: degree must be >= 1");
    if (n == 1) return {-p.coeffs()[0] / p.coeffs()[1]};

    Rng rng(seed);
    double R = p.root_radius_bound();
    // Fujiwara-type scale estimate puts the start circle near the roots
    double r0 = 0.0;
    for (int i = 0; i < n; ++i) {
        double ai = std::abs(p.coeffs()[std::size_t(i)] / p.leading());
        if (ai > 0.0) r0 = std::max(r0, std::pow(ai, 1.0 / double(n - i)));
    }
    r0 = std::clamp(r0, 1e-3, 0.95 * R);
    std::vector<cplx> z(static_cast<std::size_t>(n));
    double jitter = 0.25 * 2.0 * kPi / n * rng.next_double();
    for (int k = 0; k < n; ++k) {
        double th = 2.0 * kPi * k / n + 0.4 + jitter;
        z[std::size_t(k)] = r0 * cplx(std::cos(th), std::sin(th));
    }

    // residuals are judged against the evaluation majorant sum |a_i| |w|^i,
    // the scale floating point can actually deliver
    auto majorant = [&p](cplx w) {
        double acc = 0.0, aw = std::abs(w);
        for (std::size_t i = p.coeffs().size(); i-- > 0;)
            acc = acc * aw + std::abs(p.coeffs()[i]);
        return std::max(1.0, acc);
    };

    bool converged = false;
    for (int it = 0; it < max_iter && !converged; ++it) {
        converged = true;
        for (int k = 0; k < n; ++k) {
            auto [pv, dpv] = p.eval_jet(z[std::size_t(k)]);
            if (std::abs(pv) <= 5e-15 * majorant(z[std::size_t(k)])) continue;
            cplx newton = (dpv == cplx(0.0)) ? cplx(1e-12) : pv / dpv;
            cplx s(0.0);
            for (int j = 0; j < n; ++j)
                if (j != k) {
                    cplx diff = z[std::size_t(k)] - z[std::size_t(j)];
                    if (std::abs(diff) < 1e-300) diff = cplx(1e-300);
                    s += 1.0 / diff;
                }
            cplx denom = 1.0 - newton * s;
            cplx step = (std::abs(denom) < 1e-300) ? newton : newton / denom;
            if (std::abs(step) > R) step *= R / std::abs(step);
            z[std::size_t(k)] -= step;
            if (std::abs(step) > 1e-13 * std::max(1.0, std::abs(z[std::size_t(k)])))
                converged = false;
        }
    }

    double worst = 0;
    for (auto& r : z) worst = std::max(worst, std::abs(p(r)) / majorant(r));
    if (worst > 1e-8)
        throw NonConvergence("root solver relative residual " + std::to_string(worst));

    // merge clusters (multiple roots converge to a tight cloud); each cluster
    // is replaced by its mean, repeated with multiplicity
    std::vector<int> group(z.size(), -1);
    int ngroups = 0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        if (group[i] >= 0) continue;
        group[i] = ngroups;
        for (std::size_t j = i + 1; j < z.size(); ++j)
            if (group[j] < 0 && std::abs(z[i] - z[j]) < cluster_tol) group[j] = ngroups;
        ++ngroups;
    }
    std::vector<cplx> mean(std::size_t(ngroups), cplx(0.0));
    std::vector<int> count(std::size_t(ngroups), 0);
    for (std::size_t i = 0; i < z.size(); ++i) {
        mean[std::size_t(group[i])] += z[i];
        ++count[std::size_t(group[i])];
    }
    std::vector<cplx> out;
    out.reserve(z.size());
    for (int g = 0; g < ngroups; ++g)
        for (int c = 0; c < count[std::size_t(g)]; ++c)
            out.push_back(mean[std::size_t(g)] / double(count[std::size_t(g)]));
    return out;
}

// ---------------------------------------------------------------------------
// periodic points
// ---------------------------------------------------------------------------

enum class Stability { attracting, repelling, indifferent };

inline const char* to_string(Stability s) {
    switch (s) {
        case Stability::attracting: return "attracting";
        case Stability::repelling: return "repelling";
        default: return "indifferent";
    }
}

struct PeriodicOrbit {
    std::vector<cplx> points;  // the cycle, minimal period long
    int period = 1;            // true minimal period
    cplx multiplier{0.0};      // chain-rule product over the cycle
    Stability classification = Stability::indifferent;

    cplx representative() const { return points.front(); }
};

inline Stability classify_multiplier(cplx mult, double band = 1e-8) {
    double m = std::abs(mult);
    if (m < 1.0 - band) return Stability::attracting;
    if (m > 1.0 + band) return Stability::repelling;
    return Stability::indifferent;
}

// multiplier of w as a point of period n (chain rule along n steps)
inline cplx cycle_multiplier(const Polynomial& q, cplx w, int n) {
    return iterate_jet(q, w, n).second;
}

// All solutions of q^m(w) = w grouped into orbits. Orbits whose minimal
// period strictly divides m are still returned, flagged with their true
// minimal period.
inline std::vector<PeriodicOrbit> periodic_points(const Polynomial& q, int m,
                                                  int degree_cap = 4096,
                                                  std::uint64_t seed = kDefaultSeed) {
    if (q.degree() < 2) throw Error("periodic_points: deg(q) >= 2 required");
    Polynomial qm = iterate_poly(q, m, degree_cap);
    Polynomial eq = qm - Polynomial::monomial(1);
    std::vector<cplx> sols = roots(eq, seed);

    // deduplicate merged clusters, tracking multiplicities
    std::vector<cplx> uniq;
    std::vector<int> mult;
    for (const auto& s : sols) {
        bool seen = false;
        for (std::size_t u = 0; u < uniq.size(); ++u)
            if (std::abs(uniq[u] - s) < 1e-9) {
                ++mult[u];
                seen = true;
                break;
            }
        if (!seen) {
            uniq.push_back(s);
            mult.push_back(1);
        }
    }
    // a parabolic point is a multiplicity-m root of q^m(w) - w but a simple
    // root of its (m-1)-th derivative; refine there for full precision
    for (std::size_t u = 0; u < uniq.size(); ++u) {
        if (mult[u] < 2) continue;
        Polynomial d = eq;
        for (int k = 1; k < mult[u]; ++k) d = d.derivative();
        cplx x = uniq[u];
        for (int it = 0; it < 50; ++it) {
            auto [v, dv] = d.eval_jet(x);
            if (std::abs(dv) < 1e-300) break;
            cplx step = v / dv;
            x -= step;
            if (std::abs(step) < 1e-15 * std::max(1.0, std::abs(x))) break;
        }
        if (std::abs(x - uniq[u]) < 1e-6) uniq[u] = x;
    }

    std::vector<bool> used(uniq.size(), false);
    std::vector<PeriodicOrbit> orbits;
    auto nearest = [&](cplx x) -> std::size_t {
        std::size_t best = 0;
        double bd = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < uniq.size(); ++i) {
            double d = std::abs(uniq[i] - x);
            if (d < bd) { bd = d; best = i; }
        }
        return best;
    };

    for (std::size_t i = 0; i < uniq.size(); ++i) {
        if (used[i]) continue;
        PeriodicOrbit orb;
        std::size_t cur = i;
        for (int step = 0; step < m; ++step) {
            orb.points.push_back(uniq[cur]);
            used[cur] = true;
            std::size_t nxt = nearest(q(uniq[cur]));
            if (nxt == i) break;
            if (used[nxt] && nxt != i) break;  // fell onto an already-consumed orbit
            cur = nxt;
        }
        orb.period = int(orb.points.size());
        orb.multiplier = cycle_multiplier(q, orb.points.front(), orb.period);
        orb.classification = classify_multiplier(orb.multiplier);
        orbits.push_back(std::move(orb));
    }
    return orbits;
}

// critical points of q (roots of q'), deduplicated
inline std::vector<cplx> critical_points(const Polynomial& q, std::uint64_t seed = kDefaultSeed) {
    Polynomial d = q.derivative();
    if (d.degree() < 1) return {};  // affine maps have no finite critical point
    std::vector<cplx> cs = roots(d, seed);
    std::vector<cplx> uniq;
    for (const auto& c : cs) {
        bool seen = false;
        for (const auto& u : uniq)
            if (std::abs(u - c) < 1e-9) { seen = true; break; }
        if (!seen) uniq.push_back(c);
    }
    return uniq;
}

// forward orbits of all critical points, n steps, escaped orbits truncated
inline std::vector<cplx> postcritical_orbit(const Polynomial& q, int n_steps,
                                            std::uint64_t seed = kDefaultSeed) {
    double escape = 10.0 * q.root_radius_bound();
    std::vector<cplx> out;
    for (cplx c : critical_points(q, seed)) {
        cplx x = c;
        for (int k = 1; k <= n_steps; ++k) {
            x = q(x);
            if (std::abs(x) > escape) break;
            out.push_back(x);
        }
    }
    return out;
}

// true iff some iterate q^k(c), 1 <= k <= n_steps, of some critical point c
// comes within tol of w. A finite-orbit surrogate for membership in the
// postcritical set; a negative answer is evidence, not proof.
inline bool postcritical_test(const Polynomial& q, cplx w, int n_steps, double tol,
                              std::uint64_t seed = kDefaultSeed) {
    if (n_steps < 1) throw Error("postcritical_test: n_steps >= 1 required");
    double escape = 10.0 * std::max(q.root_radius_bound(), std::abs(w));
    for (cplx c : critical_points(q, seed)) {
        cplx x = c;
        for (int k = 1; k <= n_steps; ++k) {
            x = q(x);
            if (std::abs(x - w) <= tol) return true;
            if (std::abs(x) > escape) break;  // escaped, no hit
        }
    }
    return false;
}

// ---------------------------------------------------------------------------
// two-variable polynomials, dense table a[m][n] over z^m w^n
// ---------------------------------------------------------------------------

class BivariatePolynomial {
  public:
    BivariatePolynomial() : table_(1, std::vector<cplx>(1, cplx(0.0))) {}
    explicit BivariatePolynomial(std::vector<std::vector<cplx>> table) : table_(std::move(table)) {
        if (table_.empty()) table_.assign(1, std::vector<cplx>(1, cplx(0.0)));
        std::size_t w = 1;
        for (auto& row : table_) w = std::max(w, row.size());
        for (auto& row : table_) row.resize(w, cplx(0.0));
        trim();
    }

    static BivariatePolynomial constant(cplx v) {
        return BivariatePolynomial({{v}});
    }
    static BivariatePolynomial monomial(int mz, int mw, cplx coeff = cplx(1.0)) {
        std::vector<std::vector<cplx>> t(std::size_t(mz) + 1,
                                         std::vector<cplx>(std::size_t(mw) + 1, cplx(0.0)));
        t[std::size_t(mz)][std::size_t(mw)] = coeff;
        return BivariatePolynomial(std::move(t));
    }
    static BivariatePolynomial from_z(const Polynomial& p) {
        std::vector<std::vector<cplx>> t;
        for (const auto& c : p.coeffs()) t.push_back({c});
        return BivariatePolynomial(std::move(t));
    }
    static BivariatePolynomial from_w(const Polynomial& p) {
        return BivariatePolynomial({p.coeffs()});
    }

    int deg_z() const { return int(table_.size()) - 1; }
    int deg_w() const { return int(table_[0].size()) - 1; }
    const std::vector<std::vector<cplx>>& table() const { return table_; }

    cplx operator()(cplx z, cplx w) const {
        cplx acc(0.0);
        for (std::size_t m = table_.size(); m-- > 0;) {
            cplx row = table_[m].back();
            for (std::size_t n = table_[m].size() - 1; n-- > 0;) row = row * w + table_[m][n];
            acc = acc * z + row;
        }
        return acc;
    }

    BivariatePolynomial d_z() const {
        if (deg_z() < 1) return BivariatePolynomial();
        std::vector<std::vector<cplx>> t(table_.begin() + 1, table_.end());
        for (std::size_t m = 0; m < t.size(); ++m)
            for (auto& c : t[m]) c *= double(m + 1);
        return BivariatePolynomial(std::move(t));
    }
    BivariatePolynomial d_w() const {
        if (deg_w() < 1) return BivariatePolynomial();
        std::vector<std::vector<cplx>> t(table_.size());
        for (std::size_t m = 0; m < table_.size(); ++m) {
            t[m].assign(table_[m].size() - 1, cplx(0.0));
            for (std::size_t n = 1; n < table_[m].size(); ++n)
                t[m][n - 1] = double(n) * table_[m][n];
        }
        return BivariatePolynomial(std::move(t));
    }

    BivariatePolynomial operator+(const BivariatePolynomial& o) const {
        std::size_t mz = std::max(table_.size(), o.table_.size());
        std::size_t mw = std::max(table_[0].size(), o.table_[0].size());
        std::vector<std::vector<cplx>> t(mz, std::vector<cplx>(mw, cplx(0.0)));
        for (std::size_t m = 0; m < table_.size(); ++m)
            for (std::size_t n = 0; n < table_[m].size(); ++n) t[m][n] += table_[m][n];
        for (std::size_t m = 0; m < o.table_.size(); ++m)
            for (std::size_t n = 0; n < o.table_[m].size(); ++n) t[m][n] += o.table_[m][n];
        return BivariatePolynomial(std::move(t));
    }
    BivariatePolynomial operator-(const BivariatePolynomial& o) const {
        return *this + (o * cplx(-1.0));
    }
    BivariatePolynomial operator*(const BivariatePolynomial& o) const {
        std::vector<std::vector<cplx>> t(
            table_.size() + o.table_.size() - 1,
            std::vector<cplx>(table_[0].size() + o.table_[0].size() - 1, cplx(0.0)));
        for (std::size_t m = 0; m < table_.size(); ++m)
            for (std::size_t n = 0; n < table_[m].size(); ++n) {
                if (table_[m][n] == cplx(0.0)) continue;
                for (std::size_t a = 0; a < o.table_.size(); ++a)
                    for (std::size_t b = 0; b < o.table_[a].size(); ++b)
                        t[m + a][n + b] += table_[m][n] * o.table_[a][b];
            }
        return BivariatePolynomial(std::move(t));
    }
    BivariatePolynomial operator*(cplx s) const {
        auto t = table_;
        for (auto& row : t)
            for (auto& c : row) c *= s;
        return BivariatePolynomial(std::move(t));
    }

  private:
    std::vector<std::vector<cplx>> table_;
    void trim() {
        auto row_zero = [](const std::vector<cplx>& r) {
            for (const auto& c : r)
                if (c != cplx(0.0)) return false;
            return true;
        };
        while (table_.size() > 1 && row_zero(table_.back())) table_.pop_back();
        std::size_t w = table_[0].size();
        while (w > 1) {
            bool col_zero = true;
            for (const auto& r : table_)
                if (r[w - 1] != cplx(0.0)) { col_zero = false; break; }
            if (!col_zero) break;
            --w;
        }
        for (auto& r : table_) r.resize(w);
    }
};

}  // namespace blenderlab
