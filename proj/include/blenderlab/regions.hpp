#pragma once

// Planar regions with sampled boundaries, signed membership margins,
// covering certificates, and the triangle covering constants used by all
// block constructions.

#include <memory>

#include "blenderlab/certificate.hpp"
#include "blenderlab/common.hpp"

namespace blenderlab {

class Region {
  public:
    enum class Kind { disc, annulus, polygon, runion, scaled, complement_in_disc, empty };

    Region() : kind_(Kind::empty) {}

    static Region disc(cplx center, double radius) {
        Region r;
        r.kind_ = Kind::disc;
        r.center_ = center;
        r.r_out_ = radius;
        return r;
    }
    static Region annulus(cplx center, double r_in, double r_out) {
        Region r;
        r.kind_ = Kind::annulus;
        r.center_ = center;
        r.r_in_ = r_in;
        r.r_out_ = r_out;
        return r;
    }
    // closed, non-self-intersecting boundary polyline; last point joins first
    static Region polygon(std::vector<cplx> pts) {
        Region r;
        r.kind_ = Kind::polygon;
        r.pts_ = std::move(pts);
        return r;
    }
    static Region runion(std::vector<Region> members) {
        Region r;
        r.kind_ = Kind::runion;
        for (auto& m : members) r.members_.push_back(std::make_shared<Region>(std::move(m)));
        return r;
    }
    static Region scaled(Region inner, cplx factor) {
        Region r;
        r.kind_ = Kind::scaled;
        r.factor_ = factor;
        r.members_.push_back(std::make_shared<Region>(std::move(inner)));
        return r;
    }
    static Region complement_in_disc(cplx center, double radius, Region inner) {
        Region r;
        r.kind_ = Kind::complement_in_disc;
        r.center_ = center;
        r.r_out_ = radius;
        r.members_.push_back(std::make_shared<Region>(std::move(inner)));
        return r;
    }

    Kind kind() const { return kind_; }
    cplx center() const { return center_; }
    double radius() const { return r_out_; }
    double inner_radius() const { return r_in_; }
    const std::vector<cplx>& points() const { return pts_; }

    // signed distance to the boundary: positive inside, negative outside.
    // Exact for discs and annuli; against the sampled polyline for polygons.
    // For unions the inside value is a certified lower bound (a disc of that
    // radius around the point fits in one member).
    double margin(cplx x) const {
        switch (kind_) {
            case Kind::disc:
                return r_out_ - std::abs(x - center_);
            case Kind::annulus: {
                double d = std::abs(x - center_);
                return std::min(d - r_in_, r_out_ - d);
            }
            case Kind::polygon: {
                double d = polyline_distance(x);
                return inside_polygon(x) ? d : -d;
            }
            case Kind::runion: {
                double best = -std::numeric_limits<double>::infinity();
                for (const auto& m : members_) best = std::max(best, m->margin(x));
                return best;
            }
            case Kind::scaled:
                return std::abs(factor_) * members_[0]->margin(x / factor_);
            case Kind::complement_in_disc:
                return std::min(r_out_ - std::abs(x - center_), -members_[0]->margin(x));
            case Kind::empty:
                return -std::numeric_limits<double>::infinity();
        }
        return 0.0;
    }

    bool contains(cplx x) const { return margin(x) >= 0.0; }

    // boundary samples; n is a per-component hint
    std::vector<cplx> boundary(int n) const {
        std::vector<cplx> out;
        switch (kind_) {
            case Kind::disc:
                for (int k = 0; k < n; ++k) {
                    double t = 2.0 * kPi * k / n;
                    out.push_back(center_ + r_out_ * cplx(std::cos(t), std::sin(t)));
                }
                break;
            case Kind::annulus:
                for (int k = 0; k < n; ++k) {
                    double t = 2.0 * kPi * k / n;
                    cplx u(std::cos(t), std::sin(t));
                    out.push_back(center_ + r_out_ * u);
                    out.push_back(center_ + r_in_ * u);
                }
                break;
            case Kind::polygon: {
                int stride = std::max<int>(1, int(pts_.size()) / std::max(n, 1));
                for (std::size_t i = 0; i < pts_.size(); i += std::size_t(stride))
                    out.push_back(pts_[i]);
                break;
            }
            case Kind::runion:
                for (const auto& m : members_) {
                    auto b = m->boundary(n);
                    out.insert(out.end(), b.begin(), b.end());
                }
                break;
            case Kind::scaled:
                for (cplx p : members_[0]->boundary(n)) out.push_back(factor_ * p);
                break;
            case Kind::complement_in_disc: {
                for (int k = 0; k < n; ++k) {
                    double t = 2.0 * kPi * k / n;
                    out.push_back(center_ + r_out_ * cplx(std::cos(t), std::sin(t)));
                }
                auto b = members_[0]->boundary(n);
                out.insert(out.end(), b.begin(), b.end());
                break;
            }
            case Kind::empty:
                break;
        }
        return out;
    }

    std::array<double, 4> bbox() const {  // {x_lo, x_hi, y_lo, y_hi}
        switch (kind_) {
            case Kind::disc:
            case Kind::annulus:
            case Kind::complement_in_disc:
                return {center_.real() - r_out_, center_.real() + r_out_,
                        center_.imag() - r_out_, center_.imag() + r_out_};
            default: {
                auto b = boundary(64);
                if (b.empty()) return {0, 0, 0, 0};
                double xl = b[0].real(), xh = xl, yl = b[0].imag(), yh = yl;
                for (cplx p : b) {
                    xl = std::min(xl, p.real());
                    xh = std::max(xh, p.real());
                    yl = std::min(yl, p.imag());
                    yh = std::max(yh, p.imag());
                }
                return {xl, xh, yl, yh};
            }
        }
    }

    // exact transport under z -> a z + b (affine maps preserve every kind)
    Region affine(cplx a, cplx b) const {
        switch (kind_) {
            case Kind::disc:
                return disc(a * center_ + b, std::abs(a) * r_out_);
            case Kind::annulus:
                return annulus(a * center_ + b, std::abs(a) * r_in_, std::abs(a) * r_out_);
            case Kind::polygon: {
                std::vector<cplx> p;
                p.reserve(pts_.size());
                for (cplx q : pts_) p.push_back(a * q + b);
                return polygon(std::move(p));
            }
            case Kind::runion: {
                std::vector<Region> ms;
                for (const auto& m : members_) ms.push_back(m->affine(a, b));
                return runion(std::move(ms));
            }
            case Kind::scaled:
                return members_[0]->affine(a * factor_, b);
            case Kind::complement_in_disc: {
                Region r;
                r.kind_ = Kind::complement_in_disc;
                r.center_ = a * center_ + b;
                r.r_out_ = std::abs(a) * r_out_;
                r.members_.push_back(std::make_shared<Region>(members_[0]->affine(a, b)));
                return r;
            }
            case Kind::empty:
                return Region();
        }
        return Region();
    }

    double diameter() const {
        auto b = boundary(128);
        double d = 0;
        for (std::size_t i = 0; i < b.size(); ++i)
            for (std::size_t j = i + 1; j < b.size(); ++j) d = std::max(d, std::abs(b[i] - b[j]));
        return d;
    }

    json to_json() const {
        switch (kind_) {
            case Kind::disc:
                return json{{"kind", "disc"}, {"center", cplx_to_json(center_)}, {"radius", r_out_}};
            case Kind::annulus:
                return json{{"kind", "annulus"},
                            {"center", cplx_to_json(center_)},
                            {"r_in", r_in_},
                            {"r_out", r_out_}};
            case Kind::polygon: {
                json pts = json::array();
                for (cplx p : pts_) pts.push_back(cplx_to_json(p));
                return json{{"kind", "polygon"}, {"points", pts}};
            }
            case Kind::runion: {
                json ms = json::array();
                for (const auto& m : members_) ms.push_back(m->to_json());
                return json{{"kind", "union"}, {"members", ms}};
            }
            case Kind::scaled:
                return json{{"kind", "scaled"},
                            {"factor", cplx_to_json(factor_)},
                            {"inner", members_[0]->to_json()}};
            case Kind::complement_in_disc:
                return json{{"kind", "complement_in_disc"},
                            {"center", cplx_to_json(center_)},
                            {"radius", r_out_},
                            {"inner", members_[0]->to_json()}};
            case Kind::empty:
                return json{{"kind", "empty"}};
        }
        return json{};
    }

  private:
    Kind kind_ = Kind::empty;
    cplx center_{0.0};
    double r_in_ = 0.0, r_out_ = 0.0;
    cplx factor_{1.0};
    std::vector<cplx> pts_;
    std::vector<std::shared_ptr<Region>> members_;

    bool inside_polygon(cplx x) const {
        // even-odd crossing rule
        bool in = false;
        std::size_t n = pts_.size();
        for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
            double yi = pts_[i].imag(), yj = pts_[j].imag();
            double xi = pts_[i].real(), xj = pts_[j].real();
            if ((yi > x.imag()) != (yj > x.imag())) {
                double t = (x.imag() - yj) / (yi - yj);
                if (x.real() < xj + t * (xi - xj)) in = !in;
            }
        }
        return in;
    }

    double polyline_distance(cplx x) const {
        double best = std::numeric_limits<double>::infinity();
        std::size_t n = pts_.size();
        for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
            cplx a = pts_[j], b = pts_[i];
            cplx ab = b - a;
            double len2 = std::norm(ab);
            double t = len2 > 0 ? std::clamp(((x - a) * std::conj(ab)).real() / len2, 0.0, 1.0) : 0.0;
            best = std::min(best, std::abs(x - (a + t * ab)));
        }
        return best;
    }
};

inline double membership_margin(const Region& r, cplx x) { return r.margin(x); }

struct ProductBlock {
    Region horizontal;
    Region vertical;
    int label = 0;

    double margin(cplx z, cplx w) const {
        return std::min(horizontal.margin(z), vertical.margin(w));
    }
};

struct ConeParam {
    double delta = 0.0;  // |a| < delta |b| cone half-aperture
};

// ---------------------------------------------------------------------------
// triangle covering constants.
// For three non-aligned c_j with c_1+c_2+c_3 = 0 the maps
// phi_j(z) = rho z + eps0 c_j cover the closed unit disc for every
// 1-alpha0 <= |rho| <= 1+alpha0, and the pieces H_j below satisfy
// closure(phi_j(H_j)) in D and closure(phi_j(H_j/3)) in D/3.
// ---------------------------------------------------------------------------

struct CoveringConstants {
    double eps0 = 0.0;
    double alpha0 = 0.0;
    double eta = 0.0;
    std::array<cplx, 3> c{};
    std::array<Region, 3> h_regions;  // built for rho_h below; rotate on rho change
    cplx rho_h{1.0};
    double cover_margin = 0.0;    // disc covering margin at |rho| = 1 - alpha0
    double h_margin = 0.0;        // closure(phi_j(H_j)) in D margin
    double h_third_margin = 0.0;  // closure(phi_j(H_j/3)) in D/3 margin
};

// H_j = (D/2) union {z in D : |arg(-z rho / c_j)| < pi/2 - eta}
inline Region make_h_region(cplx c_j, double eta, cplx rho, int arc_samples = 512) {
    double dir = std::arg(c_j) - std::arg(rho) + kPi;
    double half = kPi / 2.0 - eta;
    std::vector<cplx> sector;
    sector.push_back(cplx(0.0));
    for (int k = 0; k <= arc_samples; ++k) {
        double t = dir - half + 2.0 * half * k / arc_samples;
        sector.push_back(cplx(std::cos(t), std::sin(t)));
    }
    return Region::runion({Region::disc(cplx(0.0), 0.5), Region::polygon(std::move(sector))});
}

inline std::array<Region, 3> make_h_regions(const std::array<cplx, 3>& c, double eta, cplx rho) {
    return {make_h_region(c[0], eta, rho), make_h_region(c[1], eta, rho),
            make_h_region(c[2], eta, rho)};
}

namespace detail {

// min over the closed unit disc of max_j (r - |z - a_j|), i.e. the covering
// margin of D by the three discs D(a_j, r). The minimum sits on the unit
// circle or at the point equidistant from the three centers; both are
// scanned and refined.
inline double disc_cover_margin(const std::array<cplx, 3>& a, double r) {
    auto val = [&](cplx z) {
        double best = -std::numeric_limits<double>::infinity();
        for (const auto& aj : a) best = std::max(best, r - std::abs(z - aj));
        return best;
    };
    auto circle = [&](double th) { return val(cplx(std::cos(th), std::sin(th))); };

    const int n = 4096;
    double worst = std::numeric_limits<double>::infinity();
    std::vector<double> locals;
    std::vector<double> g(n);
    for (int k = 0; k < n; ++k) g[std::size_t(k)] = circle(2.0 * kPi * k / n);
    for (int k = 0; k < n; ++k) {
        double prev = g[std::size_t((k + n - 1) % n)], nxt = g[std::size_t((k + 1) % n)];
        if (g[std::size_t(k)] <= prev && g[std::size_t(k)] <= nxt)
            locals.push_back(2.0 * kPi * k / n);
    }
    double h = 2.0 * kPi / n;
    for (double th0 : locals) {
        double lo = th0 - h, hi = th0 + h;
        for (int it = 0; it < 200; ++it) {  // golden section
            double m1 = lo + 0.381966011250105 * (hi - lo);
            double m2 = hi - 0.381966011250105 * (hi - lo);
            if (circle(m1) < circle(m2)) hi = m2; else lo = m1;
            if (hi - lo < 1e-14) break;
        }
        worst = std::min(worst, circle(0.5 * (lo + hi)));
    }
    // equidistant point of the three centers (circumcenter), if inside
    cplx p = a[0], q = a[1], s = a[2];
    double d = 2.0 * ((p.real() - s.real()) * (q.imag() - s.imag()) -
                      (q.real() - s.real()) * (p.imag() - s.imag()));
    if (std::abs(d) > 1e-14) {
        double pu = std::norm(p) - std::norm(s), qu = std::norm(q) - std::norm(s);
        double ux = (pu * (q.imag() - s.imag()) - qu * (p.imag() - s.imag())) / d;
        double uy = (qu * (p.real() - s.real()) - pu * (q.real() - s.real())) / d;
        cplx cc(ux, uy);
        if (std::abs(cc) <= 1.0) worst = std::min(worst, val(cc));
    }
    worst = std::min(worst, val(cplx(0.0)));
    return worst;
}

// sup |rho z + e c_j| over closure(H_j): attained at a sector corner or on
// the half disc; closed form from the sector geometry
inline double h_image_sup(double abs_c, double e, double abs_rho, double eta) {
    double corner = std::sqrt(sq(abs_rho) + sq(e * abs_c) -
                              2.0 * e * abs_c * abs_rho * std::cos(kPi / 2.0 - eta));
    double half_disc = abs_rho / 2.0 + e * abs_c;
    return std::max(corner, half_disc);
}

}  // namespace detail

// The search returns the largest grid-certified eps0 with a compatible
// alpha0. eps0 runs over {0.50, 0.45, ..., 0.05, 0.01} in units of the
// triangle scale max|c_j|; alpha0 over {eps0/4, eps0/8, eps0/16}; eta over
// {pi/12, pi/24}.
inline CoveringConstants triangle_cover(cplx c1, cplx c2, cplx c3, double margin_floor = 1e-3) {
    std::array<cplx, 3> c{c1, c2, c3};
    double scale = std::max({std::abs(c1), std::abs(c2), std::abs(c3)});
    if (scale == 0.0) throw Collinear("triangle_cover: zero triangle");
    if (std::abs(c1 + c2 + c3) > 1e-10 * std::max(1.0, scale))
        throw SumNonzero("triangle_cover: c1+c2+c3 must vanish");
    double area = 0.5 * std::abs(((c2 - c1) * std::conj(c3 - c1)).imag());
    if (area <= 1e-6 * std::max(1.0, scale * scale))
        throw Collinear("triangle_cover: degenerate triangle");

    std::vector<double> eps_grid;
    for (double t = 0.50; t > 0.049; t -= 0.05) eps_grid.push_back(t);
    eps_grid.push_back(0.01);

    for (double t : eps_grid) {
        double e = t / scale;
        for (double alpha : {e * scale / 4.0, e * scale / 8.0, e * scale / 16.0}) {
            for (double eta : {kPi / 12.0, kPi / 24.0}) {
                std::array<cplx, 3> centers{e * c[0], e * c[1], e * c[2]};
                double cm_lo = detail::disc_cover_margin(centers, 1.0 - alpha);
                double cm_hi = detail::disc_cover_margin(centers, 1.0 + alpha);
                if (std::min(cm_lo, cm_hi) < margin_floor) continue;

                double hm = std::numeric_limits<double>::infinity();
                double hm3 = std::numeric_limits<double>::infinity();
                bool ok = true;
                for (const auto& cj : c) {
                    double s1 = detail::h_image_sup(std::abs(cj), e, 1.0 + alpha, eta);
                    double s3 = detail::h_image_sup(std::abs(cj), 3.0 * e, 1.0 + alpha, eta) / 3.0;
                    hm = std::min(hm, 1.0 - s1);
                    hm3 = std::min(hm3, 1.0 / 3.0 - s3);
                    if (1.0 - s1 < margin_floor || 1.0 / 3.0 - s3 < margin_floor) ok = false;
                }
                if (!ok) continue;

                // D = H_1 u H_2 u H_3 must hold; the sector gaps close when
                // eta <= pi/6 and the directions span, checked on a grid
                CoveringConstants cc;
                cc.eps0 = e;
                cc.alpha0 = alpha;
                cc.eta = eta;
                cc.c = c;
                cc.rho_h = cplx(1.0 + alpha);
                cc.h_regions = make_h_regions(c, eta, cc.rho_h);
                bool covers = true;
                for (int ri = 1; ri <= 8 && covers; ++ri)
                    for (int k = 0; k < 64 && covers; ++k) {
                        double th = 2.0 * kPi * k / 64.0;
                        cplx z = (ri / 8.0) * 0.999 * cplx(std::cos(th), std::sin(th));
                        bool in = false;
                        for (const auto& H : cc.h_regions) in = in || H.contains(z);
                        covers = in;
                    }
                if (!covers) continue;

                cc.cover_margin = cm_lo;
                cc.h_margin = hm;
                cc.h_third_margin = hm3;
                return cc;
            }
        }
    }
    throw SearchFailed("triangle_cover: no certified constants on the search grid");
}

// grid covering certificate: every sample of the target must sit in some
// image with margin above the floor
inline Certificate covering_check(const Region& target, const std::vector<Region>& images,
                                  int grid_n, double margin_floor = 1e-3,
                                  std::uint64_t seed = kDefaultSeed) {
    if (grid_n < 16) throw Error("covering_check: grid_n >= 16 required");
    Certificate cert = Certificate::make("covering_check", seed);
    auto bb = target.bbox();
    MarginTracker tracker;

    std::vector<cplx> pts;
    for (int i = 0; i < grid_n; ++i)
        for (int j = 0; j < grid_n; ++j) {
            cplx z(bb[0] + (bb[1] - bb[0]) * (i + 0.5) / grid_n,
                   bb[2] + (bb[3] - bb[2]) * (j + 0.5) / grid_n);
            if (target.margin(z) >= 0.0) pts.push_back(z);
        }
    auto tb = target.boundary(2 * grid_n);
    pts.insert(pts.end(), tb.begin(), tb.end());

    std::vector<double> margins(pts.size());
    parallel_for(pts.size(), [&](std::size_t k) {
        double best = -std::numeric_limits<double>::infinity();
        for (const auto& im : images) best = std::max(best, im.margin(pts[k]));
        margins[k] = best;
    });
    for (std::size_t k = 0; k < pts.size(); ++k)
        tracker.observe(margins[k], {pts[k].real(), pts[k].imag()});

    tracker.commit(cert);
    cert.params["grid_n"] = grid_n;
    cert.finalize(margin_floor);
    return cert;
}

}  // namespace blenderlab
