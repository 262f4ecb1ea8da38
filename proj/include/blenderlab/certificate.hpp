#pragma once

// Certificates: the shared outcome record for every sampled verification.
// A check either passes with a quantified worst margin or fails with the
// violating sample attached. Certificates nest; a parent passes only if all
// of its sub-certificates do.

#include <json.hpp>

#include "blenderlab/common.hpp"
#include "blenderlab/poly.hpp"

namespace blenderlab {

using json = nlohmann::json;

struct RunConfig {
    double margin_floor = 1e-3;
    int grid_n = 256;
    std::uint64_t seed = kDefaultSeed;
    int degree_cap = 4096;
    std::string out_dir = ".";

    json to_json() const {
        return json{{"margin_floor", margin_floor},
                    {"grid_n", grid_n},
                    {"seed", seed},
                    {"degree_cap", degree_cap},
                    {"out_dir", out_dir}};
    }
    static RunConfig from_json(const json& j) {
        RunConfig c;
        c.margin_floor = j.at("margin_floor").get<double>();
        c.grid_n = j.at("grid_n").get<int>();
        c.seed = j.at("seed").get<std::uint64_t>();
        c.degree_cap = j.at("degree_cap").get<int>();
        c.out_dir = j.at("out_dir").get<std::string>();
        return c;
    }
};

struct Certificate {
    std::string check_name;
    bool pass = false;
    double worst_margin = 0.0;
    std::vector<double> worst_point;  // coordinates of the worst sample
    long long samples = 0;
    json params = json::object();
    std::vector<Certificate> sub_certificates;
    std::string tool_version = kToolVersion;
    std::uint64_t seed = kDefaultSeed;

    static Certificate make(std::string name, std::uint64_t seed_ = kDefaultSeed) {
        Certificate c;
        c.check_name = std::move(name);
        c.seed = seed_;
        return c;
    }

    void add_sub(Certificate c) { sub_certificates.push_back(std::move(c)); }

    // pass = all subs pass (and own margin clears the floor when samples > 0)
    void finalize(double margin_floor) {
        pass = true;
        if (samples > 0 && worst_margin < margin_floor) pass = false;
        double wm = (samples > 0) ? worst_margin : std::numeric_limits<double>::infinity();
        for (const auto& s : sub_certificates) {
            pass = pass && s.pass;
            wm = std::min(wm, s.worst_margin);
        }
        if (samples == 0 && !sub_certificates.empty()) worst_margin = wm;
        params["margin_floor"] = margin_floor;
    }

    json to_json() const {
        json subs = json::array();
        for (const auto& s : sub_certificates) subs.push_back(s.to_json());
        return json{{"check_name", check_name}, {"pass", pass},
                    {"worst_margin", worst_margin}, {"worst_point", worst_point},
                    {"samples", samples}, {"params", params},
                    {"sub_certificates", subs}, {"tool_version", tool_version},
                    {"seed", seed}};
    }
};

// worst-sample tracker with deterministic tie-breaking (first index wins)
struct MarginTracker {
    double worst = std::numeric_limits<double>::infinity();
    std::vector<double> worst_point;
    long long count = 0;

    void observe(double margin, std::initializer_list<double> point) {
        ++count;
        if (margin < worst) {
            worst = margin;
            worst_point.assign(point);
        }
    }
    void commit(Certificate& c) const {
        c.worst_margin = (count > 0) ? worst : 0.0;
        c.worst_point = worst_point;
        c.samples = count;
    }
};

inline json cplx_to_json(cplx z) { return json::array({z.real(), z.imag()}); }
inline cplx cplx_from_json(const json& j) { return cplx(j.at(0).get<double>(), j.at(1).get<double>()); }

// polynomials serialize as arrays of [re, im] pairs, ascending degree
inline json poly_to_json(const Polynomial& p) {
    json a = json::array();
    for (const auto& c : p.coeffs()) a.push_back(cplx_to_json(c));
    return a;
}
inline Polynomial poly_from_json(const json& j) {
    std::vector<cplx> c;
    for (const auto& e : j) c.push_back(cplx_from_json(e));
    return Polynomial(std::move(c));
}

}  // namespace blenderlab
