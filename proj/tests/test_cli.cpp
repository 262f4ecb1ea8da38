#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "blenderlab/gallery.hpp"
#include "blenderlab/parse.hpp"

using namespace blenderlab;

namespace {

// minimal validator for the shipped schema subset: type, required, properties,
// items and the self reference
bool validate_against(const json& schema, const json& doc, const json& root) {
    if (schema.contains("$ref")) {
        if (schema["$ref"] == "#") return validate_against(root, doc, root);
        return false;
    }
    if (schema.contains("type")) {
        std::string t = schema["type"].get<std::string>();
        if (t == "object" && !doc.is_object()) return false;
        if (t == "array" && !doc.is_array()) return false;
        if (t == "string" && !doc.is_string()) return false;
        if (t == "boolean" && !doc.is_boolean()) return false;
        if (t == "number" && !doc.is_number()) return false;
        if (t == "integer" && !doc.is_number_integer() && !doc.is_number_unsigned()) return false;
    }
    if (schema.contains("required"))
        for (const auto& key : schema["required"])
            if (!doc.contains(key.get<std::string>())) return false;
    if (schema.contains("properties") && doc.is_object())
        for (auto it = schema["properties"].begin(); it != schema["properties"].end(); ++it)
            if (doc.contains(it.key()) && !validate_against(it.value(), doc[it.key()], root))
                return false;
    if (schema.contains("items") && doc.is_array())
        for (const auto& item : doc)
            if (!validate_against(schema["items"], item, root)) return false;
    return true;
}

json load_schema() {
    std::ifstream f(BLENDERLAB_SCHEMA_PATH);
    REQUIRE(f.good());
    json schema;
    f >> schema;
    return schema;
}

int run_cli(const std::string& args) {
    std::string cmd = std::string(BLENDERLAB_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("run config round trips exactly") {
    RunConfig rc;
    rc.margin_floor = 2.5e-4;
    rc.grid_n = 321;
    rc.seed = 0xB1E2DE5ull;
    rc.degree_cap = 2048;
    rc.out_dir = "/tmp/somewhere";
    RunConfig back = RunConfig::from_json(rc.to_json());
    CHECK(back.margin_floor == rc.margin_floor);
    CHECK(back.grid_n == rc.grid_n);
    CHECK(back.seed == rc.seed);
    CHECK(back.degree_cap == rc.degree_cap);
    CHECK(back.out_dir == rc.out_dir);
}

TEST_CASE("certificates validate against the shipped schema") {
    json schema = load_schema();

    Certificate leaf = Certificate::make("leaf");
    leaf.worst_margin = 0.25;
    leaf.worst_point = {0.1, -0.2};
    leaf.samples = 7;
    leaf.finalize(1e-3);
    Certificate root = Certificate::make("root");
    root.add_sub(leaf);
    root.finalize(1e-3);
    CHECK(validate_against(schema, root.to_json(), schema));

    // a real certificate from the covering machinery
    Certificate cover = covering_check(Region::disc(cplx(0.0), 1.0),
                                       {Region::disc(cplx(0.0), 2.0)}, 32);
    CHECK(validate_against(schema, cover.to_json(), schema));

    json broken = root.to_json();
    broken.erase("worst_margin");
    CHECK_FALSE(validate_against(schema, broken, schema));
}

TEST_CASE("certificate pass implies margin above the floor and sub conjunction") {
    Certificate ok = Certificate::make("a");
    ok.worst_margin = 0.5;
    ok.samples = 3;
    Certificate bad = Certificate::make("b");
    bad.worst_margin = 1e-9;
    bad.samples = 3;
    Certificate parent = Certificate::make("parent");
    parent.add_sub(ok);
    parent.add_sub(bad);
    for (auto& s : parent.sub_certificates) s.finalize(1e-3);
    parent.finalize(1e-3);
    CHECK(parent.sub_certificates[0].pass);
    CHECK_FALSE(parent.sub_certificates[1].pass);
    CHECK_FALSE(parent.pass);
}

TEST_CASE("identical configurations serialize identically") {
    auto make_doc = [] {
        Certificate c = covering_check(Region::disc(cplx(0.2, 0.1), 1.0),
                                       {Region::disc(cplx(0.0), 1.7)}, 48);
        return c.to_json().dump();
    };
    CHECK(make_doc() == make_doc());
}

TEST_CASE("cli: periodic census and exit codes") {
    CHECK(run_cli("periodic --q w^2 --m 1") == 0);
    CHECK(run_cli("periodic --q \"w^^2\" --m 1") == 2);  // parse error
    CHECK(run_cli("periodic --q w^7 --m 5") == 3);       // degree cap
    CHECK(run_cli("definitely-not-a-command") == 2);
}

TEST_CASE("cli: json report for the seven fixed points") {
    std::string out = "/tmp/blenderlab_test_periodic.json";
    std::remove(out.c_str());
    REQUIRE(run_cli("periodic --q w^7 --m 1 --json " + out) == 0);
    std::ifstream f(out);
    REQUIRE(f.good());
    json doc;
    f >> doc;
    CHECK(doc["orbits"].size() == 7);
    int repelling = 0;
    for (const auto& orb : doc["orbits"])
        if (orb["class"] == "repelling") ++repelling;
    CHECK(repelling == 6);
}

TEST_CASE("cli: render writes a deterministic ppm") {
    std::string out1 = "/tmp/blenderlab_render1.ppm", out2 = "/tmp/blenderlab_render2.ppm";
    REQUIRE(run_cli("render --mode escape --q w^4 --res 64 --iters 30 --file " + out1) == 0);
    REQUIRE(run_cli("render --mode escape --q w^4 --res 64 --iters 30 --file " + out2) == 0);
    auto slurp = [](const std::string& p) {
        std::ifstream f(p, std::ios::binary);
        std::ostringstream ss;
        ss << f.rdbuf();
        return ss.str();
    };
    CHECK(slurp(out1) == slurp(out2));
    CHECK(run_cli("render --mode escape --q w^4 --res 0 --file /tmp/x.ppm") == 2);
    CHECK(run_cli("render --mode escape --q w^4 --res 32 --file /nonexistent_dir_xyz/x.ppm") == 5);
}

TEST_CASE("cli: wrong regime surfaces as a search failure") {
    CHECK(run_cli("theorem41 --family lambda_z_plus_z2 --q w^2 "
                  "--lambda \"(-0.5+0.8660254037844386i)\" --regime repelling --out /tmp") == 4);
    // an explicit horizontal multiplier on the wrong side of the circle
    CHECK(run_cli("blender --q w^2 --family lambda_z_plus_z2 --regime saddle "
                  "--rho 1.5 --out /tmp/blenderlab_cli_test") == 4);
}

TEST_CASE("cli: model self-test certifies and writes its witness") {
    std::string dir = "/tmp/blenderlab_cli_model";
    REQUIRE(run_cli("blender --model --l-range 1:4 --out " + dir) == 0);
    std::ifstream f(dir + "/model_witness.json");
    REQUIRE(f.good());
    json w;
    f >> w;
    CHECK(w["orbit"].size() == 51);
    CHECK(w["worst_block_margin"].get<double>() >= 0.0);

    // the embedded certificate tree validates against the shipped schema
    std::ifstream fc(dir + "/model_certificate.json");
    REQUIRE(fc.good());
    json doc;
    fc >> doc;
    json schema = load_schema();
    CHECK(validate_against(schema, doc["certificate"], schema));
    CHECK(doc["blocks"].size() == 3);
}

TEST_CASE("polynomial json round trip in ascending degree") {
    Polynomial p({cplx(0.5, -1.0), cplx(0.0), cplx(2.0, 0.25)});
    json j = poly_to_json(p);
    REQUIRE(j.is_array());
    CHECK(j.size() == 3);
    CHECK(j[0][0].get<double>() == 0.5);
    CHECK(j[0][1].get<double>() == -1.0);
    Polynomial back = poly_from_json(j);
    REQUIRE(back.degree() == p.degree());
    for (int i = 0; i <= p.degree(); ++i)
        CHECK(back.coeffs()[std::size_t(i)] == p.coeffs()[std::size_t(i)]);
}

TEST_CASE("graph csv export carries one row per node") {
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
    VerticalNeighborhoods nb = build_vertical_neighborhoods(q, orbits, 1);
    VerticalGraph g = constant_graph(nb, 0, cplx(0.25, -0.5));
    std::string csv = graph_to_csv(g);
    std::size_t rows = std::count(csv.begin(), csv.end(), '\n');
    CHECK(rows == g.nodes_w.size() + 1);  // header + nodes
    CHECK(csv.rfind("w_re,w_im,sigma_re,sigma_im", 0) == 0);
}

TEST_CASE("shipped parameter file matches the built defaults") {
    std::ifstream f(BLENDERLAB_PARAMS_PATH);
    REQUIRE(f.good());
    json p;
    f >> p;

    Attractor att = attractor_build();
    CHECK(p["attractor"]["l"].get<int>() == att.params.l);
    CHECK(p["attractor"]["R"].get<double>() == att.params.R);
    CHECK(p["attractor"]["N"].get<int>() == att.params.N);
    CHECK(p["attractor"]["lambda"].get<double>() == att.params.lambda);

    HenonMap hm = henon_standard_example();
    cplx kp = cplx_from_json(p["henon"]["p_plus_constant"]);
    cplx km = cplx_from_json(p["henon"]["p_minus_constant"]);
    CHECK(std::abs(kp - hm.p_plus.coeffs()[0]) < 1e-12);
    CHECK(std::abs(km - hm.p_minus.coeffs()[0]) < 1e-12);
}
