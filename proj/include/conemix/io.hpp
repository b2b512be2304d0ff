#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <sstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "conemix/classify.hpp"
#include "conemix/cones.hpp"
#include "conemix/maps.hpp"

namespace conemix {

using Json = nlohmann::ordered_json;

inline constexpr const char* tool_version = "0.1.0";

/// A numeric entry of a problem file. Integers and "p/q" strings are rational
/// literals; JSON numbers with a fraction or exponent are float literals,
/// read exactly from their shortest decimal form when rational mode is forced.
struct Literal {
    Rational exact;
    double value = 0.0;
    bool rational_literal = true;

    bool operator==(const Literal& o) const {
        return exact == o.exact && value == o.value && rational_literal == o.rational_literal;
    }
};

using LiteralRows = std::vector<std::vector<Literal>>;

struct ConeNode {
    std::string type;  // orthant | psd | polyhedral | tensor
    std::size_t dim = 0;
    std::size_t hdim = 0;
    LiteralRows generators;
    std::shared_ptr<ConeNode> left, right;

    bool operator==(const ConeNode& o) const {
        auto same = [](const std::shared_ptr<ConeNode>& a, const std::shared_ptr<ConeNode>& b) {
            return (!a && !b) || (a && b && *a == *b);
        };
        return type == o.type && dim == o.dim && hdim == o.hdim && generators == o.generators && same(left, o.left) &&
               same(right, o.right);
    }
};

struct KrausNode {
    std::vector<std::vector<double>> re, im;
    bool operator==(const KrausNode&) const = default;
};

struct MapNode {
    std::string type;  // matrix | stochastic | kraus
    LiteralRows data;
    std::vector<KrausNode> ops;
    bool operator==(const MapNode&) const = default;
};

struct ProblemFile {
    ConeNode cone;
    MapNode map;
    std::optional<std::vector<Literal>> unit;
    std::optional<std::string> mode;  // rational | float
    std::optional<Tolerances> tolerances;

    bool operator==(const ProblemFile&) const = default;
};

namespace detail {

[[noreturn]] inline void schema(const std::string& path, const std::string& what) {
    throw Error(ErrorCode::Schema, (path.empty() ? std::string("/") : path) + ": " + what);
}

inline const Json& member(const Json& j, const std::string& path, const char* key) {
    if (!j.is_object()) schema(path, "expected an object");
    auto it = j.find(key);
    if (it == j.end()) schema(path, std::string("missing key \"") + key + "\"");
    return *it;
}

inline std::size_t positive_int(const Json& j, const std::string& path) {
    if (!j.is_number_integer() || j.get<std::int64_t>() < 1) schema(path, "expected a positive integer");
    return j.get<std::size_t>();
}

inline Literal parse_literal(const Json& j, const std::string& path) {
    Literal lit;
    if (j.is_number_integer()) {
        lit.exact = j.is_number_unsigned() ? Rational(std::to_string(j.get<std::uint64_t>()))
                                           : Rational(std::to_string(j.get<std::int64_t>()));
    } else if (j.is_number_float()) {
        lit.exact = rational_from_decimal(j.get<double>());
        lit.rational_literal = false;
        lit.value = j.get<double>();
        return lit;
    } else if (j.is_string()) {
        auto q = parse_rational(j.get<std::string>());
        if (!q) schema(path, "not a rational literal: \"" + j.get<std::string>() + "\"");
        lit.exact = *q;
        lit.rational_literal = j.get<std::string>().find_first_of(".eE") == std::string::npos;
    } else {
        schema(path, "expected a number or a rational string");
    }
    lit.value = to_double(lit.exact);
    return lit;
}

inline std::vector<Literal> parse_vector(const Json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) schema(path, "expected a nonempty array");
    std::vector<Literal> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(parse_literal(j[i], path + "/" + std::to_string(i)));
    return out;
}

inline LiteralRows parse_rows(const Json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) schema(path, "expected a nonempty array of rows");
    LiteralRows out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        out.push_back(parse_vector(j[i], path + "/" + std::to_string(i)));
        if (out.back().size() != out.front().size()) schema(path + "/" + std::to_string(i), "ragged rows");
    }
    return out;
}

inline std::vector<std::vector<double>> parse_real_rows(const Json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) schema(path, "expected a nonempty array of rows");
    std::vector<std::vector<double>> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string p = path + "/" + std::to_string(i);
        if (!j[i].is_array()) schema(p, "expected an array");
        std::vector<double> row;
        for (std::size_t k = 0; k < j[i].size(); ++k) {
            const Json& v = j[i][k];
            if (!v.is_number()) schema(p + "/" + std::to_string(k), "expected a number");
            row.push_back(v.get<double>());
        }
        if (!out.empty() && row.size() != out.front().size()) schema(p, "ragged rows");
        out.push_back(std::move(row));
    }
    return out;
}

inline ConeNode parse_cone(const Json& j, const std::string& path) {
    ConeNode c;
    const Json& type = member(j, path, "type");
    if (!type.is_string()) schema(path + "/type", "expected a string");
    c.type = type.get<std::string>();
    if (c.type == "orthant") {
        c.dim = positive_int(member(j, path, "dim"), path + "/dim");
    } else if (c.type == "psd") {
        c.hdim = positive_int(member(j, path, "hdim"), path + "/hdim");
    } else if (c.type == "polyhedral") {
        c.generators = parse_rows(member(j, path, "generators"), path + "/generators");
    } else if (c.type == "tensor") {
        c.left = std::make_shared<ConeNode>(parse_cone(member(j, path, "left"), path + "/left"));
        c.right = std::make_shared<ConeNode>(parse_cone(member(j, path, "right"), path + "/right"));
    } else {
        schema(path + "/type", "unknown cone type \"" + c.type + "\"");
    }
    return c;
}

inline MapNode parse_map(const Json& j, const std::string& path) {
    MapNode m;
    const Json& type = member(j, path, "type");
    if (!type.is_string()) schema(path + "/type", "expected a string");
    m.type = type.get<std::string>();
    if (m.type == "matrix" || m.type == "stochastic") {
        m.data = parse_rows(member(j, path, "data"), path + "/data");
    } else if (m.type == "kraus") {
        const Json& ops = member(j, path, "ops");
        if (!ops.is_array() || ops.empty()) schema(path + "/ops", "expected a nonempty array");
        for (std::size_t k = 0; k < ops.size(); ++k) {
            const std::string p = path + "/ops/" + std::to_string(k);
            KrausNode op;
            op.re = parse_real_rows(member(ops[k], p, "re"), p + "/re");
            if (ops[k].contains("im")) op.im = parse_real_rows(ops[k]["im"], p + "/im");
            m.ops.push_back(std::move(op));
        }
    } else {
        schema(path + "/type", "unknown map type \"" + m.type + "\"");
    }
    return m;
}

inline Json literal_json(const Literal& l) {
    if (!l.rational_literal) return l.value;
    if (l.exact.get_den() == 1 && l.exact.get_num().fits_slong_p()) return l.exact.get_num().get_si();
    return to_string(l.exact);
}

inline Json rows_json(const LiteralRows& rows) {
    Json out = Json::array();
    for (const auto& r : rows) {
        Json row = Json::array();
        for (const auto& v : r) row.push_back(literal_json(v));
        out.push_back(std::move(row));
    }
    return out;
}

inline Json cone_json(const ConeNode& c) {
    Json j;
    j["type"] = c.type;
    if (c.type == "orthant") j["dim"] = c.dim;
    if (c.type == "psd") j["hdim"] = c.hdim;
    if (c.type == "polyhedral") j["generators"] = rows_json(c.generators);
    if (c.type == "tensor") {
        j["left"] = cone_json(*c.left);
        j["right"] = cone_json(*c.right);
    }
    return j;
}

}  // namespace detail

inline ProblemFile problem_from_json(const Json& j) {
    if (!j.is_object()) detail::schema("", "expected an object");
    ProblemFile p;
    p.cone = detail::parse_cone(detail::member(j, "", "cone"), "/cone");
    p.map = detail::parse_map(detail::member(j, "", "map"), "/map");
    if (j.contains("unit")) p.unit = detail::parse_vector(j["unit"], "/unit");
    if (j.contains("mode")) {
        if (!j["mode"].is_string()) detail::schema("/mode", "expected a string");
        p.mode = j["mode"].get<std::string>();
        if (*p.mode != "rational" && *p.mode != "float") detail::schema("/mode", "expected \"rational\" or \"float\"");
    }
    if (j.contains("tolerances")) {
        const Json& t = j["tolerances"];
        if (!t.is_object()) detail::schema("/tolerances", "expected an object");
        Tolerances tol;
        for (auto it = t.begin(); it != t.end(); ++it) {
            const std::string path = "/tolerances/" + it.key();
            if (!it.value().is_number() || !(it.value().get<double>() > 0)) detail::schema(path, "expected a positive number");
            const double v = it.value().get<double>();
            if (it.key() == "eps_rank") tol.eps_rank = v;
            else if (it.key() == "eps_cluster") tol.eps_cluster = v;
            else if (it.key() == "eps_interior") tol.eps_interior = v;
            else detail::schema(path, "unknown tolerance");
        }
        p.tolerances = tol;
    }
    for (auto it = j.begin(); it != j.end(); ++it)
        if (it.key() != "cone" && it.key() != "map" && it.key() != "unit" && it.key() != "mode" && it.key() != "tolerances")
            detail::schema("/" + it.key(), "unknown key");
    return p;
}

/// Parses problem text; syntax errors carry line and column.
inline ProblemFile parse_problem(const std::string& text) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw Error(ErrorCode::Schema, e.what());
    }
    return problem_from_json(j);
}

inline Json to_json(const ProblemFile& p) {
    Json j;
    j["cone"] = detail::cone_json(p.cone);
    Json m;
    m["type"] = p.map.type;
    if (p.map.type == "kraus") {
        Json ops = Json::array();
        for (const auto& op : p.map.ops) {
            Json o;
            o["re"] = op.re;
            if (!op.im.empty()) o["im"] = op.im;
            ops.push_back(std::move(o));
        }
        m["ops"] = std::move(ops);
    } else {
        m["data"] = detail::rows_json(p.map.data);
    }
    j["map"] = std::move(m);
    if (p.unit) {
        Json u = Json::array();
        for (const auto& v : *p.unit) u.push_back(detail::literal_json(v));
        j["unit"] = std::move(u);
    }
    if (p.mode) j["mode"] = *p.mode;
    if (p.tolerances) {
        Json t;
        t["eps_rank"] = p.tolerances->eps_rank;
        t["eps_cluster"] = p.tolerances->eps_cluster;
        t["eps_interior"] = p.tolerances->eps_interior;
        j["tolerances"] = std::move(t);
    }
    return j;
}

/// "rational" when every literal is a rational literal and the map is not Kraus.
inline std::string infer_mode(const ProblemFile& p) {
    if (p.mode) return *p.mode;
    if (p.map.type == "kraus") return "float";
    auto all_rational = [](const LiteralRows& rows) {
        for (const auto& r : rows)
            for (const auto& v : r)
                if (!v.rational_literal) return false;
        return true;
    };
    std::function<bool(const ConeNode&)> cone_ok = [&](const ConeNode& c) {
        if (c.type == "polyhedral") return all_rational(c.generators);
        if (c.type == "tensor") return cone_ok(*c.left) && cone_ok(*c.right);
        return true;
    };
    bool ok = all_rational(p.map.data) && cone_ok(p.cone);
    if (p.unit)
        for (const auto& v : *p.unit) ok = ok && v.rational_literal;
    return ok ? "rational" : "float";
}

namespace detail {

inline QMat exact_matrix(const LiteralRows& rows) {
    QMat m(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j].exact;
    return m;
}

inline Mat float_matrix(const LiteralRows& rows) {
    Mat m(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j].value;
    return m;
}

inline ConeSpec build_cone(const ConeNode& c, bool exact) {
    if (c.type == "orthant") return ConeSpec::orthant(c.dim);
    if (c.type == "psd") return ConeSpec::psd(c.hdim);
    if (c.type == "polyhedral") {
        if (exact) {
            std::vector<QVec> g;
            for (const auto& r : c.generators) {
                QVec v;
                for (const auto& e : r) v.push_back(e.exact);
                g.push_back(std::move(v));
            }
            return ConeSpec::polyhedral(g);
        }
        std::vector<Vec> g;
        for (const auto& r : c.generators) {
            Vec v;
            for (const auto& e : r) v.push_back(e.value);
            g.push_back(std::move(v));
        }
        return ConeSpec::polyhedral(g);
    }
    return ConeSpec::tensor(build_cone(*c.left, exact), build_cone(*c.right, exact));
}

}  // namespace detail

/// Builds the map described by the file. mode_override ("rational"/"float")
/// beats the file's mode, which beats inference.
inline DynMap build_map(const ProblemFile& p, const std::optional<std::string>& mode_override = std::nullopt) {
    const std::string mode = mode_override ? *mode_override : infer_mode(p);
    const bool exact = mode == "rational" && p.map.type != "kraus";
    const ConeSpec cone = detail::build_cone(p.cone, exact);

    std::optional<UnitElement> unit;
    if (p.unit) {
        UnitElement u;
        QVec q;
        for (const auto& v : *p.unit) {
            u.u.push_back(v.value);
            q.push_back(v.exact);
        }
        if (exact) u.exact = std::move(q);
        unit = std::move(u);
    }

    if (p.map.type == "kraus") {
        std::vector<CMat> ops;
        for (std::size_t k = 0; k < p.map.ops.size(); ++k) {
            const auto& op = p.map.ops[k];
            const std::string path = "/map/ops/" + std::to_string(k);
            const auto h = static_cast<Eigen::Index>(op.re.size());
            if (op.re.front().size() != op.re.size()) detail::schema(path + "/re", "Kraus operator must be square");
            if (!op.im.empty() && (op.im.size() != op.re.size() || op.im.front().size() != op.re.size()))
                detail::schema(path + "/im", "imaginary part shape differs from real part");
            CMat m(h, h);
            for (Eigen::Index i = 0; i < h; ++i)
                for (Eigen::Index j = 0; j < h; ++j)
                    m(i, j) = std::complex<double>(op.re[i][j], op.im.empty() ? 0.0 : op.im[i][j]);
            ops.push_back(std::move(m));
        }
        DynMap a = from_kraus(ops);
        if (!cone.same_shape(a.cone())) detail::schema("/cone", "Kraus maps need a psd cone of matching size");
        return unit ? a.with_unit(*unit) : a;
    }

    if (p.map.data.size() != p.map.data.front().size()) detail::schema("/map/data", "matrix must be square");
    if (p.map.type == "stochastic") {
        if (!cone.orthant_like() || cone.kind() != ConeSpec::Kind::Orthant)
            detail::schema("/cone", "stochastic maps need an orthant cone");
        DynMap a = exact ? from_stochastic(detail::exact_matrix(p.map.data)) : from_stochastic(detail::float_matrix(p.map.data));
        if (!cone.same_shape(a.cone())) detail::schema("/cone", "orthant dimension does not match the matrix");
        return unit ? a.with_unit(*unit) : a;
    }
    if (exact) return DynMap::raw(detail::exact_matrix(p.map.data), cone, unit);
    return DynMap::raw(detail::float_matrix(p.map.data), cone, unit);
}

/// Applies an override such as "1e-8" (all epsilons) or
/// "eps_rank=1e-8,eps_cluster=1e-6".
inline Tolerances parse_tolerance_override(const std::string& text, Tolerances tol = {}) {
    auto number = [&](const std::string& s) {
        auto q = parse_rational(s);
        if (!q || sgn(*q) <= 0) throw Error(ErrorCode::Schema, "tolerance override: not a positive number: \"" + s + "\"");
        return to_double(*q);
    };
    if (text.find('=') == std::string::npos) {
        const double v = number(text);
        tol.eps_rank = tol.eps_cluster = tol.eps_interior = v;
        return tol;
    }
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw Error(ErrorCode::Schema, "tolerance override: expected key=value, got \"" + item + "\"");
        const std::string key = item.substr(0, eq);
        const double v = number(item.substr(eq + 1));
        if (key == "eps_rank") tol.eps_rank = v;
        else if (key == "eps_cluster") tol.eps_cluster = v;
        else if (key == "eps_interior") tol.eps_interior = v;
        else throw Error(ErrorCode::Schema, "tolerance override: unknown key \"" + key + "\"");
    }
    return tol;
}

// ---- reports ----

struct ReportFile {
    std::string tool = "conemix";
    std::string version = tool_version;
    std::string mode;
    ClassificationReport report;
    double classify_ms = 0.0;
};

namespace detail {

template <class T, class F>
Json opt_json(const std::optional<T>& v, F&& f) {
    return v ? f(*v) : Json(nullptr);
}

inline Json vec_json(const Vec& v) { return Json(v); }

inline Json qvec_json(const QVec& v) {
    Json out = Json::array();
    for (const auto& q : v) out.push_back(to_string(q));
    return out;
}

inline Json multiplicity_json(const MultiplicityPair& m) {
    Json j;
    j["geometric"] = m.geometric;
    j["algebraic"] = m.algebraic;
    j["degree"] = m.degree ? Json(*m.degree) : Json(nullptr);
    j["marginal"] = m.marginal;
    return j;
}

inline MultiplicityPair multiplicity_from(const Json& j) {
    MultiplicityPair m;
    m.geometric = j.at("geometric").get<std::size_t>();
    m.algebraic = j.at("algebraic").get<std::size_t>();
    if (!j.at("degree").is_null()) m.degree = j.at("degree").get<std::size_t>();
    m.marginal = j.at("marginal").get<bool>();
    return m;
}

inline std::optional<Vec> vec_from(const Json& j) {
    if (j.is_null()) return std::nullopt;
    return j.get<Vec>();
}

inline std::optional<QVec> qvec_from(const Json& j) {
    if (j.is_null()) return std::nullopt;
    QVec out;
    for (const auto& s : j) out.push_back(*parse_rational(s.get<std::string>()));
    return out;
}

template <class T>
std::optional<T> opt_from(const Json& j) {
    if (j.is_null()) return std::nullopt;
    return j.get<T>();
}

}  // namespace detail

inline Json to_json(const ReportFile& f) {
    const ClassificationReport& r = f.report;
    Json j;
    j["tool"] = f.tool;
    j["version"] = f.version;
    j["mode"] = f.mode;
    j["spectral_radius"] = r.r;
    j["spectral_radius_exact"] = r.r_exact ? Json(to_string(*r.r_exact)) : Json(nullptr);
    j["exact"] = r.exact;
    j["ergodic"] = r.ergodic;
    j["mixing"] = r.mixing;
    j["irreducible"] = r.irreducible;
    j["primitive"] = r.primitive;
    j["stationary"] = detail::opt_json(r.stationary, detail::vec_json);
    j["dual_stationary"] = detail::opt_json(r.dual_stationary, detail::vec_json);
    j["stationary_exact"] = detail::opt_json(r.stationary_exact, detail::qvec_json);
    j["dual_stationary_exact"] = detail::opt_json(r.dual_stationary_exact, detail::qvec_json);
    j["pairing"] = r.pairing ? Json(*r.pairing) : Json(nullptr);
    j["fixed_space_dim"] = r.fixed_space_dim ? Json(*r.fixed_space_dim) : Json(nullptr);
    j["multiplicity_r"] = detail::multiplicity_json(r.multiplicity_r);
    j["multiplicity_r2_kron"] = detail::multiplicity_json(r.multiplicity_r2_kron);
    j["dup"] = r.dup;
    j["positivity"] = {{"value", to_string(r.positivity.value)}, {"certificate", r.positivity.certificate}};
    j["graph"] = {{"strongly_connected", r.graph_strongly_connected ? Json(*r.graph_strongly_connected) : Json(nullptr)},
                  {"period", r.graph_period ? Json(*r.graph_period) : Json(nullptr)}};
    j["primitivity_index"] = r.primitivity_index ? Json(*r.primitivity_index) : Json(nullptr);
    j["primitivity_cap"] = r.primitivity_cap ? Json(*r.primitivity_cap) : Json(nullptr);
    Json routes = Json::array();
    for (const auto& rr : r.routes)
        routes.push_back({{"property", rr.property},
                          {"route", rr.route},
                          {"verdict", rr.verdict},
                          {"exact", rr.exact},
                          {"marginal", rr.marginal},
                          {"decisive", rr.decisive}});
    j["routes"] = std::move(routes);
    j["criteria_fired"] = r.criteria_fired;
    j["hypothesis_flags"] = r.hypothesis_flags;
    j["timings"] = {{"classify_ms", f.classify_ms}};
    return j;
}

inline ReportFile report_from_json(const Json& j) {
    try {
        ReportFile f;
        f.tool = j.at("tool").get<std::string>();
        f.version = j.at("version").get<std::string>();
        f.mode = j.at("mode").get<std::string>();
        ClassificationReport& r = f.report;
        r.r = j.at("spectral_radius").get<double>();
        if (!j.at("spectral_radius_exact").is_null())
            r.r_exact = *parse_rational(j.at("spectral_radius_exact").get<std::string>());
        r.exact = j.at("exact").get<bool>();
        r.ergodic = j.at("ergodic").get<bool>();
        r.mixing = j.at("mixing").get<bool>();
        r.irreducible = j.at("irreducible").get<bool>();
        r.primitive = j.at("primitive").get<bool>();
        r.stationary = detail::vec_from(j.at("stationary"));
        r.dual_stationary = detail::vec_from(j.at("dual_stationary"));
        r.stationary_exact = detail::qvec_from(j.at("stationary_exact"));
        r.dual_stationary_exact = detail::qvec_from(j.at("dual_stationary_exact"));
        r.pairing = detail::opt_from<double>(j.at("pairing"));
        r.fixed_space_dim = detail::opt_from<std::size_t>(j.at("fixed_space_dim"));
        r.multiplicity_r = detail::multiplicity_from(j.at("multiplicity_r"));
        r.multiplicity_r2_kron = detail::multiplicity_from(j.at("multiplicity_r2_kron"));
        r.dup = j.at("dup").get<bool>();
        const std::string pv = j.at("positivity").at("value").get<std::string>();
        r.positivity.value = pv == "yes" ? PositivityVerdict::Value::Yes
                             : pv == "no" ? PositivityVerdict::Value::No
                                          : PositivityVerdict::Value::Unknown;
        r.positivity.certificate = j.at("positivity").at("certificate").get<std::string>();
        r.graph_strongly_connected = detail::opt_from<bool>(j.at("graph").at("strongly_connected"));
        r.graph_period = detail::opt_from<std::size_t>(j.at("graph").at("period"));
        r.primitivity_index = detail::opt_from<std::size_t>(j.at("primitivity_index"));
        r.primitivity_cap = detail::opt_from<std::size_t>(j.at("primitivity_cap"));
        for (const auto& rr : j.at("routes"))
            r.routes.push_back({rr.at("property").get<std::string>(), rr.at("route").get<std::string>(),
                                rr.at("verdict").get<bool>(), rr.at("exact").get<bool>(), rr.at("marginal").get<bool>(),
                                rr.at("decisive").get<bool>()});
        r.criteria_fired = j.at("criteria_fired").get<std::vector<std::string>>();
        r.hypothesis_flags = j.at("hypothesis_flags").get<std::vector<std::string>>();
        f.classify_ms = j.at("timings").at("classify_ms").get<double>();
        return f;
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::Schema, std::string("report: ") + e.what());
    }
}

}  // namespace conemix
