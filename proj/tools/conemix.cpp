#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "conemix/classify.hpp"
#include "conemix/dynamics.hpp"
#include "conemix/io.hpp"

using namespace conemix;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_input = 2;
constexpr int exit_not_positive = 3;
constexpr int exit_runtime = 4;

bool is_input_error(ErrorCode c) {
    switch (c) {
        case ErrorCode::Schema:
        case ErrorCode::DimensionMismatch:
        case ErrorCode::InvalidCone:
        case ErrorCode::InvalidUnit:
        case ErrorCode::NegativeEntry:
        case ErrorCode::ColumnSumViolation:
        case ErrorCode::NotClassical:
            return true;
        default:
            return false;
    }
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Schema, "cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Schema, "cannot write " + path);
    out << text;
}

Tolerances effective_tolerances(const ProblemFile& p) {
    Tolerances tol;
    if (const char* env = std::getenv("CONEMIX_TOL")) tol = parse_tolerance_override(env, tol);
    if (p.tolerances) tol = *p.tolerances;
    return tol;
}

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string vector_text(const Vec& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt17(v[i]);
    return s + "]";
}

int cmd_classify(const std::string& file, const std::string& json_out, const std::string& mode) {
    const ProblemFile p = parse_problem(read_file(file));
    std::optional<std::string> override_mode;
    if (!mode.empty()) override_mode = mode;
    const DynMap a = build_map(p, override_mode);
    ClassifyOptions opts;
    opts.tol = effective_tolerances(p);

    const auto t0 = std::chrono::steady_clock::now();
    ReportFile rf;
    rf.report = classify(a, opts);
    rf.classify_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    rf.mode = a.exact() ? "rational" : "float";

    const std::string text = to_json(rf).dump(2) + "\n";
    std::cout << text;
    if (!json_out.empty()) write_file(json_out, text);
    return rf.report.positivity.value == PositivityVerdict::Value::No ? exit_not_positive : exit_ok;
}

Vec uniform_state(const ConeSpec& cone, const UnitElement& unit) {
    Vec x;
    if (cone.kind() == ConeSpec::Kind::Tensor && !cone.finitely_generated()) {
        x = kron(uniform_state(cone.left(), default_unit(cone.left())), uniform_state(cone.right(), default_unit(cone.right())));
    } else if (cone.kind() == ConeSpec::Kind::Psd) {
        HermBasis basis(cone.hdim());
        const auto h = static_cast<Eigen::Index>(cone.hdim());
        x = basis.vec(CMat::Identity(h, h));
    } else if (cone.orthant_like()) {
        x.assign(cone.dim(), 1.0);
    } else {
        x.assign(cone.dim(), 0.0);
        const auto gens = cone.extremal();
        for (const auto& g : *gens)
            for (std::size_t i = 0; i < x.size(); ++i) x[i] += g[i];
    }
    return scaled(x, 1.0 / dot(unit.u, x));
}

Vec initial_state(const std::string& init, const DynMap& a) {
    const ConeSpec& cone = a.cone();
    const std::size_t d = a.dim();
    Vec x;
    if (init == "uniform") {
        x = uniform_state(cone, a.unit());
    } else if (init == "correlated") {
        if (cone.kind() != ConeSpec::Kind::Tensor || !cone.orthant_like() || cone.left().dim() != cone.right().dim())
            throw Error(ErrorCode::Schema, "--init correlated needs a tensor of two equal orthants");
        const std::size_t n = cone.left().dim();
        x.assign(d, 0.0);
        for (std::size_t i = 0; i < n; ++i) x[i * n + i] = 1.0 / static_cast<double>(n);
    } else if (init.size() > 1 && init[0] == 'e' && init.find_first_not_of("0123456789", 1) == std::string::npos) {
        const std::size_t k = std::stoul(init.substr(1));
        if (k >= d) throw Error(ErrorCode::Schema, "--init " + init + ": index out of range");
        x = basis_vector(d, k);
    } else {
        std::stringstream ss(init);
        std::string item;
        while (std::getline(ss, item, ',')) {
            auto q = parse_rational(item);
            if (!q) throw Error(ErrorCode::Schema, "--init: not a number: \"" + item + "\"");
            x.push_back(q->get_d());
        }
        if (x.size() != d)
            throw Error(ErrorCode::DimensionMismatch, "--init has " + std::to_string(x.size()) + " entries, map has dimension " +
                                                          std::to_string(d));
    }
    bool inside = true;
    try {
        inside = contains(cone, x, ScalarMode::floating());
    } catch (const Error& e) {
        if (e.code() != ErrorCode::Unsupported) throw;
    }
    if (!inside) throw Error(ErrorCode::InitNotInCone, "initial vector " + vector_text(x) + " is not in the cone");
    return x;
}

int cmd_simulate(const std::string& file, const std::string& init, std::size_t steps, const std::string& mode,
                 const std::string& csv_out) {
    const ProblemFile p = parse_problem(read_file(file));
    const DynMap a = build_map(p);
    const Vec x = initial_state(init, a);

    TrajectoryRecord rec;
    if (mode == "cesaro") {
        rec = cesaro_trajectory(a, x, steps);
    } else if (mode == "power") {
        rec = power_trajectory(a, x, steps);
    } else {
        if (a.cone().kind() != ConeSpec::Kind::Tensor) throw Error(ErrorCode::InvalidCone, "decouple mode needs a tensor cone");
        rec = decoupling_trace(a, x, BipartiteLayout::from_tensor(a.cone()), steps);
    }

    std::string csv = "step";
    if (rec.mode == TrajectoryMode::Decoupling) {
        csv += ",distance\n";
        for (std::size_t i = 0; i < rec.distances.size(); ++i)
            csv += std::to_string(rec.first_step + i) + "," + fmt17(rec.distances[i]) + "\n";
    } else {
        for (std::size_t k = 0; k < a.dim(); ++k) csv += ",x" + std::to_string(k);
        csv += "\n";
        for (std::size_t i = 0; i < rec.iterates.size(); ++i) {
            csv += std::to_string(rec.first_step + i);
            for (double v : rec.iterates[i]) csv += "," + fmt17(v);
            csv += "\n";
        }
    }
    if (csv_out.empty())
        std::cout << csv;
    else
        write_file(csv_out, csv);

    std::string verdict = std::string("verdict: ") + to_string(rec.verdict.kind);
    if (rec.verdict.kind == VerdictKind::Converged)
        verdict += " at_step=" + std::to_string(rec.verdict.at_step) + " limit=" + vector_text(rec.verdict.limit);
    else if (rec.verdict.kind == VerdictKind::Diverged)
        verdict += " growth=" + fmt17(rec.verdict.growth_estimate);
    std::cout << verdict << "\n";
    return exit_ok;
}

int cmd_graph(const std::string& file, const std::string& dot_out) {
    const ProblemFile p = parse_problem(read_file(file));
    const DynMap a = build_map(p);
    if (!a.cone().orthant_like()) throw Error(ErrorCode::NotClassical, "graph needs a map on an orthant cone");
    const Digraph g = map_digraph(a);
    std::string dot;
    if (strongly_connected(g))
        dot += "// strongly connected, period " + std::to_string(period(g)) + "\n";
    else
        dot += "// not strongly connected\n";
    dot += "digraph conemix {\n";
    for (std::size_t v = 0; v < g.size(); ++v) dot += "  " + std::to_string(v) + ";\n";
    for (std::size_t v = 0; v < g.size(); ++v)
        for (std::size_t w : g.successors(v)) dot += "  " + std::to_string(v) + " -> " + std::to_string(w) + ";\n";
    dot += "}\n";
    if (dot_out.empty())
        std::cout << dot;
    else
        write_file(dot_out, dot);
    return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Classify and simulate positive linear maps on cones"};
    app.require_subcommand(1);
    app.set_version_flag("--version", tool_version);

    std::string file, json_out, class_mode;
    auto* classify_cmd = app.add_subcommand("classify", "Classify a map: ergodic, mixing, irreducible, primitive");
    classify_cmd->add_option("file", file, "Problem file (JSON)")->required();
    classify_cmd->add_option("--json", json_out, "Also write the report to this file");
    classify_cmd->add_option("--mode", class_mode, "Arithmetic: rational or float")
        ->check(CLI::IsMember({"rational", "float"}));

    std::string init = "uniform", sim_mode = "power", csv_out;
    std::size_t steps = 200;
    auto* sim_cmd = app.add_subcommand("simulate", "Simulate a trajectory and print it as CSV");
    sim_cmd->add_option("file", file, "Problem file (JSON)")->required();
    sim_cmd->add_option("--init", init, "Initial vector: comma-separated entries, uniform, e<k> or correlated");
    sim_cmd->add_option("--steps", steps, "Number of steps");
    sim_cmd->add_option("--mode", sim_mode, "cesaro, power or decouple")->check(CLI::IsMember({"cesaro", "power", "decouple"}));
    sim_cmd->add_option("--csv", csv_out, "Write the CSV here instead of standard output");

    std::string dot_out;
    auto* graph_cmd = app.add_subcommand("graph", "Write the transition digraph of a classical map in DOT");
    graph_cmd->add_option("file", file, "Problem file (JSON)")->required();
    graph_cmd->add_option("--dot", dot_out, "Output DOT file (standard output when omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_input;
    }

    try {
        if (*classify_cmd) return cmd_classify(file, json_out, class_mode);
        if (*sim_cmd) return cmd_simulate(file, init, steps, sim_mode, csv_out);
        if (*graph_cmd) return cmd_graph(file, dot_out);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return is_input_error(e.code()) ? exit_input : exit_runtime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_runtime;
    }
    return exit_input;
}
