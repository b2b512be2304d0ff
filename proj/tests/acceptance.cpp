// Acceptance suite: one PASS/FAIL line per criterion.

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "conemix/classify.hpp"
#include "conemix/dynamics.hpp"
#include "conemix/io.hpp"
#include "generators.hpp"
#include "oracles.hpp"

using namespace conemix;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            if (pass) detail << what;
            pass = false;
        }
    }
};

std::string fixture_path(const std::string& name) { return std::string(CONEMIX_FIXTURE_DIR) + "/" + name; }

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ProblemFile load(const std::string& name) { return parse_problem(slurp(fixture_path(name))); }

DynMap load_map(const std::string& name) { return build_map(load(name)); }

double max_diff(const Vec& a, const Vec& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

Vec normalized(Vec v) {
    double s = 0.0;
    for (double x : v) s += x;
    for (double& x : v) x /= s;
    return v;
}

bool parallel(const Vec& a, const Vec& b, double tol) { return max_diff(normalized(a), normalized(b)) < tol; }

/// First step from which every later distance stays below tol.
std::size_t first_below(const std::vector<double>& distances, std::size_t first_step, double tol) {
    std::size_t i = distances.size();
    while (i > 0 && distances[i - 1] < tol) --i;
    return i == distances.size() ? SIZE_MAX : first_step + i;
}

Outcome jordan_block() {
    Outcome o;
    const DynMap a = load_map("jordan_block.json");
    const auto rep = classify(a);
    o.require(rep.exact, "classification was not exact");
    o.require(!rep.ergodic, "reported ergodic");
    o.require(rep.fixed_space_dim && *rep.fixed_space_dim == 1, "fixed space dimension is not 1");
    o.require(rep.pairing && *rep.pairing == 0.0, "pairing is not 0");
    const auto traj = cesaro_trajectory(a, {0.0, 1.0}, 1000);
    o.require(traj.verdict.kind == VerdictKind::Diverged, "Cesaro averages did not diverge");
    o.detail << "growth " << traj.verdict.growth_estimate;
    return o;
}

Outcome mixing_not_irreducible() {
    Outcome o;
    const DynMap a = load_map("mixing_not_irreducible.json");
    const auto rep = classify(a);
    o.require(std::abs(rep.r - 2.0) < 1e-10, "spectral radius is not 2");
    o.require(rep.mixing, "not mixing");
    o.require(!rep.irreducible, "reported irreducible");
    o.require(rep.stationary && parallel(*rep.stationary, {1.0, 1.0}, 1e-10), "x0 not along [1,1]");
    o.require(rep.dual_stationary && parallel(*rep.dual_stationary, {1.0, 0.0}, 1e-10), "y0 not along [1,0]");
    const auto traj = power_trajectory(a, {1.0, 0.0}, 100);
    bool settled = true;
    for (std::size_t i = 0; i < traj.distances.size(); ++i)
        if (traj.first_step + i >= 60 && !(traj.distances[i] < 1e-8)) settled = false;
    o.require(settled, "successive difference not below 1e-8 from step 60");
    o.require(traj.verdict.kind == VerdictKind::Converged, "power trajectory did not converge");
    o.detail << "r " << rep.r;
    return o;
}

Outcome four_state_chain() {
    Outcome o;
    const DynMap a = load_map("four_state_chain.json");
    const Digraph g = map_digraph(a);
    o.require(strongly_connected(g), "graph not strongly connected");
    o.require(period(g) == 1, "period is not 1");
    const auto by_period = primitive_by_period(a);
    const auto by_tensor = primitive_by_tensor_graph(a);
    o.require(by_period && by_tensor, "a graph route did not apply");
    if (by_period && by_tensor) {
        o.require(by_period->verdict && by_tensor->verdict, "a graph route did not say primitive");
    }
    const auto w = gen::rows(*a.exact());
    o.require(oracle::period_by_cycles(oracle::pattern(w)) == 1, "cycle-length oracle disagrees");
    o.require(is_primitive(a), "not primitive");
    o.detail << "period " << period(g) << ", exponent " << oracle::exponent(oracle::pattern(w));
    return o;
}

Outcome deformations() {
    Outcome o;
    const DynMap sum = load_map("deformation_sum.json");
    const DynMap weighted = load_map("deformation_weighted.json");
    o.require(is_mixing(sum), "[[2,1],[0,1]] not mixing");
    o.require(!is_ergodic(weighted), "[[1,1],[0,1]] ergodic");
    return o;
}

Outcome decoupling() {
    Outcome o;
    {
        const DynMap a = load_map("decouple_kron_jordan.json");
        const auto layout = BipartiteLayout::from_tensor(a.cone());
        const auto trace = decoupling_trace(a, {0.25, 0.25, 0.25, 0.25}, layout, 500);
        const std::size_t step = first_below(trace.distances, trace.first_step, 1e-6);
        o.require(step <= 500, "kron(A,A) distance not below 1e-6 within 500 steps");
        const Vec limit = normalized_power(a, {0.25, 0.25, 0.25, 0.25}, a.unit().u, 1ULL << 40);
        o.require(max_diff(limit, {1.0, 0.0, 0.0, 0.0}) < 1e-6, "kron(A,A) limit is not e1 x e1");
        o.detail << "kron(A,A) below 1e-6 at step " << step;
    }
    const Vec x{0.1, 0.2, 0.3, 0.4};
    {
        const DynMap a = load_map("decouple_identity_jordan.json");
        const auto layout = BipartiteLayout::from_tensor(a.cone());
        const auto trace = decoupling_trace(a, x, layout, 500);
        o.require(first_below(trace.distances, trace.first_step, 1e-6) <= 500,
                  "kron(I,A) distance not below 1e-6 within 500 steps");
        const Vec limit = normalized_power(a, x, a.unit().u, 1ULL << 40);
        o.require(max_diff(limit, normalized({x[1], 0.0, x[3], 0.0})) < 1e-6, "kron(I,A) limit is wrong");
        o.detail << "; kron(I,A) final distance " << trace.distances.back();
    }
    {
        const DynMap a = load_map("decouple_jordan_identity.json");
        const auto layout = BipartiteLayout::from_tensor(a.cone());
        const auto trace = decoupling_trace(a, x, layout, 500);
        o.require(first_below(trace.distances, trace.first_step, 1e-6) <= 500,
                  "kron(A,I) distance not below 1e-6 within 500 steps");
        const Vec limit = normalized_power(a, x, a.unit().u, 1ULL << 40);
        o.require(max_diff(limit, normalized({x[2], x[3], 0.0, 0.0})) < 1e-6, "kron(A,I) limit is wrong");
    }
    return o;
}

struct RouteSet {
    std::vector<std::pair<std::string, std::optional<RouteOutcome>>> outcomes;
};

RouteSet all_routes(const DynMap& a, const DynMap& square) {
    RouteSet s;
    s.outcomes.emplace_back(route::fixed_space, ergodic_by_fixed_space(a));
    s.outcomes.emplace_back(route::algebraic_multiplicity, ergodic_by_algebraic_multiplicity(a));
    s.outcomes.emplace_back(route::kron_kernel, mixing_by_kron_kernel(a));
    s.outcomes.emplace_back(route::spectral_gap, mixing_by_spectral_gap(a));
    s.outcomes.emplace_back("kron-square-ergodic", ergodic_by_fixed_space(square));
    s.outcomes.emplace_back(route::interior_eigenvectors, irreducible_by_interior_eigenvectors(a));
    s.outcomes.emplace_back(route::power_improvement, irreducible_by_power_improvement(a));
    s.outcomes.emplace_back(route::extremal_reachability, irreducible_by_extremal_reachability(a));
    s.outcomes.emplace_back(route::graph_connected, irreducible_by_graph(a));
    s.outcomes.emplace_back(route::tensor_graph, primitive_by_tensor_graph(a));
    return s;
}

/// True verdicts from test-side oracles, in the order of all_routes.
std::vector<bool> oracle_verdicts(const QMat& w) {
    const auto rows = gen::rows(w);
    const std::size_t d = w.rows();
    const bool ergodic = oracle::kernel_dim(oracle::minus_lambda(rows, 1)) == 1;
    const bool mixing = oracle::kernel_dim(oracle::minus_lambda(oracle::kron(rows, rows), 1)) == 1;
    const auto pattern = oracle::pattern(rows);
    const bool irreducible = oracle::strongly_connected(pattern);
    const bool primitive = irreducible && oracle::period_by_cycles(pattern) == 1;
    (void)d;
    return {ergodic, ergodic, mixing, mixing, mixing, irreducible, irreducible, irreducible, irreducible, primitive};
}

Outcome random_stochastic_agreement() {
    Outcome o;
    gen::Rng rng(6006);
    std::size_t exact_disagree = 0, float_disagree = 0, float_unflagged = 0, float_checks = 0;
    std::size_t mixing_count = 0, irreducible_count = 0, primitive_count = 0;
    std::string first_problem;
    for (std::size_t n = 0; n < 500; ++n) {
        const std::size_t d = n % 2 == 0 ? 3 : 4;
        const QMat w = gen::stochastic(rng, d, gen::uniform(rng, 0.2, 0.7));
        const auto truth = oracle_verdicts(w);
        mixing_count += truth[2];
        irreducible_count += truth[5];
        primitive_count += truth[9];

        const DynMap a = from_stochastic(w);
        const auto od = ConeSpec::orthant(d);
        const DynMap sq = DynMap::raw(kron(w, w), ConeSpec::tensor(od, od));
        const auto exact = all_routes(a, sq);
        for (std::size_t k = 0; k < truth.size(); ++k) {
            const auto& [name, out] = exact.outcomes[k];
            // the spectral-gap route is a floating eigenvalue test by construction
            const bool exact_expected = name != route::spectral_gap;
            if (!out || (exact_expected && !out->exact) || out->verdict != truth[k]) {
                ++exact_disagree;
                if (first_problem.empty()) first_problem = name + " on exact instance " + std::to_string(n);
            }
        }
        o.require(is_mixing(a) == is_ergodic(sq), "mixing(A) differs from ergodic(kron(A,A))");
        o.require(is_primitive(a) == truth[9], "is_primitive differs from irreducible and aperiodic");

        const auto floating = all_routes(a.without_exact(), sq.without_exact());
        for (std::size_t k = 0; k < truth.size(); ++k) {
            const auto& [name, out] = floating.outcomes[k];
            if (!out) continue;
            ++float_checks;
            if (out->verdict != truth[k]) {
                ++float_disagree;
                if (!out->marginal) ++float_unflagged;
            }
        }
    }
    o.require(exact_disagree == 0, "exact disagreement: " + first_problem);
    o.require(float_unflagged == 0, "unflagged floating disagreement");
    o.require(float_disagree * 100 <= float_checks, "floating disagreements above 1%");
    o.require(mixing_count > 0 && mixing_count < 500 && irreducible_count > 0 && irreducible_count < 500,
              "corpus lacks both outcomes");
    o.detail << (o.pass ? "" : "; ") << "mixing " << mixing_count << ", irreducible " << irreducible_count
             << ", primitive " << primitive_count << ", floating disagreements " << float_disagree << "/"
             << float_checks;
    return o;
}

Outcome tensor_scc_period() {
    Outcome o;
    gen::Rng rng(7007);
    std::size_t max_period = 0;
    for (std::size_t n = 0; n < 100; ++n) {
        const std::size_t d = gen::uniform_int(rng, 1, 8);
        const auto adj = gen::strongly_connected_digraph(rng, d, gen::uniform(rng, 0.0, 0.3));
        Digraph g(d);
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j)
                if (adj[i][j]) g.add_edge(i, j);
        const std::size_t p = oracle::period_by_cycles(adj);
        max_period = std::max(max_period, p);
        if (tensor_scc_count(g) != p || period(g) != p) {
            o.require(false, "instance " + std::to_string(n) + " disagrees");
        }
    }
    o.detail << (o.pass ? "" : "; ") << "largest period " << max_period;
    return o;
}

std::vector<CMat> kraus_ops(const ProblemFile& p) {
    std::vector<CMat> ops;
    for (const auto& k : p.map.ops) {
        const auto h = static_cast<Eigen::Index>(k.re.size());
        CMat m(h, h);
        for (Eigen::Index i = 0; i < h; ++i)
            for (Eigen::Index j = 0; j < h; ++j)
                m(i, j) = {k.re[i][j], k.im.empty() ? 0.0 : k.im[i][j]};
        ops.push_back(m);
    }
    return ops;
}

struct SpectrumFacts {
    std::size_t at_one = 0;
    std::size_t unit_modulus = 0;
};

SpectrumFacts spectrum_facts(const ProblemFile& p) {
    SpectrumFacts f;
    for (const auto& z : oracle::spectrum(oracle::superoperator(kraus_ops(p)))) {
        if (std::abs(z - 1.0) < 1e-9) ++f.at_one;
        if (std::abs(std::abs(z) - 1.0) < 1e-9) ++f.unit_modulus;
    }
    return f;
}

Outcome quantum_channels() {
    Outcome o;
    {
        const auto p = load("identity_qubit.json");
        const auto rep = classify(build_map(p));
        const auto f = spectrum_facts(p);
        o.require(f.at_one == 4, "identity oracle fixed space is not 4");
        o.require(!rep.ergodic, "identity reported ergodic");
        o.require(rep.fixed_space_dim && *rep.fixed_space_dim == f.at_one, "identity fixed space dimension");
    }
    {
        const auto p = load("depolarizing_qubit.json");
        const auto rep = classify(build_map(p));
        const auto f = spectrum_facts(p);
        o.require(f.at_one == 1 && f.unit_modulus == 1, "depolarizing oracle spectrum");
        o.require(rep.primitive && rep.mixing && rep.ergodic, "depolarizing not primitive");
    }
    {
        const auto p = load("dephasing_qubit.json");
        const auto rep = classify(build_map(p));
        const auto f = spectrum_facts(p);
        o.require(f.at_one == 2, "dephasing oracle fixed space is not 2");
        o.require(!rep.ergodic, "dephasing reported ergodic");
    }
    {
        const auto p = load("amplitude_damping_qubit.json");
        const auto rep = classify(build_map(p));
        const auto f = spectrum_facts(p);
        o.require(f.at_one == 1 && f.unit_modulus == 1, "amplitude damping oracle spectrum");
        o.require(rep.mixing, "amplitude damping not mixing");
        o.require(!rep.irreducible && !rep.primitive, "amplitude damping reported irreducible");
    }
    return o;
}

Outcome u_norm_contraction() {
    Outcome o;
    gen::Rng rng(9009);
    double worst = -1.0;
    for (std::size_t n = 0; n < 1000; ++n) {
        DynMap a = n % 2 == 0 ? from_stochastic(gen::stochastic(rng, gen::uniform_int(rng, 2, 6), 0.3).cast<double>())
                              : from_kraus(gen::channel(rng, static_cast<Eigen::Index>(gen::uniform_int(rng, 2, 3)),
                                                        static_cast<Eigen::Index>(gen::uniform_int(rng, 1, 3))));
        if (!is_dup(a)) {
            o.require(false, "generated map is not DUP");
            continue;
        }
        const auto& c = a.cone();
        const auto& u = a.unit();
        const Vec x = gen::gaussian_vector(rng, a.dim());
        const Vec y = gen::gaussian_vector(rng, a.dim());
        const double nx = u_norm(x, u, c);
        const double nax = u_norm(a.matrix() * x, u, c);
        worst = std::max(worst, nax - nx);
        o.require(nax <= nx + 1e-12 * std::max(1.0, nx), "contraction fails at pair " + std::to_string(n));
        const double s = gen::uniform(rng, -3.0, 3.0);
        Vec sx = x;
        for (double& v : sx) v *= s;
        o.require(std::abs(u_norm(sx, u, c) - std::abs(s) * nx) <= 1e-10 * std::max(1.0, nx),
                  "homogeneity fails at pair " + std::to_string(n));
        Vec xy = x;
        for (std::size_t i = 0; i < xy.size(); ++i) xy[i] += y[i];
        o.require(u_norm(xy, u, c) <= nx + u_norm(y, u, c) + 1e-10, "triangle inequality fails at pair " + std::to_string(n));
        o.require(nx > 0.0, "nonzero vector has zero norm");
    }
    o.detail << (o.pass ? "" : "; ") << "largest growth " << worst;
    return o;
}

Outcome mixing_products() {
    Outcome o;
    gen::Rng rng(1010);
    auto draw_mixing = [&]() {
        while (true) {
            const QMat w = gen::stochastic(rng, gen::uniform_int(rng, 2, 4), 0.5);
            const auto rows = gen::rows(w);
            if (oracle::kernel_dim(oracle::minus_lambda(oracle::kron(rows, rows), 1)) == 1) return w;
        }
    };
    for (std::size_t n = 0; n < 100; ++n) {
        const QMat a = draw_mixing();
        const QMat b = draw_mixing();
        const DynMap ab = DynMap::raw(kron(a, b), ConeSpec::tensor(ConeSpec::orthant(a.rows()), ConeSpec::orthant(b.rows())));
        if (!is_mixing(ab)) o.require(false, "pair " + std::to_string(n) + " not mixing");
    }
    return o;
}

struct RunResult {
    int status = -1;
    std::string output;
};

RunResult run(const std::string& cmd) {
    RunResult r;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return r;
    std::array<char, 4096> buf{};
    std::size_t n;
    while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.output.append(buf.data(), n);
    r.status = pclose(pipe);
    return r;
}

std::string without_timings(const std::string& text) {
    static const std::regex ms(R"re("classify_ms"\s*:\s*[-+0-9.eE]+)re");
    return std::regex_replace(text, ms, "\"classify_ms\": 0");
}

Outcome determinism() {
    Outcome o;
    std::size_t files = 0;
    for (const auto& entry : std::filesystem::directory_iterator(CONEMIX_FIXTURE_DIR)) {
        if (entry.path().extension() != ".json") continue;
        ++files;
        const std::string cmd = std::string("'") + CONEMIX_CLI_PATH + "' classify '" + entry.path().string() + "' 2>&1";
        const RunResult first = run(cmd);
        const RunResult second = run(cmd);
        if (first.status != second.status || without_timings(first.output) != without_timings(second.output))
            o.require(false, entry.path().filename().string() + " differs between runs");
        if (first.output.empty()) o.require(false, entry.path().filename().string() + " produced no output");
    }
    o.detail << (o.pass ? "" : "; ") << files << " fixtures";
    return o;
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"Jordan block is not ergodic and its Cesaro averages diverge", jordan_block},
        {"[[2,0],[1,1]] is mixing but not irreducible", mixing_not_irreducible},
        {"four-state chain is primitive by both graph routes", four_state_chain},
        {"deformation examples", deformations},
        {"decoupling limits", decoupling},
        {"route agreement on 500 random stochastic matrices", random_stochastic_agreement},
        {"tensor-graph component count equals period", tensor_scc_period},
        {"quantum channels match superoperator spectra", quantum_channels},
        {"u-norm contraction and norm axioms", u_norm_contraction},
        {"products of mixing maps are mixing", mixing_products},
        {"CLI output is deterministic", determinism},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail << "exception: " << e.what();
        }
        if (!o.pass) ++failures;
        std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << (i + 1) << ": " << criteria[i].first;
        const std::string d = o.detail.str();
        if (!d.empty()) std::cout << " (" << d << ")";
        std::cout << std::endl;
    }
    std::cout << (criteria.size() - failures) << "/" << criteria.size() << " criteria passed" << std::endl;
    return failures == 0 ? 0 : 1;
}
