#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "conemix/classify.hpp"
#include "conemix/dynamics.hpp"
#include "conemix/io.hpp"
#include "generators.hpp"
#include "oracles.hpp"

using namespace conemix;
namespace fs = std::filesystem;

namespace {

const QMat jordan{{1, 1}, {0, 1}};
const QMat mixing_example{{2, 0}, {1, 1}};
const QMat swap2{{0, 1}, {1, 0}};

DynMap orthant_map(const QMat& m) { return DynMap::raw(m, ConeSpec::orthant(m.rows())); }

void expect_vec_near(const Vec& a, const Vec& b, double tol) {
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], tol) << "index " << i;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct RunResult {
    int status = -1;
    std::string out;
};

RunResult run(const std::string& args) {
    const std::string cmd = std::string(CONEMIX_CLI_PATH) + " " + args + " 2>&1";
    RunResult r;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return r;
    std::array<char, 4096> buf{};
    std::size_t n;
    while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
    const int raw = pclose(pipe);
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    return r;
}

std::string fixture(const std::string& name) { return (fs::path(CONEMIX_FIXTURE_DIR) / name).string(); }

}  // namespace

TEST(Cesaro, MixingExampleFromE2GoesToZero) {
    const auto rec = cesaro_trajectory(orthant_map(mixing_example), Vec{0, 1}, 200);
    // averages of (1/2)^k e2 shrink like 2/n, so the window rule does not fire yet
    expect_vec_near(rec.iterates.back(), Vec{0, 0}, 2.0 / 200 + 1e-12);
}

TEST(Cesaro, JordanDiverges) {
    const auto rec = cesaro_trajectory(orthant_map(jordan), Vec{0, 1}, 1000);
    EXPECT_EQ(rec.verdict.kind, VerdictKind::Diverged);
    EXPECT_NEAR(rec.verdict.growth_estimate, 0.5, 1e-3);
}

TEST(Cesaro, IdentityConvergesAtStepOne) {
    const Vec x{0.3, 0.7};
    const auto rec = cesaro_trajectory(orthant_map(QMat::identity(2)), x, 50);
    ASSERT_EQ(rec.verdict.kind, VerdictKind::Converged);
    EXPECT_EQ(rec.verdict.at_step, 1u);
    // the limit is the final running average, which carries summation roundoff
    expect_vec_near(rec.verdict.limit, x, 1e-15);
}

TEST(Power, MixingExampleConverges) {
    const auto rec = power_trajectory(orthant_map(mixing_example), Vec{1, 0}, 200);
    ASSERT_EQ(rec.verdict.kind, VerdictKind::Converged);
    expect_vec_near(rec.verdict.limit, Vec{1, 1}, 1e-12);
}

TEST(Power, SwapOscillates) {
    const auto rec = power_trajectory(from_stochastic(swap2), Vec{1, 0}, 100);
    EXPECT_EQ(rec.verdict.kind, VerdictKind::Undecided);
    expect_vec_near(rec.iterates[1], Vec{0, 1}, 0.0);
    expect_vec_near(rec.iterates[2], Vec{1, 0}, 0.0);
}

TEST(Power, IdentityConverges) {
    const auto rec = power_trajectory(orthant_map(QMat::identity(3)), Vec{1, 2, 3}, 30);
    ASSERT_EQ(rec.verdict.kind, VerdictKind::Converged);
    expect_vec_near(rec.verdict.limit, Vec{1, 2, 3}, 0.0);
}

TEST(Trajectory, ZeroSpectralRadius) {
    EXPECT_THROW(power_trajectory(orthant_map(QMat{{0, 1}, {0, 0}}), Vec{1, 1}, 10), Error);
}

TEST(ReducedStates, Examples) {
    const auto o2 = ConeSpec::orthant(2);
    const auto layout = BipartiteLayout::make(o2, o2);
    auto [p1, p2] = reduced_states(kron(Vec{1, 0}, Vec{0, 1}), layout);
    expect_vec_near(p1, Vec{1, 0}, 0.0);
    expect_vec_near(p2, Vec{0, 1}, 0.0);
    auto [c1, c2] = reduced_states(Vec{0.5, 0, 0, 0.5}, layout);
    expect_vec_near(c1, Vec{0.5, 0.5}, 0.0);
    expect_vec_near(c2, Vec{0.5, 0.5}, 0.0);
}

TEST(ReducedStates, MatchPartialTraces) {
    // index i * d2 + j of vec(A (x) B) pairs the basis elements B_i (x) B_j
    gen::Rng rng(17);
    const HermBasis b(2);
    const auto layout = BipartiteLayout::make(ConeSpec::psd(2), ConeSpec::psd(2));
    for (int t = 0; t < 20; ++t) {
        const CMat rho = gen::density(rng, 4);
        Vec x(16);
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 0; j < 4; ++j)
                x[i * 4 + j] = (oracle::kron(b.elements()[i], b.elements()[j]) * rho).trace().real();
        const auto [pa, pb] = oracle::partial_traces(rho, 2, 2);
        auto [p1, p2] = reduced_states(x, layout);
        expect_vec_near(p1, b.vec(pa), 1e-12);
        expect_vec_near(p2, b.vec(pb), 1e-12);
    }
}

TEST(UNorm, Examples) {
    const auto o2 = ConeSpec::orthant(2);
    EXPECT_EQ(u_norm(Vec{0, 0}, default_unit(o2), o2), 0.0);
    EXPECT_DOUBLE_EQ(u_norm(Vec{1, -1}, default_unit(o2), o2), 2.0);
    const auto p2 = ConeSpec::psd(2);
    const HermBasis b(2);
    CMat d = CMat::Zero(2, 2);
    d(0, 0) = 1.0;
    d(1, 1) = -1.0;
    EXPECT_NEAR(u_norm(b.vec(d), default_unit(p2), p2), 2.0, 1e-12);
}

TEST(UNorm, PolyhedralLpMatchesOrthantFormula) {
    // the orthant written as a polyhedral cone goes through the LP
    const auto poly = ConeSpec::polyhedral(std::vector<QVec>{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
    const auto orth = ConeSpec::orthant(3);
    gen::Rng rng(2);
    for (int t = 0; t < 50; ++t) {
        const Vec u = gen::positive_vector(rng, 3), x = gen::gaussian_vector(rng, 3);
        const UnitElement unit{u, std::nullopt};
        EXPECT_NEAR(u_norm(x, unit, poly), u_norm(x, unit, orth), 1e-10);
    }
}

TEST(UNorm, RejectsInvalidUnit) {
    const auto o2 = ConeSpec::orthant(2);
    EXPECT_THROW(u_norm(Vec{1, 1}, UnitElement{Vec{1, 0}, std::nullopt}, o2), Error);
}

TEST(Decoupling, KronJordanSquare) {
    const QMat a2 = kron(jordan, jordan);
    const auto o2 = ConeSpec::orthant(2);
    const DynMap a = DynMap::raw(a2, ConeSpec::tensor(o2, o2));
    const auto rec = decoupling_trace(a, Vec(4, 0.25), BipartiteLayout::from_tensor(a.cone()), 500);
    EXPECT_LT(rec.distances.back(), 1e-6);
    expect_vec_near(normalized_power(a, Vec(4, 0.25), Vec(4, 1.0), 1000000000ULL), Vec{1, 0, 0, 0}, 1e-6);
}

TEST(Decoupling, SwapSquareStaysCorrelated) {
    const auto o2 = ConeSpec::orthant(2);
    const DynMap a = DynMap::raw(kron(swap2, swap2), ConeSpec::tensor(o2, o2));
    const auto rec = decoupling_trace(a, Vec{0.5, 0, 0, 0.5}, BipartiteLayout::from_tensor(a.cone()), 20);
    EXPECT_EQ(rec.verdict.kind, VerdictKind::Undecided);
    // xi - pi1 (x) pi2 = (1/4)[1, -1, -1, 1] at every step
    for (double d : rec.distances) EXPECT_NEAR(d, 0.5, 1e-15);
}

TEST(Decoupling, NormalizationVanishes) {
    const auto o2 = ConeSpec::orthant(2);
    const DynMap a = DynMap::raw(QMat(4, 4), ConeSpec::tensor(o2, o2));
    try {
        decoupling_trace(a, Vec(4, 0.25), BipartiteLayout::from_tensor(a.cone()), 5);
        FAIL() << "expected NormalizationVanished";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NormalizationVanished);
    }
}

TEST(Io, ParsesLiteralsAndInfersMode) {
    const auto p = parse_problem(R"({"cone": {"type": "orthant", "dim": 2},
                                     "map": {"type": "stochastic", "data": [["1/3", 1], ["2/3", 0]]}})");
    EXPECT_EQ(infer_mode(p), "rational");
    EXPECT_EQ(p.map.data[0][0].exact, gen::frac(1, 3));
    const DynMap a = build_map(p);
    ASSERT_TRUE(a.exact());
    EXPECT_EQ(a.provenance(), Provenance::Stochastic);

    const auto f = parse_problem(R"({"cone": {"type": "orthant", "dim": 2},
                                     "map": {"type": "matrix", "data": [[0.5, 1], [0.5, 0]]}})");
    EXPECT_EQ(infer_mode(f), "float");
    EXPECT_FALSE(build_map(f).exact());
    const DynMap forced = build_map(f, std::string("rational"));
    ASSERT_TRUE(forced.exact());
    EXPECT_EQ((*forced.exact())(0, 0), gen::frac(1, 2));
}

TEST(Io, SchemaErrorsCarryPaths) {
    auto code_and_message = [](const std::string& text) -> std::pair<ErrorCode, std::string> {
        try {
            build_map(parse_problem(text));
        } catch (const Error& e) {
            return {e.code(), e.what()};
        }
        return {ErrorCode::Unsupported, "no error"};
    };
    auto [c1, m1] = code_and_message(R"({"cone": {"type": "orthant", "dim": 2}})");
    EXPECT_EQ(c1, ErrorCode::Schema);
    EXPECT_NE(m1.find("map"), std::string::npos);
    auto [c2, m2] = code_and_message(R"({"cone": {"type": "orthant", "dim": 2}, "map": {"type": "matrix", "data": [[1, "x"], [0, 1]]}})");
    EXPECT_EQ(c2, ErrorCode::Schema);
    EXPECT_NE(m2.find("/map/data/0/1"), std::string::npos);
    auto [c3, m3] = code_and_message(R"({"cone": {"type": "orthant", "dim": 2}, "map": {"type": "matrix", "data": [[1]]}, "extra": 1})");
    EXPECT_EQ(c3, ErrorCode::Schema);
    EXPECT_NE(m3.find("/extra"), std::string::npos);
    auto [c4, m4] = code_and_message("{\"cone\": \n {,}");
    EXPECT_EQ(c4, ErrorCode::Schema);
    EXPECT_NE(m4.find("line 2"), std::string::npos);
    auto [c5, m5] = code_and_message(R"({"cone": {"type": "orthant", "dim": 3}, "map": {"type": "matrix", "data": [[1, 0], [0, 1]]}})");
    EXPECT_EQ(c5, ErrorCode::DimensionMismatch);
    auto [c6, m6] = code_and_message(R"({"cone": {"type": "orthant", "dim": 2}, "map": {"type": "stochastic", "data": [[1, -1], [0, 2]]}})");
    EXPECT_EQ(c6, ErrorCode::NegativeEntry);
}

TEST(Io, ToleranceOverride) {
    const Tolerances all = parse_tolerance_override("1e-6");
    EXPECT_EQ(all.eps_rank, 1e-6);
    EXPECT_EQ(all.eps_cluster, 1e-6);
    EXPECT_EQ(all.eps_interior, 1e-6);
    const Tolerances some = parse_tolerance_override("eps_rank=1e-8,eps_cluster=1e-5");
    EXPECT_EQ(some.eps_rank, 1e-8);
    EXPECT_EQ(some.eps_cluster, 1e-5);
    EXPECT_EQ(some.eps_interior, Tolerances{}.eps_interior);
    EXPECT_THROW(parse_tolerance_override("eps_bogus=1"), Error);
    EXPECT_THROW(parse_tolerance_override("-1"), Error);
}

TEST(Io, FixtureRoundTrip) {
    std::size_t seen = 0;
    for (const auto& entry : fs::directory_iterator(CONEMIX_FIXTURE_DIR)) {
        if (entry.path().extension() != ".json") continue;
        ++seen;
        const ProblemFile p = parse_problem(slurp(entry.path()));
        const std::string text = to_json(p).dump();
        const ProblemFile q = parse_problem(text);
        EXPECT_EQ(p, q) << entry.path();
        EXPECT_EQ(to_json(q).dump(), text) << entry.path();
    }
    EXPECT_GE(seen, 15u);
}

TEST(Io, ReportRoundTrip) {
    ReportFile rf;
    rf.report = classify(orthant_map(mixing_example));
    rf.mode = "rational";
    rf.classify_ms = 1.5;
    const Json j = to_json(rf);
    const ReportFile back = report_from_json(j);
    EXPECT_EQ(to_json(back).dump(), j.dump());
    EXPECT_EQ(j["spectral_radius_exact"], "2");
    EXPECT_TRUE(j["mixing"].get<bool>());
}

TEST(Cli, ClassifyFixtures) {
    auto r = run("classify " + fixture("four_state_chain.json"));
    ASSERT_EQ(r.status, 0) << r.out;
    const Json rep = Json::parse(r.out);
    EXPECT_TRUE(rep["primitive"].get<bool>());
    auto j = run("classify " + fixture("jordan_block.json"));
    ASSERT_EQ(j.status, 0) << j.out;
    EXPECT_FALSE(Json::parse(j.out)["ergodic"].get<bool>());
    auto bad = run("classify " + fixture("bad_negative_stochastic.json"));
    EXPECT_EQ(bad.status, 2);
    EXPECT_NE(bad.out.find("NegativeEntry"), std::string::npos);
    EXPECT_EQ(run("classify /nonexistent.json").status, 2);
    EXPECT_EQ(run("frobnicate").status, 2);
}

TEST(Cli, NotPositiveExitCode) {
    const fs::path tmp = fs::temp_directory_path() / "conemix_not_positive.json";
    std::ofstream(tmp) << R"({"cone": {"type": "orthant", "dim": 2}, "map": {"type": "matrix", "data": [[1, -1], [0, 1]]}})";
    EXPECT_EQ(run("classify " + tmp.string()).status, 3);
    fs::remove(tmp);
}

TEST(Cli, ClassifyWritesJsonFile) {
    const fs::path tmp = fs::temp_directory_path() / "conemix_report.json";
    auto r = run("classify " + fixture("swap.json") + " --json " + tmp.string() + " --mode float");
    ASSERT_EQ(r.status, 0) << r.out;
    const Json rep = Json::parse(slurp(tmp));
    EXPECT_EQ(rep["mode"], "float");
    EXPECT_TRUE(rep["ergodic"].get<bool>());
    EXPECT_FALSE(rep["mixing"].get<bool>());
    fs::remove(tmp);
}

TEST(Cli, SimulateVerdicts) {
    auto c = run("simulate " + fixture("jordan_block.json") + " --init 0,1 --steps 300 --mode cesaro");
    ASSERT_EQ(c.status, 0) << c.out;
    EXPECT_NE(c.out.find("verdict: Diverged"), std::string::npos);
    auto p = run("simulate " + fixture("mixing_not_irreducible.json") + " --init e0 --steps 100 --mode power");
    ASSERT_EQ(p.status, 0) << p.out;
    EXPECT_NE(p.out.find("verdict: Converged"), std::string::npos);
    EXPECT_NE(p.out.find("limit=[1,1]"), std::string::npos);
    EXPECT_EQ(p.out.rfind("step,x0,x1\n", 0), 0u);
    auto d = run("simulate " + fixture("decouple_kron_jordan.json") + " --init uniform --steps 500 --mode decouple");
    ASSERT_EQ(d.status, 0) << d.out;
    std::stringstream ss(d.out);
    std::string line, last_row;
    while (std::getline(ss, line))
        if (!line.empty() && std::isdigit(static_cast<unsigned char>(line[0]))) last_row = line;
    EXPECT_LT(std::stod(last_row.substr(last_row.find(',') + 1)), 1e-6);
    EXPECT_EQ(run("simulate " + fixture("jordan_block.json") + " --init=-1,1").status, 4);
    EXPECT_EQ(run("simulate " + fixture("jordan_block.json") + " --init 1,2,3").status, 2);
}

TEST(Cli, GraphDot) {
    auto g = run("graph " + fixture("four_state_chain.json"));
    ASSERT_EQ(g.status, 0) << g.out;
    EXPECT_NE(g.out.find("// strongly connected, period 1"), std::string::npos);
    for (const char* e : {"0 -> 1;", "0 -> 2;", "1 -> 0;", "2 -> 3;", "3 -> 0;"}) EXPECT_NE(g.out.find(e), std::string::npos) << e;
    auto id = run("graph " + fixture("identity2.json"));
    EXPECT_NE(id.out.find("// not strongly connected"), std::string::npos);
    EXPECT_NE(id.out.find("0 -> 0;"), std::string::npos);
    EXPECT_NE(id.out.find("1 -> 1;"), std::string::npos);
    auto s = run("graph " + fixture("swap.json"));
    EXPECT_NE(s.out.find("period 2"), std::string::npos);
    EXPECT_EQ(run("graph " + fixture("depolarizing_qubit.json")).status, 2);
}

TEST(Cli, ToleranceEnvironmentOverride) {
    auto r = run("classify " + fixture("swap.json") + " --mode float");
    ASSERT_EQ(r.status, 0);
    const std::string cmd = "env CONEMIX_TOL=bogus " + std::string(CONEMIX_CLI_PATH) + " classify " + fixture("swap.json") + " >/dev/null 2>&1";
    const int raw = std::system(cmd.c_str());
    EXPECT_EQ(WEXITSTATUS(raw), 2);
}
