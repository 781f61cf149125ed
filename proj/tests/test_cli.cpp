#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "qdt/cli.hpp"

using namespace qdt;
using io::json;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = QDT_FIXTURE_DIR;

struct Ran {
  int code;
  std::string out, err;
  json report;
};

Ran qdt_run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  Ran r{code, out.str(), err.str(), {}};
  if (!r.out.empty() && r.out.front() == '{') r.report = json::parse(r.out);
  return r;
}

std::string fixture(const std::string& name) { return (kFixtures / name).string(); }

/// A scratch file holding the given JSON text.
std::string scratch(const std::string& name, const std::string& text) {
  const auto dir = fs::temp_directory_path() / "qdt_cli_test";
  fs::create_directories(dir);
  std::ofstream(dir / name) << text;
  return (dir / name).string();
}

json load(const std::string& name) { return io::read_json_file(fixture(name)); }

const json& result(const Ran& r) { return r.report.at("result"); }

}  // namespace

TEST_CASE("validate", "[cli]") {
  auto r = qdt_run({"validate", fixture("lottery_valid.json")});
  CHECK(r.code == 0);
  CHECK(result(r)["verdict"] == "valid");

  r = qdt_run({"validate", fixture("lottery_invalid_sum.json")});
  CHECK(r.code == 2);
  CHECK(result(r)["violation"]["kind"] == "sum_residual");
  CHECK(result(r)["violation"]["value"].get<double>() == Catch::Approx(0.1));

  r = qdt_run({"validate", fixture("malformed.json")});
  CHECK(r.code == 65);
  CHECK(r.err.find("parse error at byte") != std::string::npos);
  CHECK(r.report["error"]["code"] == "InvalidInput");
}

TEST_CASE("coherence", "[cli]") {
  auto r = qdt_run({"coherence", fixture("coherence_single.json")});
  CHECK(r.code == 0);
  CHECK(result(r)["verdict"] == "coherent");
  // rho certifies diag(1,-1): Tr(G rho) = rho_00 - rho_11 > 0
  const auto rho = io::matrix_from_json(result(r)["certificate"]["rho"][0]);
  CHECK(std::abs(rho.trace() - 1.0) < 1e-9);
  CHECK(frobenius_inner(HermitianMatrix::diagonal({1, -1}), rho) > 0.0);

  r = qdt_run({"coherence", fixture("coherence_incoherent.json")});
  CHECK(r.code == 3);
  CHECK(result(r)["verdict"] == "incoherent");
  const auto w = result(r)["certificate"]["weights"].get<std::vector<double>>();
  REQUIRE(w.size() == 2);
  // lambda (1,1) gives diag(-1,-1)
  CHECK(w[0] == Catch::Approx(w[1]).epsilon(1e-6));
  const auto combo = io::matrix_from_json(result(r)["certificate"]["combination"][0]);
  CHECK(spectrum_bounds(BlockHermitian({combo})).max < 0.0);

  r = qdt_run({"coherence", fixture("coherence_empty.json")});
  CHECK(r.code == 0);
  CHECK(result(r)["verdict"] == "coherent");
  CHECK(result(r)["generators"] == 0);
}

TEST_CASE("prefer", "[cli]") {
  auto r = qdt_run({"prefer", fixture("prefer_state.json")});
  CHECK(r.code == 0);
  CHECK(result(r)["verdict"] == "prefers");
  CHECK(std::abs(result(r)["margin"].get<double>() - 0.2) < 1e-12);

  r = qdt_run({"prefer", fixture("prefer_sdg.json")});
  CHECK(r.code == 0);
  CHECK(result(r)["verdict"] == "prefers");
  CHECK(std::abs(result(r)["margin"].get<double>() - 0.2) < 1e-6);

  // the reverse query: not preferred, exit 4 only on request
  auto q = load("prefer_state.json");
  std::swap(q["P"], q["Q"]);
  const auto rev = scratch("reverse.json", q.dump());
  r = qdt_run({"prefer", rev});
  CHECK(r.code == 0);
  CHECK(result(r)["verdict"] == "not_prefers");
  CHECK(qdt_run({"prefer", rev, "--strict-exit"}).code == 4);

  // an incoherent backing set
  q["relation"] = {{"kind", "sdg"}, {"assessments", load("coherence_incoherent.json")}};
  q["P"] = load("lottery_valid.json");
  CHECK(qdt_run({"prefer", scratch("incoherent_query.json", q.dump())}).code == 3);
}

TEST_CASE("represent recovers the pinned state", "[cli]") {
  const auto r = qdt_run({"represent", fixture("represent_near_maximal.json")});
  CHECK(r.code == 0);
  REQUIRE(result(r)["verdict"] == "maximal");
  const auto s = io::state_from_json(result(r)["R"]);
  CHECK((s[0].matrix() - HermitianMatrix::diagonal({0.6, 0.4}).matrix()).norm() < 1e-6);

  // a vacuous set is not maximal
  const auto vac = qdt_run({"represent", fixture("coherence_empty.json"), "--strict-exit"});
  CHECK(vac.code == 4);
  CHECK(vac.report["result"]["verdict"] == "not_maximal");
}

TEST_CASE("factorize", "[cli]") {
  auto r = qdt_run({"factorize", fixture("factorize_product.json")});
  CHECK(r.code == 0);
  CHECK(result(r)["verdict"] == "factorizable");
  const auto p = result(r)["p"].get<std::vector<double>>();
  CHECK(p == std::vector<double>{0.3, 0.7});
  CHECK(result(r)["residual"].get<double>() < 1e-12);

  r = qdt_run({"factorize", fixture("factorize_split.json")});
  CHECK(r.code == 0);
  CHECK(result(r)["verdict"] == "not_factorizable");
  CHECK(result(r)["deviation"].get<double>() == Catch::Approx(std::sqrt(2.0)));
  CHECK(qdt_run({"--strict-exit", "factorize", fixture("factorize_split.json")}).code == 4);
}

TEST_CASE("condition", "[cli]") {
  auto r = qdt_run({"condition", fixture("condition_state.json")});
  CHECK(r.code == 0);
  CHECK(result(r)["probability"].get<double>() == Catch::Approx(0.5));
  const auto s = io::state_from_json(result(r)["state"]);
  CHECK(std::abs(s[0](0, 0).real() - 0.3) < 1e-12);
  CHECK(std::abs(s[1](0, 0).real() - 0.7) < 1e-12);

  r = qdt_run({"condition", fixture("condition_sdg.json")});
  CHECK(r.code == 0);
  CHECK(std::abs(result(r)["upper_probability"].get<double>() - 0.6) < 1e-6);
  const auto rho = io::matrix_from_json(result(r)["certificate"]["rho"][0]);
  CHECK((rho.matrix() - HermitianMatrix::diagonal({1, 0}).matrix()).norm() < 1e-6);
}

TEST_CASE("simulate is seeded", "[cli]") {
  const auto a = qdt_run({"simulate", fixture("simulate.json"), "--trials", "2000", "--seed", "4"});
  CHECK(a.code == 0);
  CHECK(result(a)["trials"] == 2000);
  CHECK(result(a)["no_sure_loss"] == true);
  for (const auto& g : result(a)["gambles"]) {
    CHECK(std::abs(g["mean"].get<double>() - g["expected"].get<double>()) < 5 * g["std_error"].get<double>() + 1e-12);
  }
  const auto b = qdt_run({"simulate", fixture("simulate.json"), "--trials", "2000", "--seed", "4"});
  CHECK(result(a) == result(b));
  const auto c = qdt_run({"simulate", fixture("simulate.json"), "--trials", "2000", "--seed", "5"});
  CHECK(result(a)["gambles"] != result(c)["gambles"]);
}

TEST_CASE("properties", "[cli]") {
  auto r = qdt_run({"properties", "--suite", "archimedean"});
  CHECK(r.code == 0);
  CHECK(result(r)["violations"].empty());
  const auto notes = result(r)["notes"].dump();
  CHECK(notes.find("(3, 1): counterexample verified") != std::string::npos);
  CHECK(notes.find("(2, 2): counterexample verified") != std::string::npos);
  CHECK(notes.find("(2, 1): not applicable") != std::string::npos);

  r = qdt_run({"properties", "--suite", "lotteries", "--seed", "9"});
  CHECK(r.code == 0);
  CHECK(result(r)["seed"] == 9);
}

TEST_CASE("reports are deterministic and digested", "[cli]") {
  for (const auto& args : std::vector<std::vector<std::string>>{
           {"coherence", fixture("coherence_single.json")},
           {"represent", fixture("represent_near_maximal.json"), "--seed", "3"},
           {"simulate", fixture("simulate.json"), "--trials", "500"},
           {"validate", fixture("malformed.json")}}) {
    auto a = qdt_run(args), b = qdt_run(args);
    CHECK(a.report["report_digest"] == b.report["report_digest"]);
    CHECK(a.report["report_digest"] == cli::report_digest(a.report));
    CHECK(a.report.contains("timings"));
    a.report.erase("timings");
    b.report.erase("timings");
    CHECK(a.report.dump(2) == b.report.dump(2));
    // parse -> emit -> parse is a fixed point
    CHECK(json::parse(a.report.dump()) == a.report);
  }
  const auto r = qdt_run({"validate", fixture("lottery_valid.json")});
  CHECK(r.report["inputs"][0]["sha256"] == cli::sha256_hex(io::read_file(fixture("lottery_valid.json"))));
  CHECK(cli::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(r.report["tool"] == "qdt");
  CHECK(r.report["config"]["tol_psd"] == 1e-9);
}

TEST_CASE("fixtures are in normal form", "[cli]") {
  const auto same = [](const std::string& name, const json& emitted) {
    INFO(name);
    CHECK(emitted == load(name));
  };
  for (const auto* f : {"lottery_valid.json", "lottery_invalid_sum.json"}) {
    const auto j = load(f);
    const auto [m, n] = io::shape_header(j, "$");
    std::vector<json> blocks;
    for (std::size_t i = 0; i < m; ++i) blocks.push_back(io::to_json(io::matrix_from_json(j["blocks"][i])));
    same(f, {{"m", m}, {"n", n}, {"blocks", blocks}});
  }
  for (const auto* f : {"coherence_single.json", "coherence_incoherent.json", "coherence_empty.json",
                        "coherence_overflow.json", "represent_near_maximal.json"}) {
    same(f, io::to_json(io::assessment_from_json(load(f))));
  }
  for (const auto* f : {"factorize_product.json", "factorize_split.json"}) same(f, io::to_json(io::state_from_json(load(f))));
  for (const auto* f : {"prefer_state.json", "prefer_sdg.json"}) same(f, io::to_json(io::preference_query_from_json(load(f))));
  for (const auto* f : {"condition_state.json", "condition_sdg.json"}) same(f, io::to_json(io::condition_request_from_json(load(f))));
  same("simulate.json", io::to_json(io::simulate_request_from_json(load("simulate.json"))));
}

TEST_CASE("text format", "[cli]") {
  const auto r = qdt_run({"--format", "text", "prefer", fixture("prefer_state.json")});
  CHECK(r.code == 0);
  CHECK(r.out.find("verdict: prefers") != std::string::npos);
  CHECK(r.out.find("exit: 0") != std::string::npos);
  const auto e = qdt_run({"validate", fixture("malformed.json"), "--format", "text"});
  CHECK(e.out.find("error.code: InvalidInput") != std::string::npos);
}

TEST_CASE("usage errors exit 64", "[cli]") {
  CHECK(qdt_run({}).code == 64);
  CHECK(qdt_run({"frobnicate"}).code == 64);
  CHECK(qdt_run({"validate"}).code == 64);
  CHECK(qdt_run({"properties"}).code == 64);
  CHECK(qdt_run({"properties", "--suite", "nope"}).code == 64);
  CHECK(qdt_run({"--format", "xml", "validate", fixture("lottery_valid.json")}).code == 64);
  CHECK(qdt_run({"--tol-psd", "-1", "validate", fixture("lottery_valid.json")}).code == 64);
  CHECK(qdt_run({"simulate", fixture("simulate.json"), "--trials", "1"}).code == 64);
  CHECK(qdt_run({"--help"}).code == 0);
  CHECK(qdt_run({"--version"}).out.find(cli::kVersion) != std::string::npos);
}

TEST_CASE("input errors exit 65", "[cli]") {
  const auto code = [](const std::vector<std::string>& args, const char* error) {
    const auto r = qdt_run(args);
    INFO(r.err);
    CHECK(r.code == 65);
    CHECK(r.report["error"]["code"] == error);
  };
  code({"validate", "/nonexistent/lottery.json"}, "InvalidInput");
  code({"validate", scratch("schema.json", R"({"m": 2, "n": 1})")}, "InvalidInput");
  code({"coherence", scratch("nonherm.json", R"({"m": 2, "n": 2, "gambles": [{"blocks": [{"n": 2, "re": [[1, 2], [0, 1]]}]}]})")},
       "InvalidInput");
  code({"prefer", scratch("zero.json", R"({"relation": {"kind": "sdg", "assessments": {"m": 2, "n": 1, "gambles": [{"blocks": [{"n": 1, "re": [[0]]}]}]}},
        "P": {"m": 2, "n": 1, "blocks": [{"n": 1, "re": [[1]]}, {"n": 1, "re": [[0]]}]},
        "Q": {"m": 2, "n": 1, "blocks": [{"n": 1, "re": [[0]]}, {"n": 1, "re": [[1]]}]}})")},
       "ZeroGamble");
  // R = diag(1, 0): the event e_2 has probability zero
  code({"condition", scratch("null_event.json", R"({"state": {"m": 2, "n": 2, "blocks": [{"n": 2, "re": [[1, 0], [0, 0]]}]},
        "event": {"vector": [0, 1]}})")},
       "UndefinedConditional");
  // the state gives diag(-1, 1) expectation -0.2: it is not in the dual
  auto sim = load("simulate.json");
  sim["assessments"]["gambles"][0]["blocks"][0] = io::to_json(HermitianMatrix::diagonal({-1, 1}));
  code({"simulate", scratch("not_dual.json", sim.dump())}, "StateNotInDual");
  // lotteries of different shapes
  auto q = load("prefer_state.json");
  q["P"] = load("lottery_valid.json");
  code({"prefer", scratch("shapes.json", q.dump())}, "DimensionMismatch");
}

TEST_CASE("invalid lotteries inside queries exit 2", "[cli]") {
  auto q = load("prefer_state.json");
  q["P"]["blocks"][0] = io::to_json(HermitianMatrix::diagonal({1.5, 0}));
  const auto r = qdt_run({"prefer", scratch("bad_lottery.json", q.dump())});
  CHECK(r.code == 2);
  CHECK(r.report["error"]["code"] == "InvalidLottery");
}

TEST_CASE("solver failures exit 70 with a report", "[cli]") {
  const auto r = qdt_run({"coherence", fixture("coherence_overflow.json")});
  CHECK(r.code == 70);
  CHECK(r.report["error"]["code"] == "SolverNumericalFailure");
  CHECK(r.report["exit_code"] == 70);
}
