#pragma once

// The `qdt` command line. run() is the whole tool; tools/qdt.cpp only
// forwards argv. Needs OpenSSL (libcrypto) for the SHA-256 digests.
//
// Exit codes:
//   0   ok / affirmative verdict
//   1   properties: at least one violation
//   2   invalid lottery
//   3   incoherent assessment
//   4   negative verdict (not preferred, boundary, not maximal,
//       not factorizable); only with --strict-exit
//   64  usage error
//   65  input error: unreadable file, malformed JSON, schema or domain
//       violation (non-Hermitian block, zero gamble, null event, ...)
//   70  solver failure; residuals are reported

#include <chrono>
#include <cstdint>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <openssl/evp.h>

#include "qdt/io.hpp"
#include "qdt/properties.hpp"

namespace qdt::cli {

using io::json;

inline constexpr const char* kVersion = "1.0.0";

enum Exit : int {
  kOk = 0,
  kViolations = 1,
  kInvalidLottery = 2,
  kIncoherent = 3,
  kNegative = 4,
  kUsage = 64,
  kInput = 65,
  kSolver = 70,
};

struct RunConfig {
  std::string command;
  std::vector<std::string> inputs;
  double tol_psd = 1e-9;
  double eps_strict = 1e-8;
  double gap = 1e-9;
  std::uint64_t seed = 0;
  std::string format = "json";
  bool verbose = false;
  bool strict_exit = false;
  std::size_t trials = 100000;
  std::string suite;
  std::ostream* trace = nullptr;

  ConeSettings cone(ConeSettings base = {}) const {
    base.eps_min = eps_strict;
    base.solver.gap_tol = gap;
    base.solver.fallback_tol = std::max(base.solver.fallback_tol, gap);
    base.solver.trace = trace;
    return base;
  }
  ConeSettings probe() const { return cone(MaximalityOptions::probe_settings()); }

  json to_json() const {
    json j = {{"tol_psd", tol_psd}, {"eps_strict", eps_strict}, {"gap", gap}, {"seed", seed}, {"strict_exit", strict_exit}};
    if (command == "simulate") j["trials"] = trials;
    if (command == "properties") j["suite"] = suite;
    return j;
  }
};

inline std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::InvalidArgument, "SHA-256 unavailable");
  }
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return os.str();
}

/// Digest of the report without its timings and without the digest itself.
inline std::string report_digest(json report) {
  report.erase("timings");
  report.erase("report_digest");
  return sha256_hex(report.dump());
}

struct Outcome {
  json result;
  int exit = kOk;
};

namespace detail {

inline int negative(const RunConfig& cfg) { return cfg.strict_exit ? kNegative : kOk; }

inline Outcome incoherent(const LossCertificate& c) {
  return {{{"verdict", "incoherent"}, {"certificate", io::to_json(c)}}, kIncoherent};
}

inline Outcome validate(const RunConfig& cfg, const json& in) {
  const auto v = io::lottery_from_json(in, cfg.tol_psd);
  if (const auto* bad = std::get_if<LotteryViolation>(&v)) {
    return {{{"verdict", "invalid"}, {"violation", io::to_json(*bad)}}, kInvalidLottery};
  }
  const auto& q = std::get<QHLottery>(v);
  HermitianMatrix sum = HermitianMatrix::zero(q.n());
  for (std::size_t i = 0; i < q.m(); ++i) sum += q[i];
  const double residual = (sum - HermitianMatrix::identity(q.n())).max_abs();
  return {{{"verdict", "valid"}, {"m", q.m()}, {"n", q.n()}, {"sum_residual", residual}}, kOk};
}

inline Outcome coherence(const RunConfig& cfg, const json& in) {
  const auto a = io::assessment_from_json(in);
  const auto v = check_avoiding_partial_loss(ConeProblem(a.shape, a.gambles), cfg.cone());
  auto out = io::to_json(v);
  out["generators"] = a.gambles.size();
  return {std::move(out), is_coherent(v) ? kOk : kIncoherent};
}

inline Outcome prefer(const RunConfig& cfg, const json& in) {
  const auto q = io::preference_query_from_json(in, cfg.tol_psd);
  const auto settings = cfg.cone();
  std::optional<PreferenceRelation> rel;
  if (const auto* a = std::get_if<io::Assessment>(&q.relation)) {
    auto built = DesirableGambleSet::build(a->shape, a->gambles, settings);
    if (const auto* bad = std::get_if<LossCertificate>(&built)) return incoherent(*bad);
    rel = PreferenceRelation::from_set(std::get<DesirableGambleSet>(std::move(built)));
  } else {
    rel = PreferenceRelation::from_state(std::get<JointStateMatrix>(q.relation));
  }
  const auto v = rel->prefers(q.p, q.q, settings);
  return {io::to_json(v), v.prefers() ? kOk : negative(cfg)};
}

inline Outcome condition(const RunConfig& cfg, const json& in) {
  const auto r = io::condition_request_from_json(in, cfg.tol_psd);
  if (const auto* s = std::get_if<JointStateMatrix>(&r.model)) {
    const double pr = compress(s->blocks(), r.event).trace();
    const auto c = condition_state(*s, r.event);
    return {{{"kind", "state"}, {"probability", pr}, {"state", io::to_json(c)}}, kOk};
  }
  const auto& a = std::get<io::Assessment>(r.model);
  const auto settings = cfg.probe();
  auto built = DesirableGambleSet::build(a.shape, a.gambles, settings);
  if (const auto* bad = std::get_if<LossCertificate>(&built)) return incoherent(*bad);
  const auto cs = condition_set(std::get<DesirableGambleSet>(built), r.event, settings);
  return {{{"kind", "set"},
           {"upper_probability", cs.upper_probability()},
           {"base_state", io::to_json(cs.base_state())},
           {"certificate", io::to_json(cs.certificate())}},
          kOk};
}

inline Outcome represent(const RunConfig& cfg, const json& in) {
  const auto a = io::assessment_from_json(in);
  MaximalityOptions opt;
  opt.seed = cfg.seed;
  opt.cone = cfg.probe();
  auto built = DesirableGambleSet::build(a.shape, a.gambles, opt.cone);
  if (const auto* bad = std::get_if<LossCertificate>(&built)) return incoherent(*bad);
  const auto r = state_from_maximal(std::get<DesirableGambleSet>(built), opt);
  return {io::to_json(r), std::holds_alternative<JointStateMatrix>(r) ? kOk : negative(cfg)};
}

inline Outcome factorize(const RunConfig& cfg, const json& in) {
  const auto f = factorize_state(io::state_from_json(in, cfg.tol_psd));
  return {io::to_json(f), std::holds_alternative<StateFactorization>(f) ? kOk : negative(cfg)};
}

inline Outcome simulate(const RunConfig& cfg, const json& in) {
  const auto req = io::simulate_request_from_json(in, cfg.tol_psd);
  auto built = DesirableGambleSet::build(req.assessments.shape, req.assessments.gambles, cfg.cone());
  if (const auto* bad = std::get_if<LossCertificate>(&built)) return incoherent(*bad);
  const auto rep = simulate_no_sure_loss(std::get<DesirableGambleSet>(built), req.state, cfg.trials, cfg.seed);
  // no generator loses on average beyond four standard errors
  bool consistent = true;
  for (const auto& g : rep.gambles) consistent = consistent && g.mean >= -4.0 * g.std_error - 1e-12;
  auto out = io::to_json(rep);
  out["no_sure_loss"] = consistent;
  return {std::move(out), kOk};
}

inline Outcome properties(const RunConfig& cfg) {
  const auto rep = run_suite(cfg.suite, cfg.seed);
  json v = json::array();
  for (const auto& x : rep.violations) v.push_back({{"case", x.case_index}, {"detail", x.detail}});
  return {{{"suite", rep.suite}, {"seed", rep.seed}, {"cases", rep.cases}, {"violations", std::move(v)}, {"notes", rep.notes}},
          rep.ok() ? kOk : kViolations};
}

inline int exit_for(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidLottery: return kInvalidLottery;
    case ErrorCode::IncoherentGenerators: return kIncoherent;
    case ErrorCode::ConvergenceFailure:
    case ErrorCode::SolverNumericalFailure:
    case ErrorCode::IterationLimit: return kSolver;
    default: return kInput;
  }
}

inline void flatten(const json& j, const std::string& prefix, std::ostream& os) {
  if (j.is_object() && !(j.contains("re") && j.contains("n"))) {
    for (const auto& [k, v] : j.items()) flatten(v, prefix.empty() ? k : prefix + "." + k, os);
  } else if (j.is_array() && !j.empty() && j.front().is_object()) {
    for (std::size_t i = 0; i < j.size(); ++i) flatten(j[i], prefix + "[" + std::to_string(i) + "]", os);
  } else {
    os << prefix << ": " << (j.is_string() ? j.get<std::string>() : j.dump()) << "\n";
  }
}

}  // namespace detail

/// Text rendering of a report: one "key: value" line per leaf.
inline std::string render_text(const json& report) {
  std::ostringstream os;
  os << "qdt " << report["command"].get<std::string>() << "\n";
  if (report.contains("result")) detail::flatten(report["result"], "", os);
  if (report.contains("error")) detail::flatten(report["error"], "error", os);
  for (const auto& in : report["inputs"]) os << "input: " << in["path"].get<std::string>() << " sha256=" << in["sha256"].get<std::string>() << "\n";
  os << "exit: " << report["exit_code"].get<int>() << "\n";
  return os.str();
}

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"Quantum rational decision theory over Hermitian matrices", "qdt"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--tol-psd", cfg.tol_psd, "PSD / block-sum tolerance for lotteries and states")->check(CLI::PositiveNumber);
  app.add_option("--eps-strict", cfg.eps_strict, "Strict-desirability margin threshold")->check(CLI::PositiveNumber);
  app.add_option("--gap", cfg.gap, "Solver duality-gap tolerance")->check(CLI::PositiveNumber);
  app.add_option("--seed", cfg.seed, "Seed for every random choice");
  app.add_option("--format", cfg.format, "Report format")->check(CLI::IsMember({"json", "text"}));
  app.add_flag("--verbose", cfg.verbose, "Trace solver iterations to stderr");
  app.add_flag("--strict-exit", cfg.strict_exit, "Exit 4 on negative verdicts");

  std::string file;
  const std::pair<const char*, const char*> file_commands[] = {
      {"validate", "Validate a quantum horse lottery"},
      {"coherence", "Check an assessment for partial loss"},
      {"prefer", "Decide a preference query"},
      {"condition", "Condition an assessment or state on an event"},
      {"represent", "Recover the state of a maximal assessment"},
      {"factorize", "Split a joint state into prize pmf and density matrix"},
      {"simulate", "Play an assessment against a state"},
  };
  for (const auto& [name, help] : file_commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("file", file, "Input JSON")->required();
    if (std::string(name) == "simulate") sub->add_option("--trials", cfg.trials, "Number of draws")->check(CLI::Range(2, 100000000));
  }
  auto* props = app.add_subcommand("properties", "Run a seeded property suite");
  props->add_option("--suite", cfg.suite, "Suite name")->required()->check(CLI::IsMember(suite_names()));

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    err << "qdt: " << e.what() << "\n";
    return kUsage;
  }
  cfg.command = app.get_subcommands().front()->get_name();
  if (!file.empty()) cfg.inputs.push_back(file);

  const auto t0 = std::chrono::steady_clock::now();
  json report = {{"tool", "qdt"}, {"version", kVersion}, {"command", cfg.command}, {"config", cfg.to_json()},
                 {"inputs", json::array()}};
  int code = kOk;
  try {
    json in;
    for (const auto& path : cfg.inputs) {
      const auto bytes = io::read_file(path);
      report["inputs"].push_back({{"path", path}, {"sha256", sha256_hex(bytes)}});
      in = io::parse_json(bytes, path);
    }
    if (cfg.verbose) cfg.trace = &err;
    Outcome o;
    if (cfg.command == "validate") o = detail::validate(cfg, in);
    else if (cfg.command == "coherence") o = detail::coherence(cfg, in);
    else if (cfg.command == "prefer") o = detail::prefer(cfg, in);
    else if (cfg.command == "condition") o = detail::condition(cfg, in);
    else if (cfg.command == "represent") o = detail::represent(cfg, in);
    else if (cfg.command == "factorize") o = detail::factorize(cfg, in);
    else if (cfg.command == "simulate") o = detail::simulate(cfg, in);
    else o = detail::properties(cfg);
    report["result"] = std::move(o.result);
    code = o.exit;
  } catch (const SolverError& e) {
    code = kSolver;
    report["error"] = {{"code", to_string(e.code())},
                       {"message", e.what()},
                       {"primal_residual", e.primal_residual()},
                       {"dual_residual", e.dual_residual()},
                       {"gap", e.gap()},
                       {"iterations", e.iterations()}};
  } catch (const Error& e) {
    code = detail::exit_for(e.code());
    report["error"] = {{"code", to_string(e.code())}, {"message", e.what()}};
  } catch (const std::exception& e) {
    code = kSolver;
    report["error"] = {{"code", "Internal"}, {"message", e.what()}};
  }
  if (report.contains("error")) err << "qdt: " << report["error"]["message"].get<std::string>() << "\n";
  report["exit_code"] = code;
  report["report_digest"] = report_digest(report);
  report["timings"] = {{"total_ms", std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count()}};

  if (cfg.format == "text") {
    out << render_text(report);
  } else {
    out << report.dump(2) << "\n";
  }
  return code;
}

}  // namespace qdt::cli
