#pragma once

// JSON interchange. Matrices are {"n", "re", "im"} with row-major nested
// arrays ("im" may be omitted for real input); block lists carry "m" (number
// of prizes, z included) and "n". Schema errors name the offending path.

#include <fstream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "qdt/desirability.hpp"
#include "qdt/lottery.hpp"
#include "qdt/preference.hpp"
#include "qdt/state.hpp"
#include "qdt/updating.hpp"

namespace qdt::io {

using json = nlohmann::json;

[[noreturn]] inline void schema_error(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::InvalidInput, path + ": " + what);
}

inline const json& field(const json& j, const char* key, const std::string& path) {
  if (!j.is_object()) schema_error(path, "expected an object");
  const auto it = j.find(key);
  if (it == j.end()) schema_error(path, std::string("missing \"") + key + "\"");
  return *it;
}

inline double number(const json& j, const std::string& path) {
  if (!j.is_number()) schema_error(path, "expected a number");
  return j.get<double>();
}

inline std::size_t count(const json& j, const std::string& path) {
  if (!j.is_number_integer() || j.get<long long>() < 0) schema_error(path, "expected a non-negative integer");
  return j.get<std::size_t>();
}

inline MatrixXd real_matrix(const json& j, Index n, const std::string& path) {
  if (!j.is_array() || j.size() != static_cast<std::size_t>(n)) schema_error(path, "expected " + std::to_string(n) + " rows");
  MatrixXd out(n, n);
  for (Index r = 0; r < n; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    const auto rp = path + "[" + std::to_string(r) + "]";
    if (!row.is_array() || row.size() != static_cast<std::size_t>(n)) schema_error(rp, "expected " + std::to_string(n) + " entries");
    for (Index c = 0; c < n; ++c) out(r, c) = number(row[static_cast<std::size_t>(c)], rp + "[" + std::to_string(c) + "]");
  }
  return out;
}

inline HermitianMatrix matrix_from_json(const json& j, const std::string& path = "$") {
  const Index n = static_cast<Index>(count(field(j, "n", path), path + ".n"));
  if (n < 1) schema_error(path + ".n", "dimension must be positive");
  const MatrixXd re = real_matrix(field(j, "re", path), n, path + ".re");
  const MatrixXd im = j.contains("im") ? real_matrix(j["im"], n, path + ".im") : MatrixXd::Zero(n, n);
  try {
    return HermitianMatrix::from_complex(re.cast<cdouble>() + cdouble(0, 1) * im.cast<cdouble>());
  } catch (const Error& e) {
    schema_error(path, e.what());
  }
}

inline json to_json(const HermitianMatrix& h) {
  const Index n = h.dim();
  json re = json::array(), im = json::array();
  for (Index r = 0; r < n; ++r) {
    json a = json::array(), b = json::array();
    for (Index c = 0; c < n; ++c) {
      a.push_back(h(r, c).real());
      b.push_back(h(r, c).imag());
    }
    re.push_back(std::move(a));
    im.push_back(std::move(b));
  }
  return {{"n", n}, {"re", std::move(re)}, {"im", std::move(im)}};
}

inline json to_json(const BlockHermitian& b) {
  json out = json::array();
  for (const auto& h : b.blocks()) out.push_back(to_json(h));
  return out;
}

inline std::vector<HermitianMatrix> block_list(const json& j, std::size_t expected, Index n, const std::string& path) {
  if (!j.is_array() || j.size() != expected) schema_error(path, "expected " + std::to_string(expected) + " blocks");
  std::vector<HermitianMatrix> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto bp = path + "[" + std::to_string(i) + "]";
    out.push_back(matrix_from_json(j[i], bp));
    if (out.back().dim() != n) schema_error(bp, "block dimension differs from n = " + std::to_string(n));
  }
  return out;
}

inline std::pair<std::size_t, Index> shape_header(const json& j, const std::string& path) {
  const std::size_t m = count(field(j, "m", path), path + ".m");
  const Index n = static_cast<Index>(count(field(j, "n", path), path + ".n"));
  if (m < 2) schema_error(path + ".m", "need at least two prizes");
  if (n < 1) schema_error(path + ".n", "dimension must be positive");
  return {m, n};
}

/// {"m", "n", "blocks": [m matrices]}; violations are results, not errors.
inline LotteryCheck lottery_from_json(const json& j, double tol = QHLottery::kTol, const std::string& path = "$") {
  const auto [m, n] = shape_header(j, path);
  return validate_qh_lottery(block_list(field(j, "blocks", path), m, n, path + ".blocks"), tol);
}

/// As above, but an invalid lottery throws InvalidLottery.
inline QHLottery valid_lottery(const json& j, double tol = QHLottery::kTol, const std::string& path = "$") {
  auto v = lottery_from_json(j, tol, path);
  if (auto* bad = std::get_if<LotteryViolation>(&v)) throw Error(ErrorCode::InvalidLottery, path + ": " + bad->message);
  return std::get<QHLottery>(std::move(v));
}

inline json to_json(const QHLottery& q) {
  return {{"m", q.m()}, {"n", q.n()}, {"blocks", to_json(q.blocks())}};
}

struct Assessment {
  BlockShape shape;
  std::vector<BlockHermitian> gambles;
};

/// {"m", "n", "gambles": [{"blocks": [m-1 matrices]}, ...]}.
inline Assessment assessment_from_json(const json& j, const std::string& path = "$") {
  const auto [m, n] = shape_header(j, path);
  const auto& g = field(j, "gambles", path);
  if (!g.is_array()) schema_error(path + ".gambles", "expected an array");
  Assessment out{{m - 1, n}, {}};
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto gp = path + ".gambles[" + std::to_string(i) + "]";
    out.gambles.emplace_back(block_list(field(g[i], "blocks", gp), m - 1, n, gp + ".blocks"));
  }
  return out;
}

inline json to_json(const Assessment& a) {
  json g = json::array();
  for (const auto& x : a.gambles) g.push_back({{"blocks", to_json(x)}});
  return {{"m", a.shape.blocks + 1}, {"n", a.shape.n}, {"gambles", std::move(g)}};
}

/// {"m", "n", "blocks": [m-1 matrices]}: a joint state over the non-worst
/// prizes.
inline JointStateMatrix state_from_json(const json& j, double psd_tol = JointStateMatrix::kPsdTol,
                                        const std::string& path = "$") {
  const auto [m, n] = shape_header(j, path);
  auto blocks = block_list(field(j, "blocks", path), m - 1, n, path + ".blocks");
  try {
    return JointStateMatrix::from_blocks(BlockHermitian(std::move(blocks)), psd_tol);
  } catch (const Error& e) {
    schema_error(path, e.what());
  }
}

inline json to_json(const JointStateMatrix& r) {
  return {{"m", r.num_blocks() + 1}, {"n", r.block_dim()}, {"blocks", to_json(r.blocks())}};
}

/// {"vector": [...]} with real entries or [re, im] pairs; normalized.
inline Projector event_from_json(const json& j, const std::string& path = "$") {
  const auto& v = field(j, "vector", path);
  if (!v.is_array() || v.empty()) schema_error(path + ".vector", "expected a non-empty array");
  VectorXcd x(static_cast<Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto ep = path + ".vector[" + std::to_string(i) + "]";
    if (v[i].is_array()) {
      if (v[i].size() != 2) schema_error(ep, "complex entries are [re, im]");
      x(static_cast<Index>(i)) = cdouble(number(v[i][0], ep + "[0]"), number(v[i][1], ep + "[1]"));
    } else {
      x(static_cast<Index>(i)) = number(v[i], ep);
    }
  }
  if (!(x.norm() > 0.0)) schema_error(path + ".vector", "zero vector");
  return Projector::normalized(x);
}

inline json to_json(const Projector& p) {
  json v = json::array();
  for (Index i = 0; i < p.dim(); ++i) {
    const cdouble c = p.vector()(i);
    if (c.imag() == 0.0) {
      v.push_back(c.real());
    } else {
      v.push_back({c.real(), c.imag()});
    }
  }
  return {{"vector", std::move(v)}};
}

/// A relation model: {"kind": "sdg", "assessments": ...} or
/// {"kind": "state", "R": ...}.
using Model = std::variant<Assessment, JointStateMatrix>;

inline Model relation_from_json(const json& j, double psd_tol, const std::string& path = "$") {
  const auto& kind = field(j, "kind", path);
  if (kind == "sdg") return assessment_from_json(field(j, "assessments", path), path + ".assessments");
  if (kind == "state") return state_from_json(field(j, "R", path), psd_tol, path + ".R");
  schema_error(path + ".kind", "expected \"sdg\" or \"state\"");
}

inline json to_json(const Model& m) {
  if (const auto* a = std::get_if<Assessment>(&m)) return {{"kind", "sdg"}, {"assessments", to_json(*a)}};
  return {{"kind", "state"}, {"R", to_json(std::get<JointStateMatrix>(m))}};
}

struct PreferenceQuery {
  Model relation;
  QHLottery p, q;
};

inline PreferenceQuery preference_query_from_json(const json& j, double psd_tol = QHLottery::kTol) {
  return {relation_from_json(field(j, "relation", "$"), psd_tol, "$.relation"),
          valid_lottery(field(j, "P", "$"), psd_tol, "$.P"), valid_lottery(field(j, "Q", "$"), psd_tol, "$.Q")};
}

inline json to_json(const PreferenceQuery& q) {
  return {{"relation", to_json(q.relation)}, {"P", to_json(q.p)}, {"Q", to_json(q.q)}};
}

/// {"assessments": ...} or {"state": ...}, plus "event".
struct ConditionRequest {
  Model model;
  Projector event;
};

inline ConditionRequest condition_request_from_json(const json& j, double psd_tol = JointStateMatrix::kPsdTol) {
  const bool a = j.is_object() && j.contains("assessments");
  const bool s = j.is_object() && j.contains("state");
  if (a == s) schema_error("$", "expected exactly one of \"assessments\" and \"state\"");
  Model model = a ? Model(assessment_from_json(j["assessments"], "$.assessments"))
                  : Model(state_from_json(j["state"], psd_tol, "$.state"));
  return {std::move(model), event_from_json(field(j, "event", "$"), "$.event")};
}

inline json to_json(const ConditionRequest& r) {
  json out;
  if (const auto* a = std::get_if<Assessment>(&r.model)) {
    out["assessments"] = to_json(*a);
  } else {
    out["state"] = to_json(std::get<JointStateMatrix>(r.model));
  }
  out["event"] = to_json(r.event);
  return out;
}

/// {"assessments": ..., "state": ...}: the gambles and the state that
/// plays them.
struct SimulateRequest {
  Assessment assessments;
  JointStateMatrix state;
};

inline SimulateRequest simulate_request_from_json(const json& j, double psd_tol = JointStateMatrix::kPsdTol) {
  return {assessment_from_json(field(j, "assessments", "$"), "$.assessments"),
          state_from_json(field(j, "state", "$"), psd_tol, "$.state")};
}

inline json to_json(const SimulateRequest& r) {
  return {{"assessments", to_json(r.assessments)}, {"state", to_json(r.state)}};
}

// ---- results ----

inline json to_json(const LotteryViolation& v) {
  return {{"kind", v.kind == LotteryViolation::Kind::NegativeBlock ? "negative_block" : "sum_residual"},
          {"block", v.block},
          {"value", v.value},
          {"message", v.message}};
}

inline json to_json(const DualCertificate& c) { return {{"rho", to_json(c.rho)}, {"margin", c.margin}}; }

inline json to_json(const LossCertificate& c) {
  return {{"kind", to_string(c.kind)}, {"weights", c.weights}, {"combination", to_json(c.combo)}};
}

inline json to_json(const CoherenceVerdict& v) {
  if (const auto* c = std::get_if<Coherent>(&v)) return {{"verdict", "coherent"}, {"certificate", to_json(c->certificate)}};
  return {{"verdict", "incoherent"}, {"certificate", to_json(std::get<Incoherent>(v).certificate)}};
}

inline json to_json(const MembershipVerdict& v) { return {{"verdict", to_string(v.tag)}, {"margin", v.margin}}; }

inline json to_json(const PreferenceVerdict& v) {
  return {{"verdict", to_string(v.tag)}, {"channel", to_string(v.channel)}, {"margin", v.margin}};
}

inline json to_json(const MaximalityResult& r) {
  if (const auto* s = std::get_if<JointStateMatrix>(&r)) return {{"verdict", "maximal"}, {"R", to_json(*s)}};
  const auto& nm = std::get<NotMaximal>(r);
  json ext = json::array();
  for (const auto& e : nm.extreme_points) ext.push_back(to_json(e));
  return {{"verdict", "not_maximal"}, {"diameter", nm.diameter}, {"widest", nm.widest}, {"extreme_points", std::move(ext)}};
}

inline json to_json(const FactorizationResult& f) {
  if (const auto* s = std::get_if<StateFactorization>(&f)) {
    return {{"verdict", "factorizable"},
            {"p", s->p.weights()},
            {"rho", to_json(s->rho)},
            {"residual", s->residual},
            {"degenerate", s->degenerate}};
  }
  const auto& nf = std::get<NotFactorizable>(f);
  return {{"verdict", "not_factorizable"}, {"deviation", nf.deviation}, {"blocks", {nf.i, nf.j}}};
}

inline json to_json(const SimulationReport& r) {
  json g = json::array();
  for (const auto& s : r.gambles) {
    g.push_back({{"mean", s.mean}, {"std_error", s.std_error}, {"min_payoff", s.min_payoff}, {"expected", s.expected}});
  }
  return {{"trials", r.trials}, {"seed", r.seed}, {"gambles", std::move(g)}};
}

inline json to_json(const AxiomReport& r) {
  json checked = json::object();
  for (std::size_t a = 0; a < kAxiomCount; ++a) checked[to_string(static_cast<Axiom>(a))] = r.checked[a];
  json v = json::array();
  for (const auto& x : r.violations) {
    v.push_back({{"axiom", to_string(x.axiom)}, {"seed", x.seed}, {"sample", x.sample}, {"detail", x.detail}});
  }
  return {{"samples", r.samples}, {"checked", std::move(checked)}, {"inconclusive", r.inconclusive}, {"violations", std::move(v)}};
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::InvalidInput, path + ": cannot open");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Parse errors report the byte offset.
inline json parse_json(const std::string& text, const std::string& origin = "<input>") {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::ostringstream os;
    os << origin << ": parse error at byte " << e.byte;
    throw Error(ErrorCode::InvalidInput, os.str());
  }
}

inline json read_json_file(const std::string& path) { return parse_json(read_file(path), path); }

}  // namespace qdt::io
