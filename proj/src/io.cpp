#include "basisforge/io.hpp"

#include "basisforge/error.hpp"

#include <json.hpp>

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

namespace basisforge {

using json = nlohmann::json;

// ---- matrix CSV ----

namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

double parse_double(std::string_view field, long line) {
  field = trim(field);
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size() || field.empty())
    throw InputError("CSV line " + std::to_string(line) + ": cannot parse '" + std::string(field) + "'");
  if (!std::isfinite(v)) throw InputError("CSV line " + std::to_string(line) + ": non-finite value");
  return v;
}

}  // namespace

void write_matrix_csv(std::ostream& os, const Matrix& m, bool header) {
  if (header) os << "# " << m.rows() << ' ' << m.cols() << '\n';
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) os << ',';
      os << format_double(m(i, j));
    }
    os << '\n';
  }
}

Matrix read_matrix_csv(std::istream& is) {
  std::vector<std::vector<double>> rows;
  std::optional<std::pair<long, long>> declared;
  std::string line;
  long lineNo = 0;
  while (std::getline(is, line)) {
    ++lineNo;
    std::string_view s = trim(line);
    if (s.empty()) continue;
    if (s.front() == '#') {
      if (lineNo == 1) {
        std::istringstream hs{std::string(s.substr(1))};
        long r = -1, c = -1;
        if (hs >> r >> c && r >= 0 && c >= 0) declared = {r, c};
      }
      continue;
    }
    std::vector<double> row;
    std::size_t pos = 0;
    while (true) {
      const std::size_t comma = s.find(',', pos);
      row.push_back(parse_double(s.substr(pos, comma == std::string_view::npos ? s.size() - pos : comma - pos), lineNo));
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw InputError("CSV line " + std::to_string(lineNo) + ": expected " + std::to_string(rows.front().size()) +
                       " columns, got " + std::to_string(row.size()));
    rows.push_back(std::move(row));
  }
  const Index r = static_cast<Index>(rows.size());
  const Index c = rows.empty() ? 0 : static_cast<Index>(rows.front().size());
  if (declared && (declared->first != r || declared->second != c))
    throw InputError("CSV header declares " + std::to_string(declared->first) + "x" +
                     std::to_string(declared->second) + " but body is " + std::to_string(r) + "x" + std::to_string(c));
  Matrix m(r, c);
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < c; ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return m;
}

void save_matrix_csv(const std::string& path, const Matrix& m, bool header) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  write_matrix_csv(os, m, header);
  if (!os) throw IoError("write to '" + path + "' failed");
}

Matrix load_matrix_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open '" + path + "'");
  return read_matrix_csv(is);
}

std::string read_text_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// ---- logs ----

void write_train_log(std::ostream& os, const TrainLog& log, bool wallTime) {
  for (const auto& r : log.records) {
    json j = {{"iteration", r.iteration},
              {"objective", r.objective},
              {"reconstruction", r.reconstruction},
              {"coeff_penalty", r.coeffPenalty},
              {"graph", r.graph},
              {"basis_penalty", r.basisPenalty},
              {"dead_atom_replacements", r.deadAtomReplacements},
              {"basis_rejected", r.basisRejected}};
    if (r.spectralRadius >= 0.0) {
      j["dynamics"] = r.dynamics;
      j["operator_penalty"] = r.operatorPenalty;
      j["spectral_radius"] = r.spectralRadius;
    }
    if (wallTime) j["wall_time"] = r.wallTime;
    os << j.dump() << '\n';
  }
}

void write_bslm_log(std::ostream& os, const BslmLog& log, bool wallTime) {
  for (const auto& r : log.records) {
    json j = {{"epoch", r.epoch},
              {"mean_nll", r.meanNll},
              {"perplexity", r.perplexity},
              {"transition", r.transition},
              {"state_penalty", r.statePenalty},
              {"reconstruction", r.reconstruction},
              {"spectral_radius", r.spectralRadius}};
    if (wallTime) j["wall_time"] = r.wallTime;
    os << j.dump() << '\n';
  }
}

// ---- configs ----

namespace {

// Typed access to a JSON object that rejects keys nobody asked about.
class Fields {
 public:
  Fields(const json& obj, std::string where) : obj_(obj), where_(std::move(where)) {
    if (!obj_.is_object()) throw ConfigError(where_ + " must be a JSON object");
  }

  bool has(const char* key) {
    used_.insert(key);
    return obj_.contains(key) && !obj_.at(key).is_null();
  }
  const json& raw(const char* key) {
    used_.insert(key);
    return obj_.at(key);
  }

  template <class T>
  void get(const char* key, T& out) {
    if (!has(key)) return;
    const json& v = obj_.at(key);
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ConfigError("");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) throw ConfigError("");
        if constexpr (std::is_unsigned_v<T>) {
          if (v.is_number_unsigned() || v.get<long long>() >= 0) {
            out = v.get<T>();
            return;
          }
          throw ConfigError("");
        }
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) throw ConfigError("");
      } else {
        if (!v.is_string()) throw ConfigError("");
      }
      out = v.get<T>();
    } catch (const ConfigError&) {
      throw ConfigError(where_ + "." + key + " has the wrong type");
    }
  }

  template <class T>
  void get(const char* key, std::optional<T>& out) {
    if (!has(key)) return;
    T v{};
    get(key, v);
    out = v;
  }

  std::string str(const char* key, const std::string& dflt) {
    std::string s = dflt;
    get(key, s);
    return s;
  }

  void finish() const {
    for (const auto& [k, v] : obj_.items())
      if (!used_.count(k)) throw ConfigError("unknown config key '" + where_ + "." + k + "'");
  }

 private:
  const json& obj_;
  std::string where_;
  std::set<std::string> used_;
};

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
}

CoeffPenaltyKind coeff_kind(const std::string& s) {
  if (s == "l1") return CoeffPenaltyKind::L1;
  if (s == "squared_l2") return CoeffPenaltyKind::SquaredL2;
  if (s == "group_l2") return CoeffPenaltyKind::GroupL2;
  throw ConfigError("unknown coefficient penalty kind '" + s + "'");
}

std::string coeff_kind_name(CoeffPenaltyKind k) {
  switch (k) {
    case CoeffPenaltyKind::L1: return "l1";
    case CoeffPenaltyKind::SquaredL2: return "squared_l2";
    case CoeffPenaltyKind::GroupL2: return "group_l2";
  }
  return "l1";
}

}  // namespace

RunConfig parse_run_config(const std::string& text) {
  const json doc = parse_json(text);
  Fields f(doc, "config");
  RunConfig rc;
  DvblConfig& c = rc.model;
  long long atoms = c.atoms;
  f.get("atoms", atoms);
  c.atoms = static_cast<Index>(atoms);

  if (f.has("coeffPenalty")) {
    Fields p(f.raw("coeffPenalty"), "coeffPenalty");
    c.coeffPenalty.kind = coeff_kind(p.str("kind", "l1"));
    p.get("weight", c.coeffPenalty.weight);
    if (p.has("groups")) {
      try {
        c.coeffPenalty.groups = p.raw("groups").get<std::vector<std::vector<Index>>>();
      } catch (const json::exception&) {
        throw ConfigError("coeffPenalty.groups must be a list of index lists");
      }
    }
    p.finish();
  }
  if (f.has("basisPenalty")) {
    Fields p(f.raw("basisPenalty"), "basisPenalty");
    const std::string kind = p.str("kind", "frobenius");
    if (kind == "frobenius") c.basisPenalty.kind = BasisPenaltyKind::Frobenius;
    else if (kind == "smoothness") c.basisPenalty.kind = BasisPenaltyKind::Smoothness;
    else if (kind == "orthogonality") c.basisPenalty.kind = BasisPenaltyKind::Orthogonality;
    else if (kind == "linear_operator") c.basisPenalty.kind = BasisPenaltyKind::LinearOperator;
    else throw ConfigError("unknown basis penalty kind '" + kind + "'");
    p.get("weight", c.basisPenalty.weight);
    if (c.basisPenalty.kind == BasisPenaltyKind::Smoothness) c.basisPenalty.stencil = SmoothnessStencil{};
    if (p.has("stencil")) {
      Fields s(p.raw("stencil"), "basisPenalty.stencil");
      SmoothnessStencil st;
      long long r = 0, cc = 0;
      s.get("gridRows", r);
      s.get("gridCols", cc);
      st.gridRows = static_cast<Index>(r);
      st.gridCols = static_cast<Index>(cc);
      s.finish();
      c.basisPenalty.stencil = st;
    }
    if (p.has("operator")) {
      Fields o(p.raw("operator"), "basisPenalty.operator");
      long long r = 0, cc = 0;
      o.get("rows", r);
      o.get("cols", cc);
      if (r < 1 || cc < 1) throw ConfigError("basisPenalty.operator needs positive rows and cols");
      std::vector<Eigen::Triplet<double>> trips;
      if (o.has("entries")) {
        const json& e = o.raw("entries");
        if (!e.is_array()) throw ConfigError("basisPenalty.operator.entries must be a list of [row, col, value]");
        for (const auto& t : e) {
          if (!t.is_array() || t.size() != 3 || !t[0].is_number_integer() || !t[1].is_number_integer() ||
              !t[2].is_number())
            throw ConfigError("basisPenalty.operator.entries must be a list of [row, col, value]");
          const long long i = t[0].get<long long>(), j = t[1].get<long long>();
          if (i < 0 || i >= r || j < 0 || j >= cc) throw ConfigError("basisPenalty.operator entry out of range");
          trips.emplace_back(static_cast<Index>(i), static_cast<Index>(j), t[2].get<double>());
        }
      }
      o.finish();
      SparseMatrix g(static_cast<Index>(r), static_cast<Index>(cc));
      g.setFromTriplets(trips.begin(), trips.end());
      c.basisPenalty.op = std::move(g);
    }
    p.finish();
  }
  f.get("graphWeight", c.graphWeight);
  f.get("dynWeight", c.dynWeight);
  f.get("opWeight", c.opWeight);
  f.get("maxIters", c.maxIters);
  f.get("stopEps", c.stopEps);
  f.get("seed", c.seed);
  f.get("coherenceCap", c.coherenceCap);

  const std::string init = f.str("init", "data_columns");
  if (init == "data_columns") rc.train.init = InitKind::DataColumns;
  else if (init == "random_gaussian") rc.train.init = InitKind::RandomGaussianNormalized;
  else if (init == "svd") rc.train.init = InitKind::SvdTopM;
  else throw ConfigError("unknown init '" + init + "'");
  if (f.has("solver")) {
    Fields s(f.raw("solver"), "solver");
    s.get("maxInnerIters", rc.train.solver.maxInnerIters);
    s.get("tol", rc.train.solver.tol);
    s.get("acceleration", rc.train.solver.acceleration);
    const std::string rule = s.str("stepRule", "fixed");
    if (rule == "fixed") rc.train.solver.stepRule = StepRule::Fixed;
    else if (rule == "backtracking") rc.train.solver.stepRule = StepRule::Backtracking;
    else throw ConfigError("unknown solver.stepRule '" + rule + "'");
    s.finish();
  }
  f.get("innerTolStart", rc.train.innerTolStart);
  f.get("wallTimeCap", rc.train.wallTimeCap);
  f.get("coherencePasses", rc.train.coherencePasses);
  if (f.has("graph")) {
    Fields g(f.raw("graph"), "graph");
    GraphSpec gs;
    long long k = gs.k;
    g.get("k", k);
    gs.k = static_cast<Index>(k);
    if (g.has("sigma")) {
      const json& s = g.raw("sigma");
      if (s.is_string() && s.get<std::string>() == "median") gs.scale = MedianScale{};
      else if (s.is_number() && s.get<double>() > 0.0) gs.scale = FixedScale{s.get<double>()};
      else throw ConfigError("graph.sigma must be \"median\" or a positive number");
    }
    g.get("edges", gs.edgesPath);
    g.finish();
    rc.graph = gs;
  }
  f.get("rhoMax", rc.rhoMax);
  f.finish();

  c.validate();
  rc.train.solver.validate();
  if (rc.rhoMax && !(*rc.rhoMax > 0.0 && *rc.rhoMax <= 1.0)) throw ConfigError("rhoMax must lie in (0, 1]");
  return rc;
}

BslmHyper parse_bslm_hyper(const std::string& text) {
  const json doc = parse_json(text);
  Fields f(doc, "config");
  BslmHyper h;
  long long atoms = h.atoms, block = h.blockLen;
  f.get("atoms", atoms);
  f.get("blockLen", block);
  h.atoms = static_cast<Index>(atoms);
  h.blockLen = static_cast<Index>(block);
  f.get("codeWeight", h.codeWeight);
  f.get("stateWeight", h.stateWeight);
  const std::string sp = f.str("statePenalty", "squared_l2");
  if (sp == "squared_l2") h.statePenalty = CoeffPenaltyKind::SquaredL2;
  else if (sp == "l1") h.statePenalty = CoeffPenaltyKind::L1;
  else throw ConfigError("statePenalty must be \"squared_l2\" or \"l1\"");
  f.get("transitionWeight", h.transitionWeight);
  f.get("basisWeight", h.basisWeight);
  f.get("ridge", h.ridge);
  f.get("statsDecay", h.statsDecay);
  f.get("epochs", h.epochs);
  f.get("stateIters", h.stateIters);
  f.get("learningRate", h.learningRate);
  f.get("learningRateDecay", h.learningRateDecay);
  f.get("readoutSteps", h.readoutSteps);
  if (doc.contains("rhoMax") && doc.at("rhoMax").is_null()) {
    f.has("rhoMax");
    h.rhoMax.reset();
  } else {
    f.get("rhoMax", h.rhoMax);
  }
  const std::string ro = f.str("readout", "direct");
  if (ro == "direct") h.readout = ReadoutMode::Direct;
  else if (ro == "basis") h.readout = ReadoutMode::Basis;
  else throw ConfigError("readout must be \"direct\" or \"basis\"");
  const std::string lv = f.str("level", "char");
  if (lv == "char") h.level = TokenLevel::Char;
  else if (lv == "word") h.level = TokenLevel::Word;
  else throw ConfigError("level must be \"char\" or \"word\"");
  f.get("seed", h.seed);
  f.finish();
  h.validate();
  return h;
}

// ---- reports ----

std::string recovery_report_json(const RecoveryReport& r) {
  json matching = json::array();
  for (const auto& m : r.matching)
    matching.push_back({{"learned", m.learned}, {"truth", m.truth}, {"sign", m.sign}, {"absCorrelation", m.absCorrelation}});
  json j = {{"matching", matching}, {"meanAbsCorrelation", r.meanAbsCorrelation}};
  j["supportRecoveryRate"] = r.supportRecoveryRate ? json(*r.supportRecoveryRate) : json(nullptr);
  return j.dump(2);
}

// ---- base64 ----

namespace {
constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
}

std::string base64_encode(const std::string& bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const std::uint32_t v = (std::uint32_t(std::uint8_t(bytes[i])) << 16) |
                            (std::uint32_t(std::uint8_t(bytes[i + 1])) << 8) | std::uint8_t(bytes[i + 2]);
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += kAlphabet[v & 63];
  }
  if (i < bytes.size()) {
    std::uint32_t v = std::uint32_t(std::uint8_t(bytes[i])) << 16;
    if (i + 1 < bytes.size()) v |= std::uint32_t(std::uint8_t(bytes[i + 1])) << 8;
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += i + 1 < bytes.size() ? kAlphabet[(v >> 6) & 63] : '=';
    out += '=';
  }
  return out;
}

std::string base64_decode(const std::string& text) {
  if (text.size() % 4 != 0) throw InputError("base64 length must be a multiple of 4");
  auto value = [](char ch) -> int {
    const char* p = std::strchr(kAlphabet, ch);
    return (ch != '\0' && p) ? static_cast<int>(p - kAlphabet) : -1;
  };
  std::string out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    int v[4];
    int pad = 0;
    for (int k = 0; k < 4; ++k) {
      const char ch = text[i + static_cast<std::size_t>(k)];
      if (ch == '=' && i + 4 == text.size() && k >= 2) {
        v[k] = 0;
        ++pad;
      } else {
        if (pad) throw InputError("invalid base64 padding");
        v[k] = value(ch);
        if (v[k] < 0) throw InputError("invalid base64 character");
      }
    }
    const std::uint32_t w = (std::uint32_t(v[0]) << 18) | (std::uint32_t(v[1]) << 12) | (std::uint32_t(v[2]) << 6) |
                            std::uint32_t(v[3]);
    out += static_cast<char>((w >> 16) & 0xFF);
    if (pad < 2) out += static_cast<char>((w >> 8) & 0xFF);
    if (pad < 1) out += static_cast<char>(w & 0xFF);
  }
  return out;
}

// ---- checkpoint ----

namespace {

constexpr const char* kFormat = "basisforge-bslm";
constexpr int kVersion = 1;

json matrix_blob(const Matrix& m) {
  std::string bytes;
  bytes.reserve(static_cast<std::size_t>(m.size()) * 8);
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) {
      std::uint64_t u = std::bit_cast<std::uint64_t>(m(i, j));
      for (int b = 0; b < 8; ++b) bytes += static_cast<char>((u >> (8 * b)) & 0xFF);
    }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", base64_encode(bytes)}};
}

Matrix matrix_from_blob(const json& j, const char* name) {
  try {
    const Index r = j.at("rows").get<Index>(), c = j.at("cols").get<Index>();
    if (r < 0 || c < 0) throw InputError("");
    const std::string bytes = base64_decode(j.at("data").get<std::string>());
    if (bytes.size() != static_cast<std::size_t>(r * c) * 8) throw InputError("");
    Matrix m(r, c);
    std::size_t pos = 0;
    for (Index i = 0; i < r; ++i)
      for (Index k = 0; k < c; ++k) {
        std::uint64_t u = 0;
        for (int b = 0; b < 8; ++b) u |= std::uint64_t(std::uint8_t(bytes[pos++])) << (8 * b);
        m(i, k) = std::bit_cast<double>(u);
      }
    return m;
  } catch (const std::exception&) {
    throw InputError(std::string("checkpoint matrix '") + name + "' is malformed");
  }
}

json hyper_json(const BslmHyper& h) {
  json j = {{"atoms", h.atoms},
            {"blockLen", h.blockLen},
            {"codeWeight", h.codeWeight},
            {"stateWeight", h.stateWeight},
            {"statePenalty", coeff_kind_name(h.statePenalty)},
            {"transitionWeight", h.transitionWeight},
            {"basisWeight", h.basisWeight},
            {"ridge", h.ridge},
            {"statsDecay", h.statsDecay},
            {"epochs", h.epochs},
            {"stateIters", h.stateIters},
            {"learningRate", h.learningRate},
            {"learningRateDecay", h.learningRateDecay},
            {"readoutSteps", h.readoutSteps},
            {"readout", h.readout == ReadoutMode::Basis ? "basis" : "direct"},
            {"level", h.level == TokenLevel::Word ? "word" : "char"},
            {"seed", h.seed}};
  j["rhoMax"] = h.rhoMax ? json(*h.rhoMax) : json(nullptr);
  return j;
}

}  // namespace

std::string encode_checkpoint(const BslmModel& model, const BslmHyper& hyper) {
  model.validate();
  json mats = {{"phi", matrix_blob(model.phi.values())},
               {"A", matrix_blob(model.aop)},
               {"B", matrix_blob(model.b)},
               {"C", matrix_blob(model.c)},
               {"d", matrix_blob(model.dOff)}};
  if (model.readoutMap) mats["M"] = matrix_blob(*model.readoutMap);
  json j = {{"format", kFormat},
            {"version", kVersion},
            {"vocab", {{"level", model.vocab.level() == TokenLevel::Word ? "word" : "char"},
                       {"tokens", model.vocab.tokens()}}},
            {"mode", model.mode == ReadoutMode::Basis ? "basis" : "direct"},
            {"hyper", hyper_json(hyper)},
            {"matrices", mats}};
  return j.dump(1) + "\n";
}

Checkpoint decode_checkpoint(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || j.value("format", "") != kFormat) throw InputError("not a basisforge checkpoint");
  if (j.value("version", 0) != kVersion) throw InputError("unsupported checkpoint version");
  try {
    const json& v = j.at("vocab");
    const TokenLevel level = v.at("level").get<std::string>() == "word" ? TokenLevel::Word : TokenLevel::Char;
    Vocabulary vocab(v.at("tokens").get<std::vector<std::string>>(), level);
    BslmHyper hyper = parse_bslm_hyper(j.at("hyper").dump());
    const json& m = j.at("matrices");
    const Matrix d = matrix_from_blob(m.at("d"), "d");
    if (d.cols() != 1) throw InputError("checkpoint offset must be a column vector");
    std::optional<Matrix> map;
    if (m.contains("M")) map = matrix_from_blob(m.at("M"), "M");
    BslmModel model{std::move(vocab),
                    Basis(matrix_from_blob(m.at("phi"), "phi")),
                    matrix_from_blob(m.at("A"), "A"),
                    matrix_from_blob(m.at("B"), "B"),
                    matrix_from_blob(m.at("C"), "C"),
                    d.col(0),
                    std::move(map),
                    j.at("mode").get<std::string>() == "basis" ? ReadoutMode::Basis : ReadoutMode::Direct};
    model.validate();
    return {std::move(model), hyper};
  } catch (const json::exception& e) {
    throw InputError(std::string("checkpoint is missing fields: ") + e.what());
  }
}

void save_checkpoint(const std::string& path, const BslmModel& model, const BslmHyper& hyper) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  os << encode_checkpoint(model, hyper);
  if (!os) throw IoError("write to '" + path + "' failed");
}

Checkpoint load_checkpoint(const std::string& path) { return decode_checkpoint(read_text_file(path)); }

}  // namespace basisforge
