// basisforge command-line front end. Talks to the library only through the
// C interface in basisforge.h.

#include "basisforge/basisforge.h"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;

// Failure carrying the exit status it maps to.
struct CliFailure {
  int code;
  std::string message;
};

int exit_code(bf_status s) {
  if (s == BF_ERR_NUMERIC) return kExitNumeric;
  if (s == BF_ERR_INTERNAL) return 1;
  return kExitUsage;
}

void check(bf_status s, const std::string& what) {
  if (s != BF_OK) throw CliFailure{exit_code(s), what + ": " + bf_last_error()};
}

struct MatrixDeleter {
  void operator()(bf_matrix* m) const { bf_matrix_free(m); }
};
using MatrixPtr = std::unique_ptr<bf_matrix, MatrixDeleter>;

struct StringDeleter {
  void operator()(char* s) const { bf_free_string(s); }
};
using StringPtr = std::unique_ptr<char, StringDeleter>;

std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CliFailure{kExitUsage, "cannot open '" + path + "'"};
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& body) {
  std::ofstream os(path, std::ios::binary);
  if (!os || !(os << body)) throw CliFailure{kExitUsage, "cannot write '" + path.string() + "'"};
}

MatrixPtr load_matrix(const std::string& path) {
  bf_matrix* m = nullptr;
  check(bf_matrix_load_csv(path.c_str(), &m), "reading " + path);
  return MatrixPtr(m);
}

void save_matrix(const bf_matrix* m, const fs::path& path) {
  check(bf_matrix_save_csv(m, path.string().c_str(), 0), "writing " + path.string());
}

void make_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw CliFailure{kExitUsage, "cannot create '" + dir + "': " + ec.message()};
}

std::optional<std::uint64_t> env_seed() {
  const char* s = std::getenv("BASISFORGE_SEED");
  if (!s || !*s) return std::nullopt;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s, &end, 10);
  if (*end != '\0') throw CliFailure{kExitUsage, "BASISFORGE_SEED must be a non-negative integer"};
  return v;
}

// Config text with the seed override applied: --seed, then BASISFORGE_SEED,
// then the file's own value.
std::string load_config(const std::string& path, const std::optional<std::uint64_t>& flagSeed) {
  const std::string text = read_file(path);
  std::optional<std::uint64_t> seed = flagSeed ? flagSeed : env_seed();
  if (!seed) return text;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw CliFailure{kExitUsage, "config is not valid JSON: " + std::string(e.what())};
  }
  if (!j.is_object()) throw CliFailure{kExitUsage, "config must be a JSON object"};
  j["seed"] = *seed;
  return j.dump();
}

struct Common {
  int threads = 1;
  std::optional<std::uint64_t> seed;
  bool noWallTime = false;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--threads", c.threads, "inner worker threads (1 = bit-reproducible)")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", c.seed, "override the config seed");
  cmd->add_flag("--no-wall-time", c.noWallTime, "omit wall-clock fields from logs");
}

// ---- fit ----

struct FitArgs {
  std::string config, data, out, graph;
  Common common;
};

int cmd_fit(const FitArgs& a) {
  bf_set_num_threads(a.common.threads);
  const std::string cfg = load_config(a.config, a.common.seed);
  MatrixPtr x = load_matrix(a.data);
  bf_graph* graph = nullptr;
  if (!a.graph.empty())
    check(bf_graph_load_edges(a.graph.c_str(), bf_matrix_cols(x.get()), &graph), "reading graph " + a.graph);
  make_dir(a.out);
  const fs::path out(a.out);

  bf_fit* fit = nullptr;
  const bf_status s = bf_fit_run(x.get(), cfg.c_str(), graph, &fit);
  const std::string err = bf_last_error();
  bf_graph_free(graph);
  std::unique_ptr<bf_fit, void (*)(bf_fit*)> guard(fit, bf_fit_free);
  if (fit) check(bf_fit_save_log(fit, (out / "log.jsonl").string().c_str(), !a.common.noWallTime), "writing log");
  if (s != BF_OK) throw CliFailure{exit_code(s), "fit failed: " + err};

  bf_matrix* basis = nullptr;
  bf_matrix* coeffs = nullptr;
  check(bf_fit_basis(fit, &basis), "basis");
  MatrixPtr basisPtr(basis);
  check(bf_fit_coeffs(fit, &coeffs), "coefficients");
  MatrixPtr coeffsPtr(coeffs);
  save_matrix(basis, out / "basis.csv");
  save_matrix(coeffs, out / "coeffs.csv");
  char* summary = nullptr;
  check(bf_fit_summary(fit, &summary), "summary");
  StringPtr summaryPtr(summary);
  write_file(out / "summary.json", summary);
  std::cout << summary;
  return kExitOk;
}

// ---- fit-dynamic ----

struct DynArgs {
  std::string config, data, out;
  std::size_t horizon = 10;
  Common common;
};

int cmd_fit_dynamic(const DynArgs& a) {
  bf_set_num_threads(a.common.threads);
  const std::string cfg = load_config(a.config, a.common.seed);
  MatrixPtr x = load_matrix(a.data);
  make_dir(a.out);
  const fs::path out(a.out);

  bf_dynfit* fit = nullptr;
  const bf_status s = bf_dynfit_run(x.get(), cfg.c_str(), &fit);
  const std::string err = bf_last_error();
  std::unique_ptr<bf_dynfit, void (*)(bf_dynfit*)> guard(fit, bf_dynfit_free);
  if (fit) check(bf_dynfit_save_log(fit, (out / "log.jsonl").string().c_str(), !a.common.noWallTime), "writing log");
  if (s != BF_OK) throw CliFailure{exit_code(s), "dynamic fit failed: " + err};

  bf_matrix* m = nullptr;
  check(bf_dynfit_basis(fit, &m), "basis");
  save_matrix(MatrixPtr(m).get(), out / "basis.csv");
  check(bf_dynfit_states(fit, &m), "states");
  save_matrix(MatrixPtr(m).get(), out / "states.csv");
  check(bf_dynfit_operator(fit, &m), "operator");
  save_matrix(MatrixPtr(m).get(), out / "operator.csv");
  if (a.horizon > 0) {
    check(bf_dynfit_forecast(fit, a.horizon, &m), "forecast");
    save_matrix(MatrixPtr(m).get(), out / "forecast.csv");
  }
  char* summary = nullptr;
  check(bf_dynfit_summary(fit, &summary), "summary");
  StringPtr summaryPtr(summary);
  write_file(out / "summary.json", summary);
  std::cout << summary;
  return kExitOk;
}

// ---- synth ----

struct SynthArgs {
  std::size_t d = 0, m = 0, s = 0, n = 0, t = 200;
  double noise = 0.0, rho = 0.95;
  std::optional<std::uint64_t> seed;
  bool dynamic = false;
  std::string out = ".";
};

int cmd_synth(const SynthArgs& a) {
  const std::uint64_t seed = a.seed ? *a.seed : env_seed().value_or(0);
  make_dir(a.out);
  const fs::path out(a.out);
  if (a.dynamic) {
    bf_matrix *x = nullptr, *phi = nullptr, *z = nullptr, *op = nullptr;
    check(bf_synth_linear(a.d, a.m, a.t, a.rho, a.noise, seed, &x, &phi, &z, &op), "synth");
    MatrixPtr px(x), pp(phi), pz(z), pa(op);
    save_matrix(x, out / "X.csv");
    save_matrix(phi, out / "phi_star.csv");
    save_matrix(z, out / "z_star.csv");
    save_matrix(op, out / "a_star.csv");
    std::cout << "wrote X (" << a.d << "x" << a.t << "), phi_star (" << a.d << "x" << a.m << "), z_star ("
              << a.m << "x" << a.t << "), a_star (" << a.m << "x" << a.m << ") to " << a.out << "\n";
    return kExitOk;
  }
  bf_matrix *x = nullptr, *phi = nullptr, *alpha = nullptr;
  check(bf_synth_sparse(a.d, a.m, a.n, a.s, a.noise, seed, &x, &phi, &alpha), "synth");
  MatrixPtr px(x), pp(phi), pa(alpha);
  save_matrix(x, out / "X.csv");
  save_matrix(phi, out / "phi_star.csv");
  save_matrix(alpha, out / "alpha_star.csv");
  std::cout << "wrote X (" << a.d << "x" << a.n << "), phi_star (" << a.d << "x" << a.m << "), alpha_star ("
            << a.m << "x" << a.n << ") to " << a.out << "\n";
  return kExitOk;
}

// ---- diagnose ----

struct DiagArgs {
  std::string basis, reference, data, coeffs, referenceCoeffs, out;
};

int cmd_diagnose(const DiagArgs& a) {
  MatrixPtr basis = load_matrix(a.basis);
  MatrixPtr ref, data, codes, refCodes;
  if (!a.reference.empty()) ref = load_matrix(a.reference);
  if (!a.data.empty()) data = load_matrix(a.data);
  if (!a.coeffs.empty()) codes = load_matrix(a.coeffs);
  if (!a.referenceCoeffs.empty()) refCodes = load_matrix(a.referenceCoeffs);
  char* report = nullptr;
  check(bf_diagnose(basis.get(), ref.get(), data.get(), codes.get(), refCodes.get(), &report), "diagnose");
  StringPtr reportPtr(report);
  if (!a.out.empty()) write_file(a.out, report);
  std::cout << report;
  return kExitOk;
}

// ---- bslm ----

struct BslmTrainArgs {
  std::string config, corpus, out;
  Common common;
};

int cmd_bslm_train(const BslmTrainArgs& a) {
  bf_set_num_threads(a.common.threads);
  const std::string cfg = load_config(a.config, a.common.seed);
  const std::string text = read_file(a.corpus);
  make_dir(a.out);
  const fs::path out(a.out);
  bf_bslm* model = nullptr;
  const bf_status s = bf_bslm_train(text.data(), text.size(), cfg.c_str(), &model);
  const std::string err = bf_last_error();
  std::unique_ptr<bf_bslm, void (*)(bf_bslm*)> guard(model, bf_bslm_free);
  if (model)
    check(bf_bslm_save_log(model, (out / "log.jsonl").string().c_str(), !a.common.noWallTime), "writing log");
  if (s != BF_OK) throw CliFailure{exit_code(s), "training failed: " + err};
  check(bf_bslm_save(model, (out / "checkpoint.json").string().c_str()), "writing checkpoint");
  double ppl = 0.0;
  if (bf_bslm_final_perplexity(model, &ppl) == BF_OK)
    std::cout << "final perplexity " << ppl << " (vocabulary " << bf_bslm_vocab_size(model) << ")\n";
  else
    std::cout << "no epochs run; checkpoint holds the initial model\n";
  return kExitOk;
}

struct BslmEvalArgs {
  std::string checkpoint, corpus, out;
};

int cmd_bslm_eval(const BslmEvalArgs& a) {
  bf_bslm* model = nullptr;
  check(bf_bslm_load(a.checkpoint.c_str(), &model), "loading checkpoint");
  std::unique_ptr<bf_bslm, void (*)(bf_bslm*)> guard(model, bf_bslm_free);
  const std::string text = read_file(a.corpus);
  bf_bslm_eval ev{};
  check(bf_bslm_evaluate(model, text.data(), text.size(), &ev), "evaluation");
  json j = {{"perplexity", ev.perplexity},
            {"tokens", ev.tokens},
            {"vocabSize", bf_bslm_vocab_size(model)},
            {"latencyUs",
             {{"mean", ev.mean_latency_us}, {"p50", ev.p50_latency_us}, {"p95", ev.p95_latency_us}, {"max", ev.max_latency_us}}}};
  const std::string body = j.dump(2) + "\n";
  if (!a.out.empty()) write_file(a.out, body);
  std::cout << body;
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"basisforge: variational basis learning, latent dynamics, and a basis-state language model"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(bf_version()));

  FitArgs fitArgs;
  auto* fit = app.add_subcommand("fit", "learn a basis and sparse codes for a data matrix");
  fit->add_option("--config", fitArgs.config, "JSON run configuration")->required()->check(CLI::ExistingFile);
  fit->add_option("--data", fitArgs.data, "data CSV, one feature per row and one sample per column")
      ->required()
      ->check(CLI::ExistingFile);
  fit->add_option("--out", fitArgs.out, "output directory")->required();
  fit->add_option("--graph", fitArgs.graph, "edge list 'i,j,w' used instead of the config graph section")
      ->check(CLI::ExistingFile);
  add_common(fit, fitArgs.common);

  DynArgs dynArgs;
  auto* dyn = app.add_subcommand("fit-dynamic", "learn a basis with a latent linear evolution operator");
  dyn->add_option("--config", dynArgs.config, "JSON run configuration")->required()->check(CLI::ExistingFile);
  dyn->add_option("--data", dynArgs.data, "sequence CSV, one time step per column")->required()->check(CLI::ExistingFile);
  dyn->add_option("--out", dynArgs.out, "output directory")->required();
  dyn->add_option("--horizon", dynArgs.horizon, "forecast steps after the training window (0 = no forecast)")
      ->capture_default_str();
  add_common(dyn, dynArgs.common);

  SynthArgs synthArgs;
  auto* synth = app.add_subcommand("synth", "generate planted sparse or linear-system data");
  synth->add_option("--d", synthArgs.d, "ambient dimension")->required();
  synth->add_option("--m", synthArgs.m, "number of atoms / latent dimension")->required();
  synth->add_option("--s", synthArgs.s, "nonzeros per sample (sparse mode)");
  synth->add_option("--n", synthArgs.n, "number of samples (sparse mode)");
  synth->add_option("--t", synthArgs.t, "sequence length (dynamic mode)")->capture_default_str();
  synth->add_option("--rho", synthArgs.rho, "spectral radius of the planted operator (dynamic mode)")
      ->capture_default_str();
  synth->add_option("--noise", synthArgs.noise, "Gaussian noise standard deviation")->capture_default_str();
  synth->add_option("--seed", synthArgs.seed, "random seed (default: BASISFORGE_SEED or 0)");
  synth->add_flag("--dynamic", synthArgs.dynamic, "planted linear system instead of sparse codes");
  synth->add_option("--out", synthArgs.out, "output directory")->capture_default_str();

  DiagArgs diagArgs;
  auto* diag = app.add_subcommand("diagnose", "coherence, uniqueness bound, rank-m tail and recovery report");
  diag->add_option("--basis", diagArgs.basis, "basis CSV")->required()->check(CLI::ExistingFile);
  diag->add_option("--reference", diagArgs.reference, "reference basis CSV for the recovery report")
      ->check(CLI::ExistingFile);
  diag->add_option("--data", diagArgs.data, "data CSV for the rank-m tail energy")->check(CLI::ExistingFile);
  diag->add_option("--coeffs", diagArgs.coeffs, "codes of the basis")->check(CLI::ExistingFile);
  diag->add_option("--reference-coeffs", diagArgs.referenceCoeffs, "codes of the reference basis")
      ->check(CLI::ExistingFile);
  diag->add_option("--out", diagArgs.out, "also write the report to this file");

  auto* bslm = app.add_subcommand("bslm", "basis-state language model");
  bslm->require_subcommand(1);
  BslmTrainArgs trainArgs;
  auto* train = bslm->add_subcommand("train", "train on a UTF-8 corpus; writes checkpoint.json and log.jsonl");
  train->add_option("--config", trainArgs.config, "JSON hyperparameters")->required()->check(CLI::ExistingFile);
  train->add_option("--corpus", trainArgs.corpus, "UTF-8 text; blank lines separate documents")
      ->required()
      ->check(CLI::ExistingFile);
  train->add_option("--out", trainArgs.out, "output directory")->required();
  add_common(train, trainArgs.common);
  BslmEvalArgs evalArgs;
  auto* eval = bslm->add_subcommand("eval", "perplexity and per-token latency of a checkpoint");
  eval->add_option("--checkpoint", evalArgs.checkpoint, "checkpoint.json from bslm train")->required();
  eval->add_option("--corpus", evalArgs.corpus, "UTF-8 text to evaluate")->required();
  eval->add_option("--out", evalArgs.out, "also write the report to this file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*fit) return cmd_fit(fitArgs);
    if (*dyn) return cmd_fit_dynamic(dynArgs);
    if (*synth) return cmd_synth(synthArgs);
    if (*diag) return cmd_diagnose(diagArgs);
    if (*train) return cmd_bslm_train(trainArgs);
    if (*eval) return cmd_bslm_eval(evalArgs);
  } catch (const CliFailure& f) {
    std::cerr << "error: " << f.message << "\n";
    return f.code;
  }
  return kExitUsage;
}
