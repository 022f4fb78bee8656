#include "basisforge/basisforge.h"

#include "basisforge/basis_solver.hpp"
#include "basisforge/bslm.hpp"
#include "basisforge/diagnostics.hpp"
#include "basisforge/dynamics.hpp"
#include "basisforge/error.hpp"
#include "basisforge/geometry.hpp"
#include "basisforge/io.hpp"
#include "basisforge/linalg.hpp"
#include "basisforge/objective.hpp"
#include "basisforge/trainer.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <memory>
#include <new>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>

namespace bf = basisforge;
using nlohmann::json;

struct bf_matrix {
  bf::Matrix m;
};

struct bf_graph {
  bf::GraphLaplacian g;
};

struct bf_fit {
  bf::Matrix x;
  bf::RunConfig cfg;
  std::optional<bf::GraphLaplacian> graph;
  std::optional<bf::FitResult> result;
  bf::TrainLog log;
};

struct bf_dynfit {
  bf::Matrix x;
  bf::RunConfig cfg;
  std::optional<bf::DynamicFitResult> result;
  bf::TrainLog log;
};

struct bf_bslm {
  std::optional<bf::BslmModel> model;
  bf::BslmHyper hyper;
  bf::BslmLog log;
};

namespace {

thread_local std::string lastError;

// The handle exists but lacks the requested item (e.g. after an aborted fit).
struct StateMissing : std::runtime_error {
  using std::runtime_error::runtime_error;
};

bf_status fail(bf_status s, const std::string& msg) {
  lastError = msg;
  return s;
}

// Runs `body`, translating exceptions into status codes.
template <class F>
bf_status guarded(F&& body) {
  try {
    lastError.clear();
    body();
    return BF_OK;
  } catch (const StateMissing& e) {
    return fail(BF_ERR_STATE, e.what());
  } catch (const bf::Error& e) {
    switch (e.kind()) {
      case bf::ErrorKind::Shape: return fail(BF_ERR_SHAPE, e.what());
      case bf::ErrorKind::Config: return fail(BF_ERR_CONFIG, e.what());
      case bf::ErrorKind::Input: return fail(BF_ERR_INPUT, e.what());
      case bf::ErrorKind::Numeric: return fail(BF_ERR_NUMERIC, e.what());
      case bf::ErrorKind::Io: return fail(BF_ERR_IO, e.what());
    }
    return fail(BF_ERR_INTERNAL, e.what());
  } catch (const std::bad_alloc&) {
    return fail(BF_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(BF_ERR_INTERNAL, e.what());
  }
}

template <class T>
void require(const T* p, const char* what) {
  if (!p) throw bf::InputError(std::string(what) + " must not be NULL");
}

bf_matrix* wrap(bf::Matrix m) { return new bf_matrix{std::move(m)}; }

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void write_file(const char* path, const std::string& body) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw bf::IoError(std::string("cannot open '") + path + "' for writing");
  os << body;
  if (!os) throw bf::IoError(std::string("write to '") + path + "' failed");
}

std::optional<bf::GraphLaplacian> graph_from_spec(const bf::GraphSpec& gs, const bf::DataMatrix& x) {
  if (!gs.edgesPath.empty()) {
    std::ifstream is(gs.edgesPath);
    if (!is) throw bf::IoError("cannot open edge list '" + gs.edgesPath + "'");
    return bf::read_edge_list(is, x.cols());
  }
  return bf::build_knn_graph(x, gs.k, gs.scale);
}

json terms_json(const bf::ObjectiveTerms& t) {
  return {{"reconstruction", t.reconstruction},
          {"coeffPenalty", t.coeffPenalty},
          {"graph", t.graph},
          {"basisPenalty", t.basisPenalty}};
}

json coherence_json(const bf::Matrix& phi) {
  const bf::Coherence c = bf::mutual_coherence(phi);
  json j = {{"mutualCoherence", c.value}};
  const double bound = bf::uniqueness_bound(std::min(1.0, c.value));
  if (std::isinf(bound)) {
    j["uniquenessBound"] = nullptr;
    j["maxUniqueSparsity"] = nullptr;
  } else {
    j["uniquenessBound"] = bound;
    j["maxUniqueSparsity"] = bf::max_unique_sparsity(std::min(1.0, c.value));
  }
  return j;
}

std::string log_text(const bf::TrainLog& log, bool wall) {
  std::ostringstream os;
  bf::write_train_log(os, log, wall);
  return os.str();
}

}  // namespace

extern "C" {

const char* bf_last_error(void) { return lastError.c_str(); }
const char* bf_version(void) { return "1.0.0"; }
void bf_set_num_threads(int n) { bf::set_num_threads(n); }
void bf_free_string(char* s) { std::free(s); }

// ---- matrices ----

bf_status bf_matrix_new(size_t rows, size_t cols, const double* data, bf_matrix** out) {
  return guarded([&] {
    require(out, "out");
    if (rows * cols > 0) require(data, "data");
    bf::Matrix m(static_cast<bf::Index>(rows), static_cast<bf::Index>(cols));
    for (size_t i = 0; i < rows; ++i)
      for (size_t j = 0; j < cols; ++j) m(static_cast<bf::Index>(i), static_cast<bf::Index>(j)) = data[i * cols + j];
    *out = wrap(std::move(m));
  });
}

bf_status bf_matrix_load_csv(const char* path, bf_matrix** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = wrap(bf::load_matrix_csv(path));
  });
}

bf_status bf_matrix_save_csv(const bf_matrix* m, const char* path, int header) {
  return guarded([&] {
    require(m, "matrix");
    require(path, "path");
    bf::save_matrix_csv(path, m->m, header != 0);
  });
}

size_t bf_matrix_rows(const bf_matrix* m) { return m ? static_cast<size_t>(m->m.rows()) : 0; }
size_t bf_matrix_cols(const bf_matrix* m) { return m ? static_cast<size_t>(m->m.cols()) : 0; }

bf_status bf_matrix_copy(const bf_matrix* m, double* out, size_t count) {
  return guarded([&] {
    require(m, "matrix");
    require(out, "out");
    if (count != static_cast<size_t>(m->m.size()))
      throw bf::ShapeError("buffer holds " + std::to_string(count) + " values, matrix has " +
                           std::to_string(m->m.size()));
    const size_t cols = static_cast<size_t>(m->m.cols());
    for (bf::Index i = 0; i < m->m.rows(); ++i)
      for (bf::Index j = 0; j < m->m.cols(); ++j) out[static_cast<size_t>(i) * cols + static_cast<size_t>(j)] = m->m(i, j);
  });
}

void bf_matrix_free(bf_matrix* m) { delete m; }

// ---- graphs ----

bf_status bf_graph_knn(const bf_matrix* x, size_t k, double sigma, bf_graph** out) {
  return guarded([&] {
    require(x, "x");
    require(out, "out");
    bf::KernelScale scale = bf::MedianScale{};
    if (sigma > 0.0) scale = bf::FixedScale{sigma};
    *out = new bf_graph{bf::build_knn_graph(bf::DataMatrix(x->m), static_cast<bf::Index>(k), scale)};
  });
}

bf_status bf_graph_load_edges(const char* path, size_t n, bf_graph** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    std::ifstream is(path);
    if (!is) throw bf::IoError(std::string("cannot open '") + path + "'");
    *out = new bf_graph{bf::read_edge_list(is, static_cast<bf::Index>(n))};
  });
}

bf_status bf_graph_save_edges(const bf_graph* g, const char* path) {
  return guarded([&] {
    require(g, "graph");
    require(path, "path");
    std::ofstream os(path);
    if (!os) throw bf::IoError(std::string("cannot open '") + path + "' for writing");
    bf::write_edge_list(os, g->g);
  });
}

void bf_graph_free(bf_graph* g) { delete g; }

// ---- static fit ----

bf_status bf_fit_run(const bf_matrix* x, const char* config_json, const bf_graph* graph, bf_fit** out) {
  std::unique_ptr<bf_fit> f;
  const bf_status s = guarded([&] {
    require(x, "x");
    require(config_json, "config");
    require(out, "out");
    *out = nullptr;
    f = std::make_unique<bf_fit>();
    f->x = x->m;
    f->cfg = bf::parse_run_config(config_json);
    const bf::DataMatrix data(f->x);
    if (graph) f->graph = graph->g;
    else if (f->cfg.graph) f->graph = graph_from_spec(*f->cfg.graph, data);
    try {
      f->result = bf::fit(data, f->cfg.model, f->graph ? &*f->graph : nullptr, f->cfg.train);
      f->log = f->result->log;
    } catch (const bf::FitAborted& e) {
      f->log = e.partial_log();
      throw;
    }
  });
  if (out && f && (s == BF_OK || s == BF_ERR_NUMERIC)) *out = f.release();
  return s;
}

bf_status bf_fit_basis(const bf_fit* f, bf_matrix** out) {
  return guarded([&] {
    require(f, "fit");
    require(out, "out");
    if (!f->result) throw StateMissing("fit did not complete");
    *out = wrap(f->result->basis.values());
  });
}

bf_status bf_fit_coeffs(const bf_fit* f, bf_matrix** out) {
  return guarded([&] {
    require(f, "fit");
    require(out, "out");
    if (!f->result) throw StateMissing("fit did not complete");
    *out = wrap(f->result->coeffs.values());
  });
}

bf_status bf_fit_save_log(const bf_fit* f, const char* path, int wall_time) {
  return guarded([&] {
    require(f, "fit");
    require(path, "path");
    write_file(path, log_text(f->log, wall_time != 0));
  });
}

bf_status bf_fit_summary(const bf_fit* f, char** json_out) {
  return guarded([&] {
    require(f, "fit");
    require(json_out, "out");
    if (!f->result) throw StateMissing("fit did not complete");
    const bf::Matrix& phi = f->result->basis.values();
    const bf::Matrix& a = f->result->coeffs.values();
    const bf::ObjectiveTerms t =
        bf::objective_terms(f->x, phi, a, f->cfg.model, f->graph ? &*f->graph : nullptr);
    const double tail = bf::best_rank_error(f->x, phi.cols());
    json j = {{"dim", phi.rows()},
              {"atoms", phi.cols()},
              {"samples", f->x.cols()},
              {"iterations", f->log.records.empty() ? 0 : f->log.records.back().iteration},
              {"stopReason", f->log.stopReason},
              {"finalObjective", t.total()},
              {"terms", terms_json(t)},
              {"coherence", coherence_json(phi)},
              {"eckartYoung", {{"tailEnergy", tail}, {"gap", t.reconstruction - tail}}}};
    *json_out = dup_string(j.dump(2) + "\n");
  });
}

void bf_fit_free(bf_fit* f) { delete f; }

// ---- dynamic fit ----

bf_status bf_dynfit_run(const bf_matrix* x, const char* config_json, bf_dynfit** out) {
  std::unique_ptr<bf_dynfit> f;
  const bf_status s = guarded([&] {
    require(x, "x");
    require(config_json, "config");
    require(out, "out");
    *out = nullptr;
    f = std::make_unique<bf_dynfit>();
    f->x = x->m;
    f->cfg = bf::parse_run_config(config_json);
    if (f->cfg.graph) throw bf::ConfigError("graph regularization is not available for dynamic fits");
    bf::DynamicOptions opts;
    opts.train = f->cfg.train;
    opts.rhoMax = f->cfg.rhoMax;
    try {
      f->result = bf::fit_dynamic(bf::DataMatrix(f->x), f->cfg.model, opts);
      f->log = f->result->log;
    } catch (const bf::FitAborted& e) {
      f->log = e.partial_log();
      throw;
    }
  });
  if (out && f && (s == BF_OK || s == BF_ERR_NUMERIC)) *out = f.release();
  return s;
}

namespace {
const bf::DynamicFitResult& dyn_result(const bf_dynfit* f) {
  require(f, "fit");
  if (!f->result) throw StateMissing("fit did not complete");
  return *f->result;
}
}  // namespace

bf_status bf_dynfit_basis(const bf_dynfit* f, bf_matrix** out) {
  return guarded([&] {
    require(out, "out");
    *out = wrap(dyn_result(f).basis.values());
  });
}

bf_status bf_dynfit_states(const bf_dynfit* f, bf_matrix** out) {
  return guarded([&] {
    require(out, "out");
    *out = wrap(dyn_result(f).states.states());
  });
}

bf_status bf_dynfit_operator(const bf_dynfit* f, bf_matrix** out) {
  return guarded([&] {
    require(out, "out");
    *out = wrap(dyn_result(f).op.matrix());
  });
}

bf_status bf_dynfit_forecast(const bf_dynfit* f, size_t horizon, bf_matrix** out) {
  return guarded([&] {
    require(out, "out");
    const auto& r = dyn_result(f);
    const bf::Matrix& z = r.states.states();
    const bf::Vector next = r.op.matrix() * z.col(z.cols() - 1);
    *out = wrap(bf::forecast(next, r.op, r.basis.values(), static_cast<bf::Index>(horizon)));
  });
}

bf_status bf_dynfit_save_log(const bf_dynfit* f, const char* path, int wall_time) {
  return guarded([&] {
    require(f, "fit");
    require(path, "path");
    write_file(path, log_text(f->log, wall_time != 0));
  });
}

bf_status bf_dynfit_summary(const bf_dynfit* f, char** json_out) {
  return guarded([&] {
    require(json_out, "out");
    const auto& r = dyn_result(f);
    const bf::Matrix& phi = r.basis.values();
    const bf::Matrix& z = r.states.states();
    const bf::DynamicTerms t = bf::dynamic_objective(f->x, phi, z, r.op.matrix(), f->cfg.model);
    json j = {{"dim", phi.rows()},
              {"atoms", phi.cols()},
              {"steps", z.cols()},
              {"iterations", f->log.records.empty() ? 0 : f->log.records.back().iteration},
              {"stopReason", f->log.stopReason},
              {"finalObjective", t.total()},
              {"initialObjective", f->log.records.empty() ? 0.0 : f->log.records.front().objective},
              {"terms",
               {{"reconstruction", t.reconstruction},
                {"coeffPenalty", t.coeffPenalty},
                {"dynamics", t.dynamics},
                {"basisPenalty", t.basisPenalty},
                {"operatorPenalty", t.operatorPenalty}}},
              {"spectralRadius", r.op.spectral_radius()},
              {"oneStepForecastError", bf::one_step_forecast_error(f->x, phi, z, r.op.matrix())},
              {"coherence", coherence_json(phi)}};
    *json_out = dup_string(j.dump(2) + "\n");
  });
}

void bf_dynfit_free(bf_dynfit* f) { delete f; }

// ---- synthetic data ----

bf_status bf_synth_sparse(size_t d, size_t m, size_t n, size_t s, double noise, uint64_t seed, bf_matrix** x,
                          bf_matrix** phi, bf_matrix** alpha) {
  return guarded([&] {
    require(x, "x");
    require(phi, "phi");
    require(alpha, "alpha");
    auto model = bf::synth_sparse_model(static_cast<bf::Index>(d), static_cast<bf::Index>(m),
                                        static_cast<bf::Index>(n), static_cast<bf::Index>(s), noise, seed);
    *x = wrap(std::move(model.x));
    *phi = wrap(std::move(model.phiStar));
    *alpha = wrap(std::move(model.alphaStar));
  });
}

bf_status bf_synth_linear(size_t d, size_t m, size_t t, double rho, double noise, uint64_t seed, bf_matrix** x,
                          bf_matrix** phi, bf_matrix** z, bf_matrix** a) {
  return guarded([&] {
    require(x, "x");
    require(phi, "phi");
    require(z, "z");
    require(a, "a");
    auto model = bf::synth_linear_system(static_cast<bf::Index>(d), static_cast<bf::Index>(m),
                                         static_cast<bf::Index>(t), rho, noise, seed);
    *x = wrap(std::move(model.x));
    *phi = wrap(std::move(model.phiStar));
    *z = wrap(std::move(model.zStar));
    *a = wrap(std::move(model.aStar));
  });
}

// ---- diagnostics ----

bf_status bf_diagnose(const bf_matrix* basis, const bf_matrix* reference, const bf_matrix* data,
                      const bf_matrix* codes, const bf_matrix* reference_codes, char** json_out) {
  return guarded([&] {
    require(basis, "basis");
    require(json_out, "out");
    const bf::Matrix phi = bf::Basis(basis->m).values();
    json j = {{"dim", phi.rows()}, {"atoms", phi.cols()}};
    j.update(coherence_json(phi));
    j["welchBound"] = bf::welch_bound(phi.rows(), phi.cols());
    if (data) {
      if (data->m.rows() != phi.rows()) bf::throw_shape("data", phi.rows(), data->m.cols(), data->m.rows(), data->m.cols());
      json ey = {{"rank", phi.cols()}, {"tailEnergy", bf::best_rank_error(bf::DataMatrix(data->m), phi.cols())}};
      if (codes) {
        const double rec = bf::reconstruction_error(data->m, phi, codes->m);
        ey["reconstruction"] = rec;
        ey["gap"] = rec - ey["tailEnergy"].get<double>();
      }
      j["eckartYoung"] = ey;
    }
    if (reference) {
      const bf::Matrix ref = bf::Basis(reference->m).values();
      const bool withCodes = codes && reference_codes;
      const bf::RecoveryReport rep = bf::match_bases(phi, ref, withCodes ? &codes->m : nullptr,
                                                     withCodes ? &reference_codes->m : nullptr);
      json r = json::parse(bf::recovery_report_json(rep));
      r["fractionAbove099"] = rep.fraction_above(0.99);
      j["recovery"] = r;
    }
    *json_out = dup_string(j.dump(2) + "\n");
  });
}

// ---- language model ----

bf_status bf_bslm_train(const char* text, size_t len, const char* hyper_json, bf_bslm** out) {
  std::unique_ptr<bf_bslm> b;
  const bf_status s = guarded([&] {
    require(text, "text");
    require(hyper_json, "config");
    require(out, "out");
    *out = nullptr;
    b = std::make_unique<bf_bslm>();
    b->hyper = bf::parse_bslm_hyper(hyper_json);
    try {
      auto res = bf::train_bslm(std::string_view(text, len), b->hyper);
      b->model = std::move(res.model);
      b->log = std::move(res.log);
    } catch (const bf::BslmAborted& e) {
      b->log = e.partial_log();
      throw;
    }
  });
  if (out && b && (s == BF_OK || s == BF_ERR_NUMERIC)) *out = b.release();
  return s;
}

bf_status bf_bslm_save(const bf_bslm* b, const char* path) {
  return guarded([&] {
    require(b, "model");
    require(path, "path");
    if (!b->model) throw StateMissing("training did not complete");
    bf::save_checkpoint(path, *b->model, b->hyper);
  });
}

bf_status bf_bslm_load(const char* path, bf_bslm** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    auto ck = bf::load_checkpoint(path);
    auto b = std::make_unique<bf_bslm>();
    b->model = std::move(ck.model);
    b->hyper = ck.hyper;
    *out = b.release();
  });
}

bf_status bf_bslm_save_log(const bf_bslm* b, const char* path, int wall_time) {
  return guarded([&] {
    require(b, "model");
    require(path, "path");
    std::ostringstream os;
    bf::write_bslm_log(os, b->log, wall_time != 0);
    write_file(path, os.str());
  });
}

bf_status bf_bslm_final_perplexity(const bf_bslm* b, double* out) {
  return guarded([&] {
    require(b, "model");
    require(out, "out");
    if (b->log.records.empty()) throw StateMissing("no training epochs were logged");
    *out = b->log.records.back().perplexity;
  });
}

bf_status bf_bslm_evaluate(const bf_bslm* b, const char* text, size_t len, bf_bslm_eval* out) {
  return guarded([&] {
    require(b, "model");
    require(text, "text");
    require(out, "out");
    if (!b->model) throw StateMissing("training did not complete");
    const auto docs = bf::encode_documents(std::string_view(text, len), b->model->vocab);
    const bf::EvalReport r = bf::evaluate(docs, *b->model, b->hyper.codeWeight);
    out->perplexity = r.perplexity;
    out->tokens = r.tokens;
    out->mean_latency_us = r.meanLatencyUs;
    out->p50_latency_us = r.p50LatencyUs;
    out->p95_latency_us = r.p95LatencyUs;
    out->max_latency_us = r.maxLatencyUs;
  });
}

size_t bf_bslm_vocab_size(const bf_bslm* b) {
  return b && b->model ? static_cast<size_t>(b->model->vocab_size()) : 0;
}

void bf_bslm_free(bf_bslm* b) { delete b; }

}  // extern "C"
