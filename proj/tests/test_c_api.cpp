// Exercises the shared library through its C header only.

#include "basisforge/basisforge.h"

#include <doctest.h>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

using nlohmann::json;

namespace {

std::string temp_path(const char* name) { return (std::filesystem::temp_directory_path() / name).string(); }

std::vector<double> contents(const bf_matrix* m) {
  std::vector<double> v(bf_matrix_rows(m) * bf_matrix_cols(m));
  REQUIRE(bf_matrix_copy(m, v.data(), v.size()) == BF_OK);
  return v;
}

json take_json(char* s) {
  json j = json::parse(s);
  bf_free_string(s);
  return j;
}

std::string cyclic(int n) {
  std::string s;
  for (int i = 0; i < n; ++i) s.push_back("abc"[i % 3]);
  return s;
}

}  // namespace

TEST_CASE("matrices cross the boundary row-major") {
  const double vals[] = {1, 2, 3, 4, 5, 6};
  bf_matrix* m = nullptr;
  REQUIRE(bf_matrix_new(2, 3, vals, &m) == BF_OK);
  CHECK(bf_matrix_rows(m) == 2);
  CHECK(bf_matrix_cols(m) == 3);
  CHECK(contents(m) == std::vector<double>(vals, vals + 6));

  double small[2];
  CHECK(bf_matrix_copy(m, small, 2) == BF_ERR_SHAPE);
  CHECK(std::string(bf_last_error()).size() > 0);

  const std::string path = temp_path("bf_capi.csv");
  REQUIRE(bf_matrix_save_csv(m, path.c_str(), 1) == BF_OK);
  bf_matrix* back = nullptr;
  REQUIRE(bf_matrix_load_csv(path.c_str(), &back) == BF_OK);
  CHECK(contents(back) == contents(m));
  bf_matrix_free(back);
  bf_matrix_free(m);
  std::remove(path.c_str());

  bf_matrix* none = nullptr;
  CHECK(bf_matrix_load_csv("/nonexistent/x.csv", &none) == BF_ERR_IO);
  CHECK(none == nullptr);
  // raw matrices hold anything; the fit entry points validate them
  const double nan[] = {NAN, 1.0};
  REQUIRE(bf_matrix_new(2, 1, nan, &none) == BF_OK);
  bf_fit* fit = nullptr;
  CHECK(bf_fit_run(none, R"({"atoms": 1})", nullptr, &fit) == BF_ERR_INPUT);
  CHECK(fit == nullptr);
  bf_matrix_free(none);
  none = nullptr;
  CHECK(bf_matrix_new(1, 1, nullptr, &none) != BF_OK);
  CHECK(std::string(bf_version()).size() > 0);
}

TEST_CASE("static fit end to end") {
  bf_matrix *x = nullptr, *phi = nullptr, *alpha = nullptr;
  REQUIRE(bf_synth_sparse(12, 6, 150, 2, 0.0, 3, &x, &phi, &alpha) == BF_OK);
  const char* cfg = R"({"atoms": 6, "coeffPenalty": {"kind": "l1", "weight": 0.1}, "maxIters": 80, "seed": 1})";
  bf_fit* fit = nullptr;
  REQUIRE(bf_fit_run(x, cfg, nullptr, &fit) == BF_OK);
  bf_matrix *basis = nullptr, *coeffs = nullptr;
  REQUIRE(bf_fit_basis(fit, &basis) == BF_OK);
  REQUIRE(bf_fit_coeffs(fit, &coeffs) == BF_OK);
  CHECK(bf_matrix_rows(basis) == 12);
  CHECK(bf_matrix_cols(coeffs) == 150);

  char* s = nullptr;
  REQUIRE(bf_fit_summary(fit, &s) == BF_OK);
  const json summary = take_json(s);
  CHECK(summary["atoms"] == 6);
  CHECK(summary.contains("coherence"));
  CHECK(summary["eckartYoung"]["gap"].get<double>() >= -1e-9);

  REQUIRE(bf_diagnose(basis, phi, x, coeffs, alpha, &s) == BF_OK);
  const json diag = take_json(s);
  CHECK(diag["recovery"]["meanAbsCorrelation"].get<double>() > 0.9);
  CHECK(diag["recovery"].contains("supportRecoveryRate"));

  REQUIRE(bf_diagnose(basis, nullptr, nullptr, nullptr, nullptr, &s) == BF_OK);
  CHECK_FALSE(take_json(s).contains("recovery"));

  const std::string log = temp_path("bf_capi_log.jsonl");
  REQUIRE(bf_fit_save_log(fit, log.c_str(), 0) == BF_OK);
  std::ifstream in(log);
  std::string first;
  std::getline(in, first);
  CHECK(json::parse(first)["iteration"] == 0);
  std::remove(log.c_str());

  for (bf_matrix* m : {x, phi, alpha, basis, coeffs}) bf_matrix_free(m);
  bf_fit_free(fit);
}

TEST_CASE("fit errors map to status codes") {
  bf_matrix *x = nullptr, *phi = nullptr, *alpha = nullptr;
  REQUIRE(bf_synth_sparse(6, 3, 20, 1, 0.0, 1, &x, &phi, &alpha) == BF_OK);
  bf_fit* fit = nullptr;
  CHECK(bf_fit_run(x, R"({"atoms": 3, "graphWeight": 0.5})", nullptr, &fit) == BF_ERR_CONFIG);
  CHECK(bf_fit_run(x, R"({"atoms": 3, "nope": 1})", nullptr, &fit) == BF_ERR_CONFIG);
  CHECK(bf_fit_run(x, "not json", nullptr, &fit) == BF_ERR_CONFIG);

  bf_graph* g = nullptr;
  REQUIRE(bf_graph_knn(x, 4, 0.0, &g) == BF_OK);
  REQUIRE(bf_fit_run(x, R"({"atoms": 3, "graphWeight": 0.5, "maxIters": 5})", g, &fit) == BF_OK);
  bf_fit_free(fit);
  fit = nullptr;
  REQUIRE(bf_fit_run(x, R"({"atoms": 3, "graphWeight": 0.5, "maxIters": 5, "graph": {"k": 3}})", nullptr, &fit) ==
          BF_OK);
  bf_fit_free(fit);

  const std::string edges = temp_path("bf_capi_edges.csv");
  REQUIRE(bf_graph_save_edges(g, edges.c_str()) == BF_OK);
  bf_graph* g2 = nullptr;
  CHECK(bf_graph_load_edges(edges.c_str(), 20, &g2) == BF_OK);
  bf_graph_free(g2);
  std::remove(edges.c_str());
  CHECK(bf_graph_knn(x, 50, 0.0, &g2) == BF_ERR_INPUT);

  bf_matrix *xs = nullptr, *ps = nullptr, *as = nullptr;
  CHECK(bf_synth_sparse(6, 3, 20, 4, 0.0, 1, &xs, &ps, &as) == BF_ERR_INPUT);

  bf_graph_free(g);
  for (bf_matrix* m : {x, phi, alpha}) bf_matrix_free(m);
}

TEST_CASE("dynamic fit end to end") {
  bf_matrix *x = nullptr, *phi = nullptr, *z = nullptr, *a = nullptr;
  REQUIRE(bf_synth_linear(16, 4, 200, 0.95, 0.0, 5, &x, &phi, &z, &a) == BF_OK);
  bf_dynfit* fit = nullptr;
  REQUIRE(bf_dynfit_run(x, R"({"atoms": 4, "coeffPenalty": {"kind": "l1", "weight": 0}, "dynWeight": 0.1,
                              "maxIters": 200, "stopEps": 1e-12, "rhoMax": 1.0})",
                        &fit) == BF_OK);
  char* s = nullptr;
  REQUIRE(bf_dynfit_summary(fit, &s) == BF_OK);
  const json summary = take_json(s);
  CHECK(summary["oneStepForecastError"].get<double>() <= 1e-6);
  CHECK(summary["finalObjective"].get<double>() <= 1e-4 * summary["initialObjective"].get<double>());

  bf_matrix *op = nullptr, *states = nullptr, *fc = nullptr;
  REQUIRE(bf_dynfit_operator(fit, &op) == BF_OK);
  REQUIRE(bf_dynfit_states(fit, &states) == BF_OK);
  REQUIRE(bf_dynfit_forecast(fit, 5, &fc) == BF_OK);
  CHECK(bf_matrix_rows(op) == 4);
  CHECK(bf_matrix_cols(states) == 200);
  CHECK(bf_matrix_cols(fc) == 5);
  CHECK(bf_dynfit_forecast(fit, 0, &fc) != BF_OK);

  bf_dynfit* bad = nullptr;
  CHECK(bf_dynfit_run(x, R"({"atoms": 4, "graph": {"k": 3}})", &bad) == BF_ERR_CONFIG);
  for (bf_matrix* m : {x, phi, z, a, op, states, fc}) bf_matrix_free(m);
  bf_dynfit_free(fit);
}

TEST_CASE("language model through the C API") {
  const std::string text = cyclic(600);
  bf_bslm* lm = nullptr;
  REQUIRE(bf_bslm_train(text.data(), text.size(), R"({"epochs": 8, "blockLen": 16})", &lm) == BF_OK);
  CHECK(bf_bslm_vocab_size(lm) == 4);
  double ppl = 0.0;
  REQUIRE(bf_bslm_final_perplexity(lm, &ppl) == BF_OK);
  CHECK(ppl < 1.5);

  const std::string ckpt = temp_path("bf_capi_ckpt.json");
  REQUIRE(bf_bslm_save(lm, ckpt.c_str()) == BF_OK);
  bf_bslm* loaded = nullptr;
  REQUIRE(bf_bslm_load(ckpt.c_str(), &loaded) == BF_OK);
  bf_bslm_eval e1{}, e2{};
  REQUIRE(bf_bslm_evaluate(lm, text.data(), text.size(), &e1) == BF_OK);
  REQUIRE(bf_bslm_evaluate(loaded, text.data(), text.size(), &e2) == BF_OK);
  CHECK(e1.perplexity == e2.perplexity);
  CHECK(e1.tokens == 599);
  CHECK(e2.p50_latency_us <= e2.max_latency_us);

  // a loaded model carries no training log
  double unused = 0.0;
  CHECK(bf_bslm_final_perplexity(loaded, &unused) == BF_ERR_STATE);
  REQUIRE(bf_bslm_save_log(loaded, ckpt.c_str(), 0) == BF_OK);
  CHECK(std::filesystem::file_size(ckpt) == 0);
  std::remove(ckpt.c_str());

  bf_bslm* none = nullptr;
  CHECK(bf_bslm_load("/nonexistent/ckpt.json", &none) == BF_ERR_IO);
  CHECK(bf_bslm_train("ab", 2, "{}", &none) == BF_ERR_INPUT);
  CHECK(bf_bslm_train(text.data(), text.size(), R"({"blockLen": 0})", &none) == BF_ERR_CONFIG);
  bf_bslm_free(lm);
  bf_bslm_free(loaded);
}
