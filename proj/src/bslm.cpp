#include "basisforge/bslm.hpp"

#include "basisforge/basis_solver.hpp"
#include "basisforge/detail/prox_gradient.hpp"
#include "basisforge/dynamics.hpp"
#include "basisforge/linalg.hpp"
#include "basisforge/objective.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <set>

namespace basisforge {

Vocabulary::Vocabulary(std::vector<std::string> tokens, TokenLevel level)
    : tokens_(std::move(tokens)), level_(level) {
  if (tokens_.empty() || tokens_[0] != kUnknown) throw InputError("vocabulary must start with the unknown symbol");
  if (tokens_.size() < 2) throw InputError("vocabulary needs at least one token besides the unknown symbol");
  for (std::size_t i = 0; i < tokens_.size(); ++i)
    if (!index_.emplace(tokens_[i], static_cast<Index>(i)).second)
      throw InputError("duplicate vocabulary token '" + tokens_[i] + "'");
}

Index Vocabulary::lookup(const std::string& tok) const {
  auto it = index_.find(tok);
  return it == index_.end() ? 0 : it->second;
}

namespace {

std::size_t utf8_length(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xE) return 3;
  if ((lead >> 3) == 0x1E) return 4;
  return 0;
}

bool is_blank(std::string_view line) {
  return std::all_of(line.begin(), line.end(), [](char ch) { return std::isspace(static_cast<unsigned char>(ch)); });
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text, TokenLevel level) {
  std::vector<std::string> out;
  if (level == TokenLevel::Char) {
    for (std::size_t i = 0; i < text.size();) {
      const std::size_t len = utf8_length(static_cast<unsigned char>(text[i]));
      if (len == 0 || i + len > text.size()) throw InputError("invalid UTF-8 at byte " + std::to_string(i));
      for (std::size_t k = 1; k < len; ++k)
        if ((static_cast<unsigned char>(text[i + k]) >> 6) != 0x2)
          throw InputError("invalid UTF-8 at byte " + std::to_string(i + k));
      out.emplace_back(text.substr(i, len));
      i += len;
    }
    return out;
  }
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

std::vector<std::string> split_documents(std::string_view text) {
  std::vector<std::string> docs;
  std::string cur;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (is_blank(line)) {
      if (!cur.empty()) docs.push_back(std::move(cur));
      cur.clear();
    } else {
      if (!cur.empty()) cur += '\n';
      cur += line;
    }
    pos = nl + 1;
  }
  if (!cur.empty()) docs.push_back(std::move(cur));
  return docs;
}

Vocabulary build_vocab(std::string_view text, TokenLevel level) {
  std::vector<std::string> tokens{Vocabulary::kUnknown};
  std::set<std::string> seen{Vocabulary::kUnknown};
  for (const auto& doc : split_documents(text))
    for (auto& tok : tokenize(doc, level))
      if (seen.insert(tok).second) tokens.push_back(std::move(tok));
  if (tokens.size() < 2) throw InputError("corpus is empty");
  return Vocabulary(std::move(tokens), level);
}

std::vector<std::vector<Index>> encode_documents(std::string_view text, const Vocabulary& vocab) {
  std::vector<std::vector<Index>> out;
  for (const auto& doc : split_documents(text)) {
    std::vector<Index> ids;
    for (const auto& tok : tokenize(doc, vocab.level())) ids.push_back(vocab.lookup(tok));
    if (!ids.empty()) out.push_back(std::move(ids));
  }
  return out;
}

void BslmHyper::validate() const {
  if (atoms < 0) throw ConfigError("atoms must be >= 0");
  if (blockLen < 2) throw ConfigError("block length must be >= 2");
  for (double w : {codeWeight, stateWeight, transitionWeight, basisWeight, ridge, learningRateDecay})
    if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("BSLM weights must be finite and >= 0");
  if (!(statsDecay > 0.0 && statsDecay <= 1.0)) throw ConfigError("stats decay must lie in (0, 1]");
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (stateIters < 1) throw ConfigError("state iterations must be >= 1");
  if (!(learningRate > 0.0) || !std::isfinite(learningRate)) throw ConfigError("learning rate must be > 0");
  if (readoutSteps < 0) throw ConfigError("readout steps must be >= 0");
  if (rhoMax && !(*rhoMax > 0.0 && *rhoMax <= 1.0)) throw ConfigError("rho_max must lie in (0, 1]");
}

void BslmModel::validate() const {
  const Index v = vocab.size(), m = phi.atoms();
  if (phi.dim() != v) throw_shape("token basis", v, m, phi.dim(), m);
  if (aop.rows() != m || aop.cols() != m) throw_shape("state operator", m, m, aop.rows(), aop.cols());
  if (b.rows() != m || b.cols() != m) throw_shape("coupling matrix", m, m, b.rows(), b.cols());
  if (c.rows() != v || c.cols() != m) throw_shape("readout matrix", v, m, c.rows(), c.cols());
  if (dOff.size() != v) throw_shape("readout offset", v, 1, dOff.size(), 1);
  if (mode == ReadoutMode::Basis) {
    if (!readoutMap) throw ConfigError("basis readout requires the readout map");
    if (readoutMap->rows() != m || readoutMap->cols() != m)
      throw_shape("readout map", m, m, readoutMap->rows(), readoutMap->cols());
  }
  if (!aop.allFinite() || !b.allFinite() || !c.allFinite() || !dOff.allFinite() ||
      (readoutMap && !readoutMap->allFinite()))
    throw InputError("model parameters must be finite");
}

Matrix BslmModel::readout_weights() const {
  if (mode == ReadoutMode::Basis) return phi.values() * *readoutMap;
  return c;
}

BslmModel init_bslm(const Vocabulary& vocab, const BslmHyper& h) {
  h.validate();
  const Index v = vocab.size(), m = h.atoms_for(v);
  std::mt19937_64 rng(h.seed);
  Matrix phi(v, m);
  const Index ident = std::min(v, m);
  phi.leftCols(ident) = Matrix::Identity(v, ident);
  if (m > ident) phi.rightCols(m - ident) = unit_columns(gaussian_matrix(v, m - ident, rng));
  BslmModel model{vocab,
                  Basis(std::move(phi)),
                  Matrix::Zero(m, m),
                  Matrix::Identity(m, m),
                  Matrix::Zero(v, m),
                  Vector::Zero(v),
                  std::nullopt,
                  h.readout};
  if (h.readout == ReadoutMode::Basis) model.readoutMap = Matrix::Zero(m, m);
  return model;
}

SolverOptions code_solver_options() {
  SolverOptions o;
  o.maxInnerIters = 2000;
  o.tol = 1e-12;
  return o;
}

Matrix infer_token_codes(const std::vector<Index>& ids, const Matrix& phi, double codeWeight,
                         const SolverOptions& opts) {
  Matrix e = Matrix::Zero(phi.rows(), static_cast<Index>(ids.size()));
  for (std::size_t k = 0; k < ids.size(); ++k) {
    if (ids[k] < 0 || ids[k] >= phi.rows()) throw InputError("token index out of range");
    e(ids[k], static_cast<Index>(k)) = 1.0;
  }
  return solve_coeffs(e, phi, CoeffPenalty::l1(codeWeight), opts);
}

Vector infer_token_code(Index w, const Matrix& phi, double codeWeight, const SolverOptions& opts) {
  return infer_token_codes({w}, phi, codeWeight, opts).col(0);
}

Vector step_state(const Vector& z, const Vector& a, const BslmModel& model) {
  return model.aop * z + model.b * a;
}

Vector logits(const Vector& z, const BslmModel& model) {
  if (model.mode == ReadoutMode::Basis) return model.phi.values() * (*model.readoutMap * z) + model.dOff;
  return model.c * z + model.dOff;
}

Vector next_token_dist(const Vector& l) {
  const double top = l.maxCoeff();
  Vector p = (l.array() - top).exp();
  return p / p.sum();
}

namespace {

double log_sum_exp(const Vector& l) {
  const double top = l.maxCoeff();
  return top + std::log((l.array() - top).exp().sum());
}

void check_block(const std::vector<Index>& block, const Matrix& states) {
  if (static_cast<Index>(block.size()) != states.cols())
    throw_shape("block states", states.rows(), static_cast<Index>(block.size()), states.rows(), states.cols());
}

// Sum of -log softmax(W z_t + d)[w_{t+1}] and, when `g` is given, the
// softmax residuals p_t - e_{w_{t+1}} as columns.
double readout_nll(const std::vector<Index>& block, const Matrix& states, const Matrix& w, const Vector& d,
                   Matrix* g) {
  const Index steps = static_cast<Index>(block.size()) - 1;
  if (g) *g = Matrix::Zero(w.rows(), std::max<Index>(steps, 0));
  double total = 0.0;
  for (Index t = 0; t < steps; ++t) {
    const Vector l = w * states.col(t) + d;
    const Index next = block[static_cast<std::size_t>(t + 1)];
    total += log_sum_exp(l) - l[next];
    if (g) {
      g->col(t) = next_token_dist(l);
      (*g)(next, t) -= 1.0;
    }
  }
  return total;
}

}  // namespace

double block_nll(const std::vector<Index>& block, const Matrix& states, const BslmModel& model) {
  check_block(block, states);
  return readout_nll(block, states, model.readout_weights(), model.dOff, nullptr);
}

Matrix forward_states(const Matrix& codes, const Vector& carry, const BslmModel& model) {
  Matrix z(model.dim(), codes.cols());
  Vector prev = carry;
  for (Index t = 0; t < codes.cols(); ++t) {
    z.col(t) = model.aop * prev + model.b * codes.col(t);
    prev = z.col(t);
  }
  return z;
}

double BlockProblem::transition(const Matrix& z) const {
  double total = 0.0;
  for (Index t = 0; t < z.cols(); ++t) {
    const Vector prev = t == 0 ? carry : Vector(z.col(t - 1));
    total += (z.col(t) - model.aop * prev - model.b * codes.col(t)).squaredNorm();
  }
  return beta * total;
}

double BlockProblem::smooth(const Matrix& z) const {
  return readout_nll(block, z, model.readout_weights(), model.dOff, nullptr) + transition(z);
}

Matrix BlockProblem::gradient(const Matrix& z) const {
  const Matrix w = model.readout_weights();
  Matrix resid;
  readout_nll(block, z, w, model.dOff, &resid);
  Matrix g = Matrix::Zero(z.rows(), z.cols());
  if (resid.cols() > 0) g.leftCols(resid.cols()) = w.transpose() * resid;
  if (beta > 0.0) {
    for (Index t = 0; t < z.cols(); ++t) {
      const Vector prev = t == 0 ? carry : Vector(z.col(t - 1));
      const Vector r = z.col(t) - model.aop * prev - model.b * codes.col(t);
      g.col(t) += 2.0 * beta * r;
      if (t > 0) g.col(t - 1) -= 2.0 * beta * model.aop.transpose() * r;
    }
  }
  return g;
}

namespace {

struct StateProblem {
  BlockProblem inner;
  CoeffPenalty penaltyDesc;

  double smooth(const Matrix& z) const { return inner.smooth(z); }
  Matrix gradient(const Matrix& z) const { return inner.gradient(z); }
  double penalty(const Matrix& z) const { return coeff_penalty_value(z, penaltyDesc); }
  Matrix prox(const Matrix& v, double step) const { return prox_columns(v, penaltyDesc, step); }
};

}  // namespace

BlockStates infer_block_states(const std::vector<Index>& block, const Matrix& codes, const Vector& carry,
                               const BslmModel& model, const BslmHyper& h) {
  if (block.size() < 2) throw InputError("block state inference needs at least 2 tokens");
  if (codes.cols() != static_cast<Index>(block.size()) || codes.rows() != model.dim())
    throw_shape("block codes", model.dim(), static_cast<Index>(block.size()), codes.rows(), codes.cols());
  StateProblem pb{{block, codes, carry, model, h.transitionWeight}, {h.statePenalty, h.stateWeight, {}}};
  Matrix start = forward_states(codes, carry, model);

  // Softmax curvature is at most 1/2, so this bounds the gradient's Lipschitz
  // constant; backtracking only guards rounding.
  const double opNorm = spectral_norm(model.aop);
  const double wNorm = spectral_norm(model.readout_weights());
  detail::ProxSettings s;
  s.maxIters = h.stateIters;
  s.tol = 1e-10;
  s.accelerate = true;
  s.backtracking = true;
  s.lipschitz = 2.0 * h.transitionWeight * (1.0 + opNorm) * (1.0 + opNorm) + 0.5 * wNorm * wNorm;

  BlockStates out;
  out.initialObjective = pb.smooth(start) + pb.penalty(start);
  auto res = detail::run_prox_gradient(pb, std::move(start), s);
  out.states = std::move(res.x);
  out.objective = res.objective;
  out.iterations = res.iterations;
  return out;
}

NllTotals corpus_nll(const std::vector<std::vector<Index>>& docs, const BslmModel& model, double codeWeight) {
  const Index v = model.vocab_size();
  std::vector<Index> all(static_cast<std::size_t>(v));
  for (Index i = 0; i < v; ++i) all[static_cast<std::size_t>(i)] = i;
  const Matrix table = infer_token_codes(all, model.phi.values(), codeWeight);
  const Matrix w = model.readout_weights();
  NllTotals out;
  for (const auto& doc : docs) {
    Vector z = Vector::Zero(model.dim());
    for (std::size_t t = 0; t < doc.size(); ++t) {
      z = model.aop * z + model.b * table.col(doc[t]);
      if (t + 1 < doc.size()) {
        const Vector l = w * z + model.dOff;
        out.nll += log_sum_exp(l) - l[doc[t + 1]];
        ++out.tokens;
      }
    }
  }
  return out;
}

double perplexity(const std::vector<std::vector<Index>>& docs, const BslmModel& model, double codeWeight) {
  const NllTotals t = corpus_nll(docs, model, codeWeight);
  if (t.tokens == 0) throw InputError("evaluation corpus has no predicted tokens");
  return std::exp(t.nll / static_cast<double>(t.tokens));
}

double perplexity(std::string_view text, const BslmModel& model, double codeWeight) {
  return perplexity(encode_documents(text, model.vocab), model, codeWeight);
}

EvalReport evaluate(const std::vector<std::vector<Index>>& docs, const BslmModel& model, double codeWeight) {
  using clock = std::chrono::steady_clock;
  const Index v = model.vocab_size();
  std::vector<Index> all(static_cast<std::size_t>(v));
  for (Index i = 0; i < v; ++i) all[static_cast<std::size_t>(i)] = i;
  const Matrix table = infer_token_codes(all, model.phi.values(), codeWeight);
  const Matrix w = model.readout_weights();
  EvalReport rep;
  double nll = 0.0;
  std::vector<double> lat;
  for (const auto& doc : docs) {
    Vector z = Vector::Zero(model.dim());
    for (std::size_t t = 0; t + 1 < doc.size(); ++t) {
      const auto t0 = clock::now();
      z = model.aop * z + model.b * table.col(doc[t]);
      const Vector l = w * z + model.dOff;
      const double lse = log_sum_exp(l);
      lat.push_back(std::chrono::duration<double, std::micro>(clock::now() - t0).count());
      nll += lse - l[doc[t + 1]];
      ++rep.tokens;
    }
  }
  if (rep.tokens == 0) throw InputError("evaluation corpus has no predicted tokens");
  rep.perplexity = std::exp(nll / static_cast<double>(rep.tokens));
  double sum = 0.0;
  for (double x : lat) sum += x;
  rep.meanLatencyUs = sum / static_cast<double>(lat.size());
  std::sort(lat.begin(), lat.end());
  auto pct = [&](double q) { return lat[static_cast<std::size_t>(q * static_cast<double>(lat.size() - 1))]; };
  rep.p50LatencyUs = pct(0.5);
  rep.p95LatencyUs = pct(0.95);
  rep.maxLatencyUs = lat.back();
  return rep;
}

namespace {

// Gradient steps with Armijo backtracking on the mean block NLL, over C and d
// (or the readout map M in Basis mode).
void update_readout(BslmModel& model, const std::vector<Index>& block, const Matrix& z, double lr, int steps) {
  const double scale = 1.0 / static_cast<double>(block.size() - 1);
  const Matrix zPred = z.leftCols(static_cast<Index>(block.size()) - 1);
  const bool basisMode = model.mode == ReadoutMode::Basis;
  for (int k = 0; k < steps; ++k) {
    Matrix resid;
    const double f = scale * readout_nll(block, z, model.readout_weights(), model.dOff, &resid);
    const Matrix gW = scale * resid * zPred.transpose();
    const Matrix gParam = basisMode ? Matrix(model.phi.values().transpose() * gW) : gW;
    const Vector gD = scale * resid.rowwise().sum();
    const double gg = gParam.squaredNorm() + gD.squaredNorm();
    if (gg == 0.0) return;
    Matrix& param = basisMode ? *model.readoutMap : model.c;
    const Matrix p0 = param;
    const Vector d0 = model.dOff;
    double step = lr;
    bool accepted = false;
    for (int halving = 0; halving < 40; ++halving) {
      param = p0 - step * gParam;
      model.dOff = d0 - step * gD;
      const double fNew = scale * readout_nll(block, z, model.readout_weights(), model.dOff, nullptr);
      if (std::isfinite(fNew) && fNew <= f - 0.5 * step * gg) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      param = p0;
      model.dOff = d0;
      return;
    }
  }
}

// Token-basis update on the block's distinct tokens. Atoms that carry no code
// mass keep their previous direction.
double update_token_basis(BslmModel& model, const std::vector<Index>& ids, const Matrix& codes, double mu) {
  const Index v = model.vocab_size();
  Matrix e = Matrix::Zero(v, static_cast<Index>(ids.size()));
  for (std::size_t k = 0; k < ids.size(); ++k) e(ids[k], static_cast<Index>(k)) = 1.0;
  const Matrix& old = model.phi.values();
  const double before = (e - old * codes).squaredNorm();
  const BasisUpdate upd = update_basis(e, codes, BasisPenalty::frobenius(mu));
  Matrix next = old;
  for (Index k = 0; k < next.cols(); ++k) {
    const double n = upd.raw.col(k).norm();
    if (n >= 1e-12 && codes.row(k).norm() > 0.0) next.col(k) = upd.raw.col(k) / n;
  }
  if (!next.allFinite()) throw NumericError("non-finite token basis", -1);
  model.phi = Basis(std::move(next));
  return before;
}

}  // namespace

BslmTrainResult train_bslm(std::string_view text, const BslmHyper& h) {
  const Vocabulary vocab = build_vocab(text, h.level);
  return train_bslm(encode_documents(text, vocab), vocab, h);
}

BslmTrainResult train_bslm(const std::vector<std::vector<Index>>& docs, const Vocabulary& vocab,
                           const BslmHyper& h) {
  h.validate();
  long blocks = 0;
  for (const auto& doc : docs) blocks += static_cast<long>((doc.size() + static_cast<std::size_t>(h.blockLen) - 1) /
                                                           static_cast<std::size_t>(h.blockLen));
  if (blocks < 2) throw InputError("training corpus must yield at least 2 blocks");

  BslmModel model = init_bslm(vocab, h);
  const Index m = model.dim();
  const auto start = std::chrono::steady_clock::now();
  Matrix statsUU = Matrix::Zero(2 * m, 2 * m);
  Matrix statsZU = Matrix::Zero(m, 2 * m);
  const CoeffPenalty statePen{h.statePenalty, h.stateWeight, {}};

  BslmLog log;
  int epoch = 0;
  try {
    for (epoch = 0; epoch < h.epochs; ++epoch) {
      const double lr = h.learningRate / (1.0 + h.learningRateDecay * epoch);
      EpochRecord rec;
      rec.epoch = epoch + 1;
      double nll = 0.0;
      long predicted = 0;
      for (const auto& doc : docs) {
        Vector carry = Vector::Zero(m);
        for (std::size_t s0 = 0; s0 < doc.size(); s0 += static_cast<std::size_t>(h.blockLen)) {
          const std::size_t s1 = std::min(doc.size(), s0 + static_cast<std::size_t>(h.blockLen));
          const std::vector<Index> block(doc.begin() + static_cast<std::ptrdiff_t>(s0),
                                         doc.begin() + static_cast<std::ptrdiff_t>(s1));
          std::vector<Index> ids(block);
          std::sort(ids.begin(), ids.end());
          ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
          const Matrix distinct = infer_token_codes(ids, model.phi.values(), h.codeWeight);
          Matrix codes(m, static_cast<Index>(block.size()));
          for (std::size_t t = 0; t < block.size(); ++t)
            codes.col(static_cast<Index>(t)) =
                distinct.col(std::lower_bound(ids.begin(), ids.end(), block[t]) - ids.begin());
          if (block.size() < 2) {
            carry = step_state(carry, codes.col(0), model);
            continue;
          }

          const BlockStates bs = infer_block_states(block, codes, carry, model, h);
          const Matrix& z = bs.states;
          nll += block_nll(block, z, model);
          predicted += static_cast<long>(block.size()) - 1;
          BlockProblem bp{block, codes, carry, model, h.transitionWeight};
          rec.transition += bp.transition(z);
          rec.statePenalty += coeff_penalty_value(z, statePen);

          rec.reconstruction += update_token_basis(model, ids, distinct, h.basisWeight);

          // (A, B) by ridge regression of z_t on (z_{t-1}, a_t).
          Matrix u(2 * m, z.cols());
          u.topRows(m).col(0) = carry;
          if (z.cols() > 1) u.topRows(m).rightCols(z.cols() - 1) = z.leftCols(z.cols() - 1);
          u.bottomRows(m) = codes;
          statsUU = h.statsDecay * statsUU + u * u.transpose();
          statsZU = h.statsDecay * statsZU + z * u.transpose();
          Matrix ab;
          if (h.ridge > 0.0) {
            const Matrix reg = statsUU + h.ridge * Matrix::Identity(2 * m, 2 * m);
            ab = reg.ldlt().solve(statsZU.transpose()).transpose();
          } else {
            ab = statsUU.completeOrthogonalDecomposition().solve(statsZU.transpose()).transpose();
          }
          if (!ab.allFinite()) throw NumericError("non-finite state transition update", epoch + 1);
          LatentOperator op(ab.leftCols(m));
          if (h.rhoMax) op = project_stable(op, *h.rhoMax);
          model.aop = op.matrix();
          model.b = ab.rightCols(m);

          // The readout is fit on causal states: inferred states have seen
          // the tokens they are asked to predict.
          update_readout(model, block, forward_states(codes, carry, model), lr, h.readoutSteps);
          carry = z.col(z.cols() - 1);
        }
      }
      if (!model.aop.allFinite() || !model.b.allFinite() || !model.c.allFinite() || !model.dOff.allFinite() ||
          (model.readoutMap && !model.readoutMap->allFinite()))
        throw NumericError("non-finite model parameters", epoch + 1);
      rec.meanNll = predicted ? nll / static_cast<double>(predicted) : 0.0;
      rec.perplexity = perplexity(docs, model, h.codeWeight);
      rec.spectralRadius = spectral_radius(model.aop);
      rec.wallTime = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      if (!std::isfinite(rec.meanNll) || !std::isfinite(rec.perplexity))
        throw NumericError("non-finite training loss", epoch + 1);
      log.records.push_back(rec);
    }
  } catch (const NumericError& e) {
    log.stopReason = "numeric_failure";
    throw BslmAborted(e.detail(), epoch + 1, log);
  }
  log.stopReason = "epochs";
  return {std::move(model), std::move(log)};
}

}  // namespace basisforge
