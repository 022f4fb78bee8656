#pragma once

// Basis-state language model. Tokens are coded in a learned token basis,
// a linear state z_t = A z_{t-1} + B a_t summarizes w_1..w_t, and a softmax
// readout of z_t predicts w_{t+1}.

#include "basisforge/coeff_solver.hpp"
#include "basisforge/error.hpp"
#include "basisforge/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace basisforge {

enum class TokenLevel { Char, Word };

/// Tokens in first-occurrence order; index 0 is always the unknown symbol.
class Vocabulary {
 public:
  static constexpr const char* kUnknown = "<unk>";

  Vocabulary(std::vector<std::string> tokens, TokenLevel level);

  Index size() const { return static_cast<Index>(tokens_.size()); }
  TokenLevel level() const { return level_; }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::string& token(Index i) const { return tokens_.at(static_cast<std::size_t>(i)); }
  /// Index of `tok`, or 0 when it is not in the vocabulary.
  Index lookup(const std::string& tok) const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, Index> index_;
  TokenLevel level_;
};

/// Splits UTF-8 text into code points (Char) or whitespace-separated words.
std::vector<std::string> tokenize(std::string_view text, TokenLevel level);
/// Records separated by one or more blank lines. Empty records are dropped.
std::vector<std::string> split_documents(std::string_view text);

Vocabulary build_vocab(std::string_view text, TokenLevel level);
/// Token ids per document; unseen tokens map to 0.
std::vector<std::vector<Index>> encode_documents(std::string_view text, const Vocabulary& vocab);

enum class ReadoutMode { Direct, Basis };

struct BslmHyper {
  Index atoms = 0;                 // m; 0 means m = V
  Index blockLen = 32;             // L >= 2
  double codeWeight = 1e-3;        // lambda_a, L1 on token codes
  double stateWeight = 1e-3;       // lambda_z
  CoeffPenaltyKind statePenalty = CoeffPenaltyKind::SquaredL2;
  double transitionWeight = 1.0;   // beta
  double basisWeight = 1e-3;       // mu, Frobenius on the token basis
  double ridge = 10.0;             // nu for the (A, B) regression
  double statsDecay = 0.9;         // forgetting factor of the regression statistics
  int epochs = 20;
  int stateIters = 50;
  double learningRate = 1.0;       // readout step at epoch 0
  double learningRateDecay = 0.05; // lr_e = lr / (1 + decay * e)
  int readoutSteps = 3;            // gradient steps on (C, d) per block
  std::optional<double> rhoMax = 0.99;
  ReadoutMode readout = ReadoutMode::Direct;
  TokenLevel level = TokenLevel::Char;
  std::uint64_t seed = 0;

  void validate() const;
  Index atoms_for(Index vocabSize) const { return atoms > 0 ? atoms : vocabSize; }
};

struct BslmModel {
  Vocabulary vocab;
  Basis phi;            // V x m token basis
  Matrix aop;           // m x m
  Matrix b;             // m x m
  Matrix c;             // V x m, Direct readout
  Vector dOff;          // V
  std::optional<Matrix> readoutMap;  // m x m, Basis readout
  ReadoutMode mode = ReadoutMode::Direct;

  Index vocab_size() const { return vocab.size(); }
  Index dim() const { return phi.atoms(); }
  void validate() const;
  /// V x m matrix W with logits = W z + d.
  Matrix readout_weights() const;
};

/// Fresh model: token basis [I | random unit atoms], A = 0, B = I, C = 0,
/// d = 0 (uniform predictions), M = 0 in Basis mode.
BslmModel init_bslm(const Vocabulary& vocab, const BslmHyper& h);

SolverOptions code_solver_options();
/// argmin_a ||e_w - Phi a||^2 + lambda_a ||a||_1.
Vector infer_token_code(Index w, const Matrix& phi, double codeWeight, const SolverOptions& opts = code_solver_options());
/// Codes for the listed token ids, one column each.
Matrix infer_token_codes(const std::vector<Index>& ids, const Matrix& phi, double codeWeight,
                         const SolverOptions& opts = code_solver_options());

Vector step_state(const Vector& z, const Vector& a, const BslmModel& model);
Vector logits(const Vector& z, const BslmModel& model);
Vector next_token_dist(const Vector& logits);

/// -sum_{t=1}^{L-1} log p(w_{t+1} | z_t) with z_t = states.col(t-1).
double block_nll(const std::vector<Index>& block, const Matrix& states, const BslmModel& model);

/// Block state objective pieces. codes.col(t) is the code of block[t];
/// `carry` is the state before the block.
struct BlockProblem {
  const std::vector<Index>& block;
  const Matrix& codes;
  const Vector& carry;
  const BslmModel& model;
  double beta;

  /// NLL + beta sum_t ||z_t - A z_{t-1} - B a_t||^2.
  double smooth(const Matrix& z) const;
  Matrix gradient(const Matrix& z) const;
  double transition(const Matrix& z) const;
};

/// z_t = A z_{t-1} + B a_t from the carry.
Matrix forward_states(const Matrix& codes, const Vector& carry, const BslmModel& model);

struct BlockStates {
  Matrix states;
  double objective = 0.0;
  double initialObjective = 0.0;  // at the forward-recursion start
  int iterations = 0;
};

BlockStates infer_block_states(const std::vector<Index>& block, const Matrix& codes, const Vector& carry,
                               const BslmModel& model, const BslmHyper& h);

struct EpochRecord {
  int epoch = 0;
  double meanNll = 0.0;        // training NLL per predicted token at inferred states
  double perplexity = 0.0;     // forward recursion over the training corpus
  double transition = 0.0;     // beta-weighted transition term, summed over blocks
  double statePenalty = 0.0;
  double reconstruction = 0.0; // token-basis reconstruction error, summed over blocks
  double spectralRadius = 0.0;
  double wallTime = 0.0;
};

struct BslmLog {
  std::vector<EpochRecord> records;
  std::string stopReason;
};

class BslmAborted : public NumericError {
 public:
  BslmAborted(const std::string& what, long epoch, BslmLog partial)
      : NumericError(what, epoch), partial_(std::move(partial)) {}
  const BslmLog& partial_log() const { return partial_; }

 private:
  BslmLog partial_;
};

struct BslmTrainResult {
  BslmModel model;
  BslmLog log;
};

/// Trains on every document of `text`, split into contiguous blocks of
/// blockLen tokens. The vocabulary is built from `text`.
BslmTrainResult train_bslm(std::string_view text, const BslmHyper& h);
BslmTrainResult train_bslm(const std::vector<std::vector<Index>>& docs, const Vocabulary& vocab,
                           const BslmHyper& h);

struct NllTotals {
  double nll = 0.0;
  long tokens = 0;  // predicted tokens: N - 1 per document
};

/// Forward-recursion NLL over whole documents (state reset per document).
NllTotals corpus_nll(const std::vector<std::vector<Index>>& docs, const BslmModel& model, double codeWeight);
double perplexity(const std::vector<std::vector<Index>>& docs, const BslmModel& model, double codeWeight);
double perplexity(std::string_view text, const BslmModel& model, double codeWeight);

struct EvalReport {
  double perplexity = 0.0;
  long tokens = 0;
  // Wall time of one state step plus readout, in microseconds.
  double meanLatencyUs = 0.0;
  double p50LatencyUs = 0.0;
  double p95LatencyUs = 0.0;
  double maxLatencyUs = 0.0;
};

/// Perplexity plus per-token latency of the forward recursion.
EvalReport evaluate(const std::vector<std::vector<Index>>& docs, const BslmModel& model, double codeWeight);

}  // namespace basisforge
