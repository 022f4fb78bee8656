#pragma once

// Serialization: matrix CSV, JSONL logs, JSON configs and reports, and the
// language-model checkpoint.

#include "basisforge/bslm.hpp"
#include "basisforge/diagnostics.hpp"
#include "basisforge/geometry.hpp"
#include "basisforge/trainer.hpp"
#include "basisforge/types.hpp"

#include <iosfwd>
#include <optional>
#include <string>

namespace basisforge {

// ---- matrix CSV ----
// One matrix row per line, comma-separated, 17 significant digits. An
// optional first line "# rows cols" is checked against the body when present.
void write_matrix_csv(std::ostream& os, const Matrix& m, bool header = false);
Matrix read_matrix_csv(std::istream& is);
void save_matrix_csv(const std::string& path, const Matrix& m, bool header = false);
Matrix load_matrix_csv(const std::string& path);

// ---- logs ----
// One JSON object per line. Wall time is optional so that logs from two runs
// can be compared byte for byte.
void write_train_log(std::ostream& os, const TrainLog& log, bool wallTime = true);
void write_bslm_log(std::ostream& os, const BslmLog& log, bool wallTime = true);

// ---- configs ----
struct GraphSpec {
  Index k = 10;
  KernelScale scale = MedianScale{};
  std::string edgesPath;  // when set, the graph is read from this edge list instead
};

struct RunConfig {
  DvblConfig model;
  TrainOptions train;
  std::optional<GraphSpec> graph;
  std::optional<double> rhoMax;
};

/// Parses the JSON config document. Unknown keys and wrong types are
/// ConfigErrors.
RunConfig parse_run_config(const std::string& jsonText);
BslmHyper parse_bslm_hyper(const std::string& jsonText);

// ---- reports ----
std::string recovery_report_json(const RecoveryReport& r);

// ---- checkpoint ----
// A single JSON document; each matrix is {"rows", "cols", "data"} where data
// is base64 of the row-major little-endian IEEE-754 doubles.
std::string encode_checkpoint(const BslmModel& model, const BslmHyper& hyper);
struct Checkpoint {
  BslmModel model;
  BslmHyper hyper;
};
Checkpoint decode_checkpoint(const std::string& text);
void save_checkpoint(const std::string& path, const BslmModel& model, const BslmHyper& hyper);
Checkpoint load_checkpoint(const std::string& path);

std::string base64_encode(const std::string& bytes);
std::string base64_decode(const std::string& text);

std::string read_text_file(const std::string& path);

}  // namespace basisforge
