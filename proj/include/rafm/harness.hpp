#pragma once

// Experiment orchestration: the training loop over a pluggable coupling
// strategy, checkpoint translation, metric evaluation and the coupling-vs-K
// ablation sweep.

#include "rafm/common.hpp"
#include "rafm/coupling.hpp"
#include "rafm/data_synth.hpp"
#include "rafm/flow.hpp"
#include "rafm/io.hpp"
#include "rafm/metrics.hpp"
#include "rafm/velocity_net.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace rafm {

struct ExperimentConfig {
  std::uint64_t seed = 1;
  Strategy strategy = Strategy::Retrieval;
  std::size_t bankCapacity = 256;  // K; 0 for random, batch size for batchwise
  int batchSize = 4;               // B, CBCT mini-batch
  int ctBatchSize = 4;             // B', CT mini-batch feeding the bank
  Scalar learningRate = 2e-4;
  int epochs = 30;
  int eulerSteps = 10;
  std::string dataset;             // dataset directory
  std::uint64_t encoderSeed = 101;
  int encoderDim = 64;
  std::string outDir;

  // Architecture knobs (library-level; not part of the config file schema).
  std::vector<int> hiddenWidths{256, 256};
  int embedDim = 32;
};

// Throws ConfigError; enforces the K conventions (random <=> K==0,
// batchwise <=> K==batchSize).
void validateExperimentConfig(const ExperimentConfig& cfg);

KvFile configToKv(const ExperimentConfig& cfg);
ExperimentConfig configFromKv(const KvFile& kv);

struct IterationRecord {
  long iteration = 0;
  int epoch = 0;
  Scalar loss = 0;
  Scalar meanSimilarity = 0;  // mean cosine of encoded endpoint pairs
  std::size_t bankSize = 0;
  std::uint64_t enqueueSeq = 0;  // global event counters; enqueue < couple
  std::uint64_t coupleSeq = 0;
  bool usedFallback = false;
  Scalar wallMs = 0;  // recorded to timing.txt, not to the deterministic CSV
};

struct RunLog {
  std::vector<IterationRecord> records;
  long checkedPairs = 0;  // unpairedness assertions that ran
  long fallbackCount = 0;
  Scalar meanSimilarityOverRun = 0;
};

struct TrainResult {
  std::filesystem::path checkpointPath;
  RunLog log;
  Scalar initialLoss = 0;  // loss of the first iteration (0 if none)
  Scalar finalLoss = 0;
};

// Executes the retrieval-augmented flow-matching loop: sample CBCT batch,
// sample CT batch, encode + FIFO-enqueue, couple per strategy, draw t per
// pair, regress the velocity onto x1-x0, Adam update. Writes config.txt,
// model.ckpt, train_log.csv and timing.txt into cfg.outDir.
TrainResult train(const ExperimentConfig& cfg, const Dataset& data);

// Subject ids of a named split group.
const std::vector<int>& splitGroup(const Dataset& data, const std::string& name);

struct TranslateResult {
  std::vector<DomainSample> inputs;  // degraded slices, dataset order
  std::vector<Matrix> raw;           // ODE endpoint
  std::vector<Matrix> clamped;       // clipped to [-1,1]; metrics use these
};

TranslateResult translate(const VelocityNet& net, const Dataset& data,
                          std::span<const int> subjectIds, const OdeSolveConfig& ode);

// Checkpoint-driven variant; writes per-slice raw/clamped tensors and a
// manifest into outDir.
TranslateResult translateCheckpoint(const std::filesystem::path& checkpointPath,
                                    const Dataset& data, const std::string& split,
                                    int eulerSteps, const std::filesystem::path& outDir);

struct EvaluateResult {
  MetricReport report;
  Scalar baselineMae = 0;    // mae(degraded, clean), same aggregation
  Scalar baselineMaeHu = 0;
};

// Synthesized slices must follow dataset order for the given subjects.
EvaluateResult evaluate(const Dataset& data, std::span<const int> subjectIds,
                        const std::vector<Matrix>& synthesized);

// Loads synthesized slices from a translate output directory, evaluates
// them against the split's clean references and writes metrics.csv +
// summary.txt into outDir.
EvaluateResult evaluateToFiles(const Dataset& data, const std::string& split,
                               const std::filesystem::path& synthDir,
                               const std::filesystem::path& outDir);

// ---------------------------------------------------------------------------
// Ablation sweep: random(K=0), batchwise(K=B), retrieval(K in kList), paired,
// each over the given seeds, sharing one dataset.
// ---------------------------------------------------------------------------

struct RunOutcome {
  Strategy strategy = Strategy::Random;
  std::size_t k = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  SubjectMetrics metrics;      // aggregate row of the evaluation
  Scalar baselineMae = 0;
  Scalar meanSimilarity = 0;   // mean over all training iterations
  long iterations = 0;
  long checkedPairs = 0;       // unpairedness assertions that ran
  std::filesystem::path runDir;
};

struct AblationResult {
  std::vector<RunOutcome> runs;
  std::string tableCsv;  // one row per (strategy, K): median over seeds
  std::string runsCsv;   // one row per run
  std::string datasetHashHex;
};

AblationResult ablate(const ExperimentConfig& base, const std::vector<std::size_t>& kList,
                      const std::vector<std::uint64_t>& seeds, const Dataset& data,
                      const std::filesystem::path& outRoot);

}  // namespace rafm
