#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rafm/harness.hpp"

#include <filesystem>
#include <set>

using namespace rafm;

namespace {

namespace fs = std::filesystem;

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

DatasetConfig tinyDataConfig() {
  DatasetConfig cfg;
  cfg.subjects = 12;  // split: 5 cbct + 4 ct train, 1 validation, 2 test
  cfg.slicesPerSubject = 4;
  return cfg;
}

ExperimentConfig tinyRunConfig(const fs::path& outDir) {
  ExperimentConfig cfg;
  cfg.strategy = Strategy::Retrieval;
  cfg.bankCapacity = 32;
  cfg.epochs = 2;
  cfg.outDir = outDir.string();
  return cfg;
}

}  // namespace

TEST_CASE("experiment config round-trips through the key-value format") {
  ExperimentConfig cfg;
  cfg.seed = 9;
  cfg.strategy = Strategy::Batchwise;
  cfg.bankCapacity = 4;
  cfg.learningRate = 3e-4;
  cfg.dataset = "some/dir";
  const ExperimentConfig back = configFromKv(configToKv(cfg));
  CHECK(back.seed == 9);
  CHECK(back.strategy == Strategy::Batchwise);
  CHECK(back.bankCapacity == 4);
  CHECK(back.learningRate == 3e-4);
  CHECK(back.dataset == "some/dir");
}

TEST_CASE("config validation enforces the strategy/K conventions") {
  ExperimentConfig cfg;
  cfg.outDir = "x";
  cfg.strategy = Strategy::Random;
  cfg.bankCapacity = 5;
  CHECK_THROWS_AS(validateExperimentConfig(cfg), ConfigError);
  cfg.bankCapacity = 0;
  CHECK_NOTHROW(validateExperimentConfig(cfg));

  cfg.strategy = Strategy::Batchwise;
  cfg.bankCapacity = 8;
  cfg.batchSize = 4;
  CHECK_THROWS_AS(validateExperimentConfig(cfg), ConfigError);
  cfg.bankCapacity = 4;
  CHECK_NOTHROW(validateExperimentConfig(cfg));

  cfg.strategy = Strategy::Retrieval;
  cfg.bankCapacity = 0;
  CHECK_THROWS_AS(validateExperimentConfig(cfg), ConfigError);

  cfg.bankCapacity = 16;
  cfg.learningRate = -1.0;
  CHECK_THROWS_AS(validateExperimentConfig(cfg), ConfigError);
}

TEST_CASE("zero epochs: checkpoint equals the initialization, empty log body") {
  TempDir tmp("rafm_harness_zero_epochs");
  const Dataset data = generateDataset(tinyDataConfig(), 5);
  ExperimentConfig cfg = tinyRunConfig(tmp.path / "run");
  cfg.epochs = 0;
  const TrainResult result = train(cfg, data);
  CHECK(result.log.records.empty());

  const LoadedCheckpoint ckpt = loadCheckpoint(result.checkpointPath);
  CHECK(ckpt.stepCount == 0);
  VelocityNetConfig netCfg;
  netCfg.sampleDim = data.config.imageH * data.config.imageW;
  netCfg.hiddenWidths = cfg.hiddenWidths;
  netCfg.embed.dim = cfg.embedDim;
  const VelocityNet fresh(netCfg, cfg.seed);
  CHECK(ckpt.net.sameParameters(fresh));

  const std::string log = readFile(tmp.path / "run" / "train_log.csv");
  CHECK(log == "iteration,epoch,loss,mean_similarity,bank_size,enqueue_seq,couple_seq,fallback\n");
}

TEST_CASE("identical config and seed give byte-identical checkpoints and CSVs") {
  TempDir tmp("rafm_harness_determinism");
  const fs::path dataDir = tmp.path / "data";
  saveDataset(generateDataset(tinyDataConfig(), 5), dataDir);
  const Dataset data = loadDataset(dataDir);

  auto runOnce = [&](const std::string& name) {
    ExperimentConfig cfg = tinyRunConfig(tmp.path / name);
    cfg.dataset = dataDir.string();
    cfg.epochs = 3;
    const TrainResult r = train(cfg, data);
    translateCheckpoint(r.checkpointPath, data, "test", cfg.eulerSteps, tmp.path / name / "tr");
    evaluateToFiles(data, "test", tmp.path / name / "tr", tmp.path / name / "ev");
  };
  runOnce("a");
  runOnce("b");

  CHECK(readFile(tmp.path / "a" / "model.ckpt") == readFile(tmp.path / "b" / "model.ckpt"));
  CHECK(readFile(tmp.path / "a" / "train_log.csv") == readFile(tmp.path / "b" / "train_log.csv"));
  CHECK(readFile(tmp.path / "a" / "ev" / "metrics.csv") ==
        readFile(tmp.path / "b" / "ev" / "metrics.csv"));
  CHECK(readFile(tmp.path / "a" / "ev" / "summary.txt") ==
        readFile(tmp.path / "b" / "ev" / "summary.txt"));
}

TEST_CASE("training works for every strategy and asserts the protocol") {
  TempDir tmp("rafm_harness_strategies");
  const Dataset data = generateDataset(tinyDataConfig(), 6);
  for (Strategy strategy :
       {Strategy::Random, Strategy::Batchwise, Strategy::Retrieval, Strategy::Paired}) {
    ExperimentConfig cfg = tinyRunConfig(tmp.path / strategyName(strategy));
    cfg.strategy = strategy;
    cfg.bankCapacity = strategy == Strategy::Retrieval ? 32 : 0;
    if (strategy == Strategy::Batchwise) cfg.bankCapacity = static_cast<std::size_t>(cfg.batchSize);
    const TrainResult result = train(cfg, data);
    CHECK_FALSE(result.log.records.empty());

    // Alg. 1 sequencing: enqueue strictly precedes the coupling step.
    for (const IterationRecord& rec : result.log.records)
      CHECK(rec.enqueueSeq < rec.coupleSeq);

    if (strategy != Strategy::Paired)
      CHECK(result.log.checkedPairs ==
            static_cast<long>(result.log.records.size()) * cfg.batchSize);
  }
}

TEST_CASE("epoch structure: every CBCT slice is used exactly once per epoch") {
  TempDir tmp("rafm_harness_epoch");
  const Dataset data = generateDataset(tinyDataConfig(), 7);
  ExperimentConfig cfg = tinyRunConfig(tmp.path / "run");
  cfg.epochs = 2;
  cfg.batchSize = 3;  // 20 slices -> 7 chunks per epoch, last one ragged
  cfg.strategy = Strategy::Random;
  cfg.bankCapacity = 0;
  const TrainResult result = train(cfg, data);
  const std::size_t cbctSlices = cbctSamples(data, data.split.trainCbct).size();
  const std::size_t perEpoch = (cbctSlices + 2) / 3;
  CHECK(result.log.records.size() == 2 * perEpoch);
}

TEST_CASE("a corrupted split trips the unpairedness assertion") {
  TempDir tmp("rafm_harness_violation");
  Dataset data = generateDataset(tinyDataConfig(), 8);
  data.split.trainCt = data.split.trainCbct;  // same-subject pairs now possible
  ExperimentConfig cfg = tinyRunConfig(tmp.path / "run");
  cfg.strategy = Strategy::Random;
  cfg.bankCapacity = 0;
  cfg.epochs = 30;
  CHECK_THROWS_AS(train(cfg, data), DataError);
}

TEST_CASE("divergence aborts with the iteration index") {
  TempDir tmp("rafm_harness_nan");
  const Dataset data = generateDataset(tinyDataConfig(), 9);
  ExperimentConfig cfg = tinyRunConfig(tmp.path / "run");
  cfg.learningRate = 1e154;  // one Adam step overflows the forward pass
  try {
    train(cfg, data);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("iteration") != std::string::npos);
  }
}

TEST_CASE("translate: zero-weight checkpoint is the identity transport") {
  TempDir tmp("rafm_harness_translate");
  const Dataset data = generateDataset(tinyDataConfig(), 10);
  VelocityNetConfig netCfg;
  netCfg.sampleDim = data.config.imageH * data.config.imageW;
  netCfg.embed.dim = 32;
  VelocityNet net(netCfg, 1);
  for (std::size_t l = 0; l < net.layerCount(); ++l) {
    net.weight(l).setZero();
    net.bias(l).setZero();
  }
  const TranslateResult out = translate(net, data, data.split.test, OdeSolveConfig{10});
  REQUIRE_FALSE(out.raw.empty());
  for (std::size_t i = 0; i < out.raw.size(); ++i)
    CHECK((out.raw[i] - out.inputs[i].image).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("translate: step count matters for a non-constant field") {
  TempDir tmp("rafm_harness_steps");
  const Dataset data = generateDataset(tinyDataConfig(), 11);
  ExperimentConfig cfg = tinyRunConfig(tmp.path / "run");
  cfg.epochs = 2;
  const TrainResult trained = train(cfg, data);
  const LoadedCheckpoint ckpt = loadCheckpoint(trained.checkpointPath);
  const TranslateResult one = translate(ckpt.net, data, data.split.test, OdeSolveConfig{1});
  const TranslateResult ten = translate(ckpt.net, data, data.split.test, OdeSolveConfig{10});
  Scalar diff = 0;
  for (std::size_t i = 0; i < one.raw.size(); ++i)
    diff += (one.raw[i] - ten.raw[i]).cwiseAbs().maxCoeff();
  CHECK(diff > 0.0);
}

TEST_CASE("translate rejects a checkpoint/dataset shape mismatch") {
  TempDir tmp("rafm_harness_mismatch");
  const Dataset data = generateDataset(tinyDataConfig(), 12);
  VelocityNetConfig netCfg;
  netCfg.sampleDim = 64;  // 8x8, dataset is 16x16
  netCfg.embed.dim = 8;
  const VelocityNet net(netCfg, 1);
  CHECK_THROWS_AS(translate(net, data, data.split.test, OdeSolveConfig{10}), DataError);
}

TEST_CASE("evaluate: perfect synthesis scores mae 0, ssim 1, dice 1") {
  const Dataset data = generateDataset(tinyDataConfig(), 13);
  std::vector<Matrix> perfect;
  for (const PhantomSlice& s : data.slices)
    if (std::find(data.split.test.begin(), data.split.test.end(), s.subjectId) !=
        data.split.test.end())
      perfect.push_back(s.clean);
  const EvaluateResult result = evaluate(data, data.split.test, perfect);
  CHECK(result.report.aggregate.mae == 0.0);
  CHECK(result.report.aggregate.ssim == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(result.report.aggregate.structDice == 1.0);
  CHECK(result.report.aggregate.psnr == 99.0);
  CHECK(result.report.perSubject.size() == data.split.test.size());
}

TEST_CASE("evaluate: degraded input reproduces the baseline degradation metrics") {
  const Dataset data = generateDataset(tinyDataConfig(), 14);
  std::vector<Matrix> identity;
  for (const PhantomSlice& s : data.slices)
    if (std::find(data.split.test.begin(), data.split.test.end(), s.subjectId) !=
        data.split.test.end())
      identity.push_back(s.degraded);
  const EvaluateResult result = evaluate(data, data.split.test, identity);
  CHECK(result.report.aggregate.mae == doctest::Approx(result.baselineMae).epsilon(1e-12));
  CHECK(result.report.aggregate.mae > 0.0);
}

TEST_CASE("evaluate validates alignment") {
  const Dataset data = generateDataset(tinyDataConfig(), 15);
  std::vector<Matrix> tooFew{data.slices.front().clean};
  CHECK_THROWS_AS(evaluate(data, data.split.test, tooFew), DataError);
}

TEST_CASE("paired training on a tiny dataset drops the loss below 10% in 500 iterations") {
  TempDir tmp("rafm_harness_paired");
  const Dataset data = generateDataset(tinyDataConfig(), 16);
  ExperimentConfig cfg = tinyRunConfig(tmp.path / "run");
  cfg.strategy = Strategy::Paired;
  cfg.bankCapacity = 0;
  cfg.epochs = 100;  // 5 iterations per epoch -> 500 iterations
  const TrainResult result = train(cfg, data);
  REQUIRE(result.log.records.size() == 500);
  CHECK(result.finalLoss < 0.1 * result.initialLoss);
}

TEST_CASE("ablate with an empty K list runs random, batchwise and paired only") {
  TempDir tmp("rafm_harness_ablate");
  const fs::path dataDir = tmp.path / "data";
  saveDataset(generateDataset(tinyDataConfig(), 17), dataDir);
  const Dataset data = loadDataset(dataDir);

  ExperimentConfig base = tinyRunConfig(tmp.path / "unused");
  base.dataset = dataDir.string();
  base.epochs = 1;
  const AblationResult result = ablate(base, {}, {1}, data, tmp.path / "ablate");

  REQUIRE(result.runs.size() == 3);
  std::set<std::string> strategies;
  for (const RunOutcome& run : result.runs) {
    CHECK(run.ok);
    strategies.insert(strategyName(run.strategy));
  }
  CHECK(strategies == std::set<std::string>{"random", "batchwise", "paired"});

  // Every row carries the same dataset hash.
  const std::string expected = toHex(datasetHash(dataDir));
  CHECK(result.tableCsv.find(expected) != std::string::npos);
  std::size_t occurrences = 0, pos = 0;
  while ((pos = result.tableCsv.find(expected, pos)) != std::string::npos) {
    ++occurrences;
    pos += expected.size();
  }
  CHECK(occurrences == 3);
  CHECK(fs::exists(tmp.path / "ablate" / "ablation.csv"));
  CHECK(fs::exists(tmp.path / "ablate" / "runs.csv"));
}

TEST_CASE("split lookup knows the four groups") {
  const Dataset data = generateDataset(tinyDataConfig(), 18);
  CHECK(&splitGroup(data, "train_cbct") == &data.split.trainCbct);
  CHECK(&splitGroup(data, "test") == &data.split.test);
  CHECK_THROWS_AS(splitGroup(data, "holdout"), ConfigError);
}
