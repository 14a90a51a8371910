// Command-line front end: dataset generation, training, translation,
// evaluation and the ablation sweep.
//
// Exit codes: 0 success, 1 config error, 2 data error, 3 numeric failure.

#include "rafm/harness.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <sstream>

namespace {

using namespace rafm;

std::vector<std::uint64_t> parseSeedList(const std::string& csv) {
  std::vector<std::uint64_t> seeds;
  std::stringstream in(csv);
  std::string part;
  while (std::getline(in, part, ',')) seeds.push_back(parseUnsigned(part));
  if (seeds.empty()) throw ConfigError("empty seed list");
  return seeds;
}

std::vector<std::size_t> parseKList(const std::string& csv) {
  std::vector<std::size_t> ks;
  if (csv.empty()) return ks;
  std::stringstream in(csv);
  std::string part;
  while (std::getline(in, part, ',')) ks.push_back(static_cast<std::size_t>(parseUnsigned(part)));
  return ks;
}

// Flags mirror the ExperimentConfig field names; a config file provides the
// base values and explicitly passed flags override it.
struct ConfigFlags {
  std::string configPath;
  std::string seed, strategy, k, batchSize, ctBatchSize, learningRate, epochs, eulerSteps;
  std::string dataset, encoderSeed, encoderDim, outDir;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", configPath, "config file (key = value lines)");
    cmd->add_option("--seed", seed, "master seed");
    cmd->add_option("--strategy", strategy, "random|batchwise|retrieval|paired");
    cmd->add_option("--k", k, "memory bank capacity K");
    cmd->add_option("--batch_size", batchSize, "CBCT mini-batch size B");
    cmd->add_option("--ct_batch_size", ctBatchSize, "CT mini-batch size B'");
    cmd->add_option("--learning_rate", learningRate, "Adam learning rate");
    cmd->add_option("--epochs", epochs, "passes over the CBCT training set");
    cmd->add_option("--euler_steps", eulerSteps, "ODE steps at inference");
    cmd->add_option("--dataset", dataset, "dataset directory");
    cmd->add_option("--encoder_seed", encoderSeed, "frozen encoder seed");
    cmd->add_option("--encoder_dim", encoderDim, "frozen encoder feature dim");
    cmd->add_option("--out_dir", outDir, "output directory");
  }

  ExperimentConfig resolve() const {
    KvFile merged;
    if (!configPath.empty()) merged = KvFile::load(configPath);
    if (!seed.empty()) merged.set("seed", seed);
    if (!strategy.empty()) merged.set("strategy", strategy);
    if (!k.empty()) merged.set("k", k);
    if (!batchSize.empty()) merged.set("batch_size", batchSize);
    if (!ctBatchSize.empty()) merged.set("ct_batch_size", ctBatchSize);
    if (!learningRate.empty()) merged.set("learning_rate", learningRate);
    if (!epochs.empty()) merged.set("epochs", epochs);
    if (!eulerSteps.empty()) merged.set("euler_steps", eulerSteps);
    if (!dataset.empty()) merged.set("dataset", dataset);
    if (!encoderSeed.empty()) merged.set("encoder_seed", encoderSeed);
    if (!encoderDim.empty()) merged.set("encoder_dim", encoderDim);
    if (!outDir.empty()) merged.set("out_dir", outDir);
    ExperimentConfig cfg = configFromKv(merged);
    if (!merged.has("k")) {
      // Unset K follows the strategy's candidate-pool convention.
      switch (cfg.strategy) {
        case Strategy::Random:
        case Strategy::Paired: cfg.bankCapacity = 0; break;
        case Strategy::Batchwise: cfg.bankCapacity = static_cast<std::size_t>(cfg.batchSize); break;
        case Strategy::Retrieval: break;
      }
    }
    return cfg;
  }
};

int runCli(int argc, char** argv) {
  CLI::App app{"retrieval-augmented flow matching on synthetic phantom data"};
  app.require_subcommand(1);

  // generate-data
  auto* gen = app.add_subcommand("generate-data", "generate a phantom dataset");
  DatasetConfig dataCfg;
  std::uint64_t dataSeed = 7;
  std::string dataOut;
  gen->add_option("--out_dir", dataOut, "dataset directory")->required();
  gen->add_option("--seed", dataSeed, "dataset seed");
  gen->add_option("--subjects", dataCfg.subjects, "number of subjects");
  gen->add_option("--slices_per_subject", dataCfg.slicesPerSubject, "slices per subject");
  gen->add_option("--image_h", dataCfg.imageH, "slice height");
  gen->add_option("--image_w", dataCfg.imageW, "slice width");
  gen->add_option("--anatomy_classes", dataCfg.anatomyClasses, "anatomy classes");
  gen->add_option("--bias", dataCfg.bias, "degradation intensity bias");
  gen->add_option("--streak_amp", dataCfg.streakAmplitude, "streak amplitude");
  gen->add_option("--noise_sigma", dataCfg.noiseSigma, "noise sigma");
  gen->add_option("--jitter_sigma", dataCfg.jitterSigma, "per-slice jitter sigma");

  // train
  auto* tr = app.add_subcommand("train", "train a velocity field");
  ConfigFlags trainFlags;
  trainFlags.attach(tr);

  // translate
  auto* ts = app.add_subcommand("translate", "run the learned ODE over a split");
  std::string tsCkpt, tsDataset, tsSplit = "test", tsOut;
  int tsSteps = 10;
  ts->add_option("--checkpoint", tsCkpt, "checkpoint file")->required();
  ts->add_option("--dataset", tsDataset, "dataset directory")->required();
  ts->add_option("--split", tsSplit, "train_cbct|train_ct|validation|test");
  ts->add_option("--euler_steps", tsSteps, "ODE steps");
  ts->add_option("--out_dir", tsOut, "output directory")->required();

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "score synthesized slices against references");
  std::string evSynth, evDataset, evSplit = "test", evOut;
  ev->add_option("--synth", evSynth, "translate output directory")->required();
  ev->add_option("--dataset", evDataset, "dataset directory")->required();
  ev->add_option("--split", evSplit, "split name");
  ev->add_option("--out_dir", evOut, "output directory")->required();

  // ablate
  auto* ab = app.add_subcommand("ablate", "coupling-strategy / K sweep");
  ConfigFlags ablateFlags;
  ablateFlags.attach(ab);
  std::string abKList = "64,256";
  std::string abSeeds = "1,2,3";
  ab->add_option("--k_list", abKList, "retrieval bank capacities, comma separated");
  ab->add_option("--seeds", abSeeds, "seeds, comma separated");

  CLI11_PARSE(app, argc, argv);

  if (gen->parsed()) {
    const Dataset data = generateDataset(dataCfg, dataSeed);
    saveDataset(data, dataOut);
    std::cout << "dataset: " << dataOut << "\n"
              << "subjects: " << data.subjects.size() << ", slices per domain: "
              << data.slices.size() << "\n"
              << "hash: " << toHex(datasetHash(dataOut)) << "\n";
    return 0;
  }

  if (tr->parsed()) {
    const ExperimentConfig cfg = trainFlags.resolve();
    if (cfg.dataset.empty()) throw ConfigError("train: --dataset is required");
    if (cfg.outDir.empty()) throw ConfigError("train: --out_dir is required");
    const Dataset data = loadDataset(cfg.dataset);
    const TrainResult result = train(cfg, data);
    std::cout << "checkpoint: " << result.checkpointPath.string() << "\n"
              << "iterations: " << result.log.records.size() << "\n"
              << "initial_loss: " << formatDouble(result.initialLoss) << "\n"
              << "final_loss: " << formatDouble(result.finalLoss) << "\n";
    return 0;
  }

  if (ts->parsed()) {
    const Dataset data = loadDataset(tsDataset);
    const TranslateResult result = translateCheckpoint(tsCkpt, data, tsSplit, tsSteps, tsOut);
    std::cout << "translated " << result.inputs.size() << " slices into " << tsOut << "\n";
    return 0;
  }

  if (ev->parsed()) {
    const Dataset data = loadDataset(evDataset);
    const EvaluateResult result = evaluateToFiles(data, evSplit, evSynth, evOut);
    std::cout << "mae: " << formatDouble(result.report.aggregate.mae)
              << " (baseline " << formatDouble(result.baselineMae) << ")\n"
              << "ssim: " << formatDouble(result.report.aggregate.ssim) << "\n"
              << "psnr: " << formatDouble(result.report.aggregate.psnr) << "\n"
              << "swd: " << formatDouble(result.report.aggregate.swd) << "\n"
              << "struct_dice: " << formatDouble(result.report.aggregate.structDice) << "\n";
    return 0;
  }

  if (ab->parsed()) {
    const ExperimentConfig base = ablateFlags.resolve();
    if (base.dataset.empty()) throw ConfigError("ablate: --dataset is required");
    if (base.outDir.empty()) throw ConfigError("ablate: --out_dir is required");
    const Dataset data = loadDataset(base.dataset);
    const AblationResult result = ablate(base, parseKList(abKList), parseSeedList(abSeeds), data,
                                         base.outDir);
    std::cout << result.tableCsv;
    for (const RunOutcome& run : result.runs)
      if (!run.ok)
        std::cerr << "[failed] " << strategyName(run.strategy) << " k=" << run.k
                  << " seed=" << run.seed << ": " << run.error << "\n";
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return runCli(argc, argv);
  } catch (const rafm::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const rafm::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const rafm::Error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
