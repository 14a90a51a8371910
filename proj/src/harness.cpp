#include "rafm/harness.hpp"

#include "rafm/memory_bank.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

namespace rafm {

void validateExperimentConfig(const ExperimentConfig& cfg) {
  if (cfg.batchSize < 1 || cfg.ctBatchSize < 1) throw ConfigError("batch sizes must be positive");
  if (cfg.learningRate <= 0) throw ConfigError("learning_rate must be positive");
  if (cfg.epochs < 0) throw ConfigError("epochs must be non-negative");
  if (cfg.eulerSteps < 1) throw ConfigError("euler_steps must be >= 1");
  if (cfg.encoderDim < 1) throw ConfigError("encoder_dim must be positive");
  if (cfg.embedDim < 2 || cfg.embedDim % 2 != 0) throw ConfigError("embed dim must be even, >= 2");

  // Table conventions: K encodes the candidate-pool size of the strategy.
  switch (cfg.strategy) {
    case Strategy::Random:
      if (cfg.bankCapacity != 0) throw ConfigError("strategy=random requires k=0");
      break;
    case Strategy::Batchwise:
      if (cfg.bankCapacity != static_cast<std::size_t>(cfg.batchSize))
        throw ConfigError("strategy=batchwise requires k == batch_size");
      if (cfg.ctBatchSize != cfg.batchSize)
        throw ConfigError("strategy=batchwise requires ct_batch_size == batch_size");
      break;
    case Strategy::Retrieval:
      if (cfg.bankCapacity == 0) throw ConfigError("strategy=retrieval requires k > 0");
      break;
    case Strategy::Paired:
      if (cfg.bankCapacity != 0) throw ConfigError("strategy=paired requires k=0");
      break;
  }
}

KvFile configToKv(const ExperimentConfig& cfg) {
  KvFile kv;
  kv.set("schema_version", std::int64_t{1});
  kv.set("seed", cfg.seed);
  kv.set("strategy", strategyName(cfg.strategy));
  kv.set("k", static_cast<std::uint64_t>(cfg.bankCapacity));
  kv.set("batch_size", static_cast<std::int64_t>(cfg.batchSize));
  kv.set("ct_batch_size", static_cast<std::int64_t>(cfg.ctBatchSize));
  kv.set("learning_rate", cfg.learningRate);
  kv.set("epochs", static_cast<std::int64_t>(cfg.epochs));
  kv.set("euler_steps", static_cast<std::int64_t>(cfg.eulerSteps));
  kv.set("dataset", cfg.dataset);
  kv.set("encoder_seed", cfg.encoderSeed);
  kv.set("encoder_dim", static_cast<std::int64_t>(cfg.encoderDim));
  kv.set("out_dir", cfg.outDir);
  return kv;
}

ExperimentConfig configFromKv(const KvFile& kv) {
  if (kv.getInt("schema_version", 1) != 1)
    throw ConfigError("unsupported config schema_version");
  ExperimentConfig cfg;
  cfg.seed = kv.has("seed") ? kv.requireUnsigned("seed") : cfg.seed;
  cfg.strategy = parseStrategy(kv.getString("strategy", strategyName(cfg.strategy)));
  cfg.bankCapacity =
      kv.has("k") ? static_cast<std::size_t>(kv.requireUnsigned("k")) : cfg.bankCapacity;
  cfg.batchSize = static_cast<int>(kv.getInt("batch_size", cfg.batchSize));
  cfg.ctBatchSize = static_cast<int>(kv.getInt("ct_batch_size", cfg.ctBatchSize));
  cfg.learningRate = kv.getDouble("learning_rate", cfg.learningRate);
  cfg.epochs = static_cast<int>(kv.getInt("epochs", cfg.epochs));
  cfg.eulerSteps = static_cast<int>(kv.getInt("euler_steps", cfg.eulerSteps));
  cfg.dataset = kv.getString("dataset", cfg.dataset);
  cfg.encoderSeed = kv.has("encoder_seed") ? kv.requireUnsigned("encoder_seed") : cfg.encoderSeed;
  cfg.encoderDim = static_cast<int>(kv.getInt("encoder_dim", cfg.encoderDim));
  cfg.outDir = kv.getString("out_dir", cfg.outDir);
  return cfg;
}

const std::vector<int>& splitGroup(const Dataset& data, const std::string& name) {
  if (name == "train_cbct") return data.split.trainCbct;
  if (name == "train_ct") return data.split.trainCt;
  if (name == "validation") return data.split.validation;
  if (name == "test") return data.split.test;
  throw ConfigError("unknown split '" + name + "' (train_cbct|train_ct|validation|test)");
}

namespace {

constexpr std::uint64_t kSwdSeed = 424242;
constexpr int kSwdProjections = 128;

std::string sliceFileName(int subjectId, int sliceId, const char* suffix) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "s%03d_k%02d_%s.bin", subjectId, sliceId, suffix);
  return buf;
}

Scalar pairSimilarity(const FrozenEncoder& encoder, const CoupledPair& pair) {
  return cosine(encoder.encode(pair.x0), encoder.encode(pair.x1));
}

std::string runLogCsv(const RunLog& log) {
  std::string csv = "iteration,epoch,loss,mean_similarity,bank_size,enqueue_seq,couple_seq,fallback\n";
  for (const IterationRecord& r : log.records) {
    csv += std::to_string(r.iteration) + "," + std::to_string(r.epoch) + "," +
           formatDouble(r.loss) + "," + formatDouble(r.meanSimilarity) + "," +
           std::to_string(r.bankSize) + "," + std::to_string(r.enqueueSeq) + "," +
           std::to_string(r.coupleSeq) + "," + (r.usedFallback ? "1" : "0") + "\n";
  }
  return csv;
}

std::string timingText(const RunLog& log) {
  std::string out = "# wall-clock per iteration (ms); excluded from determinism guarantees\n";
  Scalar total = 0;
  for (const IterationRecord& r : log.records) {
    out += std::to_string(r.iteration) + " " + formatDouble(r.wallMs) + "\n";
    total += r.wallMs;
  }
  out += "total_ms " + formatDouble(total) + "\n";
  return out;
}

}  // namespace

TrainResult train(const ExperimentConfig& cfg, const Dataset& data) {
  validateExperimentConfig(cfg);
  if (cfg.outDir.empty()) throw ConfigError("out_dir must be set for training");
  std::filesystem::create_directories(cfg.outDir);

  const int imageH = data.config.imageH, imageW = data.config.imageW;
  const int sampleDim = imageH * imageW;

  VelocityNetConfig netCfg;
  netCfg.sampleDim = sampleDim;
  netCfg.hiddenWidths = cfg.hiddenWidths;
  netCfg.embed.dim = cfg.embedDim;
  VelocityNet net(netCfg, cfg.seed);
  AdamState adam(net);
  AdamConfig adamCfg;
  adamCfg.learningRate = cfg.learningRate;

  const FrozenEncoder encoder(imageH, imageW, cfg.encoderDim, cfg.encoderSeed);
  MemoryBank bank(cfg.bankCapacity);

  const std::vector<DomainSample> cbctPool = cbctSamples(data, data.split.trainCbct);
  const std::vector<DomainSample> ctPool = ctSamples(data, data.split.trainCt);
  if (cbctPool.empty() || ctPool.empty()) throw DataError("training split has no slices");

  // Paired oracle: the clean counterpart of each CBCT-group slice.
  std::map<std::pair<int, int>, const PhantomSlice*> sliceIndex;
  for (const PhantomSlice& s : data.slices) sliceIndex[{s.subjectId, s.sliceId}] = &s;

  const std::set<int> cbctSubjects(data.split.trainCbct.begin(), data.split.trainCbct.end());
  const std::set<int> ctSubjects(data.split.trainCt.begin(), data.split.trainCt.end());

  Rng batchRng(mixSeed(cfg.seed, 0xba7c4));
  Rng couplingRng(mixSeed(cfg.seed, 0xc091e));
  Rng timeRng(mixSeed(cfg.seed, 0x7173));

  TrainResult result;
  RunLog& log = result.log;
  std::uint64_t eventSeq = 0;
  long iteration = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<std::size_t> order(cbctPool.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    batchRng.shuffle(order);

    // Epoch coverage: each CBCT training slice must appear exactly once.
    std::vector<int> used(cbctPool.size(), 0);

    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batchSize)) {
      const auto t0 = std::chrono::steady_clock::now();
      const std::size_t chunk = std::min(order.size() - start, static_cast<std::size_t>(cfg.batchSize));

      std::vector<DomainSample> cbctBatch;
      cbctBatch.reserve(chunk);
      for (std::size_t i = 0; i < chunk; ++i) {
        cbctBatch.push_back(cbctPool[order[start + i]]);
        ++used[order[start + i]];
      }

      // Batchwise assignment needs a CT batch of equal size.
      const std::size_t ctDraw = cfg.strategy == Strategy::Batchwise
                                     ? chunk
                                     : static_cast<std::size_t>(cfg.ctBatchSize);
      std::vector<DomainSample> ctBatch;
      ctBatch.reserve(ctDraw);
      for (std::size_t i = 0; i < ctDraw; ++i)
        ctBatch.push_back(ctPool[static_cast<std::size_t>(batchRng.integer(ctPool.size()))]);

      // Alg. 1 lines 6-7: encode, then FIFO-enqueue before any retrieval.
      if (cfg.bankCapacity > 0) {
        std::vector<BankEntry> entries;
        entries.reserve(ctBatch.size());
        for (const DomainSample& s : ctBatch)
          entries.push_back(BankEntry{encoder.encode(s.image), s.image, s.subjectId, s.sliceId, 0});
        bank.enqueue(entries);
      }
      const std::uint64_t enqueueSeq = ++eventSeq;

      CouplingBatch coupling;
      switch (cfg.strategy) {
        case Strategy::Random:
          coupling = coupleRandom(cbctBatch, ctBatch, couplingRng);
          break;
        case Strategy::Batchwise:
          coupling = coupleBatchwise(cbctBatch, ctBatch, encoder);
          break;
        case Strategy::Retrieval:
          coupling = coupleRetrieval(cbctBatch, bank, encoder, ctBatch, couplingRng);
          break;
        case Strategy::Paired: {
          std::vector<DomainSample> counterparts;
          counterparts.reserve(chunk);
          for (const DomainSample& s : cbctBatch) {
            const auto it = sliceIndex.find({s.subjectId, s.sliceId});
            if (it == sliceIndex.end())
              throw DataError("paired coupling: missing counterpart for subject " +
                              std::to_string(s.subjectId));
            const PhantomSlice* p = it->second;
            counterparts.push_back(DomainSample{p->clean, p->subjectId, p->sliceId, p->anatomyClass});
          }
          coupling = couplePaired(cbctBatch, counterparts);
          break;
        }
      }
      const std::uint64_t coupleSeq = ++eventSeq;
      if (coupling.usedFallback) ++log.fallbackCount;

      // Strict unpairedness: unpaired strategies must never couple across the
      // subject-group boundary.
      if (cfg.strategy != Strategy::Paired) {
        for (const CoupledPair& p : coupling.pairs) {
          if (!cbctSubjects.count(p.subject0) || !ctSubjects.count(p.subject1) ||
              p.subject0 == p.subject1)
            throw DataError("unpaired protocol violation: pair couples subject " +
                            std::to_string(p.subject0) + " with subject " +
                            std::to_string(p.subject1));
          ++log.checkedPairs;
        }
      }

      const RfLossResult step = rfLossBatch(net, coupling, timeRng);
      if (!std::isfinite(step.loss))
        throw NumericError("non-finite loss at iteration " + std::to_string(iteration));
      adam.update(net, step.grads, adamCfg);

      Scalar simSum = 0;
      for (const CoupledPair& p : coupling.pairs) simSum += pairSimilarity(encoder, p);

      IterationRecord rec;
      rec.iteration = iteration;
      rec.epoch = epoch;
      rec.loss = step.loss;
      rec.meanSimilarity = simSum / static_cast<Scalar>(coupling.pairs.size());
      rec.bankSize = bank.size();
      rec.enqueueSeq = enqueueSeq;
      rec.coupleSeq = coupleSeq;
      rec.usedFallback = coupling.usedFallback;
      rec.wallMs = std::chrono::duration<Scalar, std::milli>(std::chrono::steady_clock::now() - t0)
                       .count();
      if (iteration == 0) result.initialLoss = step.loss;
      result.finalLoss = step.loss;
      log.records.push_back(rec);
      ++iteration;
    }

    for (std::size_t i = 0; i < used.size(); ++i)
      if (used[i] != 1)
        throw DataError("epoch coverage violation: slice index " + std::to_string(i) + " used " +
                        std::to_string(used[i]) + " times");
  }

  if (!log.records.empty()) {
    Scalar s = 0;
    for (const IterationRecord& r : log.records) s += r.meanSimilarity;
    log.meanSimilarityOverRun = s / static_cast<Scalar>(log.records.size());
  }

  const std::filesystem::path out(cfg.outDir);
  configToKv(cfg).save(out / "config.txt");

  std::map<std::string, std::string> extra;
  extra["strategy"] = strategyName(cfg.strategy);
  extra["k"] = std::to_string(cfg.bankCapacity);
  extra["image_h"] = std::to_string(imageH);
  extra["image_w"] = std::to_string(imageW);
  extra["encoder_seed"] = std::to_string(cfg.encoderSeed);
  extra["encoder_dim"] = std::to_string(cfg.encoderDim);
  if (!cfg.dataset.empty() && std::filesystem::exists(std::filesystem::path(cfg.dataset) / "index.txt"))
    extra["dataset_hash"] = toHex(datasetHash(cfg.dataset));
  result.checkpointPath = out / "model.ckpt";
  saveCheckpoint(net, iteration, extra, result.checkpointPath);

  writeFile(out / "train_log.csv", runLogCsv(log));
  writeFile(out / "timing.txt", timingText(log));
  return result;
}

TranslateResult translate(const VelocityNet& net, const Dataset& data,
                          std::span<const int> subjectIds, const OdeSolveConfig& ode) {
  if (net.sampleDim() != data.config.imageH * data.config.imageW)
    throw DataError("checkpoint sample dim " + std::to_string(net.sampleDim()) +
                    " does not match dataset slices of " +
                    std::to_string(data.config.imageH * data.config.imageW) + " pixels");
  TranslateResult result;
  result.inputs = cbctSamples(data, subjectIds);
  for (const DomainSample& s : result.inputs) {
    const Vector endpoint = eulerIntegrate(net, flatten(s.image), ode);
    Matrix raw = unflatten(endpoint, data.config.imageH, data.config.imageW);
    Matrix clamped = raw.cwiseMax(-1.0).cwiseMin(1.0);
    result.raw.push_back(std::move(raw));
    result.clamped.push_back(std::move(clamped));
  }
  return result;
}

TranslateResult translateCheckpoint(const std::filesystem::path& checkpointPath,
                                    const Dataset& data, const std::string& split,
                                    int eulerSteps, const std::filesystem::path& outDir) {
  const LoadedCheckpoint ckpt = loadCheckpoint(checkpointPath);
  const auto hIt = ckpt.extra.find("image_h");
  const auto wIt = ckpt.extra.find("image_w");
  if (hIt != ckpt.extra.end() && wIt != ckpt.extra.end() &&
      (parseInt(hIt->second) != data.config.imageH || parseInt(wIt->second) != data.config.imageW))
    throw DataError("checkpoint was trained on " + hIt->second + "x" + wIt->second +
                    " slices, dataset has " + std::to_string(data.config.imageH) + "x" +
                    std::to_string(data.config.imageW));

  const std::vector<int>& subjects = splitGroup(data, split);
  TranslateResult result = translate(ckpt.net, data, subjects, OdeSolveConfig{eulerSteps});

  std::filesystem::create_directories(outDir / "slices");
  for (std::size_t i = 0; i < result.inputs.size(); ++i) {
    const DomainSample& s = result.inputs[i];
    saveMatrix(result.raw[i], outDir / "slices" / sliceFileName(s.subjectId, s.sliceId, "synth_raw"));
    saveMatrix(result.clamped[i], outDir / "slices" / sliceFileName(s.subjectId, s.sliceId, "synth"));
  }
  KvFile manifest;
  manifest.set("kind", "rafm-translation");
  manifest.set("split", split);
  manifest.set("euler_steps", static_cast<std::int64_t>(eulerSteps));
  manifest.set("slices", static_cast<std::int64_t>(result.inputs.size()));
  manifest.set("image_h", static_cast<std::int64_t>(data.config.imageH));
  manifest.set("image_w", static_cast<std::int64_t>(data.config.imageW));
  manifest.save(outDir / "manifest.txt");
  return result;
}

namespace {

struct SubjectAccum {
  std::vector<const PhantomSlice*> refs;
  std::vector<const Matrix*> synth;
};

SubjectMetrics computeSubject(int subjectId, const SubjectAccum& acc) {
  SubjectMetrics m;
  m.subjectId = subjectId;
  m.sliceCount = static_cast<int>(acc.refs.size());
  std::vector<Vector> synthFlat, refFlat;
  for (std::size_t i = 0; i < acc.refs.size(); ++i) {
    const Matrix& ref = acc.refs[i]->clean;
    const Matrix& synth = *acc.synth[i];
    m.mae += mae(synth, ref);
    m.ssim += ssim(synth, ref);
    m.psnr += psnr(synth, ref);
    m.structDice += structDice(synth, ref);
    synthFlat.push_back(flatten(synth));
    refFlat.push_back(flatten(ref));
  }
  const Scalar n = static_cast<Scalar>(acc.refs.size());
  m.mae /= n;
  m.ssim /= n;
  m.psnr /= n;
  m.structDice /= n;
  m.maeHu = m.mae * kHuPerUnit;
  m.swd = slicedWasserstein(synthFlat, refFlat, kSwdProjections, kSwdSeed);
  return m;
}

}  // namespace

EvaluateResult evaluate(const Dataset& data, std::span<const int> subjectIds,
                        const std::vector<Matrix>& synthesized) {
  // Collect the split's slices in dataset order; synthesized must align.
  std::vector<const PhantomSlice*> refs;
  for (const PhantomSlice& s : data.slices)
    if (std::find(subjectIds.begin(), subjectIds.end(), s.subjectId) != subjectIds.end())
      refs.push_back(&s);
  if (refs.empty()) throw DataError("evaluate: split has no slices");
  if (refs.size() != synthesized.size())
    throw DataError("evaluate: " + std::to_string(synthesized.size()) +
                    " synthesized slices for " + std::to_string(refs.size()) + " references");

  std::map<int, SubjectAccum> groups;
  std::map<int, SubjectAccum> baselineGroups;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    groups[refs[i]->subjectId].refs.push_back(refs[i]);
    groups[refs[i]->subjectId].synth.push_back(&synthesized[i]);
    baselineGroups[refs[i]->subjectId].refs.push_back(refs[i]);
    baselineGroups[refs[i]->subjectId].synth.push_back(&refs[i]->degraded);
  }

  EvaluateResult result;
  std::vector<Vector> allSynth, allRef;
  Scalar baselineSum = 0;
  for (const auto& [sid, acc] : groups) {
    SubjectMetrics m = computeSubject(sid, acc);
    result.report.perSubject.push_back(m);
    result.report.aggregate.mae += m.mae;
    result.report.aggregate.ssim += m.ssim;
    result.report.aggregate.psnr += m.psnr;
    result.report.aggregate.structDice += m.structDice;
    result.report.aggregate.sliceCount += m.sliceCount;
    for (std::size_t i = 0; i < acc.refs.size(); ++i) {
      allSynth.push_back(flatten(*acc.synth[i]));
      allRef.push_back(flatten(acc.refs[i]->clean));
    }
    Scalar b = 0;
    for (const PhantomSlice* s : acc.refs) b += mae(s->degraded, s->clean);
    baselineSum += b / static_cast<Scalar>(acc.refs.size());
  }
  const Scalar ns = static_cast<Scalar>(groups.size());
  result.report.aggregate.subjectId = -1;
  result.report.aggregate.mae /= ns;
  result.report.aggregate.ssim /= ns;
  result.report.aggregate.psnr /= ns;
  result.report.aggregate.structDice /= ns;
  result.report.aggregate.maeHu = result.report.aggregate.mae * kHuPerUnit;
  result.report.aggregate.swd = slicedWasserstein(allSynth, allRef, kSwdProjections, kSwdSeed);
  result.baselineMae = baselineSum / ns;
  result.baselineMaeHu = result.baselineMae * kHuPerUnit;
  return result;
}

EvaluateResult evaluateToFiles(const Dataset& data, const std::string& split,
                               const std::filesystem::path& synthDir,
                               const std::filesystem::path& outDir) {
  const std::vector<int>& subjects = splitGroup(data, split);
  std::vector<Matrix> synthesized;
  for (const PhantomSlice& s : data.slices) {
    if (std::find(subjects.begin(), subjects.end(), s.subjectId) == subjects.end()) continue;
    const auto path = synthDir / "slices" / sliceFileName(s.subjectId, s.sliceId, "synth");
    if (!std::filesystem::exists(path))
      throw DataError("missing synthesized slice: " + path.string());
    synthesized.push_back(loadMatrix(path));
  }
  EvaluateResult result = evaluate(data, subjects, synthesized);

  std::filesystem::create_directories(outDir);
  writeFile(outDir / "metrics.csv", metricReportCsv(result.report));

  KvFile summary;
  summary.set("split", split);
  summary.set("subjects", static_cast<std::int64_t>(result.report.perSubject.size()));
  summary.set("slices", static_cast<std::int64_t>(result.report.aggregate.sliceCount));
  summary.set("mae", result.report.aggregate.mae);
  summary.set("mae_hu", result.report.aggregate.maeHu);
  summary.set("ssim", result.report.aggregate.ssim);
  summary.set("psnr", result.report.aggregate.psnr);
  summary.set("swd", result.report.aggregate.swd);
  summary.set("struct_dice", result.report.aggregate.structDice);
  summary.set("baseline_mae", result.baselineMae);
  summary.set("baseline_mae_hu", result.baselineMaeHu);
  summary.save(outDir / "summary.txt");
  return result;
}

namespace {

Scalar medianOf(std::vector<Scalar> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

AblationResult ablate(const ExperimentConfig& base, const std::vector<std::size_t>& kList,
                      const std::vector<std::uint64_t>& seeds, const Dataset& data,
                      const std::filesystem::path& outRoot) {
  if (seeds.empty()) throw ConfigError("ablate: need at least one seed");
  std::filesystem::create_directories(outRoot);

  struct Member {
    Strategy strategy;
    std::size_t k;
  };
  std::vector<Member> plan;
  plan.push_back({Strategy::Random, 0});
  plan.push_back({Strategy::Batchwise, static_cast<std::size_t>(base.batchSize)});
  for (std::size_t k : kList) plan.push_back({Strategy::Retrieval, k});
  plan.push_back({Strategy::Paired, 0});

  AblationResult result;
  result.runs.reserve(plan.size() * seeds.size());
  result.datasetHashHex =
      base.dataset.empty() ? std::string(16, '0') : toHex(datasetHash(base.dataset));

  std::string runsCsv =
      "strategy,k,seed,status,iterations,mean_similarity,mae,mae_hu,ssim,psnr,swd,struct_dice,"
      "baseline_mae,dataset_hash\n";
  std::string tableCsv = "strategy,k,seeds,status,mae,mae_hu,ssim,psnr,swd,struct_dice,dataset_hash\n";

  for (const Member& member : plan) {
    std::vector<RunOutcome*> memberRuns;
    for (std::uint64_t seed : seeds) {
      RunOutcome run;
      run.strategy = member.strategy;
      run.k = member.k;
      run.seed = seed;
      run.runDir = outRoot / ("run_" + strategyName(member.strategy) + "_k" +
                              std::to_string(member.k) + "_seed" + std::to_string(seed));
      try {
        ExperimentConfig cfg = base;
        cfg.seed = seed;
        cfg.strategy = member.strategy;
        cfg.bankCapacity = member.k;
        if (member.strategy == Strategy::Batchwise) cfg.ctBatchSize = cfg.batchSize;
        cfg.outDir = (run.runDir / "train").string();
        const TrainResult trained = train(cfg, data);
        const TranslateResult translated = translateCheckpoint(
            trained.checkpointPath, data, "test", cfg.eulerSteps, run.runDir / "translate");
        (void)translated;
        const EvaluateResult evaluated =
            evaluateToFiles(data, "test", run.runDir / "translate", run.runDir / "eval");
        run.metrics = evaluated.report.aggregate;
        run.baselineMae = evaluated.baselineMae;
        run.meanSimilarity = trained.log.meanSimilarityOverRun;
        run.iterations = static_cast<long>(trained.log.records.size());
        run.checkedPairs = trained.log.checkedPairs;
        run.ok = true;
      } catch (const std::exception& e) {
        run.ok = false;
        run.error = e.what();
      }
      result.runs.push_back(std::move(run));
      memberRuns.push_back(&result.runs.back());

      const RunOutcome& r = *memberRuns.back();
      runsCsv += strategyName(r.strategy) + "," +
                 (r.strategy == Strategy::Paired ? "/" : std::to_string(r.k)) + "," +
                 std::to_string(r.seed) + "," + (r.ok ? "ok" : "failed") + "," +
                 std::to_string(r.iterations) + "," + formatDouble(r.meanSimilarity) + "," +
                 formatDouble(r.metrics.mae) + "," + formatDouble(r.metrics.maeHu) + "," +
                 formatDouble(r.metrics.ssim) + "," + formatDouble(r.metrics.psnr) + "," +
                 formatDouble(r.metrics.swd) + "," + formatDouble(r.metrics.structDice) + "," +
                 formatDouble(r.baselineMae) + "," + result.datasetHashHex + "\n";
    }

    std::vector<Scalar> maes, maeHus, ssims, psnrs, swds, dices;
    int okCount = 0;
    for (const RunOutcome* r : memberRuns) {
      if (!r->ok) continue;
      ++okCount;
      maes.push_back(r->metrics.mae);
      maeHus.push_back(r->metrics.maeHu);
      ssims.push_back(r->metrics.ssim);
      psnrs.push_back(r->metrics.psnr);
      swds.push_back(r->metrics.swd);
      dices.push_back(r->metrics.structDice);
    }
    const std::string kColumn =
        member.strategy == Strategy::Paired ? "/" : std::to_string(member.k);
    const std::string status =
        okCount == static_cast<int>(memberRuns.size())
            ? "ok"
            : "failed(" + std::to_string(memberRuns.size() - okCount) + "/" +
                  std::to_string(memberRuns.size()) + ")";
    if (okCount == 0) {
      tableCsv += strategyName(member.strategy) + "," + kColumn + "," +
                  std::to_string(memberRuns.size()) + "," + status + ",-,-,-,-,-,-," +
                  result.datasetHashHex + "\n";
    } else {
      tableCsv += strategyName(member.strategy) + "," + kColumn + "," +
                  std::to_string(memberRuns.size()) + "," + status + "," +
                  formatDouble(medianOf(maes)) + "," + formatDouble(medianOf(maeHus)) + "," +
                  formatDouble(medianOf(ssims)) + "," + formatDouble(medianOf(psnrs)) + "," +
                  formatDouble(medianOf(swds)) + "," + formatDouble(medianOf(dices)) + "," +
                  result.datasetHashHex + "\n";
    }
  }

  result.tableCsv = tableCsv;
  result.runsCsv = runsCsv;
  writeFile(outRoot / "ablation.csv", tableCsv);
  writeFile(outRoot / "runs.csv", runsCsv);
  return result;
}

}  // namespace rafm
