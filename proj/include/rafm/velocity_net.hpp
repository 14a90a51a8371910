#pragma once

// Time-conditioned MLP velocity field v(x, t) with hand-derived reverse-mode
// gradients and an Adam optimizer. The sinusoidal time embedding is
// concatenated to the flattened sample at the input layer.

#include "rafm/common.hpp"

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace rafm {

struct TimeEmbeddingConfig {
  int dim = 32;              // even, > 0
  Scalar maxPeriod = 10000.0;
};

// Entry i < dim/2 is sin(t / maxPeriod^(2i/dim)); entry dim/2 + i is the
// matching cosine. embed(0) is all zeros followed by all ones.
Vector embedTime(Scalar t, const TimeEmbeddingConfig& cfg);

struct VelocityNetConfig {
  int sampleDim = 0;                       // D, flattened sample length
  std::vector<int> hiddenWidths{256, 256}; // tanh layers; output is linear
  TimeEmbeddingConfig embed{};
};

struct Gradients {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
};

struct TrainItem {
  Vector x;       // network input sample (x_t during flow training)
  Scalar t = 0;
  Vector target;  // regression target in sample space
};

class VelocityNet {
 public:
  // Glorot-uniform weight init (+- sqrt(6/(fanIn+fanOut))), zero biases.
  VelocityNet(VelocityNetConfig cfg, std::uint64_t seed);
  VelocityNet(VelocityNetConfig cfg, std::uint64_t seed, std::vector<Matrix> weights,
              std::vector<Vector> biases);

  const VelocityNetConfig& config() const { return cfg_; }
  std::uint64_t initSeed() const { return seed_; }
  int sampleDim() const { return cfg_.sampleDim; }

  // [inputDim, hidden..., sampleDim] with inputDim = sampleDim + embed.dim.
  std::vector<int> layerWidths() const;

  std::size_t layerCount() const { return weights_.size(); }
  const Matrix& weight(std::size_t layer) const { return weights_[layer]; }
  const Vector& bias(std::size_t layer) const { return biases_[layer]; }
  Matrix& weight(std::size_t layer) { return weights_[layer]; }
  Vector& bias(std::size_t layer) { return biases_[layer]; }

  Vector forward(const Vector& x, Scalar t) const;

  // Mean over the batch of ||forward(x,t) - target||^2 and its exact
  // gradients with respect to every weight and bias.
  struct BackwardResult {
    Scalar loss = 0;
    Gradients grads;
  };
  BackwardResult backward(std::span<const TrainItem> batch) const;

  Gradients zeroGradients() const;

  bool sameParameters(const VelocityNet& other) const;

 private:
  VelocityNetConfig cfg_;
  std::uint64_t seed_ = 0;
  std::vector<Matrix> weights_;  // weight(l): widths[l+1] x widths[l]
  std::vector<Vector> biases_;
};

struct AdamConfig {
  Scalar learningRate = 2e-4;
  Scalar beta1 = 0.9;
  Scalar beta2 = 0.999;
  Scalar epsilon = 1e-8;
};

class AdamState {
 public:
  explicit AdamState(const VelocityNet& net);

  long step() const { return step_; }
  const Matrix& firstMomentWeight(std::size_t layer) const { return mWeights_[layer]; }
  const Matrix& secondMomentWeight(std::size_t layer) const { return vWeights_[layer]; }

  // Standard bias-corrected Adam; updates the parameters in place.
  void update(VelocityNet& net, const Gradients& grads, const AdamConfig& cfg);

 private:
  std::vector<Matrix> mWeights_, vWeights_;
  std::vector<Vector> mBiases_, vBiases_;
  long step_ = 0;
};

// ---------------------------------------------------------------------------
// Checkpoint file: text header (key = value lines, first line
// "rafm-checkpoint 1", closed by "@params <count>") followed by every
// parameter tensor as little-endian float64 in declaration order
// (layer 0 weight row-major, layer 0 bias, layer 1 weight, ...).
// ---------------------------------------------------------------------------

void saveCheckpoint(const VelocityNet& net, long stepCount,
                    const std::map<std::string, std::string>& extra,
                    const std::filesystem::path& path);

struct LoadedCheckpoint {
  VelocityNet net;
  long stepCount = 0;
  std::map<std::string, std::string> extra;
};

LoadedCheckpoint loadCheckpoint(const std::filesystem::path& path);

}  // namespace rafm
