#include "rafm/velocity_net.hpp"

#include "rafm/io.hpp"

#include <cmath>
#include <sstream>

namespace rafm {

Vector embedTime(Scalar t, const TimeEmbeddingConfig& cfg) {
  if (cfg.dim <= 0 || cfg.dim % 2 != 0)
    throw DomainError("time embedding dim must be even and positive, got " +
                      std::to_string(cfg.dim));
  if (cfg.maxPeriod <= 0) throw DomainError("time embedding maxPeriod must be positive");
  if (!(t >= 0.0 && t <= 1.0))
    throw DomainError("time outside [0,1]: " + std::to_string(t));
  const int half = cfg.dim / 2;
  Vector e(cfg.dim);
  for (int i = 0; i < half; ++i) {
    const Scalar freq = std::pow(cfg.maxPeriod, -2.0 * i / cfg.dim);
    e[i] = std::sin(t * freq);
    e[half + i] = std::cos(t * freq);
  }
  return e;
}

namespace {

void validateConfig(const VelocityNetConfig& cfg) {
  if (cfg.sampleDim <= 0) throw DomainError("velocity net sampleDim must be positive");
  for (int w : cfg.hiddenWidths)
    if (w <= 0) throw DomainError("velocity net hidden widths must be positive");
  if (cfg.embed.dim <= 0 || cfg.embed.dim % 2 != 0)
    throw DomainError("velocity net embedding dim must be even and positive");
}

std::vector<int> widthsOf(const VelocityNetConfig& cfg) {
  std::vector<int> widths;
  widths.push_back(cfg.sampleDim + cfg.embed.dim);
  for (int w : cfg.hiddenWidths) widths.push_back(w);
  widths.push_back(cfg.sampleDim);
  return widths;
}

}  // namespace

VelocityNet::VelocityNet(VelocityNetConfig cfg, std::uint64_t seed)
    : cfg_(std::move(cfg)), seed_(seed) {
  validateConfig(cfg_);
  const std::vector<int> widths = widthsOf(cfg_);
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const int fanIn = widths[l];
    const int fanOut = widths[l + 1];
    const Scalar bound = std::sqrt(6.0 / (fanIn + fanOut));
    Matrix w(fanOut, fanIn);
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = rng.uniform(-bound, bound);
    weights_.push_back(std::move(w));
    biases_.push_back(Vector::Zero(fanOut));
  }
}

VelocityNet::VelocityNet(VelocityNetConfig cfg, std::uint64_t seed, std::vector<Matrix> weights,
                         std::vector<Vector> biases)
    : cfg_(std::move(cfg)), seed_(seed), weights_(std::move(weights)), biases_(std::move(biases)) {
  validateConfig(cfg_);
  const std::vector<int> widths = widthsOf(cfg_);
  if (weights_.size() + 1 != widths.size() || biases_.size() != weights_.size())
    throw DimensionError("velocity net: parameter count does not match layer widths");
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    if (weights_[l].rows() != widths[l + 1] || weights_[l].cols() != widths[l] ||
        biases_[l].size() != widths[l + 1])
      throw DimensionError("velocity net: parameter shapes do not match layer widths");
  }
}

std::vector<int> VelocityNet::layerWidths() const { return widthsOf(cfg_); }

Vector VelocityNet::forward(const Vector& x, Scalar t) const {
  if (x.size() != cfg_.sampleDim)
    throw DimensionError("forward: sample has " + std::to_string(x.size()) +
                         " elements, expected " + std::to_string(cfg_.sampleDim));
  if (!x.allFinite()) throw NumericError("forward: non-finite input sample");
  Vector a(x.size() + cfg_.embed.dim);
  a << x, embedTime(t, cfg_.embed);
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    a = (weights_[l] * a + biases_[l]).eval();
    if (l + 1 < weights_.size()) a = a.array().tanh().matrix();
  }
  return a;
}

Gradients VelocityNet::zeroGradients() const {
  Gradients g;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    g.weights.push_back(Matrix::Zero(weights_[l].rows(), weights_[l].cols()));
    g.biases.push_back(Vector::Zero(biases_[l].size()));
  }
  return g;
}

VelocityNet::BackwardResult VelocityNet::backward(std::span<const TrainItem> batch) const {
  if (batch.empty()) throw DomainError("backward: empty batch");
  BackwardResult result;
  result.grads = zeroGradients();
  const std::size_t layers = weights_.size();
  const Scalar invBatch = 1.0 / static_cast<Scalar>(batch.size());

  std::vector<Vector> activations(layers + 1);  // activations[0] is the input
  for (const TrainItem& item : batch) {
    if (item.target.size() != cfg_.sampleDim)
      throw DimensionError("backward: target has " + std::to_string(item.target.size()) +
                           " elements, expected " + std::to_string(cfg_.sampleDim));
    if (item.x.size() != cfg_.sampleDim)
      throw DimensionError("backward: sample has " + std::to_string(item.x.size()) +
                           " elements, expected " + std::to_string(cfg_.sampleDim));
    if (!item.x.allFinite()) throw NumericError("backward: non-finite input sample");

    Vector a(item.x.size() + cfg_.embed.dim);
    a << item.x, embedTime(item.t, cfg_.embed);
    activations[0] = a;
    for (std::size_t l = 0; l < layers; ++l) {
      Vector z = weights_[l] * activations[l] + biases_[l];
      activations[l + 1] = (l + 1 < layers) ? Vector(z.array().tanh().matrix()) : std::move(z);
    }

    const Vector residual = activations[layers] - item.target;
    result.loss += residual.squaredNorm() * invBatch;

    // Output layer is linear: dL/dz_L = 2 r / B.
    Vector delta = 2.0 * invBatch * residual;
    for (std::size_t l = layers; l-- > 0;) {
      result.grads.weights[l].noalias() += delta * activations[l].transpose();
      result.grads.biases[l] += delta;
      if (l > 0) {
        Vector back = weights_[l].transpose() * delta;
        // tanh'(z) = 1 - tanh(z)^2, and activations[l] already holds tanh(z).
        delta = (back.array() * (1.0 - activations[l].array().square())).matrix();
      }
    }
  }
  return result;
}

bool VelocityNet::sameParameters(const VelocityNet& other) const {
  if (weights_.size() != other.weights_.size()) return false;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    if (weights_[l].rows() != other.weights_[l].rows() ||
        weights_[l].cols() != other.weights_[l].cols())
      return false;
    if (weights_[l] != other.weights_[l] || biases_[l] != other.biases_[l]) return false;
  }
  return true;
}

AdamState::AdamState(const VelocityNet& net) {
  for (std::size_t l = 0; l < net.layerCount(); ++l) {
    mWeights_.push_back(Matrix::Zero(net.weight(l).rows(), net.weight(l).cols()));
    vWeights_.push_back(Matrix::Zero(net.weight(l).rows(), net.weight(l).cols()));
    mBiases_.push_back(Vector::Zero(net.bias(l).size()));
    vBiases_.push_back(Vector::Zero(net.bias(l).size()));
  }
}

void AdamState::update(VelocityNet& net, const Gradients& grads, const AdamConfig& cfg) {
  if (grads.weights.size() != mWeights_.size() || grads.biases.size() != mBiases_.size())
    throw DimensionError("adam: gradient layer count does not match state");
  ++step_;
  const Scalar correction1 = 1.0 - std::pow(cfg.beta1, static_cast<Scalar>(step_));
  const Scalar correction2 = 1.0 - std::pow(cfg.beta2, static_cast<Scalar>(step_));

  auto apply = [&](auto& param, auto& m, auto& v, const auto& g) {
    if (param.rows() != g.rows() || param.cols() != g.cols())
      throw DimensionError("adam: gradient shape does not match parameter");
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.array().square().matrix();
    const auto mHat = m.array() / correction1;
    const auto vHat = v.array() / correction2;
    param.array() -= cfg.learningRate * mHat / (vHat.sqrt() + cfg.epsilon);
  };

  for (std::size_t l = 0; l < mWeights_.size(); ++l) {
    apply(net.weight(l), mWeights_[l], vWeights_[l], grads.weights[l]);
    apply(net.bias(l), mBiases_[l], vBiases_[l], grads.biases[l]);
  }
}

namespace {

constexpr const char* kCheckpointMagic = "rafm-checkpoint 1";

std::string joinWidths(const std::vector<int>& widths) {
  std::string s;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(widths[i]);
  }
  return s;
}

std::vector<int> splitWidths(const std::string& s) {
  std::vector<int> widths;
  std::stringstream in(s);
  std::string part;
  while (std::getline(in, part, ',')) widths.push_back(static_cast<int>(parseInt(part)));
  return widths;
}

}  // namespace

void saveCheckpoint(const VelocityNet& net, long stepCount,
                    const std::map<std::string, std::string>& extra,
                    const std::filesystem::path& path) {
  std::string out = std::string(kCheckpointMagic) + "\n";
  KvFile header;
  header.set("sample_dim", static_cast<std::int64_t>(net.sampleDim()));
  const auto& hidden = net.config().hiddenWidths;
  header.set("hidden_widths", hidden.empty() ? std::string("-") : joinWidths(hidden));
  header.set("layer_widths", joinWidths(net.layerWidths()));
  header.set("embed_dim", static_cast<std::int64_t>(net.config().embed.dim));
  header.set("embed_max_period", net.config().embed.maxPeriod);
  header.set("seed", net.initSeed());
  header.set("step_count", static_cast<std::int64_t>(stepCount));
  for (const auto& [k, v] : extra) header.set("extra." + k, v);  // std::map: sorted, stable
  out += header.serialize();

  std::uint64_t count = 0;
  for (std::size_t l = 0; l < net.layerCount(); ++l)
    count += static_cast<std::uint64_t>(net.weight(l).size()) +
             static_cast<std::uint64_t>(net.bias(l).size());
  out += "@params " + std::to_string(count) + "\n";

  for (std::size_t l = 0; l < net.layerCount(); ++l) {
    const Matrix& w = net.weight(l);
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) appendF64le(out, w(r, c));
    const Vector& b = net.bias(l);
    for (Eigen::Index i = 0; i < b.size(); ++i) appendF64le(out, b[i]);
  }
  writeFile(path, out);
}

LoadedCheckpoint loadCheckpoint(const std::filesystem::path& path) {
  const std::string bytes = readFile(path);
  std::size_t pos = bytes.find('\n');
  if (pos == std::string::npos || bytes.substr(0, pos) != kCheckpointMagic)
    throw DataError("not a checkpoint file: " + path.string());

  std::string headerText;
  std::uint64_t declaredCount = 0;
  std::size_t cursor = pos + 1;
  for (;;) {
    const std::size_t nl = bytes.find('\n', cursor);
    if (nl == std::string::npos) throw DataError("checkpoint header not terminated");
    const std::string line = bytes.substr(cursor, nl - cursor);
    cursor = nl + 1;
    if (line.rfind("@params ", 0) == 0) {
      declaredCount = parseUnsigned(line.substr(8));
      break;
    }
    headerText += line + "\n";
  }

  const KvFile header = KvFile::parse(headerText);
  VelocityNetConfig cfg;
  cfg.sampleDim = static_cast<int>(header.requireInt("sample_dim"));
  const std::string hidden = header.require("hidden_widths");
  cfg.hiddenWidths = hidden == "-" ? std::vector<int>{} : splitWidths(hidden);
  cfg.embed.dim = static_cast<int>(header.requireInt("embed_dim"));
  cfg.embed.maxPeriod = header.requireDouble("embed_max_period");

  const std::vector<int> widths = splitWidths(header.require("layer_widths"));
  if (bytes.size() - cursor != declaredCount * 8)
    throw DataError("checkpoint payload does not match @params count");

  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data()) + cursor;
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    Matrix w(widths[l + 1], widths[l]);
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c, p += 8) w(r, c) = readF64le(p);
    Vector b(widths[l + 1]);
    for (Eigen::Index i = 0; i < b.size(); ++i, p += 8) b[i] = readF64le(p);
    weights.push_back(std::move(w));
    biases.push_back(std::move(b));
  }

  LoadedCheckpoint loaded{
      VelocityNet(cfg, header.requireUnsigned("seed"), std::move(weights), std::move(biases)),
      header.requireInt("step_count"),
      {}};
  for (const auto& [k, v] : header.entries())
    if (k.rfind("extra.", 0) == 0) loaded.extra[k.substr(6)] = v;
  return loaded;
}

}  // namespace rafm
