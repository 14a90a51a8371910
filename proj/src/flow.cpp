#include "rafm/flow.hpp"

#include "rafm/tensor.hpp"

namespace rafm {

FlowSample makeFlowSample(const Vector& x0, const Vector& x1, Scalar t) {
  if (x0.size() != x1.size())
    throw DimensionError("makeFlowSample: endpoint sizes disagree, " + std::to_string(x0.size()) +
                         " vs " + std::to_string(x1.size()));
  if (!(t >= 0.0 && t <= 1.0))
    throw DomainError("makeFlowSample: t outside [0,1]: " + std::to_string(t));
  FlowSample s;
  s.x0 = x0;
  s.x1 = x1;
  s.t = t;
  s.xt = lerp(x0, x1, t);
  s.ut = x1 - x0;
  return s;
}

RfLossResult rfLossBatch(const VelocityNet& net, const CouplingBatch& coupling, Rng& rng) {
  if (coupling.pairs.empty()) throw DomainError("rfLossBatch: empty coupling");
  std::vector<TrainItem> items;
  items.reserve(coupling.pairs.size());
  RfLossResult result;
  for (const CoupledPair& pair : coupling.pairs) {
    const Scalar t = rng.uniform();
    const FlowSample s = makeFlowSample(flatten(pair.x0), flatten(pair.x1), t);
    items.push_back(TrainItem{s.xt, s.t, s.ut});
    result.drawnTimes.push_back(t);
  }
  VelocityNet::BackwardResult back = net.backward(items);
  result.loss = back.loss;
  result.grads = std::move(back.grads);
  return result;
}

Vector eulerIntegrate(const VelocityNet& net, const Vector& x0, const OdeSolveConfig& cfg) {
  if (cfg.steps < 1) throw DomainError("eulerIntegrate: steps must be >= 1");
  const Scalar dt = 1.0 / static_cast<Scalar>(cfg.steps);
  Vector x = x0;
  for (int k = 0; k < cfg.steps; ++k) {
    const Scalar t = static_cast<Scalar>(k) * dt;
    x += dt * net.forward(x, t);
    if (!x.allFinite())
      throw NumericError("eulerIntegrate: non-finite state after step " + std::to_string(k));
  }
  return x;
}

}  // namespace rafm
