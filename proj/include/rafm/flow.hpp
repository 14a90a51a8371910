#pragma once

// Rectified-flow objective over an arbitrary empirical coupling, and the
// fixed-step explicit Euler integrator used at inference.

#include "rafm/common.hpp"
#include "rafm/coupling.hpp"
#include "rafm/velocity_net.hpp"

#include <vector>

namespace rafm {

// One training point on the straight interpolation path:
// xt = (1-t) x0 + t x1 and ut = x1 - x0, both exact.
struct FlowSample {
  Vector x0, x1, xt, ut;
  Scalar t = 0;
};

FlowSample makeFlowSample(const Vector& x0, const Vector& x1, Scalar t);

struct OdeSolveConfig {
  int steps = 10;  // >= 1; integration runs forward from t=0 to t=1
};

// For each pair draws t ~ U(0,1), builds the flow sample and regresses the
// network velocity onto x1 - x0; returns the mean squared residual over the
// batch and its exact gradients.
struct RfLossResult {
  Scalar loss = 0;
  Gradients grads;
  std::vector<Scalar> drawnTimes;  // in pair order, for logging and replay
};

RfLossResult rfLossBatch(const VelocityNet& net, const CouplingBatch& coupling, Rng& rng);

// x_{k+1} = x_k + (1/steps) v(x_k, k/steps); the velocity is evaluated at the
// left endpoint of each step. Returns the state at t=1.
Vector eulerIntegrate(const VelocityNet& net, const Vector& x0, const OdeSolveConfig& cfg);

}  // namespace rafm
