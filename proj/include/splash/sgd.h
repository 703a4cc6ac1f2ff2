#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "splash/engine.h"
#include "splash/stepsize.h"

namespace splash {

// Euclidean ball used for both the per-step feasible-set projection and the
// post-combine ball of the strongly-convex analysis.
struct ProjectionBall {
  std::vector<double> center;  // empty means the origin
  double radius = 1.0;

  bool centered() const;
  double center_at(size_t i) const {
    return center.empty() ? 0.0 : center[i];
  }
};

// Projects w onto the ball (pure helper; the in-engine projection routes
// through the multiply/add operators instead).
std::vector<double> project_to_ball(std::vector<double> w,
                                    const ProjectionBall& ball);

// Constants of the smoothness/strong-convexity assumptions. The post-combine
// ball diameter is lambda / (4 (L + G / rho^2)).
struct TheoryParams {
  double feasible_radius = 1.0;    // R
  double inner_radius = 0.1;       // rho
  double strong_convexity = 1.0;   // lambda
  double gradient_bound = 1.0;     // G
  double hessian_lipschitz = 1.0;  // H
  double smoothness = 1.0;         // L

  double ball_diameter() const {
    return strong_convexity /
           (4.0 * (smoothness + gradient_bound / (inner_radius * inner_radius)));
  }
};

// Read access to the model weights for gradient callbacks.
class WeightsView {
 public:
  WeightsView(SharedVars& vars, const std::string& key)
      : vars_(vars), key_(key) {}
  double operator[](size_t i) { return vars_.get(key_, i); }
  const std::vector<double>& dense() { return vars_.get_array(key_); }
  size_t size() const;

 private:
  SharedVars& vars_;
  const std::string& key_;
};

using SparseGrad = std::vector<std::pair<uint32_t, double>>;
using GradientFn = std::function<SparseGrad(const Element&, WeightsView&)>;

struct SgdOptions {
  std::string weight_key = "w";
  std::string time_key = "t";
  StepSchedule schedule = StepSchedule::inv_sqrt();
  WeightedStepMode step_mode = WeightedStepMode::StepSum;
  // When > 0, the loss is f + (l2_lambda/2)||w||^2 and the update runs the
  // sparse three-step form: t += m; w *= (1 - eta * lambda) via multiply;
  // sparse adds of -eta * grad f at the pre-multiply weights.
  double l2_lambda = 0.0;
  std::optional<ProjectionBall> projection;
  // Track the stepsize-weighted average iterate (numerator/denominator live
  // in shared variables and combine like any other).
  bool track_average = false;
  std::string adagrad_key = "adagrad_acc";
  std::string avg_num_key = "wbar_num";
  std::string avg_den_key = "wbar_den";
};

// Generalized weighted SGD as a process function. With AdaGrad the
// accumulator picks up m * g_i^2 per step and the applied per-coordinate
// stepsize is m * eta0 / (eps + sqrt(acc_i)).
ProcessFn make_sgd_process(SgdOptions options, GradientFn gradient);

// Declares w, t and (as configured) the AdaGrad and average accumulators.
void declare_sgd_state(ParamDataset& ds, const SgdOptions& options,
                       const std::vector<double>& w0);

// The averaged iterate: wbar_num / wbar_den.
std::vector<double> averaged_iterate(VarStore& vars, const SgdOptions& options);

}  // namespace splash
