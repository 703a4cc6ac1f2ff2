#include "splash/sgd.h"

#include <cmath>

namespace splash {

bool ProjectionBall::centered() const {
  for (double c : center)
    if (c != 0.0) return false;
  return true;
}

std::vector<double> project_to_ball(std::vector<double> w,
                                    const ProjectionBall& ball) {
  double sq = 0.0;
  for (size_t i = 0; i < w.size(); ++i) {
    const double d = w[i] - ball.center_at(i);
    sq += d * d;
  }
  const double dist = std::sqrt(sq);
  if (dist <= ball.radius) return w;
  const double scale = ball.radius / dist;
  for (size_t i = 0; i < w.size(); ++i)
    w[i] = ball.center_at(i) + scale * (w[i] - ball.center_at(i));
  return w;
}

size_t WeightsView::size() const {
  return vars_.store().array_size(key_);
}

namespace {

// Radial projection expressed through the operator interface: one multiply,
// plus per-index adds when the ball is not centered at the origin.
void project_via_operators(SharedVars& shared, const std::string& key,
                           const ProjectionBall& ball) {
  const std::vector<double>& w = shared.get_array(key);
  double sq = 0.0;
  for (size_t i = 0; i < w.size(); ++i) {
    const double d = w[i] - ball.center_at(i);
    sq += d * d;
  }
  const double dist = std::sqrt(sq);
  if (dist <= ball.radius) return;
  const double scale = ball.radius / dist;
  shared.multiply(key, scale);
  if (!ball.centered()) {
    for (size_t i = 0; i < ball.center.size(); ++i) {
      const double shift = (1.0 - scale) * ball.center[i];
      if (shift != 0.0) shared.add(key, i, shift);
    }
  }
}

}  // namespace

ProcessFn make_sgd_process(SgdOptions options, GradientFn gradient) {
  if (!gradient) throw UsageError("sgd: gradient function required");
  const bool adagrad = options.schedule.kind == ScheduleKind::AdaGrad;
  if (adagrad && options.l2_lambda > 0.0)
    throw ConfigError(
        "sgd: the multiply-based regularized update needs a scalar stepsize "
        "schedule, not AdaGrad");
  if (adagrad && options.track_average)
    throw ConfigError("sgd: average-iterate tracking needs a scalar schedule");
  if (options.l2_lambda < 0.0)
    throw ConfigError("sgd: l2_lambda must be >= 0");

  return [options = std::move(options), gradient = std::move(gradient)](
             const Element& elem, int weight, SharedVars& shared,
             LocalVars& /*local*/, std::mt19937_64& /*rng*/) {
    shared.add(options.time_key, static_cast<double>(weight));
    const uint64_t t =
        static_cast<uint64_t>(shared.get(options.time_key));

    // Gradient at the current (pre-update, pre-multiply) weights.
    WeightsView view(shared, options.weight_key);
    SparseGrad grad = gradient(elem, view);
    for (const auto& [i, g] : grad)
      if (!std::isfinite(g))
        throw NumericError("sgd: non-finite gradient component");

    const bool adagrad = options.schedule.kind == ScheduleKind::AdaGrad;

    if (options.track_average) {
      const double eta =
          weighted_stepsize(options.schedule, t, weight, options.step_mode);
      const std::vector<double>& w = shared.get_array(options.weight_key);
      const double scale = static_cast<double>(weight) * eta;
      for (size_t i = 0; i < w.size(); ++i)
        shared.add(options.avg_num_key, i, scale * w[i]);
      shared.add(options.avg_den_key, scale);
    }

    if (adagrad) {
      const double m = static_cast<double>(weight);
      for (const auto& [i, g] : grad)
        shared.add(options.adagrad_key, i, m * g * g);
      for (const auto& [i, g] : grad) {
        const double acc = shared.get(options.adagrad_key, i);
        const double step = m * options.schedule.adagrad_eta0 /
                            (options.schedule.adagrad_eps + std::sqrt(acc));
        shared.add(options.weight_key, i, -step * g);
      }
    } else {
      const double eta =
          weighted_stepsize(options.schedule, t, weight, options.step_mode);
      if (options.l2_lambda > 0.0) {
        const double factor = 1.0 - eta * options.l2_lambda;
        if (factor <= 0.0)
          throw DomainError(
              "sgd: stepsize too large, 1 - eta*lambda <= 0; shrink the "
              "stepsize or raise the time offset");
        shared.multiply(options.weight_key, factor);
      }
      for (const auto& [i, g] : grad)
        shared.add(options.weight_key, i, -eta * g);
    }

    if (options.projection)
      project_via_operators(shared, options.weight_key, *options.projection);
  };
}

void declare_sgd_state(ParamDataset& ds, const SgdOptions& options,
                       const std::vector<double>& w0) {
  ds.declare_array(options.weight_key, w0);
  ds.declare_scalar(options.time_key, 0.0);
  if (options.schedule.kind == ScheduleKind::AdaGrad)
    ds.declare_array(options.adagrad_key,
                     std::vector<double>(w0.size(), 0.0));
  if (options.track_average) {
    ds.declare_array(options.avg_num_key,
                     std::vector<double>(w0.size(), 0.0));
    ds.declare_scalar(options.avg_den_key, 0.0);
  }
}

std::vector<double> averaged_iterate(VarStore& vars,
                                     const SgdOptions& options) {
  const double den = vars.get(options.avg_den_key);
  if (den <= 0.0)
    throw UsageError("averaged_iterate: no steps recorded yet");
  std::vector<double> out = vars.get_array(options.avg_num_key);
  for (double& v : out) v /= den;
  return out;
}

}  // namespace splash
