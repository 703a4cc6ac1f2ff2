#include "splash/stepsize.h"

#include <cmath>

namespace splash {

double StepSchedule::eta(uint64_t t) const {
  if (t == 0) throw UsageError("stepsize: time must be >= 1");
  switch (kind) {
    case ScheduleKind::Constant:
      return constant;
    case ScheduleKind::InvSqrt:
      return 1.0 / std::sqrt(static_cast<double>(t));
    case ScheduleKind::InvT:
      return 2.0 / (lambda * static_cast<double>(t));
    case ScheduleKind::AdaGrad:
      throw UsageError("stepsize: AdaGrad has no scalar eta(t)");
  }
  throw UsageError("stepsize: bad schedule kind");
}

double stepsize_sum(const StepSchedule& schedule, uint64_t t, int m) {
  if (m < 1) throw UsageError("stepsize_sum: m must be >= 1");
  if (t < static_cast<uint64_t>(m))
    throw UsageError("stepsize_sum: need t >= m");

  switch (schedule.kind) {
    case ScheduleKind::Constant:
      return static_cast<double>(m) * schedule.constant;
    case ScheduleKind::AdaGrad:
      return static_cast<double>(m) * schedule.adagrad_eta0;
    case ScheduleKind::InvSqrt:
      if (m <= 64) break;
      // integral of z^{-1/2} over [t-m+1, t+1]
      return 2.0 * (std::sqrt(static_cast<double>(t + 1)) -
                    std::sqrt(static_cast<double>(t - m + 1)));
    case ScheduleKind::InvT:
      if (m <= 64) break;
      // integral of 2/(lambda z) over [t-m+1, t+1]
      return (2.0 / schedule.lambda) *
             (std::log(static_cast<double>(t + 1)) -
              std::log(static_cast<double>(t - m + 1)));
  }

  double sum = 0.0;
  for (uint64_t i = t - static_cast<uint64_t>(m) + 1; i <= t; ++i)
    sum += schedule.eta(i);
  return sum;
}

double weighted_stepsize(const StepSchedule& schedule, uint64_t t, int m,
                         WeightedStepMode mode) {
  if (mode == WeightedStepMode::MEtaT)
    return static_cast<double>(m) * schedule.eta(t);
  return stepsize_sum(schedule, t, m);
}

}  // namespace splash
