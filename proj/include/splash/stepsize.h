#pragma once

#include <cstdint>
#include <string>

#include "splash/errors.h"

namespace splash {

enum class ScheduleKind {
  Constant,  // eta_t = c
  InvSqrt,   // eta_t = 1/sqrt(t)
  InvT,      // eta_t = 2/(lambda t)
  AdaGrad,   // eta_{t,i} = eta0 / (eps + sqrt(acc_i)), per coordinate
};

struct StepSchedule {
  ScheduleKind kind = ScheduleKind::Constant;
  double constant = 0.1;
  double lambda = 1.0;
  double adagrad_eta0 = 0.1;
  double adagrad_eps = 1e-8;

  static StepSchedule make_constant(double c) {
    return {ScheduleKind::Constant, c, 1.0, 0.1, 1e-8};
  }
  static StepSchedule inv_sqrt() {
    StepSchedule s;
    s.kind = ScheduleKind::InvSqrt;
    return s;
  }
  static StepSchedule inv_t(double lambda) {
    StepSchedule s;
    s.kind = ScheduleKind::InvT;
    s.lambda = lambda;
    return s;
  }
  static StepSchedule adagrad(double eta0, double eps = 1e-8) {
    StepSchedule s;
    s.kind = ScheduleKind::AdaGrad;
    s.adagrad_eta0 = eta0;
    s.adagrad_eps = eps;
    return s;
  }

  // Unit stepsize at time t (not defined for AdaGrad).
  double eta(uint64_t t) const;
};

// How a weight-m step turns unit stepsizes into one applied stepsize.
enum class WeightedStepMode {
  StepSum,  // sum of stepsizes over [t-m+1, t] (exact or integral approx)
  MEtaT,    // m * eta_t, the form the strongly-convex analysis uses
};

// Sum of all unit stepsizes in the interval [t-m+1, t], where t is the time
// counter after the t += m update. Exact summation for m <= 64; for larger m
// the closed-form integral approximation over [t-m+1, t+1] is used where one
// exists. For AdaGrad, returns m * eta0: the caller divides by
// (eps + sqrt(acc_i)) per coordinate.
double stepsize_sum(const StepSchedule& schedule, uint64_t t, int m);

double weighted_stepsize(const StepSchedule& schedule, uint64_t t, int m,
                         WeightedStepMode mode);

}  // namespace splash
