#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "splash/element.h"
#include "splash/varset.h"

namespace splash {

// A delayed-add waiting for the next time its declaring sample is processed.
// `delta` is already divided by the declaring iteration's weight, so
// execution needs no memory of that weight.
struct PendingOp {
  std::string key;
  std::optional<uint32_t> index;
  double delta = 0.0;
};

// A data element plus the per-sample state the execution model attaches to
// it: an integer identity, local variables, and the pending delayed-op queue
// (drained FIFO exactly once per subsequent processing).
struct WeightedSample {
  uint64_t id = 0;
  Element element;
  VarStore local;
  std::vector<PendingOp> pending;
};

}  // namespace splash
