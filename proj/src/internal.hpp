#pragma once

#include "diva/functional.hpp"

namespace diva::detail {

constexpr double kRepresentabilityTol = 1e-8;

/// True when the two-body part is identically zero.
bool interaction_vanishes(const ManyBodyModel& model);

BlockPair tows_pastor_gradient(const DensityMatrix& gamma, const ManyBodyModel& model);

}  // namespace diva::detail
