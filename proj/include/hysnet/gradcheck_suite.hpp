#pragma once

#include <cstdint>
#include <vector>

#include "hysnet/gradcheck.hpp"

namespace hysnet {

// Central-difference verification of every differentiable operation in the
// artifact: core tensor ops, conv3d, pooling, normalization, fc, residual
// block, hyper-network branch, predictor (both modes), L1, and the full
// pipeline. All in f64 with seeded inputs kept away from kinks.
std::vector<GradCheckReport> run_gradcheck_suite(std::uint64_t seed, double h = 1e-3,
                                                 double tol = 1e-4);

}  // namespace hysnet
