#pragma once

// Serial reference kernels. Kept deliberately simple and independent of the
// optimized analytics paths so tests and the benchmark can compare the two.

#include <cstdint>

#include <Eigen/Dense>

#include "incomp/topology.hpp"

namespace incomp::reference {

/// Hitting times by textbook Gaussian elimination, one system per target.
Eigen::MatrixXd hitting_times(const TransitionMatrix& p);

/// Mixing time by dense matrix powering.
std::int64_t mixing_time(const TransitionMatrix& p, double eps,
                         std::int64_t max_steps = 1'000'000);

/// Edmonds-Karp max-flow on the dense capacity matrix.
double max_flow(const TransitionMatrix& p, NodeId source, NodeId sink);

/// min over i != sink of max_flow(i, sink).
double min_mincut(const TransitionMatrix& p, NodeId sink);

}  // namespace incomp::reference
