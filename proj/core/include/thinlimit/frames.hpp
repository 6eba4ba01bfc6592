#pragma once

#include "thinlimit/metric.hpp"

namespace thinlimit {

enum class FrameKind { transported, split };

// Orthonormal frame adapted to the fiber structure at a point (x, z).
// Columns 0..m-1 are the tangential legs, column m is the normal leg, all
// expressed in chart components. A transported frame is g-orthonormal
// (parallel transport along the normal geodesic); a split frame is
// orthonormal w.r.t. the approximating metric (tangential block frozen
// at z = 0, normal leg = d/dz).
struct AdaptedFrame {
    Vector x;
    double z = 0.0;
    Matrix columns;  // n x n
    FrameKind kind = FrameKind::transported;
};

// Deterministic g-orthonormal frame of the tangential block at (x, z):
// inverse-transpose Cholesky columns, normal leg d/dz.
Matrix fiber_orthonormal_frame(const MetricField& M, const Vector& x, double z);

// Parallel transport of the (x, 0) frame to (x, z) by integrating
// dV/dt + Gamma(x, t)(d/dz, V) = 0 with fixed-step RK4.
AdaptedFrame transport_normal(const MetricField& M, const Vector& x, double z);

// As transport_normal but with a caller-chosen number of RK4 steps
// (step-halving / oracle comparisons).
AdaptedFrame transport_normal_steps(const MetricField& M, const Vector& x, double z,
                                    int n_steps);

// The sigma + iota frame: tangential legs keep their z = 0 chart
// components (flat normal connection for k = 1), normal leg is d/dz.
AdaptedFrame split_frame(const MetricField& M, const Vector& x, double z);

// Gram matrix of the frame columns w.r.t. a metric's full block form.
Matrix frame_gram(const MetricField& M, const AdaptedFrame& frame);

}  // namespace thinlimit
