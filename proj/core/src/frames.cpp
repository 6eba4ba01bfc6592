#include "thinlimit/frames.hpp"

#include <Eigen/Cholesky>
#include <cmath>

namespace thinlimit {

Matrix fiber_orthonormal_frame(const MetricField& M, const Vector& x, double z) {
    int m = M.m_dim, n = M.n_dim;
    Matrix g_tan = eval_g_tan(M, x, z);
    Eigen::LLT<Matrix> llt(g_tan);
    if (llt.info() != Eigen::Success)
        throw ModelError("frame: Cholesky of g_tan failed");
    Matrix L = llt.matrixL();
    Matrix E = Matrix::Zero(n, n);
    // E^T g E = I for the tangential block; normal leg is d/dz (g_zz = 1).
    E.topLeftCorner(m, m) =
        L.transpose().triangularView<Eigen::Upper>().solve(Matrix::Identity(m, m));
    E(n - 1, n - 1) = 1.0;
    return E;
}

namespace {

// Right-hand side of the transport ODE for all frame columns at once:
// dV^a/dt = -Gamma^a_{z c} V^c.
Matrix transport_rhs(const MetricField& M, const Vector& x, double t, const Matrix& V) {
    auto gamma = christoffel(M, x, t);
    int n = M.n_dim;
    Matrix A(n, n);  // A(a, c) = Gamma^a_{z c}
    for (int a = 0; a < n; ++a)
        for (int c = 0; c < n; ++c) A(a, c) = gamma[a](n - 1, c);
    return -A * V;
}

}  // namespace

AdaptedFrame transport_normal_steps(const MetricField& M, const Vector& x, double z,
                                    int n_steps) {
    if (n_steps < 1) throw UsageError("transport_normal: n_steps >= 1 required");
    Matrix V = fiber_orthonormal_frame(M, x, 0.0);
    double dt = z / n_steps;
    if (std::abs(z) > 0) {
        for (int s = 0; s < n_steps; ++s) {
            double t = s * dt;
            Matrix k1 = transport_rhs(M, x, t, V);
            Matrix k2 = transport_rhs(M, x, t + 0.5 * dt, V + 0.5 * dt * k1);
            Matrix k3 = transport_rhs(M, x, t + 0.5 * dt, V + 0.5 * dt * k2);
            Matrix k4 = transport_rhs(M, x, t + dt, V + dt * k3);
            V += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            if (!V.allFinite())
                throw NumericError("transport_normal: ODE state diverged");
        }
    }
    AdaptedFrame f;
    f.x = x;
    f.z = z;
    f.columns = V;
    f.kind = FrameKind::transported;
    return f;
}

AdaptedFrame transport_normal(const MetricField& M, const Vector& x, double z) {
    int steps = std::max(M.transport_min_steps,
                         static_cast<int>(std::ceil(std::abs(z) * M.transport_steps_per_unit)));
    return transport_normal_steps(M, x, z, steps);
}

AdaptedFrame split_frame(const MetricField& M, const Vector& x, double z) {
    eval_g_tan(M, x, z);  // domain + SPD check at the requested point
    AdaptedFrame f;
    f.x = x;
    f.z = z;
    f.columns = fiber_orthonormal_frame(M, x, 0.0);
    f.kind = FrameKind::split;
    return f;
}

Matrix frame_gram(const MetricField& M, const AdaptedFrame& frame) {
    Matrix g = eval_metric(M, frame.x, frame.z);
    return frame.columns.transpose() * g * frame.columns;
}

}  // namespace thinlimit
