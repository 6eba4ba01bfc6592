#include "thinlimit/density.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>
#include <sstream>

#include "thinlimit/optimizer.hpp"

namespace thinlimit {

std::string DensitySpec::id() const {
    std::ostringstream os;
    os << (kind == DensityKind::dist2_so ? "dist2_so" : "custom");
    os << "(p=" << p << ",n=" << n_dim << ",m=" << m_dim << ")";
    return os.str();
}

DensitySpec DensitySpec::dist2_so_proto(int m) {
    DensitySpec d;
    d.kind = DensityKind::dist2_so;
    d.m_dim = m;
    d.n_dim = m + 1;
    d.p = 2.0;
    d.alpha = 0.5;
    d.beta = 3.0;
    d.C = 2.0;
    d.frame_indifferent = true;
    d.validate();
    return d;
}

DensitySpec DensitySpec::custom(CustomDensityFn W, int m, double p, double alpha,
                                double beta, double C, bool frame_indifferent) {
    DensitySpec d;
    d.kind = DensityKind::custom;
    d.custom_W = std::move(W);
    d.m_dim = m;
    d.n_dim = m + 1;
    d.p = p;
    d.alpha = alpha;
    d.beta = beta;
    d.C = C;
    d.frame_indifferent = frame_indifferent;
    d.validate();
    return d;
}

void DensitySpec::validate() const {
    if (!(alpha > 0) || !(C > 0))
        throw UsageError("DensitySpec: alpha > 0 and C > 0 required");
    if (!(p > 1.0) || !std::isfinite(p))
        throw UsageError("DensitySpec: growth exponent p in (1, inf) required");
    if (m_dim < 1 || m_dim > 2 || n_dim != m_dim + 1)
        throw UsageError("DensitySpec: dims must satisfy m in {1,2}, n = m+1");
    if (kind == DensityKind::custom && !custom_W)
        throw UsageError("DensitySpec: custom kind requires a density closure");
}

namespace {

// 3x3 fast path: closed-form symmetric eigensolve of Q^T Q instead of a
// Jacobi SVD; falls back when the smallest singular value degenerates.
bool dist2_so_3x3(const Eigen::Matrix3d& Q, double* value, Eigen::Matrix3d* grad) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es;
    es.computeDirect(Q.transpose() * Q);
    Eigen::Vector3d lam = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();  // ascending
    double sign = Q.determinant() < 0 ? -1.0 : 1.0;
    if (value)
        *value = (lam[2] - 1.0) * (lam[2] - 1.0) + (lam[1] - 1.0) * (lam[1] - 1.0) +
                 (sign * lam[0] - 1.0) * (sign * lam[0] - 1.0);
    if (grad) {
        if (lam[0] < 1e-6 * std::max(1.0, lam[2])) return false;
        Eigen::Matrix3d V = es.eigenvectors();
        Eigen::Matrix3d U = Q * V * lam.cwiseInverse().asDiagonal();
        Eigen::Matrix3d closest =
            U * Eigen::Vector3d(sign, 1.0, 1.0).asDiagonal() * V.transpose();
        *grad = 2.0 * (Q - closest);
    }
    return true;
}

}  // namespace

double dist2_so(const Matrix& Q) {
    if (Q.rows() != Q.cols()) throw UsageError("dist2_so: square matrix required");
    const int n = static_cast<int>(Q.rows());
    if (n == 3) {
        double v;
        dist2_so_3x3(Q, &v, nullptr);
        return v;
    }
    Eigen::JacobiSVD<Matrix> svd(Q);
    Vector s = svd.singularValues();
    double sign = Q.determinant() < 0 ? -1.0 : 1.0;
    double val = 0.0;
    for (int i = 0; i < n - 1; ++i) val += (s[i] - 1.0) * (s[i] - 1.0);
    val += (sign * s[n - 1] - 1.0) * (sign * s[n - 1] - 1.0);
    return val;
}

Matrix dist2_so_gradient(const Matrix& Q) {
    const int n = static_cast<int>(Q.rows());
    if (n == 3) {
        Eigen::Matrix3d g;
        if (dist2_so_3x3(Q, nullptr, &g)) return g;
    }
    Eigen::JacobiSVD<Matrix> svd(Q, Eigen::ComputeFullU | Eigen::ComputeFullV);
    double sign = Q.determinant() < 0 ? -1.0 : 1.0;
    Vector d = Vector::Ones(n);
    d[n - 1] = sign;
    Matrix closest = svd.matrixU() * d.asDiagonal() * svd.matrixV().transpose();
    return 2.0 * (Q - closest);
}

namespace {

double eval_density(const DensitySpec& D, const Vector& x, const Matrix& Qfull) {
    if (Qfull.rows() != D.n_dim || Qfull.cols() != D.n_dim)
        throw UsageError("density: full frame matrix must be n x n");
    double w;
    if (D.kind == DensityKind::dist2_so) {
        w = dist2_so(Qfull);
    } else {
        w = D.custom_W(x, Qfull);
        if (!std::isfinite(w))
            throw ModelError("density: custom closure returned a non-finite value");
    }
    return w;
}

Matrix eval_density_gradient(const DensitySpec& D, const Vector& x, const Matrix& Qfull) {
    if (D.kind == DensityKind::dist2_so) return dist2_so_gradient(Qfull);
    if (D.custom_dW) return D.custom_dW(x, Qfull);
    // Central differences entry-by-entry for closures without gradients.
    double step = 1e-6 * std::max(1.0, Qfull.norm());
    Matrix g(Qfull.rows(), Qfull.cols());
    Matrix Qp = Qfull, Qm = Qfull;
    for (int i = 0; i < Qfull.rows(); ++i)
        for (int j = 0; j < Qfull.cols(); ++j) {
            Qp(i, j) += step;
            Qm(i, j) -= step;
            g(i, j) = (eval_density(D, x, Qp) - eval_density(D, x, Qm)) / (2.0 * step);
            Qp(i, j) = Qfull(i, j);
            Qm(i, j) = Qfull(i, j);
        }
    return g;
}

}  // namespace

double eval_W_on_S(const DensitySpec& D, const MetricField& M, const Vector& x,
                   const Matrix& Qfull) {
    (void)M;  // spatial dependence of custom densities goes through x
    return eval_density(D, x, Qfull);
}

double eval_W_on_S(const DensitySpec& D, const Vector& x, const Matrix& Qfull) {
    return eval_density(D, x, Qfull);
}

Matrix eval_W_on_S_gradient(const DensitySpec& D, const Vector& x, const Matrix& Qfull) {
    return eval_density_gradient(D, x, Qfull);
}

double eval_W_in_frame(const DensitySpec& D, const AdaptedFrame& frame,
                       const Matrix& q_chart) {
    if (q_chart.cols() != frame.columns.rows())
        throw UsageError("density: chart covector has wrong dimensions for the frame");
    Matrix Qfull = q_chart * frame.columns;
    return eval_density(D, frame.x, Qfull);
}

double eval_W_bulk(const DensitySpec& D, const MetricField& M, const Vector& x, double z,
                   const Matrix& q_chart, FrameKind mode) {
    AdaptedFrame frame = (mode == FrameKind::transported) ? transport_normal(M, x, z)
                                                          : split_frame(M, x, z);
    return eval_W_in_frame(D, frame, q_chart);
}

double w0_closed_form(const Matrix& q2) {
    Eigen::JacobiSVD<Matrix> svd(q2);
    Vector s = svd.singularValues();
    double val = 0.0;
    for (int i = 0; i < s.size(); ++i) val += (s[i] - 1.0) * (s[i] - 1.0);
    return val;
}

Matrix w0_closed_form_gradient(const Matrix& q2) {
    // 2 sum_i (lambda_i - 1) u_i v_i^T = 2 (q2 - U_thin V^T).
    Eigen::JacobiSVD<Matrix> svd(q2, Eigen::ComputeThinU | Eigen::ComputeThinV);
    return 2.0 * (q2 - svd.matrixU() * svd.matrixV().transpose());
}

Vector w0_closed_form_argmin(const Matrix& q2) {
    const int n = static_cast<int>(q2.rows());
    const int m = static_cast<int>(q2.cols());
    if (m != n - 1) throw UsageError("w0: tangential block must be n x (n-1)");
    Eigen::JacobiSVD<Matrix> svd(q2, Eigen::ComputeFullU);
    Vector r = svd.matrixU().col(n - 1);
    Matrix full(n, n);
    full.leftCols(m) = q2;
    full.col(n - 1) = r;
    if (full.determinant() < 0) r = -r;
    return r;
}

FiberMinimum fiber_minimize_W0(const DensitySpec& D, const MetricField& M, const Vector& x,
                               const Matrix& q2, const FiberMinimizeOptions& opts) {
    (void)M;  // the density lives over the surface point x only
    return fiber_minimize_W0(D, x, q2, opts);
}

FiberMinimum fiber_minimize_W0(const DensitySpec& D, const Vector& x, const Matrix& q2,
                               const FiberMinimizeOptions& opts) {
    const int n = D.n_dim;
    if (q2.rows() != n || q2.cols() != D.m_dim)
        throw UsageError("fiber_minimize_W0: tangential block must be n x m");

    if (D.kind == DensityKind::dist2_so && opts.use_fast_path) {
        FiberMinimum out;
        out.value = w0_closed_form(q2);
        out.r = w0_closed_form_argmin(q2);
        out.converged = true;
        return out;
    }

    int evals = 0;
    ObjectiveFn fn = [&](const Vector& r, Vector& grad) {
        Matrix full(n, n);
        full.leftCols(D.m_dim) = q2;
        full.col(n - 1) = r;
        ++evals;
        grad = eval_density_gradient(D, x, full).col(n - 1);
        return eval_density(D, x, full);
    };

    OptimizerParams lp;
    lp.max_iters = opts.max_iters;
    lp.grad_tol = opts.grad_tol;
    lp.memory = 8;

    Rng rng(opts.seed);
    std::vector<Vector> seeds;
    seeds.push_back(Vector::Zero(n));
    if (D.kind == DensityKind::dist2_so)
        seeds.push_back(w0_closed_form_argmin(q2));
    while (static_cast<int>(seeds.size()) < 1 + opts.restarts)
        seeds.push_back(random_unit_vector(rng, n) * (1.0 + q2.norm()));

    FiberMinimum out;
    out.value = std::numeric_limits<double>::infinity();
    bool any_converged = false;
    for (const Vector& seed : seeds) {
        LbfgsResult r = lbfgs_minimize(fn, seed, lp);
        any_converged = any_converged || r.converged;
        if (r.value < out.value) {
            out.value = r.value;
            out.r = r.x;
        }
    }
    out.evaluations = evals;
    out.converged = any_converged;
    if (!any_converged) {
        std::ostringstream os;
        os << "fiber_minimize_W0: no restart converged; best value " << out.value;
        throw NumericError(os.str());
    }
    return out;
}

DensityConditionsReport verify_density_conditions(const DensitySpec& D, int sample_count,
                                                  uint64_t seed) {
    if (sample_count < 100)
        throw UsageError("verify_density_conditions: sample_count >= 100 required");
    const int n = D.n_dim, m = D.m_dim;
    const double radius = 10.0;
    const double tol = 1e-9;
    Rng rng(seed);
    Vector x0 = 0.5 * (D.m_dim == 2 ? Vector(Rect::unit_square().hi)
                                    : Vector(Rect::unit_interval().hi));

    DensityConditionsReport rep;
    rep.samples = sample_count;
    rep.alpha_emp = std::numeric_limits<double>::infinity();
    rep.alpha0_emp = std::numeric_limits<double>::infinity();

    auto note_violation = [&](bool& flag, const std::string& what, const Matrix& q) {
        if (flag) {
            flag = false;
            rep.pass = false;
            if (rep.witness.empty()) {
                std::ostringstream os;
                os << what << " violated at |q| = " << q.norm();
                rep.witness = os.str();
            }
        }
    };

    Matrix prev;
    double prev_w = 0;
    for (int i = 0; i < sample_count; ++i) {
        Matrix q = random_matrix_in_ball(rng, n, n, radius);
        double w = eval_density(D, x0, q);
        double norm_p = std::pow(q.norm(), D.p);

        rep.C_growth_emp = std::max(rep.C_growth_emp, std::abs(w) / (1.0 + norm_p));
        if (std::abs(w) > D.C * (1.0 + norm_p) + tol)
            note_violation(rep.growth_ok, "growth |W| <= C(1+|q|^p)", q);

        if (q.norm() > 1e-12)
            rep.alpha_emp = std::min(rep.alpha_emp, (w + D.beta) / norm_p);
        if (w < D.alpha * norm_p - D.beta - tol)
            note_violation(rep.coercivity_ok, "coercivity W >= alpha|q|^p - beta", q);

        if (i > 0) {
            double dq = (q - prev).norm();
            if (dq > 1e-12) {
                double bound = D.C *
                               (1.0 + std::pow(prev.norm(), D.p - 1.0) +
                                std::pow(q.norm(), D.p - 1.0)) *
                               dq;
                rep.C_lipschitz_emp = std::max(
                    rep.C_lipschitz_emp,
                    std::abs(w - prev_w) /
                        ((1.0 + std::pow(prev.norm(), D.p - 1.0) +
                          std::pow(q.norm(), D.p - 1.0)) *
                         dq));
                if (std::abs(w - prev_w) > bound + tol)
                    note_violation(rep.lipschitz_ok, "Lipschitz property", q);
            }
        }
        prev = q;
        prev_w = w;

        // Inherited growth/coercivity of W0 on tangential blocks; the
        // constants may differ from the declared ones, so only finiteness
        // of the empirical constants is asserted.
        Matrix q2 = random_matrix_in_ball(rng, n, m, radius);
        double w0 = (D.kind == DensityKind::dist2_so)
                        ? w0_closed_form(q2)
                        : fiber_minimize_W0(D, x0, q2).value;
        double norm2_p = std::pow(q2.norm(), D.p);
        rep.C0_growth_emp = std::max(rep.C0_growth_emp, std::abs(w0) / (1.0 + norm2_p));
        if (q2.norm() > 1e-12)
            rep.alpha0_emp = std::min(rep.alpha0_emp, (w0 + D.beta) / norm2_p);
        if (!std::isfinite(w0)) note_violation(rep.w0_growth_ok, "W0 finiteness", q2);
    }
    if (!std::isfinite(rep.C0_growth_emp))
        note_violation(rep.w0_growth_ok, "W0 empirical growth constant", Matrix::Zero(n, m));
    if (!(rep.alpha0_emp > 0)) {
        rep.w0_coercivity_ok = false;
        rep.pass = false;
        if (rep.witness.empty()) rep.witness = "W0 empirical coercivity constant not positive";
    }
    return rep;
}

}  // namespace thinlimit
