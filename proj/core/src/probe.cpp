#include "thinlimit/probe.hpp"

#include <cmath>

#include "thinlimit/mesh.hpp"
#include "thinlimit/optimizer.hpp"

namespace thinlimit {

MatrixDensity MatrixDensity::from_w0(const DensitySpec& D) {
    MatrixDensity U;
    if (D.kind == DensityKind::dist2_so) {
        U.value = [](const Matrix& A) { return w0_closed_form(A); };
        U.gradient = [](const Matrix& A) { return w0_closed_form_gradient(A); };
    } else {
        DensitySpec Dc = D;
        Vector x0 = Vector::Constant(D.m_dim, 0.5);
        U.value = [Dc, x0](const Matrix& A) { return fiber_minimize_W0(Dc, x0, A).value; };
    }
    return U;
}

MatrixDensity MatrixDensity::from_envelope(const EnvelopeTable& T) {
    MatrixDensity U;
    const EnvelopeTable* table = &T;
    U.value = [table](const Matrix& A) { return table->eval(A).value; };
    U.gradient = [table](const Matrix& A) {
        Matrix dA;
        table->eval_with_gradient(table->values, A, &dA);
        return dA;
    };
    return U;
}

namespace {

struct ProbeProblem {
    SurfaceMesh mesh;
    std::vector<int> free_nodes;
    std::vector<int> node_to_free;  // -1 for boundary
    int n = 0;

    ProbeProblem(int probe_n, int n_target) : n(n_target) {
        mesh = triangulate_chart(Rect::unit_square(), probe_n);
        node_to_free.assign(mesh.num_nodes(), -1);
        for (int i = 0; i < mesh.num_nodes(); ++i)
            if (!mesh.boundary_node[i]) {
                node_to_free[i] = static_cast<int>(free_nodes.size());
                free_nodes.push_back(i);
            }
    }

    int dof() const { return static_cast<int>(free_nodes.size()) * n; }

    Matrix unpack(const Vector& x) const {
        Matrix phi = Matrix::Zero(mesh.num_nodes(), n);
        for (size_t k = 0; k < free_nodes.size(); ++k)
            phi.row(free_nodes[k]) = x.segment(k * n, n).transpose();
        return phi;
    }

    double energy(const MatrixDensity& U, const Matrix& A, const Matrix& phi,
                  Vector* grad_out) const {
        double total_area = 0, total = 0;
        if (grad_out) grad_out->setZero(dof());
        Matrix nodal(3, n);
        for (int t = 0; t < mesh.num_triangles(); ++t) {
            for (int k = 0; k < 3; ++k) nodal.row(k) = phi.row(mesh.triangles(t, k));
            Matrix dphi = nodal.transpose() * mesh.grad_op[t];
            Matrix arg = A + dphi;
            total += mesh.area[t] * U.value(arg);
            total_area += mesh.area[t];
            if (grad_out) {
                Matrix dU = U.gradient ? U.gradient(arg) : fd_gradient(U, arg);
                Matrix node_grad = mesh.grad_op[t] * dU.transpose();  // 3 x n
                for (int k = 0; k < 3; ++k) {
                    int fi = node_to_free[mesh.triangles(t, k)];
                    if (fi >= 0)
                        grad_out->segment(fi * n, n) +=
                            mesh.area[t] * node_grad.row(k).transpose();
                }
            }
        }
        if (grad_out) *grad_out /= total_area;
        return total / total_area;
    }

    static Matrix fd_gradient(const MatrixDensity& U, const Matrix& A) {
        double step = 1e-6 * std::max(1.0, A.norm());
        Matrix g(A.rows(), A.cols());
        Matrix Ap = A, Am = A;
        for (int i = 0; i < A.rows(); ++i)
            for (int j = 0; j < A.cols(); ++j) {
                Ap(i, j) += step;
                Am(i, j) -= step;
                g(i, j) = (U.value(Ap) - U.value(Am)) / (2.0 * step);
                Ap(i, j) = A(i, j);
                Am(i, j) = A(i, j);
            }
        return g;
    }
};

}  // namespace

double probe_average(const MatrixDensity& U, const Matrix& A, const Matrix& phi,
                     int probe_n) {
    ProbeProblem prob(probe_n, static_cast<int>(phi.cols()));
    return prob.energy(U, A, phi, nullptr);
}

ProbeResult quasiconvexity_probe(const MatrixDensity& U, const Matrix& A, int probe_n,
                                 uint64_t seed, double tol_probe, int restarts,
                                 int max_iters) {
    if (!U.value) throw UsageError("quasiconvexity_probe: density has no value closure");
    if (probe_n < 2) throw UsageError("quasiconvexity_probe: probe_n >= 2 required");
    const int n = static_cast<int>(A.rows());
    ProbeProblem prob(probe_n, n);

    ObjectiveFn fn = [&](const Vector& x, Vector& grad) {
        double v = prob.energy(U, A, prob.unpack(x), &grad);
        if (!std::isfinite(v)) throw NumericError("quasiconvexity_probe: diverged");
        return v;
    };

    OptimizerParams lp;
    lp.max_iters = max_iters;
    lp.grad_tol = 1e-8;
    lp.memory = 12;

    Rng rng(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    ProbeResult out;
    out.base_value = U.value(A);
    out.probe_n = probe_n;
    out.best_value = std::numeric_limits<double>::infinity();

    // Oscillation amplitudes scaled so d phi is O(1): nodal values ~ 1/probe_n.
    std::vector<double> amps = {0.0, 0.5 / probe_n, 1.5 / probe_n, 3.0 / probe_n};
    for (int r = 0; r < restarts; ++r) {
        Vector x0 = Vector::Zero(prob.dof());
        double amp = amps[r % amps.size()];
        if (amp > 0)
            for (int i = 0; i < x0.size(); ++i) x0[i] = amp * nd(rng);
        LbfgsResult res = lbfgs_minimize(fn, x0, lp);
        if (res.value < out.best_value) {
            out.best_value = res.value;
            out.phi = prob.unpack(res.x);
        }
    }
    out.margin = out.base_value - out.best_value;
    out.violated = out.best_value < out.base_value - tol_probe;
    return out;
}

}  // namespace thinlimit
