#include "thinlimit/assembly.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <sstream>

namespace thinlimit {

namespace {

Matrix tet_grad_op(const BulkMesh& mesh, int tet) {
    Eigen::Vector3d p0 = mesh.nodes.row(mesh.tets(tet, 0));
    Eigen::Matrix3d J;
    for (int k = 0; k < 3; ++k)
        J.col(k) = Eigen::Vector3d(mesh.nodes.row(mesh.tets(tet, k + 1))) - p0;
    Eigen::Matrix<double, 4, 3> ref;
    ref << -1, -1, -1, 1, 0, 0, 0, 1, 0, 0, 0, 1;
    return ref * J.inverse();
}

}  // namespace

BulkEnergy::BulkEnergy(const MetricField& M, const DensitySpec& D, const BulkMesh& mesh,
                       FrameKind mode)
    : density_(&D), mesh_(&mesh), mode_(mode) {
    if (D.n_dim != 3 || D.m_dim != 2)
        throw UsageError("BulkEnergy: bulk meshes are 2-d surfaces extruded to 3-d");
    const int T = mesh.num_tets();
    grad_op_.reserve(T);
    quad_.resize(T);
    Matrix pts;
    Vector wts;
    for (int t = 0; t < T; ++t) {
        grad_op_.push_back(tet_grad_op(mesh, t));
        mesh.quadrature(t, pts, wts);
        for (int q = 0; q < 4; ++q) {
            Vector x = pts.row(q).head(2);
            double z = pts(q, 2);
            AdaptedFrame frame = (mode == FrameKind::transported)
                                     ? transport_normal(M, x, z)
                                     : split_frame(M, x, z);
            QuadData& qd = quad_[t][q];
            qd.weight = wts[q] * std::sqrt(eval_g_tan(M, x, z).determinant());
            qd.frame = frame.columns;
            qd.x = x;
            qd.z = z;
            volume_ += qd.weight;
        }
    }
}

double BulkEnergy::value_and_gradient(const ConfigurationField& f, Matrix* grad) const {
    const BulkMesh& mesh = *mesh_;
    if (f.num_nodes() != mesh.num_nodes() || f.n != 3)
        throw UsageError("BulkEnergy: configuration does not match the mesh");
    if (grad) grad->setZero(f.num_nodes(), 3);

    double total = 0;
    Matrix nodal(4, 3), df(3, 3);
    for (int t = 0; t < mesh.num_tets(); ++t) {
        for (int k = 0; k < 4; ++k) nodal.row(k) = f.values.row(mesh.tets(t, k));
        df = nodal.transpose() * grad_op_[t];  // element-constant differential
        for (int q = 0; q < 4; ++q) {
            const QuadData& qd = quad_[t][q];
            Matrix Q = df * qd.frame;
            double w = eval_W_on_S(*density_, qd.x, Q);
            if (!std::isfinite(w)) {
                std::ostringstream os;
                os << "bulk_energy: non-finite density at element " << t;
                throw NumericError(os.str());
            }
            total += qd.weight * w;
            if (grad) {
                Matrix dW_dQ = eval_W_on_S_gradient(*density_, qd.x, Q);
                Matrix dW_ddf = dW_dQ * qd.frame.transpose();  // n x 3 chart
                Matrix node_grad = grad_op_[t] * dW_ddf.transpose();  // 4 x n
                for (int k = 0; k < 4; ++k)
                    grad->row(mesh.tets(t, k)) += qd.weight * node_grad.row(k);
            }
        }
    }
    total /= volume_;
    if (grad) {
        *grad /= volume_;
        for (int i = 0; i < f.num_nodes(); ++i)
            if (f.fixed[i]) grad->row(i).setZero();
    }
    return total;
}

MembraneEnergy::MembraneEnergy(const MetricField& M, const DensitySpec& D,
                               const SurfaceMesh& mesh, const EnvelopeTable* table,
                               MembraneDensityKind which)
    : density_(&D), mesh_(&mesh), table_(table), which_(which) {
    if (which != MembraneDensityKind::w0 && !table)
        throw UsageError("MembraneEnergy: relaxed density needs an envelope table");
    const int T = mesh.num_triangles();
    quad_.resize(T);
    Matrix pts;
    Vector wts;
    for (int t = 0; t < T; ++t) {
        mesh.quadrature(t, pts, wts);
        for (int q = 0; q < 3; ++q) {
            Vector x = pts.row(q);
            QuadData& qd = quad_[t][q];
            Matrix g = eval_g_tan(M, x, 0.0);
            qd.weight = wts[q] * std::sqrt(g.determinant());
            Eigen::LLT<Matrix> llt(g);
            qd.frame = Matrix(llt.matrixL())
                           .transpose()
                           .triangularView<Eigen::Upper>()
                           .solve(Matrix::Identity(2, 2));
            qd.x = x;
            area_ += qd.weight;
        }
    }
}

double MembraneEnergy::value_and_gradient(const ConfigurationField& F, Matrix* grad,
                                          int* clamp_count) const {
    const SurfaceMesh& mesh = *mesh_;
    if (F.num_nodes() != mesh.num_nodes())
        throw UsageError("MembraneEnergy: configuration does not match the mesh");
    const int n = F.n;
    if (grad) grad->setZero(F.num_nodes(), n);
    if (clamp_count) *clamp_count = 0;

    double total = 0;
    Matrix nodal(3, n), dF(n, 2);
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        for (int k = 0; k < 3; ++k) nodal.row(k) = F.values.row(mesh.triangles(t, k));
        dF = nodal.transpose() * mesh.grad_op[t];
        for (int q = 0; q < 3; ++q) {
            const QuadData& qd = quad_[t][q];
            Matrix Q2 = dF * qd.frame;  // n x m in the g|_S-orthonormal frame
            double rho = 0;
            Matrix dRho_dQ2;
            if (which_ == MembraneDensityKind::w0) {
                if (density_->kind == DensityKind::dist2_so) {
                    rho = w0_closed_form(Q2);
                    if (grad) dRho_dQ2 = w0_closed_form_gradient(Q2);
                } else {
                    FiberMinimum fm = fiber_minimize_W0(*density_, qd.x, Q2);
                    rho = fm.value;
                    if (grad) {
                        // Envelope theorem: the tangential block of dW at the
                        // attained minimizer.
                        Matrix full(n, n);
                        full.leftCols(2) = Q2;
                        full.col(n - 1) = fm.r;
                        dRho_dQ2 = eval_W_on_S_gradient(*density_, qd.x, full).leftCols(2);
                    }
                }
            } else {
                bool smoothed = which_ == MembraneDensityKind::relaxed_smoothed;
                EnvelopeEval ev = table_->eval_with_gradient(
                    smoothed ? table_->smoothed : table_->values, Q2,
                    grad ? &dRho_dQ2 : nullptr);
                rho = ev.value;
                if (ev.clamped && clamp_count) ++(*clamp_count);
            }
            if (!std::isfinite(rho)) {
                std::ostringstream os;
                os << "membrane_energy: non-finite density at element " << t;
                throw NumericError(os.str());
            }
            total += qd.weight * rho;
            if (grad) {
                Matrix dRho_ddF = dRho_dQ2 * qd.frame.transpose();  // n x 2 chart
                Matrix node_grad = mesh.grad_op[t] * dRho_ddF.transpose();  // 3 x n
                for (int k = 0; k < 3; ++k)
                    grad->row(mesh.triangles(t, k)) += qd.weight * node_grad.row(k);
            }
        }
    }
    total /= area_;
    if (grad) {
        *grad /= area_;
        for (int i = 0; i < F.num_nodes(); ++i)
            if (F.fixed[i]) grad->row(i).setZero();
    }
    return total;
}

double lp_distance(const MetricField& M, const BulkMesh& mesh, const ConfigurationField& f,
                   const ConfigurationField& F, double p) {
    if (f.num_nodes() != mesh.num_nodes())
        throw UsageError("lp_distance: bulk field does not match the bulk mesh");
    const SurfaceMesh& S = *mesh.surface;
    if (F.num_nodes() != S.num_nodes())
        throw UsageError("lp_distance: surface field does not match the surface mesh");
    if (f.n != F.n) throw UsageError("lp_distance: field target dimensions differ");

    constexpr double qa = 0.5854101966249685, qb = 0.1381966011250105;
    double total = 0, vol = 0;
    for (int t = 0; t < mesh.num_tets(); ++t) {
        int tri = mesh.tet_surface_tri[t];
        Eigen::Vector2d p0 = S.nodes.row(S.triangles(tri, 0));
        Eigen::Matrix2d J;
        J.col(0) = Eigen::Vector2d(S.nodes.row(S.triangles(tri, 1))) - p0;
        J.col(1) = Eigen::Vector2d(S.nodes.row(S.triangles(tri, 2))) - p0;
        Eigen::Matrix2d Jinv = J.inverse();

        Matrix pts;
        Vector wts;
        mesh.quadrature(t, pts, wts);
        for (int q = 0; q < 4; ++q) {
            Vector x = pts.row(q).head(2);
            double sqrtg = std::sqrt(eval_g_tan(M, x, pts(q, 2)).determinant());
            double w = wts[q] * sqrtg;

            Eigen::Vector4d bary = Eigen::Vector4d::Constant(qb);
            bary[q] = qa;
            Vector f_at = Vector::Zero(f.n);
            for (int k = 0; k < 4; ++k)
                f_at += bary[k] * Vector(f.values.row(mesh.tets(t, k)));

            Eigen::Vector2d lam12 = Jinv * (Eigen::Vector2d(x) - p0);
            double lam0 = 1.0 - lam12[0] - lam12[1];
            Vector F_at = lam0 * Vector(F.values.row(S.triangles(tri, 0))) +
                          lam12[0] * Vector(F.values.row(S.triangles(tri, 1))) +
                          lam12[1] * Vector(F.values.row(S.triangles(tri, 2)));

            total += w * std::pow((f_at - F_at).norm(), p);
            vol += w;
        }
    }
    return std::pow(total / vol, 1.0 / p);
}

double rescale_consistency(const MetricField& M, double h0, double h, const Integrand& f) {
    return rescale_identity_error(M, h0, h, f);
}

}  // namespace thinlimit
