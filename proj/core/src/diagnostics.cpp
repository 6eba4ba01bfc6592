#include "thinlimit/diagnostics.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>

namespace thinlimit {

namespace {

std::vector<Vector> chart_grid(const MetricField& M, int samples) {
    std::vector<Vector> pts;
    const Rect& dom = M.chart_domain;
    if (M.m_dim == 1) {
        for (int i = 0; i < samples; ++i) {
            Vector x(1);
            x[0] = dom.lo[0] + dom.extent(0) * (i + 0.5) / samples;
            pts.push_back(x);
        }
    } else {
        for (int i = 0; i < samples; ++i)
            for (int j = 0; j < samples; ++j) {
                Vector x(2);
                x[0] = dom.lo[0] + dom.extent(0) * (i + 0.5) / samples;
                x[1] = dom.lo[1] + dom.extent(1) * (j + 0.5) / samples;
                pts.push_back(x);
            }
    }
    return pts;
}

// Integrates f(x, z) * weight over chart x [-h, h] with tensor Gauss-Legendre.
double bulk_integral(const MetricField& M, double h, int nq_chart, int nq_fiber,
                     const std::function<double(const Vector&, double)>& f) {
    std::vector<double> zn, zw;
    gauss_legendre(nq_fiber, -h, h, zn, zw);
    std::vector<double> xn, xw, yn, yw;
    const Rect& dom = M.chart_domain;
    gauss_legendre(nq_chart, dom.lo[0], dom.hi[0], xn, xw);
    double total = 0.0;
    if (M.m_dim == 1) {
        for (int i = 0; i < nq_chart; ++i) {
            Vector x(1);
            x[0] = xn[i];
            for (int k = 0; k < nq_fiber; ++k)
                total += xw[i] * zw[k] * f(x, zn[k]);
        }
    } else {
        gauss_legendre(nq_chart, dom.lo[1], dom.hi[1], yn, yw);
        for (int i = 0; i < nq_chart; ++i)
            for (int j = 0; j < nq_chart; ++j) {
                Vector x(2);
                x[0] = xn[i];
                x[1] = yn[j];
                for (int k = 0; k < nq_fiber; ++k)
                    total += xw[i] * yw[j] * zw[k] * f(x, zn[k]);
            }
    }
    return total;
}

double chart_integral(const MetricField& M, int nq,
                      const std::function<double(const Vector&)>& f) {
    const Rect& dom = M.chart_domain;
    std::vector<double> xn, xw, yn, yw;
    gauss_legendre(nq, dom.lo[0], dom.hi[0], xn, xw);
    double total = 0.0;
    if (M.m_dim == 1) {
        for (int i = 0; i < nq; ++i) {
            Vector x(1);
            x[0] = xn[i];
            total += xw[i] * f(x);
        }
    } else {
        gauss_legendre(nq, dom.lo[1], dom.hi[1], yn, yw);
        for (int i = 0; i < nq; ++i)
            for (int j = 0; j < nq; ++j) {
                Vector x(2);
                x[0] = xn[i];
                x[1] = yn[j];
                total += xw[i] * yw[j] * f(x);
            }
    }
    return total;
}

}  // namespace

double bulk_volume(const MetricField& M, double h, int quad_points, int fiber_quad_points) {
    return bulk_integral(M, h, quad_points, fiber_quad_points,
                         [&](const Vector& x, double z) {
                             return std::sqrt(eval_g_tan(M, x, z).determinant());
                         });
}

double surface_area(const MetricField& M, int quad_points) {
    return chart_integral(M, quad_points, [&](const Vector& x) {
        return std::sqrt(eval_g_tan(M, x, 0.0).determinant());
    });
}

double rescale_identity_error(const MetricField& M, double h0, double h,
                              const Integrand& f, int quad_points, int fiber_quad_points) {
    if (!(h > 0) || h > 1.0) throw UsageError("rescale_identity_error: h in (0, 1] required");
    if (!(h0 > 0) || h0 > M.z_range)
        throw UsageError("rescale_identity_error: h0 outside working range");
    double H = h0 * h;
    double lhs = bulk_integral(M, H, quad_points, fiber_quad_points,
                               [&](const Vector& x, double z) {
                                   return f(x, z) * std::sqrt(eval_g_tan(M, x, z).determinant());
                               }) /
                 bulk_volume(M, H, quad_points, fiber_quad_points);
    // nu_1 = 2 (volume of the 1-dimensional unit ball); eta ^ omega carries
    // the z = 0 density, and f is pulled back through the fiber rescaling.
    double area = surface_area(M, quad_points);
    double rhs = bulk_integral(M, h0, quad_points, fiber_quad_points,
                               [&](const Vector& x, double z) {
                                   return f(x, h * z) * std::sqrt(eval_g_tan(M, x, 0.0).determinant());
                               }) /
                 (2.0 * h0 * area);
    double scale = std::max({std::abs(lhs), std::abs(rhs), 1e-14});
    return std::abs(lhs - rhs) / scale;
}

GeometryDiagnosticsReport geometry_diagnostics(const MetricField& M,
                                               const std::vector<double>& h_list,
                                               const DiagnosticsOptions& opts) {
    if (h_list.size() < 2)
        throw UsageError("geometry_diagnostics: at least two h values required");
    for (size_t i = 0; i + 1 < h_list.size(); ++i)
        if (!(h_list[i] > h_list[i + 1]) || !(h_list.back() > 0))
            throw UsageError("geometry_diagnostics: h_list must be strictly decreasing and positive");
    if (h_list.front() > M.z_range)
        throw UsageError("geometry_diagnostics: h exceeds working z-range");

    Integrand integrand = opts.rescale_integrand;
    if (!integrand)
        integrand = [](const Vector& x, double z) { return (1.0 + x[0] * x[0]) * std::exp(z); };

    GeometryDiagnosticsReport report;
    report.surface_area = surface_area(M, opts.quad_points);
    auto points = chart_grid(M, opts.chart_samples);

    for (double h : h_list) {
        GeometryDiagnosticsRow row;
        row.h = h;
        for (const Vector& x : points) {
            for (int lz = 0; lz < opts.z_levels; ++lz) {
                double z = (opts.z_levels == 1)
                               ? h
                               : -h + 2.0 * h * lz / (opts.z_levels - 1);
                AdaptedFrame pi = transport_normal(M, x, z);
                AdaptedFrame si = split_frame(M, x, z);
                Matrix g = eval_metric(M, x, z);

                // (a) worst relative g-deviation of the two frame maps applied
                // to the g-orthonormal basis at (x, 0); |v| = 1 by construction.
                Matrix diff = si.columns - pi.columns;
                for (int c = 0; c < M.n_dim; ++c) {
                    double dev = std::sqrt(diff.col(c).dot(g * diff.col(c)));
                    row.frame_deviation = std::max(row.frame_deviation, dev);
                }

                // (b) sup over g-unit pairs of |gtilde - g| = largest
                // generalized eigenvalue magnitude of (gtilde - g) vs g.
                Matrix g_tilde = Matrix::Zero(M.n_dim, M.n_dim);
                g_tilde.topLeftCorner(M.m_dim, M.m_dim) = eval_g_tan(M, x, 0.0);
                g_tilde(M.n_dim - 1, M.n_dim - 1) = 1.0;
                Eigen::LLT<Matrix> llt(g);
                Matrix Linv = Matrix(llt.matrixL())
                                  .triangularView<Eigen::Lower>()
                                  .solve(Matrix::Identity(M.n_dim, M.n_dim));
                Matrix whitened = Linv * (g_tilde - g) * Linv.transpose();
                Eigen::SelfAdjointEigenSolver<Matrix> es(whitened);
                row.metric_deviation =
                    std::max(row.metric_deviation, es.eigenvalues().cwiseAbs().maxCoeff());
            }
        }
        row.volume_deviation =
            std::abs(bulk_volume(M, h, opts.quad_points, opts.fiber_quad_points) -
                     2.0 * h * report.surface_area);
        row.rescale_error = rescale_identity_error(M, M.z_range, h / M.z_range, integrand,
                                                   opts.quad_points, opts.fiber_quad_points);
        report.rows.push_back(row);
    }

    std::vector<double> hs(h_list.begin(), h_list.end());
    auto column = [&](auto member) {
        std::vector<double> v;
        for (const auto& r : report.rows) v.push_back(r.*member);
        return v;
    };
    report.order_frame = fit_observed_order(hs, column(&GeometryDiagnosticsRow::frame_deviation));
    report.order_metric = fit_observed_order(hs, column(&GeometryDiagnosticsRow::metric_deviation));
    report.order_volume = fit_observed_order(hs, column(&GeometryDiagnosticsRow::volume_deviation));
    report.order_rescale = fit_observed_order(hs, column(&GeometryDiagnosticsRow::rescale_error));
    return report;
}

}  // namespace thinlimit
