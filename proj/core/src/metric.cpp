#include "thinlimit/metric.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <sstream>

namespace thinlimit {

namespace {

void check_point(const MetricField& M, const Vector& x, double z) {
    if (x.size() != M.m_dim)
        throw DomainError("metric: chart point has wrong dimension");
    if (!M.chart_domain.contains(x) || std::abs(z) > M.z_range + 1e-12) {
        std::ostringstream os;
        os << "metric: point (";
        for (int i = 0; i < x.size(); ++i) os << x[i] << (i + 1 < x.size() ? ", " : "");
        os << "; z=" << z << ") outside chart x working z-range";
        throw DomainError(os.str());
    }
}

void check_spd(const Matrix& g, const Vector& x, double z) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (g + g.transpose()));
    if (es.eigenvalues().minCoeff() <= 0.0) {
        std::ostringstream os;
        os << "metric: g_tan not positive-definite at (";
        for (int i = 0; i < x.size(); ++i) os << x[i] << (i + 1 < x.size() ? ", " : "");
        os << "; z=" << z << "), min eigenvalue " << es.eigenvalues().minCoeff();
        throw ModelError(os.str());
    }
}

MetricField conformal_metric(int m, Rect domain, std::string kind,
                             std::function<double(const Vector&, double)> factor,
                             std::function<Vector(const Vector&, double)> dfactor) {
    // g_tan = factor(x, z)^2 * I; derivatives follow by the chain rule.
    MetricField M;
    M.m_dim = m;
    M.n_dim = m + 1;
    M.chart_domain = std::move(domain);
    M.kind = std::move(kind);
    M.g_tan = [m, factor](const Vector& x, double z) {
        double f = factor(x, z);
        return Matrix(f * f * Matrix::Identity(m, m));
    };
    M.g_tan_deriv = [m, factor, dfactor](const Vector& x, double z) {
        double f = factor(x, z);
        Vector df = dfactor(x, z);  // size m + 1, last entry d/dz
        std::vector<Matrix> out(m + 1);
        for (int c = 0; c <= m; ++c)
            out[c] = 2.0 * f * df[c] * Matrix::Identity(m, m);
        return out;
    };
    return M;
}

}  // namespace

MetricField MetricField::flat(int m, Rect domain) {
    MetricField M;
    M.m_dim = m;
    M.n_dim = m + 1;
    M.chart_domain = std::move(domain);
    M.kind = "flat";
    M.g_tan = [m](const Vector&, double) { return Matrix(Matrix::Identity(m, m)); };
    M.g_tan_deriv = [m](const Vector&, double) {
        return std::vector<Matrix>(m + 1, Matrix::Zero(m, m));
    };
    return M;
}

MetricField MetricField::spherical_cap(double radius, int m, Rect domain) {
    if (radius <= 0) throw UsageError("spherical_cap: radius must be positive");
    double R = radius;
    // Stereographic factor 2 / (1 + |x|^2 / R^2) on the mid-surface,
    // (1 - z/R) along the fiber (concentric spheres).
    auto factor = [R](const Vector& x, double z) {
        return 2.0 / (1.0 + x.squaredNorm() / (R * R)) * (1.0 - z / R);
    };
    auto dfactor = [R](const Vector& x, double z) {
        double denom = 1.0 + x.squaredNorm() / (R * R);
        Vector df(x.size() + 1);
        for (int i = 0; i < x.size(); ++i)
            df[i] = -4.0 * x[i] / (R * R * denom * denom) * (1.0 - z / R);
        df[x.size()] = -2.0 / (denom * R);
        return df;
    };
    MetricField M = conformal_metric(m, std::move(domain), "spherical_cap", factor, dfactor);
    M.z_range = std::min(0.5, 0.45 * R);  // stay clear of the focal sphere
    return M;
}

MetricField MetricField::exponential_growth(double rate, int m, Rect domain) {
    double c = rate;
    auto factor = [c](const Vector&, double z) { return std::exp(c * z); };
    auto dfactor = [c, m](const Vector&, double z) {
        Vector df = Vector::Zero(m + 1);
        df[m] = c * std::exp(c * z);
        return df;
    };
    return conformal_metric(m, std::move(domain), "exponential_growth", factor, dfactor);
}

MetricField MetricField::custom_poly(double c0, const Vector& cx, double cz, int m,
                                     Rect domain) {
    if (cx.size() != m) throw UsageError("custom_poly: cx must have length m");
    Vector cx_copy = cx;
    auto factor = [c0, cx_copy, cz](const Vector& x, double z) {
        return c0 + cx_copy.dot(x) + cz * z;
    };
    auto dfactor = [cx_copy, cz, m](const Vector&, double) {
        Vector df(m + 1);
        df.head(m) = cx_copy;
        df[m] = cz;
        return df;
    };
    return conformal_metric(m, std::move(domain), "custom_poly", factor, dfactor);
}

Matrix eval_g_tan(const MetricField& M, const Vector& x, double z) {
    check_point(M, x, z);
    Matrix g = M.g_tan(x, z);
    if (g.rows() != M.m_dim || g.cols() != M.m_dim)
        throw ModelError("metric: g_tan closure returned wrong dimensions");
    g = 0.5 * (g + g.transpose()).eval();
    check_spd(g, x, z);
    return g;
}

Matrix eval_metric(const MetricField& M, const Vector& x, double z) {
    Matrix g_tan = eval_g_tan(M, x, z);
    int n = M.n_dim;
    Matrix g = Matrix::Zero(n, n);
    g.topLeftCorner(M.m_dim, M.m_dim) = g_tan;
    g(n - 1, n - 1) = 1.0;
    return g;
}

std::vector<Matrix> eval_g_tan_derivs(const MetricField& M, const Vector& x, double z) {
    check_point(M, x, z);
    if (M.has_analytic_derivatives()) {
        auto d = M.g_tan_deriv(x, z);
        if (static_cast<int>(d.size()) != M.m_dim + 1)
            throw ModelError("metric: derivative closure returned wrong count");
        return d;
    }
    double delta = M.fd_step;
    if (!(delta > 0) || delta < 1e-290)
        throw NumericError("metric: finite-difference step underflow");
    std::vector<Matrix> out(M.m_dim + 1);
    for (int c = 0; c < M.m_dim; ++c) {
        Vector xp = x, xm = x;
        xp[c] += delta;
        xm[c] -= delta;
        out[c] = (M.g_tan(xp, z) - M.g_tan(xm, z)) / (2.0 * delta);
    }
    out[M.m_dim] = (M.g_tan(x, z + delta) - M.g_tan(x, z - delta)) / (2.0 * delta);
    return out;
}

std::vector<Matrix> christoffel(const MetricField& M, const Vector& x, double z) {
    int m = M.m_dim, n = M.n_dim;
    Matrix g_tan = eval_g_tan(M, x, z);
    std::vector<Matrix> dg_tan = eval_g_tan_derivs(M, x, z);

    // Full-metric partials dg[c](a, b) = d g_{ab} / d coord_c; the z-row and
    // z-column of g are constant by the Fermi form.
    std::vector<Matrix> dg(n, Matrix::Zero(n, n));
    for (int c = 0; c < n; ++c)
        dg[c].topLeftCorner(m, m) = dg_tan[c];

    Matrix g_inv = Matrix::Zero(n, n);
    g_inv.topLeftCorner(m, m) = g_tan.inverse();
    g_inv(n - 1, n - 1) = 1.0;

    std::vector<Matrix> gamma(n, Matrix::Zero(n, n));
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            for (int c = b; c < n; ++c) {
                double s = 0;
                for (int d = 0; d < n; ++d)
                    s += g_inv(a, d) * (dg[b](d, c) + dg[c](d, b) - dg[d](b, c));
                gamma[a](b, c) = 0.5 * s;
                gamma[a](c, b) = gamma[a](b, c);
            }
    return gamma;
}

std::pair<double, double> volume_density(const MetricField& M, const Vector& x, double z) {
    double at_z = std::sqrt(eval_g_tan(M, x, z).determinant());
    double at_0 = std::sqrt(eval_g_tan(M, x, 0.0).determinant());
    return {at_z, at_0};
}

}  // namespace thinlimit
