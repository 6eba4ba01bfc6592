#pragma once

#include <functional>
#include <optional>

#include "thinlimit/common.hpp"

namespace thinlimit {

////////////////////////////////////////////////////////////////////////////////
// Intrinsic metric of the slender body in a Fermi chart (x, z): the full
// n x n metric is block-diag(g_tan(x, z), 1), so normal geodesics are
// z-lines and the projection onto the mid-surface just drops z.
// Codimension is fixed at k = 1 with an oriented unit normal.
////////////////////////////////////////////////////////////////////////////////

// g_tan(x, z): symmetric m x m tangential block.
using MetricFn = std::function<Matrix(const Vector& x, double z)>;
// Partial derivatives of g_tan: entries 0..m-1 are d/dx_i, entry m is d/dz.
using MetricDerivFn = std::function<std::vector<Matrix>(const Vector& x, double z)>;

struct MetricField {
    int m_dim = 2;        // mid-surface dimension (1 or 2)
    int n_dim = 3;        // ambient dimension, always m + 1
    Rect chart_domain = Rect::unit_square();
    double z_range = 0.5; // working |z| bound; focal points are not detected

    MetricFn g_tan;
    MetricDerivFn g_tan_deriv;  // empty -> central finite differences
    double fd_step = 1e-5;

    // Fixed-step RK4 for the parallel-transport ODE; fibers are short, so a
    // deterministic step count suffices. The floor keeps the transported
    // frame g-orthonormal to ~1e-10 on the built-in metrics.
    int transport_steps_per_unit = 32;
    int transport_min_steps = 64;

    std::string kind = "custom";

    bool has_analytic_derivatives() const { return static_cast<bool>(g_tan_deriv); }

    // Built-in metric kinds addressable from config.
    static MetricField flat(int m = 2, Rect domain = Rect::unit_square());
    // Sphere of curvature radius R: stereographic mid-surface metric,
    // tangential block (1 - z/R)^2 * g_S(x).
    static MetricField spherical_cap(double radius, int m = 2,
                                     Rect domain = Rect::unit_square());
    // g_tan(x, z) = e^{2 c z} * I.
    static MetricField exponential_growth(double rate, int m = 2,
                                          Rect domain = Rect::unit_square());
    // Conformal polynomial metric g_tan = p(x, z)^2 * I with
    // p(x, z) = c0 + cx . x + cz * z (coefficients from config).
    static MetricField custom_poly(double c0, const Vector& cx, double cz, int m = 2,
                                   Rect domain = Rect::unit_square());
};

// Full n x n Fermi-form metric at (x, z). Throws DomainError outside the
// chart x working z-range, ModelError if g_tan is not SPD there.
Matrix eval_metric(const MetricField& M, const Vector& x, double z);

// Tangential block only, with SPD check.
Matrix eval_g_tan(const MetricField& M, const Vector& x, double z);

// Derivatives of g_tan w.r.t. (x_0..x_{m-1}, z); analytic if available.
std::vector<Matrix> eval_g_tan_derivs(const MetricField& M, const Vector& x, double z);

// Levi-Civita Christoffel symbols Gamma^a_{bc} of the full metric,
// returned as Gamma[a](b, c); symmetric in (b, c).
std::vector<Matrix> christoffel(const MetricField& M, const Vector& x, double z);

// (sqrt(det g_tan(x, z)), sqrt(det g_tan(x, 0))): the true volume density
// and the density of the approximating metric (eta ^ omega).
std::pair<double, double> volume_density(const MetricField& M, const Vector& x, double z);

}  // namespace thinlimit
