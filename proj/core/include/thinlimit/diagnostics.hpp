#pragma once

#include "thinlimit/frames.hpp"

namespace thinlimit {

// Scalar test integrand f(x, z) for the rescaling identity.
using Integrand = std::function<double(const Vector& x, double z)>;

struct GeometryDiagnosticsRow {
    double h = 0;
    double frame_deviation = 0;   // sup |(sigma+iota - Pi) v| / |v|
    double metric_deviation = 0;  // sup |gtilde(u,v) - g(u,v)| over g-unit pairs
    double volume_deviation = 0;  // | |Omega_h| - 2 h |S| |
    double rescale_error = 0;     // relative error of the rescaling identity
};

struct GeometryDiagnosticsReport {
    std::vector<GeometryDiagnosticsRow> rows;  // ordered as h_list
    double order_frame = 0;
    double order_metric = 0;
    double order_volume = 0;
    double order_rescale = 0;
    double surface_area = 0;  // |S| w.r.t. g|_S
};

struct DiagnosticsOptions {
    int chart_samples = 20;   // tensor grid per chart axis
    int z_levels = 5;         // fiber levels in [-h, h]
    int quad_points = 24;     // Gauss-Legendre nodes per chart axis
    int fiber_quad_points = 8;
    Integrand rescale_integrand;  // default: (1 + x_0^2) * exp(z)
};

// Per-h deviations between the exact and the approximating geometry, with
// observed convergence orders fitted in h. Requires at least two h values,
// strictly decreasing.
GeometryDiagnosticsReport geometry_diagnostics(const MetricField& M,
                                               const std::vector<double>& h_list,
                                               const DiagnosticsOptions& opts = {});

// |Omega_h| = integral of sqrt(det g_tan) over chart x [-h, h].
double bulk_volume(const MetricField& M, double h, int quad_points = 24,
                   int fiber_quad_points = 8);

// |S| w.r.t. g|_S.
double surface_area(const MetricField& M, int quad_points = 24);

// Relative discrepancy between the volume average of f over Omega_{h0*h}
// (true metric) and the pulled-back fiber average against eta ^ omega over
// Omega_{h0} (approximating metric); vanishes identically for z-independent
// metrics and is O(h) in general.
double rescale_identity_error(const MetricField& M, double h0, double h,
                              const Integrand& f, int quad_points = 24,
                              int fiber_quad_points = 8);

}  // namespace thinlimit
