#pragma once

#include "thinlimit/density.hpp"
#include "thinlimit/diagnostics.hpp"
#include "thinlimit/envelope.hpp"
#include "thinlimit/fields.hpp"

namespace thinlimit {

////////////////////////////////////////////////////////////////////////////////
// Volume-averaged energy assembly on P1 meshes. Frames and metric weights
// at quadrature points do not depend on the configuration, so they are
// precomputed once per (mesh, metric, mode); evaluation is then re-entrant.
// Reductions run in a fixed element order, so results are deterministic.
////////////////////////////////////////////////////////////////////////////////

class BulkEnergy {
public:
    BulkEnergy(const MetricField& M, const DensitySpec& D, const BulkMesh& mesh,
               FrameKind mode);

    // I_h(f) and its exact gradient w.r.t. nodal values; gradient rows of
    // fixed nodes are zeroed. Throws NumericError (with element id) on
    // non-finite density values.
    double value_and_gradient(const ConfigurationField& f, Matrix* grad) const;

    double metric_volume() const { return volume_; }
    FrameKind mode() const { return mode_; }

private:
    struct QuadData {
        double weight = 0;   // chart weight * sqrt(det g)
        Matrix frame;        // n x n adapted frame columns
        Vector x;
        double z = 0;
    };
    const DensitySpec* density_;
    const BulkMesh* mesh_;
    FrameKind mode_;
    double volume_ = 0;
    std::vector<Matrix> grad_op_;            // per-tet 4 x 3
    std::vector<std::array<QuadData, 4>> quad_;
};

enum class MembraneDensityKind {
    w0,                // unrelaxed fiber-minimized density
    relaxed,           // envelope table, unsmoothed (reporting)
    relaxed_smoothed,  // envelope table, smoothed (optimization)
};

class MembraneEnergy {
public:
    MembraneEnergy(const MetricField& M, const DensitySpec& D, const SurfaceMesh& mesh,
                   const EnvelopeTable* table, MembraneDensityKind which);

    // I(F), exact gradient w.r.t. free nodal values; accumulates clamp
    // warnings when singular values leave the table range.
    double value_and_gradient(const ConfigurationField& F, Matrix* grad,
                              int* clamp_count = nullptr) const;

    double metric_area() const { return area_; }
    MembraneDensityKind density_kind() const { return which_; }

private:
    struct QuadData {
        double weight = 0;  // chart weight * sqrt(det g|_S)
        Matrix frame;       // m x m tangential orthonormal frame
        Vector x;
    };
    const DensitySpec* density_;
    const SurfaceMesh* mesh_;
    const EnvelopeTable* table_;
    MembraneDensityKind which_;
    double area_ = 0;
    std::vector<std::array<QuadData, 3>> quad_;
};

// ((avg over Omega_h of |f - F o pi|^p dvol_g))^{1/p} by quadrature.
double lp_distance(const MetricField& M, const BulkMesh& mesh, const ConfigurationField& f,
                   const ConfigurationField& F, double p);

// Relative discrepancy of the rescaling identity for a test integrand
// (quadrature-based; no mesh involved).
double rescale_consistency(const MetricField& M, double h0, double h, const Integrand& f);

}  // namespace thinlimit
