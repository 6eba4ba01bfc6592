#pragma once

#include "thinlimit/density.hpp"

namespace thinlimit {

////////////////////////////////////////////////////////////////////////////////
// Rank-one lamination approximation of the quasiconvex envelope of the
// membrane density W0, tabulated for fast evaluation inside the membrane
// functional. The lamination envelope bounds W0 from below but is only an
// approximation of the quasiconvex envelope in general; the quasiconvexity
// probe provides falsification power for the computed table.
////////////////////////////////////////////////////////////////////////////////

struct LaminationParams {
    int depth = 3;         // lamination levels
    int n_directions = 64; // rank-one directions sampled per level
    int n_t = 17;          // convex-split parameter samples in (0, 1)
    int n_s = 12;          // geometric amplitude samples
    double s_min = 0.05;
    double lambda_max = 3.0;
    int grid_n = 121;      // table resolution per axis
    uint64_t seed = 0;

    void validate() const {
        if (depth < 1 || n_directions < 1 || n_t < 1 || n_s < 1 || grid_n < 2 ||
            !(lambda_max > 0) || !(s_min > 0))
            throw UsageError("LaminationParams: invalid parameters");
    }
};

struct EnvelopeEval {
    double value = 0;
    bool clamped = false;
};

struct EnvelopeTable {
    enum class Mode { singular_value, matrix_grid };

    Mode mode = Mode::singular_value;
    int m_dim = 2;
    int n_dim = 3;
    double lambda_max = 3.0;
    int grid_n = 121;
    LaminationParams params;
    std::string density_id;

    // singular_value mode: values(i, j) at (lambda_i, lambda_j); for m = 1
    // a single row. Symmetric under axis swap after symmetrization.
    Matrix values;
    Matrix w0_values;
    Matrix smoothed;  // one-cell binomial filter of `values`, used for gradients

    // matrix_grid mode: multilinear table over matrix entries in
    // [-lambda_max, lambda_max]^{m*n} with axis_n nodes per axis.
    int axis_n = 0;
    std::vector<double> flat_values;
    std::vector<double> flat_w0;

    double node_lambda(int i) const { return lambda_max * i / (grid_n - 1); }
    double grid_spacing() const { return lambda_max / (grid_n - 1); }

    EnvelopeEval eval(const Matrix& A) const;
    // Value and d(value)/dA of a table's bilinear interpolant (exact in-cell
    // slopes, i.e. grid-spacing finite differences of node values), chained
    // through the SVD with symmetric subgradient selection at ties; linear
    // extension beyond lambda_max keeps value and gradient consistent.
    EnvelopeEval eval_with_gradient(const Matrix& table, const Matrix& A, Matrix* dA) const;
    EnvelopeEval eval_smoothed(const Matrix& A, Matrix* dA) const;
    double eval_at_singular_values(double l1, double l2, const Matrix& table) const;
};

// Lamination envelope of W0 at a single matrix A (n x m); grid-backed.
double lamination_envelope(const DensitySpec& D, const Matrix& A, const LaminationParams& P);

// Full table build. singular_value mode requires D.frame_indifferent;
// matrix_grid mode is a coarse fallback, capacity error when m*n > 6.
EnvelopeTable build_envelope_table(const DensitySpec& D, const LaminationParams& P);

// One table per lamination level 1..depth from a single build; level
// direction sets depend only on (seed, level), so the depth-L snapshot
// coincides with a separately built depth-L table.
std::vector<EnvelopeTable> build_envelope_table_depths(const DensitySpec& D,
                                                       const LaminationParams& P);

EnvelopeEval eval_envelope(const EnvelopeTable& T, const Matrix& A);

}  // namespace thinlimit
