#pragma once

#include "thinlimit/envelope.hpp"

namespace thinlimit {

// Density on n x m matrices with an optional gradient (finite differences
// when absent); the interface the quasiconvexity probe minimizes through.
struct MatrixDensity {
    std::function<double(const Matrix&)> value;
    std::function<Matrix(const Matrix&)> gradient;

    static MatrixDensity from_w0(const DensitySpec& D);
    static MatrixDensity from_envelope(const EnvelopeTable& T);
};

struct ProbeResult {
    bool violated = false;
    double margin = 0;      // U(A) - best achieved average
    double base_value = 0;  // U(A)
    double best_value = 0;  // avg_D U(A + d phi) at the best phi
    Matrix phi;             // nodal witness field on the probe mesh
    int probe_n = 0;
};

// Minimizes phi -> avg_D U(A + d phi) over piecewise-affine phi vanishing
// on the boundary of the unit square (fixed triangulation of resolution
// probe_n), descending from seeded random starts. Reports a violation when
// the best average undercuts U(A) by more than tol_probe; the returned phi
// certifies the margin by re-evaluation.
ProbeResult quasiconvexity_probe(const MatrixDensity& U, const Matrix& A, int probe_n,
                                 uint64_t seed, double tol_probe = 1e-4, int restarts = 4,
                                 int max_iters = 500);

// Re-evaluates avg_D U(A + d phi) for a stored witness.
double probe_average(const MatrixDensity& U, const Matrix& A, const Matrix& phi,
                     int probe_n);

}  // namespace thinlimit
