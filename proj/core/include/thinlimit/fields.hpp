#pragma once

#include "thinlimit/mesh.hpp"

namespace thinlimit {

// Nodal map into R^n with a fixed-DOF mask; fixed entries carry exactly the
// boundary values assigned by apply_boundary_conditions and are never
// touched by minimization.
struct ConfigurationField {
    int n = 3;
    Matrix values;            // num_nodes x n
    std::vector<bool> fixed;  // per node (all n components together)
    std::string host;         // "surface" or "bulk"

    int num_nodes() const { return static_cast<int>(values.rows()); }
    int num_free_nodes() const {
        int c = 0;
        for (bool f : fixed) c += !f;
        return c;
    }
};

// Boundary data of the pure displacement problem: F_bc on the surface
// boundary and the k = 1 trivialization b of the normal-slope section, so a
// ring node at (x, z) is pinned to F_bc(x) + z * b(x).
struct BoundaryData {
    std::function<Vector(const Vector& x)> F_bc;
    std::function<Vector(const Vector& x)> b;
    int n = 3;

    // Affine data admits the exact affine extension as the free-DOF start.
    bool affine = false;
    Matrix A;       // n x m
    Vector offset;  // n
    Vector b_const; // n

    static BoundaryData affine_data(const Matrix& A, const Vector& offset,
                                    const Vector& b_const);
};

ConfigurationField apply_boundary_conditions(const SurfaceMesh& mesh, const BoundaryData& bc);
ConfigurationField apply_boundary_conditions(const BulkMesh& mesh, const BoundaryData& bc);

}  // namespace thinlimit
