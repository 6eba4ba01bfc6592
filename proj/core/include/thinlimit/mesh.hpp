#pragma once

#include <Eigen/Core>

#include "thinlimit/metric.hpp"

namespace thinlimit {

// Conforming P1 triangulation of the rectangular chart of the mid-surface.
// Degree-2 quadrature (edge midpoints); the piecewise-affine differential is
// element-constant, so the density is exact per element up to metric variation.
struct SurfaceMesh {
    Matrix nodes;              // N x 2 chart coordinates
    Eigen::MatrixXi triangles; // T x 3 node indices, positively oriented
    std::vector<bool> boundary_node;
    std::vector<Matrix> grad_op;  // per-triangle 3 x 2 shape-function gradients
    std::vector<double> area;     // chart (Lebesgue) areas

    int num_nodes() const { return static_cast<int>(nodes.rows()); }
    int num_triangles() const { return static_cast<int>(triangles.rows()); }
    int num_boundary_nodes() const {
        int c = 0;
        for (bool b : boundary_node) c += b;
        return c;
    }
    // Degree-2 rule: edge midpoints, weight area/3 each.
    void quadrature(int tri, Matrix& points, Vector& weights) const;
};

// Extrusion of the surface mesh to the tubular neighborhood: n_layers even
// layers symmetric about z = 0, prisms split into 3 tets by a rule that
// depends only on surface node ids (conforming across prisms and layers).
struct BulkMesh {
    const SurfaceMesh* surface = nullptr;
    double h = 0;
    int n_layers = 0;
    Matrix nodes;               // N x 3 (chart x, z)
    Eigen::MatrixXi tets;       // T x 4, positive volume
    std::vector<int> pi_node;   // bulk node -> surface node (drop z)
    std::vector<bool> gamma_node;  // pi(node) on the surface boundary
    std::vector<int> tet_surface_tri;
    std::vector<double> volume;  // chart (Lebesgue) volumes

    int num_nodes() const { return static_cast<int>(nodes.rows()); }
    int num_tets() const { return static_cast<int>(tets.rows()); }
    // Degree-2 4-point rule.
    void quadrature(int tet, Matrix& points, Vector& weights) const;
};

SurfaceMesh triangulate_chart(const Rect& domain, int resolution);
BulkMesh extrude_bulk_mesh(const SurfaceMesh& S, double h, int n_layers);

}  // namespace thinlimit
