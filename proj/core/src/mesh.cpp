#include "thinlimit/mesh.hpp"

#include <array>
#include <cassert>
#include <cmath>

namespace thinlimit {

void SurfaceMesh::quadrature(int tri, Matrix& points, Vector& weights) const {
    Eigen::Vector2d p0 = nodes.row(triangles(tri, 0));
    Eigen::Vector2d p1 = nodes.row(triangles(tri, 1));
    Eigen::Vector2d p2 = nodes.row(triangles(tri, 2));
    points.resize(3, 2);
    points.row(0) = 0.5 * (p0 + p1);
    points.row(1) = 0.5 * (p1 + p2);
    points.row(2) = 0.5 * (p2 + p0);
    weights = Vector::Constant(3, area[tri] / 3.0);
}

void BulkMesh::quadrature(int tet, Matrix& points, Vector& weights) const {
    // 4-point degree-2 Keast rule.
    constexpr double a = 0.5854101966249685;  // (5 + 3 sqrt 5) / 20
    constexpr double b = 0.1381966011250105;  // (5 - sqrt 5) / 20
    Eigen::Matrix<double, 4, 3> verts;
    for (int k = 0; k < 4; ++k) verts.row(k) = nodes.row(tets(tet, k));
    points.resize(4, 3);
    for (int q = 0; q < 4; ++q) {
        Eigen::Vector4d bary = Eigen::Vector4d::Constant(b);
        bary[q] = a;
        points.row(q) = bary.transpose() * verts;
    }
    weights = Vector::Constant(4, volume[tet] / 4.0);
}

SurfaceMesh triangulate_chart(const Rect& domain, int resolution) {
    if (domain.dim() != 2) throw DomainError("triangulate_chart: 2-d chart required");
    if (resolution < 2) throw UsageError("triangulate_chart: resolution >= 2 required");
    if (!(domain.extent(0) > 0) || !(domain.extent(1) > 0))
        throw DomainError("triangulate_chart: degenerate chart domain");

    const int r = resolution;
    SurfaceMesh S;
    S.nodes.resize((r + 1) * (r + 1), 2);
    S.boundary_node.assign((r + 1) * (r + 1), false);
    auto id = [r](int i, int j) { return i * (r + 1) + j; };
    for (int i = 0; i <= r; ++i)
        for (int j = 0; j <= r; ++j) {
            S.nodes(id(i, j), 0) = domain.lo[0] + domain.extent(0) * i / r;
            S.nodes(id(i, j), 1) = domain.lo[1] + domain.extent(1) * j / r;
            S.boundary_node[id(i, j)] = (i == 0 || i == r || j == 0 || j == r);
        }

    S.triangles.resize(2 * r * r, 3);
    int t = 0;
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < r; ++j) {
            int v00 = id(i, j), v10 = id(i + 1, j), v01 = id(i, j + 1), v11 = id(i + 1, j + 1);
            S.triangles.row(t++) << v00, v10, v11;
            S.triangles.row(t++) << v00, v11, v01;
        }

    S.grad_op.reserve(S.num_triangles());
    S.area.reserve(S.num_triangles());
    for (int k = 0; k < S.num_triangles(); ++k) {
        Eigen::Vector2d p0 = S.nodes.row(S.triangles(k, 0));
        Eigen::Vector2d p1 = S.nodes.row(S.triangles(k, 1));
        Eigen::Vector2d p2 = S.nodes.row(S.triangles(k, 2));
        Eigen::Matrix2d J;
        J.col(0) = p1 - p0;
        J.col(1) = p2 - p0;
        double detJ = J.determinant();
        if (!(detJ > 0)) throw ModelError("triangulate_chart: non-positive triangle area");
        S.area.push_back(0.5 * detJ);
        Eigen::Matrix<double, 3, 2> ref;
        ref << -1, -1, 1, 0, 0, 1;
        S.grad_op.push_back(ref * J.inverse());
    }
    return S;
}

BulkMesh extrude_bulk_mesh(const SurfaceMesh& S, double h, int n_layers) {
    if (!(h > 0)) throw UsageError("extrude_bulk_mesh: h > 0 required");
    if (n_layers < 2 || n_layers % 2 != 0)
        throw UsageError("extrude_bulk_mesh: n_layers must be even and >= 2");

    BulkMesh B;
    B.surface = &S;
    B.h = h;
    B.n_layers = n_layers;
    const int ns = S.num_nodes();
    const int levels = n_layers + 1;
    B.nodes.resize(ns * levels, 3);
    B.pi_node.resize(ns * levels);
    B.gamma_node.assign(ns * levels, false);
    for (int l = 0; l < levels; ++l) {
        double z = -h + 2.0 * h * l / n_layers;
        for (int j = 0; j < ns; ++j) {
            int idx = l * ns + j;
            B.nodes(idx, 0) = S.nodes(j, 0);
            B.nodes(idx, 1) = S.nodes(j, 1);
            B.nodes(idx, 2) = z;
            B.pi_node[idx] = j;
            B.gamma_node[idx] = S.boundary_node[j];
        }
    }

    B.tets.resize(3 * S.num_triangles() * n_layers, 4);
    B.tet_surface_tri.resize(B.tets.rows());
    int t = 0;
    for (int l = 0; l < n_layers; ++l) {
        for (int k = 0; k < S.num_triangles(); ++k) {
            // Sort the surface ids so every vertical quad face over an edge
            // (u, v), u < v, is split by the diagonal (u_bottom, v_top);
            // neighbouring prisms then agree on shared faces.
            std::array<int, 3> v = {S.triangles(k, 0), S.triangles(k, 1), S.triangles(k, 2)};
            std::sort(v.begin(), v.end());
            int a = l * ns + v[0], b = l * ns + v[1], c = l * ns + v[2];
            int A = (l + 1) * ns + v[0], Bt = (l + 1) * ns + v[1], C = (l + 1) * ns + v[2];
            const std::array<std::array<int, 4>, 3> split = {{
                {a, b, c, C},
                {a, b, C, Bt},
                {a, Bt, C, A},
            }};
            for (const auto& tet : split) {
                B.tets.row(t) << tet[0], tet[1], tet[2], tet[3];
                B.tet_surface_tri[t] = k;
                ++t;
            }
        }
    }

    B.volume.resize(B.num_tets());
    for (int k = 0; k < B.num_tets(); ++k) {
        Eigen::Vector3d p0 = B.nodes.row(B.tets(k, 0));
        Eigen::Matrix3d E;
        E.col(0) = Eigen::Vector3d(B.nodes.row(B.tets(k, 1))) - p0;
        E.col(1) = Eigen::Vector3d(B.nodes.row(B.tets(k, 2))) - p0;
        E.col(2) = Eigen::Vector3d(B.nodes.row(B.tets(k, 3))) - p0;
        double vol6 = E.determinant();
        if (vol6 < 0) {  // fix orientation, keep the splitting pattern
            std::swap(B.tets(k, 2), B.tets(k, 3));
            vol6 = -vol6;
        }
        assert(vol6 > 0 && "extrude_bulk_mesh: degenerate tet from prism splitting");
        if (!(vol6 > 0)) throw ModelError("extrude_bulk_mesh: degenerate tet");
        B.volume[k] = vol6 / 6.0;
    }
    return B;
}

}  // namespace thinlimit
