#include "thinlimit/fields.hpp"

#include <cmath>

namespace thinlimit {

BoundaryData BoundaryData::affine_data(const Matrix& A, const Vector& offset,
                                       const Vector& b_const) {
    BoundaryData bc;
    bc.n = static_cast<int>(A.rows());
    bc.affine = true;
    bc.A = A;
    bc.offset = offset;
    bc.b_const = b_const;
    bc.F_bc = [A, offset](const Vector& x) { return Vector(A * x + offset); };
    bc.b = [b_const](const Vector&) { return b_const; };
    return bc;
}

namespace {

Vector checked_eval(const std::function<Vector(const Vector&)>& f, const Vector& x,
                    const char* what) {
    Vector v = f(x);
    if (!v.allFinite())
        throw ModelError(std::string(what) + ": non-finite boundary value");
    return v;
}

}  // namespace

ConfigurationField apply_boundary_conditions(const SurfaceMesh& mesh, const BoundaryData& bc) {
    ConfigurationField F;
    F.n = bc.n;
    F.host = "surface";
    F.values = Matrix::Zero(mesh.num_nodes(), bc.n);
    F.fixed.assign(mesh.num_nodes(), false);
    for (int i = 0; i < mesh.num_nodes(); ++i) {
        Vector x = mesh.nodes.row(i);
        if (mesh.boundary_node[i]) {
            F.values.row(i) = checked_eval(bc.F_bc, x, "F_bc");
            F.fixed[i] = true;
        } else if (bc.affine) {
            F.values.row(i) = bc.A * x + bc.offset;
        }
    }
    return F;
}

ConfigurationField apply_boundary_conditions(const BulkMesh& mesh, const BoundaryData& bc) {
    ConfigurationField f;
    f.n = bc.n;
    f.host = "bulk";
    f.values = Matrix::Zero(mesh.num_nodes(), bc.n);
    f.fixed.assign(mesh.num_nodes(), false);
    for (int i = 0; i < mesh.num_nodes(); ++i) {
        Vector x = mesh.nodes.row(i).head(2);
        double z = mesh.nodes(i, 2);
        if (mesh.gamma_node[i]) {
            f.values.row(i) =
                checked_eval(bc.F_bc, x, "F_bc") + z * checked_eval(bc.b, x, "q_perp_bc");
            f.fixed[i] = true;
        } else if (bc.affine) {
            f.values.row(i) = bc.A * x + bc.offset + z * bc.b_const;
        }
    }
    return f;
}

}  // namespace thinlimit
