#pragma once

#include <Eigen/Dense>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace thinlimit {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Error taxonomy shared by all modules. The CLI maps these onto its
// exit-code contract (2 = config, 3 = numeric, 4 = verification).
struct DomainError : std::runtime_error { using std::runtime_error::runtime_error; };
struct ModelError  : std::runtime_error { using std::runtime_error::runtime_error; };
struct NumericError : std::runtime_error { using std::runtime_error::runtime_error; };
struct UsageError  : std::runtime_error { using std::runtime_error::runtime_error; };
struct ConfigError : std::runtime_error {
    ConfigError(const std::string& field_path, const std::string& what)
        : std::runtime_error(field_path + ": " + what), field(field_path) {}
    std::string field;
};

// Axis-aligned box in R^m (m = 1 or 2); the chart domain of the mid-surface.
struct Rect {
    Vector lo, hi;

    static Rect unit_square() {
        Rect r;
        r.lo = Vector::Zero(2);
        r.hi = Vector::Ones(2);
        return r;
    }
    static Rect unit_interval() {
        Rect r;
        r.lo = Vector::Zero(1);
        r.hi = Vector::Ones(1);
        return r;
    }

    int dim() const { return static_cast<int>(lo.size()); }
    bool contains(const Vector& x, double pad = 1e-12) const {
        if (x.size() != lo.size()) return false;
        for (int i = 0; i < x.size(); ++i)
            if (x[i] < lo[i] - pad || x[i] > hi[i] + pad) return false;
        return true;
    }
    double extent(int axis) const { return hi[axis] - lo[axis]; }
};

using Rng = std::mt19937_64;

inline Vector random_unit_vector(Rng& rng, int dim) {
    std::normal_distribution<double> nd(0.0, 1.0);
    Vector v(dim);
    do {
        for (int i = 0; i < dim; ++i) v[i] = nd(rng);
    } while (v.norm() < 1e-12);
    return v / v.norm();
}

// Gaussian-direction matrix scaled to a uniform draw from the Frobenius
// ball of the given radius (radius ~ R * u^{1/d}).
inline Matrix random_matrix_in_ball(Rng& rng, int rows, int cols, double radius) {
    std::normal_distribution<double> nd(0.0, 1.0);
    std::uniform_real_distribution<double> ud(0.0, 1.0);
    Matrix q(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) q(i, j) = nd(rng);
    double norm = q.norm();
    if (norm < 1e-14) return Matrix::Zero(rows, cols);
    double r = radius * std::pow(ud(rng), 1.0 / (rows * cols));
    return q * (r / norm);
}

// Least-squares slope of log(q) vs log(h); the observed convergence order.
// Values at or below `floor` are treated as exact zeros (flat-metric case)
// and excluded; if fewer than two usable points remain, returns +inf.
double fit_observed_order(const std::vector<double>& h, const std::vector<double>& q,
                          double floor = 1e-13);

// Gauss-Legendre nodes/weights on [a, b].
void gauss_legendre(int n, double a, double b,
                    std::vector<double>& nodes, std::vector<double>& weights);

}  // namespace thinlimit
