#include "thinlimit/envelope.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

namespace thinlimit {

namespace {

// Singular values of an n x m block (m <= 2), descending, via the closed-form
// eigenvalues of A^T A; cheap enough for the lamination hot loop.
inline void singular_values_nm(const Matrix& A, double& l1, double& l2) {
    if (A.cols() == 1) {
        l1 = A.norm();
        l2 = 0.0;
        return;
    }
    double g00 = A.col(0).squaredNorm();
    double g11 = A.col(1).squaredNorm();
    double g01 = A.col(0).dot(A.col(1));
    double mean = 0.5 * (g00 + g11);
    double disc = std::sqrt(std::max(0.0, 0.25 * (g00 - g11) * (g00 - g11) + g01 * g01));
    l1 = std::sqrt(std::max(0.0, mean + disc));
    l2 = std::sqrt(std::max(0.0, mean - disc));
}

double halton(int index, int base) {
    double f = 1.0, r = 0.0;
    while (index > 0) {
        f /= base;
        r += f * (index % base);
        index /= base;
    }
    return r;
}

struct RankOneDir {
    Vector a;  // unit in R^n
    Vector b;  // unit in R^m
};

// Canonical axis pairs first, then a low-discrepancy sequence on the
// product of unit spheres; fully determined by (seed, level).
std::vector<RankOneDir> direction_set(int n, int m, int count, uint64_t seed, int level) {
    std::vector<RankOneDir> dirs;
    for (int i = 0; i < n && static_cast<int>(dirs.size()) < count; ++i)
        for (int j = 0; j < m && static_cast<int>(dirs.size()) < count; ++j) {
            RankOneDir d;
            d.a = Vector::Unit(n, i);
            d.b = Vector::Unit(m, j);
            dirs.push_back(d);
        }
    int offset = static_cast<int>(seed % 997) + 101 * level + 1;
    int idx = offset;
    while (static_cast<int>(dirs.size()) < count) {
        RankOneDir d;
        if (n == 3) {
            double phi = 2.0 * M_PI * halton(idx, 2);
            double cpsi = 2.0 * halton(idx, 3) - 1.0;
            double spsi = std::sqrt(std::max(0.0, 1.0 - cpsi * cpsi));
            d.a = Vector(3);
            d.a << spsi * std::cos(phi), spsi * std::sin(phi), cpsi;
        } else {
            double phi = 2.0 * M_PI * halton(idx, 2);
            d.a = Vector(2);
            d.a << std::cos(phi), std::sin(phi);
        }
        if (m == 2) {
            double th = 2.0 * M_PI * halton(idx, 5);
            d.b = Vector(2);
            d.b << std::cos(th), std::sin(th);
        } else {
            d.b = Vector::Ones(1);
        }
        dirs.push_back(d);
        ++idx;
    }
    return dirs;
}

std::vector<double> geometric_amplitudes(const LaminationParams& P) {
    std::vector<double> s(P.n_s);
    double s_max = 2.0 * P.lambda_max;
    if (P.n_s == 1) {
        s[0] = s_max;
        return s;
    }
    double ratio = std::pow(s_max / P.s_min, 1.0 / (P.n_s - 1));
    double v = P.s_min;
    for (int i = 0; i < P.n_s; ++i, v *= ratio) s[i] = v;
    return s;
}

// W0 of the density on an arbitrary tangential block.
double w0_of(const DensitySpec& D, const Matrix& q2) {
    if (D.kind == DensityKind::dist2_so) return w0_closed_form(q2);
    Vector x0 = Vector::Constant(D.m_dim, 0.5);
    return fiber_minimize_W0(D, x0, q2).value;
}

class BilinearGrid {
public:
    BilinearGrid(const Matrix& vals, double lambda_max)
        : vals_(vals), n_(static_cast<int>(vals.cols())), lmax_(lambda_max),
          dx_((n_ > 1) ? lambda_max / (n_ - 1) : 1.0), one_d_(vals.rows() == 1) {}

    // (l1, l2) assumed sorted descending, both within [0, lambda_max].
    double operator()(double l1, double l2) const {
        if (one_d_) {
            auto [i, u] = locate(l1);
            return vals_(0, i) * (1 - u) + vals_(0, i + 1) * u;
        }
        auto [i, u] = locate(l1);
        auto [j, v] = locate(l2);
        return vals_(i, j) * (1 - u) * (1 - v) + vals_(i + 1, j) * u * (1 - v) +
               vals_(i, j + 1) * (1 - u) * v + vals_(i + 1, j + 1) * u * v;
    }

private:
    std::pair<int, double> locate(double l) const {
        double t = l / dx_;
        int i = std::min(static_cast<int>(t), n_ - 2);
        i = std::max(i, 0);
        return {i, t - i};
    }
    const Matrix& vals_;
    int n_;
    double lmax_;
    double dx_;
    bool one_d_;
};

struct SweepContext {
    std::vector<RankOneDir> dirs;
    std::vector<double> t_grid;
    std::vector<double> s_grid;
    bool exact_w0_fallback;  // dist2_so: evaluate W0 outside the grid
};

// One lamination candidate: split A into A + cplus a b^T and A - cminus a b^T.
// theta cplus = (1 - theta) cminus keeps A the barycenter.
inline double split_value(const SweepContext& ctx, const BilinearGrid& grid,
                          double lmax, const Matrix& A, const Vector& da,
                          const RankOneDir& dir, double cplus, double cminus) {
    auto level_eval = [&](double c) -> double {
        // Gram matrix of A + c a b^T for diagonal-embedded A.
        double l1, l2;
        if (A.cols() == 1) {
            double g00 = A.col(0).squaredNorm() + 2.0 * c * da[0] + c * c;
            l1 = std::sqrt(std::max(0.0, g00));
            l2 = 0.0;
        } else {
            double b0 = dir.b[0], b1 = dir.b[1];
            double g00 = A.col(0).squaredNorm() + 2.0 * c * da[0] * b0 + c * c * b0 * b0;
            double g11 = A.col(1).squaredNorm() + 2.0 * c * da[1] * b1 + c * c * b1 * b1;
            double g01 = c * (da[0] * b1 + da[1] * b0) + c * c * b0 * b1;
            double mean = 0.5 * (g00 + g11);
            double disc =
                std::sqrt(std::max(0.0, 0.25 * (g00 - g11) * (g00 - g11) + g01 * g01));
            l1 = std::sqrt(std::max(0.0, mean + disc));
            l2 = std::sqrt(std::max(0.0, mean - disc));
        }
        if (l1 > lmax) {
            if (!ctx.exact_w0_fallback) return std::numeric_limits<double>::infinity();
            return (l1 - 1.0) * (l1 - 1.0) + (A.cols() == 2 ? (l2 - 1.0) * (l2 - 1.0) : 0.0);
        }
        return grid(l1, l2);
    };
    double vp = level_eval(cplus);
    if (!std::isfinite(vp)) return vp;
    double vm = level_eval(-cminus);
    if (!std::isfinite(vm)) return vm;
    double theta = cminus / (cplus + cminus);
    return theta * vp + (1.0 - theta) * vm;
}

double node_update(const SweepContext& ctx, const BilinearGrid& grid, double lmax,
                   double current, const Matrix& A) {
    double best = current;
    for (const RankOneDir& dir : ctx.dirs) {
        Vector da = A.transpose() * dir.a;  // m-vector
        double align = (A.cols() == 2) ? da.dot(dir.b) : da[0];

        for (double t : ctx.t_grid)
            for (double s : ctx.s_grid) {
                double v = split_value(ctx, grid, lmax, A, da, dir, (1.0 - t) * s, t * s);
                best = std::min(best, v);
            }
        // Snap amplitudes move the rank-one component of A to +-1; paired
        // with each other and with the geometric grid they realize the
        // two-point laminates exactly on grid nodes.
        double snaps[2] = {std::abs(1.0 - align), std::abs(1.0 + align)};
        for (double cp : snaps)
            for (double cm : snaps)
                if (cp + cm > 1e-12)
                    best = std::min(best, split_value(ctx, grid, lmax, A, da, dir, cp, cm));
        for (double snap : snaps)
            for (double s : ctx.s_grid) {
                if (snap + s > 1e-12) {
                    best = std::min(best, split_value(ctx, grid, lmax, A, da, dir, snap, s));
                    best = std::min(best, split_value(ctx, grid, lmax, A, da, dir, s, snap));
                }
            }
    }
    return best;
}

Matrix embed_diag(int n, int m, double l1, double l2) {
    Matrix A = Matrix::Zero(n, m);
    A(0, 0) = l1;
    if (m == 2) A(1, 1) = l2;
    return A;
}

void parallel_rows(int rows, const std::function<void(int)>& body) {
    unsigned nt = std::max(1u, std::thread::hardware_concurrency());
    if (nt == 1 || rows < 4) {
        for (int i = 0; i < rows; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (unsigned t = 0; t < nt; ++t)
        pool.emplace_back([&]() {
            int i;
            while ((i = next.fetch_add(1)) < rows) body(i);
        });
    for (auto& th : pool) th.join();
}

Matrix smooth_table(const Matrix& V) {
    // One-cell binomial filter ([1 2 1]/4 per axis), edge-replicated.
    auto pass = [](const Matrix& in, bool along_cols) {
        Matrix out = in;
        int R = static_cast<int>(in.rows()), C = static_cast<int>(in.cols());
        for (int i = 0; i < R; ++i)
            for (int j = 0; j < C; ++j) {
                auto at = [&](int r, int c) {
                    r = std::clamp(r, 0, R - 1);
                    c = std::clamp(c, 0, C - 1);
                    return in(r, c);
                };
                out(i, j) = along_cols
                                ? 0.25 * at(i, j - 1) + 0.5 * at(i, j) + 0.25 * at(i, j + 1)
                                : 0.25 * at(i - 1, j) + 0.5 * at(i, j) + 0.25 * at(i + 1, j);
            }
        return out;
    };
    Matrix s = pass(V, true);
    if (V.rows() > 1) s = pass(s, false);
    return s;
}

////////////////////////////////////////////////////////////////////////////
// matrix_grid fallback for densities without frame indifference.
////////////////////////////////////////////////////////////////////////////

struct FlatGrid {
    int dims = 0;
    int axis_n = 0;
    double lo = 0, hi = 0;

    double axis_value(int i) const { return lo + (hi - lo) * i / (axis_n - 1); }
    size_t size() const {
        size_t s = 1;
        for (int d = 0; d < dims; ++d) s *= axis_n;
        return s;
    }
    void unflatten(size_t idx, std::vector<int>& coords) const {
        coords.resize(dims);
        for (int d = dims - 1; d >= 0; --d) {
            coords[d] = static_cast<int>(idx % axis_n);
            idx /= axis_n;
        }
    }
    double interp(const std::vector<double>& vals, const Matrix& A) const {
        double step = (hi - lo) / (axis_n - 1);
        std::vector<int> base(dims);
        std::vector<double> frac(dims);
        int k = 0;
        for (int i = 0; i < A.rows(); ++i)
            for (int j = 0; j < A.cols(); ++j, ++k) {
                double t = (A(i, j) - lo) / step;
                if (t < 0 || t > axis_n - 1) return std::numeric_limits<double>::infinity();
                int c = std::min(static_cast<int>(t), axis_n - 2);
                base[k] = c;
                frac[k] = t - c;
            }
        double total = 0;
        for (int corner = 0; corner < (1 << dims); ++corner) {
            double w = 1;
            size_t idx = 0;
            for (int d = 0; d < dims; ++d) {
                int bit = (corner >> d) & 1;
                w *= bit ? frac[d] : 1.0 - frac[d];
                idx = idx * axis_n + base[d] + bit;
            }
            total += w * vals[idx];
        }
        return total;
    }
};

}  // namespace

double EnvelopeTable::eval_at_singular_values(double l1, double l2,
                                              const Matrix& table) const {
    if (l1 < l2) std::swap(l1, l2);
    return BilinearGrid(table, lambda_max)(l1, l2);
}

EnvelopeEval EnvelopeTable::eval(const Matrix& A) const {
    EnvelopeEval out;
    if (mode == Mode::matrix_grid) {
        FlatGrid fg{static_cast<int>(A.size()), axis_n, -lambda_max, lambda_max};
        Matrix Ac = A.cwiseMax(-lambda_max).cwiseMin(lambda_max);
        out.clamped = (Ac - A).norm() > 0;
        out.value = fg.interp(flat_values, Ac);
        return out;
    }
    Eigen::JacobiSVD<Matrix> svd(A);
    double l1 = svd.singularValues()[0];
    double l2 = (A.cols() == 2) ? svd.singularValues()[1] : 0.0;
    if (l1 > lambda_max || l2 > lambda_max) out.clamped = true;
    l1 = std::clamp(l1, 0.0, lambda_max);
    l2 = std::clamp(l2, 0.0, lambda_max);
    out.value = eval_at_singular_values(l1, l2, values);
    return out;
}

EnvelopeEval EnvelopeTable::eval_with_gradient(const Matrix& table, const Matrix& A,
                                               Matrix* dA) const {
    if (mode != Mode::singular_value)
        throw UsageError("eval_with_gradient: singular_value mode only");
    Eigen::JacobiSVD<Matrix> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const int m = static_cast<int>(A.cols());
    double l1 = svd.singularValues()[0];
    double l2 = (m == 2) ? svd.singularValues()[1] : 0.0;

    EnvelopeEval out;
    double dx = grid_spacing();
    BilinearGrid grid(table, lambda_max);

    // Linear extension beyond the grid keeps value and gradient consistent
    // for the optimizer; the clamp is still flagged.
    auto clamped_1d = [&](double l) {
        if (l > lambda_max) {
            out.clamped = true;
            return lambda_max;
        }
        return l;
    };
    double c1 = clamped_1d(l1), c2 = clamped_1d(l2);
    bool swap = c1 < c2;
    if (swap) std::swap(c1, c2);

    auto value_at = [&](double a, double b) {
        if (a < b) std::swap(a, b);
        return grid(std::clamp(a, 0.0, lambda_max), std::clamp(b, 0.0, lambda_max));
    };
    double base = grid(c1, c2);
    // Grid-spacing finite differences of the node values = exact in-cell
    // slopes of the bilinear interpolant.
    auto slope = [&](double a, double b, bool first) {
        double lo = first ? a - 0.5 * dx : b - 0.5 * dx;
        double hi = lo + dx;
        lo = std::max(lo, 0.0);
        hi = std::min(hi, lambda_max);
        if (hi - lo < 1e-14) return 0.0;
        double vlo = first ? value_at(lo, b) : value_at(a, lo);
        double vhi = first ? value_at(hi, b) : value_at(a, hi);
        return (vhi - vlo) / (hi - lo);
    };
    double s1 = slope(c1, c2, true);
    double s2 = (m == 2) ? slope(c1, c2, false) : 0.0;
    if (swap) std::swap(s1, s2);

    out.value = base + (l1 > lambda_max ? s1 * (l1 - lambda_max) : 0.0) +
                (l2 > lambda_max ? s2 * (l2 - lambda_max) : 0.0);
    if (dA) {
        if (m == 2 && std::abs(l1 - l2) < 1e-12) {
            double avg = 0.5 * (s1 + s2);
            s1 = s2 = avg;  // symmetric subgradient at repeated singular values
        }
        Matrix U = svd.matrixU();
        Matrix V = svd.matrixV();
        *dA = s1 * U.col(0) * V.col(0).transpose();
        if (m == 2) *dA += s2 * U.col(1) * V.col(1).transpose();
    }
    return out;
}

EnvelopeEval EnvelopeTable::eval_smoothed(const Matrix& A, Matrix* dA) const {
    return eval_with_gradient(smoothed, A, dA);
}

EnvelopeEval eval_envelope(const EnvelopeTable& T, const Matrix& A) { return T.eval(A); }

namespace {

EnvelopeTable build_singular_value_table(const DensitySpec& D, const LaminationParams& P,
                                         std::vector<EnvelopeTable>* snapshots) {
    EnvelopeTable T;
    T.mode = EnvelopeTable::Mode::singular_value;
    T.m_dim = D.m_dim;
    T.n_dim = D.n_dim;
    T.lambda_max = P.lambda_max;
    T.grid_n = P.grid_n;
    T.params = P;
    T.density_id = D.id();

    const int rows = (D.m_dim == 2) ? P.grid_n : 1;
    T.w0_values = Matrix(rows, P.grid_n);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < P.grid_n; ++j) {
            double l1 = T.node_lambda((D.m_dim == 2) ? i : j);
            double l2 = (D.m_dim == 2) ? T.node_lambda(j) : 0.0;
            T.w0_values(i, j) = w0_of(D, embed_diag(D.n_dim, D.m_dim, l1, l2));
        }
    T.values = T.w0_values;

    SweepContext ctx;
    ctx.s_grid = geometric_amplitudes(P);
    for (int k = 1; k <= P.n_t; ++k) ctx.t_grid.push_back(double(k) / (P.n_t + 1));
    ctx.exact_w0_fallback = (D.kind == DensityKind::dist2_so);

    for (int level = 1; level <= P.depth; ++level) {
        ctx.dirs = direction_set(D.n_dim, D.m_dim, P.n_directions, P.seed, level);
        Matrix prev = T.values;
        BilinearGrid grid(prev, P.lambda_max);
        Matrix next = prev;
        parallel_rows(rows, [&](int i) {
            for (int j = 0; j < P.grid_n; ++j) {
                double l1 = T.node_lambda((D.m_dim == 2) ? i : j);
                double l2 = (D.m_dim == 2) ? T.node_lambda(j) : 0.0;
                Matrix A = embed_diag(D.n_dim, D.m_dim, l1, l2);
                next(i, j) = node_update(ctx, grid, P.lambda_max, prev(i, j), A);
            }
        });
        if (D.m_dim == 2) next = (0.5 * (next + next.transpose())).eval();
        T.values = next;
        if (snapshots) {
            EnvelopeTable snap = T;
            snap.params.depth = level;
            snap.smoothed = smooth_table(snap.values);
            snapshots->push_back(std::move(snap));
        }
    }
    T.smoothed = smooth_table(T.values);
    return T;
}

EnvelopeTable build_matrix_grid_table(const DensitySpec& D, const LaminationParams& P) {
    const int dims = D.m_dim * D.n_dim;
    if (dims > 6)
        throw UsageError(
            "build_envelope_table: matrix_grid capacity exceeded (m*n > 6); "
            "evaluate the lamination on demand instead");
    EnvelopeTable T;
    T.mode = EnvelopeTable::Mode::matrix_grid;
    T.m_dim = D.m_dim;
    T.n_dim = D.n_dim;
    T.lambda_max = P.lambda_max;
    T.grid_n = P.grid_n;
    T.params = P;
    T.density_id = D.id();
    T.axis_n = dims <= 2 ? 41 : (dims <= 4 ? 11 : 7);

    FlatGrid fg{dims, T.axis_n, -P.lambda_max, P.lambda_max};
    const size_t total = fg.size();
    T.flat_w0.resize(total);
    std::vector<int> coords;
    std::vector<Matrix> node_mats(total);
    for (size_t idx = 0; idx < total; ++idx) {
        fg.unflatten(idx, coords);
        Matrix A(D.n_dim, D.m_dim);
        int k = 0;
        for (int i = 0; i < D.n_dim; ++i)
            for (int j = 0; j < D.m_dim; ++j, ++k) A(i, j) = fg.axis_value(coords[k]);
        node_mats[idx] = A;
        T.flat_w0[idx] = w0_of(D, A);
    }
    T.flat_values = T.flat_w0;

    int n_dirs = std::min(P.n_directions, dims <= 2 ? P.n_directions : 8);
    int n_t = std::min(P.n_t, dims <= 2 ? P.n_t : 5);
    LaminationParams Ps = P;
    Ps.n_s = std::min(P.n_s, dims <= 2 ? P.n_s : 6);
    auto s_grid = geometric_amplitudes(Ps);
    std::vector<double> t_grid;
    for (int k = 1; k <= n_t; ++k) t_grid.push_back(double(k) / (n_t + 1));

    for (int level = 1; level <= P.depth; ++level) {
        auto dirs = direction_set(D.n_dim, D.m_dim, n_dirs, P.seed, level);
        std::vector<double> prev = T.flat_values;
        std::vector<double> next = prev;
        parallel_rows(static_cast<int>(total), [&](int idx) {
            const Matrix& A = node_mats[idx];
            double best = prev[idx];
            for (const auto& dir : dirs) {
                Matrix rank1 = dir.a * dir.b.transpose();
                double align = dir.a.dot(A * dir.b);
                auto candidate = [&](double cp, double cm) {
                    if (cp + cm < 1e-12) return;
                    double vp = fg.interp(prev, A + cp * rank1);
                    double vm = fg.interp(prev, A - cm * rank1);
                    if (!std::isfinite(vp) || !std::isfinite(vm)) return;
                    double theta = cm / (cp + cm);
                    best = std::min(best, theta * vp + (1.0 - theta) * vm);
                };
                for (double t : t_grid)
                    for (double s : s_grid) candidate((1.0 - t) * s, t * s);
                double snaps[2] = {std::abs(1.0 - align), std::abs(1.0 + align)};
                for (double cp : snaps)
                    for (double cm : snaps) candidate(cp, cm);
            }
            next[idx] = best;
        });
        T.flat_values = next;
    }
    return T;
}

}  // namespace

EnvelopeTable build_envelope_table(const DensitySpec& D, const LaminationParams& P) {
    P.validate();
    if (D.frame_indifferent) return build_singular_value_table(D, P, nullptr);
    return build_matrix_grid_table(D, P);
}

std::vector<EnvelopeTable> build_envelope_table_depths(const DensitySpec& D,
                                                       const LaminationParams& P) {
    P.validate();
    if (!D.frame_indifferent)
        throw UsageError("build_envelope_table_depths: singular_value mode only");
    std::vector<EnvelopeTable> snaps;
    build_singular_value_table(D, P, &snaps);
    return snaps;
}

double lamination_envelope(const DensitySpec& D, const Matrix& A, const LaminationParams& P) {
    EnvelopeTable T = build_envelope_table(D, P);
    double interp = T.eval(A).value;
    double w0 = w0_of(D, A);
    return std::min(w0, interp);
}

}  // namespace thinlimit
