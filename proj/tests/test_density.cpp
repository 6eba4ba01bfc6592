#include "doctest.h"

#include <cmath>

#include "thinlimit/density.hpp"

using namespace thinlimit;

namespace {

Vector pt(double a, double b) {
    Vector x(2);
    x << a, b;
    return x;
}

Matrix rotation_zyx(double a, double b, double c) {
    Eigen::Matrix3d R;
    R = Eigen::AngleAxisd(a, Eigen::Vector3d::UnitZ()) *
        Eigen::AngleAxisd(b, Eigen::Vector3d::UnitY()) *
        Eigen::AngleAxisd(c, Eigen::Vector3d::UnitX());
    return R;
}

// Dense minimization oracle: sample SO(3) (Euler grid), then refine with the
// polar-style local projection around the best sample.
double dist2_so3_oracle(const Matrix& Q) {
    double best = std::numeric_limits<double>::infinity();
    const int N = 24;
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N / 2 + 1; ++j)
            for (int k = 0; k < N; ++k) {
                Matrix R = rotation_zyx(2 * M_PI * i / N, M_PI * j / (N / 2),
                                        2 * M_PI * k / N);
                best = std::min(best, (Q - R).squaredNorm());
            }
    return best;
}

}  // namespace

TEST_CASE("dist2_so: identity, scaled identity, reflection") {
    CHECK(dist2_so(Matrix::Identity(3, 3)) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(dist2_so(2.0 * Matrix::Identity(3, 3)) == doctest::Approx(3.0).epsilon(1e-12));
    Matrix refl = Matrix::Identity(3, 3);
    refl(2, 2) = -1.0;
    CHECK(dist2_so(refl) == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("dist2_so agrees with the rotation-sampling oracle") {
    Rng rng(99);
    for (int trial = 0; trial < 4; ++trial) {
        Matrix Q = random_matrix_in_ball(rng, 3, 3, 2.5);
        double oracle = dist2_so3_oracle(Q);
        double fast = dist2_so(Q);
        CHECK(fast <= oracle + 1e-9);    // oracle is an upper bound by sampling
        CHECK(fast >= oracle - 5e-2);    // sampling resolution slack
    }
}

TEST_CASE("dist2_so is left rotation invariant") {
    Rng rng(7);
    std::uniform_real_distribution<double> ud(0, 2 * M_PI);
    for (int trial = 0; trial < 50; ++trial) {
        Matrix Q = random_matrix_in_ball(rng, 3, 3, 4.0);
        Matrix R = rotation_zyx(ud(rng), ud(rng), ud(rng));
        CHECK(std::abs(dist2_so(R * Q) - dist2_so(Q)) < 1e-9);
    }
}

TEST_CASE("dist2_so gradient matches finite differences") {
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        Matrix Q = random_matrix_in_ball(rng, 3, 3, 3.0);
        if (std::abs(Q.determinant()) < 1e-3) continue;
        Matrix g = dist2_so_gradient(Q);
        double step = 1e-6;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                Matrix Qp = Q, Qm = Q;
                Qp(i, j) += step;
                Qm(i, j) -= step;
                double fd = (dist2_so(Qp) - dist2_so(Qm)) / (2 * step);
                CHECK(g(i, j) == doctest::Approx(fd).epsilon(1e-5).scale(1.0));
            }
    }
}

TEST_CASE("eval_W_on_S: values and frame independence") {
    DensitySpec D = DensitySpec::dist2_so_proto(2);
    MetricField M = MetricField::flat(2);
    Vector x = pt(0.5, 0.5);

    CHECK(eval_W_on_S(D, M, x, Matrix::Identity(3, 3)) == doctest::Approx(0.0));
    Matrix Q = Matrix::Identity(3, 3);
    Q(0, 0) = 1.2;
    CHECK(eval_W_on_S(D, M, x, Q) == doctest::Approx(0.04).epsilon(1e-12));

    // Frobenius norm is invariant under orthonormal frame changes, so the
    // value is too: right-multiply by a random rotation.
    Rng rng(3);
    std::uniform_real_distribution<double> ud(0, 2 * M_PI);
    Matrix R = rotation_zyx(ud(rng), ud(rng), ud(rng));
    CHECK(std::abs(eval_W_on_S(D, M, x, Q * R) - eval_W_on_S(D, M, x, Q)) < 1e-12);
}

TEST_CASE("eval_W_bulk: z = 0 and flat metrics make both modes coincide") {
    DensitySpec D = DensitySpec::dist2_so_proto(2);
    MetricField flat = MetricField::flat(2);
    Vector x = pt(0.3, 0.6);
    Rng rng(21);
    Matrix q = random_matrix_in_ball(rng, 3, 3, 2.0);

    double t0 = eval_W_bulk(D, flat, x, 0.0, q, FrameKind::transported);
    double s0 = eval_W_bulk(D, flat, x, 0.0, q, FrameKind::split);
    CHECK(t0 == doctest::Approx(s0).epsilon(1e-13));
    CHECK(t0 == doctest::Approx(eval_W_on_S(D, flat, x, q)).epsilon(1e-13));

    for (double z : {-0.3, 0.2}) {
        double tz = eval_W_bulk(D, flat, x, z, q, FrameKind::transported);
        double sz = eval_W_bulk(D, flat, x, z, q, FrameKind::split);
        CHECK(tz == doctest::Approx(sz).epsilon(1e-12));
    }
}

TEST_CASE("eval_W_bulk: transported vs split differ by O(h(1+|q|^p)) on the cap") {
    DensitySpec D = DensitySpec::dist2_so_proto(2);
    MetricField cap = MetricField::spherical_cap(2.0);
    Rng rng(31);
    double worst_const = 0;
    std::vector<double> consts;
    for (double h : {0.2, 0.1, 0.05}) {
        double c_h = 0;
        Rng local(31);
        for (int i = 0; i < 40; ++i) {
            Vector x = pt(0.2 + 0.6 * (i % 5) / 4.0, 0.2 + 0.6 * (i / 5 % 5) / 4.0);
            Matrix q = random_matrix_in_ball(local, 3, 3, 3.0);
            double dt = std::abs(eval_W_bulk(D, cap, x, h, q, FrameKind::transported) -
                                 eval_W_bulk(D, cap, x, h, q, FrameKind::split));
            c_h = std::max(c_h, dt / (h * (1.0 + std::pow(q.norm(), D.p))));
        }
        consts.push_back(c_h);
        worst_const = std::max(worst_const, c_h);
    }
    // the normalized constant stays bounded as h halves (no blow-up)
    CHECK(consts[1] < 2.0 * consts[0] + 1e-12);
    CHECK(consts[2] < 2.0 * consts[0] + 1e-12);
    CHECK(worst_const < 10.0);
}

TEST_CASE("fiber_minimize_W0: fast path values and minimizers") {
    DensitySpec D = DensitySpec::dist2_so_proto(2);
    MetricField M = MetricField::flat(2);
    Vector x = pt(0.5, 0.5);

    Matrix iso(3, 2);
    iso << 1, 0, 0, 1, 0, 0;
    FiberMinimum f1 = fiber_minimize_W0(D, M, x, iso);
    CHECK(f1.value == doctest::Approx(0.0).epsilon(1e-14));
    CHECK((f1.r - Vector(Eigen::Vector3d(0, 0, 1))).norm() < 1e-12);

    Matrix stretched(3, 2);
    stretched << 2, 0, 0, 1, 0, 0;
    CHECK(fiber_minimize_W0(D, M, x, stretched).value == doctest::Approx(1.0).epsilon(1e-12));

    FiberMinimum f0 = fiber_minimize_W0(D, M, x, Matrix::Zero(3, 2));
    CHECK(f0.value == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(f0.r.norm() == doctest::Approx(1.0).epsilon(1e-12));

    // completed matrix has nonnegative determinant
    Rng rng(5);
    for (int i = 0; i < 30; ++i) {
        Matrix q2 = random_matrix_in_ball(rng, 3, 2, 4.0);
        FiberMinimum fm = fiber_minimize_W0(D, M, x, q2);
        Matrix full(3, 3);
        full.leftCols(2) = q2;
        full.col(2) = fm.r;
        CHECK(full.determinant() >= -1e-12);
    }
}

TEST_CASE("fiber_minimize_W0: generic quasi-Newton path agrees with the closed form") {
    DensitySpec D = DensitySpec::dist2_so_proto(2);
    Vector x = pt(0.5, 0.5);
    FiberMinimizeOptions opts;
    opts.use_fast_path = false;
    Rng rng(13);
    for (int i = 0; i < 50; ++i) {
        Matrix q2 = random_matrix_in_ball(rng, 3, 2, 5.0);
        double generic = fiber_minimize_W0(D, x, q2, opts).value;
        CHECK(std::abs(generic - w0_closed_form(q2)) < 1e-8);
    }
    // 1-d oracle at q2 = 0: min over |r| of (|r| - 1)^2 + 2 is 2 at |r| = 1
    double z = fiber_minimize_W0(D, x, Matrix::Zero(3, 2), opts).value;
    CHECK(z == doctest::Approx(2.0).epsilon(1e-8));
}

TEST_CASE("fiber_minimize_W0: custom density generic path") {
    // anisotropic quadratic: W(Q) = |Q - I|^2 has W0(q2) = |q2 - I_tan|^2,
    // attained at r = e_3.
    auto W = [](const Vector&, const Matrix& Q) {
        return (Q - Matrix::Identity(3, 3)).squaredNorm();
    };
    DensitySpec D = DensitySpec::custom(W, 2, 2.0, 0.5, 3.0, 4.0, false);
    Vector x = pt(0.5, 0.5);
    Rng rng(17);
    for (int i = 0; i < 10; ++i) {
        Matrix q2 = random_matrix_in_ball(rng, 3, 2, 3.0);
        Matrix expected_arg = Matrix::Identity(3, 3);
        double expected = (q2 - expected_arg.leftCols(2)).squaredNorm();
        FiberMinimum fm = fiber_minimize_W0(D, x, q2);
        CHECK(fm.value == doctest::Approx(expected).epsilon(1e-7));
        CHECK((fm.r - Vector(Eigen::Vector3d(0, 0, 1))).norm() < 1e-4);
    }
}

TEST_CASE("W|_S dominates W0 of the tangential block") {
    DensitySpec D = DensitySpec::dist2_so_proto(2);
    Vector x = pt(0.5, 0.5);
    Rng rng(23);
    for (int i = 0; i < 500; ++i) {
        Matrix Q = random_matrix_in_ball(rng, 3, 3, 6.0);
        CHECK(eval_W_on_S(D, x, Q) >= w0_closed_form(Q.leftCols(2)) - 1e-12);
    }
}

TEST_CASE("verify_density_conditions: prototype passes, alpha = 1.5 fails") {
    DensitySpec D = DensitySpec::dist2_so_proto(2);
    DensityConditionsReport rep = verify_density_conditions(D, 2000, 424242);
    CHECK(rep.pass);
    CHECK(rep.growth_ok);
    CHECK(rep.coercivity_ok);
    CHECK(rep.lipschitz_ok);
    CHECK(rep.C_growth_emp <= D.C);
    CHECK(rep.alpha_emp >= D.alpha);
    CHECK(std::isfinite(rep.C0_growth_emp));
    CHECK(rep.alpha0_emp > 0);

    DensitySpec bad = D;
    bad.alpha = 1.5;
    DensityConditionsReport rep2 = verify_density_conditions(bad, 2000, 424242);
    CHECK_FALSE(rep2.pass);
    CHECK_FALSE(rep2.coercivity_ok);
    CHECK(!rep2.witness.empty());

    // explicit witness near -identity: W(-2 I) < 1.5 |q|^2 - 3
    Matrix w = -2.0 * Matrix::Identity(3, 3);
    CHECK(dist2_so(w) < bad.alpha * w.squaredNorm() - bad.beta);

    CHECK_THROWS_AS(verify_density_conditions(D, 10, 1), UsageError);
}

TEST_CASE("W0 continuity proxy: Lipschitz bound from the declared constants") {
    DensitySpec D = DensitySpec::dist2_so_proto(2);
    Rng rng(29);
    for (int i = 0; i < 200; ++i) {
        Matrix q2 = random_matrix_in_ball(rng, 3, 2, 4.0);
        Matrix delta = random_matrix_in_ball(rng, 3, 2, 1.0);
        delta /= delta.norm();
        double eps = 1e-4;
        double lhs = std::abs(w0_closed_form(q2 + eps * delta) - w0_closed_form(q2));
        // |W0(q+e) - W0(q)| <= 2 (|q| + sqrt(2) + e) e for the prototype
        double L = 2.0 * (q2.norm() + std::sqrt(2.0) + eps);
        CHECK(lhs <= L * eps + 1e-12);
    }
}
