#include "doctest.h"

#include <cmath>

#include "thinlimit/diagnostics.hpp"

using namespace thinlimit;

namespace {

Vector pt(double a, double b) {
    Vector x(2);
    x << a, b;
    return x;
}

}  // namespace

TEST_CASE("eval_metric assembles the Fermi block form") {
    MetricField flat = MetricField::flat(2);
    Matrix g = eval_metric(flat, pt(0.3, 0.7), 0.2);
    CHECK((g - Matrix::Identity(3, 3)).norm() == doctest::Approx(0).epsilon(1e-14));

    // custom polynomial: g_tan = (1 + z)^2 I at z = 0.5 -> diag(2.25, 2.25, 1)
    MetricField poly = MetricField::custom_poly(1.0, Vector::Zero(2), 1.0);
    Matrix gp = eval_metric(poly, pt(0.5, 0.5), 0.5);
    CHECK(gp(0, 0) == doctest::Approx(2.25).epsilon(1e-14));
    CHECK(gp(1, 1) == doctest::Approx(2.25).epsilon(1e-14));
    CHECK(gp(2, 2) == doctest::Approx(1.0));
    CHECK(gp(0, 1) == 0.0);
    CHECK(gp(0, 2) == 0.0);

    MetricField cap = MetricField::spherical_cap(2.0);
    Matrix gc = eval_metric(cap, pt(0.3, 0.4), 0.0);
    Matrix gs = eval_g_tan(cap, pt(0.3, 0.4), 0.0);
    CHECK((gc.topLeftCorner(2, 2) - gs).norm() == 0.0);

    CHECK_THROWS_AS(eval_metric(flat, pt(2.0, 0.0), 0.0), DomainError);
    CHECK_THROWS_AS(eval_metric(flat, pt(0.5, 0.5), 5.0), DomainError);
}

TEST_CASE("metric rejects non-SPD tangential blocks") {
    MetricField bad = MetricField::flat(2);
    bad.g_tan = [](const Vector&, double) {
        Matrix g(2, 2);
        g << 1, 0, 0, -1;
        return g;
    };
    CHECK_THROWS_AS(eval_metric(bad, pt(0.5, 0.5), 0.0), ModelError);
}

TEST_CASE("christoffel: flat metric vanishes, exponential metric matches symbols") {
    MetricField flat = MetricField::flat(2);
    auto gamma = christoffel(flat, pt(0.5, 0.5), 0.1);
    for (const Matrix& G : gamma) CHECK(G.norm() == doctest::Approx(0).epsilon(1e-14));

    // g_tan = e^{2z} I: Gamma^x_{xz} = 1, Gamma^z_{xx} = -e^{2z}.
    MetricField expm = MetricField::exponential_growth(1.0);
    double z = 0.15;
    auto ge = christoffel(expm, pt(0.4, 0.6), z);
    CHECK(ge[0](0, 2) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(ge[0](2, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(ge[1](1, 2) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(ge[2](0, 0) == doctest::Approx(-std::exp(2.0 * z)).epsilon(1e-12));
    // symmetry in the lower indices is exact
    for (const Matrix& G : ge) CHECK((G - G.transpose()).norm() == 0.0);
}

TEST_CASE("christoffel: finite-difference mode agrees with analytic at O(delta^2)") {
    MetricField cap = MetricField::spherical_cap(2.0);
    MetricField cap_fd = cap;
    cap_fd.g_tan_deriv = nullptr;  // force central differences

    Vector x = pt(0.35, 0.55);
    double z = 0.12;
    auto exact = christoffel(cap, x, z);

    // Richardson check: halving the step shrinks the error ~4x.
    auto err_at = [&](double step) {
        MetricField m = cap_fd;
        m.fd_step = step;
        auto fd = christoffel(m, x, z);
        double e = 0;
        for (size_t a = 0; a < fd.size(); ++a)
            e = std::max(e, (fd[a] - exact[a]).cwiseAbs().maxCoeff());
        return e;
    };
    double e1 = err_at(1e-3);
    double e2 = err_at(5e-4);
    CHECK(e1 < 1e-5);
    CHECK(e2 < e1 / 2.5);

    // default step: tight agreement
    CHECK(err_at(1e-5) < 1e-9);
}

TEST_CASE("transport_normal: flat identity and isometry") {
    MetricField flat = MetricField::flat(2);
    AdaptedFrame f = transport_normal(flat, pt(0.2, 0.8), 0.3);
    CHECK((f.columns - Matrix::Identity(3, 3)).norm() == doctest::Approx(0).epsilon(1e-13));

    MetricField cap = MetricField::spherical_cap(2.0);
    for (double z : {-0.2, -0.05, 0.1, 0.2}) {
        AdaptedFrame g = transport_normal(cap, pt(0.6, 0.3), z);
        Matrix gram = frame_gram(cap, g);
        CHECK((gram - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("transport_normal: (1-z)^2 metric scales chart components by 1/(1-z)") {
    // g_tan = (1 - z)^2 I; transported tangent vectors scale like 1/(1 - z)
    // while their g-norm stays 1.
    MetricField m = MetricField::custom_poly(1.0, Vector::Zero(2), -1.0);
    Vector x = pt(0.5, 0.5);
    double z = 0.5;
    AdaptedFrame f = transport_normal(m, x, z);
    CHECK(f.columns(0, 0) == doctest::Approx(2.0).epsilon(1e-7));
    CHECK(f.columns(1, 1) == doctest::Approx(2.0).epsilon(1e-7));
    CHECK(f.columns(2, 2) == doctest::Approx(1.0).epsilon(1e-12));

    // high-accuracy oracle: 10x finer fixed steps
    AdaptedFrame fine = transport_normal_steps(m, x, z, 640);
    CHECK((f.columns - fine.columns).cwiseAbs().maxCoeff() < 1e-7);
}

TEST_CASE("split_frame: flat coincides with transport; any metric at z=0") {
    MetricField flat = MetricField::flat(2);
    AdaptedFrame s = split_frame(flat, pt(0.3, 0.3), 0.25);
    AdaptedFrame t = transport_normal(flat, pt(0.3, 0.3), 0.25);
    CHECK((s.columns - t.columns).norm() == doctest::Approx(0).epsilon(1e-13));

    MetricField cap = MetricField::spherical_cap(1.5);
    AdaptedFrame s0 = split_frame(cap, pt(0.4, 0.2), 0.0);
    AdaptedFrame t0 = transport_normal(cap, pt(0.4, 0.2), 0.0);
    CHECK((s0.columns - t0.columns).norm() == doctest::Approx(0).epsilon(1e-13));

    // split frame normal leg has no tangential chart components
    AdaptedFrame sz = split_frame(cap, pt(0.4, 0.2), 0.2);
    CHECK(sz.columns(0, 2) == 0.0);
    CHECK(sz.columns(1, 2) == 0.0);
    CHECK(sz.columns(2, 2) == 1.0);
}

TEST_CASE("volume_density: trivial values and fiber integral") {
    MetricField flat = MetricField::flat(2);
    auto [vf, vf0] = volume_density(flat, pt(0.1, 0.9), 0.3);
    CHECK(vf == doctest::Approx(1.0));
    CHECK(vf0 == doctest::Approx(1.0));

    MetricField poly = MetricField::custom_poly(1.0, Vector::Zero(2), 1.0);
    auto [vp, vp0] = volume_density(poly, pt(0.5, 0.5), 0.1);
    CHECK(vp == doctest::Approx(1.21).epsilon(1e-12));
    CHECK(vp0 == doctest::Approx(1.0).epsilon(1e-12));

    // fiber integral of the approximating density is exactly 2 h sqrt(det g|_S)
    double h = 0.2;
    double area = surface_area(flat);
    CHECK(bulk_volume(MetricField::flat(2), h) ==
          doctest::Approx(2.0 * h * area).epsilon(1e-12));
}

TEST_CASE("geometry_diagnostics: flat metric has vanishing deviations") {
    MetricField flat = MetricField::flat(2);
    DiagnosticsOptions opts;
    opts.chart_samples = 8;
    auto rep = geometry_diagnostics(flat, {0.2, 0.1}, opts);
    for (const auto& r : rep.rows) {
        CHECK(r.frame_deviation < 1e-11);
        CHECK(r.metric_deviation < 1e-11);
        CHECK(r.volume_deviation < 1e-11);
        CHECK(r.rescale_error < 1e-11);
    }
}

TEST_CASE("geometry_diagnostics: cap metric first-order rates") {
    MetricField cap = MetricField::spherical_cap(2.0);
    DiagnosticsOptions opts;
    opts.chart_samples = 10;
    auto rep = geometry_diagnostics(cap, {0.2, 0.1, 0.05}, opts);
    CHECK(rep.order_frame >= 0.9);
    CHECK(rep.order_metric >= 0.9);
    CHECK(rep.order_volume >= 0.9);
    CHECK(rep.order_rescale >= 0.9);

    // (sigma+iota - Pi) deviation for the conformal cap is exactly h/R
    for (const auto& r : rep.rows)
        CHECK(r.frame_deviation == doctest::Approx(r.h / 2.0).epsilon(1e-6));

    // halving-ratio window around order 1 for the frame deviation
    double ratio = rep.rows[1].frame_deviation / rep.rows[0].frame_deviation;
    CHECK(ratio > 0.35);
    CHECK(ratio < 0.65);

    CHECK_THROWS_AS(geometry_diagnostics(cap, {0.2}, opts), UsageError);
}

TEST_CASE("volume deviation matches the closed-form fiber integral") {
    // g_tan = (1 - z kappa)^2 g_S: |Omega_h| = |S| (2h + 2 h^3 kappa^2 / 3).
    double R = 2.0, kappa = 1.0 / R;
    MetricField cap = MetricField::spherical_cap(R);
    double area = surface_area(cap);
    for (double h : {0.2, 0.1}) {
        double expected = area * (2.0 * h + 2.0 * h * h * h * kappa * kappa / 3.0);
        CHECK(bulk_volume(cap, h) == doctest::Approx(expected).epsilon(1e-8));
    }
}

TEST_CASE("rescale identity: exact for z-independent metric, O(h) for the cap") {
    Integrand f = [](const Vector& x, double z) { return (1.0 + x[0]) * std::exp(z); };
    MetricField flat = MetricField::flat(2);
    CHECK(rescale_identity_error(flat, 0.4, 0.5, f) < 1e-12);

    MetricField cap = MetricField::spherical_cap(2.0);
    double e1 = rescale_identity_error(cap, 0.4, 0.5, f);
    double e2 = rescale_identity_error(cap, 0.4, 0.25, f);
    CHECK(e1 > 0);
    CHECK(e2 < 0.65 * e1);  // at least first order in h
}

TEST_CASE("geometry supports one-dimensional mid-surfaces") {
    MetricField flat1 = MetricField::flat(1, Rect::unit_interval());
    Vector x(1);
    x << 0.5;
    Matrix g = eval_metric(flat1, x, 0.1);
    CHECK(g.rows() == 2);
    CHECK((g - Matrix::Identity(2, 2)).norm() == 0.0);
    AdaptedFrame f = transport_normal(flat1, x, 0.2);
    CHECK((f.columns - Matrix::Identity(2, 2)).norm() < 1e-13);

    MetricField cap1 = MetricField::spherical_cap(2.0, 1, Rect::unit_interval());
    auto rep = geometry_diagnostics(cap1, {0.2, 0.1}, {});
    CHECK(rep.rows[0].frame_deviation == doctest::Approx(0.1).epsilon(1e-6));
}
