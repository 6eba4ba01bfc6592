#include "thinlimit/optimizer.hpp"

#include <cmath>
#include <deque>

namespace thinlimit {

LbfgsResult lbfgs_minimize(const ObjectiveFn& fn, const Vector& x0,
                           const OptimizerParams& params, bool keep_log) {
    params.validate();
    const int d = static_cast<int>(x0.size());
    LbfgsResult res;
    res.x = x0;

    Vector grad(d);
    double value = fn(res.x, grad);
    if (!std::isfinite(value))
        throw NumericError("lbfgs: objective not finite at the initial point");

    std::deque<Vector> s_hist, y_hist;
    std::deque<double> rho_hist;

    auto record = [&](int it, double step) {
        if (keep_log) res.log.push_back({it, value, grad.norm(), step});
    };
    record(0, 0.0);

    for (int iter = 0; iter < params.max_iters; ++iter) {
        double gnorm = grad.norm();
        if (gnorm <= params.grad_tol) {
            res.converged = true;
            break;
        }

        // Two-loop recursion.
        Vector q = grad;
        std::vector<double> alpha(s_hist.size());
        for (int i = static_cast<int>(s_hist.size()) - 1; i >= 0; --i) {
            alpha[i] = rho_hist[i] * s_hist[i].dot(q);
            q -= alpha[i] * y_hist[i];
        }
        if (!s_hist.empty()) {
            const Vector& s = s_hist.back();
            const Vector& y = y_hist.back();
            q *= s.dot(y) / y.dot(y);
        }
        for (size_t i = 0; i < s_hist.size(); ++i) {
            double beta = rho_hist[i] * y_hist[i].dot(q);
            q += (alpha[i] - beta) * s_hist[i];
        }
        Vector dir = -q;
        double slope = grad.dot(dir);
        if (!(slope < 0)) {  // fall back to steepest descent
            dir = -grad;
            slope = -gnorm * gnorm;
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
        }

        // Armijo backtracking.
        double t = 1.0;
        Vector x_new(d), grad_new(d);
        double value_new = value;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            x_new = res.x + t * dir;
            value_new = fn(x_new, grad_new);
            if (std::isfinite(value_new) &&
                value_new <= value + params.armijo_c * t * slope) {
                accepted = true;
                break;
            }
            t *= params.shrink;
        }
        if (!accepted) {
            res.converged = false;
            record(iter + 1, 0.0);
            break;
        }

        Vector s = x_new - res.x;
        Vector y = grad_new - grad;
        double sy = s.dot(y);
        if (sy > 1e-14 * s.norm() * y.norm() && sy > 0) {
            s_hist.push_back(s);
            y_hist.push_back(y);
            rho_hist.push_back(1.0 / sy);
            if (static_cast<int>(s_hist.size()) > params.memory) {
                s_hist.pop_front();
                y_hist.pop_front();
                rho_hist.pop_front();
            }
        }
        res.x = x_new;
        value = value_new;
        grad = grad_new;
        res.iterations = iter + 1;
        record(iter + 1, t);
    }
    if (grad.norm() <= params.grad_tol) res.converged = true;
    res.value = value;
    res.grad_norm = grad.norm();
    return res;
}

}  // namespace thinlimit
