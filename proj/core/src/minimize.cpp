#include "thinlimit/minimize.hpp"

#include <chrono>
#include <cmath>
#include <future>

namespace thinlimit {

namespace {

struct FreeDofMap {
    std::vector<int> free_nodes;
    int n = 0;

    explicit FreeDofMap(const ConfigurationField& F) : n(F.n) {
        for (int i = 0; i < F.num_nodes(); ++i)
            if (!F.fixed[i]) free_nodes.push_back(i);
    }
    int dof() const { return static_cast<int>(free_nodes.size()) * n; }
    Vector pack(const Matrix& values) const {
        Vector x(dof());
        for (size_t k = 0; k < free_nodes.size(); ++k)
            x.segment(k * n, n) = values.row(free_nodes[k]).transpose();
        return x;
    }
    void unpack(const Vector& x, Matrix& values) const {
        for (size_t k = 0; k < free_nodes.size(); ++k)
            values.row(free_nodes[k]) = x.segment(k * n, n).transpose();
    }
};

double boundary_data_spread(const ConfigurationField& F) {
    bool any = false;
    Vector lo, hi;
    for (int i = 0; i < F.num_nodes(); ++i) {
        if (!F.fixed[i]) continue;
        Vector v = F.values.row(i);
        if (!any) {
            lo = v;
            hi = v;
            any = true;
        } else {
            lo = lo.cwiseMin(v);
            hi = hi.cwiseMax(v);
        }
    }
    if (!any) return 1.0;
    double d = (hi - lo).norm();
    return d > 1e-12 ? d : 1.0;
}

}  // namespace

std::pair<ConfigurationField, MinimizeResult> minimize_energy(const EnergyFn& energy,
                                                              const ConfigurationField& F0,
                                                              const OptimizerParams& params) {
    params.validate();
    auto t_start = std::chrono::steady_clock::now();

    FreeDofMap map(F0);
    double spread = boundary_data_spread(F0);

    auto run_one = [&](int restart) {
        ConfigurationField work = F0;
        Vector x0 = map.pack(F0.values);
        if (restart > 0) {
            Rng rng(params.seed + 1000003ull * restart);
            std::normal_distribution<double> nd(0.0, 1.0);
            for (int i = 0; i < x0.size(); ++i)
                x0[i] += params.perturb_amp * spread * nd(rng);
        }
        Matrix grad;
        ObjectiveFn fn = [&](const Vector& x, Vector& g) {
            map.unpack(x, work.values);
            double v = energy(work, &grad);
            g = map.pack(grad);
            return v;
        };
        LbfgsResult res = lbfgs_minimize(fn, x0, params, /*keep_log=*/true);
        return res;
    };

    std::vector<LbfgsResult> results(params.restarts);
    if (params.parallel_restarts && params.restarts > 1) {
        std::vector<std::future<LbfgsResult>> futs;
        for (int r = 0; r < params.restarts; ++r)
            futs.push_back(std::async(std::launch::async, run_one, r));
        for (int r = 0; r < params.restarts; ++r) results[r] = futs[r].get();
    } else {
        for (int r = 0; r < params.restarts; ++r) results[r] = run_one(r);
    }

    int best = 0;
    for (int r = 1; r < params.restarts; ++r)
        if (results[r].value < results[best].value) best = r;

    ConfigurationField F = F0;
    map.unpack(results[best].x, F.values);

    MinimizeResult out;
    out.energy = results[best].value;
    out.grad_norm = results[best].grad_norm;
    out.iterations = results[best].iterations;
    out.best_restart = best;
    out.converged = results[best].converged;
    out.log = std::move(results[best].log);
    out.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return {F, out};
}

double gradient_check(const EnergyFn& energy, const ConfigurationField& F, int n_dirs,
                      uint64_t seed) {
    if (n_dirs < 5) throw UsageError("gradient_check: n_dirs >= 5 required");
    FreeDofMap map(F);
    ConfigurationField work = F;
    Matrix grad;

    Vector x = map.pack(F.values);
    energy(work, &grad);
    Vector g = map.pack(grad);

    Rng rng(seed);
    double step = 1e-6 * (1.0 + x.cwiseAbs().maxCoeff());
    double worst = 0;
    for (int d = 0; d < n_dirs; ++d) {
        Vector dir = random_unit_vector(rng, static_cast<int>(x.size()));
        map.unpack(x + step * dir, work.values);
        double ep = energy(work, nullptr);
        map.unpack(x - step * dir, work.values);
        double em = energy(work, nullptr);
        double fd = (ep - em) / (2.0 * step);
        double an = g.dot(dir);
        worst = std::max(worst, std::abs(an - fd) / std::max(1.0, std::abs(an)));
    }
    return worst;
}

}  // namespace thinlimit
