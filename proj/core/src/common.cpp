#include "thinlimit/common.hpp"

#include <cmath>

namespace thinlimit {

double fit_observed_order(const std::vector<double>& h, const std::vector<double>& q,
                          double floor) {
    if (h.size() != q.size() || h.size() < 2)
        throw UsageError("fit_observed_order: need at least two (h, q) pairs");
    std::vector<double> lh, lq;
    for (size_t i = 0; i < h.size(); ++i) {
        if (q[i] > floor) {
            lh.push_back(std::log(h[i]));
            lq.push_back(std::log(q[i]));
        }
    }
    if (lh.size() < 2) return std::numeric_limits<double>::infinity();
    double n = static_cast<double>(lh.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < lh.size(); ++i) {
        sx += lh[i];
        sy += lq[i];
        sxx += lh[i] * lh[i];
        sxy += lh[i] * lq[i];
    }
    double denom = n * sxx - sx * sx;
    if (std::abs(denom) < 1e-300) return std::numeric_limits<double>::infinity();
    return (n * sxy - sx * sy) / denom;
}

void gauss_legendre(int n, double a, double b,
                    std::vector<double>& nodes, std::vector<double>& weights) {
    if (n < 1) throw UsageError("gauss_legendre: n >= 1 required");
    nodes.resize(n);
    weights.resize(n);
    // Newton iteration on Legendre polynomials, standard [-1, 1] rule.
    for (int i = 0; i < n; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double dp = 0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        nodes[i] = a + 0.5 * (b - a) * (1.0 + x);
        weights[i] = (b - a) / ((1.0 - x * x) * dp * dp);
    }
}

}  // namespace thinlimit
