#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <numeric>
#include <vector>

namespace vpstab {

struct SimplexResult {
    std::vector<double> x;      ///< best point found
    double f = 0;               ///< objective at x
    int iterations = 0;
    bool converged = false;     ///< false: max_iter hit, best iterate returned
};

/// Nelder-Mead simplex descent. Standard reflection/expansion/contraction
/// coefficients; terminates when the simplex diameter falls below xtol or
/// the objective spread below ftol. Deterministic for a given start.
inline SimplexResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                                 std::vector<double> x0, double scale, double xtol, double ftol,
                                 int max_iter = 500) {
    const std::size_t n = x0.size();
    std::vector<std::vector<double>> pts(n + 1, x0);
    for (std::size_t i = 0; i < n; ++i) pts[i + 1][i] += scale;
    std::vector<double> fv(n + 1);
    for (std::size_t i = 0; i <= n; ++i) fv[i] = f(pts[i]);

    std::vector<std::size_t> order(n + 1);
    SimplexResult res;
    for (res.iterations = 0; res.iterations < max_iter; ++res.iterations) {
        std::iota(order.begin(), order.end(), std::size_t(0));
        std::sort(order.begin(), order.end(), [&](auto a, auto b) { return fv[a] < fv[b]; });
        const std::size_t lo = order[0], hi = order[n], next_hi = order[n - 1];

        double diam = 0;
        for (std::size_t i = 0; i < n; ++i)
            diam = std::max(diam, std::abs(pts[hi][i] - pts[lo][i]));
        if (diam < xtol || std::abs(fv[hi] - fv[lo]) < ftol) {
            res.converged = true;
            break;
        }

        std::vector<double> centroid(n, 0.0);
        for (std::size_t j = 0; j <= n; ++j)
            if (j != hi)
                for (std::size_t i = 0; i < n; ++i) centroid[i] += pts[j][i] / double(n);

        auto along = [&](double t) {
            std::vector<double> p(n);
            for (std::size_t i = 0; i < n; ++i) p[i] = centroid[i] + t * (pts[hi][i] - centroid[i]);
            return p;
        };

        auto refl = along(-1.0);
        double f_refl = f(refl);
        if (f_refl < fv[lo]) {
            auto exp_pt = along(-2.0);
            double f_exp = f(exp_pt);
            if (f_exp < f_refl) { pts[hi] = exp_pt; fv[hi] = f_exp; }
            else { pts[hi] = refl; fv[hi] = f_refl; }
        } else if (f_refl < fv[next_hi]) {
            pts[hi] = refl;
            fv[hi] = f_refl;
        } else {
            auto con = along(f_refl < fv[hi] ? -0.5 : 0.5);
            double f_con = f(con);
            if (f_con < std::min(f_refl, fv[hi])) {
                pts[hi] = con;
                fv[hi] = f_con;
            } else {  // shrink toward the best vertex
                for (std::size_t j = 0; j <= n; ++j) {
                    if (j == lo) continue;
                    for (std::size_t i = 0; i < n; ++i)
                        pts[j][i] = pts[lo][i] + 0.5 * (pts[j][i] - pts[lo][i]);
                    fv[j] = f(pts[j]);
                }
            }
        }
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i <= n; ++i)
        if (fv[i] < fv[best]) best = i;
    res.x = pts[best];
    res.f = fv[best];
    return res;
}

}  // namespace vpstab
