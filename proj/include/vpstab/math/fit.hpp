#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "vpstab/core/error.hpp"

namespace vpstab {

struct LineFit {
    double slope = 0;
    double intercept = 0;
    double max_residual = 0;
};

/// Least-squares straight line through (x_i, y_i).
inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    if (n < 2 || y.size() != n) throw numeric_error("fit_line: need n >= 2 matching points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += x[i]; sy += y[i]; sxx += x[i] * x[i]; sxy += x[i] * y[i];
    }
    const double det = double(n) * sxx - sx * sx;
    if (det == 0) throw numeric_error("fit_line: degenerate abscissae");
    LineFit out;
    out.slope = (double(n) * sxy - sx * sy) / det;
    out.intercept = (sy - out.slope * sx) / double(n);
    for (std::size_t i = 0; i < n; ++i)
        out.max_residual = std::max(out.max_residual,
                                    std::abs(y[i] - out.slope * x[i] - out.intercept));
    return out;
}

/// Log-log power-law fit y = c * x^p; returns the exponent p.
inline LineFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> lx(x.size()), ly(y.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] <= 0 || y[i] == 0) throw numeric_error("fit_power_law: need positive data");
        lx[i] = std::log(x[i]);
        ly[i] = std::log(std::abs(y[i]));
    }
    return fit_line(lx, ly);
}

}  // namespace vpstab
