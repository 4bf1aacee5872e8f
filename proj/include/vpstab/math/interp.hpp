#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "vpstab/core/error.hpp"

namespace vpstab {

/// Cubic Hermite interpolant on a uniform grid with tabulated values and
/// derivatives (C^1, O(h^4) where the function is smooth).
class HermiteTable {
public:
    HermiteTable() = default;
    HermiteTable(double x0, double x1, std::vector<double> values, std::vector<double> derivs)
        : x0_(x0), x1_(x1), y_(std::move(values)), dy_(std::move(derivs)) {
        if (y_.size() < 2 || y_.size() != dy_.size())
            throw numeric_error("HermiteTable: need matching value/derivative tables, n >= 2");
        h_ = (x1_ - x0_) / double(y_.size() - 1);
        if (h_ <= 0) throw numeric_error("HermiteTable: empty interval");
    }

    double xmin() const { return x0_; }
    double xmax() const { return x1_; }
    std::size_t size() const { return y_.size(); }
    double node(std::size_t j) const { return x0_ + h_ * double(j); }
    const std::vector<double>& values() const { return y_; }
    const std::vector<double>& derivs() const { return dy_; }

    double operator()(double x) const {
        const auto [j, t] = locate(x);
        const double t2 = t * t, t3 = t2 * t;
        return (2 * t3 - 3 * t2 + 1) * y_[j] + (t3 - 2 * t2 + t) * h_ * dy_[j] +
               (-2 * t3 + 3 * t2) * y_[j + 1] + (t3 - t2) * h_ * dy_[j + 1];
    }

    double derivative(double x) const {
        const auto [j, t] = locate(x);
        const double t2 = t * t;
        return ((6 * t2 - 6 * t) * y_[j] + (3 * t2 - 4 * t + 1) * h_ * dy_[j] +
                (-6 * t2 + 6 * t) * y_[j + 1] + (3 * t2 - 2 * t) * h_ * dy_[j + 1]) / h_;
    }

private:
    std::pair<std::size_t, double> locate(double x) const {
        double u = (x - x0_) / h_;
        double jf = std::floor(u);
        std::size_t j = std::size_t(std::clamp(jf, 0.0, double(y_.size() - 2)));
        return {j, u - double(j)};
    }

    double x0_ = 0, x1_ = 1, h_ = 1;
    std::vector<double> y_, dy_;
};

/// Monotone cubic interpolant (Fritsch-Carlson limited slopes) on an
/// arbitrary increasing grid; used for tabulated convex functions where
/// overshoot would break monotonicity of derivatives.
class MonotoneTable {
public:
    MonotoneTable() = default;
    MonotoneTable(std::vector<double> x, std::vector<double> y)
        : x_(std::move(x)), y_(std::move(y)) {
        const std::size_t n = x_.size();
        if (n < 2 || y_.size() != n) throw numeric_error("MonotoneTable: need n >= 2 matching grids");
        m_.resize(n);
        std::vector<double> d(n - 1);
        for (std::size_t i = 0; i + 1 < n; ++i) {
            const double dx = x_[i + 1] - x_[i];
            if (dx <= 0) throw numeric_error("MonotoneTable: grid must be strictly increasing");
            d[i] = (y_[i + 1] - y_[i]) / dx;
        }
        m_[0] = d[0];
        m_[n - 1] = d[n - 2];
        for (std::size_t i = 1; i + 1 < n; ++i)
            m_[i] = (d[i - 1] * d[i] <= 0) ? 0.0 : 2.0 * d[i - 1] * d[i] / (d[i - 1] + d[i]);
        for (std::size_t i = 0; i + 1 < n; ++i) {
            if (d[i] == 0) { m_[i] = m_[i + 1] = 0; continue; }
            const double a = m_[i] / d[i], b = m_[i + 1] / d[i];
            const double s = a * a + b * b;
            if (s > 9.0) {
                const double t = 3.0 / std::sqrt(s);
                m_[i] = t * a * d[i];
                m_[i + 1] = t * b * d[i];
            }
        }
    }

    double xmin() const { return x_.front(); }
    double xmax() const { return x_.back(); }
    const std::vector<double>& grid() const { return x_; }

    double operator()(double x) const {
        const std::size_t i = cell(x);
        const double h = x_[i + 1] - x_[i], t = (x - x_[i]) / h;
        const double t2 = t * t, t3 = t2 * t;
        return (2 * t3 - 3 * t2 + 1) * y_[i] + (t3 - 2 * t2 + t) * h * m_[i] +
               (-2 * t3 + 3 * t2) * y_[i + 1] + (t3 - t2) * h * m_[i + 1];
    }

    double derivative(double x) const {
        const std::size_t i = cell(x);
        const double h = x_[i + 1] - x_[i], t = (x - x_[i]) / h;
        const double t2 = t * t;
        return ((6 * t2 - 6 * t) * y_[i] + (3 * t2 - 4 * t + 1) * h * m_[i] +
                (-6 * t2 + 6 * t) * y_[i + 1] + (3 * t2 - 2 * t) * h * m_[i + 1]) / h;
    }

private:
    std::size_t cell(double x) const {
        auto it = std::upper_bound(x_.begin(), x_.end(), x);
        std::ptrdiff_t i = (it - x_.begin()) - 1;
        return std::size_t(std::clamp<std::ptrdiff_t>(i, 0, std::ptrdiff_t(x_.size()) - 2));
    }

    std::vector<double> x_, y_, m_;
};

}  // namespace vpstab
