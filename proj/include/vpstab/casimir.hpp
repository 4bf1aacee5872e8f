#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "vpstab/core/error.hpp"
#include "vpstab/math/interp.hpp"
#include "vpstab/math/rootfind.hpp"

namespace vpstab {

/// The convex function Q defining the Casimir invariant, together with the
/// growth constants it is declared to satisfy. Two kinds:
///   - polytropic: Q(f) = f^(1+1/k), 0 < k < 3/2, all maps in closed form;
///   - tabulated-general: Q and Q' held as monotone cubic tables on [0,f_max],
///     with (Q')^{-1} obtained by a bracketed root find.
class CasimirFunction {
public:
    enum class Kind { polytropic, tabulated_general };

    /// Declared growth constants (general kind; polytropic fills them from k).
    struct Constants {
        double F0 = 1, C1 = 1, C2 = 1;
        double k1 = 0, k2 = 0, k3 = 0;
        std::optional<double> c1_prime;  ///< optional envelope constant for phi near E -> -inf
        std::optional<double> c2_prime;  ///< optional envelope constant for phi near E0
    };

    static CasimirFunction polytropic(double k) {
        if (!(k > 0 && k < 1.5))
            throw config_error("CasimirFunction: polytropic exponent must satisfy 0 < k < 3/2, got " +
                               std::to_string(k));
        CasimirFunction c;
        c.kind_ = Kind::polytropic;
        c.k_ = k;
        c.constants_ = Constants{1, 1, 1, k, k, k, {}, {}};
        return c;
    }

    /// Builds the tabulated kind by sampling qfun/qpfun on [0,f_max]; the grid
    /// is clustered at 0 where Q' typically behaves like a fractional power.
    static CasimirFunction tabulated(const std::function<double(double)>& qfun,
                                     const std::function<double(double)>& qpfun,
                                     double f_max, const Constants& constants,
                                     std::size_t n = 2048) {
        if (!(f_max > 0)) throw config_error("CasimirFunction: f_max must be positive");
        for (double kc : {constants.k1, constants.k2, constants.k3})
            if (!(kc > 0 && kc < 1.5))
                throw config_error("CasimirFunction: constants k1,k2,k3 must lie in (0, 3/2)");
        CasimirFunction c;
        c.kind_ = Kind::tabulated_general;
        c.constants_ = constants;
        c.f_max_ = f_max;
        std::vector<double> fg(n + 1), qv(n + 1), qpv(n + 1);
        for (std::size_t i = 0; i <= n; ++i) {
            const double t = double(i) / double(n);
            fg[i] = f_max * t * t * t;
            qv[i] = qfun(fg[i]);
            qpv[i] = qpfun(fg[i]);
        }
        c.validate_samples(fg, qv, qpv);
        c.q_tab_ = MonotoneTable(fg, qv);
        c.qp_tab_ = MonotoneTable(std::move(fg), std::move(qpv));
        return c;
    }

    /// Rebuilds the tabulated kind from previously sampled tables (state
    /// files round-trip through this).
    static CasimirFunction from_samples(std::vector<double> f_grid, std::vector<double> q_values,
                                        std::vector<double> qp_values, const Constants& constants) {
        if (f_grid.size() < 4 || f_grid.size() != q_values.size() ||
            f_grid.size() != qp_values.size())
            throw config_error("CasimirFunction: malformed sample tables");
        CasimirFunction c;
        c.kind_ = Kind::tabulated_general;
        c.constants_ = constants;
        c.f_max_ = f_grid.back();
        c.validate_samples(f_grid, q_values, qp_values);
        c.q_tab_ = MonotoneTable(f_grid, q_values);
        c.qp_tab_ = MonotoneTable(std::move(f_grid), std::move(qp_values));
        return c;
    }

    /// Raw sample tables (empty for the polytropic kind); used by state export.
    struct Samples {
        std::vector<double> f, q, qp;
    };
    Samples samples(std::size_t stride = 1) const {
        Samples s;
        if (kind_ != Kind::tabulated_general) return s;
        const auto& fg = qp_tab_.grid();
        for (std::size_t i = 0; i < fg.size(); i += stride) {
            s.f.push_back(fg[i]);
            s.q.push_back(q_tab_(fg[i]));
            s.qp.push_back(qp_tab_(fg[i]));
        }
        if (s.f.back() != fg.back()) {
            s.f.push_back(fg.back());
            s.q.push_back(q_tab_(fg.back()));
            s.qp.push_back(qp_tab_(fg.back()));
        }
        return s;
    }

    /// Convenience general-Q instance: Q(f) = f^(1+1/ka) + beta f^(1+1/kb).
    /// Satisfies (Q1)-(Q4) with k1 = k3 = min(ka,kb), k2 = max(ka,kb),
    /// C1 = 1, C2 = 1 + beta, F0 = 1.
    static CasimirFunction two_term(double ka, double kb, double beta, double f_max,
                                    std::size_t n = 2048) {
        if (!(beta >= 0)) throw config_error("CasimirFunction: two_term beta must be >= 0");
        Constants cs;
        cs.k1 = std::min(ka, kb);
        cs.k2 = std::max(ka, kb);
        cs.k3 = std::min(ka, kb);
        cs.C1 = 1;
        cs.C2 = 1 + beta;
        cs.F0 = 1;
        auto q = [=](double f) {
            return f <= 0 ? 0.0 : std::pow(f, 1 + 1 / ka) + beta * std::pow(f, 1 + 1 / kb);
        };
        auto qp = [=](double f) {
            return f <= 0 ? 0.0
                          : (1 + 1 / ka) * std::pow(f, 1 / ka) +
                                beta * (1 + 1 / kb) * std::pow(f, 1 / kb);
        };
        return tabulated(q, qp, f_max, cs, n);
    }

    Kind kind() const { return kind_; }
    bool is_polytropic() const { return kind_ == Kind::polytropic; }
    double k() const { return k_; }
    const Constants& constants() const { return constants_; }
    double f_max() const { return f_max_; }

    /// n1 := k1 + 3/2, the density-norm exponent parameter.
    double n1() const { return constants_.k1 + 1.5; }

    double q(double f) const {
        if (f <= 0) return 0.0;
        if (kind_ == Kind::polytropic) return std::pow(f, 1.0 + 1.0 / k_);
        check_range(f);
        return q_tab_(f);
    }

    double qprime(double f) const {
        if (f <= 0) return 0.0;
        if (kind_ == Kind::polytropic) return (1.0 + 1.0 / k_) * std::pow(f, 1.0 / k_);
        check_range(f);
        return qp_tab_(f);
    }

    /// (Q')^{-1}(s): 0 for s <= 0, strictly increasing for s > 0.
    double qprime_inverse(double s) const {
        if (!(s > 0)) return 0.0;
        if (kind_ == Kind::polytropic) return std::pow(s * k_ / (k_ + 1.0), k_);
        const double top = qp_tab_(f_max_);
        if (s >= top)
            throw numeric_error("CasimirFunction: (Q')^{-1} argument " + std::to_string(s) +
                                " above tabulated range [0," + std::to_string(top) +
                                "]; enlarge f_max");
        return find_root([&](double f) { return qp_tab_(f) - s; }, 0.0, f_max_,
                         1e-15 * f_max_);
    }

    /// Verifies (Q1)-(Q3) with the declared constants on a sampled f-grid
    /// (and a lambda-grid for (Q3)). Returns the worst signed margin relative
    /// to the bound being tested; >= 0 means every sampled inequality holds
    /// (equality cases sit at rounding level).
    double assumption_margin(std::size_t n = 200) const {
        double worst = 1e300;
        const double fmax = (kind_ == Kind::polytropic) ? 1e3 : f_max_;
        const Constants& c = constants_;
        auto rel = [](double lhs, double rhs) {
            return (lhs - rhs) / std::max({std::abs(lhs), std::abs(rhs), 1e-300});
        };
        for (std::size_t i = 1; i <= n; ++i) {
            const double t = double(i) / double(n);
            const double f_lo = c.F0 * t;                    // (0, F0]
            const double f_hi = c.F0 + (fmax - c.F0) * t;    // [F0, fmax]
            worst = std::min(worst, rel(q(f_hi), c.C1 * std::pow(f_hi, 1 + 1 / c.k1)));
            worst = std::min(worst, rel(c.C2 * std::pow(f_lo, 1 + 1 / c.k2), q(f_lo)));
            for (double lam : {0.1, 0.25, 0.5, 0.75, 0.9})
                worst = std::min(worst, rel(q(lam * f_hi), std::pow(lam, 1 + 1 / c.k3) * q(f_hi)));
        }
        return worst;
    }

private:
    void check_range(double f) const {
        if (f > f_max_ * (1 + 1e-12))
            throw numeric_error("CasimirFunction: argument " + std::to_string(f) +
                                " above tabulated range [0," + std::to_string(f_max_) + "]");
    }

    void validate_samples(const std::vector<double>& fg, const std::vector<double>& qv,
                          const std::vector<double>& qpv) const {
        if (qv[0] != 0.0 || qpv[0] != 0.0)
            throw config_error("CasimirFunction: Q(0) and Q'(0) must both vanish");
        double prev_qp = 0, prev_slope = -1e300;
        for (std::size_t i = 1; i < fg.size(); ++i) {
            if (qv[i] < 0) throw config_error("CasimirFunction: Q must be nonnegative");
            if (qpv[i] <= prev_qp)
                throw config_error("CasimirFunction: Q' must be strictly increasing (fails near f=" +
                                   std::to_string(fg[i]) + ")");
            // convexity: secant slopes of Q must increase
            const double slope = (qv[i] - qv[i - 1]) / (fg[i] - fg[i - 1]);
            if (slope < prev_slope)
                throw config_error("CasimirFunction: Q must be convex (fails near f=" +
                                   std::to_string(fg[i]) + ")");
            prev_qp = qpv[i];
            prev_slope = slope;
        }
    }

    Kind kind_ = Kind::polytropic;
    double k_ = 1.0;
    double f_max_ = 0.0;
    Constants constants_;
    MonotoneTable q_tab_, qp_tab_;
};

}  // namespace vpstab
