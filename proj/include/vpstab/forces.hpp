#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "vpstab/core/error.hpp"
#include "vpstab/core/vec3.hpp"
#include "vpstab/ensemble.hpp"
#include "vpstab/steady.hpp"

namespace vpstab {

/// Default collisionless softening: 0.02 R (1e4/N)^(1/3), recorded in run
/// manifests whenever a config asks for "auto".
inline double default_softening(double radius, std::size_t n) {
    return 0.02 * radius * std::cbrt(1e4 / double(n));
}

/// Force evaluation strategy for the self-consistent field, plus the
/// frozen-field mode that reads accelerations off the tabulated steady
/// potential (isolates integrator error from self-consistency error).
struct ForceModel {
    enum class Method { direct, tree, frozen };
    Method method = Method::direct;
    double softening = 0;
    double theta = 0.5;                  ///< tree opening angle
    const SteadyState* frozen = nullptr; ///< required for Method::frozen
};

namespace detail {

/// Octree with monopole nodes for Barnes-Hut sums. Deterministic: the
/// build partitions a fixed index ordering and traversal order is fixed.
class Octree {
public:
    Octree(const std::vector<Vec3>& pos, const std::vector<double>& w, std::size_t leaf_cap = 8)
        : pos_(pos), w_(w) {
        const std::size_t n = pos.size();
        idx_.resize(n);
        for (std::size_t i = 0; i < n; ++i) idx_[i] = i;
        Vec3 lo = pos[0], hi = pos[0];
        for (const auto& p : pos) {
            lo.x = std::min(lo.x, p.x); lo.y = std::min(lo.y, p.y); lo.z = std::min(lo.z, p.z);
            hi.x = std::max(hi.x, p.x); hi.y = std::max(hi.y, p.y); hi.z = std::max(hi.z, p.z);
        }
        const Vec3 c = 0.5 * (lo + hi);
        const double half =
            0.5 * std::max({hi.x - lo.x, hi.y - lo.y, hi.z - lo.z, 1e-300});
        nodes_.reserve(2 * n / leaf_cap + 16);
        build(0, n, c, half * 1.0000001, leaf_cap);
    }

    /// Acceleration at x excluding particle `self` (pass size() for none).
    Vec3 acceleration(const Vec3& x, std::size_t self, double theta, double eps2) const {
        Vec3 a{};
        walk(0, x, self, theta * theta, eps2, a);
        return a;
    }

    /// Potential at x excluding `self` (softened kernel).
    double potential(const Vec3& x, std::size_t self, double theta, double eps2) const {
        double phi = 0;
        walk_potential(0, x, self, theta * theta, eps2, phi);
        return phi;
    }

private:
    struct Node {
        Vec3 center;      // geometric center of the cube
        Vec3 com;         // center of mass
        double half = 0;  // half side
        double mass = 0;
        int child[8] = {-1, -1, -1, -1, -1, -1, -1, -1};
        std::size_t begin = 0, end = 0;  // particle index range (leaves)
        bool leaf = true;
    };

    int build(std::size_t begin, std::size_t end, const Vec3& center, double half,
              std::size_t leaf_cap) {
        const int me = int(nodes_.size());
        nodes_.push_back({});
        Node node;
        node.center = center;
        node.half = half;
        node.begin = begin;
        node.end = end;
        double m = 0;
        Vec3 com{};
        for (std::size_t t = begin; t < end; ++t) {
            m += w_[idx_[t]];
            com += w_[idx_[t]] * pos_[idx_[t]];
        }
        node.mass = m;
        node.com = (m > 0 ? (1.0 / m) * com : center);
        if (end - begin > leaf_cap && half > 1e-12 * root_half()) {
            node.leaf = false;
            std::size_t cursor = begin;
            std::array<std::size_t, 9> bounds{};
            bounds[0] = begin;
            // partition into octants in a fixed order
            for (int oct = 0; oct < 8; ++oct) {
                auto in_oct = [&](std::size_t i) {
                    const Vec3& p = pos_[i];
                    const int o = (p.x >= center.x ? 1 : 0) | (p.y >= center.y ? 2 : 0) |
                                  (p.z >= center.z ? 4 : 0);
                    return o == oct;
                };
                std::size_t next = cursor;
                for (std::size_t t = cursor; t < end; ++t)
                    if (in_oct(idx_[t])) std::swap(idx_[next++], idx_[t]);
                bounds[oct + 1] = next;
                cursor = next;
            }
            for (int oct = 0; oct < 8; ++oct) {
                if (bounds[oct + 1] == bounds[oct]) continue;
                const Vec3 cc{center.x + (oct & 1 ? 0.5 : -0.5) * half,
                              center.y + (oct & 2 ? 0.5 : -0.5) * half,
                              center.z + (oct & 4 ? 0.5 : -0.5) * half};
                const int ci = build(bounds[oct], bounds[oct + 1], cc, 0.5 * half, leaf_cap);
                nodes_[me].child[oct] = ci;
            }
            nodes_[me].leaf = false;
            nodes_[me].center = center;
            nodes_[me].half = half;
            nodes_[me].begin = begin;
            nodes_[me].end = end;
            nodes_[me].mass = m;
            nodes_[me].com = node.com;
            return me;
        }
        nodes_[me] = node;
        return me;
    }

    double root_half() const { return nodes_.empty() ? 1.0 : nodes_[0].half; }

    void walk(int ni, const Vec3& x, std::size_t self, double theta2, double eps2, Vec3& a) const {
        const Node& nd = nodes_[ni];
        const Vec3 d = x - nd.com;
        const double r2 = norm2(d);
        const double side = 2.0 * nd.half;
        if (nd.leaf || side * side < theta2 * r2) {
            if (nd.leaf) {
                for (std::size_t t = nd.begin; t < nd.end; ++t) {
                    const std::size_t j = idx_[t];
                    if (j == self) continue;
                    const Vec3 dj = x - pos_[j];
                    const double q2 = norm2(dj) + eps2;
                    if (q2 <= 0) continue;
                    a -= (w_[j] / (q2 * std::sqrt(q2))) * dj;
                }
            } else {
                const double q2 = r2 + eps2;
                a -= (nd.mass / (q2 * std::sqrt(q2))) * d;
            }
            return;
        }
        for (int c : nd.child)
            if (c >= 0) walk(c, x, self, theta2, eps2, a);
    }

    void walk_potential(int ni, const Vec3& x, std::size_t self, double theta2, double eps2,
                        double& phi) const {
        const Node& nd = nodes_[ni];
        const Vec3 d = x - nd.com;
        const double r2 = norm2(d);
        const double side = 2.0 * nd.half;
        if (nd.leaf || side * side < theta2 * r2) {
            if (nd.leaf) {
                for (std::size_t t = nd.begin; t < nd.end; ++t) {
                    const std::size_t j = idx_[t];
                    if (j == self) continue;
                    const double q2 = norm2(x - pos_[j]) + eps2;
                    if (q2 > 0) phi -= w_[j] / std::sqrt(q2);
                }
            } else {
                phi -= nd.mass / std::sqrt(r2 + eps2);
            }
            return;
        }
        for (int c : nd.child)
            if (c >= 0) walk_potential(c, x, self, theta2, eps2, phi);
    }

    const std::vector<Vec3>& pos_;
    const std::vector<double>& w_;
    std::vector<std::size_t> idx_;
    std::vector<Node> nodes_;
};

}  // namespace detail

/// Pairwise accelerations a_i = -sum_j w_j (x_i-x_j)/(|x_i-x_j|^2+eps^2)^{3/2}
/// by the selected method. Deterministic per particle under any thread count.
inline std::vector<Vec3> accelerations(const ParticleEnsemble& ens, const ForceModel& fm) {
    const std::size_t n = ens.size();
    std::vector<Vec3> acc(n);
    const double eps2 = fm.softening * fm.softening;

    switch (fm.method) {
        case ForceModel::Method::direct: {
            // scratch SoA copies let the compiler vectorize the pair loop
            std::vector<double> px(n), py(n), pz(n), w(n);
            for (std::size_t j = 0; j < n; ++j) {
                px[j] = ens.pos[j].x;
                py[j] = ens.pos[j].y;
                pz[j] = ens.pos[j].z;
                w[j] = ens.weight[j];
            }
            const bool softened = eps2 > 0;
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
            for (std::ptrdiff_t i = 0; i < std::ptrdiff_t(n); ++i) {
                const double xi = px[i], yi = py[i], zi = pz[i];
                double ax = 0, ay = 0, az = 0;
                if (softened) {
                    // the self term is exactly zero (dx=dy=dz=0), no branch needed
                    for (std::size_t j = 0; j < n; ++j) {
                        const double dx = xi - px[j], dy = yi - py[j], dz = zi - pz[j];
                        const double q2 = dx * dx + dy * dy + dz * dz + eps2;
                        const double s = w[j] / (q2 * std::sqrt(q2));
                        ax -= s * dx;
                        ay -= s * dy;
                        az -= s * dz;
                    }
                } else {
                    for (std::size_t j = 0; j < n; ++j) {
                        const double dx = xi - px[j], dy = yi - py[j], dz = zi - pz[j];
                        const double q2 = dx * dx + dy * dy + dz * dz;
                        if (q2 == 0) continue;
                        const double s = w[j] / (q2 * std::sqrt(q2));
                        ax -= s * dx;
                        ay -= s * dy;
                        az -= s * dz;
                    }
                }
                acc[i] = {ax, ay, az};
            }
            break;
        }
        case ForceModel::Method::tree: {
            detail::Octree tree(ens.pos, ens.weight);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 64)
#endif
            for (std::ptrdiff_t i = 0; i < std::ptrdiff_t(n); ++i)
                acc[i] = tree.acceleration(ens.pos[i], std::size_t(i), fm.theta, eps2);
            break;
        }
        case ForceModel::Method::frozen: {
            if (!fm.frozen) throw config_error("accelerations: frozen mode needs a steady state");
            const SteadyState& st = *fm.frozen;
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
            for (std::ptrdiff_t i = 0; i < std::ptrdiff_t(n); ++i) {
                const double r = norm(ens.pos[i]);
                acc[i] = (r > 0) ? (-st.du0(r) / r) * ens.pos[i] : Vec3{};
            }
            break;
        }
    }
    return acc;
}

}  // namespace vpstab
