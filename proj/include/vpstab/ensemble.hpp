#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "vpstab/core/error.hpp"
#include "vpstab/core/vec3.hpp"

namespace vpstab {

/// N weighted phase-space markers representing f(t). Weights and carried
/// f-values are fixed at creation (f is transported along characteristics);
/// evolution touches positions and velocities only.
struct ParticleEnsemble {
    std::vector<Vec3> pos;
    std::vector<Vec3> vel;
    std::vector<double> weight;
    std::vector<double> f_init;

    double time = 0;
    double softening = 0;
    std::uint64_t seed = 0;
    std::string provenance;

    std::size_t size() const { return pos.size(); }

    double total_mass() const {
        double m = 0;
        for (double w : weight) m += w;
        return m;
    }

    Vec3 momentum() const {
        Vec3 p{};
        for (std::size_t i = 0; i < size(); ++i) p += weight[i] * vel[i];
        return p;
    }

    Vec3 center_of_mass() const {
        Vec3 c{};
        double m = 0;
        for (std::size_t i = 0; i < size(); ++i) {
            c += weight[i] * pos[i];
            m += weight[i];
        }
        return (1.0 / m) * c;
    }

    Vec3 angular_momentum() const {
        Vec3 l{};
        for (std::size_t i = 0; i < size(); ++i) l += weight[i] * cross(pos[i], vel[i]);
        return l;
    }
};

/// Snapshot CSV, exact header `id,w,x,y,z,vx,vy,vz,f_init`.
inline void write_snapshot_csv(const ParticleEnsemble& ens, std::ostream& os) {
    os << "id,w,x,y,z,vx,vy,vz,f_init\n";
    char buf[256];
    for (std::size_t i = 0; i < ens.size(); ++i) {
        std::snprintf(buf, sizeof buf,
                      "%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", i, ens.weight[i],
                      ens.pos[i].x, ens.pos[i].y, ens.pos[i].z, ens.vel[i].x, ens.vel[i].y,
                      ens.vel[i].z, ens.f_init[i]);
        os << buf;
    }
}

inline void save_snapshot(const ParticleEnsemble& ens, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw config_error("save_snapshot: cannot open " + path);
    write_snapshot_csv(ens, f);
}

inline ParticleEnsemble load_snapshot(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw config_error("load_snapshot: cannot open " + path);
    std::string line;
    std::getline(f, line);
    if (line != "id,w,x,y,z,vx,vy,vz,f_init")
        throw config_error("load_snapshot: unexpected header '" + line + "'");
    ParticleEnsemble ens;
    while (std::getline(f, line)) {
        std::size_t id;
        double w, x, y, z, vx, vy, vz, fi;
        if (std::sscanf(line.c_str(), "%zu,%lf,%lf,%lf,%lf,%lf,%lf,%lf,%lf", &id, &w, &x, &y, &z,
                        &vx, &vy, &vz, &fi) != 9)
            throw config_error("load_snapshot: malformed row '" + line + "'");
        ens.pos.push_back({x, y, z});
        ens.vel.push_back({vx, vy, vz});
        ens.weight.push_back(w);
        ens.f_init.push_back(fi);
    }
    return ens;
}

}  // namespace vpstab
