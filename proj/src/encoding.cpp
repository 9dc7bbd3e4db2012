#include "qrcpipe/encoding.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "qrcpipe/errors.hpp"
#include "qrcpipe/rng.hpp"

namespace qrcpipe {

namespace {

constexpr double kRegisterWidth = 75.0;    // um
constexpr double kRegisterHeight = 125.0;  // um
constexpr double kMinSpacing = 4.0;        // um
constexpr double kReplicaGap = 15.0;       // um, edge to edge

}  // namespace

std::string to_string(Encoding e) {
    return e == Encoding::position ? "position" : "detuning";
}

Encoding encoding_from_string(const std::string& s) {
    if (s == "position") return Encoding::position;
    if (s == "detuning") return Encoding::detuning;
    throw ConfigError("unknown encoding '" + s + "' (expected position or detuning)");
}

double Waveform::value_at(double t) const {
    if (breakpoints.empty()) return 0.0;
    if (t <= breakpoints.front().first) return breakpoints.front().second;
    if (t >= breakpoints.back().first) return breakpoints.back().second;
    for (std::size_t i = 1; i < breakpoints.size(); ++i) {
        if (t <= breakpoints[i].first) {
            const auto& [t0, v0] = breakpoints[i - 1];
            const auto& [t1, v1] = breakpoints[i];
            const double w = (t - t0) / (t1 - t0);
            return v0 + w * (v1 - v0);
        }
    }
    return breakpoints.back().second;
}

Waveform build_waveform(double peak, double duration, double ramp) {
    if (!(duration > 2.0 * ramp)) {
        throw ConfigError("waveform duration must exceed twice the ramp width");
    }
    Waveform w;
    w.breakpoints = {{0.0, 0.0}, {ramp, peak}, {duration - ramp, peak}, {duration, 0.0}};
    return w;
}

std::uint64_t ReservoirConfig::hash() const {
    std::uint64_t h = fnv1a("reservoir-config");
    auto mix = [&h](double v) { h = fnv1a(&v, sizeof v, h); };
    mix(r0);
    mix(lambda);
    mix(delta_local);
    mix(omega_max);
    mix(delta_global);
    mix(ramp);
    mix(timestep);
    mix(static_cast<double>(n_timesteps));
    mix(c6);
    mix(static_cast<double>(encoding == Encoding::position ? 1 : 0));
    mix(dt);
    return splitmix64(h);
}

EncodedSample encode_position(const std::vector<double>& features, const ReservoirConfig& cfg) {
    if (cfg.lambda < 0.0) throw ConfigError("position encoding requires lambda >= 0");
    EncodedSample s;
    s.n_atoms = features.size() + 1;
    s.positions_1d.resize(s.n_atoms);
    s.local_scale.assign(s.n_atoms, 0.0);
    s.positions_1d[0] = 0.0;
    for (std::size_t i = 0; i < features.size(); ++i) {
        const double f = 0.5 * (features[i] + 1.0);  // [-1,1] -> [0,1]
        if (f < -1e-9 || f > 1.0 + 1e-9) {
            throw DataError("position encoding: feature " + std::to_string(i) +
                            " outside [-1, 1]");
        }
        const double gap = cfg.r0 * (1.0 + cfg.lambda * std::clamp(f, 0.0, 1.0));
        s.positions_1d[i + 1] = s.positions_1d[i] + gap;
    }
    return s;
}

EncodedSample encode_detuning(const std::vector<double>& features, const ReservoirConfig& cfg) {
    EncodedSample s;
    s.n_atoms = features.size();
    s.positions_1d.resize(s.n_atoms);
    s.local_scale = features;
    for (std::size_t i = 0; i < s.n_atoms; ++i) s.positions_1d[i] = cfg.r0 * double(i);
    return s;
}

EncodedSample encode(const std::vector<double>& features, const ReservoirConfig& cfg) {
    return cfg.encoding == Encoding::position ? encode_position(features, cfg)
                                              : encode_detuning(features, cfg);
}

PulseProgram build_program(const EncodedSample& sample, const ReservoirConfig& cfg) {
    PulseProgram p;
    p.duration = cfg.total_time();
    p.rabi = build_waveform(cfg.omega_max, p.duration, cfg.ramp);
    p.phase.breakpoints = {{0.0, 0.0}, {p.duration, 0.0}};
    p.global_detuning = build_waveform(cfg.delta_global, p.duration, cfg.ramp);
    p.local_detuning = build_waveform(cfg.delta_local, p.duration, cfg.ramp);
    p.local_scale = sample.local_scale;
    p.timestep_times.resize(cfg.n_timesteps);
    for (int k = 0; k < cfg.n_timesteps; ++k) p.timestep_times[k] = cfg.timestep * (k + 1);
    return p;
}

std::vector<PulseProgram> export_programs(const EncodedSample& sample,
                                          const ReservoirConfig& cfg) {
    std::vector<PulseProgram> out;
    for (int k = 1; k <= cfg.n_timesteps; ++k) {
        PulseProgram p;
        p.duration = cfg.timestep * k;
        p.rabi = build_waveform(cfg.omega_max, p.duration, cfg.ramp);
        p.phase.breakpoints = {{0.0, 0.0}, {p.duration, 0.0}};
        p.global_detuning = build_waveform(cfg.delta_global, p.duration, cfg.ramp);
        p.local_detuning = build_waveform(cfg.delta_local, p.duration, cfg.ramp);
        p.local_scale = sample.local_scale;
        p.timestep_times = {p.duration};
        out.push_back(std::move(p));
    }
    return out;
}

namespace {

// Folds a 1-D chain into parallel lines no longer than `limit`; returns
// (along, across) pairs with lines `line_gap` apart, boustrophedon order.
std::vector<std::pair<double, double>> fold_chain(const std::vector<double>& positions,
                                                  double limit, double line_gap) {
    std::vector<std::pair<double, double>> out(positions.size());
    double across = 0.0;
    double u = 0.0;
    int direction = 1;
    for (std::size_t a = 0; a < positions.size(); ++a) {
        if (a > 0) {
            const double gap = positions[a] - positions[a - 1];
            const double nu = u + direction * gap;
            if (nu < 0.0 || nu > limit) {
                across += line_gap;
                direction = -direction;
                u += direction * gap;
            } else {
                u = nu;
            }
        }
        if (u < -1e-9 || u > limit + 1e-9) {
            throw DataError("layout error: a single chain gap exceeds the register side");
        }
        out[a] = {u, across};
    }
    return out;
}

}  // namespace

RegisterLayout embed_register(const EncodedSample& sample, int replicas,
                              const ReservoirConfig& cfg) {
    if (replicas < 1) throw ConfigError("replica count must be >= 1");
    const double length =
        sample.positions_1d.empty() ? 0.0 : sample.positions_1d.back();

    RegisterLayout layout;
    layout.replica_count = replicas;

    auto add_site = [&layout, &sample](double x, double y, int r, std::size_t a) {
        layout.sites.emplace_back(x, y);
        layout.local_scale.push_back(sample.local_scale[a]);
        layout.replica_of.emplace_back(r, static_cast<int>(a));
    };

    if (length <= kRegisterHeight) {
        // Column embedding: array along y, replicas along x. Columns have zero
        // width, so the 15 um edge-to-edge gap is the column pitch.
        const double total_w = kReplicaGap * (replicas - 1);
        if (total_w > kRegisterWidth + 1e-9) {
            throw DataError("layout error: replica columns span " + std::to_string(total_w) +
                            " um, register width is 75 um");
        }
        for (int r = 0; r < replicas; ++r)
            for (std::size_t a = 0; a < sample.n_atoms; ++a)
                add_site(kReplicaGap * r, sample.positions_1d[a], r, a);
    } else if (cfg.encoding == Encoding::detuning) {
        // Detuning arrays keep their uniform pitch in a straight column.
        throw DataError("layout error: array length " + std::to_string(length) +
                        " um exceeds the 125 um register height");
    } else {
        // Serpentine fold for long position arrays: rows along x, replicated
        // along y.
        const double line_gap = std::max(cfg.r0, kMinSpacing);
        const bool columns = false;
        const double limit = columns ? kRegisterHeight : kRegisterWidth;
        const double cross_limit = columns ? kRegisterWidth : kRegisterHeight;
        auto folded = fold_chain(sample.positions_1d, limit, line_gap);
        double fold_w = 0.0;
        for (const auto& [u, v] : folded) fold_w = std::max(fold_w, v);
        const double step = fold_w + kReplicaGap;
        if (fold_w + step * (replicas - 1) > cross_limit + 1e-9) {
            throw DataError("layout error: serpentine replicas span " +
                            std::to_string(fold_w + step * (replicas - 1)) +
                            " um across a " + std::to_string(cross_limit) + " um register side");
        }
        for (int r = 0; r < replicas; ++r) {
            for (std::size_t a = 0; a < sample.n_atoms; ++a) {
                const double u = folded[a].first;
                const double v = folded[a].second + step * r;
                if (columns)
                    add_site(v, u, r, a);
                else
                    add_site(u, v, r, a);
            }
        }
    }

    auto violations = validate_layout(layout);
    if (!violations.empty()) {
        throw DataError("layout error: " + violations.front());
    }
    return layout;
}

std::vector<std::string> validate_layout(const RegisterLayout& layout) {
    std::vector<std::string> violations;
    char buf[160];
    for (std::size_t i = 0; i < layout.sites.size(); ++i) {
        const auto& [x, y] = layout.sites[i];
        if (x < -1e-9 || x > kRegisterWidth + 1e-9 || y < -1e-9 || y > kRegisterHeight + 1e-9) {
            std::snprintf(buf, sizeof buf,
                          "site %zu at (%.4f, %.4f) outside the 75 x 125 um register", i, x, y);
            violations.emplace_back(buf);
        }
    }
    for (std::size_t i = 0; i < layout.sites.size(); ++i) {
        for (std::size_t j = i + 1; j < layout.sites.size(); ++j) {
            const double dx = layout.sites[i].first - layout.sites[j].first;
            const double dy = layout.sites[i].second - layout.sites[j].second;
            const double d = std::sqrt(dx * dx + dy * dy);
            if (d < kMinSpacing - 1e-9) {
                std::snprintf(buf, sizeof buf,
                              "sites %zu and %zu are %.4f um apart (Euclidean minimum 4 um)", i,
                              j, d);
                violations.emplace_back(buf);
            }
            // Distinct rows of the register must be at least 4 um apart in y,
            // independent of x (acousto-optic row addressing).
            const double ady = std::abs(dy);
            if (ady > 1e-9 && ady < kMinSpacing - 1e-9) {
                std::snprintf(buf, sizeof buf,
                              "sites %zu and %zu are %.4f um apart vertically (minimum 4 um)", i,
                              j, ady);
                violations.emplace_back(buf);
            }
            // Inter-replica check: 15 um minimum between atoms of distinct replicas.
            if (layout.replica_of.size() == layout.sites.size() &&
                layout.replica_of[i].first != layout.replica_of[j].first &&
                d < kReplicaGap - 1e-9) {
                std::snprintf(buf, sizeof buf,
                              "sites %zu and %zu of different replicas are %.4f um apart "
                              "(minimum 15 um)",
                              i, j, d);
                violations.emplace_back(buf);
            }
        }
    }
    return violations;
}

namespace {

void write_waveform(std::ostringstream& out, const std::string& name, const Waveform& w) {
    out << name;
    for (const auto& [t, v] : w.breakpoints) {
        char buf[64];
        std::snprintf(buf, sizeof buf, " %.6f:%.9g", t, v);
        out << buf;
    }
    out << '\n';
}

}  // namespace

std::string serialize_programs(const std::string& sample_id, const EncodedSample& sample,
                               const RegisterLayout& layout,
                               const std::vector<PulseProgram>& programs,
                               const ReservoirConfig& cfg) {
    std::ostringstream out;
    out << "program-spec v1\n";
    out << "sample_id " << sample_id << '\n';
    out << "encoding " << to_string(cfg.encoding) << '\n';
    char buf[96];
    std::snprintf(buf, sizeof buf, "config_hash %016llx\n",
                  static_cast<unsigned long long>(cfg.hash()));
    out << buf;
    out << "n_atoms " << sample.n_atoms << '\n';
    out << "replicas " << layout.replica_count << '\n';
    out << "sites\n";
    for (std::size_t i = 0; i < layout.sites.size(); ++i) {
        std::snprintf(buf, sizeof buf, "  %.4f %.4f %.9g\n", layout.sites[i].first,
                      layout.sites[i].second, layout.local_scale[i]);
        out << buf;
    }
    for (std::size_t k = 0; k < programs.size(); ++k) {
        const auto& p = programs[k];
        out << "program " << (k + 1) << '\n';
        std::snprintf(buf, sizeof buf, "  duration %.6f\n", p.duration);
        out << buf;
        std::ostringstream wf;
        write_waveform(wf, "  rabi", p.rabi);
        write_waveform(wf, "  phase", p.phase);
        write_waveform(wf, "  global_detuning", p.global_detuning);
        write_waveform(wf, "  local_detuning", p.local_detuning);
        out << wf.str();
    }
    return out.str();
}

}  // namespace qrcpipe
