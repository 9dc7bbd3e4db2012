#include "qrcpipe/crc.hpp"

#include <algorithm>
#include <cmath>

#include "qrcpipe/errors.hpp"

namespace qrcpipe {

namespace {

using Vec3 = std::array<double, 3>;

Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

struct CrcWorkspace {
    int n = 0;
    std::vector<double> vij;  // row-major n x n, symmetric, zero diagonal

    CrcWorkspace(const EncodedSample& sample, const ReservoirConfig& cfg)
        : n(static_cast<int>(sample.n_atoms)), vij(std::size_t(n) * n, 0.0) {
        for (int i = 0; i < n; ++i) {
            for (int j = i + 1; j < n; ++j) {
                const double r = sample.positions_1d[j] - sample.positions_1d[i];
                const double v = cfg.c6 / std::pow(r, 6);
                vij[std::size_t(i) * n + j] = v;
                vij[std::size_t(j) * n + i] = v;
            }
        }
    }

    void fields(const std::vector<Vec3>& spins, double t, const EncodedSample& sample,
                const PulseProgram& program, std::vector<Vec3>& out) const {
        const double half_omega = 0.5 * program.rabi.value_at(t);
        const double glob = program.global_detuning.value_at(t);
        const double loc = program.local_detuning.value_at(t);
        for (int i = 0; i < n; ++i) {
            const double delta_i = glob + loc * sample.local_scale[i];
            double bz = -0.5 * delta_i;
            for (int j = 0; j < n; ++j) {
                if (j == i) continue;
                bz += 0.25 * vij[std::size_t(i) * n + j] * (1.0 + spins[j][2]);
            }
            out[i] = {half_omega, 0.0, bz};
        }
    }

    // dS_i/dt = 2 B_i x S_i
    void derivative(const std::vector<Vec3>& spins, double t, const EncodedSample& sample,
                    const PulseProgram& program, std::vector<Vec3>& fields_buf,
                    std::vector<Vec3>& out) const {
        fields(spins, t, sample, program, fields_buf);
        for (int i = 0; i < n; ++i) {
            const Vec3 c = cross(fields_buf[i], spins[i]);
            out[i] = {2.0 * c[0], 2.0 * c[1], 2.0 * c[2]};
        }
    }
};

std::vector<double> crc_boundaries(const PulseProgram& program) {
    // Same segmentation rule as the statevector integrator.
    std::vector<double> times = {0.0};
    auto add = [&times, &program](const Waveform& w) {
        for (const auto& bp : w.breakpoints) {
            if (bp.first > 0.0 && bp.first <= program.duration) times.push_back(bp.first);
        }
    };
    add(program.rabi);
    add(program.phase);
    add(program.global_detuning);
    add(program.local_detuning);
    for (double t : program.timestep_times) times.push_back(t);
    times.push_back(program.duration);
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end(),
                            [](double a, double b) { return std::abs(a - b) < 1e-12; }),
                times.end());
    return times;
}

}  // namespace

std::vector<Vec3> effective_field(const SpinState& state, double t,
                                  const EncodedSample& sample, const PulseProgram& program,
                                  const ReservoirConfig& cfg) {
    CrcWorkspace ws(sample, cfg);
    std::vector<Vec3> out(ws.n);
    ws.fields(state.spins, t, sample, program, out);
    return out;
}

std::vector<SpinState> crc_evolve(const EncodedSample& sample, const PulseProgram& program,
                                  const ReservoirConfig& cfg) {
    if (program.timestep_times.empty() ||
        program.timestep_times.back() > program.duration + 1e-12) {
        throw ConfigError("program duration must cover every timestep time");
    }
    if (cfg.dt <= 0.0) throw ConfigError("integrator step must be positive");

    const CrcWorkspace ws(sample, cfg);
    std::vector<Vec3> spins(ws.n, Vec3{0.0, 0.0, -1.0});
    std::vector<Vec3> k1(ws.n), k2(ws.n), k3(ws.n), k4(ws.n), tmp(ws.n), fbuf(ws.n);

    auto rk4_step = [&](double t, double h) {
        ws.derivative(spins, t, sample, program, fbuf, k1);
        for (int i = 0; i < ws.n; ++i)
            for (int c = 0; c < 3; ++c) tmp[i][c] = spins[i][c] + 0.5 * h * k1[i][c];
        ws.derivative(tmp, t + 0.5 * h, sample, program, fbuf, k2);
        for (int i = 0; i < ws.n; ++i)
            for (int c = 0; c < 3; ++c) tmp[i][c] = spins[i][c] + 0.5 * h * k2[i][c];
        ws.derivative(tmp, t + 0.5 * h, sample, program, fbuf, k3);
        for (int i = 0; i < ws.n; ++i)
            for (int c = 0; c < 3; ++c) tmp[i][c] = spins[i][c] + h * k3[i][c];
        ws.derivative(tmp, t + h, sample, program, fbuf, k4);
        const double c6 = h / 6.0;
        for (int i = 0; i < ws.n; ++i) {
            for (int c = 0; c < 3; ++c)
                spins[i][c] += c6 * (k1[i][c] + 2.0 * k2[i][c] + 2.0 * k3[i][c] + k4[i][c]);
            const double nrm = std::sqrt(spins[i][0] * spins[i][0] + spins[i][1] * spins[i][1] +
                                         spins[i][2] * spins[i][2]);
            if (!(nrm > 0.0) || !std::isfinite(nrm)) {
                throw NumericalError("classical spin integration diverged");
            }
            for (int c = 0; c < 3; ++c) spins[i][c] /= nrm;
        }
    };

    std::vector<SpinState> snapshots;
    const auto boundaries = crc_boundaries(program);
    std::size_t next_snap = 0;
    for (std::size_t b = 1; b < boundaries.size(); ++b) {
        const double t0 = boundaries[b - 1];
        const double t1 = boundaries[b];
        const double len = t1 - t0;
        auto n_sub = std::size_t(std::ceil(len / cfg.dt - 1e-12));
        if (n_sub == 0) n_sub = 1;
        const double h = len / double(n_sub);
        for (std::size_t k = 0; k < n_sub; ++k) rk4_step(t0 + h * double(k), h);
        while (next_snap < program.timestep_times.size() &&
               std::abs(program.timestep_times[next_snap] - t1) < 1e-9) {
            snapshots.push_back(SpinState{spins});
            ++next_snap;
        }
    }
    if (next_snap != program.timestep_times.size()) {
        throw NumericalError("integration missed a snapshot time");
    }
    return snapshots;
}

ReservoirFeatures crc_features(const std::vector<SpinState>& snapshots) {
    ReservoirFeatures out;
    out.mode = "crc";
    for (const auto& snap : snapshots) {
        const int n = static_cast<int>(snap.spins.size());
        std::vector<double> row;
        for (int i = 0; i < n; ++i) row.push_back(-snap.spins[i][2]);
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                row.push_back(snap.spins[i][2] * snap.spins[j][2]);
        out.values.push_back(std::move(row));
    }
    return out;
}

ReservoirFeatures crc_reservoir_features(const EncodedSample& sample,
                                         const PulseProgram& program,
                                         const ReservoirConfig& cfg) {
    return crc_features(crc_evolve(sample, program, cfg));
}

}  // namespace qrcpipe
