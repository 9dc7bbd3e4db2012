#include "qrcpipe/qrc.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>

#include "qrcpipe/crc.hpp"
#include "qrcpipe/errors.hpp"
#include "qrcpipe/parallel.hpp"
#include "qrcpipe/rng.hpp"

namespace qrcpipe {

QuantumState QuantumState::ground(int n_atoms) {
    QuantumState s;
    s.n = n_atoms;
    s.amplitudes.assign(std::size_t(1) << n_atoms, {0.0, 0.0});
    s.amplitudes[0] = {1.0, 0.0};
    return s;
}

double QuantumState::norm() const {
    double s = 0.0;
    for (const auto& a : amplitudes) s += std::norm(a);
    return std::sqrt(s);
}

std::vector<double> ReservoirFeatures::flat() const {
    std::vector<double> out;
    for (const auto& row : values) out.insert(out.end(), row.begin(), row.end());
    return out;
}

std::vector<std::string> feature_names(int n_atoms) {
    std::vector<std::string> names;
    for (int i = 0; i < n_atoms; ++i) names.push_back("z_" + std::to_string(i));
    for (int i = 0; i < n_atoms; ++i)
        for (int j = i + 1; j < n_atoms; ++j)
            names.push_back("zz_" + std::to_string(i) + "_" + std::to_string(j));
    return names;
}

namespace {

// Precomputed per-basis-state diagonal pieces; the time-dependent diagonal is
// inter[s] - global(t) * pop[s] - local(t) * locw[s].
struct Workspace {
    int n = 0;
    std::size_t dim = 0;
    std::vector<double> inter;
    std::vector<double> pop;
    std::vector<double> locw;

    Workspace(const EncodedSample& sample, const ReservoirConfig& cfg) {
        n = static_cast<int>(sample.n_atoms);
        dim = std::size_t(1) << n;
        std::vector<double> vij(std::size_t(n) * n, 0.0);
        for (int i = 0; i < n; ++i) {
            for (int j = i + 1; j < n; ++j) {
                const double r = sample.positions_1d[j] - sample.positions_1d[i];
                vij[std::size_t(i) * n + j] = cfg.c6 / std::pow(r, 6);
            }
        }
        inter.assign(dim, 0.0);
        pop.assign(dim, 0.0);
        locw.assign(dim, 0.0);
        for (std::size_t s = 0; s < dim; ++s) {
            double e = 0.0;
            int p = 0;
            double lw = 0.0;
            for (int i = 0; i < n; ++i) {
                if (!(s >> i & 1u)) continue;
                ++p;
                lw += sample.local_scale[i];
                for (int j = i + 1; j < n; ++j)
                    if (s >> j & 1u) e += vij[std::size_t(i) * n + j];
            }
            inter[s] = e;
            pop[s] = p;
            locw[s] = lw;
        }
    }

    // out = -i H(t) psi
    void apply(const std::vector<std::complex<double>>& psi, double t,
               const PulseProgram& program,
               std::vector<std::complex<double>>& out) const {
        const double half_omega = 0.5 * program.rabi.value_at(t);
        const double phi = program.phase.value_at(t);
        const double glob = program.global_detuning.value_at(t);
        const double loc = program.local_detuning.value_at(t);
        const std::complex<double> mi(0.0, -1.0);
        for (std::size_t s = 0; s < dim; ++s) {
            const double diag = inter[s] - glob * pop[s] - loc * locw[s];
            out[s] = mi * diag * psi[s];
        }
        if (half_omega != 0.0) {
            const std::complex<double> up =
                mi * half_omega * std::complex<double>(std::cos(phi), std::sin(phi));
            const std::complex<double> dn =
                mi * half_omega * std::complex<double>(std::cos(phi), -std::sin(phi));
            for (int i = 0; i < n; ++i) {
                const std::size_t bit = std::size_t(1) << i;
                for (std::size_t s0 = 0; s0 < dim; ++s0) {
                    if (s0 & bit) continue;
                    const std::size_t s1 = s0 | bit;
                    // e^{i phi} |0><1| lowers, its conjugate raises
                    out[s0] += up * psi[s1];
                    out[s1] += dn * psi[s0];
                }
            }
        }
    }
};

std::vector<double> integration_boundaries(const PulseProgram& program) {
    std::set<double> times = {0.0};
    auto add = [&times, &program](const Waveform& w) {
        for (const auto& [t, v] : w.breakpoints) {
            (void)v;
            if (t > 0.0 && t <= program.duration) times.insert(t);
        }
    };
    add(program.rabi);
    add(program.phase);
    add(program.global_detuning);
    add(program.local_detuning);
    for (double t : program.timestep_times) times.insert(t);
    times.insert(program.duration);
    return {times.begin(), times.end()};
}

}  // namespace

std::vector<std::complex<double>> hamiltonian_apply(const QuantumState& state, double t,
                                                    const EncodedSample& sample,
                                                    const PulseProgram& program,
                                                    const ReservoirConfig& cfg) {
    Workspace ws(sample, cfg);
    std::vector<std::complex<double>> out(ws.dim);
    ws.apply(state.amplitudes, t, program, out);
    return out;
}

std::vector<QuantumState> evolve(const EncodedSample& sample, const PulseProgram& program,
                                 const ReservoirConfig& cfg) {
    if (program.timestep_times.empty() ||
        program.timestep_times.back() > program.duration + 1e-12) {
        throw ConfigError("program duration must cover every timestep time");
    }
    if (cfg.dt <= 0.0) throw ConfigError("integrator step must be positive");

    const Workspace ws(sample, cfg);
    QuantumState state = QuantumState::ground(ws.n);
    std::vector<QuantumState> snapshots;

    std::vector<std::complex<double>> k1(ws.dim), k2(ws.dim), k3(ws.dim), k4(ws.dim),
        tmp(ws.dim);
    auto rk4_step = [&](double t, double h) {
        auto& y = state.amplitudes;
        ws.apply(y, t, program, k1);
        for (std::size_t s = 0; s < ws.dim; ++s) tmp[s] = y[s] + 0.5 * h * k1[s];
        ws.apply(tmp, t + 0.5 * h, program, k2);
        for (std::size_t s = 0; s < ws.dim; ++s) tmp[s] = y[s] + 0.5 * h * k2[s];
        ws.apply(tmp, t + 0.5 * h, program, k3);
        for (std::size_t s = 0; s < ws.dim; ++s) tmp[s] = y[s] + h * k3[s];
        ws.apply(tmp, t + h, program, k4);
        const double c = h / 6.0;
        for (std::size_t s = 0; s < ws.dim; ++s)
            y[s] += c * (k1[s] + 2.0 * k2[s] + 2.0 * k3[s] + k4[s]);
    };

    const auto boundaries = integration_boundaries(program);
    std::size_t next_snap = 0;
    for (std::size_t b = 1; b < boundaries.size(); ++b) {
        const double t0 = boundaries[b - 1];
        const double t1 = boundaries[b];
        const double len = t1 - t0;
        const auto n_sub = std::size_t(std::ceil(len / cfg.dt - 1e-12));
        const double h = len / double(std::max<std::size_t>(n_sub, 1));
        for (std::size_t k = 0; k < std::max<std::size_t>(n_sub, 1); ++k) {
            rk4_step(t0 + h * double(k), h);
        }
        while (next_snap < program.timestep_times.size() &&
               std::abs(program.timestep_times[next_snap] - t1) < 1e-9) {
            snapshots.push_back(state);
            ++next_snap;
        }
        if (!std::isfinite(state.amplitudes[0].real())) {
            throw NumericalError("statevector integration diverged");
        }
    }
    if (next_snap != program.timestep_times.size()) {
        throw NumericalError("integration missed a snapshot time");
    }
    const double drift = std::abs(state.norm() - 1.0);
    if (drift > 1e-6) {
        throw NumericalError("statevector norm drifted by " + std::to_string(drift) +
                             "; reduce the integrator step");
    }
    return snapshots;
}

ReservoirFeatures exact_features(const std::vector<QuantumState>& snapshots) {
    ReservoirFeatures out;
    out.mode = "exact";
    for (const auto& snap : snapshots) {
        const int n = snap.n;
        std::vector<double> z(n, 0.0);
        std::vector<double> zz(std::size_t(n) * n, 0.0);
        for (std::size_t s = 0; s < snap.amplitudes.size(); ++s) {
            const double p = std::norm(snap.amplitudes[s]);
            if (p == 0.0) continue;
            for (int i = 0; i < n; ++i) {
                const double zi = (s >> i & 1u) ? -1.0 : 1.0;
                z[i] += p * zi;
                for (int j = i + 1; j < n; ++j) {
                    const double zj = (s >> j & 1u) ? -1.0 : 1.0;
                    zz[std::size_t(i) * n + j] += p * zi * zj;
                }
            }
        }
        std::vector<double> row = z;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) row.push_back(zz[std::size_t(i) * n + j]);
        out.values.push_back(std::move(row));
    }
    return out;
}

std::vector<std::vector<std::uint8_t>> draw_bitstrings(const QuantumState& snapshot,
                                                       int shots, std::uint64_t seed) {
    if (shots < 1) throw ConfigError("shot count must be >= 1");
    std::vector<double> cdf(snapshot.amplitudes.size());
    double acc = 0.0;
    for (std::size_t s = 0; s < cdf.size(); ++s) {
        acc += std::norm(snapshot.amplitudes[s]);
        cdf[s] = acc;
    }
    auto rng = std::mt19937_64(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<std::vector<std::uint8_t>> out(shots);
    for (int k = 0; k < shots; ++k) {
        const double u = unit(rng) * acc;
        const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
        const auto s = std::size_t(it - cdf.begin());
        std::vector<std::uint8_t> bits(snapshot.n);
        for (int i = 0; i < snapshot.n; ++i) bits[i] = std::uint8_t(s >> i & 1u);
        out[k] = std::move(bits);
    }
    return out;
}

namespace {

// Empirical Z / ZZ means from pooled bitstrings of one timestep.
std::vector<double> features_from_bits(const std::vector<std::vector<std::uint8_t>>& shots,
                                       int n) {
    std::vector<double> sz(n, 0.0);
    std::vector<double> szz(std::size_t(n) * n, 0.0);
    for (const auto& bits : shots) {
        for (int i = 0; i < n; ++i) {
            const double zi = bits[i] ? -1.0 : 1.0;
            sz[i] += zi;
            for (int j = i + 1; j < n; ++j) {
                const double zj = bits[j] ? -1.0 : 1.0;
                szz[std::size_t(i) * n + j] += zi * zj;
            }
        }
    }
    const double inv = 1.0 / double(shots.size());
    std::vector<double> row;
    for (int i = 0; i < n; ++i) row.push_back(sz[i] * inv);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) row.push_back(szz[std::size_t(i) * n + j] * inv);
    return row;
}

}  // namespace

ReservoirFeatures sample_shots(const std::vector<QuantumState>& snapshots,
                               int shots_per_timestep, std::uint64_t seed) {
    ReservoirFeatures out;
    out.mode = "shots";
    out.shots_per_timestep = shots_per_timestep;
    for (std::size_t k = 0; k < snapshots.size(); ++k) {
        const auto bits = draw_bitstrings(snapshots[k], shots_per_timestep,
                                          derive_seed(seed, "qrc/shots", k));
        out.values.push_back(features_from_bits(bits, snapshots[k].n));
    }
    return out;
}

std::vector<ShotRecord> parse_shot_records(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open shot-record file: " + path);
    std::vector<ShotRecord> records;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        ShotRecord rec;
        std::string bits;
        if (!(ss >> rec.sample_id >> rec.timestep >> rec.replica >> bits)) {
            throw DataError("malformed shot record at line " + std::to_string(lineno));
        }
        rec.bits.reserve(bits.size());
        for (char c : bits) {
            if (c != '0' && c != '1') {
                throw DataError("non-binary bitstring at line " + std::to_string(lineno));
            }
            rec.bits.push_back(std::uint8_t(c - '0'));
        }
        records.push_back(std::move(rec));
    }
    return records;
}

void write_shot_records(const std::string& path, const std::vector<ShotRecord>& records) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write shot-record file: " + path);
    out << "# sample_id timestep replica bitstring (bit 1 = excited, atom 0 first)\n";
    for (const auto& rec : records) {
        out << rec.sample_id << ' ' << rec.timestep << ' ' << rec.replica << ' ';
        for (auto b : rec.bits) out << char('0' + b);
        out << '\n';
    }
}

std::vector<ReservoirFeatures> import_hardware_features(
    const std::vector<ShotRecord>& records, const std::vector<std::string>& sample_ids,
    int n_atoms, int n_timesteps) {
    std::map<std::string, std::map<int, std::vector<std::vector<std::uint8_t>>>> pooled;
    for (const auto& rec : records) {
        if (int(rec.bits.size()) != n_atoms) {
            throw DataError("shot record for sample " + rec.sample_id + " has " +
                            std::to_string(rec.bits.size()) + " bits, expected " +
                            std::to_string(n_atoms));
        }
        if (rec.timestep < 1 || rec.timestep > n_timesteps) {
            throw DataError("shot record timestep " + std::to_string(rec.timestep) +
                            " outside 1.." + std::to_string(n_timesteps));
        }
        pooled[rec.sample_id][rec.timestep].push_back(rec.bits);
    }
    std::vector<ReservoirFeatures> out;
    std::vector<std::string> missing;
    for (const auto& id : sample_ids) {
        ReservoirFeatures f;
        f.mode = "hardware";
        const auto it = pooled.find(id);
        for (int k = 1; k <= n_timesteps; ++k) {
            if (it == pooled.end() || !it->second.count(k)) {
                missing.push_back(id + ":" + std::to_string(k));
                continue;
            }
            const auto& shots = it->second.at(k);
            f.shots_per_timestep = int(shots.size());
            f.values.push_back(features_from_bits(shots, n_atoms));
        }
        out.push_back(std::move(f));
    }
    if (!missing.empty()) {
        std::string msg = "shot records incomplete; missing (sample, timestep):";
        for (std::size_t i = 0; i < missing.size() && i < 20; ++i) msg += " " + missing[i];
        if (missing.size() > 20) msg += " ...";
        throw DataError(msg);
    }
    return out;
}

Table reservoir_table(const Table& preprocessed, const ReservoirConfig& cfg,
                      const std::string& mode, std::uint64_t seed, int n_threads) {
    int shots = 0;
    bool crc = false;
    if (mode == "sv") {
    } else if (mode == "crc") {
        crc = true;
    } else if (mode.rfind("shots:", 0) == 0) {
        shots = std::stoi(mode.substr(6));
        if (shots < 1) throw ConfigError("shot count must be >= 1");
    } else {
        throw ConfigError("unknown reservoir mode '" + mode + "' (sv, shots:N, crc)");
    }

    const auto n_features = preprocessed.n_cols();
    const int n_atoms = int(cfg.encoding == Encoding::position ? n_features + 1 : n_features);
    const auto block = feature_names(n_atoms);

    Table out;
    for (int k = 1; k <= cfg.n_timesteps; ++k)
        for (const auto& name : block) out.columns.push_back("t" + std::to_string(k) + "_" + name);
    out.rows.resize(preprocessed.n_rows());
    out.labels = preprocessed.labels;

    std::atomic<bool> failed{false};
    std::string error;
    std::mutex error_mutex;
    parallel_for(
        preprocessed.n_rows(),
        [&](std::size_t r) {
            if (failed.load()) return;
            try {
                const auto sample = encode(preprocessed.rows[r], cfg);
                const auto program = build_program(sample, cfg);
                ReservoirFeatures f;
                if (crc) {
                    f = crc_reservoir_features(sample, program, cfg);
                } else {
                    const auto snapshots = evolve(sample, program, cfg);
                    f = shots > 0
                            ? sample_shots(snapshots, shots, derive_seed(seed, "qrc/sample", r))
                            : exact_features(snapshots);
                }
                out.rows[r] = f.flat();
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(error_mutex);
                failed = true;
                error = e.what();
            }
        },
        n_threads);
    if (failed) throw NumericalError("reservoir evaluation failed: " + error);
    return out;
}

}  // namespace qrcpipe
