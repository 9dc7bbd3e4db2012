#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "qrcpipe/encoding.hpp"
#include "qrcpipe/table.hpp"

namespace qrcpipe {

struct QuantumState {
    std::vector<std::complex<double>> amplitudes;  // 2^n, basis bit i = atom i excited
    int n = 0;

    static QuantumState ground(int n_atoms);
    double norm() const;
};

// Per-timestep reservoir observables. Row k holds, for snapshot k, the n
// single-site <Z_i> values followed by the n(n-1)/2 pair values <Z_i Z_j>
// in lexicographic (i < j) order. Z_i = 1 - 2 n_i, so the initial state
// scores +1 everywhere.
struct ReservoirFeatures {
    std::vector<std::vector<double>> values;
    std::string mode = "exact";  // "exact", "shots", "crc", "hardware"
    int shots_per_timestep = 0;

    std::size_t n_timesteps() const { return values.size(); }
    std::vector<double> flat() const;
};

// Ordered names z_0.., zz_0_1.. for one timestep block of n atoms.
std::vector<std::string> feature_names(int n_atoms);

// -i H(t) |psi>, matrix-free; the diagonal is assembled per call, so prefer
// evolve() for full runs.
std::vector<std::complex<double>> hamiltonian_apply(const QuantumState& state, double t,
                                                    const EncodedSample& sample,
                                                    const PulseProgram& program,
                                                    const ReservoirConfig& cfg);

// Fixed-step 4th-order integration from |0...0>, one snapshot per entry of
// program.timestep_times. Steps align with waveform breakpoints.
std::vector<QuantumState> evolve(const EncodedSample& sample, const PulseProgram& program,
                                 const ReservoirConfig& cfg);

ReservoirFeatures exact_features(const std::vector<QuantumState>& snapshots);

ReservoirFeatures sample_shots(const std::vector<QuantumState>& snapshots,
                               int shots_per_timestep, std::uint64_t seed);

// One bitstring per shot drawn from the snapshot's Born distribution, lowest
// atom first. Used by the hardware shot-record synthesis path.
std::vector<std::vector<std::uint8_t>> draw_bitstrings(const QuantumState& snapshot,
                                                       int shots, std::uint64_t seed);

struct ShotRecord {
    std::string sample_id;
    int timestep = 0;  // 1-based
    int replica = 0;
    std::vector<std::uint8_t> bits;
};

std::vector<ShotRecord> parse_shot_records(const std::string& path);
void write_shot_records(const std::string& path, const std::vector<ShotRecord>& records);

// Pools shots across replicas per (sample, timestep); result order follows
// sample_ids. Throws on bit-length mismatch or missing timesteps.
std::vector<ReservoirFeatures> import_hardware_features(
    const std::vector<ShotRecord>& records, const std::vector<std::string>& sample_ids,
    int n_atoms, int n_timesteps);

// Feature table for a whole dataset: one row per sample, columns
// t<k>_z_i / t<k>_zz_i_j. mode is "sv", "shots:N", or "crc".
Table reservoir_table(const Table& preprocessed, const ReservoirConfig& cfg,
                      const std::string& mode, std::uint64_t seed, int n_threads = 0);

}  // namespace qrcpipe
