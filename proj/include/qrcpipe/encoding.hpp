#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace qrcpipe {

enum class Encoding { position, detuning };

std::string to_string(Encoding e);
Encoding encoding_from_string(const std::string& s);

// Piecewise-linear waveform; times strictly increasing from 0, units us and
// rad/us throughout.
struct Waveform {
    std::vector<std::pair<double, double>> breakpoints;

    double value_at(double t) const;
    double duration() const { return breakpoints.empty() ? 0.0 : breakpoints.back().first; }
};

// Trapezoid 0 -> peak -> 0 with linear ramps of the given width at both ends.
Waveform build_waveform(double peak, double duration, double ramp);

struct PulseProgram {
    Waveform rabi;
    Waveform phase;            // constant 0 in every produced program
    Waveform global_detuning;
    Waveform local_detuning;   // scaled per atom by EncodedSample::local_scale
    std::vector<double> local_scale;
    double duration = 0.0;
    std::vector<double> timestep_times;
};

struct EncodedSample {
    std::vector<double> positions_1d;  // um, strictly increasing
    std::vector<double> local_scale;   // dimensionless, one per atom
    std::size_t n_atoms = 0;
};

struct RegisterLayout {
    std::vector<std::pair<double, double>> sites;  // (x, y) um
    std::vector<double> local_scale;
    int replica_count = 0;
    // Parallel to sites: which replica and which in-array atom each site is.
    std::vector<std::pair<int, int>> replica_of;
};

struct ReservoirConfig {
    double r0 = 10.0;              // um
    double lambda = 1.0;
    double delta_local = 2.0 * 3.14159265358979323846;   // rad/us
    double omega_max = 2.0 * 3.14159265358979323846;     // rad/us
    double delta_global = 2.0;     // rad/us
    double ramp = 0.05;            // us
    double timestep = 0.5;         // us
    int n_timesteps = 5;
    double c6 = 2.0 * 3.14159265358979323846 * 862690.0;  // rad us^-1 um^6
    Encoding encoding = Encoding::detuning;
    double dt = 1e-3;              // integrator step, us

    double total_time() const { return timestep * n_timesteps; }
    std::uint64_t hash() const;
};

EncodedSample encode_position(const std::vector<double>& features, const ReservoirConfig& cfg);
EncodedSample encode_detuning(const std::vector<double>& features, const ReservoirConfig& cfg);
EncodedSample encode(const std::vector<double>& features, const ReservoirConfig& cfg);

// Single continuous drive covering all timesteps, used by the emulators.
PulseProgram build_program(const EncodedSample& sample, const ReservoirConfig& cfg);

// One truncated program per timestep (durations k * timestep), the hardware
// restart discipline used only for export.
std::vector<PulseProgram> export_programs(const EncodedSample& sample,
                                          const ReservoirConfig& cfg);

RegisterLayout embed_register(const EncodedSample& sample, int replicas,
                              const ReservoirConfig& cfg);
std::vector<std::string> validate_layout(const RegisterLayout& layout);

// Program-spec document for one sample (all timesteps), plain text.
std::string serialize_programs(const std::string& sample_id, const EncodedSample& sample,
                               const RegisterLayout& layout,
                               const std::vector<PulseProgram>& programs,
                               const ReservoirConfig& cfg);

}  // namespace qrcpipe
