#pragma once

#include <array>
#include <vector>

#include "qrcpipe/encoding.hpp"
#include "qrcpipe/qrc.hpp"

namespace qrcpipe {

// Classical unit spins, one per atom; ground state is -z (n = (1 + S_z)/2).
struct SpinState {
    std::vector<std::array<double, 3>> spins;
};

// B_i = (Omega/2) x + [-Delta_i/2 + sum_{j!=i} (V_ij/4)(1 + S_j^z)] z
std::vector<std::array<double, 3>> effective_field(const SpinState& state, double t,
                                                   const EncodedSample& sample,
                                                   const PulseProgram& program,
                                                   const ReservoirConfig& cfg);

// Integrates dS/dt = 2 B x S from all spins at -z; snapshots at the program's
// timestep times; spins renormalized every step.
std::vector<SpinState> crc_evolve(const EncodedSample& sample, const PulseProgram& program,
                                  const ReservoirConfig& cfg);

// z_i = -S_i^z, pair entries z_i z_j; layout identical to exact_features.
ReservoirFeatures crc_features(const std::vector<SpinState>& snapshots);

ReservoirFeatures crc_reservoir_features(const EncodedSample& sample,
                                         const PulseProgram& program,
                                         const ReservoirConfig& cfg);

}  // namespace qrcpipe
