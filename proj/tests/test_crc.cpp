#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "qrcpipe/crc.hpp"
#include "qrcpipe/encoding.hpp"
#include "qrcpipe/errors.hpp"
#include "qrcpipe/qrc.hpp"

using namespace qrcpipe;

namespace {

constexpr double kPi = 3.14159265358979323846;

PulseProgram flat_program(double omega, double delta, double duration,
                          const std::vector<double>& snapshot_times, std::size_t n_atoms) {
    PulseProgram p;
    p.duration = duration;
    p.rabi.breakpoints = {{0.0, omega}, {duration, omega}};
    p.phase.breakpoints = {{0.0, 0.0}, {duration, 0.0}};
    p.global_detuning.breakpoints = {{0.0, delta}, {duration, delta}};
    p.local_detuning.breakpoints = {{0.0, 0.0}, {duration, 0.0}};
    p.local_scale.assign(n_atoms, 0.0);
    p.timestep_times = snapshot_times;
    return p;
}

EncodedSample chain(int n, double pitch) {
    EncodedSample s;
    s.n_atoms = n;
    for (int i = 0; i < n; ++i) {
        s.positions_1d.push_back(pitch * i);
        s.local_scale.push_back(0.0);
    }
    return s;
}

SpinState ground(int n) {
    SpinState st;
    st.spins.assign(n, {0.0, 0.0, -1.0});
    return st;
}

}  // namespace

TEST_CASE("effective field closed forms") {
    ReservoirConfig cfg;

    SUBCASE("all terms vanish at zero drive on the ground configuration") {
        auto s = chain(3, 10.0);
        auto p = flat_program(0.0, 0.0, 1.0, {1.0}, 3);
        auto b = effective_field(ground(3), 0.5, s, p, cfg);
        for (const auto& v : b)
            for (double c : v) CHECK(c == doctest::Approx(0.0).epsilon(1e-15));
    }
    SUBCASE("single spin under the bare drive") {
        auto s = chain(1, 10.0);
        auto p = flat_program(2.0 * kPi, 0.0, 1.0, {1.0}, 1);
        auto b = effective_field(ground(1), 0.5, s, p, cfg);
        CHECK(b[0][0] == doctest::Approx(kPi));
        CHECK(b[0][1] == 0.0);
        CHECK(b[0][2] == doctest::Approx(0.0));
    }
    SUBCASE("excited neighbor shifts the z-component by V/2") {
        auto s = chain(2, 10.0);
        auto p = flat_program(0.0, 0.0, 1.0, {1.0}, 2);
        SpinState st = ground(2);
        st.spins[1] = {0.0, 0.0, 1.0};
        auto b = effective_field(st, 0.5, s, p, cfg);
        CHECK(b[0][2] == doctest::Approx(cfg.c6 / (2.0 * 1e6)));
    }
}

TEST_CASE("zero drive gives zero torque") {
    ReservoirConfig cfg;
    auto s = chain(4, 10.0);
    auto p = flat_program(0.0, 2.3, 1.0, {0.5, 1.0}, 4);
    auto snaps = crc_evolve(s, p, cfg);
    for (const auto& snap : snaps)
        for (const auto& spin : snap.spins) {
            CHECK(spin[2] == doctest::Approx(-1.0).epsilon(1e-12));
        }
}

TEST_CASE("single-spin precession reproduces the quantum one-body result") {
    ReservoirConfig cfg;
    auto s = chain(1, 10.0);
    std::vector<double> times;
    for (int k = 1; k <= 10; ++k) times.push_back(0.1 * k);
    auto p = flat_program(2.0 * kPi, 0.0, 1.0, times, 1);
    auto f = crc_features(crc_evolve(s, p, cfg));
    for (int k = 0; k < 10; ++k) {
        CHECK(std::abs(f.values[k][0] - std::cos(2.0 * kPi * times[k])) < 1e-6);
    }

    SUBCASE("detuned one-body features also match the quantum emulation") {
        auto pd = flat_program(2.0 * kPi, 1.3, 1.0, times, 1);
        auto cf = crc_features(crc_evolve(s, pd, cfg));
        auto qf = exact_features(evolve(s, pd, cfg));
        for (int k = 0; k < 10; ++k) {
            CHECK(std::abs(cf.values[k][0] - qf.values[k][0]) < 1e-4);
        }
    }
}

TEST_CASE("widely separated atoms evolve as independent one-body systems") {
    // 1 mm spacing pushes V below 1e-12 rad/us; the CRC one-body features
    // must match the quantum features within 1e-4 at every timestep.
    ReservoirConfig cfg;
    auto s = chain(3, 1000.0);
    s.local_scale = {0.4, -0.2, 0.8};
    auto p = build_program(s, cfg);
    auto cf = crc_features(crc_evolve(s, p, cfg));
    auto qf = exact_features(evolve(s, p, cfg));
    for (std::size_t k = 0; k < cf.values.size(); ++k) {
        for (int i = 0; i < 3; ++i) {
            CHECK(std::abs(cf.values[k][i] - qf.values[k][i]) < 1e-4);
        }
    }
}

TEST_CASE("matches a tiny-step explicit Euler oracle") {
    ReservoirConfig cfg;
    auto rng = std::mt19937_64(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> feats = {u(rng), u(rng), u(rng), u(rng)};
    auto s = encode_detuning(feats, cfg);
    auto p = build_program(s, cfg);
    p.timestep_times = {0.5};

    // Explicit Euler with renormalization at dt = 2.5e-7.
    const int n = 4;
    std::vector<std::array<double, 3>> spins(n, {0.0, 0.0, -1.0});
    const double h = 2.5e-7;
    const auto steps = long(std::llround(0.5 / h));
    for (long step = 0; step < steps; ++step) {
        const double t = h * double(step);
        SpinState st{spins};
        auto b = effective_field(st, t, s, p, cfg);
        for (int i = 0; i < n; ++i) {
            const auto& bi = b[i];
            const auto& si = spins[i];
            std::array<double, 3> c = {bi[1] * si[2] - bi[2] * si[1],
                                       bi[2] * si[0] - bi[0] * si[2],
                                       bi[0] * si[1] - bi[1] * si[0]};
            for (int d = 0; d < 3; ++d) spins[i][d] += 2.0 * h * c[d];
            const double nrm = std::sqrt(spins[i][0] * spins[i][0] +
                                         spins[i][1] * spins[i][1] +
                                         spins[i][2] * spins[i][2]);
            for (int d = 0; d < 3; ++d) spins[i][d] /= nrm;
        }
    }

    auto snaps = crc_evolve(s, p, cfg);
    for (int i = 0; i < n; ++i)
        for (int d = 0; d < 3; ++d)
            CHECK(std::abs(snaps[0].spins[i][d] - spins[i][d]) < 1e-4);
}

TEST_CASE("spin norms conserved within 1e-8 over a full run") {
    ReservoirConfig cfg;
    std::vector<double> feats(12);
    for (int i = 0; i < 12; ++i) feats[i] = -1.0 + 2.0 * i / 11.0;
    auto s = encode_detuning(feats, cfg);
    auto snaps = crc_evolve(s, build_program(s, cfg), cfg);
    for (const auto& snap : snaps) {
        for (const auto& spin : snap.spins) {
            const double nrm =
                std::sqrt(spin[0] * spin[0] + spin[1] * spin[1] + spin[2] * spin[2]);
            CHECK(std::abs(nrm - 1.0) < 1e-8);
        }
    }
}

TEST_CASE("feature layout matches the quantum convention") {
    ReservoirConfig cfg;
    std::vector<double> feats(12, 0.2);
    auto s = encode_detuning(feats, cfg);
    auto f = crc_reservoir_features(s, build_program(s, cfg), cfg);
    CHECK(f.mode == "crc");
    CHECK(f.flat().size() == 390);
    for (double v : f.flat()) {
        CHECK(v >= -1.0 - 1e-9);
        CHECK(v <= 1.0 + 1e-9);
    }

    SUBCASE("initial snapshot scores +1 everywhere") {
        auto p = build_program(s, cfg);
        p.timestep_times = {1e-9};  // effectively t = 0
        auto f0 = crc_features(crc_evolve(s, p, cfg));
        for (double v : f0.values[0]) CHECK(v == doctest::Approx(1.0).epsilon(1e-6));
    }
    SUBCASE("pair feature is the product of the spin projections") {
        auto snaps = crc_evolve(s, build_program(s, cfg), cfg);
        auto ff = crc_features(snaps);
        const double z0 = -snaps[0].spins[0][2];
        const double z1 = -snaps[0].spins[1][2];
        CHECK(ff.values[0][12] == doctest::Approx(z0 * z1));
    }
}

TEST_CASE("determinism") {
    ReservoirConfig cfg;
    auto s = encode_detuning({0.1, -0.9, 0.5}, cfg);
    auto a = crc_reservoir_features(s, build_program(s, cfg), cfg);
    auto b = crc_reservoir_features(s, build_program(s, cfg), cfg);
    CHECK(a.flat() == b.flat());
}
