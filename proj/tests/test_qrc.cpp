#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <random>

#include "qrcpipe/encoding.hpp"
#include "qrcpipe/errors.hpp"
#include "qrcpipe/qrc.hpp"
#include "qrcpipe/rng.hpp"

using namespace qrcpipe;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Dense Hamiltonian at a fixed time; real symmetric because phi = 0 in every
// produced program.
Eigen::MatrixXd dense_hamiltonian(double t, const EncodedSample& sample,
                                  const PulseProgram& program, const ReservoirConfig& cfg) {
    const int n = int(sample.n_atoms);
    const auto dim = std::size_t(1) << n;
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
    const double omega = program.rabi.value_at(t);
    const double glob = program.global_detuning.value_at(t);
    const double loc = program.local_detuning.value_at(t);
    for (std::size_t s = 0; s < dim; ++s) {
        double diag = 0.0;
        for (int i = 0; i < n; ++i) {
            if (!(s >> i & 1u)) continue;
            diag -= glob + loc * sample.local_scale[i];
            for (int j = i + 1; j < n; ++j) {
                if (!(s >> j & 1u)) continue;
                const double r = sample.positions_1d[j] - sample.positions_1d[i];
                diag += cfg.c6 / std::pow(r, 6);
            }
        }
        h(s, s) = diag;
        for (int i = 0; i < n; ++i) {
            h(s, s ^ (std::size_t(1) << i)) += 0.5 * omega;
        }
    }
    return h;
}

// Matrix-exponential propagation over piecewise-constant slices: exact inside
// constant segments, fine slicing through ramps. Independent of the
// production integrator.
Eigen::VectorXcd dense_propagate(const EncodedSample& sample, const PulseProgram& program,
                                 const ReservoirConfig& cfg, double t_end) {
    const auto dim = std::size_t(1) << sample.n_atoms;
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(dim);
    psi(0) = 1.0;
    const double slice = 1e-4;
    double t = 0.0;
    while (t < t_end - 1e-12) {
        const double h = std::min(slice, t_end - t);
        const auto hm = dense_hamiltonian(t + 0.5 * h, sample, program, cfg);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hm);
        Eigen::VectorXcd phases(dim);
        for (std::size_t s = 0; s < dim; ++s) {
            phases(s) = std::exp(std::complex<double>(0.0, -es.eigenvalues()(s) * h));
        }
        psi = es.eigenvectors() *
              (phases.asDiagonal() * (es.eigenvectors().transpose() * psi));
        t += h;
    }
    return psi;
}

PulseProgram flat_program(double omega, double delta, double duration,
                          const std::vector<double>& snapshot_times,
                          std::size_t n_atoms) {
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

}  // namespace

TEST_CASE("hamiltonian apply agrees with the dense matrix") {
    ReservoirConfig cfg;
    auto rng = std::mt19937_64(99);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int n = 2; n <= 6; ++n) {
        std::vector<double> feats(n);
        for (auto& f : feats) f = u(rng);
        auto sample = encode_detuning(feats, cfg);
        auto program = build_program(sample, cfg);
        QuantumState state;
        state.n = n;
        state.amplitudes.resize(std::size_t(1) << n);
        for (auto& a : state.amplitudes) a = {u(rng), u(rng)};

        const double t = 0.3;
        const auto got = hamiltonian_apply(state, t, sample, program, cfg);
        const auto h = dense_hamiltonian(t, sample, program, cfg);
        for (std::size_t s = 0; s < got.size(); ++s) {
            std::complex<double> want = 0.0;
            for (std::size_t s2 = 0; s2 < got.size(); ++s2) {
                want += std::complex<double>(0.0, -1.0) * h(s, s2) * state.amplitudes[s2];
            }
            CHECK(std::abs(got[s] - want) < 1e-12);
        }
    }
}

TEST_CASE("two-atom interaction diagonal") {
    ReservoirConfig cfg;
    auto sample = chain(2, 10.0);
    auto program = flat_program(0.0, 0.0, 1.0, {1.0}, 2);
    QuantumState state;
    state.n = 2;
    state.amplitudes = {{0, 0}, {0, 0}, {0, 0}, {0.6, 0.8}};
    auto d = hamiltonian_apply(state, 0.5, sample, program, cfg);
    const double v = cfg.c6 / 1e6;
    const std::complex<double> want =
        std::complex<double>(0.0, -1.0) * v * std::complex<double>(0.6, 0.8);
    CHECK(std::abs(d[3] - want) < 1e-9 * v);
    CHECK(std::abs(d[0]) == 0.0);
    CHECK(std::abs(d[1]) == 0.0);
    CHECK(std::abs(d[2]) == 0.0);

    SUBCASE("zero drive on the ground state gives a zero derivative") {
        auto g = QuantumState::ground(2);
        auto dg = hamiltonian_apply(g, 0.5, sample, program, cfg);
        for (const auto& a : dg) CHECK(std::abs(a) == 0.0);
    }
}

TEST_CASE("single-atom Rabi oscillation matches the closed form") {
    ReservoirConfig cfg;
    auto sample = chain(1, 10.0);
    std::vector<double> times;
    for (int k = 1; k <= 10; ++k) times.push_back(0.1 * k);
    auto program = flat_program(2.0 * kPi, 0.0, 1.0, times, 1);
    auto f = exact_features(evolve(sample, program, cfg));
    for (int k = 0; k < 10; ++k) {
        CHECK(std::abs(f.values[k][0] - std::cos(2.0 * kPi * times[k])) < 1e-6);
    }
}

TEST_CASE("zero Rabi drive leaves the ground state invariant") {
    ReservoirConfig cfg;
    auto sample = encode_detuning({0.4, -0.2, 0.9}, cfg);
    auto program = flat_program(0.0, 1.7, 1.0, {0.5, 1.0}, 3);
    program.local_detuning.breakpoints = {{0.0, 2.0}, {1.0, 2.0}};
    program.local_scale = sample.local_scale;
    auto snaps = evolve(sample, program, cfg);
    for (const auto& snap : snaps) {
        CHECK(std::abs(std::abs(snap.amplitudes[0]) - 1.0) < 1e-9);
    }
    auto f = exact_features(snaps);
    for (const auto& row : f.values)
        for (double v : row) CHECK(v == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("evolution matches the dense propagator oracle") {
    ReservoirConfig cfg;
    auto rng = std::mt19937_64(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int rep = 0; rep < 3; ++rep) {
        std::vector<double> feats = {u(rng), u(rng), u(rng), u(rng)};
        auto sample = encode_detuning(feats, cfg);
        auto program = build_program(sample, cfg);
        program.timestep_times = {0.5, 1.0};
        auto snaps = evolve(sample, program, cfg);
        for (std::size_t k = 0; k < snaps.size(); ++k) {
            auto want = dense_propagate(sample, program, cfg, program.timestep_times[k]);
            for (std::size_t s = 0; s < snaps[k].amplitudes.size(); ++s) {
                CHECK(std::abs(snaps[k].amplitudes[s] - want(s)) < 1e-8);
            }
        }
    }
}

TEST_CASE("feature dimensionality and ordering") {
    CHECK(feature_names(12).size() == 78);
    CHECK(feature_names(13).size() == 91);
    auto names = feature_names(3);
    CHECK(names == std::vector<std::string>{"z_0", "z_1", "z_2", "zz_0_1", "zz_0_2", "zz_1_2"});

    ReservoirConfig cfg;
    std::vector<double> feats(12, 0.1);
    auto det = encode_detuning(feats, cfg);
    auto f = exact_features(evolve(det, build_program(det, cfg), cfg));
    CHECK(f.flat().size() == 390);

    ReservoirConfig pos = cfg;
    pos.encoding = Encoding::position;
    auto ps = encode_position(feats, pos);
    auto pf = exact_features(evolve(ps, build_program(ps, pos), pos));
    CHECK(pf.flat().size() == 455);

    SUBCASE("entries stay in [-1, 1]") {
        for (double v : f.flat()) {
            CHECK(v >= -1.0 - 1e-9);
            CHECK(v <= 1.0 + 1e-9);
        }
    }
}

TEST_CASE("permutation covariance of exact features") {
    // Reversing the chain relabels atoms n-1-i; detuning scales move with them
    // and distances are preserved, so features permute accordingly.
    ReservoirConfig cfg;
    std::vector<double> feats = {0.8, -0.3, 0.1};
    auto sample = encode_detuning(feats, cfg);
    auto f = exact_features(evolve(sample, build_program(sample, cfg), cfg));

    std::vector<double> rev(feats.rbegin(), feats.rend());
    auto rsample = encode_detuning(rev, cfg);
    auto rf = exact_features(evolve(rsample, build_program(rsample, cfg), cfg));

    const int n = 3;
    for (std::size_t k = 0; k < f.values.size(); ++k) {
        for (int i = 0; i < n; ++i) {
            CHECK(f.values[k][i] == doctest::Approx(rf.values[k][n - 1 - i]).epsilon(1e-9));
        }
        // zz_0_2 is symmetric under the reversal.
        CHECK(f.values[k][n + 1] == doctest::Approx(rf.values[k][n + 1]).epsilon(1e-9));
    }
}

TEST_CASE("shot sampling statistics") {
    SUBCASE("deterministic distribution gives exact features") {
        QuantumState one;
        one.n = 1;
        one.amplitudes = {{0.0, 0.0}, {1.0, 0.0}};
        auto f = sample_shots({one}, 50, 123);
        CHECK(f.values[0][0] == -1.0);
    }
    SUBCASE("equal superposition concentrates like a binomial") {
        QuantumState plus;
        plus.n = 1;
        plus.amplitudes = {{1.0 / std::sqrt(2.0), 0.0}, {1.0 / std::sqrt(2.0), 0.0}};
        auto f = sample_shots({plus}, 10000, 321);
        CHECK(std::abs(f.values[0][0]) <= 5.0 / 100.0);
    }
    SUBCASE("deterministic given seed, different across seeds") {
        QuantumState plus;
        plus.n = 2;
        plus.amplitudes = {{0.5, 0}, {0.5, 0}, {0.5, 0}, {0.5, 0}};
        auto a = sample_shots({plus}, 64, 9);
        auto b = sample_shots({plus}, 64, 9);
        auto c = sample_shots({plus}, 64, 10);
        CHECK(a.values[0] == b.values[0]);
        CHECK(a.values[0] != c.values[0]);
    }
    SUBCASE("converges to exact features") {
        ReservoirConfig cfg;
        auto sample = encode_detuning({0.5, -0.5}, cfg);
        auto snaps = evolve(sample, build_program(sample, cfg), cfg);
        auto exact = exact_features(snaps);
        auto sampled = sample_shots(snaps, 200000, 77);
        for (std::size_t k = 0; k < exact.values.size(); ++k)
            for (std::size_t i = 0; i < exact.values[k].size(); ++i)
                CHECK(std::abs(exact.values[k][i] - sampled.values[k][i]) < 0.02);
    }
}

TEST_CASE("shot records round trip and pooled import") {
    QuantumState plus;
    plus.n = 3;
    plus.amplitudes.assign(8, {0.0, 0.0});
    plus.amplitudes[5] = {1.0, 0.0};  // bits 101: atoms 0 and 2 excited

    std::vector<ShotRecord> records;
    for (int replica = 0; replica < 2; ++replica) {
        for (const auto& bits : draw_bitstrings(plus, 4, 100 + replica)) {
            records.push_back({"s0", 1, replica, bits});
        }
    }
    const std::string path = "/tmp/qrcpipe_test_shots.txt";
    write_shot_records(path, records);
    auto loaded = parse_shot_records(path);
    REQUIRE(loaded.size() == 8);
    CHECK(loaded[0].sample_id == "s0");
    CHECK(loaded[0].bits == std::vector<std::uint8_t>{1, 0, 1});

    auto features = import_hardware_features(loaded, {"s0"}, 3, 1);
    REQUIRE(features.size() == 1);
    CHECK(features[0].shots_per_timestep == 8);
    CHECK(features[0].values[0][0] == -1.0);  // z_0
    CHECK(features[0].values[0][1] == 1.0);   // z_1
    CHECK(features[0].values[0][2] == -1.0);  // z_2
    CHECK(features[0].values[0][3] == -1.0);  // zz_0_1

    SUBCASE("bit-length mismatch is a format error") {
        CHECK_THROWS_AS(import_hardware_features(loaded, {"s0"}, 4, 1), DataError);
    }
    SUBCASE("missing timestep is a completeness error") {
        CHECK_THROWS_WITH_AS(import_hardware_features(loaded, {"s0"}, 3, 2),
                             doctest::Contains("missing"), DataError);
    }
    SUBCASE("all-zero bitstrings score +1 everywhere") {
        std::vector<ShotRecord> zeros = {{"a", 1, 0, {0, 0, 0}}};
        auto f = import_hardware_features(zeros, {"a"}, 3, 1);
        for (double v : f[0].values[0]) CHECK(v == 1.0);
    }
}

TEST_CASE("norm is conserved over a full-size evolution") {
    ReservoirConfig cfg;
    std::vector<double> feats(12);
    for (int i = 0; i < 12; ++i) feats[i] = -1.0 + 2.0 * i / 11.0;
    auto sample = encode_detuning(feats, cfg);
    auto snaps = evolve(sample, build_program(sample, cfg), cfg);
    for (const auto& s : snaps) CHECK(std::abs(s.norm() - 1.0) < 1e-6);
}

TEST_CASE("halving the step leaves recorded amplitudes unchanged to 1e-8") {
    ReservoirConfig cfg;
    auto sample = encode_detuning({0.3, -0.6, 0.9, 0.0}, cfg);
    auto program = build_program(sample, cfg);
    auto coarse = evolve(sample, program, cfg);
    ReservoirConfig fine = cfg;
    fine.dt = cfg.dt / 2.0;
    auto refined = evolve(sample, program, fine);
    for (std::size_t k = 0; k < coarse.size(); ++k)
        for (std::size_t s = 0; s < coarse[k].amplitudes.size(); ++s)
            CHECK(std::abs(coarse[k].amplitudes[s] - refined[k].amplitudes[s]) < 1e-8);
}
