#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "qrcpipe/encoding.hpp"
#include "qrcpipe/errors.hpp"

using namespace qrcpipe;

namespace {
constexpr double kPi = 3.14159265358979323846;

std::vector<double> twelve(double v) { return std::vector<double>(12, v); }
}  // namespace

TEST_CASE("trapezoid waveform breakpoints and interpolation") {
    auto w = build_waveform(2.0 * kPi, 2.5, 0.05);
    REQUIRE(w.breakpoints.size() == 4);
    CHECK(w.breakpoints[0] == std::pair{0.0, 0.0});
    CHECK(w.breakpoints[1].first == doctest::Approx(0.05));
    CHECK(w.breakpoints[1].second == doctest::Approx(2.0 * kPi));
    CHECK(w.breakpoints[2].first == doctest::Approx(2.45));
    CHECK(w.breakpoints[3] == std::pair{2.5, 0.0});
    CHECK(w.value_at(0.025) == doctest::Approx(kPi));
    CHECK(w.value_at(1.3) == doctest::Approx(2.0 * kPi));
    CHECK(w.value_at(2.475) == doctest::Approx(kPi));
    CHECK(w.value_at(-1.0) == 0.0);
    CHECK(w.value_at(3.0) == 0.0);

    SUBCASE("duration must exceed twice the ramp") {
        CHECK_THROWS_AS(build_waveform(1.0, 0.08, 0.05), ConfigError);
    }
}

TEST_CASE("position encoding geometry") {
    ReservoirConfig cfg;
    cfg.encoding = Encoding::position;

    SUBCASE("all features -1 remap to zero displacement") {
        auto s = encode_position(twelve(-1.0), cfg);
        REQUIRE(s.n_atoms == 13);
        for (int i = 0; i < 13; ++i) CHECK(s.positions_1d[i] == doctest::Approx(10.0 * i));
        for (double ls : s.local_scale) CHECK(ls == 0.0);
    }
    SUBCASE("a full-scale feature doubles its gap") {
        auto f = twelve(-1.0);
        f[3] = 1.0;  // remapped to 1 -> gap r0 (1 + lambda)
        auto s = encode_position(f, cfg);
        CHECK(s.positions_1d[4] - s.positions_1d[3] == doctest::Approx(20.0));
        CHECK(s.positions_1d[3] - s.positions_1d[2] == doctest::Approx(10.0));
    }
    SUBCASE("lambda 0 ignores features") {
        cfg.lambda = 0.0;
        auto a = encode_position(twelve(-0.7), cfg);
        auto b = encode_position(twelve(0.9), cfg);
        for (int i = 0; i < 13; ++i)
            CHECK(a.positions_1d[i] == doctest::Approx(b.positions_1d[i]));
    }
    SUBCASE("out-of-range feature rejected") {
        auto f = twelve(0.0);
        f[0] = 1.5;
        CHECK_THROWS_AS(encode_position(f, cfg), DataError);
    }
}

TEST_CASE("detuning encoding geometry") {
    ReservoirConfig cfg;
    auto s = encode_detuning(twelve(0.25), cfg);
    REQUIRE(s.n_atoms == 12);
    for (int i = 0; i < 12; ++i) {
        CHECK(s.positions_1d[i] == doctest::Approx(10.0 * i));
        CHECK(s.local_scale[i] == doctest::Approx(0.25));
    }
    // Site detuning at the hold plateau is Delta_global + Delta_l f.
    auto p = build_program(s, cfg);
    const double site0 =
        p.global_detuning.value_at(1.0) + p.local_detuning.value_at(1.0) * s.local_scale[0];
    CHECK(site0 == doctest::Approx(cfg.delta_global + cfg.delta_local * 0.25));
}

TEST_CASE("column embedding with replicas") {
    ReservoirConfig cfg;
    auto s = encode_detuning(twelve(0.0), cfg);  // 110 um column
    auto layout = embed_register(s, 6, cfg);
    REQUIRE(layout.sites.size() == 72);
    std::set<double> xs;
    for (const auto& [x, y] : layout.sites) xs.insert(x);
    CHECK(xs == std::set<double>{0.0, 15.0, 30.0, 45.0, 60.0, 75.0});
    CHECK(validate_layout(layout).empty());

    SUBCASE("single replica of a 13-atom column") {
        ReservoirConfig pc;
        pc.encoding = Encoding::position;
        auto ps = encode_position(twelve(-1.0), pc);  // 120 um
        auto one = embed_register(ps, 1, pc);
        CHECK(one.sites.size() == 13);
        for (const auto& [x, y] : one.sites) CHECK(x == 0.0);
        CHECK(one.sites.back().second == doctest::Approx(120.0));
    }
    SUBCASE("over-length detuning array is a layout error") {
        EncodedSample big;
        big.n_atoms = 32;
        for (int i = 0; i < 32; ++i) {
            big.positions_1d.push_back(10.0 * i);
            big.local_scale.push_back(0.0);
        }
        CHECK_THROWS_WITH_AS(embed_register(big, 1, cfg), doctest::Contains("layout error"),
                             DataError);
    }
    SUBCASE("long position array folds and stays valid") {
        ReservoirConfig pc;
        pc.encoding = Encoding::position;
        auto ps = encode_position(twelve(1.0), pc);  // 240 um
        auto folded = embed_register(ps, 1, pc);
        CHECK(folded.sites.size() == 13);
        CHECK(validate_layout(folded).empty());
    }
}

TEST_CASE("layout validation names the violated rule") {
    RegisterLayout layout;
    layout.replica_count = 1;
    layout.sites = {{0.0, 0.0}, {3.0, 0.0}};
    layout.local_scale = {0.0, 0.0};
    layout.replica_of = {{0, 0}, {0, 1}};
    auto v = validate_layout(layout);
    REQUIRE(v.size() == 1);
    CHECK(v[0].find("Euclidean") != std::string::npos);

    SUBCASE("register bounds") {
        layout.sites = {{0.0, 130.0}};
        layout.local_scale = {0.0};
        layout.replica_of = {{0, 0}};
        auto bv = validate_layout(layout);
        REQUIRE(bv.size() == 1);
        CHECK(bv[0].find("register") != std::string::npos);
    }
    SUBCASE("replica separation") {
        layout.sites = {{0.0, 0.0}, {10.0, 0.0}};
        layout.local_scale = {0.0, 0.0};
        layout.replica_of = {{0, 0}, {1, 0}};
        auto rv = validate_layout(layout);
        REQUIRE(rv.size() == 1);
        CHECK(rv[0].find("replica") != std::string::npos);
    }
}

TEST_CASE("per-timestep export programs") {
    ReservoirConfig cfg;
    auto s = encode_detuning(twelve(0.3), cfg);
    auto programs = export_programs(s, cfg);
    REQUIRE(programs.size() == 5);
    for (int k = 0; k < 5; ++k) {
        CHECK(programs[k].duration == doctest::Approx(0.5 * (k + 1)));
        CHECK(programs[k].rabi.breakpoints.back().first == doctest::Approx(0.5 * (k + 1)));
        CHECK(programs[k].phase.value_at(0.2) == 0.0);
    }
    // Program 1: ramp up [0, 0.05], hold, ramp down [0.45, 0.5].
    CHECK(programs[0].rabi.value_at(0.05) == doctest::Approx(cfg.omega_max));
    CHECK(programs[0].rabi.value_at(0.45) == doctest::Approx(cfg.omega_max));
    CHECK(programs[0].rabi.value_at(0.5) == doctest::Approx(0.0));

    SUBCASE("truncated drive matches the continuous drive before its ramp-down") {
        auto cont = build_program(s, cfg);
        for (double t : {0.0, 0.02, 0.1, 0.3, 0.44}) {
            CHECK(programs[0].rabi.value_at(t) == doctest::Approx(cont.rabi.value_at(t)));
        }
    }
}

TEST_CASE("program-spec serialization is self-describing") {
    ReservoirConfig cfg;
    auto s = encode_detuning(twelve(0.1), cfg);
    auto layout = embed_register(s, 2, cfg);
    auto programs = export_programs(s, cfg);
    auto doc = serialize_programs("s42", s, layout, programs, cfg);
    CHECK(doc.find("sample_id s42") != std::string::npos);
    CHECK(doc.find("encoding detuning") != std::string::npos);
    CHECK(doc.find("replicas 2") != std::string::npos);
    CHECK(doc.find("program 5") != std::string::npos);
    CHECK(doc.find("config_hash") != std::string::npos);
}

TEST_CASE("config hash distinguishes parameter changes") {
    ReservoirConfig a, b;
    b.delta_local *= 1.5;
    CHECK(a.hash() != b.hash());
    ReservoirConfig c;
    CHECK(a.hash() == c.hash());
}
