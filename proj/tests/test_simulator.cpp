#include "pfloc/errors.hpp"
#include "pfloc/simulator.hpp"
#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace pfloc;

namespace {

const DoaGrid& iso_grid() {
    static const DoaGrid grid =
        build_doa_grid(testing::iso_waveguide(kDefaultReceiverDepth), kDefaultRoi, 49, 34, kAllPaths);
    return grid;
}

// A waveguide with a +-10 degree eigenray fan: the bottom paths vanish at short range.
const DoaGrid& narrow_grid() {
    static const DoaGrid grid = [] {
        GridBuildOptions opts;
        opts.eigenray.fan_limit_deg = 10.0;
        return build_doa_grid(testing::iso_waveguide(kDefaultReceiverDepth), kDefaultRoi, 25, 12, kAllPaths, opts);
    }();
    return grid;
}

}  // namespace

TEST_CASE("default scenario epochs and dropouts") {
    ScenarioConfig cfg;
    ScenarioConfig no_gaps = cfg;
    no_gaps.dropouts.clear();
    auto all = epoch_indices(no_gaps);
    CHECK(all.size() == 586);
    CHECK(all.front() == 0);
    CHECK(all.back() == 585);

    auto kept = epoch_indices(cfg);
    CHECK(kept.size() == 586 - 72);
    for (std::size_t n : kept) {
        double t = 2.048 * static_cast<double>(n);
        CHECK_FALSE((t >= 420.0 && t < 494.0));
        CHECK_FALSE((t >= 660.0 && t < 734.0));
    }

    ScenarioConfig empty = cfg;
    empty.duration_s = 0.0;
    empty.dropouts.clear();
    CHECK(epoch_indices(empty).empty());
    CHECK(generate_truth(empty).samples.empty());
}

TEST_CASE("deterministic truth moves linearly at constant depth") {
    ScenarioConfig cfg;
    cfg.initial = {2000.0, 60.0, -2.5};
    cfg.dropouts.clear();
    cfg.duration_s = 500.0;
    auto track = generate_truth(cfg);
    CHECK(track.warning.empty());
    for (const auto& s : track.samples) {
        CHECK(s.state.range == doctest::Approx(2000.0 - 2.5 * s.time_s).epsilon(1e-14));
        CHECK(s.state.depth == 60.0);
        CHECK(s.time_s == 2.048 * static_cast<double>(s.t_index));
    }
    for (std::size_t n = 1; n < track.samples.size(); ++n) CHECK(track.samples[n].time_s > track.samples[n - 1].time_s);

    // Range 1000 m at 400 s.
    SourceState at400{2000.0 - 2.5 * 400.0, 60.0, -2.5};
    CHECK(at400.range == 1000.0);
}

TEST_CASE("truth leaving the roi is truncated with a warning") {
    ScenarioConfig cfg;
    cfg.initial = {2000.0, 60.0, -2.5};
    cfg.dropouts.clear();
    auto track = generate_truth(cfg);
    CHECK_FALSE(track.warning.empty());
    REQUIRE_FALSE(track.samples.empty());
    CHECK(track.samples.back().state.range >= kDefaultRoi.range_min);
    CHECK(track.samples.back().time_s < 761.0);
    CHECK(track.samples.back().time_s > 755.0);
}

TEST_CASE("stochastic truth increments follow the motion covariance") {
    ScenarioConfig cfg;
    cfg.motion = TruthMotion::Stochastic;
    cfg.initial = {5.0e6, 1.0e5, 0.0};
    cfg.roi = {1.0, 1.0e7, 0.0, 2.0e5};
    cfg.duration_s = 2.048 * 10001.0;
    cfg.dropouts.clear();
    cfg.seed = 99;
    auto track = generate_truth(cfg);
    REQUIRE(track.samples.size() == 10001);

    const double t = 2.048;
    double s_r = 0.0, s_r2 = 0.0, s_v2 = 0.0, s_d2 = 0.0, s_rv = 0.0;
    const double n = 10000.0;
    for (std::size_t i = 1; i < track.samples.size(); ++i) {
        const auto& a = track.samples[i - 1].state;
        const auto& b = track.samples[i].state;
        double dr = b.range - a.range - t * a.range_speed;
        double dv = b.range_speed - a.range_speed;
        double dd = b.depth - a.depth;
        s_r += dr;
        s_r2 += dr * dr;
        s_v2 += dv * dv;
        s_d2 += dd * dd;
        s_rv += dr * dv;
    }
    double var_r = s_r2 / n - (s_r / n) * (s_r / n);
    CHECK(var_r == doctest::Approx(0.25 * t * t * t * t * 0.05).epsilon(0.05));
    CHECK(s_v2 / n == doctest::Approx(t * t * 0.05).epsilon(0.05));
    CHECK(s_d2 / n == doctest::Approx(t * t * 0.1).epsilon(0.05));
    CHECK(s_rv / n == doctest::Approx(0.5 * t * t * t * 0.05).epsilon(0.05));
}

TEST_CASE("noiseless observations equal the modelled arrivals") {
    const auto& grid = iso_grid();
    ScenarioConfig cfg;
    cfg.model = {{1e-6, 1e-6, 1e-6, 1e-6}, 1.0, 0.0};
    cfg.duration_s = 100.0;
    cfg.dropouts.clear();
    auto truth = generate_truth(cfg);
    auto obs = generate_observations(truth, grid, kAllPaths, cfg.model, 1);
    REQUIRE(obs.size() == truth.samples.size());
    for (std::size_t n = 0; n < obs.size(); ++n) {
        REQUIRE(obs[n].z.size() == 4);
        CHECK(obs[n].t_index == truth.samples[n].t_index);
        for (std::size_t k = 0; k < 4; ++k) {
            double g = *interpolate_doa(grid, truth.samples[n].state.position(), k);
            CHECK(obs[n].z[k] == doctest::Approx(g).epsilon(1e-6));
        }
    }
}

TEST_CASE("impossible paths never produce detections") {
    const auto& grid = narrow_grid();
    ScenarioConfig cfg;
    cfg.initial = {300.0, 100.0, 0.0};
    cfg.model = {{1e-6, 1e-6, 1e-6, 1e-6}, 1.0, 0.0};
    cfg.duration_s = 20.0;
    cfg.dropouts.clear();
    auto truth = generate_truth(cfg);
    std::size_t possible = 0;
    for (std::size_t k = 0; k < 4; ++k)
        if (interpolate_doa(grid, cfg.initial.position(), k)) ++possible;
    REQUIRE(possible < 4);
    auto obs = generate_observations(truth, grid, kAllPaths, cfg.model, 2);
    for (const auto& o : obs) CHECK(o.z.size() == possible);
}

TEST_CASE("false alarm and detection statistics") {
    const auto& grid = iso_grid();
    ScenarioConfig cfg;
    cfg.initial = {1500.0, 60.0, 0.0};
    cfg.duration_s = 2.048 * 100000.0;
    cfg.dropouts.clear();
    cfg.model = {{0.5, 0.5}, 0.9, 2.0};
    std::vector<PathKind> sb = {PathKind::SB, PathKind::DP};
    cfg.paths = sb;
    auto truth = generate_truth(cfg);
    REQUIRE(truth.samples.size() == 100000);

    // Separate the streams: clutter alone, then detections alone.
    ModelParams clutter_only{{0.5, 0.5}, 0.0, 2.0};
    auto obs = generate_observations(truth, grid, sb, clutter_only, 3);
    double total = 0.0;
    for (const auto& o : obs) total += static_cast<double>(o.z.size());
    double mean = total / 1e5;
    CHECK(std::abs(mean - 2.0) < 3.0 * std::sqrt(2.0 / 1e5));

    ModelParams detect_only{{0.5, 0.5}, 0.9, 0.0};
    obs = generate_observations(truth, grid, sb, detect_only, 4);
    double hits = 0.0;
    for (const auto& o : obs) hits += static_cast<double>(o.z.size());
    double rate = hits / 2e5;
    CHECK(rate >= 0.895);
    CHECK(rate <= 0.905);
}

TEST_CASE("observations are sorted, clipped and seed-deterministic") {
    const auto& grid = iso_grid();
    ScenarioConfig cfg;
    cfg.model = {{40.0, 40.0, 40.0, 40.0}, 0.9, 3.0};
    auto truth = generate_truth(cfg);
    auto a = generate_observations(truth, grid, kAllPaths, cfg.model, 5);
    auto b = generate_observations(truth, grid, kAllPaths, cfg.model, 5);
    auto c = generate_observations(truth, grid, kAllPaths, cfg.model, 6);
    REQUIRE(a.size() == b.size());
    bool differs = false;
    for (std::size_t n = 0; n < a.size(); ++n) {
        CHECK(a[n].z == b[n].z);
        differs = differs || !(a[n].z == c[n].z);
        auto v = a[n].z.values();
        CHECK(std::is_sorted(v.begin(), v.end(), std::greater<>()));
        for (double x : v) CHECK((x >= -90.0 && x < 90.0));
    }
    CHECK(differs);
}

TEST_CASE("scenario validation") {
    ScenarioConfig cfg;
    cfg.step_s = 0.0;
    CHECK_THROWS_AS(cfg.validate(), DomainError);
    cfg = {};
    cfg.dropouts = {{1100.0, 1300.0}};
    CHECK_THROWS_AS(cfg.validate(), DomainError);
    cfg = {};
    cfg.initial.range = 50.0;
    CHECK_THROWS_AS(cfg.validate(), DomainError);
    cfg = {};
    cfg.paths = {PathKind::DP};
    CHECK_THROWS_AS(cfg.validate(), DomainError);

    GroundTruthTrack off{{{0, 0.0, {3000.0, 60.0, 0.0}}}, {}};
    CHECK_THROWS_AS((void)generate_observations(off, iso_grid(), kAllPaths, ModelParams::defaults_for(4), 1),
                    DomainError);
}
