#include "pfloc/errors.hpp"
#include "pfloc/filter.hpp"
#include "pfloc/simulator.hpp"
#include "assoc_oracle.hpp"
#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace pfloc;

namespace {

const DoaGrid& iso_grid() {
    static const DoaGrid grid = [] {
        GridBuildOptions opts;
        opts.threads = 2;
        return build_doa_grid(testing::iso_waveguide(kDefaultReceiverDepth), kDefaultRoi, 241, 166, kAllPaths, opts);
    }();
    return grid;
}

std::vector<double> grid_angles(const DoaGrid& grid, Position p) {
    std::vector<double> out;
    for (std::size_t k = 0; k < grid.path_count(); ++k) out.push_back(interpolate_doa(grid, p, k).value_or(kImpossible));
    return out;
}

double weight_sum(const ParticleSet& ps) {
    long double s = 0.0L;
    for (double w : ps.weights) s += w;
    return static_cast<double>(s);
}

ParticleSet uniform_set(std::vector<SourceState> states) {
    ParticleSet ps;
    ps.weights.assign(states.size(), 1.0 / static_cast<double>(states.size()));
    ps.states = std::move(states);
    return ps;
}

}  // namespace

TEST_CASE("predict applies the constant-velocity transition") {
    auto a = predict({1000.0, 60.0, -2.5}, 2.048, 0.0, 0.0);
    CHECK(a.range == doctest::Approx(994.88).epsilon(1e-14));
    CHECK(a.depth == 60.0);
    CHECK(a.range_speed == -2.5);

    auto b = predict({0.0, 0.0, 0.0}, 1.0, 1.0, 0.0);
    CHECK(b == SourceState{0.5, 0.0, 1.0});
    auto c = predict({0.0, 0.0, 0.0}, 1.0, 0.0, 1.0);
    CHECK(c == SourceState{0.0, 1.0, 0.0});

    // A dropout gap simply enlarges T.
    double gap = 2.048 + 74.0;
    auto d = predict({1000.0, 60.0, -2.5}, gap, 0.0, 0.0);
    CHECK(d.range == doctest::Approx(1000.0 - 2.5 * gap).epsilon(1e-14));

    ParticleSet ps = uniform_set({{1000.0, 60.0, -2.5}});
    Rng rng(3);
    CHECK_THROWS_AS(predict_particles(ps, 0.0, MotionParams{}, rng), DomainError);
}

TEST_CASE("init_particles draws from the prior") {
    PriorParams prior;
    auto one = init_particles(prior, 1, std::uint64_t{7});
    REQUIRE(one.size() == 1);
    CHECK(one.weights[0] == 1.0);
    CHECK(kDefaultRoi.contains(one.states[0].position()));

    const std::size_t n = 100000;
    auto ps = init_particles(prior, n, std::uint64_t{11});
    double mr = 0.0, md = 0.0, ms = 0.0, vs = 0.0;
    for (const auto& s : ps.states) {
        CHECK_UNARY(kDefaultRoi.contains(s.position()));
        mr += s.range;
        md += s.depth;
        ms += s.range_speed;
        vs += s.range_speed * s.range_speed;
    }
    const double jn = static_cast<double>(n);
    mr /= jn;
    md /= jn;
    ms /= jn;
    vs = vs / jn - ms * ms;
    auto c = kDefaultRoi.center();
    double se_r = (kDefaultRoi.range_max - kDefaultRoi.range_min) / std::sqrt(12.0 * jn);
    double se_d = (kDefaultRoi.depth_max - kDefaultRoi.depth_min) / std::sqrt(12.0 * jn);
    CHECK(std::abs(mr - c.range) < 3.0 * se_r);
    CHECK(std::abs(md - c.depth) < 3.0 * se_d);
    CHECK(std::abs(ms) < 3.0 * 5.0 / std::sqrt(jn));
    CHECK(std::sqrt(vs) == doctest::Approx(5.0).epsilon(0.01));
    CHECK(std::abs(weight_sum(ps) - 1.0) < 1e-12);

    CHECK_THROWS_AS((void)init_particles(prior, 0, std::uint64_t{1}), DomainError);
    PriorParams bad;
    bad.speed_std = 0.0;
    CHECK_THROWS_AS((void)init_particles(bad, 10, std::uint64_t{1}), DomainError);
}

TEST_CASE("update with no observations weights by the miss probabilities") {
    const auto& grid = iso_grid();
    auto params = ModelParams::defaults_for(4);
    ParticleSet ps = uniform_set({{800.0, 40.0, 0.0}, {800.0, 40.0, 1.0}, {1700.0, 120.0, 0.0}, {2600.0, 50.0, 0.0}});
    update(ps, ObservationSet{}, grid, kAllPaths, params);
    // Every path exists everywhere in an isovelocity guide, so in-roi particles tie.
    CHECK(ps.weights[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(ps.weights[0] == ps.weights[1]);
    CHECK(ps.weights[2] == doctest::Approx(ps.weights[0]).epsilon(1e-12));
    CHECK(ps.weights[3] == 0.0);

    ParticleSet single = uniform_set({{1200.0, 80.0, -1.0}});
    update(single, ObservationSet({12.0, -3.0}), grid, kAllPaths, params);
    CHECK(single.weights[0] == 1.0);
}

TEST_CASE("update weight ratio matches the enumeration oracle") {
    const auto& grid = iso_grid();
    auto params = ModelParams::defaults_for(4);
    params.sigma_deg = {0.2, 0.2, 0.4, 0.4};
    Position truth{1500.0, 60.0};
    Position far{2000.0, 60.0};
    auto g = grid_angles(grid, truth);
    ObservationSet z = ObservationSet::from_unsorted({g[0] + 0.05, g[1] - 0.1, g[3] + 0.3, 47.0});

    ParticleSet ps = uniform_set({{truth.range, truth.depth, 0.0}, {far.range, far.depth, 0.0}});
    update(ps, z, grid, kAllPaths, params);

    double l_truth = testing::enumerate_marginal(z, make_prediction(g, params.detect_prob), params);
    double l_far = testing::enumerate_marginal(z, make_prediction(grid_angles(grid, far), params.detect_prob), params);
    REQUIRE(l_far > 0.0);
    double expected = l_far / l_truth;
    CHECK(std::abs(ps.weights[1] / ps.weights[0] - expected) <= 1e-12 * expected);
    CHECK(std::abs(weight_sum(ps) - 1.0) < 1e-12);
}

TEST_CASE("update uses only the configured grid layers") {
    const auto& grid = iso_grid();
    const std::vector<PathKind> two = {PathKind::SB, PathKind::DP};
    auto params = ModelParams::defaults_for(2);
    Position p{900.0, 100.0};
    auto g = grid_angles(grid, p);
    ObservationSet z = ObservationSet::from_unsorted({g[0], g[1], g[2]});
    ParticleSet ps = uniform_set({{p.range, p.depth, 0.0}, {1400.0, 30.0, 0.0}});
    update(ps, z, grid, two, params);

    std::vector<double> sb_dp_truth = {g[0], g[1]};
    auto q = grid_angles(grid, {1400.0, 30.0});
    std::vector<double> sb_dp_other = {q[0], q[1]};
    double l0 = testing::enumerate_marginal(z, make_prediction(sb_dp_truth, 0.9), params);
    double l1 = testing::enumerate_marginal(z, make_prediction(sb_dp_other, 0.9), params);
    CHECK(ps.weights[1] / ps.weights[0] == doctest::Approx(l1 / l0).epsilon(1e-12));

    CHECK_THROWS_AS(update(ps, z, grid, two, ModelParams::defaults_for(4)), DomainError);
}

TEST_CASE("weights stay normalized across random updates") {
    const auto& grid = iso_grid();
    auto params = ModelParams::defaults_for(4);
    Rng rng(5);
    auto ps = init_particles(PriorParams{}, 3000, rng);
    std::uniform_real_distribution<double> doa(-60.0, 60.0);
    for (int step = 0; step < 20; ++step) {
        predict_particles(ps, 2.048, MotionParams{}, rng);
        std::vector<double> z;
        for (int m = 0; m < step % 6; ++m) z.push_back(doa(rng));
        update(ps, ObservationSet::from_unsorted(z), grid, kAllPaths, params);
        CHECK(std::abs(weight_sum(ps) - 1.0) < 1e-12);
        if (effective_sample_size(ps) < 1500.0) ps = resample(ps, rng);
    }
}

TEST_CASE("threaded update is bit-identical to the serial one") {
    const auto& grid = iso_grid();
    auto params = ModelParams::defaults_for(4);
    auto a = init_particles(PriorParams{}, 5000, std::uint64_t{21});
    auto b = a;
    ObservationSet z({20.0, 5.5, -7.0, -20.0});
    update(a, z, grid, kAllPaths, params, {1});
    update(b, z, grid, kAllPaths, params, {4});
    CHECK(a.weights == b.weights);
}

TEST_CASE("update reports degeneracy") {
    const auto& grid = iso_grid();
    ParticleSet outside = uniform_set({{50.0, 60.0, 0.0}, {1000.0, 200.0, 0.0}});
    CHECK_THROWS_AS(update(outside, ObservationSet({1.0}), grid, kAllPaths, ModelParams::defaults_for(4)),
                    DegeneracyError);

    // Zero clutter with more observations than paths has no explanation at all.
    auto params = ModelParams::defaults_for(4);
    params.mu_fa = 0.0;
    ParticleSet inside = uniform_set({{1000.0, 60.0, 0.0}});
    CHECK_THROWS_AS(update(inside, ObservationSet({30.0, 20.0, 10.0, 0.0, -10.0}), grid, kAllPaths, params),
                    DegeneracyError);
}

TEST_CASE("effective sample size and systematic resampling") {
    ParticleSet ps = uniform_set({{1.0, 1.0, 0.0}, {2.0, 2.0, 0.0}, {3.0, 3.0, 0.0}, {4.0, 4.0, 0.0}});
    CHECK(effective_sample_size(ps) == doctest::Approx(4.0));

    ps.weights = {0.0, 1.0, 0.0, 0.0};
    CHECK(effective_sample_size(ps) == 1.0);
    Rng rng(9);
    auto r = resample(ps, rng);
    REQUIRE(r.size() == 4);
    for (std::size_t j = 0; j < 4; ++j) {
        CHECK(r.states[j] == ps.states[1]);
        CHECK(r.weights[j] == 0.25);
    }

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        std::size_t n = 1 + static_cast<std::size_t>(unit(rng) * 300);
        std::vector<double> w(n);
        for (auto& x : w) x = unit(rng) < 0.3 ? 0.0 : unit(rng);
        w[0] += 1e-3;
        double s = std::accumulate(w.begin(), w.end(), 0.0);
        for (auto& x : w) x /= s;
        auto counts = systematic_counts(w, unit(rng));
        CHECK(std::accumulate(counts.begin(), counts.end(), std::size_t{0}) == n);
        for (std::size_t j = 0; j < n; ++j) {
            CHECK(std::abs(static_cast<double>(counts[j]) - static_cast<double>(n) * w[j]) < 1.0 + 1e-9);
            if (w[j] == 0.0) CHECK(counts[j] == 0);
        }
    }
    CHECK_THROWS_AS((void)systematic_counts(std::vector<double>{1.0}, 1.0), DomainError);
}

TEST_CASE("mmse estimate is the weighted mean") {
    ParticleSet one = uniform_set({{123.0, 45.0, -6.0}});
    CHECK(mmse_estimate(one) == SourceState{123.0, 45.0, -6.0});

    ParticleSet two = uniform_set({{100.0, 10.0, 1.0}, {300.0, 30.0, 3.0}});
    auto m = mmse_estimate(two);
    CHECK(m.range == doctest::Approx(200.0));
    CHECK(m.depth == doctest::Approx(20.0));
    CHECK(m.range_speed == doctest::Approx(2.0));

    two.weights = {0.75, 0.25};
    CHECK(mmse_estimate(two).range == doctest::Approx(150.0));
}

TEST_CASE("run_tracker is deterministic") {
    const auto& grid = iso_grid();
    ScenarioConfig sc;
    sc.initial = {1500.0, 60.0, -1.5};
    sc.duration_s = 60.0;
    sc.dropouts = {{20.0, 30.0}};
    auto truth = generate_truth(sc);
    auto obs = generate_observations(truth, grid, kAllPaths, sc.model, 4);

    TrackerConfig cfg;
    cfg.particles = 2000;
    cfg.seed = 17;
    auto a = run_tracker(grid, obs, cfg);
    auto b = run_tracker(grid, obs, cfg);
    cfg.threads = 3;
    auto c = run_tracker(grid, obs, cfg);
    REQUIRE(a.size() == obs.size());
    for (std::size_t n = 0; n < a.size(); ++n) {
        CHECK(a[n].time_s == obs[n].time_s);
        CHECK(a[n].state == b[n].state);
        CHECK(a[n].state == c[n].state);
        CHECK(a[n].ess == b[n].ess);
    }
    cfg.seed = 18;
    auto d = run_tracker(grid, obs, cfg);
    CHECK_FALSE(d.back().state == a.back().state);

    CHECK(run_tracker(grid, std::span<const TimedObservation>{}, cfg).empty());
}

TEST_CASE("run_tracker without observations stays near the prior") {
    const auto& grid = iso_grid();
    std::vector<TimedObservation> epochs;
    for (std::size_t n = 0; n < 40; ++n) epochs.push_back({n, 2.048 * static_cast<double>(n), ObservationSet{}});
    TrackerConfig cfg;
    cfg.particles = 4000;
    cfg.seed = 2;
    auto est = run_tracker(grid, epochs, cfg);
    auto c = kDefaultRoi.center();
    for (const auto& e : est) CHECK(std::abs(e.state.depth - c.depth) < 5.0);
    CHECK(std::abs(est.back().state.range - c.range) < 100.0);
    CHECK(est.back().range_var > 1e5);
}

TEST_CASE("run_tracker converges in the noiseless limit") {
    const auto& grid = iso_grid();
    ScenarioConfig sc;
    sc.initial = {1500.0, 60.0, -1.5};
    sc.duration_s = 300.0;
    sc.dropouts.clear();
    sc.model.sigma_deg = {0.01, 0.01, 0.01, 0.01};
    sc.model.detect_prob = 1.0;
    sc.model.mu_fa = 0.0;
    auto truth = generate_truth(sc);
    auto obs = generate_observations(truth, grid, kAllPaths, sc.model, 8);

    TrackerConfig cfg;
    cfg.model = sc.model;
    cfg.particles = 10000;
    cfg.seed = 1;
    auto est = run_tracker(grid, obs, cfg);
    const auto& last = est.back().state;
    const auto& want = truth.samples.back().state;
    MESSAGE("final error range ", last.range - want.range, " m, depth ", last.depth - want.depth, " m");
    CHECK(std::abs(last.range - want.range) < 5.0);
    CHECK(std::abs(last.depth - want.depth) < 2.0);
}

TEST_CASE("tracker configuration validation") {
    TrackerConfig cfg;
    cfg.paths = {PathKind::SB, PathKind::DP};
    CHECK_THROWS_AS(cfg.validate(), DomainError);
    cfg.model = ModelParams::defaults_for(2);
    CHECK_NOTHROW(cfg.validate());
    cfg.resample_fraction = 1.5;
    CHECK_THROWS_AS(cfg.validate(), DomainError);
    cfg.resample_fraction = 0.5;
    cfg.motion.accel_var = -1.0;
    CHECK_THROWS_AS(cfg.validate(), DomainError);
}
