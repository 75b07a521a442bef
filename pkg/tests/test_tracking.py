import numpy as np
import pytest

from swfocal.assoc import ModelParams, ObservationSet, PathPrediction, marginal_likelihood
from swfocal.grid import interpolate_doa_many
from swfocal.tracking import (
    DegeneracyError,
    MotionParams,
    ParticleSet,
    PriorParams,
    SourceState,
    effective_sample_size,
    init_particles,
    mmse_estimate,
    predict,
    predict_particles,
    resample,
    run_tracker,
    update,
)

ROI = (300.0, 1200.0, 30.0, 150.0)
PARAMS4 = ModelParams(n_paths=4, sigma_deg=(0.5, 0.5, 2.0, 2.0), detect_prob=0.9, mu_fa=2.0)


class TestPredict:
    def test_deterministic_part(self):
        s = predict(SourceState(1000.0, 60.0, -2.5), 2.048, (0.0, 0.0))
        assert s.range_m == pytest.approx(1000.0 - 2.5 * 2.048)
        assert s.depth_m == 60.0
        assert s.speed_mps == -2.5

    def test_noise_columns(self):
        s = predict(SourceState(0.0, 0.0, 0.0), 1.0, (1.0, 0.0))
        assert (s.range_m, s.depth_m, s.speed_mps) == (0.5, 0.0, 1.0)
        s = predict(SourceState(0.0, 0.0, 0.0), 1.0, (0.0, 1.0))
        assert (s.range_m, s.depth_m, s.speed_mps) == (0.0, 1.0, 0.0)

    def test_dropout_stretches_step(self):
        T = 2.048 + 74.0
        s = predict(SourceState(1000.0, 60.0, -2.5), T, (0.0, 0.0))
        assert s.range_m == pytest.approx(1000.0 - 2.5 * T)

    def test_batch_matches_scalar(self):
        rng = np.random.default_rng(0)
        ps = init_particles(PriorParams(roi=ROI), 50, rng)
        rng2 = np.random.default_rng(1)
        out = predict_particles(ps, 2.048, MotionParams(), rng2)
        rng3 = np.random.default_rng(1)
        u1 = rng3.normal(0.0, np.sqrt(0.05), 50)
        u2 = rng3.normal(0.0, np.sqrt(0.1), 50)
        for j in range(50):
            s = predict(SourceState(*ps.states[j]), 2.048, (u1[j], u2[j]))
            assert np.allclose(out.states[j], (s.range_m, s.depth_m, s.speed_mps))


class TestInit:
    def test_single_particle_has_unit_weight(self):
        ps = init_particles(PriorParams(roi=ROI), 1, np.random.default_rng(0))
        assert ps.J == 1
        assert ps.weights[0] == 1.0

    def test_positions_cover_the_prior_region(self):
        ps = init_particles(PriorParams(roi=ROI), 100_000, np.random.default_rng(1))
        r0, r1, d0, d1 = ROI
        # uniform means within three standard errors of the region centers
        se_r = (r1 - r0) / np.sqrt(12 * ps.J)
        se_d = (d1 - d0) / np.sqrt(12 * ps.J)
        assert abs(ps.states[:, 0].mean() - (r0 + r1) / 2) < 3 * se_r
        assert abs(ps.states[:, 1].mean() - (d0 + d1) / 2) < 3 * se_d
        assert abs(ps.states[:, 2].mean()) < 3 * 5.0 / np.sqrt(ps.J)


class TestResampling:
    def test_uniform_weights_have_full_ess(self):
        ps = ParticleSet(states=np.zeros((10, 3)), weights=np.full(10, 0.1))
        assert effective_sample_size(ps) == pytest.approx(10.0)

    def test_degenerate_weights_have_unit_ess(self):
        w = np.zeros(10)
        w[3] = 1.0
        ps = ParticleSet(states=np.arange(30.0).reshape(10, 3), weights=w)
        assert effective_sample_size(ps) == pytest.approx(1.0)
        out = resample(ps, np.random.default_rng(0))
        assert np.all(out.states == ps.states[3])
        assert np.allclose(out.weights, 0.1)

    def test_systematic_offspring_counts(self):
        rng = np.random.default_rng(5)
        w = rng.random(64)
        w /= w.sum()
        ps = ParticleSet(states=np.arange(64 * 3.0).reshape(64, 3), weights=w)
        out = resample(ps, np.random.default_rng(9))
        counts = np.array(
            [np.sum(np.all(out.states == ps.states[j], axis=1)) for j in range(64)]
        )
        assert np.all(np.abs(counts - 64 * w) < 1.0)


class TestMmse:
    def test_single_particle(self):
        ps = ParticleSet(states=np.array([[5.0, 6.0, 7.0]]), weights=np.array([1.0]))
        est = mmse_estimate(ps)
        assert (est.range_m, est.depth_m, est.speed_mps) == (5.0, 6.0, 7.0)

    def test_equal_weight_mean(self):
        ps = ParticleSet(
            states=np.array([[100.0, 0, 0], [300.0, 0, 0]]), weights=np.array([0.5, 0.5])
        )
        assert mmse_estimate(ps).range_m == pytest.approx(200.0)

    def test_weighted_definition(self):
        rng = np.random.default_rng(2)
        states = rng.normal(size=(40, 3))
        w = rng.random(40)
        w /= w.sum()
        ps = ParticleSet(states=states, weights=w)
        est = mmse_estimate(ps)
        assert np.allclose([est.range_m, est.depth_m, est.speed_mps], w @ states, rtol=1e-14)


class TestUpdate:
    def test_no_observations_keep_equal_weights_equal(self, refr_grid):
        ps = init_particles(PriorParams(roi=ROI), 200, np.random.default_rng(3))
        out = update(ps, ObservationSet(z=np.array([])), refr_grid, PARAMS4)
        # the missed-detection product depends only on which paths are
        # possible; particles with the same possibility set keep equal weight
        angles = interpolate_doa_many(refr_grid, out.states[:, :2])
        n_possible = np.sum(~np.isnan(angles), axis=1)
        for n in np.unique(n_possible):
            w = out.weights[n_possible == n]
            assert np.allclose(w, w[0], rtol=1e-12)

    def test_single_particle_renormalizes_to_one(self, refr_grid):
        ps = init_particles(PriorParams(roi=ROI), 1, np.random.default_rng(4))
        out = update(ps, ObservationSet(z=np.array([10.0, -5.0])), refr_grid, PARAMS4)
        assert out.weights[0] == pytest.approx(1.0)

    def test_weight_ratio_matches_direct_marginals(self, refr_grid):
        z = ObservationSet(z=np.array([12.0, 6.5, -10.0]))
        states = np.array([[700.0, 70.0, -2.0], [1150.0, 140.0, -2.0]])
        ps = ParticleSet(states=states, weights=np.array([0.5, 0.5]))
        out = update(ps, z, refr_grid, PARAMS4)
        likes = []
        for s in states:
            ang = interpolate_doa_many(refr_grid, s[None, :2])[0]
            det = np.where(np.isnan(ang), 0.0, PARAMS4.detect_prob)
            likes.append(marginal_likelihood(z, PathPrediction(ang, det), PARAMS4))
        assert out.weights[0] / out.weights[1] == pytest.approx(likes[0] / likes[1], rel=1e-12)

    def test_out_of_region_particles_get_zero_weight(self, refr_grid):
        states = np.array([[700.0, 70.0, 0.0], [5000.0, 70.0, 0.0]])
        ps = ParticleSet(states=states, weights=np.array([0.5, 0.5]))
        out = update(ps, ObservationSet(z=np.array([5.0])), refr_grid, PARAMS4)
        assert out.weights[1] == 0.0
        assert out.weights[0] == pytest.approx(1.0)

    def test_all_particles_outside_raises_degeneracy(self, refr_grid):
        states = np.array([[5000.0, 70.0, 0.0], [6000.0, 70.0, 0.0]])
        ps = ParticleSet(states=states, weights=np.array([0.5, 0.5]))
        with pytest.raises(DegeneracyError):
            update(ps, ObservationSet(z=np.array([5.0])), refr_grid, PARAMS4)

    def test_weights_normalized_after_update(self, refr_grid):
        ps = init_particles(PriorParams(roi=ROI), 500, np.random.default_rng(6))
        out = update(ps, ObservationSet(z=np.array([11.0, 4.0, -30.0])), refr_grid, PARAMS4)
        assert abs(out.weights.sum() - 1.0) < 1e-12


class TestRunTracker:
    def test_empty_observation_stream(self, refr_grid):
        out = run_tracker(refr_grid, [], PARAMS4, MotionParams(), PriorParams(roi=ROI), J=10)
        assert out == []

    def test_no_information_keeps_estimate_near_prior_center(self, iso_grid):
        # with every epoch empty and all paths possible everywhere, the
        # update carries no position information: the estimate stays near
        # the prior mean while the cloud diffuses
        roi = iso_grid.roi
        obs = [((i + 1) * 2.048, ObservationSet(z=np.array([]))) for i in range(30)]
        p = ModelParams(n_paths=4, sigma_deg=(0.5, 0.5, 2, 2), detect_prob=0.9, mu_fa=2.0)
        out = run_tracker(iso_grid, obs, p, MotionParams(), PriorParams(roi=roi), J=4000, seed=2)
        est = out[-1][1]
        assert abs(est.depth_m - 0.5 * (roi[2] + roi[3])) < 8.0
        assert abs(est.range_m - 0.5 * (roi[0] + roi[1])) < 80.0

    def test_near_noiseless_scenario_converges(self, refr_grid):
        # tiny observation noise, perfect detection, no clutter: the
        # posterior collapses onto the truth within a short run
        from swfocal.simulator import ScenarioConfig, generate_observations, generate_truth

        cfg = ScenarioConfig(
            initial_range_m=1150.0,
            initial_depth_m=60.0,
            initial_speed_mps=-2.5,
            duration_s=120.0,
            roi=ROI,
        )
        truth = generate_truth(cfg)
        p = ModelParams(n_paths=4, sigma_deg=(0.01,) * 4, detect_prob=1.0, mu_fa=0.0)
        obs_sets = generate_observations(truth, refr_grid, p, seed=4)
        obs = list(zip(truth.times_s.tolist(), obs_sets))
        out = run_tracker(refr_grid, obs, p, MotionParams(), PriorParams(roi=ROI), J=3000, seed=6)
        est = out[-1][1]
        assert abs(est.range_m - truth.states[-1, 0]) < 5.0
        assert abs(est.depth_m - truth.states[-1, 1]) < 2.0

    def test_more_paths_sharpen_the_posterior(self, refr_grid):
        # information monotonicity: with identical observation streams,
        # the 4-path model's one-step posterior range variance is on
        # average no larger than the 2-path model's
        from swfocal.environment import PathKind
        from swfocal.simulator import GroundTruthTrack, generate_observations

        grid2 = refr_grid.select_kinds((PathKind.SB, PathKind.DP))
        p2 = ModelParams(n_paths=2, sigma_deg=(0.5, 0.5), detect_prob=0.9, mu_fa=4.0)
        var4, var2 = [], []
        for seed in range(10):
            track = GroundTruthTrack(
                times_s=np.array([0.0]), states=np.array([[800.0, 70.0, -2.0]])
            )
            z = generate_observations(track, refr_grid, PARAMS4, seed=seed)[0]
            ps = init_particles(PriorParams(roi=ROI), 10_000, np.random.default_rng(seed))
            out4 = update(ps, z, refr_grid, PARAMS4)
            out2 = update(ps, z, grid2, p2)
            for out, acc in ((out4, var4), (out2, var2)):
                mean = out.weights @ out.states[:, 0]
                acc.append(out.weights @ (out.states[:, 0] - mean) ** 2)
        assert np.mean(var4) <= np.mean(var2)

    def test_deterministic_for_fixed_seed(self, refr_grid):
        rng = np.random.default_rng(8)
        obs = []
        t = 0.0
        for i in range(5):
            t += 2.048
            z = np.sort(rng.uniform(-30, 30, 3))[::-1]
            obs.append((t, ObservationSet(z=z)))
        a = run_tracker(refr_grid, obs, PARAMS4, MotionParams(), PriorParams(roi=ROI), J=300, seed=12)
        b = run_tracker(refr_grid, obs, PARAMS4, MotionParams(), PriorParams(roi=ROI), J=300, seed=12)
        assert [(t, e, s) for t, e, s in a] == [(t, e, s) for t, e, s in b]

    def test_rejects_nonincreasing_times(self, refr_grid):
        obs = [(2.0, ObservationSet(z=np.array([]))), (2.0, ObservationSet(z=np.array([])))]
        with pytest.raises(ValueError):
            run_tracker(refr_grid, obs, PARAMS4, MotionParams(), PriorParams(roi=ROI), J=10)
