"""Particle-based tracking of source range, depth and range speed.

The state evolves with a nearly constant-velocity model in range and a
nearly constant-location model in depth: over a step of length T,

    range' = range + T * speed + (T^2 / 2) * u1
    depth' = depth + T * u2
    speed' = speed + T * u1

with independent zero-mean Gaussian driving noise (u1, u2).  Each epoch
every particle is reweighted by the exact association marginal of the
observed DOAs at its position (modeled angles interpolated from the
precomputed grid, detection probability zero where a path is impossible
or the particle left the region of interest), weights are renormalized,
and systematic resampling runs whenever the effective sample size drops
below half the particle count.  The state estimate is the weighted
particle mean.

Weights are carried in the log domain during the update; degeneracy
(every particle at zero weight) aborts the run.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from swfocal.assoc import ModelParams, ObservationSet, marginal_likelihood_batch
from swfocal.grid import DoaGrid, interpolate_doa_many

__all__ = [
    "SourceState",
    "MotionParams",
    "PriorParams",
    "ParticleSet",
    "DegeneracyError",
    "init_particles",
    "predict",
    "predict_particles",
    "update",
    "effective_sample_size",
    "resample",
    "mmse_estimate",
    "run_tracker",
]


@dataclass(frozen=True)
class SourceState:
    range_m: float
    depth_m: float
    speed_mps: float


@dataclass(frozen=True)
class MotionParams:
    """Driving-noise variances and nominal step of the motion model."""

    accel_var: float = 0.05   # m^2/s^4, range driving noise
    depth_var: float = 0.1    # m^2/s^2, depth driving noise
    step_s: float = 2.048

    def __post_init__(self):
        if self.accel_var < 0 or self.depth_var < 0:
            raise ValueError("driving-noise variances must be nonnegative")
        if self.step_s <= 0:
            raise ValueError("nominal step must be positive")


@dataclass(frozen=True)
class PriorParams:
    """Uninformative initial prior: uniform position, Gaussian speed."""

    roi: tuple[float, float, float, float]  # range_min, range_max, depth_min, depth_max
    speed_std: float = 5.0

    def __post_init__(self):
        r0, r1, d0, d1 = self.roi
        if not (r0 < r1 and d0 < d1):
            raise ValueError("prior region of interest is empty")
        if self.speed_std <= 0:
            raise ValueError("speed prior standard deviation must be positive")


@dataclass
class ParticleSet:
    """J weighted samples of the source state.

    ``states`` is (J, 3) as [range_m, depth_m, speed_mps]; ``weights``
    sum to one.
    """

    states: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        self.states = np.atleast_2d(np.asarray(self.states, dtype=float))
        self.weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if self.states.shape != (self.weights.size, 3):
            raise ValueError("particle states must be (J, 3) with J weights")

    @property
    def J(self) -> int:
        return self.weights.size


class DegeneracyError(RuntimeError):
    """All particle weights vanished; the filter lost the target."""


def init_particles(prior: PriorParams, J: int, rng: np.random.Generator) -> ParticleSet:
    """Draw J particles from the initial prior with uniform weights."""
    if J < 1:
        raise ValueError("need at least one particle")
    r0, r1, d0, d1 = prior.roi
    states = np.column_stack(
        [
            rng.uniform(r0, r1, J),
            rng.uniform(d0, d1, J),
            rng.normal(0.0, prior.speed_std, J),
        ]
    )
    return ParticleSet(states=states, weights=np.full(J, 1.0 / J))


def predict(state: SourceState, T: float, noise: tuple[float, float]) -> SourceState:
    """One deterministic motion step given the driving-noise realization."""
    if T <= 0:
        raise ValueError("time step must be positive")
    u1, u2 = noise
    return SourceState(
        range_m=state.range_m + T * state.speed_mps + 0.5 * T * T * u1,
        depth_m=state.depth_m + T * u2,
        speed_mps=state.speed_mps + T * u1,
    )


def predict_particles(
    ps: ParticleSet, T: float, motion: MotionParams, rng: np.random.Generator
) -> ParticleSet:
    """Propagate all particles one step, sampling the driving noise."""
    if T <= 0:
        raise ValueError("time step must be positive")
    u1 = rng.normal(0.0, np.sqrt(motion.accel_var), ps.J)
    u2 = rng.normal(0.0, np.sqrt(motion.depth_var), ps.J)
    s = ps.states
    states = np.column_stack(
        [
            s[:, 0] + T * s[:, 2] + 0.5 * T * T * u1,
            s[:, 1] + T * u2,
            s[:, 2] + T * u1,
        ]
    )
    return ParticleSet(states=states, weights=ps.weights.copy())


def update(
    ps: ParticleSet, z: ObservationSet, grid: DoaGrid, params: ModelParams
) -> ParticleSet:
    """Reweight particles by the association marginal of this epoch.

    Particles outside the grid's region of interest get zero weight.
    Raises ``DegeneracyError`` if no particle retains positive weight.
    """
    r0, r1, d0, d1 = grid.roi
    s = ps.states
    inside = (s[:, 0] >= r0) & (s[:, 0] <= r1) & (s[:, 1] >= d0) & (s[:, 1] <= d1)

    like = np.zeros(ps.J)
    if np.any(inside):
        angles = interpolate_doa_many(grid, s[inside, :2])
        detect = np.where(np.isnan(angles), 0.0, params.detect_prob)
        like[inside] = marginal_likelihood_batch(z.z, angles, detect, params)

    with np.errstate(divide="ignore"):
        logw = np.log(ps.weights) + np.log(like)
    peak = logw.max()
    if not np.isfinite(peak):
        raise DegeneracyError("all particle weights vanished in the update step")
    w = np.exp(logw - peak)
    return ParticleSet(states=s.copy(), weights=w / w.sum())


def effective_sample_size(ps: ParticleSet) -> float:
    return float(1.0 / np.sum(ps.weights**2))


def resample(ps: ParticleSet, rng: np.random.Generator) -> ParticleSet:
    """Systematic resampling: offspring counts differ from J*w by < 1."""
    J = ps.J
    positions = (rng.random() + np.arange(J)) / J
    idx = np.searchsorted(np.cumsum(ps.weights), positions)
    idx = np.minimum(idx, J - 1)
    return ParticleSet(states=ps.states[idx].copy(), weights=np.full(J, 1.0 / J))


def mmse_estimate(ps: ParticleSet) -> SourceState:
    """Weighted particle mean, the posterior-mean state estimate."""
    m = ps.weights @ ps.states
    return SourceState(range_m=float(m[0]), depth_m=float(m[1]), speed_mps=float(m[2]))


def run_tracker(
    grid: DoaGrid,
    observations,
    params: ModelParams,
    motion: MotionParams,
    prior: PriorParams,
    J: int = 10_000,
    seed: int = 0,
    *,
    ess_threshold: float = 0.5,
    jitter_std: tuple[float, float, float] | None = None,
) -> list[tuple[float, SourceState, float]]:
    """Track through a time-ordered sequence of (time_s, ObservationSet).

    The prediction step uses the actual gap between consecutive epochs, so
    data dropouts simply stretch the motion model; the first epoch uses
    the nominal step.  Resampling triggers when the effective sample size
    falls below ``ess_threshold * J``; ``jitter_std`` optionally adds
    Gaussian roughening after each resampling (off by default, the driving
    noise normally provides enough diversity).  Deterministic for a fixed
    seed.  Returns one (time_s, estimate, effective sample size) per epoch.
    """
    rng = np.random.default_rng(seed)
    ps = init_particles(prior, J, rng)
    out: list[tuple[float, SourceState, float]] = []
    t_prev: float | None = None
    for time_s, z in observations:
        T = motion.step_s if t_prev is None else time_s - t_prev
        if T <= 0:
            raise ValueError("observation epochs must be strictly increasing in time")
        ps = predict_particles(ps, T, motion, rng)
        ps = update(ps, z, grid, params)
        ess = effective_sample_size(ps)
        out.append((float(time_s), mmse_estimate(ps), ess))
        if ess < ess_threshold * ps.J:
            ps = resample(ps, rng)
            if jitter_std is not None:
                ps.states += rng.normal(0.0, jitter_std, size=ps.states.shape)
        t_prev = time_s
    return out
