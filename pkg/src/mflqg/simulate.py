"""Cost verification: a deterministic moment oracle and Monte Carlo simulation.

Any feedback of the form u = alpha(t) x + beta(t) m1 keeps a coupled system of
mean-field particles inside the Gaussian family, so the exact cost of such a
law is computable from two moment ODEs (the "oracle"):

    m1' = (A + B (alpha + beta)) m1
    m2' = 2 (A + B alpha) m2 + 2 B beta m1^2 + sigma^2

    running integrand  Q * (alpha^2 m2 + (2 alpha beta + beta^2) m1^2)
    terminal cost      D1 m2(T) + D2 m1(T)^2

The Monte Carlo route simulates n interacting particles with Euler-Maruyama,
coupling each through the empirical mean of the same cloud, and estimates the
cost with a left-endpoint quadrature of the running integrand.  Both routes
accept the same FeedbackLaw, which is what makes the cross-check meaningful.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from . import _kernels
from .control import FeedbackLaw
from .errors import DomainError, FiniteEscapeError, SimulationDivergedError
from .model import MeasureMoments, ParticleCloud, ProblemSpec
from .riccati import DIVERGENCE_LIMIT

__all__ = [
    "SimConfig",
    "CostReport",
    "CloudTrajectory",
    "GaussianityReport",
    "EM_BIAS_CONST",
    "cost_oracle",
    "evolve_cloud",
    "simulate_mc",
    "gaussianity_check",
    "mc_tolerance",
    "perturbation_sweep",
    "trajectory_to_csv",
]

# Target element count per pre-drawn increment block; caps peak memory at
# ~64 MB of float64 without changing results (the normal stream is consumed
# in the same order regardless of block shape).
_CHUNK_ELEMENTS = 8_000_000

# Euler-Maruyama carries an O(dt) weak bias on the cost; this constant sets
# how much of it the oracle-vs-MC comparison budgets for, per unit dt.
EM_BIAS_CONST = 10.0


def mc_tolerance(std_error: float, dt: float) -> float:
    """Acceptance band for |MC - oracle|: statistical noise plus weak bias."""
    return 3.0 * float(std_error) + EM_BIAS_CONST * float(dt)

InitialLaw = Union[float, int, tuple, ParticleCloud]


@dataclass(frozen=True)
class SimConfig:
    """Monte Carlo run parameters.  The seed fully determines the run."""

    n_paths: int = 100_000
    dt: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "n_paths", int(self.n_paths))
        object.__setattr__(self, "dt", float(self.dt))
        object.__setattr__(self, "seed", int(self.seed))
        if self.n_paths < 1:
            raise DomainError(f"n_paths must be >= 1, got {self.n_paths}")
        if not self.dt > 0.0:
            raise DomainError(f"dt must be positive, got {self.dt:.6g}")


@dataclass(frozen=True)
class CostReport:
    """Cost split into running and terminal parts, with a standard error.

    The oracle reports std_error = 0 (it is exact up to the ODE grid); the
    Monte Carlo estimate carries a delta-method standard error combining the
    running-cost sample variance with the variance of the linearized terminal
    functional.
    """

    total: float
    running: float
    terminal: float
    std_error: float
    n_paths: int


@dataclass(frozen=True, eq=False)
class CloudTrajectory:
    """Empirical moments recorded at every step plus the final cloud."""

    times: np.ndarray
    m1: np.ndarray
    m2: np.ndarray
    states: np.ndarray
    run_costs: np.ndarray

    def final_cloud(self) -> ParticleCloud:
        return ParticleCloud(self.states)


@dataclass(frozen=True)
class GaussianityReport:
    skewness: float
    excess_kurtosis: float
    degenerate: bool


def _steps_for(horizon: float, dt: float) -> int:
    n = int(round(horizon / dt))
    if n < 1 or abs(n * dt - horizon) > 1e-9 * max(1.0, horizon):
        raise DomainError(
            f"dt = {dt:.6g} does not divide the horizon {horizon:.6g} evenly"
        )
    return n


def cost_oracle(spec: ProblemSpec, law: FeedbackLaw, m1_0: float, m2_0: float,
                steps: int = 2000) -> CostReport:
    """Exact cost of a linear feedback law via the moment ODEs, RK4 on a
    uniform grid of `steps` intervals over [0, T]."""
    steps = int(steps)
    if steps < 2:
        raise DomainError(f"steps must be >= 2, got {steps}")
    m1_0 = float(m1_0)
    m2_0 = float(m2_0)
    if m2_0 - m1_0 * m1_0 < -1e-12 * max(1.0, abs(m2_0)):
        raise DomainError(
            f"inconsistent initial moments: m2 - m1^2 = {m2_0 - m1_0 * m1_0:.3e}"
        )
    T = spec.T
    if law.T < T - 1e-12 * max(1.0, T):
        raise DomainError("feedback law does not cover the horizon")

    def rhs(t, m1, m2, _run):
        al, be = law.at(t)
        a = spec.A(t)
        b = spec.B(t)
        sig = spec.sigma(t)
        q = spec.Q(t)
        dm1 = (a + b * (al + be)) * m1
        dm2 = 2.0 * (a + b * al) * m2 + 2.0 * b * be * m1 * m1 + sig * sig
        drun = q * (al * al * m2 + (2.0 * al * be + be * be) * m1 * m1)
        return dm1, dm2, drun

    grid = np.linspace(0.0, T, steps + 1)
    m1, m2, run = m1_0, m2_0, 0.0
    for k in range(steps):
        t0 = float(grid[k])
        h = float(grid[k + 1]) - t0
        a1, b1, c1 = rhs(t0, m1, m2, run)
        a2, b2, c2 = rhs(t0 + 0.5 * h, m1 + 0.5 * h * a1, m2 + 0.5 * h * b1, 0.0)
        a3, b3, c3 = rhs(t0 + 0.5 * h, m1 + 0.5 * h * a2, m2 + 0.5 * h * b2, 0.0)
        a4, b4, c4 = rhs(t0 + h, m1 + h * a3, m2 + h * b3, 0.0)
        m1 = m1 + h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
        m2 = m2 + h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4)
        run = run + h / 6.0 * (c1 + 2.0 * c2 + 2.0 * c3 + c4)
        worst = max(abs(m1), abs(m2), abs(run))
        if not math.isfinite(worst) or worst > DIVERGENCE_LIMIT:
            raise FiniteEscapeError(float(grid[k + 1]), "moments")
    terminal = spec.D1 * m2 + spec.D2 * m1 * m1
    return CostReport(total=run + terminal, running=run, terminal=terminal,
                      std_error=0.0, n_paths=0)


def _resolve_initial(initial: InitialLaw, n_paths: int, rng) -> np.ndarray:
    """Build the initial cloud.  A number means a Dirac mass (no randomness),
    a (mean, var) pair means a Gaussian sample, a ParticleCloud is used as is
    and must match n_paths."""
    if isinstance(initial, ParticleCloud):
        if initial.states.size != n_paths:
            raise DomainError(
                f"initial cloud has {initial.states.size} particles, expected {n_paths}"
            )
        return initial.states.copy()
    if isinstance(initial, tuple):
        if len(initial) != 2:
            raise DomainError("Gaussian initial law must be a (mean, var) pair")
        mean, var = float(initial[0]), float(initial[1])
        if var < 0.0:
            raise DomainError(f"initial variance must be >= 0, got {var:.6g}")
        return mean + math.sqrt(var) * rng.standard_normal(n_paths)
    if isinstance(initial, (int, float)) and not isinstance(initial, bool):
        return np.full(n_paths, float(initial))
    raise DomainError(f"cannot interpret {initial!r} as an initial law")


def evolve_cloud(spec: ProblemSpec, law: FeedbackLaw, initial: InitialLaw,
                 config: SimConfig, t_stop: float | None = None) -> CloudTrajectory:
    """Euler-Maruyama for the interacting particle system up to t_stop (default T).

    For a fixed config the result is bit-identical across runs and across
    chunk sizes: all normal increments come from one Philox stream drawn
    outside the stepping kernel, step by step.
    """
    T = spec.T
    t_stop = T if t_stop is None else float(t_stop)
    if not 0.0 < t_stop <= T + 1e-12 * max(1.0, T):
        raise DomainError(f"t_stop = {t_stop:.6g} outside (0, {T:.6g}]")
    t_stop = min(t_stop, T)
    n_steps = _steps_for(t_stop, config.dt)
    n = config.n_paths
    dt = config.dt
    times = np.linspace(0.0, t_stop, n_steps + 1)
    left = times[:-1]

    a_k = np.array([spec.A(float(t)) for t in left])
    b_k = np.array([spec.B(float(t)) for t in left])
    s_sqdt = np.array([spec.sigma(float(t)) for t in left]) * math.sqrt(dt)
    q_dt = np.array([spec.Q(float(t)) for t in left]) * dt
    al_k, be_k = law.gains_on(left)
    al_k = np.ascontiguousarray(al_k)
    be_k = np.ascontiguousarray(be_k)

    rng = np.random.Generator(np.random.Philox(config.seed))
    x = _resolve_initial(initial, n, rng)
    run = np.zeros(n)
    m1 = np.empty(n_steps + 1)
    m2 = np.empty(n_steps + 1)

    chunk = max(1, _CHUNK_ELEMENTS // max(1, n))
    k0 = 0
    while k0 < n_steps:
        k1 = min(n_steps, k0 + chunk)
        z = rng.standard_normal((k1 - k0, n))
        _kernels.mc_chunk(x, run, z, a_k[k0:k1], b_k[k0:k1], s_sqdt[k0:k1],
                          q_dt[k0:k1], al_k[k0:k1], be_k[k0:k1], dt,
                          m1[k0:k1], m2[k0:k1])
        if not np.isfinite(x).all():
            raise SimulationDivergedError(
                f"particle state became non-finite before t = {times[k1]:.6g}"
            )
        k0 = k1
    m1[n_steps] = x.sum() / n
    m2[n_steps] = (x * x).sum() / n
    return CloudTrajectory(times=times, m1=m1, m2=m2, states=x, run_costs=run)


def _report_from_cloud(spec: ProblemSpec, traj: CloudTrajectory) -> CostReport:
    x = traj.states
    run = traj.run_costs
    n = x.size
    m1_T = float(traj.m1[-1])
    m2_T = float(traj.m2[-1])
    running = float(run.mean())
    terminal = spec.D1 * m2_T + spec.D2 * m1_T * m1_T
    if n >= 2:
        # Delta method for the terminal part: D1 m2 + D2 m1^2 has influence
        # function D1 x^2 + 2 D2 m1 x.
        g = spec.D1 * x * x + 2.0 * spec.D2 * m1_T * x
        se = math.sqrt(run.var(ddof=1) / n + g.var(ddof=1) / n)
    else:
        se = 0.0
    return CostReport(total=running + terminal, running=running,
                      terminal=terminal, std_error=se, n_paths=n)


def simulate_mc(spec: ProblemSpec, law: FeedbackLaw, initial: InitialLaw,
                config: SimConfig) -> CostReport:
    """Monte Carlo estimate of the cost of a feedback law over [0, T]."""
    traj = evolve_cloud(spec, law, initial, config)
    return _report_from_cloud(spec, traj)


def gaussianity_check(spec: ProblemSpec, law: FeedbackLaw, initial: InitialLaw,
                      config: SimConfig, t: float) -> GaussianityReport:
    """Sample skewness and excess kurtosis of the cloud at time t.

    Under a linear law started from Gaussian or Dirac data both should vanish;
    a degenerate (numerically zero-variance) cloud is flagged instead of
    producing 0/0 noise.
    """
    traj = evolve_cloud(spec, law, initial, config, t_stop=t)
    x = traj.states
    m = x.mean()
    c = x - m
    v = float((c * c).mean())
    scale = max(1.0, float((x * x).mean()))
    if v < 1e-18 * scale:
        return GaussianityReport(float("nan"), float("nan"), True)
    skew = float((c ** 3).mean()) / v ** 1.5
    exk = float((c ** 4).mean()) / (v * v) - 3.0
    return GaussianityReport(skew, exk, False)


def perturbation_sweep(spec: ProblemSpec, base: FeedbackLaw, deltas,
                       m1_0: float, m2_0: float, steps: int = 2000) -> list[tuple]:
    """Oracle cost of the base law under constant gain offsets.

    deltas is an iterable of (d_alpha, d_beta) pairs; returns
    [((d_alpha, d_beta), total_cost), ...] in input order.
    """
    out = []
    for d_alpha, d_beta in deltas:
        shifted = base.shifted(d_alpha, d_beta)
        report = cost_oracle(spec, shifted, m1_0, m2_0, steps)
        out.append(((float(d_alpha), float(d_beta)), report.total))
    return out


def trajectory_to_csv(traj: CloudTrajectory, path) -> None:
    """Write columns t, m1, m2."""
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "m1", "m2"])
        for i in range(traj.times.size):
            writer.writerow([repr(float(traj.times[i])), repr(float(traj.m1[i])),
                             repr(float(traj.m2[i]))])
