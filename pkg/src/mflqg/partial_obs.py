"""Partially observed problems handled through the separation principle.

The state noise and the initial condition each split into an observed and an
unobserved part (weights sigma_hat/sigma_tilde and eta_hat/eta_tilde, each
pair summing to one in squares).  Conditioning on the observation makes the
prediction process X_hat a fully observed copy of the problem with noise
level sigma_hat, horizon T - s, and Gaussian initial law N(x, eta_hat^2 s),
while the estimation error E = X - X_hat is an independent Gaussian with
variance P_t = eta_tilde^2 s + sigma_tilde^2 (t - s) that the control cannot
touch.  Costs therefore decompose as

    J = J_hat + D1 * P_T

and the optimal value is read off the reduced problem's Riccati solution:

    V = phi1(s) (x^2 + eta_hat^2 s) + phi2(s) x^2 + phi3(s) + D1 * P_T.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .control import FeedbackLaw, optimal_feedback
from .errors import AssumptionError, DomainError, SimulationDivergedError
from .model import ProblemSpec
from .riccati import RiccatiSolution, sample_solution
from .simulate import CostReport, SimConfig, _CHUNK_ELEMENTS, _steps_for

__all__ = [
    "PartialObsSpec",
    "PartialTrajectory",
    "DecompositionReport",
    "error_variance",
    "reduced_problem",
    "partial_value",
    "analytic_partial_phi",
    "analytic_partial_solution",
    "optimal_prediction_feedback",
    "evolve_partial",
    "simulate_partial",
    "cost_decomposition_check",
    "partial_trajectory_to_csv",
]


@dataclass(frozen=True)
class PartialObsSpec:
    """Unit-coefficient problem (A=0, B=1, Q=1) with partial observation.

    sigma_hat/sigma_tilde split the driving noise into observed and hidden
    parts, eta_hat/eta_tilde split the initial uncertainty accumulated on
    [0, s]; both splits must satisfy hat^2 + tilde^2 = 1.  Control starts at
    time s from the point estimate x.
    """

    sigma_hat: float
    sigma_tilde: float
    eta_hat: float
    eta_tilde: float
    s: float
    x: float
    T: float
    D1: float
    D2: float

    def __post_init__(self):
        for name in ("sigma_hat", "sigma_tilde", "eta_hat", "eta_tilde",
                     "s", "x", "T", "D1", "D2"):
            object.__setattr__(self, name, float(getattr(self, name)))
        for name in ("sigma_hat", "sigma_tilde", "eta_hat", "eta_tilde"):
            if getattr(self, name) < 0.0:
                raise AssumptionError(f"{name} must be >= 0")
        if abs(self.sigma_hat ** 2 + self.sigma_tilde ** 2 - 1.0) > 1e-12:
            raise AssumptionError(
                "noise split must satisfy sigma_hat^2 + sigma_tilde^2 = 1"
            )
        if abs(self.eta_hat ** 2 + self.eta_tilde ** 2 - 1.0) > 1e-12:
            raise AssumptionError(
                "initial split must satisfy eta_hat^2 + eta_tilde^2 = 1"
            )
        if not self.T > 0.0:
            raise AssumptionError(f"horizon T must be positive, got {self.T:.6g}")
        if not 0.0 <= self.s < self.T:
            raise AssumptionError(
                f"start time s = {self.s:.6g} must lie in [0, T) with T = {self.T:.6g}"
            )


def error_variance(spec: PartialObsSpec, t: float) -> float:
    """Variance P_t of the estimation error at time t in [s, T]."""
    t = float(t)
    if t < spec.s or t > spec.T:
        raise DomainError(f"t = {t:.6g} outside [{spec.s:.6g}, {spec.T:.6g}]")
    return spec.eta_tilde ** 2 * spec.s + spec.sigma_tilde ** 2 * (t - spec.s)


def reduced_problem(spec: PartialObsSpec) -> ProblemSpec:
    """The fully observed problem the prediction process solves.

    Time is shifted so the reduced problem runs on [0, T - s]; its time tau
    corresponds to s + tau in the original clock.
    """
    return ProblemSpec(A=0.0, B=1.0, sigma=spec.sigma_hat, Q=1.0,
                       D1=spec.D1, D2=spec.D2, T=spec.T - spec.s)


def partial_value(spec: PartialObsSpec, phi: RiccatiSolution) -> float:
    """Optimal value of the partially observed problem from a reduced-problem
    Riccati solution: evaluate the ansatz at the initial law N(x, eta_hat^2 s)
    and add the uncontrollable terminal error cost D1 * P_T."""
    horizon = spec.T - spec.s
    if abs(phi.T - horizon) > 1e-9 * max(1.0, horizon):
        raise DomainError(
            f"solution horizon {phi.T:.6g} does not match T - s = {horizon:.6g}"
        )
    p1, p2, p3 = sample_solution(phi, 0.0)
    m2 = spec.x * spec.x + spec.eta_hat ** 2 * spec.s
    return p1 * m2 + p2 * spec.x * spec.x + p3 + spec.D1 * error_variance(spec, spec.T)


def analytic_partial_phi(preset_name: str, t: float,
                         spec: PartialObsSpec) -> tuple[float, float, float]:
    """Closed-form reduced-problem phi at original-clock time t in [s, T].

    example3 (D1=1, D2=0): (1/(1+T-t), 0, sigma_hat^2 log(1+T-t)).
    example4 (D1=0, D2=1): (0, 1/(1+T-t), 0).
    """
    t = float(t)
    if t < spec.s or t > spec.T:
        raise DomainError(f"t = {t:.6g} outside [{spec.s:.6g}, {spec.T:.6g}]")
    rem = spec.T - t
    if preset_name == "example3":
        return (1.0 / (1.0 + rem), 0.0, spec.sigma_hat ** 2 * math.log(1.0 + rem))
    if preset_name == "example4":
        return (0.0, 1.0 / (1.0 + rem), 0.0)
    raise DomainError(f"no closed form for preset {preset_name!r}")


def analytic_partial_solution(preset_name: str, spec: PartialObsSpec,
                              steps: int = 1000) -> RiccatiSolution:
    """Closed-form reduced-problem solution on the shifted grid [0, T - s]."""
    steps = int(steps)
    if steps < 2:
        raise DomainError(f"steps must be >= 2, got {steps}")
    grid = np.linspace(0.0, spec.T - spec.s, steps + 1)
    vals = [analytic_partial_phi(preset_name, spec.s + float(tau), spec) for tau in grid]
    arr = np.array(vals)
    return RiccatiSolution(grid=grid, phi1=arr[:, 0], phi2=arr[:, 1], phi3=arr[:, 2])


def optimal_prediction_feedback(spec: PartialObsSpec, phi: RiccatiSolution) -> FeedbackLaw:
    """Optimal feedback for the prediction process, on the shifted clock."""
    return optimal_feedback(reduced_problem(spec), phi)


@dataclass(frozen=True, eq=False)
class PartialTrajectory:
    """Per-step empirical moments of the prediction cloud and the full state.

    times are on the original clock (from s to T).  p is the exact error
    variance P_t, not an estimate.
    """

    times: np.ndarray
    m1_hat: np.ndarray
    m2_hat: np.ndarray
    m2: np.ndarray
    p: np.ndarray
    xhat: np.ndarray
    err: np.ndarray
    run_costs: np.ndarray


def evolve_partial(spec: PartialObsSpec, law: FeedbackLaw,
                   config: SimConfig) -> PartialTrajectory:
    """Simulate (X_hat, E) jointly with Euler-Maruyama on [s, T].

    The two noise sources use independent child streams spawned from the
    seed, so changing one side's parameters never shifts the other's draws.
    The law is consumed on the shifted clock (tau = t - s), matching
    optimal_prediction_feedback.
    """
    horizon = spec.T - spec.s
    n_steps = _steps_for(horizon, config.dt)
    n = config.n_paths
    dt = config.dt
    taus = np.linspace(0.0, horizon, n_steps + 1)
    al_k, be_k = law.gains_on(taus[:-1])
    al_k = np.ascontiguousarray(al_k)
    be_k = np.ascontiguousarray(be_k)

    ss_hat, ss_tilde = np.random.SeedSequence(config.seed).spawn(2)
    rng_hat = np.random.Generator(np.random.Philox(ss_hat))
    rng_tilde = np.random.Generator(np.random.Philox(ss_tilde))

    if spec.s > 0.0:
        root_s = math.sqrt(spec.s)
        xhat = spec.x + spec.eta_hat * root_s * rng_hat.standard_normal(n)
        err = spec.eta_tilde * root_s * rng_tilde.standard_normal(n)
    else:
        xhat = np.full(n, spec.x)
        err = np.zeros(n)
    run = np.zeros(n)
    m1h = np.empty(n_steps + 1)
    m2h = np.empty(n_steps + 1)
    m2x = np.empty(n_steps + 1)

    sh_sqdt = spec.sigma_hat * math.sqrt(dt)
    st_sqdt = spec.sigma_tilde * math.sqrt(dt)
    chunk = max(1, _CHUNK_ELEMENTS // max(1, 2 * n))
    k0 = 0
    while k0 < n_steps:
        k1 = min(n_steps, k0 + chunk)
        zh = rng_hat.standard_normal((k1 - k0, n))
        zt = rng_tilde.standard_normal((k1 - k0, n))
        _kernels.partial_chunk(xhat, err, run, zh, zt, sh_sqdt, st_sqdt,
                               al_k[k0:k1], be_k[k0:k1], dt,
                               m1h[k0:k1], m2h[k0:k1], m2x[k0:k1])
        if not (np.isfinite(xhat).all() and np.isfinite(err).all()):
            raise SimulationDivergedError(
                f"particle state became non-finite before t = {spec.s + taus[k1]:.6g}"
            )
        k0 = k1
    m1h[n_steps] = xhat.sum() / n
    m2h[n_steps] = (xhat * xhat).sum() / n
    xfull = xhat + err
    m2x[n_steps] = (xfull * xfull).sum() / n

    times = spec.s + taus
    p = np.array([error_variance(spec, float(t)) for t in times])
    return PartialTrajectory(times=times, m1_hat=m1h, m2_hat=m2h, m2=m2x,
                             p=p, xhat=xhat, err=err, run_costs=run)


def simulate_partial(spec: PartialObsSpec, law: FeedbackLaw,
                     config: SimConfig) -> CostReport:
    """Monte Carlo cost of a prediction-feedback law, measured on the full
    state X = X_hat + E (running cost plus terminal cost at T)."""
    traj = evolve_partial(spec, law, config)
    x = traj.xhat + traj.err
    run = traj.run_costs
    n = x.size
    m1_T = float(x.mean())
    m2_T = float(traj.m2[-1])
    running = float(run.mean())
    terminal = spec.D1 * m2_T + spec.D2 * m1_T * m1_T
    if n >= 2:
        g = spec.D1 * x * x + 2.0 * spec.D2 * m1_T * x
        se = math.sqrt(run.var(ddof=1) / n + g.var(ddof=1) / n)
    else:
        se = 0.0
    return CostReport(total=running + terminal, running=running,
                      terminal=terminal, std_error=se, n_paths=n)


@dataclass(frozen=True)
class DecompositionReport:
    """One-run comparison of the full cost J against the prediction cost
    J_hat plus the uncontrollable error compensation D1 * P_T."""

    total: float
    prediction_total: float
    error_compensation: float
    defect: float
    defect_std_error: float
    n_paths: int


def cost_decomposition_check(spec: PartialObsSpec, law: FeedbackLaw,
                             config: SimConfig) -> DecompositionReport:
    """Estimate J and J_hat from the same particles and report the defect
    J - J_hat - D1 * P_T, which should vanish in expectation.

    The defect's standard error comes from the per-path difference
    D1 (2 X_hat E + E^2) + 2 D2 m1_hat E - D1 P_T, whose sample mean is the
    defect up to the quadratic-in-mean terminal term.
    """
    traj = evolve_partial(spec, law, config)
    xh = traj.xhat
    e = traj.err
    x = xh + e
    n = x.size
    running = float(traj.run_costs.mean())
    m1x = float(x.mean())
    m1h = float(xh.mean())
    total = running + spec.D1 * float(traj.m2[-1]) + spec.D2 * m1x * m1x
    pred = running + spec.D1 * float(traj.m2_hat[-1]) + spec.D2 * m1h * m1h
    comp = spec.D1 * error_variance(spec, spec.T)
    defect = total - pred - comp
    if n >= 2:
        psi = spec.D1 * (2.0 * xh * e + e * e) + 2.0 * spec.D2 * m1h * e
        se = float(psi.std(ddof=1)) / math.sqrt(n)
    else:
        se = 0.0
    return DecompositionReport(total=total, prediction_total=pred,
                               error_compensation=comp, defect=defect,
                               defect_std_error=se, n_paths=n)


def partial_trajectory_to_csv(traj: PartialTrajectory, path) -> None:
    """Write columns t, P_t, m1_hat, m2_hat, m2."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "P_t", "m1_hat", "m2_hat", "m2"])
        for i in range(traj.times.size):
            writer.writerow(
                [repr(float(traj.times[i])), repr(float(traj.p[i])),
                 repr(float(traj.m1_hat[i])), repr(float(traj.m2_hat[i])),
                 repr(float(traj.m2[i]))]
            )
