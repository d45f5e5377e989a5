"""Value function, measure derivatives, and the optimal feedback law.

Everything here is a direct readout of a Riccati solution:

    v(t, mu)        = phi1 m2 + phi2 m1^2 + phi3
    d_mu v(t, mu)(x) = 2 phi1 x + 2 phi2 m1
    u*(t, x, mu)    = alpha(t) x + beta(t) m1,   alpha = -B phi1 / Q,
                                                 beta  = -B phi2 / Q.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import AssumptionError, DomainError
from .model import MeasureMoments, ProblemSpec
from .riccati import RiccatiSolution, sample_solution

__all__ = [
    "FeedbackLaw",
    "value_function",
    "mu_derivative",
    "hamiltonian",
    "hamiltonian_minimizer",
    "optimal_feedback",
    "master_residual",
    "residual_sweep",
    "law_to_csv",
    "residual_to_csv",
]


@dataclass(frozen=True, eq=False)
class FeedbackLaw:
    """Linear-in-(x, mean) feedback u(t, x, m1) = alpha(t) x + beta(t) m1.

    Gains are tabulated on a grid and interpolated linearly in between.
    """

    grid: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray

    def __post_init__(self):
        for name in ("grid", "alpha", "beta"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.grid.size < 2:
            raise DomainError("feedback grid needs at least two points")
        if self.alpha.size != self.grid.size or self.beta.size != self.grid.size:
            raise DomainError("gain arrays must match the grid length")
        if not (np.isfinite(self.alpha).all() and np.isfinite(self.beta).all()):
            raise DomainError("feedback gains must be finite")

    @property
    def T(self) -> float:
        return float(self.grid[-1])

    def at(self, t: float) -> tuple[float, float]:
        t = float(t)
        g = self.grid
        if t < g[0] or t > g[-1]:
            raise DomainError(f"t = {t:.6g} outside [{g[0]:.6g}, {g[-1]:.6g}]")
        return (float(np.interp(t, g, self.alpha)), float(np.interp(t, g, self.beta)))

    def gains_on(self, times: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Vectorized gains for a batch of times inside the law's domain."""
        times = np.asarray(times, dtype=np.float64)
        if times.size and (times.min() < self.grid[0] or times.max() > self.grid[-1]):
            raise DomainError("requested times leave the feedback law's domain")
        return (np.interp(times, self.grid, self.alpha),
                np.interp(times, self.grid, self.beta))

    def shifted(self, d_alpha: float = 0.0, d_beta: float = 0.0) -> "FeedbackLaw":
        """The same law with constant offsets added to the gains."""
        return FeedbackLaw(
            grid=self.grid.copy(),
            alpha=self.alpha + float(d_alpha),
            beta=self.beta + float(d_beta),
        )

    def control(self, t: float, x: float, m1: float) -> float:
        a, b = self.at(t)
        return a * float(x) + b * float(m1)


def value_function(sol: RiccatiSolution, t: float, mu: MeasureMoments) -> float:
    p1, p2, p3 = sample_solution(sol, t)
    return p1 * mu.m2 + p2 * mu.m1 * mu.m1 + p3


def mu_derivative(sol: RiccatiSolution, t: float, mu: MeasureMoments, x: float) -> float:
    """Measure derivative of the value ansatz, evaluated at state x."""
    p1, p2, _ = sample_solution(sol, t)
    return 2.0 * p1 * float(x) + 2.0 * p2 * mu.m1


def hamiltonian(spec: ProblemSpec, t: float, x: float, dmu_v: float, a: float) -> float:
    """(A x + B a) * dmu_v + Q a^2 for a candidate control a."""
    return (spec.A(t) * float(x) + spec.B(t) * float(a)) * float(dmu_v) \
        + spec.Q(t) * float(a) * float(a)


def hamiltonian_minimizer(spec: ProblemSpec, t: float, dmu_v: float) -> float:
    """argmin over a of the Hamiltonian: -B dmu_v / (2 Q)."""
    q = spec.Q(t)
    if not q > 0.0:
        raise AssumptionError(
            f"assumption A1 (positive control weight) fails: Q({t:.6g}) = {q:.6g}"
        )
    return -spec.B(t) * float(dmu_v) / (2.0 * q)


def optimal_feedback(spec: ProblemSpec, sol: RiccatiSolution) -> FeedbackLaw:
    """Gains alpha = -B phi1 / Q and beta = -B phi2 / Q on the solution grid."""
    grid = sol.grid
    ratio = np.empty(grid.size)
    for i, t in enumerate(grid):
        t = float(t)
        q = spec.Q(t)
        if not q > 0.0:
            raise AssumptionError(
                f"assumption A1 (positive control weight) fails: Q({t:.6g}) = {q:.6g}"
            )
        ratio[i] = spec.B(t) / q
    return FeedbackLaw(grid=grid.copy(), alpha=-ratio * sol.phi1, beta=-ratio * sol.phi2)


def master_residual(spec: ProblemSpec, sol: RiccatiSolution, t: float,
                    mu: MeasureMoments) -> float:
    """Defect of the value equation at (t, mu), with phi-derivatives replaced by
    central differences of the tabulated solution at its own grid spacing.

    This recomputes the three defect operators from the problem coefficients
    directly, so it is an independent check on the integrated solution rather
    than a restatement of the integrator.  t must sit at least one grid
    spacing inside (0, T).
    """
    g = sol.grid
    T = float(g[-1])
    h = float(g[1] - g[0])
    t = float(t)
    if not (0.0 < t < T):
        raise DomainError(f"t = {t:.6g} must lie strictly inside (0, {T:.6g})")
    tm, tp = t - h, t + h
    if tm < 0.0 and tm > -1e-9 * h:
        tm = 0.0
    if tp > T and tp < T + 1e-9 * h:
        tp = T
    if tm < 0.0 or tp > T:
        raise DomainError(
            f"t = {t:.6g} too close to the boundary for a central difference of width {h:.3g}"
        )
    pm = sample_solution(sol, tm)
    pc = sample_solution(sol, t)
    pp = sample_solution(sol, tp)
    dp1 = (pp[0] - pm[0]) / (2.0 * h)
    dp2 = (pp[1] - pm[1]) / (2.0 * h)
    dp3 = (pp[2] - pm[2]) / (2.0 * h)
    a = spec.A(t)
    b = spec.B(t)
    q = spec.Q(t)
    sig = spec.sigma(t)
    if not q > 0.0:
        raise AssumptionError(
            f"assumption A1 (positive control weight) fails: Q({t:.6g}) = {q:.6g}"
        )
    r = b * b / q
    l1 = dp1 - r * pc[0] * pc[0] + 2.0 * a * pc[0]
    l2 = dp2 - r * pc[1] * pc[1] - 2.0 * r * pc[0] * pc[1] + 2.0 * a * pc[1]
    l3 = dp3 + sig * sig * pc[0]
    return mu.m2 * l1 + mu.m1 * mu.m1 * l2 + l3


def residual_sweep(spec: ProblemSpec, sol: RiccatiSolution, points) -> list[tuple]:
    """Evaluate the residual at each (t, mu) in points; rows (t, m1, m2, residual)."""
    rows = []
    for t, mu in points:
        rows.append((float(t), mu.m1, mu.m2, master_residual(spec, sol, t, mu)))
    return rows


def law_to_csv(law: FeedbackLaw, path) -> None:
    """Write columns t, alpha, beta."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "alpha", "beta"])
        for i in range(law.grid.size):
            writer.writerow(
                [repr(float(law.grid[i])), repr(float(law.alpha[i])),
                 repr(float(law.beta[i]))]
            )


def residual_to_csv(rows, path) -> None:
    """Write columns t, m1, m2, residual."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "m1", "m2", "residual"])
        for t, m1, m2, res in rows:
            writer.writerow([repr(float(t)), repr(float(m1)),
                             repr(float(m2)), repr(float(res))])
