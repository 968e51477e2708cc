"""Mean-field self-consistency equations and their critical temperatures.

Three systems are supported:

* ``TRIANGULAR``: ``m = tanh((q J m + B) / T)``.
* ``UJ_UNCOUPLED``: sigma sites see only the diagonal bonds,
  ``s = tanh((4 K s + B) / T)`` and ``t = tanh((4 J s + B) / T)``.
* ``UJ_COUPLED``: ``s = tanh((2 K s + 2 J t + B) / T)`` with
  ``t = tanh((2 J s + B) / T)`` substituted in.

``J`` is the grid (sigma-tau) bond and ``K`` the sigma-sigma diagonal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import FieldNotSupported, InvalidTolerance, NonPositiveTemperature
from .exact import PhaseLabel
from .records import Engine, SweepRecord

DAMPING = 0.5
DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 10_000


class MfKind(str, Enum):
    TRIANGULAR = "Triangular"
    UJ_UNCOUPLED = "UjUncoupled"
    UJ_COUPLED = "UjCoupled"


@dataclass(frozen=True)
class MfSystem:
    kind: MfKind
    j: float
    k: float = 0.0
    b: float = 0.0
    q: float = 3.0

    def __post_init__(self):
        object.__setattr__(self, "kind", MfKind(self.kind))
        if self.kind is MfKind.TRIANGULAR:
            if self.q < 1:
                raise ValueError(f"q must be >= 1, got {self.q}")
            if self.k != 0.0:
                raise ValueError("the triangular system has no diagonal coupling K")

    @classmethod
    def triangular(cls, j: float, b: float = 0.0, q: float = 3.0) -> MfSystem:
        return cls(MfKind.TRIANGULAR, j=j, b=b, q=q)

    @classmethod
    def uj_uncoupled(cls, j: float, k: float, b: float = 0.0) -> MfSystem:
        return cls(MfKind.UJ_UNCOUPLED, j=j, k=k, b=b)

    @classmethod
    def uj_coupled(cls, j: float, k: float, b: float = 0.0) -> MfSystem:
        return cls(MfKind.UJ_COUPLED, j=j, k=k, b=b)


@dataclass(frozen=True)
class MfSolution:
    m_sigma: float
    m_tau: float
    iterations: int
    residual: float
    converged: bool


def tau_of_sigma(sys: MfSystem, sigma: float, temp: float) -> float:
    if sys.kind is MfKind.TRIANGULAR:
        return sigma
    coeff = 4.0 if sys.kind is MfKind.UJ_UNCOUPLED else 2.0
    return math.tanh((coeff * sys.j * sigma + sys.b) / temp)


def sigma_map(sys: MfSystem, sigma: float, temp: float) -> float:
    """Right-hand side of the sigma equation with tau eliminated."""
    if sys.kind is MfKind.TRIANGULAR:
        return math.tanh((sys.q * sys.j * sigma + sys.b) / temp)
    if sys.kind is MfKind.UJ_UNCOUPLED:
        return math.tanh((4.0 * sys.k * sigma + sys.b) / temp)
    tau = tau_of_sigma(sys, sigma, temp)
    return math.tanh((2.0 * sys.k * sigma + 2.0 * sys.j * tau + sys.b) / temp)


def residuals(sys: MfSystem, sigma: float, tau: float, temp: float) -> tuple[float, float]:
    """Residuals of both self-consistency equations at (sigma, tau)."""
    b = sys.b
    if sys.kind is MfKind.TRIANGULAR:
        r = sigma - math.tanh((sys.q * sys.j * sigma + b) / temp)
        return r, r
    if sys.kind is MfKind.UJ_UNCOUPLED:
        return (
            sigma - math.tanh((4.0 * sys.k * sigma + b) / temp),
            tau - math.tanh((4.0 * sys.j * sigma + b) / temp),
        )
    return (
        sigma - math.tanh((2.0 * sys.k * sigma + 2.0 * sys.j * tau + b) / temp),
        tau - math.tanh((2.0 * sys.j * sigma + b) / temp),
    )


def mf_solve(
    sys: MfSystem,
    temp: float,
    m0: float = 1.0,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> MfSolution:
    """Damped fixed-point iteration ``m <- (1-d) m + d F(m)`` with ``d = 0.5``.

    The distance to the fixed point is about ``|m - F(m)| / (1 - F'(m))``,
    which blows up next to T_c where the map is nearly flat.  The slope is
    read off the ratio ``q`` of successive residuals (``1 - F' = (1-q)/d``),
    and iteration stops once both the residual is below ``d * tol`` and the
    estimated error is below ``tol``.  A run that hits ``max_iter`` first is
    returned with ``converged=False``.
    """
    if not temp > 0:
        raise NonPositiveTemperature(f"temperature must be > 0, got {temp}")
    if not tol > 0:
        raise InvalidTolerance(f"tolerance must be > 0, got {tol}")
    if abs(m0) > 1:
        raise ValueError(f"initial guess must lie in [-1, 1], got {m0}")

    def done(res, prev):
        if not res < DAMPING * tol:
            return False
        if prev is None or res == 0.0 or not res < prev:
            return True
        q = res / prev
        return DAMPING * res / (1.0 - q) < tol

    m = float(m0)
    res = abs(m - sigma_map(sys, m, temp))
    prev = None
    it = 0
    while not done(res, prev) and it < max_iter:
        m = (1.0 - DAMPING) * m + DAMPING * sigma_map(sys, m, temp)
        prev, res = res, abs(m - sigma_map(sys, m, temp))
        it += 1
    tau = tau_of_sigma(sys, m, temp)
    return MfSolution(m, tau, it, res, done(res, prev))


def mf_critical_temperature(sys: MfSystem) -> float | None:
    """Temperature where the linearised map at m = 0 has unit slope, or None."""
    if sys.b != 0.0:
        raise FieldNotSupported("critical temperature is defined at zero field")
    if sys.kind is MfKind.TRIANGULAR:
        tc = sys.q * sys.j
        return tc if tc > 0 else None
    if sys.kind is MfKind.UJ_UNCOUPLED:
        return 4.0 * sys.k if sys.k > 0 else None
    j, k = sys.j, sys.k
    if k <= -abs(j) or (j == 0.0 and k <= 0.0):
        return None
    # positive root of T^2 - 2 K T - 4 J^2 = 0, same as 4J^2 / (sqrt(K^2+4J^2) - K)
    return k + math.hypot(k, 2.0 * j)


def mf_classify(j: float, k: float) -> PhaseLabel:
    if k + abs(j) > 0:
        return PhaseLabel.FERROMAGNETIC
    if k < -abs(j):
        return PhaseLabel.ANTIFERROMAGNETIC
    return PhaseLabel.DEGENERATE


def mf_sweep(
    sys: MfSystem,
    t_min: float,
    t_max: float,
    points: int,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> list[SweepRecord]:
    """Solve on a uniform ascending grid, warm-starting from the previous point."""
    if points < 2:
        raise ValueError(f"need at least 2 points, got {points}")
    if not t_min < t_max:
        raise ValueError(f"need t_min < t_max, got {t_min}, {t_max}")
    temps = np.linspace(t_min, t_max, points)
    temps[0], temps[-1] = t_min, t_max
    out = []
    m = 1.0
    for t in temps:
        sol = mf_solve(sys, float(t), m, tol, max_iter)
        m = sol.m_sigma
        mean = 0.5 * (sol.m_sigma + sol.m_tau)
        out.append(SweepRecord(
            temp=float(t),
            engine=Engine.MEAN_FIELD,
            m_sigma=sol.m_sigma,
            m_tau=sol.m_tau,
            m_mean=mean,
            m_all=mean,
            flags=() if sol.converged else ("NotConverged",),
        ))
    return out
