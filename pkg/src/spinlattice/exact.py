"""Closed-form predictions for the chain, square, triangular and Union Jack models.

All couplings and temperatures are in kelvin, so ``beta * J`` is ``J / T``.
Functions return exactly 0 (never NaN) on the disordered side of a
transition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import mpmath
import numpy as np
from scipy.optimize import bisect

from .errors import (
    FieldNotSupported,
    NonPositiveCoupling,
    NonPositiveTemperature,
    SingularCoupling,
)
from .lattice import CouplingSet

SCAN_POINTS = 1000
ROOT_XTOL = 1e-8


def _check_temp(temp: float) -> None:
    if not temp > 0:
        raise NonPositiveTemperature(f"temperature must be > 0, got {temp}")


# --- one dimension ---------------------------------------------------------

def chain_log_partition(j: float, h: float, temp: float, n: int) -> float:
    """log Z of a periodic ring of ``n`` spins from the 2x2 transfer matrix."""
    _check_temp(temp)
    if n < 2:
        raise ValueError(f"ring needs at least 2 sites, got {n}")
    k, b = j / temp, h / temp
    # lambda_pm = e^K cosh b +- sqrt(e^{2K} sinh^2 b + e^{-2K}), factored by e^K
    root = math.sqrt(math.sinh(b) ** 2 + math.exp(-4.0 * k))
    log_l1 = k + math.log(math.cosh(b) + root)
    # lambda2 / lambda1 without cancellation: (cosh b - r)(cosh b + r) = 1 - e^{-4K}
    ratio = -math.expm1(-4.0 * k) / (math.cosh(b) + root) ** 2
    return n * log_l1 + math.log1p(ratio ** n)


def chain_magnetisation(j: float, h: float, temp: float) -> float:
    _check_temp(temp)
    b = h / temp
    s = math.sinh(b)
    if math.isinf(s):
        return math.copysign(1.0, b)
    return s / math.sqrt(s * s + math.exp(-4.0 * j / temp))


# --- square lattice --------------------------------------------------------

def square_critical_temperature(j: float) -> float:
    """T_c solving sinh(2J/T_c) = 1."""
    if not j > 0:
        raise NonPositiveCoupling(f"square T_c needs J > 0, got {j}")
    return 2.0 * j / math.asinh(1.0)


def square_magnetisation(j: float, temp: float) -> float:
    _check_temp(temp)
    if not j > 0:
        raise NonPositiveCoupling(f"square magnetisation needs J > 0, got {j}")
    if temp >= square_critical_temperature(j):
        return 0.0
    t = math.tanh(j / temp)
    # 1 - t^2 = sech^2, written via exp to keep precision at low T
    sech2 = 1.0 / math.cosh(j / temp) ** 2
    bracket = 1.0 - sech2 ** 4 / (16.0 * t ** 4)
    return bracket ** 0.125 if bracket > 0 else 0.0


# --- triangular lattice ----------------------------------------------------

def _tri_k2(v1: float, v2: float, v3: float) -> float:
    num = ((1 - v1 * v1) * (1 - v2 * v2) * (1 - v3 * v3)) ** 2
    den = 16.0 * (1 + v1 * v2 * v3) * (v1 + v2 * v3) * (v2 + v3 * v1) * (v3 + v1 * v2)
    if den == 0.0:
        return math.inf
    return num / den


def triangular_magnetisation(j1: float, j2: float, j3: float, temp: float) -> float:
    """Spontaneous magnetisation of the anisotropic triangular model.

    ``j3`` is the diagonal coupling; ``j3 = 0`` gives the anisotropic square
    lattice.  Order is reported only when at least two couplings are
    positive and ``0 < k^2 < 1``; otherwise 0.
    """
    _check_temp(temp)
    if sum(j > 0 for j in (j1, j2, j3)) < 2:
        return 0.0
    v = [math.tanh(j / temp) for j in (j1, j2, j3)]
    k2 = _tri_k2(*v)
    # k^2 underflows to exactly 0 deep in the ordered phase
    if not 0.0 <= k2 < 1.0:
        return 0.0
    return (1.0 - k2) ** 0.125


def triangular_critical_temperature(j1: float, j2: float, j3: float) -> float | None:
    """Temperature where k^2 reaches 1 on the ordered side, or None."""
    if sum(j > 0 for j in (j1, j2, j3)) < 2:
        return None

    def f(t):
        return _tri_k2(*(math.tanh(j / t) for j in (j1, j2, j3))) - 1.0

    scale = max(abs(j1), abs(j2), abs(j3))
    lo, hi = 1e-3 * scale, 1e3 * scale
    if not (f(lo) < 0 < f(hi)):
        return None
    return bisect(f, lo, hi, xtol=ROOT_XTOL * 1e-2, maxiter=500)


def _three_site_ratio(v1: float, v2: float, v3: float) -> float:
    # Rearranged so the 1/v terms cancel analytically; stays finite as v3 -> 0.
    p = v1 * v2 * v3
    s = v1 * v2 + v2 * v3 + v3 * v1
    q = (1 + p) * (v1 + v2 * v3) * (v2 + v3 * v1) * (v3 + v1 * v2)
    poly = (
        v1**3 * v2 * v3 + p * p + v1**2 * v2**2 + v1**2 * v3**2 + v1**2
        + v1 * v2**3 * v3 + v1 * v2 * v3**3 + 2 * p - 2 * v1 + v2**2 * v3**2
        + v2**2 - 2 * v2 + v3**2 - 2 * v3 + 1
    )
    return 0.5 * (v1 + v2 + v3) - poly / (2.0 * (s + math.sqrt(q)))


def triangular_three_site(j1: float, j2: float, j3: float, temp: float) -> float:
    """Three-site face correlator M3 = M * R below T_c, 0 above."""
    m = triangular_magnetisation(j1, j2, j3, temp)
    if m == 0.0:
        return 0.0
    v = [math.tanh(j / temp) for j in (j1, j2, j3)]
    return m * _three_site_ratio(*v)


def square_corner_three_site(j1: float, j2: float, temp: float) -> float:
    """Three spins around a corner of the anisotropic square lattice."""
    _check_temp(temp)
    if j1 == 0.0 or j2 == 0.0:
        raise SingularCoupling("corner correlator needs J1 and J2 nonzero")
    m = triangular_magnetisation(j1, j2, 0.0, temp)
    if m == 0.0:
        return 0.0
    k1, k2 = j1 / temp, j2 / temp
    corr = 4.0 * math.exp(-4.0 * k1 - 4.0 * k2) / (
        -math.expm1(-4.0 * k1) * -math.expm1(-4.0 * k2)
    )
    return m * (1.0 - corr)


# --- Union Jack lattice ----------------------------------------------------

@dataclass(frozen=True)
class FaceWeights:
    """Face weights w1..w8 and the combinations g1..g4.

    ``log_w`` always holds the exact logarithms.  When built with
    ``normalise=True`` the arrays ``w`` and ``g`` are divided by
    ``exp(log_scale)``; everything derived from them here is invariant under
    that common scaling.
    """

    w: np.ndarray
    g: np.ndarray
    log_w: np.ndarray
    log_scale: float = 0.0

    def __getattr__(self, name):
        if len(name) == 2 and name[0] in "wg" and name[1].isdigit():
            arr = object.__getattribute__(self, name[0])
            return float(arr[int(name[1]) - 1])
        raise AttributeError(name)

    def omega_ratio(self) -> float:
        """g1 g2 g3 g4 / (16 w5 w6 w7 w8), evaluated in log space (may be +-inf)."""
        g = self.g
        if np.any(g == 0.0):
            return 0.0
        log_mag = (np.sum(np.log(np.abs(g))) - math.log(16.0)
                   - np.sum(self.log_w[4:] - self.log_scale))
        sign = float(np.prod(np.sign(g)))
        return sign * math.exp(log_mag) if log_mag < 709.0 else sign * math.inf

    @property
    def omega_sq(self) -> float:
        return 1.0 - self.omega_ratio()

    def free_fermion_residual(self) -> float:
        """|w1 w2 + w3 w4 - w5 w6 - w7 w8| / (w1 w2 + w3 w4), from the logs."""
        lw = self.log_w
        lhs = np.logaddexp(lw[0] + lw[1], lw[2] + lw[3])
        rhs = np.logaddexp(lw[4] + lw[5], lw[6] + lw[7])
        return abs(math.expm1(rhs - lhs))


def _l2cosh(x: float) -> float:
    """log(2 cosh x) without overflow."""
    x = abs(x)
    return x + math.log1p(math.exp(-2.0 * x))


def _log_weights(c: CouplingSet, temp: float) -> np.ndarray:
    b = 1.0 / temp
    j1, j2, j3, j4 = c.j1, c.j2, c.j3, c.j4
    jd, jp = c.j_diag, c.j_diag_prime
    return np.array([
        b * (jd + jp) + _l2cosh(b * (j1 + j2 + j3 + j4)),
        -b * (jd + jp) + _l2cosh(b * (j1 - j2 + j3 - j4)),
        b * (jp - jd) + _l2cosh(b * (j1 - j2 - j3 + j4)),
        b * (jd - jp) + _l2cosh(b * (j1 + j2 - j3 - j4)),
        _l2cosh(b * (j1 - j2 + j3 + j4)),
        _l2cosh(b * (j1 + j2 + j3 - j4)),
        _l2cosh(b * (j1 + j2 - j3 + j4)),
        _l2cosh(b * (-j1 + j2 + j3 + j4)),
    ])


_G_MAX_DPS = 2000


def _g_combinations(c: CouplingSet, temp: float, shift: float) -> np.ndarray:
    """g_i = w1 + w2 + w3 + w4 - 2 w_i, divided by exp(shift).

    The subtraction cancels badly when couplings nearly tie, so the weights
    are rebuilt from the couplings in mpmath and the precision is raised
    until every g_i sits well above the rounding floor.  Anything still
    unresolved at the cap is an exact zero.
    """
    j1, j2, j3, j4 = c.j1, c.j2, c.j3, c.j4
    jd, jp = c.j_diag, c.j_diag_prime
    dps = 40
    while True:
        with mpmath.workdps(dps):
            b = 1 / mpmath.mpf(temp)
            lw = [
                b * (jd + jp) + _mp_l2cosh(b * (mpmath.mpf(j1) + j2 + j3 + j4)),
                -b * (mpmath.mpf(jd) + jp) + _mp_l2cosh(b * (mpmath.mpf(j1) - j2 + j3 - j4)),
                b * (mpmath.mpf(jp) - jd) + _mp_l2cosh(b * (mpmath.mpf(j1) - j2 - j3 + j4)),
                b * (mpmath.mpf(jd) - jp) + _mp_l2cosh(b * (mpmath.mpf(j1) + j2 - j3 - j4)),
            ]
            top = max(lw)
            w = [mpmath.exp(x - top) for x in lw]
            total = mpmath.fsum(w)
            g = [total - 2 * x for x in w]
            floor = mpmath.mpf(10) ** (16 - dps)
            if all(abs(x) > floor for x in g) or dps >= _G_MAX_DPS:
                scale = mpmath.exp(top - shift)
                return np.array([float(x * scale) if abs(x) > floor else 0.0 for x in g])
        dps *= 2


def _mp_l2cosh(x):
    x = abs(x)
    return x + mpmath.log1p(mpmath.exp(-2 * x))


def uj_face_weights(c: CouplingSet, temp: float, normalise: bool = False) -> FaceWeights:
    _check_temp(temp)
    lw = _log_weights(c, temp)
    shift = float(lw[:4].max()) if normalise else 0.0
    # w5..w8 may overflow at very low T; only their logs are used downstream
    with np.errstate(over="ignore"):
        w = np.exp(lw - shift)
    g = _g_combinations(c, temp, shift)
    return FaceWeights(w=w, g=g, log_w=lw, log_scale=shift)


def _require_zero_field(c: CouplingSet) -> None:
    if c.field_b != 0.0:
        raise FieldNotSupported("closed forms exist only at zero field")


def _sigma_from_weights(fw: FaceWeights, gated: bool) -> float:
    # Omega^2 = 1 - r; ordered when r < 0, and then 1 - 1/Omega^2 = x / (1 + x), x = -r
    r = fw.omega_ratio()
    if not r < 0.0:
        return 0.0
    if gated:
        g = fw.g
        if not (g[0] < 0 or np.prod(np.sign(g)) > 0):
            return 0.0
    x = -r
    return float((1.0 / (1.0 + 1.0 / x)) ** 0.125)


def uj_sigma_magnetisation(c: CouplingSet, temp: float, gated: bool = True) -> float:
    """Spontaneous magnetisation of the eight-coordinated sublattice.

    With ``gated=True`` (default) the value is reported only where
    ``g1 < 0`` or ``g1 g2 g3 g4 > 0``; ``gated=False`` gives the bare
    free-fermion formula.
    """
    _require_zero_field(c)
    return _sigma_from_weights(uj_face_weights(c, temp, normalise=True), gated)


class Flag(str, Enum):
    UNGATED = "Ungated"
    GATE_FAILED = "GateFailed"
    OUT_OF_RANGE = "OutOfRange"
    BRANCH_FAILURE = "BranchFailure"


@dataclass(frozen=True)
class TauResult:
    value: float
    flags: tuple[Flag, ...] = ()

    def __float__(self):
        return self.value


# The tau expression multiplies up to eight weights, which span hundreds of
# e-folds at low temperature, so it is evaluated in arbitrary precision.
_TAU_DPS = 50


def _tau_ratio(c: CouplingSet, temp: float) -> mpmath.mpf | None:
    """<tau>/<sigma> before the overall one-half, or None on a bad branch."""
    with mpmath.workdps(_TAU_DPS):
        b = mpmath.mpf(1) / mpmath.mpf(temp)
        k1, k2, k3, k4 = (b * mpmath.mpf(j) for j in (c.j1, c.j2, c.j3, c.j4))
        kd, kp = b * mpmath.mpf(c.j_diag), b * mpmath.mpf(c.j_diag_prime)
        ch, ex = mpmath.cosh, mpmath.exp
        w1 = 2 * ex(kd + kp) * ch(k1 + k2 + k3 + k4)
        w2 = 2 * ex(-kd - kp) * ch(k1 - k2 + k3 - k4)
        w3 = 2 * ex(-kd + kp) * ch(k1 - k2 - k3 + k4)
        w4 = 2 * ex(kd - kp) * ch(k1 + k2 - k3 - k4)
        w5 = 2 * ch(k1 - k2 + k3 + k4)
        w6 = 2 * ch(k1 + k2 + k3 - k4)
        w7 = 2 * ch(k1 + k2 - k3 + k4)
        w8 = 2 * ch(-k1 + k2 + k3 + k4)

        g_minus = ch(2 * (k1 + k3)) + ch(2 * (k2 - k4))
        rad13 = 2 * g_minus * mpmath.sinh(2 * k1) * mpmath.sinh(2 * k3)
        rad24 = 2 * g_minus * mpmath.sinh(2 * k2) * mpmath.sinh(2 * k4)
        if rad13 <= 0 or rad24 <= 0:
            return None
        a1234 = mpmath.sinh(2 * (k1 + k3)) / mpmath.sqrt(rad13)
        a2341 = mpmath.sinh(2 * (k2 + k4)) / mpmath.sqrt(rad24)

        big_w = w5 * w6 * w7 * w8
        p4 = w1 * w2 * w3 * w4
        sq = w1**2 + w2**2 + w3**2 + w4**2
        a = 2 * big_w * sq - (w1 * w2 + w3 * w4) * (w1 * w3 + w2 * w4) * (w1 * w4 + w2 * w3)
        bb = big_w * (big_w - p4)
        cc = sq**2 - 4 * (w5 * w6 - w7 * w8) ** 2
        d = (w1**2 + w2**2) * (2 * big_w - p4) - big_w * (w3**2 + w4**2)
        e = w1**2 - w2**2
        if bb < 0 or bb * cc < 0:
            return None
        den = d + 2 * e * mpmath.sqrt(bb)
        if den == 0:
            return None
        ratio = (a + 2 * mpmath.sqrt(bb * cc)) / den
        if not ratio > 0:
            return None
        fp = mpmath.sqrt(ratio)
        fm = (w5 * w6 - w7 * w8) / (w1 * w2 * fp)
        return a1234 * (fp + fm) + a2341 * (fp - fm)


def uj_tau_magnetisation(c: CouplingSet, temp: float, gated: bool = True) -> TauResult:
    """Spontaneous magnetisation of the four-coordinated sublattice.

    The gated form requires all four grid couplings equal and a nonzero gated
    sigma magnetisation; otherwise it returns 0 flagged ``GateFailed``.
    Values outside [-1, 1] are returned unclipped and flagged ``OutOfRange``.
    """
    _require_zero_field(c)
    _check_temp(temp)
    if 0.0 in (c.j1, c.j2, c.j3, c.j4):
        raise SingularCoupling("tau magnetisation needs every grid coupling nonzero")
    flags: list[Flag] = [] if gated else [Flag.UNGATED]
    if gated and not (c.j1 == c.j2 == c.j3 == c.j4):
        return TauResult(0.0, (Flag.GATE_FAILED,))
    sigma = _sigma_from_weights(uj_face_weights(c, temp, normalise=True), gated)
    if sigma == 0.0:
        return TauResult(0.0, tuple(flags))
    ratio = _tau_ratio(c, temp)
    if ratio is None:
        return TauResult(0.0, tuple(flags + [Flag.BRANCH_FAILURE]))
    tau = 0.5 * sigma * float(ratio)
    if not math.isfinite(tau):
        return TauResult(0.0, tuple(flags + [Flag.BRANCH_FAILURE]))
    if abs(tau) > 1.0:
        flags.append(Flag.OUT_OF_RANGE)
    return TauResult(tau, tuple(flags))


def uj_mean_magnetisation(c: CouplingSet, temp: float, gated: bool = True) -> float:
    sigma = uj_sigma_magnetisation(c, temp, gated)
    tau = uj_tau_magnetisation(c, temp, gated).value
    return 0.5 * (sigma + tau)


# --- critical temperatures -------------------------------------------------

class RootKind(str, Enum):
    OMEGA_ROOT = "OmegaRoot"
    VAKS_TC = "VaksTc"
    VAKS_TC_STAR = "VaksTcStar"
    VAKS_TD = "VaksTd"
    MEAN_FIELD_TC = "MeanFieldTc"


@dataclass(frozen=True)
class CriticalRoot:
    temp: float
    kind: RootKind
    source: str = ""


@dataclass(frozen=True)
class CriticalSet:
    items: tuple[CriticalRoot, ...] = ()

    @property
    def roots(self) -> list[float]:
        return [r.temp for r in self.items]

    @property
    def kinds(self) -> list[RootKind]:
        return [r.kind for r in self.items]

    def of_kind(self, kind: RootKind) -> list[float]:
        return [r.temp for r in self.items if r.kind is kind]

    def __len__(self):
        return len(self.items)


def scan_roots(f, t_min: float, t_max: float, points: int = SCAN_POINTS) -> list[float]:
    """Sign changes of ``f`` on a uniform grid, refined by bisection."""
    if not 0 < t_min < t_max:
        raise ValueError(f"need 0 < t_min < t_max, got {t_min}, {t_max}")
    grid = np.linspace(t_min, t_max, points)
    vals = np.sign([f(t) for t in grid])
    roots = []
    for i in range(points - 1):
        lo, hi = vals[i], vals[i + 1]
        if lo == 0.0:
            roots.append(float(grid[i]))
        elif lo * hi < 0:
            roots.append(float(bisect(f, grid[i], grid[i + 1], xtol=ROOT_XTOL, maxiter=200)))
    if vals[-1] == 0.0:
        roots.append(float(grid[-1]))
    return roots


def _gamma_fn(c: CouplingSet, index: int):
    def f(t):
        fw = uj_face_weights(c, t, normalise=True)
        return float(fw.g[index] / fw.w[:4].sum())
    return f


def uj_critical_temperatures(c: CouplingSet, t_min: float, t_max: float) -> CriticalSet:
    """Temperatures where one of g1..g4 changes sign (equivalently Omega^2 = 1)."""
    items = []
    for i in range(4):
        for r in scan_roots(_gamma_fn(c, i), t_min, t_max):
            items.append(CriticalRoot(r, RootKind.OMEGA_ROOT, f"gamma{i + 1}"))
    items.sort(key=lambda r: r.temp)
    return CriticalSet(tuple(items))


def vaks_parameters(j1: float, j: float, temp: float) -> tuple[float, float]:
    """(alpha1, alpha2) for the symmetric model J1=J2=J3=J4=j1, J=J'=j."""
    _check_temp(temp)
    k, k1 = j / temp, j1 / temp
    try:
        em = math.exp(-2.0 * k)
        c4 = math.cosh(4.0 * k1)
        alpha1 = math.exp(2.0 * k) * (c4 - em) / (1.0 + em)
        alpha2 = em * -math.expm1(-2.0 * k) / (c4 + em)
        if math.isfinite(alpha1) and math.isfinite(alpha2):
            return alpha1, alpha2
    except OverflowError:
        pass
    with mpmath.workdps(30):
        k, k1 = mpmath.mpf(j) / temp, mpmath.mpf(j1) / temp
        em = mpmath.exp(-2 * k)
        c4 = mpmath.cosh(4 * k1)
        alpha1 = mpmath.exp(2 * k) * (c4 - em) / (1 + em)
        alpha2 = em * -mpmath.expm1(-2 * k) / (c4 + em)
        return float(alpha1), float(alpha2)


def vaks_critical_temperatures(j1: float, j: float, t_min: float, t_max: float) -> CriticalSet:
    def a1(t):
        return vaks_parameters(j1, j, t)[0] - 1.0

    def a2(t):
        return vaks_parameters(j1, j, t)[1] + 1.0

    def td(t):
        x, y = vaks_parameters(j1, j, t)
        return x + y

    items = [CriticalRoot(r, RootKind.VAKS_TC, "alpha1=1") for r in scan_roots(a1, t_min, t_max)]
    items += [CriticalRoot(r, RootKind.VAKS_TC_STAR, "alpha2=-1") for r in scan_roots(a2, t_min, t_max)]
    items += [CriticalRoot(r, RootKind.VAKS_TD, "alpha1=-alpha2") for r in scan_roots(td, t_min, t_max)]
    items.sort(key=lambda r: r.temp)
    return CriticalSet(tuple(items))


# --- phase classification --------------------------------------------------

class PhaseLabel(str, Enum):
    FERROMAGNETIC = "Ferromagnetic"
    ANTIFERROMAGNETIC = "Antiferromagnetic"
    METAMAGNETIC = "Metamagnetic"
    DEGENERATE = "Degenerate"


def ground_energies(c: CouplingSet) -> tuple[float, float, float, float]:
    """(-E1, -E2, -E3, -E4): low-temperature energies of the four sigma orderings."""
    jd, jp = c.j_diag, c.j_diag_prime
    j1, j2, j3, j4 = c.j1, c.j2, c.j3, c.j4
    return (
        jd + jp + abs(j1 + j2 + j3 + j4),
        -jd - jp + abs(j1 - j2 + j3 - j4),
        -jd + jp + abs(j1 - j2 - j3 + j4),
        jd - jp + abs(j1 + j2 - j3 - j4),
    )


def classify_phase(c: CouplingSet, rtol: float = 1e-12) -> PhaseLabel:
    neg = ground_energies(c)
    top = max(neg)
    tol = rtol * max(1.0, max(abs(x) for x in neg))
    winners = [i for i, x in enumerate(neg) if top - x <= tol]
    if len(winners) != 1:
        return PhaseLabel.DEGENERATE
    return (
        PhaseLabel.FERROMAGNETIC,
        PhaseLabel.ANTIFERROMAGNETIC,
        PhaseLabel.METAMAGNETIC,
        PhaseLabel.METAMAGNETIC,
    )[winners[0]]
