"""Metropolis Monte Carlo sampling and an exact-enumeration oracle."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from . import _kernels
from .errors import NonPositiveTemperature, TooLarge
from .lattice import (
    CouplingSet,
    Lattice,
    LatticeKind,
    Sublattice,
    all_up,
    as_config,
    total_energy,
)

N_BATCHES = 20
MAX_ENUM_SITES = 20


class InitMode(str, Enum):
    ALL_UP = "AllUp"
    RANDOM = "Random"


@dataclass(frozen=True)
class ChainParams:
    temp: float
    burn_in_sweeps: int = 1000
    sample_sweeps: int = 1000
    seed: int = 0
    init: InitMode = InitMode.ALL_UP

    def __post_init__(self):
        object.__setattr__(self, "init", InitMode(self.init))
        if not self.temp > 0:
            raise NonPositiveTemperature(f"temperature must be > 0, got {self.temp}")
        if self.sample_sweeps < 1:
            raise ValueError("sample_sweeps must be >= 1")
        if self.burn_in_sweeps < 0:
            raise ValueError("burn_in_sweeps must be >= 0")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")


@dataclass(frozen=True)
class McResult:
    mean_m_sigma: float
    mean_m_tau: float
    mean_m_all: float
    mean_abs_m_all: float
    mean_energy_per_site: float
    mean_three_site: float | None
    stderr_m_all: float
    samples: int
    stderr_abs_m_all: float = 0.0
    stderr_energy_per_site: float = 0.0
    stderr_m_sigma: float = 0.0
    stderr_m_tau: float = 0.0
    acceptance_rate: float = 0.0
    final_config: np.ndarray | None = field(default=None, repr=False, compare=False)
    final_energy: float | None = field(default=None, repr=False, compare=False)
    final_rng_state: int = field(default=0, repr=False, compare=False)

    @property
    def mean_m_mean(self) -> float:
        return 0.5 * (self.mean_m_sigma + self.mean_m_tau)


@dataclass(frozen=True)
class ExactResult:
    """Canonical averages from summing over every configuration."""

    mean_m_sigma: float
    mean_m_tau: float
    mean_m_all: float
    mean_abs_m_all: float
    mean_energy_per_site: float
    mean_three_site: float | None
    log_partition: float

    @property
    def mean_m_mean(self) -> float:
        return 0.5 * (self.mean_m_sigma + self.mean_m_tau)


def _kernel_args(lattice: Lattice, couplings: CouplingSet):
    return (
        lattice.sublattice, lattice.nbr_ptr, lattice.nbr_idx, lattice.nbr_kind,
        lattice.face_ptr, lattice.face_pair,
        couplings.bond_values(), couplings.j_triplet, couplings.field_b,
    )


def _face_sum(lattice: Lattice, spins: np.ndarray) -> float:
    f = lattice.faces
    if len(f) == 0:
        return 0.0
    s = spins.astype(np.int64)
    return float(np.sum(s[f[:, 0]] * s[f[:, 1]] * s[f[:, 2]]))


def _sublattice_sums(lattice: Lattice, spins: np.ndarray) -> tuple[int, int]:
    tau = lattice.sublattice == Sublattice.TAU
    s = spins.astype(np.int64)
    return int(s[~tau].sum()), int(s[tau].sum())


def metropolis_sweep(lattice, couplings, config, temp, rng_state):
    """One sweep of N single-site attempts.

    Returns ``(new_config, new_rng_state, accepted)``; ``config`` itself is
    left untouched.
    """
    if not temp > 0:
        raise NonPositiveTemperature(f"temperature must be > 0, got {temp}")
    couplings.check_kind(lattice.kind)
    spins = as_config(lattice, config).copy()
    state, accepted, *_ = _kernels.sweeps(
        spins, *_kernel_args(lattice, couplings), float(temp), 1,
        np.uint64(int(rng_state)), 0.0, 0, 0, 0.0, np.zeros((0, 4)),
    )
    return spins, int(state), int(accepted)


def batch_stderr(x: np.ndarray, n_batches: int = N_BATCHES) -> float:
    """Standard error of the mean from ``n_batches`` contiguous batch means."""
    x = np.asarray(x, dtype=np.float64)
    nb = min(n_batches, x.size)
    if nb < 2:
        return 0.0
    size = x.size // nb
    means = x[: nb * size].reshape(nb, size).mean(axis=1)
    return float(means.std(ddof=1) / np.sqrt(nb))


def initial_config(lattice: Lattice, params: ChainParams) -> tuple[np.ndarray, int]:
    state = np.uint64(params.seed)
    if params.init is InitMode.ALL_UP:
        return all_up(lattice), int(state)
    spins, state = _kernels.random_spins(lattice.n_sites, state)
    return spins, int(state)


def run_chain(lattice: Lattice, couplings: CouplingSet, params: ChainParams,
              config=None) -> McResult:
    """Burn in, then measure once per sweep for ``sample_sweeps`` sweeps.

    ``config`` overrides the initial state chosen by ``params.init``.
    """
    couplings.check_kind(lattice.kind)
    spins, state = initial_config(lattice, params)
    if config is not None:
        spins = as_config(lattice, config).copy()
    n = lattice.n_sites
    energy = total_energy(lattice, spins, couplings)
    s_sig, s_tau = _sublattice_sums(lattice, spins)
    face = _face_sum(lattice, spins)
    args = _kernel_args(lattice, couplings)
    temp = float(params.temp)

    state, _, energy, s_sig, s_tau, face = _kernels.sweeps(
        spins, *args, temp, params.burn_in_sweeps, np.uint64(state),
        energy, s_sig, s_tau, face, np.zeros((0, 4)),
    )
    out = np.empty((params.sample_sweeps, 4))
    state, accepted, energy, s_sig, s_tau, face = _kernels.sweeps(
        spins, *args, temp, params.sample_sweeps, np.uint64(state),
        energy, s_sig, s_tau, face, out,
    )

    n_tau = int(np.count_nonzero(lattice.sublattice == Sublattice.TAU))
    n_sig = n - n_tau
    e_site = out[:, 0] / n
    m_all = (out[:, 1] + out[:, 2]) / n
    m_sig = out[:, 1] / n_sig
    m_tau = out[:, 2] / n_tau if n_tau else m_sig
    three = None
    if lattice.kind is LatticeKind.TRIANGULAR:
        three = float(np.mean(out[:, 3] / len(lattice.faces)))

    return McResult(
        mean_m_sigma=float(m_sig.mean()),
        mean_m_tau=float(m_tau.mean()),
        mean_m_all=float(m_all.mean()),
        mean_abs_m_all=float(np.abs(m_all).mean()),
        mean_energy_per_site=float(e_site.mean()),
        mean_three_site=three,
        stderr_m_all=batch_stderr(m_all),
        samples=params.sample_sweeps,
        stderr_abs_m_all=batch_stderr(np.abs(m_all)),
        stderr_energy_per_site=batch_stderr(e_site),
        stderr_m_sigma=batch_stderr(m_sig),
        stderr_m_tau=batch_stderr(m_tau),
        acceptance_rate=accepted / (params.sample_sweeps * n),
        final_config=spins,
        final_energy=float(energy),
        final_rng_state=int(state),
    )


def exact_enumeration(lattice: Lattice, couplings: CouplingSet, temp: float,
                      chunk_bits: int = 16) -> ExactResult:
    """Boltzmann averages over all 2**N configurations (N <= 20)."""
    if not temp > 0:
        raise NonPositiveTemperature(f"temperature must be > 0, got {temp}")
    couplings.check_kind(lattice.kind)
    n = lattice.n_sites
    if n > MAX_ENUM_SITES:
        raise TooLarge(f"{n} sites exceeds the enumeration limit of {MAX_ENUM_SITES}")

    total = 1 << n
    chunk = min(total, 1 << chunk_bits)
    j = couplings.bond_values()[lattice.bond_kind]
    tau = lattice.sublattice == Sublattice.TAU
    n_tau = int(tau.sum())
    shifts = np.arange(n, dtype=np.int64)

    energies, m_all, m_sig, m_tau, three = [], [], [], [], []
    for start in range(0, total, chunk):
        codes = np.arange(start, start + chunk, dtype=np.int64)
        s = 1.0 - 2.0 * ((codes[:, None] >> shifts) & 1)
        e = -(s[:, lattice.bond_a] * s[:, lattice.bond_b]) @ j
        e -= couplings.field_b * s.sum(axis=1)
        if len(lattice.faces):
            f = lattice.faces
            prod = s[:, f[:, 0]] * s[:, f[:, 1]] * s[:, f[:, 2]]
            e -= couplings.j_triplet * prod.sum(axis=1)
            three.append(prod.mean(axis=1))
        energies.append(e)
        m_all.append(s.mean(axis=1))
        m_sig.append(s[:, ~tau].mean(axis=1))
        m_tau.append(s[:, tau].mean(axis=1) if n_tau else m_sig[-1])

    energies = np.concatenate(energies)
    log_w = -energies / temp
    top = log_w.max()
    w = np.exp(log_w - top)
    z = w.sum()
    log_z = float(top + np.log(z))
    p = w / z

    def avg(parts):
        return float(p @ np.concatenate(parts))

    m = np.concatenate(m_all)
    return ExactResult(
        mean_m_sigma=avg(m_sig),
        mean_m_tau=avg(m_tau),
        mean_m_all=float(p @ m),
        mean_abs_m_all=float(p @ np.abs(m)),
        mean_energy_per_site=float(p @ energies) / n,
        mean_three_site=avg(three) if three else None,
        log_partition=log_z,
    )


def temperature_scan(lattice: Lattice, couplings: CouplingSet, t_list, params_template: ChainParams,
                     point_ids=None, max_workers: int | None = None):
    """Independent chains, one per temperature, run concurrently.

    Point ``i`` uses seed ``params_template.seed ^ point_ids[i]``; by default
    ``point_ids`` is the position in ``t_list``.  Every point starts afresh.
    """
    temps = [float(t) for t in t_list]
    if not temps:
        raise ValueError("temperature list is empty")
    ids = list(range(len(temps))) if point_ids is None else [int(i) for i in point_ids]
    if len(ids) != len(temps):
        raise ValueError("point_ids must match t_list in length")
    jobs = [
        replace(params_template, temp=t, seed=params_template.seed ^ pid)
        for t, pid in zip(temps, ids)
    ]
    if max_workers == 1 or len(jobs) == 1:
        results = [run_chain(lattice, couplings, p) for p in jobs]
    else:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            results = list(pool.map(lambda p: run_chain(lattice, couplings, p), jobs))
    return list(zip(temps, results))
