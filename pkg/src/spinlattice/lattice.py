"""Lattice geometries, coupling sets and energy bookkeeping.

Sites are numbered row-major, ``site = row * width + col``.  All energies are
stored as energy / k_B in kelvin, so the Boltzmann factor of an energy ``E``
at temperature ``T`` is simply ``exp(-E / T)``.

Geometry conventions
--------------------
Chain
    ``width`` sites on a ring, bond ``(i, i+1)`` carries ``j1``.
Square
    horizontal bonds ``(r, c)-(r, c+1)`` carry ``j1``, vertical bonds
    ``(r, c)-(r+1, c)`` carry ``j2``.
Triangular
    square bonds as above plus the diagonal ``(r, c)-(r+1, c+1)`` carrying
    ``j_diag``.  The two faces of every plaquette are
    ``(r, c), (r, c+1), (r+1, c+1)`` and ``(r, c), (r+1, c), (r+1, c+1)``,
    which gives 2N faces for the optional three-site term ``j_triplet``.
Union Jack
    checkerboard split: sites with even ``row + col`` are sigma sites
    (8 neighbours), odd ones are tau sites (4 neighbours).  Every grid bond
    joins a tau site to a sigma site; seen from the tau site the neighbour at
    ``(0, +1)`` couples with ``j1``, ``(-1, 0)`` with ``j2``, ``(0, -1)`` with
    ``j3`` and ``(+1, 0)`` with ``j4``, so the four couplings go round the
    face in order.  Sigma sites are joined along ``(+1, +1)`` by ``j_diag``
    and along ``(+1, -1)`` by ``j_diag_prime``; each such bond crosses one
    plaquette whose other two corners are tau sites.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from enum import Enum, IntEnum

import numpy as np

from .errors import (
    DimensionMismatch,
    InvalidSpec,
    UnusedCoupling,
    WrongLatticeKind,
)


class LatticeKind(str, Enum):
    CHAIN = "chain"
    SQUARE = "square"
    TRIANGULAR = "triangular"
    UNION_JACK = "union_jack"


class Bond(IntEnum):
    """Coupling selector stored with every bond."""

    J1 = 0
    J2 = 1
    J3 = 2
    J4 = 3
    DIAG = 4
    DIAG_PRIME = 5


class Sublattice(IntEnum):
    NONE = 0
    SIGMA = 1
    TAU = 2


_USED = {
    LatticeKind.CHAIN: {"j1", "field_b"},
    LatticeKind.SQUARE: {"j1", "j2", "field_b"},
    LatticeKind.TRIANGULAR: {"j1", "j2", "j_diag", "j_triplet", "field_b"},
    LatticeKind.UNION_JACK: {"j1", "j2", "j3", "j4", "j_diag", "j_diag_prime", "field_b"},
}


@dataclass(frozen=True)
class CouplingSet:
    """Bond strengths and external field, all in kelvin (energy / k_B).

    Use the per-kind constructors (:meth:`chain`, :meth:`square`,
    :meth:`triangular`, :meth:`union_jack`) so that couplings a lattice does
    not use stay exactly zero.
    """

    j1: float = 0.0
    j2: float = 0.0
    j3: float = 0.0
    j4: float = 0.0
    j_diag: float = 0.0
    j_diag_prime: float = 0.0
    j_triplet: float = 0.0
    field_b: float = 0.0

    def __post_init__(self):
        for f in fields(self):
            value = float(getattr(self, f.name))
            if not math.isfinite(value):
                raise ValueError(f"coupling {f.name} must be finite, got {value}")
            object.__setattr__(self, f.name, value)

    @classmethod
    def chain(cls, j: float, field_b: float = 0.0) -> CouplingSet:
        return cls(j1=j, field_b=field_b)

    @classmethod
    def square(cls, j1: float, j2: float, field_b: float = 0.0) -> CouplingSet:
        return cls(j1=j1, j2=j2, field_b=field_b)

    @classmethod
    def triangular(
        cls,
        j1: float,
        j2: float,
        j_diag: float,
        j_triplet: float = 0.0,
        field_b: float = 0.0,
    ) -> CouplingSet:
        return cls(j1=j1, j2=j2, j_diag=j_diag, j_triplet=j_triplet, field_b=field_b)

    @classmethod
    def union_jack(
        cls,
        j1: float,
        j2: float,
        j3: float,
        j4: float,
        j_diag: float,
        j_diag_prime: float,
        field_b: float = 0.0,
    ) -> CouplingSet:
        return cls(
            j1=j1, j2=j2, j3=j3, j4=j4,
            j_diag=j_diag, j_diag_prime=j_diag_prime, field_b=field_b,
        )

    @classmethod
    def union_jack_symmetric(
        cls, j_square: float, j_diag: float, j_diag_prime: float | None = None,
        field_b: float = 0.0,
    ) -> CouplingSet:
        """All four square bonds equal to ``j_square``."""
        if j_diag_prime is None:
            j_diag_prime = j_diag
        return cls.union_jack(
            j_square, j_square, j_square, j_square, j_diag, j_diag_prime, field_b
        )

    def check_kind(self, kind: LatticeKind) -> None:
        """Raise :class:`UnusedCoupling` if a coupling unused by ``kind`` is nonzero."""
        used = _USED[LatticeKind(kind)]
        for f in fields(self):
            if f.name not in used and getattr(self, f.name) != 0.0:
                raise UnusedCoupling(
                    f"{f.name}={getattr(self, f.name)} is not used on a {kind.value} lattice"
                )

    def bond_values(self) -> np.ndarray:
        """Coupling per :class:`Bond` selector, as a float64 array."""
        return np.array(
            [self.j1, self.j2, self.j3, self.j4, self.j_diag, self.j_diag_prime]
        )

    def with_field(self, field_b: float) -> CouplingSet:
        return replace(self, field_b=field_b)

    def rotated(self) -> CouplingSet:
        """Union Jack couplings after a 90 degree rotation of the lattice.

        A tau site's east, north, west and south bonds move one step round,
        and the two diagonal directions exchange.
        """
        return replace(
            self,
            j1=self.j4, j2=self.j1, j3=self.j2, j4=self.j3,
            j_diag=self.j_diag_prime, j_diag_prime=self.j_diag,
        )


@dataclass(frozen=True)
class LatticeSpec:
    kind: LatticeKind
    width: int
    height: int = 1
    boundary: str = "periodic"

    def __post_init__(self):
        try:
            kind = LatticeKind(self.kind)
        except ValueError:
            raise InvalidSpec(f"unknown lattice kind {self.kind!r}") from None
        object.__setattr__(self, "kind", kind)
        if str(self.boundary).lower() != "periodic":
            raise InvalidSpec(f"only periodic boundaries are supported, got {self.boundary!r}")
        if int(self.width) != self.width or int(self.height) != self.height:
            raise InvalidSpec("width and height must be integers")
        if self.width < 2:
            raise InvalidSpec(f"width must be >= 2, got {self.width}")
        if kind is LatticeKind.CHAIN:
            if self.height != 1:
                raise InvalidSpec("a chain has height 1")
        elif self.height < 2:
            raise InvalidSpec(f"height must be >= 2 for a {kind.value} lattice")
        if kind is LatticeKind.UNION_JACK and (self.width % 2 or self.height % 2):
            raise InvalidSpec(
                f"Union Jack dimensions must be even, got {self.width}x{self.height}"
            )

    @property
    def n_sites(self) -> int:
        return self.width * self.height


@dataclass(frozen=True)
class Measurement:
    m_sigma: float
    m_tau: float
    m_mean: float
    m_all: float


class Lattice:
    """Bond table, sublattice labels and per-site adjacency for one geometry.

    Immutable after construction.  The CSR arrays (``nbr_ptr``, ``nbr_idx``,
    ``nbr_kind`` and ``face_ptr``, ``face_pair``) list, for every site, the
    bonds and three-site faces it takes part in; they are what the local
    energy difference and the Monte Carlo kernel read.
    """

    def __init__(self, spec: LatticeSpec):
        self.spec = spec
        a, b, k = _bond_table(spec)
        self.bond_a = a
        self.bond_b = b
        self.bond_kind = k
        self.sublattice = _sublattices(spec)
        self.faces = _faces(spec)
        self.nbr_ptr, self.nbr_idx, self.nbr_kind = _csr_neighbours(spec.n_sites, a, b, k)
        self.face_ptr, self.face_pair = _csr_faces(spec.n_sites, self.faces)
        for arr in (self.bond_a, self.bond_b, self.bond_kind, self.sublattice,
                    self.faces, self.nbr_ptr, self.nbr_idx, self.nbr_kind,
                    self.face_ptr, self.face_pair):
            arr.setflags(write=False)

    def __repr__(self):
        s = self.spec
        return f"Lattice({s.kind.value}, {s.width}x{s.height})"

    @property
    def kind(self) -> LatticeKind:
        return self.spec.kind

    @property
    def n_sites(self) -> int:
        return self.spec.n_sites

    @property
    def n_bonds(self) -> int:
        return len(self.bond_a)

    @property
    def bonds(self) -> list[tuple[int, int, Bond]]:
        return [
            (int(a), int(b), Bond(int(k)))
            for a, b, k in zip(self.bond_a, self.bond_b, self.bond_kind)
        ]

    def site(self, row: int, col: int) -> int:
        w, h = self.spec.width, self.spec.height
        return (row % h) * w + (col % w)

    def sites_of(self, label: Sublattice) -> np.ndarray:
        return np.flatnonzero(self.sublattice == label)


def build_lattice(spec: LatticeSpec) -> Lattice:
    return Lattice(spec)


def _bond_table(spec: LatticeSpec):
    w, h = spec.width, spec.height
    rows, cols = np.divmod(np.arange(w * h), w)

    def idx(r, c):
        return (r % h) * w + (c % w)

    site = idx(rows, cols)
    right = idx(rows, cols + 1)
    down = idx(rows + 1, cols)

    if spec.kind is LatticeKind.CHAIN:
        return site, right, np.full(w, Bond.J1, dtype=np.int8)

    if spec.kind in (LatticeKind.SQUARE, LatticeKind.TRIANGULAR):
        parts_a = [site, site]
        parts_b = [right, down]
        parts_k = [np.full(site.size, Bond.J1), np.full(site.size, Bond.J2)]
        if spec.kind is LatticeKind.TRIANGULAR:
            parts_a.append(site)
            parts_b.append(idx(rows + 1, cols + 1))
            parts_k.append(np.full(site.size, Bond.DIAG))
        return (np.concatenate(parts_a), np.concatenate(parts_b),
                np.concatenate(parts_k).astype(np.int8))

    # Union Jack: grid bonds are tau-sigma, labelled from the tau end.
    tau = (rows + cols) % 2 == 1
    horiz = np.where(tau, Bond.J1, Bond.J3)   # tau sees the right neighbour via J1
    vert = np.where(tau, Bond.J4, Bond.J2)    # tau sees the one below via J4
    sig = ~tau
    a = [site, site, site[sig], site[sig]]
    b = [right, down, idx(rows + 1, cols + 1)[sig], idx(rows + 1, cols - 1)[sig]]
    k = [horiz, vert,
         np.full(int(sig.sum()), Bond.DIAG), np.full(int(sig.sum()), Bond.DIAG_PRIME)]
    return np.concatenate(a), np.concatenate(b), np.concatenate(k).astype(np.int8)


def _sublattices(spec: LatticeSpec) -> np.ndarray:
    n = spec.n_sites
    if spec.kind is not LatticeKind.UNION_JACK:
        return np.zeros(n, dtype=np.int8)
    rows, cols = np.divmod(np.arange(n), spec.width)
    return np.where((rows + cols) % 2 == 0, Sublattice.SIGMA, Sublattice.TAU).astype(np.int8)


def _faces(spec: LatticeSpec) -> np.ndarray:
    if spec.kind is not LatticeKind.TRIANGULAR:
        return np.zeros((0, 3), dtype=np.int64)
    w, h = spec.width, spec.height
    rows, cols = np.divmod(np.arange(w * h), w)

    def idx(r, c):
        return (r % h) * w + (c % w)

    s = idx(rows, cols)
    diag = idx(rows + 1, cols + 1)
    upper = np.stack([s, idx(rows, cols + 1), diag], axis=1)
    lower = np.stack([s, idx(rows + 1, cols), diag], axis=1)
    return np.concatenate([upper, lower]).astype(np.int64)


def _csr_neighbours(n, a, b, k):
    src = np.concatenate([a, b])
    dst = np.concatenate([b, a])
    kind = np.concatenate([k, k])
    order = np.argsort(src, kind="stable")
    ptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(ptr, src + 1, 1)
    return np.cumsum(ptr), dst[order].astype(np.int64), kind[order].astype(np.int8)


def _csr_faces(n, faces):
    if len(faces) == 0:
        return np.zeros(n + 1, dtype=np.int64), np.zeros((0, 2), dtype=np.int64)
    src = faces.T.reshape(-1)
    others = np.concatenate([faces[:, [1, 2]], faces[:, [0, 2]], faces[:, [0, 1]]])
    order = np.argsort(src, kind="stable")
    ptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(ptr, src + 1, 1)
    return np.cumsum(ptr), others[order].astype(np.int64)


# --- spin configurations --------------------------------------------------

def as_config(lattice: Lattice, config) -> np.ndarray:
    """Validate ``config`` as one +-1 spin per site and return it as int8."""
    spins = np.asarray(config).reshape(-1)
    if spins.size != lattice.n_sites:
        raise DimensionMismatch(
            f"config has {spins.size} spins, lattice has {lattice.n_sites} sites"
        )
    if not np.all(np.abs(spins) == 1):
        raise ValueError("spins must be exactly +1 or -1")
    return spins.astype(np.int8, copy=False)


def all_up(lattice: Lattice) -> np.ndarray:
    return np.ones(lattice.n_sites, dtype=np.int8)


def random_config(lattice: Lattice, rng: np.random.Generator) -> np.ndarray:
    return rng.choice(np.array([-1, 1], dtype=np.int8), size=lattice.n_sites)


def checkerboard(lattice: Lattice) -> np.ndarray:
    """+1 on even ``row + col``, -1 elsewhere (sigma up, tau down on a Union Jack)."""
    rows, cols = np.divmod(np.arange(lattice.n_sites), lattice.spec.width)
    return np.where((rows + cols) % 2 == 0, 1, -1).astype(np.int8)


# --- energies and observables ---------------------------------------------

def total_energy(lattice: Lattice, config, couplings: CouplingSet) -> float:
    couplings.check_kind(lattice.kind)
    s = as_config(lattice, config).astype(np.float64)
    j = couplings.bond_values()[lattice.bond_kind]
    energy = -np.dot(j, s[lattice.bond_a] * s[lattice.bond_b])
    if couplings.j_triplet != 0.0:
        f = lattice.faces
        energy -= couplings.j_triplet * np.sum(s[f[:, 0]] * s[f[:, 1]] * s[f[:, 2]])
    energy -= couplings.field_b * s.sum()
    return float(energy)


def local_field(lattice: Lattice, config, couplings: CouplingSet, site: int) -> float:
    """Sum of everything multiplying ``spin[site]`` in -H."""
    s = config
    lo, hi = lattice.nbr_ptr[site], lattice.nbr_ptr[site + 1]
    j = couplings.bond_values()[lattice.nbr_kind[lo:hi]]
    h = float(np.dot(j, s[lattice.nbr_idx[lo:hi]]))
    if couplings.j_triplet != 0.0:
        lo, hi = lattice.face_ptr[site], lattice.face_ptr[site + 1]
        pairs = lattice.face_pair[lo:hi]
        h += couplings.j_triplet * float(np.sum(s[pairs[:, 0]] * s[pairs[:, 1]]))
    return h + couplings.field_b


def local_delta_energy(lattice: Lattice, config, couplings: CouplingSet, site: int) -> float:
    """Energy change from flipping ``site``, using only its incident bonds and faces."""
    if not 0 <= site < lattice.n_sites:
        raise IndexError(f"site {site} out of range for {lattice.n_sites} sites")
    couplings.check_kind(lattice.kind)
    s = as_config(lattice, config).astype(np.float64)
    return 2.0 * s[site] * local_field(lattice, s, couplings, site)


def measure(lattice: Lattice, config) -> Measurement:
    s = as_config(lattice, config).astype(np.float64)
    m_all = float(s.mean())
    if lattice.kind is LatticeKind.UNION_JACK:
        m_sigma = float(s[lattice.sublattice == Sublattice.SIGMA].mean())
        m_tau = float(s[lattice.sublattice == Sublattice.TAU].mean())
    else:
        m_sigma = m_tau = m_all
    return Measurement(m_sigma, m_tau, 0.5 * (m_sigma + m_tau), m_all)


def three_site_correlator(lattice: Lattice, config) -> float:
    """Mean of the spin product over all 2N triangular faces."""
    if lattice.kind is not LatticeKind.TRIANGULAR:
        raise WrongLatticeKind(
            f"three-site correlator needs a triangular lattice, got {lattice.kind.value}"
        )
    s = as_config(lattice, config).astype(np.float64)
    f = lattice.faces
    return float(np.mean(s[f[:, 0]] * s[f[:, 1]] * s[f[:, 2]]))
