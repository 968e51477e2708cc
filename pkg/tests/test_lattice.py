import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spinlattice.errors import (
    DimensionMismatch,
    InvalidSpec,
    UnusedCoupling,
    WrongLatticeKind,
)
from spinlattice.lattice import (
    Bond,
    CouplingSet,
    LatticeKind,
    LatticeSpec,
    Sublattice,
    all_up,
    build_lattice,
    checkerboard,
    local_delta_energy,
    measure,
    three_site_correlator,
    total_energy,
)

KINDS = ["square", "triangular", "union_jack"]


def lat(kind, w, h=None):
    if kind == "chain":
        return build_lattice(LatticeSpec(kind, w))
    return build_lattice(LatticeSpec(kind, w, h if h is not None else w))


def random_couplings(kind, rng):
    v = lambda: float(rng.uniform(-200, 200))
    if kind == "chain":
        return CouplingSet.chain(v(), v())
    if kind == "square":
        return CouplingSet.square(v(), v(), v())
    if kind == "triangular":
        return CouplingSet.triangular(v(), v(), v(), v(), v())
    return CouplingSet.union_jack(v(), v(), v(), v(), v(), v(), v())


def random_spins(n, rng):
    return rng.choice(np.array([-1, 1], dtype=np.int8), size=n)


# --- construction ------------------------------------------------------------

@pytest.mark.parametrize("kind, n_bonds", [("square", 32), ("triangular", 48), ("union_jack", 48)])
def test_bond_counts_4x4(kind, n_bonds):
    assert lat(kind, 4).n_bonds == n_bonds


def test_union_jack_4x4_sublattices():
    L = lat("union_jack", 4)
    assert len(L.sites_of(Sublattice.TAU)) == 8
    assert len(L.sites_of(Sublattice.SIGMA)) == 8
    assert L.sublattice[L.site(0, 0)] == Sublattice.SIGMA
    assert L.sublattice[L.site(0, 1)] == Sublattice.TAU


@settings(max_examples=60, deadline=None)
@given(kind=st.sampled_from(["chain"] + KINDS), w=st.integers(2, 64), h=st.integers(2, 64))
def test_bond_count_identity(kind, w, h):
    if kind == "union_jack":
        w, h = 2 * max(1, w // 2), 2 * max(1, h // 2)
    L = lat(kind, w, h)
    factor = {"chain": 1, "square": 2, "triangular": 3, "union_jack": 3}[kind]
    assert L.n_bonds == factor * L.n_sites


def test_union_jack_coordination():
    L = lat("union_jack", 6, 4)
    degree = np.diff(L.nbr_ptr)
    assert np.all(degree[L.sublattice == Sublattice.TAU] == 4)
    assert np.all(degree[L.sublattice == Sublattice.SIGMA] == 8)
    for a, b, k in L.bonds:
        if k in (Bond.DIAG, Bond.DIAG_PRIME):
            assert L.sublattice[a] == L.sublattice[b] == Sublattice.SIGMA
        else:
            assert {L.sublattice[a], L.sublattice[b]} == {Sublattice.SIGMA, Sublattice.TAU}


def test_union_jack_tau_sees_each_grid_coupling_once():
    L = lat("union_jack", 4)
    for t in L.sites_of(Sublattice.TAU):
        kinds = sorted(int(k) for k in L.nbr_kind[L.nbr_ptr[t]:L.nbr_ptr[t + 1]])
        assert kinds == [Bond.J1, Bond.J2, Bond.J3, Bond.J4]


def test_bonds_unique_on_large_lattices():
    for kind in KINDS:
        L = lat(kind, 8)
        keys = {(min(a, b), max(a, b), k) for a, b, k in L.bonds}
        assert len(keys) == L.n_bonds


def test_chain_has_no_sublattices():
    L = lat("chain", 5)
    assert np.all(L.sublattice == Sublattice.NONE)
    assert L.n_bonds == 5


@pytest.mark.parametrize("spec", [
    dict(kind="union_jack", width=5, height=4),
    dict(kind="union_jack", width=4, height=3),
    dict(kind="square", width=1, height=4),
    dict(kind="square", width=4, height=1),
    dict(kind="chain", width=1),
    dict(kind="chain", width=4, height=2),
    dict(kind="square", width=4, height=4, boundary="open"),
    dict(kind="hexagonal", width=4, height=4),
])
def test_invalid_specs(spec):
    with pytest.raises(InvalidSpec):
        LatticeSpec(**spec)


def test_unused_couplings_rejected():
    L = lat("chain", 4)
    with pytest.raises(UnusedCoupling):
        total_energy(L, all_up(L), CouplingSet(j1=1.0, j2=1.0))
    with pytest.raises(UnusedCoupling):
        CouplingSet(j_triplet=1.0).check_kind(LatticeKind.SQUARE)
    CouplingSet.union_jack(1, 2, 3, 4, 5, 6, 7).check_kind(LatticeKind.UNION_JACK)


def test_couplings_must_be_finite():
    with pytest.raises(ValueError):
        CouplingSet(j1=float("nan"))
    with pytest.raises(ValueError):
        CouplingSet(field_b=float("inf"))


# --- energies ----------------------------------------------------------------

def test_chain_all_up_energy():
    L = lat("chain", 4)
    assert total_energy(L, all_up(L), CouplingSet.chain(100)) == -400.0


def test_union_jack_all_up_energy():
    L = lat("union_jack", 4)
    c = CouplingSet.union_jack(100, 100, 100, 100, 100, 100)
    assert total_energy(L, all_up(L), c) == -4800.0


def test_square_checkerboard_energy():
    L = lat("square", 4)
    assert total_energy(L, checkerboard(L), CouplingSet.square(100, 100)) == 3200.0


def test_chain_flip_cost():
    L = lat("chain", 4)
    c = CouplingSet.chain(100)
    for s in range(4):
        assert local_delta_energy(L, all_up(L), c, s) == 400.0


def test_energy_dimension_mismatch():
    L = lat("square", 4)
    with pytest.raises(DimensionMismatch):
        total_energy(L, np.ones(15, dtype=np.int8), CouplingSet.square(1, 1))


def test_spins_must_be_unit():
    L = lat("square", 4)
    bad = np.ones(16, dtype=np.int8)
    bad[3] = 0
    with pytest.raises(ValueError):
        total_energy(L, bad, CouplingSet.square(1, 1))


def test_delta_energy_site_out_of_range():
    L = lat("square", 4)
    with pytest.raises(IndexError):
        local_delta_energy(L, all_up(L), CouplingSet.square(1, 1), 16)


def _energy_by_hand(kind, w, h, spins, c):
    """Independent energy: walk the geometry directly from (row, col)."""
    s = spins.reshape(h, w).astype(float)
    e = 0.0
    if kind == "chain":
        return -sum(c.j1 * s[0, i] * s[0, (i + 1) % w] for i in range(w)) - c.field_b * s.sum()
    for r, col in itertools.product(range(h), range(w)):
        here = s[r, col]
        right, down = s[r, (col + 1) % w], s[(r + 1) % h, col]
        if kind in ("square", "triangular"):
            e -= c.j1 * here * right + c.j2 * here * down
            if kind == "triangular":
                diag = s[(r + 1) % h, (col + 1) % w]
                e -= c.j_diag * here * diag
                e -= c.j_triplet * here * right * diag
                e -= c.j_triplet * here * down * diag
        else:
            if (r + col) % 2:  # tau site: J1 right, J2 up, J3 left, J4 down
                e -= c.j1 * here * right
                e -= c.j2 * here * s[(r - 1) % h, col]
                e -= c.j3 * here * s[r, (col - 1) % w]
                e -= c.j4 * here * down
            else:
                e -= c.j_diag * here * s[(r + 1) % h, (col + 1) % w]
                e -= c.j_diag_prime * here * s[(r + 1) % h, (col - 1) % w]
    return e - c.field_b * s.sum()


@pytest.mark.parametrize("kind, w, h", [
    ("chain", 7, 1), ("square", 4, 3), ("triangular", 5, 4), ("union_jack", 6, 4), ("union_jack", 2, 2),
])
def test_total_energy_matches_geometry_walk(kind, w, h):
    rng = np.random.default_rng(7)
    L = build_lattice(LatticeSpec(kind, w, h))
    for _ in range(20):
        c = random_couplings(kind, rng)
        spins = random_spins(L.n_sites, rng)
        assert total_energy(L, spins, c) == pytest.approx(_energy_by_hand(kind, w, h, spins, c), abs=1e-9)


def test_union_jack_delta_energy_matches_brute_force():
    rng = np.random.default_rng(11)
    L = lat("union_jack", 4)
    for _ in range(100):
        c = random_couplings("union_jack", rng)
        spins = random_spins(L.n_sites, rng)
        site = int(rng.integers(L.n_sites))
        flipped = spins.copy()
        flipped[site] *= -1
        expected = total_energy(L, flipped, c) - total_energy(L, spins, c)
        assert local_delta_energy(L, spins, c, site) == pytest.approx(expected, abs=1e-9)


@settings(max_examples=80, deadline=None)
@given(kind=st.sampled_from(["chain"] + KINDS), seed=st.integers(0, 2**32 - 1))
def test_delta_energy_properties(kind, seed):
    rng = np.random.default_rng(seed)
    L = lat(kind, 4)
    c = random_couplings(kind, rng)
    spins = random_spins(L.n_sites, rng)
    site = int(rng.integers(L.n_sites))
    d1 = local_delta_energy(L, spins, c, site)
    flipped = spins.copy()
    flipped[site] *= -1
    assert d1 == pytest.approx(total_energy(L, flipped, c) - total_energy(L, spins, c), abs=1e-9)
    assert local_delta_energy(L, flipped, c, site) == pytest.approx(-d1, abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(kind=st.sampled_from(["chain"] + KINDS), seed=st.integers(0, 2**32 - 1))
def test_global_flip(kind, seed):
    rng = np.random.default_rng(seed)
    L = lat(kind, 4)
    c = random_couplings(kind, rng)
    spins = random_spins(L.n_sites, rng)
    e, e_flip = total_energy(L, spins, c), total_energy(L, -spins, c)
    field = -c.field_b * spins.sum()
    triplet = 0.0
    if kind == "triangular":
        triplet = -c.j_triplet * three_site_correlator(L, spins) * len(L.faces)
    # pair terms are even, field and triplet terms odd
    assert e_flip == pytest.approx(e - 2 * field - 2 * triplet, abs=1e-9)
    if c.field_b == 0 and c.j_triplet == 0:
        assert e_flip == e


@pytest.mark.parametrize("kind, shift", [
    ("square", (1, 1)), ("triangular", (1, 1)), ("union_jack", (1, 1)), ("union_jack", (0, 2)),
    ("union_jack", (0, 6)),
])
def test_translation_invariance(kind, shift):
    rng = np.random.default_rng(3)
    L = build_lattice(LatticeSpec(kind, 6, 4))
    c = random_couplings(kind, rng)
    spins = random_spins(L.n_sites, rng)
    moved = np.roll(spins.reshape(4, 6), shift, axis=(0, 1)).reshape(-1)
    assert total_energy(L, moved, c) == pytest.approx(total_energy(L, spins, c), abs=1e-9)


def test_union_jack_without_diagonals_is_square():
    rng = np.random.default_rng(5)
    uj, sq = lat("union_jack", 6), lat("square", 6)
    for _ in range(20):
        j1, j2, b = rng.uniform(-100, 100, 3)
        spins = random_spins(36, rng)
        e_uj = total_energy(uj, spins, CouplingSet.union_jack(j1, j2, j1, j2, 0, 0, b))
        e_sq = total_energy(sq, spins, CouplingSet.square(j1, j2, b))
        assert e_uj == pytest.approx(e_sq, abs=1e-9)


# --- observables -------------------------------------------------------------

def test_measure_all_up():
    L = lat("union_jack", 4)
    m = measure(L, all_up(L))
    assert (m.m_sigma, m.m_tau, m.m_mean, m.m_all) == (1.0, 1.0, 1.0, 1.0)


def test_measure_checkerboard_union_jack():
    L = lat("union_jack", 4)
    m = measure(L, checkerboard(L))
    assert m.m_sigma == 1.0 and m.m_tau == -1.0
    assert m.m_mean == 0.0 and m.m_all == 0.0


def test_measure_random_resummed():
    rng = np.random.default_rng(2)
    L = lat("union_jack", 8)
    spins = random_spins(L.n_sites, rng)
    m = measure(L, spins)
    assert m.m_all == pytest.approx(sum(int(x) for x in spins) / len(spins), abs=1e-15)
    sig = [int(spins[r * 8 + c]) for r in range(8) for c in range(8) if (r + c) % 2 == 0]
    assert m.m_sigma == pytest.approx(sum(sig) / len(sig), abs=1e-15)


def test_three_site_uniform_configs():
    L = lat("triangular", 4)
    assert three_site_correlator(L, all_up(L)) == 1.0
    assert three_site_correlator(L, -all_up(L)) == -1.0


def test_three_site_face_walk():
    rng = np.random.default_rng(9)
    L = lat("triangular", 4)
    spins = random_spins(16, rng)
    s = spins.reshape(4, 4).astype(int)
    total = 0
    for r, c in itertools.product(range(4), range(4)):
        d = s[(r + 1) % 4, (c + 1) % 4]
        total += s[r, c] * s[r, (c + 1) % 4] * d
        total += s[r, c] * s[(r + 1) % 4, c] * d
    assert three_site_correlator(L, spins) == pytest.approx(total / 32)


def test_three_site_needs_triangular():
    L = lat("square", 4)
    with pytest.raises(WrongLatticeKind):
        three_site_correlator(L, all_up(L))


def test_triangular_faces_are_bonded_triangles():
    L = lat("triangular", 5)
    bonded = {frozenset((a, b)) for a, b, _ in L.bonds}
    assert len(L.faces) == 2 * L.n_sites
    for x, y, z in L.faces:
        assert {frozenset((x, y)), frozenset((y, z)), frozenset((x, z))} <= bonded


def test_rotated_couplings():
    c = CouplingSet.union_jack(1, 2, 3, 4, 5, 6)
    r = c.rotated()
    assert (r.j1, r.j2, r.j3, r.j4, r.j_diag, r.j_diag_prime) == (4, 1, 2, 3, 6, 5)
    assert r.rotated().rotated().rotated() == c


@pytest.mark.parametrize("seed", range(5))
def test_rotated_couplings_match_rotated_lattice(seed):
    # rotating the configuration by 90 degrees and the couplings with it
    # leaves the energy unchanged
    rng = np.random.default_rng(seed)
    L = lat("union_jack", 6)
    c = random_couplings("union_jack", rng)
    spins = random_spins(36, rng)
    grid = spins.reshape(6, 6)
    turned = np.empty_like(grid)
    for r, col in itertools.product(range(6), range(6)):
        turned[(-col) % 6, r] = grid[r, col]
    assert total_energy(L, turned.reshape(-1), c.rotated()) == pytest.approx(total_energy(L, spins, c), abs=1e-9)
