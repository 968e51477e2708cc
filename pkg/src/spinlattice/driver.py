"""Run configurations and the engine dispatch behind the command line."""

from __future__ import annotations

import json
import math
import platform
import sys
import time
from dataclasses import asdict, dataclass, field
from enum import Enum

import numpy as np

from . import __version__, exact, meanfield, mc
from .errors import (
    InvalidSpec,
    ParseError,
    SpinLatticeError,
    UnusedCoupling,
    ValidationError,
)
from .lattice import CouplingSet, LatticeKind, LatticeSpec, build_lattice
from .records import Engine, SweepRecord, atomic_write_text, format_csv, format_number

DEFAULT_SEED = 12345

_COUPLING_KEYS = ("j1", "j2", "j3", "j4", "j_diag", "j_diag_prime", "j_triplet", "field_b")
_FLOAT_KEYS = _COUPLING_KEYS + ("t_min", "t_max")
_INT_KEYS = ("width", "height", "points", "burn_in", "samples", "seed")
_OTHER_KEYS = ("command", "lattice", "init", "gated", "mf_system")
KNOWN_KEYS = frozenset(_FLOAT_KEYS + _INT_KEYS + _OTHER_KEYS)

_LATTICE_ALIASES = {
    "chain": LatticeKind.CHAIN,
    "square": LatticeKind.SQUARE,
    "triangular": LatticeKind.TRIANGULAR,
    "union_jack": LatticeKind.UNION_JACK,
    "unionjack": LatticeKind.UNION_JACK,
}


class Command(str, Enum):
    PREDICT = "predict"
    MEAN_FIELD = "meanfield"
    SIMULATE = "simulate"
    CLASSIFY = "classify"
    CRITICAL = "critical"
    ORACLE = "oracle"
    COMPARE = "compare"


@dataclass(frozen=True)
class RunConfig:
    command: Command
    lattice: LatticeSpec
    couplings: CouplingSet
    t_min: float = 10.0
    t_max: float = 500.0
    points: int = 50
    burn_in: int = 1000
    samples: int = 1000
    seed: int = DEFAULT_SEED
    init: mc.InitMode = mc.InitMode.ALL_UP
    gated: bool = True
    mf_system: str = "coupled"
    output_path: str | None = None

    def temperatures(self) -> np.ndarray:
        temps = np.linspace(self.t_min, self.t_max, self.points)
        temps[0], temps[-1] = self.t_min, self.t_max
        return temps

    def chain_params(self) -> mc.ChainParams:
        return mc.ChainParams(
            temp=self.t_min, burn_in_sweeps=self.burn_in, sample_sweeps=self.samples,
            seed=self.seed, init=self.init,
        )


@dataclass
class Outcome:
    exit_code: int
    records: list[SweepRecord] = field(default_factory=list)
    text: str = ""
    error: dict | None = None


# --- parsing -------------------------------------------------------------

def _parse_bool(text: str) -> bool:
    low = text.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def parse_config(text: str, command: str | Command | None = None) -> RunConfig:
    """Parse ``key=value`` lines into a validated :class:`RunConfig`.

    ``#`` starts a comment.  ``command`` (e.g. from the command line) takes
    precedence over a ``command=`` line in the document.
    """
    raw: dict[str, object] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ParseError(f"expected key=value, got {body!r}", lineno)
        key, value = (part.strip() for part in body.split("=", 1))
        key = key.lower()
        if key not in KNOWN_KEYS:
            raise ParseError(f"unknown key {key!r}", lineno)
        if key in raw:
            raise ParseError(f"duplicate key {key!r}", lineno)
        try:
            if key in _FLOAT_KEYS:
                number = float(value)
                if not math.isfinite(number):
                    raise ValueError("must be finite")
                raw[key] = number
            elif key in _INT_KEYS:
                raw[key] = int(value, 0)
            elif key == "gated":
                raw[key] = _parse_bool(value)
            else:
                raw[key] = value
        except ValueError as exc:
            raise ParseError(f"bad value for {key}: {exc}", lineno) from None

    if command is not None:
        raw["command"] = command.value if isinstance(command, Command) else command
    return _build_config(raw)


def _build_config(raw: dict) -> RunConfig:
    if "command" not in raw:
        raise ValidationError("a command is required")
    try:
        cmd = Command(str(raw["command"]).lower())
    except ValueError:
        raise ValidationError(f"unknown command {raw['command']!r}") from None
    if "lattice" not in raw:
        raise ValidationError("a lattice kind is required")
    kind = _LATTICE_ALIASES.get(str(raw["lattice"]).lower())
    if kind is None:
        raise ValidationError(f"unknown lattice {raw['lattice']!r}")

    width = raw.get("width", 16)
    height = raw.get("height", 1 if kind is LatticeKind.CHAIN else width)
    try:
        spec = LatticeSpec(kind, width, height)
    except InvalidSpec as exc:
        raise ValidationError(f"lattice spec invalid: {exc}") from None

    couplings = CouplingSet(**{k: raw.get(k, 0.0) for k in _COUPLING_KEYS})
    try:
        couplings.check_kind(kind)
    except UnusedCoupling as exc:
        raise ValidationError(f"unused couplings must be zero: {exc}") from None

    t_min = raw.get("t_min", 10.0)
    t_max = raw.get("t_max", 500.0)
    points = raw.get("points", 50)
    if not t_min > 0:
        raise ValidationError("t_min > 0 violated")
    if not t_min < t_max:
        raise ValidationError("t_min < t_max violated")
    if points < 2:
        raise ValidationError("points >= 2 violated")
    burn_in = raw.get("burn_in", 1000)
    samples = raw.get("samples", 1000)
    if burn_in < 0:
        raise ValidationError("burn_in >= 0 violated")
    if samples < 1:
        raise ValidationError("samples >= 1 violated")
    seed = raw.get("seed", DEFAULT_SEED)
    if not 0 <= seed < 2**64:
        raise ValidationError("seed must be an unsigned 64-bit integer")
    init_text = str(raw.get("init", "AllUp")).replace("_", "").lower()
    inits = {"allup": mc.InitMode.ALL_UP, "random": mc.InitMode.RANDOM}
    if init_text not in inits:
        raise ValidationError(f"init must be AllUp or Random, got {raw['init']!r}")
    mf_system = str(raw.get("mf_system", "coupled")).lower()
    if mf_system not in ("coupled", "uncoupled"):
        raise ValidationError(f"mf_system must be coupled or uncoupled, got {mf_system!r}")

    return RunConfig(
        command=cmd, lattice=spec, couplings=couplings,
        t_min=t_min, t_max=t_max, points=points,
        burn_in=burn_in, samples=samples, seed=seed, init=inits[init_text],
        gated=raw.get("gated", True), mf_system=mf_system,
    )


# --- engines -------------------------------------------------------------

def _predict_point(cfg: RunConfig, t: float) -> tuple[SweepRecord, float | None]:
    """Closed-form record at ``t`` plus the three-site value on triangular lattices."""
    c, kind = cfg.couplings, cfg.lattice.kind
    if kind is LatticeKind.CHAIN:
        m = exact.chain_magnetisation(c.j1, c.field_b, t)
        return SweepRecord(t, Engine.EXACT, m, m, m, m), None
    if c.field_b != 0.0:
        raise exact.FieldNotSupported("closed forms exist only at zero field")
    if kind is LatticeKind.SQUARE:
        m = exact.triangular_magnetisation(c.j1, c.j2, 0.0, t)
        return SweepRecord(t, Engine.EXACT, m, m, m, m), None
    if kind is LatticeKind.TRIANGULAR:
        if c.j_triplet != 0.0:
            raise exact.FieldNotSupported("no closed form with a three-site coupling")
        m = exact.triangular_magnetisation(c.j1, c.j2, c.j_diag, t)
        if c.j_diag == 0.0 and c.j1 != 0.0 and c.j2 != 0.0:
            m3 = exact.square_corner_three_site(c.j1, c.j2, t)
        else:
            m3 = exact.triangular_three_site(c.j1, c.j2, c.j_diag, t)
        return SweepRecord(t, Engine.EXACT, m, m, m, m), m3
    sigma = exact.uj_sigma_magnetisation(c, t, gated=cfg.gated)
    tau = exact.uj_tau_magnetisation(c, t, gated=cfg.gated)
    mean = 0.5 * (sigma + tau.value)
    flags = tuple(f.value for f in tau.flags)
    return SweepRecord(t, Engine.EXACT, sigma, tau.value, mean, mean, flags=flags), None


def run_predict(cfg: RunConfig):
    pairs = [_predict_point(cfg, float(t)) for t in cfg.temperatures()]
    records = [r for r, _ in pairs]
    extra = None
    if cfg.lattice.kind is LatticeKind.TRIANGULAR:
        extra = {"three_site": [m3 for _, m3 in pairs]}
    return records, extra


def _mf_system(cfg: RunConfig) -> meanfield.MfSystem:
    c, kind = cfg.couplings, cfg.lattice.kind
    if kind is LatticeKind.UNION_JACK:
        if not (c.j1 == c.j2 == c.j3 == c.j4 and c.j_diag == c.j_diag_prime):
            raise ValidationError(
                "mean field needs j1=j2=j3=j4 and j_diag=j_diag_prime on a Union Jack lattice"
            )
        build = (meanfield.MfSystem.uj_coupled if cfg.mf_system == "coupled"
                 else meanfield.MfSystem.uj_uncoupled)
        return build(j=c.j1, k=c.j_diag, b=c.field_b)
    if kind is LatticeKind.TRIANGULAR:
        if not (c.j1 == c.j2 == c.j_diag) or c.j_triplet != 0.0:
            raise ValidationError("mean field needs j1=j2=j_diag and no triplet term")
        return meanfield.MfSystem.triangular(c.j1, c.field_b, q=3)
    if kind is LatticeKind.SQUARE:
        if c.j1 != c.j2:
            raise ValidationError("mean field needs j1=j2 on a square lattice")
        return meanfield.MfSystem.triangular(c.j1, c.field_b, q=2)
    return meanfield.MfSystem.triangular(c.j1, c.field_b, q=1)


def run_meanfield(cfg: RunConfig):
    return meanfield.mf_sweep(_mf_system(cfg), cfg.t_min, cfg.t_max, cfg.points), None


def _mc_records(cfg: RunConfig):
    lattice = build_lattice(cfg.lattice)
    scan = mc.temperature_scan(lattice, cfg.couplings, cfg.temperatures(), cfg.chain_params())
    records, three = [], []
    for t, r in scan:
        records.append(SweepRecord(
            t, Engine.MC, r.mean_m_sigma, r.mean_m_tau, r.mean_m_mean, r.mean_m_all,
            r.mean_abs_m_all, r.mean_energy_per_site, r.stderr_abs_m_all,
        ))
        three.append(r.mean_three_site)
    extra = {"three_site": three} if lattice.kind is LatticeKind.TRIANGULAR else None
    return records, extra


def run_simulate(cfg: RunConfig):
    return _mc_records(cfg)


def _oracle_records(cfg: RunConfig):
    lattice = build_lattice(cfg.lattice)
    records, three = [], []
    for t in cfg.temperatures():
        r = mc.exact_enumeration(lattice, cfg.couplings, float(t))
        records.append(SweepRecord(
            float(t), Engine.EXACT, r.mean_m_sigma, r.mean_m_tau, r.mean_m_mean,
            r.mean_m_all, r.mean_abs_m_all, r.mean_energy_per_site, 0.0,
            flags=("Enumeration",),
        ))
        three.append(r.mean_three_site)
    extra = {"three_site": three} if lattice.kind is LatticeKind.TRIANGULAR else None
    return records, extra


def run_oracle(cfg: RunConfig):
    return _oracle_records(cfg)


def run_compare(cfg: RunConfig):
    """Exact block then Monte Carlo block on the same grid.

    The reference is exhaustive enumeration when the lattice is small enough,
    otherwise the closed form.  ``deviation`` is MC <|m|> minus the
    reference magnetisation magnitude, filled on the MC rows.
    """
    if cfg.lattice.n_sites <= mc.MAX_ENUM_SITES:
        ref, ref_extra = _oracle_records(cfg)
        ref_abs = [r.abs_m_all for r in ref]
    else:
        ref, ref_extra = run_predict(cfg)
        ref_abs = [abs(r.m_mean) for r in ref]
    sim, sim_extra = _mc_records(cfg)
    deviation = [None] * len(ref) + [s.abs_m_all - a for s, a in zip(sim, ref_abs)]
    extra = {"deviation": deviation}
    if ref_extra and sim_extra:
        extra = {"three_site": ref_extra["three_site"] + sim_extra["three_site"], **extra}
    return ref + sim, extra


def critical_set(cfg: RunConfig) -> exact.CriticalSet:
    c, kind = cfg.couplings, cfg.lattice.kind
    items = []
    if kind is LatticeKind.UNION_JACK:
        items += list(exact.uj_critical_temperatures(c, cfg.t_min, cfg.t_max).items)
        if c.j1 == c.j2 == c.j3 == c.j4 and c.j_diag == c.j_diag_prime:
            items += list(exact.vaks_critical_temperatures(c.j1, c.j_diag, cfg.t_min, cfg.t_max).items)
    elif kind in (LatticeKind.SQUARE, LatticeKind.TRIANGULAR):
        jd = c.j_diag if kind is LatticeKind.TRIANGULAR else 0.0
        tc = exact.triangular_critical_temperature(c.j1, c.j2, jd)
        if tc is not None and cfg.t_min <= tc <= cfg.t_max:
            items.append(exact.CriticalRoot(tc, exact.RootKind.OMEGA_ROOT, "k2=1"))
    items.sort(key=lambda r: (r.temp, r.kind.value))
    return exact.CriticalSet(tuple(items))


def format_critical_csv(cs: exact.CriticalSet) -> str:
    lines = ["temp_K,kind,source"]
    lines += [f"{format_number(r.temp)},{r.kind.value},{r.source}" for r in cs.items]
    return "\n".join(lines) + "\n"


_RUNNERS = {
    Command.PREDICT: run_predict,
    Command.MEAN_FIELD: run_meanfield,
    Command.SIMULATE: run_simulate,
    Command.ORACLE: run_oracle,
    Command.COMPARE: run_compare,
}


# --- execution -----------------------------------------------------------

def _versions() -> dict:
    import mpmath
    import numba
    import scipy

    return {
        "spinlattice": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "numba": numba.__version__,
        "scipy": scipy.__version__,
        "mpmath": mpmath.__version__,
    }


def _metadata(cfg: RunConfig, wall: float, error: dict | None) -> dict:
    return {
        "command": cfg.command.value,
        "lattice": {
            "kind": cfg.lattice.kind.value,
            "width": cfg.lattice.width,
            "height": cfg.lattice.height,
            "boundary": cfg.lattice.boundary,
        },
        "couplings": asdict(cfg.couplings),
        "t_min": cfg.t_min,
        "t_max": cfg.t_max,
        "points": cfg.points,
        "burn_in": cfg.burn_in,
        "samples": cfg.samples,
        "init": cfg.init.value,
        "gated": cfg.gated,
        "seed": cfg.seed,
        "versions": _versions(),
        "wall_time_s": wall,
        "status": "error" if error else "ok",
        "error": error,
    }


def execute(cfg: RunConfig, out_path: str | None = None) -> Outcome:
    """Run ``cfg`` and write its artifacts.

    With an output path, the CSV is written there (atomically) together with
    ``<out>.meta.json``; otherwise the CSV text is returned in ``Outcome.text``.
    Engine failures give exit code 1 and an error record in the sidecar;
    configuration problems found here give exit code 2.
    """
    out_path = out_path or cfg.output_path
    start = time.perf_counter()
    outcome = Outcome(0)
    try:
        if cfg.command is Command.CLASSIFY:
            if cfg.lattice.kind is LatticeKind.UNION_JACK:
                label = exact.classify_phase(cfg.couplings)
            else:
                label = meanfield.mf_classify(cfg.couplings.j1, cfg.couplings.j_diag)
            outcome.text = label.value + "\n"
        elif cfg.command is Command.CRITICAL:
            outcome.text = format_critical_csv(critical_set(cfg))
        else:
            records, extra = _RUNNERS[cfg.command](cfg)
            outcome.records = records
            outcome.text = format_csv(records, extra)
    except ValidationError as exc:
        outcome = Outcome(2, error={"type": type(exc).__name__, "message": str(exc)})
    except SpinLatticeError as exc:
        outcome = Outcome(1, error={"type": type(exc).__name__, "message": str(exc)})
    wall = time.perf_counter() - start

    if out_path:
        if outcome.exit_code == 0 and cfg.command is not Command.CLASSIFY:
            atomic_write_text(out_path, outcome.text)
        meta = _metadata(cfg, wall, outcome.error)
        atomic_write_text(f"{out_path}.meta.json", json.dumps(meta, indent=2) + "\n")
    return outcome


def load_config(path, command=None) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), command)


def print_error(outcome: Outcome, stream=None) -> None:
    if outcome.error:
        print(f"error: {outcome.error['type']}: {outcome.error['message']}",
              file=stream or sys.stderr)
