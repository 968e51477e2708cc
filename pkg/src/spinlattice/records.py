"""Sweep records and their CSV representation."""

from __future__ import annotations

import csv
import io
import os
import tempfile
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

HEADER = (
    "temp_K", "engine", "m_sigma", "m_tau", "m_mean",
    "m_all", "abs_m_all", "energy_per_site_K", "stderr", "flags",
)
_NUMERIC = ("m_sigma", "m_tau", "m_mean", "m_all", "abs_m_all", "energy_per_site", "stderr")


class Engine(str, Enum):
    EXACT = "Exact"
    MEAN_FIELD = "MeanField"
    MC = "Mc"


@dataclass(frozen=True)
class SweepRecord:
    """One point on a temperature curve; ``None`` marks a field the engine does not produce."""

    temp: float
    engine: Engine
    m_sigma: float | None = None
    m_tau: float | None = None
    m_mean: float | None = None
    m_all: float | None = None
    abs_m_all: float | None = None
    energy_per_site: float | None = None
    stderr: float | None = None
    flags: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "engine", Engine(self.engine))
        object.__setattr__(self, "flags", tuple(str(f) for f in self.flags))


def format_number(x: float | None) -> str:
    """Nine significant digits, positional notation, '.' separator."""
    if x is None:
        return ""
    return np.format_float_positional(
        float(x), precision=9, unique=False, fractional=False, trim="-"
    )


def _parse_number(text: str) -> float | None:
    return None if text == "" else float(text)


def format_csv(records, extra_columns: dict[str, list] | None = None) -> str:
    records = list(records)
    if not records:
        raise ValueError("no records to write")
    extra = extra_columns or {}
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(HEADER) + list(extra))
    for i, r in enumerate(records):
        row = [format_number(r.temp), r.engine.value]
        row += [format_number(getattr(r, name)) for name in _NUMERIC]
        row.append(";".join(r.flags))
        row += [format_number(col[i]) for col in extra.values()]
        w.writerow(row)
    return buf.getvalue()


def atomic_write_text(path, text: str) -> None:
    """Write ``text`` to a temp file next to ``path`` then rename over it."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(records, path, extra_columns: dict[str, list] | None = None) -> None:
    atomic_write_text(path, format_csv(records, extra_columns))


def parse_csv(text: str) -> list[SweepRecord]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0][: len(HEADER)]) != HEADER:
        raise ValueError("missing or malformed header")
    out = []
    for row in rows[1:]:
        values = dict(zip(HEADER, row))
        out.append(SweepRecord(
            temp=float(values["temp_K"]),
            engine=Engine(values["engine"]),
            m_sigma=_parse_number(values["m_sigma"]),
            m_tau=_parse_number(values["m_tau"]),
            m_mean=_parse_number(values["m_mean"]),
            m_all=_parse_number(values["m_all"]),
            abs_m_all=_parse_number(values["abs_m_all"]),
            energy_per_site=_parse_number(values["energy_per_site_K"]),
            stderr=_parse_number(values["stderr"]),
            flags=tuple(values["flags"].split(";")) if values["flags"] else (),
        ))
    return out


def read_csv(path) -> list[SweepRecord]:
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_csv(fh.read())
