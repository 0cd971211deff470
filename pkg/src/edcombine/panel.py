"""Weekly multivariate panel: epidemiological-week axis, disease counts,
environmental series, and the CSV interchange format.

CSV layout: header row, first column ``epi_week`` as ``YYYY-Www`` (ISO
year-week), disease columns prefixed ``ed.``, environmental columns
prefixed ``env.``. Values round-trip exactly because floats are written
with shortest-repr formatting.
"""

from __future__ import annotations

import csv
import datetime
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError

_WEEK_RE = re.compile(r"^(\d{4})-W(\d{2})$")


def parse_week(label: str) -> tuple[int, int]:
    m = _WEEK_RE.match(label)
    if not m:
        raise DataError(f"bad epi-week label {label!r}, expected YYYY-Www")
    year, week = int(m.group(1)), int(m.group(2))
    try:
        datetime.date.fromisocalendar(year, week, 1)
    except ValueError as exc:
        raise DataError(f"epi-week {label!r} is not a valid ISO week") from exc
    return year, week


def next_week(label: str) -> str:
    """Successor epi-week, honoring 52/53-week ISO years."""
    year, week = parse_week(label)
    d = datetime.date.fromisocalendar(year, week, 1) + datetime.timedelta(days=7)
    iso = d.isocalendar()
    return f"{iso[0]}-W{iso[1]:02d}"


def week_range(start: str, n: int) -> list[str]:
    out = [start]
    parse_week(start)
    for _ in range(n - 1):
        out.append(next_week(out[-1]))
    return out


@dataclass(frozen=True)
class SeriesPanel:
    """Aligned weekly panel of disease count series and environmental series.

    All series share the week axis. Disease counts must be non-negative
    and week labels strictly increasing with no gaps.
    """

    epi_weeks: tuple[str, ...]
    disease_series: dict[str, np.ndarray] = field(default_factory=dict)
    env_series: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.epi_weeks)
        if n == 0:
            raise DataError("empty panel")
        for name, arr in list(self.disease_series.items()) + list(self.env_series.items()):
            if arr.shape != (n,):
                raise DataError(f"series {name!r} length {arr.shape} != week axis {n}")
            if not np.all(np.isfinite(arr)):
                raise DataError(f"series {name!r} has non-finite values")
        for name, arr in self.disease_series.items():
            if np.any(arr < 0):
                raise DataError(f"disease series {name!r} has negative counts")
        prev = self.epi_weeks[0]
        parse_week(prev)
        for lab in self.epi_weeks[1:]:
            if lab != next_week(prev):
                raise DataError(
                    f"week axis gap or disorder: {prev!r} followed by {lab!r}"
                )
            prev = lab

    @property
    def n_weeks(self) -> int:
        return len(self.epi_weeks)

    @property
    def diseases(self) -> list[str]:
        return list(self.disease_series)

    @property
    def env_names(self) -> list[str]:
        return list(self.env_series)

    def equals(self, other: "SeriesPanel") -> bool:
        return (
            self.epi_weeks == other.epi_weeks
            and self.diseases == other.diseases
            and self.env_names == other.env_names
            and all(np.array_equal(self.disease_series[k], other.disease_series[k]) for k in self.diseases)
            and all(np.array_equal(self.env_series[k], other.env_series[k]) for k in self.env_names)
        )


def _fmt(x: float) -> str:
    # shortest repr that round-trips float64; integers stay integral-looking
    return repr(float(x))


def write_panel_csv(panel: SeriesPanel, path) -> None:
    cols = [f"ed.{d}" for d in panel.diseases] + [f"env.{e}" for e in panel.env_names]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["epi_week"] + cols)
        series = [panel.disease_series[d] for d in panel.diseases] + [
            panel.env_series[e] for e in panel.env_names
        ]
        for i, week in enumerate(panel.epi_weeks):
            w.writerow([week] + [_fmt(s[i]) for s in series])


def read_panel_csv(path) -> SeriesPanel:
    with open(path, "r", newline="", encoding="utf-8") as fh:
        rd = csv.reader(fh)
        try:
            header = next(rd)
        except StopIteration:
            raise DataError(f"{path}: empty CSV")
        if not header or header[0] != "epi_week":
            raise DataError(f"{path}: first column must be 'epi_week'")
        dis_cols: list[tuple[int, str]] = []
        env_cols: list[tuple[int, str]] = []
        for j, name in enumerate(header[1:], start=1):
            if name.startswith("ed."):
                dis_cols.append((j, name[3:]))
            elif name.startswith("env."):
                env_cols.append((j, name[4:]))
            else:
                raise DataError(f"{path}: column {name!r} lacks ed./env. prefix")
        weeks: list[str] = []
        rows: list[list[str]] = []
        for rec in rd:
            if not rec:
                continue
            if len(rec) != len(header):
                raise DataError(f"{path}: ragged row of width {len(rec)}")
            weeks.append(rec[0])
            rows.append(rec)
    try:
        data = {j: np.array([float(r[j]) for r in rows]) for j, _ in dis_cols + env_cols}
    except ValueError as exc:
        raise DataError(f"{path}: non-numeric cell ({exc})") from exc
    return SeriesPanel(
        epi_weeks=tuple(weeks),
        disease_series={name: data[j] for j, name in dis_cols},
        env_series={name: data[j] for j, name in env_cols},
    )
