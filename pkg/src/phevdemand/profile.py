"""Daily demand profiles on a uniform 24-hour grid, plus CSV I/O."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

DAY = 24.0
CSV_HEADER = ("t_start_h", "t_end_h", "expected_kw", "stderr_kw")


class GridMismatchError(ValueError):
    pass


def make_grid(resolution):
    """Bin edges covering [0, 24) with step ``resolution`` (must divide 24)."""
    res = float(resolution)
    if not (res > 0 and math.isfinite(res)):
        raise ValueError(f"resolution must be positive, got {resolution!r}")
    n = round(DAY / res)
    if n < 1 or abs(n * res - DAY) > 1e-9:
        raise ValueError(f"resolution {res} h does not divide 24 h evenly")
    return np.linspace(0.0, DAY, n + 1)


@dataclass
class DemandProfile:
    """Expected power per bin (kW) over one day.

    ``values[i]`` belongs to ``[edges[i], edges[i+1])``. ``stderr`` is only
    present for Monte Carlo estimates. ``meta`` carries provenance such as
    ``{"source": "analytic", "method": "closed-form"}``.
    """

    edges: np.ndarray
    values: np.ndarray
    stderr: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.edges = np.asarray(self.edges, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.stderr is not None:
            self.stderr = np.asarray(self.stderr, dtype=float)
            if self.stderr.shape != self.values.shape:
                raise ValueError("stderr must match values in shape")
        if self.edges.ndim != 1 or self.edges.size != self.values.size + 1:
            raise ValueError("need len(edges) == len(values) + 1")

    @property
    def step(self):
        return float(self.edges[1] - self.edges[0])

    @property
    def centers(self):
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    @property
    def n_bins(self):
        return self.values.size

    @property
    def peak(self):
        return float(self.values.max())

    @property
    def peak_time(self):
        return float(self.centers[int(np.argmax(self.values))])

    def same_grid(self, other):
        return self.edges.shape == other.edges.shape and np.allclose(
            self.edges, other.edges, rtol=0, atol=1e-9
        )

    def scaled(self, factor):
        stderr = None if self.stderr is None else self.stderr * factor
        meta = dict(self.meta)
        meta["scale"] = meta.get("scale", 1) * factor
        return DemandProfile(self.edges.copy(), self.values * factor, stderr, meta)


def daily_energy(profile):
    """Energy over the day in kWh (sum of bin power times bin width)."""
    return float(np.sum(profile.values) * profile.step)


def window_mean(profile, start, end):
    """Mean bin value over clock window [start, end), wrapping past midnight.

    ``window_mean(p, 18, 1)`` covers 18:00 through 01:00.
    """
    c = profile.centers
    start, end = start % DAY, end % DAY
    if start < end:
        mask = (c >= start) & (c < end)
    else:
        mask = (c >= start) | (c < end)
    if not mask.any():
        raise ValueError(f"no bin centers inside window [{start}, {end})")
    return float(profile.values[mask].mean())


def evening_morning_ratio(profile):
    """Mean demand 18:00-01:00 over mean demand 08:00-14:00."""
    return window_mean(profile, 18.0, 1.0) / window_mean(profile, 8.0, 14.0)


class ProfileDelta(NamedTuple):
    max_abs_kw: float
    max_frac_of_peak: float
    rms_kw: float


def compare_profiles(p1, p2):
    if not p1.same_grid(p2):
        raise GridMismatchError(
            f"profiles are on different grids ({p1.n_bins} vs {p2.n_bins} bins)"
        )
    diff = np.abs(p1.values - p2.values)
    max_abs = float(diff.max())
    peak = max(float(np.abs(p1.values).max()), float(np.abs(p2.values).max()))
    frac = max_abs / peak if peak > 0 else (0.0 if max_abs == 0 else math.inf)
    rms = float(np.sqrt(np.mean(diff * diff)))
    return ProfileDelta(max_abs, frac, rms)


def _fmt(x):
    return format(float(x), ".17g")


def profile_to_csv(profile, dest=None):
    """Write ``profile`` as CSV to the path ``dest`` or return the text."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    stderr = profile.stderr
    for i in range(profile.n_bins):
        err = "" if stderr is None else _fmt(stderr[i])
        w.writerow((_fmt(profile.edges[i]), _fmt(profile.edges[i + 1]), _fmt(profile.values[i]), err))
    text = buf.getvalue()
    if dest is None:
        return text
    with open(dest, "w", newline="") as fh:
        fh.write(text)
    return dest


def profile_from_csv(source):
    """Parse a profile CSV from a path or from text containing a header row."""
    if isinstance(source, str) and source.startswith(CSV_HEADER[0]):
        text = source
    else:
        with open(source, newline="") as fh:
            text = fh.read()
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != CSV_HEADER:
        raise ValueError(f"expected CSV header {','.join(CSV_HEADER)}")
    body = rows[1:]
    if not body:
        raise ValueError("profile CSV has no rows")
    starts = [float(r[0]) for r in body]
    edges = np.array(starts + [float(body[-1][1])])
    values = np.array([float(r[2]) for r in body])
    errs = [r[3] for r in body]
    stderr = None if all(e == "" for e in errs) else np.array([float(e) for e in errs])
    return DemandProfile(edges, values, stderr)
