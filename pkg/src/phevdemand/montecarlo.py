"""Fleet-scale Monte Carlo estimate of the daily demand profile.

Sessions are sampled in fixed-size blocks; block ``j`` always uses stream
``j`` of the run seed, so the result does not depend on how blocks are
spread over worker processes. Partial histograms are reduced in block order.
"""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .distributions import RandomStream
from .profile import DAY, DemandProfile, GridMismatchError, make_grid

DEFAULT_BLOCK = 10_000
# sessions per vectorised deposit pass; bounds memory at ~chunk * bins floats
_CHUNK = 2_000


@dataclass(frozen=True)
class ChargingSession:
    t0: float
    T: float
    a: float

    def __post_init__(self):
        if self.T < 0 or not self.a > 0:
            raise ValueError(f"need T >= 0 and a > 0, got T={self.T}, a={self.a}")


@dataclass
class PartialHistogram:
    """Per-bin sums of deposited power over a set of sessions.

    ``sum``/``sumsq`` hold the per-session bin power and its square;
    ``energy``/``energy_sq`` the per-session energy a*T and its square.
    """

    edges: np.ndarray
    sum: np.ndarray
    sumsq: np.ndarray
    count: int = 0
    energy: float = 0.0
    energy_sq: float = 0.0

    @classmethod
    def empty(cls, edges):
        edges = np.asarray(edges, dtype=float)
        n = edges.size - 1
        return cls(edges, np.zeros(n), np.zeros(n))

    @property
    def step(self):
        return float(self.edges[1] - self.edges[0])

    def to_profile(self, meta=None):
        n = self.count
        if n == 0:
            raise ValueError("no sessions accumulated")
        mean = self.sum / n
        if n > 1:
            var = np.maximum(self.sumsq - n * mean * mean, 0.0) / (n - 1)
            stderr = np.sqrt(var / n)
        else:
            stderr = np.zeros_like(mean)
        meta = dict(meta or {})
        meta.setdefault("source", "monte-carlo")
        meta["sessions"] = n
        meta["energy_mean_kwh"] = self.energy / n
        meta["energy_stderr_kwh"] = self.energy_stderr()
        return DemandProfile(self.edges.copy(), mean, stderr, meta)

    def energy_stderr(self):
        n = self.count
        if n < 2:
            return 0.0
        m = self.energy / n
        var = max(self.energy_sq - n * m * m, 0.0) / (n - 1)
        return float(np.sqrt(var / n))


def sample_sessions(model, stream, n):
    """Draw ``n`` sessions as arrays ``(t0, T, a)``."""
    t0 = model.arrival.sample(stream, n)
    T = model.charge_time.sample(stream, n)
    a = np.full(n, float(model.power))
    return t0, T, a


def sample_session(model, stream):
    t0, T, a = sample_sessions(model, stream, 1)
    return ChargingSession(float(t0[0]), float(T[0]), float(a[0]))


def _bin_power(edges, t0, T, a):
    """Power each session deposits in each bin, shape (n_sessions, n_bins).

    A bin receives a * overlap / width, where overlap is the length of
    [t0, t0 + T) that lands in the bin after reduction modulo 24 h. Every
    wrap of a long session counts, so the deposits of one session sum to
    exactly a * T / width.
    """
    width = edges[1] - edges[0]
    start = np.mod(t0, DAY)
    start = np.where(start >= DAY, start - DAY, start)
    end_rel = start + T
    out = np.zeros((t0.size, edges.size - 1))
    n_wraps = int(np.ceil(end_rel.max() / DAY)) if t0.size else 0
    s = start[:, None]
    dur = T[:, None]
    for k in range(max(n_wraps, 1)):
        # covered length of [s, s + T) below each shifted edge
        covered = np.clip(edges[None, :] + DAY * k - s, 0.0, dur)
        out += np.diff(covered, axis=1)
    return out * (a[:, None] / width)


def deposit_sessions(hist, t0, T, a):
    """Accumulate the sessions given as arrays into ``hist`` in place."""
    t0 = np.atleast_1d(np.asarray(t0, dtype=float))
    T = np.atleast_1d(np.asarray(T, dtype=float))
    a = np.broadcast_to(np.asarray(a, dtype=float), t0.shape)
    for i in range(0, t0.size, _CHUNK):
        sl = slice(i, i + _CHUNK)
        p = _bin_power(hist.edges, t0[sl], T[sl], a[sl])
        hist.sum += p.sum(axis=0)
        hist.sumsq += (p * p).sum(axis=0)
        e = a[sl] * T[sl]
        hist.energy += float(e.sum())
        hist.energy_sq += float((e * e).sum())
    hist.count += t0.size
    return hist


def deposit_session(hist, s):
    return deposit_sessions(hist, [s.t0], [s.T], [s.a])


def merge_partials(parts):
    """Element-wise sum of partial histograms, reduced left to right."""
    parts = list(parts)
    if not parts:
        raise ValueError("nothing to merge")
    edges = parts[0].edges
    for p in parts[1:]:
        if p.edges.shape != edges.shape or not np.allclose(p.edges, edges, rtol=0, atol=1e-9):
            raise GridMismatchError("partial histograms are on different grids")
    out = PartialHistogram.empty(edges)
    for p in parts:
        out.sum = out.sum + p.sum
        out.sumsq = out.sumsq + p.sumsq
        out.count += p.count
        out.energy += p.energy
        out.energy_sq += p.energy_sq
    return out


def simulate_block(model, edges, seed, stream_id, n):
    """Partial histogram of ``n`` sessions drawn from stream ``stream_id``."""
    stream = RandomStream(seed, stream_id)
    hist = PartialHistogram.empty(edges)
    t0, T, a = sample_sessions(model, stream, n)
    return deposit_sessions(hist, t0, T, a)


def _block_sizes(n, block):
    full, rest = divmod(n, block)
    return [block] * full + ([rest] if rest else [])


def simulate(model, n, resolution=0.05, seed=0, workers=1, block=DEFAULT_BLOCK):
    """Per-EV Monte Carlo profile from ``n`` independent sessions.

    ``values`` is the mean deposited power per bin and ``stderr`` the
    sample standard deviation over sessions divided by sqrt(n).
    """
    if n < 1:
        raise ValueError("need at least one session")
    edges = make_grid(resolution)
    sizes = _block_sizes(int(n), int(block))
    jobs = [(model, edges, seed, j, m) for j, m in enumerate(sizes)]
    workers = max(1, int(workers or os.cpu_count() or 1))
    if workers == 1 or len(jobs) == 1:
        parts = [simulate_block(*job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            # map preserves job order, which fixes the reduction order
            parts = list(pool.map(simulate_block, *zip(*jobs)))
    total = merge_partials(parts)
    meta = {
        "source": "monte-carlo",
        "seed": int(seed),
        "block": int(block),
        "power_kw": model.power,
        "arrival": model.arrival.describe(),
        "charge_time": model.charge_time.describe(),
    }
    return total.to_profile(meta)


def simulate_fleet(config, workers=1):
    """Run the Monte Carlo experiment described by a ``ScenarioConfig``."""
    return simulate(
        config.session_model(),
        config.fleet_size,
        resolution=config.resolution,
        seed=config.seed,
        workers=workers,
        block=config.block_size,
    )
