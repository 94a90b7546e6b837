"""Seeded Monte Carlo harness for CRC-aided list decoding on the AWGN channel.

Every chunk of trials draws from its own Philox stream keyed by
(seed, point index, chunk index), so results do not depend on how chunks are
scheduled across workers.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.stats import norm

from .convcode import CodeSpec, amplitude_from_db, build_trellis, encode, modulate
from .gf2poly import crc_encode
from .slvd import slvd_decode_batch

__all__ = ["TrialPlan", "PointCounts", "SimReport", "wilson_interval", "run_channel",
           "run_fixed_norm", "run_origin"]

CHANNEL = "channel"
FIXED_NORM = "fixed-norm"
ORIGIN = "origin"


def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    """Two-sided Wilson score interval for a binomial proportion."""
    if trials <= 0:
        return 0.0, 1.0
    z = norm.ppf(0.5 + confidence / 2)
    p = successes / trials
    denom = 1 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


@dataclass
class TrialPlan:
    spec: CodeSpec
    snr_db: list[float] = field(default_factory=lambda: [0.0])
    max_list: int | None = None
    target_ue: int = 100
    max_trials: int = 10 ** 8
    seed: int = 0
    mode: str = CHANNEL
    eta: list[float] = field(default_factory=list)
    chunk: int = 2000
    random_message: bool = False
    workers: int = 1

    def __post_init__(self):
        if self.mode not in (CHANNEL, FIXED_NORM, ORIGIN):
            raise ValueError(f"unknown simulation mode {self.mode!r}")
        if self.max_list is not None and self.max_list < 1:
            raise ValueError("list size must be at least 1")
        if self.max_trials < 1 or self.chunk < 1:
            raise ValueError("trial counts must be positive")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.mode == FIXED_NORM and (not self.eta or min(self.eta) <= 0):
            raise ValueError("fixed-norm mode needs a positive eta grid")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["spec"] = self.spec.to_dict()
        return d


@dataclass
class PointCounts:
    """Exact tallies for one operating point (SNR or eta)."""

    x: float
    trials: int = 0
    correct: int = 0
    ue: int = 0
    nack: int = 0
    sum_rank: int = 0
    sum_rank_sq: int = 0
    sum_insertions: int = 0
    max_rank: int = 0
    branches: int = 0
    traceback_steps: int = 0

    def merge(self, other: "PointCounts") -> None:
        for name in ("trials", "correct", "ue", "nack", "sum_rank", "sum_rank_sq",
                     "sum_insertions", "branches", "traceback_steps"):
            setattr(self, name, getattr(self, name) + getattr(other, name))
        self.max_rank = max(self.max_rank, other.max_rank)

    def estimates(self) -> dict:
        T = max(self.trials, 1)
        mean_l = self.sum_rank / T
        var_l = max(self.sum_rank_sq / T - mean_l ** 2, 0.0)
        half = 1.96 * math.sqrt(var_l / T)
        return {
            "p_correct": self.correct / T,
            "p_ue": self.ue / T,
            "p_nack": self.nack / T,
            "mean_rank": mean_l,
            "mean_insertions": self.sum_insertions / T,
            "ci": {
                "p_correct": wilson_interval(self.correct, self.trials),
                "p_ue": wilson_interval(self.ue, self.trials),
                "p_nack": wilson_interval(self.nack, self.trials),
                "mean_rank": (mean_l - half, mean_l + half),
            },
        }

    def to_dict(self) -> dict:
        d = asdict(self)
        d["estimates"] = self.estimates()
        return d


@dataclass
class SimReport:
    plan: TrialPlan
    points: list[PointCounts]

    def to_dict(self) -> dict:
        return {"plan": self.plan.to_dict(), "seed": self.plan.seed,
                "points": [p.to_dict() for p in self.points]}


def _rng(seed: int, point: int, chunk: int) -> np.random.Generator:
    ss = np.random.SeedSequence(seed, spawn_key=(point, chunk))
    return np.random.Generator(np.random.Philox(ss))


def _run_chunk(args) -> PointCounts:
    spec_json, kind, x, amplitude, point, chunk, size, seed, max_list, random_message = args
    spec = CodeSpec.from_json(spec_json)
    trellis = build_trellis(spec)
    rng = _rng(seed, point, chunk)
    n, k = spec.n, spec.k
    noise = rng.standard_normal((size, n))
    if kind == FIXED_NORM:
        noise *= x / np.linalg.norm(noise, axis=1, keepdims=True)
    if random_message:
        msgs = rng.integers(0, 2, (size, k), dtype=np.uint8)
        signs = np.stack([modulate(encode(spec, crc_encode(u, spec.crc)), 1.0) for u in msgs])
    else:
        msgs = np.zeros((size, k), dtype=np.uint8)
        signs = np.ones((size, n))
    if kind == ORIGIN:
        y = noise
    else:
        y = amplitude * signs + noise
    out = slvd_decode_batch(trellis, spec.crc, y, max_list, amplitude)
    right = out.decoded & (out.messages == msgs).all(axis=1)
    pc = PointCounts(x)
    pc.trials = size
    pc.correct = int(right.sum())
    pc.ue = int((out.decoded & ~right).sum())
    pc.nack = int((~out.decoded).sum())
    r = out.list_rank.astype(np.int64)
    pc.sum_rank = int(r.sum())
    pc.sum_rank_sq = int((r * r).sum())
    pc.max_rank = int(r.max()) if size else 0
    pc.sum_insertions = int(out.insertions.sum())
    pc.branches = out.counters.branches
    pc.traceback_steps = out.counters.traceback_steps
    return pc


def _run_point(plan: TrialPlan, kind: str, x: float, amplitude: float, point: int,
               max_list, stop_on_ue: bool, pool) -> PointCounts:
    total = PointCounts(x)
    chunk_idx = 0
    spec_json = plan.spec.to_json()
    width = max(plan.workers, 1)
    while total.trials < plan.max_trials and not (stop_on_ue and total.ue >= plan.target_ue):
        jobs = []
        planned = total.trials
        for _ in range(width):
            if planned >= plan.max_trials:
                break
            size = min(plan.chunk, plan.max_trials - planned)
            jobs.append((spec_json, kind, x, amplitude, point, chunk_idx, size, plan.seed,
                         max_list, plan.random_message))
            planned += size
            chunk_idx += 1
        results = list(pool.map(_run_chunk, jobs)) if pool is not None else [_run_chunk(j) for j in jobs]
        # merge in chunk order and re-apply the stop rule so the result does
        # not depend on the number of workers
        for res in results:
            if total.trials >= plan.max_trials or (stop_on_ue and total.ue >= plan.target_ue):
                break
            total.merge(res)
    return total


def _pool(plan: TrialPlan):
    return ProcessPoolExecutor(plan.workers) if plan.workers > 1 else None


def run_channel(plan: TrialPlan) -> SimReport:
    """Transmit over AWGN at each SNR until the UE target or the trial cap."""
    pool = _pool(plan)
    try:
        points = [_run_point(plan, CHANNEL, db, amplitude_from_db(db), i, plan.max_list, True, pool)
                  for i, db in enumerate(plan.snr_db)]
    finally:
        if pool is not None:
            pool.shutdown()
    return SimReport(plan, points)


def run_fixed_norm(plan: TrialPlan) -> SimReport:
    """Noise of fixed normalized norm eta, unit amplitude; max_trials per eta."""
    pool = _pool(plan)
    try:
        points = [_run_point(plan, FIXED_NORM, eta, 1.0, i, plan.max_list, False, pool)
                  for i, eta in enumerate(plan.eta)]
    finally:
        if pool is not None:
            pool.shutdown()
    return SimReport(plan, points)


def default_cap(spec: CodeSpec) -> int:
    K = spec.input_length
    paths = 2 ** (K + (spec.nu if spec.mode == "TB" else 0))
    return int(min(paths, 10 ** 6))


def run_origin(plan: TrialPlan) -> SimReport:
    """Decode pure noise to estimate the saturation rank.

    The list size is treated as unbounded: it defaults to a cap that must not
    be hit, and any trial that hits it is flagged with a warning.
    """
    cap = plan.max_list if plan.max_list is not None else default_cap(plan.spec)
    pool = _pool(plan)
    try:
        pt = _run_point(plan, ORIGIN, 0.0, 1.0, 0, cap, False, pool)
    finally:
        if pool is not None:
            pool.shutdown()
    if pt.nack:
        warnings.warn(f"{pt.nack} trials reached the list cap {cap}; raise max_list",
                      RuntimeWarning, stacklevel=2)
    return SimReport(plan, [pt])
