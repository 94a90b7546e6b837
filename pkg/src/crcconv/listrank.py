"""Expected list-rank models.

Geometry is expressed in the unit-amplitude normalization: codewords lie on
the sphere of radius sqrt(n) and the noise norm divided by the amplitude is
the normalized norm ``eta``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import stats
from scipy.integrate import trapezoid
from scipy.special import betainc, betaincinv, gammaln

__all__ = [
    "noise_norm_density",
    "parametric_cond",
    "parametric_overall",
    "solid_angle_fraction",
    "solve_alpha",
    "OnionGeometry",
    "onion_geometry",
    "onion_cdf",
    "onion_cond_rank",
    "sphere_area",
    "induced_density",
    "random_coding_rank",
    "urn_first_red",
    "integrate_rank_over_noise",
    "RankModel",
]


def noise_norm_density(w, n: int):
    """Density of the Euclidean norm of an n-dimensional standard Gaussian."""
    if n < 1:
        raise ValueError("n must be positive")
    return stats.chi.pdf(w, n)


def parametric_cond(eta, pe_of_eta: Callable | float, l_bar: float):
    """1 - p + p * l_bar with p the undetected-error probability at eta."""
    p = pe_of_eta(eta) if callable(pe_of_eta) else pe_of_eta
    p = np.clip(np.asarray(p, dtype=float), 0.0, 1.0)
    out = 1.0 - p + p * l_bar
    return float(out) if out.ndim == 0 else out


def parametric_overall(pe: float, l_bar: float) -> float:
    return parametric_cond(0.0, pe, l_bar)


def solid_angle_fraction(alpha, n: int):
    """Fraction of the unit sphere in R^n inside a cone of half-angle alpha."""
    if n < 2:
        raise ValueError("need n >= 2")
    alpha = np.asarray(alpha, dtype=float)
    if np.any((alpha < 0) | (alpha > math.pi)):
        raise ValueError("alpha must lie in [0, pi]")
    a = np.minimum(alpha, math.pi - alpha)
    half = 0.5 * betainc((n - 1) / 2.0, 0.5, np.sin(a) ** 2)
    out = np.where(alpha <= math.pi / 2, half, 1.0 - half)
    return float(out) if out.ndim == 0 else out


def solve_alpha(s: int, k: int, m: int, n: int) -> float:
    """Half-angle whose cone holds the fraction s / 2^(k+m) of the sphere."""
    if s < 1:
        raise ValueError("s must be at least 1")
    frac = math.ldexp(s, -(k + m))
    if frac > 0.5:
        raise ValueError("cone fraction beyond a hemisphere")
    x = betaincinv((n - 1) / 2.0, 0.5, 2.0 * frac)
    return math.asin(math.sqrt(x))


@dataclass(frozen=True)
class OnionGeometry:
    mu: int
    alphas: tuple[float, ...]
    n: int
    k: int
    m: int


def onion_geometry(mu: int, k: int, m: int, n: int) -> OnionGeometry:
    if mu < 1:
        raise ValueError("model order must be at least 1")
    alphas = tuple(solve_alpha(s, k, m, n) for s in range(1, mu + 1))
    if any(b <= a for a, b in zip(alphas, alphas[1:])):
        raise ValueError("cone half-angles are not increasing; lower mu or raise k+m")
    return OnionGeometry(mu, alphas, n, k, m)


def _asin_clamped(x):
    if x > 1.0 or x < -1.0:
        if abs(x) - 1.0 > 1e-9:
            warnings.warn(f"arcsin argument {x} clamped to [-1, 1]", RuntimeWarning, stacklevel=3)
        x = max(-1.0, min(1.0, x))
    return math.asin(x)


def onion_cdf(eta: float, alpha: float, n: int) -> float:
    """Fraction of the noise sphere of radius eta around a codeword that falls
    inside a cone of half-angle alpha; valid for eta >= sqrt(n) sin(alpha)."""
    rn = math.sqrt(n)
    inner = eta * eta - n * math.sin(alpha) ** 2
    if inner < 0:
        if inner < -1e-9 * eta * eta:
            return 1.0
        inner = 0.0
    a = _asin_clamped(math.sqrt(inner) / eta)
    b1 = math.pi / 2 + alpha - a
    b2 = (math.pi / 2 - alpha - a) if eta <= rn else 0.0
    b1 = min(max(b1, 0.0), math.pi)
    b2 = min(max(b2, 0.0), math.pi)
    return float(solid_angle_fraction(b1, n) + solid_angle_fraction(b2, n))


def onion_cond_rank(eta: float, geometry: OnionGeometry, l_bar: float) -> float:
    """Conditional expected rank at normalized norm eta under the onion model."""
    if eta <= 0:
        raise ValueError("eta must be positive")
    n, mu = geometry.n, geometry.mu
    edges = [math.sqrt(n) * math.sin(a) for a in geometry.alphas]
    if eta < edges[0]:
        return 1.0
    F = [onion_cdf(eta, a, n) for a in geometry.alphas]
    for s in range(2, mu + 1):
        if edges[s - 2] <= eta < edges[s - 1]:
            return s - sum(F[: s - 1])
    return l_bar - (l_bar - mu) * F[mu - 1] - sum(F[: mu - 1])


def sphere_area(radius: float, n: int) -> float:
    """Surface area of the radius-r sphere in R^n."""
    return math.exp(math.log(2.0) + (n / 2.0) * math.log(math.pi) - gammaln(n / 2.0)
                    + (n - 1) * math.log(radius))


def induced_density(y1, w: float, amplitude: float, n: int):
    """Density on the codeword sphere induced by projecting the uniform
    distribution on the noise sphere of radius w; y1 is the coordinate along
    the transmitted point."""
    R = amplitude * math.sqrt(n)
    if w < R:
        raise ValueError("noise radius must be at least the codeword-sphere radius")
    y1 = np.asarray(y1, dtype=float)
    if np.any(np.abs(y1) > R * (1 + 1e-12)):
        raise ValueError("y1 outside the codeword sphere")
    root = np.sqrt(np.maximum(y1 * y1 + w * w - R * R, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(root > 0, y1 / root, 0.0)
    base = (y1 + root) / w
    out = base ** (n - 2) * (1.0 + ratio) / sphere_area(R, n)
    return float(out) if out.ndim == 0 else out


def random_coding_rank(size_h: int, size_l: int) -> float:
    """Expected draw index of the first lower-rate codeword when all higher-rate
    codewords are listed in random order."""
    if size_l > size_h or size_l < 0:
        raise ValueError("need 0 <= size_l <= size_h")
    return (size_h + 1) / (size_l + 1)


def urn_first_red(size_h: int, size_l: int, trials: int, rng: np.random.Generator) -> np.ndarray:
    """Monte Carlo draws of the position of the first red ball (1-based)."""
    if size_l < 1:
        raise ValueError("need at least one red ball")
    keys = rng.random((trials, size_h))
    # position of the first red ball = 1 + number of blacks ranked before every red
    red_min = keys[:, :size_l].min(axis=1)
    return 1 + (keys[:, size_l:] < red_min[:, None]).sum(axis=1)


def integrate_rank_over_noise(eta_grid: Sequence[float], ranks: Sequence[float], n: int,
                              amplitude: float, pts: int = 20001) -> float:
    """Average a conditional-rank table over the noise-norm density, using
    w = amplitude * eta; the table is held constant beyond its ends."""
    eta_grid = np.asarray(eta_grid, dtype=float)
    ranks = np.asarray(ranks, dtype=float)
    if eta_grid.ndim != 1 or eta_grid.shape != ranks.shape or eta_grid.size == 0:
        raise ValueError("table needs matching 1-D eta and rank arrays")
    order = np.argsort(eta_grid)
    eta_grid, ranks = eta_grid[order], ranks[order]
    lo_w, hi_w = amplitude * eta_grid[0], amplitude * eta_grid[-1]
    covered = stats.chi.cdf(hi_w, n) - stats.chi.cdf(lo_w, n)
    if covered < 0.9999:
        warnings.warn(f"rank table covers only {covered:.6f} of the noise-norm mass",
                      RuntimeWarning, stacklevel=2)
    a, b = stats.chi.ppf(1e-15, n), stats.chi.isf(1e-15, n)
    w = np.linspace(a, b, pts)
    vals = noise_norm_density(w, n) * np.interp(w / amplitude, eta_grid, ranks)
    return float(trapezoid(vals, w))


@dataclass
class RankModel:
    """Saturation rank plus optional simulated tables over eta."""

    l_bar: float
    n: int
    k: int
    m: int
    eta: np.ndarray | None = None
    pe_eta: np.ndarray | None = None
    rank_eta: np.ndarray | None = None

    def parametric_table(self) -> np.ndarray:
        if self.eta is None or self.pe_eta is None:
            raise ValueError("no undetected-error table")
        return parametric_cond(self.eta, np.asarray(self.pe_eta), self.l_bar)

    def onion_table(self, mu: int) -> np.ndarray:
        if self.eta is None:
            raise ValueError("no eta grid")
        geo = onion_geometry(mu, self.k, self.m, self.n)
        return np.array([onion_cond_rank(float(e), geo, self.l_bar) for e in self.eta])
