"""Union-type bounds from distance spectra and saddlepoint approximations of
the RCU and meta-converse bounds on the BI-AWGN channel.

Conventions: unit-variance noise, BPSK amplitude A, channel SNR A**2.  All
exponents are in nats and the rate is R = k ln 2 / n.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import erfc, erfcx, logsumexp

from .convcode import amplitude_from_db
from .dso import DistanceSpectrum

__all__ = [
    "q_func",
    "amplitude",
    "union_bound",
    "tub",
    "nn_pe1",
    "nack1",
    "crossover_snr",
    "e0_family",
    "mutual_information",
    "psi",
    "mc_bound",
    "rcu_bound",
    "SaddlepointState",
    "BoundCurve",
    "bound_curves",
]

_LOG_2PI = math.log(2 * math.pi)


def q_func(x):
    return 0.5 * erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))


def _counts(spec: DistanceSpectrum | np.ndarray) -> np.ndarray:
    c = spec.counts if isinstance(spec, DistanceSpectrum) else np.asarray(spec)
    return np.asarray(c, dtype=float)


def _terms(spec, amplitude: float, d_max: int | None = None) -> np.ndarray:
    c = _counts(spec)
    if d_max is not None:
        c = c[: d_max + 1]
    d = np.arange(len(c))
    return c * q_func(amplitude * np.sqrt(d))


def union_bound(C, amplitude: float) -> float:
    """Sum of C_d Q(A sqrt(d)) over the whole spectrum, capped at 1."""
    return float(min(1.0, _terms(C, amplitude).sum()))


def tub(C, amplitude: float, d_tilde: int) -> float:
    """Union bound truncated to weights d <= d_tilde."""
    return float(min(1.0, _terms(C, amplitude, d_tilde).sum()))


def _dmin_term(C, amplitude: float) -> float:
    c = _counts(C)
    nz = np.flatnonzero(c)
    if nz.size == 0:
        return 0.0
    d = int(nz[0])
    return float(c[d] * q_func(amplitude * math.sqrt(d)))


def nn_pe1(C, amplitude: float, m: int) -> float:
    """Nearest-neighbour estimate of the rank-1 undetected-error probability."""
    return float(min(2.0 ** -m, _dmin_term(C, amplitude)))


def nack1(B, C, amplitude: float, m: int, d_tilde: int) -> float:
    """Estimate of the NACK probability with list size 1."""
    val = _terms(B, amplitude, d_tilde).sum() - _dmin_term(C, amplitude)
    return float(min(1.0 - 2.0 ** -m, max(val, 0.0)))


def crossover_snr(C1, C2, lo_db: float = -5.0, hi_db: float = 10.0, step_db: float = 0.05) -> list[float]:
    """SNRs (dB) where the union bounds of two spectra coincide."""
    c1, c2 = _counts(C1), _counts(C2)

    def gap(db):
        A = amplitude(db)
        return math.log(_terms(c1, A).sum()) - math.log(_terms(c2, A).sum())

    grid = np.arange(lo_db, hi_db + step_db / 2, step_db)
    vals = [gap(x) for x in grid]
    roots = []
    for a, b, fa, fb in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
        if fa == 0.0:
            roots.append(float(a))
        elif fa * fb < 0:
            roots.append(brentq(gap, a, b, xtol=1e-10))
    return roots


# ---------------------------------------------------------------- E0 family

amplitude = amplitude_from_db
_amp = amplitude_from_db


def _ygrid(A: float, pts: int = 6001, span: float = 12.0):
    y = np.linspace(-A - span, A + span, pts)
    w = np.full(pts, y[1] - y[0])
    w[0] = w[-1] = 0.5 * (y[1] - y[0])
    return y, w


def _log_w(y, A):
    lp = -0.5 * (y - A) ** 2 - 0.5 * _LOG_2PI
    lm = -0.5 * (y + A) ** 2 - 0.5 * _LOG_2PI
    return np.stack([lp, lm])  # (2, ny)


def _tilted_moments(s, logw):
    """For the uniform input: f = log sum_x 1/2 W^s, and the first two
    derivatives of f in s.  ``s`` has shape (r, 1)."""
    a = s[:, None, :] * logw[None]  # (r, 2, ny)
    f = logsumexp(a, axis=1) - math.log(2.0)
    pi = np.exp(a - logsumexp(a, axis=1, keepdims=True))
    mu1 = (pi * logw[None]).sum(axis=1)
    mu2 = (pi * logw[None] ** 2).sum(axis=1)
    return f, mu1, mu2 - mu1 ** 2


def e0_family(rho, snr_db: float, pts: int = 6001):
    """(E0, E0', E0'') at tilt(s) rho for uniform BPSK input, in nats.

    Derivatives are taken under the integral; the y-integral uses a dense
    trapezoid rule, which converges geometrically for these smooth,
    Gaussian-tailed integrands.
    """
    rho_arr = np.atleast_1d(np.asarray(rho, dtype=float))
    if np.any(rho_arr < 0):
        raise ValueError("rho must be nonnegative")
    A = _amp(snr_db)
    y, wq = _ygrid(A, pts)
    logw = _log_w(y, A)
    s = (1.0 / (1.0 + rho_arr))[:, None]
    f, f1, f2 = _tilted_moments(s, logw)
    one_p = 1.0 + rho_arr[:, None]
    h = one_p * f
    h1 = f - s * f1
    h2 = s ** 3 * f2
    lw = np.log(wq)[None]
    logJ = logsumexp(h + lw, axis=1)
    q = np.exp(h + lw - logJ[:, None])
    if not np.all(np.isfinite(q)):
        raise FloatingPointError("quadrature produced non-finite weights")
    m1 = (q * h1).sum(axis=1)
    m2 = (q * (h2 + h1 ** 2)).sum(axis=1)
    E0 = -logJ
    E1 = -m1
    E2 = -(m2 - m1 ** 2)
    if np.ndim(rho) == 0:
        return float(E0[0]), float(E1[0]), float(E2[0])
    return E0, E1, E2


def _omega2(rho: float, snr_db: float, pts: int = 6001) -> float:
    """Q_rho-average of the second tau-derivative of log sum_x P(x) W^tau at
    tau = 1/(1+rho)."""
    A = _amp(snr_db)
    y, wq = _ygrid(A, pts)
    logw = _log_w(y, A)
    s = np.array([[1.0 / (1.0 + rho)]])
    f, _, f2 = _tilted_moments(s, logw)
    h = (1.0 + rho) * f[0] + np.log(wq)
    q = np.exp(h - logsumexp(h))
    return float((q * f2[0]).sum())


def mutual_information(snr_db: float, pts: int = 6001) -> float:
    """I(X;Y) in nats for uniform BPSK on the AWGN channel."""
    A = _amp(snr_db)
    y, wq = _ygrid(A, pts)
    lp = -0.5 * (y - A) ** 2 - 0.5 * _LOG_2PI
    # by symmetry condition on x = +A
    dens = np.exp(lp)
    val = math.log(2.0) - np.log1p(np.exp(-2.0 * A * y))
    return float((wq * dens * val).sum())


def psi(x):
    """1/2 erfcx(|x|/sqrt 2) sign(x), with psi(0) = 1/2."""
    x = np.asarray(x, dtype=float)
    sgn = np.where(x >= 0, 1.0, -1.0)
    out = 0.5 * erfcx(np.abs(x) / math.sqrt(2.0)) * sgn
    return float(out) if out.ndim == 0 else out


@dataclass
class SaddlepointState:
    rho: float
    E0: float
    E0p: float
    E0pp: float
    rate: float
    U: float | None = None
    V: float | None = None
    theta: float | None = None
    omega2: float | None = None


def _mc_objective(rho, n, R, snr_db):
    E0, E1, E2 = e0_family(np.atleast_1d(rho), snr_db)
    U = np.maximum(-(1.0 + np.atleast_1d(rho)) * E2, 0.0)
    a = np.sqrt(n * U)
    lead = -n * (E0 - np.atleast_1d(rho) * E1)
    both = lead - n * (R - E1)
    with np.errstate(over="ignore"):
        val = np.exp(lead) * (psi(a) + psi(np.atleast_1d(rho) * a)) - np.exp(both)
    return val


def mc_bound(n: int, k: int, snr_db: float, rho_max: float = 8.0, step: float = 0.05,
             tol: float = 1e-6) -> float:
    """Saddlepoint approximation of the meta-converse lower bound."""
    if n < 1 or k < 0:
        raise ValueError("need n >= 1 and k >= 0")
    R = k * math.log(2.0) / n
    grid = np.arange(0.0, rho_max + step / 2, step)
    vals = _mc_objective(grid, n, R, snr_db)
    i = int(np.nanargmax(vals))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    f = lambda r: float(_mc_objective(np.array([r]), n, R, snr_db)[0])
    g = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = f(d)
    best = max(float(vals[i]), fc, fd)
    return float(min(1.0, max(0.0, best)))


def _theta(rho: float, n: int, omega2: float) -> float:
    return (1.0 / math.sqrt(1.0 + rho)) * ((1.0 + rho) / math.sqrt(2 * math.pi * n * omega2)) ** rho


def rcu_bound(n: int, k: int, snr_db: float, rho_max: float = 8.0, tol: float = 1e-9,
              return_state: bool = False):
    """Saddlepoint approximation of the random-coding union bound.

    The tilt solving E0'(rho) = R is found by bisection on [0, rho_max]; a
    rate above E0'(0) (capacity) returns 1 with a warning.  When the root lies
    beyond rho_max the second term is exponentially negligible and only the
    straight-line term is kept.
    """
    if n < 1 or k < 0:
        raise ValueError("need n >= 1 and k >= 0")
    R = k * math.log(2.0) / n
    d0 = e0_family(0.0, snr_db)[1]
    if R >= d0:
        warnings.warn("rate at or above capacity; RCU approximation set to 1", RuntimeWarning, stacklevel=2)
        return (1.0, None) if return_state else 1.0
    d_hi = e0_family(rho_max, snr_db)[1]
    E0_1 = e0_family(1.0, snr_db)[0]
    th1 = _theta(1.0, n, _omega2(1.0, snr_db))
    if d_hi > R:
        val = math.exp(-n * (E0_1 - R)) * th1
        state = SaddlepointState(float("inf"), float("nan"), float("nan"), float("nan"), R)
        return (min(1.0, val), state) if return_state else min(1.0, val)
    lo, hi = 0.0, rho_max
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if e0_family(mid, snr_db)[1] > R:
            lo = mid
        else:
            hi = mid
    rho = 0.5 * (lo + hi)
    E0, E1, E2 = e0_family(rho, snr_db)
    V = -E2
    om = _omega2(rho, snr_db)
    th = _theta(rho, n, om)
    a = math.sqrt(n * V)
    phi = th * (psi(rho * a) + psi((1.0 - rho) * a))
    xi = 0.0 if rho <= 1.0 else math.exp(-n * (E0_1 - R)) * th1
    val = xi + phi * math.exp(-n * (E0 - rho * R))
    val = float(min(1.0, max(0.0, val)))
    if return_state:
        return val, SaddlepointState(rho, E0, E1, E2, R, U=-(1 + rho) * E2, V=V, theta=th, omega2=om)
    return val


@dataclass
class BoundCurve:
    kind: str
    snr_db: np.ndarray
    values: np.ndarray


def bound_curves(snr_db, B=None, C=None, m: int = 0, d_tilde: int | None = None,
                 n: int | None = None, k: int | None = None) -> dict[str, BoundCurve]:
    """Evaluate every bound that the supplied inputs allow on an SNR grid."""
    grid = np.asarray(snr_db, dtype=float)
    cols: dict[str, list[float]] = {}
    for db in grid:
        A = _amp(db)
        if C is not None:
            cols.setdefault("union", []).append(union_bound(C, A))
            cols.setdefault("nn_pe1", []).append(nn_pe1(C, A, m))
            if d_tilde is not None:
                cols.setdefault("tub", []).append(tub(C, A, d_tilde))
            if B is not None and d_tilde is not None:
                cols.setdefault("nack1", []).append(nack1(B, C, A, m, d_tilde))
        if n is not None and k is not None:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                cols.setdefault("rcu", []).append(rcu_bound(n, k, db))
            cols.setdefault("mc", []).append(mc_bound(n, k, db))
    return {name: BoundCurve(name.upper(), grid, np.array(v)) for name, v in cols.items()}
