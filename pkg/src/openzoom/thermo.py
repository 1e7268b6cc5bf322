"""Pressure, equilibrium states, open pressure, entropy and the zooming margin."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import sparse
from scipy.special import logsumexp

from ._spectral import RESIDUAL_TOL, leading_eigen
from .dynamics import MapDescriptor, Potential
from .errors import (
    CapError,
    ClassificationError,
    ConvergenceError,
    InvarianceError,
    UndersamplingError,
)
from .holes import Hole, aligned_depth
from .measures import DiscretizedMeasure
from .transfer import TransferMatrix, assemble_transfer_matrix

INVARIANCE_TOL = 1e-10
ENUMERATION_CAP = 2**20
DEFAULT_EPS_GRID = (0.2, 0.1, 0.05, 0.025)
PLATEAU_TOL = 0.02
MIN_BALL_COUNT = 50


@dataclass
class PressureEstimate:
    value: float
    method: str
    resolution: int
    potential: str
    hole: Optional[str] = None
    residual: Optional[float] = None
    reducible: bool = False
    block_radii: list = field(default_factory=list)

    def row(self) -> dict:
        return {
            "method": self.method,
            "resolution": self.resolution,
            "potential": self.potential,
            "hole": self.hole or "",
            "value": f"{self.value:.12g}",
            "reducible": int(self.reducible),
        }


PRESSURE_COLUMNS = ("method", "resolution", "potential", "hole", "value", "reducible")


def _log(rho: float) -> float:
    return float(np.log(rho)) if rho > 0 else -np.inf


def pressure(T: TransferMatrix) -> PressureEstimate:
    """Log spectral radius of the transfer matrix."""
    eig = leading_eigen(T.matrix)
    return PressureEstimate(
        value=_log(eig.rho),
        method="spectral",
        resolution=T.depth,
        potential=T.potential,
        hole=None if T.hole is None else T.hole.describe(),
        residual=eig.residual,
        reducible=eig.reducible,
        block_radii=[_log(r) for r in eig.block_radii],
    )


def equilibrium_measure(T: TransferMatrix) -> DiscretizedMeasure:
    """Weights ``h_i nu_i`` from the right/left Perron vectors, with their Markov kernel.

    The kernel ``P(j -> i) = L[i, j] nu_i / (rho nu_j)`` is stationary for the
    weights; a residual above ``1e-10`` raises :class:`ConvergenceError`.
    """
    eig = leading_eigen(T.matrix)
    if eig.rho <= 0:
        raise ConvergenceError("transfer matrix has spectral radius 0; no equilibrium on the survivor set", 0.0)
    if eig.residual > RESIDUAL_TOL:
        raise ConvergenceError(f"eigenvector residual {eig.residual:.3g}", eig.residual)
    mu = eig.right * eig.left
    mu = mu / mu.sum()
    L = T.matrix.tocoo()
    nu = eig.left
    ok = (nu[L.col] > 0) & (nu[L.row] > 0)
    p = L.data[ok] * nu[L.row[ok]] / (eig.rho * nu[L.col[ok]])
    K = sparse.csr_matrix((p, (L.col[ok], L.row[ok])), shape=L.shape)
    out = DiscretizedMeasure(
        T.map,
        mu,
        depth=T.depth,
        kernel=K,
        pair_phi=T.pair_phi,
        potential=T.potential,
        label=f"eq({T.potential})",
    )
    residual = float(np.abs(K.T @ mu - mu).max())
    if residual > INVARIANCE_TOL:
        raise ConvergenceError(f"equilibrium weights are not stationary, residual {residual:.3g}", residual)
    return out


def spectral_pressure(map: MapDescriptor, phi: Potential, depth: int) -> PressureEstimate:
    return pressure(assemble_transfer_matrix(map, phi, depth))


def open_pressure(map: MapDescriptor, phi: Potential, hole: Hole, depth: int | None = None) -> PressureEstimate:
    """Pressure of the hole-masked matrix; ``-inf`` when no cycle survives."""
    depth = aligned_depth(map, hole) if depth is None else depth
    est = pressure(assemble_transfer_matrix(map, phi, depth, hole))
    est.method = "spectral_open"
    return est


# ---------------------------------------------------------------------------
# periodic orbits


@dataclass
class PeriodicPoints:
    """Fixed points of ``f^n`` indexed by their length-``n`` word."""

    map: MapDescriptor
    n: int
    chart: np.ndarray
    points: np.ndarray
    valid: np.ndarray

    def rotation(self) -> np.ndarray:
        """Index of ``f(x_w)``, i.e. of the word rotated left by one."""
        k = self.map.branch_count
        w = np.arange(self.chart.size)
        top = k ** (self.n - 1)
        return (w % top) * k + w // top

    def birkhoff(self, values: np.ndarray) -> np.ndarray:
        rot = self.rotation()
        idx = np.arange(values.size)
        total = np.zeros(values.size)
        for _ in range(self.n):
            total += values[idx]
            idx = rot[idx]
        return total

    def orbit_any(self, flags: np.ndarray) -> np.ndarray:
        rot = self.rotation()
        idx = np.arange(flags.size)
        out = np.zeros(flags.size, dtype=bool)
        for _ in range(self.n):
            out |= flags[idx]
            idx = rot[idx]
        return out


def periodic_points(map: MapDescriptor, n: int) -> PeriodicPoints:
    """All fixed points of ``f^n`` from contracting compositions of inverse branches.

    On the circle the words ``0^n`` and ``(k-1)^n`` give the same point, so
    the latter is marked invalid; ``2^n - 1`` points remain for doubling.
    """
    if not map.is_markov:
        raise CapError(f"{map.name} has no full-branch chart to enumerate periodic points")
    k = map.branch_count
    if k**n > ENUMERATION_CAP:
        raise CapError(f"{k}^{n} periodic words exceed the enumeration cap {ENUMERATION_CAP}")
    words = np.arange(k**n)
    digits = [(words // k ** (n - 1 - t)) % k for t in range(n)]
    u = np.full(words.size, 0.5)
    for _ in range(80):
        v = u
        for t in range(n - 1, -1, -1):
            nv = np.empty_like(v)
            for s in range(k):
                sel = digits[t] == s
                nv[sel] = map.chart_inverse(s, v[sel])
            v = nv
        done = np.max(np.abs(v - u)) < 1e-15
        u = v
        if done:
            break
    valid = np.ones(words.size, dtype=bool)
    if map.domain_kind == "circle":
        # the last word's point is the chart endpoint 1, i.e. the first word's point 0
        valid[-1] = False
        u = u % 1.0
    return PeriodicPoints(map=map, n=n, chart=u, points=map.from_chart(u), valid=valid)


def periodic_orbit_pressure(map: MapDescriptor, phi: Potential, n: int) -> PressureEstimate:
    """``(1/n) log sum_{f^n x = x} exp(S_n phi(x))``."""
    pp = periodic_points(map, n)
    S = pp.birkhoff(np.asarray(phi(pp.points), dtype=float).reshape(-1))
    return PressureEstimate(
        value=float(logsumexp(S[pp.valid]) / n),
        method="periodic_orbit",
        resolution=n,
        potential=phi.name,
    )


def zooming_margin(map: MapDescriptor, phi: Potential, region: Hole, n: int) -> float:
    """Periodic-orbit pressure over orbits avoiding ``region`` minus that over orbits meeting it."""
    pp = periodic_points(map, n)
    S = pp.birkhoff(np.asarray(phi(pp.points), dtype=float).reshape(-1))
    meets = pp.orbit_any(region.contains(pp.chart))
    inside = pp.valid & ~meets
    outside = pp.valid & meets
    counts = (int(inside.sum()), int(outside.sum()))
    if 0 in counts:
        raise ClassificationError(
            f"periodic orbits of period {n}: {counts[0]} avoid the region, {counts[1]} meet it", counts
        )
    return float((logsumexp(S[inside]) - logsumexp(S[outside])) / n)


# ---------------------------------------------------------------------------
# entropy


@dataclass
class EntropyEstimate:
    value: float
    eps: float
    window: tuple
    per_eps: dict
    plateau: bool
    centers: int


def bowen_counts(
    sample_orbits: np.ndarray,
    center_orbits: np.ndarray,
    distance: Callable,
    eps_grid,
    threads: int = 1,
) -> np.ndarray:
    """``counts[c, e, n-1] = #{y : d(f^i y, f^i x_c) < eps_e for i < n}``.

    Orbits are stacked with time on the first axis.  Each center filters
    the sample set progressively, so later steps touch only candidates.
    """
    eps = np.asarray(eps_grid, dtype=float)
    emax = eps.max()
    n_max = sample_orbits.shape[0]
    C = center_orbits.shape[1]

    def one(c):
        out = np.zeros((eps.size, n_max), dtype=np.int64)
        idx = np.arange(sample_orbits.shape[1])
        run = None
        for i in range(n_max):
            d = distance(sample_orbits[i, idx], center_orbits[i, c])
            run = d if run is None else np.maximum(run, d)
            keep = run < emax
            idx, run = idx[keep], run[keep]
            out[:, i] = (run[None, :] < eps[:, None]).sum(axis=1)
        return out

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(one, range(C)))
    else:
        parts = [one(c) for c in range(C)]
    return np.stack(parts)


def entropy_from_counts(counts: np.ndarray, samples: int, eps_grid, min_count: int = MIN_BALL_COUNT) -> EntropyEstimate:
    """Plateau of per-``eps`` decay slopes of Bowen-ball masses.

    For each center the usable horizon ``n_u`` is the last ``n`` whose ball
    holds at least ``min_count`` samples; the slope of ``-log count`` over
    ``[ceil(n_u/2), n_u]`` is averaged over centers with ``n_u >= 4``.
    """
    eps = list(eps_grid)
    order = np.argsort(eps)[::-1]
    per_eps = {}
    largest_usable = 0
    for e in order:
        slopes, windows = [], []
        for c in range(counts.shape[0]):
            cnt = counts[c, e]
            usable = np.flatnonzero(cnt >= min_count)
            n_u = int(usable.max()) + 1 if usable.size else 0
            largest_usable = max(largest_usable, n_u)
            if n_u < 4:
                continue
            ns = np.arange(int(np.ceil(n_u / 2)), n_u + 1)
            slopes.append(-np.polyfit(ns, np.log(cnt[ns - 1] / samples), 1)[0])
            windows.append((int(ns[0]), n_u))
        if slopes:
            per_eps[float(eps[e])] = (float(np.mean(slopes)), min(w[0] for w in windows), max(w[1] for w in windows))
    if not per_eps:
        raise UndersamplingError(
            f"every Bowen ball holds fewer than {min_count} samples beyond n = {largest_usable}", largest_usable
        )
    keys = sorted(per_eps, reverse=True)
    for a, b in zip(keys, keys[1:]):
        if abs(per_eps[a][0] - per_eps[b][0]) <= PLATEAU_TOL:
            v = per_eps[b]
            return EntropyEstimate(v[0] + 0.0, b, (v[1], v[2]), per_eps, True, counts.shape[0])
    last = keys[-1]
    v = per_eps[last]
    return EntropyEstimate(v[0] + 0.0, last, (v[1], v[2]), per_eps, False, counts.shape[0])


def brin_katok_entropy(
    map: MapDescriptor,
    sampler: Callable,
    x=None,
    eps_grid=DEFAULT_EPS_GRID,
    n_max: int = 12,
    samples: int = 1_000_000,
    seed: int = 0,
    centers: int = 32,
    threads: int = 1,
) -> EntropyEstimate:
    """Local entropy from Bowen-ball masses of ``samples`` draws of ``mu``.

    Centers are ``x`` when given, otherwise ``centers`` further draws from
    the sampler.  Random streams are split from ``seed`` independently of
    ``threads``.
    """
    s_seq, c_seq = np.random.SeedSequence(seed).spawn(2)
    ys = np.asarray(sampler(np.random.default_rng(s_seq), samples))
    xs = np.atleast_1d(np.asarray(x, dtype=float)) if x is not None else np.asarray(
        sampler(np.random.default_rng(c_seq), centers)
    )
    sample_orbits = _orbits(map.evaluate, ys, n_max)
    center_orbits = _orbits(map.evaluate, xs, n_max)
    counts = bowen_counts(sample_orbits, center_orbits, map.distance, eps_grid, threads)
    return entropy_from_counts(counts, samples, eps_grid)


def _orbits(step: Callable, x: np.ndarray, n: int) -> np.ndarray:
    out = np.empty((n,) + x.shape, dtype=x.dtype)
    out[0] = x
    for i in range(1, n):
        out[i] = step(out[i - 1])
    return out


# ---------------------------------------------------------------------------
# variational principle


def variational_defect(
    map: MapDescriptor, phi: Potential, mu: DiscretizedMeasure, P: PressureEstimate, tol: float = 1e-8
) -> float:
    """``P - (h_mu + int phi dmu)`` for an invariant discretized measure."""
    defect = mu.invariance_defect()
    if defect > tol:
        raise InvarianceError(f"measure {mu.label} is not invariant: total variation defect {defect:.3g}", defect)
    return float(P.value - (mu.entropy() + mu.integrate_potential(phi)))
