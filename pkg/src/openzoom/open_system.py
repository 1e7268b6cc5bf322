"""Open systems: escape rates, first-return inducing schemes, induced potentials."""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ._spectral import leading_eigen
from .dynamics import MapDescriptor, Potential, geometric_potential
from .errors import (
    CapabilityError,
    CapError,
    CoverageError,
    DegenerateEstimateError,
    DomainError,
    EvaluationError,
    PreconditionError,
)
from .holes import EMPTY_HOLE, Hole, aligned_depth, hole_mask, interval_hole, is_aligned, make_hole  # noqa: F401
from .transfer import assemble_transfer_matrix

ENUMERATION_CAP = 2**20
MC_CHUNKS = 64
MIN_SURVIVORS = 100


@dataclass
class EscapeEstimate:
    method: str
    value: float
    horizon: int
    sample_count: Optional[int] = None
    matrix_size: Optional[int] = None
    half_width: Optional[float] = None
    seed: Optional[int] = None
    hole: str = ""
    window: Optional[tuple] = None
    survivors: Optional[np.ndarray] = field(default=None, repr=False)

    def row(self) -> dict:
        return {
            "method": self.method,
            "hole": self.hole,
            "n": self.horizon,
            "value": f"{self.value:.12g}",
            "half_width": "" if self.half_width is None else f"{self.half_width:.6g}",
            "seed": "" if self.seed is None else self.seed,
        }


ESCAPE_COLUMNS = ("method", "hole", "n", "value", "half_width", "seed")


def lebesgue_sampler(map: MapDescriptor) -> Callable:
    lo, hi = map.bounds

    def sample(rng: np.random.Generator, size: int) -> np.ndarray:
        return lo + (hi - lo) * rng.random(size)

    return sample


def _survivor_counts(map, hole, sampler, n_max, size, seed_seq) -> np.ndarray:
    rng = np.random.default_rng(seed_seq)
    x = sampler(rng, size)
    counts = np.zeros(n_max + 1, dtype=np.int64)
    counts[0] = x.shape[0]
    for n in range(1, n_max + 1):
        x = x[~hole.contains(x)]
        counts[n] = x.shape[0]
        if x.shape[0] == 0:
            break
        x = map.evaluate(x)
    return counts


def escape_rate_mc(
    map: MapDescriptor,
    hole: Hole,
    sampler: Callable | None = None,
    n_max: int = 20,
    samples: int = 1_000_000,
    seed: int = 0,
    threads: int = 1,
) -> EscapeEstimate:
    """Monte Carlo escape rate from survivor counts.

    ``counts[n]`` is the number of samples whose first ``n`` iterates avoid
    the hole.  The estimate is the maximum-likelihood constant hazard over
    the window ``[n_end // 2, n_end]``, where ``n_end`` is the last time
    (at most ``n_max``) with more than 100 survivors; it equals the slope of
    ``-log counts`` across the window.  Samples are drawn in a fixed number
    of independently seeded chunks, so results do not depend on ``threads``.
    """
    if n_max < 2:
        raise PreconditionError("n_max must be at least 2")
    sampler = sampler or lebesgue_sampler(map)
    chunks = min(MC_CHUNKS, samples)
    sizes = [samples // chunks + (1 if c < samples % chunks else 0) for c in range(chunks)]
    seqs = np.random.SeedSequence(seed).spawn(chunks)
    work = [(map, hole, sampler, n_max, s, q) for s, q in zip(sizes, seqs)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(lambda a: _survivor_counts(*a), work))
    else:
        parts = [_survivor_counts(*a) for a in work]
    counts = np.sum(parts, axis=0)
    good = np.flatnonzero(counts > MIN_SURVIVORS)
    n_end = int(good.max()) if good.size else 0
    if n_end < 2:
        raise DegenerateEstimateError(
            f"only {int(counts[min(2, n_max)])} samples survive 2 steps; use a smaller hole or more samples"
        )
    n_end = min(n_end, n_max)
    n_start = n_end // 2
    at_risk = float(counts[n_start:n_end].sum())
    survived = float(counts[n_start + 1 : n_end + 1].sum())
    q = survived / at_risk
    value = -np.log(q)
    half = 1.96 * np.sqrt((1 - q) / (q * at_risk)) if q < 1 else 3.0 / at_risk
    return EscapeEstimate(
        method="monte_carlo",
        value=float(value) + 0.0,
        horizon=n_end,
        sample_count=samples,
        half_width=float(half),
        seed=seed,
        hole=hole.describe(),
        window=(n_start, n_end),
        survivors=counts,
    )


def escape_rate_spectral(map: MapDescriptor, hole: Hole, depth: int | None = None) -> EscapeEstimate:
    """``-log rho`` of the Lebesgue transfer matrix with hole cells deleted."""
    depth = aligned_depth(map, hole) if depth is None else depth
    T = assemble_transfer_matrix(map, geometric_potential(map, 1.0), depth, hole)
    eig = leading_eigen(T.matrix, warn=False)
    value = np.inf if eig.rho <= 0 else -np.log(eig.rho)
    return EscapeEstimate(
        method="spectral",
        value=float(value) + 0.0,
        horizon=depth,
        matrix_size=int((~T.hole_mask).sum()),
        hole=hole.describe(),
    )


def escape_rate_exact(map: MapDescriptor, hole: Hole, n: int = 20) -> EscapeEstimate:
    """Escape rate from the exact Lebesgue mass of surviving depth-``n`` cylinders.

    A cylinder of depth ``n`` decides hole membership of its first
    ``n - d + 1`` iterates (``d`` the aligned hole depth); the rate is the
    least-squares decay slope of the surviving mass over ``[n/2, n]``.
    """
    d = aligned_depth(map, hole)
    k = map.branch_count
    if k**n > ENUMERATION_CAP:
        raise CapError(f"{k}^{n} cylinders exceed the enumeration cap {ENUMERATION_CAP}")
    if n < d + 3:
        raise PreconditionError("cylinder depth too small for the hole")
    mask = hole_mask(map, hole, d)
    lo, hi = map.cylinders(n)
    mass = hi - lo
    w = np.arange(k**n)
    alive = np.ones(w.size, dtype=bool)
    steps, log_mass = [], []
    for j in range(n - d + 1):
        alive &= ~mask[(w // k ** (n - j - d)) % k**d]
        steps.append(j + 1)
        log_mass.append(np.log(mass[alive].sum()) if alive.any() else -np.inf)
    steps, log_mass = np.array(steps), np.array(log_mass)
    win = steps >= steps[-1] // 2
    if not np.all(np.isfinite(log_mass[win])):
        return EscapeEstimate(method="exact_cylinder", value=np.inf, horizon=n, hole=hole.describe())
    slope = np.polyfit(steps[win], log_mass[win], 1)[0]
    return EscapeEstimate(method="exact_cylinder", value=float(-slope), horizon=n, hole=hole.describe())


# ---------------------------------------------------------------------------
# inducing schemes


@dataclass
class InducingScheme:
    """First-return cells of ``Y`` with return times and branch itineraries."""

    map: MapDescriptor
    base: tuple
    hole: Hole | None
    cells: np.ndarray
    return_times: np.ndarray
    itineraries: list
    coverage: float
    R_max: int
    certified: Optional[bool] = None

    def __len__(self):
        return len(self.itineraries)

    def cell_of(self, x) -> np.ndarray:
        """Index of the cell containing each point, ``-1`` outside all cells."""
        u = np.atleast_1d(np.asarray(self.map.to_chart(x), dtype=float))
        order = np.argsort(self.cells[:, 0])
        lo = self.cells[order, 0]
        pos = np.searchsorted(lo, u, side="right") - 1
        idx = np.where(pos >= 0, order[np.clip(pos, 0, None)], -1)
        inside = (pos >= 0) & (u < self.cells[np.clip(idx, 0, None), 1])
        return np.where(inside, idx, -1)

    def inverse_branch(self, i: int, u):
        """Chart inverse of ``f^R`` on cell ``i``: maps the base onto the cell."""
        v = np.asarray(u, dtype=float)
        for s in reversed(self.itineraries[i]):
            v = self.map.chart_inverse(s, v)
        return v

    def to_json(self) -> str:
        return json.dumps(
            {
                "map": self.map.name,
                "base": list(self.base),
                "hole": None if self.hole is None else self.hole.describe(),
                "cells": self.cells.tolist(),
                "R": self.return_times.tolist(),
                "coverage": self.coverage,
            }
        )

    def certify(self, mesh: int = 8) -> bool:
        """Check on a mesh that ``f^R`` maps every cell increasingly into the base and avoids the hole."""
        a, b = self.base
        t = (np.arange(mesh) + 0.5) / mesh
        for (lo, hi), R in zip(self.cells, self.return_times):
            x = self.map.from_chart(lo + (hi - lo) * t)
            for j in range(int(R)):
                if self.hole is not None and np.any(self.hole.contains(self.map.to_chart(x))):
                    return False
                x = self.map.evaluate(x)
            u = np.asarray(self.map.to_chart(x), dtype=float)
            if np.any(u < a - 1e-9) or np.any(u >= b + 1e-9) or np.any(np.diff(u) <= 0):
                return False
        return True


def _interval_relation(lo, hi, pieces):
    """0 disjoint, 1 contained, 2 partial overlap with a union of half-open pieces."""
    covered = 0.0
    for a, b in pieces:
        covered += max(0.0, min(hi, b) - max(lo, a))
    if covered <= 1e-15 * max(1.0, hi - lo):
        return 0
    if covered >= (hi - lo) * (1 - 1e-12):
        return 1
    return 2


def build_first_return_scheme(
    map: MapDescriptor,
    base: tuple,
    hole: Hole | None = None,
    R_max: int = 20,
    min_coverage: float = 0.0,
    cap: int = ENUMERATION_CAP,
) -> InducingScheme:
    """First-return scheme over a cylinder ``base`` built backwards from the base.

    Level ``k`` holds the intervals ``J`` with ``f^k(J) = base`` whose
    iterates ``1..k-1`` lie outside the base and the hole.  Preimages
    inside the base become cells with ``R = k``; preimages meeting the hole
    are discarded (their first return is not a full branch that avoids it).
    """
    if not map.is_markov:
        raise CapabilityError(f"{map.name} has no full-branch chart")
    a, b = float(base[0]), float(base[1])
    if not 0 <= a < b <= 1:
        raise PreconditionError("base must be a chart interval inside [0, 1)")
    holes = [] if hole is None or hole.is_empty else hole.pieces()
    frontier = [(a, b, ())]
    cells, times, its = [], [], []
    for k in range(1, R_max + 1):
        nxt = []
        for lo, hi, word in frontier:
            for s in range(map.branch_count):
                plo = float(map.chart_inverse(s, lo))
                phi = float(map.chart_inverse(s, hi))
                w = (s,) + word
                in_hole = _interval_relation(plo, phi, holes)
                in_base = _interval_relation(plo, phi, [(a, b)])
                if in_hole or in_base == 2:
                    continue
                if in_base == 1:
                    cells.append((plo, phi))
                    times.append(k)
                    its.append(w)
                else:
                    nxt.append((plo, phi, w))
        frontier = nxt
        if len(cells) + len(frontier) > cap:
            partial = _scheme(map, (a, b), hole, cells, times, its, R_max)
            raise CapError(f"inducing scheme enumeration exceeded {cap} intervals at R = {k}", partial=partial)
        if not frontier:
            break
    scheme = _scheme(map, (a, b), hole, cells, times, its, R_max)
    if scheme.coverage < min_coverage:
        raise CoverageError(f"scheme covers {scheme.coverage:.6g} of the base, below {min_coverage}", scheme.coverage)
    if len(scheme) <= 4096:
        scheme.certified = scheme.certify()
    return scheme


def _scheme(map, base, hole, cells, times, its, R_max) -> InducingScheme:
    arr = np.array(cells, dtype=float).reshape(-1, 2)
    cov = float((arr[:, 1] - arr[:, 0]).sum() / (base[1] - base[0])) if arr.size else 0.0
    return InducingScheme(
        map=map,
        base=base,
        hole=hole,
        cells=arr,
        return_times=np.array(times, dtype=int),
        itineraries=list(its),
        coverage=cov,
        R_max=R_max,
    )


def _induced_sums(scheme: InducingScheme, phi: Potential, x: np.ndarray, cell: np.ndarray) -> np.ndarray:
    R = scheme.return_times[cell]
    total = np.zeros(x.shape[0])
    pts = x
    for j in range(int(R.max()) if R.size else 0):
        active = j < R
        total += np.where(active, phi(pts), 0.0)
        pts = scheme.map.evaluate(pts)
    return total


def induced_potential(scheme: InducingScheme, phi: Potential, x) -> float:
    """Birkhoff sum of ``phi`` over the excursion of ``x`` until its return."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    cell = scheme.cell_of(x)
    if np.any(cell < 0):
        raise DomainError(f"point {x[cell < 0][0]:.17g} lies in no cell of the scheme")
    out = _induced_sums(scheme, phi, x, cell)
    return float(out[0]) if out.size == 1 else out


@dataclass
class HolderReport:
    variations: np.ndarray
    A: float
    theta: float
    passed: bool
    cylinders: list


def local_holder_variation(
    scheme: InducingScheme,
    phi: Potential,
    N: int = 10,
    max_branches: int | None = 2,
    cap: int = ENUMERATION_CAP,
    mesh: int = 5,
) -> HolderReport:
    """Variations ``V_n`` of the induced potential on depth-``n`` cylinders of the return map.

    Only the ``max_branches`` cells with the smallest return times are used
    as symbols.  ``(A, theta)`` come from a log-linear fit on the nonzero
    ``V_n``; identically vanishing variations certify trivially.
    """
    order = np.argsort(scheme.return_times, kind="stable")
    symbols = order[:max_branches] if max_branches else order
    a, b = scheme.base
    t = (np.arange(mesh) + 0.5) / mesh
    V = np.zeros(N)
    counts = []
    lo = np.array([a])
    hi = np.array([b])
    for n in range(1, N + 1):
        if lo.size * len(symbols) > cap:
            raise CapError(
                f"{lo.size * len(symbols)} cylinders at depth {n} exceed the cap {cap}",
                partial=HolderReport(V[: n - 1], np.nan, np.nan, False, counts),
            )
        new_lo = np.concatenate([scheme.inverse_branch(int(i), lo) for i in symbols])
        new_hi = np.concatenate([scheme.inverse_branch(int(i), hi) for i in symbols])
        first = np.repeat(symbols, lo.size)
        lo, hi = new_lo, new_hi
        u = lo[:, None] + (hi - lo)[:, None] * t[None, :]
        x = scheme.map.from_chart(u.reshape(-1))
        cell = np.repeat(first, mesh)
        vals = _induced_sums(scheme, phi, np.asarray(x), cell).reshape(-1, mesh)
        V[n - 1] = float((vals.max(axis=1) - vals.min(axis=1)).max())
        counts.append(lo.size)
    nz = np.flatnonzero(V > 1e-13)
    if nz.size >= 2:
        slope, icpt = np.polyfit(nz + 1, np.log(V[nz]), 1)
        A, theta = float(np.exp(icpt)), float(np.exp(slope))
        passed = 0 < theta < 1
    else:
        A = float(V.max())
        theta = 0.0
        passed = True
    return HolderReport(V, A, theta, passed, counts)


def backward_separation_distance(map: MapDescriptor, F, n: int) -> float:
    """``d(F, union_{1<=j<=n} f^-j(F) minus F)``; ``inf`` when nothing else is reached."""
    if map.branch_inverse is None:
        raise CapabilityError(f"{map.name} has no enumerable preimages")
    F = np.atleast_1d(np.asarray(F, dtype=float))
    level = F.copy()
    found = []
    for j in range(1, n + 1):
        pre = []
        for s in range(map.branch_count):
            try:
                pre.append(np.asarray(map.branch_inverse(s, level), dtype=float))
            except EvaluationError:
                ok = [y for y in level if _has_preimage(map, s, y)]
                if ok:
                    pre.append(np.asarray(map.branch_inverse(s, np.array(ok)), dtype=float))
        level = np.unique(np.concatenate(pre)) if pre else np.array([])
        if level.size > ENUMERATION_CAP:
            raise CapError(f"preimage set exceeds {ENUMERATION_CAP} points at step {j}")
        found.append(level)
    pts = np.concatenate(found) if found else np.array([])
    if pts.size == 0:
        return np.inf
    d = map.distance(pts[:, None], F[None, :])
    others = pts[d.min(axis=1) > 1e-12]
    if others.size == 0:
        return np.inf
    return float(map.distance(others[:, None], F[None, :]).min())


def _has_preimage(map, s, y) -> bool:
    try:
        map.branch_inverse(s, np.array([y]))
        return True
    except EvaluationError:
        return False
