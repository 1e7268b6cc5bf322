"""Measures on cylinder partitions (with a cell-transition kernel) and finite atomic measures."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import sparse

from .dynamics import MapDescriptor
from .errors import PreconditionError

NORMALIZATION_TOL = 1e-12
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)
_ATOM_GRID = 1e12


@dataclass(eq=False)
class DiscretizedMeasure:
    """A probability measure given either by cell weights or by atoms.

    Cell measures live on the depth-``depth`` cylinders of ``map`` and are
    uniform (in the chart) inside each cell.  ``kernel[j, i]`` is the
    probability of moving from cell ``j`` to cell ``i``; when absent it is
    the Ulam kernel, the share of cell ``j`` mapped onto cell ``i``.
    ``pair_phi`` optionally stores potential values on the transitions, in
    which case integrals of that potential use them directly.
    """

    map: MapDescriptor
    weights: np.ndarray
    depth: Optional[int] = None
    atoms: Optional[np.ndarray] = None
    kernel: Optional[sparse.csr_matrix] = None
    pair_phi: Optional[np.ndarray] = None
    potential: Optional[str] = None
    label: str = ""

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        if np.any(self.weights < -NORMALIZATION_TOL):
            raise PreconditionError("measure weights must be non-negative")
        self.weights = np.maximum(self.weights, 0.0)
        total = self.weights.sum()
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise PreconditionError(f"measure weights sum to {total!r}, not 1")
        if (self.atoms is None) == (self.depth is None):
            raise PreconditionError("a measure needs exactly one of depth (cells) or atoms")

    @property
    def is_atomic(self) -> bool:
        return self.atoms is not None

    @property
    def edges(self) -> Optional[np.ndarray]:
        return None if self.is_atomic else self.map.cylinder_edges(self.depth)

    @property
    def domain(self) -> str:
        return self.map.domain_kind

    def transition_kernel(self) -> sparse.csr_matrix:
        if self.kernel is None:
            self.kernel = ulam_kernel(self.map, self.depth)
        return self.kernel

    # integrals ------------------------------------------------------------

    def _quadrature(self):
        lo, hi = self.map.cylinders(self.depth)
        half = 0.5 * (hi - lo)
        u = (0.5 * (lo + hi))[:, None] + half[:, None] * _GL_NODES[None, :]
        return u, 0.5 * _GL_WEIGHTS[None, :] * np.ones_like(u)

    def integrate(self, g: Callable, chart: bool = False) -> float:
        """``int g dmu``.  With ``chart=True`` ``g`` receives chart coordinates."""
        if self.is_atomic:
            pts = self.atoms
            if chart:
                pts = self.map.to_chart(pts)
            return float(np.dot(self.weights, np.asarray(g(pts), dtype=float).reshape(-1)))
        u, qw = self._quadrature()
        pts = u.reshape(-1) if chart else self.map.from_chart(u.reshape(-1))
        vals = np.asarray(g(pts), dtype=float).reshape(u.shape)
        return float(np.dot(self.weights, (vals * qw).sum(axis=1)))

    def integrate_potential(self, phi) -> float:
        """Integral of a potential, exact on transition samples when they were stored for it."""
        if self.pair_phi is not None and self.potential == getattr(phi, "name", None):
            K = self.transition_kernel().tocoo()
            k = self.map.branch_count
            J = K.row * k + (K.col % k)
            return float(np.sum(self.weights[K.row] * K.data * self.pair_phi[J]))
        return self.integrate(phi)

    # dynamics -------------------------------------------------------------

    def pushforward(self) -> "DiscretizedMeasure":
        if self.is_atomic:
            return atomic_measure(self.map, self.map.evaluate(self.atoms), self.weights, label=f"f*{self.label}")
        w = self.transition_kernel().T @ self.weights
        return DiscretizedMeasure(
            self.map, w / w.sum(), depth=self.depth, kernel=self.kernel, label=f"f*{self.label}"
        )

    def invariance_defect(self) -> float:
        """Total variation ``||f_* mu - mu||`` on cells or atoms."""
        return total_variation(self.pushforward(), self)

    def entropy(self) -> float:
        """Entropy of the induced cell Markov chain; zero for atomic measures."""
        if self.is_atomic:
            return 0.0
        K = self.transition_kernel().tocoo()
        p = K.data
        terms = np.where(p > 0, -p * np.log(np.where(p > 0, p, 1.0)), 0.0)
        return float(np.sum(self.weights[K.row] * terms))

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.is_atomic:
            idx = rng.choice(self.weights.size, size=size, p=self.weights)
            return self.atoms[idx]
        lo, hi = self.map.cylinders(self.depth)
        idx = rng.choice(self.weights.size, size=size, p=self.weights)
        u = lo[idx] + (hi[idx] - lo[idx]) * rng.random(size)
        return self.map.from_chart(u)


def _atom_keys(points: np.ndarray) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    return np.round(pts * _ATOM_GRID).astype(np.int64)


def atomic_measure(map: MapDescriptor, points, weights=None, label: str = "") -> DiscretizedMeasure:
    """Finite atomic measure; coincident atoms (on a 1e-12 grid) are merged."""
    pts = np.atleast_1d(np.asarray(points, dtype=float))
    if map.domain_kind == "circle":
        pts = pts % 1.0
    w = np.full(pts.shape[0], 1.0 / pts.shape[0]) if weights is None else np.asarray(weights, dtype=float)
    keys = _atom_keys(pts)
    if map.domain_kind == "circle":
        keys = keys % int(_ATOM_GRID)
    keys2 = keys.reshape(keys.shape[0], -1)
    uniq, first, inv = np.unique(keys2, axis=0, return_index=True, return_inverse=True)
    merged = np.zeros(uniq.shape[0])
    np.add.at(merged, inv.reshape(-1), w)
    return DiscretizedMeasure(map, merged / merged.sum(), atoms=pts[first], label=label)


def dirac(map: MapDescriptor, point, label: str | None = None) -> DiscretizedMeasure:
    return atomic_measure(map, [point], label=label or f"delta({point})")


def periodic_orbit_measure(map: MapDescriptor, point, period: int) -> DiscretizedMeasure:
    pts = [float(point)]
    for _ in range(period - 1):
        pts.append(float(map.evaluate(np.asarray(pts[-1]))))
    return atomic_measure(map, pts, label=f"orbit({point},{period})")


def total_variation(mu: DiscretizedMeasure, nu: DiscretizedMeasure) -> float:
    if mu.is_atomic != nu.is_atomic:
        raise PreconditionError("total variation needs two measures of the same type")
    if not mu.is_atomic:
        if mu.depth != nu.depth:
            raise PreconditionError("total variation needs a common partition")
        return float(np.abs(mu.weights - nu.weights).sum())
    table: dict = {}
    for m, sign in ((mu, 1.0), (nu, -1.0)):
        keys = _atom_keys(m.atoms).reshape(m.atoms.shape[0], -1)
        if m.map.domain_kind == "circle":
            keys = keys % int(_ATOM_GRID)
        for key, w in zip((tuple(r) for r in keys), m.weights):
            table[key] = table.get(key, 0.0) + sign * w
    return float(sum(abs(v) for v in table.values()))


def ulam_kernel(map: MapDescriptor, depth: int) -> sparse.csr_matrix:
    """``K[j, i] = m(J) / m(j)`` for the child ``J`` of cell ``j`` mapped onto cell ``i``."""
    k = map.branch_count
    M = k**depth
    lo, hi = map.cylinders(depth)
    clo, chi = map.cylinders(depth + 1)
    J = np.arange(k * M)
    j = J // k
    i = J % M
    p = (chi - clo) / (hi - lo)[j]
    return sparse.csr_matrix((p, (j, i)), shape=(M, M))


def lebesgue_measure(map: MapDescriptor, depth: int) -> DiscretizedMeasure:
    """Chart-Lebesgue measure on the depth-``depth`` cells."""
    lo, hi = map.cylinders(depth)
    w = hi - lo
    return DiscretizedMeasure(map, w / w.sum(), depth=depth, kernel=ulam_kernel(map, depth), label="lebesgue")


def cell_measure(map: MapDescriptor, depth: int, weights, label: str = "") -> DiscretizedMeasure:
    w = np.asarray(weights, dtype=float)
    return DiscretizedMeasure(map, w / w.sum(), depth=depth, label=label)


def uniform_on(map: MapDescriptor, depth: int, a: float, b: float) -> DiscretizedMeasure:
    """Chart-uniform measure on ``[a, b)``, which must be a union of cells."""
    lo, hi = map.cylinders(depth)
    mid = 0.5 * (lo + hi)
    w = np.where((mid >= a) & (mid < b), hi - lo, 0.0)
    if w.sum() == 0:
        raise PreconditionError(f"[{a}, {b}) contains no depth-{depth} cell")
    return cell_measure(map, depth, w, label=f"uniform[{a},{b})")


def bernoulli_measure(map: MapDescriptor, p, depth: int) -> DiscretizedMeasure:
    """Bernoulli measure with symbol probabilities ``p`` on the depth-``depth`` cells."""
    p = np.asarray(p, dtype=float)
    k = map.branch_count
    if p.size != k or abs(p.sum() - 1) > NORMALIZATION_TOL or np.any(p < 0):
        raise PreconditionError("Bernoulli weights must be a probability vector over the alphabet")
    M = k**depth
    words = np.arange(M)
    w = np.ones(M)
    for t in range(depth):
        w *= p[(words // k ** (depth - 1 - t)) % k]
    J = np.arange(k * M)
    K = sparse.csr_matrix((p[J % k], (J // k, J % M)), shape=(M, M))
    return DiscretizedMeasure(map, w / w.sum(), depth=depth, kernel=K, label=f"bernoulli{tuple(p.tolist())}")


def bernoulli_sampler(p, k: int | None = None, digits: int = 53) -> Callable:
    """Sampler of the Bernoulli measure realised in the base-``k`` chart ``[0, 1)``."""
    p = np.asarray(p, dtype=float)
    k = k or p.size
    cum = np.cumsum(p)[:-1]
    scale = float(k) ** -np.arange(1, digits + 1)

    def sample(rng: np.random.Generator, size: int) -> np.ndarray:
        out = np.empty(size)
        step = 65536
        for s in range(0, size, step):
            m = min(step, size - s)
            d = np.searchsorted(cum, rng.random((m, digits)), side="right")
            out[s : s + m] = d @ scale
        return out

    return sample


def measure_sampler(mu: DiscretizedMeasure) -> Callable:
    return lambda rng, size: mu.sample(rng, size)


def constant_sampler(point) -> Callable:
    return lambda rng, size: np.full(size, float(point))
