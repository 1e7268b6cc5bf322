"""Holes: finite unions of half-open arcs or intervals, with cover geometry checks."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics import MapDescriptor, circle_distance
from .errors import AlignmentError, GeometryError, PreconditionError, RadiusError

EDGE_TOL = 1e-12


@dataclass(frozen=True)
class Hole:
    """``H = union_j [p_j - r_j, p_j + r_j)``; on the circle the arcs wrap mod 1."""

    centers: tuple = ()
    radii: tuple = ()
    domain: str = "circle"
    certificate: dict = field(default_factory=dict)
    label: str = ""

    @property
    def is_empty(self) -> bool:
        return len(self.centers) == 0

    def pieces(self) -> list[tuple[float, float]]:
        """Half-open pieces ``[a, b)``; circle arcs are split at ``0`` and merged."""
        out = []
        for p, r in zip(self.centers, self.radii):
            a, b = p - r, p + r
            if self.domain == "circle":
                if b - a >= 1.0:
                    out.append((0.0, 1.0))
                    continue
                a0 = a % 1.0
                b0 = a0 + (b - a)
                if b0 > 1.0:
                    out += [(a0, 1.0), (0.0, b0 - 1.0)]
                else:
                    out.append((a0, b0))
            else:
                out.append((a, b))
        out.sort()
        merged = []
        for a, b in out:
            if merged and a <= merged[-1][1]:
                merged[-1] = (merged[-1][0], max(b, merged[-1][1]))
            else:
                merged.append((a, b))
        return merged

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.domain == "circle":
            x = x % 1.0
        inside = np.zeros(x.shape, dtype=bool)
        for a, b in self.pieces():
            inside |= (x >= a) & (x < b)
        return inside

    def measure(self) -> float:
        return float(sum(b - a for a, b in self.pieces()))

    def describe(self) -> str:
        if self.is_empty:
            return "empty"
        return "|".join(f"[{a:.12g},{b:.12g})" for a, b in self.pieces())


EMPTY_HOLE = Hole(label="empty")


def make_hole(cover, selection, r0: float, domain: str = "circle") -> Hole:
    """Hole ``union_{j in selection} B_{r_j}(p_j)`` from a cover of balls ``(p, r)``.

    Every cover radius must be below ``r0`` and every ordered pair ``i != j``
    must satisfy ``B_{r_i}(p_i) ∩ B_{r_j/2}(p_j) = ∅``, i.e.
    ``d(p_i, p_j) >= r_i + r_j/2``.
    """
    cover = [(float(p), float(r)) for p, r in cover]
    for idx, (p, r) in enumerate(cover):
        if r <= 0:
            raise RadiusError(f"ball {idx} has non-positive radius {r}")
        if r >= r0:
            raise RadiusError(f"ball {idx} has radius {r} >= r0 = {r0}")
    dist = circle_distance if domain == "circle" else (lambda a, b: abs(a - b))
    checks = []
    for i, (pi, ri) in enumerate(cover):
        for j, (pj, rj) in enumerate(cover):
            if i == j:
                continue
            d = float(dist(pi, pj))
            need = ri + rj / 2
            checks.append({"pair": (i, j), "distance": d, "required": need, "ok": d >= need})
            if d < need:
                raise GeometryError(
                    f"B_{ri:g}({pi:g}) meets B_{rj / 2:g}({pj:g}): distance {d:.6g} < {need:.6g}", pair=(i, j)
                )
    selection = list(selection)
    for s in selection:
        if not 0 <= s < len(cover):
            raise PreconditionError(f"selection index {s} outside the cover")
    chosen = [cover[s] for s in selection]
    return Hole(
        centers=tuple(p for p, _ in chosen),
        radii=tuple(r for _, r in chosen),
        domain=domain,
        certificate={"r0": r0, "radii_below_r0": True, "pairwise": checks, "selection": selection},
        label=",".join(str(s) for s in selection) or "empty",
    )


def interval_hole(intervals, domain: str = "circle", label: str | None = None) -> Hole:
    """Hole given directly as half-open intervals ``[a, b)`` (no cover certificate)."""
    intervals = [(float(a), float(b)) for a, b in intervals]
    for a, b in intervals:
        if not b > a:
            raise PreconditionError(f"hole interval [{a}, {b}) is empty or reversed")
    h = Hole(
        centers=tuple((a + b) / 2 for a, b in intervals),
        radii=tuple((b - a) / 2 for a, b in intervals),
        domain=domain,
        certificate={"source": "intervals"},
    )
    return Hole(h.centers, h.radii, domain, h.certificate, label or h.describe())


def _is_edge(value: float, edges: np.ndarray) -> bool:
    k = np.searchsorted(edges, value)
    near = [edges[i] for i in (k - 1, k) if 0 <= i < edges.size]
    return any(abs(value - e) <= EDGE_TOL for e in near)


def is_aligned(map: MapDescriptor, hole: Hole, depth: int) -> bool:
    edges = map.cylinder_edges(depth)
    return all(_is_edge(a, edges) and _is_edge(b, edges) for a, b in hole.pieces())


def aligned_depth(map: MapDescriptor, hole: Hole, max_depth: int = 20) -> int:
    """Smallest depth at which every hole endpoint is a cylinder edge."""
    if hole.is_empty:
        return 1
    for d in range(1, max_depth + 1):
        if is_aligned(map, hole, d):
            return d
    raise AlignmentError(f"hole {hole.describe()} is not a union of cylinders up to depth {max_depth}")


def hole_mask(map: MapDescriptor, hole: Hole | None, depth: int) -> np.ndarray:
    """Boolean mask of depth-``depth`` cells inside the hole (chart coordinates)."""
    lo, hi = map.cylinders(depth)
    if hole is None or hole.is_empty:
        return np.zeros(lo.size, dtype=bool)
    if not is_aligned(map, hole, depth):
        raise AlignmentError(f"hole {hole.describe()} is not a union of depth-{depth} cells")
    return hole.contains(0.5 * (lo + hi))
