"""Ulam-type transfer matrices over cylinder partitions of Markov maps."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .dynamics import MapDescriptor, Potential
from .errors import DiscretizationError, EvaluationError
from .holes import Hole, hole_mask


@dataclass(eq=False)
class TransferMatrix:
    """``L[i, j] = exp(phi(x_ji))`` for every branch mapping cell ``j`` onto cell ``i``.

    ``x_ji`` is the preimage of the midpoint of cell ``i`` inside cell ``j``;
    ``pair_source``/``pair_target``/``pair_phi`` list these transitions.
    Cells in the hole have their rows and columns zeroed.
    """

    map: MapDescriptor
    depth: int
    matrix: sparse.csr_matrix
    edges: np.ndarray
    potential: str
    hole: Hole | None
    hole_mask: np.ndarray
    pair_source: np.ndarray
    pair_target: np.ndarray
    pair_phi: np.ndarray

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    @property
    def masses(self) -> np.ndarray:
        """Chart length of every cell."""
        return np.diff(self.edges)

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def lebesgue_normalized(self) -> sparse.csr_matrix:
        """``N[i, j] = m_i L[i, j] / m_j``; column-stochastic for ``-log|f'|`` on linear branches."""
        m = self.masses
        return sparse.diags(m) @ self.matrix @ sparse.diags(1.0 / m)

    def coordinate_text(self) -> str:
        coo = self.matrix.tocoo()
        order = np.lexsort((coo.col, coo.row))
        lines = [f"# {self.size} {self.size} {coo.nnz} {self.map.name} depth={self.depth} phi={self.potential}"]
        lines += [f"{coo.row[k]} {coo.col[k]} {coo.data[k]:.17g}" for k in order]
        return "\n".join(lines) + "\n"


def assemble_transfer_matrix(
    map: MapDescriptor, phi: Potential, depth: int, hole: Hole | None = None
) -> TransferMatrix:
    if not map.is_markov:
        raise DiscretizationError(f"{map.name} has no Markov partition to refine")
    if depth < 1:
        raise DiscretizationError("depth must be at least 1")
    k = map.branch_count
    M = k**depth
    samples = map.pair_samples(depth)
    vals = np.asarray(phi(samples), dtype=float).reshape(-1)
    if not np.all(np.isfinite(vals)):
        bad = int(np.flatnonzero(~np.isfinite(vals))[0])
        raise EvaluationError(f"potential {phi.name} is not finite at transfer sample {bad}", index=bad)
    J = np.arange(k * M)
    source = J // k
    target = J % M
    mask = hole_mask(map, hole, depth)
    keep = ~(mask[source] | mask[target])
    L = sparse.csr_matrix((np.exp(vals[keep]), (target[keep], source[keep])), shape=(M, M))
    return TransferMatrix(
        map=map,
        depth=depth,
        matrix=L,
        edges=map.cylinder_edges(depth),
        potential=phi.name,
        hole=hole,
        hole_mask=mask,
        pair_source=source,
        pair_target=target,
        pair_phi=vals,
    )
