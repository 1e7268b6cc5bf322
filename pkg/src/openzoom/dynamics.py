"""Map zoo: self-describing dynamical systems, potentials and skew products.

Every map is a :class:`MapDescriptor`.  One-dimensional maps with increasing
full branches (the doubling map, piecewise-linear Markov maps, full shifts)
additionally expose a *chart*: a coordinate in ``[0, 1)`` in which depth-``d``
cylinders are intervals obtained by composing inverse branches.  The
transfer-operator code in :mod:`openzoom.thermo` only talks to that chart.

Symbol sequences are ``uint8`` arrays whose last axis has the truncation
depth ``N``; the shift drops the first symbol and pads with ``0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import (
    ContractionError,
    CriticalProximityError,
    EvaluationError,
    FixedPointError,
    InvarianceError,
    MetricError,
    PreconditionError,
)

CRITICAL_TOL = 1e-10
INVERSE_TOL = 1e-12


def circle_distance(a, b):
    d = np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)) % 1.0
    return np.minimum(d, 1.0 - d)


def _abs_distance(a, b):
    return np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))


@dataclass(frozen=True, eq=False)
class MapDescriptor:
    """A dynamical system with enough structure for every module downstream.

    ``derivative`` returns the signed slope for 1-D maps and the Jacobian
    (shape ``(..., 2, 2)``) for the 2-D Viana family.  Maps on symbol
    spaces have no derivative.  ``chart_inverse`` is present exactly when the
    map has increasing full branches in its chart, i.e. a Markov partition
    refinable to any depth.
    """

    name: str
    domain_kind: str
    bounds: tuple
    evaluate: Callable[[np.ndarray], np.ndarray]
    branch_count: int
    branch_inverse: Optional[Callable[[int, np.ndarray], np.ndarray]] = None
    branch_of: Optional[Callable[[np.ndarray], np.ndarray]] = None
    derivative: Optional[Callable[[np.ndarray], np.ndarray]] = None
    critical_set: tuple = ()
    critical_distance: Optional[Callable[[np.ndarray], np.ndarray]] = None
    metric: Callable = circle_distance
    chart_inverse: Optional[Callable[[int, np.ndarray], np.ndarray]] = None
    to_chart: Callable[[np.ndarray], np.ndarray] = lambda x: np.asarray(x, dtype=float)
    from_chart: Callable[[np.ndarray], np.ndarray] = lambda u: np.asarray(u, dtype=float)
    circle_factor: Optional[int] = None
    params: dict = field(default_factory=dict)
    _cache: dict = field(default_factory=dict, repr=False)

    def __call__(self, x):
        return self.evaluate(x)

    @property
    def markov_partition(self):
        """Depth-1 cells as ``(lo, hi)`` pairs, or ``None`` for non-Markov maps."""
        if self.chart_inverse is None:
            return None
        lo, hi = self.cylinders(1)
        return list(zip(lo.tolist(), hi.tolist()))

    @property
    def is_markov(self) -> bool:
        return self.chart_inverse is not None

    def distance(self, a, b):
        return self.metric(a, b)

    def cylinders(self, depth: int):
        """Chart intervals ``(lo, hi)`` of the ``k**depth`` cylinders, lexicographic order."""
        if self.chart_inverse is None:
            from .errors import DiscretizationError

            raise DiscretizationError(f"{self.name} has no Markov partition")
        key = ("cyl", depth)
        if key not in self._cache:
            lo = np.array([0.0])
            hi = np.array([1.0])
            for _ in range(depth):
                lo = np.concatenate([self.chart_inverse(s, lo) for s in range(self.branch_count)])
                hi = np.concatenate([self.chart_inverse(s, hi) for s in range(self.branch_count)])
            self._cache[key] = (lo, hi)
        return self._cache[key]

    def cylinder_edges(self, depth: int) -> np.ndarray:
        lo, hi = self.cylinders(depth)
        return np.append(lo, hi[-1])

    def cylinder_index(self, x, depth: int) -> np.ndarray:
        u = np.asarray(self.to_chart(x), dtype=float)
        lo, _ = self.cylinders(depth)
        idx = np.searchsorted(lo, u, side="right") - 1
        return np.clip(idx, 0, lo.size - 1)

    def pair_samples(self, depth: int):
        """One point in each depth-``(depth+1)`` cylinder ``[a w]``.

        The point is the branch-``a`` preimage of the chart midpoint of the
        depth-``depth`` cell ``[w]``; these are the samples at which
        potentials enter the transfer matrix.
        """
        key = ("pairs", depth)
        if key not in self._cache:
            lo, hi = self.cylinders(depth)
            mid = 0.5 * (lo + hi)
            u = np.concatenate([self.chart_inverse(s, mid) for s in range(self.branch_count)])
            self._cache[key] = self.from_chart(u)
        return self._cache[key]


# ---------------------------------------------------------------------------
# zoo


def piecewise_linear_map(breaks, name: str | None = None) -> MapDescriptor:
    """Full-branch piecewise-linear circle map with the given interior breaks.

    Branch ``i`` maps ``[c_i, c_{i+1})`` linearly onto ``[0, 1)``.  With one
    break at ``c`` the slopes are ``1/c`` and ``1/(1-c)``.
    """
    c = np.concatenate([[0.0], np.sort(np.asarray(breaks, dtype=float)), [1.0]])
    if np.any(np.diff(c) <= 0):
        raise PreconditionError("breaks must be strictly inside (0, 1)")
    widths = np.diff(c)
    k = widths.size

    def branch_of(x):
        x = np.asarray(x, dtype=float) % 1.0
        return np.clip(np.searchsorted(c, x, side="right") - 1, 0, k - 1)

    def evaluate(x):
        x = np.asarray(x, dtype=float) % 1.0
        b = branch_of(x)
        return ((x - c[b]) / widths[b]) % 1.0

    def inverse(i, y):
        return c[i] + np.asarray(y, dtype=float) * widths[i]

    def derivative(x):
        return 1.0 / widths[branch_of(x)]

    return MapDescriptor(
        name=name or f"pl{tuple(np.round(c[1:-1], 6).tolist())}",
        domain_kind="circle",
        bounds=(0.0, 1.0),
        evaluate=evaluate,
        branch_count=k,
        branch_inverse=inverse,
        branch_of=branch_of,
        derivative=derivative,
        chart_inverse=inverse,
        params={"breaks": c[1:-1].tolist()},
    )


def doubling_map() -> MapDescriptor:
    """``x -> 2x mod 1`` on the circle, evaluated exactly in binary."""

    def evaluate(x):
        return np.mod(2.0 * np.asarray(x, dtype=float), 1.0)

    def inverse(i, y):
        return (np.asarray(y, dtype=float) + i) / 2.0

    def branch_of(x):
        return (np.asarray(x, dtype=float) % 1.0 >= 0.5).astype(int)

    def derivative(x):
        return np.full(np.shape(x), 2.0)

    return MapDescriptor(
        name="doubling",
        domain_kind="circle",
        bounds=(0.0, 1.0),
        evaluate=evaluate,
        branch_count=2,
        branch_inverse=inverse,
        branch_of=branch_of,
        derivative=derivative,
        chart_inverse=inverse,
        circle_factor=2,
    )


def quadratic_map(a0: float = 2.0) -> MapDescriptor:
    """``Q(x) = a0 - x**2`` on its invariant interval ``[-beta, beta]``."""
    if not 0.0 < a0 <= 2.0:
        raise PreconditionError("quadratic map needs a0 in (0, 2]")
    beta = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * a0))

    def evaluate(x):
        x = np.asarray(x, dtype=float)
        return a0 - x * x

    def inverse(i, y):
        y = np.asarray(y, dtype=float)
        if np.any(y > a0 + INVERSE_TOL):
            raise EvaluationError("point outside the image of the quadratic map")
        r = np.sqrt(np.maximum(a0 - y, 0.0))
        return -r if i == 0 else r

    def branch_of(x):
        return (np.asarray(x, dtype=float) >= 0.0).astype(int)

    def derivative(x):
        return -2.0 * np.asarray(x, dtype=float)

    def crit_dist(x):
        return np.abs(np.asarray(x, dtype=float))

    return MapDescriptor(
        name="quadratic",
        domain_kind="interval",
        bounds=(-beta, beta),
        evaluate=evaluate,
        branch_count=2,
        branch_inverse=inverse,
        branch_of=branch_of,
        derivative=derivative,
        critical_set=(0.0,),
        critical_distance=crit_dist,
        metric=_abs_distance,
        params={"a0": a0},
    )


def _viana_trapping_interval(a0: float, alpha: float, grid: int = 1000):
    """Half-width ``beta`` of ``I = [-beta, beta]`` with ``f(S^1 x I)`` inside ``int I``.

    Candidates are scanned on a grid of half-widths; the one with the largest
    interior margin is then re-verified on a ``grid x grid`` mesh of
    ``S^1 x I``.
    """
    theta = np.arange(grid) / grid
    a = a0 + alpha * np.sin(2 * np.pi * theta)
    betas = np.linspace(0.01, 1.999, 2000)
    # q ranges over [min a - beta^2, max a] on S^1 x [-beta, beta]
    margin = np.minimum(betas - a.max(), a.min() - betas**2 + betas)
    best = int(np.argmax(margin))
    beta = betas[best]
    xs = np.linspace(-beta, beta, grid)
    q = a[:, None] - xs[None, :] ** 2
    bad = np.argwhere((q <= -beta) | (q >= beta))
    if bad.size:
        i, j = bad[0]
        raise InvarianceError(
            f"no trapping interval: grid point (theta={theta[i]:.6g}, x={xs[j]:.6g}) escapes",
            witness=(float(theta[i]), float(xs[j])),
        )
    return float(beta), float(margin[best])


def build_viana_map(d: int = 16, a0: float = 1.8, alpha: float = 0.01) -> MapDescriptor:
    """Viana skew map ``(theta, x) -> (d*theta mod 1, a0 + alpha*sin(2 pi theta) - x**2)``."""
    if int(d) != d or d < 16:
        raise PreconditionError(f"Viana maps need an integer d >= 16, got {d}")
    if not 1.0 < a0 < 2.0:
        raise PreconditionError(f"a0 must lie in (1, 2), got {a0}")
    if alpha < 0:
        raise PreconditionError(f"alpha must be non-negative, got {alpha}")
    d = int(d)
    beta, margin = _viana_trapping_interval(a0, alpha)

    def evaluate(p):
        p = np.asarray(p, dtype=float)
        th, x = p[..., 0], p[..., 1]
        out = np.empty_like(p)
        out[..., 0] = np.mod(d * th, 1.0)
        out[..., 1] = a0 + alpha * np.sin(2 * np.pi * th) - x * x
        return out

    def derivative(p):
        p = np.asarray(p, dtype=float)
        th, x = p[..., 0], p[..., 1]
        jac = np.zeros(p.shape[:-1] + (2, 2))
        jac[..., 0, 0] = d
        jac[..., 1, 0] = 2 * np.pi * alpha * np.cos(2 * np.pi * th)
        jac[..., 1, 1] = -2.0 * x
        return jac

    def crit_dist(p):
        return np.abs(np.asarray(p, dtype=float)[..., 1])

    def metric(p, q):
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        return np.maximum(circle_distance(p[..., 0], q[..., 0]), np.abs(p[..., 1] - q[..., 1]))

    return MapDescriptor(
        name="viana",
        domain_kind="product",
        bounds=((0.0, 1.0), (-beta, beta)),
        evaluate=evaluate,
        branch_count=2 * d,
        derivative=derivative,
        critical_set=("x=0",),
        critical_distance=crit_dist,
        metric=metric,
        circle_factor=d,
        params={"d": d, "a0": a0, "alpha": alpha, "trapping_halfwidth": beta, "trapping_margin": margin},
    )


@dataclass(frozen=True)
class WeightSequence:
    """Positive weights ``b_n`` with a certified tail ``sum_{n > N} b_n``."""

    func: Callable[[np.ndarray], np.ndarray]
    tail: Callable[[int], float]
    label: str

    def __call__(self, n):
        return self.func(np.asarray(n, dtype=float))


def geometric_weights(ratio: float = 0.5) -> WeightSequence:
    if not 0 < ratio < 1:
        raise PreconditionError("geometric weights need ratio in (0, 1)")
    return WeightSequence(
        func=lambda n: ratio**n,
        tail=lambda N: ratio ** (N + 1) / (1 - ratio),
        label=f"{ratio}^n",
    )


def power_weights(a: float, b: float) -> WeightSequence:
    """``b_n = (n + b)**(-a)``; summable for ``a > 1``.

    The tail uses the midpoint bound for convex decreasing terms,
    ``sum_{n > N} f(n) <= int_{N + 1/2}^inf f``.
    """
    if a <= 1 or b <= 0:
        raise PreconditionError("power weights need a > 1 and b > 0 to be summable")
    return WeightSequence(
        func=lambda n: (n + b) ** (-a),
        tail=lambda N: (N + 0.5 + b) ** (1 - a) / (a - 1),
        label=f"(n+{b})^-{a}",
    )


def build_weighted_shift(
    weights: WeightSequence, depth: int = 64, contraction: WeightSequence | None = None
) -> MapDescriptor:
    """One-sided 2-shift with ``d(x, y) = sum_n b_n |x_n - y_n|`` truncated at ``depth``.

    Submultiplicativity ``b_{n+k} <= b_n b_k`` is scanned for ``n + k <= depth``.
    With a Lipschitz ``contraction`` ``a_n`` the descriptor also records
    whether ``b_n <= a_n`` holds and the largest ``n0`` with
    ``b_n > a_1**n`` for ``2 <= n <= n0`` (0 when it already fails at 2).
    """
    n = np.arange(1, depth + 1)
    b = weights(n)
    if np.any(b <= 0):
        raise MetricError("weights must be positive")
    for i in range(1, depth):
        for k in range(1, depth - i + 1):
            if b[i + k - 1] > b[i - 1] * b[k - 1] * (1 + 1e-12):
                raise MetricError(
                    f"b_{{n+k}} <= b_n b_k fails at (n, k) = ({i}, {k}): "
                    f"{b[i + k - 1]:.6g} > {b[i - 1] * b[k - 1]:.6g}",
                    pair=(i, k),
                )
    desc = _shift(2, depth, b, weights.label)
    desc.params.update({"tail_bound": float(weights.tail(depth)), "weights": weights.label})
    if contraction is not None:
        a = contraction(n)
        n0 = 0
        for m in range(2, depth + 1):
            if b[m - 1] <= a[0] ** m:
                break
            n0 = m
        desc.params.update(
            {"dominated_by_contraction": bool(np.all(b <= a * (1 + 1e-12))), "non_exponential_depth": n0}
        )
    return desc


def full_shift(k: int = 2, depth: int = 64) -> MapDescriptor:
    """Full one-sided shift on ``k`` symbols with the metric ``sum |x_n - y_n| k^-n``."""
    n = np.arange(1, depth + 1)
    b = float(k) ** (-n)
    desc = _shift(k, depth, b, f"{k}^-n")
    desc.params["tail_bound"] = float(k) ** (-depth) / (k - 1)
    return desc


def _shift(k: int, depth: int, b: np.ndarray, label: str) -> MapDescriptor:
    powers = float(k) ** (-np.arange(1, depth + 1))

    def evaluate(x):
        x = np.asarray(x, dtype=np.uint8)
        out = np.zeros_like(x)
        out[..., :-1] = x[..., 1:]
        return out

    def inverse(i, y):
        y = np.asarray(y, dtype=np.uint8)
        out = np.empty_like(y)
        out[..., 0] = i
        out[..., 1:] = y[..., :-1]
        return out

    def branch_of(x):
        return np.asarray(x)[..., 0].astype(int)

    def metric(x, y):
        diff = np.abs(np.asarray(x, dtype=float) - np.asarray(y, dtype=float))
        return diff @ b

    def to_chart(x):
        return np.asarray(x, dtype=float)[..., :53] @ powers[: min(53, depth)]

    def from_chart(u):
        u = np.asarray(u, dtype=float)
        digits = np.zeros(u.shape + (depth,), dtype=np.uint8)
        r = u.copy()
        for t in range(min(depth, 53)):
            r = r * k
            dgt = np.minimum(np.floor(r), k - 1)
            digits[..., t] = dgt.astype(np.uint8)
            r = r - dgt
        return digits

    def chart_inverse(i, u):
        return (i + np.asarray(u, dtype=float)) / k

    return MapDescriptor(
        name=f"shift{k}",
        domain_kind="symbol",
        bounds=(0, k),
        evaluate=evaluate,
        branch_count=k,
        branch_inverse=inverse,
        branch_of=branch_of,
        metric=metric,
        chart_inverse=chart_inverse,
        to_chart=to_chart,
        from_chart=from_chart,
        params={"alphabet": k, "depth": depth, "weights": label, "b": b},
    )


# ---------------------------------------------------------------------------
# orbits


def _exact_circle_orbit(theta0: float, factor: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """Orbit of ``theta -> factor*theta mod 1`` in exact integer arithmetic.

    The float ``theta0`` is extended with random low-order bits so that the
    orbit is typical rather than the eventually-zero orbit of a dyadic float.
    """
    shift = int(np.ceil(np.log2(factor))) * n + 64
    bits = shift + 53
    base = int(round(float(theta0) % 1.0 * 2.0**53)) << shift
    low = int.from_bytes(rng.bytes((shift + 7) // 8), "little") & ((1 << shift) - 1)
    k = base | low
    modulus = 1 << bits
    out = np.empty(n + 1)
    for i in range(n + 1):
        out[i] = (k >> (bits - 53)) / 2.0**53
        k = (k * factor) % modulus
    return out


def evaluate_orbit(map: MapDescriptor, x, n: int, rng: np.random.Generator | None = None) -> np.ndarray:
    """Return ``(x, f(x), ..., f^n(x))`` stacked along the first axis.

    With ``rng`` given and a map carrying an integer ``circle_factor``, the
    circle coordinate is iterated exactly with random extra bits.
    """
    if n < 0:
        raise PreconditionError("n must be non-negative")
    x = np.asarray(x, dtype=np.uint8 if map.domain_kind == "symbol" else float)
    out = np.empty((n + 1,) + x.shape, dtype=x.dtype)
    out[0] = x
    if rng is not None and map.circle_factor is not None:
        theta0 = x if map.domain_kind == "circle" else x[..., 0]
        thetas = _exact_circle_orbit(float(theta0), map.circle_factor, n, rng)
    else:
        thetas = None
    for i in range(1, n + 1):
        nxt = map.evaluate(out[i - 1])
        if thetas is not None:
            if map.domain_kind == "circle":
                nxt = np.asarray(thetas[i])
            else:
                nxt = np.array(nxt)
                nxt[..., 0] = thetas[i]
        if out.dtype.kind == "f" and not np.all(np.isfinite(nxt)):
            raise EvaluationError(f"map undefined along orbit at index {i}", index=i)
        out[i] = nxt
    return out


def co_norm(map: MapDescriptor, points) -> np.ndarray:
    """``||Df(p)^{-1}||^{-1}``: ``|f'|`` in 1-D, smallest singular value in 2-D."""
    if map.derivative is None:
        raise PreconditionError(f"{map.name} has no derivative")
    der = map.derivative(points)
    if map.domain_kind == "product":
        return np.linalg.svd(der, compute_uv=False)[..., -1]
    return np.abs(der)


def check_critical(map: MapDescriptor, points, tol: float = CRITICAL_TOL) -> None:
    if map.critical_distance is None:
        return
    dist = np.atleast_1d(map.critical_distance(points))
    hits = np.flatnonzero(dist < tol)
    if hits.size:
        raise CriticalProximityError(
            f"orbit point {int(hits[0])} is within {tol:g} of the critical set", index=int(hits[0])
        )


def derivative_along_orbit(map: MapDescriptor, x, n: int, rng=None) -> np.ndarray:
    """``|f'(f^i x)|`` (co-norm of ``Df`` in 2-D) for ``i = 0..n-1``."""
    orbit = evaluate_orbit(map, x, n, rng=rng)[:n]
    check_critical(map, orbit)
    return co_norm(map, orbit)


# ---------------------------------------------------------------------------
# potentials


@dataclass(frozen=True)
class Potential:
    """A real function on the phase space with metadata about its regularity."""

    func: Callable[[np.ndarray], np.ndarray]
    kind: str
    name: str
    params: dict = field(default_factory=dict)
    holder_exponent: float | None = None
    holder_constant: float | None = None

    def __call__(self, x):
        return np.asarray(self.func(x), dtype=float)

    def plus(self, c: float) -> "Potential":
        f = self.func
        return Potential(
            func=lambda x: np.asarray(f(x), dtype=float) + c,
            kind=self.kind if self.kind != "constant" else "constant",
            name=f"{self.name}+{c:g}",
            params={**self.params, "shift": self.params.get("shift", 0.0) + c},
            holder_exponent=self.holder_exponent,
            holder_constant=self.holder_constant,
        )


def constant_potential(c: float = 0.0) -> Potential:
    return Potential(
        func=lambda x: np.full(_point_shape(x), float(c)),
        kind="constant",
        name=f"const({c:g})",
        params={"c": float(c)},
        holder_exponent=1.0,
        holder_constant=0.0,
    )


def _point_shape(x):
    x = np.asarray(x)
    if x.dtype == np.uint8 or (x.ndim >= 1 and x.shape[-1] == 2 and x.dtype.kind == "f" and x.ndim > 1):
        return x.shape[:-1]
    return x.shape


def geometric_potential(map: MapDescriptor, t: float = 1.0) -> Potential:
    """``-t log |f'|``; evaluating on the critical set is an error."""

    def func(x):
        check_critical(map, x)
        return -t * np.log(co_norm(map, x))

    return Potential(func=func, kind="geometric", name=f"-{t:g}log|Df|", params={"t": t, "map": map.name})


def explicit_potential(func, name: str, holder_exponent=None, holder_constant=None) -> Potential:
    return Potential(
        func=func,
        kind="explicit",
        name=name,
        holder_exponent=holder_exponent,
        holder_constant=holder_constant,
    )


def sine_potential(amplitude: float = 1.0, k: int = 1) -> Potential:
    return explicit_potential(
        lambda x: amplitude * np.sin(2 * np.pi * k * np.asarray(x, dtype=float)),
        name=f"{amplitude:g}sin(2pi{k}x)",
        holder_exponent=1.0,
        holder_constant=abs(amplitude) * 2 * np.pi * k,
    )


def cylinder_potential(map: MapDescriptor, values) -> Potential:
    """Potential constant on the depth-``k`` cylinders of a Markov map."""
    values = np.asarray(values, dtype=float)
    depth = int(round(np.log(values.size) / np.log(map.branch_count)))
    if map.branch_count**depth != values.size:
        raise PreconditionError("number of values must be a power of the branch count")

    def func(x):
        return values[map.cylinder_index(x, depth)]

    return Potential(
        func=func,
        kind="locally_constant",
        name=f"cyl{depth}{tuple(np.round(values, 4).tolist())}",
        params={"depth": depth, "values": values.tolist()},
        holder_exponent=1.0,
        holder_constant=0.0,
    )


# ---------------------------------------------------------------------------
# skew products


@dataclass(frozen=True, eq=False)
class SkewDescriptor:
    """``F(x, y) = (f(x), g(x, y))`` with ``g(x, .)`` a uniform contraction."""

    base: MapDescriptor
    fiber_map: Callable[[np.ndarray, np.ndarray], np.ndarray]
    contraction_rate: float
    fixed_fiber_point: float | None = None
    fiber_metric: Callable = _abs_distance
    fiber_bounds: tuple = (-1.0, 1.0)

    @property
    def fiber_diameter(self) -> float:
        return float(self.fiber_bounds[1] - self.fiber_bounds[0])

    def evaluate(self, x, y):
        return self.base.evaluate(x), self.fiber_map(x, y)

    def metric(self, p, q):
        return np.maximum(self.base.metric(p[0], q[0]), self.fiber_metric(p[1], q[1]))


def build_skew_product(
    base: MapDescriptor,
    g: Callable,
    lam: float,
    y0: float | None = None,
    fiber_bounds: tuple = (-1.0, 1.0),
    samples: int = 10_000,
    seed: int = 0,
) -> SkewDescriptor:
    """Validate and wrap a skew product over ``base``.

    The contraction bound and (if given) the fixed fiber point are tested
    on ``samples`` random triples ``(x, y1, y2)``.
    """
    if not 0.0 < lam < 1.0:
        raise PreconditionError(f"contraction rate must be in (0, 1), got {lam}")
    if base.domain_kind not in ("circle", "interval"):
        raise PreconditionError("skew products are supported over 1-D bases")
    rng = np.random.default_rng(seed)
    lo, hi = base.bounds
    x = lo + (hi - lo) * rng.random(samples)
    y1 = fiber_bounds[0] + (fiber_bounds[1] - fiber_bounds[0]) * rng.random(samples)
    y2 = fiber_bounds[0] + (fiber_bounds[1] - fiber_bounds[0]) * rng.random(samples)
    num = _abs_distance(g(x, y1), g(x, y2))
    den = _abs_distance(y1, y2)
    bad = np.flatnonzero(num > lam * den * (1 + 1e-12) + 1e-15)
    if bad.size:
        i = int(bad[0])
        raise ContractionError(
            f"d(g(x,y1), g(x,y2)) = {num[i]:.6g} exceeds {lam}*d(y1,y2) = {lam * den[i]:.6g}",
            witness=(float(x[i]), float(y1[i]), float(y2[i])),
        )
    if y0 is not None:
        moved = np.abs(g(x, np.full_like(x, y0)) - y0)
        bad = np.flatnonzero(moved > 1e-12)
        if bad.size:
            i = int(bad[0])
            raise FixedPointError(f"g(x, y0) != y0 at x = {x[i]:.6g}", witness=float(x[i]))
    return SkewDescriptor(
        base=base, fiber_map=g, contraction_rate=lam, fixed_fiber_point=y0, fiber_bounds=tuple(fiber_bounds)
    )


MAP_BUILDERS = {
    "doubling": lambda **kw: doubling_map(),
    "piecewise_linear": lambda breaks=(1 / 3,), **kw: piecewise_linear_map(
        breaks if np.ndim(breaks) else [breaks]
    ),
    "quadratic": lambda a0=2.0, **kw: quadratic_map(a0),
    "viana": lambda d=16, a0=1.8, alpha=0.01, **kw: build_viana_map(d, a0, alpha),
    "shift": lambda k=2, depth=64, **kw: full_shift(k, depth),
    "weighted_shift": lambda ratio=0.5, depth=64, **kw: build_weighted_shift(geometric_weights(ratio), depth),
}


def make_map(spec: str, **params) -> MapDescriptor:
    """Look a zoo entry up by string id."""
    try:
        builder = MAP_BUILDERS[spec]
    except KeyError:
        raise PreconditionError(f"unknown map {spec!r}; known: {sorted(MAP_BUILDERS)}") from None
    return builder(**params)
