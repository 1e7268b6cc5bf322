"""Zooming contractions, hyperbolic and zooming times, exponents and distortion."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .dynamics import (
    CRITICAL_TOL,
    MapDescriptor,
    WeightSequence,
    check_critical,
    co_norm,
    evaluate_orbit,
)
from .errors import CapabilityError, EvaluationError, ItineraryError, PreconditionError

SEMIGROUP_RTOL = 1e-12
ZOOM_RTOL = 1e-9


# ---------------------------------------------------------------------------
# contraction families


@dataclass(frozen=True)
class ZoomingContraction:
    """A family ``alpha_n(r)``.

    ``kind`` is ``"exponential"`` (``alpha_n(r) = exp(-rate n) r``),
    ``"lipschitz"`` (``alpha_n(r) = a_n r``) or ``"custom"``.
    """

    kind: str
    func: Callable[[np.ndarray, np.ndarray], np.ndarray]
    label: str
    rate: Optional[float] = None
    coefficients: Optional[WeightSequence] = None

    def __call__(self, n, r):
        n = np.asarray(n, dtype=float)
        r = np.asarray(r, dtype=float)
        return np.broadcast_to(np.asarray(self.func(n, r), dtype=float), np.broadcast_shapes(n.shape, r.shape)).copy()

    evaluate = __call__

    def sum_bound(self, N: int, r_grid) -> float:
        """``sup_r sum_n alpha_n(r)``: partial sum to ``N`` plus a certified or fitted tail."""
        r = np.asarray(r_grid, dtype=float)
        rmax = float(r.max())
        if self.kind == "exponential":
            q = np.exp(-self.rate)
            return rmax * q / (1 - q) if q < 1 else np.inf
        n = np.arange(1, N + 1)
        if self.kind == "lipschitz" and self.coefficients is not None:
            a = self.coefficients(n)
            return rmax * (float(a.sum()) + float(self.coefficients.tail(N)))
        table = self(n[:, None], r[None, :])
        sup = table.max(axis=1)
        return float(sup.sum()) + _fitted_tail(n, sup)


def _fitted_tail(n: np.ndarray, values: np.ndarray) -> float:
    """Tail ``sum_{m > N}`` extrapolated from a power-law or geometric fit of the last half."""
    half = n.size // 2
    nn, vv = n[half:], values[half:]
    if np.any(vv <= 0):
        return 0.0 if np.all(vv[-3:] == 0) else np.inf
    N = float(n[-1])
    logv = np.log(vv)
    slope_geo, icpt_geo = np.polyfit(nn, logv, 1)
    if slope_geo < -1e-3:
        q = np.exp(slope_geo)
        return float(np.exp(icpt_geo + slope_geo * (N + 1)) / (1 - q))
    p, c = np.polyfit(np.log(nn), logv, 1)
    if p < -1:
        return float(np.exp(c) * (N + 0.5) ** (p + 1) / (-(p + 1)))
    return np.inf


def exponential_contraction(rate: float) -> ZoomingContraction:
    if rate <= 0:
        raise PreconditionError("exponential contraction needs a positive rate")
    return ZoomingContraction(
        kind="exponential", func=lambda n, r: np.exp(-rate * n) * r, label=f"exp(-{rate:g}n)r", rate=float(rate)
    )


def lipschitz_contraction(coefficients: WeightSequence) -> ZoomingContraction:
    """``alpha_n(r) = a_n r`` with ``a_n`` given as a weight sequence."""
    return ZoomingContraction(
        kind="lipschitz",
        func=lambda n, r: coefficients(n) * r,
        label=f"({coefficients.label})r",
        coefficients=coefficients,
    )


def custom_contraction(func: Callable, label: str = "custom") -> ZoomingContraction:
    return ZoomingContraction(kind="custom", func=func, label=label)


@dataclass
class ConditionResult:
    name: str
    passed: bool
    counterexample: Optional[tuple] = None
    detail: str = ""


@dataclass
class ContractionReport:
    contraction: str
    N: int
    conditions: dict
    sum_bound: float
    symbolic: bool = False
    non_exponential_depth: Optional[int] = None

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.conditions.values())


def validate_contraction(c: ZoomingContraction, N: int, r_grid) -> ContractionReport:
    """Scan the four defining conditions of a zooming contraction.

    Counterexamples are the first failing ``n`` (and ``r``), the first
    non-increasing grid pair, or the first ``(m, n)`` violating
    ``alpha_m(alpha_n(r)) <= alpha_{m+n}(r)``.
    """
    if N < 2:
        raise PreconditionError("N must be at least 2")
    r = np.sort(np.asarray(r_grid, dtype=float))
    if r.size == 0 or r[0] <= 0 or r[-1] >= 1:
        raise PreconditionError("r grid must lie in (0, 1)")
    n = np.arange(1, N + 1)
    table = c(n[:, None], r[None, :])
    conds = {}

    bad = np.argwhere(~(table < r[None, :]))
    conds["sub_identity"] = ConditionResult(
        "sub_identity",
        bad.size == 0,
        None if bad.size == 0 else (int(n[bad[0, 0]]), float(r[bad[0, 1]])),
        "alpha_n(r) < r",
    )

    bad = np.argwhere(~(np.diff(table, axis=1) > 0))
    conds["monotone"] = ConditionResult(
        "monotone",
        bad.size == 0,
        None if bad.size == 0 else (int(n[bad[0, 0]]), float(r[bad[0, 1]]), float(r[bad[0, 1] + 1])),
        "alpha_n strictly increasing in r",
    )

    witness = None
    for m in range(1, N):
        for k in range(1, N - m + 1):
            lhs = c(m, table[k - 1])
            rhs = table[m + k - 1]
            viol = np.flatnonzero(lhs > rhs * (1 + SEMIGROUP_RTOL))
            if viol.size:
                witness = (m, k, float(r[viol[0]]))
                break
        if witness:
            break
    conds["semigroup"] = ConditionResult(
        "semigroup", witness is None, witness, "alpha_m(alpha_n(r)) <= alpha_{m+n}(r)"
    )

    bound = c.sum_bound(N, r)
    conds["summable"] = ConditionResult(
        "summable", bool(np.isfinite(bound)), None if np.isfinite(bound) else (N,), f"sum bound {bound:.6g}"
    )

    n0 = None
    if c.kind == "lipschitz":
        a = c.coefficients(n) if c.coefficients is not None else table[:, -1] / r[-1]
        n0 = 0
        for m in range(2, N + 1):
            if a[m - 1] <= a[0] ** m:
                break
            n0 = m
    return ContractionReport(
        contraction=c.label,
        N=N,
        conditions=conds,
        sum_bound=float(bound),
        symbolic=c.kind == "exponential" and c.rate > 0,
        non_exponential_depth=n0,
    )


# ---------------------------------------------------------------------------
# time certificates


@dataclass
class TimeCertificate:
    x: object
    n: int
    kind: str
    passed: bool
    slack: float
    witness: dict = field(default_factory=dict)

    def row(self) -> dict:
        return {
            "point": _fmt_point(self.x),
            "n": self.n,
            "kind": self.kind,
            "pass": int(self.passed),
            "worst_slack": f"{self.slack:.12g}",
        }


CERTIFICATE_COLUMNS = ("point", "n", "kind", "pass", "worst_slack")


def _fmt_point(x) -> str:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return " ".join(f"{v:.17g}" for v in x)


def default_b(beta: float = 1.0) -> float:
    return min(1.0, 1.0 / beta) / 3.0


def _distance_to_critical(map: MapDescriptor, orbit: np.ndarray) -> Optional[np.ndarray]:
    if map.critical_distance is None:
        return None
    return np.asarray(map.critical_distance(orbit), dtype=float)


def detect_hyperbolic_times(
    map: MapDescriptor,
    x,
    N: int,
    sigma: float,
    eps: float,
    b: float | None = None,
    beta: float = 1.0,
    rng: np.random.Generator | None = None,
) -> list[TimeCertificate]:
    """Certificates for ``n = 1..N``.

    ``n`` is a ``(sigma, eps)``-hyperbolic time when for every ``1 <= k <= n``
    the last ``k`` inverse-derivative norms multiply to at most ``sigma**k``
    and ``dist_eps(f^{n-k} x, C) >= sigma**(b k)``.  Both clauses reduce to
    running maxima of partial sums, so the scan is linear in ``N``.
    """
    if not 0 < sigma < 1:
        raise PreconditionError("sigma must lie in (0, 1)")
    if eps <= 0:
        raise PreconditionError("eps must be positive")
    b = default_b(beta) if b is None else b
    orbit = evaluate_orbit(map, x, N, rng=rng)
    check_critical(map, orbit[:N])
    inc = np.log(co_norm(map, orbit[:N])) + np.log(sigma)
    S = np.concatenate([[0.0], np.cumsum(inc)])
    prev_max = np.maximum.accumulate(S)[:-1]  # max_{m<n} S_m for n = 1..N
    argmax = _running_argmax(S)[:-1]
    deriv_margin = S[1:] - prev_max
    tol = 1e-12 * np.arange(1, N + 1)

    dist = _distance_to_critical(map, orbit[:N])
    c = -b * np.log(sigma)
    if dist is None:
        rec_margin = np.full(N, np.inf)
    else:
        logd = np.where(dist < eps, np.log(np.maximum(dist, 1e-300)), 0.0)
        m = np.arange(N)
        rec_margin = np.minimum.accumulate(logd - c * m) + c * np.arange(1, N + 1)

    certs = []
    for i in range(N):
        n = i + 1
        ok = deriv_margin[i] >= -tol[i] and rec_margin[i] >= -1e-12
        certs.append(
            TimeCertificate(
                x=x,
                n=n,
                kind="hyperbolic",
                passed=bool(ok),
                slack=float(min(deriv_margin[i], rec_margin[i])),
                witness={
                    "sigma": sigma,
                    "eps": eps,
                    "b": b,
                    "log_product_margin": float(deriv_margin[i]),
                    "worst_k": int(n - argmax[i]),
                    "recurrence_margin": float(rec_margin[i]),
                },
            )
        )
    return certs


def _running_argmax(S: np.ndarray) -> np.ndarray:
    out = np.empty(S.size, dtype=int)
    best = 0
    for i, v in enumerate(S):
        if v >= S[best]:
            best = i
        out[i] = best
    return out


def time_frequency(certs: list[TimeCertificate], N: int) -> float:
    """Fraction of ``1..N`` certified."""
    if N <= 0:
        return 0.0
    return sum(1 for c in certs if c.passed and 1 <= c.n <= N) / N


# ---------------------------------------------------------------------------
# pre-balls


def _signed_offset(map: MapDescriptor, pts, ref):
    d = np.asarray(pts, dtype=float) - ref
    if map.domain_kind == "circle":
        d = (d + 0.5) % 1.0 - 0.5
    return d


def pull_back_ball(map: MapDescriptor, x, n: int, delta: float, mesh: int = 20):
    """Mesh of the pre-ball ``V_n(x)`` and its forward images.

    Returns ``(orbit, levels)`` where ``levels[j]`` holds the mesh points of
    ``f^j(V_n(x))``; ``levels[n]`` is the mesh of ``B_delta(f^n x)``.  Each
    backward step takes the preimage nearest the orbit point, and the step
    is rejected unless it is a homeomorphism onto its image on the mesh.
    """
    if map.domain_kind not in ("circle", "interval") or map.branch_inverse is None:
        raise CapabilityError(f"pre-balls need a 1-D map with branch inverses, {map.name} has none")
    if n < 1:
        raise PreconditionError("n must be at least 1")
    orbit = evaluate_orbit(map, x, n)
    target = orbit[n] + delta * np.linspace(-1.0, 1.0, mesh)
    if map.domain_kind == "circle":
        target = target % 1.0
    else:
        target = np.clip(target, *map.bounds)
    levels = [None] * (n + 1)
    levels[n] = target
    lo, hi = map.bounds
    for j in range(n - 1, -1, -1):
        try:
            cands = np.stack([map.branch_inverse(i, levels[j + 1]) for i in range(map.branch_count)])
        except EvaluationError as exc:
            raise ItineraryError(f"pull-back leaves the branch domain at step {j}: {exc}") from None
        off = _signed_offset(map, cands, orbit[j])
        pick = np.argmin(np.abs(off), axis=0)
        pts = cands[pick, np.arange(levels[j + 1].size)]
        if map.domain_kind == "interval" and (np.any(pts < lo - 1e-12) or np.any(pts > hi + 1e-12)):
            raise ItineraryError(f"pull-back leaves the domain at step {j}")
        local = off[pick, np.arange(pts.size)]
        steps = np.diff(local)
        if not (np.all(steps > 0) or np.all(steps < 0)):
            raise ItineraryError(f"pull-back folds at step {j}: the pre-ball is not mapped homeomorphically")
        if map.critical_distance is not None:
            crit = map.critical_distance(pts)
            if np.any(crit < CRITICAL_TOL):
                raise ItineraryError(f"pull-back meets the critical set at step {j}")
        levels[j] = pts
    return orbit, levels


def verify_zooming_inequality(
    map: MapDescriptor, x, n: int, c: ZoomingContraction, delta: float, mesh: int = 20
) -> TimeCertificate:
    """Check ``d(f^j y, f^j z) <= alpha_{n-j}(d(f^n y, f^n z))`` on all mesh pairs."""
    orbit, levels = pull_back_ball(map, x, n, delta, mesh)
    dn = map.distance(levels[n][:, None], levels[n][None, :])
    off = ~np.eye(mesh, dtype=bool)
    worst_ratio, worst = 0.0, None
    slack = np.inf
    for j in range(n):
        dj = map.distance(levels[j][:, None], levels[j][None, :])
        bound = c(n - j, dn)
        ratio = np.where(off & (bound > 0), dj / np.where(bound > 0, bound, 1.0), 0.0)
        k = np.unravel_index(np.argmax(ratio), ratio.shape)
        if ratio[k] > worst_ratio:
            worst_ratio, worst = float(ratio[k]), (j, int(k[0]), int(k[1]))
        slack = min(slack, float(1.0 - ratio[off].max()) if off.any() else np.inf)
    return TimeCertificate(
        x=x,
        n=n,
        kind="zooming",
        passed=bool(worst_ratio <= 1.0 + ZOOM_RTOL),
        slack=slack,
        witness={"contraction": c.label, "delta": delta, "mesh": mesh, "worst_ratio": worst_ratio, "worst_pair": worst},
    )


def distortion_constant(map: MapDescriptor, x, n: int, delta: float, mesh: int = 20) -> float:
    """Smallest ``rho`` with ``|log Jf^n(y) - log Jf^n(z)| <= rho d(f^n y, f^n z)`` on the mesh."""
    _, levels = pull_back_ball(map, x, n, delta, mesh)
    logj = sum(np.log(np.abs(map.derivative(levels[j]))) for j in range(n))
    gap = np.abs(logj[:, None] - logj[None, :])
    dn = map.distance(levels[n][:, None], levels[n][None, :])
    mask = dn > 0
    if not mask.any():
        return 0.0
    return float((gap[mask] / dn[mask]).max())


# ---------------------------------------------------------------------------
# exponents


@dataclass
class ExponentReport:
    x: object
    N: int
    delta: float
    expansion_exponent: float
    recurrence_average: float
    collet_eckmann_rate: Optional[float] = None


def exponent_report(
    map: MapDescriptor, x, N: int = 10_000, delta: float = 0.01, rng: np.random.Generator | None = None
) -> ExponentReport:
    """Birkhoff averages of ``log ||Df^{-1}||^{-1}`` and ``-log dist_delta(., C)`` over ``N`` iterates.

    When the map has numeric critical points, the Collet-Eckmann rate is
    the least-squares slope of ``log |Df^n(f(c))|`` against ``n``; it is
    ``None`` when the critical orbit returns to the critical set.
    """
    if delta <= 0:
        raise PreconditionError("delta must be positive")
    orbit = evaluate_orbit(map, x, N, rng=rng)[:N]
    check_critical(map, orbit)
    expansion = float(np.mean(np.log(co_norm(map, orbit))))
    dist = _distance_to_critical(map, orbit)
    if dist is None:
        recurrence = 0.0
    else:
        recurrence = float(np.mean(np.where(dist < delta, -np.log(dist), 0.0)))
    return ExponentReport(
        x=x,
        N=N,
        delta=delta,
        expansion_exponent=expansion,
        recurrence_average=recurrence,
        collet_eckmann_rate=_collet_eckmann_rate(map, N),
    )


def _collet_eckmann_rate(map: MapDescriptor, N: int) -> Optional[float]:
    crit = [c for c in map.critical_set if isinstance(c, (int, float))]
    if not crit or map.domain_kind != "interval":
        return None
    rates = []
    for c in crit:
        orbit = evaluate_orbit(map, map.evaluate(np.asarray(c, dtype=float)), N - 1)
        if np.any(map.critical_distance(orbit) < CRITICAL_TOL):
            return None
        logs = np.cumsum(np.log(np.abs(map.derivative(orbit))))
        n = np.arange(1, N + 1)
        rates.append(float(np.polyfit(n, logs, 1)[0]))
    return min(rates)
