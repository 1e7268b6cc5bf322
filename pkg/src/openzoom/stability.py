"""Numerical stability experiments: weak-* convergence of equilibria, skew reduction, uniqueness families."""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.special import logsumexp

from ._spectral import ReducibilityWarning
from .dynamics import MapDescriptor, Potential, SkewDescriptor, circle_distance, explicit_potential
from .errors import CapabilityError, OpenZoomError, PreconditionError, ProjectionError, RefinementError
from .measures import DiscretizedMeasure, atomic_measure, total_variation
from .thermo import (
    DEFAULT_EPS_GRID,
    EntropyEstimate,
    bowen_counts,
    brin_katok_entropy,
    entropy_from_counts,
    equilibrium_measure,
    periodic_points,
    pressure,
    spectral_pressure,
)
from .transfer import assemble_transfer_matrix

MARGINAL_TOL = 1e-2
TREND_TOL = 1e-12


# ---------------------------------------------------------------------------
# weak-* distance


@dataclass(frozen=True)
class WeakTest:
    name: str
    func: Callable
    lipschitz: float

    def __call__(self, x):
        return self.func(np.asarray(x, dtype=float))


def default_tests(kmax: int = 8) -> list[WeakTest]:
    """``{1, x, sin 2 pi k x, cos 2 pi k x : k <= kmax}`` with Lipschitz constants."""
    tests = [WeakTest("1", np.ones_like, 0.0), WeakTest("x", lambda x: x, 1.0)]
    for k in range(1, kmax + 1):
        tests.append(WeakTest(f"sin{k}", lambda x, k=k: np.sin(2 * np.pi * k * x), 2 * np.pi * k))
        tests.append(WeakTest(f"cos{k}", lambda x, k=k: np.cos(2 * np.pi * k * x), 2 * np.pi * k))
    return tests


@dataclass
class EmpiricalMeasure:
    """Equally weighted sample points on the phase space of ``map``."""

    map: MapDescriptor
    points: np.ndarray

    def integrate(self, g: Callable, chart: bool = False) -> float:
        pts = self.map.to_chart(self.points) if chart else self.points
        return float(np.mean(np.asarray(g(pts), dtype=float)))


def _integrals(mu, tests) -> np.ndarray:
    chart = mu.map.domain_kind == "symbol"
    return np.array([mu.integrate(t, chart=chart) for t in tests])


def weak_star_gaps(mu, nu, tests=None) -> np.ndarray:
    """``|int g dmu - int g dnu|`` for every test function."""
    if mu.map.domain_kind != nu.map.domain_kind:
        raise RefinementError(
            f"measures live on different spaces ({mu.map.domain_kind} vs {nu.map.domain_kind})"
        )
    tests = default_tests() if tests is None else tests
    return np.abs(_integrals(mu, tests) - _integrals(nu, tests))


def weak_star_distance(mu, nu, tests=None) -> float:
    """Max over the test family of the integral gaps."""
    return float(weak_star_gaps(mu, nu, tests).max())


# ---------------------------------------------------------------------------
# stability experiments


@dataclass
class SystemSequence:
    entries: list
    limit: tuple
    gauge_f: np.ndarray = field(init=False)
    gauge_phi: np.ndarray = field(init=False)
    grid: int = 4096

    def __post_init__(self):
        f0, phi0 = self.limit
        lo, hi = f0.bounds
        # offset grid avoids landing on dyadic break points
        x = lo + (hi - lo) * (np.arange(self.grid) + 0.5) / self.grid
        dist = circle_distance if f0.domain_kind == "circle" else (lambda a, b: np.abs(a - b))
        y0 = f0.evaluate(x)
        p0 = phi0(x)
        self.gauge_f = np.array([float(dist(f.evaluate(x), y0).max()) for f, _ in self.entries])
        self.gauge_phi = np.array([float(np.abs(phi(x) - p0).max()) for _, phi in self.entries])


@dataclass
class WeakStarReport:
    tests: list
    gaps: np.ndarray
    max_gap: np.ndarray


@dataclass
class StabilityReport:
    rows: list
    weak: WeakStarReport
    passed: bool
    lipschitz_fit: float
    pressures: np.ndarray
    limit_pressure: float

    columns = ("n", "gauge_f", "gauge_phi", "pressure_gap", "max_weak_gap", "flags")

    def csv_rows(self) -> list[dict]:
        return [
            {
                "n": r["n"],
                "gauge_f": f"{r['gauge_f']:.12g}",
                "gauge_phi": f"{r['gauge_phi']:.12g}",
                "pressure_gap": f"{r['pressure_gap']:.12g}",
                "max_weak_gap": f"{r['max_weak_gap']:.12g}",
                "flags": r["flags"],
            }
            for r in self.rows
        ]


def non_increasing(values, tol: float = TREND_TOL) -> bool:
    v = np.asarray(values, dtype=float)
    return bool(np.all(np.diff(v) <= tol))


def _entry(f: MapDescriptor, phi: Potential, depth: int):
    flags = []
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ReducibilityWarning)
        T = assemble_transfer_matrix(f, phi, depth)
        P = pressure(T)
        mu = equilibrium_measure(T)
    if P.reducible or any(issubclass(w.category, ReducibilityWarning) for w in caught):
        flags.append("reducible")
    return P.value, mu, flags


def run_stability_experiment(
    seq: SystemSequence, depth: int = 10, tests=None, threads: int = 1
) -> StabilityReport:
    """Equilibria and pressures for every entry against the limit system.

    The experiment passes when the pressure-gap and max weak-* gap columns
    are non-increasing over the last half of the sequence.  An entry whose
    computation fails is flagged and skipped.
    """
    tests = default_tests() if tests is None else tests
    f0, phi0 = seq.limit
    P0, mu0, _ = _entry(f0, phi0, depth)

    def work(item):
        f, phi = item
        try:
            return _entry(f, phi, depth)
        except OpenZoomError as exc:
            return np.nan, None, [type(exc).__name__]

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(work, seq.entries))
    else:
        results = [work(e) for e in seq.entries]

    base = _integrals(mu0, tests)
    gaps = np.full((len(results), len(tests)), np.nan)
    rows = []
    pressures = np.array([r[0] for r in results], dtype=float)
    for n, (P, mu, flags) in enumerate(results, start=1):
        if mu is not None:
            gaps[n - 1] = np.abs(_integrals(mu, tests) - base)
        rows.append(
            {
                "n": n,
                "gauge_f": float(seq.gauge_f[n - 1]),
                "gauge_phi": float(seq.gauge_phi[n - 1]),
                "pressure_gap": float(abs(P - P0)),
                "max_weak_gap": float(np.nanmax(gaps[n - 1])) if mu is not None else np.nan,
                "flags": ";".join(flags),
            }
        )
    half = len(rows) // 2
    tail = rows[half:]
    passed = non_increasing([r["pressure_gap"] for r in tail]) and non_increasing([r["max_weak_gap"] for r in tail])
    denom = seq.gauge_f + seq.gauge_phi
    pg = np.array([r["pressure_gap"] for r in rows])
    ok = denom > 0
    L = float(np.nanmax(pg[ok] / denom[ok])) if ok.any() else 0.0
    return StabilityReport(
        rows=rows,
        weak=WeakStarReport([t.name for t in tests], gaps, gaps.max(axis=1)),
        passed=bool(passed),
        lipschitz_fit=L,
        pressures=pressures,
        limit_pressure=float(P0),
    )


@dataclass
class CesaroResult:
    measures: list
    defects: np.ndarray


def cesaro_sequence(map: MapDescriptor, mu0: DiscretizedMeasure, k_max: int) -> CesaroResult:
    """``eta_k = (1/k) sum_{i<k} f^i_* mu0`` for ``k = 1..k_max`` with invariance defects."""
    pushes = [mu0]
    for _ in range(1, k_max + 1):
        pushes.append(pushes[-1].pushforward())
    etas, defects = [], []
    for k in range(1, k_max + 1):
        eta = _average(map, pushes[:k], label=f"cesaro{k}")
        etas.append(eta)
        # f_* eta_k - eta_k = (f^k_* mu0 - mu0) / k
        defects.append(total_variation(_average(map, pushes[1 : k + 1]), eta))
    return CesaroResult(etas, np.array(defects))


def _average(map, measures, label: str = "") -> DiscretizedMeasure:
    k = len(measures)
    if measures[0].is_atomic:
        pts = np.concatenate([m.atoms for m in measures])
        w = np.concatenate([m.weights / k for m in measures])
        return atomic_measure(map, pts, w, label=label)
    w = sum(m.weights for m in measures) / k
    first = measures[0]
    return DiscretizedMeasure(map, w / w.sum(), depth=first.depth, kernel=first.kernel, label=label)


# ---------------------------------------------------------------------------
# skew products


def _skew_orbit(F: SkewDescriptor, x, y, n: int):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    for _ in range(n):
        x, y = F.base.evaluate(x), F.fiber_map(x, y)
    return x, y


@dataclass
class ReducedPotential:
    base: Potential
    phi_tilde: Callable
    u: Callable
    J: int
    tail_bound: float


def reduce_skew_potential(
    F: SkewDescriptor,
    phi: Callable,
    J: int = 40,
    holder_constant: float = 1.0,
    holder_exponent: float = 1.0,
    name: str = "phi",
) -> ReducedPotential:
    """Replace ``phi(x, y)`` by the cohomologous ``phi - u + u o F`` that ignores the fiber on ``y0``.

    ``u(x, y) = sum_{j<J} phi(F^j(x, y)) - phi(F^j(x, y0))``, and the sum
    telescopes to ``phi~(p) = phi(x, y0) + phi(F^J p) - phi(F^J(x, y0))``,
    which is how ``phi_tilde`` is evaluated.  The neglected
    tail of ``u`` is at most ``C r^a lam^{J a} / (1 - lam^a)`` with ``r`` the
    largest fiber distance to ``y0``.
    """
    y0 = F.fixed_fiber_point
    if y0 is None:
        raise CapabilityError("reduction needs a fixed fiber point y0; use a fiber-constant potential instead")
    lam, a = F.contraction_rate, holder_exponent
    r = max(abs(F.fiber_bounds[0] - y0), abs(F.fiber_bounds[1] - y0))

    def u(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        yy = np.broadcast_to(np.asarray(y0, dtype=float), y.shape)
        total = np.zeros(np.broadcast(x, y).shape)
        for _ in range(J):
            total += phi(x, y) - phi(x, yy)
            x, y = F.base.evaluate(x), F.fiber_map(x, y)
        return total

    def phi_tilde(x, y):
        # phi - u + u o F telescopes because y0 is fixed by every fiber map;
        # evaluating the telescoped form avoids cancelling O(1) terms
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        x, y = np.broadcast_arrays(x, y)
        yy = np.full(y.shape, float(y0))
        base = phi(x, yy)
        xa, ya, yb = x, y, yy
        for _ in range(J):
            xa, ya, yb = F.base.evaluate(xa), F.fiber_map(xa, ya), F.fiber_map(xa, yb)
        return base + (phi(xa, ya) - phi(xa, yb))

    base = explicit_potential(
        lambda x: phi_tilde(np.asarray(x, dtype=float), np.full(np.shape(x), float(y0))), name=f"reduced({name})"
    )
    tail = holder_constant * r**a * lam ** (J * a) / (1 - lam**a)
    return ReducedPotential(base=base, phi_tilde=phi_tilde, u=u, J=J, tail_bound=float(tail))


@dataclass
class LiftedMeasure:
    skew: SkewDescriptor
    x: np.ndarray
    y: np.ndarray
    n_settle: int
    fiber_spread: float
    spread_bound: float
    marginal_gap: float

    def marginal(self) -> EmpiricalMeasure:
        return EmpiricalMeasure(self.skew.base, self.x)


def lift_equilibrium(
    F: SkewDescriptor,
    mu: DiscretizedMeasure,
    n_settle: int = 30,
    samples: int = 100_000,
    seed: int = 0,
    tests=None,
) -> LiftedMeasure:
    """Sample the lift of ``mu`` by settling arbitrary fiber points for ``n_settle`` steps.

    Two runs from the fiber endpoints bound the remaining spread by
    ``lam**n_settle * diam(N)``; the projection is compared with ``mu``.
    """
    rng = np.random.default_rng(seed)
    x0 = np.asarray(mu.sample(rng, samples), dtype=float)
    lo, hi = F.fiber_bounds
    ya = np.full(samples, lo)
    yb = np.full(samples, hi)
    x, y1 = _skew_orbit(F, x0, ya, n_settle)
    _, y2 = _skew_orbit(F, x0, yb, n_settle)
    lifted = LiftedMeasure(
        skew=F,
        x=x,
        y=y1,
        n_settle=n_settle,
        fiber_spread=float(np.abs(y1 - y2).max()),
        spread_bound=float(F.contraction_rate**n_settle * F.fiber_diameter),
        marginal_gap=np.nan,
    )
    gap = weak_star_distance(lifted.marginal(), mu, tests)
    lifted.marginal_gap = gap
    if gap > MARGINAL_TOL:
        raise ProjectionError(f"projected lift differs from the base measure by {gap:.3g}", gap)
    return lifted


@dataclass
class SkewPressureGap:
    gap: float
    skew_value: float
    base_value: float


def skew_pressure_gap(
    F: SkewDescriptor, phi_hat: Callable, depth: int = 10, period: int = 12, name: str = "phi_hat"
) -> SkewPressureGap:
    """``|P_F(phi_hat) - P_f(phi_hat(., y))|`` for a fiber-constant potential.

    The skew side sums ``exp(S_n phi_hat)`` over base periodic points lifted
    to periodic points of ``F`` by settling the fiber along the cycle; the
    base side is the spectral pressure.
    """
    lo, hi = F.fiber_bounds
    probe = np.linspace(F.base.bounds[0], F.base.bounds[1], 257)[:-1]
    if np.abs(phi_hat(probe, np.full_like(probe, lo)) - phi_hat(probe, np.full_like(probe, hi))).max() > 1e-12:
        raise PreconditionError("phi_hat must not depend on the fiber coordinate")
    pp = periodic_points(F.base, period)
    x = np.asarray(pp.points, dtype=float)
    y = np.zeros_like(x)
    rot = pp.rotation()
    cycles = int(np.ceil(60 / (period * -np.log10(F.contraction_rate)))) + 1
    orbit_idx = [np.arange(x.size)]
    for _ in range(period - 1):
        orbit_idx.append(rot[orbit_idx[-1]])
    for _ in range(cycles):
        for idx in orbit_idx:
            y = F.fiber_map(x[idx], y)
    S = np.zeros(x.size)
    for idx in orbit_idx:
        S += phi_hat(x[idx], y)
        y = F.fiber_map(x[idx], y)
    skew = float(logsumexp(S[pp.valid]) / period)
    base_phi = explicit_potential(lambda t: phi_hat(np.asarray(t, dtype=float), np.full(np.shape(t), lo)), name=name)
    base = spectral_pressure(F.base, base_phi, depth).value
    return SkewPressureGap(gap=abs(skew - base), skew_value=skew, base_value=float(base))


def _skew_distance(F: SkewDescriptor):
    def dist(p, c):
        return np.maximum(F.base.metric(p[..., 0], c[..., 0]), F.fiber_metric(p[..., 1], c[..., 1]))

    return dist


@dataclass
class EntropyPair:
    skew: EntropyEstimate
    base: EntropyEstimate
    tolerance: float

    @property
    def agree(self) -> bool:
        return abs(self.skew.value - self.base.value) <= self.tolerance


def ledrappier_walters_check(
    F: SkewDescriptor,
    mu: DiscretizedMeasure,
    base_sampler: Callable | None = None,
    eps_grid=DEFAULT_EPS_GRID,
    n_max: int = 12,
    samples: int = 1_000_000,
    seed: int = 0,
    n_settle: int = 30,
    centers: int = 32,
    threads: int = 1,
    tolerance: float = 0.05,
) -> EntropyPair:
    """Brin-Katok entropies of the lift (product metric) and of the base measure."""
    sampler = base_sampler or (lambda rng, size: mu.sample(rng, size))
    base = brin_katok_entropy(
        F.base, sampler, eps_grid=eps_grid, n_max=n_max, samples=samples, seed=seed, centers=centers, threads=threads
    )
    seqs = np.random.SeedSequence(seed).spawn(3)
    lo, hi = F.fiber_bounds

    def lifted(seq, size):
        rng = np.random.default_rng(seq)
        x0 = np.asarray(sampler(rng, size), dtype=float)
        y0 = lo + (hi - lo) * rng.random(size)
        x, y = _skew_orbit(F, x0, y0, n_settle)
        return np.stack([x, y], axis=-1)

    pts = lifted(seqs[1], samples)
    ctr = lifted(seqs[2], centers)

    def orbits(p):
        out = np.empty((n_max,) + p.shape)
        out[0] = p
        for i in range(1, n_max):
            x, y = out[i - 1][..., 0], out[i - 1][..., 1]
            out[i][..., 0] = F.base.evaluate(x)
            out[i][..., 1] = F.fiber_map(x, y)
        return out

    counts = bowen_counts(orbits(pts), orbits(ctr), _skew_distance(F), eps_grid, threads)
    skew = entropy_from_counts(counts, samples, eps_grid)
    return EntropyPair(skew=skew, base=base, tolerance=tolerance)


# ---------------------------------------------------------------------------
# uniqueness perturbations


@dataclass
class PerturbationFamily:
    phi: Potential
    psi: Potential
    center: float
    scales: np.ndarray
    members: list


@dataclass
class UniquenessResult:
    family: PerturbationFamily
    selection: list
    equilibrium_gaps: np.ndarray


def uniqueness_family(
    map: MapDescriptor,
    phi: Potential,
    psi: Potential,
    mu_i,
    scales: Callable | None = None,
    count: int = 32,
    candidates: Optional[list] = None,
    depth: int | None = None,
) -> UniquenessResult:
    """Members ``phi - a_n (psi - int psi dmu_i)`` with a selection table over candidates.

    For each member the table lists ``h + int phi_n`` for every candidate
    (entropy of the candidate's cell chain, zero for atomic measures) and
    the winning index.  With ``depth`` the member's spectral equilibrium is
    computed and its weak-* distance to ``mu_i`` recorded.
    """
    scales = scales or (lambda n: 1.0 / n)
    a = np.array([float(scales(n)) for n in range(1, count + 1)])
    if np.any(a <= 0) or np.any(np.diff(a) >= 0):
        raise PreconditionError("scales a_n must be positive and strictly decreasing")
    c = mu_i.integrate(psi)
    members = [
        explicit_potential(
            lambda x, an=an: np.asarray(phi(x), dtype=float) - an * (np.asarray(psi(x), dtype=float) - c),
            name=f"{phi.name}-{an:.6g}({psi.name}-{c:.6g})",
        )
        for an in a
    ]
    family = PerturbationFamily(phi=phi, psi=psi, center=float(c), scales=a, members=members)
    candidates = candidates or [mu_i]
    entropies = [m.entropy() for m in candidates]
    selection = []
    for n, (an, member) in enumerate(zip(a, members), start=1):
        values = [h + m.integrate(member) for h, m in zip(entropies, candidates)]
        selection.append({"n": n, "a_n": float(an), "values": values, "winner": int(np.argmax(values))})
    gaps = np.full(count, np.nan)
    if depth is not None:
        for n, member in enumerate(members):
            mu = equilibrium_measure(assemble_transfer_matrix(map, member, depth))
            gaps[n] = weak_star_distance(mu, mu_i)
    return UniquenessResult(family=family, selection=selection, equilibrium_gaps=gaps)
