import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from openzoom import dynamics as dyn
from openzoom import stability as stab
from openzoom.errors import CapabilityError, PreconditionError, RefinementError
from openzoom.measures import (
    bernoulli_measure,
    dirac,
    lebesgue_measure,
    periodic_orbit_measure,
    uniform_on,
)

D = dyn.doubling_map()
LOG2 = np.log(2)
TAU = 2 * np.pi


def linear_skew(lam=0.25):
    return dyn.build_skew_product(D, lambda x, y: lam * y, lam, y0=0.0)


def sine_skew(lam=0.25):
    return dyn.build_skew_product(D, lambda x, y: lam * (y + np.sin(TAU * x)), lam)


# -- weak-* distance ----------------------------------------------------------


def test_weak_star_identical_measures():
    mu = bernoulli_measure(D, [0.3, 0.7], 3)
    assert stab.weak_star_distance(mu, mu) == 0.0


def test_weak_star_diracs():
    tests = [stab.WeakTest("x", lambda x: np.asarray(x, dtype=float), 1.0)]
    assert stab.weak_star_distance(dirac(D, 0.0), dirac(D, 0.5), tests) == pytest.approx(0.5)


def test_weak_star_cell_by_cell():
    mu = lebesgue_measure(D, 3)
    nu = bernoulli_measure(D, [0.3, 0.7], 3)
    tests = [
        stab.WeakTest("1", lambda x: np.ones_like(x), 0.0),
        stab.WeakTest("x", lambda x: x, 1.0),
        stab.WeakTest("sin", lambda x: np.sin(TAU * x), TAU),
        stab.WeakTest("cos", lambda x: np.cos(TAU * x), TAU),
    ]
    a = np.arange(8) / 8
    b = a + 1 / 8
    exact = [
        np.ones(8),
        (a + b) / 2,
        (np.cos(TAU * a) - np.cos(TAU * b)) / (TAU / 8),
        (np.sin(TAU * b) - np.sin(TAU * a)) / (TAU / 8),
    ]
    oracle = max(abs(np.dot(mu.weights - nu.weights, e)) for e in exact)
    assert oracle > 0
    assert stab.weak_star_distance(mu, nu, tests) == pytest.approx(oracle, abs=1e-12)


def test_weak_star_refinement_error():
    with pytest.raises(RefinementError):
        stab.weak_star_distance(lebesgue_measure(D, 3), lebesgue_measure(dyn.full_shift(2), 3))


def test_default_tests():
    tests = stab.default_tests()
    assert len(tests) == 2 + 2 * 8
    assert all(t.lipschitz >= 0 for t in tests)


# -- stability experiments ----------------------------------------------------


def test_temperature_sequence_closed_forms():
    t = 0.5
    entries = [(D, dyn.constant_potential(-(t + 1 / n) * LOG2)) for n in range(1, 17)]
    seq = stab.SystemSequence(entries, (D, dyn.constant_potential(-t * LOG2)))
    rep = stab.run_stability_experiment(seq, depth=6)
    gaps = np.array([r["pressure_gap"] for r in rep.rows])
    assert gaps == pytest.approx(LOG2 / np.arange(1, 17), abs=1e-10)
    assert np.all(rep.weak.max_gap <= 1e-12)
    assert rep.passed
    assert np.all(np.asarray(seq.gauge_phi) == pytest.approx(LOG2 / np.arange(1, 17)))
    assert np.all(np.asarray(seq.gauge_f) == 0)


def test_sine_sequence_gap_shrinks_like_one_over_n():
    entries = [(D, dyn.sine_potential(1 / n)) for n in range(1, 33)]
    seq = stab.SystemSequence(entries, (D, dyn.constant_potential(0.0)))
    rep = stab.run_stability_experiment(seq, depth=8)
    weak = rep.weak.max_gap
    assert rep.passed
    # first-order response of the sin moment: gap * n tends to 1/2
    assert weak[-1] * 32 == pytest.approx(0.5, abs=0.01)
    assert stab.non_increasing(weak[15:])


def test_break_point_sequence_converges_to_lebesgue():
    maps = [dyn.piecewise_linear_map([1 / 3 + 1 / (n + 3)]) for n in range(1, 17)]
    limit = dyn.piecewise_linear_map([1 / 3])
    seq = stab.SystemSequence(
        [(f, dyn.geometric_potential(f)) for f in maps], (limit, dyn.geometric_potential(limit))
    )
    rep = stab.run_stability_experiment(seq, depth=8)
    assert rep.weak.max_gap[-1] <= 1e-2
    assert all(abs(p) <= 1e-10 for p in rep.pressures)


def test_stability_report_rows_and_csv():
    entries = [(D, dyn.sine_potential(1 / n)) for n in range(1, 5)]
    rep = stab.run_stability_experiment(stab.SystemSequence(entries, (D, dyn.constant_potential(0.0))), depth=5)
    rows = rep.csv_rows()
    assert len(rows) == 4
    assert tuple(rows[0]) == stab.StabilityReport.columns


def test_stability_thread_independence():
    entries = [(D, dyn.sine_potential(1 / n)) for n in range(1, 9)]
    seq = stab.SystemSequence(entries, (D, dyn.constant_potential(0.0)))
    a = stab.run_stability_experiment(seq, depth=6, threads=1).csv_rows()
    b = stab.run_stability_experiment(seq, depth=6, threads=4).csv_rows()
    assert a == b


@given(st.lists(st.floats(0, 10), min_size=1, max_size=20))
def test_non_increasing_matches_definition(values):
    expected = all(b <= a + 1e-12 for a, b in zip(values, values[1:]))
    assert stab.non_increasing(values) == expected


# -- Cesaro averages ----------------------------------------------------------


def test_cesaro_invariant_start():
    mu = lebesgue_measure(D, 6)
    res = stab.cesaro_sequence(D, mu, 10)
    for eta in res.measures:
        assert eta.weights == pytest.approx(mu.weights, abs=1e-14)


def test_cesaro_dirac_quarter():
    res = stab.cesaro_sequence(D, dirac(D, 0.25), 20)
    k = np.arange(1, 21)
    assert np.asarray(res.defects) == pytest.approx(2 / k, abs=1e-12)


def test_cesaro_uniform_half_mixes_to_lebesgue():
    res = stab.cesaro_sequence(D, uniform_on(D, 8, 0, 0.5), 16)
    assert stab.non_increasing(res.defects)
    gaps = [stab.weak_star_distance(eta, lebesgue_measure(D, 8)) for eta in res.measures]
    assert gaps[-1] < gaps[0]
    assert gaps[-1] <= 0.1


# -- skew products ------------------------------------------------------------


def test_reduction_of_fiber_independent_potential():
    F = linear_skew()
    red = stab.reduce_skew_potential(F, lambda x, y: np.sin(TAU * x) + 0 * y, J=10)
    x = np.linspace(0, 1, 33)[:-1]
    y = np.linspace(-1, 1, 33)
    X, Y = np.meshgrid(x, y)
    assert np.all(red.u(X, Y) == 0)
    assert red.phi_tilde(X, Y) == pytest.approx(np.sin(TAU * X), abs=1e-14)


def test_reduction_of_fiber_coordinate():
    F = linear_skew(0.25)
    red = stab.reduce_skew_potential(F, lambda x, y: y, J=40)
    X, Y = np.meshgrid(np.linspace(0, 1, 17), np.linspace(-1, 1, 17))
    assert red.u(X, Y) == pytest.approx(Y / 0.75, abs=1e-14)
    assert np.abs(red.phi_tilde(X, Y)).max() <= red.tail_bound
    assert red.tail_bound == pytest.approx(0.25**40 / 0.75)


def test_reduction_with_square_fiber_term():
    F = linear_skew(0.25)
    red = stab.reduce_skew_potential(
        F, lambda x, y: np.cos(TAU * x) + y**2, J=20, holder_constant=1.0, holder_exponent=2.0
    )
    x = np.linspace(0, 1, 65)[:-1]
    assert red.base(x) == pytest.approx(np.cos(TAU * x), abs=1e-14)
    assert red.tail_bound == pytest.approx(0.25**40 / (1 - 0.25**2))


def test_telescoped_reduction_matches_direct_formula():
    F = linear_skew(0.5)
    phi = lambda x, y: np.sin(TAU * x) * (1 + y) + y**3  # noqa: E731
    red = stab.reduce_skew_potential(F, phi, J=30)
    X, Y = np.meshgrid(np.linspace(0, 1, 17)[:-1], np.linspace(-1, 1, 9))
    direct = phi(X, Y) - red.u(X, Y) + red.u(F.base.evaluate(X), F.fiber_map(X, Y))
    assert red.phi_tilde(X, Y) == pytest.approx(direct, abs=1e-12)


def test_reduction_needs_fixed_fiber_point():
    with pytest.raises(CapabilityError):
        stab.reduce_skew_potential(sine_skew(), lambda x, y: y)


@given(st.floats(0, 1, exclude_max=True), st.floats(-1, 1), st.integers(5, 40))
@settings(max_examples=30, deadline=None)
def test_homologous_birkhoff_sums(x, y, n):
    # S_n phi~ - S_n phi = u(F^n p) - u(p), so the averages agree up to 2 sup|u| / n
    F = linear_skew(0.25)
    phi = lambda a, b: np.sin(TAU * a) + b  # noqa: E731
    red = stab.reduce_skew_potential(F, phi, J=40)
    xs, ys, s_phi, s_tilde = np.array(x), np.array(y), 0.0, 0.0
    for _ in range(n):
        s_phi += float(phi(xs, ys))
        s_tilde += float(red.phi_tilde(xs, ys))
        xs, ys = F.base.evaluate(xs), F.fiber_map(xs, ys)
    assert abs(s_phi - s_tilde) / n <= 2 * (1 / 0.75) / n + 1e-12


def test_lift_linear_fiber():
    F = linear_skew(0.25)
    lift = stab.lift_equilibrium(F, lebesgue_measure(D, 8), n_settle=30, samples=100_000, seed=1)
    assert np.abs(lift.y).max() <= 0.25**30 * 2
    assert lift.fiber_spread <= lift.spread_bound
    assert lift.marginal_gap <= 1e-2


def test_lift_of_fixed_point():
    F = linear_skew(0.25)
    lift = stab.lift_equilibrium(F, dirac(D, 0.0), n_settle=30, samples=1000, seed=0)
    assert np.all(lift.x == 0) and np.abs(lift.y).max() <= 0.25**30


def test_lift_sine_fiber_is_reproducible_across_seeds():
    F = sine_skew(0.25)
    mu = lebesgue_measure(D, 8)
    a = stab.lift_equilibrium(F, mu, n_settle=30, samples=100_000, seed=1)
    b = stab.lift_equilibrium(F, mu, n_settle=30, samples=100_000, seed=2)
    assert a.fiber_spread <= a.spread_bound + 1e-15
    moments = [lambda x, y: y, lambda x, y: y**2, lambda x, y: y * np.sin(TAU * x), lambda x, y: y * np.cos(TAU * x)]
    for g in moments:
        assert abs(np.mean(g(a.x, a.y)) - np.mean(g(b.x, b.y))) <= 1e-2


@pytest.mark.parametrize(
    "phi_hat, tol",
    [
        (lambda x, y: np.zeros_like(np.asarray(x, dtype=float)), 1e-3),
        (lambda x, y: np.full(np.shape(x), -0.5 * LOG2), 1e-3),
        (lambda x, y: np.sin(TAU * np.asarray(x, dtype=float)), 1e-2),
    ],
    ids=["zero", "half_log2", "sine"],
)
def test_skew_pressure_gap(phi_hat, tol):
    for F in (linear_skew(), sine_skew()):
        assert stab.skew_pressure_gap(F, phi_hat, depth=10).gap <= tol


def test_skew_pressure_needs_fiber_constant_potential():
    with pytest.raises(PreconditionError):
        stab.skew_pressure_gap(linear_skew(), lambda x, y: y)


def test_ledrappier_walters_dirac():
    F = linear_skew()
    pair = stab.ledrappier_walters_check(
        F, dirac(D, 0.0), base_sampler=lambda rng, size: np.zeros(size), samples=10_000, seed=0
    )
    assert pair.skew.value == pytest.approx(0, abs=1e-12)
    assert pair.base.value == pytest.approx(0, abs=1e-12)
    assert pair.agree


def test_ledrappier_walters_sine_fiber():
    pair = stab.ledrappier_walters_check(
        sine_skew(), lebesgue_measure(D, 8), base_sampler=lambda rng, size: rng.random(size), samples=10**6, seed=0
    )
    assert pair.agree
    assert pair.base.value == pytest.approx(LOG2, abs=0.05)
    assert pair.skew.value == pytest.approx(LOG2, abs=0.05)


# -- uniqueness family --------------------------------------------------------


def test_uniqueness_atomic_candidates():
    psi = dyn.explicit_potential(lambda x: dyn.circle_distance(x, 0.0), "dist0")
    cands = [dirac(D, 0.0), periodic_orbit_measure(D, 1 / 3, 2)]
    res = stab.uniqueness_family(D, dyn.constant_potential(0.0), psi, cands[0], count=32, candidates=cands)
    assert res.family.center == 0.0
    for row in res.selection:
        a = row["a_n"]
        # both candidates have zero entropy; the integrals are exact
        assert row["values"][0] == pytest.approx(0.0, abs=1e-15)
        assert row["values"][1] == pytest.approx(-a / 3, abs=1e-15)
        if a <= 0.25:
            assert row["winner"] == 0


def test_uniqueness_members_follow_formula():
    psi = dyn.explicit_potential(lambda x: np.asarray(x, dtype=float), "x")
    res = stab.uniqueness_family(D, dyn.constant_potential(0.0), psi, lebesgue_measure(D, 8), count=8)
    x = np.linspace(0, 1, 11)[:-1]
    for n, member in enumerate(res.family.members, start=1):
        assert member(x) == pytest.approx(-(1 / n) * (x - 0.5), abs=1e-12)


def test_uniqueness_equilibria_approach_center():
    psi = dyn.explicit_potential(lambda x: np.asarray(x, dtype=float), "x")
    res = stab.uniqueness_family(D, dyn.constant_potential(0.0), psi, lebesgue_measure(D, 8), count=8, depth=8)
    gaps = np.asarray(res.equilibrium_gaps)
    assert stab.non_increasing(gaps)
    assert gaps[-1] < gaps[0]


def test_uniqueness_constant_direction_is_degenerate():
    psi = dyn.constant_potential(2.0)
    cands = [dirac(D, 0.0), periodic_orbit_measure(D, 1 / 3, 2)]
    res = stab.uniqueness_family(D, dyn.constant_potential(0.0), psi, cands[0], count=6, candidates=cands)
    x = np.linspace(0, 1, 7)
    for member in res.family.members:
        assert member(x) == pytest.approx(np.zeros_like(x), abs=1e-15)
    assert len({tuple(r["values"]) for r in res.selection}) == 1


def test_uniqueness_rejects_non_decreasing_scales():
    with pytest.raises(PreconditionError):
        stab.uniqueness_family(
            D, dyn.constant_potential(0.0), dyn.constant_potential(1.0), dirac(D, 0.0), scales=lambda n: 1.0
        )
