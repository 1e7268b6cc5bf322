"""Acceptance gate: one verdict line per criterion, at the contracted tolerances.

Run with ``pytest tests/test_acceptance.py -v``; the verdict lines appear in
the ``acceptance criteria`` section of the terminal summary.
"""

import io
import sys
import warnings

import numpy as np
import pytest
from conftest import record

from openzoom import dynamics as dyn
from openzoom import holes
from openzoom import open_system as osys
from openzoom import stability as stab
from openzoom import thermo
from openzoom import zooming as zm
from openzoom.cli import parse_config, run_config
from openzoom.measures import dirac, lebesgue_measure, periodic_orbit_measure
from openzoom.reports import report_body
from openzoom.transfer import assemble_transfer_matrix

LOG2 = np.log(2)
TAU = 2 * np.pi
D = dyn.doubling_map()


def word_survivor_slope(forbidden, width=3, n_max=18, lo=8):
    """Escape rate from enumerating binary words whose windows avoid ``forbidden``."""
    L = n_max + width - 1
    words = np.arange(2**L, dtype=np.int64)
    alive = np.ones(words.size, dtype=bool)
    logm = []
    for t in range(n_max):
        alive &= ~np.isin((words >> (L - width - t)) & (2**width - 1), list(forbidden))
        logm.append(np.log(np.count_nonzero(alive)) - L * np.log(2))
    n = np.arange(1, n_max + 1)
    return -np.polyfit(n[lo:], np.asarray(logm)[lo:], 1)[0]


def test_criterion_1_closed_pressure():
    worst_s, worst_p = 0.0, 0.0
    for t in (0, 0.5, 1, 2):
        phi = dyn.constant_potential(-t * LOG2)
        worst_s = max(worst_s, abs(thermo.spectral_pressure(D, phi, 8).value - (1 - t) * LOG2))
        worst_p = max(worst_p, abs(thermo.periodic_orbit_pressure(D, phi, 12).value - (1 - t) * LOG2))
    ok = worst_s <= 1e-10 and worst_p <= 1e-3
    record(1, ok, f"spectral err {worst_s:.1e} <= 1e-10, periodic err {worst_p:.1e} <= 1e-3")
    assert ok


def test_criterion_2_bernoulli_equilibrium():
    S = dyn.full_shift(2)
    worst_p, worst_w = 0.0, 0.0
    for p in (0.3, 0.5, 0.9):
        T = assemble_transfer_matrix(S, dyn.cylinder_potential(S, [np.log(p), np.log(1 - p)]), 1)
        worst_p = max(worst_p, abs(thermo.pressure(T).value))
        worst_w = max(worst_w, np.abs(thermo.equilibrium_measure(T).weights - [p, 1 - p]).max())
    ok = worst_p <= 1e-10 and worst_w <= 1e-10
    record(2, ok, f"pressure err {worst_p:.1e}, weight err {worst_w:.1e}, both <= 1e-10")
    assert ok


def test_criterion_3_escape_rates():
    half = holes.interval_hole([[0, 0.5]])
    mc = osys.escape_rate_mc(D, half, n_max=20, samples=10**6, seed=7)
    sp = osys.escape_rate_spectral(D, half)
    small = holes.interval_hole([[0, 0.125]])
    spectral = osys.escape_rate_spectral(D, small, 3).value
    exact = osys.escape_rate_exact(D, small, 20).value
    enumerated = word_survivor_slope({0b000})
    e1, e2 = abs(mc.value - LOG2), abs(sp.value - LOG2)
    e3, e4 = abs(spectral - exact), abs(spectral - enumerated)
    ok = e1 <= 0.02 and e2 <= 0.02 and e3 <= 1e-3 and e4 <= 1e-3
    record(
        3,
        ok,
        f"MC {mc.value:.4f}, spectral {sp.value:.4f} vs log 2 (<= 0.02); "
        f"[0,1/8) spectral {spectral:.6f} vs exact slope {exact:.6f} and enumeration {enumerated:.6f} (<= 1e-3)",
    )
    assert ok


def test_criterion_4_hyperbolic_times():
    freq = zm.time_frequency(zm.detect_hyperbolic_times(D, 0.3, 100, 0.5, 0.1), 100)
    none = zm.time_frequency(zm.detect_hyperbolic_times(D, 0.3, 100, 0.4, 0.1), 100)
    PL = dyn.piecewise_linear_map([1 / 3])
    c = zm.exponential_contraction(np.log(1.5))
    rng = np.random.default_rng(2024)
    xs, ns = rng.random(50), rng.integers(1, 9, 50)
    passed = sum(zm.verify_zooming_inequality(PL, x, int(n), c, 0.05).passed for x, n in zip(xs, ns))
    ok = freq == 1.0 and none == 0.0 and passed == 50
    record(4, ok, f"sigma=1/2 frequency {freq}, sigma=0.4 frequency {none}, PL zooming {passed}/50")
    assert ok


def test_criterion_5_contraction_validator():
    grid = np.linspace(0.01, 0.99, 50)
    exp_rep = zm.validate_contraction(zm.exponential_contraction(0.5), 32, grid)
    sq_rep = zm.validate_contraction(zm.lipschitz_contraction(dyn.power_weights(2, 1)), 32, grid)
    bad = zm.validate_contraction(zm.lipschitz_contraction(dyn.power_weights(2, 0.1)), 32, grid)
    sg = bad.conditions["semigroup"]
    ok = exp_rep.passed and sq_rep.passed and not sg.passed and tuple(sg.counterexample[:2]) == (1, 1)
    record(5, ok, f"exponential {exp_rep.passed}, (n+1)^-2 {sq_rep.passed}, (n+0.1)^-2 semigroup counterexample {sg.counterexample[:2]}")
    assert ok


def test_criterion_6_sine_sequence():
    entries = [(D, dyn.sine_potential(1 / n)) for n in range(1, 33)]
    rep = stab.run_stability_experiment(stab.SystemSequence(entries, (D, dyn.constant_potential(0.0))), depth=10)
    weak = np.asarray(rep.weak.max_gap)
    pgap = np.array([r["pressure_gap"] for r in rep.rows])
    trend = stab.non_increasing(weak[15:]) and stab.non_increasing(pgap[15:])
    ok = trend and weak[-1] <= 1e-2 and pgap[-1] <= 1e-2
    record(
        6,
        ok,
        f"sine: trend n=16..32 {trend}, final weak gap {weak[-1]:.4f} (<= 1e-2), final pressure gap {pgap[-1]:.1e} (<= 1e-2)",
    )
    assert ok


def test_criterion_6_break_point_sequence():
    maps = [dyn.piecewise_linear_map([1 / 3 + 1 / (n + 3)]) for n in range(1, 33)]
    limit = dyn.piecewise_linear_map([1 / 3])
    seq = stab.SystemSequence([(f, dyn.geometric_potential(f)) for f in maps], (limit, dyn.geometric_potential(limit)))
    rep = stab.run_stability_experiment(seq, depth=10)
    final = float(rep.weak.max_gap[-1])
    ok = final <= 1e-2
    record(6, ok, f"break points: final weak gap to Lebesgue {final:.1e} (<= 1e-2)")
    assert ok


def test_criterion_7_skew_suite():
    lam = 0.25
    F = dyn.build_skew_product(D, lambda x, y: lam * y, lam, y0=0.0)
    red = stab.reduce_skew_potential(F, lambda x, y: y, J=40)
    X, Y = np.meshgrid(np.linspace(0, 1, 257)[:-1], np.linspace(-1, 1, 65))
    sup = float(np.abs(red.phi_tilde(X, Y)).max())
    gaps = [
        stab.skew_pressure_gap(F, g, depth=10).gap
        for g in (
            lambda x, y: np.zeros(np.shape(x)),
            lambda x, y: np.full(np.shape(x), -0.5 * LOG2),
            lambda x, y: np.sin(TAU * np.asarray(x, dtype=float)),
        )
    ]
    pair = stab.ledrappier_walters_check(
        F, lebesgue_measure(D, 8), base_sampler=lambda rng, size: rng.random(size), samples=10**6, seed=0
    )
    ok = sup <= red.tail_bound and max(gaps) <= 1e-2 and pair.agree
    record(
        7,
        ok,
        f"sup|phi~| {sup:.1e} <= tail {red.tail_bound:.1e}; pressure gaps max {max(gaps):.1e} (<= 1e-2); "
        f"entropies {pair.skew.value:.4f} vs {pair.base.value:.4f} (<= 0.05)",
    )
    assert ok


def test_criterion_8_uniqueness_family():
    psi = dyn.explicit_potential(lambda x: dyn.circle_distance(x, 0.0), "dist0")
    cands = [dirac(D, 0.0), periodic_orbit_measure(D, 1 / 3, 2)]
    res = stab.uniqueness_family(D, dyn.constant_potential(0.0), psi, cands[0], count=32, candidates=cands)
    checked, ok = 0, True
    for row in res.selection:
        if row["a_n"] > 0.25:
            continue
        checked += 1
        # psi integrates to 0 under delta_0 and to 1/3 on the 2-cycle {1/3, 2/3}
        direct = [0.0, -row["a_n"] / 3]
        ok &= row["winner"] == 0 and row["values"][0] > row["values"][1]
        ok &= np.allclose(row["values"], direct, atol=1e-15)
    record(8, bool(ok), f"delta_0 strictly preferred for {checked} members with a_n <= 1/4, values match direct evaluation")
    assert ok


def _body(text: str, threads: int, seed: int) -> str:
    cfg = parse_config(text, seed)
    buf, old = io.StringIO(), sys.stdout
    sys.stdout = buf
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            run_config(cfg, None, threads, seed)
    finally:
        sys.stdout = old
    return report_body(buf.getvalue())


@pytest.mark.parametrize(
    "name, text",
    [
        ("mc escape", 'command = "escape"\nhole = [[0.0, 0.5]]\nmethod = "mc"\nsamples = 1000000\n'),
        ("skew entropy", 'command = "skew"\nsamples = 1000000\n'),
    ],
)
def test_criterion_9_reproducibility(name, text):
    one = _body(text, 1, 7)
    eight = _body(text, 8, 7)
    ok = one == eight
    record(9, ok, f"{name}: 1 vs 8 threads byte-identical {ok}")
    assert ok
