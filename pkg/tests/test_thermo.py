import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from openzoom import dynamics as dyn
from openzoom import holes
from openzoom import thermo
from openzoom._spectral import ReducibilityWarning
from openzoom.errors import AlignmentError, ClassificationError, DiscretizationError, InvarianceError
from openzoom.measures import (
    bernoulli_measure,
    bernoulli_sampler,
    constant_sampler,
    dirac,
    lebesgue_measure,
    periodic_orbit_measure,
    uniform_on,
)
from openzoom.transfer import assemble_transfer_matrix

D = dyn.doubling_map()
PL = dyn.piecewise_linear_map([1 / 3])
S2 = dyn.full_shift(2)
LOG2 = np.log(2)


def cyclic_windows(word: int, n: int, width: int = 3):
    bits = [(word >> (n - 1 - i)) & 1 for i in range(n)]
    for j in range(n):
        yield tuple(bits[(j + t) % n] for t in range(width))


# -- transfer matrices --------------------------------------------------------


def test_depth_one_matrices():
    T0 = assemble_transfer_matrix(D, dyn.constant_potential(0.0), 1)
    assert np.array_equal(T0.dense(), np.ones((2, 2)))
    T1 = assemble_transfer_matrix(D, dyn.constant_potential(-LOG2), 1)
    assert T1.dense() == pytest.approx(np.full((2, 2), 0.5))


def test_hole_mask_zeroes_row_and_column():
    T = assemble_transfer_matrix(D, dyn.constant_potential(0.0), 3, holes.interval_hole([[0, 0.125]]))
    L = T.dense()
    assert L.shape == (8, 8)
    assert np.all(L[0] == 0) and np.all(L[:, 0] == 0)
    # two entries per column; column 0 loses both, row 0 also held the entry from column 4
    assert np.count_nonzero(L) == 16 - 2 - 1


def test_misaligned_hole():
    with pytest.raises(AlignmentError):
        assemble_transfer_matrix(D, dyn.constant_potential(0.0), 3, holes.interval_hole([[0.1, 0.2]]))


def test_non_markov_map_rejected():
    with pytest.raises(DiscretizationError):
        assemble_transfer_matrix(dyn.quadratic_map(1.8), dyn.constant_potential(0.0), 3)


def test_geometric_columns_are_stochastic_for_piecewise_linear():
    T = assemble_transfer_matrix(PL, dyn.geometric_potential(PL), 4)
    assert np.asarray(T.lebesgue_normalized().sum(axis=0)).ravel() == pytest.approx(np.ones(T.size), abs=1e-10)


def test_coordinate_dump():
    T = assemble_transfer_matrix(D, dyn.constant_potential(0.0), 1)
    lines = T.coordinate_text().strip().splitlines()
    assert len([ln for ln in lines if not ln.startswith("#")]) == 4


# -- pressure -----------------------------------------------------------------


@pytest.mark.parametrize("t", [0, 0.5, 1, 2])
def test_doubling_geometric_pressure(t):
    phi = dyn.constant_potential(-t * LOG2)
    assert thermo.spectral_pressure(D, phi, 6).value == pytest.approx((1 - t) * LOG2, abs=1e-10)
    assert thermo.periodic_orbit_pressure(D, phi, 12).value == pytest.approx((1 - t) * LOG2, abs=1e-3)


def test_periodic_points_are_all_fixed_points_of_the_iterate():
    pp = thermo.periodic_points(D, 10)
    pts = np.sort(np.asarray(pp.points)[pp.valid])
    assert np.allclose(pts, np.arange(2**10 - 1) / (2**10 - 1), atol=1e-12)
    P = thermo.periodic_orbit_pressure(D, dyn.constant_potential(0.0), 10).value
    assert P == pytest.approx(np.log(2**10 - 1) / 10, abs=1e-12)
    assert P == pytest.approx(0.69305, abs=1e-5)


def test_periodic_constant_shift():
    P = thermo.periodic_orbit_pressure(D, dyn.constant_potential(0.7), 10).value
    assert P == pytest.approx(0.7 + np.log(2**10 - 1) / 10, abs=1e-12)


@pytest.mark.parametrize("p", [0.3, 0.5, 0.9])
def test_bernoulli_equilibrium(p):
    phi = dyn.cylinder_potential(S2, [np.log(p), np.log(1 - p)])
    T = assemble_transfer_matrix(S2, phi, 1)
    assert thermo.pressure(T).value == pytest.approx(0.0, abs=1e-10)
    mu = thermo.equilibrium_measure(T)
    assert mu.weights == pytest.approx([p, 1 - p], abs=1e-10)


def test_two_value_locally_constant_pressure():
    phi = dyn.cylinder_potential(S2, [0.4, -1.3])
    assert thermo.spectral_pressure(S2, phi, 1).value == pytest.approx(np.log(np.exp(0.4) + np.exp(-1.3)), abs=1e-12)


def test_equilibrium_examples():
    mu = thermo.equilibrium_measure(assemble_transfer_matrix(D, dyn.constant_potential(0.0), 4))
    assert mu.weights == pytest.approx(np.full(16, 1 / 16), abs=1e-12)
    assert mu.invariance_defect() <= 1e-10
    nu = thermo.equilibrium_measure(assemble_transfer_matrix(PL, dyn.geometric_potential(PL), 4))
    lo, hi = PL.cylinders(4)
    assert nu.weights == pytest.approx(hi - lo, abs=1e-12)


POTENTIALS = {
    "zero": (D, dyn.constant_potential(0.0)),
    "sine": (D, dyn.sine_potential(1.0)),
    "pl_geometric": (PL, dyn.geometric_potential(PL)),
    "pl_half": (PL, dyn.geometric_potential(PL, 0.5)),
}


@pytest.mark.parametrize("name", sorted(POTENTIALS))
@given(c=st.floats(-5, 5))
@settings(max_examples=10, deadline=None)
def test_constant_shift_all_methods(name, c):
    f, phi = POTENTIALS[name]
    shifted = phi.plus(c)
    for method in (
        lambda g: thermo.spectral_pressure(f, g, 5).value,
        lambda g: thermo.periodic_orbit_pressure(f, g, 8).value,
    ):
        assert method(shifted) == pytest.approx(method(phi) + c, abs=1e-10)


@pytest.mark.parametrize("name", sorted(POTENTIALS))
@given(c=st.floats(-5, 5))
@settings(max_examples=10, deadline=None)
def test_argmax_invariance(name, c):
    f, phi = POTENTIALS[name]
    a = thermo.equilibrium_measure(assemble_transfer_matrix(f, phi, 5))
    b = thermo.equilibrium_measure(assemble_transfer_matrix(f, phi.plus(c), 5))
    assert b.weights == pytest.approx(a.weights, abs=1e-10)


@pytest.mark.parametrize("name", sorted(POTENTIALS))
def test_method_agreement(name):
    f, phi = POTENTIALS[name]
    spectral = thermo.spectral_pressure(f, phi, 10).value
    periodic = thermo.periodic_orbit_pressure(f, phi, 12).value
    assert spectral == pytest.approx(periodic, abs=1e-3)


@pytest.mark.parametrize("name", sorted(POTENTIALS))
def test_equilibrium_defect_small(name):
    f, phi = POTENTIALS[name]
    T = assemble_transfer_matrix(f, phi, 8)
    mu = thermo.equilibrium_measure(T)
    assert abs(thermo.variational_defect(f, phi, mu, thermo.pressure(T))) <= 1e-6


# -- open pressure ------------------------------------------------------------


def word_count_growth(forbidden: set, n_max: int = 18) -> float:
    """Growth rate of binary words whose 3-windows avoid ``forbidden``, by enumeration."""
    counts = []
    for n in range(3, n_max + 1):
        words = np.arange(2**n)
        ok = np.ones(words.size, dtype=bool)
        for j in range(n - 2):
            ok &= ~np.isin((words >> (n - 3 - j)) & 7, list(forbidden))
        counts.append(np.count_nonzero(ok))
    counts = np.log(np.asarray(counts, dtype=float))
    n = np.arange(3, n_max + 1)
    return float(np.polyfit(n[8:], counts[8:], 1)[0])


def test_open_pressure_examples():
    zero = dyn.constant_potential(0.0)
    assert thermo.open_pressure(D, zero, holes.EMPTY_HOLE, 4).value == pytest.approx(LOG2, abs=1e-12)
    assert thermo.open_pressure(D, zero, holes.interval_hole([[0, 0.5]])).value == pytest.approx(0.0, abs=1e-12)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ReducibilityWarning)
        middle = thermo.open_pressure(D, zero, holes.interval_hole([[0.125, 0.375]])).value
    assert middle == pytest.approx(word_count_growth({0b001, 0b010}), abs=1e-3)


def test_open_pressure_empty_survivor_block():
    assert thermo.open_pressure(D, dyn.constant_potential(0.0), holes.interval_hole([[0, 1]]), 2).value == -np.inf


def test_open_pressure_reports_reducibility():
    with pytest.warns(ReducibilityWarning):
        est = thermo.open_pressure(D, dyn.constant_potential(0.0), holes.interval_hole([[0.125, 0.375]]))
    assert est.reducible


@given(st.integers(0, 7), st.integers(1, 8), st.integers(0, 7), st.integers(0, 7))
@settings(max_examples=30, deadline=None)
def test_open_pressure_hole_monotonicity(a, width, grow_left, grow_right):
    b = min(8, a + width)
    a2, b2 = max(0, a - grow_left), min(8, b + grow_right)
    phi = dyn.sine_potential(0.5)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ReducibilityWarning)
        small = thermo.open_pressure(D, phi, holes.interval_hole([[a / 8, b / 8]]), 3).value
        big = thermo.open_pressure(D, phi, holes.interval_hole([[a2 / 8, b2 / 8]]), 3).value
    assert small >= big - 1e-10


# -- zooming margin -----------------------------------------------------------


def margin_oracle(n: int, bump: float = 0.0) -> float:
    inside, outside = [], []
    for w in range(2**n - 1):  # the all-ones word repeats the point 0
        hits = sum(win in {(0, 0, 1), (0, 1, 0)} for win in cyclic_windows(w, n))
        (outside if hits else inside).append(bump * hits)
    return (np.log(np.sum(np.exp(inside))) - np.log(np.sum(np.exp(outside)))) / n


def test_zooming_margin_matches_itinerary_count():
    V = holes.interval_hole([[0.125, 0.375]])
    m = thermo.zooming_margin(D, dyn.constant_potential(0.0), V, 12)
    assert m < 0
    assert m == pytest.approx(margin_oracle(12), abs=1e-12)


def test_zooming_margin_empty_class():
    with pytest.raises(ClassificationError):
        thermo.zooming_margin(D, dyn.constant_potential(0.0), holes.EMPTY_HOLE, 12)


def test_zooming_margin_bump_sweep():
    V = holes.interval_hole([[0.125, 0.375]])
    heights = np.linspace(-4, 4, 9)
    margins = []
    for h in heights:
        phi = dyn.explicit_potential(lambda x, h=h: np.where(V.contains(x), h, 0.0), f"bump{h}")
        margins.append(thermo.zooming_margin(D, phi, V, 12))
        assert margins[-1] == pytest.approx(margin_oracle(12, h), abs=1e-10)
    assert np.all(np.diff(margins) < 0)
    assert margins[0] > 0 > margins[-1]


# -- entropy ------------------------------------------------------------------


def test_brin_katok_lebesgue():
    est = thermo.brin_katok_entropy(D, lambda rng, size: rng.random(size), samples=10**6, seed=0)
    assert est.value == pytest.approx(LOG2, abs=0.05)


def test_brin_katok_dirac():
    assert thermo.brin_katok_entropy(D, constant_sampler(0.0), samples=10_000, seed=0).value == pytest.approx(0, abs=1e-12)


def test_brin_katok_bernoulli():
    est = thermo.brin_katok_entropy(D, bernoulli_sampler([0.3, 0.7]), samples=10**6, seed=1)
    h = -(0.3 * np.log(0.3) + 0.7 * np.log(0.7))
    assert est.value == pytest.approx(h, abs=0.05)


def test_brin_katok_thread_independence():
    a = thermo.brin_katok_entropy(D, lambda rng, size: rng.random(size), samples=50_000, n_max=8, seed=4, threads=1)
    b = thermo.brin_katok_entropy(D, lambda rng, size: rng.random(size), samples=50_000, n_max=8, seed=4, threads=3)
    assert a.value == b.value and a.per_eps == b.per_eps


def test_markov_chain_entropy_of_bernoulli_measure():
    mu = bernoulli_measure(D, [0.3, 0.7], 4)
    assert mu.entropy() == pytest.approx(-(0.3 * np.log(0.3) + 0.7 * np.log(0.7)), abs=1e-12)


# -- variational defect -------------------------------------------------------


def test_variational_defects():
    zero = dyn.constant_potential(0.0)
    P = thermo.spectral_pressure(D, zero, 6)
    assert thermo.variational_defect(D, zero, lebesgue_measure(D, 6), P) == pytest.approx(0, abs=1e-6)
    assert thermo.variational_defect(D, zero, dirac(D, 0.0), P) == pytest.approx(LOG2, abs=1e-12)
    geo = dyn.geometric_potential(PL)
    leb = lebesgue_measure(PL, 6)
    assert leb.entropy() == pytest.approx(np.log(3) / 3 + 2 / 3 * np.log(1.5), abs=1e-12)
    zero_p = thermo.spectral_pressure(PL, geo, 6)
    assert zero_p.value == pytest.approx(0.0, abs=1e-12)
    assert thermo.variational_defect(PL, geo, leb, zero_p) == pytest.approx(0, abs=1e-3)


def test_variational_defect_requires_invariance():
    zero = dyn.constant_potential(0.0)
    with pytest.raises(InvarianceError):
        thermo.variational_defect(D, zero, uniform_on(D, 4, 0, 0.5), thermo.spectral_pressure(D, zero, 4))


@given(st.lists(st.floats(-2, 2), min_size=4, max_size=4))
@settings(max_examples=20, deadline=None)
def test_variational_principle_bounds_invariant_measures(values):
    # every invariant measure sits below the pressure: P - (h + int phi) >= 0
    phi = dyn.cylinder_potential(D, values)
    P = thermo.spectral_pressure(D, phi, 2)
    for p in (0.2, 0.5, 0.8):
        assert thermo.variational_defect(D, phi, bernoulli_measure(D, [p, 1 - p], 2), P) >= -1e-10
    for mu in (dirac(D, 0.0), periodic_orbit_measure(D, 1 / 3, 2)):
        assert thermo.variational_defect(D, phi, mu, P) >= -1e-10
