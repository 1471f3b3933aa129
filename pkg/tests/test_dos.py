import json
import math

import numpy as np
import pytest

from doslab import discretize, dos, geometry, spectral
from doslab.errors import NumericalError, PreconditionError
from doslab.potential import (
    constant_potential,
    example_potential,
    from_function,
)

BOX = geometry.box(1.0, 2)
BALL = geometry.ball(1.0, 2)
EXAMPLE = example_potential()
FREE = constant_potential(0.0)
HALF_LOG_2 = 0.5 * math.log(2.0)
ONE_OVER_PI = 1.0 / math.pi

DENSE = dos.TracePolicy(method="dense")


def general_example():
    # same profile as the example potential but typed as a general
    # (non-homogeneous) potential, to force the direct-assembly path
    def f(x):
        q = x[0] * x[0] + x[1] * x[1]
        return abs(x[0] * x[1]) / q if q else 0.0

    return from_function(f, bound=0.5, name="example-general")


# -- oracle values ------------------------------------------------------------


def test_oracle_free_value():
    want = 1.0 / (4.0 * math.pi)
    assert dos.oracle_laplace(FREE, BOX, 1.0) == pytest.approx(want, rel=1e-14)
    assert dos.oracle_laplace(FREE, BALL, 1.0) == pytest.approx(want, rel=1e-14)


@pytest.mark.parametrize("c", [0.0, 1.3, -0.4])
def test_oracle_constant_closed_form(c):
    V = constant_potential(c)
    t = 0.7
    want = (4.0 * math.pi * t) ** (-1.0) * math.exp(-t * c)
    got_box = dos.oracle_laplace(V, BOX, t)
    got_ball = dos.oracle_laplace(V, BALL, t)
    assert got_box == want
    assert got_box == got_ball  # shape independence is exact, not approximate


def test_oracle_example_against_midpoint_quadrature():
    """Cross-check the quadrature oracle with a tensor midpoint rule."""

    def brute(m, t=1.0):
        x = -1.0 + (2.0 / m) * (np.arange(m) + 0.5)
        X, Y = np.meshgrid(x, x, indexing="ij")
        V = np.abs(X * Y) / (X * X + Y * Y)
        s = np.sum(np.exp(-t * V)) * (2.0 / m) ** 2
        return (4.0 * math.pi * t) ** (-1.0) * s / 4.0

    vals = [brute(m) for m in (256, 512, 1024)]
    # midpoint refinements must keep shrinking toward the same value
    assert abs(vals[2] - vals[1]) < abs(vals[1] - vals[0])
    got = dos.oracle_laplace(EXAMPLE, BOX, 1.0)
    assert got == pytest.approx(vals[2], rel=1e-5)


def test_oracle_rejects_nonpositive_t():
    with pytest.raises(PreconditionError):
        dos.oracle_laplace(FREE, BOX, 0.0)
    with pytest.raises(PreconditionError):
        dos.oracle_laplace(FREE, BOX, -1.0)


# -- finite-volume traces -----------------------------------------------------


def test_finite_volume_free_approaches_limit():
    # the Dirichlet boundary deficit is ~ -8.7% at R=20 even for the
    # continuum operator; R=40 is the smallest round size where the
    # true value sits inside the 5% window (-4.4%)
    pol = dos.TracePolicy(probes=512)
    got = dos.finite_volume_laplace(BOX, FREE, 40.0, 1.0, policy=pol, seed=3)
    want = 1.0 / (4.0 * math.pi)
    assert got == pytest.approx(want, rel=0.05)
    assert got < want  # the deficit has a definite sign


def test_finite_volume_example_matches_oracle():
    pol = dos.TracePolicy(probes=512)
    got = dos.finite_volume_laplace(BOX, EXAMPLE, 40.0, 1.0, policy=pol, seed=3)
    want = dos.oracle_laplace(EXAMPLE, BOX, 1.0)
    assert got == pytest.approx(want, rel=0.05)


def test_finite_volume_constant_is_shifted_free():
    c = 0.8
    t = 1.0
    a = dos.finite_volume_laplace(BOX, constant_potential(c), 3.0, t, policy=DENSE)
    b = dos.finite_volume_laplace(BOX, FREE, 3.0, t, policy=DENSE)
    assert a == pytest.approx(b * math.exp(-t * c), rel=1e-11)


def test_finite_volume_rejects_bad_radius():
    with pytest.raises(PreconditionError):
        dos.finite_volume_laplace(BOX, FREE, 0.0, 1.0)


@pytest.mark.parametrize("domain", [BOX, BALL])
@pytest.mark.parametrize("R", [2.0, 3.0])
def test_rescaled_equals_direct_assembly(domain, R):
    """Rescaling to hbar = 1/R must reproduce direct assembly on R*Omega."""
    a = dos.finite_volume_laplace(domain, EXAMPLE, R, 1.0, policy=DENSE, eta=0.1)
    b = dos.finite_volume_laplace(domain, general_example(), R, 1.0, policy=DENSE, eta=0.1)
    assert abs(a - b) <= 1e-10 * abs(a)


# -- sweeps -------------------------------------------------------------------


def test_sweep_discrepancy_decreases_free():
    rep = dos.sweep(BOX, FREE, ts=[1.0], hbars=[0.2, 0.1, 0.05], seed=0)
    rel = [col[0] for col in rep.rel_discrepancy()]
    assert rel[0] > rel[1] > rel[2]


@pytest.mark.parametrize("V", [FREE, EXAMPLE])
def test_sweep_monotone_dense(V):
    rep = dos.sweep(BOX, V, ts=[1.0], hbars=[0.9, 0.7, 0.5], policy=DENSE, seed=0)
    rel = [col[0] for col in rep.rel_discrepancy()]
    assert rel[0] > rel[1] > rel[2]
    for cell in rep.cells:
        assert cell["method"] == "dense"


def test_sweep_single_hbar_is_raw():
    rep = dos.sweep(BOX, FREE, ts=[0.5, 1.0], hbars=[0.8], policy=DENSE)
    assert rep.raw
    assert rep.extrapolated is None
    assert rep.extrapolated_rel_discrepancy() is None


def test_sweep_extrapolated_example_ball():
    pol = dos.TracePolicy(probes=512)
    rep = dos.sweep(BALL, EXAMPLE, ts=[1.0], hbars=[0.2, 0.1, 0.05], policy=pol, seed=7)
    err = rep.extrapolated_rel_discrepancy()[0]
    assert err < 0.02


def test_sweep_records_cell_failures():
    # hbar=30 asks for lattice spacing 3.0 on a width-2 box, which
    # cannot hold a single interior node; the column must fail cleanly
    rep = dos.sweep(BOX, FREE, ts=[0.5, 1.0], hbars=[30.0, 0.8, 0.6], policy=DENSE)
    assert rep.L_columns[0] == [None, None]
    bad = [c for c in rep.cells if c["hbar"] == 30.0]
    assert len(bad) == 2 and all(c["error"] for c in bad)
    good = [c for c in rep.cells if c["hbar"] != 30.0]
    assert all(c["error"] is None for c in good)
    assert all(v is not None for v in rep.extrapolated)
    json.dumps(rep.json_obj(timestamp="2026-01-01T00:00:00Z"))  # serializable


def test_sweep_input_validation():
    with pytest.raises(PreconditionError):
        dos.sweep(BOX, FREE, ts=[1.0], hbars=[0.1, 0.2])
    with pytest.raises(PreconditionError):
        dos.sweep(BOX, FREE, ts=[], hbars=[0.1])


def test_sweep_stochastic_reproducible():
    pol = dos.TracePolicy(probes=64)
    a = dos.sweep(BOX, FREE, ts=[0.5], hbars=[0.2], policy=pol, seed=11)
    b = dos.sweep(BOX, FREE, ts=[0.5], hbars=[0.2], policy=pol, seed=11)
    c = dos.sweep(BOX, FREE, ts=[0.5], hbars=[0.2], policy=pol, seed=12)
    assert a.L_columns == b.L_columns
    assert a.L_columns != c.L_columns


def test_report_self_consistent():
    rep = dos.sweep(BOX, EXAMPLE, ts=[0.5, 1.0], hbars=[0.9, 0.6], policy=DENSE)
    assert all(v > 0 for col in rep.L_columns for v in col)
    assert all(o > 0 for o in rep.oracle)
    for j, col in enumerate(rep.L_columns):
        for i, v in enumerate(col):
            assert rep.abs_discrepancy()[j][i] == abs(v - rep.oracle[i])
            assert rep.rel_discrepancy()[j][i] == abs(v - rep.oracle[i]) / rep.oracle[i]
    rows = rep.csv_rows()
    assert len(rows) == 4
    assert [r["L"] for r in rows] == [v for col in rep.L_columns for v in col]
    assert set(dos.CSV_COLUMNS) == set(rows[0])


# -- integrated density of states ---------------------------------------------


def test_free_ids_zero_below_threshold():
    assert dos.free_ids(0.3, 0.5, 2) == 0.0
    assert dos.free_ids(-5.0, 0.0, 3) == 0.0
    vals = dos.free_ids(np.array([-1.0, 0.5, 0.5 + 4 * math.pi]), 0.5, 2)
    assert vals[0] == 0.0 and vals[1] == 0.0
    assert vals[2] == pytest.approx(1.0, rel=1e-14)


def test_free_ids_closed_form_normalization():
    assert dos.free_ids(4.0 * math.pi, 0.0, 2) == pytest.approx(1.0, rel=1e-14)
    # d=1: (4 pi)^(-1/2) / Gamma(3/2) * sqrt(lambda) is 1 at lambda = pi^2
    assert dos.free_ids(math.pi**2, 0.0, 1) == pytest.approx(1.0, rel=1e-14)


@pytest.mark.parametrize("t", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("d", [1, 2, 3])
def test_free_ids_laplace_identity(d, t):
    """int e^(-t lam) dN(lam) must reproduce (4 pi t)^(-d/2)."""
    if d == 1:
        # quadratic grid: resolves the sqrt singularity of dN at 0
        lam = 80.0 * np.linspace(0.0, 1.0, 4001) ** 2
    else:
        lam = np.linspace(0.0, 80.0, 4001)
    curve = dos.free_ids_curve(0.0, d, lam)
    got = dos.laplace_of_ids(curve, t)
    want = (4.0 * math.pi * t) ** (-d / 2.0)
    assert got == pytest.approx(want, rel=2e-4)


def test_ids_curve_validation():
    with pytest.raises(NumericalError):
        dos.IDSCurve(np.array([0.0, 1.0]), np.array([1.0, 0.5]), "free-constant", 2)
    with pytest.raises(NumericalError):
        dos.IDSCurve(np.array([1.0, 0.0]), np.array([0.0, 1.0]), "free-constant", 2)
    with pytest.raises(PreconditionError):
        dos.IDSCurve(np.array([[0.0]]), np.array([[0.0]]), "free-constant", 2)


def test_ids_curve_csv_roundtrip():
    curve = dos.free_ids_curve(0.0, 2, np.linspace(0.0, 5.0, 7))
    text = curve.csv_text()
    lines = text.strip().split("\n")
    assert lines[0] == "lambda,value"
    lam, val = np.loadtxt(lines[1:], delimiter=",", unpack=True)
    assert np.array_equal(lam, curve.lambdas)
    assert np.array_equal(val, curve.values)


# -- surface averages ---------------------------------------------------------


def test_surface_variants_coincide_on_symmetric_domains():
    # sigma.n is constant on the boundary of both domains, so the
    # uniform and cone-weighted forms must agree
    lam = np.linspace(0.0, 30.0, 301)
    a = dos.surface_average_ids(EXAMPLE, BALL, lam, variant="uniform")
    b = dos.surface_average_ids(EXAMPLE, BALL, lam, variant="cone-weighted")
    assert np.max(np.abs(a.values - b.values)) <= 1e-10
    a = dos.surface_average_ids(EXAMPLE, BOX, lam, variant="uniform")
    b = dos.surface_average_ids(EXAMPLE, BOX, lam, variant="cone-weighted")
    assert np.max(np.abs(a.values - b.values)) <= 1e-12


@pytest.mark.parametrize("domain", [BOX, BALL])
@pytest.mark.parametrize("variant", ["uniform", "cone-weighted"])
def test_surface_constant_reduces_to_free(domain, variant):
    lam = np.linspace(0.0, 10.0, 101)
    curve = dos.surface_average_ids(constant_potential(0.7), domain, lam, variant=variant)
    assert np.allclose(curve.values, dos.free_ids(lam, 0.7, 2), rtol=1e-12, atol=0)


def test_surface_zero_below_min_potential():
    lam = np.array([-2.0, -0.5, 0.0, 1.0])
    curve = dos.surface_average_ids(EXAMPLE, BALL, lam)
    # vmin is the minimum over the boundary samples, not of the profile
    assert 0.0 <= curve.vmin <= 0.5
    assert curve.values[0] == 0.0 and curve.values[1] == 0.0 and curve.values[2] == 0.0
    assert curve.values[3] > 0.0


def test_surface_input_validation():
    lam = np.linspace(0.0, 1.0, 5)
    with pytest.raises(PreconditionError):
        dos.surface_average_ids(general_example(), BALL, lam)
    with pytest.raises(PreconditionError):
        dos.surface_average_ids(EXAMPLE, BALL, lam, variant="fancy")


@pytest.mark.parametrize("t", [1.0, 2.0])
@pytest.mark.parametrize("variant", ["uniform", "cone-weighted"])
def test_surface_laplace_matches_oracle_on_ball(t, variant):
    # for a homogeneous potential the boundary average equals the bulk
    # average, so the Laplace transform of the surface curve must land
    # on the oracle
    lam = np.linspace(0.0, 60.0, 3001)
    curve = dos.surface_average_ids(EXAMPLE, BALL, lam, variant=variant)
    got = dos.laplace_of_ids(curve, t, tail_tol=1e-6)
    want = dos.oracle_laplace(EXAMPLE, BALL, t)
    assert got == pytest.approx(want, rel=5e-3)


# -- empirical counting -------------------------------------------------------


def test_counting_tracks_free_curve():
    # at R=10 the boundary deficit still dominates below lambda ~ 4
    # (the exact continuum count at lambda=2 is 13.6% low), so the
    # comparison window starts at 4
    lam = np.arange(4.0, 11.0)
    curve = dos.empirical_ids(BOX, FREE, 10.0, lam)
    ratios = curve.values / dos.free_ids(lam, 0.0, 2)
    assert np.all(ratios > 0.9) and np.all(ratios < 1.1)


def test_counting_zero_below_spectrum():
    lam = np.linspace(0.0, 4.0, 9)
    curve = dos.empirical_ids(BOX, constant_potential(5.0), 2.0, lam, spacing=0.2)
    assert np.all(curve.values == 0.0)


def test_counting_right_continuous_steps():
    grid = discretize.build_grid(geometry.scale(BOX, 2.0), 0.4)
    lam_all = spectral.eigen_dense(discretize.assemble(grid, FREE, 1.0))
    lam0 = lam_all[0]
    vol = geometry.volume(geometry.scale(BOX, 2.0))
    curve = dos.empirical_ids(BOX, FREE, 2.0, [lam0 - 1e-9, lam0, lam0 + 1e-9], spacing=0.4)
    assert curve.values[0] == 0.0
    assert curve.values[1] == pytest.approx(1.0 / vol)  # the eigenvalue itself counts
    assert curve.values[1] == curve.values[2]


def test_counting_spacing_cap():
    with pytest.raises(PreconditionError):
        dos.empirical_ids(BOX, FREE, 10.0, [1.0], spacing=0.05)


def test_counting_complete_flag_kills_tail():
    curve = dos.empirical_ids(BOX, FREE, 2.0, [1e6], spacing=0.4)
    assert curve.complete
    assert dos.laplace_tail_bound(curve, 1.0) == 0.0


# -- Laplace transform of a curve ---------------------------------------------


def test_laplace_single_jump():
    lam0, t = 1.7, 0.9
    one = dos.IDSCurve(np.array([lam0]), np.array([1.0]), "empirical-counting", 2)
    assert dos.laplace_of_ids(one, t) == math.exp(-t * lam0)
    # the same jump written as a repeated grid point
    two = dos.IDSCurve(np.array([lam0, lam0]), np.array([0.0, 1.0]), "empirical-counting", 2)
    assert dos.laplace_of_ids(two, t) == math.exp(-t * lam0)
    with pytest.raises(PreconditionError):
        dos.laplace_of_ids(one, 0.0)


def test_laplace_tail_bound_is_tight_for_free_curve():
    # for c=0, d=2 the envelope is the curve itself, so bound and true
    # remainder agree: value + bound must reconstruct (4 pi t)^(-1)
    t = 0.5
    curve = dos.free_ids_curve(0.0, 2, np.linspace(0.0, 2.0, 2001))
    got = dos.laplace_of_ids(curve, t) + dos.laplace_tail_bound(curve, t)
    assert got == pytest.approx((4.0 * math.pi * t) ** (-1.0), rel=1e-4)
    with pytest.raises(NumericalError):
        dos.laplace_of_ids(curve, t, tail_tol=1e-3)


# -- mean extraction ----------------------------------------------------------


@pytest.mark.parametrize("c", [0.7, -0.4])
def test_mean_extraction_exact_on_constants(c):
    ts = [0.05, 0.1]
    vals = [(4.0 * math.pi * t) ** (-1.0) * math.exp(-t * c) for t in ts]
    assert dos.extract_mean(ts, vals, 2) == pytest.approx(c, abs=1e-12)
    assert dos.extract_mean(ts[:1], vals[:1], 2) == pytest.approx(c, abs=1e-12)


def test_mean_extraction_recovers_angular_averages():
    for dom, want in ((BOX, HALF_LOG_2), (BALL, ONE_OVER_PI)):
        vals = [dos.oracle_laplace(EXAMPLE, dom, t) for t in (0.05, 0.1)]
        got = dos.extract_mean([0.05, 0.1], vals, 2)
        assert got == pytest.approx(want, abs=1e-3)


def test_mean_extraction_validation():
    with pytest.raises(PreconditionError):
        dos.extract_mean([0.1], [0.5, 0.6], 2)
    with pytest.raises(NumericalError):
        dos.extract_mean([0.05, 0.1], [0.5, -0.1], 2)
    with pytest.raises(PreconditionError):
        dos.extract_mean([0.1, 0.1], [0.5, 0.5], 2)


# -- the shape comparison -----------------------------------------------------


def test_counterexample_constant_shows_no_difference():
    rep = dos.counterexample(
        potential=constant_potential(0.5),
        ts=(0.5, 1.0),
        hbars=(0.8, 0.5),
        policy=DENSE,
    )
    assert rep.oracle_gap == 0.0  # exactly shape-independent
    assert not rep.oracle_differ
    assert rep.oracle_mean_a == pytest.approx(0.5, abs=1e-10)
    assert rep.empirical_gap < 1e-9
    assert not rep.empirical_differ
    assert rep.empirical_mean_a == pytest.approx(0.5, abs=1e-9)
    json.dumps(rep.json_obj(timestamp="2026-01-01T00:00:00Z"))


def test_counterexample_separates_box_from_ball():
    rep = dos.counterexample(ts=(0.4, 0.8), hbars=(0.5, 0.4), policy=DENSE)
    assert rep.oracle_mean_a == pytest.approx(HALF_LOG_2, abs=1e-3)
    assert rep.oracle_mean_b == pytest.approx(ONE_OVER_PI, abs=1e-3)
    assert rep.oracle_differ
    # the discretized extraction at hbar=0.4 keeps most of the true
    # gap 0.02827 and clears the half-gap threshold
    assert rep.empirical_mean_a == pytest.approx(HALF_LOG_2, abs=5e-3)
    assert rep.empirical_mean_b == pytest.approx(ONE_OVER_PI, abs=5e-3)
    assert rep.empirical_gap > 0.014
    assert rep.empirical_differ


def test_counterexample_validation():
    with pytest.raises(PreconditionError):
        dos.counterexample(ts=(1.0,))
    with pytest.raises(PreconditionError):
        dos.counterexample(domain_a=geometry.box(1.0, 3))
    with pytest.raises(PreconditionError):
        dos.counterexample(potential=general_example())


def test_trace_policy_validation():
    with pytest.raises(PreconditionError):
        dos.TracePolicy(method="magic")
    with pytest.raises(PreconditionError):
        dos.TracePolicy(probes=4)
    assert dos.TracePolicy().resolve(10) == "dense"
    assert dos.TracePolicy().resolve(10**6) == "stochastic"
    assert dos.TracePolicy(method="stochastic").resolve(10) == "stochastic"


def test_column_seed_decorrelates():
    seeds = {dos.column_seed(s, j) for s in range(4) for j in range(4)}
    assert len(seeds) == 16
    assert dos.column_seed(3, 2) == dos.column_seed(3, 2)
