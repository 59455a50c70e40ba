import math

import numpy as np
import pytest

from conftest import DISK_H0, poly
from hypocrit import criterion as cr
from hypocrit import fiber
from hypocrit.errors import DomainError, InputError
from hypocrit.symbol import make_spec, tau_decomposition

H013 = -0.8598605188858822  # P = x^2, Q = x^2, k = 3 (oracle chain, tol 1e-12)


def test_trace_class_threshold():
    assert cr.trace_class_threshold(2, 2) == 4
    assert cr.trace_class_threshold(1, 4) == 2
    assert cr.trace_class_threshold(1, 2) == 2
    assert cr.trace_class_threshold(3, 4) == 4
    with pytest.raises(InputError):
        cr.trace_class_threshold(0, 2)


def test_k_below_threshold_message(disk):
    with pytest.raises(DomainError, match="k below trace-class threshold 4"):
        cr.classify(disk, 3)


def test_sign_of():
    assert cr.sign_of(1.0, 0.1) is cr.Sign.positive
    assert cr.sign_of(-1.0, 0.1) is cr.Sign.negative
    assert cr.sign_of(0.2, 0.1) is cr.Sign.indeterminate


def test_disk_closed_form(disk):
    closed = cr.H0_closed_Q0(disk, 4)
    assert closed.value == pytest.approx(DISK_H0, rel=1e-12)
    semi = cr.H0_semi_numeric(disk, 4)
    assert semi.value == pytest.approx(closed.value, rel=1e-8)


def test_disk_k5(disk):
    assert cr.H0_closed_Q0(disk, 5).value == pytest.approx(-math.pi**2 / 6, rel=1e-12)
    assert cr.H0_semi_numeric(disk, 5).value == pytest.approx(-math.pi**2 / 6, rel=1e-8)


def test_printed_moment_exponent_differs(disk):
    printed = cr.H0_closed_Q0(disk, 4, exponent="-k").value
    assert printed == pytest.approx(-2 * math.pi**2 / 9, rel=1e-10)
    assert printed != pytest.approx(cr.H0_semi_numeric(disk, 4).value, rel=1e-3)


def test_closed_q0_needs_q_zero(cross):
    with pytest.raises(InputError):
        cr.H0_closed_Q0(cross, 4)


@pytest.mark.parametrize("k", [3, 5])
def test_odd_dimension_vanishes(quartic1, k):
    assert abs(cr.H0_semi_numeric(quartic1, k).value) <= 1e-8
    assert cr.H0_closed_Q0(quartic1, k).value == 0.0


def test_xx_semi_numeric_matches_tau_moment(xx1):
    """For n = 1, k = 3 the leading coefficient is -3 pi int tau1 tau2^2 T^-2 dx."""
    ref = -3 * math.pi * cr.tau_moment(xx1, lambda t1, t2: t1 * t2 * t2, -2)
    assert ref == pytest.approx(H013, rel=1e-10)
    assert cr.H0_semi_numeric(xx1, 3).value == pytest.approx(H013, rel=1e-7)


def test_n3_k5_coefficient():
    r2 = poly(3, {(2, 0, 0): 1.0, (0, 2, 0): 1.0, (0, 0, 2): 1.0})
    spec = make_spec(r2, poly(3, {(1, 1, 0): 1.0}))
    ref = 2.5 * math.pi**2 * cr.tau_moment(spec, lambda t1, t2: t1 * t2**4, -2)
    assert cr.H0_semi_numeric(spec, 5).value == pytest.approx(ref, rel=1e-7)


def test_direct_oracle_agrees(disk, xx1):
    assert cr.H0_direct_oracle(disk, 4).value == pytest.approx(DISK_H0, rel=1e-3)
    assert cr.H0_direct_oracle(xx1, 3).value == pytest.approx(H013, rel=1e-3)


def test_classify_report(cross):
    rep = cr.classify(cross, 4, oracle=True)
    assert rep.consistent
    assert set(rep.routes) == {"semiNumeric", "directOracle"}
    assert rep.nonvanishing and rep.sign is cr.Sign.negative
    assert rep.margin >= 3
    assert rep.verdict.startswith("criterion satisfied")


def test_classify_odd_is_inconclusive(quartic1):
    rep = cr.classify(quartic1, 3)
    assert not rep.nonvanishing
    assert rep.verdict.startswith("inconclusive")


def test_inconsistent_routes_reported():
    routes = {"a": cr.RouteValue(1.0, 1e-6), "b": cr.RouteValue(2.0, 1e-6)}
    ok, notes = cr._consistent(routes)
    assert not ok and "a=1" in notes[0]


def test_tau1_range_cross(cross):
    tr = cr.tau1_range(cross)
    assert tr.inf == pytest.approx(0.8, abs=1e-6)
    assert tr.inf_at_infinity
    assert abs(abs(tr.inf_witness[0]) - abs(tr.inf_witness[1])) < 1e-5
    assert tr.sup == pytest.approx(1.0)


@pytest.mark.parametrize("alpha", [0.3, 1.0, 2.0])
def test_tau1_inf_formula(alpha):
    spec = make_spec(poly(2, {(2, 0): 1.0, (0, 2): 1.0}), poly(2, {(1, 1): alpha}))
    assert cr.tau1_inf(spec) == pytest.approx(4 / (4 + alpha**2), abs=1e-6)


def test_lemma_classification(cross, disk):
    rep = cr.lemma_n2_classify(cross)
    assert rep.classification is cr.LemmaClass.allAboveThreshold
    assert rep.predicted_sign is cr.Sign.negative
    assert rep.printed_polynomial_sign is cr.Sign.positive
    # the verdict's actual sign matches the lemma prediction
    assert cr.classify(cross, 4).sign is rep.predicted_sign
    assert rep.threshold == pytest.approx((3 - math.sqrt(3)) / 4)
    with pytest.raises(DomainError):
        cr.lemma_n2_classify(make_spec(poly(1, {(2,): 1.0})))


def test_alpha_sweep_continuity(disk):
    P = disk.P
    Qt = poly(2, {(1, 1): 1.0})
    res = cr.alpha_sweep(lambda a: make_spec(P, Qt * a), 4, [0.0, 1e-3, 0.5])
    assert res.rows[0].H0 == pytest.approx(DISK_H0, rel=1e-8)
    assert res.rows[1].H0 == pytest.approx(DISK_H0, rel=1e-5)
    assert res.crossings == []


def test_sweep_records_row_errors(disk):
    res = cr.alpha_sweep(lambda a: make_spec(disk.P, poly(2, {(1, 1): a})), 3, [0.1])
    row = res.rows[0]
    assert row.H0 is None and row.error.startswith("domain:")


def test_locate_sign_changes():
    rows = [cr.SweepRow(a, a - 0.37, 1e-9, cr.sign_of(a - 0.37, 1e-9), True, 4, "x")
            for a in np.linspace(0, 1, 6)]
    (root,) = cr.locate_sign_changes(rows)
    assert root == pytest.approx(0.37, abs=1e-9)


def test_discrepancies(disk, xx1):
    names = {d.name for d in cr.printed_formula_discrepancies(disk, 4)}
    assert {"c2kClosedFormSign", "momentExponent"} <= names
    d13 = {d.name: d for d in cr.printed_formula_discrepancies(xx1, 3)}["H013Coefficient"]
    assert d13.resolved == pytest.approx(2 * d13.printed, rel=1e-10)


def test_semi_numeric_gridless_invariance(cross):
    """Rotating coordinates by 90 degrees maps x1 x2 to -x1 x2; H0 depends on |Q_m| only."""
    flipped = make_spec(cross.P, cross.Q * -1.0)
    assert cr.H0_semi_numeric(flipped, 4).value == pytest.approx(cr.H0_semi_numeric(cross, 4).value, rel=1e-9)


def test_tau_decomposition_rejects_wrong_dim(cross):
    with pytest.raises(InputError):
        tau_decomposition(cross, np.zeros(3))
