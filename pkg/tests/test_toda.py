"""Toda lattice flows, conserved quantities, tau checks."""

import numpy as np
import pytest

from solitonlab import toda
from solitonlab.diffpoly import DiffPoly, zero
from solitonlab.shiftop import site, shift_poly
from solitonlab.tau import SolitonSpec, tau_soliton, trivial_toda_tau


def _rand_field(rng, n=6):
    phi = rng.uniform(-0.5, 0.5, n)
    u0 = rng.uniform(-0.4, 0.4, n)
    f = toda.TodaField.from_phi(phi)
    return toda.TodaField(f.c, u0)


def test_fixed_point():
    f = toda.TodaField(np.ones(5), np.zeros(5))
    dlogc, du0 = toda.flow_rhs(f)
    assert np.allclose(dlogc, 0) and np.allclose(du0, 0)
    dc, du = toda.chain_rhs(f)
    assert np.allclose(dc, 0) and np.allclose(du, 0)


def test_telescoping_sum():
    rng = np.random.default_rng(4)
    f = _rand_field(rng)
    dlogc, _ = toda.flow_rhs(f)
    assert abs(np.sum(dlogc)) < 1e-14


def test_zero_curvature_gives_flow_system():
    eqs = toda.zero_curvature_system()
    assert set(eqs) == {-1, 0}
    # shift -1: d1_c(n) - c(n) (u0(n) - u0(n-1)) = 0
    expected_m1 = site("d1_c") - site("c") * (site("u0") - site("u0", -1))
    assert eqs[-1] == expected_m1
    # shift 0: -dm1_u0(n) - (c(n+1) - c(n)) = 0
    expected_0 = -site("dm1_u0") - (site("c", 1) - site("c"))
    assert eqs[0] == expected_0


def test_residue_shift_examples():
    from solitonlab.shiftop import PsDiffOp, residue_shift

    b1 = PsDiffOp({1: DiffPoly.const(1), 0: site("u0")})
    assert residue_shift(b1) == site("u0")
    # e^{d_n} c(n) = c(n+1) e^{d_n}
    from solitonlab.shiftop import compose_shift

    S = PsDiffOp({1: DiffPoly.const(1)})
    C = PsDiffOp({0: site("c")})
    prod = compose_shift(S, C)
    assert prod.coeffs[1] == site("c", 1)


def test_commutator_residue_is_full_difference():
    # periodic sum of res [P, Q] vanishes on random numeric data
    rng = np.random.default_rng(7)
    n = 7
    from solitonlab.shiftop import PsDiffOp, commutator, residue_shift

    P = PsDiffOp({1: rng.normal(size=n), 0: rng.normal(size=n), -1: rng.normal(size=n)})
    Q = PsDiffOp({2: rng.normal(size=n), -1: rng.normal(size=n)})
    r = residue_shift(commutator(P, Q))
    assert abs(np.sum(np.asarray(r))) < 1e-12


def test_conserved_j_values():
    rng = np.random.default_rng(11)
    f = _rand_field(rng)
    assert abs(toda.conserved_j(1, f) - np.sum(f.u0)) < 1e-13
    expected_j2 = np.sum(f.u0 ** 2 + 2 * f.c)
    assert abs(toda.conserved_j(2, f) - expected_j2) < 1e-12


def test_conserved_j_constant_field():
    f = toda.TodaField(np.full(5, 0.8), np.full(5, 0.3))
    assert abs(toda.conserved_j(1, f) - 5 * 0.3) < 1e-14


def test_j_drift_under_integration():
    rng = np.random.default_rng(23)
    f = _rand_field(rng, n=6)
    traj = toda.integrate_chain(f, 1.0, dt=1e-3)
    j0 = [toda.conserved_j(k, f) for k in (1, 2, 3)]
    worst = 0.0
    for _, st in traj[:: len(traj) // 10]:
        for k, ref in zip((1, 2, 3), j0):
            worst = max(worst, abs(toda.conserved_j(k, st) - ref) / max(1, abs(ref)))
    assert worst < 1e-8


def test_gauge_covariance():
    rng = np.random.default_rng(31)
    f = _rand_field(rng)
    assert toda.gauge_covariance_residual(f) < 1e-14


def test_trivial_tau_tl19():
    tau = trivial_toda_tau()
    res_abs, res_rel = toda.toda_tau_residual(tau, {1: 0.2, -1: -0.3}, n=0)
    assert res_abs < 1e-12


def test_soliton_tau_checks():
    spec = SolitonSpec("toda", [0.45], [1.8], const=[0.9])
    primed = tau_soliton(spec, "direct")
    raw = primed.with_quad(-1)
    times = {1: 0.21, -1: 0.34}
    for n in (-1, 0, 2):
        _, rel = toda.toda_tau_residual(raw, times, n)
        assert rel < 1e-9, n
        _, rel6 = toda.tl6_residual(primed, times, n)
        assert rel6 < 1e-9, n


def test_two_soliton_tau_checks():
    spec = SolitonSpec("toda", [0.45, 0.3], [1.8, 2.5], const=[0.9, 0.4])
    primed = tau_soliton(spec, "fredholm")
    raw = primed.with_quad(-1)
    times = {1: 0.12, -1: 0.2, 2: 0.03}
    for n in (0, 1):
        _, rel = toda.toda_tau_residual(raw, times, n)
        assert rel < 1e-9, n
        _, rel6 = toda.tl6_residual(primed, times, n)
        assert rel6 < 1e-9, n


def test_tl18_two_soliton():
    spec = SolitonSpec("toda", [0.45, 0.3], [1.8, 2.5], const=[0.9, 0.4])
    raw = tau_soliton(spec, "fredholm").with_quad(-1)
    rng = np.random.default_rng(17)
    times = {1: 0.1, -1: 0.15}
    worst = 0.0
    for _ in range(6):
        a = rng.uniform(3.0, 6.0)
        b = rng.uniform(3.0, 6.0)
        _, rel = toda.tl18_residual(raw, a, b, times, n=0)
        worst = max(worst, rel)
    assert worst < 1e-9


def test_soliton_constraint_c_from_tau():
    # c(n) from the tau ratio stays positive and solves tl6 on a grid
    spec = SolitonSpec("toda", [0.5], [2.0], const=[1.0])
    primed = tau_soliton(spec, "direct")
    for n in (-1, 0, 1, 2):
        t0 = primed.evaluate({1: 0.1, -1: 0.2}, n)
        cp = primed.evaluate({1: 0.1, -1: 0.2}, n + 1)
        cm = primed.evaluate({1: 0.1, -1: 0.2}, n - 1)
        assert (cp * cm / t0 ** 2).real > 0


def test_shift_operator_text_round_trip():
    from solitonlab.shiftop import PsDiffOp, parse_shift, to_text_shift

    B = PsDiffOp({1: DiffPoly.const(1), 0: site("u0"), -1: site("c")})
    txt = to_text_shift(B)
    assert "S" in txt and "u0(n)" in txt
    assert parse_shift(txt).coeffs == B.coeffs


def test_chain_second_order_form():
    rng = np.random.default_rng(41)
    f = _rand_field(rng)
    traj = toda.integrate_chain(f, 0.2, dt=1e-3)
    assert toda.chain_second_order_residual(traj) < 1e-5  # centered difference


def test_sine_gordon_reduction_preserved():
    drift = toda.sine_gordon_constraint_drift([1.4, 0.6], [0.3, -0.3])
    assert drift < 1e-12
