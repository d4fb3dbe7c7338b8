"""Weierstrass functions and integrable pole dynamics."""

import cmath
import math

import numpy as np
import pytest

from solitonlab import poledyn as pd
from solitonlab.weier import (
    LatticePoint,
    WeierstrassLattice,
    phi_kernel,
    sigma,
    sigma_lattice_sum,
    wp,
    wp_lattice_sum,
    wp_prime,
    zeta,
    zeta_lattice_sum,
)

LAT = WeierstrassLattice(1.3, 0.4 + 1.1j)


def test_weier_parity():
    for x in (0.31 + 0.12j, -0.7 + 0.4j, 0.9):
        assert abs(wp(-x, LAT) - wp(x, LAT)) < 1e-12 * max(1, abs(wp(x, LAT)))
        assert abs(zeta(-x, LAT) + zeta(x, LAT)) < 1e-12 * max(1, abs(zeta(x, LAT)))
        assert abs(sigma(-x, LAT) + sigma(x, LAT)) < 1e-12 * max(1, abs(sigma(x, LAT)))


def test_weier_consistency():
    # zeta' = -wp and sigma'/sigma = zeta, by tight numeric differentiation
    h = 1e-6
    for x in (0.4 + 0.2j, -0.55 + 0.61j):
        zp = (zeta(x + h, LAT) - zeta(x - h, LAT)) / (2 * h)
        assert abs(zp + wp(x, LAT)) < 1e-6 * max(1, abs(wp(x, LAT)))
        sp = (sigma(x + h, LAT) - sigma(x - h, LAT)) / (2 * h)
        assert abs(sp / sigma(x, LAT) - zeta(x, LAT)) < 1e-6


def test_wp_prime_is_derivative():
    h = 1e-6
    x = 0.37 + 0.21j
    num = (wp(x + h, LAT) - wp(x - h, LAT)) / (2 * h)
    assert abs(num - wp_prime(x, LAT)) < 1e-5 * max(1, abs(wp_prime(x, LAT)))


def test_wp_laurent_leading():
    # wp(x) - 1/x^2 -> 0 quadratically
    vals = []
    for eps in (1e-2, 5e-3):
        v = wp(eps, LAT) - 1 / eps ** 2
        vals.append(abs(v))
    assert vals[0] < 1e-2
    assert vals[1] < vals[0] / 3.5  # quadratic vanishing


def test_lattice_point_guard():
    with pytest.raises(LatticePoint):
        wp(0.0, LAT)
    with pytest.raises(LatticePoint):
        zeta(2 * LAT.omega, LAT)


def test_theta_vs_lattice_sums():
    x = 0.52 + 0.33j
    assert abs(wp(x, LAT) - wp_lattice_sum(x, LAT, M=80)) < 2e-4
    assert abs(zeta(x, LAT) - zeta_lattice_sum(x, LAT, M=80)) < 2e-4
    assert abs(sigma(x, LAT) - sigma_lattice_sum(x, LAT, M=60)) < 2e-3


def test_trig_degeneration():
    # omega' -> i*infinity over a sinh-type lattice reproduces the
    # 1/sinh^2 pair potential plus the constant third
    Lper = 2.6
    lat = WeierstrassLattice(1j * Lper / 2, -9.0)
    g = math.pi / Lper
    for x in (0.31, 0.8, 1.1):
        target = g * g * (1.0 / math.sinh(g * x) ** 2 + 1.0 / 3.0)
        assert abs(wp(x, lat) - target) < 1e-10, x


def test_phi_quasi_periodicity():
    lam = 0.41 + 0.23j
    x = 0.27 + 0.1j
    lhs = phi_kernel(x + 2 * LAT.omega, lam, LAT)
    factor = cmath.exp(2 * (zeta(LAT.omega, LAT) * lam - zeta(lam, LAT) * LAT.omega))
    assert abs(lhs - factor * phi_kernel(x, lam, LAT)) < 1e-12 * abs(lhs)


def test_phi_pole_expansion():
    # Phi(x) = 1/x - wp(lam)/2 * x + O(x^2)
    lam = 0.5 + 0.3j
    eps = 1e-3
    v = phi_kernel(eps, lam, LAT) - 1 / eps + wp(lam, LAT) / 2 * eps
    assert abs(v) < 1e-4


# -- rational dynamics -----------------------------------------------------------


def test_lax_two_particle_example():
    st = pd.ParticleState([-1.0, 1.0], [0.0, 0.0])
    L, M = pd.lax_pair(st)
    assert np.allclose(L, [[0, 1], [-1, 0]])
    h2 = pd.hamiltonian(st)
    assert abs(h2 - (-0.5)) < 1e-14
    assert abs(0.25 * np.trace(L @ L) - h2) < 1e-14


def test_commutation_relation():
    rng = np.random.default_rng(2)
    for _ in range(5):
        x = rng.uniform(-2, 2, 4) + 1j * rng.uniform(-1, 1, 4)
        p = rng.uniform(-1, 1, 4)
        st = pd.ParticleState(x, p)
        L, _ = pd.lax_pair(st)
        X = np.diag(st.x)
        comm = X @ L - L @ X
        expect = 2 * (np.eye(4) - np.ones((4, 4)))
        assert np.max(np.abs(comm - expect)) < 1e-12


def test_free_single_particle():
    st = pd.ParticleState([0.4], [0.3])
    traj = pd.integrate(st, 1.0, dt=1e-2)
    assert abs(traj[-1].x[0] - (0.4 + 2 * 0.3 * 1.0)) < 1e-12


def test_two_particle_energy_drift():
    st = pd.ParticleState([-1.0, 1.0], [-0.35, 0.35])
    traj = pd.integrate(st, 1.0, dt=1e-3)
    h0 = pd.hamiltonian(traj[0])
    drift = max(abs(pd.hamiltonian(s) - h0) for s in traj)
    assert drift < 1e-10
    # Hamiltonian equals quarter trace of L^2 along the way
    for s in traj[:: len(traj) // 7]:
        L, _ = pd.lax_pair(s)
        assert abs(0.25 * np.trace(L @ L) - pd.hamiltonian(s)) < 1e-12


def test_spectrum_drift_rational():
    rng = np.random.default_rng(8)
    x = np.array([-1.5, -0.3, 0.7, 1.8]) + 1j * rng.uniform(-0.1, 0.1, 4)
    p = rng.uniform(-0.4, 0.4, 4)
    st = pd.ParticleState(x, p)
    traj = pd.integrate(st, 1.0, dt=2e-3)
    assert pd.spectrum_invariants(traj) < 1e-8


def test_lax_consistency_rational():
    st = pd.ParticleState([-1.2, 0.1, 1.4], [-0.25, 0.02, 0.3])
    traj = pd.integrate(st, 0.5, dt=2e-3)
    assert pd.lax_consistency(traj[:: max(1, len(traj) // 10)]) < 1e-7


def test_collision_detection():
    st = pd.ParticleState([-0.5, 0.5], [0.9, -0.9])
    # head-on complexified collision: the inverse-square flow pulls the
    # particles together, tripping either guard depending on step placement
    with pytest.raises((pd.CollisionDetected, pd.StepUnstable)):
        pd.integrate(st, 2.0, dt=1e-3)


def test_tau_roots_track_poles():
    st = pd.ParticleState([-1.1, 0.2, 1.3], [-0.15, 0.02, 0.2])
    worst = pd.tau_root_crosscheck(st, [0.0, 0.1, 0.25], dt=5e-4)
    assert worst < 1e-6


def test_locus_equilibrium():
    # roots of x^3 = 3t: the triangular configuration is an equilibrium
    t3 = 0.4
    roots = np.roots([1, 0, 0, -3 * t3])
    assert pd.locus_velocity_residual(roots) < 1e-10
    # and stays put under the flow
    st = pd.ParticleState(roots, [0, 0, 0])
    traj = pd.integrate(st, 0.5, dt=1e-3)
    assert np.max(np.abs(traj[-1].x - traj[0].x)) < 1e-10


def test_locus_cm13_matches_kdv_tau():
    # third-time determinant roots follow the exact pole law x^3 = 3(t*+s)
    from solitonlab.tau import cm_char_poly_coeffs, tau_cm

    tstar = 0.4
    roots0 = np.roots([1, 0, 0, -3 * tstar])
    st = pd.ParticleState(roots0, [0, 0, 0])
    L0, _ = pd.lax_pair(st)
    taux = tau_cm(list(roots0), L0, kmax=3)
    for s in (0.0, 0.05, 0.2):
        coeffs = cm_char_poly_coeffs(taux, {3: s})
        got = np.roots(coeffs)
        want = np.roots([1, 0, 0, -3 * (tstar + s)])
        assert pd._match_distance(got, want) < 1e-8, s


def test_trig_energy_drift():
    st = pd.ParticleState([-0.9, 0.8], [-0.25, 0.25], kind=("trig", 4.0))
    traj = pd.integrate(st, 1.0, dt=1e-3)
    h0 = pd.hamiltonian(traj[0])
    assert max(abs(pd.hamiltonian(s) - h0) for s in traj) < 1e-9


# -- elliptic and relativistic flows ----------------------------------------------


ELAT = WeierstrassLattice(1.5, 1.2j)


def test_elliptic_two_particle_invariants():
    st = pd.ParticleState([-0.76 + 0.3j, 0.74], [-0.05, 0.03], kind=("elliptic", ELAT))
    traj = pd.integrate(st, 1.0, dt=2e-3)
    h0 = pd.hamiltonian(traj[0])
    drift = max(abs(pd.hamiltonian(s) - h0) for s in traj)
    assert drift < 1e-8
    assert pd.spectrum_invariants(traj[:: len(traj) // 10]) < 1e-8


def test_elliptic_lax_consistency():
    st = pd.ParticleState([-0.76 + 0.3j, 0.74], [-0.05, 0.03], kind=("elliptic", ELAT))
    traj = pd.integrate(st, 0.4, dt=2e-3)
    assert pd.lax_consistency(traj[:: max(1, len(traj) // 6)]) < 1e-7


def test_elliptic_lambda_and_c_independence():
    # changing the spectral parameter or the gauge constant c does not change
    # the motion (c is absent from the equations; lambda only enters L, M)
    st = pd.ParticleState([-0.76 + 0.3j, 0.74], [-0.05, 0.03], kind=("elliptic", ELAT))
    traj = pd.integrate(st, 0.5, dt=2e-3)
    lam2 = (0.11 + 0.41j) * ELAT.omega
    assert pd.spectrum_invariants(traj[:: len(traj) // 8], lam=lam2) < 1e-8
    # adding c * I to M leaves [M, L] unchanged:
    L, M = pd.lax_pair(st)
    c = 0.7
    lhs = (M + 4 * c * np.eye(2)) @ L - L @ (M + 4 * c * np.eye(2))
    rhs = M @ L - L @ M
    assert np.max(np.abs(lhs - rhs)) < 1e-13 * max(1.0, np.abs(rhs).max())


def test_rs_invariants_and_lax():
    st = pd.ParticleState(
        [-0.5, 0.55], [0.3, 0.42], kind=("rs", 0.31, ELAT)
    )  # p-slot holds velocities
    traj = pd.integrate(st, 1.0, dt=2e-3)
    h0 = pd.hamiltonian(traj[0])
    assert max(abs(pd.hamiltonian(s) - h0) for s in traj) < 1e-8
    assert pd.spectrum_invariants(traj[:: len(traj) // 10]) < 1e-8
    assert pd.lax_consistency(traj[:: max(1, len(traj) // 6)]) < 1e-7
    # total velocity is const * tr L
    L, _ = pd.lax_pair(st)
    from solitonlab.weier import phi_kernel

    const = 1.0 / phi_kernel(-0.31, st.lam or (0.31 + 0.17j) * ELAT.omega, ELAT)
    assert abs(np.sum(st.p) - const * np.trace(L)) < 1e-10


def test_trig_lax_consistency():
    st = pd.ParticleState(
        [-1.0 + 0.15j, 0.1, 1.2 - 0.1j], [-0.2, 0.01, 0.22], kind=("trig", 4.0)
    )
    traj = pd.integrate(st, 0.4, dt=1e-3)
    assert pd.lax_consistency(traj[:: max(1, len(traj) // 6)]) < 1e-7
    assert pd.spectrum_invariants(traj[:: len(traj) // 10]) < 1e-8


def test_weierstrass_dispatcher():
    from solitonlab.weier import weierstrass

    x, lam = 0.4 + 0.2j, 0.3 + 0.1j
    assert weierstrass("p", x, LAT) == wp(x, LAT)
    assert weierstrass("zeta", x, LAT) == zeta(x, LAT)
    assert weierstrass("sigma", x, LAT) == sigma(x, LAT)
    assert weierstrass("phi", x, LAT, lam) == phi_kernel(x, lam, LAT)
    with pytest.raises(ValueError):
        weierstrass("phi", x, LAT)


def test_trace_identity_exact_arithmetic():
    # H_2 = tr L^2 / 4 holds exactly over the rationals
    from fractions import Fraction as F

    x = [F(-3, 2), F(1, 3), F(7, 4)]
    p = [F(1, 5), F(-2, 7), F(3, 11)]
    n = 3
    L = [[F(0)] * n for _ in range(n)]
    for i in range(n):
        L[i][i] = -2 * p[i]
        for j in range(n):
            if j != i:
                L[i][j] = F(-2, 1) / (x[i] - x[j])
    tr = sum(L[i][k] * L[k][i] for i in range(n) for k in range(n))
    h = sum(v * v for v in p) - sum(
        F(2, 1) / (x[i] - x[j]) ** 2 for i in range(n) for j in range(i + 1, n)
    )
    assert tr / 4 == h
