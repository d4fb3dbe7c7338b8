"""Poles of rational and elliptic solutions as integrable particles.

Integrates the inverse-square system, tracks tau-function roots against the
particles, visits the equilibrium locus of the third-order flow, and runs the
elliptic and relativistic flows on a Weierstrass lattice.
"""

import math

import numpy as np

from solitonlab import poledyn as pd
from solitonlab.tau import cm_char_poly_coeffs, tau_cm
from solitonlab.weier import WeierstrassLattice, wp, wp_lattice_sum

print("== rational inverse-square flow ==")
st = pd.ParticleState([-1.1 + 0.1j, 0.2 + 0.15j, 1.3], [-0.15, 0.02, 0.2])
traj = pd.integrate(st, 0.5, dt=1e-3)
h0 = pd.hamiltonian(traj[0])
print(f"  energy drift over [0, 0.5]: {max(abs(pd.hamiltonian(s) - h0) for s in traj):.2e}")
print(f"  Lax spectrum drift: {pd.spectrum_invariants(traj[::50]):.2e}")

print("\n== determinant roots track the particles ==")
st = pd.ParticleState([-1.1, 0.2, 1.3], [-0.15, 0.02, 0.2])
L0, _ = pd.lax_pair(st)
taux = tau_cm(list(st.x), L0, kmax=2)
for t2 in (0.1, 0.25):
    roots = np.roots(cm_char_poly_coeffs(taux, {2: t2}))
    xs = pd.integrate(st, t2, dt=5e-4)[-1].x
    print(f"  t2={t2}: max distance {pd._match_distance(roots, xs):.2e}")

print("\n== the equilibrium locus of u = -6/x^2 evolved by the third flow ==")
tstar = 0.4
roots0 = np.roots([1, 0, 0, -3 * tstar])
print(f"  velocity residual at the triangular configuration: "
      f"{pd.locus_velocity_residual(roots0):.2e}")
lst = pd.ParticleState(roots0, [0, 0, 0])
L0, _ = pd.lax_pair(lst)
taux = tau_cm(list(roots0), L0, kmax=3)
for s in (0.05, 0.2):
    got = np.sort_complex(np.roots(cm_char_poly_coeffs(taux, {3: s})))
    want = np.sort_complex(np.roots([1, 0, 0, -3 * (tstar + s)]))
    print(f"  s={s}: det roots vs exact pole law x^3 = 3(t*+s): "
          f"{np.max(np.abs(got - want)):.2e}")

print("\n== Weierstrass functions: fast series vs lattice sums ==")
LAT = WeierstrassLattice(1.3, 0.4 + 1.1j)
x = 0.52 + 0.33j
print(f"  wp  : {wp(x, LAT):.12f}")
print(f"  sum : {wp_lattice_sum(x, LAT, M=80):.12f}")

print("\n== hyperbolic degeneration ==")
Lper = 2.6
lat = WeierstrassLattice(1j * Lper / 2, -9.0)
g = math.pi / Lper
for xx in (0.31, 1.1):
    target = g * g * (1 / math.sinh(g * xx) ** 2 + 1 / 3)
    print(f"  x={xx}: |wp - sinh form| = {abs(wp(xx, lat) - target):.2e}")

print("\n== elliptic and relativistic flows ==")
ELAT = WeierstrassLattice(1.5, 1.2j)
ell = pd.ParticleState([-0.76 + 0.3j, 0.74], [-0.05, 0.03], kind=("elliptic", ELAT))
etraj = pd.integrate(ell, 1.0, dt=2e-3)
h0 = pd.hamiltonian(etraj[0])
print(f"  elliptic energy drift: {max(abs(pd.hamiltonian(s) - h0) for s in etraj):.2e}")
rs = pd.ParticleState([-0.5, 0.55], [0.3, 0.42], kind=("rs", 0.31, ELAT))
rtraj = pd.integrate(rs, 1.0, dt=2e-3)
print(f"  relativistic spectrum drift: {pd.spectrum_invariants(rtraj[::100]):.2e}")
print(f"  relativistic Lax residual: {pd.lax_consistency(rtraj[::150]):.2e}")
