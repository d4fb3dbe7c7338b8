"""Tour of the KdV hierarchy engine.

Generates the conserved-density table two independent ways, prints the first
flows, takes the operator square root, and runs the structural checks that
make the hierarchy integrable: bracket involution, zero curvature, Miura.
"""

from solitonlab import kdv
from solitonlab.diffpoly import to_text, zero
from solitonlab.psdo import fractional_power, schroedinger_l, sqrt_schroedinger, to_text_op

print("== conserved densities (recursion route) ==")
R = kdv.gd_coefficients(7)
for j in (1, 3, 5, 7):
    print(f"  R_{j} = {to_text(R[j])}")
    assert R[j] == kdv.gd_residue_route(j), "recursion and residue routes agree"

print("\n== hierarchy flows ==")
for m in (1, 3, 5, 7):
    print(" ", kdv.hierarchy_equation(m))

print("\n== square root of d^2 + u ==")
print(" ", to_text_op(sqrt_schroedinger(schroedinger_l(), -4)))

print("\n== generating operators ==")
for m in (1, 3, 5):
    A = kdv.am_operator(m)
    print(f"  A_{m} = {to_text_op(A)}")
assert kdv.am_operator(5) == kdv.am_operator_direct(5)

print("\n== conservation structure ==")
for (m, n) in ((3, 5), (5, 7)):
    ok1, _ = kdv.poisson_bracket(R[m], R[n], which=1)
    ok2, _ = kdv.poisson_bracket(R[m], R[n], which=2)
    print(f"  {{I_{m}, I_{n}}} vanishes under both brackets: {ok1 and ok2}")

print("\n== zero curvature in 2x2 matrices ==")
for (m, n) in ((1, 3), (3, 5)):
    res = kdv.zero_curvature_residual(m, n)
    flat = all(e == zero() for row in res for e in row)
    print(f"  flows ({m},{n}): residual identically zero: {flat}")
print("  spectral curve of the third flow:", to_text(kdv.spectral_curve([(3, 1)])))

print("\n== Miura map ==")
print("  factorized identity residual:", to_text(kdv.miura_identity_check()))
print("  KdV residual for u = lam - v^2 - v_x under the mKdV flow:",
      to_text(kdv.miura_flow_residual()))
