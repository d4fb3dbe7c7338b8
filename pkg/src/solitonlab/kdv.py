"""KdV hierarchy engine.

Conserved-density table (Gelfand-Dickey coefficients), hierarchy flows, the
generating differential operators of each flow, the two Hamiltonian brackets,
the Miura map to mKdV, 2x2 zero-curvature matrices with a spectral parameter,
and spectral curves of stationary flow combinations.

Conventions: u denotes jet function 0; for the Miura map, v is jet function 0
of its own ring and the formal parameter 'lam' is the spectral shift.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache

from .diffpoly import (
    DiffPoly,
    antiderivative,
    jet,
    one,
    sym,
    to_latex,
    to_text,
    total_derivative,
    try_antiderivative,
    variational_derivative,
    zero,
)
from .psdo import (
    PsiDO,
    compose,
    d,
    fractional_power,
    from_poly,
    residue,
    schroedinger_l,
    split,
)

__all__ = [
    "gd_coefficients",
    "gd_residue_route",
    "flow_rhs",
    "flow_rhs_residue_route",
    "am_operator",
    "am_operator_direct",
    "flow_derivative",
    "poisson_bracket",
    "miura_forward",
    "miura_identity_check",
    "zc_matrix",
    "zero_curvature_residual",
    "spectral_curve",
    "recursion_operator_check",
    "hierarchy_equation",
]

_u = jet(0, 0)


class RecursionNotIntegrable(Exception):
    """The GD recursion produced a non-integrable right side (internal bug)."""


@lru_cache(maxsize=None)
def _gd_single(j: int) -> DiffPoly:
    if j % 2 == 0:
        return zero()
    if j == -1:
        return one()
    if j < -1:
        raise ValueError("indices start at -1")
    r = _gd_single(j - 2)
    rhs = (
        total_derivative(total_derivative(total_derivative(r)))
        + 4 * _u * total_derivative(r)
        + 2 * total_derivative(_u) * r
    ) / 4
    try:
        return antiderivative(rhs)
    except Exception as exc:  # pragma: no cover - guaranteed integrable
        raise RecursionNotIntegrable(j) from exc


def gd_coefficients(j_max: int) -> dict:
    """Conserved densities R_j for odd j in [-1, j_max], via the recursion
    4 R_{j+2}' = R_j''' + 4 u R_j' + 2 u' R_j with integration constants 0."""
    if j_max < 1 or j_max % 2 == 0:
        raise ValueError("j_max must be a positive odd integer")
    return {j: _gd_single(j) for j in range(-1, j_max + 1, 2)}


@lru_cache(maxsize=None)
def gd_residue_route(j: int) -> DiffPoly:
    """R_j as the d^-1 coefficient of (d^2+u)^(j/2); independent route."""
    L = schroedinger_l()
    return residue(fractional_power(L, j, 2, floor=-2 - j))


@lru_cache(maxsize=None)
def flow_rhs(m: int) -> DiffPoly:
    """Right side of the m-th flow u_{t_m} = 2 (R_m)'."""
    if m % 2 == 0:
        return zero()
    return 2 * total_derivative(_gd_single(m))


def flow_rhs_residue_route(m: int) -> DiffPoly:
    return 2 * total_derivative(gd_residue_route(m))


@lru_cache(maxsize=None)
def am_operator(m: int) -> PsiDO:
    """Differential operator generating the m-th flow, in closed form:
    A_m = sum_j (R_{2j-1} d - R'_{2j-1}/2) L^((m-1)/2 - j)."""
    if m < 1 or m % 2 == 0:
        raise ValueError("m must be a positive odd integer")
    L = schroedinger_l()
    res = PsiDO({})
    for j in range((m - 1) // 2 + 1):
        r = _gd_single(2 * j - 1)
        head = compose(from_poly(r), d(1)) - from_poly(total_derivative(r) / 2)
        res = res + compose(head, L.power((m - 1) // 2 - j))
    return res


def am_operator_direct(m: int) -> PsiDO:
    """(L^(m/2))_+ computed through the square root; cross-check route."""
    return split(fractional_power(schroedinger_l(), m, 2, floor=-2))[0]


def flow_derivative(p: DiffPoly, m: int) -> DiffPoly:
    """Apply the t_m-flow derivation: each u^(k) maps to d^k(flow_rhs(m))."""
    rhs = flow_rhs(m)
    out = zero()
    dcache = {0: rhs}
    kmax = p.max_order(0)
    for k in range(1, kmax + 1):
        dcache[k] = total_derivative(dcache[k - 1])
    for k in range(kmax + 1):
        dp = p.partial(("j", 0, k))
        if dp:
            out = out + dp * dcache[k]
    return out


def poisson_bracket(f_density: DiffPoly, g_density: DiffPoly, which: int = 1):
    """Bracket integrand of two functionals given by densities.

    which=1: integrand (dF/du) d/dx (dG/du).
    which=2: integrand (dF/du) (d^3 + 4u d + 2u') (dG/du).
    Returns (True, q) when the integrand is a total derivative d/dx q (bracket
    vanishes for decaying/periodic fields), else (False, remainder).
    """
    df = variational_derivative(f_density)
    dg = variational_derivative(g_density)
    if which == 1:
        integrand = df * total_derivative(dg)
    elif which == 2:
        dg1 = total_derivative(dg)
        integrand = df * (
            total_derivative(total_derivative(dg1))
            + 4 * _u * dg1
            + 2 * total_derivative(_u) * dg
        )
    else:
        raise ValueError("which must be 1 or 2")
    q, r = try_antiderivative(integrand)
    return (not r), (q if not r else r)


# -- Miura map -----------------------------------------------------------------

def miura_forward(lam_symbol: bool = True) -> DiffPoly:
    """u expressed through v: u = lam - v^2 - v_x (v = jet function 0)."""
    v = jet(0, 0)
    vx = jet(0, 1)
    lam = sym("lam") if lam_symbol else zero()
    return lam - v * v - vx


def miura_identity_check() -> DiffPoly:
    """Exact residual of the factorization
    -(4u_t - 6uu_x - u_xxx) = (d/dx + 2v)(4v_t + 6v^2 v_x - v_xxx - 6 lam v_x)
    with u = lam - v^2 - v_x and v_t an independent jet function; returns 0.
    """
    v = jet(0, 0)
    vx = jet(0, 1)
    vt = jet(1, 0)  # independent time-derivative marker for v
    lam = sym("lam")
    u = lam - v * v - vx
    u_t = -2 * v * vt - total_derivative(vt)
    u_x = total_derivative(u)
    u_xxx = total_derivative(total_derivative(u_x))
    lhs = -(4 * u_t - 6 * u * u_x - u_xxx)
    inner = 4 * vt + 6 * v * v * vx - total_derivative(total_derivative(vx)) - 6 * lam * vx
    rhs = total_derivative(inner) + 2 * v * inner
    return lhs - rhs


def miura_flow_residual() -> DiffPoly:
    """Residual of the KdV equation for u = lam - v^2 - v_x when v obeys mKdV
    4v_t = -6v^2 v_x + v_xxx + 6 lam v_x; exact zero."""
    v = jet(0, 0)
    vx = jet(0, 1)
    lam = sym("lam")
    vt = (-6 * v * v * vx + total_derivative(total_derivative(vx)) + 6 * lam * vx) / 4
    u = lam - v * v - vx
    u_t = -2 * v * vt - total_derivative(vt)
    u_x = total_derivative(u)
    return 4 * u_t - 6 * u * u_x - total_derivative(total_derivative(u_x))


# -- zero curvature in 2x2 matrices ---------------------------------------------

def _incomplete_gen(m: int, lam: DiffPoly) -> DiffPoly:
    """R_m(lam) = sum_{j} R_{2j-1} lam^((m+1)/2 - j), the incomplete
    generating function; satisfies R_{m+2}(lam) = lam R_m(lam) + R_{m+2}."""
    if m == -1:
        return one()
    out = zero()
    for j in range((m + 1) // 2 + 1):
        out = out + _gd_single(2 * j - 1) * lam ** ((m + 1) // 2 - j)
    return out


def zc_matrix(m: int, gauge: str = "standard"):
    """2x2 connection matrix of the m-th flow as nested lists of DiffPoly.

    standard gauge: polynomial in 'lam' of degree (m+1)/2, trace zero.
    z_gauge: conjugated form polynomial in 'z' (lam = z^2) of degree m.
    """
    if m < 1 or m % 2 == 0:
        raise ValueError("m must be a positive odd integer")
    lam = sym("lam")
    r = _incomplete_gen(m - 2, lam)
    r1 = total_derivative(r)
    r2 = total_derivative(r1)
    U = [
        [-r1 / 2, r],
        [(lam - _u) * r - r2 / 2, r1 / 2],
    ]
    if gauge == "standard":
        return U
    if gauge != "z_gauge":
        raise ValueError("gauge must be 'standard' or 'z_gauge'")
    z = sym("z")
    Uz = [[e.substitute({("s", "lam"): z * z}) for e in row] for row in U]
    # [[1,0],[-z,1]] U [[1,0],[z,1]]
    a, b = Uz[0]
    c, e = Uz[1]
    return [
        [a + b * z, b],
        [c + (e - a) * z - b * z * z, e - b * z],
    ]


def _mat_sub(A, B):
    return [[A[i][j] - B[i][j] for j in range(2)] for i in range(2)]


def _mat_add(A, B):
    return [[A[i][j] + B[i][j] for j in range(2)] for i in range(2)]


def _mat_mul(A, B):
    return [
        [A[i][0] * B[0][j] + A[i][1] * B[1][j] for j in range(2)]
        for i in range(2)
    ]


def zero_curvature_residual(m: int, n: int):
    """d_{t_m} U_n - d_{t_n} U_m + [U_n, U_m] with flows substituted; the
    returned 2x2 matrix of DiffPoly is exactly zero for all odd m, n."""
    Um = zc_matrix(m)
    Un = zc_matrix(n)
    dUn = [[flow_derivative(e, m) for e in row] for row in Un]
    dUm = [[flow_derivative(e, n) for e in row] for row in Um]
    comm = _mat_sub(_mat_mul(Un, Um), _mat_mul(Um, Un))
    return _mat_add(_mat_sub(dUn, dUm), comm)


def spectral_curve(coeffs) -> DiffPoly:
    """Characteristic polynomial mu^2 + det U(lam) of U = sum c_m U_m.

    Stationary combinations make this an algebraic curve conserved by every
    flow; `coeffs` is a list of (m, c_m) with rational c_m.
    """
    U = [[zero(), zero()], [zero(), zero()]]
    for m, c in coeffs:
        Um = zc_matrix(m)
        U = _mat_add(U, [[Fraction(c) * e for e in row] for row in Um])
    det = U[0][0] * U[1][1] - U[0][1] * U[1][0]
    mu = sym("mu")
    return mu * mu + det


def recursion_operator_check(j: int) -> DiffPoly:
    """4 R_{j+2} - (d^2 + 2u + 2 d^-1 u d) R_j with d^-1 via antiderivative."""
    r = _gd_single(j)
    y = antiderivative(_u * total_derivative(r))
    lhs = 4 * _gd_single(j + 2)
    rhs = total_derivative(total_derivative(r)) + 2 * _u * r + 2 * y
    return lhs - rhs


# -- pretty printing -------------------------------------------------------------

def hierarchy_equation(m: int, fmt: str = "text") -> str:
    """Integer-cleared m-th KdV flow, e.g. '16 u_t5 = 30 u^2 u_x + ...'."""
    if m % 2 == 0:
        return f"R_{m} = 0 (even flows are trivial)"
    rhs = flow_rhs(m)
    den = 1
    for c in rhs.terms.values():
        den = den * c.denominator // _gcd(den, c.denominator)
    cleared = rhs * den
    lhs = f"{den} u_t{m}" if den != 1 else f"u_t{m}"
    if fmt == "latex":
        lhs = (f"{den} " if den != 1 else "") + "u_{t_%d}" % m
        return f"{lhs} = {to_latex(cleared)}"
    return f"{lhs} = {to_text(cleared).replace('*', ' ')}"


def _gcd(a, b):
    while b:
        a, b = b, a % b
    return a
