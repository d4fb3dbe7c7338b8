"""KP hierarchy engine.

General first-order Lax operator d + u_1 d^-1 + u_2 d^-2 + ... with
independent fields (u_i is jet function i-1), the generated differential
operators A_j, flow systems from zero curvature, conserved densities, and
the polynomial tau zoo: complete homogeneous and general Schur polynomials.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from functools import lru_cache

from .diffpoly import (
    DiffPoly,
    jet,
    one,
    sym,
    total_derivative,
    zero,
)
from .psdo import PsiDO, compose, d, residue, split

__all__ = [
    "rational_tau",
    "kp_lax",
    "a_operator",
    "conserved_density",
    "field_flow",
    "flow_derivative",
    "zero_curvature_residual",
    "kp_flow_system",
    "kp0_residual",
    "schur_h",
    "schur_s",
    "partitions",
    "transpose",
    "kp_system_text",
    "flow_system_text",
]

FIELD_DEPTH = 8  # number of u_i kept

from .tau import rational_tau  # polynomial tau from wave-function conditions


def field(i, order=0):
    """Jet variable of u_i (i >= 1)."""
    return jet(i - 1, order)


@lru_cache(maxsize=None)
def kp_lax(depth=FIELD_DEPTH) -> PsiDO:
    coeffs = {1: one()}
    for i in range(1, depth + 1):
        coeffs[-i] = field(i)
    return PsiDO(coeffs, floor=-depth)


@lru_cache(maxsize=None)
def _lax_power(j, depth):
    L = kp_lax(depth)
    res = L
    for _ in range(j - 1):
        res = compose(res, L)
    return res


def a_operator(j: int, depth=FIELD_DEPTH) -> PsiDO:
    """Differential part of L^j."""
    return split(_lax_power(j, depth))[0]


def conserved_density(j: int, depth=FIELD_DEPTH) -> DiffPoly:
    """res L^j, the density of the j-th conserved integral."""
    return residue(_lax_power(j, depth))


@lru_cache(maxsize=None)
def field_flow(m: int, depth=FIELD_DEPTH) -> dict:
    """{i: d u_i/d t_m} read off the Lax equation dL/dt_m = [A_m, L]."""
    L = kp_lax(depth)
    Am = a_operator(m, depth)
    comm = compose(Am, L) - compose(L, Am)
    out = {}
    for i in range(1, depth + 1):
        lo = comm.floor if comm.floor is not None else -i
        if -i >= lo:
            out[i] = comm.coeff(-i)
    return out


def flow_derivative(p: DiffPoly, m: int, depth=FIELD_DEPTH) -> DiffPoly:
    """Apply the t_m derivation: u_i^(k) -> d^k(field_flow(m)[i])."""
    flows = field_flow(m, depth)
    out = zero()
    for f in sorted(p.jet_functions()):
        i = f + 1
        rhs = flows[i]
        kmax = p.max_order(f)
        dcache = [rhs]
        for _ in range(kmax):
            dcache.append(total_derivative(dcache[-1]))
        for k in range(kmax + 1):
            dp = p.partial(("j", f, k))
            if dp:
                out = out + dp * dcache[k]
    return out


def zero_curvature_residual(m: int, n: int, depth=FIELD_DEPTH) -> PsiDO:
    """d_{t_m} A_n - d_{t_n} A_m - [A_m, A_n] with flows substituted; zero."""
    Am = a_operator(m, depth)
    An = a_operator(n, depth)
    dAn = PsiDO({k: flow_derivative(c, m, depth) for k, c in An.coeffs.items()})
    dAm = PsiDO({k: flow_derivative(c, n, depth) for k, c in Am.coeffs.items()})
    comm = compose(Am, An) - compose(An, Am)
    return dAn - dAm - comm


# -- the (m, n) flow systems with explicit time-derivative markers -------------

def marker(m: int, i: int, order=0):
    """Jet symbol standing for d^order/dx^order of d u_i/d t_m."""
    return jet(1000 * m + (i - 1), order)


def kp_flow_system(m: int, n: int, depth=FIELD_DEPTH):
    """Coefficient equations of d_{t_m}A_n - d_{t_n}A_m - [A_m, A_n] = 0.

    Time derivatives are kept as marker jets (see `marker`), giving the n-1
    coupled equations for u_1..u_{n-1} exactly as displayed equations.
    Returns {order: DiffPoly} for the orders with nonzero content.
    """
    Am = a_operator(m, depth)
    An = a_operator(n, depth)
    dAn = PsiDO({k: _marker_derivative(c, m) for k, c in An.coeffs.items()})
    dAm = PsiDO({k: _marker_derivative(c, n) for k, c in Am.coeffs.items()})
    comm = compose(Am, An) - compose(An, Am)
    res = dAn - dAm - comm
    return {k: c for k, c in res.coeffs.items() if c}


def _marker_derivative(p: DiffPoly, m: int) -> DiffPoly:
    out = zero()
    for f in sorted(p.jet_functions()):
        i = f + 1
        kmax = p.max_order(f)
        for k in range(kmax + 1):
            dp = p.partial(("j", f, k))
            if dp:
                out = out + dp * marker(m, i, k)
    return out


def kp0_residual(depth=FIELD_DEPTH) -> DiffPoly:
    """Residual of 3 u_yy = (4 u_t - 6 u u_x - u_xxx)_x for u = 2 u_1 with
    every y- and t-derivative eliminated through the Lax flows; exactly 0.

    This is the endpoint of eliminating w = u_2 from the (2,3) system.
    """
    u1 = field(1)
    flows2 = field_flow(2, depth)
    u_yy = 2 * flow_derivative(flows2[1], 2, depth)
    inner = 8 * field_flow(3, depth)[1] - 24 * u1 * total_derivative(u1) \
        - 2 * total_derivative(total_derivative(total_derivative(u1)))
    return 3 * u_yy - total_derivative(inner)


def _marker_second(p: DiffPoly, m: int) -> DiffPoly:
    """Apply d/dt_m once more: fields -> markers, markers -> double markers.

    Double markers use index 1000*m*1009 + base to stay distinct.
    """
    out = zero()
    for f in sorted(p.jet_functions()):
        kmax = p.max_order(f)
        if f < 1000:
            target = 1000 * m + f
        else:
            target = 1009000 * m + f
        for k in range(kmax + 1):
            dp = p.partial(("j", f, k))
            if dp:
                out = out + dp * jet(target, k)
    return out


# -- Schur polynomials ----------------------------------------------------------

def _tsym(k):
    return sym(f"t{k}")


@lru_cache(maxsize=None)
def schur_h(k: int) -> DiffPoly:
    """Complete homogeneous polynomial h_k: coefficient of z^k in e^{xi(t,z)},
    computed by the truncated exponential series (independent of any
    recursion identities, which are tested against this route)."""
    if k < 0:
        return zero()
    if k == 0:
        return one()
    # xi = sum_{j=1..k} t_j z^j ; exp series truncated at z^k
    xi = [zero()] * (k + 1)
    for j in range(1, k + 1):
        xi[j] = _tsym(j)
    cur = [one()] + [zero()] * k
    out = [one()] + [zero()] * k
    for m in range(1, k + 1):
        nxt = [zero() for _ in range(k + 1)]
        for a in range(k + 1):
            if not cur[a]:
                continue
            for b in range(1, k - a + 1):
                nxt[a + b] = nxt[a + b] + cur[a] * xi[b]
        cur = [c / m for c in nxt]
        for a in range(k + 1):
            out[a] = out[a] + cur[a]
    return out[k]


def partitions(max_weight: int):
    """All partitions with 1 <= |lambda| <= max_weight, as tuples."""
    out = []

    def rec(rest, maxpart, cur):
        if rest == 0:
            out.append(tuple(cur))
            return
        for part in range(min(rest, maxpart), 0, -1):
            cur.append(part)
            rec(rest - part, part, cur)
            cur.pop()

    for w in range(1, max_weight + 1):
        rec(w, w, [])
    return out


def transpose(lam):
    if not lam:
        return ()
    out = []
    for i in range(1, lam[0] + 1):
        out.append(sum(1 for part in lam if part >= i))
    return tuple(out)


def schur_s(lam) -> DiffPoly:
    """Schur polynomial s_lambda(t) = det h_{lambda_i - i + j}."""
    lam = tuple(lam)
    n = len(lam)
    if n == 0:
        return one()
    rows = [[schur_h(lam[i] - (i + 1) + (j + 1)) for j in range(n)] for i in range(n)]
    out = zero()
    for perm in itertools.permutations(range(n)):
        sign = 1
        seen = [False] * n
        for i in range(n):
            if seen[i]:
                continue
            ln, j = 0, i
            while not seen[j]:
                seen[j] = True
                j = perm[j]
                ln += 1
            if ln % 2 == 0:
                sign = -sign
        prod = DiffPoly.const(sign)
        for i in range(n):
            prod = prod * rows[i][perm[i]]
            if not prod:
                break
        out = out + prod
    return out


# -- pretty printing --------------------------------------------------------------

def kp_system_text() -> list:
    """The (2,3) flow system in u = 2 u_1, w = u_2 and its elimination."""
    return [
        "u_y = 4 w_x + u_xx",
        "u_t = 3/2 u u_x + u_xxx + 3 w_xx + 3 w_y",
        "elimination:  3 u_yy = (4 u_t - 6 u u_x - u_xxx)_x",
    ]


def flow_system_text(m: int, n: int, fmt="text") -> list:
    """Readable equations of the (m, n) system: markers print as u{i}_t{m}."""
    from .diffpoly import to_latex, to_text

    out = []
    for order in sorted(kp_flow_system(m, n), reverse=True):
        eq = kp_flow_system(m, n)[order]
        renamed = eq.substitute(
            {key: _pretty_marker(key) for key in eq.variables() if key[0] == "j"}
        )
        fn = to_latex if fmt == "latex" else to_text
        out.append(f"[d^{order}]  {fn(renamed)} = 0")
    return out


def _pretty_marker(key):
    from .diffpoly import DiffPoly

    _, f, order = key
    if f < 1000:
        base = f"u{f + 1}"
    else:
        tm, i = divmod(f, 1000)
        base = f"u{i + 1}_t{tm}"
    suffix = "" if order == 0 else ("_" + "x" * order if order <= 3 else f"_x{order}")
    return DiffPoly.var(("s", base + suffix))
