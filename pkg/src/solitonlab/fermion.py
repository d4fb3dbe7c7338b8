"""Truncated free-fermion Fock engine.

Charged fermion modes psi_k, psi*_k on a finite index window [lo, hi),
occupation-basis states (descending mode tuples), basis vectors labeled by
charge and Young diagram in Frobenius coordinates, current-mode flows
e^{J_+-}, the generalized Wick theorem, normally ordered exponents with
respect to both vacua, and tau functions as vacuum expectation values.

State vectors are dicts {occupied-tuple: coefficient}; coefficients may be
numbers or sparse polynomials in the times (the `_Poly` carrier from the tau
module), so the same engine produces numeric values and exact polynomial tau
functions.  The Jordan-Wigner sign convention: inserting/removing a mode at
position j of the descending occupation tuple costs (-1)^j.

Everything that would touch modes outside the window raises WindowExhausted
instead of silently truncating, except where the infinite-algebra action is
exactly zero (creating below the window onto the filled sea).
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction

import numpy as np

from .tau import TauExpr, _Phase, _Poly

__all__ = [
    "FockWindow",
    "WindowExhausted",
    "ZeroDenominator",
    "vacuum",
    "full_state",
    "basis_ket",
    "basis_bra",
    "pair",
    "apply_mode",
    "apply_field",
    "apply_field_star",
    "apply_j",
    "charge_of",
    "wick_expectation",
    "generalized_wick",
    "apply_quasigroup",
    "expectation",
    "j_plus_pair",
    "vev_tau",
    "soliton_vev_tauexpr",
    "bosonization_check",
    "normal_order_convert",
    "normal_exponent_empty",
    "normal_exponent_dirac",
    "bbr_residual",
]


class WindowExhausted(Exception):
    pass


class ZeroDenominator(Exception):
    pass


class FockWindow:
    """Mode indices lo <= k < hi, expansion degree cap K."""

    __slots__ = ("lo", "hi", "K")

    def __init__(self, m=16, K=8, lo=None, hi=None):
        self.lo = -m if lo is None else lo
        self.hi = m if hi is None else hi
        self.K = K

    def modes(self):
        return range(self.lo, self.hi)

    def check(self, k):
        if not (self.lo <= k < self.hi):
            raise WindowExhausted(f"mode {k} outside [{self.lo}, {self.hi})")


def vacuum(w: FockWindow, n=0):
    """|n>: all window modes below n occupied."""
    if not (w.lo <= n < w.hi):
        raise WindowExhausted(f"vacuum charge {n} outside the window")
    occ = tuple(range(n - 1, w.lo - 1, -1))
    return {occ: 1}


def full_state(w: FockWindow):
    """Completely filled window (the 'infinity' reference state)."""
    return {tuple(range(w.hi - 1, w.lo - 1, -1)): 1}


def charge_of(occ, w: FockWindow):
    return len(occ) + w.lo


def _insert(occ, k):
    """(new_occ, sign) from creating mode k, or None if occupied."""
    if k in occ:
        return None
    pos = 0
    while pos < len(occ) and occ[pos] > k:
        pos += 1
    return occ[:pos] + (k,) + occ[pos:], (-1) ** pos


def _remove(occ, k):
    if k not in occ:
        return None
    pos = occ.index(k)
    return occ[:pos] + occ[pos + 1:], (-1) ** pos


def apply_mode(kind, k, state, w: FockWindow):
    """psi_k ('psi') or psi*_k ('psi*') applied to a state vector."""
    w.check(k)
    out = {}
    op = _insert if kind == "psi" else _remove
    for occ, c in state.items():
        r = op(occ, k)
        if r is None:
            continue
        occ2, sign = r
        _acc(out, occ2, c * sign)
    return out


def _acc(out, occ, val):
    if occ in out:
        s = out[occ] + val
        if _iszero(s):
            del out[occ]
        else:
            out[occ] = s
    elif not _iszero(val):
        out[occ] = val


def _iszero(v):
    if isinstance(v, _Poly):
        return not v
    return v == 0


def add_states(a, b, factor=1):
    out = dict(a)
    for occ, c in b.items():
        _acc(out, occ, c * factor)
    return out


def scale_state(a, factor):
    return {occ: c * factor for occ, c in a.items()}


def apply_field(z, state, w: FockWindow):
    """psi(z) = sum_k psi_k z^k over the window."""
    out = {}
    for k in w.modes():
        zk = z ** k
        for occ, c in state.items():
            r = _insert(occ, k)
            if r is None:
                continue
            occ2, sign = r
            _acc(out, occ2, c * (sign * zk))
    return out


def apply_field_star(z, state, w: FockWindow):
    """psi*(z) = sum_k psi*_k z^-k over the window."""
    out = {}
    for k in w.modes():
        zk = z ** (-k)
        for occ, c in state.items():
            r = _remove(occ, k)
            if r is None:
                continue
            occ2, sign = r
            _acc(out, occ2, c * (sign * zk))
    return out


def pair(bra_state, ket_state):
    """Bilinear pairing sum_occ bra[occ] ket[occ] (no conjugation)."""
    if len(bra_state) > len(ket_state):
        bra_state, ket_state = ket_state, bra_state
    tot = 0
    for occ, c in bra_state.items():
        if occ in ket_state:
            tot = tot + c * ket_state[occ]
    return tot


def frobenius(lam):
    """(alphas, betas) with alpha_i = lam_i - i, beta_i = lam'_i - i."""
    lam = tuple(lam)
    lamt = []
    if lam:
        for i in range(1, lam[0] + 1):
            lamt.append(sum(1 for part in lam if part >= i))
    d = sum(1 for i in range(len(lam)) if lam[i] >= i + 1)
    alphas = [lam[i] - (i + 1) for i in range(d)]
    betas = [lamt[i] - (i + 1) for i in range(d)]
    return alphas, betas


def basis_ket(lam, n, w: FockWindow):
    """|lam, n>: Frobenius-ordered mode monomial applied to |n>, normalized
    so that <n| e^{J_+(t)} |lam, n> = s_lam(t) exactly; with the raw
    psi*_{n-b1-1}...psi_{n+a1} ordering the pairing carries the extra sign
    (-1)^(d + sum beta_i), which is divided out here."""
    alphas, betas = frobenius(lam)
    sign = (-1) ** (len(betas) + sum(betas))
    st = vacuum(w, n)
    # rightmost factor acts first: psi_{n+a1}, ..., psi_{n+ad}, then the
    # psi* block from the inside out
    for a in alphas:
        st = apply_mode("psi", n + a, st, w)
    for b in reversed(betas):
        st = apply_mode("psi*", n - b - 1, st, w)
    return scale_state(st, sign) if sign < 0 else st


def basis_bra(lam, n, w: FockWindow):
    """<lam, n| = <n| psi*_{n+a1} ... psi*_{n+ad} psi_{n-bd-1} ... psi_{n-b1-1},
    built by transposed actions (psi <-> psi*) in reading order."""
    alphas, betas = frobenius(lam)
    sign = (-1) ** (len(betas) + sum(betas))
    st = vacuum(w, n)
    for a in alphas:
        st = apply_mode("psi", n + a, st, w)
    for b in reversed(betas):
        st = apply_mode("psi*", n - b - 1, st, w)
    return scale_state(st, sign) if sign < 0 else st


def apply_j(k, state, w: FockWindow, strict=True):
    """J_k = sum_j psi_j psi*_{j+k} (k != 0) applied to a state."""
    if k == 0:
        raise ValueError("use the charge operator for k = 0")
    out = {}
    for occ, c in state.items():
        for m in occ:
            j = m - k
            if j < w.lo:
                # creating below the window acts on the filled sea: zero
                continue
            if j >= w.hi:
                if strict:
                    raise WindowExhausted(f"J_{k} pushes mode {m} to {j}")
                continue
            r1 = _remove(occ, m)
            occ1, s1 = r1
            r2 = _insert(occ1, j)
            if r2 is None:
                continue
            occ2, s2 = r2
            _acc(out, occ2, c * (s1 * s2))
    return out


def _div(c, d):
    if isinstance(c, (int, Fraction)):
        return c * Fraction(1, d)
    if isinstance(c, _Poly):
        return c * Fraction(1, d)
    return c / d


def j_plus_pair(state, times, n, w: FockWindow, degree_cap=None):
    """<n| e^{J_+(t)} |state> by the terminating series (J_k lowers weight).

    times: {k: value-or-_Poly}; values may be numbers or polynomial carriers,
    so the result is numeric or an exact polynomial.
    """
    bra = vacuum(w, n)
    total = pair(bra, state)
    cur = state
    d = 0
    cap = degree_cap if degree_cap is not None else w.K * 8
    while cur and d < cap:
        d += 1
        nxt = {}
        for k, tk in times.items():
            if _iszero(tk):
                continue
            jk = apply_j(k, cur, w)
            for occ, c in jk.items():
                _acc(nxt, occ, c * tk)
        cur = {occ: _div(c, d) for occ, c in nxt.items()}
        total = total + pair(bra, cur)
    return total


def _tvar(k, sign):
    return _Poly.var(("t", k if sign > 0 else -k))


def symbolic_times(kmax, sign=+1):
    """{k: t_k as polynomial} for the exact expansion routes."""
    return {k: _tvar(k, sign) for k in range(1, kmax + 1)}


# ---------------------------------------------------------------------------
# Wick theorems


def _linear_combo(coeffs, kind, state, w):
    out = {}
    for k, a in coeffs.items():
        if _iszero(a):
            continue
        piece = apply_mode(kind, k, state, w)
        out = add_states(out, piece, a)
    return out


def wick_expectation(v_list, w_list, n, w: FockWindow):
    """<n| v_1 ... v_m w*_m ... w*_1 |n> as the m x m pair determinant.

    v_list[i], w_list[i]: {mode: coefficient} for v_i = sum v_k psi_k and
    w*_i = sum w_k psi*_k.
    """
    m = len(v_list)
    mat = np.zeros((m, m), dtype=complex)
    for i in range(m):
        for j in range(m):
            mat[i, j] = sum(
                v_list[i].get(k, 0) * w_list[j].get(k, 0)
                for k in set(v_list[i]) & set(w_list[j])
                if k < n
            )
    return np.linalg.det(mat) if m else 1.0


def brute_expectation(v_list, w_list, n, w: FockWindow):
    """Same object by direct mode application (oracle).

    The string v_1..v_m w*_m..w*_1 acts right-to-left: w*_1 first, v_1 last.
    """
    st = vacuum(w, n)
    for wl in w_list:
        st = _linear_combo(wl, "psi*", st, w)
    for vl in reversed(v_list):
        st = _linear_combo(vl, "psi", st, w)
    return pair(vacuum(w, n), st)


def apply_quasigroup(g_spec, state, w: FockWindow):
    """Apply a constructible quasigroup element to a ket.

    g_spec forms:
      ('modes', [(kind, k), ...])            product, leftmost first
      ('soliton', [(p, q, b), ...])          product of psi(q)+b psi(p)
      ('normal_exponent_empty', B)           x-ordered exp, B: {(i,k): val}
      ('normal_exponent_dirac', A)           dot-ordered exp
    """
    tag = g_spec[0]
    if tag == "modes":
        for kind, k in reversed(g_spec[1]):
            state = apply_mode(kind, k, state, w)
        return state
    if tag == "soliton":
        for (p, q, b) in reversed(g_spec[1]):
            state = add_states(apply_field(q, state, w), apply_field(p, state, w), b)
        return state
    if tag == "mixed":
        # product of linear combinations: [('psi'|'psi*', {mode: coeff}), ...]
        for kind, coeffs in reversed(g_spec[1]):
            state = _linear_combo(coeffs, kind, state, w)
        return state
    if tag == "normal_exponent_empty":
        return normal_exponent_empty(g_spec[1], state, w)
    if tag == "normal_exponent_dirac":
        return normal_exponent_dirac(g_spec[1], state, w)
    raise ValueError(tag)


def expectation(gprime_spec, g_spec, middle_ops, n, w: FockWindow):
    """<n| G' (middle ops) G |n> with middle_ops = [(kind, {mode: coeff}), ...]."""
    st = vacuum(w, n)
    st = apply_quasigroup(g_spec, st, w)
    for kind, coeffs in reversed(middle_ops):
        st = _linear_combo(coeffs, kind, st, w)
    if gprime_spec is not None:
        st = apply_transposed_quasigroup(gprime_spec, st, w)
    return pair(vacuum(w, n), st)


def apply_transposed_quasigroup(g_spec, state, w: FockWindow):
    """Action of <n| G' ... on the ket side: transpose swaps psi <-> psi*
    and reverses the factor order."""
    tag = g_spec[0]
    if tag == "modes":
        for kind, k in g_spec[1]:
            state = apply_mode("psi*" if kind == "psi" else "psi", k, state, w)
        return state
    if tag == "soliton":
        for (p, q, b) in g_spec[1]:
            state = add_states(
                _field_star_dual(q, state, w), _field_star_dual(p, state, w), b
            )
        return state
    if tag == "mixed":
        for kind, coeffs in g_spec[1]:
            state = _linear_combo(coeffs, "psi*" if kind == "psi" else "psi", state, w)
        return state
    if tag == "normal_exponent_empty":
        # transpose of x:exp(sum B_ik psi*_i psi_k):x is the same form with
        # B transposed
        bt = {(k, i): v for (i, k), v in g_spec[1].items()}
        return normal_exponent_empty(bt, state, w)
    raise ValueError(tag)


def _field_star_dual(z, state, w):
    """Transpose of psi(z) = sum z^k psi_k is sum z^k psi*_k."""
    out = {}
    for k in w.modes():
        zk = z ** k
        for occ, c in state.items():
            r = _remove(occ, k)
            if r is None:
                continue
            occ2, sign = r
            _acc(out, occ2, c * (sign * zk))
    return out


def generalized_wick(gprime_spec, g_spec, v_list, w_list, n, w: FockWindow):
    """<n|G' v_1..v_m w*_m..w*_1 G|n> / <n|G'G|n> as the determinant of
    normalized pair expectations."""
    den = expectation(gprime_spec, g_spec, [], n, w)
    if _iszero(den):
        raise ZeroDenominator("<n|G'G|n> = 0")
    m = len(v_list)
    mat = np.zeros((m, m), dtype=complex)
    for i in range(m):
        for j in range(m):
            mat[i, j] = (
                expectation(
                    gprime_spec,
                    g_spec,
                    [("psi", v_list[j]), ("psi*", w_list[i])],
                    n,
                    w,
                )
                / den
            )
    return np.linalg.det(mat) if m else 1.0


def brute_generalized(gprime_spec, g_spec, v_list, w_list, n, w: FockWindow):
    ops = [("psi", v) for v in v_list] + [("psi*", wl) for wl in reversed(w_list)]
    den = expectation(gprime_spec, g_spec, [], n, w)
    if _iszero(den):
        raise ZeroDenominator("<n|G'G|n> = 0")
    return expectation(gprime_spec, g_spec, ops, n, w) / den


# ---------------------------------------------------------------------------
# normally ordered exponents


def _apply_no_monomial(pairs, state, w, dirac):
    """Apply the normal-ordered monomial of psi*_{i} psi_{k} pairs.

    pairs: [(i1, k1), ..., (im, km)] meaning the (Bex)-style canonical term
    psi*_{i1} ... psi*_{im} psi_{km} ... psi_{k1}.  For the Dirac ordering the
    operators are re-sorted into creators-left with the anticommutation sign.
    """
    ops = [("psi*", i) for i, _ in pairs] + [("psi", k) for _, k in reversed(pairs)]
    if dirac:
        def is_creator(op):
            kind, k = op
            return (kind == "psi" and k >= 0) or (kind == "psi*" and k < 0)

        sign = 1
        arr = list(ops)
        # stable partition with transposition counting
        for end in range(1, len(arr)):
            j = end
            while j > 0 and (not is_creator(arr[j - 1])) and is_creator(arr[j]):
                arr[j - 1], arr[j] = arr[j], arr[j - 1]
                sign = -sign
                j -= 1
        ops = arr
    else:
        sign = 1
    for kind, k in reversed(ops):
        state = apply_mode(kind, k, state, w)
        if not state:
            return {}
    return scale_state(state, sign)


def _normal_exponent(entries, state, w, dirac):
    items = [(ik, v) for ik, v in entries.items() if not _iszero(v)]
    total = dict(state)
    # a monomial with a repeated psi*_i or psi_k vanishes, so the series
    # terminates at the number of distinct row/column indices
    mmax = min(
        len({i for (i, _), _ in items}), len({k for (_, k), _ in items})
    )
    for m in range(1, mmax + 1):
        layer = {}
        for combo in itertools.product(items, repeat=m):
            coeff = 1
            pairs = []
            for (i, k), v in combo:
                coeff = coeff * v
                pairs.append((i, k))
            piece = _apply_no_monomial(pairs, state, w, dirac)
            for occ, c in piece.items():
                _acc(layer, occ, c * coeff)
        fact = math.factorial(m)
        for occ, c in layer.items():
            _acc(total, occ, _div(c, fact))
    return total


def normal_exponent_empty(entries, state, w: FockWindow):
    """x:exp(sum B_ik psi*_i psi_k):x applied to a ket (creators = psi*
    with respect to the filled reference state)."""
    return _normal_exponent(entries, state, w, dirac=False)


def normal_exponent_dirac(entries, state, w: FockWindow):
    """dot-ordered exp(sum A_ik psi*_i psi_k) with respect to the Dirac sea."""
    return _normal_exponent(entries, state, w, dirac=True)


def normal_order_convert(mat, direction, w: FockWindow):
    """Convert between the Dirac-sea and filled-state normally ordered
    exponents: returns (other_matrix, scalar) with

    dot:exp(A):dot = det(I - P+ A) x:exp(B):x,   B = (I - A P+)^-1 A
    x:exp(B):x = det(I + P+ B) dot:exp(A):dot,   A = B (I + P+ B)^-1
    """
    size = w.hi - w.lo
    m = np.zeros((size, size), dtype=complex)
    for (i, k), v in mat.items():
        m[i - w.lo, k - w.lo] = v
    pplus = np.zeros((size, size))
    for k in range(max(0, w.lo), w.hi):
        pplus[k - w.lo, k - w.lo] = 1.0
    if direction == "dirac->empty":
        denom = np.eye(size) - m @ pplus
        if abs(np.linalg.det(denom)) < 1e-12:
            raise np.linalg.LinAlgError("singular conversion")
        b = np.linalg.solve(denom, m)
        scalar = np.linalg.det(np.eye(size) - pplus @ m)
        out = b
    elif direction == "empty->dirac":
        denom = np.eye(size) + pplus @ m
        if abs(np.linalg.det(denom)) < 1e-12:
            raise np.linalg.LinAlgError("singular conversion")
        a = m @ np.linalg.inv(denom)
        scalar = np.linalg.det(np.eye(size) + pplus @ m)
        out = a
    else:
        raise ValueError(direction)
    entries = {}
    for i in range(size):
        for k in range(size):
            if out[i, k] != 0:
                entries[(i + w.lo, k + w.lo)] = out[i, k]
    return entries, scalar


# ---------------------------------------------------------------------------
# tau functions as expectation values


def vev_tau(g_spec, times_plus, times_minus=None, n=0, w: FockWindow = None):
    """tau_n(t_+, t_-) = <n| e^{J_+(t_+)} G e^{-J_-(t_-)} |n'> numerically.

    n' is fixed by the charge of G.  The series routes are exact up to the
    window degree cap; times may be numbers (numeric tau) or _Poly carriers
    (polynomial tau).
    """
    w = w or FockWindow()
    qcharge = _spec_charge(g_spec, w)
    nprime = n - qcharge
    st = vacuum(w, nprime)
    if times_minus:
        st = _exp_j_minus(st, times_minus, w)
    st2 = apply_quasigroup(g_spec, st, w)
    return j_plus_pair(st2, times_plus, n, w)


def _spec_charge(g_spec, w):
    tag = g_spec[0]
    if tag == "soliton":
        return len(g_spec[1])
    if tag in ("modes", "mixed"):
        q = 0
        for kind, _ in g_spec[1]:
            q += 1 if kind == "psi" else -1
        return q
    return 0


def _weight(occ, base_sum):
    return sum(occ) - base_sum


def _prune_weight(state, base_sum, cap):
    return {occ: c for occ, c in state.items() if sum(occ) - base_sum <= cap}


def _exp_j_minus(state, times_minus, w, sign=-1):
    """e^{sign * J_-(t_-)} |state> truncated at total diagram weight K."""
    base = min(sum(occ) for occ in state)
    total = dict(state)
    cur = state
    d = 0
    while cur:
        d += 1
        nxt = {}
        for k, tk in times_minus.items():
            if _iszero(tk):
                continue
            jk = apply_j(-k, cur, w)
            for occ, c in jk.items():
                _acc(nxt, occ, c * tk)
        cur = _prune_weight(
            {occ: _div(c * sign, d) for occ, c in nxt.items()}, base, w.K
        )
        if not cur:
            break
        total = add_states(total, cur)
    return total


def soliton_vev_tauexpr(pairs, n0=0, w: FockWindow = None) -> TauExpr:
    """Exact TauExpr of the soliton-product expectation value (raw tau,
    quadratic pairing factor included).

    Expanding each psi(q_i) + b_i psi(p_i) over branches, the remaining
    window computation <n|psi(z_1)...psi(z_N)|n-N> is evaluated once at a
    reference charge and carried as z^n lattice factors.
    """
    w = w or FockWindow()
    N = len(pairs)
    out = []
    for branch in itertools.product((0, 1), repeat=N):
        zs = [p if pick else q for (p, q, b), pick in zip(pairs, branch)]
        coeff = 1
        for (p, q, b), pick in zip(pairs, branch):
            if pick:
                coeff = coeff * b
        st = vacuum(w, n0 - N)
        for z in reversed(zs):
            st = apply_field(z, st, w)
        val = pair(vacuum(w, n0), st)
        const = coeff * val
        for z in zs:
            const = const * z ** (-n0)
        plus = tuple((z, 1) for z in zs)
        minus = tuple((z, 1) for z in zs)
        nfac = tuple((z, 1) for z in zs)
        out.append((_Poly.const(const), _Phase(plus=plus, minus=minus, nfac=nfac, quad=-1)))
    return TauExpr(out)


def bosonization_check(z, n, w: FockWindow, kmax=3):
    """Both sides of <n| e^{J_+} psi(z) e^{J_-} |n-1> as polynomials in the
    times; returns the max coefficient deviation over the retained orders.

    Retained orders: total weight <= K on each time family.
    """
    tp = {k: _Poly.var(("tp", k)) for k in range(1, kmax + 1)}
    tm = {k: _Poly.var(("tm", k)) for k in range(1, kmax + 1)}
    st = vacuum(w, n - 1)
    # the matched element uses e^{+J_-}
    total = _exp_j_minus(st, tm, w, sign=+1)
    st = apply_field(z, total, w)
    lhs = j_plus_pair(st, tp, n, w, degree_cap=w.K)
    # closed form z^{n-1} exp(xi(t+, z) - xi(t-, 1/z) + sum k tp_k tm_k)
    arg = _Poly()
    for k in range(1, kmax + 1):
        arg = arg + _Poly.var(("tp", k)) * (z ** k)
        arg = arg + _Poly.var(("tm", k)) * (-(z ** (-k)))
        arg = arg + _Poly.var(("tp", k)) * _Poly.var(("tm", k)) * k
    rhs = _Poly.const(z ** (n - 1))
    term = _Poly.const(z ** (n - 1))
    for m in range(1, 2 * w.K + 1):
        term = term * arg
        term = _Poly({mon: c / m for mon, c in term.terms.items()})
        rhs = rhs + term
    # compare on retained orders
    worst = 0.0
    lhs_terms = lhs.terms if isinstance(lhs, _Poly) else {(): lhs}
    for mono, c in {**rhs.terms, **lhs_terms}.items():
        wp = sum(k[1] * e for k, e in mono if k[0] == "tp")
        wm = sum(k[1] * e for k, e in mono if k[0] == "tm")
        if wp > w.K or wm > w.K:
            continue
        a = lhs_terms.get(mono, 0)
        b = rhs.terms.get(mono, 0)
        worst = max(worst, abs(complex(a) - complex(b)))
    return worst


def bbr_residual(g_spec, bra1, ket1, bra2, ket2, w: FockWindow):
    """Residual of the basic bilinear relation
    sum_k <U|psi_k G|V><U'|psi*_k G|V'> = sum_k <U|G psi_k|V><U'|G psi*_k|V'>."""
    lhs = 0
    rhs = 0
    gv1 = apply_quasigroup(g_spec, ket1, w)
    gv2 = apply_quasigroup(g_spec, ket2, w)
    for k in w.modes():
        a = pair(bra1, apply_mode("psi", k, gv1, w))
        b = pair(bra2, apply_mode("psi*", k, gv2, w))
        lhs = lhs + a * b
        c = pair(bra1, apply_quasigroup(g_spec, apply_mode("psi", k, ket1, w), w))
        d = pair(bra2, apply_quasigroup(g_spec, apply_mode("psi*", k, ket2, w), w))
        rhs = rhs + c * d
    return abs(complex(lhs - rhs))
