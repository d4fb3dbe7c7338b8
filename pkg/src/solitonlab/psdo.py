"""Pseudo-differential operator algebra with certified truncation depth.

An operator is a Laurent-type series sum_k v_k d^k with DiffPoly coefficients
written to the left of powers of d = d/dx.  Negative powers expand against
functions through the generalized Leibniz rule, so most products are infinite
series; every operator therefore carries a certified floor: coefficients at
orders >= floor are exact, orders below are unknown (floor None means the
operator is exact, all lower coefficients being zero).  Arithmetic propagates
floors pessimistically and raises DepthExhausted instead of silently
truncating.
"""

from __future__ import annotations

from fractions import Fraction

from .diffpoly import (
    DiffPoly,
    binomial,
    jet,
    one,
    to_text,
    total_derivative,
    zero,
)

__all__ = [
    "PsiDO",
    "DepthExhausted",
    "NotMonic",
    "DEFAULT_DEPTH",
    "d",
    "identity",
    "from_poly",
    "compose",
    "split",
    "residue",
    "adjoint",
    "fractional_power",
    "sqrt_schroedinger",
    "residue_pairing",
    "z_series_pairing",
    "to_text_op",
    "parse_op",
]

DEFAULT_DEPTH = 12


class DepthExhausted(Exception):
    """Requested coefficients below the certified floor."""


class NotMonic(Exception):
    """Fractional powers need a monic operator with unit leading coefficient."""


def _as_poly(c):
    if isinstance(c, DiffPoly):
        return c
    return DiffPoly.const(c)


class PsiDO:
    """sum_k coeffs[k] * d^k, certified at orders >= floor."""

    __slots__ = ("coeffs", "floor")

    def __init__(self, coeffs=None, floor=None):
        self.coeffs = {}
        if coeffs:
            for k, c in coeffs.items():
                c = _as_poly(c)
                if c:
                    self.coeffs[k] = c
        self.floor = floor
        if floor is not None:
            self.coeffs = {k: c for k, c in self.coeffs.items() if k >= floor}

    # -- basic structure -----------------------------------------------------

    @property
    def max_order(self):
        return max(self.coeffs) if self.coeffs else None

    @property
    def min_order(self):
        return min(self.coeffs) if self.coeffs else None

    def is_exact(self):
        return self.floor is None

    def coeff(self, k):
        if self.floor is not None and k < self.floor:
            raise DepthExhausted(f"order {k} below certified floor {self.floor}")
        return self.coeffs.get(k, zero())

    def __eq__(self, other):
        if not isinstance(other, PsiDO):
            return NotImplemented
        lo = _max_floor(self.floor, other.floor)
        if lo is None:
            return self.coeffs == other.coeffs
        a = {k: c for k, c in self.coeffs.items() if k >= lo}
        b = {k: c for k, c in other.coeffs.items() if k >= lo}
        return a == b

    def __add__(self, other):
        if isinstance(other, (int, Fraction, DiffPoly)):
            other = from_poly(other)
        res = dict(self.coeffs)
        for k, c in other.coeffs.items():
            s = res.get(k, zero()) + c
            if s:
                res[k] = s
            else:
                res.pop(k, None)
        return PsiDO(res, _max_floor(self.floor, other.floor))

    __radd__ = __add__

    def __neg__(self):
        return PsiDO({k: -c for k, c in self.coeffs.items()}, self.floor)

    def __sub__(self, other):
        if isinstance(other, (int, Fraction, DiffPoly)):
            other = from_poly(other)
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return PsiDO({k: c * other for k, c in self.coeffs.items()}, self.floor)
        if isinstance(other, DiffPoly):
            return PsiDO({k: other * c for k, c in self.coeffs.items()}, self.floor)
        if isinstance(other, PsiDO):
            return compose(self, other)
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.__mul__(other)
        if isinstance(other, DiffPoly):
            # function times operator: multiply coefficients on the left
            return PsiDO({k: other * c for k, c in self.coeffs.items()}, self.floor)
        return NotImplemented

    def power(self, n, floor=None):
        if n < 0:
            raise ValueError("negative operator power not supported")
        res = identity()
        for _ in range(n):
            res = compose(res, self, floor=floor)
        return res

    def truncate(self, floor):
        """Restrict certification to orders >= floor (cheap, floor only rises)."""
        f = _max_floor(self.floor, floor)
        return PsiDO({k: c for k, c in self.coeffs.items() if f is None or k >= f}, f)

    def __repr__(self):
        return f"PsiDO({to_text_op(self)})"


def _max_floor(f1, f2):
    if f1 is None:
        return f2
    if f2 is None:
        return f1
    return max(f1, f2)


# -- constructors -------------------------------------------------------------

def d(k=1):
    """The operator d^k."""
    return PsiDO({k: one()})


def identity():
    return PsiDO({0: one()})


def from_poly(p):
    """Multiplication operator by the function p."""
    p = _as_poly(p)
    return PsiDO({0: p}) if p else PsiDO({})


def schroedinger_l():
    """d^2 + u: the second-order operator underlying the KdV hierarchy."""
    return PsiDO({2: one(), 0: jet(0, 0)})


# -- core arithmetic -----------------------------------------------------------

def compose(P: PsiDO, Q: PsiDO, floor=None) -> PsiDO:
    """Operator product P Q.

    d^k f = sum_j binom(k, j) f^(j) d^(k-j) with the generalized binomial, so
    factors with negative orders generate infinite descending series.  The
    result floor is the tightest of: the caller's request, pollution from the
    operands' uncertified tails, and DEFAULT_DEPTH below the top order when an
    infinite series forces truncation of an otherwise exact product.
    """
    if not P.coeffs or not Q.coeffs:
        return PsiDO({}, _pollution_floor(P, Q, floor))
    target = _pollution_floor(P, Q, floor)
    if target is None and P.min_order < 0:
        target = P.max_order + Q.max_order - DEFAULT_DEPTH
    if floor is not None:
        target = _max_floor(target, floor)

    res = {}
    # cache iterated derivatives of Q's coefficients
    dcache = {}

    def deriv(l, j):
        key = (l, j)
        if key not in dcache:
            dcache[key] = Q.coeffs[l] if j == 0 else total_derivative(deriv(l, j - 1))
        return dcache[key]

    for k, p in P.coeffs.items():
        for l in Q.coeffs:
            j = 0
            while True:
                order = k + l - j
                if target is not None and order < target:
                    break
                if k >= 0 and j > k:
                    break
                b = binomial(k, j)
                if b:
                    dq = deriv(l, j)
                    if dq:
                        term = p * dq * b
                        if term:
                            s = res.get(order, zero()) + term
                            if s:
                                res[order] = s
                            else:
                                res.pop(order, None)
                j += 1
                if target is None and j > max(k, 0):
                    break
    return PsiDO(res, target)


def _pollution_floor(P, Q, requested):
    worst = None
    if P.floor is not None and Q.coeffs:
        worst = _max_floor(worst, P.floor + Q.max_order)
    if Q.floor is not None and P.coeffs:
        worst = _max_floor(worst, P.max_order + Q.floor)
    if (P.floor is not None or Q.floor is not None) and not (P.coeffs and Q.coeffs):
        # product with an (empty) uncertified operator stays uncertified
        worst = _max_floor(P.floor, Q.floor)
    return _max_floor(worst, requested)


def split(P: PsiDO):
    """(P_+, P_-): differential part (orders >= 0) and the rest."""
    if P.floor is not None and P.floor > 0:
        raise DepthExhausted("plus-part not fully certified")
    plus = PsiDO({k: c for k, c in P.coeffs.items() if k >= 0})
    minus = PsiDO({k: c for k, c in P.coeffs.items() if k < 0}, P.floor)
    return plus, minus


def residue(P: PsiDO) -> DiffPoly:
    """Coefficient of d^-1."""
    if P.floor is not None and P.floor > -1:
        raise DepthExhausted("residue below certified floor")
    return P.coeffs.get(-1, zero())


def adjoint(P: PsiDO, floor=None) -> PsiDO:
    """(sum v_k d^k)^dagger = sum (-d)^k v_k, normalized coefficients-left."""
    target = P.floor
    if target is None and P.coeffs and P.min_order < 0:
        target = P.max_order - DEFAULT_DEPTH
    if floor is not None:
        target = _max_floor(target, floor)
    res = {}
    for k, v in P.coeffs.items():
        sign = 1 if k % 2 == 0 else -1
        j = 0
        dv = v
        while True:
            order = k - j
            if target is not None and order < target:
                break
            if k >= 0 and j > k:
                break
            b = binomial(k, j)
            if b:
                term = dv * (b * sign)
                if term:
                    s = res.get(order, zero()) + term
                    if s:
                        res[order] = s
                    else:
                        res.pop(order, None)
            j += 1
            if target is None and j > max(k, 0):
                break
            dv = total_derivative(dv)
    return PsiDO(res, target)


# -- square root and fractional powers ----------------------------------------

def sqrt_schroedinger(L: PsiDO, floor: int) -> PsiDO:
    """Square root of a monic second-order operator, certified to `floor`.

    Newton-style downward recursion: start from d and kill the top error
    order of L - R*R with a correction c*d^(e-1), c = err/2.
    """
    if L.max_order != 2 or L.coeffs.get(2) != one():
        raise NotMonic("square root requires monic order-2 operator")
    if L.floor is not None and L.floor > floor:
        raise DepthExhausted("operand not certified deep enough for sqrt")
    R = PsiDO({1: one()})
    # corrections march down one order per step, starting at order 0
    order = 0
    while order >= floor:
        err = L - compose(R, R, floor=order + 1)
        c = err.coeffs.get(order + 1, zero())
        if c:
            R = R + PsiDO({order: c * Fraction(1, 2)})
        order -= 1
    return R.truncate(floor)


def fractional_power(L: PsiDO, num: int, den: int, floor=None) -> PsiDO:
    """L^(num/den) for den in (1, 2), monic L of order den."""
    if den == 1:
        if L.coeffs.get(L.max_order) != one() or L.max_order != 1:
            if L.max_order is None or L.coeffs.get(L.max_order) != one():
                raise NotMonic("expected unit leading coefficient")
        if floor is None and L.min_order >= 0:
            return L.power(num)
        return L.power(num, floor=floor)
    if den != 2:
        raise NotMonic("only square roots (den = 2) are supported")
    if num % den == 0:
        return L.power(num // den, floor=floor)
    target = floor if floor is not None else num - DEFAULT_DEPTH
    # R = L^(1/2) deep enough that L^((num-1)/2) R is certified to target
    k = (num - 1) // 2
    sq = sqrt_schroedinger(L, target - 2 * k)
    res = sq
    for _ in range(k):
        res = compose(L, res, floor=target)
    return res


# -- residue pairing -----------------------------------------------------------

def residue_pairing(P: PsiDO, Q: PsiDO) -> DiffPoly:
    """res_d(P Q^dagger), comparable against z_series_pairing."""
    return residue(compose(P, adjoint(Q)))


def z_series_pairing(P: PsiDO, Q: PsiDO) -> DiffPoly:
    """res_z[(P e^(xz)) (Q e^(-xz))] = sum_{i+j=-1} (-1)^j p_i q_j.

    Independent of operator composition: d^n e^(xz) = z^n e^(xz) extended to
    negative n turns both factors into Laurent series in z with function
    coefficients, and the z-residue is a finite bilinear sum.
    """
    res = zero()
    for i, p in P.coeffs.items():
        j = -1 - i
        q = Q.coeffs.get(j)
        if q is None:
            if Q.floor is not None and j < Q.floor and (P.floor is None or i >= P.floor):
                raise DepthExhausted("pairing touches uncertified orders")
            continue
        term = p * q
        res = res + (term if j % 2 == 0 else -term)
    return res


# -- printing / parsing ---------------------------------------------------------

def parse_op(text: str, names=None) -> PsiDO:
    """Round-trip parser for to_text_op output: terms 'coeff*d^k', 'd', a bare
    coefficient, and a trailing '+ O(d^k)' floor marker."""
    from .diffpoly import parse as parse_poly

    text = text.strip()
    if text == "0":
        return PsiDO({})
    floor = None
    coeffs = {}
    for chunk in _split_top(text):
        chunk = chunk.strip()
        if chunk.startswith("O(d^"):
            floor = int(chunk[4:-1]) + 1
            continue
        if "*d" in chunk or chunk == "d" or chunk.startswith("d^"):
            body, _, dpart = chunk.rpartition("*") if "*d" in chunk else ("1", "", chunk)
            k = 1 if dpart == "d" else int(dpart[2:])
        else:
            body, k = chunk, 0
        body = body.strip()
        if body.startswith("(") and body.endswith(")"):
            body = body[1:-1]
        poly = parse_poly(body or "1", names)
        if poly:
            coeffs[k] = coeffs.get(k, zero()) + poly
    return PsiDO(coeffs, floor)


def _split_top(text):
    out, depth, cur = [], 0, ""
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if depth == 0 and text.startswith(" + ", i):
            out.append(cur)
            cur = ""
            i += 3
            continue
        if depth == 0 and text.startswith(" - ", i):
            out.append(cur)
            cur = "-"
            i += 3
            continue
        cur += ch
        i += 1
    out.append(cur)
    return out


def to_text_op(P: PsiDO, names=None) -> str:
    if not P.coeffs:
        return "0"
    chunks = []
    for k in sorted(P.coeffs, reverse=True):
        c = P.coeffs[k]
        body = to_text(c, names)
        if "+" in body or "- " in body:
            body = f"({body})"
        if k == 0:
            chunks.append(body)
        else:
            dk = "d" if k == 1 else f"d^{k}"
            chunks.append(dk if body == "1" else f"{body}*{dk}")
    out = chunks[0]
    for piece in chunks[1:]:
        out += " - " + piece[1:] if piece.startswith("-") else " + " + piece
    if P.floor is not None:
        out += f" + O(d^{P.floor - 1})"
    return out
