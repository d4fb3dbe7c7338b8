"""Pseudo-difference operators: polynomials in the lattice shift e^(d/dn).

A term a(n) S^s acts as f(n) -> a(n) f(n+s), S = e^(d/dn).  Coefficients are
either numpy arrays over one period of a periodic lattice (numeric mode) or
DiffPoly in abstract site functions keyed ('f', name, offset) (symbolic mode,
offset meaning the argument n+offset).  All operators here are finite in the
shift, so products are exact; an optional certified window is enforced for
callers that truncate.
"""

from __future__ import annotations

import numpy as np

from .diffpoly import DiffPoly, zero

__all__ = [
    "PsDiffOp",
    "WindowExhausted",
    "site",
    "shift_poly",
    "compose_shift",
    "residue_shift",
    "to_text_shift",
    "parse_shift",
]


class WindowExhausted(Exception):
    """A shift outside the certified window was requested."""


def site(name, offset=0):
    """Symbolic site function value name(n+offset)."""
    return DiffPoly.var(("f", name, offset))


def shift_poly(p: DiffPoly, s: int) -> DiffPoly:
    """Shift every site function argument by s sites."""
    if s == 0:
        return p
    res = {}
    for m, c in p.terms.items():
        nm = tuple(
            sorted(((k[0], k[1], k[2] + s) if k[0] == "f" else k, e) for k, e in m)
        )
        res[nm] = res.get(nm, 0) + c
    return DiffPoly(res)


def _shift_coeff(c, s, period=None):
    if isinstance(c, DiffPoly):
        return shift_poly(c, s)
    arr = np.asarray(c)
    return np.roll(arr, -s)


def _add_coeff(a, b):
    if isinstance(a, DiffPoly) or isinstance(b, DiffPoly):
        a = a if isinstance(a, DiffPoly) else DiffPoly.const(a)
        b = b if isinstance(b, DiffPoly) else DiffPoly.const(b)
        return a + b
    return a + b


def _mul_coeff(a, b):
    return a * b


def _is_zero(c):
    if isinstance(c, DiffPoly):
        return not c
    return not np.any(np.asarray(c))


class PsDiffOp:
    """sum_s coeffs[s] * S^s with S f(n) = f(n+1)."""

    __slots__ = ("coeffs", "window")

    def __init__(self, coeffs=None, window=None):
        self.coeffs = {}
        if coeffs:
            for s, c in coeffs.items():
                if not _is_zero(c):
                    self.coeffs[s] = c
        self.window = window  # (lo, hi) certified shift range or None

    def coeff(self, s):
        if self.window is not None and not (self.window[0] <= s <= self.window[1]):
            raise WindowExhausted(f"shift {s} outside window {self.window}")
        if s in self.coeffs:
            return self.coeffs[s]
        return zero()

    def __add__(self, other):
        res = dict(self.coeffs)
        for s, c in other.coeffs.items():
            res[s] = _add_coeff(res[s], c) if s in res else c
        return PsDiffOp(res, _meet(self.window, other.window))

    def __sub__(self, other):
        return self + PsDiffOp(
            {s: (-c if isinstance(c, DiffPoly) else -np.asarray(c)) for s, c in other.coeffs.items()},
            other.window,
        )

    def __repr__(self):
        parts = []
        for s in sorted(self.coeffs, reverse=True):
            parts.append(f"({self.coeffs[s]!r})*S^{s}" if s else f"({self.coeffs[s]!r})")
        return " + ".join(parts) or "0"


def _meet(w1, w2):
    if w1 is None:
        return w2
    if w2 is None:
        return w1
    return (max(w1[0], w2[0]), min(w1[1], w2[1]))


def compose_shift(P: PsDiffOp, Q: PsDiffOp, window=None) -> PsDiffOp:
    """Product using S^s b(n) = b(n+s) S^s."""
    res = {}
    for s, a in P.coeffs.items():
        for r, b in Q.coeffs.items():
            t = s + r
            if window is not None and not (window[0] <= t <= window[1]):
                continue
            term = _mul_coeff(a, _shift_coeff(b, s))
            res[t] = _add_coeff(res[t], term) if t in res else term
    w = _meet(P.window, Q.window)
    if window is not None:
        w = _meet(w, (window[0], window[1]))
    return PsDiffOp(res, w)


def op_power(P: PsDiffOp, k: int, window=None) -> PsDiffOp:
    res = PsDiffOp({0: DiffPoly.const(1) if _symbolic(P) else 1.0})
    for _ in range(k):
        res = compose_shift(res, P, window=window)
    return res


def _symbolic(P):
    return any(isinstance(c, DiffPoly) for c in P.coeffs.values())


def residue_shift(P: PsDiffOp):
    """Coefficient of the zero shift."""
    return P.coeff(0)


def to_text_shift(P: PsDiffOp) -> str:
    """Text form with S for the unit shift, e.g. 'S + u0(n) + c(n)*S^-1'."""
    from .diffpoly import to_text

    if not P.coeffs:
        return "0"
    chunks = []
    for s in sorted(P.coeffs, reverse=True):
        c = P.coeffs[s]
        body = to_text(c) if isinstance(c, DiffPoly) else repr(c)
        if "+" in body or "- " in body:
            body = f"({body})"
        if s == 0:
            chunks.append(body)
        else:
            sk = "S" if s == 1 else f"S^{s}"
            chunks.append(sk if body == "1" else f"{body}*{sk}")
    return " + ".join(chunks)


def parse_shift(text: str) -> PsDiffOp:
    """Round-trip parser for to_text_shift on symbolic operators."""
    from .diffpoly import DiffPoly, parse

    text = text.strip()
    if text == "0":
        return PsDiffOp({})
    coeffs = {}
    depth, cur, parts = 0, "", []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if depth == 0 and text.startswith(" + ", i):
            parts.append(cur)
            cur = ""
            i += 3
            continue
        cur += ch
        i += 1
    parts.append(cur)
    for chunk in parts:
        chunk = chunk.strip()
        if "*S" in chunk or chunk == "S" or chunk.startswith("S^"):
            if "*S" in chunk:
                body, _, spart = chunk.rpartition("*")
            else:
                body, spart = "1", chunk
            s = 1 if spart == "S" else int(spart[2:])
        else:
            body, s = chunk, 0
        body = body.strip()
        if body.startswith("(") and body.endswith(")"):
            body = body[1:-1]
        poly = _parse_site_poly(body or "1")
        if poly:
            coeffs[s] = _add_coeff(coeffs[s], poly) if s in coeffs else poly
    return PsDiffOp(coeffs)


def _parse_site_poly(text: str) -> DiffPoly:
    """Parse sums of products of site functions name(n+off) and rationals."""
    from fractions import Fraction

    total = DiffPoly()
    # split top-level on +/-
    terms = []
    cur, sign = "", 1
    depth = 0
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if depth == 0 and ch in "+-" and cur.strip():
            terms.append((sign, cur))
            sign = 1 if ch == "+" else -1
            cur = ""
        elif depth == 0 and ch in "+-":
            sign *= 1 if ch == "+" else -1
        else:
            cur += ch
    terms.append((sign, cur))
    for sgn, chunk in terms:
        poly = DiffPoly.const(sgn)
        for factor in chunk.split("*"):
            factor = factor.strip()
            if not factor:
                continue
            if "^" in factor:
                base, _, e = factor.partition("^")
                e = int(e)
            else:
                base, e = factor, 1
            base = base.strip()
            if base[0].isdigit():
                poly = poly * (Fraction(base) ** e)
            elif "(" in base:
                name, _, arg = base.partition("(")
                arg = arg.rstrip(")")
                off = 0 if arg == "n" else int(arg[1:])
                poly = poly * DiffPoly.var(("f", name, off), e)
            else:
                poly = poly * DiffPoly.var(("s", base), e)
        total = total + poly
    return total


def commutator(P: PsDiffOp, Q: PsDiffOp, window=None) -> PsDiffOp:
    return compose_shift(P, Q, window) - compose_shift(Q, P, window)
