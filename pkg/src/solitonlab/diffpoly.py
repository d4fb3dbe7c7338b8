"""Exact differential-polynomial ring over the rationals.

Polynomials in jet variables u_f^(k) (dependent function index f, number of
x-derivatives k) together with finitely many formal commuting parameters.
Coefficients are exact `fractions.Fraction`; equality of dicts is equality of
polynomials.  This ring is the coefficient domain of every symbolic module in
the package.

Variable keys:
    ('j', f, k)   jet variable: k-th x-derivative of dependent function f
    ('s', name)   formal scalar parameter (spectral parameter, momentum, ...)

A monomial is a tuple of (key, exponent) pairs sorted by key; a polynomial is
a dict {monomial: Fraction} with no zero values.
"""

from __future__ import annotations

from fractions import Fraction
from math import comb

__all__ = [
    "DiffPoly",
    "NotTotalDerivative",
    "jet",
    "sym",
    "one",
    "zero",
    "total_derivative",
    "variational_derivative",
    "antiderivative",
    "try_antiderivative",
    "to_text",
    "to_latex",
    "parse",
]


class NotTotalDerivative(Exception):
    """Raised when a polynomial is not d/dx of any differential polynomial.

    Attributes: `partial` (integrated part q) and `remainder` (irreducible r),
    with input == total_derivative(partial) + remainder.
    """

    def __init__(self, partial, remainder):
        super().__init__("not a total x-derivative")
        self.partial = partial
        self.remainder = remainder


def _mono_mul(m1, m2):
    if not m1:
        return m2
    if not m2:
        return m1
    d = dict(m1)
    for k, e in m2:
        d[k] = d.get(k, 0) + e
    return tuple(sorted(d.items()))


class DiffPoly:
    """Multivariate polynomial with exact rational coefficients."""

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        # terms: dict {monomial: Fraction}; trusted to be canonical when
        # constructed internally, sanitized otherwise.
        if terms is None:
            terms = {}
        self.terms = {m: c for m, c in terms.items() if c != 0}

    # -- constructors ------------------------------------------------------

    @staticmethod
    def const(c):
        c = Fraction(c)
        return DiffPoly({(): c}) if c else DiffPoly()

    @staticmethod
    def var(key, exp=1):
        return DiffPoly({((key, exp),): Fraction(1)})

    # -- ring structure ----------------------------------------------------

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = DiffPoly.const(other)
        if not isinstance(other, DiffPoly):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __add__(self, other):
        if isinstance(other, (int, Fraction)):
            other = DiffPoly.const(other)
        res = dict(self.terms)
        for m, c in other.terms.items():
            s = res.get(m, 0) + c
            if s:
                res[m] = s
            else:
                res.pop(m, None)
        return DiffPoly(res)

    __radd__ = __add__

    def __neg__(self):
        return DiffPoly({m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        if isinstance(other, (int, Fraction)):
            other = DiffPoly.const(other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Fraction(other)
            if not other:
                return DiffPoly()
            return DiffPoly({m: c * other for m, c in self.terms.items()})
        if not isinstance(other, DiffPoly):
            return NotImplemented
        res = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = _mono_mul(m1, m2)
                s = res.get(m, 0) + c1 * c2
                if s:
                    res[m] = s
                else:
                    res.pop(m, None)
        return DiffPoly(res)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self * (Fraction(1) / Fraction(other))

    def __pow__(self, n):
        if n < 0:
            raise ValueError("negative power of a polynomial")
        res = one()
        base = self
        while n:
            if n & 1:
                res = res * base
            n >>= 1
            if n:
                base = base * base
        return res

    # -- queries -----------------------------------------------------------

    def variables(self):
        seen = set()
        for m in self.terms:
            for k, _ in m:
                seen.add(k)
        return seen

    def jet_functions(self):
        return {k[1] for k in self.variables() if k[0] == "j"}

    def max_order(self, func=None):
        """Highest derivative order present (of `func`, or any function)."""
        best = -1
        for m in self.terms:
            for k, _ in m:
                if k[0] == "j" and (func is None or k[1] == func):
                    best = max(best, k[2])
        return best

    def constant_term(self):
        return self.terms.get((), Fraction(0))

    def degree(self, key):
        best = 0
        for m in self.terms:
            for k, e in m:
                if k == key:
                    best = max(best, e)
        return best

    def coefficient_of(self, key, exp):
        """Polynomial coefficient of key**exp (key removed)."""
        res = {}
        for m, c in self.terms.items():
            d = dict(m)
            if d.get(key, 0) == exp:
                d.pop(key, None)
                res[tuple(sorted(d.items()))] = res.get(tuple(sorted(d.items())), 0) + c
        return DiffPoly(res)

    def partial(self, key):
        """Partial derivative with respect to a single variable key."""
        res = {}
        for m, c in self.terms.items():
            for i, (k, e) in enumerate(m):
                if k == key:
                    if e > 1:
                        nm = m[:i] + ((k, e - 1),) + m[i + 1:]
                    else:
                        nm = m[:i] + m[i + 1:]
                    res[nm] = res.get(nm, 0) + c * e
                    break
        return DiffPoly(res)

    def substitute(self, mapping):
        """Replace variables by polynomials: mapping {key: DiffPoly}."""
        out = DiffPoly()
        for m, c in self.terms.items():
            term = DiffPoly.const(c)
            for k, e in m:
                rep = mapping.get(k)
                fac = rep ** e if rep is not None else DiffPoly.var(k, e)
                term = term * fac
            out = out + term
        return out

    def evaluate(self, values):
        """Numeric evaluation; `values` maps every present variable to a number."""
        total = 0
        for m, c in self.terms.items():
            prod = 1
            for k, e in m:
                prod *= values[k] ** e
            total += c * prod
        return total

    def map_coefficients(self, f):
        return DiffPoly({m: f(c) for m, c in self.terms.items()})

    def __repr__(self):
        return f"DiffPoly({to_text(self)})"


# -- convenience constructors ----------------------------------------------

def jet(func=0, order=0):
    return DiffPoly.var(("j", func, order))


def sym(name):
    return DiffPoly.var(("s", name))


def one():
    return DiffPoly.const(1)


def zero():
    return DiffPoly()


# -- calculus ----------------------------------------------------------------

def total_derivative(p: DiffPoly) -> DiffPoly:
    """Total x-derivative: Leibniz map sending u_f^(k) to u_f^(k+1)."""
    res = DiffPoly()
    acc = {}
    for m, c in p.terms.items():
        for i, (k, e) in enumerate(m):
            if k[0] != "j":
                continue
            newkey = ("j", k[1], k[2] + 1)
            d = dict(m)
            if e > 1:
                d[k] = e - 1
            else:
                del d[k]
            d[newkey] = d.get(newkey, 0) + 1
            nm = tuple(sorted(d.items()))
            s = acc.get(nm, 0) + c * e
            if s:
                acc[nm] = s
            else:
                acc.pop(nm, None)
    res.terms = acc
    return res


def _iterated_derivative(p, n):
    for _ in range(n):
        p = total_derivative(p)
    return p


def variational_derivative(p: DiffPoly, func=0) -> DiffPoly:
    """Euler operator: sum_k (-d/dx)^k (dp/du_f^(k))."""
    res = DiffPoly()
    kmax = p.max_order(func)
    for k in range(kmax + 1):
        dp = p.partial(("j", func, k))
        if dp:
            d = _iterated_derivative(dp, k)
            res = res + (d if k % 2 == 0 else -d)
    return res


def try_antiderivative(p: DiffPoly):
    """Integration by parts: return (q, r) with p = d/dx q + r, r irreducible.

    Normal form: repeatedly eliminate the highest jet variable (lowest
    function index on ties).  r == 0 exactly when p is a total derivative;
    a nonzero constant term always lands in r (x itself is not in the ring).
    """
    q = DiffPoly()
    r = DiffPoly.const(p.constant_term())
    work = p - r
    guard = 40 * (len(p.terms) + 4)
    it = 0
    while work:
        it += 1
        if it > guard:
            r = r + work
            break
        top = None
        for m in work.terms:
            for k, _ in m:
                if k[0] == "j":
                    cand = (k[2], -k[1])
                    if top is None or cand > top:
                        top = cand
        if top is None or top[0] == 0:
            r = r + work
            break
        kord, f = top[0], -top[1]
        v = ("j", f, kord)
        # terms where v appears nonlinearly can never sit in a total
        # derivative whose top variable is v; park them in the remainder
        deg = work.degree(v)
        if deg > 1:
            keep = {}
            for m, c in work.terms.items():
                if dict(m).get(v, 0) > 1:
                    r = r + DiffPoly({m: c})
                else:
                    keep[m] = c
            work = DiffPoly(keep)
            continue
        a = work.partial(v)
        w = ("j", f, kord - 1)
        # expand the coefficient of v in powers of w and integrate each
        # A_m * w^m * w' = d/dx (A_m w^(m+1)/(m+1)) - (dA_m/dx) w^(m+1)/(m+1)
        step = DiffPoly()
        for mexp in range(a.degree(w) + 1):
            bm = a.coefficient_of(w, mexp)
            if bm:
                step = step + bm * DiffPoly.var(w, mexp + 1) * Fraction(1, mexp + 1)
        q = q + step
        work = work - total_derivative(step)
    return q, r


def antiderivative(p: DiffPoly) -> DiffPoly:
    """Return q with total_derivative(q) == p, else raise NotTotalDerivative."""
    q, r = try_antiderivative(p)
    if r:
        raise NotTotalDerivative(q, r)
    return q


# -- printing / parsing -------------------------------------------------------

def _default_name(f):
    return "u" if f == 0 else f"u{f + 1}"


def _jet_text(f, k, names):
    base = names[f] if names and f < len(names) else _default_name(f)
    if k == 0:
        return base
    if k <= 3:
        return base + "_" + "x" * k
    return f"{base}_x{k}"


def _jet_latex(f, k, names):
    base = names[f] if names and f < len(names) else _default_name(f)
    if k == 0:
        return base
    if k <= 3:
        return base + "_{" + "x" * k + "}"
    return base + "^{(%d)}" % k


def _sorted_terms(p):
    # degree-descending, then lowest top derivative first: matches the
    # customary display 30 u^2 u_x + 20 u_x u_xx + 10 u u_xxx + u_xxxxx
    def key(item):
        m, _ = item
        deg = sum(e for _, e in m)
        top = max((k[2] for k, _ in m if k[0] == "j"), default=-1)
        return (-deg, top, m)
    return sorted(p.terms.items(), key=key)


def to_text(p: DiffPoly, names=None) -> str:
    """Stable ASCII form, e.g. '3/8*u^2 + 1/8*u_xx'."""
    if not p.terms:
        return "0"
    chunks = []
    for m, c in _sorted_terms(p):
        factors = []
        for k, e in m:
            if k[0] == "j":
                s = _jet_text(k[1], k[2], names)
            elif k[0] == "f":
                off = k[2]
                arg = "n" if off == 0 else (f"n+{off}" if off > 0 else f"n{off}")
                s = f"{k[1]}({arg})"
            else:
                s = k[1]
            factors.append(s if e == 1 else f"{s}^{e}")
        body = "*".join(factors)
        if not factors:
            piece = str(c)
        elif c == 1:
            piece = body
        elif c == -1:
            piece = "-" + body
        else:
            piece = f"{c}*{body}"
        chunks.append(piece)
    out = chunks[0]
    for piece in chunks[1:]:
        out += " - " + piece[1:] if piece.startswith("-") else " + " + piece
    return out


def to_latex(p: DiffPoly, names=None) -> str:
    if not p.terms:
        return "0"
    chunks = []
    for m, c in _sorted_terms(p):
        factors = []
        for k, e in m:
            s = _jet_latex(k[1], k[2], names) if k[0] == "j" else k[1]
            factors.append(s if e == 1 else s + "^{%d}" % e)
        body = r"\, ".join(factors)
        if c.denominator == 1:
            coeff = "" if abs(c) == 1 else str(abs(c))
        else:
            coeff = r"\frac{%d}{%d}" % (abs(c.numerator), c.denominator)
        sign = "-" if c < 0 else "+"
        piece = (coeff + (r"\, " if coeff and body else "") + body) or str(abs(c))
        chunks.append((sign, piece))
    out = ("-" if chunks[0][0] == "-" else "") + chunks[0][1]
    for sign, piece in chunks[1:]:
        out += f" {sign} {piece}"
    return out


def parse(text: str, names=None) -> DiffPoly:
    """Parse the ASCII form produced by to_text (jets, symbols, +, -, *, ^)."""
    names = list(names) if names else ["u"]
    text = text.replace("**", "^").strip()
    if text == "0":
        return DiffPoly()
    # split into signed terms at top level
    terms = []
    cur, sign = "", 1
    i = 0
    while i < len(text):
        ch = text[i]
        if ch in "+-" and cur.strip():
            terms.append((sign, cur))
            sign = 1 if ch == "+" else -1
            cur = ""
        elif ch in "+-" and not cur.strip():
            sign = sign * (1 if ch == "+" else -1)
        else:
            cur += ch
        i += 1
    terms.append((sign, cur))
    total = DiffPoly()
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
            if not base:
                continue
            if base[0].isdigit():
                poly = poly * (Fraction(base) ** e)
                continue
            key = _name_to_key(base, names)
            poly = poly * DiffPoly.var(key, e)
        total = total + poly
    return total


def _name_to_key(token, names):
    if "_" in token:
        base, _, suffix = token.partition("_")
        if set(suffix) == {"x"} and suffix:
            order = len(suffix)
        elif suffix.startswith("x") and suffix[1:].isdigit():
            order = int(suffix[1:])
        else:
            return ("s", token)
        if base in names:
            return ("j", names.index(base), order)
        return ("s", token)
    if token in names:
        return ("j", names.index(token), 0)
    return ("s", token)


def binomial(n, k):
    """Generalized binomial coefficient for integer n (possibly negative)."""
    if k < 0:
        return Fraction(0)
    if n >= 0:
        return Fraction(comb(n, k)) if k <= n else Fraction(0)
    num = 1
    for i in range(k):
        num *= n - i
    den = 1
    for i in range(1, k + 1):
        den *= i
    return Fraction(num, den)
