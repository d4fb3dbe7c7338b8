"""Weierstrass elliptic functions via Jacobi theta series.

sigma, zeta, wp, wp' and the two-point kernel Phi(x, lam) for a lattice with
half-periods (omega, omega'), Im(omega'/omega) > 0.  Fast route: theta_1
series in the nome q = exp(i pi omega'/omega), truncated when terms fall
below 1e-16 of the partial sum.  Slow route (test oracle): raw lattice sums.
"""

from __future__ import annotations

import cmath
import math

__all__ = [
    "WeierstrassLattice",
    "LatticePoint",
    "sigma",
    "zeta",
    "wp",
    "wp_prime",
    "phi_kernel",
    "phi_kernel_dx",
    "weierstrass",
    "sigma_lattice_sum",
    "zeta_lattice_sum",
    "wp_lattice_sum",
]


class LatticePoint(Exception):
    """Argument hit a lattice point where the function has a pole/zero."""


class WeierstrassLattice:
    """Half-periods and the precomputed nome."""

    __slots__ = ("omega", "omega2", "q", "eta1")

    def __init__(self, omega, omega2):
        self.omega = complex(omega)
        self.omega2 = complex(omega2)
        ratio = self.omega2 / self.omega
        if ratio.imag <= 0:
            raise ValueError("Im(omega'/omega) must be positive")
        self.q = cmath.exp(1j * cmath.pi * ratio)
        # eta1 = zeta(omega) from the theta-series expansion at 0
        d1, d3 = _theta1_dv(0.0, self.q, orders=(1, 3))
        self.eta1 = -(cmath.pi ** 2 / (12 * self.omega)) * d3 / d1

    def reduce(self, x):
        """Shift x by full periods into a cell around the origin (for series
        convergence); returns (x_reduced, m, m') with x = x_r + 2m w + 2m' w'."""
        x = complex(x)
        # solve x = a*(2w) + b*(2w') in real coordinates
        wr, wi = self.omega.real, self.omega.imag
        vr, vi = self.omega2.real, self.omega2.imag
        det = 4 * (wr * vi - wi * vr)
        a = (x.real * 2 * vi - x.imag * 2 * vr) / det
        b = (x.imag * 2 * wr - x.real * 2 * wi) / det
        m = round(a)
        mp = round(b)
        return x - 2 * m * self.omega - 2 * mp * self.omega2, m, mp


def _theta1_dv(v, q, orders=(0,)):
    """theta_1 and v-derivatives at v: returns values for requested orders."""
    out = {o: 0j for o in orders}
    n = 0
    small = 0
    while n < 80:
        k = 2 * n + 1
        base = (-1) ** n * q ** (n + 0.5) ** 2
        s, c = cmath.sin(k * v), cmath.cos(k * v)
        mag = 0.0
        for o in orders:
            if o % 2 == 0:
                term = base * (k ** o) * s * (-1) ** (o // 2)
            else:
                term = base * (k ** o) * c * (-1) ** ((o - 1) // 2)
            out[o] += 2 * term
            mag = max(mag, abs(term))
        ref = max(abs(out[o]) for o in orders)
        if mag < 1e-17 * max(ref, 1e-30):
            small += 1
            if small >= 3:
                break
        else:
            small = 0
        n += 1
    return [out[o] for o in orders]


def _vmap(lat, x):
    return cmath.pi * x / (2 * lat.omega)


def sigma(x, lat: WeierstrassLattice):
    """Weierstrass sigma; vanishes simply on the lattice."""
    xr, m, mp = lat.reduce(x)
    v = _vmap(lat, xr)
    (t1,) = _theta1_dv(v, lat.q, orders=(0,))
    (td1_0,) = _theta1_dv(0.0, lat.q, orders=(1,))
    val = (2 * lat.omega / cmath.pi) * cmath.exp(
        lat.eta1 * xr * xr / (2 * lat.omega)
    ) * t1 / td1_0
    if m == 0 and mp == 0:
        return val
    # quasi-periodicity: sigma(x + 2w) = -sigma(x) exp(2 eta1 (x + w));
    # eta2 = zeta(omega') from the Legendre relation eta1 w' - eta2 w = i pi/2
    eta2 = (lat.eta1 * lat.omega2 - 1j * cmath.pi / 2) / lat.omega
    sgn = (-1) ** (m + mp + m * mp)
    expo = (2 * m * lat.eta1 + 2 * mp * eta2) * (xr + m * lat.omega + mp * lat.omega2)
    return sgn * cmath.exp(expo) * val


def zeta(x, lat: WeierstrassLattice):
    """Weierstrass zeta = sigma'/sigma."""
    xr, m, mp = lat.reduce(x)
    if abs(xr) < 1e-14:
        raise LatticePoint(x)
    v = _vmap(lat, xr)
    t1, td1 = _theta1_dv(v, lat.q, orders=(0, 1))
    eta2 = lat.eta1 * lat.omega2 / lat.omega - 1j * cmath.pi / (2 * lat.omega)
    return (
        lat.eta1 * xr / lat.omega
        + (cmath.pi / (2 * lat.omega)) * td1 / t1
        + 2 * m * lat.eta1
        + 2 * mp * eta2
    )


def wp(x, lat: WeierstrassLattice):
    """Weierstrass P function."""
    xr, _, _ = lat.reduce(x)
    if abs(xr) < 1e-14:
        raise LatticePoint(x)
    v = _vmap(lat, xr)
    t1, td1, td2 = _theta1_dv(v, lat.q, orders=(0, 1, 2))
    pref = (cmath.pi / (2 * lat.omega)) ** 2
    return -lat.eta1 / lat.omega - pref * (td2 / t1 - (td1 / t1) ** 2)


def wp_prime(x, lat: WeierstrassLattice):
    """d/dx of the P function."""
    xr, _, _ = lat.reduce(x)
    if abs(xr) < 1e-14:
        raise LatticePoint(x)
    v = _vmap(lat, xr)
    t1, td1, td2, td3 = _theta1_dv(v, lat.q, orders=(0, 1, 2, 3))
    g = td1 / t1
    pref = (cmath.pi / (2 * lat.omega)) ** 3
    return -pref * (td3 / t1 - 3 * td2 * td1 / t1 ** 2 + 2 * g ** 3)


def phi_kernel(x, lam, lat: WeierstrassLattice):
    """Phi(x, lam) = sigma(x + lam) e^{-zeta(lam) x} / (sigma(lam) sigma(x)):
    the two-point kernel with a simple pole at x = 0."""
    return (
        sigma(x + lam, lat)
        / (sigma(lam, lat) * sigma(x, lat))
        * cmath.exp(-zeta(lam, lat) * x)
    )


def phi_kernel_dx(x, lam, lat: WeierstrassLattice):
    """d/dx Phi(x, lam) = Phi * (zeta(x+lam) - zeta(x) - zeta(lam))."""
    return phi_kernel(x, lam, lat) * (
        zeta(x + lam, lat) - zeta(x, lat) - zeta(lam, lat)
    )


def weierstrass(kind, x, lat: WeierstrassLattice, lam=None):
    """Dispatch by kind: 'p' | 'zeta' | 'sigma' | 'phi' (phi needs lam)."""
    if kind == "p":
        return wp(x, lat)
    if kind == "zeta":
        return zeta(x, lat)
    if kind == "sigma":
        return sigma(x, lat)
    if kind == "phi":
        if lam is None:
            raise ValueError("phi needs the second argument lam")
        return phi_kernel(x, lam, lat)
    raise ValueError(kind)


# ---------------------------------------------------------------------------
# slow lattice-sum oracles


def _lattice_points(lat, M):
    for m in range(-M, M + 1):
        for mp in range(-M, M + 1):
            if m == 0 and mp == 0:
                continue
            yield 2 * m * lat.omega + 2 * mp * lat.omega2


def sigma_lattice_sum(x, lat, M=40):
    x = complex(x)
    prod = x
    for s in _lattice_points(lat, M):
        prod *= (1 - x / s) * cmath.exp(x / s + x * x / (2 * s * s))
    return prod


def zeta_lattice_sum(x, lat, M=60):
    x = complex(x)
    tot = 1 / x
    for s in _lattice_points(lat, M):
        tot += 1 / (x - s) + 1 / s + x / (s * s)
    return tot


def wp_lattice_sum(x, lat, M=60):
    x = complex(x)
    tot = 1 / (x * x)
    for s in _lattice_points(lat, M):
        tot += 1 / (x - s) ** 2 - 1 / (s * s)
    return tot
