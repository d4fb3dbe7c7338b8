"""Integrable N-body dynamics of tau-function zeros.

Rational / trigonometric / elliptic inverse-square-type systems (the flow of
the second hierarchy time) and the elliptic relativistic system (first Toda
time), with Lax matrices, conserved spectra, RK4 trajectories and the
determinant cross-check against pole positions.

Conventions: p_i = xdot_i / 2 for the inverse-square family; the relativistic
system stores velocities in the momentum slot.
"""

from __future__ import annotations

import cmath
import itertools
import math

import numpy as np

from .weier import (
    WeierstrassLattice,
    phi_kernel,
    phi_kernel_dx,
    wp,
    wp_prime,
    zeta,
)

__all__ = [
    "ParticleState",
    "CollisionDetected",
    "CollisionTooClose",
    "StepUnstable",
    "lax_pair",
    "hamiltonian",
    "acceleration",
    "integrate",
    "spectrum_invariants",
    "char_poly_j",
    "tau_root_crosscheck",
    "locus_velocity_residual",
    "lax_consistency",
]


class CollisionTooClose(Exception):
    pass


class CollisionDetected(Exception):
    def __init__(self, t_lo, t_hi):
        super().__init__(f"collision bracketed in ({t_lo}, {t_hi})")
        self.bracket = (t_lo, t_hi)


class StepUnstable(Exception):
    pass


class ParticleState:
    """Positions/momenta plus the interaction kind.

    kind: 'rational' | ('trig', L) | ('elliptic', lattice) |
          ('rs', eta, lattice).
    """

    __slots__ = ("x", "p", "kind", "t", "lam")

    def __init__(self, x, p, kind="rational", t=0.0, lam=None):
        self.x = np.asarray(x, dtype=complex)
        self.p = np.asarray(p, dtype=complex)
        self.kind = kind
        self.t = t
        self.lam = lam
        self._check_separation()

    @property
    def n(self):
        return len(self.x)

    def min_separation(self):
        n = self.n
        if n < 2:
            return math.inf
        return min(
            abs(self.x[i] - self.x[j]) for i in range(n) for j in range(i + 1, n)
        )

    def _check_separation(self, eps=1e-6):
        scale = max(1.0, float(np.max(np.abs(self.x))) if self.n else 1.0)
        if self.min_separation() < eps * scale:
            raise CollisionTooClose(f"min separation below {eps} * scale")

    def copy(self, x=None, p=None, t=None):
        s = ParticleState.__new__(ParticleState)
        s.x = np.array(self.x if x is None else x, dtype=complex)
        s.p = np.array(self.p if p is None else p, dtype=complex)
        s.kind = self.kind
        s.t = self.t if t is None else t
        s.lam = self.lam
        return s


def _default_lam(lat):
    return (0.31 + 0.17j) * lat.omega


def lax_pair(state: ParticleState, lam=None):
    """(L, M) matrices of the flow; see the respective closed formulas."""
    n = state.n
    x, p = state.x, state.p
    kind = state.kind
    L = np.zeros((n, n), dtype=complex)
    M = np.zeros((n, n), dtype=complex)
    if kind == "rational":
        for i in range(n):
            L[i, i] = -2 * p[i]
            s = 0.0
            for j in range(n):
                if j != i:
                    d = x[i] - x[j]
                    L[i, j] = -2 / d
                    M[i, j] = 2 / d ** 2
                    s += 2 / d ** 2
            M[i, i] = -s
        return L, M
    if isinstance(kind, tuple) and kind[0] == "trig":
        # hyperbolic pair function w(d) = g coth(g d): same template as the
        # rational pair with 1/d -> w(d), verified against the flow
        g = math.pi / kind[1]

        def wfun(dd):
            return g / cmath.tanh(g * dd)

        def wder(dd):
            return -g * g / cmath.sinh(g * dd) ** 2

        for i in range(n):
            L[i, i] = -2 * p[i]
            s = 0.0
            for j in range(n):
                if j != i:
                    dd = x[i] - x[j]
                    L[i, j] = -2 * wfun(dd)
                    M[i, j] = -2 * wder(dd)
                    s += wder(dd)
            M[i, i] = 2 * s
        return L, M
    if isinstance(kind, tuple) and kind[0] == "elliptic":
        lat = kind[1]
        lam = lam if lam is not None else (state.lam or _default_lam(lat))
        xdot = 2 * p
        for i in range(n):
            L[i, i] = -xdot[i]
            acc = 0.0
            for j in range(n):
                if j != i:
                    d = x[i] - x[j]
                    L[i, j] = -2 * phi_kernel(d, lam, lat)
                    M[i, j] = -2 * phi_kernel_dx(d, lam, lat)
                    acc += wp(d, lat)
            M[i, i] = wp(lam, lat) - 2 * acc
        return L, M
    if isinstance(kind, tuple) and kind[0] == "rs":
        eta, lat = kind[1], kind[2]
        lam = lam if lam is not None else (state.lam or _default_lam(lat))
        xdot = state.p  # velocity convention for the relativistic system
        aminus = np.zeros((n, n), dtype=complex)
        a = np.zeros((n, n), dtype=complex)
        for i in range(n):
            for j in range(n):
                aminus[i, j] = phi_kernel(x[i] - x[j] - eta, lam, lat)
                if i != j:
                    a[i, j] = phi_kernel(x[i] - x[j], lam, lat)
        L = np.diag(xdot) @ aminus
        d0 = np.zeros((n, n), dtype=complex)
        dp = np.zeros((n, n), dtype=complex)
        for i in range(n):
            s0 = sp = 0.0
            for k in range(n):
                if k != i:
                    s0 += xdot[k] * zeta(x[i] - x[k], lat)
                    sp += xdot[k] * zeta(x[i] - x[k] + eta, lat)
            d0[i, i] = s0
            dp[i, i] = sp
        # the -zeta(eta) xdot_i diagonal is the k = i term of the
        # zeta(x - x_k + eta) sum in the gauge potential; dropping it breaks
        # Ldot + [L, M] = 0 (see decisions ledger)
        M = (
            np.diag(xdot) @ a
            - np.diag(xdot) @ aminus
            + d0
            - dp
            - zeta(eta, lat) * np.diag(xdot)
        )
        return L, M
    raise ValueError(f"no Lax pair for kind {kind!r}")


def acceleration(state: ParticleState):
    """xddot_i for the configured kind."""
    n = state.n
    x = state.x
    out = np.zeros(n, dtype=complex)
    kind = state.kind
    if kind == "rational":
        for i in range(n):
            for j in range(n):
                if j != i:
                    out[i] += -8 / (x[i] - x[j]) ** 3
        return out
    if isinstance(kind, tuple) and kind[0] == "trig":
        Lper = kind[1]
        g = math.pi / Lper
        for i in range(n):
            for j in range(n):
                if j != i:
                    d = (x[i] - x[j]) * g
                    out[i] += -8 * g ** 3 * cmath.cosh(d) / cmath.sinh(d) ** 3
        return out
    if isinstance(kind, tuple) and kind[0] == "elliptic":
        lat = kind[1]
        for i in range(n):
            for j in range(n):
                if j != i:
                    out[i] += 4 * wp_prime(x[i] - x[j], lat)
        return out
    if isinstance(kind, tuple) and kind[0] == "rs":
        eta, lat = kind[1], kind[2]
        xdot = state.p
        for i in range(n):
            for k in range(n):
                if k != i:
                    d = x[i] - x[k]
                    out[i] += -xdot[i] * xdot[k] * (
                        zeta(d + eta, lat) + zeta(d - eta, lat) - 2 * zeta(d, lat)
                    )
        return out
    raise ValueError(kind)


def hamiltonian(state: ParticleState):
    """H_2 = sum p^2 - sum pair potential (inverse-square family), or the
    total velocity for the relativistic flow."""
    n = state.n
    x, p = state.x, state.p
    kind = state.kind
    if isinstance(kind, tuple) and kind[0] == "rs":
        return np.sum(state.p)
    h = np.sum(p * p)
    for i in range(n):
        for j in range(i + 1, n):
            d = x[i] - x[j]
            if kind == "rational":
                h -= 2 / d ** 2
            elif kind[0] == "trig":
                g = math.pi / kind[1]
                h -= 2 * g ** 2 / cmath.sinh(g * d) ** 2
            elif kind[0] == "elliptic":
                h -= 2 * wp(d, kind[1])
            else:
                raise ValueError(kind)
    return h


def _rhs(state):
    # y = (x, v) with v = xdot; for the inverse-square family v = 2p
    kind = state.kind
    if isinstance(kind, tuple) and kind[0] == "rs":
        v = state.p
    else:
        v = 2 * state.p
    a = acceleration(state)
    return v, a


def _rk4_step(state, dt):
    def deriv(x, v):
        tmp = state.copy(x=x, p=(v if _is_rs(state) else v / 2))
        return _rhs(tmp)

    x0 = state.x
    if _is_rs(state):
        v0 = state.p
    else:
        v0 = 2 * state.p
    k1x, k1v = deriv(x0, v0)
    k2x, k2v = deriv(x0 + dt / 2 * k1x, v0 + dt / 2 * k1v)
    k3x, k3v = deriv(x0 + dt / 2 * k2x, v0 + dt / 2 * k2v)
    k4x, k4v = deriv(x0 + dt * k3x, v0 + dt * k3v)
    x1 = x0 + dt / 6 * (k1x + 2 * k2x + 2 * k3x + k4x)
    v1 = v0 + dt / 6 * (k1v + 2 * k2v + 2 * k3v + k4v)
    return state.copy(x=x1, p=(v1 if _is_rs(state) else v1 / 2), t=state.t + dt)


def _is_rs(state):
    return isinstance(state.kind, tuple) and state.kind[0] == "rs"


def integrate(state: ParticleState, t_end, dt=1e-3, collision_eps=1e-6, err_tol=1e-6):
    """RK4 trajectory with an embedded half-step error estimate per step.

    Returns a list of states (including start and end).  Raises
    CollisionDetected when particles approach within collision_eps * scale,
    StepUnstable when the half-step comparison exceeds err_tol.
    """
    steps = max(1, round(t_end / dt))
    dt = t_end / steps
    traj = [state]
    cur = state
    max_err = 0.0
    for _ in range(steps):
        full = _rk4_step(cur, dt)
        half = _rk4_step(_rk4_step(cur, dt / 2), dt / 2)
        err = float(np.max(np.abs(full.x - half.x))) / 15.0
        max_err = max(max_err, err)
        if err > err_tol:
            raise StepUnstable(f"half-step error estimate {err}")
        nxt = half  # keep the more accurate value
        scale = max(1.0, float(np.max(np.abs(nxt.x))))
        if nxt.min_separation() < collision_eps * scale:
            raise CollisionDetected(cur.t, nxt.t)
        traj.append(nxt)
        cur = nxt
    return traj


def char_poly_j(L):
    """Coefficients J_k of det(2zI - L) = sum_k J_k z^(n-k)."""
    n = L.shape[0]
    base = np.poly(np.asarray(L) / 2.0)
    return [base[k] * 2 ** n for k in range(n + 1)]


def spectrum_invariants(traj, lam=None):
    """Max drift of the characteristic-polynomial coefficients of L along a
    trajectory, relative to max(1, |initial value|)."""
    j0 = None
    worst = 0.0
    for st in traj:
        L, _ = lax_pair(st, lam=lam)
        jk = char_poly_j(L)
        if j0 is None:
            j0 = jk
            continue
        for a, b in zip(j0, jk):
            worst = max(worst, abs(a - b) / max(1.0, abs(a)))
    return worst


def lax_consistency(traj, lam=None, delta=1e-3):
    """max || Ldot - [M, L] || along the trajectory.

    Ldot comes from fourth-order centered differencing of the analytic L
    along short exact substeps (the stored trajectory itself is never
    differenced), so the estimate is integrator-independent."""
    worst = 0.0
    for st in traj[1:-1]:
        samples = {}
        for mult in (-2, -1, 1, 2):
            stepped = _rk4_step(st, mult * delta)
            samples[mult], _ = lax_pair(stepped, lam=lam)
        L, M = lax_pair(st, lam=lam)
        ldot = (
            -samples[2] + 8 * samples[1] - 8 * samples[-1] + samples[-2]
        ) / (12 * delta)
        resid = ldot - (M @ L - L @ M)
        worst = max(worst, float(np.max(np.abs(resid))))
    return worst


def tau_root_crosscheck(state: ParticleState, times_list, dt=1e-3):
    """Roots of the determinant tau versus integrated pole positions.

    For each t2 in times_list the determinant det(xI - X0 + 2 t2 L0) is
    solved for x and matched (best permutation) against RK4 positions.
    Returns the max matching distance.
    """
    from .tau import cm_char_poly_coeffs, tau_cm

    L0, _ = lax_pair(state)
    taux = tau_cm(list(state.x), L0, kmax=2)
    worst = 0.0
    for t2 in times_list:
        coeffs = cm_char_poly_coeffs(taux, {2: t2})
        roots = np.roots(coeffs)
        if t2 >= 0:
            traj = integrate(state, t2, dt=dt) if t2 > 0 else [state]
        else:
            raise ValueError("negative flow times not used here")
        xs = traj[-1].x
        worst = max(worst, _match_distance(roots, xs))
    return worst


def _match_distance(a, b):
    n = len(a)
    best = math.inf
    for perm in itertools.permutations(range(n)):
        d = max(abs(a[i] - b[perm[i]]) for i in range(n))
        best = min(best, d)
    return best


def locus_velocity_residual(x):
    """Force residual sum_j 1/(x_i - x_j)^3 at an equilibrium configuration."""
    x = np.asarray(x, dtype=complex)
    n = len(x)
    worst = 0.0
    for i in range(n):
        f = sum(1 / (x[i] - x[j]) ** 3 for j in range(n) if j != i)
        worst = max(worst, abs(f))
    return worst
