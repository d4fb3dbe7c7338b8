"""Command-line surface: hierarchy printing, grid evaluation, verification
reports, pole-dynamics and Toda trajectories, fermionic tau cross-checks.

Configs are single declarative TOML files; runs are reproducible from
(config, seed).  Exit codes: 0 success, 1 check failure, 2 config error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
import time

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from . import bilinear as bl
from . import fermion as fm
from . import kdv, kp, poledyn, toda
from .tau import (
    SolitonSpec,
    TauExpr,
    TauZero,
    fredholm_params_from_direct,
    rational_tau,
    tau_from_poly,
    tau_soliton,
    trivial_toda_tau,
    u_from_tau,
)

__all__ = ["main", "SolutionSpec", "parse_spec", "str_spec"]


class ConfigError(Exception):
    pass


class SolutionSpec:
    """Declarative description of one solution family."""

    FIELDS = (
        "hierarchy",
        "family",
        "p",
        "q",
        "const",
        "representation",
        "partition",
        "points",
        "conditions",
        "x0",
        "p0",
        "times",
    )

    def __init__(self, **kw):
        self.hierarchy = kw.get("hierarchy", "kp")
        self.family = kw.get("family", "soliton")
        self.p = list(kw.get("p", []))
        self.q = list(kw.get("q", [])) or None
        self.const = list(kw.get("const", [])) or None
        self.representation = kw.get("representation", "expanded")
        self.partition = tuple(kw.get("partition", ())) or None
        self.points = list(kw.get("points", [])) or None
        self.conditions = [list(c) for c in kw.get("conditions", [])] or None
        self.x0 = list(kw.get("x0", [])) or None
        self.p0 = list(kw.get("p0", [])) or None
        self.times = {int(k): float(v) for k, v in kw.get("times", {}).items()}
        self.validate()

    def validate(self):
        if self.hierarchy not in ("kdv", "kp", "toda"):
            raise ConfigError(f"unknown hierarchy {self.hierarchy!r}")
        if self.family not in ("soliton", "schur", "rational", "cm", "trivial", "lump"):
            raise ConfigError(f"unknown family {self.family!r}")
        if self.family == "lump":
            if self.hierarchy != "kp" or len(self.p) != 2:
                raise ConfigError("lump family needs hierarchy kp and p = [re, im]")
        if self.family == "soliton":
            if not self.p:
                raise ConfigError("soliton family needs momenta p")
            if len(set(self.p)) != len(self.p):
                raise ConfigError("momenta must be distinct")
            if self.hierarchy in ("kp", "toda"):
                if not self.q or len(self.q) != len(self.p):
                    raise ConfigError("kp/toda solitons need matching q")
                if set(self.p) & set(self.q):
                    raise ConfigError("p_i must differ from q_j")
        if self.family == "schur" and not self.partition:
            raise ConfigError("schur family needs a partition")
        if self.family == "rational" and not (self.points and self.conditions):
            raise ConfigError("rational family needs points and conditions")
        if self.family == "cm" and not self.x0:
            raise ConfigError("cm family needs initial positions x0")

    def to_dict(self):
        out = {"hierarchy": self.hierarchy, "family": self.family}
        if self.p:
            out["p"] = self.p
        if self.q:
            out["q"] = self.q
        if self.const:
            out["const"] = self.const
        if self.family == "soliton":
            out["representation"] = self.representation
        if self.partition:
            out["partition"] = list(self.partition)
        if self.points:
            out["points"] = self.points
        if self.conditions:
            out["conditions"] = self.conditions
        if self.x0:
            out["x0"] = self.x0
        if self.p0:
            out["p0"] = self.p0
        return out

    def build_tau(self) -> TauExpr:
        if self.family == "soliton":
            spec = SolitonSpec(self.hierarchy, self.p, self.q, self.const)
            return tau_soliton(spec, self.representation)
        if self.family == "schur":
            return tau_from_poly(kp.schur_s(self.partition))
        if self.family == "rational":
            return rational_tau(self.points, self.conditions)
        if self.family == "trivial":
            return trivial_toda_tau() if self.hierarchy == "toda" else TauExpr.constant(1)
        if self.family == "lump":
            from .tau import lump_tau

            return lump_tau(complex(self.p[0], self.p[1]))
        if self.family == "cm":
            st = poledyn.ParticleState(self.x0, self.p0 or [0.0] * len(self.x0))
            L0, _ = poledyn.lax_pair(st)
            from .tau import tau_cm

            return tau_cm(self.x0, L0, kmax=3)
        raise ConfigError(self.family)


def parse_spec(d) -> SolutionSpec:
    if "solution" not in d:
        raise ConfigError("missing [solution] table")
    sol = dict(d["solution"])
    sol["times"] = d.get("times", {})
    return SolutionSpec(**sol)


def str_spec(spec: SolutionSpec) -> str:
    """Canonical TOML emission (round-trips through parse_spec)."""
    lines = ["[solution]"]
    for k, v in spec.to_dict().items():
        lines.append(f"{k} = {_toml_value(v)}")
    if spec.times:
        lines.append("")
        lines.append("[times]")
        for k in sorted(spec.times):
            lines.append(f'"{k}" = {_toml_value(spec.times[k])}')
    return "\n".join(lines) + "\n"


def _toml_value(v):
    if isinstance(v, str):
        return f'"{v}"'
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, float)):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    raise ConfigError(f"cannot emit {v!r}")


def _load_toml(path):
    try:
        with open(path, "rb") as f:
            return tomllib.load(f), hashlib.sha256(open(path, "rb").read()).hexdigest()
    except FileNotFoundError as exc:
        raise ConfigError(str(exc))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"bad TOML: {exc}")


# ---------------------------------------------------------------------------
# subcommands


def cmd_hierarchy(args):
    if args.target == "kdv":
        if args.mn:
            raise ConfigError("--mn applies to the kp target")
        print(kdv.hierarchy_equation(args.order, fmt=args.format))
        return 0
    if args.target == "kp":
        m, n = args.mn or (2, 3)
        if (m, n) != (2, 3):
            for line in kp.flow_system_text(m, n, fmt=args.format):
                print(line)
            return 0
        for line in kp.kp_system_text():
            print(line)
        return 0
    raise ConfigError(f"unknown target {args.target!r}")


def _grid_points(gridcfg, base_times):
    axes = []
    names = []
    for key, rng in gridcfg.items():
        k = int(key.lstrip("t"))
        lo, hi, num = rng
        axes.append(np.linspace(float(lo), float(hi), int(num)))
        names.append(k)
    for combo in np.ndindex(*[len(a) for a in axes]):
        t = dict(base_times)
        for k, ax, i in zip(names, axes, combo):
            t[k] = float(ax[i])
        yield t, [float(ax[i]) for ax, i in zip(axes, combo)]


def cmd_evaluate(args):
    doc, digest = _load_toml(args.spec)
    spec = parse_spec(doc)
    tau = spec.build_tau()
    gridcfg = doc.get("grid")
    if not gridcfg:
        raise ConfigError("missing [grid] table")
    n = doc.get("solution", {}).get("n", 0)
    rows = []
    names = [f"t{key.lstrip('t')}" for key in gridcfg]
    for t, coords in _grid_points(gridcfg, spec.times):
        if spec.family == "lump" and 2 in t:
            # physical transverse coordinate of the complexified equation
            t = {**t, 2: 1j * t[2]}
        tv = tau.evaluate(t, n if spec.hierarchy == "toda" else None)
        try:
            uv = u_from_tau(tau, t, n=n if spec.hierarchy == "toda" else None)
            pole = 0
        except TauZero:
            uv = float("nan")
            pole = 1
        uv = complex(uv)
        rows.append(coords + [complex(tv).real, complex(tv).imag, uv.real, uv.imag, pole])
    out = args.out or "-"
    fh = sys.stdout if out == "-" else open(out, "w", newline="")
    try:
        wr = csv.writer(fh)
        wr.writerow(names + ["tau_re", "tau_im", "u_re", "u_im", "pole"])
        wr.writerows(rows)
    finally:
        if fh is not sys.stdout:
            fh.close()
    return 0


_DEFAULT_TOL = {
    "pde": 1e-9,
    "hirota": 1e-9,
    "hirota-miwa": 1e-9,
    "wronskian": 1e-9,
    "bilinear-residue": 1e-8,
    "t-system": 1e-9,
    "linear-problems": 1e-9,
}


def cmd_verify(args):
    doc, digest = _load_toml(args.spec)
    spec = parse_spec(doc)
    tau = spec.build_tau()
    rng = np.random.default_rng(args.seed)
    checks = args.checks.split(",") if args.checks else ["pde", "hirota-miwa"]
    t0 = time.time()
    reports = []
    failed = False
    momenta = [abs(x) for x in (spec.p + (spec.q or []))] or [1.0]
    scale = max(momenta)

    def probe_times(count, keys=(1, 2, 3)):
        return [
            {k: float(v) for k, v in zip(keys, rng.uniform(-0.4, 0.4, len(keys)))}
            for _ in range(count)
        ]

    def lam_draw():
        while True:
            lam = rng.uniform(2.0, 6.0) * scale + 1j * rng.uniform(0.05, 0.4) * scale
            if all(abs(lam - p) > 0.1 * scale for p in spec.p + (spec.q or [])):
                return lam

    keys = (1, 3) if spec.hierarchy == "kdv" else (1, 2, 3)
    nval = doc.get("solution", {}).get("n", 0) if spec.hierarchy == "toda" else None
    for name in checks:
        tol = _DEFAULT_TOL.get(name, 1e-9)
        if name == "pde":
            eq = {"kdv": "kdv", "kp": "kp", "toda": "toda2d"}[spec.hierarchy]
            work = tau.with_quad(-1) if spec.hierarchy == "toda" and spec.family == "soliton" else tau
            rep = bl.pde_residual(eq, work, probe_times(args.probes, keys), n=nval, tol=tol)
        elif name == "hirota":
            rep = bl.hirota_report(
                bl.hirota_kp_polynomial(), tau, tau, probe_times(args.probes, keys), tol=tol
            )
        elif name == "hirota-miwa":
            rep = bl.ResidualReport("hirota-miwa", seed=args.seed)
            for _ in range(max(1, args.probes // 5)):
                sub = bl.check_hirota_miwa(
                    tau, lam_draw(), lam_draw(), lam_draw(), probe_times(5, keys), n=nval
                )
                rep.probes += sub.probes
                rep.max_abs = max(rep.max_abs, sub.max_abs)
                rep.max_rel = max(rep.max_rel, sub.max_rel)
            if rep.max_rel > tol:
                rep.failures.append("aggregate")
        elif name == "wronskian":
            rep = bl.ResidualReport("wronskian", seed=args.seed)
            for m in (2, 3):
                lams = [lam_draw() for _ in range(m)]
                sub = bl.check_wronskian_identity(tau, lams, probe_times(4, keys), n=nval)
                rep.probes += sub.probes
                rep.max_rel = max(rep.max_rel, sub.max_rel)
                rep.max_abs = max(rep.max_abs, sub.max_abs)
            if rep.max_rel > tol:
                rep.failures.append("aggregate")
        elif name == "bilinear-residue":
            times = probe_times(1, keys)[0]
            tp = dict(times)
            a = 2.0 * scale + 1.1
            for k in keys:
                tp[k] = tp.get(k, 0) - a ** (-k) / k
            val, stable, M, sc = bl.check_bilinear_residue(tau, times, tp, m_start=256)
            rep = bl.ResidualReport("bilinear-residue", seed=args.seed)
            rep.record(abs(val), abs(val) / max(sc, 1e-30))
            if abs(val) > tol * max(sc, 1.0) or not stable:
                rep.failures.append("contour")
        elif name == "t-system":
            lams = tuple(lam_draw().real + 2.0 for _ in range(3))
            probes = [tuple(int(x) for x in rng.integers(0, 2, 3)) for _ in range(6)]
            rep = bl.check_t_system(tau, lams, probes, probe_times(1, keys)[0], n=nval, tol=tol)
        elif name == "linear-problems":
            lams = tuple(sorted(lam_draw().real + 2.0 for _ in range(3)))
            rep, rank, det_rel = bl.check_linear_problems(
                tau, lams, max(lams) + 3.0, probe_times(1, keys)[0], n=nval, tol=tol
            )
            if rank != 2 or det_rel > tol:
                rep.failures.append(f"rank={rank} det_rel={det_rel}")
        else:
            raise ConfigError(f"unknown check {name!r}")
        reports.append(rep)
        if rep.failures or rep.max_rel > tol:
            failed = True

    run = {
        "command": "verify",
        "config_digest": digest,
        "seed": args.seed,
        "checks": [r.as_dict() for r in reports],
        "wall_time": time.time() - t0,
    }
    payload = json.dumps(run, indent=2, default=str)
    if args.out:
        with open(args.out, "w") as f:
            f.write(payload)
    else:
        print(payload)
    return 1 if failed else 0


def cmd_poledyn(args):
    if args.config:
        doc, digest = _load_toml(args.config)
        cfg = doc.get("poledyn", doc)
    else:
        cfg, digest = {}, ""
    kind = args.kind or cfg.get("kind", "rational")
    n = args.n or cfg.get("n", 2)
    x0 = cfg.get("x0")
    p0 = cfg.get("p0")
    if x0 is None:
        rng = np.random.default_rng(args.seed)
        x0 = list(np.linspace(-1.2, 1.2, n) + 1j * rng.uniform(0.05, 0.3, n))
        p0 = list(rng.uniform(-0.3, 0.3, n))
    x0 = [complex(str(v).replace(" ", "")) if isinstance(v, str) else v for v in x0]
    t_end = cfg.get("t_end", 1.0)
    dt = cfg.get("dt", 1e-3)
    tol = cfg.get("tolerance", 1e-8)
    if kind == "rational":
        kindspec = "rational"
    elif kind == "trig":
        kindspec = ("trig", cfg.get("period", 4.0))
    elif kind == "elliptic":
        from .weier import WeierstrassLattice

        lat = WeierstrassLattice(cfg.get("omega", 1.5), complex(0, cfg.get("omega2_im", 1.2)))
        kindspec = ("elliptic", lat)
    elif kind == "rs":
        from .weier import WeierstrassLattice

        lat = WeierstrassLattice(cfg.get("omega", 1.5), complex(0, cfg.get("omega2_im", 1.2)))
        kindspec = ("rs", cfg.get("eta", 0.31), lat)
    else:
        raise ConfigError(f"unknown kind {kind!r}")
    st = poledyn.ParticleState(x0, p0, kind=kindspec)
    traj = poledyn.integrate(st, t_end, dt=dt)
    if args.out:
        with open(args.out, "w", newline="") as f:
            wr = csv.writer(f)
            wr.writerow(["t", "i", "re_x", "im_x", "re_p", "im_p"])
            for s in traj:
                for i in range(s.n):
                    wr.writerow([s.t, i, s.x[i].real, s.x[i].imag, s.p[i].real, s.p[i].imag])
    drift = poledyn.spectrum_invariants(traj[:: max(1, len(traj) // 20)])
    report = {
        "command": "poledyn",
        "kind": kind,
        "n": len(x0),
        "config_digest": digest,
        "seed": args.seed,
        "invariant_drift": drift,
        "tolerance": tol,
    }
    print(json.dumps(report, indent=2, default=str))
    return 0 if drift < tol else 1


def cmd_toda(args):
    doc, digest = _load_toml(args.config) if args.config else ({}, "")
    cfg = doc.get("toda", doc)
    period = cfg.get("period", 6)
    rng = np.random.default_rng(args.seed)
    if "c0" in cfg:
        field = toda.TodaField(cfg["c0"], cfg.get("u0", [0.0] * period))
    else:
        phi = rng.uniform(-0.5, 0.5, period)
        field = toda.TodaField.from_phi(phi, rng.uniform(-0.4, 0.4, period))
    t_end = cfg.get("t_end", 1.0)
    dt = cfg.get("dt", 1e-3)
    traj = toda.integrate_chain(field, t_end, dt=dt)
    if args.out:
        with open(args.out, "w", newline="") as f:
            wr = csv.writer(f)
            wr.writerow(["t", "site", "c", "u0"])
            for t, st in traj[:: max(1, len(traj) // 200)]:
                for i in range(st.period):
                    wr.writerow([t, i, st.c[i], st.u0[i]])
    j0 = [toda.conserved_j(k, field) for k in (1, 2, 3)]
    worst = 0.0
    for _, st in traj[:: max(1, len(traj) // 20)]:
        for k, ref in zip((1, 2, 3), j0):
            worst = max(worst, abs(toda.conserved_j(k, st) - ref) / max(1, abs(ref)))
    tol = cfg.get("tolerance", 1e-8)
    report = {
        "command": "toda",
        "period": period,
        "config_digest": digest,
        "seed": args.seed,
        "j_drift": worst,
        "tolerance": tol,
    }
    print(json.dumps(report, indent=2, default=str))
    return 0 if worst < tol else 1


def cmd_fermion(args):
    doc, digest = _load_toml(args.spec)
    cfg = doc.get("fermion", doc)
    ftype = cfg.get("type")
    w = fm.FockWindow(m=cfg.get("window", 12), K=cfg.get("degree", 6))
    report = {"command": "fermion", "type": ftype, "config_digest": digest}
    failed = False
    if ftype == "schur":
        lam = tuple(cfg["partition"])
        st = fm.basis_ket(lam, 0, w)
        val = fm.j_plus_pair(st, fm.symbolic_times(sum(lam)), 0, w)
        want = kp.schur_s(lam)
        from .tau import _Poly

        got_terms = val.terms if isinstance(val, _Poly) else {(): val}
        want_terms = {}
        for mono, c in want.terms.items():
            key = tuple(sorted(((("t", int(k[1][1:])), e) for k, e in mono), key=repr))
            want_terms[key] = c
        match = got_terms == want_terms
        report["tau_polynomial"] = _poly_text(got_terms)
        report["matches_schur_determinant"] = match
        failed = not match
    elif ftype == "soliton_product":
        pairs = [(d["p"], d["q"], d["b"]) for d in cfg["pairs"]]
        ferm = fm.soliton_vev_tauexpr(pairs, n0=0, w=w)
        spec = SolitonSpec(
            "toda", [p for p, _, _ in pairs], [q for _, q, _ in pairs],
            const=[b for _, _, b in pairs],
        )
        ref = tau_soliton(spec, "direct").with_quad(-1)
        times = {1: 0.11, -1: 0.14, 2: 0.03}
        worst = 0.0
        for n in (0, 1):
            a = ferm.evaluate(times, n)
            b = ref.evaluate(times, n)
            worst = max(worst, abs(a - b) / max(abs(b), 1e-30))
        report["max_rel_deviation_vs_determinant"] = worst
        failed = worst > 1e-10
    elif ftype == "normal_exponent":
        entries = {(e["i"], e["k"]): e["b"] for e in cfg["entries"]}
        st = fm.normal_exponent_empty(entries, fm.vacuum(w, 0), w)
        val = fm.j_plus_pair(st, fm.symbolic_times(cfg.get("degree", 4)), 0, w)
        from .tau import _Poly

        got_terms = val.terms if isinstance(val, _Poly) else {(): val}
        report["tau_polynomial"] = _poly_text(got_terms)
    else:
        raise ConfigError(f"unknown fermion spec type {ftype!r}")
    payload = json.dumps(report, indent=2, default=str)
    if args.out:
        with open(args.out, "w") as f:
            f.write(payload)
    else:
        print(payload)
    return 1 if failed else 0


def _poly_text(terms):
    chunks = []
    for mono, c in sorted(terms.items(), key=repr):
        body = "*".join(
            f"t{k[1]}^{e}" if e > 1 else f"t{k[1]}" for k, e in mono
        )
        chunks.append(f"{c}" + (f"*{body}" if body else ""))
    return " + ".join(chunks) if chunks else "0"


def build_parser():
    ap = argparse.ArgumentParser(prog="solitonlab", description=__doc__)
    sub = ap.add_subparsers(dest="cmd", required=True)

    def add(parser):
        parser.add_argument("--seed", type=int, default=0)
        return parser

    h = sub.add_parser("hierarchy", help="print hierarchy equations")
    add(h)
    h.add_argument("--target", choices=("kdv", "kp"), required=True)
    h.add_argument("--order", type=int, default=3)
    h.add_argument("--mn", type=int, nargs=2, default=None)
    h.add_argument("--format", choices=("text", "latex"), default="text")

    e = sub.add_parser("evaluate", help="evaluate tau and u on a grid")
    add(e)
    e.add_argument("--spec", required=True)
    e.add_argument("--out", default=None)

    v = sub.add_parser("verify", help="run verification checks on a solution")
    add(v)
    v.add_argument("--spec", required=True)
    v.add_argument("--checks", default=None)
    v.add_argument("--probes", type=int, default=25)
    v.add_argument("--out", default=None)

    p = sub.add_parser("poledyn", help="integrate many-body pole dynamics")
    add(p)
    p.add_argument("--config", default=None)
    p.add_argument("--kind", default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--out", default=None)

    t = sub.add_parser("toda", help="integrate the Toda chain reduction")
    add(t)
    t.add_argument("--config", default=None)
    t.add_argument("--out", default=None)

    f = sub.add_parser("fermion", help="fermionic tau cross-checks")
    add(f)
    f.add_argument("--spec", required=True)
    f.add_argument("--out", default=None)
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    handlers = {
        "hierarchy": cmd_hierarchy,
        "evaluate": cmd_evaluate,
        "verify": cmd_verify,
        "poledyn": cmd_poledyn,
        "toda": cmd_toda,
        "fermion": cmd_fermion,
    }
    from .psdo import DepthExhausted
    from .shiftop import WindowExhausted

    try:
        return handlers[args.cmd](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (bl.ContourTooSmall, DepthExhausted, WindowExhausted) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
