"""Command-line entry point.

Every subcommand reads one JSON input (``--spec``), writes its results and a
``manifest.json`` into ``--out``, and returns

* 0 on success,
* 1 on usage errors,
* 2 when the input is invalid or outside the supported domain,
* 3 when a numerical method fails (diagnostics go to standard error).

Floating-point CSV columns use ``%.16e`` so values round-trip exactly.
"""
from __future__ import annotations

import argparse
import copy
import hashlib
import io
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConvergenceError, EventOrderingError, NumericalError, SpdiffusionError, ValidationError
from .geometry import Disk2D, ModelIII, Sphere3D, geometry_from_dict, spec_from_dict, validate

FLOAT = "%.16e"
SUBCOMMANDS = ("greens", "steady2d", "steady3d", "ripen", "accum", "qs", "kuramoto", "oracle", "compare")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


@dataclass
class Output:
    files: dict = field(default_factory=dict)       # name -> text
    plot: list = field(default_factory=list)        # tidy rows
    resolved: dict = field(default_factory=dict)    # knobs that affected the result


# ------------------------------------------------------------------ helpers


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    return FLOAT % float(v)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for r in rows:
        buf.write(",".join(_fmt(v) for v in r) + "\n")
    return buf.getvalue()


def _tojson(obj):
    if isinstance(obj, dict):
        return {str(k): _tojson(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_tojson(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _tojson(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        if math.isnan(x):
            return "nan"
        return x
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def _json(obj) -> str:
    return json.dumps(_tojson(obj), indent=2, sort_keys=True) + "\n"


def _plot_rows(panel, series, xs, ys, xlabel, ylabel):
    return [(panel, series, x, y, xlabel, ylabel) for x, y in zip(xs, ys) if np.isfinite(y)]


def _default_probes(geometry, n=21):
    lo, hi = geometry.bounding_box()
    axes = [np.linspace(a, b, n) for a, b in zip(lo, hi)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(lo))
    return grid[geometry.boundary_distance(grid) >= 0]


def _probes(cfg, spec, halo=2.0):
    """Probe points from the input (or a default grid) outside every inner region."""
    pts = np.asarray(cfg["probes"], dtype=float) if "probes" in cfg else _default_probes(spec.geometry)
    pts = np.atleast_2d(pts)
    keep = np.ones(len(pts), dtype=bool)
    for c, ell in zip(spec.centers(), spec.ells()):
        keep &= np.linalg.norm(pts - c, axis=-1) >= halo * spec.epsilon * ell
    return pts[keep]


def _axes_names(d):
    return ["x", "y", "z"][:d]


def _kinetics(cfg):
    from .kinetics import make_kinetics
    k = cfg.get("kinetics", {"name": "linear"})
    return make_kinetics(k.get("name", "linear"), **k.get("params", {}))


# -------------------------------------------------------------- subcommands


def cmd_greens(cfg) -> Output:
    """Values at ``pairs`` of points, or on a grid around one ``source``."""
    from .greens import kernel_for
    geom = geometry_from_dict(cfg["geometry"])
    D = float(cfg.get("D", 1.0))
    spg = cfg.get("s_plus_gamma")
    kernel = kernel_for(geom, D, None if spg is None else float(spg))
    d = geom.dim
    if cfg.get("pairs"):
        pairs = [(np.asarray(x, dtype=float), np.asarray(xi, dtype=float)) for x, xi in cfg["pairs"]]
    elif "source" in cfg:
        xi = np.asarray(cfg["source"], dtype=float)
        n = int(cfg.get("grid", 21))
        pts = _default_probes(geom, n)
        pts = pts[(np.linalg.norm(pts - xi, axis=-1) > 0) & (geom.boundary_distance(pts) > 0)]
        pairs = [(p, xi) for p in pts]
    else:
        raise ValidationError([_violation("pairs", "give a list of [x, xi] pairs or a source point")])
    rows = []
    for x, xi in pairs:
        ev = kernel(x, xi)
        rows.append([*x, *xi, ev.value, ev.regular_part, ev.singular_part])
    names = _axes_names(d)
    header = names + [f"xi_{a}" for a in names] + ["value", "regular_part", "singular_part"]
    out = Output(resolved={"D": D, "s_plus_gamma": spg, "tau_terms": kernel.tau_terms, "grid": cfg.get("grid", 21)})
    out.files["greens.csv"] = _csv(header, rows)
    return out


def _violation(kind, msg):
    from .errors import Violation
    return Violation(kind, msg)


def _steady_common(cfg, dim):
    spec = validate(spec_from_dict(cfg))
    if spec.dim != dim:
        raise ValidationError([_violation("geometry", f"steady{dim}d needs a {dim}D geometry")])
    for w in spec.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return spec


def _model3_output(spec, roots, out):
    rec = [{"w": r.w, "A": r.A, "residual": r.residual, "flux_residual": r.flux_residual} for r in roots]
    out.files["coefficients.json"] = _json({"roots": rec, "nu": spec.nu})
    return out


def cmd_steady2d(cfg) -> Output:
    from .asymptotic2d import solve_model3_2d, steady_field_2d
    spec = _steady_common(cfg, 2)
    out = Output(resolved={"nu": spec.nu, "probe_halo": 2.0})
    solver = cfg.get("solver", {})
    if any(isinstance(c.model, ModelIII) for c in spec.compartments):
        roots = solve_model3_2d(spec, tol=solver.get("tol", 1e-10), max_iter=solver.get("max_iter", 60))
        out.resolved.update(tol=solver.get("tol", 1e-10), max_iter=solver.get("max_iter", 60))
        return _model3_output(spec, roots, out)
    f = steady_field_2d(spec)
    c = f.coefficients
    out.files["coefficients.json"] = _json({
        "A": c.A, "u_inf": c.u_inf, "Psi": c.Psi, "c0": c.c0, "nu": c.nu, "shift": c.shift,
        "residual": c.residual, "condition": c.condition, "interaction_matrix": f.matrix.entries,
    })
    pts = _probes(cfg, spec)
    u = f.outer(pts, check=False)
    out.files["field.csv"] = _csv(["x", "y", "u"], np.column_stack([pts, u]))
    r = np.linalg.norm(pts - spec.centers()[0], axis=-1)
    order = np.argsort(r)
    out.plot += _plot_rows("field", "u", r[order], u[order], "distance to compartment 0", "u")
    return out


def cmd_steady3d(cfg) -> Output:
    from .asymptotic3d import solve_model3_3d, steady_field_3d
    spec = _steady_common(cfg, 3)
    out = Output(resolved={"probe_halo": 2.0})
    solver = cfg.get("solver", {})
    if any(isinstance(c.model, ModelIII) for c in spec.compartments):
        roots = solve_model3_3d(spec, tol=solver.get("tol", 1e-10), max_iter=solver.get("max_iter", 60))
        out.resolved.update(tol=solver.get("tol", 1e-10), max_iter=solver.get("max_iter", 60))
        return _model3_output(spec, roots, out)
    f = steady_field_3d(spec)
    c = f.coefficients
    out.files["coefficients.json"] = _json({
        "Lambda": c.Lambda, "chi": c.chi, "u_inf": c.u_inf, "c0": c.c0, "strengths": c.strengths,
        "shift": c.shift, "interaction_matrix": f.matrix.entries,
    })
    pts = _probes(cfg, spec)
    u = f.outer(pts, check=False)
    out.files["field.csv"] = _csv(["x", "y", "z", "u"], np.column_stack([pts, u]))
    r = np.linalg.norm(pts - spec.centers()[0], axis=-1)
    order = np.argsort(r)
    out.plot += _plot_rows("field", "u", r[order], u[order], "distance to compartment 0", "u")
    return out


def cmd_accum(cfg) -> Output:
    from .accumulation import accumulation_time_2d, accumulation_time_3d, ic_from_dict
    spec = validate(spec_from_dict(cfg))
    u0 = ic_from_dict(cfg.get("initial_condition", {"kind": "zero"}))
    acc = cfg.get("accumulation", {})
    tol = float(acc.get("tol", 1e-6))
    conv = acc.get("convention", "auto")
    pts = _probes(cfg, spec)
    fn = accumulation_time_2d if spec.dim == 2 else accumulation_time_3d
    res = fn(spec, u0, pts, convention=conv, tol=tol, h=acc.get("h"))
    names = _axes_names(spec.dim)
    terms = sorted(res.terms)
    rows = [[*p, res.T[i], res.leading[i], res.pipeline[i], res.steady[i], *(res.terms[t][i] for t in terms)]
            for i, p in enumerate(res.x)]
    out = Output(resolved={"tol": tol, "convention": conv, "h": acc.get("h"), "sign": res.sign, "nu": spec.nu})
    out.files["accumulation.csv"] = _csv(names + ["T", "leading", "pipeline", "steady"] + terms, rows)
    out.files["summary.json"] = _json({"pipeline_error": res.pipeline_error, "sign": res.sign,
                                       "max_route_gap": float(np.max(np.abs(res.T - res.pipeline)))})
    r = np.linalg.norm(res.x - spec.centers()[0], axis=-1)
    o = np.argsort(r)
    out.plot += _plot_rows("accumulation", "T", r[o], res.T[o], "distance to compartment 0", "T")
    return out


def cmd_ripen(cfg) -> Output:
    from .ripening import RipeningParams, cluster_fixed_point, evolve
    if "cluster" in cfg:
        spec = validate(spec_from_dict(cfg))
        cl = cfg["cluster"]
        res = cluster_fixed_point(spec, float(cl["u0"]), cl.get("ell0"), float(cl.get("omega", 0.5)),
                                  float(cl.get("tol", 1e-8)), int(cl.get("max_iter", 500)))
        out = Output(resolved={k: cl.get(k) for k in ("u0", "ell0", "omega", "tol", "max_iter")})
        out.files["cluster.json"] = _json({"ell": res.ell, "A": res.A, "residual": res.residual,
                                           "iterations": res.iterations, "history": res.history})
        return out
    pk = {k: cfg[k] for k in ("D", "nu", "phi_a", "phi_b", "ell_c", "dim") if k in cfg}
    p = RipeningParams(**pk)
    ell0 = np.asarray(cfg["ell0"], dtype=float)
    t_end = float(cfg["t_end"])
    integ = cfg.get("integrator", {})
    rtol, atol = float(integ.get("rtol", 1e-12)), float(integ.get("atol", 1e-14))
    ext = float(integ.get("extinction", 1e-4))
    tr = evolve(ell0, p, t_end, rtol=rtol, atol=atol, extinction=ext)
    out = Output(resolved={**vars(p), "rtol": rtol, "atol": atol, "extinction": ext, "t_end": t_end})
    N = len(ell0)
    out.files["trajectory.csv"] = _csv(["tau"] + [f"ell_{j}" for j in range(N)] + ["active_count", "volume"],
                                       np.column_stack([tr.tau, tr.ell, tr.active_count, tr.volume]))
    out.files["events.json"] = _json({"events": [{"t": t, "droplet": j} for t, j in tr.events],
                                      "volume_drift": tr.drift, "final": tr.final})
    for j in range(N):
        out.plot += _plot_rows("radii", f"droplet {j}", tr.tau, tr.ell[:, j], "t", "radius")
    return out


def cmd_qs(cfg) -> Output:
    from .pdeode import QuorumSystem, ReducedState, hopf_sweep, integrate_reduced
    spec = validate(spec_from_dict(cfg))
    q = cfg.get("quorum", {})
    kin = _kinetics(q)
    out = Output(resolved={"kinetics": q.get("kinetics", {"name": "linear"})})
    if "sweep_D0" in q:
        lo, hi, n = q["sweep_D0"]
        grid = np.geomspace(float(lo), float(hi), int(n))
        guess = np.asarray(q["guess"], dtype=float)
        xtol = float(q.get("xtol", 1e-4))
        mr, cross = hopf_sweep(spec, kin, grid, guess, xtol=xtol)
        out.resolved.update(sweep_D0=[lo, hi, n], xtol=xtol)
        out.files["stability.csv"] = _csv(["D0", "max_real"], np.column_stack([grid, mr]))
        out.files["crossings.json"] = _json([{"D0": c.D0, "bracket": c.bracket, "frequency": c.frequency}
                                             for c in cross])
        out.plot += _plot_rows("stability", "max Re", grid, mr, "D0", "max real part")
        return out
    D0 = float(q["D0"])
    sys_ = QuorumSystem(spec, D0, kin)
    init = q.get("initial", {})
    w = np.asarray(init.get("w", np.zeros((spec.N, kin.K))), dtype=float).reshape(spec.N, kin.K)
    t_end = float(q.get("t_end", 100.0))
    n_out = int(q.get("n_out", 1001))
    method = q.get("method", "DOP853")
    rtol, atol = float(q.get("rtol", 1e-9)), float(q.get("atol", 1e-12))
    tr = integrate_reduced(ReducedState(float(init.get("ubar", 0.0)), w), sys_, t_end,
                           np.linspace(0.0, t_end, n_out), rtol=rtol, atol=atol, method=method)
    out.resolved.update(D0=D0, t_end=t_end, n_out=n_out, method=method, rtol=rtol, atol=atol)
    cols = [f"w_{j}_{k}" for j in range(spec.N) for k in range(kin.K)]
    out.files["trajectory.csv"] = _csv(["t", "ubar"] + cols,
                                       np.column_stack([tr.t, tr.ubar, tr.w.reshape(len(tr.t), -1)]))
    out.files["summary.json"] = _json({"amplitude": tr.amplitude(), "nfev": tr.nfev, "advisory": tr.advisory})
    if tr.advisory:
        print(f"advisory: {tr.advisory}", file=sys.stderr)
    out.plot += _plot_rows("quorum", "ubar", tr.t, tr.ubar, "t", "concentration")
    for j in range(spec.N):
        out.plot += _plot_rows("quorum", f"cell {j}", tr.t, tr.w[:, j, 0], "t", "concentration")
    return out


def cmd_kuramoto(cfg) -> Output:
    from .pdeode import KuramotoParams, OscState, frequency_quantiles, integrate_kuramoto, spread_phases
    N = int(cfg.get("N", 100))
    p = KuramotoParams(**{k: float(cfg[k]) for k in ("kappa_hat", "alpha", "gamma0", "omega0") if k in cfg})
    fr = cfg.get("frequencies", {})
    omega = frequency_quantiles(N, fr.get("density", "gaussian"), float(fr.get("width", 1.0)),
                                float(fr.get("mean", 0.0)))
    W = np.asarray(cfg["W"], dtype=float) if "W" in cfg else None
    t_end = float(cfg.get("t_end", 50.0))
    n_out = int(cfg.get("n_out", 501))
    z0 = complex(*cfg.get("z0", [0.0, 0.0]))
    tr = integrate_kuramoto(OscState(spread_phases(N), z0, omega), p, t_end, W, np.linspace(0, t_end, n_out))
    out = Output(resolved={**vars(p), "N": N, "frequencies": fr, "t_end": t_end, "n_out": n_out,
                           "initial_phases": "golden-ratio spread"})
    out.files["order.csv"] = _csv(["t", "order", "z_re", "z_im"], np.column_stack([tr.t, tr.order, tr.z.real, tr.z.imag]))
    out.files["phases.csv"] = _csv(["t"] + [f"theta_{j}" for j in range(N)], np.column_stack([tr.t, tr.theta]))
    out.plot += _plot_rows("order", "|zbar|", tr.t, tr.order, "t", "order parameter")
    return out


def _asymptotic_outer(spec):
    if spec.dim == 2:
        from .asymptotic2d import steady_field_2d
        f = steady_field_2d(spec)
    else:
        from .asymptotic3d import steady_field_3d
        f = steady_field_3d(spec)
    return lambda pts: f.outer(pts, check=False)


def _radial_or_none(spec):
    from .oracle import radial_exact_disk, radial_exact_sphere
    if spec.N == 1 and np.allclose(spec.centers()[0], 0.0):
        if isinstance(spec.geometry, Disk2D):
            return radial_exact_disk(spec)
        if isinstance(spec.geometry, Sphere3D):
            return radial_exact_sphere(spec)
    return None


def cmd_oracle(cfg) -> Output:
    from .oracle import compare, fd_solve_rect
    spec = validate(spec_from_dict(cfg))
    out = Output()
    orc = cfg.get("oracle", {})
    pts = _probes(cfg, spec, halo=0.0)
    radial = _radial_or_none(spec) if orc.get("method", "auto") in ("auto", "radial") else None
    if radial is not None:
        ref = radial.at
        out.resolved["method"] = "radial"
        out.files["radial.json"] = _json({"coefficients": radial.coefficients, "residuals": radial.residuals})
        r = np.linspace(radial.a, radial.R, 201)
        out.files["profile.csv"] = _csv(["r", "u"], np.column_stack([r, radial.u(r)]))
    else:
        h = float(orc.get("h", spec.epsilon * min(spec.ells()) / 5.0))
        g = fd_solve_rect(spec, h)
        ref = g.interpolate
        out.resolved.update(method="fd", h=h)
        out.files["grid.csv"] = _csv(["x", "y", "u"], g.to_rows())
    rep = compare(_asymptotic_outer(spec), ref, pts, spec.centers(), spec.epsilon * spec.ells(), halo=2.0)
    out.files["report.json"] = _json(rep.to_dict())
    out.resolved["probe_halo"] = 2.0
    return out


def cmd_compare(cfg) -> Output:
    """Asymptotic field against the radial oracle over a sequence of ``epsilon``."""
    from .oracle import compare, convergence_order
    base = spec_from_dict(cfg)
    eps = [float(e) for e in cfg.get("epsilons", [0.08, 0.04, 0.02])]
    pts = np.asarray(cfg["probes"], dtype=float) if "probes" in cfg else None
    rows, report = [], []
    for e in eps:
        spec = validate(base.with_epsilon(e))
        radial = _radial_or_none(spec)
        if radial is None:
            raise ValidationError([_violation("compartments", "compare needs one compartment at the centre")])
        P = pts if pts is not None else _default_probes(spec.geometry, 11)
        rep = compare(_asymptotic_outer(spec), radial.at, P, spec.centers(), spec.epsilon * spec.ells(), halo=4.0)
        rows.append([e, rep.max_abs, rep.max_rel, rep.mean_abs])
        report.append({"epsilon": e, **rep.to_dict()})
    rows = np.array(rows)
    order = convergence_order(rows[:, 0], rows[:, 1]) if len(eps) > 1 else float("nan")
    out = Output(resolved={"epsilons": eps, "probe_halo": 4.0})
    out.files["errors.csv"] = _csv(["epsilon", "max_abs", "max_rel", "mean_abs"], rows)
    out.files["report.json"] = _json({"order": order, "runs": report})
    out.plot += _plot_rows("convergence", "max abs error", rows[:, 0], rows[:, 1], "epsilon", "error")
    return out


HANDLERS = {
    "greens": cmd_greens, "steady2d": cmd_steady2d, "steady3d": cmd_steady3d, "ripen": cmd_ripen,
    "accum": cmd_accum, "qs": cmd_qs, "kuramoto": cmd_kuramoto, "oracle": cmd_oracle, "compare": cmd_compare,
}


HELP = {
    "greens": "Green's function values at point pairs",
    "steady2d": "planar steady state (coefficients.json, field.csv)",
    "steady3d": "steady state in the ball (coefficients.json, field.csv)",
    "ripen": "droplet coarsening trajectory or cluster radii",
    "accum": "accumulation time at probe points",
    "qs": "reduced compartment ODEs or a Hopf sweep in D0",
    "kuramoto": "phase oscillators coupled through the bulk",
    "oracle": "exact or finite-difference reference vs the asymptotic field",
    "compare": "asymptotic vs exact field over a sequence of epsilon",
}


# ----------------------------------------------------------------- driver


def _set_path(cfg, key, value):
    parts = key.split(".")
    node = cfg
    for p in parts[:-1]:
        # intermediate nodes must exist; only the last key may be new
        node = node[int(p)] if isinstance(node, list) else node[p]
    last = parts[-1]
    if isinstance(node, list):
        node[int(last)] = value
    else:
        node[last] = value


def _parse_sweep(text):
    try:
        key, rng = text.split("=", 1)
        a, b, n = rng.split(":")
        return key, np.linspace(float(a), float(b), int(n))
    except ValueError:
        raise UsageError(f"--sweep expects key=a:b:n, got {text!r}") from None


def _write(out: Output, out_dir: Path, emit_plot: bool):
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, text in sorted(out.files.items()):
        (out_dir / name).write_text(text)
        written.append(name)
    if emit_plot:
        (out_dir / "plot_data.csv").write_text(_csv(["panel", "series", "x", "y", "xlabel", "ylabel"], out.plot))
        written.append("plot_data.csv")
    return written


def _exit_for(exc) -> int:
    if isinstance(exc, NumericalError):
        return 3
    if isinstance(exc, (SpdiffusionError, KeyError, TypeError, ValueError, json.JSONDecodeError, OSError)):
        return 2
    raise exc


def _diagnose(exc):
    print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
    if isinstance(exc, ConvergenceError) and exc.history:
        print("residual history: " + " ".join(f"{r:.3e}" for r in exc.history), file=sys.stderr)
    if isinstance(exc, EventOrderingError) and exc.state is not None:
        print(f"state: {json.dumps(_tojson(exc.state))}", file=sys.stderr)


def _run_one(cmd, cfg, out_dir, emit_plot):
    """Run one configuration; returns ``(code, written files, resolved knobs)``."""
    try:
        out = HANDLERS[cmd](cfg)
    except Exception as exc:  # mapped to exit codes below
        code = _exit_for(exc)
        _diagnose(exc)
        return code, [], {}
    return 0, _write(out, Path(out_dir), emit_plot), out.resolved


def _job(args):
    return _run_one(*args)


def run(argv=None) -> int:
    parser = _Parser(prog="spdiffusion", description="Steady states, accumulation times and reduced dynamics "
                     "for diffusion with small compartments.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name, help=HELP[name])
        p.add_argument("--spec", required=True, help="JSON input")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--epsilon", type=float, help="override the compartment size ratio")
        p.add_argument("--sweep", help="key=a:b:n, run n evenly spaced values of a (dotted) input key")
        p.add_argument("--jobs", type=int, default=1, help="parallel sweep points")
        p.add_argument("--emit-plot-data", action="store_true", help="write tidy plot_data.csv")
        p.add_argument("--plot", action="store_true", help="also render figures (needs matplotlib)")
    args = parser.parse_args(argv)

    t0 = time.perf_counter()
    out_dir = Path(args.out)
    try:
        raw = Path(args.spec).read_text()
        cfg = json.loads(raw)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read {args.spec}: {exc}", file=sys.stderr)
        return 2
    if args.epsilon is not None:
        cfg["epsilon"] = args.epsilon
    emit = args.emit_plot_data or args.plot
    try:
        sweep = _parse_sweep(args.sweep) if args.sweep else None
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return 1

    manifest = {
        "subcommand": args.cmd,
        "spec": str(args.spec),
        "spec_sha256": hashlib.sha256(raw.encode()).hexdigest(),
        "tool_version": __version__,
        "epsilon_override": args.epsilon,
        "float_format": FLOAT,
    }
    if sweep is None:
        code, written, resolved = _run_one(args.cmd, cfg, out_dir, emit)
        manifest.update(input=cfg, resolved=resolved, outputs=written, exit_code=code)
        plot_dirs = [out_dir] if code == 0 else []
    else:
        key, values = sweep
        jobs = []
        for i, v in enumerate(values):
            c = copy.deepcopy(cfg)
            try:
                _set_path(c, key, float(v))
            except (KeyError, IndexError, ValueError, TypeError):
                print(f"error: sweep key {key!r} not found in input", file=sys.stderr)
                return 2
            jobs.append((args.cmd, c, out_dir / f"point_{i:03d}", emit))
        if args.jobs > 1:
            with ProcessPoolExecutor(max_workers=args.jobs) as ex:
                results = list(ex.map(_job, jobs))
        else:
            results = [_job(j) for j in jobs]
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "sweep.csv").write_text(_csv(["index", key, "exit_code"],
                                                [(i, v, r[0]) for i, (v, r) in enumerate(zip(values, results))]))
        code = max(r[0] for r in results)
        manifest.update(input=cfg, sweep={"key": key, "values": values, "jobs": args.jobs},
                        points=[{"dir": f"point_{i:03d}", "exit_code": r[0], "outputs": r[1], "resolved": r[2]}
                                for i, r in enumerate(results)], exit_code=code)
        plot_dirs = [j[2] for j, r in zip(jobs, results) if r[0] == 0]
    if args.plot and plot_dirs:
        try:
            from .plotting import render
            figs = [f for d in plot_dirs for f in render(Path(d) / "plot_data.csv", d)]
            manifest["figures"] = [str(Path(f).relative_to(out_dir)) for f in figs]
        except RuntimeError as exc:
            print(f"error: {exc}", file=sys.stderr)
            code = max(code, 1)
    manifest["wall_time_s"] = round(time.perf_counter() - t0, 6)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "manifest.json").write_text(_json(manifest))
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
