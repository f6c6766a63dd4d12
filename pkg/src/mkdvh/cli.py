"""Command-line front end: ``mkdvh <subcommand> ...``.

Exit codes: 0 success, 1 numerical failure, 2 usage error.  Table outputs go
to stdout unless ``--out DIR`` is given, in which case every file is written
there together with a ``manifest.json`` that echoes the resolved parameters.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import io
import json
import os
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__, asymptotics, evolve, genairy, hierarchy, painleve, scattering

EXIT_OK, EXIT_NUMERIC, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class StageFailure(Exception):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage '{stage}' failed: {type(cause).__name__}: {cause}")
        self.stage = stage


# ---------------------------------------------------------------------------
# output helpers


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


class Output:
    """Collects named outputs; writes them to a directory or to stdout."""

    def __init__(self, out_dir: str | None, command: str, params: dict):
        self.dir = Path(out_dir) if out_dir else None
        self.command = command
        self.params = params
        self.files: dict[str, str] = {}

    def add(self, name: str, text: str, primary: bool = False):
        if self.dir is None:
            if primary:
                sys.stdout.write(text)
            return
        self.files[name] = text

    def finish(self, extra: dict | None = None):
        if self.dir is None:
            return
        self.dir.mkdir(parents=True, exist_ok=True)
        for name, text in self.files.items():
            (self.dir / name).write_text(text, encoding="utf-8")
        manifest = {
            "command": self.command,
            "version": __version__,
            "parameters": self.params,
            "outputs": {
                name: hashlib.sha256(text.encode()).hexdigest() for name, text in self.files.items()
            },
        }
        if extra:
            manifest.update(extra)
        (self.dir / "manifest.json").write_text(_dump_json(manifest), encoding="utf-8")


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.replace(",", " ").split()]
    except ValueError as exc:
        raise UsageError(f"cannot parse number list {text!r}") from exc


def _c(z) -> list[float]:
    return [float(np.real(z)), float(np.imag(z))]


# ---------------------------------------------------------------------------
# subcommands


def cmd_hierarchy(args) -> int:
    if not 1 <= args.n <= 4:
        raise UsageError("--n must be between 1 and 4")
    fmt = hierarchy.to_latex if args.latex else hierarchy.to_text
    if args.target == "mkdv":
        print(f"u_t = {fmt(hierarchy.mkdv_rhs(args.n))}")
    elif args.target == "pii":
        rhs = "x q" if args.latex else "x*q"
        print(f"{fmt(hierarchy.pii_lhs(args.n), 'q')} = {rhs}")
    else:
        lax = hierarchy.lax_matrices(args.n)
        for name, coeffs in (("A", lax.a_coeffs), ("B", lax.b_coeffs), ("D", lax.d_coeffs)):
            for k, c in enumerate(coeffs):
                if not c.is_zero():
                    print(f"{name}[(i*lambda)^{k}] = {fmt(c)}")
        if args.check:
            res = hierarchy.zero_curvature_residual(args.n)
            if hierarchy.residual_is_zero(res):
                print("zero-curvature residual: 0")
            else:
                print("zero-curvature residual: nonzero")
                return EXIT_NUMERIC
    return EXIT_OK


def cmd_airy(args) -> int:
    spec = genairy.ContourSpec(n=args.n, nodes_per_ray=args.nodes)
    xs = np.linspace(args.x_min, args.x_max, args.num)
    table = genairy.ai_grid(args.n, xs, args.jmax, spec)
    rows = [(r.x, r.j, r.value, r.imag_leak, r.est_error) for r in table.rows()]
    out = Output(args.out, "airy", vars_clean(args))
    out.add("airy.csv", _csv_text(["x", "j", "value", "imag_leak", "est_error"], rows), True)
    out.finish()
    return EXIT_OK


def cmd_pii(args) -> int:
    params = painleve.ASParams(args.n, args.rho, x_end=args.x_end)
    traj = painleve.as_solve(params)
    header = ["x"] + ["w" + "'" * j for j in range(2 * args.n)]
    rows = [(x, *jet) for x, jet in zip(traj.xs, traj.jets)]
    report = {"n": args.n, "rho": args.rho, "method": traj.method,
              "residual_norm": traj.residual_norm}
    if args.rho != 0:
        report.update(_fit_row(traj, (args.window_lo, args.window_hi)))
    out = Output(args.out, "pii", vars_clean(args))
    out.add("trajectory.csv", _csv_text(header, rows))
    out.add("fit.json", _dump_json(report), True)
    out.finish()
    return EXIT_OK


def _fit_row(traj, window) -> dict:
    fit = painleve.connection_fit(traj, window)
    d_pred, phi_pred = painleve.connection_predict(traj.n, traj.rho)
    return {
        "d_fit": fit.d_fit, "d_pred": d_pred, "phi_fit": fit.phi_fit, "phi_pred": phi_pred,
        "d_rel_error": abs(fit.d_fit - d_pred) / d_pred,
        "phi_error": abs(painleve.wrap_phase(fit.phi_fit - phi_pred)),
        "residual": fit.fit_residual, "window": list(window),
    }


def connection_table(n: int, rhos, window=(-40.0, -20.0)) -> list[dict]:
    rows = []
    for rho in rhos:
        row = {"n": n, "rho": rho}
        if rho == 0:
            row.update(status="skipped", reason="trivial solution")
        elif abs(rho) > painleve.RHO_MAX:
            row.update(status="skipped", reason=f"|rho| > {painleve.RHO_MAX}")
        else:
            try:
                traj = painleve.as_solve(painleve.ASParams(n, rho))
                row.update(status="ok", **_fit_row(traj, window))
            except (ArithmeticError, ValueError) as exc:
                row.update(status="failed", reason=f"{type(exc).__name__}: {exc}")
        rows.append(row)
    return rows


def cmd_connection(args) -> int:
    rows = connection_table(args.n, _floats(args.rho), (args.window_lo, args.window_hi))
    out = Output(args.out, "connection", vars_clean(args))
    out.add("connection.json", _dump_json(rows), True)
    out.finish()
    return EXIT_NUMERIC if any(r["status"] == "failed" for r in rows) else EXIT_OK


def _potential(kind: str, amplitude: float, width: float = 1.0, shift: float = 0.0):
    try:
        return scattering.Potential.named(kind, amplitude, width, shift)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def scatter_outputs(u0, lambda_max: float, fine: float):
    grid = scattering.default_grid(lambda_max, fine=fine)
    data = scattering.reflection(u0, grid)
    rows = [(lam, a.real, a.imag, b.real, b.imag, r.real, r.imag)
            for lam, a, b, r in zip(data.lambdas, data.a_vals, data.b_vals, data.r_vals)]
    table = _csv_text(["lambda", "re_a", "im_a", "re_b", "im_b", "re_r", "im_r"], rows)
    summary = {"potential": u0.describe(), "mass": u0.mass(), **data.summary()}
    return data, table, summary


def cmd_scatter(args) -> int:
    u0 = _potential(args.potential, args.amplitude, args.width, args.shift)
    _, table, summary = scatter_outputs(u0, args.lambda_max, args.fine_spacing)
    out = Output(args.out, "scatter", vars_clean(args))
    out.add("scattering.csv", table)
    out.add("scattering.json", _dump_json(summary), True)
    out.finish()
    return EXIT_OK


def cmd_evolve(args) -> int:
    u0 = _potential(args.potential, args.amplitude, args.width, args.shift)
    times = _floats(args.times)
    cfg = evolve.EvolutionConfig(args.n, args.half_width, args.modes, args.dt, max(times),
                                 times, sponge=args.sponge)
    fields = evolve.evolve(u0, cfg)
    rows = zip(cfg.grid, *[f.values for f in fields])
    diag = {"buffer_energy": [evolve.buffer_energy(f, cfg) for f in fields]}
    if not cfg.sponge:
        diag.update(evolve.conservation([evolve.Field(0.0, u0(cfg.grid))] + fields, cfg))
    out = Output(args.out, "evolve", vars_clean(args))
    out.add("snapshots.csv", _csv_text(["x"] + [f"u(t={f.t:g})" for f in fields], rows), True)
    out.finish({"diagnostics": diag})
    if args.out is None:
        sys.stderr.write(_dump_json(diag))
    return EXIT_OK


# ---------------------------------------------------------------------------
# pipeline


def load_config(path: str) -> configparser.ConfigParser:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    text = _read_config_text(path)
    cp.read_string(text, source=path)
    for section in ("potential", "evolve", "compare"):
        if not cp.has_section(section):
            raise UsageError(f"config {path} lacks a [{section}] section")
    return cp


def _read_config_text(path: str) -> str:
    p = Path(path)
    if p.exists():
        return p.read_text(encoding="utf-8")
    bundled = resources.files("mkdvh") / "configs" / path
    if bundled.is_file():
        return bundled.read_text(encoding="utf-8")
    raise UsageError(f"config file {path!r} not found")


def resolve_pipeline(cp: configparser.ConfigParser) -> dict:
    try:
        pot, ev, cmp_ = cp["potential"], cp["evolve"], cp["compare"]
        sc = cp["scatter"] if cp.has_section("scatter") else {}
        times = _floats(ev.get("times", "50, 100, 200"))
        resolved = {
            "potential": {
                "kind": pot.get("kind", "sech"),
                "amplitude": float(pot.get("amplitude", "0.3")),
                "width": float(pot.get("width", "1")),
                "shift": float(pot.get("shift", "0")),
            },
            "scatter": {
                "lambda_max": float(sc.get("lambda_max", "8")),
                "fine_spacing": float(sc.get("fine_spacing", str(1 / 256))),
            },
            "evolve": {
                "n": int(ev.get("n", "1")),
                "half_width": float(ev.get("half_width", "200")),
                "modes": int(ev.get("modes", "8192")),
                "dt": float(ev.get("dt", "0.02")),
                "times": times,
                "sponge": ev.getboolean("sponge", True) if hasattr(ev, "getboolean") else True,
            },
            "compare": {
                "terms": int(cmp_.get("terms", "1")),
                "window": float(cmp_.get("window", "2.5")),
                "points": int(cmp_.get("points", "201")),
                "extract_window": float(cmp_.get("extract_window", "0") or 0),
            },
        }
    except ValueError as exc:
        raise UsageError(f"bad config value: {exc}") from exc
    return resolved


def _stage(name, fn, *a, **kw):
    try:
        return fn(*a, **kw)
    except (ArithmeticError, ValueError) as exc:
        raise StageFailure(name, exc) from exc


def run_pipeline(conf: dict) -> dict[str, str]:
    """Scatter, evolve and compare; returns ``{file name: contents}``."""
    p, s, e, c = conf["potential"], conf["scatter"], conf["evolve"], conf["compare"]
    n = e["n"]
    u0 = _potential(p["kind"], p["amplitude"], p["width"], p["shift"])
    data, table, summary = _stage("scatter", scatter_outputs, u0, s["lambda_max"], s["fine_spacing"])
    ys = np.linspace(-c["window"], c["window"], c["points"])
    coeffs = _stage("asymptotics", asymptotics.expansion, n, data, ys)
    cfg = _stage("evolve", evolve.EvolutionConfig, n, e["half_width"], e["modes"], e["dt"],
                 max(e["times"]), e["times"], sponge=e["sponge"])
    fields = _stage("evolve", evolve.evolve, u0, cfg)
    report = _stage("compare", asymptotics.compare, fields, coeffs, c["terms"], c["window"], cfg)
    extras = {
        "r0": _c(data.r0), "r0_abs": abs(data.r0), "rho": coeffs.rho,
        "buffer_energy": [evolve.buffer_energy(f, cfg) for f in fields],
        "monotone": all(b < a for a, b in zip(report.sup_errors, report.sup_errors[1:])),
    }
    if c["extract_window"] > 0 and coeffs.u2 is not None:
        yk, est = _stage("compare", asymptotics.extract_second_coefficient, fields, coeffs,
                         c["extract_window"], cfg)
        ref = coeffs.u2[np.abs(coeffs.ys) <= c["extract_window"] + 1e-12]
        scale = float(np.max(np.abs(ref)))
        extras["u2_extraction_rel_error"] = (
            float(np.max(np.abs(est - ref))) / scale if scale else float(np.max(np.abs(est)))
        )
    report.extras.update(extras)
    header, cols = asymptotics.overlay_rows(fields, coeffs, cfg, c["window"])
    files = {
        "scattering.csv": table,
        "scattering.json": _dump_json(summary),
        "report.json": _dump_json(report.as_dict()),
        "overlay.csv": _csv_text(header, cols.tolist()),
        "overlay.gp": _gnuplot(header),
    }
    return files


def _gnuplot(header) -> str:
    lines = ["set datafile separator ','", "set key autotitle columnhead",
             "set xlabel 'y'", "plot \\"]
    plots = [f"  'overlay.csv' using 1:{i + 1} with lines" for i in range(1, len(header))]
    return "\n".join(lines) + "\n" + ", \\\n".join(plots) + "\n"


def cmd_pipeline(args) -> int:
    conf = resolve_pipeline(load_config(args.config))
    files = run_pipeline(conf)
    out = Output(args.out, "pipeline", conf)
    for name, text in files.items():
        out.add(name, text, primary=(name == "report.json"))
    out.finish()
    return EXIT_OK


# ---------------------------------------------------------------------------


def vars_clean(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "out")}


def _add_potential(p):
    p.add_argument("--potential", default="sech", help="sech, gaussian, odd-gaussian or zero")
    p.add_argument("--amplitude", type=float, default=0.5)
    p.add_argument("--width", type=float, default=1.0)
    p.add_argument("--shift", type=float, default=0.0)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mkdvh", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("hierarchy", help="print hierarchy members symbolically")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--target", choices=["mkdv", "pii", "lax"], default="mkdv")
    p.add_argument("--check", action="store_true", help="verify the zero-curvature condition")
    p.add_argument("--latex", action="store_true")
    p.set_defaults(func=cmd_hierarchy)

    p = sub.add_parser("airy", help="tabulate generalized Airy functions")
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--x-min", type=float, default=-10.0)
    p.add_argument("--x-max", type=float, default=5.0)
    p.add_argument("--num", type=int, default=31)
    p.add_argument("--jmax", type=int, default=0)
    p.add_argument("--nodes", type=int, default=384)
    p.add_argument("--out")
    p.set_defaults(func=cmd_airy)

    for name, fn, helptext in (("pii", cmd_pii, "solve one Ablowitz-Segur trajectory"),
                               ("connection", cmd_connection, "check the connection formulas")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--n", type=int, default=1)
        if name == "pii":
            p.add_argument("--rho", type=float, required=True)
            p.add_argument("--x-end", type=float, default=-45.0)
        else:
            p.add_argument("--rho", default="0.3 0.5 0.9", help="list of rho values")
        p.add_argument("--window-lo", type=float, default=-40.0)
        p.add_argument("--window-hi", type=float, default=-20.0)
        p.add_argument("--out")
        p.set_defaults(func=fn)

    p = sub.add_parser("scatter", help="reflection coefficient of an initial datum")
    _add_potential(p)
    p.add_argument("--lambda-max", type=float, default=8.0)
    p.add_argument("--fine-spacing", type=float, default=1 / 256)
    p.add_argument("--out")
    p.set_defaults(func=cmd_scatter)

    p = sub.add_parser("evolve", help="integrate the n-th flow")
    _add_potential(p)
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--half-width", type=float, default=200.0)
    p.add_argument("--modes", type=int, default=2**13)
    p.add_argument("--dt", type=float, default=0.02)
    p.add_argument("--times", default="50 100 200")
    p.add_argument("--sponge", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("pipeline", help="scatter, evolve and compare for one datum")
    p.add_argument("--config", required=True,
                   help="config file path, or the name of a bundled config")
    p.add_argument("--out")
    p.set_defaults(func=cmd_pipeline)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except StageFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ArithmeticError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except BrokenPipeError:
        # the reader (e.g. ``head``) went away; silence the flush at exit
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
