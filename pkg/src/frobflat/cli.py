"""Command line driver.

Subcommands:

* ``flatten`` — read a structure description (TOML), run the flattening
  pipeline, write the result bundle, a residual table, and optionally a
  chart heatmap.
* ``verify``  — recheck a result bundle against its inputs through the
  independent finite-difference path.
* ``norms``   — norm estimates for a sampled grid field (binary file) or
  a serialized series (JSON).
* ``bench``   — run the seeded benchmark corpus and write the regularity
  gain table.  Artifacts are byte-identical for a fixed seed.

Exit status: 0 on success, 2 when a precondition fails, 3 when an
iteration diverges.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

import numpy as np

from .errors import DivergenceError, PreconditionError, StageError
from .fieldspec import FieldSpec, parse_fields
from .funcspaces import anorm, gridfield_from_file, holder_estimate, zygmund_estimate
from .pipeline import (
    FlattenConfig,
    flatten,
    regularity_gain_probe,
    result_from_json,
    result_to_dict,
    verify_chart,
)
from .series import series_from_dict


def _load_spec(path, args):
    with open(path, "rb") as fh:
        doc = tomllib.load(fh)
    st = doc.get("structure")
    if st is None:
        raise PreconditionError(f"{path}: missing [structure] table")
    for key in ("r", "n", "fields"):
        if key not in st:
            raise PreconditionError(f"{path}: [structure] needs '{key}'")
    dmax = args.dmax if args.dmax is not None else st.get("dmax", 8)
    spec = FieldSpec(r=int(st["r"]), n=int(st["n"]), dmax=int(dmax))
    fields = parse_fields(list(st["fields"]), spec)
    zeta0 = np.asarray(st.get("zeta0", [0.0] * spec.dim), dtype=float)
    if zeta0.shape != (spec.dim,):
        raise PreconditionError(f"{path}: zeta0 must have length {spec.dim}")
    cfg_table = doc.get("config", {})
    config = FlattenConfig(
        dmax=spec.dmax,
        grid=args.grid if args.grid is not None else cfg_table.get("grid", 32),
        tol=args.tol if args.tol is not None else cfg_table.get("tol", 1e-8),
        seed=args.seed if args.seed is not None else cfg_table.get("seed", 0),
        radius=args.radius if args.radius is not None else cfg_table.get("radius", 1.0),
    )
    return fields, zeta0, config


def _dump_json(obj, path):
    text = json.dumps(obj, sort_keys=True, separators=(",", ":"))
    Path(path).write_text(text + "\n")


def _write_residual_csv(report, path, extra=None):
    rows = [
        ("span_residual", report.span_residual),
        ("commutator_residual", report.commutator_residual),
        ("relation_residual", report.relation_residual),
        ("annihilation_residual", report.annihilation_residual),
        ("det_min", report.det_min),
        ("det_max", report.det_max),
        ("pullback_norm_ratio", report.pullback_norm_ratio),
    ]
    for k, v in sorted(report.norm_table.items()):
        rows.append((k, v))
    for k, v in (extra or []):
        rows.append((k, v))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["quantity", "value"])
        for name, value in rows:
            writer.writerow([name, repr(float(value))])


def _chart_heatmap(result, path):
    import matplotlib

    matplotlib.use("Agg")
    matplotlib.rcParams["svg.hashsalt"] = "frobflat"
    import matplotlib.pyplot as plt

    d = result.r + 2 * result.n
    phi = result.chart.phi
    m = 64
    ax1 = np.linspace(-0.5, 0.5, m)
    if d == 1:
        fig, ax = plt.subplots(figsize=(5, 3))
        vals = np.array([phi.evaluate(np.array([x]))[0].real for x in ax1])
        ax.plot(ax1, vals)
        ax.set_xlabel("x")
        ax.set_ylabel("phi(x)")
    else:
        X, Y = np.meshgrid(ax1, ax1, indexing="ij")
        dets = np.zeros_like(X)
        J = phi.jacobian()
        for i in range(m):
            for j in range(m):
                p = np.zeros(d)
                p[0], p[1] = X[i, j], Y[i, j]
                mat = np.array(
                    [[J[a][b].evaluate(p) for b in range(d)] for a in range(d)]
                )
                dets[i, j] = abs(np.linalg.det(mat))
        fig, ax = plt.subplots(figsize=(5, 4))
        im = ax.pcolormesh(X, Y, dets, shading="auto")
        fig.colorbar(im, ax=ax, label="|det d(phi)|")
        ax.set_xlabel("coord 1")
        ax.set_ylabel("coord 2")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


# ----------------------------------------------------------------------
# subcommands
# ----------------------------------------------------------------------

def cmd_flatten(args):
    fields, zeta0, config = _load_spec(args.spec, args)
    result = flatten(fields, zeta0, config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _dump_json(result_to_dict(result), out / "result.json")
    _write_residual_csv(
        result.report,
        out / "residuals.csv",
        extra=[("A_norm", result.A_norm), ("gamma", result.chart.gamma)],
    )
    if args.plot:
        _chart_heatmap(result, out / "chart.svg")
    print(
        f"flatten: gamma={result.chart.gamma} K2={result.chart.K2} "
        f"A_norm={result.A_norm:.6g} span={result.report.span_residual:.3g} "
        f"-> {out / 'result.json'}"
    )
    return 0


def cmd_verify(args):
    fields, zeta0, config = _load_spec(args.spec, args)
    result = result_from_json(Path(args.result).read_text())
    report = verify_chart(fields, result, zeta0=zeta0)
    ok = (
        report.span_residual < args.tol_span
        and report.relation_residual < args.tol_span
        and result.A_norm <= 0.25
    )
    payload = dict(report.to_dict())
    payload["A_norm"] = result.A_norm
    payload["passed"] = bool(ok)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        _dump_json(payload, out / "verify.json")
        _write_residual_csv(report, out / "verify_residuals.csv")
    status = "PASS" if ok else "FAIL"
    print(
        f"verify [{status}]: span={report.span_residual:.3g} "
        f"relation={report.relation_residual:.3g} "
        f"commutator={report.commutator_residual:.3g} "
        f"det in [{report.det_min:.3g}, {report.det_max:.3g}]"
    )
    if not ok:
        raise PreconditionError("verification residuals exceed tolerance")
    return 0


def cmd_norms(args):
    rows = []
    if args.grid_file:
        gf = gridfield_from_file(args.grid_file)
        if args.s is not None:
            est = zygmund_estimate(gf, args.s, seed=args.seed or 0)
            rows.append(est)
        if args.holder:
            m, a = args.holder
            rows.append(holder_estimate(gf, int(m), float(a), seed=args.seed or 0))
        if not rows:
            raise PreconditionError("norms: give --s and/or --holder for a grid field")
    elif args.series:
        f = series_from_dict(json.loads(Path(args.series).read_text()))
        rows.append(anorm(f, args.radius if args.radius is not None else 1.0))
    else:
        raise PreconditionError("norms: give --grid-file or --series")
    payload = [
        {
            "value": est.value,
            "space": est.space,
            "method": est.method,
            "resolution": est.resolution,
            "lower_bound": est.lower_bound,
        }
        for est in rows
    ]
    text = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)
    return 0


def _bench_family(seed):
    """Deterministic benchmark corpus: Beltrami-coefficient sweeps."""
    family = []
    for eps in (0.02, 0.04, 0.06, 0.08, 0.1):
        spec = FieldSpec(r=0, n=1, dmax=8)
        fields = parse_fields([f"dzb1 + {eps!r}*zb1*dz1"], spec)
        family.append((f"beltrami-eps={eps!r}", fields))
    for scale in (1.0, 0.5, 0.25):
        eps = 0.1 * scale
        spec = FieldSpec(r=1, n=1, dmax=8)
        fields = parse_fields(["dt1", f"dzb1 + {eps!r}*zb1*dz1"], spec)
        family.append((f"mixed-scale={scale!r}", fields))
    return family


def cmd_bench(args):
    seed = args.seed if args.seed is not None else 0
    config = FlattenConfig(seed=seed)
    rows = regularity_gain_probe(_bench_family(seed), config)
    ratios = [row["ratio"] for row in rows]
    med = float(np.median(ratios))
    payload = {
        "seed": seed,
        "median_ratio": med,
        "max_over_median": max(r / med for r in ratios),
        "rows": rows,
    }
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _dump_json(payload, out / "bench.json")
    with open(out / "regularity.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["name", "gamma", "input_zygmund_s0p1", "chart_zygmund_s0p2", "ratio"]
        )
        for row in rows:
            writer.writerow(
                [
                    row["name"],
                    repr(float(row["gamma"])),
                    repr(float(row["input_zygmund_s0p1"])),
                    repr(float(row["chart_zygmund_s0p2"])),
                    repr(float(row["ratio"])),
                ]
            )
    print(
        f"bench: {len(rows)} cases, median gain ratio {med:.6g}, "
        f"max/median {payload['max_over_median']:.6g} -> {out}"
    )
    return 0


# ----------------------------------------------------------------------
# argument parsing
# ----------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(
        prog="frobflat",
        description="Numerical flattening of elliptic structures on a ball.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--dmax", type=int, default=None, help="series degree cap")
        sp.add_argument("--grid", type=int, default=None, help="samples per axis")
        sp.add_argument("--tol", type=float, default=None, help="solver tolerance")
        sp.add_argument("--seed", type=int, default=None, help="probe/bench seed")
        sp.add_argument("--radius", type=float, default=None, help="input ball radius")

    sp = sub.add_parser("flatten", help="construct the flattening chart")
    sp.add_argument("--spec", required=True, help="structure description (TOML)")
    sp.add_argument("--out", required=True, help="output directory")
    sp.add_argument("--plot", action="store_true", help="write a chart heatmap (SVG)")
    common(sp)
    sp.set_defaults(func=cmd_flatten)

    sp = sub.add_parser("verify", help="independently recheck a result bundle")
    sp.add_argument("--spec", required=True, help="structure description (TOML)")
    sp.add_argument("--result", required=True, help="result bundle (JSON)")
    sp.add_argument("--out", default=None, help="output directory for reports")
    sp.add_argument(
        "--tol-span", type=float, default=1e-6, help="pass threshold for residuals"
    )
    common(sp)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("norms", help="norm estimates for sampled or series data")
    sp.add_argument("--grid-file", default=None, help="binary grid-field file")
    sp.add_argument("--series", default=None, help="serialized series (JSON)")
    sp.add_argument("--s", type=float, default=None, help="Zygmund smoothness index")
    sp.add_argument(
        "--holder", nargs=2, metavar=("M", "A"), default=None,
        help="Holder C^{m,a} estimate",
    )
    sp.add_argument("--out", default=None, help="output file (JSON)")
    common(sp)
    sp.set_defaults(func=cmd_norms)

    sp = sub.add_parser("bench", help="run the seeded benchmark corpus")
    sp.add_argument("--out", required=True, help="output directory")
    common(sp)
    sp.set_defaults(func=cmd_bench)

    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3 if isinstance(exc.cause, DivergenceError) else 2
    except PreconditionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
