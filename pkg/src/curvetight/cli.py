"""``curvetight`` command line.

Exit codes: 0 success, 1 usage error, 2 invalid input, 3 runtime signal
(density violation, degenerate fit, no crossings observed). Errors are
written to stderr as ``error[<code>]: <message>``.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Sequence, TextIO

import numpy as np

from . import io as cio
from .collection import TrivialCurveError, collection_distance
from .coupling import build_coding, convergence_diagnostic, converging_sequence, oscillating_sequence
from .crossings import find_crossings
from .curve_metric import curve_distance
from .diagnostics import (
    DegenerateFit,
    NoCrossingsObserved,
    fit_power,
    locate_hotspot,
    rate_check,
    regularity_report,
    sample_counts,
    tails_from_counts,
)
from .ensembles import EnsembleSpec, draw
from .geometry import Annulus
from .nets import SKELETON_BOUND, DensityViolation, coarsen_collection, grid_net, net_for_curves, skeletonize

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_RUNTIME = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: {message}")


def _decimal(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a decimal number: {text!r}") from None
    if not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"not a finite number: {text!r}")
    return v


def _decimals(text: str) -> list[float]:
    return [_decimal(t) for t in text.split(",") if t.strip()]


def _ints(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of integers: {text!r}") from None


def _positive(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1: {text!r}")
    return v


def _build_parser() -> _Parser:
    p = _Parser(prog="curvetight", description="Annulus crossings, curve metrics and tightness diagnostics.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def annulus(sp, inner=True):
        sp.add_argument("--center", type=_decimals, required=True, help="comma-separated coordinates")
        if inner:
            sp.add_argument("--inner", type=_decimal, required=True)
        sp.add_argument("--outer", type=_decimal, required=True)

    def sampling(sp):
        sp.add_argument("--spec", required=True, action="append", help="ensemble spec: JSON text or a path")
        sp.add_argument("--samples", type=_positive, default=1000)
        sp.add_argument("--seed", type=int, default=None, help="overrides the spec seed")
        sp.add_argument("--threads", type=_positive, default=1)

    def out(sp):
        sp.add_argument("--out", default=None, help="output path (default: stdout)")

    sp = sub.add_parser("generate", help="draw one sample of an ensemble as a curve file")
    sp.add_argument("--spec", required=True)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--index", type=int, default=0)
    out(sp)

    sp = sub.add_parser("crossings", help="annulus crossings of every curve in a file")
    sp.add_argument("file")
    annulus(sp)
    out(sp)

    for name in ("dist", "cdist"):
        sp = sub.add_parser(name, help="curve distance" if name == "dist" else "collection distance")
        sp.add_argument("a")
        sp.add_argument("b")
        sp.add_argument("--tol", type=_decimal, default=1e-9)
        out(sp)

    sp = sub.add_parser("coarsen", help="skeletonize a collection on a 1/k grid net")
    sp.add_argument("file")
    sp.add_argument("--k", type=_positive, required=True)
    sp.add_argument("--tol", type=_decimal, default=1e-9)
    sp.add_argument("--out", required=True, help="path of the coarsened curve file")

    sp = sub.add_parser("tails", help="crossing-count tails with Wilson intervals")
    annulus(sp)
    sampling(sp)
    sp.add_argument("--threshold-n", type=_ints, default=[1])
    out(sp)

    sp = sub.add_parser("regularity", help="sup over samplers of the tails on an annulus grid")
    sp.add_argument("--center", type=_decimals, required=True)
    sp.add_argument("--grid", required=True, help="semicolon-separated 'r,R' pairs")
    sampling(sp)
    sp.add_argument("--threshold-n", type=_ints, default=[1, 2, 4, 8])
    out(sp)

    for name in ("fit", "rate"):
        sp = sub.add_parser(name, help="power-law fit of tails in r/R" if name == "fit" else "o(r^(d-1)) rate check")
        annulus(sp, inner=False)
        sp.add_argument("--grid", type=_decimals, required=True, help="comma-separated inner radii")
        sampling(sp)
        sp.add_argument("--threshold-n", type=_ints, default=[1])
        out(sp)

    sp = sub.add_parser("hotspot", help="cube-face subdivision hotspot locator")
    annulus(sp)
    sampling(sp)
    sp.add_argument("--depth", type=_positive, default=6)
    out(sp)

    sp = sub.add_parser("couple", help="stabilization diagnostic of the consistent coupling")
    sp.add_argument("--sequence", choices=("converging", "oscillating"), default="converging")
    sp.add_argument("--horizon", type=_positive, default=256)
    sp.add_argument("--depth", type=_positive, default=3)
    sp.add_argument("--samples", type=_positive, default=10000)
    sp.add_argument("--seed", type=int, default=0)
    out(sp)
    return p


def _read(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as e:
        raise cio.CurveFileError("io", f"cannot read {path}: {e.strerror}") from None


def _spec(text: str) -> EnsembleSpec:
    raw = text if text.lstrip().startswith("{") else _read(text).decode("utf-8")
    try:
        return EnsembleSpec.from_json(raw)
    except (json.JSONDecodeError, KeyError, TypeError) as e:
        raise cio.CurveFileError("spec", f"invalid ensemble spec: {e}") from None


def _annulus(args) -> Annulus:
    return Annulus(np.array(args.center), args.inner, args.outer)


def _single(path: str):
    coll = cio.parse_curve_file(_read(path))
    if len(coll.curves) != 1:
        raise cio.CurveFileError("schema", f"{path}: expected exactly one curve, found {len(coll.curves)}")
    return coll.curves[0]


def _check_dim(coll, ann: Annulus):
    if coll.dim is not None and coll.dim != ann.dim:
        raise cio.CurveFileError("schema", f"dimension mismatch: curves are {coll.dim}-d, center is {ann.dim}-d")


def _seed(args, spec: EnsembleSpec) -> int:
    return spec.seed if args.seed is None else args.seed


TAIL_COLS = ("center", "inner", "outer", "N", "p_hat", "samples", "ci_lo", "ci_hi")


def _tail_row(t) -> dict:
    return {"center": t.x, "inner": t.r, "outer": t.R, "N": t.N, "p_hat": t.p_hat, "samples": t.samples,
            "ci_lo": t.ci_lo, "ci_hi": t.ci_hi}


def _ladder_tails(args, spec, radii, Ns):
    """Tails at every inner radius of the ladder, one list per radius."""
    out = []
    for r in radii:
        ann = Annulus(np.array(args.center), r, args.outer)
        counts = sample_counts(spec, ann, args.samples, _seed(args, spec), args.threads)
        out.append(tails_from_counts(counts, ann, Ns))
    return out


def _execute(args) -> tuple[str, str | None]:
    """Run a parsed command; returns (text, destination path or None)."""
    cmd = args.command
    if cmd == "generate":
        spec = _spec(args.spec)
        coll = draw(spec, args.index, args.seed)
        return cio.serialize_collection(coll, dim=None if coll.curves else 2), args.out

    if cmd == "crossings":
        coll = cio.parse_curve_file(_read(args.file))
        ann = _annulus(args)
        _check_dim(coll, ann)
        rows = []
        for c, m, cid in zip(coll.curves, coll.multiplicities, coll.ids):
            rep = find_crossings(c, ann)
            spans = ";".join(f"{iv.a!r}:{iv.b!r}:{iv.direction}" for iv in rep.intervals)
            rows.append({"id": cid, "multiplicity": m, "count": rep.count, "nongeneric": rep.nongeneric,
                         "intervals": spans})
        return cio.write_report("crossings", ("id", "multiplicity", "count", "nongeneric", "intervals"), rows), args.out

    if cmd in ("dist", "cdist"):
        if cmd == "dist":
            a, b = _single(args.a), _single(args.b)
            if a.dim != b.dim:
                raise cio.CurveFileError("schema", f"dimension mismatch: {a.dim}-d vs {b.dim}-d")
            res = curve_distance(a, b, args.tol)
        else:
            ca, cb = cio.parse_curve_file(_read(args.a)), cio.parse_curve_file(_read(args.b))
            if ca.dim is not None and cb.dim is not None and ca.dim != cb.dim:
                raise cio.CurveFileError("schema", f"dimension mismatch: {ca.dim}-d vs {cb.dim}-d")
            res = collection_distance(ca, cb, args.tol)
        row = {"value": res.value, "tolerance": res.tolerance, "method": res.method}
        return cio.write_report(cmd, ("value", "tolerance", "method"), [row]), args.out

    if cmd == "coarsen":
        coll = cio.parse_curve_file(_read(args.file))
        k = args.k
        net = net_for_curves(coll.curves, k) if coll.curves else None
        coarse = coarsen_collection(coll, net, k) if net is not None else coll
        worst = 0.0
        kept = set(coarse.ids)
        for c, cid in zip(coll.curves, coll.ids):
            if cid in kept:
                worst = max(worst, curve_distance(c, skeletonize(c, net, k)[1], args.tol).value)
        Path(args.out).write_text(cio.serialize_collection(coarse, dim=coll.dim or 2))
        row = {"k": k, "curves_in": len(coll), "curves_out": len(coarse), "dropped_diameter": 4.0 / k,
               "bound": SKELETON_BOUND / k, "max_skeleton_distance": worst}
        return cio.write_report("coarsen", tuple(row), [row]), None

    if cmd == "tails":
        spec = _spec(args.spec[0])
        ann = _annulus(args)
        counts = sample_counts(spec, ann, args.samples, _seed(args, spec), args.threads)
        rows = [_tail_row(t) for t in tails_from_counts(counts, ann, sorted(args.threshold_n))]
        return cio.write_report("tails", TAIL_COLS, rows), args.out

    if cmd == "regularity":
        specs = [_spec(s) for s in args.spec]
        grid = []
        for cell in args.grid.split(";"):
            vals = _decimals(cell)
            if len(vals) != 2:
                raise cio.CurveFileError("usage", f"grid cell {cell!r} must be 'r,R'")
            grid.append(Annulus(np.array(args.center), vals[0], vals[1]))
        seed = args.seed if args.seed is not None else specs[0].seed
        cells = regularity_report(specs, grid, args.threshold_n, args.samples, seed, args.threads)
        rows = []
        for cell in cells:
            for t, w in zip(cell.tails, cell.argmax):
                rows.append({**_tail_row(t), "sampler": w, "monotone": cell.monotone, "terminal": cell.terminal})
        return cio.write_report("regularity", TAIL_COLS + ("sampler", "monotone", "terminal"), rows), args.out

    if cmd == "fit":
        spec = _spec(args.spec[0])
        Ns = sorted(args.threshold_n)
        per_r = _ladder_tails(args, spec, args.grid, Ns)
        rows = []
        for i, N in enumerate(Ns):
            f = fit_power([tails[i] for tails in per_r])
            rows.append({"N": f.N, "lambda_N": f.lambda_N, "K_N": f.K_N, "residual": f.residual, "points": f.points})
        return cio.write_report("fit", ("N", "lambda_N", "K_N", "residual", "points"), rows), args.out

    if cmd == "rate":
        spec = _spec(args.spec[0])
        N = max(args.threshold_n)
        per_r = _ladder_tails(args, spec, args.grid, [N])
        q = [t[0].p_hat for t in per_r]
        hi = [t[0].ci_hi for t in per_r]
        v = rate_check(args.grid, q, len(args.center), ci_hi=hi)
        verdict = "pass" if v.passed else "fail"
        rows = [{"r": r, "N": N, "q": qq, "ci_hi": h, "ratio": ratio, "verdict": verdict}
                for r, qq, h, ratio in zip(v.r, q, hi, v.ratios)]
        return cio.write_report("rate", ("r", "N", "q", "ci_hi", "ratio", "verdict"), rows), args.out

    if cmd == "hotspot":
        spec = _spec(args.spec[0])
        rep = locate_hotspot(spec, _annulus(args), args.depth, args.samples, _seed(args, spec), args.threads)
        rows = [{"k": lv.k, "face_axis": lv.face.fixed_axis, "face_value": lv.face.fixed_value,
                 "face_center": lv.face.center(), "eps": lv.eps, "p_hat": lv.p_hat, "children": lv.children,
                 "p0": rep.p0, "p_total": rep.p_total} for lv in rep.levels]
        cols = ("k", "face_axis", "face_value", "face_center", "eps", "p_hat", "children", "p0", "p_total")
        return cio.write_report("hotspot", cols, rows), args.out

    if cmd == "couple":
        seq = converging_sequence if args.sequence == "converging" else oscillating_sequence
        measures = seq(args.horizon)
        nets = [grid_net([-0.5, -0.5], [1.5, 0.5], 2.0 ** -k) for k in range(1, args.depth + 1)]
        _, coding = build_coding(measures, nets)
        rep = convergence_diagnostic(coding, measures, nets, args.samples, args.horizon, args.seed)
        rows = [{"level": k + 1, "horizon": rep.horizon, "draws": rep.draws, "fraction": f,
                 "stable": f >= rep.threshold} for k, f in enumerate(rep.fractions)]
        return cio.write_report("couple", ("level", "horizon", "draws", "fraction", "stable"), rows), args.out

    raise UsageError(f"unknown command {cmd!r}")


def run(argv: Sequence[str] | None = None, stdout: TextIO | None = None, stderr: TextIO | None = None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        stderr.write(f"error[usage]: {e}\n")
        return EXIT_USAGE
    except SystemExit as e:  # --help
        return EXIT_OK if not e.code else EXIT_USAGE
    try:
        text, dest = _execute(args)
    except (DensityViolation, DegenerateFit, NoCrossingsObserved) as e:
        code = {DensityViolation: "density", DegenerateFit: "degenerate-fit"}.get(type(e), "no-crossings")
        stderr.write(f"error[{code}]: {e}\n")
        return EXIT_RUNTIME
    except UsageError as e:
        stderr.write(f"error[usage]: {e}\n")
        return EXIT_USAGE
    except cio.CurveFileError as e:
        stderr.write(f"error[{e.code}]: {e}\n")
        return EXIT_INPUT
    except TrivialCurveError as e:
        stderr.write(f"error[trivial]: {e}\n")
        return EXIT_INPUT
    except ValueError as e:
        stderr.write(f"error[invalid]: {e}\n")
        return EXIT_INPUT
    if dest is None:
        stdout.write(text)
    else:
        Path(dest).write_text(text)
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
