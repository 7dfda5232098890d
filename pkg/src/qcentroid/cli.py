"""Command-line interface.

Every failure prints one ``error: <kind>: <reason>`` line to stderr and exits
non-zero (2 for usage errors, 1 for data/model errors).
"""

from __future__ import annotations

import argparse
import math
import secrets
import sys
from pathlib import Path

import numpy as np

from . import classifier, datasets, encoding, experiments, learning
from .encoding import BlochAngles
from .experiments import UsageError
from .model import Model, ModelError

EXIT_DATA = 1
EXIT_USAGE = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _threshold(text: str) -> float:
    v = float(text)
    if not 0.0 < v <= 1.0:
        raise argparse.ArgumentTypeError(f"must lie in (0, 1], got {v}")
    return v


def _non_negative(text: str) -> float:
    v = float(text)
    if not (math.isfinite(v) and v >= 0):
        raise argparse.ArgumentTypeError(f"must be a non-negative number, got {text!r}")
    return v


def _int_list(text: str) -> list[int]:
    try:
        vals = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not vals or min(vals) < 1:
        raise argparse.ArgumentTypeError("particle counts must be >= 1")
    return vals


def _resolve_seed(args) -> int:
    if getattr(args, "seed", None) is None:
        args.seed = secrets.randbits(32)
        print(f"seed: {args.seed}", file=sys.stderr)
    return args.seed


def _learn_config(args) -> learning.LearnConfig:
    return learning.LearnConfig(D=args.d_threshold, max_fixpoint_iters=args.max_iters)


def _out(text: str, path: str | None) -> None:
    if path:
        Path(path).write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)


# --- commands ---------------------------------------------------------------

def cmd_train(args) -> int:
    ds = datasets.load_csv(args.data)
    model = experiments.train(ds, _learn_config(args), args.angle_range, args.mapping,
                              args.penalty, args.keep_all)
    model.save(args.model)
    lay = model.layout
    counts = model.counts_per_label()
    print(f"sublabels: {len(model.sublabels)} "
          + " ".join(f"{lab}={n}" for lab, n in counts.items()))
    print(f"label qubits: {lay.n_label_qubits}  data qubits: {model.n_data_qubits}")
    print(f"fixpoint iterations: {model.meta.get('fixpoint_iterations')}"
          f"  converged: {str(model.meta.get('converged')).lower()}"
          f"  stalled: {str(model.meta.get('stalled', False)).lower()}")
    return 0


def _parse_point(text: str) -> np.ndarray:
    try:
        return np.array([float(t) for t in text.split(",")], dtype=float)
    except ValueError:
        raise UsageError(f"point must be comma-separated numbers, got {text!r}") from None


def cmd_predict(args) -> int:
    model = Model.load(args.model)
    if (args.point is None) == (args.data is None):
        raise UsageError("give exactly one of --point or --data")
    xs = [_parse_point(args.point)] if args.point is not None else list(datasets.load_csv(args.data).vectors)
    for x in xs:
        if x.shape != (model.encoder.dim,):
            raise UsageError(f"model expects {model.encoder.dim}D points, got {x.size}D")
    seed = _resolve_seed(args) if args.shots is not None else None
    preds = classifier.predict_many(model, xs, args.shots, seed, args.rule)
    lines = ["label,score_0,score_1"] + [f"{p.label},{p.score_0!r},{p.score_1!r}" for p in preds]
    _out("\n".join(lines) + "\n", args.out)
    return 0


def cmd_eval(args) -> int:
    model = Model.load(args.model)
    test = datasets.load_csv(args.data)
    if test.dim != model.encoder.dim:
        raise UsageError(f"model expects {model.encoder.dim}D points, test set is {test.dim}D")
    exclude = datasets.load_csv(args.train) if args.train else None
    seed = _resolve_seed(args) if args.shots is not None else None
    rep = experiments.evaluate(model, test, exclude, args.shots, seed, args.rule)
    for lab in model.labels:
        c, n = rep.per_class[lab]
        rate = f"{100 * c / n:.1f}%" if n else "n/a"
        print(f"{lab}: {c}/{n} {rate}")
    print(f"overall: {rep.correct}/{rep.total} {100 * rep.accuracy:.1f}%")
    if rep.excluded:
        print(f"excluded training points: {rep.excluded}")
    return 0


def cmd_sweep(args) -> int:
    model = Model.load(args.model)
    if model.encoder.dim != 2:
        raise UsageError("sweeps are defined for 2D models only")
    grid = experiments.SweepGrid.parse(args.grid) if args.grid else experiments.default_grid(model)
    rows = experiments.sweep(model, grid, args.rule)
    _out(experiments.sweep_csv(rows), args.out)
    if args.svg:
        Path(args.svg).write_text(experiments.sweep_svg(rows, grid, model.labels), encoding="utf-8")
    return 0


def cmd_werner(args) -> int:
    seed = _resolve_seed(args)
    res = experiments.run_werner(args.train_size, args.test_size, seed, args.shots,
                                 _learn_config(args), args.angle_range, args.keep_all)
    labels = res.model_a.labels
    print(f"errors: {res.errors}/{res.test_size}")
    print(f"sublabels: {res.n_sublabels}  label qubits: {res.n_label_qubits}  total qubits: {res.n_qubits}")
    print("confusion (rows=truth, cols=predicted): " + ",".join(labels))
    for t in labels:
        print(f"{t}: " + ",".join(str(res.confusion[(t, p)]) for p in labels))
    if args.out:
        lines = ["p,phi,label,predicted"] + [f"{p!r},{phi!r},{t},{q}" for p, phi, t, q in res.rows]
        _out("\n".join(lines) + "\n", args.out)
    return 0


def cmd_gen(args) -> int:
    seed = _resolve_seed(args)
    if args.kind == "blobs":
        ds = datasets.gen_blobs(datasets.two_blobs(args.n_per_class, args.separation, args.spread), seed)
    elif args.kind == "boundary":
        ds = datasets.gen_phase_boundary(args.n_per_class, args.margin, seed)
    else:
        ds = datasets.gen_werner_dataset(2 * args.n_per_class, seed, args.shots)
    datasets.save_csv(ds, args.out)
    print(f"wrote {len(ds)} points to {args.out}")
    return 0


def cmd_histdemo(args) -> int:
    seed = _resolve_seed(args)
    rows = experiments.histogram_demo(args.particles, args.state, seed)
    lines = ["particles,rate_H,rate_V"] + [f"{n},{h:.6f},{v:.6f}" for n, h, v in rows]
    _out("\n".join(lines) + "\n", args.out)
    return 0


def cmd_inner(args) -> int:
    a = BlochAngles(args.theta_a, args.phi_a)
    b = BlochAngles(args.theta_b, args.phi_b)
    p = encoding.circuit_inner_product(a, b)
    print(f"circuit P(0) = {p!r}")
    print(f"|<a|b>| = {math.sqrt(max(p, 0.0))!r}")
    return 0


# --- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="qcentroid", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def learn_flags(p):
        p.add_argument("--d-threshold", type=_threshold, default=0.99, help="clustering threshold D")
        p.add_argument("--max-iters", type=_positive_int, default=10, help="merge/split rounds")
        p.add_argument("--angle-range", choices=sorted(encoding.ANGLE_RANGES), default="pi")
        p.add_argument("--keep-all", action="store_true", help="one sublabel per training point")

    rule = dict(choices=["class", "sublabel"], default="sublabel",
                help="compare class joint probabilities or pick the best sublabel")

    p = sub.add_parser("train", help="learn sublabels from a labeled CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--model", required=True, help="output model JSON")
    p.add_argument("--penalty", type=_non_negative, default=0.0,
                   help="wrong-class penalty; 0 keeps uniform label weights")
    p.add_argument("--mapping", choices=["A", "B"], default="A", help="4D correlator mapping")
    learn_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="predict labels for a point or a CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--point")
    p.add_argument("--data")
    p.add_argument("--shots", type=_positive_int)
    p.add_argument("--seed", type=int)
    p.add_argument("--rule", **rule)
    p.add_argument("--out")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eval", help="per-class match rate on a labeled CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--train", help="training CSV whose points are excluded")
    p.add_argument("--shots", type=_positive_int)
    p.add_argument("--seed", type=int)
    p.add_argument("--rule", **rule)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="grid predictions for a 2D model")
    p.add_argument("--model", required=True)
    p.add_argument("--grid", help="x1min:x1max:steps,x2min:x2max:steps (default: model bounds, 100x100)")
    p.add_argument("--out")
    p.add_argument("--svg")
    p.add_argument("--rule", **rule)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("werner", help="Werner-state entanglement experiment")
    p.add_argument("--train-size", type=_positive_int, default=128)
    p.add_argument("--test-size", type=_positive_int, default=400)
    p.add_argument("--seed", type=int)
    p.add_argument("--shots", type=_positive_int, help="coincidence counts per correlator (default exact)")
    p.add_argument("--out", help="polar CSV of (p, phi, label, predicted)")
    learn_flags(p)
    p.set_defaults(func=cmd_werner)

    p = sub.add_parser("gen", help="generate a synthetic dataset CSV")
    p.add_argument("kind", choices=["blobs", "boundary", "werner"])
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--n-per-class", type=_positive_int, default=100)
    p.add_argument("--separation", type=_non_negative, default=8.0, help="blob separation in spreads")
    p.add_argument("--spread", type=_non_negative, default=1.0)
    p.add_argument("--margin", type=_non_negative, default=20.0, help="boundary exclusion distance (data units)")
    p.add_argument("--shots", type=_positive_int)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("histdemo", help="scattering-histogram matching rates")
    p.add_argument("--particles", type=_int_list, default=[1, 10, 100, 1000, 10000, 100000])
    p.add_argument("--state", choices=sorted(datasets.REFERENCE_DISTRIBUTIONS), default="H")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_histdemo)

    p = sub.add_parser("inner", help="circuit inner product of two (theta, phi) pairs")
    for name in ("theta_a", "phi_a", "theta_b", "phi_b"):
        p.add_argument(name, type=float)
    p.set_defaults(func=cmd_inner)
    return ap


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: usage: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (datasets.DatasetError, encoding.EncodingError, learning.LearningError,
            ModelError, classifier.PredictionError, ValueError, OSError) as exc:
        kind = type(exc).__name__
        print(f"error: {kind}: {str(exc).splitlines()[0] if str(exc) else kind}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
