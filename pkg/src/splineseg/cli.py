"""Command-line entry points: train, segment, eval, synth-corpus, serve.

Exit codes: 0 success, 2 input error, 3 numerical failure, 4 schedule
mismatch.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import corpus, fileio, pipeline
from .engine import rasterize, run_pyramid
from .errors import (
    Divergence,
    EigenFailure,
    NonConvergence,
    ScheduleMismatch,
    SingularSystem,
    SplinesegError,
)
from .metrics import overlap, summarize
from .spline import SplineConfig

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3
EXIT_SCHEDULE = 4

_NUMERIC_ERRORS = (SingularSystem, NonConvergence, Divergence, EigenFailure)


def _shape_files(directory: Path):
    files = sorted(Path(directory).glob("*.json"))
    if not files:
        raise ValueError(f"no shape files found in {directory}")
    return files


def _load_training_set(args):
    files = _shape_files(args.shapes)
    shapes, configs, epsilons = [], [], []
    for f in files:
        shape, config, epsilon = fileio.read_shape(f)
        shapes.append(shape)
        configs.append(config)
        epsilons.append(epsilon)
    alpha = args.alpha if args.alpha is not None else configs[0].alpha
    rho = args.rho if args.rho is not None else configs[0].rho
    epsilon = args.epsilon if args.epsilon is not None else epsilons[0]
    return shapes, SplineConfig(alpha=alpha, rho=rho), epsilon


def run_train(args) -> int:
    shapes, config, epsilon = _load_training_set(args)
    model = pipeline.build_model(shapes, config, epsilon, args.phi)
    fileio.write_model(args.out, model)
    print(f"r={model.samples} m={model.n_points} g={model.g}")
    print("lambda: " + " ".join(f"{v:.6g}" for v in model.all_eigvals))
    if model.all_eigvals.max(initial=0.0) == 0.0:
        print("warning: all-zero eigenvalue spectrum "
              "(training shapes are identical)", file=sys.stderr)
    return EXIT_OK


def run_segment(args) -> int:
    model = fileio.read_model(args.model)
    img = fileio.load_image(args.image, channel=args.channel)
    sched = fileio.read_schedule(args.schedule)
    contour_flat, _ = run_pyramid(img, model, sched)
    meta = model.meta
    masters = pipeline.contour_masters(contour_flat, meta)
    config = SplineConfig(alpha=meta.alpha, rho=meta.rho,
                          samples_per_segment=args.density)
    fileio.write_shape(args.out_contour, masters, config, meta.epsilon)
    h, w = img.shape
    mask = rasterize(masters, (w, h), config)
    fileio.save_mask(args.out_mask, mask)
    if args.manifest:
        fileio.write_manifest(args.manifest, {
            "image": {
                "path": str(args.image),
                "sha256": fileio.file_digest(args.image),
                "width": w, "height": h,
                "channel": args.channel,
            },
            "model": {
                "path": str(args.model),
                "sha256": fileio.file_digest(args.model),
            },
            "schedule": fileio.schedule_payload(sched),
            "spline": {
                "alpha": meta.alpha, "rho": meta.rho,
                "epsilon": meta.epsilon,
                "samples_per_segment": args.density,
            },
            "outputs": {
                "contour": str(args.out_contour),
                "mask": str(args.out_mask),
            },
        })
    if args.truth:
        truth = fileio.load_mask(args.truth)
        fileio.require_same_dims(mask, truth)
        print(f"theta={overlap(mask, truth).theta:.6f}")
    return EXIT_OK


def _eval_pairs(args):
    pred = Path(args.pred)
    truth = Path(args.truth)
    if pred.is_dir() != truth.is_dir():
        raise ValueError("pred and truth must both be files or both dirs")
    if pred.is_dir():
        preds = sorted(p for p in pred.iterdir() if p.is_file())
        truths = sorted(t for t in truth.iterdir() if t.is_file())
        if len(preds) != len(truths):
            raise ValueError(
                f"{len(preds)} predictions vs {len(truths)} truths"
            )
        return list(zip(preds, truths))
    return [(pred, truth)]


def _pred_mask(pred_path: Path, truth_mask, args):
    if pred_path.suffix == ".json":
        shape, config, _ = fileio.read_shape(pred_path)
        if args.dims:
            w, h = args.dims
        else:
            h, w = truth_mask.shape
        return rasterize(shape, (w, h), config)
    return fileio.load_mask(pred_path)


def run_eval(args) -> int:
    pairs = _eval_pairs(args)
    records = []
    for pred_path, truth_path in pairs:
        truth = fileio.load_mask(truth_path)
        pred = _pred_mask(pred_path, truth, args)
        fileio.require_same_dims(pred, truth)
        rep = overlap(pred, truth)
        records.append({
            "pred": str(pred_path), "truth": str(truth_path),
            **rep.as_dict(),
        })
        print(f"{pred_path.name} theta={rep.theta:.6f}")
    agg = summarize(r["theta"] for r in records)
    print(
        f"n={agg['count']} average={agg['mean']:.6f}±{agg['sd']:.6f} "
        f"min={agg['min']:.6f} max={agg['max']:.6f}"
    )
    if args.report:
        fileio.write_manifest(args.report,
                              {"pairs": records, "aggregate": agg})
    return EXIT_OK


def run_synth_corpus(args) -> int:
    meta = corpus.generate(args.out, seed=args.seed, count=args.count,
                           resolution=args.resolution)
    print(f"wrote {meta['count']} samples to {args.out}")
    return EXIT_OK


def run_serve(args) -> int:
    import uvicorn

    from .service import create_app

    data_dir = args.data_dir or os.environ.get("SPLINESEG_DATA_DIR", ".")
    uvicorn.run(create_app(data_dir), host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="splineseg",
        description="Spline-based statistical shape segmentation workbench",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a shape model from shape files")
    p.add_argument("--shapes", required=True, help="directory of shape files")
    p.add_argument("--out", required=True, help="output model file")
    p.add_argument("--phi", type=float, default=0.95,
                   help="variance ratio for mode retention")
    p.add_argument("--epsilon", type=int, default=None,
                   help="slaves per master gap (default: from shape files)")
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--rho", type=float, default=None)
    p.set_defaults(func=run_train)

    p = sub.add_parser("segment", help="segment one image with a model")
    p.add_argument("--model", required=True)
    p.add_argument("--image", required=True)
    p.add_argument("--schedule", required=True)
    p.add_argument("--out-contour", required=True)
    p.add_argument("--out-mask", required=True)
    p.add_argument("--manifest", default=None)
    p.add_argument("--channel", default=None,
                   help="channel for color images (red/green/blue)")
    p.add_argument("--truth", default=None,
                   help="optional truth mask; prints overlap")
    p.add_argument("--density", type=int, default=32,
                   help="curve samples per segment for rasterization")
    p.set_defaults(func=run_segment)

    p = sub.add_parser("eval", help="overlap of predictions vs truth")
    p.add_argument("--pred", required=True, help="mask/contour file or dir")
    p.add_argument("--truth", required=True, help="truth mask file or dir")
    p.add_argument("--report", default=None, help="output report file")
    p.add_argument("--dims", type=int, nargs=2, default=None,
                   metavar=("W", "H"),
                   help="rasterization dims for contour predictions")
    p.set_defaults(func=run_eval)

    p = sub.add_parser("synth-corpus", help="generate a synthetic corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--resolution", type=int,
                   default=corpus.DEFAULT_RESOLUTION)
    p.set_defaults(func=run_synth_corpus)

    p = sub.add_parser("serve", help="run the session HTTP service")
    p.add_argument("--data-dir", default=None,
                   help="models/schedules directory "
                        "(default: $SPLINESEG_DATA_DIR or cwd)")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8077)
    p.set_defaults(func=run_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ScheduleMismatch as exc:
        print(f"schedule mismatch: {exc}", file=sys.stderr)
        return EXIT_SCHEDULE
    except _NUMERIC_ERRORS as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}",
              file=sys.stderr)
        return EXIT_NUMERIC
    except (SplinesegError, OSError, ValueError, KeyError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
