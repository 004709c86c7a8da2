"""Batch front-end: dataset generation, classical reconstruction, reports.

Exit codes: 0 success, 2 config error, 3 data error, 4 numerical degeneracy.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .config import load_config
from .dataset import (
    Dataset,
    build_dataset,
    load_dataset,
    prd_data_offset,
    read_prd,
    write_prd,
)
from .errors import (
    ConfigInvalid,
    DataError,
    DegenerateImage,
    NegativeIntensity,
    SamplingViolation,
    ToolkitError,
)
from .report import aggregate, plot_report, score_arrays, write_report
from .retrieval import gs_reconstruct
from .sensor import counts_to_photons


def _cmd_dataset(args) -> int:
    from .dataset import DatasetContext

    cfg = load_config(args.config)
    for level in cfg.noise_levels:
        ctx = DatasetContext.create(cfg.geometry, cfg.beam, cfg.cal, cfg.sensor,
                                    level, cfg.object_class, cfg.seed,
                                    pure_phase=cfg.pure_phase)
        out = cfg.dataset_dir(level)
        images = None
        if cfg.object_class not in ("ic-layout", "natural"):
            from .objects import load_object_dir

            total = sum(cfg.splits.values())
            images = load_object_dir(cfg.object_class, cfg.geometry.object_pixels)[:total]
        ds = build_dataset(out, ctx, cfg.splits, cfg.name, threads=args.threads,
                           force=args.force, object_images=images)
        print(f"wrote {out}: noise level {level}, "
              f"{sum(cfg.splits.values())} examples")
        for rec in ds.manifest["arrays"]:
            print(f"  {rec['role']}: sha256 {rec['sha256'][:16]}...")
    return 0


def _reconstruct_one(method, counts, ctx, cfg):
    photons = counts_to_photons(counts, ctx.sensor)
    if method == "approximant":
        from .retrieval import gs_approximant

        approx = gs_approximant(photons, ctx.incident_obj, ctx.geometry)
        return approx.phase.astype(np.float32), None
    result = gs_reconstruct(photons, ctx.incident_obj, ctx.geometry,
                            max_iter=cfg.max_iter, tol=cfg.tol)
    log = {
        "iterations": result.iterations_run,
        "converged": result.converged,
        "degenerate": result.degenerate,
        "residuals": [float(r) for r in result.residual_history],
    }
    return result.phase.astype(np.float32), log


def _cmd_reconstruct(args) -> int:
    cfg = load_config(args.config)
    method = args.method or cfg.reconstruct_method
    ds = load_dataset(args.dataset)
    ctx = ds.context()
    out_dir = args.out or os.path.join(args.dataset, f"recon-{method}")
    os.makedirs(out_dir, exist_ok=True)
    out_file = os.path.join(out_dir, f"{args.split}_phase.prd")
    if os.path.exists(out_file) and not args.force:
        raise DataError(f"{out_file} exists (use --force to overwrite)")

    meas = ds.array(args.split, "meas")
    phases, logs = [], []
    for i in range(meas.shape[0]):
        phase, log = _reconstruct_one(method, meas[i], ctx, cfg)
        phases.append(phase)
        if log is not None:
            logs.append({"example": i, **log})
    write_prd(out_file, np.stack(phases))
    meta = {
        "method": method,
        "dataset": os.path.abspath(args.dataset),
        "split": args.split,
        "count": int(meas.shape[0]),
        "offset": prd_data_offset(3),
    }
    with open(os.path.join(out_dir, "reconstruction.json"), "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
    if logs:
        with open(os.path.join(out_dir, f"{args.split}_residuals.jsonl"), "w",
                  encoding="utf-8") as fh:
            for entry in logs:
                fh.write(json.dumps(entry, sort_keys=True) + "\n")
    print(f"wrote {out_file}: {meas.shape[0]} {method} reconstructions")
    return 0


def _load_recon(path, split):
    meta_path = os.path.join(path, "reconstruction.json")
    if os.path.exists(meta_path):
        with open(meta_path, "r", encoding="utf-8") as fh:
            meta = json.load(fh)
        method = meta.get("method", os.path.basename(path))
    else:
        method = os.path.basename(path.rstrip("/"))
    arr_path = os.path.join(path, f"{split}_phase.prd")
    if not os.path.exists(arr_path):
        raise DataError(f"no {split}_phase.prd under {path}")
    return method, read_prd(arr_path)


def _cmd_evaluate(args) -> int:
    cfg = load_config(args.config)
    ds = load_dataset(args.dataset)
    level = ds.manifest["noise_level"]
    truths = ds.array(args.split, "truth")
    records = []
    if args.include_truth:
        records += score_arrays(truths, truths, "truth", level, args.split)
    if args.include_raw:
        records += score_arrays(truths, ds.array(args.split, "measlow"),
                                "raw", level, args.split)
    if args.include_approx:
        records += score_arrays(truths, ds.array(args.split, "approx"),
                                "approximant", level, args.split)
    for recon_dir in args.recon or []:
        method, arrays = _load_recon(recon_dir, args.split)
        records += score_arrays(truths, arrays, method, level, args.split)
    if not records:
        raise DataError("nothing to evaluate: pass --recon, --include-raw "
                        "or --include-approx")
    rows = aggregate(records)
    report_path = args.report or cfg.report_path
    write_report(rows, report_path)
    print(f"wrote {report_path}")
    for level_, method, mean, std, n in rows:
        print(f"  level {level_} {method}: mean PCC {mean:.4f} +- {std:.4f} (n={n})")
    plot_path = args.plot or cfg.plot_path
    if plot_path:
        plot_report(rows, plot_path)
        print(f"wrote {plot_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="photonphase",
        description="photon-limited phase retrieval simulation toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dataset", help="generate datasets from a config")
    p.add_argument("config")
    p.add_argument("--force", action="store_true")
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=_cmd_dataset)

    p = sub.add_parser("reconstruct", help="run a classical reconstructor")
    p.add_argument("config")
    p.add_argument("dataset")
    p.add_argument("--method", choices=("gs", "approximant"))
    p.add_argument("--split", default="test")
    p.add_argument("--out")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=_cmd_reconstruct)

    p = sub.add_parser("evaluate", help="score reconstructions against truth")
    p.add_argument("config")
    p.add_argument("dataset")
    p.add_argument("--recon", action="append")
    p.add_argument("--split", default="test")
    p.add_argument("--include-raw", action="store_true",
                   help="score the resampled raw measurement as a method")
    p.add_argument("--include-approx", action="store_true",
                   help="score the stored approximants as a method")
    p.add_argument("--include-truth", action="store_true",
                   help="score the ground truth against itself (sanity row)")
    p.add_argument("--report")
    p.add_argument("--plot")
    p.set_defaults(func=_cmd_evaluate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigInvalid as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except (DegenerateImage, NegativeIntensity, SamplingViolation) as exc:
        print(f"numerical degeneracy: {exc}", file=sys.stderr)
        return 4
    except ToolkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
