"""Command-line entry point.

One binary, eight subcommands: train, eval, infer, sweep-layers, quantize,
export-geometry, bench, dump-field. Every artifact-producing run writes a
manifest.json recording the full effective configuration, so results are
attributable to exact settings. Exit codes: 0 success, 1 usage error,
2 data or model error, 3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import datetime
import os
import sys
from dataclasses import replace

import numpy as np

from . import __version__
from .bench import bench_csv, run_bench
from .core import ComplexField, PhysicsConfig, dumps_stable, load_config
from .dataset import EncodeMode, encode_batch, load_split
from .errors import ConfigError, EmptyDatasetError, FileFormatError, MetanetError
from .evaluation import (
    confusion_csv,
    energy_csv,
    evaluate,
    render_heatmap,
    sweep_csv,
    sweep_layers,
)
from .fabricate import export_manifest, load_table, quantize_phases, synthetic_linear_table
from .network import (
    default_detector_layout,
    forward_arrays,
    load_model,
    region_probabilities,
    save_model,
)
from .propagation import EvanescentPolicy, Method, PropagationSettings
from .training import Hyperparams, history_csv, random_phases_network, train


class UsageError(Exception):
    """Bad flags or flag combinations; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="metanet", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"metanet {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    def add(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--seed", type=int, default=42, help="root seed for all randomness")
        p.add_argument("--threads", type=int, default=None,
                       help="worker threads for spectral transforms (default: all cores)")
        return p

    def add_physics(p):
        p.add_argument("--config", help="physics config JSON (defaults built in)")
        p.add_argument("--method", choices=[m.value for m in Method], default="spectral")
        p.add_argument("--pad", type=int, default=4, help="spectral zero-padding factor")
        p.add_argument("--encode", choices=[m.value for m in EncodeMode], default="blocking")

    p = add("train", "train a network on MNIST and write model + history")
    add_physics(p)
    p.add_argument("--mnist-dir", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--layers", type=int, default=None, help="override layer count")
    p.add_argument("--epochs", type=int, default=15)
    p.add_argument("--batch", type=int, default=64)
    p.add_argument("--lr", type=float, default=0.01)

    p = add("eval", "evaluate a model on the test set")
    add_physics(p)
    p.add_argument("--model", required=True)
    p.add_argument("--mnist-dir", required=True)
    p.add_argument("--out", default=None, help="directory for confusion/energy CSVs")

    p = add("infer", "classify one dataset image with a trained model")
    add_physics(p)
    p.add_argument("--model", required=True)
    p.add_argument("--mnist-dir", required=True)
    p.add_argument("--image-index", type=int, default=0)
    p.add_argument("--split", choices=["train", "validation", "test"], default="test")
    p.add_argument("--out", default=None, help="optional directory for prediction record")

    p = add("sweep-layers", "train networks at 1..N layers under one budget")
    add_physics(p)
    p.add_argument("--mnist-dir", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--layers", type=int, default=2, help="sweep layer counts 1..N")
    p.add_argument("--epochs", type=int, default=15)
    p.add_argument("--batch", type=int, default=64)
    p.add_argument("--lr", type=float, default=0.01)

    p = add("quantize", "snap model phases to a 2*pi/levels lattice")
    add_physics(p)
    p.add_argument("--model", required=True)
    p.add_argument("--levels", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--mnist-dir", default=None,
                   help="if given, re-evaluate the quantized model on the test set")

    p = add("export-geometry", "convert model phases to per-cell heights")
    p.add_argument("--model", required=True)
    p.add_argument("--table", default=None,
                   help="calibration CSV height_m,phase_rad (default: synthetic linear table)")
    p.add_argument("--out", required=True)

    p = add("bench", "time direct vs spectral propagation across grid sizes")
    p.add_argument("--pad", type=int, default=4)
    p.add_argument("--out", default=None, help="directory for bench.csv (default: stdout)")

    p = add("dump-field", "write one sample's detector field as binary + heatmap")
    add_physics(p)
    p.add_argument("--model", required=True)
    p.add_argument("--mnist-dir", required=True)
    p.add_argument("--image-index", type=int, default=0)
    p.add_argument("--split", choices=["train", "validation", "test"], default="test")
    p.add_argument("--out", required=True)

    return parser


def _settings(args) -> PropagationSettings:
    return PropagationSettings(Method(args.method), args.pad, EvanescentPolicy.ZERO)


def _workers(args):
    return args.threads if args.threads is not None else os.cpu_count()


def _config(args) -> PhysicsConfig:
    config = load_config(args.config) if args.config else PhysicsConfig()
    layers = getattr(args, "layers", None)
    if layers is not None and args.command == "train":
        config = replace(config, num_layers=layers)
    return config


def _pick_split(split, name: str):
    return {"train": split.train, "validation": split.validation, "test": split.test}[name]


def _write(path, text: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def _manifest(out_dir, args, extra: dict) -> None:
    doc = {
        "command": args.command,
        "version": f"metanet-{__version__}",
        "seed": args.seed,
        "threads": args.threads,
        "timestamp_utc": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    for key in ("method", "pad", "encode", "mnist_dir", "model", "split",
                "image_index", "levels", "table", "epochs", "batch", "lr"):
        if hasattr(args, key):
            doc[key] = getattr(args, key)
    doc.update(extra)
    _write(os.path.join(out_dir, "manifest.json"), dumps_stable(doc) + "\n")


def _cmd_train(args) -> int:
    config = _config(args)
    settings = _settings(args)
    split = load_split(args.mnist_dir)
    hp = Hyperparams(
        learning_rate=args.lr, batch_size=args.batch, max_epochs=args.epochs, seed=args.seed
    )
    net0 = random_phases_network(config=config, seed=args.seed)
    run = train(
        split.train, split.validation, hp, net0,
        settings=settings, encode_mode=EncodeMode(args.encode),
        workers=_workers(args), log=lambda line: print(line, flush=True),
    )
    os.makedirs(args.out, exist_ok=True)
    save_model(run.network, os.path.join(args.out, "model.json"))
    _write(os.path.join(args.out, "history.csv"), history_csv(run))
    _manifest(args.out, args, {
        "config": config.to_dict(),
        "hyperparams": hp.to_dict(),
        "best_epoch": run.best_epoch,
        "epochs_run": len(run.history),
        "wall_time_s": run.wall_time,
    })
    best = max(s.val_accuracy for s in run.history)
    print(f"best validation accuracy {best:.4f} at epoch {run.best_epoch}")
    return 0


def _cmd_eval(args) -> int:
    net = load_model(args.model)
    settings = _settings(args)
    split = load_split(args.mnist_dir)
    result = evaluate(
        net, split.test, EncodeMode(args.encode), settings, _workers(args)
    )
    print(f"test accuracy {result.accuracy:.4f} on {len(split.test)} samples")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        _write(os.path.join(args.out, "confusion.csv"), confusion_csv(result.confusion))
        _write(os.path.join(args.out, "energy_matrix.csv"), energy_csv(result.energy_matrix))
        _manifest(args.out, args, {
            "config": net.config.to_dict(),
            "accuracy": result.accuracy,
            "samples": len(split.test),
        })
    return 0


def _cmd_infer(args) -> int:
    net = load_model(args.model)
    settings = _settings(args)
    data = _pick_split(load_split(args.mnist_dir), args.split)
    if not 0 <= args.image_index < len(data):
        raise UsageError(
            f"--image-index {args.image_index} out of range for {args.split} "
            f"({len(data)} samples)"
        )
    u0 = encode_batch(data.masks[args.image_index], EncodeMode(args.encode))
    trace = forward_arrays(net, u0, settings, _workers(args))
    p = region_probabilities(trace.region_energies)
    digit = int(np.argmax(p))
    print(f"predicted digit: {digit} (true label {int(data.labels[args.image_index])})")
    for d in range(10):
        print(f"p[{d}] = {p[d]:.6f}")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        _manifest(args.out, args, {
            "predicted": digit,
            "true_label": int(data.labels[args.image_index]),
            "probabilities": [float(v) for v in p],
        })
    return 0


def _cmd_sweep_layers(args) -> int:
    if args.layers < 1:
        raise UsageError(f"--layers must be >= 1, got {args.layers}")
    config = _config(args)
    settings = _settings(args)
    split = load_split(args.mnist_dir)
    hp = Hyperparams(
        learning_rate=args.lr, batch_size=args.batch, max_epochs=args.epochs, seed=args.seed
    )
    base = random_phases_network(
        config=config, detector=default_detector_layout(config.grid_n), seed=args.seed
    )
    rows = sweep_layers(
        range(1, args.layers + 1), split.train, split.validation, split.test,
        hp, base, settings, EncodeMode(args.encode), _workers(args),
        log=lambda line: print(line, flush=True),
    )
    os.makedirs(args.out, exist_ok=True)
    _write(os.path.join(args.out, "sweep.csv"), sweep_csv(rows))
    _manifest(args.out, args, {
        "config": config.to_dict(),
        "hyperparams": hp.to_dict(),
        "layer_counts": [r.layer_count for r in rows],
        "accuracies": [r.accuracy for r in rows],
    })
    return 0


def _cmd_quantize(args) -> int:
    if args.levels < 2:
        raise UsageError(f"--levels must be >= 2, got {args.levels}")
    net = load_model(args.model)
    qnet = quantize_phases(net, args.levels)
    os.makedirs(args.out, exist_ok=True)
    save_model(qnet, os.path.join(args.out, "model.json"))
    extra = {"config": net.config.to_dict()}
    if args.mnist_dir:
        settings = _settings(args)
        split = load_split(args.mnist_dir)
        mode = EncodeMode(args.encode)
        workers = _workers(args)
        before = evaluate(net, split.test, mode, settings, workers).accuracy
        after = evaluate(qnet, split.test, mode, settings, workers).accuracy
        print(f"test accuracy {before:.4f} -> {after:.4f} at {args.levels} levels")
        extra.update({"accuracy_before": before, "accuracy_after": after})
    _manifest(args.out, args, extra)
    return 0


def _cmd_export_geometry(args) -> int:
    net = load_model(args.model)
    if args.table:
        table = load_table(args.table)
    else:
        table = synthetic_linear_table()
        print("no --table given, using the synthetic linear calibration table")
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "geometry.csv")
    count = export_manifest(net, table, path)
    _manifest(args.out, args, {
        "config": net.config.to_dict(),
        "records": count,
        "synthetic_table": args.table is None,
    })
    print(f"wrote {count} records to {path}")
    return 0


def _cmd_bench(args) -> int:
    rows = run_bench(pad_factor=args.pad, seed=args.seed,
                     log=lambda line: print(line, file=sys.stderr, flush=True))
    text = bench_csv(rows)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        _write(os.path.join(args.out, "bench.csv"), text)
        _manifest(args.out, args, {"pad_factor": args.pad})
    else:
        print(text, end="")
    return 0


def _cmd_dump_field(args) -> int:
    net = load_model(args.model)
    settings = _settings(args)
    data = _pick_split(load_split(args.mnist_dir), args.split)
    if not 0 <= args.image_index < len(data):
        raise UsageError(
            f"--image-index {args.image_index} out of range for {args.split} "
            f"({len(data)} samples)"
        )
    u0 = encode_batch(data.masks[args.image_index], EncodeMode(args.encode))
    trace = forward_arrays(net, u0, settings, _workers(args))
    field = ComplexField(trace.u_out, plane_tag="detector")
    os.makedirs(args.out, exist_ok=True)
    from .evaluation import dump_field as _dump

    _dump(field, os.path.join(args.out, "detector.mnnf"))
    render_heatmap(field, os.path.join(args.out, "detector.png"))
    _manifest(args.out, args, {
        "config": net.config.to_dict(),
        "true_label": int(data.labels[args.image_index]),
    })
    print(f"wrote detector field for {args.split}[{args.image_index}] to {args.out}")
    return 0


_HANDLERS = {
    "train": _cmd_train,
    "eval": _cmd_eval,
    "infer": _cmd_infer,
    "sweep-layers": _cmd_sweep_layers,
    "quantize": _cmd_quantize,
    "export-geometry": _cmd_export_geometry,
    "bench": _cmd_bench,
    "dump-field": _cmd_dump_field,
}


def run(argv) -> int:
    """Parse argv (no program name) and execute; returns the exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("no command given (see --help)")
        return _HANDLERS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (FileFormatError, ConfigError, EmptyDatasetError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except (MetanetError, ValueError) as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 3


def main(argv=None) -> int:
    return run(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
