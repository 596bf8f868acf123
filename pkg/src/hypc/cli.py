"""Command-line front end: compress, decompress, inspect, eval, gen, train-toy,
infer, bench, and perc subcommands. JSON on stdout by default; --pretty for
human tables. Errors exit nonzero with one line on stderr; output files are
written atomically."""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .analysis import compression_ratio, error_stats
from .codebook import DirectionMode
from .codec import EncodeParams, decode_layer, encode_layer
from .container import (
    CompressedModel,
    HCMP_MAGIC,
    NTB_MAGIC,
    Tensor,
    TensorBundle,
    read_hcmp,
    read_ntb,
    write_hcmp,
    write_ntb,
)
from .errors import DataError, HypcError
from .inference import (
    bundle_to_network,
    eval_accuracy,
    load_dataset_csv,
    make_toy_dataset,
    mlp_forward,
    model_to_network,
    network_to_bundle,
    pipelined_forward,
    save_dataset_csv,
    train_toy,
)
from .percolation import estimate_threshold, solve_p0

_DIRECTIONS = {"grid": DirectionMode.GRID_SHEAR, "paper": DirectionMode.PAPER_EQ}
_BENCH_ARMS = {
    "full": (True, True),
    "no-kd": (False, True),
    "no-matrix": (True, False),
    "naive": (False, False),
}


def _resolve_seed(value: int | None) -> int:
    if value is not None:
        return value
    return int(os.environ.get("HYPC_SEED", "0"))


def _emit(payload, pretty: bool, table=None) -> None:
    if pretty and table is not None:
        print(table)
    else:
        print(json.dumps(payload))


def _format_table(headers: list[str], rows: list[list]) -> str:
    cells = [headers] + [[str(c) for c in row] for row in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(headers))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)


def _params_from_spec(spec: dict, base: EncodeParams) -> EncodeParams:
    direction = spec.get("direction")
    if direction is not None and direction not in _DIRECTIONS:
        raise DataError(f"unknown direction {direction!r} (choose grid or paper)")
    return EncodeParams(
        box_side=float(spec.get("l", base.box_side)),
        num_points=int(spec.get("u", base.num_points)),
        max_category=int(spec.get("max_class", base.max_category)),
        direction_mode=_DIRECTIONS[direction] if direction else base.direction_mode,
    )


def _cmd_compress(args) -> int:
    bundle = read_ntb(args.input)
    base = EncodeParams(
        box_side=args.l,
        num_points=args.u,
        max_category=args.max_class,
        direction_mode=_DIRECTIONS[args.direction],
    )
    default_spec: dict = {}
    layer_specs: dict = {}
    if args.per_layer:
        with open(args.per_layer, "r", encoding="utf-8") as f:
            overrides = json.load(f)
        default_spec = overrides.get("default", {})
        layer_specs = overrides.get("layers", {})
    base = _params_from_spec(default_spec, base)

    def encode_one(tensor: Tensor):
        params = _params_from_spec(layer_specs.get(tensor.name, {}), base)
        return encode_layer(tensor.data, tensor.name, tensor.shape, params)

    jobs = max(1, args.jobs)
    if jobs == 1:
        layers = [encode_one(t) for t in bundle.tensors]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            layers = list(pool.map(encode_one, bundle.tensors))
    write_hcmp(CompressedModel(layers), args.output)
    in_bytes = os.path.getsize(args.input)
    out_bytes = os.path.getsize(args.output)
    payload = {
        "layers": len(layers),
        "input_bytes": in_bytes,
        "output_bytes": out_bytes,
        "ratio": compression_ratio(in_bytes, out_bytes),
    }
    _emit(payload, args.pretty,
          f"{len(layers)} layers: {in_bytes} -> {out_bytes} bytes "
          f"({payload['ratio']:.2f}x)")
    return 0


def _cmd_decompress(args) -> int:
    model = read_hcmp(args.input)
    tensors = [
        Tensor(l.name, l.shape, decode_layer(l).astype(np.float32))
        for l in model.layers
    ]
    write_ntb(TensorBundle(tensors), args.output)
    payload = {"layers": len(tensors), "output_bytes": os.path.getsize(args.output)}
    _emit(payload, args.pretty, f"{len(tensors)} layers -> {args.output}")
    return 0


def _cmd_inspect(args) -> int:
    model = read_hcmp(args.path)
    rows = [
        {
            "name": l.name,
            "shape": list(l.shape),
            "u": l.config.num_points,
            "max_class": l.config.max_category,
            "l": l.config.box_side,
            "bit_width": l.bit_width,
            "payload_bytes": len(l.payload),
        }
        for l in model.layers
    ]
    table = _format_table(
        ["name", "shape", "u", "max_class", "l", "bit_width", "payload_bytes"],
        [[r["name"], "x".join(map(str, r["shape"])) or "scalar", r["u"],
          r["max_class"], r["l"], r["bit_width"], r["payload_bytes"]] for r in rows],
    )
    _emit(rows, args.pretty, table)
    return 0


def _cmd_eval(args) -> int:
    original = read_ntb(args.original)
    restored = read_ntb(args.restored)
    names = [t.name for t in original.tensors]
    if names != [t.name for t in restored.tensors]:
        raise DataError("bundles do not contain the same tensors in the same order")
    flat_o = np.concatenate([t.data for t in original.tensors]) if names else np.zeros(0)
    flat_r = np.concatenate([t.data for t in restored.tensors]) if names else np.zeros(0)
    stats = error_stats(flat_o, flat_r)
    _emit(stats, args.pretty,
          "\n".join(f"{k}: {v:.6e}" for k, v in stats.items()))
    return 0


def _cmd_gen(args) -> int:
    dims = [int(d) for d in args.layers.split(",") if d]
    if len(dims) < 2 or any(d < 1 for d in dims):
        raise DataError("--layers needs at least two positive dims, e.g. 4,32,2")
    seed = _resolve_seed(args.seed)
    rng = np.random.default_rng(seed)
    tensors = []
    for i in range(len(dims) - 1):
        w = rng.random((dims[i + 1], dims[i]), dtype=np.float32) - np.float32(0.5)
        b = rng.random(dims[i + 1], dtype=np.float32) - np.float32(0.5)
        tensors.append(Tensor(f"layer{i}.weight", w.shape, w.reshape(-1)))
        tensors.append(Tensor(f"layer{i}.bias", b.shape, b))
    write_ntb(TensorBundle(tensors), args.output)
    payload = {"seed": seed, "layers": len(dims) - 1,
               "weights": int(sum(t.data.size for t in tensors)),
               "output_bytes": os.path.getsize(args.output)}
    _emit(payload, args.pretty, json.dumps(payload, indent=2))
    return 0


def _cmd_train_toy(args) -> int:
    seed = _resolve_seed(args.seed)
    net = train_toy(seed)
    write_ntb(network_to_bundle(net), args.output)
    ds = make_toy_dataset(seed)
    if args.dump_data:
        save_dataset_csv(args.dump_data, ds.test_x, ds.test_y)
    acc = eval_accuracy(net, ds.test_x, ds.test_y)
    payload = {"seed": seed, "test_accuracy": acc,
               "output_bytes": os.path.getsize(args.output)}
    _emit(payload, args.pretty, f"seed {seed}: test accuracy {acc:.4f}")
    return 0


def _cmd_infer(args) -> int:
    with open(args.model, "rb") as f:
        magic = f.read(4)
    x, labels = load_dataset_csv(args.data)
    if magic == NTB_MAGIC:
        if args.pipeline:
            raise DataError("--pipeline needs a compressed (.hcmp) model")
        outputs = mlp_forward(bundle_to_network(read_ntb(args.model)), x)
    elif magic == HCMP_MAGIC:
        model = read_hcmp(args.model)
        if args.pipeline:
            outputs = pipelined_forward(model, x)
        else:
            outputs = mlp_forward(model_to_network(model), x)
    else:
        raise DataError(f"{args.model}: neither an NTB nor an HCMP file")
    pred = np.argmax(outputs, axis=1)
    acc = float(np.mean(pred == labels))
    _emit({"accuracy": acc}, args.pretty, f"accuracy {acc:.4f}")
    return 0


def _cmd_bench(args) -> int:
    bundle = read_ntb(args.input)
    use_tree, use_batch = _BENCH_ARMS[args.mode]
    start = time.perf_counter()
    for t in bundle.tensors:
        encode_layer(t.data, t.name, t.shape, EncodeParams(), use_tree=use_tree,
                     use_batch=use_batch)
    seconds = time.perf_counter() - start
    payload = {"mode": args.mode, "seconds": seconds,
               "layers": len(bundle.tensors), "weights": bundle.total_elements}
    _emit(payload, args.pretty,
          f"{args.mode}: {seconds:.3f} s over {bundle.total_elements} weights")
    return 0


def _cmd_perc(args) -> int:
    if args.perc_cmd == "p0":
        print(json.dumps(solve_p0()))
        return 0
    seed = _resolve_seed(args.seed)
    est = estimate_threshold(args.r, args.height, args.width, args.trials,
                             probes=args.probes, seed=seed)
    payload = est.to_json_dict()
    _emit(payload, args.pretty,
          f"r={args.r}: p_hat={est.p_hat:.4f} "
          f"in [{est.interval[0]:.4f}, {est.interval[1]:.4f}]")
    return 0


def _add_pretty(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--pretty", action="store_true",
                        help="human-readable output instead of JSON")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hypc",
        description="Trajectory-codebook weight compression toolkit",
    )
    sub = parser.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("compress", help="NTB -> HCMP")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--l", type=float, default=0.1, help="box side length")
    p.add_argument("--u", type=int, default=225, help="codebook points per layer")
    p.add_argument("--max-class", type=int, default=3, dest="max_class",
                   help="number of scaling rings")
    p.add_argument("--direction", choices=sorted(_DIRECTIONS), default="grid")
    p.add_argument("--per-layer", dest="per_layer",
                   help="JSON file with default/per-layer parameter overrides")
    p.add_argument("--jobs", type=int, default=1,
                   help="concurrent layer encoders (never changes output bytes)")
    _add_pretty(p)
    p.set_defaults(func=_cmd_compress)

    p = sub.add_parser("decompress", help="HCMP -> NTB")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    _add_pretty(p)
    p.set_defaults(func=_cmd_decompress)

    p = sub.add_parser("inspect", help="per-layer table of an HCMP file")
    p.add_argument("path")
    _add_pretty(p)
    p.set_defaults(func=_cmd_inspect)

    p = sub.add_parser("eval", help="error stats between two NTB files")
    p.add_argument("--original", required=True)
    p.add_argument("--restored", required=True)
    _add_pretty(p)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("gen", help="seeded random MLP weights -> NTB")
    p.add_argument("--layers", required=True, help="comma-separated dims, e.g. 4,32,2")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--output", required=True)
    _add_pretty(p)
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("train-toy", help="train the toy classifier -> NTB")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--output", required=True)
    p.add_argument("--dump-data", dest="dump_data",
                   help="also write the test split as CSV")
    _add_pretty(p)
    p.set_defaults(func=_cmd_train_toy)

    p = sub.add_parser("infer", help="accuracy of a model on a labeled CSV")
    p.add_argument("--model", required=True, help="NTB or HCMP file")
    p.add_argument("--data", required=True, help="CSV with x1..xd,label header")
    p.add_argument("--pipeline", action="store_true",
                   help="overlap decode and compute (HCMP only)")
    _add_pretty(p)
    p.set_defaults(func=_cmd_infer)

    p = sub.add_parser("bench", help="time one compression arm")
    p.add_argument("--input", required=True)
    p.add_argument("--mode", choices=sorted(_BENCH_ARMS), default="full")
    _add_pretty(p)
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("perc", help="percolation experiments")
    perc_sub = p.add_subparsers(dest="perc_cmd", required=True)
    q = perc_sub.add_parser("p0", help="root of 2p + p^2 - p^4 = 1")
    q.set_defaults(func=_cmd_perc)
    q = perc_sub.add_parser("estimate", help="Monte-Carlo threshold estimate")
    q.add_argument("--r", type=int, required=True, help="kernel size")
    q.add_argument("--height", type=int, required=True)
    q.add_argument("--width", type=int, required=True)
    q.add_argument("--trials", type=int, required=True)
    q.add_argument("--probes", type=int, default=12)
    q.add_argument("--seed", type=int, default=None)
    _add_pretty(q)
    q.set_defaults(func=_cmd_perc)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (HypcError, ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        message = " ".join(str(exc).split()) or exc.__class__.__name__
        print(f"error: {message}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
