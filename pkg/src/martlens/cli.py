"""Command-line front end.

Results go to stdout, diagnostics to stderr. Exit codes: 0 success,
1 domain error (bad data, unknown feature, unreachable endpoint), 2 usage.
Output is deterministic for fixed inputs; --json switches a subcommand to a
single canonical JSON document.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import bands as _bands
from . import edge as _edge
from . import mart_data
from .discretize import disc_from_doc, disc_to_doc, fit_discretization
from .errors import MartlensError, SchemaError
from .explain import ExplainerConfig, explain, explanation_to_doc, render_text
from .linreg import evaluate, model_from_doc, model_to_doc, predict, train_price_model
from .persist import canonical_dumps, write_json
from .service import DATA_ROOT_ENV, DEFAULT_EXPLAIN_SEED, create_app

BUNDLE_FORMAT = "martlens-bundle"


def _print_json(doc) -> None:
    sys.stdout.write(canonical_dumps(doc) + "\n")


def _set_pair(text: str) -> tuple[str, float]:
    name, sep, value = text.partition("=")
    if not sep or not name:
        raise argparse.ArgumentTypeError(f"expected NAME=VALUE, got {text!r}")
    try:
        return name, float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number in {text!r}") from None


def _instance_from_args(args) -> dict[str, float]:
    instance: dict[str, float] = {}
    if getattr(args, "instance_json", None):
        doc = json.loads(args.instance_json)
        if not isinstance(doc, dict):
            raise SchemaError("--instance-json must be a JSON object")
        instance.update({str(k): float(v) for k, v in doc.items()})
    for name, value in args.set or []:
        instance[name] = value
    if not instance:
        raise SchemaError("no instance values given (use --set NAME=VALUE)")
    return instance


def _load_bundle(path):
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != BUNDLE_FORMAT:
        raise SchemaError(f"{path} is not a model bundle")
    return model_from_doc(doc["model"]), disc_from_doc(doc["discretization"])


# ---------------------------------------------------------------------------
# subcommands

def _cmd_gen_data(args) -> int:
    ds = mart_data.gen_synthetic_mart(args.rows, args.seed)
    mart_data.write_csv(ds, args.out)
    sidecar = {
        "seed": args.seed,
        "n_rows": args.rows,
        **mart_data.synthetic_ground_truth(),
    }
    write_json(str(args.out) + ".meta.json", sidecar)
    print(f"wrote {args.rows} rows to {args.out}")
    return 0


def _cmd_train(args) -> int:
    ds = mart_data.load_csv(args.data, args.target)
    model = train_price_model(ds, lam=args.lam)
    disc = fit_discretization(ds, n_bins=args.n_bins)
    bundle = {
        "format": BUNDLE_FORMAT,
        "model": model_to_doc(model),
        "discretization": disc_to_doc(disc),
        "metrics": model.train_metrics.to_doc(),
    }
    write_json(args.out, bundle)
    if args.json:
        _print_json(bundle["metrics"])
    else:
        m = model.train_metrics
        print(f"trained on {len(ds.records)} rows, {len(ds.schema.feature_names)} features")
        print(f"rmse {m.rmse:.6f}  mae {m.mae:.6f}  r2 {m.r2:.6f}")
        print(f"wrote {args.out}")
    return 0


def _cmd_evaluate(args) -> int:
    model, _ = _load_bundle(args.model)
    ds = mart_data.load_csv(args.data, model.target_name)
    m = evaluate(model, ds)
    if args.json:
        _print_json(m.to_doc())
    else:
        print(f"rmse {m.rmse:.6f}  mae {m.mae:.6f}  r2 {m.r2:.6f}")
    return 0


def _cmd_predict(args) -> int:
    model, _ = _load_bundle(args.model)
    value = predict(model, _instance_from_args(args))
    if args.json:
        _print_json({"predicted_value": value})
    else:
        print(f"{value:.2f}")
    return 0


def _explain_config(args) -> ExplainerConfig:
    return ExplainerConfig(
        num_samples=args.num_samples,
        num_features=args.num_features,
        kernel_width=args.kernel_width,
        seed=args.seed,
    )


def _cmd_explain(args) -> int:
    model, disc = _load_bundle(args.model)
    exp = explain(model, disc, _instance_from_args(args), _explain_config(args))
    if args.json:
        _print_json(explanation_to_doc(exp))
    else:
        sys.stdout.write(render_text(exp))
    return 0


def _cmd_whatif(args) -> int:
    model, disc = _load_bundle(args.model)
    instance = _instance_from_args(args)
    overrides = dict(args.override or [])
    if not overrides:
        raise SchemaError("no overrides given (use --override NAME=VALUE)")
    unknown = [k for k in overrides if k not in model.feature_names]
    if unknown:
        raise SchemaError(f"overrides name unknown features: {', '.join(unknown)}")
    cfg = _explain_config(args)
    base = explain(model, disc, instance, cfg)
    modified = explain(model, disc, {**instance, **overrides}, cfg)
    delta = modified.predicted_value - base.predicted_value
    if args.json:
        _print_json(
            {
                "base": explanation_to_doc(base),
                "modified": explanation_to_doc(modified),
                "delta": delta,
            }
        )
    else:
        print(f"base {base.predicted_value:.2f}")
        print(f"modified {modified.predicted_value:.2f}")
        print(f"delta {delta:+.2f}")
        print()
        sys.stdout.write(render_text(modified))
    return 0


def _cmd_bands_eval(args) -> int:
    if args.data:
        samples = _bands.load_samples_csv(args.data)
    else:
        samples = _bands.gen_weight_samples(args.rows, args.seed)
    model = _bands.train_band_model(samples, lam=args.lam)
    scheme = _bands.make_bands(args.max_weight, args.width)
    report = _bands.evaluate_bands(model, samples, scheme)
    if args.json:
        _print_json(report.to_doc())
    else:
        sys.stdout.write(_bands.render_report(report))
    return 0


def _cmd_simulate_edge(args) -> int:
    frames = _edge.gen_synthetic_stream(
        args.stream_id, args.frames, args.seed, drift_per_frame=args.drift
    )
    strided = _edge.sample_stride(frames, args.stride)
    kept = _edge.dedupe_stream(strided, args.threshold)
    packets = _edge.frames_to_packets(args.stream_id, kept)
    print(f"frames {len(frames)} strided {len(strided)} kept {len(kept)}", file=sys.stderr)

    if args.out:
        blob = b"".join(_edge.encode_packet(p) for p in packets)
        Path(args.out).write_bytes(blob)
        print(f"wrote {len(packets)} packets ({len(blob)} bytes) to {args.out}")
    else:
        report = _edge.transmit(packets, args.endpoint)
        print(f"sent {report.sent} acked {report.acked} failed {len(report.failed)}")
        for stream_id, seq, reason in report.failed:
            print(f"  failed {stream_id}/{seq}: {reason}", file=sys.stderr)
        if report.failed:
            return 1
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    app = create_app(args.data_root)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


# ---------------------------------------------------------------------------
# parser

def _add_instance_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--set", action="append", type=_set_pair, metavar="NAME=VALUE",
                   help="instance feature value (repeatable)")
    p.add_argument("--instance-json", help="JSON object of feature values")


def _add_explain_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--num-samples", type=int, default=5000)
    p.add_argument("--num-features", type=int, default=6)
    p.add_argument("--kernel-width", type=float, default=None)
    p.add_argument("--seed", type=int, default=DEFAULT_EXPLAIN_SEED)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="martlens",
        description="explainable livestock price models, from CSV to what-if",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="write a synthetic sale CSV with known ground truth")
    p.add_argument("--rows", type=int, default=5000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_gen_data)

    p = sub.add_parser("train", help="fit a price model and write a bundle")
    p.add_argument("--data", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--lambda", dest="lam", type=float, default=0.0)
    p.add_argument("--n-bins", type=int, default=4)
    p.add_argument("--out", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=_cmd_train)

    p = sub.add_parser("evaluate", help="score a bundle against a CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=_cmd_evaluate)

    p = sub.add_parser("predict", help="predict one instance")
    p.add_argument("--model", required=True)
    _add_instance_args(p)
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=_cmd_predict)

    p = sub.add_parser("explain", help="explain one prediction")
    p.add_argument("--model", required=True)
    _add_instance_args(p)
    _add_explain_args(p)
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=_cmd_explain)

    p = sub.add_parser("whatif", help="re-explain with overridden feature values")
    p.add_argument("--model", required=True)
    _add_instance_args(p)
    p.add_argument("--override", action="append", type=_set_pair, metavar="NAME=VALUE")
    _add_explain_args(p)
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=_cmd_whatif)

    p = sub.add_parser("bands-eval", help="train and score a weight-band classifier")
    p.add_argument("--data", help="labeled samples CSV (default: synthetic)")
    p.add_argument("--rows", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lambda", dest="lam", type=float, default=0.0)
    p.add_argument("--width", type=float, default=200.0)
    p.add_argument("--max-weight", type=float, default=1000.0)
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=_cmd_bands_eval)

    p = sub.add_parser("simulate-edge", help="generate, thin, and ship a capture stream")
    p.add_argument("--stream-id", default="pen-0")
    p.add_argument("--frames", type=int, default=60)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--drift", type=float, default=2.0)
    p.add_argument("--stride", type=int, default=2)
    p.add_argument("--threshold", type=float, default=1.0)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--endpoint", help="service base URL to POST packets to")
    group.add_argument("--out", help="write encoded packets to a file instead")
    p.set_defaults(fn=_cmd_simulate_edge)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--data-root", default=None,
                   help=f"storage directory (default: ${DATA_ROOT_ENV})")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8300)
    p.set_defaults(fn=_cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except MartlensError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
