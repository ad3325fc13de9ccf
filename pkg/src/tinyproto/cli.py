"""Command-line front end: run experiments, dump masks, evaluate costs."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .config import ConfigError, load_config
from .costmodel import ALGORITHMS, CostQuery, cost
from .masking import format_mask_rows, generate_masks
from .protocol import run_experiment


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--out", metavar="DIR", help="directory for output files")
    parser.add_argument("--quiet", action="store_true", help="suppress progress output")


def _cmd_run(args: argparse.Namespace) -> int:
    try:
        config = load_config(args.config)
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return 2
    result = run_experiment(config, out_dir=args.out)
    if not args.quiet:
        print(json.dumps(result.summary, indent=2, sort_keys=True))
    return 0


def _cmd_masks(args: argparse.Namespace) -> int:
    mask_set = generate_masks(args.K, args.d, args.s, args.seed)
    text = format_mask_rows(mask_set)
    if args.out:
        from pathlib import Path

        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "masks.txt").write_text(text)
    if not args.quiet:
        print(text, end="")
    return 0


def _parse_cost_query_file(path: str) -> list[CostQuery]:
    """Flat key-value query file; `algorithm` may list several, comma-separated."""
    values: dict[str, str] = {}
    with open(path) as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, _, value = line.partition("=")
            values[key.strip()] = value.strip()
    if "algorithm" not in values:
        raise ValueError("query file must set 'algorithm'")

    def get_int(key: str) -> int | None:
        return int(values[key]) if key in values else None

    classes_per_client: int | list[int] | None = None
    if "K_i" in values:
        parts = [p for p in values["K_i"].split(",") if p.strip()]
        counts = [int(p) for p in parts]
        classes_per_client = counts[0] if len(counts) == 1 else counts

    queries = []
    for algo in (a.strip() for a in values["algorithm"].split(",")):
        queries.append(
            CostQuery(
                algorithm=algo,
                n_clients=get_int("M"),
                n_classes=get_int("K"),
                classes_per_client=classes_per_client,
                proto_dim=get_int("d"),
                comp_dim=get_int("s"),
                classifier_params=get_int("classifier_params"),
                aux_extractor_params=get_int("aux_extractor_params"),
                aux_classifier_params=get_int("aux_classifier_params"),
                reduction_factor=float(values["r"]) if "r" in values else None,
                full_model_params=get_int("full_model_params"),
            )
        )
    return queries


def _cmd_cost(args: argparse.Namespace) -> int:
    try:
        queries = _parse_cost_query_file(args.query)
        rows = [(q.algorithm, cost(q)) for q in queries]
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    lines = ["algorithm,params,params_millions"]
    lines += [f"{algo},{n},{n / 1e6:.2f}" for algo, n in rows]
    text = "\n".join(lines) + "\n"
    if args.out:
        from pathlib import Path

        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "costs.csv").write_text(text)
    if not args.quiet:
        print(text, end="")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="tinyproto",
        description="Desk-scale prototype-based federated learning simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment from a config file")
    p_run.add_argument("config", help="flat key-value config file")
    _add_common(p_run)
    p_run.set_defaults(fn=_cmd_run)

    p_masks = sub.add_parser("masks", help="generate and print per-class masks")
    p_masks.add_argument("K", type=int, help="number of classes")
    p_masks.add_argument("d", type=int, help="prototype dimension")
    p_masks.add_argument("s", type=int, help="ones per mask")
    p_masks.add_argument("seed", type=int, help="generator seed")
    _add_common(p_masks)
    p_masks.set_defaults(fn=_cmd_masks)

    p_cost = sub.add_parser(
        "cost", help=f"per-round cost for {', '.join(ALGORITHMS)}"
    )
    p_cost.add_argument("query", help="flat key-value query file")
    _add_common(p_cost)
    p_cost.set_defaults(fn=_cmd_cost)

    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(message)s",
    )
    return args.fn(args)


if __name__ == "__main__":
    raise SystemExit(main())
