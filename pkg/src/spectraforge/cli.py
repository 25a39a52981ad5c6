"""Command-line entry point: ``spectraforge <command> ...``.

Exit codes: 0 success, 1 validation error (bad flag, file, or input), 2 numerical failure.
Every output file gets a ``<file>.manifest.json`` sidecar; ``spco`` and ``train`` write
into an output directory and share one ``<command>.manifest.json``.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import traceback
from pathlib import Path

import numpy as np

from . import __version__
from .augment import (
    TOPOLOGY_MODES,
    FilterSpec,
    diffusion_matrix,
    eigenspace_filter_view,
    matrix_power_view,
    random_topology_augment,
)
from .game import game_margin
from .graph import (
    Graph,
    edge_list_text,
    load_edge_list,
    load_features,
    load_labels,
    normalized_adjacency,
    normalized_laplacian,
)
from .lab import (
    TrainConfig,
    encoder_view,
    evaluate_embeddings,
    fixed_views,
    planetoid_split,
    train_contrastive,
)
from .report import RunManifest, file_digest, fmt, to_plain, write_report
from .spco import COST_FORMS, MARGINAL_MODES, SpcoConfig, run_spco
from .spectral import decompose, operator_amplitudes, spectrum_curve

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

SEED_ENV = "SPECTRAFORGE_SEED"
NUMERICAL = (FloatingPointError, OverflowError, np.linalg.LinAlgError, ArithmeticError)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _bool(s: str) -> bool:
    v = str(s).lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {s!r}")


def build_parser() -> _Parser:
    p = _Parser(prog="spectraforge", description="Spectral tools for graph contrastive views.")
    p.add_argument("--version", action="version", version=f"spectraforge {__version__}")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def common(sp, out_help):
        sp.add_argument("--config", help="TOML file supplying any flag (command line wins)")
        sp.add_argument("--out", help=out_help)
        sp.add_argument("--seed", type=int, default=0)
        return sp

    sp = common(sub.add_parser("spectrum", help="binned spectrum of a graph operator"),
                "TSV path (default: stdout)")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--matrix", default="laplacian", choices=("laplacian", "adjacency", "ppr", "heat"))
    sp.add_argument("--param", type=float, default=0.15, help="ppr teleport or heat time")
    sp.add_argument("--bins", type=int, default=20)

    sp = common(sub.add_parser("augment", help="write an augmented edge list"), "edge-list path (default: stdout)")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--mode", required=True, choices=TOPOLOGY_MODES + ("ppr", "heat", "power"))
    sp.add_argument("--rate", type=float, default=0.2, help="topology modes")
    sp.add_argument("--param", type=float, default=0.15, help="ppr teleport or heat time")
    sp.add_argument("--threshold", type=float, default=1e-4,
                    help="diffusion entries at or below this weight are dropped")

    sp = common(sub.add_parser("game-check", help="GAME report between a graph and a view"),
                "JSON path (default: stdout)")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--view", required=True, help="edge list of the second view")
    sp.add_argument("--bins", type=int, default=20)

    sp = common(sub.add_parser("spco", help="learn a contrasted view with SpCo"), "output directory")
    sp.add_argument("--graph", required=True)
    _add_dataclass_flags(sp, SpcoConfig, skip=("seed",),
                         choices={"marginal_mode": MARGINAL_MODES, "cost_form": COST_FORMS})
    sp.add_argument("--epochs", dest="total_epochs", type=int, help="alias of --total-epochs")
    sp.add_argument("--bins", type=int, default=20)

    sp = common(sub.add_parser("train", help="contrastive training and linear probe"), "output directory")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--features", required=True)
    sp.add_argument("--labels", required=True)
    _add_dataclass_flags(sp, TrainConfig, skip=("seed",), choices={"similarity": ("dot", "cosine")})
    sp.add_argument("--view", default="filter", choices=("filter", "spco", "ppr", "heat"))
    sp.add_argument("--band", default="low", choices=("low", "high", "both"))
    sp.add_argument("--keep-rate", type=float, default=0.2)
    sp.add_argument("--order", default="low_to_high", choices=("low_to_high", "high_to_low"))
    sp.add_argument("--base-band-kept", type=_bool, default=True)
    sp.add_argument("--view-param", type=float, default=0.15)
    sp.add_argument("--per-class", type=int, default=20)

    sp = sub.add_parser("verify", help="run the acceptance suite")
    sp.add_argument("--suite", default="all", choices=("all", "transport", "spectral", "lab", "spco", "cli"))
    sp.add_argument("--config")
    return p


def _add_dataclass_flags(sp, cls, skip=(), choices=None):
    choices = choices or {}
    for f in dataclasses.fields(cls):
        if f.name in skip:
            continue
        flag = "--" + f.name.replace("_", "-")
        kind = type(f.default)
        if kind is bool:
            sp.add_argument(flag, type=_bool, default=f.default)
        else:
            sp.add_argument(flag, type=kind, default=f.default, choices=choices.get(f.name))


def parse(argv) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        raise UsageError("spectraforge: a command is required")
    if getattr(args, "config", None):
        file_vals = load_config(args.config, args.command)
        sub = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in sub._actions}
        bad = sorted(set(file_vals) - known)
        if bad:
            raise UsageError(f"{args.config}: unknown keys {bad}")
        sub.set_defaults(**file_vals)
        args = parser.parse_args(argv)
    env = os.environ.get(SEED_ENV)
    if env is not None and hasattr(args, "seed"):
        try:
            args.seed = int(env)
        except ValueError:
            raise UsageError(f"{SEED_ENV} must be an integer, got {env!r}") from None
    return args


def load_config(path, command: str) -> dict:
    """Top-level keys apply to every command; a ``[command]`` table overrides them."""
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    vals = {k: v for k, v in data.items() if not isinstance(v, dict)}
    vals.update(data.get(command, {}))
    return {k.replace("-", "_"): v for k, v in vals.items()}


# ------------------------------------------------------------------ helpers


def _manifest(args, inputs: dict) -> RunManifest:
    config = {k: v for k, v in sorted(vars(args).items()) if k not in ("command", "config")}
    hashes = {name: file_digest(p) for name, p in sorted(inputs.items())}
    return RunManifest(args.command, config, hashes, int(getattr(args, "seed", 0)), __version__)


def _emit(text: str, out, manifest: RunManifest):
    if out is None:
        sys.stdout.write(text)
        return
    Path(out).write_text(text, encoding="utf-8")
    write_report(manifest.as_dict(), str(out) + ".manifest.json")


def _graph_operator(g: Graph, matrix: str, param: float) -> np.ndarray:
    if matrix == "adjacency":
        return normalized_adjacency(g)
    if matrix == "laplacian":
        return normalized_laplacian(g)
    return diffusion_matrix(g, matrix, param)


def _dense_to_graph(g: Graph, M: np.ndarray, threshold: float) -> Graph:
    M = np.where(np.abs(M) > threshold, M, 0.0)
    np.fill_diagonal(M, 0.0)
    return Graph.from_adjacency(np.maximum(M, 0.0), g.features, g.labels)


# ----------------------------------------------------------------- commands


def cmd_spectrum(args) -> int:
    g = load_edge_list(args.graph)
    d = decompose(normalized_laplacian(g), "laplacian")
    if args.matrix == "laplacian":
        amp = d.lambdas.copy()
    elif args.matrix == "adjacency":
        amp = 1.0 - d.lambdas
    else:
        amp = operator_amplitudes(d, _graph_operator(g, args.matrix, args.param))
    curve = spectrum_curve(d, amp, args.bins)
    _emit(curve.to_tsv(), args.out, _manifest(args, {"graph": args.graph}))
    return 0


def cmd_augment(args) -> int:
    g = load_edge_list(args.graph)
    if args.mode in TOPOLOGY_MODES:
        h = random_topology_augment(g, args.mode, args.rate, args.seed)
    elif args.mode == "power":
        h = matrix_power_view(g, 2)
    else:
        h = _dense_to_graph(g, diffusion_matrix(g, args.mode, args.param), args.threshold)
    _emit(edge_list_text(h), args.out, _manifest(args, {"graph": args.graph}))
    return 0


def cmd_game_check(args) -> int:
    g = load_edge_list(args.graph)
    v = load_edge_list(args.view)
    if v.n != g.n:
        raise ValueError(f"view has {v.n} nodes, graph has {g.n}")
    d = decompose(normalized_laplacian(g), "laplacian")
    c1 = spectrum_curve(d, operator_amplitudes(d, normalized_adjacency(g)), args.bins)
    c2 = spectrum_curve(d, operator_amplitudes(d, normalized_adjacency(v)), args.bins)
    rep = game_margin(c1, c2)
    text = json.dumps(to_plain(rep.to_json()), indent=2) + "\n"
    _emit(text, args.out, _manifest(args, {"graph": args.graph, "view": args.view}))
    return 0


def _spco_config(args) -> SpcoConfig:
    names = [f.name for f in dataclasses.fields(SpcoConfig)]
    return SpcoConfig(**{k: getattr(args, k) for k in names})


def _need_out(args) -> Path:
    if not args.out:
        raise UsageError(f"{args.command}: --out DIR is required")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_spco(args) -> int:
    out = _need_out(args)
    g = load_edge_list(args.graph)
    view, trace, _ = run_spco(g, _spco_config(args), args.bins)
    write_report(trace, out / "spco_trace.jsonl", "jsonl")
    (out / "spco_view.edges").write_text(edge_list_text(Graph.from_adjacency(view)), encoding="utf-8")
    write_report(_manifest(args, {"graph": args.graph}).as_dict(), out / "spco.manifest.json")
    return 0


def cmd_train(args) -> int:
    out = _need_out(args)
    g = load_edge_list(args.graph)
    x = load_features(args.features)
    if x.shape[0] != g.n:
        raise ValueError(f"features have {x.shape[0]} rows, graph has {g.n} nodes")
    labels = load_labels(args.labels, g.n)
    cfg = TrainConfig(**{f.name: getattr(args, f.name) for f in dataclasses.fields(TrainConfig)})
    A = encoder_view(g.adjacency())
    if args.view == "filter":
        d = decompose(normalized_laplacian(g), "laplacian")
        V = eigenspace_filter_view(d, FilterSpec(args.band, args.keep_rate, args.order, args.base_band_kept))
    elif args.view == "spco":
        view, _, _ = run_spco(g, SpcoConfig(seed=args.seed))
        V = encoder_view(view)
    else:
        V = encoder_view(diffusion_matrix(g, args.view, args.view_param))
    res = train_contrastive(g, fixed_views(A, V), cfg, x=x)
    split = planetoid_split(labels, args.per_class, seed=args.seed)
    metrics = evaluate_embeddings(res.embeddings, labels, split, args.seed)
    # the trainer ascends the InfoNCE log-likelihood; -L is reported as the loss
    loss = [-v for v in res.loss_trace]
    metrics.update(loss_trace=loss, final_loss=loss[-1] if loss else None,
                   n_train=len(split["train"]), n_test=len(split["test"]))
    write_report(metrics, out / "train_metrics.json")
    emb = "\n".join(",".join(fmt(v) for v in row) for row in res.embeddings.h) + "\n"
    (out / "train_embeddings.csv").write_text(emb, encoding="utf-8")
    write_report(_manifest(args, {"graph": args.graph, "features": args.features,
                                  "labels": args.labels}).as_dict(), out / "train.manifest.json")
    return 0


def cmd_verify(args) -> int:
    from .acceptance import run_criteria

    outcomes = run_criteria(args.suite)
    for o in outcomes:
        print(o.line())
    n_pass = sum(o.passed for o in outcomes)
    print(f"{n_pass}/{len(outcomes)} criteria pass")
    return 0 if n_pass == len(outcomes) else 1


COMMANDS = {"spectrum": cmd_spectrum, "augment": cmd_augment, "game-check": cmd_game_check,
            "spco": cmd_spco, "train": cmd_train, "verify": cmd_verify}


def _origin(exc: BaseException) -> str:
    """Dotted module of the innermost package frame that raised ``exc``."""
    mod = "cli"
    for frame in traceback.extract_tb(exc.__traceback__):
        parts = Path(frame.filename).parts
        if "spectraforge" in parts:
            mod = Path(frame.filename).stem
    return mod


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parse(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NUMERICAL as exc:
        print(f"numerical failure [{_origin(exc)}]: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError, KeyError, IndexError, tomllib.TOMLDecodeError) as exc:
        print(f"error [{_origin(exc)}]: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
