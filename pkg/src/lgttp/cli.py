"""Command line interface.

Subcommands: parse (cue extraction), plan (full pipeline to plan JSON),
simulate (strategy comparison CSV), train-adapter (fit parameters from a
sample directory), gradcheck (finite-difference gradient verification).

Exit codes: 0 success, 1 internal error or failed gradient check, 2
invalid input or flags, 3 I/O failure.  When LGTTP_SEED is set in the
environment it overrides the default seed of every subcommand; an explicit
--seed flag still wins.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Optional

import numpy as np

from ._version import __version__
from .adaptation import DEFAULT_MAX_FRAMES, AdaptationMode, init_adapter, init_position
from .errors import InvalidInputError, LGTTPError
from .formats import (
    load_checkpoint,
    load_lexicon,
    load_training_set,
    plan_to_json,
    read_embeddings,
    save_checkpoint,
    write_report_csv,
)
from .harness import Strategy, compare
from .parsing import CueCategory, Query, extract_cues
from .planner import (
    DEFAULT_ALPHA,
    DEFAULT_COST_MU,
    DEFAULT_T_FULL,
    DEFAULT_T_MIN_FRACTION,
    PipelineParams,
    PlannerConfig,
    build_plan,
)
from .relevance import FrameEmbeddings, QueryEmbedding
from .training import TrainConfig, TrainingSample, grad_check, train
from .weighting import DEFAULT_CENTER_DECAY

GRADCHECK_THRESHOLD = 1e-4


def _default_seed() -> int:
    raw = os.environ.get("LGTTP_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError as exc:
        raise InvalidInputError(f"LGTTP_SEED must be an integer, got {raw!r}") from exc


def _out_stream(path: Optional[str]):
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w", encoding="utf-8", newline=""), True


# =============================================================================
# Subcommand implementations
# =============================================================================


def _cmd_parse(args: argparse.Namespace) -> int:
    lexicon = load_lexicon(args.lexicon) if args.lexicon else None
    query = Query(id="cli", text=args.query)
    cues = extract_cues(query, lexicon)
    doc = {
        "query_id": query.id,
        "text": query.text,
        "cues": [
            {
                "category": cue.category.value,
                "marker": cue.marker,
                "marker_span": [cue.marker_span[0], cue.marker_span[1]],
                "reference_event": cue.reference_event,
                "source": cue.source.value,
            }
            for cue in cues
        ],
    }
    print(json.dumps(doc, indent=2))
    return 0


def _resolve_config(args: argparse.Namespace) -> PlannerConfig:
    raw = (
        json.loads(_read_text(args.config))
        if getattr(args, "config", None)
        else None
    )
    base = PlannerConfig.from_json_dict(raw) if raw is not None else PlannerConfig()
    overrides = {
        "alpha": args.alpha,
        "t_full": args.t_full,
        "t_min_fraction": args.tmin_frac,
        "lam": getattr(args, "lam", None),
        "mode": AdaptationMode(args.mode) if getattr(args, "mode", None) else None,
        "cost_mu": getattr(args, "cost_mu", None),
        "seed": args.seed,
    }
    kwargs = {
        "alpha": base.alpha,
        "t_full": base.t_full,
        "t_min_fraction": base.t_min_fraction,
        "lam": base.lam,
        "mode": base.mode,
        "cost_mu": base.cost_mu,
        "seed": base.seed,
    }
    for key, value in overrides.items():
        if value is not None:
            kwargs[key] = value
    # seed precedence: --seed flag, then config file, then LGTTP_SEED, then 0
    if args.seed is None and (raw is None or "seed" not in raw):
        kwargs["seed"] = _default_seed()
    return PlannerConfig(**kwargs)


def _read_text(path: str) -> str:
    from .formats import _read_bytes

    return _read_bytes(path).decode("utf-8")


def _cmd_plan(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    embeddings, file_query = read_embeddings(args.embeddings)

    if args.params and args.untrained:
        raise InvalidInputError("--params and --untrained are mutually exclusive")
    if args.params:
        ckpt_mode, params, _header = load_checkpoint(args.params)
        if args.mode is not None and AdaptationMode(args.mode) is not ckpt_mode:
            raise InvalidInputError(
                f"--mode {args.mode} conflicts with checkpoint mode {ckpt_mode.value}"
            )
        config = PlannerConfig(
            alpha=config.alpha,
            t_full=config.t_full,
            t_min_fraction=config.t_min_fraction,
            lam=config.lam,
            mode=ckpt_mode,
            cost_mu=config.cost_mu,
            seed=config.seed,
        )
    elif config.mode is AdaptationMode.TIMESTAMP_AWARE or args.untrained:
        params = PipelineParams.untrained(
            config.mode, embeddings.dim, max(DEFAULT_MAX_FRAMES, embeddings.n_frames)
        )
    else:
        raise InvalidInputError(
            f"mode {config.mode.value!r} needs --params CHECKPOINT or --untrained"
        )

    if args.embed_query:
        query_embedding = None  # build_plan synthesizes with config.seed
    elif file_query is not None:
        query_embedding = file_query
    else:
        raise InvalidInputError(
            "embeddings file has no query vector; pass --embed-query to synthesize one"
        )

    lexicon = load_lexicon(args.lexicon) if args.lexicon else None
    plan = build_plan(
        Query(id="cli", text=args.query),
        embeddings,
        config,
        params,
        query_embedding=query_embedding,
        lexicon=lexicon,
    )
    text = plan_to_json(plan)
    if args.out:
        from .formats import _write_bytes

        _write_bytes(args.out, text.encode("utf-8"))
    else:
        sys.stdout.write(text)
    print(
        f"frames={plan.n_frames} "
        f"mean_raw_rate={float(plan.raw_rates.mean()):.6f} "
        f"token_ratio={plan.cost.token_ratio:.6f} "
        f"relative_flops={plan.cost.relative_flops_percent:.2f}%",
        file=sys.stderr,
    )
    return 0


def _cmd_simulate(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    kind_map: dict[str, list] = {
        "precedence": [CueCategory.PRECEDENCE],
        "subsequence": [CueCategory.SUBSEQUENCE],
        "cooccurrence": [CueCategory.COOCCURRENCE],
        "none": [None],
        "all": [
            CueCategory.PRECEDENCE,
            CueCategory.SUBSEQUENCE,
            CueCategory.COOCCURRENCE,
            None,
        ],
    }
    rows = compare(
        args.scenarios,
        config,
        seeds=config.seed,
        marker_kinds=kind_map[args.marker],
        n_frames=args.frames,
        dim=args.dim,
        signal_strength=args.signal,
    )
    stream, owned = _out_stream(args.out)
    try:
        write_report_csv(stream, rows)
    finally:
        if owned:
            stream.close()
    return 0


def _cmd_train_adapter(args: argparse.Namespace) -> int:
    samples = load_training_set(args.data)
    seed = args.seed if args.seed is not None else _default_seed()
    config = TrainConfig(
        learning_rate=args.lr,
        weight_decay=args.wd,
        epochs=args.epochs,
        batch_size=args.batch_size,
        seed=seed,
    )
    mode = AdaptationMode(args.mode)
    adaptation, relevance, history = train(samples, mode, config)
    params = PipelineParams(adaptation=adaptation, relevance=relevance)
    save_checkpoint(
        args.out,
        mode,
        params,
        dim=samples[0].embeddings.dim,
        seed=seed,
        train_config=config,
    )
    loss_path = args.loss_out if args.loss_out else args.out + ".loss.csv"
    with open(loss_path, "w", encoding="utf-8", newline="") as stream:
        stream.write("epoch,loss\n")
        for epoch, loss in enumerate(history):
            stream.write(f"{epoch},{loss!r}\n")
    print(
        f"trained mode={mode.value} samples={len(samples)} epochs={config.epochs} "
        f"initial_loss={history[0]:.6f} final_loss={history[-1]:.6f}",
        file=sys.stderr,
    )
    return 0


def _cmd_gradcheck(args: argparse.Namespace) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    mode = AdaptationMode(args.mode)
    rng = np.random.default_rng(seed)
    rows = rng.normal(size=(args.frames, args.dim))
    query = rng.normal(size=args.dim)
    labels = rng.integers(0, 2, size=args.frames).astype(np.float64)
    if not labels.any():
        labels[0] = 1.0
    sample = TrainingSample(
        embeddings=FrameEmbeddings(rows),
        query=QueryEmbedding(query),
        labels=labels,
    )
    if mode is AdaptationMode.LEARNED_ADAPTER:
        adaptation = init_adapter(args.dim, max(args.frames, 4), seed=seed)
    elif mode is AdaptationMode.POSITION_EMBEDDING:
        adaptation = init_position(args.dim, seed=seed)
    else:
        adaptation = None
    err = grad_check(
        adaptation,
        sample,
        args.epsilon,
        seed=seed,
        corruption=args.corrupt,
    )
    ok = err < GRADCHECK_THRESHOLD
    print(
        f"mode={mode.value} dim={args.dim} frames={args.frames} "
        f"max_relative_error={err:.3e} threshold={GRADCHECK_THRESHOLD:.0e} "
        f"status={'ok' if ok else 'FAIL'}"
    )
    return 0 if ok else 1


# =============================================================================
# Parser wiring
# =============================================================================


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lgttp",
        description="Language-guided temporal token pruning for video-frame embeddings.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_parse = sub.add_parser("parse", help="extract temporal cues from a query")
    p_parse.add_argument("--query", required=True, help="natural-language query text")
    p_parse.add_argument("--lexicon", help="marker lexicon JSON file")
    p_parse.set_defaults(func=_cmd_parse)

    p_plan = sub.add_parser("plan", help="build a token-retention plan")
    p_plan.add_argument("--query", required=True, help="natural-language query text")
    p_plan.add_argument("--embeddings", required=True, help="embeddings container file")
    p_plan.add_argument("--alpha", type=float, default=None, help=f"mean pruning rate (default {DEFAULT_ALPHA})")
    p_plan.add_argument("--t-full", type=int, default=None, dest="t_full", help=f"tokens per unpruned frame (default {DEFAULT_T_FULL})")
    p_plan.add_argument("--tmin-frac", type=float, default=None, dest="tmin_frac", help=f"retention floor fraction (default {DEFAULT_T_MIN_FRACTION})")
    p_plan.add_argument("--lambda", type=float, default=None, dest="lam", help=f"co-occurrence decay (default {DEFAULT_CENTER_DECAY})")
    p_plan.add_argument("--mode", choices=[m.value for m in AdaptationMode], default=None, help="adaptation mode (default timestamp)")
    p_plan.add_argument("--cost-mu", type=float, default=None, dest="cost_mu", help=f"linear/quadratic cost mix (default {DEFAULT_COST_MU})")
    p_plan.add_argument("--seed", type=int, default=None, help="seed for the bundled query embedder")
    p_plan.add_argument("--params", help="parameter checkpoint file")
    p_plan.add_argument("--untrained", action="store_true", help="use identity-adaptation defaults")
    p_plan.add_argument("--embed-query", action="store_true", dest="embed_query", help="synthesize the query embedding instead of reading it from the file")
    p_plan.add_argument("--lexicon", help="marker lexicon JSON file")
    p_plan.add_argument("--config", help="planner config JSON file (flags override)")
    p_plan.add_argument("--out", help="write plan JSON here instead of stdout")
    p_plan.set_defaults(func=_cmd_plan)

    p_sim = sub.add_parser("simulate", help="compare strategies on synthetic scenarios")
    p_sim.add_argument("--scenarios", type=int, required=True, help="scenarios per marker kind")
    p_sim.add_argument("--frames", type=int, default=64, help="frames per scenario")
    p_sim.add_argument("--dim", type=int, default=32, help="embedding dimension")
    p_sim.add_argument("--signal", type=float, default=0.8, help="planted signal strength")
    p_sim.add_argument("--marker", choices=["precedence", "subsequence", "cooccurrence", "none", "all"], default="all")
    p_sim.add_argument("--alpha", type=float, default=None)
    p_sim.add_argument("--t-full", type=int, default=None, dest="t_full")
    p_sim.add_argument("--tmin-frac", type=float, default=None, dest="tmin_frac")
    p_sim.add_argument("--lambda", type=float, default=None, dest="lam")
    p_sim.add_argument("--cost-mu", type=float, default=None, dest="cost_mu")
    p_sim.add_argument("--seed", type=int, default=None, help="master seed; scenarios derive their own streams")
    p_sim.add_argument("--config", help="planner config JSON file (flags override)")
    p_sim.add_argument("--out", help="write CSV here instead of stdout")
    p_sim.set_defaults(func=_cmd_simulate, mode=None)

    p_train = sub.add_parser("train-adapter", help="fit adaptation parameters on labelled samples")
    p_train.add_argument("--data", required=True, help="directory of sample_*.lgte + sample_*.labels files")
    p_train.add_argument("--mode", choices=[m.value for m in AdaptationMode], default=AdaptationMode.LEARNED_ADAPTER.value)
    p_train.add_argument("--epochs", type=int, default=TrainConfig.epochs)
    p_train.add_argument("--lr", type=float, default=TrainConfig.learning_rate)
    p_train.add_argument("--wd", type=float, default=TrainConfig.weight_decay)
    p_train.add_argument("--batch-size", type=int, default=TrainConfig.batch_size, dest="batch_size")
    p_train.add_argument("--seed", type=int, default=None)
    p_train.add_argument("--out", required=True, help="checkpoint output path")
    p_train.add_argument("--loss-out", dest="loss_out", help="loss CSV path (default: OUT.loss.csv)")
    p_train.set_defaults(func=_cmd_train_adapter)

    p_grad = sub.add_parser("gradcheck", help="verify analytic gradients against finite differences")
    p_grad.add_argument("--mode", choices=[m.value for m in AdaptationMode], default=AdaptationMode.LEARNED_ADAPTER.value)
    p_grad.add_argument("--dim", type=int, default=8)
    p_grad.add_argument("--frames", type=int, default=4)
    p_grad.add_argument("--epsilon", type=float, default=1e-5)
    p_grad.add_argument("--seed", type=int, default=None)
    p_grad.add_argument("--corrupt", type=float, default=0.0, help=argparse.SUPPRESS)
    p_grad.set_defaults(func=_cmd_gradcheck)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except LGTTPError as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error [io-error]: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # noqa: BLE001 - last-resort mapping to exit 1
        print(f"error [internal]: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
