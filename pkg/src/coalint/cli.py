"""Command-line surface.

Every command is deterministic under a fixed seed and writes a manifest
(next to its main output) recording the resolved configuration, seed,
version, wall time, and query count. Replaying a manifest re-runs the
recorded invocation and reproduces the output files byte for byte.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import replace

from . import __version__
from .bitset import CapacityError, Coalition, PreconditionError
from .extraction import extract_tree_interactions
from .games import (
    ConstantGame,
    CountingGame,
    Game,
    GameFormatError,
    MissingCoalitionError,
    TreeGame,
    UnanimityGame,
    load_moebius_game,
    load_table_game,
)
from .gbt import fit_gbt, preset
from .indices import IndexSpec, parse_family
from .msr import gamma_brute, gamma_closed
from .oracle import exact_interactions
from .pipeline import (
    PipelineConfig,
    ProxySpec,
    benchmark_sweep,
    estimate_interactions,
    summarize_sweep,
)
from .results import InteractionVector
from .sampling import SamplerConfig, sample
from .trees import ModelFormatError, load_ensemble, save_ensemble

EXIT_OK = 0
EXIT_IO = 1
EXIT_PRECONDITION = 2


def _parse_game(spec: str, n: int | None) -> Game:
    kind, sep, detail = spec.partition(":")
    if not sep:
        raise PreconditionError(
            f"game spec must look like kind:detail, got {spec!r}"
        )
    if kind == "constant":
        if n is None:
            raise PreconditionError("constant games need --n")
        return ConstantGame(n, float(detail))
    if kind == "unanimity":
        return UnanimityGame(Coalition.from_string(detail))
    if kind == "moebius":
        return load_moebius_game(detail)
    if kind == "table":
        return load_table_game(detail)
    if kind == "tree":
        return TreeGame(load_ensemble(detail))
    raise PreconditionError(
        f"unknown game kind {kind!r}; use constant|unanimity|moebius|tree|table"
    )


def _parse_index(args: argparse.Namespace) -> IndexSpec:
    family = parse_family(args.index)
    max_order = args.order if family in ("FSII", "FBII") else None
    return IndexSpec(family=family, banzhaf_w=args.banzhaf_w, max_order=max_order)


def _parse_targets(path: str, n: int) -> list[Coalition]:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [line.strip() for line in fh if line.strip()]
    targets = [Coalition.from_string(line) for line in lines]
    for target in targets:
        if target.n != n:
            raise PreconditionError(
                f"target width {target.n} != expected {n} in {path}"
            )
    return targets


def _resolve_targets(args: argparse.Namespace, n: int) -> list[Coalition]:
    if getattr(args, "targets", None):
        return _parse_targets(args.targets, n)
    from .bitset import all_subsets_up_to_order

    return all_subsets_up_to_order(n, args.order)


def _write_interactions(path: str, vector: InteractionVector, with_provenance: bool) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("subset,value,provenance\n" if with_provenance else "subset,value\n")
        for coalition, value in vector.sorted_items():
            row = f"{coalition.to_string()},{value!r}"
            if with_provenance:
                row += f",{vector.provenance[coalition]}"
            fh.write(row + "\n")


def _write_manifest(
    out_path: str,
    command: str,
    argv: list[str],
    resolved: dict,
    seed: int | None,
    wall_time: float,
    query_count: int | None,
    outputs: list[str],
) -> None:
    manifest = {
        "command": command,
        "argv": argv,
        "resolved": resolved,
        "seed": seed,
        "tool_version": __version__,
        "wall_time_s": wall_time,
        "query_count": query_count,
        "outputs": outputs,
    }
    with open(out_path + ".manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _add_index_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--index",
        required=True,
        help="sii|bii|sv|bv|chii|moebius|fsii|fbii",
    )
    parser.add_argument("--order", type=int, default=1, help="maximal target order k")
    parser.add_argument("--banzhaf-w", type=float, default=0.5)


def _add_sampler_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--sampler", default="leverage", help="leverage|proportional|uniform")
    parser.add_argument("--budget", type=int, required=True)
    parser.add_argument("--with-replacement", action="store_true")


def _add_proxy_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--proxy", default="tree", help="tree|linear")
    parser.add_argument(
        "--preset", default="default", help="tree proxy preset: default|hpo-informed"
    )
    parser.add_argument(
        "--basis-order", type=int, default=None,
        help="linear proxy basis order (defaults to --order)",
    )


def _sampler_config(args: argparse.Namespace, index: IndexSpec, n: int) -> SamplerConfig:
    kwargs = {}
    if args.sampler == "proportional":
        kwargs["proportional_index"] = index
        kwargs["proportional_target"] = Coalition((1 << args.order) - 1, n)
    return SamplerConfig(
        scheme=args.sampler,
        budget=args.budget,
        without_replacement=not args.with_replacement,
        seed=args.seed,
        **kwargs,
    )


def _proxy_spec(args: argparse.Namespace) -> ProxySpec:
    if args.proxy == "tree":
        return ProxySpec(kind="tree", gbt=preset(args.preset))
    if args.proxy == "linear":
        order = args.basis_order if args.basis_order is not None else args.order
        return ProxySpec(kind="linear", basis_order=order)
    raise PreconditionError(f"unknown proxy {args.proxy!r}")


def cmd_exact(args: argparse.Namespace, argv: list[str]) -> int:
    start = time.perf_counter()
    game = CountingGame(_parse_game(args.game, args.n))
    index = _parse_index(args)
    targets = _resolve_targets(args, game.n)
    vector = exact_interactions(game, index, targets, cap=args.cap)
    _write_interactions(args.out, vector, with_provenance=False)
    _write_manifest(
        args.out,
        "exact",
        argv,
        {
            "game": args.game,
            "n": game.n,
            "index": index.label(),
            "order": args.order,
            "cap": args.cap,
        },
        None,
        time.perf_counter() - start,
        game.calls,
        [args.out],
    )
    return EXIT_OK


def cmd_tree_extract(args: argparse.Namespace, argv: list[str]) -> int:
    start = time.perf_counter()
    ensemble = load_ensemble(args.model)
    index = _parse_index(args)
    targets = _resolve_targets(args, ensemble.n)
    mode = "general" if args.general_lambda else "closed"
    vector = extract_tree_interactions(ensemble, index, targets, lambda_mode=mode)
    wall = time.perf_counter() - start
    _write_interactions(args.out, vector, with_provenance=False)
    if args.timing:
        print(
            f"timing: leaves={ensemble.n_leaves} targets={len(targets)} "
            f"wall_s={wall:.6f}",
            file=sys.stderr,
        )
    _write_manifest(
        args.out,
        "tree-extract",
        argv,
        {
            "model": args.model,
            "n": ensemble.n,
            "index": index.label(),
            "order": args.order,
            "lambda_mode": mode,
            "leaves": ensemble.n_leaves,
        },
        None,
        wall,
        None,
        [args.out],
    )
    return EXIT_OK


def cmd_train_proxy(args: argparse.Namespace, argv: list[str]) -> int:
    start = time.perf_counter()
    game = CountingGame(_parse_game(args.game, args.n))
    index = IndexSpec("SII")  # only used by proportional sampling
    sampler = _sampler_config(args, index, game.n)
    drawn = sample(sampler, game.n)
    masks = [coalition.mask for coalition, _ in drawn]
    values = game.evaluate_many(masks)
    pairs = [(coalition, float(v)) for (coalition, _), v in zip(drawn, values)]
    config = replace(preset(args.preset), seed=args.seed)
    ensemble = fit_gbt(pairs, config)
    save_ensemble(ensemble, args.out)
    _write_manifest(
        args.out,
        "train-proxy",
        argv,
        {
            "game": args.game,
            "n": game.n,
            "sampler": args.sampler,
            "budget": args.budget,
            "preset": args.preset,
            "train_mse": ensemble.fit_info["train_mse"],
        },
        args.seed,
        time.perf_counter() - start,
        game.calls,
        [args.out],
    )
    return EXIT_OK


def cmd_estimate(args: argparse.Namespace, argv: list[str]) -> int:
    start = time.perf_counter()
    game = CountingGame(_parse_game(args.game, args.n))
    index = _parse_index(args)
    sampler = _sampler_config(args, index, game.n)
    config = PipelineConfig(
        index=index,
        sampler=sampler,
        proxy=_proxy_spec(args),
        adjust=args.adjust,
        target_order=args.order,
        seed=args.seed,
    )
    vector = estimate_interactions(game, config)
    _write_interactions(args.out, vector, with_provenance=True)
    adjusted = any(tag != "proxy" for tag in vector.provenance.values())
    _write_manifest(
        args.out,
        "estimate",
        argv,
        {
            "game": args.game,
            "n": game.n,
            "index": index.label(),
            "order": args.order,
            "proxy": args.proxy,
            "preset": args.preset if args.proxy == "tree" else None,
            "sampler": args.sampler,
            "budget": args.budget,
            "adjust": args.adjust,
            "adjusted": adjusted,
        },
        args.seed,
        time.perf_counter() - start,
        game.calls,
        [args.out],
    )
    return EXIT_OK


def cmd_benchmark(args: argparse.Namespace, argv: list[str]) -> int:
    start = time.perf_counter()
    game = CountingGame(_parse_game(args.game, args.n))
    index = _parse_index(args)
    budgets = [int(b) for b in args.budgets.split(",") if b]
    if not budgets:
        raise PreconditionError("--budgets must list at least one budget")
    args.budget = max(budgets)  # placeholder; the sweep sets it per cell
    sampler = _sampler_config(args, index, game.n)
    config = PipelineConfig(
        index=index,
        sampler=sampler,
        proxy=_proxy_spec(args),
        adjust=args.adjust,
        target_order=args.order,
    )
    name = f"{args.proxy}-{args.adjust}"
    rows = benchmark_sweep(
        game,
        [(name, config)],
        budgets,
        args.reps,
        base_seed=args.seed,
        threads=args.threads,
        cap=args.cap,
    )
    csv_path = args.out
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        fh.write("config,budget,rep,relative_mse\n")
        for row in rows:
            fh.write(
                f"{row.config_name},{row.budget},{row.repetition},"
                f"{row.relative_mse!r}\n"
            )
    summary_path = csv_path + ".summary.json"
    with open(summary_path, "w", encoding="utf-8") as fh:
        json.dump(summarize_sweep(rows), fh, indent=1, sort_keys=True)
        fh.write("\n")
    _write_manifest(
        csv_path,
        "benchmark",
        argv,
        {
            "game": args.game,
            "n": game.n,
            "index": index.label(),
            "order": args.order,
            "proxy": args.proxy,
            "budgets": budgets,
            "reps": args.reps,
            "adjust": args.adjust,
        },
        args.seed,
        time.perf_counter() - start,
        game.calls,
        [csv_path, summary_path],
    )
    return EXIT_OK


def cmd_gamma(args: argparse.Namespace, argv: list[str]) -> int:
    start = time.perf_counter()
    index = _parse_index(args)
    brute = gamma_brute(index, args.n, args.order, args.scheme, cap=args.cap)
    try:
        closed = gamma_closed(index, args.n, args.order, args.scheme)
        closed_text = repr(closed)
    except PreconditionError:
        closed_text = ""
    lines = ["index,scheme,n,order,brute,closed"]
    lines.append(
        f"{index.label()},{args.scheme},{args.n},{args.order},{brute!r},{closed_text}"
    )
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        _write_manifest(
            args.out,
            "gamma",
            argv,
            {
                "index": index.label(),
                "scheme": args.scheme,
                "n": args.n,
                "order": args.order,
            },
            None,
            time.perf_counter() - start,
            None,
            [args.out],
        )
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_replay(args: argparse.Namespace, argv: list[str]) -> int:
    with open(args.manifest, "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    recorded = manifest.get("argv")
    if not recorded:
        raise PreconditionError(f"{args.manifest} records no argv to replay")
    return main(recorded)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coalint",
        description="Interaction indices for cooperative games.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_exact = sub.add_parser("exact", help="brute-force exact interactions")
    p_exact.add_argument("--game", required=True, help="kind:detail game spec")
    p_exact.add_argument("--n", type=int, default=None)
    _add_index_flags(p_exact)
    p_exact.add_argument("--targets", default=None, help="file of 0/1 subset strings")
    p_exact.add_argument("--cap", type=int, default=20)
    p_exact.add_argument("--out", required=True)
    p_exact.set_defaults(fn=cmd_exact)

    p_ext = sub.add_parser("tree-extract", help="exact extraction from a tree model")
    p_ext.add_argument("--model", required=True)
    _add_index_flags(p_ext)
    p_ext.add_argument("--targets", default=None)
    p_ext.add_argument("--general-lambda", action="store_true")
    p_ext.add_argument("--timing", action="store_true")
    p_ext.add_argument("--out", required=True)
    p_ext.set_defaults(fn=cmd_tree_extract)

    p_train = sub.add_parser("train-proxy", help="fit a boosted-tree proxy to a game")
    p_train.add_argument("--game", required=True)
    p_train.add_argument("--n", type=int, default=None)
    _add_sampler_flags(p_train)
    p_train.add_argument("--preset", default="default")
    p_train.add_argument("--seed", type=int, default=0)
    p_train.add_argument("--out", required=True)
    p_train.set_defaults(fn=cmd_train_proxy)

    p_est = sub.add_parser("estimate", help="proxy + situational correction")
    p_est.add_argument("--game", required=True)
    p_est.add_argument("--n", type=int, default=None)
    _add_index_flags(p_est)
    _add_sampler_flags(p_est)
    _add_proxy_flags(p_est)
    p_est.add_argument("--adjust", default="auto", help="auto|on|off")
    p_est.add_argument("--seed", type=int, default=0)
    p_est.add_argument("--threads", type=int, default=1)
    p_est.add_argument("--out", required=True)
    p_est.set_defaults(fn=cmd_estimate)

    p_bench = sub.add_parser("benchmark", help="budget sweep against exact truth")
    p_bench.add_argument("--game", required=True)
    p_bench.add_argument("--n", type=int, default=None)
    _add_index_flags(p_bench)
    p_bench.add_argument("--sampler", default="leverage")
    p_bench.add_argument("--with-replacement", action="store_true")
    p_bench.add_argument("--budgets", required=True, help="comma-separated budgets")
    _add_proxy_flags(p_bench)
    p_bench.add_argument("--adjust", default="auto")
    p_bench.add_argument("--reps", type=int, default=1)
    p_bench.add_argument("--seed", type=int, default=0)
    p_bench.add_argument("--threads", type=int, default=1)
    p_bench.add_argument("--cap", type=int, default=20)
    p_bench.add_argument("--out", required=True)
    p_bench.set_defaults(fn=cmd_benchmark)

    p_gamma = sub.add_parser("gamma", help="per-sample variance constants")
    _add_index_flags(p_gamma)
    p_gamma.add_argument("--scheme", default="leverage")
    p_gamma.add_argument("--n", type=int, required=True)
    p_gamma.add_argument("--cap", type=int, default=20)
    p_gamma.add_argument("--out", default=None)
    p_gamma.set_defaults(fn=cmd_gamma)

    p_replay = sub.add_parser("replay", help="re-run a recorded manifest")
    p_replay.add_argument("manifest")
    p_replay.set_defaults(fn=cmd_replay)

    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args, argv)
    except (CapacityError, PreconditionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except (GameFormatError, ModelFormatError, MissingCoalitionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (OSError, json.JSONDecodeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
