"""Command-line entry points: pretrain, tournament, report.

Exit codes: 0 success, 2 invalid flags, 3 I/O failure, 4 missing checkpoint,
5 empty or corrupt logs. The default output root comes from MAULAB_OUT.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from maulab.config import ConfigError
from maulab.checkpoint import CheckpointError
from maulab.harness import SUPPLIES, pretrain, pretrain_manifest, tournament
from maulab.metrics import (
    AUCTION_FIELDS,
    AuctionLogRow,
    BIDDER_FIELDS,
    EpisodeLogRow,
    emit_svg,
    format_table,
    read_csv,
    rolling_mean,
    summary_tables,
    write_csv,
)

LEARNERS = ("ppo", "a2c", "dqn", "dpn", "ql", "vpg")

CONFIG_KEYS = {"algo", "auction", "items", "episodes", "seed", "grid_levels", "out", "hyperparameters"}


def _default_out() -> str:
    return os.environ.get("MAULAB_OUT", "runs")


def _load_config_file(path) -> dict:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read config file {path}: {e}") from e
    unknown = set(data) - CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return data


def _merged(args, key, file_cfg, default=None):
    v = getattr(args, key, None)
    if v is not None:
        return v
    if file_cfg and key in file_cfg:
        return file_cfg[key]
    return default


def cmd_pretrain(args) -> int:
    file_cfg = _load_config_file(args.config) if args.config else {}
    out = Path(_merged(args, "out", file_cfg, _default_out()))
    episodes = int(_merged(args, "episodes", file_cfg, 100_000))
    seed = int(_merged(args, "seed", file_cfg, 0))
    grid_levels = int(_merged(args, "grid_levels", file_cfg, 21))
    hyper = file_cfg.get("hyperparameters", {})

    if args.all:
        sessions = pretrain_manifest(episodes, seed, out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "manifest.json").write_text(
            json.dumps(sessions, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        for s in sessions:
            ckpt = pretrain(
                s["algo"], s["rule"], s["K"], s["episodes"], s["seed"], out,
                grid_levels=grid_levels, overrides=hyper.get(s["algo"], {}),
            )
            print(ckpt)
        return 0

    algo = _merged(args, "algo", file_cfg)
    auction = _merged(args, "auction", file_cfg)
    items = _merged(args, "items", file_cfg)
    if algo is None or auction is None or items is None:
        print("pretrain requires --algo, --auction and --items (or --all)", file=sys.stderr)
        return 2
    ckpt = pretrain(
        algo, auction, int(items), episodes, seed, out,
        grid_levels=grid_levels, overrides=hyper.get(algo, {}),
    )
    print(ckpt)
    return 0


def cmd_tournament(args) -> int:
    file_cfg = _load_config_file(args.config) if args.config else {}
    out = Path(_merged(args, "out", file_cfg, _default_out()))
    episodes = int(_merged(args, "episodes", file_cfg, 100_000))
    seed = int(_merged(args, "seed", file_cfg, 0))
    grid_levels = int(_merged(args, "grid_levels", file_cfg, 21))
    auction = _merged(args, "auction", file_cfg)
    items = _merged(args, "items", file_cfg)
    if auction is None or items is None:
        print("tournament requires --auction and --items", file=sys.stderr)
        return 2

    checkpoints: dict[str, str] = {}
    if args.ckpt_dir:
        for algo in LEARNERS:
            p = Path(args.ckpt_dir) / f"{algo}.ckpt"
            if p.is_file():
                checkpoints[algo] = str(p)
    for spec in args.ckpt or []:
        if "=" not in spec:
            print(f"--ckpt expects ALGO=PATH, got {spec!r}", file=sys.stderr)
            return 2
        algo, _, path = spec.partition("=")
        if algo not in LEARNERS:
            print(f"unknown algorithm {algo!r} in --ckpt", file=sys.stderr)
            return 2
        checkpoints[algo] = path

    needed = ("ppo",) if args.all_ppo else LEARNERS
    for algo in needed:
        if algo not in checkpoints:
            print(f"missing checkpoint for {algo}", file=sys.stderr)
            return 4
        if not Path(checkpoints[algo]).is_file():
            print(f"missing checkpoint file: {checkpoints[algo]}", file=sys.stderr)
            return 4

    run_dir = tournament(
        auction, int(items), checkpoints, episodes, seed, out,
        grid_levels=grid_levels, all_ppo=args.all_ppo, freeze=args.freeze,
    )
    print(run_dir)
    return 0


def _parse_episode_rows(raw) -> list[EpisodeLogRow]:
    return [
        EpisodeLogRow(
            episode=int(r["episode"]),
            agent_id=int(r["agent_id"]),
            algo=r["algo"],
            value=float(r["value"]),
            bid1=float(r["bid1"]),
            bid2=float(r["bid2"]),
            units_won=int(r["units_won"]),
            payment_total=float(r["payment_total"]),
            payoff_total=float(r["payoff_total"]),
            reward_total=float(r["reward_total"]),
            learning_ratio1=float(r["learning_ratio1"]),
            learning_ratio2=float(r["learning_ratio2"]),
            bid_ratio1=float(r["bid_ratio1"]),
            bid_ratio2=float(r["bid_ratio2"]),
        )
        for r in raw
    ]


def _parse_auction_rows(raw) -> list[AuctionLogRow]:
    return [
        AuctionLogRow(
            episode=int(r["episode"]),
            rule=r["rule"],
            K=int(r["K"]),
            revenue=float(r["revenue"]),
            efficiency_ratio=float(r["efficiency_ratio"]),
            efficiency_gap=float(r["efficiency_gap"]),
        )
        for r in raw
    ]


def cmd_report(args) -> int:
    run_dir = Path(args.run)
    out = Path(args.out) if args.out else run_dir
    ep_path = run_dir / "episodes.csv"
    au_path = run_dir / "auctions.csv"
    if not ep_path.is_file() or not au_path.is_file():
        print(f"no logs found in {run_dir}", file=sys.stderr)
        return 5
    try:
        episode_rows = _parse_episode_rows(read_csv(ep_path))
        auction_rows = _parse_auction_rows(read_csv(au_path))
    except (KeyError, ValueError) as e:
        print(f"corrupt logs in {run_dir}: {e}", file=sys.stderr)
        return 5
    if not episode_rows or not auction_rows:
        print(f"empty logs in {run_dir}", file=sys.stderr)
        return 5
    n_episodes = max(r.episode for r in auction_rows) + 1
    snapshot = run_dir / "config.json"
    if snapshot.is_file():
        declared = json.loads(snapshot.read_text(encoding="utf-8"))["scenario"]["episodes"]
        if n_episodes < declared:
            print(
                f"warning: logs cover {n_episodes} of {declared} episodes; reporting on what is available",
                file=sys.stderr,
            )

    out.mkdir(parents=True, exist_ok=True)
    bidder_table, auction_table = summary_tables(episode_rows, auction_rows)
    write_csv(bidder_table, out / "table_bidders.csv", BIDDER_FIELDS)
    write_csv(auction_table, out / "table_auctions.csv", AUCTION_FIELDS)
    print(format_table(bidder_table, BIDDER_FIELDS))
    print(format_table(auction_table, AUCTION_FIELDS))

    window = args.window
    by_algo: dict[str, dict[str, list[float]]] = {}
    for r in episode_rows:
        key = f"{r.algo} (id {r.agent_id})"
        d = by_algo.setdefault(key, {"unit 1": [], "unit 2": []})
        d["unit 1"].append(r.learning_ratio1)
        d["unit 2"].append(r.learning_ratio2)
    panes = [
        (label, {k: rolling_mean(v, window) for k, v in series.items()})
        for label, series in sorted(by_algo.items())
    ]
    emit_svg(panes, out / "fig_learning_ratio.svg")
    emit_svg(
        [("revenue", {"rolling mean": rolling_mean([r.revenue for r in auction_rows], window)})],
        out / "fig_revenue.svg",
    )
    emit_svg(
        [
            (
                "efficiency",
                {"rolling mean": rolling_mean([r.efficiency_ratio for r in auction_rows], window)},
            )
        ],
        out / "fig_efficiency.svg",
    )
    for name in (
        "table_bidders.csv",
        "table_auctions.csv",
        "fig_learning_ratio.svg",
        "fig_revenue.svg",
        "fig_efficiency.svg",
    ):
        print(out / name)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="maulab", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    pre = sub.add_parser("pretrain", help="train one learner against five random bidders")
    pre.add_argument("--algo", choices=LEARNERS)
    pre.add_argument("--auction", choices=("dp", "gsp", "up"))
    pre.add_argument("--items", type=int, choices=SUPPLIES)
    pre.add_argument("--episodes", type=int)
    pre.add_argument("--seed", type=int)
    pre.add_argument("--grid-levels", dest="grid_levels", type=int)
    pre.add_argument("--out")
    pre.add_argument("--config", help="JSON experiment config; flags override")
    pre.add_argument("--all", action="store_true", help="run the full 54-session grid")
    pre.set_defaults(func=cmd_pretrain)

    tour = sub.add_parser("tournament", help="run the six-agent head-to-head roster")
    tour.add_argument("--auction", choices=("dp", "gsp", "up"))
    tour.add_argument("--items", type=int, choices=SUPPLIES)
    tour.add_argument("--episodes", type=int)
    tour.add_argument("--seed", type=int)
    tour.add_argument("--grid-levels", dest="grid_levels", type=int)
    tour.add_argument("--out")
    tour.add_argument("--config")
    tour.add_argument("--ckpt", action="append", metavar="ALGO=PATH")
    tour.add_argument("--ckpt-dir", help="directory holding <algo>.ckpt files")
    tour.add_argument("--all-ppo", action="store_true", help="six PPO copies with distinct seeds")
    tour.add_argument("--freeze", action="store_true", help="disable learning and exploration")
    tour.set_defaults(func=cmd_tournament)

    rep = sub.add_parser("report", help="summary tables and figures from a run directory")
    rep.add_argument("--run", required=True, help="run directory with episodes.csv/auctions.csv")
    rep.add_argument("--out", help="output directory (default: run directory)")
    rep.add_argument("--window", type=int, default=1000)
    rep.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return 4
    except CheckpointError as e:
        print(f"error: {e}", file=sys.stderr)
        return 5
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
