"""Command-line entry point.

Subcommands: play (one local game), tournament (seeded round of sampled
games with report files), serve (TCP match server), replay (re-simulate a
transcript), gen-matrix (persist a random payoff tensor), report
(regenerate reports from a records file).  Every subcommand is
deterministic given --seed; exit codes are 0 on success, 2 on usage
errors, 1 on runtime errors.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import os
import sys
from pathlib import Path
from typing import Sequence

from colosseum.core import EnvConfig, GameError, make_env
from colosseum.rng import substream
from colosseum.tournament import (
    GameRecord,
    PairwiseTable,
    TournamentConfig,
    brace_list,
    local_match_runner,
    ranked_pairs,
    ranking_distribution,
    run_tournament,
)
from colosseum.transcript import TranscriptWriter, render_state, replay

ADDR_ENV_VAR = "COLOSSEUM_ADDR"
DEFAULT_ADDR = "127.0.0.1:7648"


def parse_params(pairs: Sequence[str]) -> dict:
    params = {}
    for pair in pairs:
        if "=" not in pair:
            raise ValueError(f"--param expects KEY=VALUE, got {pair!r}")
        key, value = pair.split("=", 1)
        try:
            params[key] = json.loads(value)
        except json.JSONDecodeError:
            params[key] = value
    return params


def parse_addr(text: str) -> tuple[str, int]:
    host, sep, port = text.rpartition(":")
    if not sep:
        raise ValueError(f"address must be host:port, got {text!r}")
    return host, int(port)


# -- report files ------------------------------------------------------------

def write_records(path: Path, records: Sequence[GameRecord]) -> None:
    with path.open("w") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_json(), sort_keys=True) + "\n")


def read_records(path: Path) -> list[GameRecord]:
    records = []
    with path.open() as fh:
        for line in fh:
            if line.strip():
                records.append(GameRecord.from_json(json.loads(line)))
    return records


def write_distribution(path: Path, rows: Sequence[tuple[str, list[int]]],
                       seats: int) -> None:
    with path.open("w") as fh:
        fh.write("agent\t" + "\t".join(f"rank{r}" for r in range(1, seats + 1)) + "\n")
        for agent, counts in rows:
            fh.write(agent + "\t" + "\t".join(str(c) for c in counts) + "\n")


def read_distribution(path: Path) -> list[tuple[str, list[int]]]:
    rows = []
    with path.open() as fh:
        next(fh)  # header
        for line in fh:
            parts = line.rstrip("\n").split("\t")
            rows.append((parts[0], [int(v) for v in parts[1:]]))
    return rows


def write_order(path: Path, order: Sequence[str]) -> None:
    path.write_text("".join(a + "\n" for a in order))


def read_order(path: Path) -> list[str]:
    return [line for line in path.read_text().splitlines() if line]


# -- subcommands -------------------------------------------------------------

def cmd_play(args: argparse.Namespace) -> int:
    agents = args.agents.split(",")
    config = EnvConfig(args.env, len(agents),
                       int(substream(args.seed, "env").integers(1 << 62)),
                       parse_params(args.param))
    from colosseum.agents import resolve_policy

    policies = [resolve_policy(name) for name in agents]
    env = make_env(config)
    rng = substream(args.seed, "agents")
    writer = None
    log = None
    if args.transcript:
        log = open(args.transcript, "w")
        writer = TranscriptWriter(log)
        writer.start("local", config, agents)
    state = env.new_game()
    turn = 0
    while not state.terminal:
        actors = sorted(env.current_players(state))
        actions = {}
        for p in actors:
            legal = env.legal_actions(state, p)
            actions[p] = policies[p].act(env.observe(state, p), legal, rng)
        if writer is not None:
            writer.step(turn, {p: env.encode_action(a) for p, a in actions.items()})
        state = env.step(state, actions).next_state
        turn += 1
    record = env.rankings(state)
    if writer is not None:
        writer.result(record)
        log.close()
    for p, name in enumerate(agents):
        print(f"seat {p} {name}: rank {record.ranks[p]} "
              f"reward {record.total_reward[p]:g}")
    return 0


def cmd_tournament(args: argparse.Namespace) -> int:
    roster = tuple(args.roster.split(","))
    env_config = EnvConfig(args.env, args.seats, 0, parse_params(args.param))
    make_env(env_config)  # validate now, before any games run
    from colosseum.agents import resolve_policy

    for name in roster:
        resolve_policy(name)
    config = TournamentConfig(roster, games=args.games, seats=args.seats,
                              seed=args.seed, env=env_config)
    result = run_tournament(config, local_match_runner(env_config))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(
        json.dumps(config.to_json(), sort_keys=True) + "\n"
    )
    write_records(out / "records.ndjson", result.records)
    write_distribution(out / "distribution.tsv", result.distribution, args.seats)
    write_order(out / "ranked_pairs.txt", result.order)
    print(brace_list(result.order))
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    from colosseum.server import MatchServer, ServerConfig

    host, port = parse_addr(args.addr)
    menu = {}
    for spec in args.env:
        name, _, rest = spec.partition(":")
        players, _, params = rest.partition(":")
        menu[name] = EnvConfig(name, int(players),
                               params=parse_params(params.split(",")) if params else {})
        make_env(menu[name])  # validate
    config = ServerConfig(env_menu=menu, host=host, port=port,
                          timeout=args.timeout, seed=args.seed)

    async def main() -> None:
        server = MatchServer(config)
        await server.start()
        bound_host, bound_port = server.address
        print(f"listening on {bound_host}:{bound_port}", flush=True)
        try:
            await asyncio.Event().wait()
        finally:
            await server.stop()

    try:
        asyncio.run(main())
    except KeyboardInterrupt:
        pass
    return 0


def cmd_replay(args: argparse.Namespace) -> int:
    def on_state(env, state, turn):
        if args.render:
            label = "initial" if turn < 0 else f"turn {turn}"
            print(f"-- {label} --")
            for row in render_state(env, state):
                print(row)

    with open(args.transcript) as fh:
        record = replay(fh, on_state=on_state)
    for p in sorted(record.ranks):
        print(f"seat {p}: rank {record.ranks[p]} reward {record.total_reward[p]:g}")
    return 0


def cmd_gen_matrix(args: argparse.Namespace) -> int:
    from colosseum.envs.matrix import random_payoff, save_tensor

    shape = tuple(int(s) for s in args.shape.split(","))
    tensor = random_payoff(shape, args.seed, args.zero_sum)
    with open(args.out, "w") as fh:
        save_tensor(tensor, fh, seed=args.seed)
    print(f"wrote {args.out}: shape {shape}, zero_sum={args.zero_sum}")
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    records = read_records(Path(args.records))
    roster = sorted({a for rec in records for a in rec.seating})
    seats = args.seats or (len(records[0].seating) if records else 0)
    if not records:
        print("{}")
        return 0
    table = PairwiseTable(roster)
    for rec in records:
        table.add_game(rec.seating, rec.ranks)
    distribution = ranking_distribution(records, roster, seats)
    order = ranked_pairs(table, {a: row[0] for a, row in distribution})
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_distribution(out / "distribution.tsv", distribution, seats)
        write_order(out / "ranked_pairs.txt", order)
    print(brace_list(order))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="colosseum",
        description="n-player game environments, tournaments and match serving",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    play = sub.add_parser("play", help="play one local game")
    play.add_argument("--env", required=True)
    play.add_argument("--agents", required=True,
                      help="comma-separated agent names, one per seat")
    play.add_argument("--seed", type=int, default=0)
    play.add_argument("--param", action="append", default=[],
                      metavar="KEY=VALUE", help="environment parameter")
    play.add_argument("--transcript", help="write a transcript file")
    play.set_defaults(fn=cmd_play)

    tour = sub.add_parser("tournament", help="run a seeded local tournament")
    tour.add_argument("--env", required=True)
    tour.add_argument("--roster", required=True,
                      help="comma-separated agent names to sample seatings from")
    tour.add_argument("--games", type=int, default=25000)
    tour.add_argument("--seats", type=int, default=4)
    tour.add_argument("--seed", type=int, default=0)
    tour.add_argument("--param", action="append", default=[], metavar="KEY=VALUE")
    tour.add_argument("--out", required=True, help="report directory")
    tour.set_defaults(fn=cmd_tournament)

    serve = sub.add_parser("serve", help="run the TCP match server")
    serve.add_argument("--addr",
                       default=os.environ.get(ADDR_ENV_VAR, DEFAULT_ADDR),
                       help=f"host:port (default ${ADDR_ENV_VAR} or {DEFAULT_ADDR})")
    serve.add_argument("--env", action="append", required=True,
                       metavar="NAME:PLAYERS[:KEY=VALUE,...]",
                       help="environment menu entry (repeatable)")
    serve.add_argument("--timeout", type=float, default=30.0)
    serve.add_argument("--seed", type=int, default=0)
    serve.set_defaults(fn=cmd_serve)

    rep = sub.add_parser("replay", help="re-simulate a transcript")
    rep.add_argument("transcript")
    rep.add_argument("--render", action="store_true",
                     help="print a board frame after every step")
    rep.set_defaults(fn=cmd_replay)

    gen = sub.add_parser("gen-matrix", help="generate a random payoff tensor")
    gen.add_argument("--shape", required=True, help="e.g. 3,3 or 2,3,4")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--zero-sum", action="store_true")
    gen.add_argument("--out", required=True)
    gen.set_defaults(fn=cmd_gen_matrix)

    report = sub.add_parser("report", help="rebuild reports from a records file")
    report.add_argument("--records", required=True)
    report.add_argument("--seats", type=int)
    report.add_argument("--out")
    report.set_defaults(fn=cmd_report)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (GameError, ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
