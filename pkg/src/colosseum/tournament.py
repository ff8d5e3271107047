"""Tournament execution and rank aggregation.

Each game seats a uniformly sampled subset of the roster (no agent twice),
records the tie-rounded ranks, and feeds a pairwise win table.  Reports:
the ranking distribution (finish counts per rank, sorted by firsts) and a
ranked-pairs total order, built by locking pairwise victories in margin
order while skipping any edge that would close a cycle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Mapping, Sequence

import numpy as np

from colosseum.core import EnvConfig, RankRecord, make_env, tie_rounded_ranks
from colosseum.rng import substream


def apply_tie_rounding(blocks: Sequence[Iterable[Any]]) -> dict[Any, int]:
    """Rank an ordered partition, ties rounded to the block's worst spot."""
    return tie_rounded_ranks(blocks)


@dataclass(frozen=True)
class TournamentConfig:
    roster: tuple[str, ...]
    games: int = 25000
    seats: int = 4
    seed: int = 0
    env: EnvConfig | None = None

    def __post_init__(self):
        if len(self.roster) < self.seats:
            raise ValueError("roster smaller than the table")
        if len(set(self.roster)) != len(self.roster):
            raise ValueError("roster names must be unique")

    def to_json(self) -> dict:
        return {
            "schema": "tournament-config",
            "v": 1,
            "roster": list(self.roster),
            "games": self.games,
            "seats": self.seats,
            "seed": self.seed,
            "env": None if self.env is None else self.env.to_json(),
        }

    @staticmethod
    def from_json(obj: Mapping[str, Any]) -> "TournamentConfig":
        return TournamentConfig(
            roster=tuple(obj["roster"]),
            games=int(obj["games"]),
            seats=int(obj["seats"]),
            seed=int(obj["seed"]),
            env=None if obj.get("env") is None else EnvConfig.from_json(obj["env"]),
        )


@dataclass(frozen=True)
class GameRecord:
    """One finished game: who sat where and how the seats finished."""

    index: int
    seating: tuple[str, ...]  # agent id per seat
    ranks: tuple[int, ...]  # rank per seat
    total_reward: tuple[float, ...]

    def to_json(self) -> dict:
        return {
            "game": self.index,
            "seating": list(self.seating),
            "ranks": list(self.ranks),
            "total_reward": list(self.total_reward),
        }

    @staticmethod
    def from_json(obj: Mapping[str, Any]) -> "GameRecord":
        return GameRecord(
            index=int(obj["game"]),
            seating=tuple(obj["seating"]),
            ranks=tuple(obj["ranks"]),
            total_reward=tuple(obj["total_reward"]),
        )


def sample_seating(roster: Sequence[str], seats: int, rng: np.random.Generator) -> list[str]:
    """Uniform seats-subset of the roster in uniform random order."""
    if len(roster) < seats:
        raise ValueError("roster smaller than the table")
    idx = rng.choice(len(roster), size=seats, replace=False)
    return [roster[int(i)] for i in idx]


class PairwiseTable:
    """Head-to-head counts: meetings and strict wins per ordered pair."""

    def __init__(self, roster: Sequence[str]):
        self.roster = tuple(roster)
        self._index = {a: i for i, a in enumerate(self.roster)}
        n = len(self.roster)
        self.wins = np.zeros((n, n), np.int64)
        self.meetings = np.zeros((n, n), np.int64)

    def add_game(self, seating: Sequence[str], ranks: Sequence[int]) -> None:
        for i in range(len(seating)):
            for j in range(i + 1, len(seating)):
                a, b = self._index[seating[i]], self._index[seating[j]]
                self.meetings[a, b] += 1
                self.meetings[b, a] += 1
                if ranks[i] < ranks[j]:
                    self.wins[a, b] += 1
                elif ranks[j] < ranks[i]:
                    self.wins[b, a] += 1

    def margin(self, a: str, b: str) -> float | None:
        """Pairwise win fraction of a over b; None if the pair never met."""
        i, j = self._index[a], self._index[b]
        if self.meetings[i, j] == 0:
            return None
        return self.wins[i, j] / self.meetings[i, j]


def ranking_distribution(records: Iterable[GameRecord], roster: Sequence[str],
                         seats: int) -> list[tuple[str, list[int]]]:
    """Finish counts per rank for every roster agent, sorted by first-place
    count (descending), then by agent id; absent agents keep all-zero rows."""
    counts = {a: [0] * seats for a in roster}
    for rec in records:
        for agent, rank in zip(rec.seating, rec.ranks):
            counts[agent][rank - 1] += 1
    order = sorted(roster, key=lambda a: (-counts[a][0], a))
    return [(a, counts[a]) for a in order]


def ranked_pairs(table: PairwiseTable,
                 first_place: Mapping[str, int] | None = None) -> list[str]:
    """Total order of agents by locked pairwise victories.

    Ordered pairs with win fraction above 1/2 are locked from the largest
    margin down (ties broken by more meetings, then pair id), skipping any
    edge that would create a directed cycle; the result is the topological
    order of the locked graph.  Pairs that never met or split evenly add no
    edge; ambiguity among simultaneous sources is resolved by first-place
    count (descending) and then agent id.
    """
    roster = table.roster
    firsts = dict(first_place or {})
    candidates = []
    for a in roster:
        for b in roster:
            if a == b:
                continue
            m = table.margin(a, b)
            if m is not None and m > 0.5:
                meetings = table.meetings[table._index[a], table._index[b]]
                candidates.append((-m, -meetings, a, b))
    candidates.sort()

    locked: dict[str, set[str]] = {a: set() for a in roster}

    def reaches(src: str, dst: str) -> bool:
        stack, seen = [src], set()
        while stack:
            cur = stack.pop()
            if cur == dst:
                return True
            for nxt in locked[cur]:
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        return False

    for _, _, a, b in candidates:
        if reaches(b, a):
            continue  # would close a cycle
        locked[a].add(b)

    indeg = {a: 0 for a in roster}
    for a in roster:
        for b in locked[a]:
            indeg[b] += 1
    order = []
    remaining = set(roster)
    while remaining:
        sources = [a for a in remaining if indeg[a] == 0]
        sources.sort(key=lambda a: (-firsts.get(a, 0), a))
        src = sources[0]
        order.append(src)
        remaining.discard(src)
        for b in locked[src]:
            indeg[b] -= 1
    return order


MatchRunner = Callable[[Sequence[str], int, np.random.Generator], RankRecord]


@dataclass
class TournamentResult:
    records: list[GameRecord]
    table: PairwiseTable
    distribution: list[tuple[str, list[int]]]
    order: list[str]


def run_tournament(config: TournamentConfig, match_runner: MatchRunner) -> TournamentResult:
    """Play the configured number of sampled games and aggregate reports.

    Fully reproducible from the seed when the match runner is deterministic;
    match failures are re-raised with the failing game index attached.
    """
    seat_rng = substream(config.seed, "seating")
    records: list[GameRecord] = []
    table = PairwiseTable(config.roster)
    for g in range(config.games):
        seating = sample_seating(config.roster, config.seats, seat_rng)
        match_rng = substream(config.seed, "match", g)
        try:
            record = match_runner(seating, g, match_rng)
        except Exception as exc:
            raise RuntimeError(f"match {g} failed (seating {seating})") from exc
        ranks = tuple(record.ranks[s] for s in range(config.seats))
        rewards = tuple(record.total_reward[s] for s in range(config.seats))
        rec = GameRecord(g, tuple(seating), ranks, rewards)
        records.append(rec)
        table.add_game(seating, ranks)
    distribution = ranking_distribution(records, config.roster, config.seats)
    firsts = {a: row[0] for a, row in distribution}
    order = ranked_pairs(table, firsts)
    return TournamentResult(records, table, distribution, order)


def local_match_runner(env_config: EnvConfig) -> MatchRunner:
    """Match runner that resolves local agent names and plays in-process."""
    from colosseum.agents import resolve_policy

    def run(seating: Sequence[str], game_index: int, rng: np.random.Generator) -> RankRecord:
        config = EnvConfig(
            env_name=env_config.env_name,
            player_count=len(seating),
            rng_seed=int(rng.integers(1 << 62)),
            params=env_config.params,
        )
        env = make_env(config)
        policies = [resolve_policy(name) for name in seating]
        state = env.new_game()
        terminal = state.terminal if hasattr(state, "terminal") else False
        while not terminal:
            actors = env.current_players(state)
            actions = {}
            for p in sorted(actors):
                legal = env.legal_actions(state, p)
                actions[p] = policies[p].act(env.observe(state, p), legal, rng)
            result = env.step(state, actions)
            state = result.next_state
            terminal = result.terminal
        return env.rankings(state)

    return run


def brace_list(order: Sequence[str]) -> str:
    """The ranked-pairs ordering in brace-list form: "{a, b, c}"."""
    return "{" + ", ".join(order) + "}"
