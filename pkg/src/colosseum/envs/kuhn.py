"""N-player Kuhn poker.

Deck of N+1 cards labeled 0..N; each player antes one chip, is dealt one
card, and one card is burned.  A single betting round starting at seat 0:
with no outstanding bet a player may check or bet one chip; facing a bet,
each other non-folded player responds exactly once, in seat order, with
call or fold (no re-raises).  If everyone checked, or the bet has been
answered by all, the highest card among the participating players takes the
pot (a bettor whose opponents all fold takes it without a showdown).
Interior rewards are 0; the terminal reward is each player's net change in
chips.

The module also carries the evaluation oracles: exact expected values by
full enumeration over ordered deals, exact best response by backward
induction over one player's information sets, and a compiled Monte Carlo
simulator used to cross-check the enumerator.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace
from typing import Any, Callable, Iterable, Mapping

import numpy as np

from colosseum._kernels import maybe_jit
from colosseum.core import (
    ConfigError,
    EnvConfig,
    Environment,
    IllegalMoveError,
    PlayerId,
    RankRecord,
    StateError,
    StepResult,
    register,
    tie_rounded_ranks,
)
from colosseum.rng import substream

ACTIONS_OPEN = ("check", "bet")
ACTIONS_FACING = ("call", "fold")
_LETTER = {"check": "k", "bet": "b", "call": "c", "fold": "f"}
_NAME = {v: k for k, v in _LETTER.items()}

# A profile maps (player, card, visible history) to a distribution over the
# legal action names at that point.
Profile = Mapping[tuple[int, int, str], Mapping[str, float]]


# -- betting sequence logic -------------------------------------------------

def bettor_of(history: str) -> int | None:
    """Seat of the bettor, or None if nobody has bet.

    The bettor's seat equals the number of checks before the bet, since the
    round starts at seat 0 and proceeds in seat order.
    """
    i = history.find("b")
    return None if i < 0 else i


def history_terminal(history: str, n: int) -> bool:
    b = bettor_of(history)
    if b is None:
        return len(history) == n
    return len(history) - b - 1 == n - 1


def history_to_act(history: str, n: int) -> int:
    if history_terminal(history, n):
        raise StateError("betting round is over")
    b = bettor_of(history)
    if b is None:
        return len(history)
    responses = len(history) - b - 1
    return (b + 1 + responses) % n


def legal_action_names(history: str, n: int) -> tuple[str, ...]:
    if history_terminal(history, n):
        raise StateError("betting round is over")
    return ACTIONS_OPEN if bettor_of(history) is None else ACTIONS_FACING


def contributions(history: str, n: int) -> list[int]:
    """Chips contributed per seat (ante plus bet/call)."""
    contrib = [1] * n
    b = bettor_of(history)
    if b is not None:
        contrib[b] += 1
        for k, ch in enumerate(history[b + 1:]):
            if ch == "c":
                contrib[(b + 1 + k) % n] += 1
    return contrib


def participants(history: str, n: int) -> list[int]:
    """Seats eligible for the pot at showdown."""
    b = bettor_of(history)
    if b is None:
        return list(range(n))
    part = [b]
    for k, ch in enumerate(history[b + 1:]):
        if ch == "c":
            part.append((b + 1 + k) % n)
    return sorted(part)


def folded_seats(history: str, n: int) -> set[int]:
    b = bettor_of(history)
    if b is None:
        return set()
    return {(b + 1 + k) % n for k, ch in enumerate(history[b + 1:]) if ch == "f"}


def terminal_payoffs(history: str, cards: tuple[int, ...]) -> list[float]:
    """Net chip change per seat at a terminal betting sequence."""
    n = len(cards)
    if not history_terminal(history, n):
        raise StateError("betting round is not over")
    contrib = contributions(history, n)
    pot = sum(contrib)
    part = participants(history, n)
    winner = max(part, key=lambda p: cards[p])
    return [pot * (p == winner) - contrib[p] for p in range(n)]


def all_histories(n: int) -> list[str]:
    """Every betting sequence, decision points and terminals, in BFS order."""
    out, frontier = [""], [""]
    while frontier:
        nxt = []
        for h in frontier:
            if history_terminal(h, n):
                continue
            for name in legal_action_names(h, n):
                child = h + _LETTER[name]
                out.append(child)
                nxt.append(child)
        frontier = nxt
    return out


def decision_points(n: int) -> list[tuple[int, str]]:
    """(acting player, history) pairs for every non-terminal sequence."""
    return [
        (history_to_act(h, n), h)
        for h in all_histories(n)
        if not history_terminal(h, n)
    ]


# -- environment ------------------------------------------------------------

@dataclass(frozen=True)
class KuhnState:
    n_players: int
    cards: tuple[int, ...]
    undealt: int
    history: str
    total_reward: tuple[float, ...]

    @property
    def terminal(self) -> bool:
        return history_terminal(self.history, self.n_players)

    @property
    def to_act(self) -> int:
        return history_to_act(self.history, self.n_players)

    @property
    def bettor(self) -> int | None:
        return bettor_of(self.history)

    @property
    def bets(self) -> tuple[int, ...]:
        return tuple(contributions(self.history, self.n_players))

    @property
    def pot(self) -> int:
        return sum(self.bets)

    @property
    def folded(self) -> tuple[bool, ...]:
        folded = folded_seats(self.history, self.n_players)
        return tuple(p in folded for p in range(self.n_players))


@dataclass(frozen=True)
class KuhnObservation:
    """One seat's view: own card and the public betting information only."""

    player: PlayerId
    card: int
    history: str
    pot: int
    bets: tuple[int, ...]

    def to_json(self) -> dict:
        return {
            "schema": "kuhn-obs",
            "v": 1,
            "player": self.player,
            "card": self.card,
            "history": self.history,
            "pot": self.pot,
            "bets": list(self.bets),
        }


@register
class KuhnPoker(Environment):
    name = "kuhn"

    def __init__(self, config: EnvConfig):
        super().__init__(config)
        if config.player_count < 2:
            raise ConfigError("kuhn needs at least 2 players")

    def new_game(self) -> KuhnState:
        deal = substream(self.config.rng_seed, "kuhn-deal").permutation(self.n_players + 1)
        return KuhnState(
            n_players=self.n_players,
            cards=tuple(int(c) for c in deal[: self.n_players]),
            undealt=int(deal[self.n_players]),
            history="",
            total_reward=(0.0,) * self.n_players,
        )

    def current_players(self, state: KuhnState) -> frozenset[PlayerId]:
        if state.terminal:
            raise StateError("terminal state has no players to act")
        return frozenset({state.to_act})

    def legal_actions(self, state: KuhnState, p: PlayerId) -> list[str]:
        if state.terminal:
            raise StateError("terminal state")
        if p != state.to_act:
            raise IllegalMoveError(p, "not this player's turn")
        return list(legal_action_names(state.history, state.n_players))

    def step(self, state: KuhnState, actions: Mapping[PlayerId, Any]) -> StepResult:
        self._check_actors(state, actions)
        p = state.to_act
        action = actions[p]
        if action not in legal_action_names(state.history, state.n_players):
            raise IllegalMoveError(p, f"illegal action {action!r}")
        history = state.history + _LETTER[action]
        n = state.n_players
        nxt = replace(state, history=history)
        rewards = {q: 0.0 for q in range(n)}
        terminal = history_terminal(history, n)
        if terminal:
            payoffs = terminal_payoffs(history, state.cards)
            rewards = {q: float(payoffs[q]) for q in range(n)}
            nxt = replace(nxt, total_reward=tuple(float(v) for v in payoffs))
        eliminated = frozenset(folded_seats(history, n))
        if terminal:
            eliminated = frozenset(range(n))
        return StepResult(nxt, rewards, terminal, eliminated)

    def observe(self, state: KuhnState, p: PlayerId) -> KuhnObservation:
        self._require_player(p)
        return KuhnObservation(
            player=p,
            card=state.cards[p],
            history=state.history,
            pot=state.pot,
            bets=state.bets,
        )

    def rankings(self, state: KuhnState) -> RankRecord:
        if not state.terminal:
            raise StateError("rankings require a terminal state")
        by_reward: dict[float, list[PlayerId]] = {}
        for p in range(state.n_players):
            by_reward.setdefault(state.total_reward[p], []).append(p)
        blocks = [by_reward[v] for v in sorted(by_reward, reverse=True)]
        return RankRecord(
            ranks=tie_rounded_ranks(blocks),
            total_reward={p: state.total_reward[p] for p in range(state.n_players)},
        )

    def state_to_json(self, state: KuhnState) -> dict:
        return {
            "schema": "kuhn-state",
            "v": 1,
            "players": state.n_players,
            "cards": list(state.cards),
            "undealt": state.undealt,
            "history": state.history,
            "total_reward": list(state.total_reward),
        }

    def state_from_json(self, obj: Mapping[str, Any]) -> KuhnState:
        return KuhnState(
            n_players=obj["players"],
            cards=tuple(obj["cards"]),
            undealt=obj["undealt"],
            history=obj["history"],
            total_reward=tuple(obj["total_reward"]),
        )


# -- strategy profiles ------------------------------------------------------

def profile_infosets(n: int) -> list[tuple[int, int, str]]:
    """All (player, card, history) information sets of the N-player game."""
    return [
        (p, card, h)
        for p, h in decision_points(n)
        for card in range(n + 1)
    ]


def validate_profile(n: int, profile: Profile) -> None:
    for key in profile_infosets(n):
        if key not in profile:
            raise ValueError(f"profile missing information set {key}")
        dist = profile[key]
        legal = legal_action_names(key[2], n)
        if set(dist) - set(legal):
            raise ValueError(f"profile has illegal actions at {key}")
        total = sum(dist.get(a, 0.0) for a in legal)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"profile distribution at {key} sums to {total}")


def uniform_profile(n: int) -> dict[tuple[int, int, str], dict[str, float]]:
    return {
        key: {a: 0.5 for a in legal_action_names(key[2], n)}
        for key in profile_infosets(n)
    }


def random_profile(n: int, rng: np.random.Generator) -> dict[tuple[int, int, str], dict[str, float]]:
    out = {}
    for key in profile_infosets(n):
        a0, a1 = legal_action_names(key[2], n)
        p = float(rng.random())
        out[key] = {a0: p, a1: 1.0 - p}
    return out


def save_profile(profile: Profile, fh) -> None:
    """Write lines "player,card,history -> action:prob,action:prob"."""
    for (p, card, h) in sorted(profile):
        dist = profile[(p, card, h)]
        actions = ",".join(f"{a}:{repr(float(dist[a]))}" for a in sorted(dist))
        fh.write(f"{p},{card},{h} -> {actions}\n")


def load_profile(fh) -> dict[tuple[int, int, str], dict[str, float]]:
    profile: dict[tuple[int, int, str], dict[str, float]] = {}
    for line in fh:
        line = line.strip()
        if not line:
            continue
        left, right = line.split(" -> ")
        p, card, h = left.split(",")
        dist = {}
        for part in right.split(","):
            a, prob = part.split(":")
            dist[a] = float(prob)
        profile[(int(p), int(card), h)] = dist
    return profile


# -- exact oracles ----------------------------------------------------------

MAX_ORACLE_PLAYERS = 10  # enumeration over (N+1)! deals; keep it tractable


def _ordered_deals(n: int) -> Iterable[tuple[int, ...]]:
    return itertools.permutations(range(n + 1), n)


def expected_values(n: int, profile: Profile) -> dict[PlayerId, float]:
    """Exact per-player expectation by enumerating all ordered deals and all
    betting sequences weighted by the profile."""
    if n > MAX_ORACLE_PLAYERS:
        raise ValueError(f"exact enumeration supported for N <= {MAX_ORACLE_PLAYERS}")
    validate_profile(n, profile)
    totals = [0.0] * n
    deal_prob = 1.0 / math.perm(n + 1, n)

    def walk(cards: tuple[int, ...], history: str, prob: float) -> None:
        if history_terminal(history, n):
            payoffs = terminal_payoffs(history, cards)
            for p in range(n):
                totals[p] += prob * payoffs[p]
            return
        actor = history_to_act(history, n)
        dist = profile[(actor, cards[actor], history)]
        for name in legal_action_names(history, n):
            ap = dist.get(name, 0.0)
            if ap > 0.0:
                walk(cards, history + _LETTER[name], prob * ap)

    for deal in _ordered_deals(n):
        walk(deal[:n], "", deal_prob)
    return {p: totals[p] for p in range(n)}


def best_response_value(n: int, profile: Profile, p: PlayerId) -> float:
    """Value of player p's best pure behavioral response to a fixed profile.

    Greedy backward induction over p's information sets: deeper sets are
    decided first, which is sound because opponents' reach below a history
    does not depend on p's own earlier actions.
    """
    if n > MAX_ORACLE_PLAYERS:
        raise ValueError(f"exact enumeration supported for N <= {MAX_ORACLE_PLAYERS}")
    deal_prob = 1.0 / math.perm(n + 1, n)
    br_choice: dict[tuple[int, str], str] = {}

    def value(cards: tuple[int, ...], history: str) -> float:
        if history_terminal(history, n):
            return terminal_payoffs(history, cards)[p]
        actor = history_to_act(history, n)
        if actor == p:
            name = br_choice[(cards[p], history)]
            return value(cards, history + _LETTER[name])
        dist = profile[(actor, cards[actor], history)]
        return sum(
            dist.get(name, 0.0) * value(cards, history + _LETTER[name])
            for name in legal_action_names(history, n)
            if dist.get(name, 0.0) > 0.0
        )

    def reach_others(cards: tuple[int, ...], history: str) -> float:
        prob, h = 1.0, ""
        for ch in history:
            actor = history_to_act(h, n)
            if actor != p:
                prob *= profile[(actor, cards[actor], h)].get(_NAME[ch], 0.0)
            h += ch
        return prob

    own = sorted(
        ((actor, h) for actor, h in decision_points(n) if actor == p),
        key=lambda ah: len(ah[1]),
        reverse=True,
    )
    deals = list(_ordered_deals(n))
    for _, h in own:
        for card in range(n + 1):
            matching = [d for d in deals if d[p] == card]
            best_name, best_q = None, -math.inf
            for name in legal_action_names(h, n):
                q = sum(
                    reach_others(d[:n], h) * value(d[:n], h + _LETTER[name])
                    for d in matching
                )
                if q > best_q + 1e-15:
                    best_name, best_q = name, q
            br_choice[(card, h)] = best_name
    return deal_prob * sum(value(d[:n], "") for d in deals)


# -- published three-player equilibrium -------------------------------------

def three_player_equilibrium() -> dict[tuple[int, int, str], dict[str, float]]:
    """An exact Nash equilibrium of the 3-player game (cards 0..3).

    A member of the known parameterized equilibrium family for this game:
    seat 0 always checks and calls with card 2 half the time when the bet
    has been folded around to it; seat 1 open-bets card 3 with probability
    1/2 and bluffs card 0 with probability 1/4; seat 2, after two checks,
    always bets card 3 and bluffs card 0 half the time.  Card 3 always
    calls, cards 0 and 1 always fold, and the card-2 calling frequencies
    (1/2 and 3/4 below) make every bluff exactly indifferent, so no seat
    has any best-response gain.  Seat values are -1/32, -1/48, and +5/96:
    the first two seats lose and the third profits.
    """
    n = 3
    open_bet = {
        # (player, history) -> per-card bet probability
        (0, ""): {0: 0.0, 1: 0.0, 2: 0.0, 3: 0.0},
        (1, "k"): {0: 0.25, 1: 0.0, 2: 0.0, 3: 0.5},
        (2, "kk"): {0: 0.5, 1: 0.0, 2: 0.0, 3: 1.0},
    }
    # card-2 call probabilities at the infosets where card 2 ever calls
    thin_call = {
        (0, "kbf"): 0.5,
        (1, "kkbf"): 0.75,
        (2, "bf"): 0.5,
    }
    profile: dict[tuple[int, int, str], dict[str, float]] = {}
    for (player, h) in decision_points(n):
        for card in range(4):
            if bettor_of(h) is None:
                bet = open_bet[(player, h)][card]
                profile[(player, card, h)] = {"bet": bet, "check": 1.0 - bet}
            else:
                if card == 3:
                    call = 1.0
                elif card == 2:
                    call = thin_call.get((player, h), 0.0)
                else:
                    call = 0.0
                profile[(player, card, h)] = {"call": call, "fold": 1.0 - call}
    return profile


# -- Monte Carlo simulator --------------------------------------------------

@dataclass(frozen=True)
class KuhnTables:
    """Flattened betting-sequence automaton for the compiled simulator."""

    n: int
    index: dict[str, int]
    to_act: np.ndarray      # int32[H], -1 at terminals
    next0: np.ndarray       # int32[H], successor under check/call
    next1: np.ndarray       # int32[H], successor under bet/fold
    contrib: np.ndarray     # int32[H, n], valid at terminals
    particip: np.ndarray    # uint8[H, n], valid at terminals


def build_tables(n: int) -> KuhnTables:
    hs = all_histories(n)
    index = {h: i for i, h in enumerate(hs)}
    H = len(hs)
    to_act = np.full(H, -1, np.int32)
    next0 = np.full(H, -1, np.int32)
    next1 = np.full(H, -1, np.int32)
    contrib = np.zeros((H, n), np.int32)
    particip = np.zeros((H, n), np.uint8)
    for h, i in index.items():
        if history_terminal(h, n):
            contrib[i] = contributions(h, n)
            for p in participants(h, n):
                particip[i, p] = 1
        else:
            to_act[i] = history_to_act(h, n)
            a0, a1 = legal_action_names(h, n)
            next0[i] = index[h + _LETTER[a0]]
            next1[i] = index[h + _LETTER[a1]]
    return KuhnTables(n, index, to_act, next0, next1, contrib, particip)


def profile_array(n: int, profile: Profile, tables: KuhnTables) -> np.ndarray:
    """prob0[player, card, history] = probability of check/call."""
    validate_profile(n, profile)
    prob0 = np.zeros((n, n + 1, len(tables.index)))
    for (p, card, h), dist in profile.items():
        a0, _ = legal_action_names(h, n)
        prob0[p, card, tables.index[h]] = dist.get(a0, 0.0)
    return prob0


@maybe_jit
def _mc_kernel(deals, unifs, to_act, next0, next1, contrib, particip, prob0,
               sums, sumsq):  # pragma: no cover - exercised via simulate()
    games, n = deals.shape
    for g in range(games):
        h = 0
        depth = 0
        while to_act[h] >= 0:
            p = to_act[h]
            card = deals[g, p]
            if unifs[g, depth] < prob0[p, card, h]:
                h = next0[h]
            else:
                h = next1[h]
            depth += 1
        pot = 0
        for p in range(n):
            pot += contrib[h, p]
        winner = -1
        best = -1
        for p in range(n):
            if particip[h, p] and deals[g, p] > best:
                best = deals[g, p]
                winner = p
        for p in range(n):
            r = -float(contrib[h, p])
            if p == winner:
                r += pot
            sums[p] += r
            sumsq[p] += r * r


def simulate_mean(n: int, profile: Profile, games: int, seed: int):
    """Monte Carlo estimate of per-player value: (means, standard errors)."""
    tables = build_tables(n)
    prob0 = profile_array(n, profile, tables)
    rng = substream(seed, "kuhn-mc")
    deals = np.argsort(rng.random((games, n + 1)), axis=1)[:, :n].astype(np.int64)
    unifs = rng.random((games, 2 * n - 1))
    sums = np.zeros(n)
    sumsq = np.zeros(n)
    _mc_kernel(deals, unifs, tables.to_act, tables.next0, tables.next1,
               tables.contrib, tables.particip, prob0, sums, sumsq)
    means = sums / games
    var = sumsq / games - means ** 2
    se = np.sqrt(np.maximum(var, 0.0) / games)
    return means, se
