"""Match transcripts: newline-delimited message logs and offline replay.

A transcript is a text file with one JSON object per line:

    {"type": "match_start", "v": 1, "match_id": ..., "env": ..., "seating": ...}
    {"type": "step", "turn": 0, "actions": {"0": ..., "1": ...}, "substituted": []}
    ...
    {"type": "result", "ranks": {...}, "total_reward": {...}}

Actions are stored in each environment's wire encoding.  Replaying re-runs
the logged actions through a fresh environment and checks the recomputed
result against the recorded one, so a transcript is also a determinism
proof for the match it records.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, Callable, Iterable, Mapping, Sequence, TextIO

from colosseum.core import EnvConfig, Environment, RankRecord, make_env

TRANSCRIPT_VERSION = 1


class TranscriptError(ValueError):
    """Corrupted or inconsistent transcript; carries the offending line."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class TranscriptWriter:
    """Streams match messages to a line-oriented log."""

    def __init__(self, fh: TextIO):
        self._fh = fh

    def _emit(self, obj: Mapping[str, Any]) -> None:
        self._fh.write(json.dumps(obj, sort_keys=True) + "\n")

    def start(self, match_id: str, env_config: EnvConfig,
              seating: Sequence[str]) -> None:
        self._emit({
            "type": "match_start",
            "v": TRANSCRIPT_VERSION,
            "match_id": match_id,
            "env": env_config.to_json(),
            "seating": list(seating),
        })

    def step(self, turn: int, actions: Mapping[int, Any],
             substituted: Iterable[int] = ()) -> None:
        self._emit({
            "type": "step",
            "turn": turn,
            "actions": {str(p): a for p, a in actions.items()},
            "substituted": sorted(substituted),
        })

    def result(self, record: RankRecord) -> None:
        self._emit({
            "type": "result",
            "ranks": {str(p): r for p, r in record.ranks.items()},
            "total_reward": {str(p): v for p, v in record.total_reward.items()},
        })


@dataclass(frozen=True)
class Transcript:
    match_id: str
    env: EnvConfig
    seating: tuple[str, ...]
    steps: tuple[tuple[int, dict[int, Any], tuple[int, ...]], ...]
    result: RankRecord | None


def _parse_line(line_no: int, line: str) -> dict:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise TranscriptError(line_no, f"invalid JSON ({exc.msg})") from exc
    if not isinstance(obj, dict) or "type" not in obj:
        raise TranscriptError(line_no, "message must be an object with a 'type'")
    return obj


def load_transcript(lines: Iterable[str]) -> Transcript:
    header = None
    steps: list[tuple[int, dict[int, Any], tuple[int, ...]]] = []
    result = None
    for line_no, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        obj = _parse_line(line_no, line)
        kind = obj["type"]
        if kind == "match_start":
            if header is not None:
                raise TranscriptError(line_no, "duplicate match_start")
            if obj.get("v") != TRANSCRIPT_VERSION:
                raise TranscriptError(line_no, f"unsupported version {obj.get('v')!r}")
            try:
                header = (
                    str(obj["match_id"]),
                    EnvConfig.from_json(obj["env"]),
                    tuple(obj["seating"]),
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise TranscriptError(line_no, f"bad match_start: {exc}") from exc
        elif kind == "step":
            if header is None:
                raise TranscriptError(line_no, "step before match_start")
            if result is not None:
                raise TranscriptError(line_no, "step after result")
            try:
                steps.append((
                    int(obj["turn"]),
                    {int(p): a for p, a in obj["actions"].items()},
                    tuple(int(p) for p in obj.get("substituted", [])),
                ))
            except (KeyError, TypeError, ValueError) as exc:
                raise TranscriptError(line_no, f"bad step: {exc}") from exc
        elif kind == "result":
            if header is None:
                raise TranscriptError(line_no, "result before match_start")
            try:
                result = RankRecord(
                    ranks={int(p): int(r) for p, r in obj["ranks"].items()},
                    total_reward={int(p): float(v)
                                  for p, v in obj["total_reward"].items()},
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise TranscriptError(line_no, f"bad result: {exc}") from exc
        else:
            raise TranscriptError(line_no, f"unknown message type {kind!r}")
    if header is None:
        raise TranscriptError(1, "missing match_start")
    match_id, env_config, seating = header
    return Transcript(match_id, env_config, seating, tuple(steps), result)


def replay(lines: Iterable[str],
           on_state: Callable[[Environment, Any, int], None] | None = None) -> RankRecord:
    """Re-simulate a transcript and return the recomputed RankRecord.

    Verifies every logged action against the live rules and, when the
    transcript carries a recorded result, that the recomputed result is
    identical.  ``on_state`` is called with (env, state, turn) after every
    applied step, which is how the CLI renders frames.
    """
    t = load_transcript(lines)
    env = make_env(t.env)
    state = env.new_game()
    if on_state is not None:
        on_state(env, state, -1)
    for turn, encoded, _ in t.steps:
        if state_terminal(env, state):
            raise TranscriptError(0, f"step {turn} after terminal state")
        expected = env.current_players(state)
        if set(encoded) != set(expected):
            raise TranscriptError(
                0, f"step {turn} actors {sorted(encoded)} != {sorted(expected)}"
            )
        actions = {p: env.decode_action(a) for p, a in encoded.items()}
        state = env.step(state, actions).next_state
        if on_state is not None:
            on_state(env, state, turn)
    if not state_terminal(env, state):
        raise TranscriptError(0, "transcript ends before the game does")
    record = env.rankings(state)
    if t.result is not None and (record.ranks != t.result.ranks
                                 or record.total_reward != t.result.total_reward):
        raise TranscriptError(0, "recomputed result differs from recorded result")
    return record


def state_terminal(env: Environment, state: Any) -> bool:
    return bool(getattr(state, "terminal"))


def render_state(env: Environment, state: Any) -> list[str]:
    """Best-effort ASCII rendering of a state for replay output."""
    obj = env.state_to_json(state)
    for key in ("arena", "board"):
        grid = obj.get(key)
        if isinstance(grid, list):
            return [str(row) for row in grid]
        if isinstance(grid, str):
            rows, cols = obj.get("rows"), obj.get("cols")
            if rows and cols:
                return [grid[i * cols:(i + 1) * cols] for i in range(rows)]
    return [json.dumps(obj, sort_keys=True)]
