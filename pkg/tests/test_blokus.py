from collections import Counter

import pytest

from colosseum.core import ConfigError, EnvConfig, IllegalMoveError, StateError, make_env
from colosseum.envs.blokus import (
    PASS,
    PIECE_CELLS,
    PIECE_NAMES,
    PIECE_ORIENTATIONS,
    PIECE_SIZES,
    TOTAL_FORMS,
    Placement,
)
from colosseum.rng import substream

from oracle_blokus import PIECE_ART, art_cells, canonical, legal_cellsets


def blokus(players=4, rows=20, cols=None, seed=0):
    return make_env(EnvConfig(
        "blokus", players, seed,
        {} if rows == 20 and cols is None else {"rows": rows, "cols": cols or rows},
    ))


def random_playout(env, rng, max_moves=None):
    """Random legal moves to the end (or a move budget); returns the state
    and every applied (player, Placement)."""
    state = env.new_game()
    placed = []
    moves = 0
    while not state.terminal and (max_moves is None or moves < max_moves):
        p = state.to_move
        legal = env.legal_actions(state, p)
        action = legal[int(rng.integers(len(legal)))]
        if action != PASS:
            placed.append((p, action))
        state = env.step(state, {p: action}).next_state
        moves += 1
    return state, placed


def test_piece_set_shape():
    assert len(PIECE_NAMES) == 21
    assert Counter(PIECE_SIZES) == {1: 1, 2: 1, 3: 2, 4: 5, 5: 12}
    assert sum(PIECE_SIZES) == 89
    assert TOTAL_FORMS == sum(len(v) for v in PIECE_ORIENTATIONS.values()) == 91


def test_piece_shapes_match_independent_drawings():
    """Engine cell offsets vs the oracle's ASCII drawings, up to symmetry."""
    assert set(PIECE_CELLS) == set(PIECE_ART)
    for name in PIECE_CELLS:
        assert canonical(PIECE_CELLS[name]) == canonical(art_cells(PIECE_ART[name])), name


def test_orientation_counts():
    # known distinct-orientation counts for the free polyominoes
    expected = {"I1": 1, "I2": 2, "I3": 2, "V3": 4, "I4": 2, "O4": 1,
                "T4": 4, "L4": 8, "S4": 4, "F": 8, "I": 2, "L": 8, "N": 8,
                "P": 8, "T": 4, "U": 4, "V": 4, "W": 4, "X": 1, "Y": 8, "Z": 4}
    assert {n: len(f) for n, f in PIECE_ORIENTATIONS.items()} == expected


def test_first_move_monomino_single_spot():
    env = blokus()
    state = env.new_game()
    placements = env.enumerate_placements(state, 0)
    monomino = [pl for pl in placements if pl.piece == "I1"]
    assert len(monomino) == 1
    assert monomino[0].cells() == ((0, 0),)


def test_first_move_total_placements():
    env = blokus()
    placements = env.enumerate_placements(env.new_game(), 0)
    assert len(placements) == 58
    assert all((0, 0) in pl.cells() for pl in placements)
    assert len({pl.cells() for pl in placements}) == 58  # no duplicates


def test_start_corners_per_player():
    env = blokus()
    state = env.new_game()
    corners = [(0, 0), (0, 19), (19, 19), (19, 0)]
    for p in range(4):
        state_p = env.state_from_json({**env.state_to_json(state), "to_move": p})
        placements = env.enumerate_placements(state_p, p)
        assert placements and all(corners[p] in pl.cells() for pl in placements)


def test_enumeration_matches_naive_oracle_midgame():
    """Engine enumeration vs the O(pieces x orientations x board) oracle on
    random mid-game positions."""
    rng = substream(2, "blokus-oracle")
    env = blokus(players=3, rows=11)
    corners = env.start_corners
    for trial in range(4):
        state, _ = random_playout(env, rng, max_moves=int(rng.integers(3, 12)))
        if state.terminal:
            continue
        p = state.to_move
        board = state.board_array().tolist()
        expected = legal_cellsets(
            board, p, state.remaining_pieces(p),
            first=state.control[p] == 0, corner=corners[p],
        )
        got = {frozenset(pl.cells()) for pl in env.enumerate_placements(state, p)}
        assert got == expected


def test_rewards_equal_piece_size():
    env = blokus()
    state = env.new_game()
    pent = next(pl for pl in env.enumerate_placements(state, 0) if pl.piece == "W")
    result = env.step(state, {0: pent})
    assert result.rewards == {0: 5.0, 1: 0.0, 2: 0.0, 3: 0.0}
    dom = next(pl for pl in env.enumerate_placements(state, 0) if pl.piece == "I2")
    assert env.step(state, {0: dom}).rewards[0] == 2.0


def test_pass_only_when_no_placement():
    env = blokus()
    state = env.new_game()
    with pytest.raises(IllegalMoveError):
        env.step(state, {0: PASS})
    assert PASS not in env.legal_actions(state, 0)


def test_placement_validation_errors():
    env = blokus()
    state = env.new_game()
    first = env.enumerate_placements(state, 0)[0]
    state = env.step(state, {0: first}).next_state
    state = env.state_from_json({**env.state_to_json(state), "to_move": 0})
    with pytest.raises(IllegalMoveError):
        env.step(state, {0: first})  # piece already used
    with pytest.raises(IllegalMoveError):
        env.step(state, {0: Placement("Q9", 0, 5, 5)})
    with pytest.raises(IllegalMoveError):
        env.step(state, {0: Placement("X", 99, 5, 5)})
    with pytest.raises(IllegalMoveError):
        env.step(state, {0: Placement("X", 0, 10, 10)})  # no diagonal contact
    with pytest.raises(IllegalMoveError):
        env.step(state, {0: "not-a-placement"})


def test_full_game_invariants():
    """Complete random games: control bookkeeping, per-player adjacency
    rules, stickiness of passing, length bound and final ranking."""
    rng = substream(13, "blokus-full")
    for players, rows in [(4, 20), (2, 9), (3, 13)]:
        env = blokus(players=players, rows=rows)
        state, placed = random_playout(env, rng)
        assert state.terminal and all(state.passed)
        assert len(placed) <= 21 * players <= 84
        board = state.board_array()
        for p in range(players):
            mine = [pl for q, pl in placed if q == p]
            assert state.control[p] == sum(len(pl.cells()) for pl in mine)
            assert state.control[p] == int((board == p).sum())
            assert state.total_reward[p] == float(state.control[p])
            # distinct placements by one player never touch edge-to-edge
            cells_by_piece = [set(pl.cells()) for pl in mine]
            for i in range(len(cells_by_piece)):
                for j in range(i + 1, len(cells_by_piece)):
                    for r, c in cells_by_piece[i]:
                        for dr, dc in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                            assert (r + dr, c + dc) not in cells_by_piece[j]
        ranks = env.rankings(state).ranks
        for p in range(players):
            for q in range(players):
                if state.control[p] > state.control[q]:
                    assert ranks[p] < ranks[q]
                elif state.control[p] == state.control[q]:
                    assert ranks[p] == ranks[q]


def test_returned_placements_all_revalidate_and_apply():
    """Legality is stable: every enumerated placement steps cleanly."""
    rng = substream(21, "blokus-stable")
    env = blokus(players=2, rows=9)
    state, _ = random_playout(env, rng, max_moves=6)
    p = state.to_move
    for pl in env.enumerate_placements(state, p):
        result = env.step(state, {p: pl})
        assert result.rewards[p] == len(pl.cells())


def test_passed_player_is_out_for_good():
    env = blokus(players=2, rows=9)
    state = env.new_game()
    # hand-build a state where player 0 holds only the monomino and cannot
    # place it: 0 owns (0,0) and the diagonal (1,1) is owned by 1
    obj = env.state_to_json(state)
    board = [list(row) for row in obj["board"]]
    board[0][0] = "0"
    board[1][1] = "1"
    obj.update(board=["".join(r) for r in board], remaining=[["I1"], obj["remaining"][1]],
               control=[1, 1], to_move=0)
    state = env.state_from_json(obj)
    assert env.legal_actions(state, 0) == [PASS]
    result = env.step(state, {0: PASS})
    assert result.eliminated == frozenset({0})
    assert not result.terminal
    nxt = result.next_state
    assert nxt.to_move == 1
    # player 1 keeps moving; turn never returns to 0
    while not nxt.terminal:
        p = nxt.to_move
        assert p == 1
        legal = env.legal_actions(nxt, p)
        nxt = env.step(nxt, {p: legal[0]}).next_state
    assert nxt.passed == (True, True)


def test_config_limits():
    with pytest.raises(ConfigError):
        blokus(players=5)
    with pytest.raises(ConfigError):
        blokus(players=1)
    with pytest.raises(ConfigError):
        blokus(players=2, rows=2)


def test_state_and_action_round_trips():
    rng = substream(4, "blokus-json")
    env = blokus(players=2, rows=9)
    state, placed = random_playout(env, rng, max_moves=5)
    assert env.state_from_json(env.state_to_json(state)) == state
    for _, pl in placed:
        assert env.decode_action(env.encode_action(pl)) == pl
    assert env.decode_action(env.encode_action(PASS)) == PASS
    with pytest.raises(StateError):
        env.rankings(state)
