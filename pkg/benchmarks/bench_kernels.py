"""Timing comparison of the compiled hot kernels vs their pure-Python forms.

Run as ``python benchmarks/bench_kernels.py``.  Each kernel is benchmarked
through the compiled entry point and again through the uncompiled Python
function (``.py_func``).  Setting COLOSSEUM_NO_NUMBA=1 disables compilation
package-wide, in which case both columns measure the same fallback.
"""

import time

import numpy as np

from colosseum._kernels import NUMBA_ENABLED
from colosseum.core import EnvConfig, make_env
from colosseum.envs import blokus, kuhn, tron
from colosseum.rng import substream


def timed(fn, args, repeat):
    fn(*args)  # warm-up (and JIT compile on first use)
    t0 = time.perf_counter()
    for _ in range(repeat):
        fn(*args)
    return (time.perf_counter() - t0) / repeat


def variants(kernel):
    if NUMBA_ENABLED:
        return [("numba", kernel), ("python", kernel.py_func)]
    return [("python", kernel)]


def bench_tron_resolve():
    env = make_env(EnvConfig("tron", 4, 3, {"rows": 15, "cols": 15}))
    state = env.new_game()
    rng = substream(0, "bench-tron")
    arena = state.arena_array()
    pos = np.array(state.positions, np.int32)
    heading = np.array(state.headings, np.int32)
    acting = np.ones(4, np.uint8)
    action = rng.integers(3, size=4).astype(np.int32)

    out = []
    for label, fn in variants(tron.tron_resolve):
        # the kernel mutates its inputs, so every call gets fresh copies
        fn(arena.copy(), pos.copy(), heading.copy(), acting, action)
        n = 2000
        t0 = time.perf_counter()
        for _ in range(n):
            fn(arena.copy(), pos.copy(), heading.copy(), acting, action)
        out.append((label, (time.perf_counter() - t0) / n))
    return out


def bench_blokus_enumerate():
    env = make_env(EnvConfig("blokus", 4, 3, {"rows": 14, "cols": 14}))
    state = env.new_game()
    rng = substream(0, "bench-blokus")
    for _ in range(8):  # mid-game board: the expensive regime
        p = next(iter(env.current_players(state)))
        legal = env.legal_actions(state, p)
        state = env.step(state, {p: legal[int(rng.integers(len(legal)))]}).next_state

    board = state.board_array()
    remaining = np.array(
        [state.remaining[0] >> i & 1 for i in range(21)], np.uint8)
    scratch = blokus._EnumScratch(14, 14)
    sr, sc = env.start_corners[0]

    out = []
    for label, fn in variants(blokus.enumerate_kernel):
        def call():
            fn(board, 0, remaining, False, sr, sc,
               blokus.FORM_ROWS, blokus.FORM_COLS, blokus.FORM_NCELLS,
               blokus.FORM_PIECE, blokus.PIECE_FORM_START,
               blokus.PIECE_FORM_COUNT,
               scratch.stamp_buf, scratch.next_stamp(), scratch.out)
        call()
        t0 = time.perf_counter()
        n = 200
        for _ in range(n):
            call()
        out.append((label, (time.perf_counter() - t0) / n))
    return out


def bench_kuhn_mc():
    n = 3
    tables = kuhn.build_tables(n)
    prob0 = kuhn.profile_array(n, kuhn.uniform_profile(n), tables)
    rng = substream(0, "bench-kuhn")
    games = 20_000
    deals = np.argsort(rng.random((games, n + 1)), axis=1)[:, :n].astype(np.int64)
    unifs = rng.random((games, 2 * n - 1))

    out = []
    for label, fn in variants(kuhn._mc_kernel):
        sums = np.zeros(n)
        sumsq = np.zeros(n)
        args = (deals, unifs, tables.to_act, tables.next0, tables.next1,
                tables.contrib, tables.particip, prob0, sums, sumsq)
        out.append((label, timed(fn, args, 5)))
    return out


def main():
    print(f"numba enabled: {NUMBA_ENABLED}")
    benches = [
        ("tron_resolve (15x15, 4 players)", bench_tron_resolve),
        ("blokus enumerate (14x14, mid-game)", bench_blokus_enumerate),
        (f"kuhn MC kernel (3 players, 20k games)", bench_kuhn_mc),
    ]
    for name, bench in benches:
        results = dict(bench())
        line = f"{name:38s}"
        for label in ("numba", "python"):
            if label in results:
                line += f"  {label}: {results[label] * 1e6:10.1f} us"
        if "numba" in results and "python" in results:
            line += f"  speedup: {results['python'] / results['numba']:.1f}x"
        print(line)


if __name__ == "__main__":
    main()
