"""Independent naive oracle for the polyomino placement rules.

Pieces are re-drawn here as ASCII art and orientations are derived with a
different transform pipeline than the engine uses; legality is an O(pieces
x orientations x board) filter over every anchor with a direct restatement
of the contact rules.
"""

PIECE_ART = {
    "I1": ["#"],
    "I2": ["##"],
    "I3": ["###"],
    "V3": ["#.",
           "##"],
    "I4": ["####"],
    "O4": ["##",
           "##"],
    "T4": ["###",
           ".#."],
    "L4": ["#.",
           "#.",
           "##"],
    "S4": [".##",
           "##."],
    "F": [".##",
          "##.",
          ".#."],
    "I": ["#####"],
    "L": ["#.",
          "#.",
          "#.",
          "##"],
    "N": ["#.",
          "#.",
          "##",
          ".#"],
    "P": ["##",
          "##",
          "#."],
    "T": ["###",
          ".#.",
          ".#."],
    "U": ["#.#",
          "###"],
    "V": ["#..",
          "#..",
          "###"],
    "W": ["#..",
          "##.",
          ".##"],
    "X": [".#.",
          "###",
          ".#."],
    "Y": [".#",
          "##",
          ".#",
          ".#"],
    "Z": ["##.",
          ".#.",
          ".##"],
}


def art_cells(art):
    return frozenset(
        (r, c) for r, row in enumerate(art) for c, ch in enumerate(row) if ch == "#"
    )


def normalize(cells):
    r0 = min(r for r, _ in cells)
    c0 = min(c for _, c in cells)
    return tuple(sorted((r - r0, c - c0) for r, c in cells))


def transforms(cells):
    """All 8 square-symmetry images of a cell set, normalized."""
    out = set()
    cur = set(cells)
    for _ in range(2):
        for _ in range(4):
            out.add(normalize(cur))
            cur = {(-c, r) for r, c in cur}  # rotate 90 degrees
        cur = {(r, -c) for r, c in cur}  # mirror
    return out


def canonical(cells):
    return min(transforms(cells))


def oracle_orientations(name):
    return sorted(transforms(art_cells(PIECE_ART[name])))


def legal_cellsets(board, p, remaining_names, first, corner):
    """Every legal placement for p as a frozenset of board cells.

    board: 2d list/array with -1 for empty, else owner; remaining_names:
    iterable of piece names p still holds.
    """
    rows, cols = len(board), len(board[0])

    def own(r, c):
        return 0 <= r < rows and 0 <= c < cols and board[r][c] == p

    found = set()
    for name in remaining_names:
        for form in oracle_orientations(name):
            h = max(r for r, _ in form)
            w = max(c for _, c in form)
            for ar in range(rows - h):
                for ac in range(cols - w):
                    cells = [(ar + r, ac + c) for r, c in form]
                    if any(board[r][c] != -1 for r, c in cells):
                        continue
                    if any(own(r - 1, c) or own(r + 1, c) or own(r, c - 1)
                           or own(r, c + 1) for r, c in cells):
                        continue
                    if first:
                        if corner not in cells:
                            continue
                    else:
                        if not any(own(r - 1, c - 1) or own(r - 1, c + 1)
                                   or own(r + 1, c - 1) or own(r + 1, c + 1)
                                   for r, c in cells):
                            continue
                    found.add(frozenset(cells))
    return found
