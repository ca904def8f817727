"""Precomputed catalogue of the 13 connected directed triads and their 30 orbits.

A triad on nodes (a, b, c) is encoded as a 6-bit code:
bit0 a->b, bit1 a->c, bit2 b->a, bit3 b->c, bit4 c->a, bit5 c->b.

Class ids follow the usual three-node motif numbering: the id is the
smallest decimal value of the row-major 3x3 adjacency bitmask
(entry (i, j) carries weight 2**(8 - 3*i - j)) over all node orderings.
The ordering that attains the minimum defines the canonical positions
0, 1, 2; orbits are automorphism classes of those positions.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations

import numpy as np

PERMS = tuple(permutations(range(3)))

# (source, target) position pairs for code bits 0..5
_BIT_EDGES = ((0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1))


def code_to_matrix(code: int) -> np.ndarray:
    A = np.zeros((3, 3), dtype=np.int64)
    for bit, (i, j) in enumerate(_BIT_EDGES):
        if code >> bit & 1:
            A[i, j] = 1
    return A


def matrix_to_code(A) -> int:
    return sum(1 << bit for bit, (i, j) in enumerate(_BIT_EDGES) if A[i][j])


def milo_value(A) -> int:
    return sum(1 << (8 - 3 * i - j) for i in range(3) for j in range(3) if A[i][j])


def _permuted(A, perm):
    # perm[p] = original node placed at position p
    return [[A[perm[i]][perm[j]] for j in range(3)] for i in range(3)]


def _connected(A) -> bool:
    und = [[A[i][j] or A[j][i] for j in range(3)] for i in range(3)]
    return sum(und[i][j] for i in range(3) for j in range(i + 1, 3)) >= 2


def _build():
    class_of = np.full(64, -1, dtype=np.int64)
    milo_of = np.zeros(64, dtype=np.int64)
    # canon_perms[code, r] = perm mapping canonical position -> node, r < n_canon[code]
    canon_perms = np.zeros((64, 6, 3), dtype=np.int64)
    n_canon = np.zeros(64, dtype=np.int64)
    ids = set()
    for code in range(64):
        A = code_to_matrix(code)
        if not _connected(A):
            continue
        vals = [milo_value(_permuted(A, p)) for p in PERMS]
        best = min(vals)
        ids.add(best)
        milo_of[code] = best
        r = 0
        for p, v in zip(PERMS, vals):
            if v == best:
                canon_perms[code, r] = p
                r += 1
        n_canon[code] = r
    milo_ids = tuple(sorted(ids))
    for code in range(64):
        if n_canon[code]:
            class_of[code] = milo_ids.index(milo_of[code])

    # orbits of canonical positions, numbered by (class id, smallest position)
    orbit_of_pos = np.zeros((len(milo_ids), 3), dtype=np.int64)
    orbit_class = []
    classes = []
    for c, mid in enumerate(milo_ids):
        code = int(np.flatnonzero(milo_of == mid)[0])
        canon = _permuted(code_to_matrix(code), canon_perms[code, 0])
        autos = [p for p in PERMS if _permuted(canon, p) == canon]
        groups = sorted({min(p[q] for p in autos) for q in range(3)})
        members = []
        for g in groups:
            pos = tuple(q for q in range(3) if min(p[q] for p in autos) == g)
            oid = len(orbit_class)
            orbit_class.append(c)
            for q in pos:
                orbit_of_pos[c, q] = oid
            members.append(pos)
        classes.append(TriadClass(mid, tuple(range(orbit_class.index(c), len(orbit_class))),
                                  tuple(members), np.array(canon)))
    # per-code, per-node orbit ids
    node_orbit = np.full((64, 3), -1, dtype=np.int64)
    for code in range(64):
        if class_of[code] < 0:
            continue
        perm = canon_perms[code, 0]
        for pos in range(3):
            node_orbit[code, perm[pos]] = orbit_of_pos[class_of[code], pos]
    return milo_ids, class_of, canon_perms, n_canon, node_orbit, np.array(orbit_class), classes


@dataclass(frozen=True)
class TriadClass:
    milo_id: int
    orbits: tuple[int, ...]
    positions: tuple[tuple[int, ...], ...]  # canonical positions making up each orbit
    canonical: np.ndarray

    @property
    def n_orbits(self) -> int:
        return len(self.orbits)


(MILO_IDS, CODE_CLASS, CODE_CANON_PERMS, CODE_N_CANON, CODE_NODE_ORBIT, ORBIT_CLASS,
 TRIAD_CLASSES) = _build()
N_CLASSES = len(MILO_IDS)
N_ORBITS = len(ORBIT_CLASS)
for _arr in (CODE_CLASS, CODE_CANON_PERMS, CODE_N_CANON, CODE_NODE_ORBIT, ORBIT_CLASS):
    _arr.setflags(write=False)

# triad-census letter codes for the same classes
MAN_LABELS = {
    6: "021D", 12: "021C", 14: "111U", 36: "021U", 38: "030T", 46: "120U", 74: "111D",
    78: "201", 98: "030C", 102: "120C", 108: "120D", 110: "210", 238: "300",
}


def class_index(milo_id: int) -> int:
    return MILO_IDS.index(milo_id)


def classify_triad(sub) -> tuple[int, tuple[int, int, int]] | None:
    """Class id and per-node orbit ids of a 3-node directed adjacency.

    ``sub`` is a 3x3 0/1 matrix (diagonal ignored). Returns None for a
    disconnected triple.
    """
    A = np.asarray(sub)
    if A.shape != (3, 3):
        raise ValueError("triad adjacency must be 3x3")
    code = matrix_to_code(A != 0)
    c = CODE_CLASS[code]
    if c < 0:
        return None
    return MILO_IDS[c], tuple(int(o) for o in CODE_NODE_ORBIT[code])


def canonical_colors(code: int, colors) -> tuple:
    """Colours read at canonical positions, minimised over the class automorphisms."""
    best = None
    for r in range(CODE_N_CANON[code]):
        t = tuple(colors[CODE_CANON_PERMS[code, r, q]] for q in range(3))
        if best is None or t < best:
            best = t
    return best
