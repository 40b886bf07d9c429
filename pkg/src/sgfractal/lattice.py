"""Exact geometry of the Sierpinski gasket.

Vertices of the level-``M`` vertex set are stored with integer axial keys
``(i, j)`` at scale ``2**M``; the point is ``(i*u + j*v) / 2**M`` with
``u = p2 - p1`` and ``v = p3 - p1``.  Deduplication of junction vertices is
therefore exact and never compares floating point coordinates.

Vertex indices are canonical: vertices are sorted by the level at which
they first appear, then by their lexicographically smallest address
``(word, corner)``.  As a consequence ``V_n`` is always the index prefix
``range(vertex_count(n))``.
"""

from __future__ import annotations

import functools
import itertools
from typing import Iterator, Sequence

import numpy as np

__all__ = [
    "P",
    "P_AXIAL",
    "MAX_LEVEL",
    "LatticeError",
    "Word",
    "SGLattice",
    "apply_contraction",
    "build_lattice",
    "cached_lattice",
    "vertex_count",
    "words",
    "word_index",
    "word_from_index",
]

SQRT3 = np.sqrt(3.0)

# p1, p2, p3 of a unit-side triangle
P = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, SQRT3 / 2.0]])
P_AXIAL = np.array([[0, 0], [1, 0], [0, 1]], dtype=np.int64)

MAX_LEVEL = 12

Word = tuple  # tuple of letters in {1, 2, 3}


class LatticeError(ValueError):
    """Raised for out-of-range levels, words or relation orders."""


def vertex_count(level: int) -> int:
    """Return ``|V_level| = (3**(level+1) + 3) / 2``."""
    return (3 ** (level + 1) + 3) // 2


def words(n: int) -> Iterator[Word]:
    """Yield all words of length ``n`` in lexicographic order."""
    return itertools.product((1, 2, 3), repeat=n)


def word_index(w: Sequence[int]) -> int:
    """Position of ``w`` among the words of its length (lexicographic)."""
    idx = 0
    for letter in w:
        if letter not in (1, 2, 3):
            raise LatticeError(f"invalid letter {letter!r} in word {tuple(w)}")
        idx = 3 * idx + (letter - 1)
    return idx


def word_from_index(idx: int, n: int) -> Word:
    letters = []
    for _ in range(n):
        idx, r = divmod(idx, 3)
        letters.append(r + 1)
    return tuple(reversed(letters))


def apply_contraction(w: Sequence[int], x) -> np.ndarray:
    """Apply ``L_w = L_{w1} o ... o L_{wn}`` to the point ``x``.

    Each ``L_i(x) = (x + p_i) / 2``.  The empty word is the identity.
    """
    pt = np.asarray(x, dtype=float).copy()
    for letter in reversed(tuple(w)):
        if letter not in (1, 2, 3):
            raise LatticeError(f"invalid letter {letter!r}")
        pt = 0.5 * (pt + P[letter - 1])
    return pt


class SGLattice:
    """Vertex set ``V_M`` with cells of every level ``n <= M``.

    Attributes
    ----------
    level : int
        The level ``M``.
    keys : (nv, 2) int64 array
        Axial keys at scale ``2**M``, in canonical vertex order.
    coords : (nv, 2) float array
        Cartesian coordinates derived from ``keys``.
    birth : (nv,) int array
        Smallest ``m`` with the vertex in ``V_m``.
    cells : list of (3**n, 3) int arrays
        ``cells[n][k]`` holds the corner vertex indices of the ``k``-th
        length-``n`` word (lexicographic); corner ``j`` is ``L_w(p_{j+1})``.
    """

    def __init__(self, level, keys, birth, cells, addr_first, addr_second):
        self.level = level
        self.keys = keys
        self.birth = birth
        self.cells = cells
        self._addr_first = addr_first
        self._addr_second = addr_second
        scale = float(2**level)
        self.coords = np.column_stack(
            (
                (keys[:, 0] + 0.5 * keys[:, 1]) / scale,
                keys[:, 1] * (SQRT3 / 2.0) / scale,
            )
        )
        self._codes = self._encode(keys)
        self._code_order = np.argsort(self._codes, kind="stable")
        self._sorted_codes = self._codes[self._code_order]
        for arr in (self.keys, self.birth, self.coords, *self.cells):
            arr.setflags(write=False)
        self._preimages: dict[int, tuple[np.ndarray, np.ndarray, np.ndarray]] = {}

    def __repr__(self) -> str:
        return f"SGLattice(level={self.level}, vertices={len(self)})"

    def __len__(self) -> int:
        return self.keys.shape[0]

    @property
    def n_vertices(self) -> int:
        return self.keys.shape[0]

    def _encode(self, keys: np.ndarray) -> np.ndarray:
        side = 2**self.level + 1
        return keys[..., 0].astype(np.int64) * side + keys[..., 1]

    def index_of_keys(self, keys: np.ndarray) -> np.ndarray:
        """Vertex indices for an array of axial keys (scale ``2**M``)."""
        keys = np.asarray(keys, dtype=np.int64)
        codes = self._encode(keys)
        pos = np.searchsorted(self._sorted_codes, codes)
        pos = np.clip(pos, 0, len(self._sorted_codes) - 1)
        if not np.all(self._sorted_codes[pos] == codes):
            raise LatticeError("key not present in lattice")
        return self._code_order[pos]

    def count(self, n: int) -> int:
        """Number of vertices in ``V_n``; they are indices ``0..count-1``."""
        self._check_order(n)
        return vertex_count(n)

    def _check_order(self, n: int) -> None:
        if not 0 <= n <= self.level:
            raise LatticeError(f"order {n} outside 0..{self.level}")

    def addresses(self, i: int) -> list[tuple[Word, int]]:
        """Addresses ``(word, corner)`` of vertex ``i`` at its birth level.

        Corners are 1-based (``corner j`` means ``L_w(p_j)``).  The first
        entry is the canonical (lexicographically smallest) address.
        """
        m = int(self.birth[i])
        out = []
        for flat in (self._addr_first[i], self._addr_second[i]):
            if flat >= 0:
                k, j = divmod(int(flat), 3)
                out.append((word_from_index(k, m), j + 1))
        return out

    @functools.cached_property
    def junctions(self) -> dict[int, list[tuple[Word, int]]]:
        """Map vertex index -> addressing ``(word, corner)`` pairs."""
        return {i: self.addresses(i) for i in range(len(self))}

    def multi_addressed(self) -> np.ndarray:
        """Indices of vertices carrying two addresses at their birth level."""
        return np.flatnonzero(self._addr_second >= 0)

    def edges(self, n: int) -> np.ndarray:
        """Unordered vertex pairs related by ``~_n``, shape ``(3**(n+1), 2)``.

        Pairs are listed cell by cell (lexicographic words), each cell
        contributing corners (1,2), (1,3), (2,3).
        """
        self._check_order(n)
        c = self.cells[n]
        return np.stack(
            (c[:, [0, 0, 1]], c[:, [1, 2, 2]]), axis=-1
        ).reshape(-1, 2)

    def cell_vertices(self, w: Sequence[int]) -> np.ndarray:
        """Sorted indices of all vertices of ``V_M`` inside ``L_w(SG)``."""
        w = tuple(w)
        if len(w) > self.level:
            raise LatticeError(
                f"word of length {len(w)} exceeds lattice level {self.level}"
            )
        k = word_index(w)
        span = 3 ** (self.level - len(w))
        block = self.cells[self.level][k * span : (k + 1) * span]
        return np.unique(block)

    def preimage_map(self, N: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Preimages under the level-``N`` maps for vertices born after ``N``.

        Returns ``(targets, pre, wid)`` where ``targets`` are the vertex
        indices with birth level ``> N`` (ascending), ``pre[t]`` is the index
        of ``L_w^{-1}(x)`` and ``wid[t]`` the lexicographic index of the
        unique length-``N`` prefix cell ``w`` containing ``x``.
        """
        if not 0 <= N <= self.level:
            raise LatticeError(f"N={N} outside 0..{self.level}")
        if N in self._preimages:
            return self._preimages[N]
        targets = np.arange(vertex_count(N), len(self))
        flat = self._addr_first[targets]
        k = flat // 3
        depth = self.birth[targets] - N
        wid = k // (3**depth)
        origin = self.keys[self.cells[N][wid, 0]]
        pre_keys = (self.keys[targets] - origin) << N
        pre = self.index_of_keys(pre_keys)
        result = (targets, pre, wid)
        for arr in result:
            arr.setflags(write=False)
        self._preimages[N] = result
        return result

    def preimage_via(self, i: int, address: tuple[Word, int], N: int) -> int:
        """Index of ``L_w^{-1}(x)`` recomputed from an explicit address."""
        u, j = address
        tail = u[N:]
        key = P_AXIAL[j - 1] * (2 ** (self.level - len(tail)))
        for k, letter in enumerate(tail, start=1):
            key = key + P_AXIAL[letter - 1] * (2 ** (self.level - k))
        return int(self.index_of_keys(key[None, :])[0])


def build_lattice(M: int, cap: int = MAX_LEVEL) -> SGLattice:
    """Enumerate ``V_M`` with exact integer dedup.

    Raises
    ------
    LatticeError
        If ``M`` is negative or exceeds ``cap`` (default 12, about 797k
        vertices).
    """
    if M < 0:
        raise LatticeError(f"level must be >= 0, got {M}")
    if M > cap:
        raise LatticeError(f"level {M} exceeds cap {cap}")
    side = 2**M + 1

    corner_keys = (P_AXIAL * 2**M)[None, :, :]  # (1, 3, 2)
    vertex_keys = [P_AXIAL * 2**M]
    birth = [np.zeros(3, dtype=np.int64)]
    first = [np.arange(3, dtype=np.int64)]
    second = [np.full(3, -1, dtype=np.int64)]
    # code -> index, maintained as sorted arrays for lookup
    known_codes = (vertex_keys[0][:, 0] * side + vertex_keys[0][:, 1]).astype(np.int64)
    known_index = np.arange(3, dtype=np.int64)
    count = 3
    cell_corner_codes = [known_codes[None, :]]

    for m in range(1, M + 1):
        # child w.i has corners (corner_i + corner_j) / 2 of the parent
        parent = corner_keys
        child = (parent[:, :, None, :] + parent[:, None, :, :]) // 2
        corner_keys = child.reshape(-1, 3, 2)
        codes = corner_keys[..., 0] * side + corner_keys[..., 1]
        flat_codes = codes.ravel()
        cell_corner_codes.append(codes)

        order = np.argsort(known_codes, kind="stable")
        sk = known_codes[order]
        pos = np.clip(np.searchsorted(sk, flat_codes), 0, len(sk) - 1)
        is_old = sk[pos] == flat_codes
        new_pos = np.flatnonzero(~is_old)
        new_codes = flat_codes[new_pos]
        uniq, first_idx, inverse, counts = np.unique(
            new_codes, return_index=True, return_inverse=True, return_counts=True
        )
        if counts.max(initial=0) > 2:
            raise AssertionError("a new vertex lies in more than two cells")
        first_flat = new_pos[first_idx]
        # second occurrence: the largest flat position per unique code
        last_flat = np.zeros(len(uniq), dtype=np.int64)
        np.maximum.at(last_flat, inverse, new_pos)
        sec_flat = np.where(counts == 2, last_flat, -1)

        canon = np.argsort(first_flat, kind="stable")
        uniq = uniq[canon]
        first_flat = first_flat[canon]
        sec_flat = sec_flat[canon]
        n_new = len(uniq)

        vertex_keys.append(np.column_stack((uniq // side, uniq % side)))
        birth.append(np.full(n_new, m, dtype=np.int64))
        first.append(first_flat)
        second.append(sec_flat)
        known_codes = np.concatenate((known_codes, uniq))
        known_index = np.concatenate(
            (known_index, np.arange(count, count + n_new, dtype=np.int64))
        )
        count += n_new

    keys = np.concatenate(vertex_keys).astype(np.int64)
    order = np.argsort(known_codes, kind="stable")
    sk = known_codes[order]
    cells = []
    for codes in cell_corner_codes:
        pos = np.searchsorted(sk, codes)
        cells.append(known_index[order][pos].astype(np.int64))

    return SGLattice(
        M,
        keys,
        np.concatenate(birth),
        cells,
        np.concatenate(first),
        np.concatenate(second),
    )


@functools.lru_cache(maxsize=16)
def cached_lattice(M: int) -> SGLattice:
    """Shared immutable lattice per level."""
    return build_lattice(M)
