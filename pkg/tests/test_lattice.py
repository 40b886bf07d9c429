import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sgfractal.lattice import (
    MAX_LEVEL,
    P,
    LatticeError,
    apply_contraction,
    build_lattice,
    vertex_count,
    word_from_index,
    word_index,
    words,
)


def brute_vertices(n):
    """Images of the corners under every length-n word, deduplicated."""
    pts = {tuple(np.round(apply_contraction(w, p), 12)) for w in words(n) for p in P}
    return sorted(pts)


@pytest.mark.parametrize("n,count", [(0, 3), (1, 6), (2, 15), (3, 42), (4, 123), (5, 366), (6, 1095)])
def test_vertex_counts(lat, n, count):
    assert vertex_count(n) == count
    assert len(lat(n)) == count


@pytest.mark.parametrize("n", range(5))
def test_vertices_match_brute_force(lat, n):
    got = sorted(tuple(np.round(c, 12)) for c in lat(n).coords)
    assert got == brute_vertices(n)


def test_nested_prefix_order(lat):
    big = lat(6)
    for n in range(6):
        small = lat(n)
        np.testing.assert_array_equal(big.coords[: len(small)], small.coords)
        assert np.all(big.birth[: len(small)] <= n)
        assert np.all(big.birth[len(small):] > n)


def test_first_level_order(lat):
    np.testing.assert_allclose(lat(0).coords, P)


@pytest.mark.parametrize("n", range(5))
def test_cells_are_word_images(lat, n):
    L = lat(5)
    for k, w in enumerate(words(n)):
        corners = L.coords[L.cells[n][k]]
        expected = np.array([apply_contraction(w, p) for p in P])
        np.testing.assert_allclose(corners, expected, atol=1e-14)


@pytest.mark.parametrize("n", range(6))
def test_edges(lat, n):
    L = lat(6)
    e = L.edges(n)
    assert e.shape == (3 ** (n + 1), 2)
    lengths = np.linalg.norm(L.coords[e[:, 0]] - L.coords[e[:, 1]], axis=1)
    np.testing.assert_allclose(lengths, 2.0**-n)
    # each level-n edge appears once
    assert len({tuple(sorted(p)) for p in e.tolist()}) == len(e)


def test_junction_addresses(lat):
    L = lat(5)
    multi = L.multi_addressed()
    # every vertex born after level 0 is a junction of two cells
    np.testing.assert_array_equal(multi, np.arange(3, len(L)))
    for i in multi[:50]:
        addrs = L.addresses(int(i))
        assert len(addrs) == 2
        assert addrs[0] < addrs[1]
        for w, j in addrs:
            np.testing.assert_allclose(apply_contraction(w, P[j - 1]), L.coords[i], atol=1e-14)


@pytest.mark.parametrize("N", [1, 2, 3])
def test_preimage_map(lat, N):
    L = lat(6)
    targets, pre, wid = L.preimage_map(N)
    assert len(targets) == len(L) - vertex_count(N)
    for t, y, k in zip(targets.tolist(), pre.tolist(), wid.tolist()):
        w = word_from_index(k, N)
        np.testing.assert_allclose(apply_contraction(w, L.coords[y]), L.coords[t], atol=1e-14)


def test_preimage_via_agrees(lat):
    L = lat(5)
    N = 1
    targets, pre, _ = L.preimage_map(N)
    lookup = dict(zip(targets.tolist(), pre.tolist()))
    for i in L.multi_addressed():
        i = int(i)
        if L.birth[i] <= N:
            continue
        first = L.preimage_via(i, L.addresses(i)[0], N)
        assert first == lookup[i]


def test_cell_vertices(lat):
    L = lat(4)
    inside = L.cell_vertices((2,))
    assert len(inside) == vertex_count(3)
    assert np.all(L.coords[inside, 0] >= 0.5 - 1e-15)


@given(st.lists(st.integers(1, 3), min_size=0, max_size=8))
def test_word_index_round_trip(w):
    w = tuple(w)
    assert word_from_index(word_index(w), len(w)) == w


def test_words_are_lexicographic():
    ws = list(words(3))
    assert ws == sorted(ws)
    assert [word_index(w) for w in ws] == list(range(27))


@pytest.mark.parametrize("bad", [-1, MAX_LEVEL + 1])
def test_level_out_of_range(bad):
    with pytest.raises(LatticeError):
        build_lattice(bad)


def test_invalid_letter():
    with pytest.raises(LatticeError):
        word_index((1, 4))
    with pytest.raises(LatticeError):
        apply_contraction((0,), [0.0, 0.0])


def test_arrays_read_only(lat):
    L = lat(2)
    with pytest.raises(ValueError):
        L.coords[0, 0] = 1.0


def test_contraction_composition():
    x = np.array([0.3, 0.2])
    for a, b in itertools.product((1, 2, 3), repeat=2):
        np.testing.assert_allclose(
            apply_contraction((a, b), x), apply_contraction((a,), apply_contraction((b,), x))
        )
