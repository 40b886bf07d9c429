"""Energy, oscillation and self-similar-measure norms on the gasket.

All quantities are level-``M`` approximations computed on the vertices of
an :class:`~sgfractal.lattice.SGLattice`.  Sums run over cells in
lexicographic word order, so results are bitwise reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .field import VertexFunction, sup_norm
from .lattice import LatticeError, SGLattice, cached_lattice, vertex_count, word_index, words

__all__ = [
    "DIM_SG",
    "EnergySequence",
    "MeasureSpec",
    "graph_energy",
    "energy_sequence",
    "harmonic_extend",
    "harmonic_step",
    "energy_norm",
    "oscillation_total",
    "cbeta_norm",
    "measure_weights",
    "lq_norm",
    "measure_dimension",
]

DIM_SG = math.log(3.0) / math.log(2.0)


def _values(g) -> np.ndarray:
    return g.values if isinstance(g, VertexFunction) else np.asarray(g, dtype=float)


def _lattice_of(g, lat: SGLattice | None) -> SGLattice:
    if lat is not None:
        return lat
    if isinstance(g, VertexFunction):
        return g.lattice
    raise TypeError("a lattice is required for raw value arrays")


# --- energy -----------------------------------------------------------------


@dataclass(frozen=True)
class EnergySequence:
    """Renormalized graph energies ``E_0 .. E_M``."""

    values: tuple[float, ...]

    @property
    def last(self) -> float:
        return self.values[-1]

    def is_nondecreasing(self, rtol: float = 1e-12) -> bool:
        v = self.values
        return all(v[n - 1] <= v[n] + rtol * (1.0 + v[n]) for n in range(1, len(v)))


def graph_energy(g, n: int, lat: SGLattice | None = None) -> float:
    """``E_n(g) = (5/3)**n * sum over x ~_n y of (g(x) - g(y))**2``."""
    lat = _lattice_of(g, lat)
    if not 0 <= n <= lat.level:
        raise LatticeError(f"energy order {n} outside 0..{lat.level}")
    v = _values(g)
    e = lat.edges(n)
    d = v[e[:, 0]] - v[e[:, 1]]
    return float((5.0 / 3.0) ** n * np.sum(d * d))


def energy_sequence(g, lat: SGLattice | None = None) -> EnergySequence:
    lat = _lattice_of(g, lat)
    return EnergySequence(tuple(graph_energy(g, n, lat) for n in range(lat.level + 1)))


def harmonic_step(values: np.ndarray, lat: SGLattice, n: int) -> None:
    """Fill ``V_{n+1}`` from ``V_n`` in place with the energy minimizer.

    On a cell with corner values ``a, b, c`` the midpoint opposite ``c``
    gets ``(2a + 2b + c) / 5``.  ``values`` may carry extra trailing axes
    (one column per function).
    """
    parent = lat.cells[n]
    child = lat.cells[n + 1].reshape(-1, 3, 3)
    a = values[parent[:, 0]]
    b = values[parent[:, 1]]
    c = values[parent[:, 2]]
    # midpoint between corners i, j of w is corner j of child w.i
    values[child[:, 0, 1]] = (2.0 * a + 2.0 * b + c) / 5.0
    values[child[:, 0, 2]] = (2.0 * a + 2.0 * c + b) / 5.0
    values[child[:, 1, 2]] = (2.0 * b + 2.0 * c + a) / 5.0


def harmonic_extend(values, levels: int, lat: SGLattice | None = None) -> VertexFunction:
    """Harmonic extension of data on ``V_n`` by ``levels`` further levels.

    ``values`` has ``|V_n|`` entries in canonical order; ``n`` is inferred.
    The result lives on ``lat`` (built if omitted) of level ``n + levels``.
    """
    values = np.asarray(values, dtype=float)
    n = next((k for k in range(64) if vertex_count(k) == len(values)), None)
    if n is None:
        raise ValueError(f"{len(values)} is not a vertex count |V_n|")
    if levels < 1:
        raise ValueError("levels must be >= 1")
    if lat is None:
        lat = cached_lattice(n + levels)
    if lat.level != n + levels:
        raise ValueError(f"lattice level {lat.level} != {n + levels}")
    out = np.zeros(len(lat))
    out[: len(values)] = values
    for k in range(n, lat.level):
        harmonic_step(out, lat, k)
    return VertexFunction(lat, out)


def energy_norm(g, lat: SGLattice | None = None) -> float:
    """``||g||_E = ||g||_inf + sqrt(E_M(g))``."""
    lat = _lattice_of(g, lat)
    return sup_norm(_values(g)) + math.sqrt(graph_energy(g, lat.level, lat))


# --- oscillation ------------------------------------------------------------


def _cell_ranges(v: np.ndarray, lat: SGLattice) -> list[np.ndarray]:
    """Per-level arrays of sampled (max - min) over each cell."""
    top = lat.cells[lat.level]
    hi = v[top].max(axis=1)
    lo = v[top].min(axis=1)
    ranges = [None] * (lat.level + 1)
    ranges[lat.level] = hi - lo
    for n in range(lat.level - 1, -1, -1):
        hi = hi.reshape(-1, 3).max(axis=1)
        lo = lo.reshape(-1, 3).min(axis=1)
        ranges[n] = hi - lo
    return ranges


def oscillation_total(g, n: int, lat: SGLattice | None = None) -> float:
    """``R(n, g)``: sum over length-``n`` cells of the sampled oscillation."""
    lat = _lattice_of(g, lat)
    if not 0 <= n <= lat.level:
        raise LatticeError(f"oscillation order {n} outside 0..{lat.level}")
    return float(np.sum(_cell_ranges(_values(g), lat)[n]))


def cbeta_norm(
    g, beta: float, n_max: int | None = None, lat: SGLattice | None = None
) -> tuple[float, float]:
    """Truncated oscillation norm.

    Returns ``(norm, seminorm)`` where the seminorm is
    ``max_{1 <= n <= n_max} R(n, g) / 2**(n * (log3/log2 - beta))``.
    """
    lat = _lattice_of(g, lat)
    if not 0.0 < beta <= DIM_SG:
        raise ValueError(f"beta must lie in (0, log3/log2], got {beta}")
    if n_max is None:
        n_max = lat.level
    if not 0 <= n_max <= lat.level:
        raise LatticeError(f"n_max {n_max} outside 0..{lat.level}")
    v = _values(g)
    ranges = _cell_ranges(v, lat)
    semi = 0.0
    for n in range(1, n_max + 1):
        semi = max(semi, float(np.sum(ranges[n])) / 2.0 ** (n * (DIM_SG - beta)))
    return sup_norm(v) + semi, semi


# --- self-similar measures --------------------------------------------------


@dataclass(frozen=True)
class MeasureSpec:
    """Probability weights ``(p1, p2, p3)`` of a self-similar measure."""

    p: tuple[float, float, float] = (1 / 3, 1 / 3, 1 / 3)

    def __post_init__(self):
        p = tuple(float(v) for v in self.p)
        if len(p) != 3:
            raise ValueError("a measure needs exactly three weights")
        if any(v <= 0.0 for v in p) or abs(sum(p) - 1.0) > 1e-12:
            raise ValueError(f"weights must be positive and sum to 1, got {p}")
        object.__setattr__(self, "p", p)

    @classmethod
    def uniform(cls) -> "MeasureSpec":
        return cls((1 / 3, 1 / 3, 1 / 3))

    @classmethod
    def parse(cls, text: str) -> "MeasureSpec":
        return cls(tuple(float(t) for t in text.split(",")))

    def weight(self, w: Sequence[int]) -> float:
        out = 1.0
        for letter in w:
            out *= self.p[letter - 1]
        return out


def _weight_vector(p: MeasureSpec, n: int) -> np.ndarray:
    w = np.ones(1)
    pv = np.array(p.p)
    for _ in range(n):
        w = np.kron(w, pv)
    return w


def measure_weights(p: MeasureSpec, n: int) -> dict[tuple, float]:
    """``{w: p_w}`` for every word of length ``n``."""
    vec = _weight_vector(p, n)
    return {w: float(vec[word_index(w)]) for w in words(n)}


def lq_norm(g, q: float, p: MeasureSpec | None = None, lat: SGLattice | None = None,
            level: int | None = None) -> float:
    """Cell-mean quadrature of ``(integral |g|**q d nu_p)**(1/q)``.

    Each finest cell ``w`` contributes ``p_w * |mean of its 3 corners|**q``.
    ``level`` selects a coarser quadrature level than the lattice's own.
    """
    lat = _lattice_of(g, lat)
    if q < 1.0:
        raise ValueError(f"q must be >= 1, got {q}")
    p = p or MeasureSpec.uniform()
    n = lat.level if level is None else level
    if not 0 <= n <= lat.level:
        raise LatticeError(f"quadrature level {n} outside 0..{lat.level}")
    v = _values(g)
    c = v[lat.cells[n]]
    # anchored mean and max-scaling keep constants exact
    means = np.abs(c[:, 0] + ((c[:, 1] - c[:, 0]) + (c[:, 2] - c[:, 0])) / 3.0)
    top = float(means.max())
    if top == 0.0:
        return 0.0
    weights = _weight_vector(p, n)
    ratio = np.sum(weights * (means / top) ** q) / np.sum(weights)
    return float(top * ratio ** (1.0 / q))


def measure_dimension(p: MeasureSpec) -> float:
    """``-(sum p_i log p_i) / log 2``; equals log3/log2 for uniform weights."""
    return -math.fsum(v * math.log(v) for v in p.p) / math.log(2.0)
