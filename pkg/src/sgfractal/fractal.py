"""Alpha-fractal functions on the gasket and the fractal operator.

The alpha-fractal function of a seed ``f`` with base ``b`` and scaling
family ``alpha = {alpha_w : |w| = N}`` satisfies, for ``x`` in the cell
``L_w(SG)``::

    f_alpha(x) = f(x) + alpha_w(y) * (f_alpha(y) - b(y)),   y = L_w^{-1}(x)

and equals ``f`` on ``V_N``.  On a finite lattice a vertex born at level
``m > N`` has its preimage in ``V_{m-N}``, so the values follow exactly by
sweeping levels upward (:func:`alpha_fractal`).  :func:`rb_iterate` solves
the same equation by fixed-point iteration and serves as a cross-check.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence, Union

import numpy as np
import scipy.linalg

from .analysis import (
    MeasureSpec,
    cbeta_norm,
    energy_norm,
    graph_energy,
    harmonic_step,
    lq_norm,
)
from .field import (
    FieldExpr,
    VertexFunction,
    compile_field,
    parse_expression,
    sample,
    sup_norm,
    to_text,
)
from .lattice import SGLattice, cached_lattice, vertex_count, word_from_index, word_index

__all__ = [
    "BoundaryMismatchWarning",
    "ConvergenceError",
    "SingularOperatorError",
    "OperatorSizeError",
    "ScalingFamily",
    "BaseOperator",
    "DiscreteNorm",
    "RBResult",
    "alpha_fractal",
    "rb_iterate",
    "rb_map",
    "apply_base_operator",
    "assemble_operator",
    "estimate_operator_norm",
    "estimate_inverse_norm",
    "invert_operator",
    "trial_fields",
    "self_referential_residual",
    "junction_consistency",
    "MAX_OPERATOR_LEVEL",
]

MAX_OPERATOR_LEVEL = 7


class BoundaryMismatchWarning(UserWarning):
    """The base function does not agree with the seed on ``V_0``."""


class ConvergenceError(RuntimeError):
    pass


class SingularOperatorError(np.linalg.LinAlgError):
    pass


class OperatorSizeError(MemoryError):
    pass


Entry = Union[float, FieldExpr]


# --- scaling families -------------------------------------------------------


class ScalingFamily:
    """The functions ``alpha_w`` for every word ``w`` of length ``N``.

    Each entry is a float constant or an expression in ``x, y``.  Norms of
    expression entries are estimated by sampling on the level
    ``sample_level`` lattice and are therefore lower bounds of the true
    suprema.
    """

    def __init__(
        self,
        N: int,
        entries: Sequence[Entry],
        sample_level: int = 6,
        unchecked: bool = False,
    ):
        if N < 1:
            raise ValueError(f"N must be >= 1, got {N}")
        if len(entries) != 3**N:
            raise ValueError(f"expected {3**N} entries for N={N}, got {len(entries)}")
        self.N = N
        self.entries: tuple[Entry, ...] = tuple(
            parse_expression(e) if isinstance(e, str) else (float(e) if not _is_expr(e) else e)
            for e in entries
        )
        self.sample_level = sample_level
        self._samples: dict[int, VertexFunction] = {}
        if not unchecked and self.sup_norm >= 1.0:
            raise ValueError(
                f"||alpha||_inf = {self.sup_norm:.12g} must be < 1 "
                "(pass unchecked=True to override)"
            )

    # constructors
    @classmethod
    def constant(cls, N: int, c: float, **kw) -> "ScalingFamily":
        return cls(N, [float(c)] * 3**N, **kw)

    @classmethod
    def table(cls, N: int, table: Mapping[tuple, Entry] | Sequence[Entry], **kw):
        if isinstance(table, Mapping):
            entries = [table[word_from_index(k, N)] for k in range(3**N)]
        else:
            entries = list(table)
        return cls(N, entries, **kw)

    @classmethod
    def expression(cls, N: int, expr: str | FieldExpr, **kw) -> "ScalingFamily":
        e = parse_expression(expr) if isinstance(expr, str) else expr
        return cls(N, [e] * 3**N, **kw)

    @classmethod
    def parse(cls, spec: str, N: int, **kw) -> "ScalingFamily":
        """Constant ``"0.3"``, table ``"0.1,0.2,0.3"`` or expression ``"x/4"``."""
        parts = [p.strip() for p in spec.split(",")]
        if len(parts) > 1:
            return cls(N, [_entry(p) for p in parts], **kw)
        e = _entry(spec)
        if isinstance(e, float):
            return cls.constant(N, e, **kw)
        return cls.expression(N, e, **kw)

    def describe(self):
        """JSON-friendly description."""
        out = [e if isinstance(e, float) else to_text(e) for e in self.entries]
        if len(set(map(str, out))) == 1:
            return out[0]
        return out

    def __repr__(self) -> str:
        return f"ScalingFamily(N={self.N}, {self.describe()!r})"

    @property
    def all_constant(self) -> bool:
        return all(isinstance(e, float) for e in self.entries)

    # sampling
    def _sampled(self, k: int) -> VertexFunction:
        e = self.entries[k]
        key = id(e)
        if key not in self._samples:
            lat = cached_lattice(self.sample_level)
            if isinstance(e, float):
                self._samples[key] = VertexFunction(lat, np.full(len(lat), e))
            else:
                self._samples[key] = sample(e, lat)
        return self._samples[key]

    def _per_word(self, fn) -> list[float]:
        cache: dict[int, float] = {}
        out = []
        for k, e in enumerate(self.entries):
            if id(e) not in cache:
                cache[id(e)] = fn(self._sampled(k))
            out.append(cache[id(e)])
        return out

    @property
    def word_sup_norms(self) -> list[float]:
        """``||alpha_w||_inf`` (equal to the L-infinity norm) per word."""
        return self._per_word(sup_norm)

    @property
    def sup_norm(self) -> float:
        return max(self.word_sup_norms)

    def cbeta(self, beta: float, n_max: int | None = None) -> tuple[float, float]:
        """``(max_w ||alpha_w||_{C^beta}, max_w seminorm)``."""
        vals = self._per_word(lambda g: cbeta_norm(g, beta, n_max))
        return max(v[0] for v in vals), max(v[1] for v in vals)

    @property
    def energy(self) -> float:
        """``E(alpha) = max_w E_M(alpha_w)`` at the sampling level."""
        return max(self._per_word(lambda g: graph_energy(g, g.lattice.level)))

    @property
    def energy_norm(self) -> float:
        return max(self._per_word(energy_norm))

    def lq_weighted(self, p: MeasureSpec, q: float) -> float:
        """``sum_w p_w ||alpha_w||_inf**q``."""
        sups = self.word_sup_norms
        weights = [p.weight(word_from_index(k, self.N)) for k in range(3**self.N)]
        return math.fsum(w * s**q for w, s in zip(weights, sups))

    @property
    def nowhere_zero(self) -> bool:
        """Some entry is bounded away from zero on the sampled vertices."""
        for k in range(len(self.entries)):
            if np.min(np.abs(self._sampled(k).values)) > 0.0:
                return True
        return False

    def values_at(self, lat: SGLattice) -> np.ndarray:
        """``alpha_w(y)`` for every vertex ``x`` born after level ``N``.

        Aligned with ``lat.preimage_map(N)``.
        """
        targets, pre, wid = lat.preimage_map(self.N)
        out = np.empty(len(targets))
        groups: dict[int, list[int]] = {}
        for k, e in enumerate(self.entries):
            groups.setdefault(id(e), []).append(k)
        for ks in groups.values():
            e = self.entries[ks[0]]
            mask = np.isin(wid, ks)
            if isinstance(e, float):
                out[mask] = e
            else:
                out[mask] = sample(e, lat).values[pre[mask]]
        return out

    def value(self, k: int, point) -> float:
        e = self.entries[k]
        if isinstance(e, float):
            return e
        return compile_field(e)(float(point[0]), float(point[1]))


def _is_expr(e) -> bool:
    return not isinstance(e, (int, float, np.floating, np.integer))


def _entry(text: str) -> Entry:
    try:
        return float(text)
    except ValueError:
        return parse_expression(text)


# --- base operators ---------------------------------------------------------


@dataclass(frozen=True)
class BaseOperator:
    """A linear operator fixing values on ``V_0``.

    ``identity``, ``harmonic0`` (harmonic function with the same ``V_0``
    values) or ``blend`` with weight ``lam`` on the identity.
    """

    kind: str = "harmonic0"
    lam: float = 0.0

    def __post_init__(self):
        if self.kind not in ("identity", "harmonic0", "blend"):
            raise ValueError(f"unknown base operator {self.kind!r}")
        if self.kind == "blend" and not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"blend weight must lie in [0, 1], got {self.lam}")

    @classmethod
    def parse(cls, text: str) -> "BaseOperator":
        if text in ("id", "identity"):
            return cls("identity")
        if text == "harmonic0":
            return cls("harmonic0")
        if text.startswith("blend:"):
            return cls("blend", float(text.split(":", 1)[1]))
        raise ValueError(f"unknown base operator {text!r}; use id, harmonic0 or blend:LAMBDA")

    def describe(self) -> str:
        if self.kind == "identity":
            return "id"
        if self.kind == "blend":
            return f"blend:{self.lam!r}"
        return self.kind

    def apply_values(self, values: np.ndarray, lat: SGLattice) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        if self.kind == "identity":
            return values.copy()
        h = np.zeros_like(values)
        h[:3] = values[:3]
        for n in range(lat.level):
            harmonic_step(h, lat, n)
        if self.kind == "harmonic0":
            return h
        out = self.lam * values + (1.0 - self.lam) * h
        out[:3] = values[:3]
        return out

    def matrix(self, lat: SGLattice) -> np.ndarray:
        return self.apply_values(np.eye(len(lat)), lat)


def apply_base_operator(T: BaseOperator, g: VertexFunction) -> VertexFunction:
    """``Tg``; boundary values on ``V_0`` are preserved exactly."""
    return VertexFunction(g.lattice, T.apply_values(g.values, g.lattice))


# --- construction -----------------------------------------------------------


def _check_boundary(f: np.ndarray, b: np.ndarray, strict: bool) -> float:
    gap = float(np.max(np.abs(f[:3] - b[:3])))
    if gap > 1e-12 * (1.0 + float(np.max(np.abs(f[:3])))):
        msg = f"base function differs from seed on V_0 by {gap:.6g}"
        if strict:
            raise ValueError(msg)
        warnings.warn(msg, BoundaryMismatchWarning, stacklevel=3)
    return gap


def _sweep(fv: np.ndarray, bv: np.ndarray, a: np.ndarray, lat: SGLattice, N: int) -> np.ndarray:
    """Level-by-level recursion; ``fv``/``bv`` may have a trailing column axis."""
    out = np.array(fv, dtype=float, copy=True)
    targets, pre, _ = lat.preimage_map(N)
    base = vertex_count(N)
    if fv.ndim == 2:
        a = a[:, None]
    for m in range(N + 1, lat.level + 1):
        lo, hi = vertex_count(m - 1) - base, vertex_count(m) - base
        t = targets[lo:hi]
        y = pre[lo:hi]
        out[t] = fv[t] + a[lo:hi] * (out[y] - bv[y])
    return out


def alpha_fractal(
    f: VertexFunction,
    b: VertexFunction,
    alpha: ScalingFamily,
    N: int | None = None,
    strict_boundary: bool = False,
) -> VertexFunction:
    """Alpha-fractal function of ``f`` with base ``b`` on ``f``'s lattice.

    Exact on the lattice: values on ``V_N`` are copied from ``f`` and
    every later vertex is filled from its preimage.  A mismatch between
    ``b`` and ``f`` on ``V_0`` emits :class:`BoundaryMismatchWarning`
    (or raises with ``strict_boundary``).
    """
    lat = f.lattice
    N = alpha.N if N is None else N
    if N != alpha.N:
        raise ValueError(f"scaling family has word length {alpha.N}, not {N}")
    if lat.level < N:
        raise ValueError(f"lattice level {lat.level} < N = {N}")
    _check_boundary(f.values, b.values, strict_boundary)
    a = alpha.values_at(lat)
    return VertexFunction(lat, _sweep(f.values, b.values, a, lat, N))


@dataclass
class RBResult:
    function: VertexFunction
    iterations: int
    distances: list[float] = field(default_factory=list)
    rates: list[float] = field(default_factory=list)


def rb_map(g: np.ndarray, f: np.ndarray, b: np.ndarray, a: np.ndarray,
           lat: SGLattice, N: int) -> np.ndarray:
    """One application of the fixed-point operator; ``V_N`` keeps ``f``."""
    targets, pre, _ = lat.preimage_map(N)
    out = np.array(f, dtype=float, copy=True)
    out[targets] = f[targets] + a * (g[pre] - b[pre])
    return out


def rb_iterate(
    f: VertexFunction,
    b: VertexFunction,
    alpha: ScalingFamily,
    N: int | None = None,
    tol: float = 1e-12,
    max_iter: int = 10_000,
) -> RBResult:
    """Fixed-point iteration from ``g0 = f`` until the sup step is ``<= tol``.

    ``rates`` holds successive ratios of sup distances; they are bounded
    by ``||alpha||_inf`` up to sampling of the scaling functions.
    """
    lat = f.lattice
    N = alpha.N if N is None else N
    if alpha.sup_norm >= 1.0:
        raise ValueError("fixed-point iteration needs ||alpha||_inf < 1")
    a = alpha.values_at(lat)
    g = f.values.copy()
    dists: list[float] = []
    rates: list[float] = []
    for it in range(1, max_iter + 1):
        g_new = rb_map(g, f.values, b.values, a, lat, N)
        d = float(np.max(np.abs(g_new - g)))
        if dists and dists[-1] > 0.0:
            rates.append(d / dists[-1])
        dists.append(d)
        g = g_new
        if d <= tol:
            return RBResult(VertexFunction(lat, g), it, dists, rates)
    raise ConvergenceError(f"no convergence to {tol} within {max_iter} iterations")


def self_referential_residual(
    result: VertexFunction, f: VertexFunction, b: VertexFunction, alpha: ScalingFamily
) -> np.ndarray:
    """Per-vertex residual of the self-referential equation (born after N)."""
    lat = result.lattice
    targets, pre, _ = lat.preimage_map(alpha.N)
    a = alpha.values_at(lat)
    F = result.values
    return np.abs(F[targets] - f.values[targets] - a * (F[pre] - b.values[pre]))


def junction_consistency(
    result: VertexFunction, f: VertexFunction, b: VertexFunction, alpha: ScalingFamily
) -> float:
    """Largest change when a multi-addressed vertex is recomputed through
    its non-canonical address.  Vertices of ``V_N`` must equal ``f``."""
    lat = result.lattice
    N = alpha.N
    F, fv, bv = result.values, f.values, b.values
    worst = 0.0
    for i in lat.multi_addressed():
        i = int(i)
        if lat.birth[i] <= N:
            worst = max(worst, abs(F[i] - fv[i]))
            continue
        word, corner = lat.addresses(i)[1]
        y = lat.preimage_via(i, (word, corner), N)
        k = word_index(word[:N])
        a = alpha.value(k, lat.coords[y])
        worst = max(worst, abs(fv[i] + a * (F[y] - bv[y]) - F[i]))
    return worst


# --- the operator as a matrix -----------------------------------------------


def assemble_operator(
    alpha: ScalingFamily, N: int | None, T: BaseOperator, lat: SGLattice,
    cap: int = MAX_OPERATOR_LEVEL,
) -> np.ndarray:
    """Dense matrix of ``f -> alpha_fractal(f, Tf)`` on ``lat``.

    Column ``j`` is the image of the indicator of vertex ``j``; all columns
    are swept together since the recursion is linear.
    """
    N = alpha.N if N is None else N
    if lat.level > cap:
        raise OperatorSizeError(f"lattice level {lat.level} exceeds dense cap {cap}")
    if alpha.sup_norm >= 1.0:
        raise ValueError("operator assembly needs ||alpha||_inf < 1")
    eye = np.eye(len(lat))
    return _sweep(eye, T.matrix(lat), alpha.values_at(lat), lat, N)


def invert_operator(matrix: np.ndarray, g, pivot_tol: float = 1e-12):
    """Solve ``matrix @ f = g`` by LU with partial pivoting.

    ``g`` may be a VertexFunction, a vector or a matrix of right-hand
    sides.  Raises SingularOperatorError when a pivot falls below
    ``pivot_tol``.
    """
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError("operator matrix must be square")
    rhs = g.values if isinstance(g, VertexFunction) else np.asarray(g, dtype=float)
    with warnings.catch_warnings():
        # an exactly zero pivot is reported below as SingularOperatorError
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(matrix, check_finite=True)
    if np.min(np.abs(np.diag(lu))) < pivot_tol:
        raise SingularOperatorError("operator matrix is numerically singular")
    x = scipy.linalg.lu_solve((lu, piv), rhs)
    if isinstance(g, VertexFunction):
        return VertexFunction(g.lattice, x)
    return x


# --- norms and estimation ---------------------------------------------------


@dataclass(frozen=True)
class DiscreteNorm:
    """One of the level-M norms: sup, cbeta, energy or lq."""

    kind: str = "sup"
    beta: float = 0.8
    n_max: int | None = None
    q: float = 2.0
    p: MeasureSpec = MeasureSpec()

    def __post_init__(self):
        if self.kind not in ("sup", "cbeta", "energy", "lq"):
            raise ValueError(f"unknown norm {self.kind!r}")

    @classmethod
    def parse(cls, text: str, beta: float = 0.8, n_max: int | None = None,
              q: float = 2.0, p: MeasureSpec | None = None) -> "DiscreteNorm":
        return cls(text, beta=beta, n_max=n_max, q=q, p=p or MeasureSpec())

    def __call__(self, values, lat: SGLattice) -> float:
        v = values.values if isinstance(values, VertexFunction) else values
        if self.kind == "sup":
            return sup_norm(v)
        if self.kind == "cbeta":
            n_max = lat.level if self.n_max is None else min(self.n_max, lat.level)
            return cbeta_norm(v, self.beta, n_max, lat)[0]
        if self.kind == "energy":
            return energy_norm(v, lat)
        return lq_norm(v, self.q, self.p, lat)

    def describe(self) -> str:
        if self.kind == "cbeta":
            return f"cbeta(beta={self.beta!r}, n_max={self.n_max})"
        if self.kind == "lq":
            return f"lq(q={self.q!r}, p={list(self.p.p)})"
        return self.kind


def trial_fields(lat: SGLattice, trials: int, seed: int) -> list[tuple[str, np.ndarray]]:
    """Seeded test fields: ``1, x, y``, harmonic ``(1,0,0)`` and random
    polynomials of degree at most 3 in ``x, y``."""
    out = [(text, sample(text, lat).values) for text in ("1", "x", "y")]
    h = np.zeros(len(lat))
    h[0] = 1.0
    for n in range(lat.level):
        harmonic_step(h, lat, n)
    out.append(("harmonic(1,0,0)", h))
    rng = np.random.default_rng(seed)
    monomials = [("1", 0), ("x", 1), ("y", 1), ("x^2", 2), ("x*y", 2), ("y^2", 2),
                 ("x^3", 3), ("x^2*y", 3), ("x*y^2", 3), ("y^3", 3)]
    for _ in range(trials):
        degree = int(rng.integers(1, 4))
        terms = [m for m, d in monomials if d <= degree]
        coef = rng.normal(size=len(terms))
        text = " + ".join(f"({float(c)!r})*{m}" for c, m in zip(coef, terms))
        out.append((text, sample(text, lat).values))
    return out


def estimate_operator_norm(
    matrix: np.ndarray,
    norm: DiscreteNorm,
    lat: SGLattice,
    trials: int = 20,
    seed: int = 42,
    fields: list[tuple[str, np.ndarray]] | None = None,
) -> float:
    """Lower bound ``max ||matrix f|| / ||f||`` over seeded test fields."""
    fields = trial_fields(lat, trials, seed) if fields is None else fields
    best = 0.0
    for _, v in fields:
        den = norm(v, lat)
        if den > 0.0:
            best = max(best, norm(matrix @ v, lat) / den)
    return best


def estimate_inverse_norm(
    matrix: np.ndarray,
    norm: DiscreteNorm,
    lat: SGLattice,
    trials: int = 20,
    seed: int = 42,
    fields: list[tuple[str, np.ndarray]] | None = None,
) -> tuple[float, float]:
    """Lower bound of ``||matrix^{-1}||`` and the worst solve residual."""
    fields = trial_fields(lat, trials, seed) if fields is None else fields
    rhs = np.column_stack([v for _, v in fields])
    sol = invert_operator(matrix, rhs)
    resid = float(np.max(np.abs(matrix @ sol - rhs)))
    best = 0.0
    for k in range(rhs.shape[1]):
        den = norm(rhs[:, k], lat)
        if den > 0.0:
            best = max(best, norm(sol[:, k], lat) / den)
    return best, resid
