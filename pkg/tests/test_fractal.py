import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sgfractal.analysis import MeasureSpec, harmonic_extend
from sgfractal.field import VertexFunction, sample, sup_norm
from sgfractal.fractal import (
    BaseOperator,
    BoundaryMismatchWarning,
    ConvergenceError,
    DiscreteNorm,
    OperatorSizeError,
    ScalingFamily,
    SingularOperatorError,
    alpha_fractal,
    assemble_operator,
    estimate_inverse_norm,
    estimate_operator_norm,
    invert_operator,
    junction_consistency,
    rb_iterate,
    self_referential_residual,
    trial_fields,
)
from sgfractal.lattice import vertex_count

from oracles import axial_of, pointwise_oracle

FIG_F = "y^2*sin(x)/2"
FIG_B = "x*(x-1)*(y-sqrt3/2)*y^2*sin(0.5)/2"




def _construct(lat, f_expr, b_expr, family):
    f = sample(f_expr, lat)
    b = sample(b_expr, lat)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BoundaryMismatchWarning)
        return f, b, alpha_fractal(f, b, family)


@pytest.mark.parametrize(
    "f_expr,b_expr,entries,N,M",
    [
        (FIG_F, FIG_B, [0.9] * 3, 1, 4),
        ("x*y", "x^2", [0.3, -0.2, 0.5], 1, 5),
        ("sin(3*x)", "y", ["x/3", "0.2", "-(y^2)/2"], 1, 4),
        ("x+y", "cos(x)", [0.1 * (k % 4) - 0.15 for k in range(9)], 2, 5),
    ],
)
def test_matches_pointwise_oracle(lat, f_expr, b_expr, entries, N, M):
    L = lat(M)
    family = ScalingFamily(N, entries)
    _, _, F = _construct(L, f_expr, b_expr, family)
    oracle_entries = [e if isinstance(e, str) else float(e) for e in entries]
    expected = [pointwise_oracle(*axial_of(L, i), f_expr, b_expr, oracle_entries, N) for i in range(len(L))]
    np.testing.assert_allclose(F.values, expected, rtol=0, atol=1e-13)


def test_figure_config_properties(lat):
    L = lat(5)
    family = ScalingFamily.constant(1, 0.9)
    f = sample(FIG_F, L)
    b = sample(FIG_B, L)
    with pytest.warns(BoundaryMismatchWarning):
        F = alpha_fractal(f, b, family)
    assert len(F.values) == 366
    assert F.values[:6].tobytes() == f.values[:6].tobytes()
    resid = self_referential_residual(F, f, b, family)
    assert resid.max() <= 1e-10 * (1 + sup_norm(f))
    assert junction_consistency(F, f, b, family) <= 1e-12


def test_strict_boundary(lat):
    L = lat(3)
    with pytest.raises(ValueError, match="differs from seed"):
        alpha_fractal(sample(FIG_F, L), sample(FIG_B, L), ScalingFamily.constant(1, 0.5), strict_boundary=True)


def test_matching_boundary_is_silent(lat):
    L = lat(3)
    f = sample("x*y", L)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        alpha_fractal(f, f, ScalingFamily.constant(1, 0.5))


@pytest.mark.parametrize("T", ["id", "harmonic0", "blend:0.3"])
def test_zero_alpha_returns_seed(lat, T):
    L = lat(4)
    f = sample("exp(x)*y", L)
    b = VertexFunction(L, BaseOperator.parse(T).apply_values(f.values, L))
    F = alpha_fractal(f, b, ScalingFamily.constant(1, 0.0))
    assert F.values.tobytes() == f.values.tobytes()


def test_identity_base_returns_seed(lat):
    L = lat(5)
    f = sample("sin(4*x)+y", L)
    F = alpha_fractal(f, f, ScalingFamily.parse("0.4,-0.3,x/2", 1))
    np.testing.assert_array_equal(F.values, f.values)


def _random_config(rng, lat):
    N = int(rng.integers(1, 3))
    L = lat(6)
    coef = [float(c) for c in rng.normal(size=3)]
    f_expr = f"({coef[0]!r})*x + ({coef[1]!r})*y^2 + ({coef[2]!r})*sin(3*x*y)"
    b = VertexFunction(L, BaseOperator.parse(rng.choice(["id", "harmonic0", "blend:0.5"])).apply_values(
        sample(f_expr, L).values, L))
    if rng.random() < 0.5:
        entries = [float(v) for v in rng.uniform(-0.5, 0.5, size=3**N)]
    else:
        c = float(rng.uniform(-0.25, 0.25))
        entries = [f"({c!r})*(x+y)/2 + 0.25*x*y"] * 3**N
    return sample(f_expr, L), b, ScalingFamily(N, entries)


@pytest.mark.parametrize("seed", range(10))
def test_rb_agrees_with_sweep(lat, seed):
    rng = np.random.default_rng(seed)
    f, b, family = _random_config(rng, lat)
    assert family.sup_norm <= 0.5
    F = alpha_fractal(f, b, family)
    rb = rb_iterate(f, b, family, tol=1e-12)
    assert sup_norm(rb.function - F) <= 1e-11
    assert max(rb.rates, default=0.0) <= family.sup_norm + 0.05
    assert junction_consistency(F, f, b, family) <= 1e-12


def test_rb_convergence_error(lat):
    L = lat(4)
    f = sample("x", L)
    b = sample("x*y", L)
    with pytest.raises(ConvergenceError):
        rb_iterate(f, b, ScalingFamily.constant(1, 0.5), max_iter=1)


def test_rb_rejects_large_alpha(lat):
    L = lat(3)
    f = sample("x", L)
    with pytest.raises(ValueError):
        rb_iterate(f, f, ScalingFamily.constant(1, 1.2, unchecked=True))


# --- scaling families -------------------------------------------------------


def test_family_parse_forms():
    assert ScalingFamily.parse("0.3", 1).entries == (0.3, 0.3, 0.3)
    assert ScalingFamily.parse("0.1,0.2,0.3", 1).entries == (0.1, 0.2, 0.3)
    fam = ScalingFamily.parse("x/4", 2)
    assert len(fam.entries) == 9 and not fam.all_constant
    assert fam.sup_norm == 0.25
    assert ScalingFamily.table(1, {(1,): 0.1, (2,): 0.2, (3,): 0.3}).entries == (0.1, 0.2, 0.3)


@pytest.mark.parametrize("spec", ["1.0", "-1.5", "0.2,0.3,1.1", "2*x"])
def test_family_rejects_large(spec):
    with pytest.raises(ValueError):
        ScalingFamily.parse(spec, 1)
    assert ScalingFamily.parse(spec, 1, unchecked=True).sup_norm >= 1.0


def test_family_wrong_length():
    with pytest.raises(ValueError):
        ScalingFamily(2, [0.1, 0.2, 0.3])


@given(st.floats(-0.99, 0.99))
def test_constant_family_norms(c):
    fam = ScalingFamily.constant(1, c)
    assert fam.sup_norm == abs(c)
    assert fam.cbeta(0.8) == (abs(c), 0.0)
    assert fam.energy == 0.0
    assert fam.energy_norm == abs(c)
    assert fam.lq_weighted(MeasureSpec(), 2.0) == pytest.approx(c * c, rel=1e-15)
    assert fam.nowhere_zero == (c != 0.0)


def test_lq_weighted_nonuniform():
    fam = ScalingFamily.parse("0.1,0.2,0.4", 1)
    p = MeasureSpec((0.125, 0.75, 0.125))
    assert fam.lq_weighted(p, 2.0) == pytest.approx(0.125 * 0.01 + 0.75 * 0.04 + 0.125 * 0.16)


# --- base operators and the operator matrix -----------------------------------


def test_base_operators(lat):
    L = lat(4)
    v = sample("x^2*y", L).values
    assert BaseOperator.parse("id").apply_values(v, L).tobytes() == v.tobytes()
    h = BaseOperator.parse("harmonic0").apply_values(v, L)
    np.testing.assert_array_equal(h, harmonic_extend(v[:3], 4, L).values)
    bl = BaseOperator.parse("blend:0.25").apply_values(v, L)
    np.testing.assert_array_equal(bl[:3], v[:3])
    np.testing.assert_allclose(bl, 0.25 * v + 0.75 * h, atol=1e-15)
    Tm = BaseOperator.parse("harmonic0").matrix(L)
    np.testing.assert_allclose(Tm @ Tm, Tm, atol=1e-13)


@pytest.mark.parametrize("text", ["foo", "blend:1.5", "blend:-0.1"])
def test_base_operator_parse_errors(text):
    with pytest.raises(ValueError):
        BaseOperator.parse(text)


@pytest.mark.parametrize("seed", range(20))
def test_operator_linearity(lat, seed):
    rng = np.random.default_rng(100 + seed)
    L = lat(5)
    fam = ScalingFamily.parse("0.3,-0.2,x*y/3", 1)
    T = BaseOperator.parse("harmonic0")
    f, g = rng.normal(size=(2, len(L)))
    a, c = rng.normal(size=2)

    def F(v):
        return alpha_fractal(VertexFunction(L, v), VertexFunction(L, T.apply_values(v, L)), fam).values

    resid = np.max(np.abs(F(a * f + c * g) - (a * F(f) + c * F(g))))
    assert resid <= 1e-10


@pytest.mark.parametrize("N,spec", [(1, "0.4,-0.3,0.2"), (2, "x/3"), (1, "0.05")])
def test_matrix_reproduces_construction(lat, N, spec):
    L = lat(5)
    fam = ScalingFamily.parse(spec, N)
    T = BaseOperator.parse("blend:0.3")
    A = assemble_operator(fam, N, T, L)
    nN = vertex_count(N)
    np.testing.assert_array_equal(A[:nN], np.eye(len(L))[:nN])
    rng = np.random.default_rng(3)
    for _ in range(10):
        v = rng.normal(size=len(L))
        F = alpha_fractal(VertexFunction(L, v), VertexFunction(L, T.apply_values(v, L)), fam)
        np.testing.assert_allclose(A @ v, F.values, atol=1e-10)


def test_zero_alpha_matrix_is_identity(lat):
    L = lat(4)
    A = assemble_operator(ScalingFamily.constant(1, 0.0), 1, BaseOperator(), L)
    assert np.array_equal(A, np.eye(len(L)))


def test_operator_size_cap(lat):
    with pytest.raises(OperatorSizeError):
        assemble_operator(ScalingFamily.constant(1, 0.1), 1, BaseOperator(), lat(8))


def test_invert_operator(lat):
    L = lat(4)
    A = assemble_operator(ScalingFamily.constant(1, 0.3), 1, BaseOperator(), L)
    g = sample("x*y", L)
    f = invert_operator(A, g)
    assert isinstance(f, VertexFunction)
    np.testing.assert_allclose(A @ f.values, g.values, atol=1e-13)
    with pytest.raises(SingularOperatorError):
        invert_operator(np.zeros((3, 3)), np.ones(3))
    with pytest.raises(ValueError):
        invert_operator(np.zeros((2, 3)), np.ones(2))


# --- norm estimation --------------------------------------------------------


@pytest.mark.parametrize("kind", ["sup", "cbeta", "energy", "lq"])
def test_identity_norm_estimate(lat, kind):
    L = lat(4)
    norm = DiscreteNorm(kind)
    assert estimate_operator_norm(np.eye(len(L)), norm, L) == pytest.approx(1.0, rel=1e-14)
    assert estimate_operator_norm(2.5 * np.eye(len(L)), norm, L) == pytest.approx(2.5, rel=1e-14)
    est, resid = estimate_inverse_norm(2.0 * np.eye(len(L)), norm, L)
    assert est == pytest.approx(0.5, rel=1e-14) and resid == 0.0


def test_estimate_is_lower_bound_for_sup(lat):
    """The induced sup norm is the max absolute row sum."""
    L = lat(4)
    A = assemble_operator(ScalingFamily.parse("0.3,-0.4,0.2", 1), 1, BaseOperator(), L)
    exact = np.max(np.abs(A).sum(axis=1))
    assert estimate_operator_norm(A, DiscreteNorm("sup"), L) <= exact * (1 + 1e-12)


def test_trial_fields_deterministic(lat):
    L = lat(3)
    a = trial_fields(L, 20, 42)
    b = trial_fields(L, 20, 42)
    assert len(a) == 24
    assert [t for t, _ in a] == [t for t, _ in b]
    assert all(x.tobytes() == y.tobytes() for (_, x), (_, y) in zip(a, b))
    assert [t for t, _ in trial_fields(L, 20, 43)] != [t for t, _ in a]


def test_discrete_norm_validation():
    with pytest.raises(ValueError):
        DiscreteNorm("l7")
    assert "q=3.0" in DiscreteNorm("lq", q=3.0).describe()


def test_harmonic_functions_are_fixed(lat):
    L = lat(5)
    fam = ScalingFamily.constant(1, 0.1)
    T = BaseOperator()
    h = harmonic_extend([1.0, 0.0, 0.0], 5, L)
    F = alpha_fractal(h, VertexFunction(L, T.apply_values(h.values, L)), fam)
    assert sup_norm(F - h) <= 1e-10
    g = sample("x*y", L)
    G = alpha_fractal(g, VertexFunction(L, T.apply_values(g.values, L)), fam)
    assert sup_norm(G - g) > 1e-6

