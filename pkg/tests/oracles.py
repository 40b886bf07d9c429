"""Independent oracles shared by the tests."""

from fractions import Fraction

import numpy as np

from sgfractal.field import eval_field
from sgfractal.lattice import P, word_index


def axial_of(lattice, i):
    """Exact axial coordinates of vertex ``i`` as Fractions."""
    scale = 2**lattice.level
    k = lattice.keys[i]
    return Fraction(int(k[0]), scale), Fraction(int(k[1]), scale)


def cartesian(a, b):
    return float(a) + float(b) / 2.0, float(b) * (np.sqrt(3.0) / 2.0)


def quadratic_min_oracle(a, b, c):
    """Minimize the level-1 graph energy over the three midpoints.

    Unknowns u = (m12, m13, m23); edges of the three small triangles.
    """
    edges = [("1", "m12"), ("1", "m13"), ("m12", "m13"),
             ("2", "m12"), ("2", "m23"), ("m12", "m23"),
             ("3", "m13"), ("3", "m23"), ("m13", "m23")]
    idx = {"m12": 0, "m13": 1, "m23": 2}
    known = {"1": a, "2": b, "3": c}
    A = np.zeros((3, 3))
    rhs = np.zeros(3)
    for s, t in edges:
        for u, v in ((s, t), (t, s)):
            if u in idx:
                A[idx[u], idx[u]] += 1.0
                if v in idx:
                    A[idx[u], idx[v]] -= 1.0
                else:
                    rhs[idx[u]] += known[v]
    return np.linalg.solve(A, rhs)


def moments(p):
    """First two moments of x under the self-similar measure.

    Self-similarity gives E[x] = sum p_i a_i and
    E[x^2] = (2 E[x]^2 + sum p_i a_i^2) / 3 with a_i the x-coordinates of
    the corners.
    """
    a = P[:, 0]
    m1 = float(np.dot(p, a))
    m2 = (2.0 * m1 * m1 + float(np.dot(p, a * a))) / 3.0
    return m1, m2


def pointwise_oracle(a, b, f_expr, b_expr, entries, N):
    """Value of the fractal function at the exact axial point ``(a, b)``.

    Walks the self-referential equation down to ``V_N`` with Fractions:
    the cell containing the point is read off its axial coordinates.
    """
    scale = 2**N
    if (a * scale).denominator == 1 and (b * scale).denominator == 1:
        return eval_field(f_expr, *cartesian(a, b))
    ya, yb = a, b
    word = []
    for _ in range(N):
        if ya + yb <= Fraction(1, 2):
            word.append(1)
            ya, yb = 2 * ya, 2 * yb
        elif ya >= Fraction(1, 2):
            word.append(2)
            ya, yb = 2 * ya - 1, 2 * yb
        else:
            word.append(3)
            ya, yb = 2 * ya, 2 * yb - 1
    e = entries[word_index(word)]
    y = cartesian(ya, yb)
    alpha = e if isinstance(e, float) else eval_field(e, *y)
    Fy = pointwise_oracle(ya, yb, f_expr, b_expr, entries, N)
    return eval_field(f_expr, *cartesian(a, b)) + alpha * (Fy - eval_field(b_expr, *y))
