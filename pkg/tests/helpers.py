import math

import numpy as np

from polyrlt.problem import EQ


def column_values(rel, key_values):
    """Relaxation column values implied by exact key values."""
    out = np.empty(rel.n_vars)
    for i, col in enumerate(rel.columns):
        out[i] = math.prod(key_values[k] ** m for k, m in col.entries)
    return out


def atom_values(x):
    from polyrlt.algebra import atom

    return {atom(j): float(v) for j, v in enumerate(x)}


def row_residuals(rel, y):
    """Signed residual of every row (>= 0 when satisfied, 0 for equalities)."""
    lhs = rel.matrix() @ y
    return lhs - np.asarray(rel.rhs)


def is_eq(rel):
    return np.array([s == EQ for s in rel.senses])
