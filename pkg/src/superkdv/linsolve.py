"""Exact sparse linear solving over the rationals."""

from __future__ import annotations

from fractions import Fraction


def solve_columns(columns: list[dict], rhs: dict):
    """Find x with sum_i x_i * columns[i] == rhs.

    Columns and ``rhs`` are sparse vectors (row key -> Fraction).  Returns a
    dict {column index: value} (free variables set to zero) or ``None`` when
    the system is inconsistent.
    """
    # Gaussian elimination on the augmented transposed system, keyed by pivot row
    pivots: dict = {}  # row key -> (vector, column combination)
    order = []
    for idx, col in enumerate(columns):
        vec = dict(col)
        combo = {idx: Fraction(1)}
        vec, combo = _reduce(vec, combo, pivots, order)
        if vec:
            row = min(vec)
            inv = 1 / vec[row]
            vec = {k: v * inv for k, v in vec.items()}
            combo = {k: v * inv for k, v in combo.items()}
            pivots[row] = (vec, combo)
            order.append(row)
    target, combo = _reduce(dict(rhs), {}, pivots, order)
    if target:
        return None
    return {k: -v for k, v in combo.items() if v}


def _reduce(vec, combo, pivots, order):
    # eliminate pivot rows smallest first; each pivot vector only has rows >= its pivot
    while True:
        hits = [r for r in vec if r in pivots]
        if not hits:
            return vec, combo
        row = min(hits)
        c = vec[row]
        pvec, pcombo = pivots[row]
        for target, src in ((vec, pvec), (combo, pcombo)):
            for k, v in src.items():
                nv = target.get(k, 0) - c * v
                if nv:
                    target[k] = nv
                else:
                    target.pop(k, None)
