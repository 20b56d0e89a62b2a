"""
Generalized Dixon machinery
===========================

Builds the cancellation matrix of n+1 polynomials in n elimination symbols,
divides out the Dixon denominator exactly, collects the Dixon (elimination)
matrix and takes its projection operator.

The elimination symbols are dependent-variable symbols; everything else
(the kept family, parameters, forcings, t) is treated as a coefficient.
"""

import logging
import math
import random
from dataclasses import dataclass, field
from typing import Dict, Sequence, Tuple

from .dsl import render_polynomial
from .errors import BarredOperand, CountMismatch, ZeroMatrix
from .symcore import (
    Monomial,
    Polynomial,
    PolyMatrix,
    Symbol,
    coefficient_decomposition,
    content,
    determinant_fraction_free,
    gcd_list,
    matrix_rank,
    matrix_rank_profile,
    poly_exact_div,
    sort_symbols,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CancellationMatrix:
    matrix: PolyMatrix
    elim_symbols: Tuple[Symbol, ...]
    kept_symbols: Tuple[Symbol, ...]

    @property
    def size(self) -> int:
        return len(self.elim_symbols)


@dataclass(frozen=True)
class DixonMatrixResult:
    row_monomials: Tuple[Monomial, ...]
    col_monomials: Tuple[Monomial, ...]
    matrix: PolyMatrix
    removed_row_factors: Tuple[Tuple[int, Polynomial], ...] = field(default=())
    removed_col_factors: Tuple[Tuple[int, Polynomial], ...] = field(default=())

    @property
    def shape(self) -> Tuple[int, int]:
        return self.matrix.rows, self.matrix.cols

    def reconstruct(self) -> Polynomial:
        """Sum of row monomial x entry x column monomial with removed factors re-applied."""
        row_factor = dict(self.removed_row_factors)
        col_factor = dict(self.removed_col_factors)
        total = Polynomial.zero()
        for r, rmono in enumerate(self.row_monomials):
            for c, cmono in enumerate(self.col_monomials):
                entry = self.matrix[r, c]
                if entry.is_zero:
                    continue
                entry = entry * row_factor.get(r, 1) * col_factor.get(c, 1)
                total = total + entry * Polynomial({rmono * cmono: 1})
        return total

    def render(self) -> str:
        """Text grid of rendered entries with monomial labels."""
        cells = [[render_polynomial(self.matrix[r, c]) for c in range(self.matrix.cols)]
                 for r in range(self.matrix.rows)]
        row_labels = [m.render() for m in self.row_monomials]
        col_labels = [m.render() for m in self.col_monomials]
        label_width = max(len(x) for x in row_labels)
        widths = [max(len(col_labels[c]), *(len(row[c]) for row in cells)) for c in range(len(col_labels))]
        lines = [" " * label_width + " | " + "  ".join(l.rjust(w) for l, w in zip(col_labels, widths))]
        for label, row in zip(row_labels, cells):
            lines.append(label.rjust(label_width) + " | " + "  ".join(x.rjust(w) for x, w in zip(row, widths)))
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {
            "rows": [m.render() for m in self.row_monomials],
            "cols": [m.render() for m in self.col_monomials],
            "entries": [[render_polynomial(self.matrix[r, c]) for c in range(self.matrix.cols)]
                        for r in range(self.matrix.rows)],
        }


@dataclass(frozen=True)
class Projection:
    value: Polynomial
    pivot_rows: Tuple[int, ...]
    pivot_cols: Tuple[int, ...]
    heuristic_unsound: bool = False


def build_cancellation_matrix(eqs: Sequence[Polynomial], elim: Sequence[Symbol]) -> CancellationMatrix:
    """
    Row k is the equation list with the first k elimination symbols barred (rows from 0).

    Raises:
        CountMismatch: len(eqs) != len(elim) + 1
    """
    if len(eqs) != len(elim) + 1:
        raise CountMismatch(f"{len(eqs)} equations for {len(elim)} elimination symbols")
    for eq in eqs:
        if any(s.is_barred for s in eq.symbols):
            raise BarredOperand("equations handed to the cancellation matrix must not be barred")
    rows = []
    for k in range(len(elim) + 1):
        mapping = {s: s.barred() for s in elim[:k]}
        rows.append([eq.substitute(mapping) for eq in eqs])
    kept = set().union(*(eq.symbols for eq in eqs)) - set(elim)
    return CancellationMatrix(PolyMatrix.from_rows(rows), tuple(elim), tuple(sort_symbols(kept)))


def divided_difference_matrix(c: CancellationMatrix) -> PolyMatrix:
    """
    Replace row k by (row k - row k-1) / (x_k - ~x_k) for k = N..1, using the original rows.

    The determinant of the result is the Dixon polynomial.
    """
    original = c.matrix.to_rows()
    rows = [list(r) for r in original]
    for k in range(c.size, 0, -1):
        x = c.elim_symbols[k - 1]
        divisor = Polynomial.symbol(x) - Polynomial.symbol(x.barred())
        rows[k] = [poly_exact_div(original[k][i] - original[k - 1][i], divisor)
                   for i in range(len(original[k]))]
        log.debug("divided row %d by %s - ~%s", k, x.name, x.name)
    return PolyMatrix.from_rows(rows)


def dixon_polynomial(c: CancellationMatrix) -> Polynomial:
    return determinant_fraction_free(divided_difference_matrix(c))


def _elimination_split(elim: Sequence[Symbol]) -> frozenset:
    return frozenset(elim) | frozenset(s.barred() for s in elim)


def strip_cascade_factors(c: CancellationMatrix) -> Tuple[Polynomial, Tuple[Polynomial, ...]]:
    """
    Dixon polynomial with row factors free of elimination symbols divided out.

    For each divided-difference row below the first, the part of the row GCD
    that involves no elimination symbol (barred or not) divides every Dixon
    matrix entry coming from that row; it is removed before the determinant.

    Returns:
        (theta', factors) with theta = theta' * product(factors)
    """
    rows = divided_difference_matrix(c).to_rows()
    split = _elimination_split(c.elim_symbols)
    factors = []
    for k in range(1, len(rows)):
        g = gcd_list(rows[k])
        if g.is_zero:
            continue
        factor = content(g, split)
        if factor.is_constant:
            continue
        factor = factor.normalized()
        rows[k] = [poly_exact_div(e, factor) for e in rows[k]]
        factors.append(factor)
        log.info("stripped cascade factor %s from row %d", render_polynomial(factor), k)
    return determinant_fraction_free(PolyMatrix.from_rows(rows)), tuple(factors)


def extract_dixon_matrix(theta: Polynomial, elim: Sequence[Symbol]) -> DixonMatrixResult:
    """Coefficient matrix of theta: rows by unbarred monomials, columns by barred ones, ascending."""
    unbarred = frozenset(elim)
    cells: Dict[Tuple[Monomial, Monomial], Polynomial] = {}
    for mono, coeff in coefficient_decomposition(theta, _elimination_split(elim)).items():
        row, col = mono.split(unbarred)
        cells[(row, col)] = coeff
    if not cells:
        unit = Monomial()
        return DixonMatrixResult((unit,), (unit,), PolyMatrix.from_rows([[Polynomial.zero()]]))
    row_monomials = sorted({r for r, _ in cells}, key=lambda m: m.sort_key)
    col_monomials = sorted({c for _, c in cells}, key=lambda m: m.sort_key)
    zero = Polynomial.zero()
    matrix = PolyMatrix.from_rows([[cells.get((r, c), zero) for c in col_monomials] for r in row_monomials])
    log.info("Dixon matrix %dx%d", matrix.rows, matrix.cols)
    return DixonMatrixResult(tuple(row_monomials), tuple(col_monomials), matrix)


def remove_row_col_gcd(d: DixonMatrixResult) -> DixonMatrixResult:
    """Divide every row, then every column, by the GCD of its entries; record the factors."""
    rows = d.matrix.to_rows()
    row_factors = dict(d.removed_row_factors)
    col_factors = dict(d.removed_col_factors)

    for i, row in enumerate(rows):
        g = gcd_list(row)
        if g.is_zero or g == 1:
            continue
        rows[i] = [poly_exact_div(e, g) for e in row]
        row_factors[i] = g * row_factors.get(i, 1)

    for j in range(len(rows[0])):
        g = gcd_list(row[j] for row in rows)
        if g.is_zero or g == 1:
            continue
        for row in rows:
            row[j] = poly_exact_div(row[j], g)
        col_factors[j] = g * col_factors.get(j, 1)

    return DixonMatrixResult(
        d.row_monomials,
        d.col_monomials,
        PolyMatrix.from_rows(rows),
        tuple(sorted(row_factors.items())),
        tuple(sorted(col_factors.items())),
    )


def _specialized(m: PolyMatrix, seed: int = 2015) -> PolyMatrix:
    """m with every symbol replaced by a seeded random integer."""
    rng = random.Random(seed)
    symbols = sort_symbols(set().union(*(e.symbols for e in m.entries)))
    values = {s: rng.randint(2, 10**6) for s in symbols}
    return PolyMatrix(m.rows, m.cols, tuple(e.specialize(values) for e in m.entries))


def _has_independent_column(m: PolyMatrix) -> bool:
    """
    True when some column is not in the span of the other columns.

    Checked on a random integer specialization of m, so every rank is a
    rank of a rational matrix. A specialization can only lower ranks.
    """
    if m.cols == 1:
        return not m.is_zero
    numeric = _specialized(m)
    rank = matrix_rank(numeric)
    for j in range(m.cols):
        others = [c for c in range(m.cols) if c != j]
        if matrix_rank(numeric.submatrix(range(m.rows), others)) < rank:
            return True
    return False


def projection_operator(d: DixonMatrixResult) -> Projection:
    """
    Determinant of the matrix, or of a maximal non-singular submatrix when it is singular.

    Raises:
        ZeroMatrix: every entry is zero
    """
    m = d.matrix
    if m.is_zero:
        raise ZeroMatrix("elimination matrix is identically zero")
    if m.is_square:
        det = determinant_fraction_free(m)
        if not det.is_zero:
            return Projection(det, tuple(range(m.rows)), tuple(range(m.cols)))
    pivot_rows, pivot_cols = matrix_rank_profile(m)
    value = determinant_fraction_free(m.submatrix(pivot_rows, pivot_cols))
    unsound = not _has_independent_column(m)
    if unsound:
        log.warning("no column of the %dx%d matrix is independent of the others; "
                    "projection operator may vanish identically on solutions", m.rows, m.cols)
    log.info("rank %d submatrix of a %dx%d matrix", len(pivot_cols), m.rows, m.cols)
    return Projection(value, tuple(pivot_rows), tuple(pivot_cols), unsound)


def dixon_size_bound(eqs: Sequence[Polynomial], elim: Sequence[Symbol]) -> int:
    """N! times the product of the maximal degree of each elimination symbol."""
    bound = math.factorial(len(elim))
    for sym in elim:
        bound *= max(1, max(eq.degree(sym) for eq in eqs))
    return bound
