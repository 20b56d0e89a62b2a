"""
Differential-algebraic elimination
==================================

Runs index reduction, then the Dixon construction with the kept family
(the target variable and its derivatives) treated as coefficients, and
returns a single ODE in the target: the differential-algebraic resultant.

Features:
- One target (`differential_algebraic_resultant`) or all targets
  concurrently (`eliminate_each`)
- Extraneous factors (free of the kept family) are divided out and reported
- Kept-family monomials and repeated factors are removed with a warning
- Systems short of equations (pinned symbols) fall back to the smallest
  subsystem with one equation more than it eliminates
- `keep=None` eliminates every dependent symbol (differential resultant)
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, List, Optional, Sequence, Tuple, Union

from .dixon import (
    CancellationMatrix,
    DixonMatrixResult,
    Projection,
    build_cancellation_matrix,
    extract_dixon_matrix,
    projection_operator,
    remove_row_col_gcd,
    strip_cascade_factors,
)
from .dsl import DAESystem, render_polynomial
from .errors import NotReducible, ResultantVanishes, ZeroMatrix
from .reduction import ReductionResult, reduce_index
from .symcore import (
    Polynomial,
    Symbol,
    content,
    monomial_content,
    poly_exact_div,
    sort_symbols,
    squarefree_part,
)
from .utils import load_settings

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class EliminationMatrix:
    """Everything up to (not including) the projection operator."""

    reduction: ReductionResult
    labels: Tuple[str, ...]
    equations: Tuple[Polynomial, ...]
    elimination_symbols: Tuple[Symbol, ...]
    cancellation: CancellationMatrix
    cascade_factors: Tuple[Polynomial, ...]
    extracted: DixonMatrixResult
    stripped: DixonMatrixResult


@dataclass(frozen=True)
class EliminationResult:
    kept: Optional[Symbol]
    kept_family: Tuple[Symbol, ...]
    resultant: Polynomial
    extraneous_factors: Tuple[Polynomial, ...]
    matrix_rows: int
    matrix_cols: int
    reduction: ReductionResult
    matrix: DixonMatrixResult
    projection: Projection
    warnings: Tuple[str, ...] = field(default=())

    def to_dict(self) -> dict:
        return {
            "system": self.reduction.original.name,
            "kept": self.kept.name if self.kept is not None else None,
            "upsilon": list(self.reduction.upsilon),
            "weak_index": self.reduction.weak_index,
            "matrix_rows": self.matrix_rows,
            "matrix_cols": self.matrix_cols,
            "resultant": render_polynomial(self.resultant),
            "extraneous_factors": [render_polynomial(f) for f in self.extraneous_factors],
            "warnings": list(self.warnings),
        }


Outcome = Union[EliminationResult, Exception]


def _mentions(p: Polynomial, family: frozenset) -> bool:
    return bool(p.symbols & family)


def _without_rational_content(p: Polynomial) -> Polynomial:
    return poly_exact_div(p, Polynomial.constant(p.rational_content()))


def _dixon_symbols(equations: Sequence[Polynomial], family: frozenset) -> List[Symbol]:
    present = set().union(*(eq.symbols for eq in equations))
    return sort_symbols(s for s in present if s.is_dependent and s not in family)


def select_subsystem(equations: Sequence[Polynomial], family: frozenset) -> Optional[Tuple[int, ...]]:
    """
    Positions of the equations handed to the Dixon construction.

    All of them when they number one more than their elimination symbols.
    Otherwise the smallest subsystem with that property which mentions the
    kept family (earliest positions first), or None.
    """
    everything = tuple(range(len(equations)))
    if len(equations) == len(_dixon_symbols(equations, family)) + 1:
        return everything
    for size in range(1, len(equations)):
        for chosen in combinations(everything, size):
            subset = [equations[i] for i in chosen]
            if family and not any(_mentions(eq, family) for eq in subset):
                continue
            if size == len(_dixon_symbols(subset, family)) + 1:
                return chosen
    return None


def build_elimination_matrix(system: DAESystem, keep: Optional[Symbol] = None,
                             max_differentiations: Optional[int] = None) -> EliminationMatrix:
    """
    Reduce the system and build its elimination matrix, before and after GCD stripping.

    Equations are divided by their rational content first. Pinned symbols
    stay in the elimination set together with their pinning equations, so
    when the reduced system as a whole is short of equations a subsystem
    is used (see select_subsystem).

    Raises:
        NotReducible: reduction fails, or no subsystem has one equation
            more than its elimination symbols
    """
    reduction = reduce_index(system, keep, max_differentiations)
    enlarged = reduction.enlarged
    family = frozenset(reduction.kept_family)
    chosen = select_subsystem(enlarged.equations, family)
    if chosen is None:
        everything = _dixon_symbols(enlarged.equations, family)
        raise NotReducible(
            f"{system.name}: {len(enlarged.equations)} equations for {len(everything)} elimination "
            f"symbols and no subsystem with one equation more than it eliminates",
            partial=reduction,
        )
    labels = tuple(enlarged.labels[i] for i in chosen)
    equations = tuple(_without_rational_content(enlarged.equations[i]) for i in chosen)
    elim = tuple(_dixon_symbols(equations, family))
    if len(chosen) < len(enlarged.equations):
        log.info("%s: eliminating %s from the subsystem %s", system.name,
                 ", ".join(s.name for s in elim) or "nothing", ", ".join(labels))
    cancellation = build_cancellation_matrix(equations, elim)
    theta, cascade = strip_cascade_factors(cancellation)
    extracted = extract_dixon_matrix(theta, elim)
    stripped = remove_row_col_gcd(extracted)
    log.info("%s: elimination matrix %dx%d (%d cascade factors)", system.name,
             stripped.matrix.rows, stripped.matrix.cols, len(cascade))
    return EliminationMatrix(reduction, labels, equations, elim, cancellation, cascade, extracted, stripped)


def _reduce_kept_factors(resultant: Polynomial, family: frozenset,
                         extraneous: List[Polynomial], warnings: List[str]) -> Polynomial:
    """Strip the part free of the kept family, then kept-family monomials and repeated factors."""
    stray = content(resultant, family)
    if not stray.is_constant:
        stray = stray.normalized()
        resultant = poly_exact_div(resultant, stray)
        extraneous.append(stray)

    monomial = monomial_content(resultant, family)
    if not monomial.is_unit:
        resultant = poly_exact_div(resultant, Polynomial({monomial: 1}))
        warnings.append(f"removed the kept-family factor {monomial.render()}")

    reduced = squarefree_part(resultant, family)
    repeated = poly_exact_div(resultant, reduced)
    if not repeated.is_constant:
        warnings.append(f"removed the repeated factor {render_polynomial(repeated.normalized())}")
    return reduced


def differential_algebraic_resultant(system: DAESystem, keep: Optional[Symbol] = None,
                                     max_differentiations: Optional[int] = None) -> EliminationResult:
    """
    Eliminate every dependent symbol outside the kept family.

    Args:
        system: parsed DAE system
        keep: dependent variable to keep; None eliminates all of them
        max_differentiations: reduction budget override

    Returns:
        EliminationResult whose resultant is normalized (integer content 1,
        positive leading coefficient)

    Raises:
        NotReducible: from index reduction
        ResultantVanishes: the elimination matrix is identically zero
    """
    built = build_elimination_matrix(system, keep, max_differentiations)
    reduction, matrix = built.reduction, built.stripped
    try:
        projection = projection_operator(matrix)
    except ZeroMatrix as e:
        raise ResultantVanishes(f"{system.name}: {e}", partial=reduction) from None

    family = frozenset(reduction.kept_family)
    row_factors = dict(matrix.removed_row_factors)
    col_factors = dict(matrix.removed_col_factors)
    removed = [row_factors[i] for i in projection.pivot_rows if i in row_factors]
    removed += [col_factors[j] for j in projection.pivot_cols if j in col_factors]
    removed += list(built.cascade_factors)

    warnings: List[str] = []
    if projection.heuristic_unsound:
        warnings.append("no independent column in the elimination matrix; the resultant may be extraneous")

    # Removed factors that mention the kept family go back in; the rest are extraneous.
    resultant = projection.value
    extraneous: List[Polynomial] = []
    for factor in removed:
        if keep is None or _mentions(factor, family):
            resultant = resultant * factor
        elif not factor.is_constant:
            extraneous.append(factor.normalized())
    if family:
        resultant = _reduce_kept_factors(resultant, family, extraneous, warnings)
    resultant = resultant.normalized()

    for message in warnings:
        log.warning("%s: %s", system.name, message)
    kept_family = tuple(sort_symbols(s for s in resultant.symbols if s in family))
    log.info("%s: resultant with %d terms, %d extraneous factors", system.name, len(resultant), len(extraneous))
    return EliminationResult(
        kept=keep,
        kept_family=kept_family,
        resultant=resultant,
        extraneous_factors=tuple(extraneous),
        matrix_rows=matrix.matrix.rows,
        matrix_cols=matrix.matrix.cols,
        reduction=reduction,
        matrix=matrix,
        projection=projection,
        warnings=tuple(warnings),
    )


def eliminate_each(system: DAESystem, targets: Sequence[Symbol], workers: Optional[int] = None,
                   max_differentiations: Optional[int] = None) -> Dict[Symbol, Outcome]:
    """
    Resultant of every target, in target order.

    A failing target maps to its exception instead of a result; the others
    still run.
    """
    if not targets:
        raise ValueError("at least one target is required")
    if workers is None:
        workers = load_settings().workers

    def run(target: Symbol) -> Outcome:
        try:
            return differential_algebraic_resultant(system, target, max_differentiations)
        except Exception as e:
            log.error("%s: elimination keeping %s failed: %s", system.name, target.name, e)
            return e

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        outcomes = list(pool.map(run, targets))
    return dict(zip(targets, outcomes))
