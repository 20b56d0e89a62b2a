"""
Index reduction by the variable pencil
======================================

Differentiates equations of a DAE system until the number of equations is
one more than the number of dependent-variable symbols left to eliminate,
which is the precondition of the Dixon construction.

Phase 1 builds the pencil (equations x occurring dependent symbols).
Phase 2(b) differentiates algebraic equations round-robin while no
dependent variable exceeds its original highest order. Phase 2(c) then
differentiates the lowest-order differential equations, ties going to
the earliest declared.

Symbols fixed by a single-symbol equation (for example y5 = e(t)) are
"pinned": they cost no equation and are left out of the count and of
the reported elimination symbols.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Set, Tuple

from .dsl import DAESystem, render_polynomial
from .errors import NotReducible, UndeclaredSymbol
from .symcore import Polynomial, Symbol, sort_symbols, total_derivative
from .utils import load_settings

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class VariablePencil:
    row_labels: Tuple[str, ...]
    col_labels: Tuple[Symbol, ...]
    bits: Tuple[Tuple[int, ...], ...]

    @property
    def rows(self) -> int:
        return len(self.row_labels)

    @property
    def cols(self) -> int:
        return len(self.col_labels)

    def render(self) -> str:
        names = [c.name for c in self.col_labels]
        label_width = max((len(r) for r in self.row_labels), default=0)
        widths = [max(len(n), 1) for n in names]
        lines = [" " * label_width + " | " + "  ".join(n.rjust(w) for n, w in zip(names, widths))]
        for label, row in zip(self.row_labels, self.bits):
            cells = "  ".join(str(b).rjust(w) for b, w in zip(row, widths))
            lines.append(label.ljust(label_width) + " | " + cells)
        return "\n".join(lines)


@dataclass(frozen=True)
class ReductionResult:
    original: DAESystem
    enlarged: DAESystem
    upsilon: Tuple[int, ...]
    weak_index: int
    initial_pencil: VariablePencil
    pencil: VariablePencil
    target: Optional[Symbol]
    kept_family: Tuple[Symbol, ...]
    elimination_symbols: Tuple[Symbol, ...]
    pinned: Tuple[Symbol, ...]
    balanced: bool = True

    def to_dict(self) -> dict:
        return {
            "system": self.original.name,
            "target": self.target.name if self.target is not None else None,
            "upsilon": list(self.upsilon),
            "weak_index": self.weak_index,
            "kept_family": [s.name for s in self.kept_family],
            "elimination_symbols": [s.name for s in self.elimination_symbols],
            "pinned": [s.name for s in self.pinned],
            "equations": [
                {"label": label, "polynomial": render_polynomial(eq)}
                for label, eq in zip(self.enlarged.labels, self.enlarged.equations)
            ],
            "pencil": _pencil_dict(self.pencil),
            "initial_pencil": _pencil_dict(self.initial_pencil),
        }


def _pencil_dict(pencil: VariablePencil) -> dict:
    return {
        "rows": list(pencil.row_labels),
        "cols": [c.name for c in pencil.col_labels],
        "bits": [list(r) for r in pencil.bits],
    }


def _dependents(eq: Polynomial) -> Set[Symbol]:
    return {s for s in eq.symbols if s.is_dependent}


def equation_order(eq: Polynomial) -> int:
    """Highest derivative order of any dependent variable in eq."""
    return max((s.order for s in _dependents(eq)), default=0)


def build_variable_pencil(system: DAESystem) -> VariablePencil:
    if not system.equations:
        raise ValueError("cannot build the pencil of an empty system")
    cols = system.dependent_symbols()
    bits = []
    for eq in system.equations:
        present = eq.symbols
        bits.append(tuple(1 if c in present else 0 for c in cols))
    return VariablePencil(system.labels, tuple(cols), tuple(bits))


def classify_equations(system: DAESystem) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
    """
    Split equation positions into differential (F_o) and algebraic (F_a).

    :return: (F_o positions, F_a positions), each in declaration order
    """
    differential, algebraic = [], []
    for i, eq in enumerate(system.equations):
        (differential if equation_order(eq) >= 1 else algebraic).append(i)
    return tuple(differential), tuple(algebraic)


def pinned_symbols(system: DAESystem) -> Set[Symbol]:
    pinned = set()
    for eq in system.equations:
        deps = _dependents(eq)
        if len(deps) == 1:
            pinned |= deps
    return pinned


def kept_family(system: DAESystem, target: Optional[Symbol]) -> List[Symbol]:
    if target is None:
        return []
    return [s for s in system.dependent_symbols() if s.root == target]


def elimination_symbols(system: DAESystem, target: Optional[Symbol]) -> List[Symbol]:
    return [s for s in system.dependent_symbols() if target is None or s.root != target]


def required_equations(system: DAESystem, target: Optional[Symbol]) -> int:
    """Equations needed for a square elimination: non-pinned elimination symbols + 1."""
    pinned = pinned_symbols(system)
    return len([s for s in elimination_symbols(system, target) if s not in pinned]) + 1


def differentiation_budget(n: int, max_order: int, override: Optional[int] = None) -> int:
    if override is None:
        override = load_settings().max_differentiations
    if override is not None:
        return override
    return n * (max_order + 2)


class _Reducer:
    """Mutable state of one reduction run."""

    def __init__(self, system: DAESystem, target: Optional[Symbol]):
        self.system = system
        self.target = target
        self.equations: List[Polynomial] = list(system.equations)
        self.provenance: List[Tuple[int, int]] = list(system.provenance)
        self.latest: Dict[int, int] = {i: i for i in range(len(system.equations))}
        self.upsilon = [0] * len(system.equations)
        self.orders = system.orders()

    @property
    def spent(self) -> int:
        return sum(self.upsilon)

    def current(self) -> DAESystem:
        return self.system.with_equations(self.equations, self.provenance)

    def balanced(self) -> bool:
        return len(self.equations) == required_equations(self.current(), self.target)

    def derivative_of(self, origin: int) -> Polynomial:
        return total_derivative(self.equations[self.latest[origin]])

    def append(self, origin: int, derived: Polynomial) -> None:
        self.upsilon[origin] += 1
        self.latest[origin] = len(self.equations)
        self.equations.append(derived)
        self.provenance.append((origin, self.upsilon[origin]))
        log.debug("differentiated f%d (times=%d), %d equations", origin + 1, self.upsilon[origin],
                  len(self.equations))

    def homogeneous(self, eq: Polynomial) -> bool:
        return all(s.order <= self.orders.get(s.root, 0) for s in _dependents(eq))

    def algebraic_phase(self, algebraic: Sequence[int], budget: int) -> None:
        position = 0
        while algebraic and not self.balanced() and self.spent < budget:
            for step in range(len(algebraic)):
                origin = algebraic[(position + step) % len(algebraic)]
                derived = self.derivative_of(origin)
                if not derived.is_zero and self.homogeneous(derived):
                    break
            else:
                return
            position = (position + step + 1) % len(algebraic)
            self.append(origin, derived)

    def differential_phase(self, budget: int) -> None:
        max_order = max(self.orders.values(), default=0)
        while not self.balanced() and self.spent < budget:
            candidates = []
            for origin in sorted(self.latest):
                order = equation_order(self.equations[self.latest[origin]])
                if order < 1 or order > max_order:
                    continue
                derived = self.derivative_of(origin)
                if derived.is_zero:
                    continue
                candidates.append(((order, origin), derived))
            if not candidates:
                return
            (_, origin), derived = min(candidates, key=lambda c: c[0])
            self.append(origin, derived)

    def result(self, initial: VariablePencil, balanced: bool) -> ReductionResult:
        enlarged = self.current()
        pinned = pinned_symbols(enlarged)
        return ReductionResult(
            original=self.system,
            enlarged=enlarged,
            upsilon=tuple(self.upsilon),
            weak_index=max(self.upsilon, default=0),
            initial_pencil=initial,
            pencil=build_variable_pencil(enlarged),
            target=self.target,
            kept_family=tuple(kept_family(enlarged, self.target)),
            elimination_symbols=tuple(s for s in elimination_symbols(enlarged, self.target) if s not in pinned),
            pinned=tuple(sort_symbols(pinned)),
            balanced=balanced,
        )


def reduce_index(system: DAESystem, target: Optional[Symbol] = None,
                 max_differentiations: Optional[int] = None) -> ReductionResult:
    """
    Differentiate equations until they balance against the elimination symbols.

    Args:
        system: parsed DAE system
        target: dependent variable to keep, or None to eliminate everything
        max_differentiations: budget override (else DAELIM_MAX_DIFF, else n*(max r + 2))

    Returns:
        ReductionResult with the enlarged system, upsilon and the weak index

    Raises:
        NotReducible: the count condition cannot be met within the budget
    """
    if target is not None and target not in system.dependents:
        raise UndeclaredSymbol(f"{target.name} is not a declared dependent variable")
    reducer = _Reducer(system, target)
    initial = build_variable_pencil(system)
    budget = differentiation_budget(len(system.equations), max(reducer.orders.values(), default=0),
                                    max_differentiations)
    _, algebraic = classify_equations(system)
    log.info("reducing %s for %s: %d equations, budget %d", system.name,
             target.name if target is not None else "all variables", len(system.equations), budget)

    reducer.algebraic_phase(algebraic, budget)
    reducer.differential_phase(budget)

    if not reducer.balanced():
        partial = reducer.result(initial, balanced=False)
        needed = required_equations(partial.enlarged, target)
        raise NotReducible(
            f"{system.name}: {len(partial.enlarged.equations)} equations after "
            f"{reducer.spent} differentiations, {needed} needed",
            partial=partial,
        )
    result = reducer.result(initial, balanced=True)
    log.info("reduced %s: upsilon=%s, weak index %d", system.name, result.upsilon, result.weak_index)
    return result
