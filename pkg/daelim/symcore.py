"""
Algebra kernel
==============

Exact arithmetic on sparse multivariate polynomials with rational
coefficients, the total derivative d/dt, and the three heavy operations the
elimination pipeline leans on: exact division, multivariate GCD and the
fraction-free determinant.

Features:
- Structural symbols: t, dependent variables and their derivatives,
  parameters, forcing functions and their derivatives, barred twins
- One global symbol order fixing every monomial and matrix ordering
- Sparse term-map polynomials over Fraction coefficients
- Exact division and Bareiss elimination in sympy's sparse polynomial rings
- Multivariate GCD by recursive content / primitive part with subresultant
  PRS at the base (sympy's dense euclidtools)
- Square-free parts from the GCD with a partial derivative, without
  factoring
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from types import MappingProxyType
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from sympy import QQ, ZZ
from sympy.polys.densebasic import dmp_from_dict, dmp_to_dict
from sympy.polys.euclidtools import dmp_rr_prs_gcd
from sympy.polys.orderings import lex
from sympy.polys.polyerrors import ExactQuotientFailed
from sympy.polys.rings import PolyRing

from .errors import BarredOperand, NotDivisible, NotSquare

log = logging.getLogger(__name__)

Coefficient = Union[int, Fraction]


# ---------------------------------------------------------------------------
# Symbols
# ---------------------------------------------------------------------------

class SymbolKind(str, Enum):
    TIME = "time"
    DEPENDENT = "dependent"
    DERIVATIVE = "derivative"
    PARAMETER = "parameter"
    FORCING = "forcing"
    FORCING_DERIVATIVE = "forcing-derivative"
    BARRED = "barred"


# Position of each kind in the global order, lowest first:
# t < forcings < parameters < dependent-variable symbols.
_KIND_RANK = {
    SymbolKind.TIME: 0,
    SymbolKind.FORCING: 1,
    SymbolKind.FORCING_DERIVATIVE: 1,
    SymbolKind.PARAMETER: 2,
    SymbolKind.DEPENDENT: 3,
    SymbolKind.DERIVATIVE: 3,
    SymbolKind.BARRED: 3,
}


def derivative_name(name: str, order: int) -> str:
    """Display name of the order-th derivative: apostrophes up to 3, then D(name,k)."""
    if order <= 3:
        return name + "'" * order
    return f"D({name},{order})"


@dataclass(frozen=True, eq=False)
class Symbol:
    """
    A named indeterminate.

    Identity is structural: kind rank, declaration index, derivative order,
    barred flag and root name. The name of a derivative or barred symbol is
    for display only, so derivative symbols can be created anywhere without
    a shared table.
    """

    name: str
    kind: SymbolKind
    index: int = 0
    order: int = 0
    base: Optional["Symbol"] = None
    _key: tuple = field(init=False, repr=False)
    _hash: int = field(init=False, repr=False)

    def __post_init__(self):
        if self.order < 0:
            raise ValueError(f"negative derivative order for {self.name}")
        root = self.base.name if self.base is not None else self.name
        barred = 0 if self.kind is SymbolKind.BARRED else 1
        key = (_KIND_RANK[self.kind], self.index, self.order, barred, root)
        object.__setattr__(self, "_key", key)
        object.__setattr__(self, "_hash", hash(key))

    @classmethod
    def time(cls) -> "Symbol":
        return cls("t", SymbolKind.TIME)

    @classmethod
    def dependent(cls, name: str, index: int) -> "Symbol":
        return cls(name, SymbolKind.DEPENDENT, index)

    @classmethod
    def parameter(cls, name: str, index: int) -> "Symbol":
        return cls(name, SymbolKind.PARAMETER, index)

    @classmethod
    def forcing(cls, name: str, index: int) -> "Symbol":
        return cls(name, SymbolKind.FORCING, index)

    def __eq__(self, other) -> bool:
        return isinstance(other, Symbol) and self._key == other._key

    def __hash__(self) -> int:
        return self._hash

    def __lt__(self, other: "Symbol") -> bool:
        return self._key < other._key

    def __repr__(self) -> str:
        return f"Symbol({self.name!r})"

    def __str__(self) -> str:
        return self.name

    @property
    def sort_key(self) -> tuple:
        return self._key

    @property
    def root(self) -> "Symbol":
        return self.base if self.base is not None else self

    @property
    def is_dependent(self) -> bool:
        """A dependent variable or one of its derivatives (never barred)."""
        return self.kind in (SymbolKind.DEPENDENT, SymbolKind.DERIVATIVE)

    @property
    def is_forcing(self) -> bool:
        return self.kind in (SymbolKind.FORCING, SymbolKind.FORCING_DERIVATIVE)

    @property
    def is_barred(self) -> bool:
        return self.kind is SymbolKind.BARRED

    def derivative(self, k: int = 1) -> "Symbol":
        """The symbol k derivative orders above this one."""
        if self.is_dependent:
            kind = SymbolKind.DERIVATIVE
        elif self.is_forcing:
            kind = SymbolKind.FORCING_DERIVATIVE
        else:
            raise ValueError(f"{self.name} has no derivative symbol")
        root = self.root
        order = self.order + k
        if order == 0:
            return root
        return Symbol(derivative_name(root.name, order), kind, root.index, order, root)

    def barred(self) -> "Symbol":
        if not self.is_dependent:
            raise ValueError(f"only dependent-variable symbols have barred twins, not {self.name}")
        root = self.root
        return Symbol("~" + self.name, SymbolKind.BARRED, root.index, self.order, root)

    def unbarred(self) -> "Symbol":
        if not self.is_barred:
            return self
        return self.root.derivative(self.order) if self.order else self.root


def sort_symbols(symbols: Iterable[Symbol], descending: bool = False) -> List[Symbol]:
    return sorted(symbols, key=lambda s: s._key, reverse=descending)


# ---------------------------------------------------------------------------
# Monomials
# ---------------------------------------------------------------------------

class Monomial:
    """Power product of symbols; stored as (symbol, exponent) pairs, largest symbol first."""

    __slots__ = ("_items", "_hash")

    def __init__(self, exponents: Union[Mapping[Symbol, int], Iterable[Tuple[Symbol, int]]] = ()):
        pairs = exponents.items() if isinstance(exponents, Mapping) else exponents
        merged: Dict[Symbol, int] = {}
        for sym, exp in pairs:
            if exp < 0:
                raise ValueError(f"negative exponent for {sym.name}")
            if exp:
                merged[sym] = merged.get(sym, 0) + exp
        self._items = tuple(sorted(merged.items(), key=lambda se: se[0]._key, reverse=True))
        self._hash = hash(self._items)

    @classmethod
    def of(cls, sym: Symbol, exp: int = 1) -> "Monomial":
        return cls(((sym, exp),))

    def __iter__(self) -> Iterator[Tuple[Symbol, int]]:
        return iter(self._items)

    def __len__(self) -> int:
        return len(self._items)

    def __eq__(self, other) -> bool:
        return isinstance(other, Monomial) and self._items == other._items

    def __hash__(self) -> int:
        return self._hash

    def __lt__(self, other: "Monomial") -> bool:
        return self.sort_key < other.sort_key

    def __mul__(self, other: "Monomial") -> "Monomial":
        if not self._items:
            return other
        if not other._items:
            return self
        return Monomial(self._items + other._items)

    def __repr__(self) -> str:
        return f"Monomial({self.render()})"

    @property
    def sort_key(self) -> tuple:
        # Lexicographic comparison of these tuples is the global lex order.
        return tuple((sym._key, exp) for sym, exp in self._items)

    @property
    def is_unit(self) -> bool:
        return not self._items

    @property
    def symbols(self) -> Tuple[Symbol, ...]:
        return tuple(sym for sym, _ in self._items)

    @property
    def total_degree(self) -> int:
        return sum(exp for _, exp in self._items)

    def degree(self, sym: Symbol) -> int:
        for s, exp in self._items:
            if s == sym:
                return exp
        return 0

    def lower(self, sym: Symbol) -> "Monomial":
        """This monomial with the exponent of sym decreased by one."""
        return Monomial((s, e - 1 if s == sym else e) for s, e in self._items)

    def split(self, symbols) -> Tuple["Monomial", "Monomial"]:
        inside = [(s, e) for s, e in self._items if s in symbols]
        outside = [(s, e) for s, e in self._items if s not in symbols]
        return Monomial(inside), Monomial(outside)

    def substitute(self, mapping: Mapping[Symbol, Symbol]) -> "Monomial":
        return Monomial((mapping.get(s, s), e) for s, e in self._items)

    def render(self) -> str:
        if not self._items:
            return "1"
        return "*".join(s.name if e == 1 else f"{s.name}^{e}" for s, e in self._items)


ONE_MONOMIAL = Monomial()


# ---------------------------------------------------------------------------
# Polynomials
# ---------------------------------------------------------------------------

class Polynomial:
    """
    Immutable sparse polynomial: a map from Monomial to nonzero Fraction.

    Arithmetic operators accept ints, Fractions and Symbols on either side.
    """

    __slots__ = ("_terms",)

    def __init__(self, terms: Union[Mapping[Monomial, Coefficient], Iterable[Tuple[Monomial, Coefficient]], None] = None):
        merged: Dict[Monomial, Fraction] = {}
        if terms:
            pairs = terms.items() if isinstance(terms, Mapping) else terms
            for mono, coeff in pairs:
                merged[mono] = merged.get(mono, 0) + Fraction(coeff)
        self._terms = {m: c for m, c in merged.items() if c}

    @classmethod
    def _wrap(cls, terms: Dict[Monomial, Fraction]) -> "Polynomial":
        # terms already canonical
        poly = cls.__new__(cls)
        poly._terms = terms
        return poly

    @classmethod
    def zero(cls) -> "Polynomial":
        return cls._wrap({})

    @classmethod
    def constant(cls, value: Coefficient) -> "Polynomial":
        value = Fraction(value)
        return cls._wrap({ONE_MONOMIAL: value} if value else {})

    @classmethod
    def symbol(cls, sym: Symbol, exp: int = 1) -> "Polynomial":
        return cls._wrap({Monomial.of(sym, exp): Fraction(1)})

    # -- coercion and operators -------------------------------------------------

    @staticmethod
    def coerce(value) -> "Polynomial":
        if isinstance(value, Polynomial):
            return value
        if isinstance(value, Symbol):
            return Polynomial.symbol(value)
        if isinstance(value, (int, Fraction)):
            return Polynomial.constant(value)
        raise TypeError(f"cannot use {type(value).__name__} as a polynomial")

    def __add__(self, other) -> "Polynomial":
        other = Polynomial.coerce(other)
        terms = dict(self._terms)
        for mono, coeff in other._terms.items():
            value = terms.get(mono, 0) + coeff
            if value:
                terms[mono] = value
            else:
                terms.pop(mono, None)
        return Polynomial._wrap(terms)

    __radd__ = __add__

    def __neg__(self) -> "Polynomial":
        return Polynomial._wrap({m: -c for m, c in self._terms.items()})

    def __sub__(self, other) -> "Polynomial":
        return self + (-Polynomial.coerce(other))

    def __rsub__(self, other) -> "Polynomial":
        return Polynomial.coerce(other) + (-self)

    def __mul__(self, other) -> "Polynomial":
        other = Polynomial.coerce(other)
        terms: Dict[Monomial, Fraction] = {}
        for m1, c1 in self._terms.items():
            for m2, c2 in other._terms.items():
                mono = m1 * m2
                terms[mono] = terms.get(mono, 0) + c1 * c2
        return Polynomial._wrap({m: c for m, c in terms.items() if c})

    __rmul__ = __mul__

    def __pow__(self, exponent: int) -> "Polynomial":
        if not isinstance(exponent, int) or exponent < 0:
            raise ValueError("polynomial exponents must be nonnegative integers")
        result, base = Polynomial.constant(1), self
        while exponent:
            if exponent & 1:
                result = result * base
            exponent >>= 1
            if exponent:
                base = base * base
        return result

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction, Symbol)):
            other = Polynomial.coerce(other)
        return isinstance(other, Polynomial) and self._terms == other._terms

    def __hash__(self) -> int:
        return hash(frozenset(self._terms.items()))

    def __bool__(self) -> bool:
        return bool(self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    def __repr__(self) -> str:
        from .dsl import render_polynomial
        return f"Polynomial({render_polynomial(self)})"

    def __str__(self) -> str:
        from .dsl import render_polynomial
        return render_polynomial(self)

    # -- queries ------------------------------------------------------------------

    @property
    def terms(self) -> Mapping[Monomial, Fraction]:
        return MappingProxyType(self._terms)

    def sorted_terms(self) -> List[Tuple[Monomial, Fraction]]:
        """Terms in descending global monomial order."""
        return sorted(self._terms.items(), key=lambda mc: mc[0].sort_key, reverse=True)

    @property
    def is_zero(self) -> bool:
        return not self._terms

    @property
    def is_constant(self) -> bool:
        return not self._terms or (len(self._terms) == 1 and ONE_MONOMIAL in self._terms)

    def constant_value(self) -> Fraction:
        if not self.is_constant:
            raise ValueError("polynomial is not constant")
        return self._terms.get(ONE_MONOMIAL, Fraction(0))

    @property
    def symbols(self) -> frozenset:
        return frozenset(sym for mono in self._terms for sym in mono.symbols)

    def degree(self, sym: Symbol) -> int:
        return max((mono.degree(sym) for mono in self._terms), default=0)

    @property
    def total_degree(self) -> int:
        return max((mono.total_degree for mono in self._terms), default=0)

    def leading_term(self) -> Tuple[Monomial, Fraction]:
        if not self._terms:
            raise ValueError("zero polynomial has no leading term")
        return max(self._terms.items(), key=lambda mc: mc[0].sort_key)

    def leading_coefficient(self) -> Fraction:
        return self.leading_term()[1]

    def rational_content(self) -> Fraction:
        """Positive rational c with self / c having coprime integer coefficients."""
        if not self._terms:
            return Fraction(0)
        numerators = [c.numerator for c in self._terms.values()]
        denominators = [c.denominator for c in self._terms.values()]
        return Fraction(math.gcd(*numerators), math.lcm(*denominators))

    def sign_normalized(self) -> "Polynomial":
        if self._terms and self.leading_coefficient() < 0:
            return -self
        return self

    def normalized(self) -> "Polynomial":
        """Integer content 1 and positive leading coefficient."""
        if not self._terms:
            return self
        content = self.rational_content()
        if self.leading_coefficient() < 0:
            content = -content
        return Polynomial._wrap({m: c / content for m, c in self._terms.items()})

    # -- transformations ------------------------------------------------------------

    def substitute(self, mapping: Mapping[Symbol, Symbol]) -> "Polynomial":
        if not mapping:
            return self
        return Polynomial((mono.substitute(mapping), coeff) for mono, coeff in self._terms.items())

    def specialize(self, values: Mapping[Symbol, Coefficient]) -> "Polynomial":
        """Exact partial evaluation at rational values."""
        terms: Dict[Monomial, Fraction] = {}
        for mono, coeff in self._terms.items():
            kept = []
            for sym, exp in mono:
                if sym in values:
                    coeff = coeff * Fraction(values[sym]) ** exp
                else:
                    kept.append((sym, exp))
            if coeff:
                key = Monomial(kept)
                terms[key] = terms.get(key, 0) + coeff
        return Polynomial(terms)

    def evaluate_terms(self, values: Mapping[Symbol, np.ndarray], samples: int) -> np.ndarray:
        """
        Floating-point value of every term at every sample.

        Args:
            values: one array of length `samples` per symbol of the polynomial
            samples: number of sample points

        Returns:
            array of shape (terms, samples)
        """
        rows = []
        for mono, coeff in self.sorted_terms():
            value = np.full(samples, float(coeff))
            for sym, exp in mono:
                value = value * np.asarray(values[sym], dtype=float) ** exp
            rows.append(value)
        if not rows:
            return np.zeros((0, samples))
        return np.vstack(rows)


# ---------------------------------------------------------------------------
# Matrices
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PolyMatrix:
    rows: int
    cols: int
    entries: Tuple[Polynomial, ...]

    def __post_init__(self):
        if self.rows <= 0 or self.cols <= 0:
            raise ValueError("matrix dimensions must be positive")
        if len(self.entries) != self.rows * self.cols:
            raise ValueError(f"expected {self.rows * self.cols} entries, got {len(self.entries)}")

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence]) -> "PolyMatrix":
        if not rows or not rows[0]:
            raise ValueError("matrix must be nonempty")
        width = len(rows[0])
        if any(len(r) != width for r in rows):
            raise ValueError("ragged matrix rows")
        return cls(len(rows), width, tuple(Polynomial.coerce(e) for r in rows for e in r))

    def __getitem__(self, index: Tuple[int, int]) -> Polynomial:
        i, j = index
        return self.entries[i * self.cols + j]

    def row(self, i: int) -> Tuple[Polynomial, ...]:
        return self.entries[i * self.cols:(i + 1) * self.cols]

    def column(self, j: int) -> Tuple[Polynomial, ...]:
        return tuple(self.entries[i * self.cols + j] for i in range(self.rows))

    def to_rows(self) -> List[List[Polynomial]]:
        return [list(self.row(i)) for i in range(self.rows)]

    def submatrix(self, rows: Sequence[int], cols: Sequence[int]) -> "PolyMatrix":
        return PolyMatrix(len(rows), len(cols), tuple(self[i, j] for i in rows for j in cols))

    def swap_rows(self, i: int, j: int) -> "PolyMatrix":
        rows = self.to_rows()
        rows[i], rows[j] = rows[j], rows[i]
        return PolyMatrix.from_rows(rows)

    @property
    def is_square(self) -> bool:
        return self.rows == self.cols

    @property
    def is_zero(self) -> bool:
        return all(e.is_zero for e in self.entries)


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------

def poly_mul(a: Polynomial, b: Polynomial) -> Polynomial:
    return a * b


def substitute(p: Polynomial, mapping: Mapping[Symbol, Symbol]) -> Polynomial:
    return p.substitute(mapping)


def _symbol_derivative(sym: Symbol) -> Optional[Polynomial]:
    if sym.kind is SymbolKind.TIME:
        return Polynomial.constant(1)
    if sym.kind is SymbolKind.PARAMETER:
        return None
    return Polynomial.symbol(sym.derivative())


def total_derivative(p: Polynomial) -> Polynomial:
    """Apply d/dt with the sum and product rules."""
    barred = [s.name for s in p.symbols if s.is_barred]
    if barred:
        raise BarredOperand(f"cannot differentiate barred symbols: {', '.join(sorted(barred))}")
    terms: Dict[Monomial, Fraction] = {}
    for mono, coeff in p.terms.items():
        for sym, exp in mono:
            dsym = _symbol_derivative(sym)
            if dsym is None:
                continue
            rest = mono.lower(sym)
            for dmono, dcoeff in dsym.terms.items():
                key = rest * dmono
                terms[key] = terms.get(key, 0) + coeff * exp * dcoeff
    return Polynomial(terms)


def partial_derivative(p: Polynomial, sym: Symbol) -> Polynomial:
    terms: Dict[Monomial, Fraction] = {}
    for mono, coeff in p.terms.items():
        exp = mono.degree(sym)
        if exp:
            key = mono.lower(sym)
            terms[key] = terms.get(key, 0) + coeff * exp
    return Polynomial(terms)


def coefficient_decomposition(p: Polynomial, split) -> Dict[Monomial, Polynomial]:
    """
    Group p by monomials over the split symbols.

    Returns:
        ordered map (descending monomial order) from a monomial over `split`
        to its coefficient polynomial, which contains no split symbol
    """
    split = frozenset(split)
    groups: Dict[Monomial, Dict[Monomial, Fraction]] = {}
    for mono, coeff in p.terms.items():
        inside, outside = mono.split(split)
        groups.setdefault(inside, {})[outside] = coeff
    ordered = sorted(groups, key=lambda m: m.sort_key, reverse=True)
    return {m: Polynomial(groups[m]) for m in ordered}


# -- sympy ring bridge --------------------------------------------------------------

def _ring_for(polys: Iterable[Polynomial], domain=QQ) -> Tuple[PolyRing, List[Symbol]]:
    symbols = sort_symbols(set().union(*(p.symbols for p in polys)), descending=True)
    # Generator order = descending global order, so sympy's lex is our lex.
    names = [f"x{i}" for i in range(max(1, len(symbols)))]
    return PolyRing(names, domain, lex), symbols


def _exponent_dict(p: Polynomial, symbols: List[Symbol], width: int, domain):
    position = {s: i for i, s in enumerate(symbols)}
    out = {}
    for mono, coeff in p.terms.items():
        exps = [0] * width
        for sym, exp in mono:
            exps[position[sym]] = exp
        if domain is ZZ:
            out[tuple(exps)] = ZZ(coeff.numerator)
        else:
            out[tuple(exps)] = QQ(coeff.numerator, coeff.denominator)
    return out


def _to_ring(ring: PolyRing, symbols: List[Symbol], p: Polynomial):
    return ring.from_dict(_exponent_dict(p, symbols, ring.ngens, QQ))


def _from_items(items, symbols: List[Symbol]) -> Polynomial:
    terms = {}
    for exps, coeff in items:
        mono = Monomial(zip(symbols, exps))
        terms[mono] = Fraction(int(coeff.numerator), int(coeff.denominator))
    return Polynomial(terms)


def _from_ring(element, symbols: List[Symbol]) -> Polynomial:
    return _from_items(element.items(), symbols)


def poly_exact_div(p: Polynomial, q: Polynomial) -> Polynomial:
    """Exact quotient p / q; raises NotDivisible when q does not divide p."""
    if q.is_zero:
        raise ZeroDivisionError("polynomial division by zero")
    if q.is_constant:
        c = q.constant_value()
        return Polynomial._wrap({m: v / c for m, v in p.terms.items()})
    if p.is_zero:
        return p
    ring, symbols = _ring_for((p, q))
    try:
        quotient = _to_ring(ring, symbols, p).exquo(_to_ring(ring, symbols, q))
    except ExactQuotientFailed:
        raise NotDivisible(f"{q} does not divide {p}") from None
    return _from_ring(quotient, symbols)


# -- GCD ---------------------------------------------------------------------------------

def _fraction_gcd(a: Fraction, b: Fraction) -> Fraction:
    return Fraction(math.gcd(a.numerator * b.denominator, b.numerator * a.denominator),
                    a.denominator * b.denominator)


def _monomial_gcd(mono: Monomial, q: Polynomial) -> Polynomial:
    """GCD of a monomial with a primitive polynomial: the monomial part dividing every term."""
    exps = []
    for sym, exp in mono:
        common = min(min(m.degree(sym) for m in q.terms), exp)
        if common:
            exps.append((sym, common))
    return Polynomial._wrap({Monomial(exps): Fraction(1)})


def _prs_gcd(p: Polynomial, q: Polynomial) -> Polynomial:
    """GCD of integer polynomials over the same symbols, via subresultant PRS."""
    symbols = sort_symbols(p.symbols | q.symbols, descending=True)
    u = len(symbols) - 1
    f = dmp_from_dict(_exponent_dict(p, symbols, len(symbols), ZZ), u, ZZ)
    g = dmp_from_dict(_exponent_dict(q, symbols, len(symbols), ZZ), u, ZZ)
    h, _, _ = dmp_rr_prs_gcd(f, g, u, ZZ)
    items = [(exps, QQ(int(c))) for exps, c in dmp_to_dict(h, u, ZZ).items()]
    return _from_items(items, symbols).sign_normalized()


def _primitive_gcd(p: Polynomial, q: Polynomial) -> Polynomial:
    """GCD of two nonzero polynomials with coprime integer coefficients."""
    if p.is_constant or q.is_constant:
        return Polynomial.constant(1)
    if len(p) == 1:
        return _monomial_gcd(next(iter(p.terms)), q)
    if len(q) == 1:
        return _monomial_gcd(next(iter(q.terms)), p)
    # The GCD is free of any symbol missing from one side, so it divides the
    # coefficients of the other side with respect to those symbols.
    only_p = p.symbols - q.symbols
    if only_p:
        return gcd_list(list(coefficient_decomposition(p, only_p).values()) + [q])
    only_q = q.symbols - p.symbols
    if only_q:
        return gcd_list(list(coefficient_decomposition(q, only_q).values()) + [p])
    return _prs_gcd(p, q)


def multivariate_gcd(p: Polynomial, q: Polynomial) -> Polynomial:
    """
    GCD including rational content, with positive leading coefficient.

    gcd(p, 0) is p with its sign normalized.
    """
    if p.is_zero:
        return q.sign_normalized()
    if q.is_zero:
        return p.sign_normalized()
    cp, cq = p.rational_content(), q.rational_content()
    primitive = _primitive_gcd(p.normalized(), q.normalized())
    return primitive * _fraction_gcd(cp, cq)


def gcd_list(polys: Iterable[Polynomial]) -> Polynomial:
    result = Polynomial.zero()
    for p in polys:
        result = multivariate_gcd(result, p)
        if result == 1:
            break
    return result


def content(p: Polynomial, symbols) -> Polynomial:
    """GCD of the coefficients of p with respect to `symbols`."""
    return gcd_list(coefficient_decomposition(p, symbols).values())


def primitive_part(p: Polynomial, symbols) -> Polynomial:
    if p.is_zero:
        return p
    return poly_exact_div(p, content(p, symbols))


def monomial_content(p: Polynomial, symbols) -> Monomial:
    """Largest monomial over `symbols` dividing every term of p."""
    if p.is_zero:
        return ONE_MONOMIAL
    exps = []
    for sym in sort_symbols(set(symbols) & p.symbols):
        common = min(mono.degree(sym) for mono in p.terms)
        if common:
            exps.append((sym, common))
    return Monomial(exps)


def squarefree_part(p: Polynomial, symbols) -> Polynomial:
    """
    p with every repeated factor involving `symbols` reduced to multiplicity one.

    Works one symbol at a time, largest first: the primitive part with
    respect to x is divided by its GCD with d/dx, and the content is
    treated with the remaining symbols. Factors free of `symbols` are left
    as they are. No factorization is needed.
    """
    present = sort_symbols(set(symbols) & p.symbols)
    if p.is_zero or not present:
        return p
    x = present[-1]
    c = content(p, {x})
    pp = poly_exact_div(p, c)
    reduced = poly_exact_div(pp, multivariate_gcd(pp, partial_derivative(pp, x)))
    return squarefree_part(c, present[:-1]) * reduced


# -- fraction-free elimination ---------------------------------------------------------

def _echelon(rows: List[List], one):
    """
    Bareiss fraction-free row echelon form, in place on sympy ring elements.

    Pivot per column: the nonzero candidate with the fewest terms (ties by
    position). Columns without a candidate are skipped.

    Returns:
        (original indices of pivot rows, pivot columns, row-swap sign, last pivot)
    """
    nrows, ncols = len(rows), len(rows[0])
    order = list(range(nrows))
    sign, previous, r = 1, one, 0
    pivot_cols: List[int] = []
    for c in range(ncols):
        if r == nrows:
            break
        candidates = [i for i in range(r, nrows) if rows[i][c]]
        if not candidates:
            continue
        p = min(candidates, key=lambda i: (len(rows[i][c]), i))
        if p != r:
            rows[p], rows[r] = rows[r], rows[p]
            order[p], order[r] = order[r], order[p]
            sign = -sign
        pivot = rows[r][c]
        for i in range(r + 1, nrows):
            lead = rows[i][c]
            for j in range(c + 1, ncols):
                rows[i][j] = (pivot * rows[i][j] - lead * rows[r][j]).exquo(previous)
            rows[i][c] = rows[i][c].ring.zero
        previous = pivot
        pivot_cols.append(c)
        r += 1
    return order[:r], pivot_cols, sign, previous


def _ring_rows(m: PolyMatrix):
    ring, symbols = _ring_for(m.entries)
    rows = [[_to_ring(ring, symbols, e) for e in m.row(i)] for i in range(m.rows)]
    return ring, symbols, rows


def determinant_fraction_free(m: PolyMatrix) -> Polynomial:
    """Exact determinant by Bareiss elimination; every division is exact."""
    if not m.is_square:
        raise NotSquare(f"determinant of a {m.rows}x{m.cols} matrix")
    if m.rows == 1:
        return m[0, 0]
    ring, symbols, rows = _ring_rows(m)
    pivot_rows, _, sign, last = _echelon(rows, ring.one)
    if len(pivot_rows) < m.rows:
        return Polynomial.zero()
    det = _from_ring(last, symbols)
    return det if sign > 0 else -det


def matrix_rank_profile(m: PolyMatrix) -> Tuple[List[int], List[int]]:
    """Pivot rows and columns of fraction-free elimination; their count is the rank."""
    ring, _, rows = _ring_rows(m)
    pivot_rows, pivot_cols, _, _ = _echelon(rows, ring.one)
    return sorted(pivot_rows), pivot_cols


def matrix_rank(m: PolyMatrix) -> int:
    return len(matrix_rank_profile(m)[1])
