"""
.dae system files
=================

Line-oriented format, `#` starts a comment:

    system pendulum
    param g, L
    func p1
    var y1, y2, lambda
    eq y1'' + y1*lambda = 0
    eq y1^2 + y2^2 = L^2

Expressions allow rational or decimal literals, identifiers, `t`,
`+ - * ^` (positive integer exponents), division by constants, and
derivatives written `y'`, `y''` or `D(y,k)`. Each equation is stored as
LHS - RHS.

Parsing runs in two passes: pyparsing builds a small AST per line, then
the AST is evaluated against the declarations so that semantic errors
carry the line and column of the offending token.
"""

import logging
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Sequence, Tuple, Union

import pyparsing as pp

from .errors import (
    DaeSyntaxError,
    DerivativeOfParameter,
    DuplicateDeclaration,
    NonPolynomial,
    NonzeroEquationRequired,
    UndeclaredSymbol,
)
from .symcore import Polynomial, Symbol, SymbolKind, sort_symbols
from .utils import read_text

log = logging.getLogger(__name__)

pp.ParserElement.enable_packrat()

TIME = Symbol.time()


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------

# Plain dataclasses rather than tuples: pyparsing unpacks tuple tokens.

@dataclass(frozen=True)
class Num:
    value: Fraction
    col: int


@dataclass(frozen=True)
class Name:
    name: str
    order: int
    col: int


@dataclass(frozen=True)
class Call:
    func: str
    arg: object
    col: int


@dataclass(frozen=True)
class Unary:
    op: str
    operand: object
    col: int


@dataclass(frozen=True)
class Binary:
    op: str
    left: object
    right: object
    col: int


Node = Union[Num, Name, Call, Unary, Binary]


def _fold_left(s, loc, toks):
    items = toks[0]
    node = items[0]
    for i in range(1, len(items), 2):
        node = Binary(items[i], node, items[i + 1], pp.col(loc, s))
    return node


def _fold_right(s, loc, toks):
    items = toks[0]
    node = items[-1]
    for i in range(len(items) - 2, 0, -2):
        node = Binary(items[i], items[i - 1], node, pp.col(loc, s))
    return node


def _fold_unary(s, loc, toks):
    items = toks[0]
    node = items[-1]
    for op in reversed(items[:-1]):
        node = Unary(op, node, pp.col(loc, s))
    return node


IDENT = pp.Regex(r"[A-Za-z_][A-Za-z0-9_]*")
INTEGER = pp.Regex(r"\d+")


def expression_grammar(functions: Sequence[str] = ()) -> pp.ParserElement:
    """
    Build the expression grammar.

    Args:
        functions: names of one-argument functions to accept, e.g. ("sin", "cos");
            empty for the polynomial-only .dae language
    """
    expr = pp.Forward()
    number = pp.Regex(r"\d+(\.\d+)?").set_parse_action(
        lambda s, loc, toks: Num(Fraction(toks[0]), pp.col(loc, s)))
    dcall = (pp.Keyword("D") + pp.Suppress("(") + IDENT + pp.Suppress(",") + INTEGER + pp.Suppress(")")
             ).set_parse_action(lambda s, loc, toks: Name(toks[1], int(toks[2]), pp.col(loc, s)))
    primed = pp.Regex(r"(?P<name>[A-Za-z_][A-Za-z0-9_]*)(?P<primes>'+)").set_parse_action(
        lambda s, loc, toks: Name(toks["name"], len(toks["primes"]), pp.col(loc, s)))
    plain = IDENT.copy().set_parse_action(lambda s, loc, toks: Name(toks[0], 0, pp.col(loc, s)))
    operand = number | dcall | primed
    if functions:
        call = (pp.one_of(list(functions), as_keyword=True) + pp.Suppress("(") + expr + pp.Suppress(")")
                ).set_parse_action(lambda s, loc, toks: Call(toks[0], toks[1], pp.col(loc, s)))
        operand = operand | call
    operand = operand | plain | (pp.Suppress("(") + expr + pp.Suppress(")"))
    expr <<= pp.infix_notation(operand, [
        (pp.Literal("^"), 2, pp.OpAssoc.RIGHT, _fold_right),
        (pp.one_of("+ -"), 1, pp.OpAssoc.RIGHT, _fold_unary),
        (pp.one_of("* /"), 2, pp.OpAssoc.LEFT, _fold_left),
        (pp.one_of("+ -"), 2, pp.OpAssoc.LEFT, _fold_left),
    ])
    return expr


EXPR = expression_grammar()
NAME_LIST = pp.Group(IDENT + pp.ZeroOrMore(pp.Suppress(",") + IDENT))

HEADER = pp.Keyword("system") + IDENT("name")
DECLARATION = pp.one_of("param func var", as_keyword=True)("kind") + NAME_LIST("names")
EQUATION = pp.Keyword("eq") + EXPR + pp.Suppress("=") + EXPR
STATEMENT = HEADER | DECLARATION | EQUATION


# ---------------------------------------------------------------------------
# Systems
# ---------------------------------------------------------------------------

def equation_label(origin: int, times: int) -> str:
    """Row label for the `times`-th derivative of equation `origin` (0-based)."""
    if times == 0:
        return f"f{origin + 1}"
    if times == 1:
        return f"D f{origin + 1}"
    return f"D^{times} f{origin + 1}"


_SYMBOL_NAME = re.compile(r"^(?:D\((?P<dname>[A-Za-z_]\w*),(?P<order>\d+)\)|(?P<name>[A-Za-z_]\w*)(?P<primes>'*))$")


@dataclass(frozen=True)
class DAESystem:
    """
    A parsed system f_i = 0.

    `provenance[i]` is (original equation index, differentiation count); it is
    (i, 0) for every equation of a freshly parsed system.
    """

    name: str
    parameters: Tuple[Symbol, ...]
    forcings: Tuple[Symbol, ...]
    dependents: Tuple[Symbol, ...]
    equations: Tuple[Polynomial, ...]
    provenance: Tuple[Tuple[int, int], ...] = field(default=())

    def __post_init__(self):
        if not self.provenance:
            object.__setattr__(self, "provenance", tuple((i, 0) for i in range(len(self.equations))))
        if len(self.provenance) != len(self.equations):
            raise ValueError("one provenance entry per equation is required")
        for eq in self.equations:
            if eq.is_zero:
                raise ValueError("equations must be nonzero")
            if any(s.is_barred for s in eq.symbols):
                raise ValueError("equations must not contain barred symbols")

    @property
    def labels(self) -> Tuple[str, ...]:
        return tuple(equation_label(origin, k) for origin, k in self.provenance)

    @property
    def original_count(self) -> int:
        return len({origin for origin, _ in self.provenance})

    def orders(self) -> Dict[Symbol, int]:
        """r_j: the highest derivative order of each dependent variable (0 if absent)."""
        orders = {y: 0 for y in self.dependents}
        for eq in self.equations:
            for sym in eq.symbols:
                if sym.is_dependent:
                    orders[sym.root] = max(orders.get(sym.root, 0), sym.order)
        return orders

    def dependent_symbols(self) -> List[Symbol]:
        """Dependent variables and derivatives occurring in the equations, ascending."""
        found = {s for eq in self.equations for s in eq.symbols if s.is_dependent}
        return sort_symbols(found)

    def declared(self) -> Dict[str, Symbol]:
        table = {"t": TIME}
        for sym in self.parameters + self.forcings + self.dependents:
            table[sym.name] = sym
        return table

    def symbol(self, name: str) -> Symbol:
        """Look up `y1`, `y1''` or `D(y1,4)`; raises UndeclaredSymbol."""
        match = _SYMBOL_NAME.match(name.strip())
        if not match:
            raise UndeclaredSymbol(f"not a symbol name: {name!r}")
        base = match["dname"] or match["name"]
        order = int(match["order"]) if match["dname"] else len(match["primes"])
        sym = self.declared().get(base)
        if sym is None:
            raise UndeclaredSymbol(f"undeclared symbol {base!r}")
        if order == 0:
            return sym
        if sym.kind in (SymbolKind.PARAMETER, SymbolKind.TIME):
            raise DerivativeOfParameter(f"{base} is not a function of t")
        return sym.derivative(order)

    def with_equations(self, equations: Sequence[Polynomial],
                       provenance: Sequence[Tuple[int, int]]) -> "DAESystem":
        return DAESystem(self.name, self.parameters, self.forcings, self.dependents,
                         tuple(equations), tuple(provenance))


class _Evaluator:
    """Turns AST nodes into polynomials against a declaration table."""

    def __init__(self, table: Dict[str, Symbol], line: int):
        self.table = table
        self.line = line

    def symbol(self, node: Name) -> Symbol:
        sym = self.table.get(node.name)
        if sym is None:
            raise UndeclaredSymbol(f"undeclared symbol {node.name!r}", self.line, node.col)
        if node.order == 0:
            return sym
        if sym.kind in (SymbolKind.PARAMETER, SymbolKind.TIME):
            raise DerivativeOfParameter(f"{node.name} is constant in t and cannot be differentiated",
                                        self.line, node.col)
        return sym.derivative(node.order)

    def __call__(self, node: Node) -> Polynomial:
        if isinstance(node, Num):
            return Polynomial.constant(node.value)
        if isinstance(node, Name):
            return Polynomial.symbol(self.symbol(node))
        if isinstance(node, Unary):
            value = self(node.operand)
            return -value if node.op == "-" else value
        if isinstance(node, Call):
            raise NonPolynomial(f"function {node.func} is not polynomial", self.line, node.col)
        left, right = self(node.left), self(node.right)
        if node.op == "+":
            return left + right
        if node.op == "-":
            return left - right
        if node.op == "*":
            return left * right
        if node.op == "/":
            if not right.is_constant or right.is_zero:
                raise NonPolynomial("division is only allowed by a nonzero constant", self.line, node.col)
            return left * Polynomial.constant(1 / right.constant_value())
        # "^"
        exponent = right.constant_value() if right.is_constant else None
        if exponent is None or exponent.denominator != 1 or exponent < 1:
            raise NonPolynomial("exponents must be positive integer constants", self.line, node.col)
        return left ** int(exponent)


def _strip_comment(line: str) -> str:
    return line.split("#", 1)[0]


def parse_system(text: str) -> DAESystem:
    """
    Parse a .dae document.

    Raises:
        DaeSyntaxError, UndeclaredSymbol, NonPolynomial, DerivativeOfParameter,
        NonzeroEquationRequired, DuplicateDeclaration
    """
    name = "system"
    declarations: Dict[str, List[str]] = {"param": [], "func": [], "var": []}
    seen: Dict[str, int] = {}
    equations: List[Tuple[int, pp.ParseResults]] = []

    for number, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw)
        if not line.strip():
            continue
        try:
            parsed = STATEMENT.parse_string(line, parse_all=True)
        except pp.ParseBaseException as e:
            raise DaeSyntaxError(f"cannot parse {line.strip()!r}", number, e.col) from None
        head = parsed[0]
        if head == "system":
            name = parsed["name"]
        elif head == "eq":
            equations.append((number, parsed))
        else:
            for ident in parsed["names"]:
                if ident == "t" or ident in seen:
                    raise DuplicateDeclaration(f"{ident!r} is already declared", number, line.find(ident) + 1)
                seen[ident] = number
                declarations[head].append(ident)

    table: Dict[str, Symbol] = {"t": TIME}
    parameters = tuple(Symbol.parameter(n, i) for i, n in enumerate(declarations["param"]))
    forcings = tuple(Symbol.forcing(n, i) for i, n in enumerate(declarations["func"]))
    dependents = tuple(Symbol.dependent(n, i) for i, n in enumerate(declarations["var"]))
    for sym in parameters + forcings + dependents:
        table[sym.name] = sym

    polys = []
    for number, parsed in equations:
        evaluate = _Evaluator(table, number)
        poly = evaluate(parsed[1]) - evaluate(parsed[2])
        if poly.is_zero:
            raise NonzeroEquationRequired("equation reduces to 0 = 0", number, 1)
        polys.append(poly)

    system = DAESystem(name, parameters, forcings, dependents, tuple(polys))
    log.debug("parsed system %s: %d equations, %d dependents", name, len(polys), len(dependents))
    return system


def load_system(path: str) -> DAESystem:
    return parse_system(read_text(path))


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------

def format_rational(value: Fraction) -> str:
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def render_polynomial(p: Polynomial) -> str:
    """Deterministic text in descending global order; parses back to p."""
    if p.is_zero:
        return "0"
    parts = []
    for i, (mono, coeff) in enumerate(p.sorted_terms()):
        negative = coeff < 0
        magnitude = -coeff if negative else coeff
        if mono.is_unit:
            body = format_rational(magnitude)
        elif magnitude == 1:
            body = mono.render()
        else:
            body = f"{format_rational(magnitude)}*{mono.render()}"
        if i == 0:
            parts.append(f"-{body}" if negative else body)
        else:
            parts.append(f" - {body}" if negative else f" + {body}")
    return "".join(parts)


def render_system(system: DAESystem) -> str:
    lines = [f"system {system.name}"]
    for keyword, symbols in (("param", system.parameters), ("func", system.forcings),
                             ("var", system.dependents)):
        if symbols:
            lines.append(f"{keyword} {', '.join(s.name for s in symbols)}")
    for label, eq in zip(system.labels, system.equations):
        lines.append(f"eq {render_polynomial(eq)} = 0  # {label}")
    return "\n".join(lines) + "\n"
