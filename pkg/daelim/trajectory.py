"""
Trajectory harness for `daelim verify`.

A trajectory file assigns closed-form expressions in t (sin, cos, exp and
sqrt allowed) to the symbols of a resultant, optionally driven by
auxiliary ODE states integrated with classical RK4:

    let g = 9.8
    let L = 1
    ode theta'' = -(g/L)*sin(theta)
    init theta = 0.5, 0
    step 1e-4
    let y2 = L*cos(theta)
    let y2' = -L*sin(theta)*theta'
    range 0 2 200

Expressions are evaluated lazily, so `let` lines may refer to each other
and to ODE states in any order. The top derivative of an ODE state
evaluates its right-hand side.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, Mapping, Optional, Tuple

import numpy as np
import pyparsing as pp

from .dsl import IDENT, INTEGER, Binary, Call, Name, Node, Num, Unary, expression_grammar
from .errors import MissingAssignment, TrajectoryError
from .symcore import Polynomial, Symbol, SymbolKind, derivative_name
from .utils import read_text

log = logging.getLogger(__name__)

FUNCTIONS = {"sin": np.sin, "cos": np.cos, "exp": np.exp, "sqrt": np.sqrt}
DEFAULT_STEP = 1e-3

NUMBER = pp.pyparsing_common.fnumber
FEXPR = expression_grammar(tuple(FUNCTIONS))

LET = pp.Keyword("let") + FEXPR + pp.Suppress("=") + FEXPR
ODE = pp.Keyword("ode") + FEXPR + pp.Suppress("=") + FEXPR
INIT = pp.Keyword("init") + IDENT + pp.Suppress("=") + pp.Group(NUMBER + pp.ZeroOrMore(pp.Suppress(",") + NUMBER))
RANGE = pp.Keyword("range") + NUMBER + NUMBER + INTEGER
STEP = pp.Keyword("step") + NUMBER
LINE = LET | ODE | INIT | RANGE | STEP

Key = Tuple[str, int]


@dataclass(frozen=True)
class OdeSpec:
    name: str
    order: int
    rhs: Node
    initial: Tuple[float, ...]


@dataclass(frozen=True)
class TrajectorySpec:
    assignments: Mapping[Key, Node]
    start: float
    end: float
    count: int
    odes: Tuple[OdeSpec, ...] = field(default=())
    step: float = DEFAULT_STEP

    def __post_init__(self):
        if self.count < 2:
            raise TrajectoryError(f"at least 2 samples are required, got {self.count}")
        if not self.end > self.start:
            raise TrajectoryError(f"range end {self.end} must exceed start {self.start}")
        if self.step <= 0:
            raise TrajectoryError(f"step must be positive, got {self.step}")

    def ode(self, name: str) -> Optional[OdeSpec]:
        return next((o for o in self.odes if o.name == name), None)

    def provides(self, name: str, order: int) -> bool:
        if name == "t":
            return order == 0
        ode = self.ode(name)
        if ode is not None and order <= ode.order:
            return True
        return (name, order) in self.assignments

    def with_samples(self, count: Optional[int]) -> "TrajectorySpec":
        return self if count is None else replace(self, count=count)

    def sample_times(self) -> np.ndarray:
        return np.linspace(self.start, self.end, self.count)


@dataclass(frozen=True)
class Residual:
    times: np.ndarray
    per_sample: np.ndarray

    @property
    def max_residual(self) -> float:
        return float(np.max(self.per_sample))


def _label(name: str, order: int) -> str:
    return derivative_name(name, order)


def _lhs(node, kind: str, line: int) -> Name:
    if not isinstance(node, Name):
        raise TrajectoryError(f"left side of {kind} must be a name", line, getattr(node, "col", 1))
    return node


def parse_trajectory(text: str) -> TrajectorySpec:
    """
    Parse a trajectory document.

    :raises TrajectoryError: syntax errors, duplicates, missing range, bad init
    """
    assignments: Dict[Key, Node] = {}
    odes: Dict[str, Tuple[int, Node, int]] = {}
    inits: Dict[str, Tuple[float, ...]] = {}
    sample_range = None
    step = DEFAULT_STEP

    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        try:
            parsed = LINE.parse_string(line, parse_all=True)
        except pp.ParseBaseException as e:
            raise TrajectoryError(f"cannot parse {line.strip()!r}", number, e.col) from None
        head = parsed[0]
        if head == "let":
            target = _lhs(parsed[1], "let", number)
            key = (target.name, target.order)
            if key in assignments:
                raise TrajectoryError(f"{_label(*key)} is assigned twice", number, target.col)
            assignments[key] = parsed[2]
        elif head == "ode":
            target = _lhs(parsed[1], "ode", number)
            if target.order < 1:
                raise TrajectoryError("an ode needs a derivative on the left, e.g. x'' = ...", number, target.col)
            if target.name in odes:
                raise TrajectoryError(f"ode for {target.name} is given twice", number, target.col)
            odes[target.name] = (target.order, parsed[2], number)
        elif head == "init":
            inits[parsed[1]] = tuple(float(v) for v in parsed[2])
        elif head == "range":
            sample_range = (float(parsed[1]), float(parsed[2]), int(parsed[3]))
        else:
            step = float(parsed[1])

    if sample_range is None:
        raise TrajectoryError("missing 'range <start> <end> <count>' line")
    specs = []
    for name, (order, rhs, number) in odes.items():
        initial = inits.get(name)
        if initial is None or len(initial) != order:
            raise TrajectoryError(f"init {name} needs {order} value(s)", number)
        if any(key[0] == name for key in assignments):
            raise TrajectoryError(f"{name} is both an ode state and assigned by let", number)
        specs.append(OdeSpec(name, order, rhs, initial))
    for name in inits:
        if name not in odes:
            raise TrajectoryError(f"init given for {name}, which has no ode")
    start, end, count = sample_range
    return TrajectorySpec(assignments, start, end, count, tuple(specs), step)


def load_trajectory(path: str) -> TrajectorySpec:
    return parse_trajectory(read_text(path))


class _Scope:
    """Lazy evaluation of names at one time point (scalar) or many (array)."""

    def __init__(self, spec: TrajectorySpec, t, states: Mapping[Key, object]):
        self.spec = spec
        self.t = t
        self.states = states
        self._cache: Dict[Key, object] = {}
        self._active = set()

    def value(self, name: str, order: int):
        key = (name, order)
        if key == ("t", 0):
            return self.t
        if key in self.states:
            return self.states[key]
        ode = self.spec.ode(name)
        if ode is not None and order == ode.order:
            return self._resolve(key, ode.rhs)
        node = self.spec.assignments.get(key)
        if node is None:
            raise MissingAssignment(f"trajectory assigns no value to {_label(name, order)}")
        return self._resolve(key, node)

    def _resolve(self, key: Key, node: Node):
        if key in self._cache:
            return self._cache[key]
        if key in self._active:
            raise TrajectoryError(f"circular definition of {_label(*key)}")
        self._active.add(key)
        try:
            result = self.evaluate(node)
        finally:
            self._active.discard(key)
        self._cache[key] = result
        return result

    def evaluate(self, node: Node):
        if isinstance(node, Num):
            return float(node.value)
        if isinstance(node, Name):
            return self.value(node.name, node.order)
        if isinstance(node, Call):
            return FUNCTIONS[node.func](self.evaluate(node.arg))
        if isinstance(node, Unary):
            operand = self.evaluate(node.operand)
            return -operand if node.op == "-" else operand
        assert isinstance(node, Binary)
        left, right = self.evaluate(node.left), self.evaluate(node.right)
        if node.op == "+":
            return left + right
        if node.op == "-":
            return left - right
        if node.op == "*":
            return left * right
        if node.op == "/":
            return np.divide(left, right)
        return np.power(left, right)


def rk4_step(f: Callable[[float, np.ndarray], np.ndarray], t: float, y: np.ndarray, h: float) -> np.ndarray:
    k1 = f(t, y)
    k2 = f(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = f(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = f(t + h, y + h * k3)
    return y + h * (k1 + 2.0 * (k2 + k3) + k4) / 6.0


def _state_keys(spec: TrajectorySpec) -> Tuple[Key, ...]:
    return tuple((ode.name, k) for ode in spec.odes for k in range(ode.order))


def integrate(spec: TrajectorySpec, times: np.ndarray) -> Dict[Key, np.ndarray]:
    """
    RK4 values of every ODE state component at the given ascending times.

    Each interval between consecutive sample times is split into equal
    steps no longer than `spec.step`, so samples are hit exactly.
    """
    keys = _state_keys(spec)
    if not keys:
        return {}
    index = {key: i for i, key in enumerate(keys)}

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        scope = _Scope(spec, t, {key: y[i] for i, key in enumerate(keys)})
        dy = np.empty_like(y)
        for (name, k), i in index.items():
            dy[i] = scope.value(name, k + 1)
        return dy

    y = np.array([v for ode in spec.odes for v in ode.initial], dtype=float)
    t = spec.start
    out = np.empty((len(times), len(keys)))
    steps = 0
    for j, target in enumerate(times):
        if target < t:
            raise TrajectoryError(f"sample time {target} precedes the integration start {t}")
        n = max(1, math.ceil((target - t) / spec.step - 1e-9)) if target > t else 0
        h = (target - t) / n if n else 0.0
        for _ in range(n):
            y = rk4_step(rhs, t, y, h)
            t += h
        t = target
        steps += n
        out[j] = y
    log.debug("integrated %d ode states over %d RK4 steps", len(keys), steps)
    return {key: out[:, i] for key, i in index.items()}


def _symbol_key(sym: Symbol) -> Key:
    if sym.kind is SymbolKind.TIME:
        return ("t", 0)
    return (sym.root.name, sym.order)


def evaluate_residual(poly: Polynomial, spec: TrajectorySpec) -> Residual:
    """
    Relative residual of poly along the trajectory at every sample.

    Each sample gives |sum of terms| / (1 + max |term|), the terms summed
    in decreasing absolute value.

    :raises MissingAssignment: a symbol of poly has no value in the trajectory
    """
    missing = sorted(_label(*_symbol_key(s)) for s in poly.symbols if not spec.provides(*_symbol_key(s)))
    if missing:
        raise MissingAssignment(f"trajectory assigns no value to {', '.join(missing)}")

    times = spec.sample_times()
    scope = _Scope(spec, times, integrate(spec, times))
    values = {}
    for sym in poly.symbols:
        value = scope.value(*_symbol_key(sym))
        values[sym] = np.broadcast_to(np.asarray(value, dtype=float), times.shape)

    terms = poly.evaluate_terms(values, len(times))
    if terms.shape[0] == 0:
        return Residual(times, np.zeros(len(times)))
    order = np.argsort(-np.abs(terms), axis=0, kind="stable")
    ordered = np.take_along_axis(terms, order, axis=0)
    # cumsum adds sequentially, in the sorted order
    total = np.cumsum(ordered, axis=0)[-1]
    per_sample = np.abs(total) / (1.0 + np.max(np.abs(terms), axis=0))
    log.info("residual over %d samples: max %.3e", len(times), float(np.max(per_sample)))
    return Residual(times, per_sample)
