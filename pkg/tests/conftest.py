import random
from pathlib import Path

import pytest

from daelim.dsl import DAESystem, load_system, parse_system, render_system
from daelim.symcore import Monomial, Polynomial, Symbol, poly_exact_div

SYSTEMS = Path(__file__).resolve().parent.parent / "systems"


def system_path(name: str) -> str:
    return str(SYSTEMS / name)


@pytest.fixture
def corpus():
    """Load a corpus system by file stem, e.g. corpus("gear")."""
    def load(name: str) -> DAESystem:
        return load_system(system_path(f"{name}.dae"))
    return load


def poly_in(system: DAESystem, text: str) -> Polynomial:
    """Parse `text` against the declarations of `system`."""
    header = render_system(system.with_equations([], []))
    return parse_system(header + f"eq {text} = 0\n").equations[0]


def assert_associate(actual: Polynomial, expected: Polynomial) -> None:
    """actual equals expected up to a nonzero rational factor."""
    assert not actual.is_zero
    quotient = poly_exact_div(actual, expected)
    assert quotient.is_constant and not quotient.is_zero, f"{actual} is not a multiple of {expected}"


def random_polynomial(rng: random.Random, symbols, terms: int = 4, max_exp: int = 2) -> Polynomial:
    p = Polynomial.zero()
    for _ in range(rng.randint(1, terms)):
        chosen = rng.sample(list(symbols), rng.randint(0, len(symbols)))
        mono = Monomial((s, rng.randint(1, max_exp)) for s in chosen)
        p = p + Polynomial({mono: rng.choice([-3, -2, -1, 1, 2, 3, 5])})
    return p


@pytest.fixture
def kernel_symbols():
    y = Symbol.dependent("y", 0)
    z = Symbol.dependent("z", 1)
    return {
        "t": Symbol.time(),
        "a": Symbol.parameter("a", 0),
        "u": Symbol.forcing("u", 0),
        "y": y,
        "y'": y.derivative(),
        "z": z,
    }
