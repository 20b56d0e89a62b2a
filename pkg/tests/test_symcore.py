import random
from fractions import Fraction

import pytest
import sympy

from daelim.errors import BarredOperand, NotDivisible, NotSquare
from daelim.symcore import (
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
    monomial_content,
    multivariate_gcd,
    partial_derivative,
    poly_exact_div,
    primitive_part,
    sort_symbols,
    squarefree_part,
    total_derivative,
)

from .conftest import assert_associate, random_polynomial


def P(sym, exp=1):
    return Polynomial.symbol(sym, exp)


# -- symbols -----------------------------------------------------------------------

def test_global_symbol_order(kernel_symbols):
    s = kernel_symbols
    shuffled = [s["z"], s["y'"], s["a"], s["t"], s["y"], s["u"]]
    assert sort_symbols(shuffled) == [s["t"], s["u"], s["a"], s["y"], s["y'"], s["z"]]


def test_barred_twin_sorts_just_below_its_symbol(kernel_symbols):
    y, y1 = kernel_symbols["y"], kernel_symbols["y'"]
    assert sort_symbols([y1, y, y.barred(), y1.barred()]) == [y.barred(), y, y1.barred(), y1]
    assert y.barred().name == "~y"
    assert y1.barred().unbarred() == y1


def test_derivative_names_and_identity(kernel_symbols):
    y = kernel_symbols["y"]
    assert y.derivative(2).name == "y''"
    assert y.derivative(4).name == "D(y,4)"
    assert y.derivative(1).derivative(1) == y.derivative(2)
    assert y.derivative(2).root == y
    assert hash(y.derivative(3)) == hash(Symbol.dependent("y", 0).derivative(3))


def test_parameters_have_no_derivative_or_bar(kernel_symbols):
    with pytest.raises(ValueError):
        kernel_symbols["a"].derivative()
    with pytest.raises(ValueError):
        kernel_symbols["u"].barred()


# -- arithmetic ---------------------------------------------------------------------

def test_arithmetic_and_coercion(kernel_symbols):
    y, a = kernel_symbols["y"], kernel_symbols["a"]
    assert (P(y) + 1) * (P(y) - 1) == P(y, 2) - 1
    assert (P(y) + a) ** 2 == P(y, 2) + 2 * P(y) * a + P(a, 2)
    assert P(y) - P(y) == 0
    assert (Fraction(1, 2) * P(y)).leading_coefficient() == Fraction(1, 2)


def test_sorted_terms_are_descending(kernel_symbols):
    s = kernel_symbols
    p = P(s["t"]) + P(s["z"]) + P(s["y"], 3) + 7
    monos = [m for m, _ in p.sorted_terms()]
    assert monos[0] == Monomial.of(s["z"])
    assert monos[-1] == Monomial()


def test_normalized(kernel_symbols):
    y, a = kernel_symbols["y"], kernel_symbols["a"]
    p = -4 * P(y) + Fraction(2, 3) * P(a)
    q = p.normalized()
    assert q == 6 * P(y) - P(a)
    assert Polynomial.zero().normalized().is_zero


def test_specialize(kernel_symbols):
    y, a = kernel_symbols["y"], kernel_symbols["a"]
    p = P(a, 2) * P(y) + 3 * P(a)
    assert p.specialize({a: 2}) == 4 * P(y) + 6
    assert p.specialize({a: Fraction(1, 2), y: 4}) == Fraction(5, 2)


# -- total derivative ---------------------------------------------------------------

def test_total_derivative_of_atoms(kernel_symbols):
    s = kernel_symbols
    assert total_derivative(P(s["t"])) == 1
    assert total_derivative(P(s["a"])).is_zero
    assert total_derivative(P(s["y"])) == P(s["y'"])
    assert total_derivative(P(s["u"])) == P(s["u"].derivative())
    assert total_derivative(P(s["t"]) * P(s["y"], 2)) == P(s["y"], 2) + 2 * P(s["t"]) * P(s["y"]) * P(s["y'"])


def test_total_derivative_rejects_barred(kernel_symbols):
    with pytest.raises(BarredOperand):
        total_derivative(P(kernel_symbols["y"].barred()) + 1)


def test_derivation_rules_hold_on_random_polynomials(kernel_symbols):
    rng = random.Random(20240611)
    symbols = list(kernel_symbols.values())
    for _ in range(500):
        p = random_polynomial(rng, symbols)
        q = random_polynomial(rng, symbols)
        assert total_derivative(p + q) == total_derivative(p) + total_derivative(q)
        assert total_derivative(p * q) == total_derivative(p) * q + p * total_derivative(q)



def test_partial_derivative(kernel_symbols):
    s = kernel_symbols
    y, dy, a = P(s["y"]), P(s["y'"]), P(s["a"])
    p = y * y * dy + a * y + 7
    assert partial_derivative(p, s["y"]) == 2 * y * dy + a
    assert partial_derivative(p, s["y'"]) == y * y
    assert partial_derivative(p, s["z"]).is_zero

# -- division, gcd, content --------------------------------------------------------------

def test_exact_division_roundtrip(kernel_symbols):
    rng = random.Random(7)
    symbols = list(kernel_symbols.values())
    for _ in range(500):
        p = random_polynomial(rng, symbols)
        q = random_polynomial(rng, symbols)
        if q.is_zero:
            continue
        assert poly_exact_div(p * q, q) == p


def test_division_failures(kernel_symbols):
    y = kernel_symbols["y"]
    with pytest.raises(NotDivisible):
        poly_exact_div(P(y), P(y) + 1)
    with pytest.raises(ZeroDivisionError):
        poly_exact_div(P(y), Polynomial.zero())


def test_gcd(kernel_symbols):
    s = kernel_symbols
    x, y, a = P(s["z"]), P(s["y"]), P(s["a"])
    g = multivariate_gcd((x + 1) * (y + 2) * 4, (x + 1) * (y - a) * 6)
    assert g == 2 * (x + 1)
    assert multivariate_gcd(x * y * y, 3 * x * x * y + x * y) == x * y
    assert multivariate_gcd(x + 1, y + 1) == 1
    assert multivariate_gcd(Polynomial.zero(), -2 * y) == 2 * y


def test_gcd_divides_both_arguments(kernel_symbols):
    rng = random.Random(11)
    symbols = [kernel_symbols[k] for k in ("a", "y", "z")]
    for _ in range(100):
        common = random_polynomial(rng, symbols, terms=2)
        p = common * random_polynomial(rng, symbols, terms=3)
        q = common * random_polynomial(rng, symbols, terms=3)
        if p.is_zero or q.is_zero:
            continue
        g = multivariate_gcd(p, q)
        poly_exact_div(p, g)
        poly_exact_div(q, g)
        poly_exact_div(g, common.normalized())


def test_content_and_primitive_part(kernel_symbols):
    s = kernel_symbols
    y, a, t = P(s["y"]), P(s["a"]), P(s["t"])
    p = (a * t + 1) * (y * y + a * y)
    assert content(p, {s["y"]}) == a * t + 1
    assert primitive_part(p, {s["y"]}) == y * y + a * y
    assert gcd_list([2 * y, 4 * y * a, 6 * y]) == 2 * y


def test_coefficient_decomposition(kernel_symbols):
    s = kernel_symbols
    y, a, t = P(s["y"]), P(s["a"]), P(s["t"])
    p = a * y * y + t * y + 3 * y + a
    groups = coefficient_decomposition(p, {s["y"]})
    assert list(groups) == [Monomial.of(s["y"], 2), Monomial.of(s["y"]), Monomial()]
    assert groups[Monomial.of(s["y"])] == t + 3


def test_monomial_content(kernel_symbols):
    s = kernel_symbols
    y, dy, a = P(s["y"]), P(s["y'"]), P(s["a"])
    p = a * y * y * dy + y ** 3 * dy * dy
    assert monomial_content(p, {s["y"], s["y'"]}) == Monomial([(s["y"], 2), (s["y'"], 1)])
    assert monomial_content(p, {s["a"]}).is_unit
    assert monomial_content(p + 1, {s["y"]}).is_unit


def test_squarefree_part(kernel_symbols):
    s = kernel_symbols
    y, dy, a = P(s["y"]), P(s["y'"]), P(s["a"])
    family = {s["y"], s["y'"]}
    p = (dy + y) * (dy + y) * y ** 3 * (a + 1)
    assert_associate(squarefree_part(p, family), (dy + y) * y * (a + 1))
    kept = (a + 1) * (a + 1) * (y + 1)
    assert squarefree_part(kept, family) == kept
    assert squarefree_part(a * a, family) == a * a


def test_squarefree_part_divides_random_products(kernel_symbols):
    s = kernel_symbols
    rng = random.Random(77)
    family = [s["y"], s["y'"]]
    for _ in range(20):
        f = random_polynomial(rng, family, terms=3, max_exp=1)
        if f.is_constant:
            continue
        reduced = squarefree_part(f, family)
        poly_exact_div(f, reduced)
        assert_associate(squarefree_part(f * f * f, family), reduced)


# -- matrices ---------------------------------------------------------------------------

def test_determinant_symbolic(kernel_symbols):
    s = kernel_symbols
    a, y, z, t = P(s["a"]), P(s["y"]), P(s["z"]), P(s["t"])
    m = PolyMatrix.from_rows([[a, y], [z, t]])
    assert determinant_fraction_free(m) == a * t - y * z
    assert determinant_fraction_free(PolyMatrix.from_rows([[y + 1]])) == y + 1
    singular = PolyMatrix.from_rows([[a, y], [2 * a, 2 * y]])
    assert determinant_fraction_free(singular).is_zero


def test_determinant_matches_sympy_on_rational_matrices():
    rng = random.Random(3)
    for size in (2, 3, 4, 5):
        rows = [[Fraction(rng.randint(-9, 9), rng.randint(1, 4)) for _ in range(size)] for _ in range(size)]
        expected = sympy.Matrix([[sympy.Rational(c.numerator, c.denominator) for c in r] for r in rows]).det()
        actual = determinant_fraction_free(PolyMatrix.from_rows(rows))
        assert actual == Fraction(int(expected.p), int(expected.q))


def _laplace(rows):
    if len(rows) == 1:
        return rows[0][0]
    total = Polynomial.zero()
    for j, entry in enumerate(rows[0]):
        minor = [r[:j] + r[j + 1:] for r in rows[1:]]
        term = entry * _laplace(minor)
        total = total + term if j % 2 == 0 else total - term
    return total


def test_determinant_matches_cofactor_expansion(kernel_symbols):
    rng = random.Random(41)
    symbols = [kernel_symbols[k] for k in ("y", "y'", "a", "t")]
    for _ in range(3):
        rows = [[random_polynomial(rng, symbols, terms=2, max_exp=1) for _ in range(4)] for _ in range(4)]
        assert determinant_fraction_free(PolyMatrix.from_rows(rows)) == _laplace(rows)


def test_determinant_of_row_swap_changes_sign(kernel_symbols):
    s = kernel_symbols
    m = PolyMatrix.from_rows([[0, P(s["y"]), 1], [P(s["a"]), 0, 2], [1, 1, P(s["t"])]])
    assert determinant_fraction_free(m.swap_rows(0, 1)) == -determinant_fraction_free(m)


def test_determinant_requires_square():
    with pytest.raises(NotSquare):
        determinant_fraction_free(PolyMatrix.from_rows([[1, 2, 3], [4, 5, 6]]))


def test_rank_profile(kernel_symbols):
    s = kernel_symbols
    y, a = P(s["y"]), P(s["a"])
    m = PolyMatrix.from_rows([[y, a, 0], [2 * y, 2 * a, 0], [0, 0, 0], [1, 0, y]])
    rows, cols = matrix_rank_profile(m)
    assert matrix_rank(m) == 2
    assert len(rows) == len(cols) == 2
    assert determinant_fraction_free(m.submatrix(rows, cols)) != 0
