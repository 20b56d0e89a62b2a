import json
import random
from itertools import permutations

import pytest

from daelim.dixon import (
    build_cancellation_matrix,
    dixon_size_bound,
    extract_dixon_matrix,
    strip_cascade_factors,
)
from daelim.dsl import parse_system
from daelim.elim import (
    EliminationResult,
    build_elimination_matrix,
    differential_algebraic_resultant,
    eliminate_each,
    select_subsystem,
)
from daelim.errors import NotReducible, ResultantVanishes
from daelim.symcore import matrix_rank

from .conftest import assert_associate, poly_in

PENDULUM_Y1 = ("(-2*L^6*y1^2 + L^8 + y1^4*L^4)*y1''^2 + (-2*L^4*y1^3 + 2*L^6*y1)*y1'^2*y1''"
               " + 3*g^2*L^4*y1^4 + L^4*y1'^4*y1^2 + g^2*y1^8 - 3*g^2*L^2*y1^6 - L^6*g^2*y1^2")

GOLDEN = [
    ("gear", "y1", "y1 - p2 + eta*t*(p1 - p2')"),
    ("gear", "y2", "y2 - p1 + p2'"),
    ("nonsquare", "y1", "c20*c31*y1 - c22*c30*y1'"),
    ("nonsquare", "y2", "-c10*c22*y2 + c20*c13*y2'"),
    ("pendulum", "y2", "(L^4 - L^2*y2^2)*y2'' + L^2*y2'^2*y2 - g*y2^4 + 2*g*L^2*y2^2 - g*L^4"),
    ("pendulum", "y1", PENDULUM_Y1),
    ("network", "y4", "y4' + y4 + e' - d"),
]

# Entries of the displayed 7x7 pendulum matrix (keep y1), up to sign.
PENDULUM_Y1_ENTRIES = ["y1*y1'", "L^2 - y1^2", "y1^2*y1'' + y1*y1'^2", "y1^2*y1'", "1", "g*y1", "y1''"]


@pytest.mark.parametrize("name, keep, expected", GOLDEN)
def test_golden_resultants(corpus, name, keep, expected):
    system = corpus(name)
    result = differential_algebraic_resultant(system, system.symbol(keep))
    assert_associate(result.resultant, poly_in(system, expected))


@pytest.mark.parametrize("name, keep", [(n, k) for n, k, _ in GOLDEN])
def test_resultant_mentions_only_the_kept_family(corpus, name, keep):
    system = corpus(name)
    target = system.symbol(keep)
    result = differential_algebraic_resultant(system, target)
    dependents = {s for s in result.resultant.symbols if s.is_dependent}
    assert dependents and all(s.root == target for s in dependents)
    assert set(result.kept_family) == dependents
    assert result.resultant == result.resultant.normalized()
    assert all(not f.symbols & dependents for f in result.extraneous_factors)


def test_pendulum_resultants_report_what_was_removed(corpus):
    system = corpus("pendulum")
    y1 = differential_algebraic_resultant(system, system.symbol("y1"))
    assert "removed the kept-family factor y1^5" in y1.warnings
    y2 = differential_algebraic_resultant(system, system.symbol("y2"))
    assert any(w.startswith("removed the repeated factor") for w in y2.warnings)


def test_pendulum_matrix_entries(corpus):
    system = corpus("pendulum")
    built = build_elimination_matrix(system, system.symbol("y1"))
    entries = [e for e in built.stripped.matrix.entries if not e.is_zero]
    assert built.stripped.shape == (7, 7)
    assert len(entries) == 18
    assert {e.sign_normalized() for e in entries} == {
        poly_in(system, text).sign_normalized() for text in PENDULUM_Y1_ENTRIES
    }
    assert [f for _, f in built.stripped.removed_row_factors] == [poly_in(system, "y1")] * 5


@pytest.mark.parametrize("name, keep, shape", [
    ("pendulum", "y1", (7, 7)),
    ("pendulum", "y2", (7, 7)),
    ("generic_ode", None, (8, 9)),
    ("predator", "y1", (5, 5)),
])
def test_elimination_matrix_sizes(corpus, name, keep, shape):
    system = corpus(name)
    built = build_elimination_matrix(system, system.symbol(keep) if keep else None)
    assert built.extracted.shape == shape
    assert built.stripped.shape == shape


def test_generic_ode_matrix_has_rank_eight_under_every_order(corpus):
    system = corpus("generic_ode")
    rng = random.Random(6)
    values = {p: rng.randint(2, 10**6) for p in system.parameters}
    system = system.with_equations([eq.specialize(values) for eq in system.equations], system.provenance)
    built = build_elimination_matrix(system)
    equations = built.equations
    shapes = set()
    for order in permutations(built.elimination_symbols):
        theta, _ = strip_cascade_factors(build_cancellation_matrix(equations, order))
        extracted = extract_dixon_matrix(theta, order)
        assert matrix_rank(extracted.matrix) == 8
        shapes.add(extracted.shape)
    assert shapes == {(8, 9), (9, 8), (10, 10)}


@pytest.mark.parametrize("name, keep", [
    ("gear", "y1"), ("gear", "y2"), ("nonsquare", "y1"), ("nonsquare", "y2"),
    ("pendulum", "y2"), ("predator", "y1"), ("generic_ode", None), ("network", "y4"),
])
def test_size_bound_holds_on_the_corpus(corpus, name, keep):
    system = corpus(name)
    built = build_elimination_matrix(system, system.symbol(keep) if keep else None)
    bound = dixon_size_bound(built.equations, built.elimination_symbols)
    rows, cols = built.extracted.shape
    assert rows <= bound and cols <= bound


def test_equations_lose_their_rational_content(corpus):
    system = corpus("pendulum")
    built = build_elimination_matrix(system, system.symbol("y1"))
    assert poly_in(system, "y1*y1' + y2*y2'") in built.equations
    assert all(eq.rational_content() == 1 for eq in built.equations)


def test_full_differential_resultant(corpus):
    system = corpus("generic_ode")
    fixed = {p: i + 2 for i, p in enumerate(system.parameters) if p.name not in ("a5", "b5")}
    system = system.with_equations([eq.specialize(fixed) for eq in system.equations], system.provenance)
    result = differential_algebraic_resultant(system)
    assert result.kept is None
    assert result.extraneous_factors == ()
    assert not any(s.is_dependent for s in result.resultant.symbols)
    assert result.resultant.symbols == {system.symbol("a5"), system.symbol("b5")}


def test_vanishing_matrix_is_reported():
    system = parse_system("var x, y\neq x - y = 0\neq 2*x - 2*y = 0\neq x + y - 1 = 0\n")
    with pytest.raises(ResultantVanishes) as info:
        differential_algebraic_resultant(system)
    assert info.value.partial is not None
    assert info.value.exit_code == 4


def test_reduction_failure_propagates(corpus):
    system = corpus("gear")
    with pytest.raises(NotReducible) as info:
        differential_algebraic_resultant(system, system.symbol("y1"), max_differentiations=0)
    assert info.value.partial.upsilon == (0, 0)


def test_cascade_factors_with_the_kept_variable_are_not_extraneous():
    system = parse_system("var y, x\neq y*x + 1 = 0\neq y*x^2 + 2 = 0\n")
    y = system.symbol("y")
    built = build_elimination_matrix(system, y)
    assert [f.sign_normalized() for f in built.cascade_factors] == [poly_in(system, "y")]
    result = differential_algebraic_resultant(system, y)
    assert result.resultant == poly_in(system, "2*y + 1")
    assert result.extraneous_factors == ()
    assert result.warnings == ("removed the kept-family factor y",)


def test_pinned_network_uses_the_smallest_subsystem(corpus):
    system = corpus("network")
    built = build_elimination_matrix(system, system.symbol("y4"))
    assert built.labels == ("f4", "D f5")
    assert [s.name for s in built.elimination_symbols] == ["y5'"]
    assert built.reduction.upsilon == (0, 0, 0, 0, 1)


@pytest.mark.parametrize("keep", ["y2", "y3"])
def test_network_variables_left_free_by_the_enlarged_system(corpus, keep):
    system = corpus("network")
    with pytest.raises(NotReducible) as info:
        differential_algebraic_resultant(system, system.symbol(keep))
    assert "no subsystem" in str(info.value)


def test_select_subsystem():
    system = parse_system("var x, y, z, w\neq x - y^2 = 0\neq y - 1 = 0\neq z - w = 0\n")
    x, y, z = (system.symbol(n) for n in "xyz")
    assert select_subsystem(system.equations, frozenset({x})) == (0, 1)
    assert select_subsystem(system.equations, frozenset({y})) == (1,)
    assert select_subsystem(system.equations, frozenset({z})) is None
    assert select_subsystem(system.equations[:2], frozenset()) is None
    assert select_subsystem(system.equations[:2], frozenset({x})) == (0, 1)


def test_eliminate_each_matches_single_calls(corpus):
    system = corpus("nonsquare")
    targets = list(system.dependents)
    outcomes = eliminate_each(system, targets, workers=2)
    assert list(outcomes) == targets
    for target in targets:
        single = differential_algebraic_resultant(system, target)
        assert outcomes[target].resultant == single.resultant
    assert eliminate_each(system, targets[:1], workers=1)[targets[0]].resultant == outcomes[targets[0]].resultant


def test_eliminate_each_records_failures(corpus):
    system = corpus("gear")
    outcomes = eliminate_each(system, list(system.dependents), workers=2, max_differentiations=0)
    assert all(isinstance(o, NotReducible) for o in outcomes.values())
    with pytest.raises(ValueError):
        eliminate_each(system, [])


def test_result_document_is_stable(corpus):
    system = corpus("gear")
    first = differential_algebraic_resultant(system, system.symbol("y2")).to_dict()
    second = differential_algebraic_resultant(system, system.symbol("y2")).to_dict()
    assert json.dumps(first) == json.dumps(second)
    assert list(first) == ["system", "kept", "upsilon", "weak_index", "matrix_rows", "matrix_cols",
                           "resultant", "extraneous_factors", "warnings"]
    assert first["kept"] == "y2"
    assert first["upsilon"] == [0, 1]
    assert poly_in(system, first["resultant"]) == differential_algebraic_resultant(
        system, system.symbol("y2")).resultant


def test_result_type(corpus):
    system = corpus("gear")
    assert isinstance(differential_algebraic_resultant(system, system.symbol("y1")), EliminationResult)
