from dataclasses import replace

import numpy as np
import pytest

from daelim.dsl import parse_system
from daelim.elim import differential_algebraic_resultant
from daelim.errors import MissingAssignment, TrajectoryError
from daelim.trajectory import evaluate_residual, integrate, load_trajectory, parse_trajectory

from .conftest import system_path


def test_parse_lines():
    spec = parse_trajectory(
        "let g = 9.8\n"
        "ode x'' = -g*sin(x)  # comment\n"
        "init x = 0.5, 0\n"
        "step 0.001\n"
        "let y = cos(x)\n"
        "range 0 2 11\n"
    )
    assert (spec.start, spec.end, spec.count) == (0.0, 2.0, 11)
    assert spec.step == 0.001
    assert spec.ode("x").order == 2
    assert spec.ode("x").initial == (0.5, 0.0)
    assert spec.provides("x", 2) and spec.provides("x", 1) and not spec.provides("x", 3)
    assert spec.provides("y", 0) and not spec.provides("y", 1)
    assert spec.sample_times()[-1] == 2.0
    assert spec.with_samples(3).count == 3


@pytest.mark.parametrize("text", [
    "let y = 1\n",
    "let y = 1\nlet y = 2\nrange 0 1 5\n",
    "let y = sin(\nrange 0 1 5\n",
    "ode x = 1\ninit x = 0\nrange 0 1 5\n",
    "ode x' = x\nrange 0 1 5\n",
    "ode x' = x\ninit x = 1, 2\nrange 0 1 5\n",
    "init x = 1\nrange 0 1 5\n",
    "let y = 1\nrange 1 0 5\n",
    "let y = 1\nrange 0 1 1\n",
])
def test_parse_errors(text):
    with pytest.raises(TrajectoryError):
        parse_trajectory(text)


def test_circular_definitions_are_rejected():
    spec = parse_trajectory("let y = a\nlet a = b\nlet b = a + 1\nrange 0 1 3\n")
    system = parse_system("param a\nvar y\neq y - a = 0\n")
    with pytest.raises(TrajectoryError):
        evaluate_residual(system.equations[0], spec)


def test_angle_pendulum_satisfies_the_resultant(corpus):
    system = corpus("pendulum")
    spec = load_trajectory(system_path("pendulum_theta.traj"))
    for keep in ("y1", "y2"):
        result = differential_algebraic_resultant(system, system.symbol(keep))
        residual = evaluate_residual(result.resultant, spec)
        assert residual.max_residual < 1e-6
        assert len(residual.times) == 200


def test_displaced_bob_violates_the_resultant(corpus):
    system = corpus("pendulum")
    result = differential_algebraic_resultant(system, system.symbol("y2"))
    residual = evaluate_residual(result.resultant, load_trajectory(system_path("pendulum_bad.traj")))
    assert residual.max_residual > 1e-3


def test_cartesian_pendulum_satisfies_the_resultant(corpus):
    system = corpus("pendulum")
    result = differential_algebraic_resultant(system, system.symbol("y2"))
    residual = evaluate_residual(result.resultant, load_trajectory(system_path("pendulum_cartesian.traj")))
    assert residual.max_residual < 1e-5


def test_residual_shrinks_with_the_fourth_power_of_the_step(corpus):
    system = corpus("pendulum")
    result = differential_algebraic_resultant(system, system.symbol("y2"))
    spec = load_trajectory(system_path("pendulum_cartesian.traj"))
    coarse, fine = (evaluate_residual(result.resultant, replace(spec, step=h)).max_residual
                    for h in (0.01, 0.005))
    assert fine > 0
    assert 8 <= coarse / fine <= 32


def test_integrate_hits_sample_times_exactly():
    spec = parse_trajectory("ode x' = x\ninit x = 1\nstep 0.01\nrange 0 1 3\n")
    values = integrate(spec, spec.sample_times())[("x", 0)]
    assert values[0] == 1.0
    assert values[-1] == pytest.approx(np.e, rel=1e-8)


def test_exact_gear_solution(corpus):
    system = corpus("gear")
    spec = load_trajectory(system_path("gear_exact.traj"))
    for eq in system.equations:
        assert evaluate_residual(eq, spec).max_residual < 1e-12
    for keep in ("y1", "y2"):
        result = differential_algebraic_resultant(system, system.symbol(keep))
        assert evaluate_residual(result.resultant, spec).max_residual < 1e-12


def test_missing_assignment_names_every_symbol(corpus):
    system = corpus("gear")
    spec = parse_trajectory("let y1 = t\nrange 0 1 3\n")
    with pytest.raises(MissingAssignment) as info:
        evaluate_residual(system.equations[1], spec)
    assert "eta" in str(info.value) and "p2" in str(info.value)


def test_terms_are_summed_largest_first():
    system = parse_system("var y, z\neq y + 1 - z = 0\n")
    spec = parse_trajectory("let y = 10^16\nlet z = 10^16\nrange 0 1 2\n")
    residual = evaluate_residual(system.equations[0], spec)
    assert residual.per_sample == pytest.approx([1 / (1 + 1e16)] * 2)
