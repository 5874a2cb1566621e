"""Action-angle systems: curvature, torus enumeration, torus amplitudes."""

import cmath
import math

import numpy as np
import pytest

from semitrace import (
    ActionAngleSystem,
    CalibrationError,
    VanishingCurvatureError,
    check_integrable_normal_form,
    curvature_from_frequencies,
    curvature_from_parametrization,
    enumerate_tori,
    isochronicity_bracket,
    kinetic_actions,
    model_monodromy,
    quadratic_actions,
    torus_amplitude,
    torus_phase_candidates,
    torus_phase_integer,
)
from helpers import perturbed_quadratic

R2 = math.sqrt(2)
TWO_PI = 2.0 * math.pi


def test_domain_rows_must_be_ordered():
    with pytest.raises(ValueError):
        ActionAngleSystem(n=1, value=lambda i: 0.0, domain=[[1.0, -1.0]])


def test_quadratic_actions_requires_symmetry():
    with pytest.raises(ValueError):
        quadratic_actions([[0.0, 1.0], [0.5, 0.0]])


def test_builtin_systems_carry_names():
    assert kinetic_actions(2).name == "kinetic"
    assert quadratic_actions(np.eye(2)).name == "quadratic"


def test_analytic_derivatives_match_finite_differences():
    rng = np.random.default_rng(3)
    for n in (2, 3):
        system = perturbed_quadratic(rng, n)
        for _ in range(5):
            point = rng.uniform(-2.0, 2.0, size=n)
            system.validate_derivatives(point)


def test_validate_derivatives_rejects_wrong_gradient():
    system = ActionAngleSystem(
        n=2,
        value=lambda i: 0.5 * float(i @ i),
        grad=lambda i: 2.0 * np.asarray(i, dtype=float),
        domain=np.tile([-4.0, 4.0], (2, 1)))
    with pytest.raises(ValueError):
        system.validate_derivatives(np.array([1.0, 0.5]))


def test_curvature_routes_agree_on_random_systems():
    rng = np.random.default_rng(5)
    for n in (2, 3):
        for _ in range(15):
            system = perturbed_quadratic(rng, n)
            point = rng.uniform(0.5, 1.5, size=n) * rng.choice([-1.0, 1.0], size=n)
            k_freq = curvature_from_frequencies(system, point)
            k_param = curvature_from_parametrization(system, point)
            assert abs(k_freq - k_param) <= 1e-4 * (1.0 + abs(k_freq))


def test_curvature_routes_agree_on_the_flat_torus():
    system = kinetic_actions(2)
    point = np.array([R2, 0.0])
    k_freq = curvature_from_frequencies(system, point)
    k_param = curvature_from_parametrization(system, point)
    # The shell is a circle of radius sqrt(2) and the normal points along
    # the frequency vector, so both routes give -1/sqrt(2) exactly.
    assert abs(k_freq + 1.0 / R2) < 1e-12
    assert abs(k_param + 1.0 / R2) < 1e-6


def test_inflection_shell_reports_zero_curvature():
    system = ActionAngleSystem(
        n=2,
        value=lambda i: i[1] - i[0] ** 3 / 3.0,
        grad=lambda i: np.array([-i[0] ** 2, 1.0]),
        hess=lambda i: np.array([[-2.0 * i[0], 0.0], [0.0, 0.0]]),
        domain=np.tile([-4.0, 4.0], (2, 1)))
    point = np.array([0.0, 1.0])
    assert abs(curvature_from_frequencies(system, point)) <= 1e-6
    assert abs(curvature_from_parametrization(system, point)) <= 1e-6


def test_bracket_is_twice_the_energy_for_quadratic_actions():
    rng = np.random.default_rng(9)
    basis, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    system = quadratic_actions(basis @ np.diag([0.7, 1.1, 1.9]) @ basis.T)
    for _ in range(5):
        point = rng.uniform(-2.0, 2.0, size=3)
        bracket = isochronicity_bracket(system, point)
        assert abs(bracket - 2.0 * system.value(point)) < 1e-10


def test_flat_torus_enumeration_finds_the_unit_lattice_shell():
    system = kinetic_actions(2)
    result = enumerate_tori(system, 1.0, (4.0, 5.0), lattice_bound=4.0)
    assert result.warnings == ()
    assert len(result.tori) == 4
    vectors = {tuple(t.integer_vector) for t in result.tori}
    assert vectors == {(1, 0), (-1, 0), (0, 1), (0, -1)}
    for torus in result.tori:
        assert abs(torus.period - TWO_PI / R2) < 1e-8
        expected = R2 * torus.integer_vector
        assert np.max(np.abs(torus.actions - expected)) < 1e-8
        assert torus.residual <= 1e-10
        assert abs(torus.bracket - 2.0) < 1e-8
        action = TWO_PI * float(torus.integer_vector @ torus.actions)
        assert abs(action - TWO_PI * R2) < 1e-8


def test_flat_torus_enumeration_is_complete_in_a_wide_window():
    system = kinetic_actions(2)
    result = enumerate_tori(system, 1.0, (0.1, 10.0), lattice_bound=4.0)
    # Periods are pi sqrt(2) |m|; norms 1, sqrt2, 2, sqrt5 fit under 10.
    by_norm = {}
    for torus in result.tori:
        by_norm.setdefault(round(torus.lattice_norm, 9), []).append(torus)
        assert abs(torus.period - math.pi * R2 * torus.lattice_norm) < 1e-8
    counts = {norm: len(group) for norm, group in sorted(by_norm.items())}
    assert counts == {1.0: 4, round(R2, 9): 4, 2.0: 4,
                      round(math.sqrt(5.0), 9): 8}
    assert len(result.tori) == 20


def test_enumeration_rejects_vanishing_bracket_shells():
    # For a homogeneous quadratic the bracket equals 2E, so the zero
    # level set carries only period-degenerate tori.
    system = quadratic_actions(np.diag([1.0, -1.0]))
    with pytest.raises(VanishingCurvatureError):
        enumerate_tori(system, 0.0, (0.1, 10.0), lattice_bound=2.0,
                       newton_tol=1e-13)


def test_normal_form_check_passes_on_nondegenerate_systems():
    rng = np.random.default_rng(21)
    kinetic = kinetic_actions(2)
    report = check_integrable_normal_form(kinetic, [R2, 0.0], TWO_PI / R2)
    assert report.hessian_invertible
    assert report.kernel_equals_action_span
    assert report.bracket_nonzero
    assert not report.drift_in_image
    assert report.nilpotent_square
    assert report.consistent
    for _ in range(3):
        system = perturbed_quadratic(rng, 3)
        point = rng.uniform(0.5, 1.5, size=3)
        assert check_integrable_normal_form(system, point, 3.0).consistent


def test_normal_form_check_flags_degenerate_hessian():
    system = ActionAngleSystem(
        n=2,
        value=lambda i: 0.5 * i[0] ** 2 + i[1],
        grad=lambda i: np.array([i[0], 1.0]),
        hess=lambda i: np.array([[1.0, 0.0], [0.0, 0.0]]),
        domain=np.tile([-4.0, 4.0], (2, 1)))
    report = check_integrable_normal_form(system, [1.0, 0.5], 3.0)
    assert not report.hessian_invertible
    assert not report.kernel_equals_action_span
    assert report.nilpotent_square


def test_model_monodromy_is_a_flat_shear():
    system = kinetic_actions(2)
    period = TWO_PI / R2
    mono = model_monodromy(system, [R2, 0.0], period)
    expected = np.eye(4)
    expected[:2, 2:] = period * np.eye(2)
    assert np.allclose(mono.matrix, expected, atol=1e-14)
    assert np.allclose(mono.base_point, [0.0, 0.0, R2, 0.0])
    assert mono.time == period


def test_phase_integer_follows_the_curvature_sign():
    assert torus_phase_integer(2, -0.7) == 3
    assert torus_phase_integer(2, 0.7) == 1
    assert torus_phase_integer(3, 0.7) == 2
    assert torus_phase_candidates(2, -0.7) == (3, 7)
    with pytest.raises(VanishingCurvatureError):
        torus_phase_integer(2, 0.0)


def test_squared_phase_level_is_invariant_under_curvature_flip():
    for n in (2, 3):
        for k in (0.7, 1.3):
            plus = torus_phase_integer(n, k)
            minus = torus_phase_integer(n, -k)
            assert minus == (plus + 2) % 4
            level_plus = (1j) ** plus / k
            level_minus = (1j) ** minus / (-k)
            assert cmath.isclose(level_plus, level_minus, rel_tol=1e-15)


def test_torus_amplitude_modulus_and_phase():
    system = kinetic_actions(2)
    result = enumerate_tori(system, 1.0, (4.0, 5.0), lattice_bound=1.0)
    torus = next(t for t in result.tori
                 if tuple(t.integer_vector) == (1, 0))
    h = 0.02
    amp = torus_amplitude(torus, system, fhat_value=1.0, h=h, beta=3)
    expected_modulus = h ** -0.5 / (R2 * math.sqrt(1.0 / R2))
    assert abs(abs(amp) - expected_modulus) < 1e-6
    expected = (cmath.exp(1j * TWO_PI * R2 / h)
                * cmath.exp(3j * math.pi / 4.0) * expected_modulus)
    assert cmath.isclose(amp, expected, rel_tol=1e-6)
    flipped = torus_amplitude(torus, system, fhat_value=1.0, h=h, beta=7)
    assert cmath.isclose(flipped, -amp, rel_tol=1e-12)


def test_torus_amplitude_rejects_inconsistent_beta():
    system = kinetic_actions(2)
    result = enumerate_tori(system, 1.0, (4.0, 5.0), lattice_bound=1.0)
    torus = result.tori[0]
    with pytest.raises(CalibrationError):
        torus_amplitude(torus, system, fhat_value=1.0, h=0.02, beta=5)
    with pytest.raises(VanishingCurvatureError):
        torus_amplitude(torus, system, fhat_value=1.0, h=0.02, beta=3,
                        curvature=0.0)
