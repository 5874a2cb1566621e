"""Spectra, windows, quantum density, calibration, and sweep reports."""

import cmath
import math

import numpy as np
import pytest
import scipy.linalg

from semitrace import (
    BumpWindow,
    CalibrationError,
    ComponentLabel,
    DensityMethod,
    DensityResult,
    EnergyCutoff,
    IncompleteSpectrumError,
    PeriodicComponent,
    QuadraticHamiltonian,
    Spectrum,
    SpectrumError,
    SweepComponent,
    TriangleWindow,
    calibrate_phases,
    components_payload,
    convolution_identity_check,
    kinetic_actions,
    load_report_csv,
    oscillator_spectrum,
    quantum_density,
    report_csv_lines,
    run_sweep,
    semiclassical_density,
    torus_components,
    torus_spectrum,
    validate_window_pair,
    window_from_quadrature,
)

R2 = math.sqrt(2)
TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# Windows


def test_triangle_window_shape():
    window = TriangleWindow(center=TWO_PI, halfwidth=0.5)
    assert float(window.fhat(TWO_PI)) == 1.0
    assert float(window.fhat(TWO_PI + 0.25)) == 0.5
    assert float(window.fhat(TWO_PI + 0.5)) == 0.0
    assert float(window.fhat(0.0)) == 0.0
    assert window.support == (TWO_PI - 0.5, TWO_PI + 0.5)
    assert abs(complex(window.f(0.0)) - 0.5 / TWO_PI) < 1e-15


def test_bump_window_shape():
    window = BumpWindow(center=0.0, halfwidth=1.0)
    assert float(window.fhat(0.0)) == 1.0
    assert float(window.fhat(1.0)) == 0.0
    assert float(window.fhat(1.5)) == 0.0
    assert 0.0 < float(window.fhat(0.9)) < 0.1


def test_windows_reject_bad_halfwidth():
    with pytest.raises(ValueError):
        TriangleWindow(center=0.0, halfwidth=0.0)
    with pytest.raises(ValueError):
        BumpWindow(center=1.0, halfwidth=-2.0)


@pytest.mark.parametrize("window", [
    TriangleWindow(center=0.0, halfwidth=1.0),
    TriangleWindow(center=TWO_PI, halfwidth=0.5),
    TriangleWindow(center=TWO_PI / R2, halfwidth=2.5),
    BumpWindow(center=0.0, halfwidth=1.0),
    BumpWindow(center=TWO_PI / R2, halfwidth=2.5),
])
def test_transform_matches_independent_quadrature(window):
    # Off-center windows included: the oscillatory shift factor has to
    # survive both evaluation routes.
    assert validate_window_pair(window) <= 1e-8


def test_triangle_transform_integrates_to_center_value():
    window = TriangleWindow(center=1.5, halfwidth=0.75)
    x, weights = np.polynomial.legendre.leggauss(4000)
    span = 400.0
    x = x * span
    total = np.sum(weights * span * np.asarray(window.f(x)))
    # Integral of f equals fhat(0); the tail of sinc^2 converges slowly,
    # hence the generous tolerance.
    assert abs(total - float(window.fhat(0.0))) < 5e-3


# ---------------------------------------------------------------------------
# Energy cutoff


def test_cutoff_is_one_at_center_and_supported():
    cutoff = EnergyCutoff(center=1.0, halfwidth=0.3)
    assert cutoff.value_at_center == 1.0
    assert float(cutoff.value(1.0)) == 1.0
    assert float(cutoff.value(1.31)) == 0.0
    assert float(cutoff.value(0.69)) == 0.0
    assert cutoff.support == (0.7, 1.3)


def test_cutoff_plateau_is_identically_one():
    cutoff = EnergyCutoff(center=1.0, halfwidth=0.3, plateau_halfwidth=0.1)
    inner = np.linspace(0.9, 1.1, 41)
    assert np.all(cutoff.value(inner) == 1.0)
    ramp = cutoff.value(np.linspace(1.1, 1.3, 101))
    assert np.all(np.diff(ramp) <= 1e-12)
    assert float(cutoff.value(1.3)) == 0.0


def test_cutoff_rejects_bad_plateau():
    with pytest.raises(ValueError):
        EnergyCutoff(center=1.0, halfwidth=0.3, plateau_halfwidth=0.3)
    with pytest.raises(ValueError):
        EnergyCutoff(center=1.0, halfwidth=0.0)


# ---------------------------------------------------------------------------
# Spectra


def test_oscillator_spectrum_small_window_exact():
    spectrum = oscillator_spectrum([1.0], 0.1, (0.9, 1.1))
    assert np.allclose(spectrum.values, [0.95, 1.05], atol=1e-15)
    assert spectrum.count == 2
    assert spectrum.source == "oscillator"


def test_oscillator_spectrum_matches_brute_force_lattice():
    w = np.array([1.0, R2])
    h = 0.3
    window = (0.5, 4.0)
    spectrum = oscillator_spectrum(w, h, window)
    brute = []
    for k1 in range(40):
        for k2 in range(40):
            value = h * (w[0] * (k1 + 0.5) + w[1] * (k2 + 0.5))
            if window[0] <= value <= window[1]:
                brute.append(value)
    brute = np.sort(np.array(brute))
    assert spectrum.count == brute.size
    assert np.allclose(spectrum.values, brute, atol=1e-12)


def test_oscillator_spectrum_matches_discretized_operator():
    """Cross-check against -h^2/2 d^2/dx^2 + x^2/2 on a fine grid.

    Central differences give O(dx^2) eigenvalue bias; one Richardson
    step with a halved grid removes it to O(dx^4).
    """
    h = 0.05
    window = (0.9, 1.1)
    exact = oscillator_spectrum([1.0], h, window).values

    def fd_levels(n_interior):
        length = 3.0
        dx = 2.0 * length / (n_interior + 1)
        x = -length + dx * np.arange(1, n_interior + 1)
        diag = h**2 / dx**2 + 0.5 * x**2
        off = np.full(n_interior - 1, -0.5 * h**2 / dx**2)
        return scipy.linalg.eigh_tridiagonal(
            diag, off, select="v", select_range=window)[0]

    coarse = fd_levels(3000)
    fine = fd_levels(6001)
    assert coarse.size == exact.size and fine.size == exact.size
    extrapolated = (4.0 * fine - coarse) / 3.0
    assert np.max(np.abs(extrapolated - exact)) < 1e-6


def test_torus_spectrum_low_levels_with_multiplicity():
    spectrum = torus_spectrum(2, 1.0, (-0.5, 1.1))
    assert np.allclose(spectrum.values,
                       [0.0, 0.5, 0.5, 0.5, 0.5, 1.0, 1.0, 1.0, 1.0],
                       atol=1e-15)


def test_torus_spectrum_matches_brute_force_lattice():
    h = 0.35
    window = (0.05, 1.1)
    offsets = (1, 0)
    spectrum = torus_spectrum(2, h, window, offsets=offsets)
    brute = []
    for k1 in range(-8, 9):
        for k2 in range(-8, 9):
            value = 0.5 * ((h * (k1 + 0.25)) ** 2 + (h * k2) ** 2)
            if window[0] <= value <= window[1]:
                brute.append(value)
    brute = np.sort(np.array(brute))
    assert spectrum.count == brute.size
    assert np.allclose(spectrum.values, brute, atol=1e-12)


def test_torus_spectrum_scales_quadratically_in_h():
    base = torus_spectrum(2, 0.2, (0.3, 0.9))
    scaled = torus_spectrum(2, 0.4, (1.2, 3.6))
    assert base.count == scaled.count
    assert np.allclose(scaled.values, 4.0 * base.values, atol=1e-12)


def test_bound_padding_never_adds_in_window_eigenvalues():
    w = [1.0, R2]
    tight = oscillator_spectrum(w, 0.2, (0.5, 3.0))
    padded = oscillator_spectrum(w, 0.2, (0.5, 3.0), bound_pad=2)
    assert np.array_equal(tight.values, padded.values)
    t_tight = torus_spectrum(2, 0.3, (0.05, 1.0), offsets=(1, 3))
    t_padded = torus_spectrum(2, 0.3, (0.05, 1.0), offsets=(1, 3), bound_pad=2)
    assert np.array_equal(t_tight.values, t_padded.values)


def test_spectrum_cap_and_window_validation():
    with pytest.raises(SpectrumError):
        oscillator_spectrum([1.0, R2], 1e-4, (0.0, 1.0), count_cap=1000)
    with pytest.raises(SpectrumError):
        torus_spectrum(2, 1e-4, (0.0, 1.0), count_cap=1000)
    with pytest.raises(ValueError):
        oscillator_spectrum([1.0], 0.1, (1.0, 1.0))
    with pytest.raises(ValueError):
        torus_spectrum(2, 0.1, (2.0, 1.0))
    empty = oscillator_spectrum([1.0], 0.1, (0.0, 0.01))
    assert empty.count == 0


# ---------------------------------------------------------------------------
# Quantum density


def test_quantum_density_single_eigenvalue_convention():
    lam = 1.02
    h = 0.05
    energy = 1.0
    spectrum = Spectrum(values=np.array([lam]), source="manual", h=h,
                        window=(0.7, 1.3))
    cutoff = EnergyCutoff(center=energy, halfwidth=0.3)
    window = TriangleWindow(center=TWO_PI, halfwidth=0.5)
    got = quantum_density(spectrum, cutoff, window, energy, h)
    expected = (float(cutoff.value(lam))
                * complex(window.f((energy - lam) / h)))
    assert cmath.isclose(got, expected, rel_tol=1e-14)


def test_quantum_density_agrees_with_direct_quadrature():
    h = 0.05
    energy = 1.0
    spectrum = oscillator_spectrum([1.0], h, (0.7, 1.3))
    cutoff = EnergyCutoff(center=energy, halfwidth=0.3)
    window = TriangleWindow(center=TWO_PI, halfwidth=1.0)
    got = quantum_density(spectrum, cutoff, window, energy, h)
    weights = cutoff.value(spectrum.values)
    kernel = window_from_quadrature(window, (energy - spectrum.values) / h)
    direct = complex(np.sum(weights * kernel))
    assert abs(got - direct) < 1e-10 * max(1.0, abs(got))


def test_quantum_density_requires_covering_spectrum():
    spectrum = Spectrum(values=np.array([1.0]), source="manual", h=0.1,
                        window=(0.95, 1.05))
    cutoff = EnergyCutoff(center=1.0, halfwidth=0.3)
    window = TriangleWindow(center=TWO_PI, halfwidth=0.5)
    with pytest.raises(IncompleteSpectrumError):
        quantum_density(spectrum, cutoff, window, 1.0, 0.1)


def test_convolution_identity_on_a_plateau():
    h = 0.05
    spectrum = oscillator_spectrum([1.0], h, (0.65, 1.35))
    cutoff = EnergyCutoff(center=1.0, halfwidth=0.3, plateau_halfwidth=0.1)
    window = TriangleWindow(center=TWO_PI, halfwidth=1.0)
    grid = np.linspace(0.95, 1.05, 21)
    assert convolution_identity_check(spectrum, cutoff, window, grid, h) <= 1e-6


def test_convolution_identity_requires_plateau_coverage():
    h = 0.05
    spectrum = oscillator_spectrum([1.0], h, (0.65, 1.35))
    cutoff = EnergyCutoff(center=1.0, halfwidth=0.3, plateau_halfwidth=0.02)
    window = TriangleWindow(center=TWO_PI, halfwidth=1.0)
    with pytest.raises(ValueError):
        convolution_identity_check(spectrum, cutoff, window,
                                   np.linspace(0.95, 1.05, 5), h)


# ---------------------------------------------------------------------------
# Calibration


def quarter(m):
    return cmath.exp(1j * math.pi * (m % 8) / 4.0)


def orbit_part(period, d_squared=-0.25):
    component = PeriodicComponent(period=period, representative=np.zeros(4),
                                  dim=1, resonant_count=1, action=period,
                                  label=ComponentLabel.NONDEGENERATE_ORBIT,
                                  grad_norm=1.0, resonant=frozenset({0}))
    density = DensityResult(d_squared=complex(d_squared),
                            method=DensityMethod.NONDEGENERATE)
    return SweepComponent(kind="oscillator", component=component,
                          density=density, measure=1.0,
                          phase_candidates=density.phase_candidates())


def test_calibration_picks_the_planted_phase():
    window = TriangleWindow(center=TWO_PI, halfwidth=1.0)
    h = 0.013
    part = orbit_part(TWO_PI)
    assert part.phase_candidates == (2, 6)
    base = part.base_amplitude(window, 1.0, h)
    calibrate_phases([part], base * quarter(6), window, 1.0, h)
    assert part.resolved_phase == 6
    assert cmath.isclose(part.amplitude(window, 1.0, h), base * quarter(6),
                         rel_tol=1e-12)


def test_calibration_tie_breaks_to_the_smaller_integer():
    window = TriangleWindow(center=TWO_PI, halfwidth=1.0)
    part = orbit_part(TWO_PI)
    # Zero target scores both candidates identically.
    calibrate_phases([part], 0.0 + 0.0j, window, 1.0, 0.013)
    assert part.resolved_phase == 2


def test_calibration_keeps_already_resolved_components_fixed():
    window = TriangleWindow(center=TWO_PI, halfwidth=1.0)
    h = 0.013
    weyl_component = PeriodicComponent(
        period=0.0, representative=np.zeros(4), dim=3, resonant_count=2,
        action=0.0, label=ComponentLabel.WEYL_ZERO, grad_norm=1.0,
        resonant=frozenset({0, 1}))
    weyl = SweepComponent(
        kind="oscillator", component=weyl_component,
        density=DensityResult(d_squared=1.0, method=DensityMethod.WEYL_ZERO,
                              phase_quarter_turns=0),
        measure=1.0, phase_candidates=(0,), resolved_phase=0)
    part = orbit_part(TWO_PI)
    target = (weyl.amplitude(window, 1.0, h)
              + part.base_amplitude(window, 1.0, h) * quarter(2))
    calibrate_phases([weyl, part], target, window, 1.0, h)
    assert weyl.resolved_phase == 0
    assert part.resolved_phase == 2
    total = semiclassical_density([weyl, part], window, 1.0, h)
    assert cmath.isclose(total, target, rel_tol=1e-12)


def test_calibration_budget_is_enforced():
    window = TriangleWindow(center=TWO_PI, halfwidth=1.0)
    parts = [orbit_part(TWO_PI - 0.2 * i) for i in range(3)]
    with pytest.raises(CalibrationError):
        calibrate_phases(parts, 1.0 + 0.0j, window, 1.0, 0.013,
                         max_combinations=4)


def test_torus_components_calibrate_jointly():
    system = kinetic_actions(2)
    window = TriangleWindow(center=TWO_PI / R2, halfwidth=1.0)
    parts = torus_components(system, 1.0, window, lattice_bound=4.0)
    assert len(parts) == 4
    assert all(part.phase_candidates == parts[0].phase_candidates
               for part in parts)
    h = 0.02
    target = sum(part.base_amplitude(window, 1.0, h) * quarter(7)
                 for part in parts)
    # Four tori share one sign choice; a budget of two proves the
    # product is taken over groups rather than components.
    calibrate_phases(parts, target, window, 1.0, h, max_combinations=2)
    assert all(part.resolved_phase == 7 for part in parts)


def test_uncalibrated_amplitude_raises():
    window = TriangleWindow(center=TWO_PI, halfwidth=1.0)
    part = orbit_part(TWO_PI)
    with pytest.raises(CalibrationError):
        part.amplitude(window, 1.0, 0.013)


# ---------------------------------------------------------------------------
# Sweeps and reports


def test_sweep_weyl_only_window_needs_no_calibration():
    system = QuadraticHamiltonian(np.array([1.0, R2]))
    window = BumpWindow(center=0.0, halfwidth=1.0)
    report = run_sweep(system, 1.0, 0.3, [0.02, 0.01], window)
    assert report.calibration_h is None
    assert len(report.scored_rows()) == 2
    assert [row.h for row in report.rows] == [0.02, 0.01]
    for row in report.rows:
        assert row.n_eigenvalues > 0
        assert row.abs_err == abs(row.quantum - row.semiclassical)
        assert row.rel_err == row.abs_err / abs(row.quantum)
        assert row.wall_ms >= 0.0
    # The zero-period term dominates and the approximation improves.
    assert report.rows[1].rel_err < report.rows[0].rel_err < 0.02


def test_sweep_torus_path_calibrates_on_smallest_h():
    system = kinetic_actions(2)
    window = TriangleWindow(center=TWO_PI / R2, halfwidth=1.0)
    report = run_sweep(system, 1.0, 0.3, [0.05, 0.02], window)
    assert report.calibration_h == 0.02
    scored = report.scored_rows()
    assert [row.h for row in scored] == [0.05]
    phases = {part.resolved_phase for part in report.components}
    assert phases == {7}
    assert scored[0].rel_err < 0.5


def test_sweep_input_validation():
    system = QuadraticHamiltonian(np.array([1.0]))
    window = BumpWindow(center=0.0, halfwidth=1.0)
    with pytest.raises(ValueError):
        run_sweep(system, 1.0, 0.3, [], window)
    with pytest.raises(ValueError):
        run_sweep(system, 1.0, 0.3, [0.1], window, psi_halfwidth=0.4)
    with pytest.raises(TypeError):
        run_sweep(object(), 1.0, 0.3, [0.1], window)
    with pytest.warns(UserWarning):
        run_sweep(system, 1.0, 0.3, [0.1, 0.1, 0.05], window)


def test_sweep_rows_do_not_depend_on_thread_count():
    system = QuadraticHamiltonian(np.array([1.0, R2]))
    window = BumpWindow(center=0.0, halfwidth=1.0)
    serial = run_sweep(system, 1.0, 0.3, [0.1, 0.05, 0.025], window, threads=1)
    parallel = run_sweep(system, 1.0, 0.3, [0.1, 0.05, 0.025], window,
                         threads=4)
    for left, right in zip(serial.rows, parallel.rows):
        assert left.h == right.h
        assert left.quantum == right.quantum
        assert left.semiclassical == right.semiclassical
        assert left.abs_err == right.abs_err
        assert left.rel_err == right.rel_err
        assert left.n_eigenvalues == right.n_eigenvalues


def test_report_csv_round_trip(tmp_path):
    system = QuadraticHamiltonian(np.array([1.0, R2]))
    window = BumpWindow(center=0.0, halfwidth=1.0)
    report = run_sweep(system, 1.0, 0.3, [0.1, 0.05], window)
    lines = report_csv_lines(report)
    assert lines[0].startswith("h,quantum_re,quantum_im,semicl_re")
    path = tmp_path / "report.csv"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    rows = load_report_csv(str(path))
    assert len(rows) == len(report.rows)
    for loaded, original in zip(rows, sorted(report.rows, key=lambda r: -r.h)):
        assert loaded.h == original.h
        assert loaded.quantum == original.quantum
        assert loaded.semiclassical == original.semiclassical
        assert loaded.abs_err == original.abs_err
        assert loaded.wall_ms == round(original.wall_ms, 3)


def test_report_csv_rejects_tampered_rows(tmp_path):
    system = QuadraticHamiltonian(np.array([1.0]))
    window = BumpWindow(center=0.0, halfwidth=1.0)
    report = run_sweep(system, 1.0, 0.3, [0.1], window)
    lines = report_csv_lines(report)
    parts = lines[1].split(",")
    parts[5] = repr(float(parts[5]) + 1.0)
    bad = tmp_path / "bad.csv"
    bad.write_text("\n".join([lines[0], ",".join(parts)]) + "\n",
                   encoding="utf-8")
    with pytest.raises(ValueError):
        load_report_csv(str(bad))
    headerless = tmp_path / "headerless.csv"
    headerless.write_text("\n".join(lines[1:]) + "\n", encoding="utf-8")
    with pytest.raises(ValueError):
        load_report_csv(str(headerless))


def test_components_payload_structure():
    system = kinetic_actions(2)
    window = TriangleWindow(center=TWO_PI / R2, halfwidth=1.0)
    report = run_sweep(system, 1.0, 0.3, [0.05, 0.02], window)
    payload = components_payload(report)
    assert len(payload) == 4
    for entry in payload:
        assert entry["label"] == "torus"
        assert entry["dim"] == 2
        assert entry["resonant_modes"] == [1, 2]
        assert entry["phase_quarter_turns"] == 7
        assert abs(entry["period"] - TWO_PI / R2) < 1e-8
        assert abs(abs(entry["action"]) - TWO_PI * R2) < 1e-8
        assert len(entry["integer_vector"]) == 2
        assert len(entry["actions"]) == 2
        assert entry["curvature"] < 0.0
    periods = [entry["period"] for entry in payload]
    assert periods == sorted(periods)
