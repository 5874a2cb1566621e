"""The two sides of the trace formula and the machinery comparing them.

Quantum side: exact eigenvalue enumeration for decoupled oscillators and
the flat-torus lattice, followed by the smoothed spectral density

    G_E(h) = sum_j psi(lambda_j) f((E - lambda_j) / h),

accumulated by compensated summation in a fixed eigenvalue order so the
result is bit-reproducible.  Fourier convention throughout:
f(x) = (1/2pi) integral fhat(t) e^{itx} dt.

Semiclassical side: one contribution per periodic component or torus
inside the support of the time window, assembled from the density module
and the closed-form measures.  The square-root phase of each oscillatory
component is resolved once against the quantum value at the smallest h
in a sweep, frozen, and then judged at the remaining h values; the
calibration point never enters the pass/fail statistics.
"""

from __future__ import annotations

import cmath
import math
import time
import warnings
from dataclasses import dataclass

import numpy as np

from .berrytabor import (
    ActionAngleSystem,
    PeriodicTorus,
    curvature_from_frequencies,
    enumerate_tori,
    torus_amplitude,
    torus_phase_candidates,
)
from .density import (
    DensityMethod,
    DensityResult,
    assemble_component_amplitude,
    density_general,
    density_weyl,
    oscillator_density_closed,
)
from .dynamics import QuadraticHamiltonian, monodromy, resonant_shell_measure
from .errors import (
    CalibrationError,
    IncompleteSpectrumError,
    SpectrumError,
)
from .orbits import (
    ComponentLabel,
    PeriodicComponent,
    enumerate_periods,
    oscillator_component,
)
from .symplectic import invariant_split, shell_refine

DEFAULT_COUNT_CAP = 50_000_000
WEYL_SANITY_FLOOR = 50
WEYL_SANITY_FACTOR = 2.0


def _fsum_complex(values: np.ndarray) -> complex:
    return complex(math.fsum(values.real.tolist()),
                   math.fsum(values.imag.tolist()))


# ---------------------------------------------------------------------------
# Spectral windows


class SpectralWindow:
    """A compactly supported time window fhat with its transform f."""

    center: float
    halfwidth: float

    @property
    def support(self) -> tuple[float, float]:
        return (self.center - self.halfwidth, self.center + self.halfwidth)

    def fhat(self, t):
        raise NotImplementedError

    def f(self, x):
        raise NotImplementedError


@dataclass(frozen=True)
class TriangleWindow(SpectralWindow):
    """Triangle window: fhat(t) = max(0, 1 - |t - center| / halfwidth).

    The transform has the closed form
    f(x) = (halfwidth / 2pi) e^{i center x} sinc^2(halfwidth x / 2).
    """

    center: float
    halfwidth: float

    def __post_init__(self):
        if self.halfwidth <= 0:
            raise ValueError("halfwidth must be positive")

    def fhat(self, t):
        t = np.asarray(t, dtype=float)
        return np.maximum(0.0, 1.0 - np.abs(t - self.center) / self.halfwidth)

    def f(self, x):
        x = np.asarray(x, dtype=float)
        # numpy's sinc is sin(pi u) / (pi u); rescale to sin(v) / v.
        core = np.sinc(self.halfwidth * x / (2.0 * math.pi)) ** 2
        return (self.halfwidth / (2.0 * math.pi)) * np.exp(1j * self.center * x) * core


@dataclass(frozen=True)
class BumpWindow(SpectralWindow):
    """Smooth bump window: exp(1 - 1/(1 - u^2)) on |u| < 1, u scaled.

    The transform has no closed form and is evaluated by Gauss-Legendre
    quadrature over the support with a node count adapted to the largest
    requested oscillation.
    """

    center: float
    halfwidth: float

    def __post_init__(self):
        if self.halfwidth <= 0:
            raise ValueError("halfwidth must be positive")

    def fhat(self, t):
        t = np.asarray(t, dtype=float)
        u = (t - self.center) / self.halfwidth
        out = np.zeros_like(u)
        inside = np.abs(u) < 1.0
        with np.errstate(divide="ignore", over="ignore"):
            out[inside] = np.exp(1.0 - 1.0 / (1.0 - u[inside] ** 2))
        return out

    def f(self, x):
        x = np.asarray(x, dtype=float)
        flat = x.reshape(-1)
        x_max = float(np.max(np.abs(flat))) if flat.size else 0.0
        nodes, weights = _gauss_nodes(self.halfwidth, x_max)
        t = nodes + self.center
        values = self.fhat(t)
        out = np.empty(flat.size, dtype=complex)
        chunk = max(1, 8_388_608 // max(1, nodes.size))
        for start in range(0, flat.size, chunk):
            block = flat[start:start + chunk]
            phases = np.exp(1j * np.outer(block, t))
            out[start:start + chunk] = phases @ (weights * values) / (2.0 * math.pi)
        return out.reshape(x.shape) if x.shape else out[0]


_GAUSS_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gauss_rule(count: int) -> tuple[np.ndarray, np.ndarray]:
    if count not in _GAUSS_CACHE:
        _GAUSS_CACHE[count] = np.polynomial.legendre.leggauss(count)
    return _GAUSS_CACHE[count]


def _gauss_nodes(halfwidth: float, x_max: float):
    oscillation = halfwidth * max(x_max, 1.0)
    count = int(min(4096, max(96, 3 * oscillation + 64)))
    count = 32 * ((count + 31) // 32)
    base_nodes, base_weights = _gauss_rule(count)
    return base_nodes * halfwidth, base_weights * halfwidth


def window_from_quadrature(window: SpectralWindow, x) -> np.ndarray:
    """Evaluate f by direct quadrature of fhat, independent of closed forms.

    The support is split at its midpoint so a kink there (the triangle
    apex) never degrades the rule, and the node count formula differs
    from the one inside BumpWindow.f, so agreement between the two is
    evidence of convergence rather than a shared discretization.
    """
    x = np.asarray(x, dtype=float)
    flat = x.reshape(-1)
    lo, hi = window.support
    x_max = float(np.max(np.abs(flat))) if flat.size else 0.0
    out = np.zeros(flat.size, dtype=complex)
    for a, b in ((lo, 0.5 * (lo + hi)), (0.5 * (lo + hi), hi)):
        span = 0.5 * (b - a)
        oscillation = span * max(x_max, 1.0)
        count = int(min(4096, max(128, 4.0 * oscillation + 96)))
        count = 32 * ((count + 31) // 32)
        base_nodes, base_weights = _gauss_rule(count)
        t = base_nodes * span + 0.5 * (a + b)
        values = window.fhat(t)
        phases = np.exp(1j * np.outer(flat, t))
        out += phases @ ((base_weights * span) * values) / (2.0 * math.pi)
    return out.reshape(x.shape)


def validate_window_pair(window: SpectralWindow, n_points: int = 20,
                         tol: float = 1e-8) -> float:
    """Check f against quadrature of fhat at sample points; returns max error."""
    x = np.linspace(-25.0, 25.0, n_points)
    direct = np.asarray(window.f(x), dtype=complex)
    quad = window_from_quadrature(window, x)
    err = float(np.max(np.abs(direct - quad)))
    if err > tol:
        raise ValueError(
            f"window transform disagrees with quadrature by {err:.3e}")
    return err


@dataclass(frozen=True)
class EnergyCutoff:
    """Smooth compactly supported energy cutoff with value 1 at center.

    With plateau_halfwidth zero this is the standard bump
    exp(1 - 1/(1 - u^2)); a positive plateau makes the cutoff identically
    one on the inner window, as the convolution identity check requires.
    """

    center: float
    halfwidth: float
    plateau_halfwidth: float = 0.0

    def __post_init__(self):
        if self.halfwidth <= 0:
            raise ValueError("halfwidth must be positive")
        if not 0.0 <= self.plateau_halfwidth < self.halfwidth:
            raise ValueError("plateau must be a proper subinterval")

    @property
    def value_at_center(self) -> float:
        return 1.0

    @property
    def support(self) -> tuple[float, float]:
        return (self.center - self.halfwidth, self.center + self.halfwidth)

    def value(self, energies):
        energies = np.asarray(energies, dtype=float)
        u = np.abs(energies - self.center) / self.halfwidth
        out = np.zeros_like(u)
        if self.plateau_halfwidth == 0.0:
            inside = u < 1.0
            with np.errstate(divide="ignore", over="ignore"):
                out[inside] = np.exp(1.0 - 1.0 / (1.0 - u[inside] ** 2))
            return out
        inner = self.plateau_halfwidth / self.halfwidth
        out[u <= inner] = 1.0
        ramp = (u > inner) & (u < 1.0)
        s = (1.0 - u[ramp]) / (1.0 - inner)
        out[ramp] = _smooth_step(s)
        return out


def _smooth_step(s: np.ndarray) -> np.ndarray:
    def phi(v):
        out = np.zeros_like(v)
        positive = v > 0
        with np.errstate(divide="ignore", over="ignore"):
            out[positive] = np.exp(-1.0 / v[positive])
        return out

    rising = phi(s)
    return rising / (rising + phi(1.0 - s))


# ---------------------------------------------------------------------------
# Spectra


@dataclass(frozen=True)
class Spectrum:
    """Sorted eigenvalues of a model operator inside an energy window."""

    values: np.ndarray
    source: str
    h: float
    window: tuple[float, float]

    @property
    def count(self) -> int:
        return int(self.values.size)


def _append_level(partial: np.ndarray, offsets_max: np.ndarray,
                  base: float, spacing: float) -> np.ndarray:
    """All sums partial[i] + base + spacing * k for 0 <= k <= offsets_max[i]."""
    counts = offsets_max.astype(np.int64) + 1
    counts = np.maximum(counts, 0)
    total = int(np.sum(counts))
    if total == 0:
        return np.empty(0)
    repeated = np.repeat(partial + base, counts)
    starts = np.repeat(np.cumsum(counts) - counts, counts)
    ks = np.arange(total) - starts
    return repeated + spacing * ks


def oscillator_spectrum(frequencies, h: float, window: tuple[float, float],
                        count_cap: int = DEFAULT_COUNT_CAP,
                        bound_pad: int = 0) -> Spectrum:
    """Exact oscillator eigenvalues h sum w_j (k_j + 1/2) inside a window.

    Levels are enumerated recursively with pruning by the remaining
    zero-point energy, so completeness inside the window is structural:
    every admissible lattice point is visited.  ``bound_pad`` extends
    each per-mode bound, which must never add an in-window eigenvalue;
    the property test relies on that.
    """
    w = np.asarray(frequencies, dtype=float).reshape(-1)
    lo, hi = float(window[0]), float(window[1])
    if not lo < hi:
        raise ValueError("window must be a nonempty interval")
    ground = 0.5 * h * float(np.sum(w))
    if hi < ground:
        return Spectrum(values=np.empty(0), source="oscillator", h=h,
                        window=(lo, hi))

    estimate = _oscillator_count_estimate(w, h, lo, hi)
    if estimate > count_cap:
        raise SpectrumError(
            f"estimated {estimate:.3e} eigenvalues exceeds cap {count_cap:.1e}")

    partial = np.zeros(1)
    remaining_ground = ground
    for wj in w:
        remaining_ground -= 0.5 * h * wj
        budget = hi - remaining_ground - partial - 0.5 * h * wj
        offsets_max = np.floor(budget / (h * wj) + 1e-12) + bound_pad
        partial = _append_level(partial, offsets_max, 0.5 * h * wj, h * wj)
        if partial.size > count_cap:
            raise SpectrumError("eigenvalue enumeration exceeded the cap")

    values = np.sort(partial[(partial >= lo) & (partial <= hi)])
    _weyl_sanity(values.size, estimate, "oscillator")
    return Spectrum(values=values, source="oscillator", h=h, window=(lo, hi))


def _oscillator_count_estimate(w: np.ndarray, h: float,
                               lo: float, hi: float) -> float:
    n = w.size
    def volume(e):
        if e <= 0:
            return 0.0
        return (2.0 * math.pi * e) ** n / (math.factorial(n) * float(np.prod(w)))
    return (volume(hi) - volume(lo)) / (2.0 * math.pi * h) ** n


def torus_spectrum(n: int, h: float, window: tuple[float, float],
                   offsets=None,
                   count_cap: int = DEFAULT_COUNT_CAP,
                   bound_pad: int = 0) -> Spectrum:
    """Flat-torus lattice eigenvalues |h (k + mu/4)|^2 / 2 inside a window.

    ``offsets`` holds the per-axis quarter-shift integers mu_j (default
    zero).  Enumeration is recursive over axes with pruning by the
    remaining budget, so in-window completeness is structural.
    """
    lo, hi = float(window[0]), float(window[1])
    if not lo < hi:
        raise ValueError("window must be a nonempty interval")
    mu = np.zeros(n) if offsets is None else np.asarray(offsets, dtype=float).reshape(n)
    if hi < 0:
        return Spectrum(values=np.empty(0), source="torus", h=h, window=(lo, hi))

    estimate = _torus_count_estimate(n, h, lo, hi)
    if estimate > count_cap:
        raise SpectrumError(
            f"estimated {estimate:.3e} lattice points exceeds cap {count_cap:.1e}")

    partial = np.zeros(1)
    for axis in range(n):
        shift = mu[axis] / 4.0
        budget = hi - partial
        reach = np.sqrt(np.maximum(0.0, 2.0 * budget)) / h
        k_lo = np.ceil(-shift - reach - 1e-12).astype(np.int64) - bound_pad
        k_hi = np.floor(-shift + reach + 1e-12).astype(np.int64) + bound_pad
        counts = np.maximum(k_hi - k_lo + 1, 0)
        total = int(np.sum(counts))
        if total == 0:
            partial = np.empty(0)
            break
        if total > count_cap:
            raise SpectrumError("lattice enumeration exceeded the cap")
        repeated = np.repeat(partial, counts)
        base_k = np.repeat(k_lo, counts)
        starts = np.repeat(np.cumsum(counts) - counts, counts)
        ks = base_k + (np.arange(total) - starts)
        partial = repeated + 0.5 * (h * (ks + shift)) ** 2

    values = np.sort(partial[(partial >= lo) & (partial <= hi)])
    _weyl_sanity(values.size, estimate, "torus")
    return Spectrum(values=values, source="torus", h=h, window=(lo, hi))


def _torus_count_estimate(n: int, h: float, lo: float, hi: float) -> float:
    def ball(e):
        if e <= 0:
            return 0.0
        radius = math.sqrt(2.0 * e)
        return math.pi ** (n / 2.0) / math.gamma(n / 2.0 + 1.0) * radius ** n
    return (ball(hi) - ball(lo)) / h ** n


def _weyl_sanity(count: int, estimate: float, label: str) -> None:
    if estimate < WEYL_SANITY_FLOOR:
        return
    if not estimate / WEYL_SANITY_FACTOR <= count <= estimate * WEYL_SANITY_FACTOR:
        raise SpectrumError(
            f"{label} count {count} is outside a factor {WEYL_SANITY_FACTOR} "
            f"of the volume estimate {estimate:.1f}")


# ---------------------------------------------------------------------------
# Quantum side


def quantum_density(spectrum: Spectrum, cutoff: EnergyCutoff,
                    window: SpectralWindow, energy: float, h: float) -> complex:
    """The smoothed spectral density G_E(h) over an enumerated spectrum.

    The spectrum must cover the cutoff's support; terms are accumulated
    with compensated summation in the sorted eigenvalue order.
    """
    lo, hi = cutoff.support
    slack = 1e-12 * max(1.0, abs(hi))
    if spectrum.window[0] > lo + slack or spectrum.window[1] < hi - slack:
        raise IncompleteSpectrumError(
            f"spectrum window {spectrum.window} does not cover cutoff "
            f"support {(lo, hi)}")
    values = spectrum.values
    if values.size == 0:
        return 0.0 + 0.0j
    weights = cutoff.value(values)
    terms = weights * np.asarray(window.f((energy - values) / h), dtype=complex)
    return _fsum_complex(terms)


def convolution_identity_check(spectrum: Spectrum, cutoff: EnergyCutoff,
                               window: SpectralWindow,
                               energy_grid: np.ndarray, h: float) -> float:
    """Max deviation between (1/h) G_E(h) and the comb convolution.

    The left side goes through :func:`quantum_density` (closed-form
    transform); the right side convolves the cutoff eigenvalue comb with
    the h-rescaled window evaluated by independent quadrature of fhat.
    The cutoff must be identically one on the whole grid.
    """
    grid = np.asarray(energy_grid, dtype=float)
    reach = float(np.max(np.abs(grid - cutoff.center)))
    if cutoff.plateau_halfwidth < reach:
        raise ValueError("cutoff is not identically one on the energy grid")

    values = spectrum.values
    weights = cutoff.value(values)
    worst = 0.0
    for e in grid:
        lhs = quantum_density(spectrum, cutoff, window, float(e), h) / h
        kernel = window_from_quadrature(window, (e - values) / h) / h
        rhs = _fsum_complex(weights * kernel)
        worst = max(worst, abs(lhs - rhs))
    return worst


# ---------------------------------------------------------------------------
# Semiclassical side


@dataclass
class SweepComponent:
    """One periodic component plus everything needed for its amplitude."""

    kind: str
    component: PeriodicComponent
    density: DensityResult
    measure: float
    phase_candidates: tuple[int, ...]
    resolved_phase: int | None = None
    torus: PeriodicTorus | None = None
    system: object = None
    curvature: float | None = None

    def sort_key(self):
        if self.torus is not None:
            return (self.component.period, tuple(self.torus.integer_vector))
        return (self.component.period, ())

    def base_amplitude(self, window: SpectralWindow, psi_value: float,
                       h: float) -> complex:
        """Amplitude with the quarter-turn factor left out."""
        fhat_value = complex(float(window.fhat(self.component.period)))
        if self.kind == "torus":
            return torus_amplitude(
                self.torus, self.system, fhat_value, h,
                beta=self.phase_candidates[0], psi_value=psi_value,
                curvature=self.curvature,
            ) / _quarter_phase(self.phase_candidates[0])
        return assemble_component_amplitude(
            self.component, self.density, self.measure, fhat_value,
            psi_value, h, phase_override=0)

    def amplitude(self, window: SpectralWindow, psi_value: float,
                  h: float) -> complex:
        if self.resolved_phase is None:
            raise CalibrationError(
                f"component at period {self.component.period!r} is uncalibrated")
        return (self.base_amplitude(window, psi_value, h)
                * _quarter_phase(self.resolved_phase))


def _quarter_phase(m: int) -> complex:
    return cmath.exp(1j * math.pi * (m % 8) / 4.0)


def oscillator_components(system: QuadraticHamiltonian, energy: float,
                          window: SpectralWindow,
                          rank_tol: float = 1e-8) -> list[SweepComponent]:
    """Periodic components of an oscillator inside the window's support.

    Each component's density is evaluated by the general formula and
    cross-checked against the oscillator closed form; a disagreement
    beyond rounding is a genuine engine fault and raises.
    """
    lo, hi = window.support
    period_set = enumerate_periods(system.frequencies, (lo, hi))
    out: list[SweepComponent] = []
    for entry in period_set.entries:
        component = oscillator_component(system, entry.period, energy)
        z = component.representative
        grad = system.gradient(z)
        if component.label is ComponentLabel.WEYL_ZERO:
            density = density_weyl(grad)
        else:
            mono = monodromy(system, z, entry.period)
            split = shell_refine(invariant_split(mono, rank_tol), grad)
            density = density_general(split, grad)
            closed = oscillator_density_closed(system, entry.period, z)
            gap = abs(density.d_squared - closed.d_squared)
            if gap > 1e-9 * max(1.0, abs(closed.d_squared)):
                raise AssertionError(
                    f"density engines disagree at period {entry.period!r}: "
                    f"{density.d_squared!r} vs {closed.d_squared!r}")
        measure = resonant_shell_measure(
            system.frequencies,
            component.resonant if component.resonant else range(system.n),
            energy)
        if density.phase_quarter_turns is not None:
            candidates = (density.phase_quarter_turns,)
            resolved = density.phase_quarter_turns
        else:
            candidates = density.phase_candidates()
            resolved = None
        out.append(SweepComponent(
            kind="oscillator", component=component, density=density,
            measure=measure, phase_candidates=candidates,
            resolved_phase=resolved))
    out.sort(key=SweepComponent.sort_key)
    return out


def torus_components(system: ActionAngleSystem, energy: float,
                     window: SpectralWindow,
                     lattice_bound: float) -> list[SweepComponent]:
    """Periodic-torus contributions inside the window's support."""
    lo, hi = window.support
    enumeration = enumerate_tori(system, energy, (lo, hi), lattice_bound)
    out: list[SweepComponent] = []
    for torus in enumeration.tori:
        curvature = curvature_from_frequencies(system, torus.actions)
        w = system.frequencies(torus.actions)
        action = 2.0 * math.pi * float(np.dot(torus.integer_vector, torus.actions))
        component = PeriodicComponent(
            period=torus.period,
            representative=np.concatenate([np.zeros(system.n), torus.actions]),
            dim=system.n,
            resonant_count=system.n,
            action=action,
            label=ComponentLabel.TORUS,
            grad_norm=float(np.linalg.norm(w)),
            resonant=frozenset(range(system.n)),
        )
        density = DensityResult(
            d_squared=_torus_density_squared(system, torus, curvature),
            method=DensityMethod.TORUS)
        out.append(SweepComponent(
            kind="torus", component=component, density=density,
            measure=(2.0 * math.pi) ** system.n,
            phase_candidates=torus_phase_candidates(system.n, curvature),
            torus=torus, system=system, curvature=curvature))
    out.sort(key=SweepComponent.sort_key)
    return out


def _torus_density_squared(system: ActionAngleSystem, torus: PeriodicTorus,
                           curvature: float) -> complex:
    """Squared density of a flat-model torus point, for reporting."""
    n = system.n
    w = system.frequencies(torus.actions)
    w_sq = float(np.dot(w, w))
    m_norm = torus.lattice_norm
    i_power = (1j) ** (-(n + 1) % 4)
    return ((2.0 * math.pi) ** (-(n - 1)) * ((-1.0) ** n) * i_power
            / (w_sq * curvature * m_norm ** (n - 1)))


def semiclassical_density(components: list[SweepComponent],
                          window: SpectralWindow, psi_value: float,
                          h: float) -> complex:
    """Sum of the calibrated component amplitudes, in deterministic order."""
    total = 0.0 + 0.0j
    for part in sorted(components, key=SweepComponent.sort_key):
        total += part.amplitude(window, psi_value, h)
    return total


def calibrate_phases(components: list[SweepComponent],
                     quantum_value: complex, window: SpectralWindow,
                     psi_value: float, h: float,
                     max_combinations: int = 64) -> None:
    """Resolve unresolved quarter-turn phases against one quantum value.

    Orbit components calibrate one phase per component family.  Torus
    components sharing a candidate tuple calibrate jointly: the residual
    sign in their phase is a single global integer, so one choice covers
    the whole lattice sum.  Brute force over the remaining product,
    smallest combination winning ties, so repeated runs freeze identical
    phases.
    """
    unresolved = [part for part in sorted(components, key=SweepComponent.sort_key)
                  if part.resolved_phase is None]
    if not unresolved:
        return

    groups: dict[tuple, list[SweepComponent]] = {}
    for part in unresolved:
        if part.torus is not None:
            key = ("torus", part.phase_candidates)
        else:
            key = ("orbit", id(part))
        groups.setdefault(key, []).append(part)
    group_list = sorted(groups.items(), key=lambda kv: SweepComponent.sort_key(kv[1][0]))

    total = 1
    for _, members in group_list:
        total *= len(members[0].phase_candidates)
    if total > max_combinations:
        raise CalibrationError(
            f"{total} phase combinations exceed the calibration budget")

    fixed = sum((part.amplitude(window, psi_value, h)
                 for part in components if part.resolved_phase is not None),
                start=0.0 + 0.0j)
    bases = [_fsum_complex(np.array([part.base_amplitude(window, psi_value, h)
                                     for part in members]))
             for _, members in group_list]

    best: tuple[float, tuple[int, ...]] | None = None
    def explore(index: int, running: complex, chosen: tuple[int, ...]):
        nonlocal best
        if index == len(group_list):
            score = abs(quantum_value - running)
            key = (score, chosen)
            if best is None or key < best:
                best = key
            return
        for m in group_list[index][1][0].phase_candidates:
            explore(index + 1,
                    running + bases[index] * _quarter_phase(m),
                    chosen + (m,))

    explore(0, fixed, ())
    assert best is not None
    for (_, members), m in zip(group_list, best[1]):
        for part in members:
            part.resolved_phase = m


# ---------------------------------------------------------------------------
# Sweeps


@dataclass(frozen=True)
class SweepRow:
    """One h value of a sweep: both sides, errors, and bookkeeping."""

    h: float
    quantum: complex
    semiclassical: complex
    abs_err: float
    rel_err: float
    n_eigenvalues: int
    wall_ms: float
    is_calibration: bool


@dataclass
class SweepReport:
    """Full result of a sweep, ready for serialization."""

    rows: list[SweepRow]
    components: list[SweepComponent]
    calibration_h: float | None
    system_label: str
    energy: float

    def scored_rows(self) -> list[SweepRow]:
        return [row for row in self.rows if not row.is_calibration]


def run_sweep(system, energy: float, epsilon: float, hs, window: SpectralWindow,
              lattice_bound: float = 4.0, threads: int = 1,
              count_cap: int = DEFAULT_COUNT_CAP,
              torus_offsets=None, psi_halfwidth: float | None = None,
              psi_plateau: float = 0.0) -> SweepReport:
    """Compare quantum and semiclassical densities over a list of h.

    ``system`` is either a QuadraticHamiltonian or an ActionAngleSystem
    (the latter compared against the flat-torus lattice spectrum).  The
    smallest h calibrates any unresolved phases and is excluded from the
    scored rows.  Rows are computed in parallel when ``threads`` exceeds
    one and collected in a fixed order, so the report does not depend on
    the degree of parallelism.  The cutoff halfwidth defaults to the
    shell halfwidth epsilon; a smaller ``psi_halfwidth`` narrows only
    the cutoff, keeping the enumerated shell at epsilon.
    """
    requested = [float(h) for h in hs]
    hs = sorted(set(requested), reverse=True)
    if not hs:
        raise ValueError("need at least one h value")
    if len(hs) < len(requested):
        warnings.warn("duplicate h values were deduplicated", stacklevel=2)
    if psi_halfwidth is None:
        psi_halfwidth = epsilon
    if psi_halfwidth > epsilon:
        raise ValueError("cutoff halfwidth exceeds the enumerated shell")
    cutoff = EnergyCutoff(center=energy, halfwidth=psi_halfwidth,
                          plateau_halfwidth=psi_plateau)
    shell_window = (energy - epsilon, energy + epsilon)
    psi_value = cutoff.value_at_center

    if isinstance(system, QuadraticHamiltonian):
        components = oscillator_components(system, energy, window)
        label = "oscillator(" + ",".join(repr(float(w)) for w in system.frequencies) + ")"

        def spectrum_for(h):
            return oscillator_spectrum(system.frequencies, h, shell_window,
                                       count_cap=count_cap)
    elif isinstance(system, ActionAngleSystem):
        components = torus_components(system, energy, window, lattice_bound)
        label = f"torus-lattice(n={system.n})"

        def spectrum_for(h):
            return torus_spectrum(system.n, h, shell_window,
                                  offsets=torus_offsets, count_cap=count_cap)
    else:
        raise TypeError("system must be quadratic or action-angle")

    def quantum_row(h):
        start = time.perf_counter()
        spectrum = spectrum_for(h)
        value = quantum_density(spectrum, cutoff, window, energy, h)
        wall = (time.perf_counter() - start) * 1e3
        return value, spectrum.count, wall

    if threads > 1 and len(hs) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            raw = list(pool.map(quantum_row, hs))
    else:
        raw = [quantum_row(h) for h in hs]

    needs_calibration = any(part.resolved_phase is None for part in components)
    calibration_h = hs[-1] if needs_calibration and len(hs) > 0 else None
    if needs_calibration:
        calibrate_phases(components, raw[-1][0], window, psi_value, hs[-1])

    rows = []
    for h, (quantum_value, count, wall) in zip(hs, raw):
        semi = semiclassical_density(components, window, psi_value, h)
        abs_err = abs(quantum_value - semi)
        rel_err = abs_err / abs(quantum_value) if quantum_value != 0 else math.inf
        rows.append(SweepRow(
            h=h, quantum=quantum_value, semiclassical=semi,
            abs_err=abs_err, rel_err=rel_err, n_eigenvalues=count,
            wall_ms=wall, is_calibration=(h == calibration_h)))
    return SweepReport(rows=rows, components=components,
                       calibration_h=calibration_h, system_label=label,
                       energy=energy)


REPORT_COLUMNS = ("h", "quantum_re", "quantum_im", "semicl_re", "semicl_im",
                  "abs_err", "rel_err", "n_eigenvalues", "wall_ms")


def report_csv_lines(report: SweepReport) -> list[str]:
    """Render the report as CSV lines, shortest round-trip floats.

    Rows are ordered by decreasing h.  Every float is written with
    repr(), which round-trips exactly, so rerunning a sweep reproduces
    the file byte for byte apart from the wall-clock column.
    """
    lines = [",".join(REPORT_COLUMNS)]
    for row in sorted(report.rows, key=lambda r: -r.h):
        lines.append(",".join([
            repr(row.h),
            repr(row.quantum.real), repr(row.quantum.imag),
            repr(row.semiclassical.real), repr(row.semiclassical.imag),
            repr(row.abs_err), repr(row.rel_err),
            str(row.n_eigenvalues),
            repr(round(row.wall_ms, 3)),
        ]))
    return lines


def load_report_csv(path: str) -> list[SweepRow]:
    """Parse a report back, recomputing the error columns as a check.

    The stored abs_err and rel_err must round-trip exactly against
    values recomputed from the stored complex entries; a mismatch means
    the file was edited or produced by a different engine.
    """
    with open(path, encoding="utf-8") as handle:
        lines = [line.rstrip("\n") for line in handle if line.strip()]
    if not lines or lines[0] != ",".join(REPORT_COLUMNS):
        raise ValueError("unrecognized report header")
    rows = []
    for line in lines[1:]:
        parts = line.split(",")
        if len(parts) != len(REPORT_COLUMNS):
            raise ValueError(f"malformed row: {line!r}")
        h = float(parts[0])
        quantum = complex(float(parts[1]), float(parts[2]))
        semicl = complex(float(parts[3]), float(parts[4]))
        abs_err = float(parts[5])
        rel_err = float(parts[6])
        expected_abs = abs(quantum - semicl)
        expected_rel = (expected_abs / abs(quantum) if quantum != 0
                        else math.inf)
        if repr(expected_abs) != parts[5] or repr(expected_rel) != parts[6]:
            raise ValueError(
                f"error columns at h={h!r} do not recompute from the "
                f"stored values")
        rows.append(SweepRow(
            h=h, quantum=quantum, semiclassical=semicl, abs_err=abs_err,
            rel_err=rel_err, n_eigenvalues=int(parts[7]),
            wall_ms=float(parts[8]), is_calibration=False))
    return rows


def components_payload(report: SweepReport) -> list[dict]:
    """Per-component breakdown for the JSON sidecar."""
    out = []
    for part in sorted(report.components, key=SweepComponent.sort_key):
        entry = {
            "period": float(part.component.period),
            "dim": int(part.component.dim),
            "action": float(part.component.action),
            "d_squared_re": float(part.density.d_squared.real),
            "d_squared_im": float(part.density.d_squared.imag),
            "measure": float(part.measure),
            "phase_quarter_turns": part.resolved_phase,
            "label": part.component.label.value,
            "resonant_modes": sorted(i + 1 for i in part.component.resonant),
        }
        if part.torus is not None:
            entry["integer_vector"] = [int(c) for c in part.torus.integer_vector]
            entry["actions"] = [float(a) for a in part.torus.actions]
            entry["curvature"] = float(part.curvature)
        out.append(entry)
    return out
