"""Duistermaat-Guillemin densities and orbit-sum amplitudes.

The density d(T, z) attached to a periodic point weights its component's
contribution to the oscillatory part of the smoothed spectral density.
Its square has an explicit linear-algebra expression; three evaluation
routes of decreasing generality are provided, together with closed forms
for decoupled oscillators, and the tests hold all routes against each
other on a common corpus.

The square root leaves an eighth-root-of-unity ambiguity, recorded as an
optional integer number of quarter turns; production sweeps resolve it
once against exact quantum data and freeze it (see harness).  For
components on which the return map is the identity, the phase can be
cross-checked against continuous branch tracking of the metaplectic
half-determinant along the flow, also implemented here.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import CalibrationError, RankInstabilityError
from .orbits import PeriodicComponent, resonant_indices
from .symplectic import (
    EigenspaceSplit,
    restricted_det,
    restricted_form_det,
    shell_refine,
    symplectic_j,
)

# e^{i pi m / 4} for m = 0..7, kept as exact unit complex values.
QUARTER_PHASES = tuple(cmath.exp(1j * math.pi * m / 4.0) for m in range(8))
_I_POWERS = (1 + 0j, 1j, -1 + 0j, -1j)


class DensityMethod(enum.Enum):
    GENERAL = "general"
    SIMPLE = "simple"
    NONDEGENERATE = "nondegenerate"
    WEYL_ZERO = "weyl-zero"
    PERIODIC_FLOW = "periodic-flow"
    OSCILLATOR_CLOSED = "oscillator-closed"
    TORUS = "torus"


@dataclass(frozen=True)
class DensityResult:
    """Squared density with its modulus and optional resolved phase.

    ``phase_quarter_turns`` is None until a calibration (or an exact
    argument) fixes which eighth root of unity the square root carries.
    """

    d_squared: complex
    method: DensityMethod
    phase_quarter_turns: int | None = None

    @property
    def modulus(self) -> float:
        return math.sqrt(abs(self.d_squared))

    def phase_candidates(self, tol: float = 1e-6) -> tuple[int, int]:
        """The two quarter-turn integers compatible with d_squared.

        The squared phase must itself be a fourth root of unity; if it is
        not within ``tol`` of one, the density does not have quarter-turn
        structure and this raises.
        """
        u = self.d_squared / abs(self.d_squared)
        half_turns = cmath.phase(u) / (math.pi / 2.0)
        nearest = round(half_turns)
        if abs(half_turns - nearest) > tol:
            raise CalibrationError(
                f"squared density phase {u!r} is not a quarter-turn square")
        m = nearest % 4
        return (m, m + 4)


def _checked_refined(split: EigenspaceSplit, grad_h: np.ndarray) -> EigenspaceSplit:
    if split.kernel_in_shell is None:
        return shell_refine(split, grad_h)
    return split


def _drift_transversal(split: EigenspaceSplit, grad_h: np.ndarray) -> None:
    from .orbits import _drift_in_image

    if _drift_in_image(split.monodromy, grad_h, split.rank_tol):
        raise ValueError(
            "J grad H lies in (M - I) of the shell tangent; the density "
            "formula's transversality hypothesis fails at this point")


def density_general(split: EigenspaceSplit, grad_h: np.ndarray,
                    rank_tol: float | None = None) -> DensityResult:
    """General squared density at a periodic point.

    Requires the second kernel power to saturate E1 and the drift
    direction J grad H to be transverse to (M - I) of the shell tangent;
    both are checked.  With k the shell-kernel dimension, the value is

        (-1)^n i^{-(k+1)} det(w0 on E1)
        / [det(M - I on V1) * |P_E1 grad H|^2 * det(P J (M - I) on E5)]

    where E5 is the residual shell subspace and P the orthogonal
    projection onto it.
    """
    from .orbits import kernel_square_saturates

    rank_tol = split.rank_tol if rank_tol is None else rank_tol
    if not kernel_square_saturates(split):
        raise ValueError("generalized unit eigenspace exceeds the second "
                         "kernel power; general formula does not apply")
    _drift_transversal(split, grad_h)
    refined = _checked_refined(split, grad_h)

    monodromy = refined.monodromy
    matrix = monodromy.matrix
    n = monodromy.n
    shifted = matrix - np.eye(2 * n)

    k = refined.k
    form_det = restricted_form_det(refined.e1)
    v1_det = restricted_det(shifted, refined.v1, rank_tol)

    grad = np.asarray(grad_h, dtype=float).reshape(-1)
    e1 = refined.e1
    projected = e1 @ (e1.T @ grad) if e1.shape[1] else np.zeros_like(grad)
    grad_sq = float(np.dot(projected, projected))
    if grad_sq <= rank_tol:
        raise ValueError("projected gradient vanishes on E1")

    residual = refined.residual_shell
    if residual is None or residual.shape[1] == 0:
        twisted_det = 1.0
    else:
        j = symplectic_j(n)
        block = residual.T @ (j @ shifted @ residual)
        twisted_det = float(np.linalg.det(block))
        if abs(twisted_det) < rank_tol:
            raise RankInstabilityError(
                "twisted determinant on the residual shell is numerically zero")

    numerator = ((-1.0) ** n) * _I_POWERS[(-(k + 1)) % 4] * form_det
    value = numerator / (v1_det * grad_sq * twisted_det)
    return DensityResult(d_squared=complex(value), method=DensityMethod.GENERAL)


def density_simple(split: EigenspaceSplit, grad_h: np.ndarray,
                   rank_tol: float | None = None) -> DensityResult:
    """Squared density when the shell kernel needs no residual correction.

    Applies when E1 meets the shell tangent exactly in the kernel of
    (M - I), which makes the residual space trivial; the formula drops to

        (-1)^{n + dim E1 / 2} det(w0 on E1)
        / [det(M - I on V1) * |P_E1 grad H|^2].
    """
    rank_tol = split.rank_tol if rank_tol is None else rank_tol
    refined = _checked_refined(split, grad_h)
    if refined.residual_shell is None or refined.residual_shell.shape[1] != 0:
        raise ValueError("residual shell subspace is nontrivial; "
                         "use the general formula")
    _drift_transversal(refined, grad_h)

    monodromy = refined.monodromy
    matrix = monodromy.matrix
    n = monodromy.n
    shifted = matrix - np.eye(2 * n)

    form_det = restricted_form_det(refined.e1)
    v1_det = restricted_det(shifted, refined.v1, rank_tol)
    grad = np.asarray(grad_h, dtype=float).reshape(-1)
    e1 = refined.e1
    projected = e1 @ (e1.T @ grad) if e1.shape[1] else np.zeros_like(grad)
    grad_sq = float(np.dot(projected, projected))
    if grad_sq <= rank_tol:
        raise ValueError("projected gradient vanishes on E1")

    sign = (-1.0) ** (n + refined.dim_e1 // 2)
    value = sign * form_det / (v1_det * grad_sq)
    return DensityResult(d_squared=complex(value), method=DensityMethod.SIMPLE)


def density_nondegenerate(split: EigenspaceSplit, grad_h: np.ndarray,
                          rank_tol: float | None = None) -> DensityResult:
    """Squared density of an isolated non-degenerate orbit.

    dim E1 must equal 2; the value is (-1)^{n+1} over the reduced return
    determinant times the squared gradient norm.
    """
    rank_tol = split.rank_tol if rank_tol is None else rank_tol
    if split.dim_e1 != 2:
        raise ValueError("orbit is not non-degenerate: dim E1 != 2")
    monodromy = split.monodromy
    n = monodromy.n
    shifted = monodromy.matrix - np.eye(2 * n)
    v1_det = restricted_det(shifted, split.v1, rank_tol)
    grad = np.asarray(grad_h, dtype=float).reshape(-1)
    grad_sq = float(np.dot(grad, grad))
    value = ((-1.0) ** (n + 1)) / (v1_det * grad_sq)
    return DensityResult(d_squared=complex(value),
                         method=DensityMethod.NONDEGENERATE)


def density_weyl(grad_h: np.ndarray) -> DensityResult:
    """Squared density of the zero-period component: 1 / |grad H|^2.

    The sign of the square root is fixed to be positive by the leading
    Weyl asymptotics, so the quarter-turn phase is resolved to zero.
    """
    grad = np.asarray(grad_h, dtype=float).reshape(-1)
    grad_sq = float(np.dot(grad, grad))
    if grad_sq == 0.0:
        raise ValueError("gradient vanishes; point is critical")
    return DensityResult(d_squared=complex(1.0 / grad_sq),
                         method=DensityMethod.WEYL_ZERO,
                         phase_quarter_turns=0)


def density_periodic_flow(split: EigenspaceSplit,
                          grad_h: np.ndarray) -> DensityResult:
    """Squared density when the return map fixes the whole shell tangent.

    Happens exactly when every shell point is periodic with the same
    period (an isochronous flow); the value degenerates to 1 / |grad
    H|^2, with the quarter-turn phase left to calibration or to branch
    tracking of the flow.
    """
    refined = _checked_refined(split, grad_h)
    n = refined.monodromy.n
    if refined.k != 2 * n - 1:
        raise ValueError("return map moves the shell tangent; "
                         "periodic-flow reduction does not apply")
    grad = np.asarray(grad_h, dtype=float).reshape(-1)
    grad_sq = float(np.dot(grad, grad))
    if grad_sq == 0.0:
        raise ValueError("gradient vanishes; point is critical")
    return DensityResult(d_squared=complex(1.0 / grad_sq),
                         method=DensityMethod.PERIODIC_FLOW)


def oscillator_density_closed(system, period: float, z: np.ndarray,
                              membership_tol: float = 1e-9) -> DensityResult:
    """Closed-form squared density for a decoupled oscillator.

    With R resonant modes at the period and the remaining mode angles
    theta_j = w_j T, the value is

        (-1)^{n + R} / (|grad H(z)|^2 * prod_j 2 (1 - cos theta_j)).
    """
    w = system.frequencies
    n = system.n
    if abs(period) <= membership_tol:
        resonant = set(range(n))
    else:
        resonant = resonant_indices(w, period, membership_tol)
        if not resonant:
            raise ValueError(f"{period!r} is not a period")
    r = len(resonant)
    grad = system.gradient(z)
    grad_sq = float(np.dot(grad, grad))
    if grad_sq == 0.0:
        raise ValueError("gradient vanishes; point is critical")
    product = 1.0
    for j in range(n):
        if j not in resonant:
            product *= 2.0 * (1.0 - math.cos(period * w[j]))
    value = ((-1.0) ** (n + r)) / (grad_sq * product)
    return DensityResult(d_squared=complex(value),
                         method=DensityMethod.OSCILLATOR_CLOSED)


def reduced_poincare_det(split: EigenspaceSplit,
                         rank_tol: float | None = None) -> float:
    """|det(reduced return map - identity)| on the complement V1."""
    rank_tol = split.rank_tol if rank_tol is None else rank_tol
    monodromy = split.monodromy
    shifted = monodromy.matrix - np.eye(2 * monodromy.n)
    return abs(restricted_det(shifted, split.v1, rank_tol))


@dataclass(frozen=True)
class BranchTrack:
    """Continuously tracked argument of the metaplectic half-determinant.

    ``arguments`` is the unwrapped argument of the propagator-side
    half-determinant along the path of monodromy matrices (blocks read
    in momentum-first order, which winds clockwise for an oscillator);
    the final entry determines the accumulated square-root phase,
    exp(i * arguments[-1] / 2).
    """

    times: np.ndarray
    arguments: np.ndarray
    min_modulus: float

    @property
    def total_argument(self) -> float:
        return float(self.arguments[-1])

    @property
    def winding(self) -> int:
        return round(self.total_argument / (2.0 * math.pi))

    @property
    def half_power_phase(self) -> complex:
        return cmath.exp(0.5j * self.total_argument)

    def phase_quarter_turns(self, tol: float = 1e-8) -> int:
        """Quarter-turn integer of the half-power phase, when exact.

        Only meaningful when the endpoint argument is a multiple of
        pi / 2, as happens when the endpoint matrix is the identity.
        """
        m = 2.0 * self.total_argument / math.pi
        nearest = round(m)
        if abs(m - nearest) > tol:
            raise CalibrationError(
                f"endpoint argument {self.total_argument!r} is not a "
                "quarter-turn multiple")
        return nearest % 8


def _half_determinant(matrix: np.ndarray) -> complex:
    # Momentum-first block order: the oscillator path winds clockwise,
    # matching the e^{-i lambda t / h} orientation of the quantum side.
    n = matrix.shape[0] // 2
    a = matrix[n:, n:]
    b = matrix[n:, :n]
    c = matrix[:n, n:]
    d = matrix[:n, :n]
    return complex(np.linalg.det((a + 1j * b - 1j * (c + 1j * d)) / 2.0))


def branch_track(path, t_end: float, initial_points: int = 33,
                 max_step_arg: float = math.pi / 4.0,
                 min_modulus: float = 1e-10,
                 max_depth: int = 40) -> BranchTrack:
    """Track the half-determinant argument continuously from 0 to t_end.

    ``path`` maps a time to a symplectic matrix with path(0) = identity.
    The grid is bisected until consecutive argument steps stay under
    ``max_step_arg``; a determinant modulus falling below ``min_modulus``
    triggers refinement and ultimately an error, since the branch cannot
    be continued through a zero.
    """
    times = list(np.linspace(0.0, t_end, initial_points))
    dets = [_half_determinant(np.asarray(path(t), dtype=float)) for t in times]

    for _ in range(max_depth):
        refined_times: list[float] = [times[0]]
        refined_dets = [dets[0]]
        needs_more = False
        for i in range(1, len(times)):
            step = cmath.phase(dets[i] / dets[i - 1]) if dets[i - 1] != 0 else math.pi
            too_small = min(abs(dets[i]), abs(dets[i - 1])) < min_modulus
            if abs(step) >= max_step_arg or too_small:
                mid = 0.5 * (times[i] + times[i - 1])
                refined_times.append(mid)
                refined_dets.append(_half_determinant(np.asarray(path(mid), dtype=float)))
                needs_more = True
            refined_times.append(times[i])
            refined_dets.append(dets[i])
        times, dets = refined_times, refined_dets
        if not needs_more:
            break
    else:
        raise RankInstabilityError("branch tracking grid refinement exhausted")

    moduli = np.abs(np.array(dets))
    low = float(np.min(moduli))
    if low < min_modulus:
        raise RankInstabilityError(
            f"half-determinant modulus {low:.3e} too close to zero to track")

    args = np.empty(len(dets))
    args[0] = cmath.phase(dets[0])
    for i in range(1, len(dets)):
        args[i] = args[i - 1] + cmath.phase(dets[i] / dets[i - 1])
    return BranchTrack(times=np.array(times), arguments=args, min_modulus=low)


def assemble_component_amplitude(component: PeriodicComponent,
                                 density: DensityResult, measure: float,
                                 fhat_value: complex, psi_value: float,
                                 h: float,
                                 phase_override: int | None = None) -> complex:
    """Contribution of one periodic component to the smoothed density.

    The component of dimension dim Y contributes

        psi(E) (2 pi h)^{(1 - dim Y)/2} e^{i A / h} fhat(T) (2 pi)^{-1}
        * |d| |grad H| * e^{i pi m / 4} * measure

    with measure the component's Liouville measure and m the resolved
    quarter-turn integer.  |d| |grad H| is constant on every component in
    scope even when neither factor is, so the representative point's
    values suffice.
    """
    m = phase_override if phase_override is not None else density.phase_quarter_turns
    if m is None:
        raise CalibrationError(
            f"component at period {component.period!r} has no resolved phase")
    power = (1 - component.dim) / 2.0
    prefactor = (2.0 * math.pi * h) ** power
    oscillation = cmath.exp(1j * component.action / h)
    rho = density.modulus * component.grad_norm
    return (psi_value * prefactor * oscillation * complex(fhat_value)
            * (rho / (2.0 * math.pi)) * QUARTER_PHASES[m % 8] * measure)
