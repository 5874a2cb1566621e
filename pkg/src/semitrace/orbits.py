"""Periodic-orbit structure of decoupled oscillators.

Periods of a frequency vector w form the union of the lattices
(2 pi / w_j) Z.  Each period T carries a resonant index set
J_T = {j : w_j T in 2 pi Z}; the corresponding modes span the invariant
symplectic subspace on which every point is T-periodic, and the set of
T-periodic points on an energy shell is that subspace's own shell.

The predicates in this module classify how a periodic point sits inside
its shell: plain non-degeneracy of the transverse return map, the
group-relative count used for symmetric systems, normality with respect
to a family of first integrals, and the clean-intersection test for the
period landscape.  All of them reduce to certified rank computations.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .symplectic import (
    DEFAULT_RANK_TOL,
    EigenspaceSplit,
    Monodromy,
    intersect_subspaces,
    nullspace,
    orthonormal_span,
    subspace_rank,
    subspaces_equal,
    symplectic_j,
)

TWO_PI = 2.0 * math.pi
MEMBERSHIP_TOL = 1e-9
NEAR_MISS_BAND = 1e-6
MERGE_TOL = 1e-12
RATIONAL_ABS_TOL = 1e-13
DEFAULT_RATIONAL_BOUND = 10**6


@dataclass(frozen=True)
class PeriodEntry:
    """One period with its resonant mode set (0-based indices)."""

    period: float
    resonant: frozenset[int]


@dataclass(frozen=True)
class PeriodSet:
    """All periods of a frequency vector inside a window."""

    frequencies: np.ndarray
    window: tuple[float, float]
    entries: tuple[PeriodEntry, ...]
    near_misses: tuple[str, ...] = ()

    def periods(self) -> np.ndarray:
        return np.array([entry.period for entry in self.entries])


def resonant_indices(frequencies, period: float,
                     membership_tol: float = MEMBERSHIP_TOL) -> frozenset[int]:
    """Modes j with w_j * period an integer multiple of 2 pi."""
    w = np.asarray(frequencies, dtype=float)
    phases = w * period / TWO_PI
    deviation = np.abs(phases - np.round(phases))
    return frozenset(int(i) for i in np.nonzero(deviation <= membership_tol)[0])


def enumerate_periods(frequencies, window: tuple[float, float],
                      membership_tol: float = MEMBERSHIP_TOL,
                      merge_tol: float = MERGE_TOL) -> PeriodSet:
    """Enumerate all periods in ``window``, merging coincident values.

    Candidates 2 pi k / w_j are generated per mode, merged when equal to
    ``merge_tol`` relative, and each surviving period gets its resonant
    index set by the membership test.  Near misses, where a mode fails
    membership by less than NEAR_MISS_BAND, are reported as warnings on
    the result rather than silently dropped.
    """
    w = np.asarray(frequencies, dtype=float).reshape(-1)
    if np.any(w <= 0):
        raise ValueError("frequencies must be positive")
    lo, hi = float(window[0]), float(window[1])
    if not lo < hi:
        raise ValueError("window must be a nonempty interval")

    candidates: list[float] = []
    for wj in w:
        k_lo = math.ceil(lo * wj / TWO_PI - 1e-12)
        k_hi = math.floor(hi * wj / TWO_PI + 1e-12)
        for k in range(k_lo, k_hi + 1):
            t = TWO_PI * k / wj
            if lo - 1e-12 <= t <= hi + 1e-12:
                candidates.append(t)

    merged: list[float] = []
    for t in sorted(candidates):
        if merged and abs(t - merged[-1]) <= merge_tol * max(1.0, abs(t)):
            continue
        merged.append(t)

    entries = []
    warnings: list[str] = []
    for t in merged:
        phases = w * t / TWO_PI
        deviation = np.abs(phases - np.round(phases))
        resonant = frozenset(int(i) for i in np.nonzero(deviation <= membership_tol)[0])
        if not resonant:
            continue
        for i in np.nonzero((deviation > membership_tol)
                            & (deviation <= NEAR_MISS_BAND))[0]:
            warnings.append(
                f"mode {int(i)} misses period {t!r} by {deviation[int(i)]:.3e}")
        entries.append(PeriodEntry(period=t, resonant=resonant))

    return PeriodSet(frequencies=w, window=(lo, hi), entries=tuple(entries),
                     near_misses=tuple(warnings))


def resonant_subspace(frequencies, period: float,
                      membership_tol: float = MEMBERSHIP_TOL) -> np.ndarray:
    """Basis of the invariant subspace spanned by the resonant modes.

    Columns are the position and momentum axes of every resonant mode.
    Raises ValueError when ``period`` is not a period of the system.
    """
    w = np.asarray(frequencies, dtype=float).reshape(-1)
    indices = sorted(resonant_indices(w, period, membership_tol))
    if not indices:
        raise ValueError(f"{period!r} is not a period of this frequency vector")
    n = w.size
    basis = np.zeros((2 * n, 2 * len(indices)))
    for column, j in enumerate(indices):
        basis[j, 2 * column] = 1.0
        basis[n + j, 2 * column + 1] = 1.0
    return basis


class FrequencyClass(enum.Enum):
    """Coarse classification of a frequency vector by ratio arithmetic."""

    ALL_NONDEGENERATE = "all-nondegenerate"
    ALL_PERIODIC = "all-periodic"
    ISOCHRONOUS = "isochronous"
    ALL_GROUP_NONDEGENERATE = "all-group-nondegenerate"
    MIXED = "mixed"


@dataclass(frozen=True)
class FrequencyClassification:
    kind: FrequencyClass
    notes: tuple[str, ...] = ()


def _rational_ratio(ratio: float, bound: int) -> Fraction | None:
    approx = Fraction(ratio).limit_denominator(bound)
    if abs(ratio - float(approx)) <= RATIONAL_ABS_TOL * max(1.0, abs(ratio)):
        return approx
    return None


def classify_frequencies(frequencies,
                         rational_bound: int = DEFAULT_RATIONAL_BOUND
                         ) -> FrequencyClassification:
    """Classify pairwise frequency ratios as rational or not.

    Rationality is decided by the best continued-fraction convergent with
    denominator at most ``rational_bound``; borderline cases, where the
    convergent sits just outside the acceptance tolerance, are reported
    in the notes so a caller can inspect the evidence.
    """
    w = np.asarray(frequencies, dtype=float).reshape(-1)
    if np.any(w <= 0):
        raise ValueError("frequencies must be positive")
    bound = int(rational_bound)
    notes: list[str] = []
    n = w.size

    any_rational_unequal = False
    all_rational = True
    any_rational = False
    for i in range(n):
        for j in range(i + 1, n):
            ratio = float(w[i] / w[j])
            approx = _rational_ratio(ratio, bound)
            if approx is None:
                all_rational = False
                near = Fraction(ratio).limit_denominator(bound)
                err = abs(ratio - float(near))
                if err <= 100.0 * RATIONAL_ABS_TOL * max(1.0, abs(ratio)):
                    notes.append(
                        f"ratio w[{i}]/w[{j}] = {ratio!r} is borderline: "
                        f"nearest {near.numerator}/{near.denominator} off by {err:.3e}")
            else:
                any_rational = True
                if approx != 1:
                    any_rational_unequal = True

    all_equal = bool(np.all(np.abs(w - w[0]) <= RATIONAL_ABS_TOL * w[0]))
    if all_equal:
        kind = FrequencyClass.ISOCHRONOUS
    elif all_rational:
        kind = FrequencyClass.ALL_PERIODIC
    elif not any_rational:
        kind = FrequencyClass.ALL_NONDEGENERATE
    elif not any_rational_unequal:
        kind = FrequencyClass.ALL_GROUP_NONDEGENERATE
    else:
        kind = FrequencyClass.MIXED
    return FrequencyClassification(kind=kind, notes=tuple(notes))


class ComponentLabel(enum.Enum):
    """Geometric type of a connected set of periodic points on the shell."""

    WEYL_ZERO = "weyl-zero"
    NONDEGENERATE_ORBIT = "nondegenerate-orbit"
    GROUP_TUBE = "group-tube"
    FULL_SHELL = "full-shell"
    TORUS = "torus"


@dataclass(frozen=True)
class PeriodicComponent:
    """A component of the T-periodic set on an energy shell."""

    period: float
    representative: np.ndarray
    dim: int
    resonant_count: int
    action: float
    label: ComponentLabel
    grad_norm: float
    resonant: frozenset[int] = frozenset()


@dataclass(frozen=True)
class FirstIntegral:
    """A conserved quantity with value and gradient evaluators."""

    name: str
    value: object
    grad: object

    def value_at(self, z: np.ndarray) -> float:
        return float(self.value(z))

    def grad_at(self, z: np.ndarray) -> np.ndarray:
        return np.asarray(self.grad(z), dtype=float).reshape(-1)


@dataclass(frozen=True)
class FirstIntegralFamily:
    """A finite family of first integrals with a provenance tag."""

    integrals: tuple[FirstIntegral, ...]
    provenance: str = "user"

    def gradients_at(self, z: np.ndarray) -> np.ndarray:
        if not self.integrals:
            return np.zeros((np.asarray(z).size, 0))
        return np.column_stack([f.grad_at(z) for f in self.integrals])

    def __len__(self) -> int:
        return len(self.integrals)


def moment_map(generator: np.ndarray) -> FirstIntegral:
    """Quadratic first integral <J A z, z> of a linear symmetry generator.

    ``generator`` must be a Hamiltonian matrix, i.e. J A symmetric; that
    makes exp(t A) symplectic and the returned function constant along
    its orbits.
    """
    a = np.asarray(generator, dtype=float)
    n = a.shape[0] // 2
    j = symplectic_j(n)
    ja = j @ a
    if float(np.max(np.abs(ja - ja.T))) > 1e-10 * (1.0 + float(np.max(np.abs(ja)))):
        raise ValueError("generator is not Hamiltonian: J A must be symmetric")

    def value(z, _ja=ja):
        z = np.asarray(z, dtype=float)
        return float(z @ _ja @ z)

    def grad(z, _ja=ja):
        z = np.asarray(z, dtype=float)
        return 2.0 * (_ja @ z)

    return FirstIntegral(name="moment", value=value, grad=grad)


def _resonance_invariant_pair(w: np.ndarray, i: int, j: int,
                              numer: int, denom: int) -> list[FirstIntegral]:
    """Real and imaginary parts of the resonant mode invariant.

    With complex mode coordinates zeta_j = (w_j x_j + i xi_j) / sqrt(2 w_j)
    the combination zeta_i^q conj(zeta_j)^p is conserved exactly when
    w_i / w_j = p / q; both real forms are returned.
    """
    p, q = numer, denom
    n = w.size

    def _zeta(z, k):
        return (w[k] * z[k] + 1j * z[n + k]) / math.sqrt(2.0 * w[k])

    def _value(z, real):
        z = np.asarray(z, dtype=float)
        g = _zeta(z, i) ** q * np.conj(_zeta(z, j)) ** p
        return float(g.real if real else g.imag)

    def _grad(z, real):
        z = np.asarray(z, dtype=float)
        zi, zj = _zeta(z, i), _zeta(z, j)
        grad_c = np.zeros(2 * n, dtype=complex)
        front_i = q * zi ** (q - 1) * np.conj(zj) ** p
        front_j = p * np.conj(zj) ** (p - 1) * zi ** q
        grad_c[i] = front_i * w[i] / math.sqrt(2.0 * w[i])
        grad_c[n + i] = front_i * 1j / math.sqrt(2.0 * w[i])
        grad_c[j] = front_j * w[j] / math.sqrt(2.0 * w[j])
        grad_c[n + j] = front_j * (-1j) / math.sqrt(2.0 * w[j])
        return grad_c.real.copy() if real else grad_c.imag.copy()

    label = f"res[{i},{j}]({p}:{q})"
    return [
        FirstIntegral(name=label + ".re",
                      value=lambda z, real=True: _value(z, real),
                      grad=lambda z, real=True: _grad(z, real)),
        FirstIntegral(name=label + ".im",
                      value=lambda z, real=False: _value(z, real),
                      grad=lambda z, real=False: _grad(z, real)),
    ]


def quadratic_integral_family(system, resonant: frozenset[int] | set[int],
                              z: np.ndarray,
                              rank_tol: float = DEFAULT_RANK_TOL,
                              rational_bound: int = DEFAULT_RATIONAL_BOUND
                              ) -> FirstIntegralFamily:
    """Independent first integrals of an oscillator near a periodic point.

    Starts from the resonant mode energies, adds the polynomial resonance
    invariants for each rationally related resonant pair, and prunes the
    collection to a subfamily with independent gradients at ``z`` via
    pivoted QR.  Integrals whose gradient vanishes at ``z`` drop out.
    """
    from scipy.linalg import qr

    w = system.frequencies
    indices = sorted(resonant)
    candidates: list[FirstIntegral] = []
    for j in indices:
        candidates.append(FirstIntegral(
            name=f"mode_energy[{j}]",
            value=lambda z_, j_=j: system.mode_energy(j_, z_),
            grad=lambda z_, j_=j: system.mode_energy_gradient(j_, z_)))
    for a_pos, i in enumerate(indices):
        for j in indices[a_pos + 1:]:
            approx = _rational_ratio(w[i] / w[j], int(rational_bound))
            if approx is not None:
                candidates.extend(_resonance_invariant_pair(
                    w, i, j, approx.numerator, approx.denominator))

    grads = np.column_stack([f.grad_at(z) for f in candidates]) if candidates \
        else np.zeros((2 * system.n, 0))
    if grads.shape[1] == 0:
        return FirstIntegralFamily(integrals=(), provenance="oscillator")
    _, _, pivots = qr(grads, pivoting=True)
    rank = subspace_rank(grads, rank_tol)
    chosen = sorted(pivots[:rank])
    return FirstIntegralFamily(
        integrals=tuple(candidates[i] for i in chosen),
        provenance="oscillator")


def oscillator_symmetry_family(system, resonant: frozenset[int] | set[int]
                               ) -> FirstIntegralFamily:
    """Moment maps of the linear symmetry group acting on resonant modes.

    Each resonant mode contributes its own phase rotation; each pair of
    resonant modes with equal frequencies contributes the two mixing
    rotations.  Only linear symplectic symmetries are included, so the
    family is the quadratic part of :func:`quadratic_integral_family`.
    """
    w = system.frequencies
    indices = sorted(resonant)
    members: list[FirstIntegral] = []
    for j in indices:
        members.append(FirstIntegral(
            name=f"mode_energy[{j}]",
            value=lambda z_, j_=j: system.mode_energy(j_, z_),
            grad=lambda z_, j_=j: system.mode_energy_gradient(j_, z_)))
    for a_pos, i in enumerate(indices):
        for j in indices[a_pos + 1:]:
            if abs(w[i] - w[j]) <= RATIONAL_ABS_TOL * w[i]:
                members.extend(_resonance_invariant_pair(w, i, j, 1, 1))
    return FirstIntegralFamily(integrals=tuple(members), provenance="symmetry")


def is_nondegenerate(split: EigenspaceSplit) -> bool:
    """Whether the periodic point is non-degenerate: dim E1 == 2."""
    return split.dim_e1 == 2


def is_group_nondegenerate(split: EigenspaceSplit, grad_h: np.ndarray,
                           generators: FirstIntegralFamily | None,
                           rank_tol: float = DEFAULT_RANK_TOL) -> bool:
    """Non-degeneracy relative to a symmetry group.

    The test compares dim E1 with 1 + dim(span{J grad H} + G z), where
    G z is spanned by the Hamiltonian vector fields of the group's moment
    maps at the base point.  An empty or missing family reduces to plain
    non-degeneracy.
    """
    monodromy_ = split.monodromy
    z = monodromy_.base_point
    grad = np.asarray(grad_h, dtype=float).reshape(-1)
    j = symplectic_j(monodromy_.n)
    columns = [j @ grad]
    if generators is not None and len(generators):
        grads = generators.gradients_at(z)
        for col in range(grads.shape[1]):
            columns.append(j @ grads[:, col])
    span = np.column_stack(columns)
    return split.dim_e1 == subspace_rank(span, rank_tol) + 1


def is_normal(monodromy: Monodromy, grad_h: np.ndarray,
              integrals: FirstIntegralFamily,
              rank_tol: float = DEFAULT_RANK_TOL) -> bool:
    """Normality of a periodic point with respect to first integrals.

    The shell kernel ker(M - I) intersect T_z Sigma_E must coincide with
    the span of the Hamiltonian vector fields J grad F_i at z.  The
    integral gradients are required to be independent at z; the inclusion
    of their span in the shell kernel is asserted rather than assumed.
    """
    z = monodromy.base_point
    matrix = monodromy.matrix
    dim = matrix.shape[0]
    grad = np.asarray(grad_h, dtype=float).reshape(-1)
    if np.linalg.norm(grad) == 0.0:
        raise ValueError("gradient vanishes; point is critical")
    grads = integrals.gradients_at(z)
    if grads.shape[1] == 0:
        raise ValueError("integral family is empty")
    if subspace_rank(grads, rank_tol) != grads.shape[1]:
        raise ValueError("integral gradients are dependent at the base point")

    j = symplectic_j(dim // 2)
    fields = j @ grads
    shell_tangent = nullspace(grad.reshape(1, -1) / np.linalg.norm(grad), rank_tol)
    kernel = nullspace(matrix - np.eye(dim), rank_tol,
                       scale=max(1.0, float(np.linalg.norm(matrix, 2))))
    shell_kernel = intersect_subspaces(kernel, shell_tangent, rank_tol)

    span = orthonormal_span(fields, rank_tol)
    # The inclusion span <= shell kernel holds for any true first
    # integrals; a violation means the family or the monodromy is wrong.
    residual = span - shell_kernel @ (shell_kernel.T @ span)
    if span.shape[1] and float(np.max(np.abs(residual))) > 1e-6:
        raise ValueError("integral vector fields leave the shell kernel; "
                         "the family is not conserved along this orbit")
    return span.shape[1] == shell_kernel.shape[1]


def is_shell_normal(monodromy: Monodromy, grad_h: np.ndarray,
                    integrals: FirstIntegralFamily,
                    rank_tol: float = DEFAULT_RANK_TOL) -> bool:
    """Normality plus transversality of the drift direction.

    On top of :func:`is_normal`, requires that J grad H does not lie in
    the image of the shell tangent under (M - I); this is the condition
    under which the periodic set projects cleanly to the energy axis.
    """
    if not is_normal(monodromy, grad_h, integrals, rank_tol):
        return False
    return not _drift_in_image(monodromy, grad_h, rank_tol)


def _drift_in_image(monodromy: Monodromy, grad_h: np.ndarray,
                    rank_tol: float) -> bool:
    matrix = monodromy.matrix
    dim = matrix.shape[0]
    grad = np.asarray(grad_h, dtype=float).reshape(-1)
    j = symplectic_j(dim // 2)
    drift = j @ grad
    shell_tangent = nullspace(grad.reshape(1, -1) / np.linalg.norm(grad), rank_tol)
    image = (matrix - np.eye(dim)) @ shell_tangent
    rank_image = subspace_rank(image, rank_tol)
    rank_with = subspace_rank(np.column_stack([image, drift]), rank_tol)
    return rank_with == rank_image


def kernel_square_saturates(split: EigenspaceSplit) -> bool:
    """Whether E1 is already reached by the second kernel power.

    True exactly when dim E1 equals dim ker(M - I)^2; the general density
    formula assumes this saturation.
    """
    matrix = split.monodromy.matrix
    dim = matrix.shape[0]
    shifted = matrix - np.eye(dim)
    scale = max(1.0, float(np.linalg.norm(matrix, 2)) ** 2)
    second = nullspace(shifted @ shifted, split.rank_tol, scale=scale)
    return second.shape[1] == split.dim_e1


def clean_flow_check(monodromy: Monodromy, grad_h: np.ndarray,
                     tangent_basis: np.ndarray,
                     rank_tol: float = DEFAULT_RANK_TOL) -> bool:
    """Clean-intersection test for the period landscape at (T, z).

    The kernel of (tau, alpha) -> tau J grad H + (M - I) alpha on
    R x T_z Sigma_E is computed and compared against the candidate
    tangent space {0} x span(tangent_basis); the flow is clean at (T, z)
    exactly when the kernel equals the candidate.
    """
    matrix = monodromy.matrix
    dim = matrix.shape[0]
    grad = np.asarray(grad_h, dtype=float).reshape(-1)
    j = symplectic_j(dim // 2)
    drift = (j @ grad).reshape(-1, 1)
    shell_tangent = nullspace(grad.reshape(1, -1) / np.linalg.norm(grad), rank_tol)
    operator = np.hstack([drift, (matrix - np.eye(dim)) @ shell_tangent])
    kernel_coeffs = nullspace(operator, rank_tol,
                              scale=max(1.0, float(np.linalg.norm(matrix, 2))))
    # Lift coefficient vectors (tau, c) to (tau, alpha) in R^{1+2n}.
    lifted = np.vstack([
        kernel_coeffs[:1],
        shell_tangent @ kernel_coeffs[1:],
    ])
    candidate = np.vstack([
        np.zeros((1, np.atleast_2d(tangent_basis).shape[1])),
        np.atleast_2d(tangent_basis),
    ])
    return subspaces_equal(lifted, candidate, rank_tol)


def oscillator_periodic_point(frequencies, resonant: frozenset[int] | set[int],
                              energy: float,
                              weights: np.ndarray | None = None) -> np.ndarray:
    """Deterministic representative point on a resonant component.

    Excites every resonant mode in the momentum direction, splitting the
    energy equally unless ``weights`` rebalances it.  With all modes
    excited the point avoids the lower-dimensional strata where extra
    degeneracies appear.
    """
    w = np.asarray(frequencies, dtype=float).reshape(-1)
    indices = sorted(resonant)
    if not indices:
        raise ValueError("resonant set is empty")
    if weights is None:
        weights = np.full(len(indices), 1.0 / len(indices))
    weights = np.asarray(weights, dtype=float)
    if weights.size != len(indices) or np.any(weights <= 0):
        raise ValueError("weights must be positive, one per resonant mode")
    weights = weights / float(np.sum(weights))
    z = np.zeros(2 * w.size)
    for share, j in zip(weights, indices):
        z[w.size + j] = math.sqrt(2.0 * energy * share)
    return z


def oscillator_component(system, period: float, energy: float,
                         membership_tol: float = MEMBERSHIP_TOL
                         ) -> PeriodicComponent:
    """Build the periodic component of an oscillator at one period.

    The component of T-periodic shell points is the resonant sub-shell;
    its dimension is 2 R - 1 for R resonant modes, the action is T times
    the energy, and the label distinguishes the zero period, isolated
    orbits, genuine tubes, and the full shell.
    """
    w = system.frequencies
    if abs(period) <= membership_tol:
        resonant = frozenset(range(system.n))
        period = 0.0
    else:
        resonant = resonant_indices(w, period, membership_tol)
        if not resonant:
            raise ValueError(f"{period!r} is not a period")
    r = len(resonant)
    if period == 0.0:
        label = ComponentLabel.WEYL_ZERO
    elif r == 1:
        label = ComponentLabel.NONDEGENERATE_ORBIT
    elif r == system.n:
        label = ComponentLabel.FULL_SHELL
    else:
        label = ComponentLabel.GROUP_TUBE
    z = oscillator_periodic_point(w, resonant if r else range(system.n), energy)
    grad = system.gradient(z)
    return PeriodicComponent(
        period=period,
        representative=z,
        dim=2 * r - 1,
        resonant_count=r,
        action=period * energy,
        label=label,
        grad_norm=float(np.linalg.norm(grad)),
        resonant=resonant,
    )


def oscillator_tangent_basis(system, period: float, z: np.ndarray,
                             membership_tol: float = MEMBERSHIP_TOL,
                             rank_tol: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """Tangent space of the T-periodic set at z, computed analytically.

    The periodic set is the resonant sub-shell, so its tangent is the
    resonant subspace cut by the shell tangent.
    """
    if abs(period) <= membership_tol:
        subspace = np.eye(2 * system.n)
    else:
        subspace = resonant_subspace(system.frequencies, period, membership_tol)
    grad = system.gradient(z)
    shell_tangent = nullspace(grad.reshape(1, -1) / np.linalg.norm(grad), rank_tol)
    return intersect_subspaces(subspace, shell_tangent, rank_tol)
