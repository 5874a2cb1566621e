"""Integrable systems in action-angle form and their torus sums.

A system here is a smooth function of the actions on a box domain; its
gradient is the frequency map and its Hessian the frequency derivative.
Families of periodic invariant tori are indexed by integer vectors: the
torus with actions I is periodic with period T exactly when T w(I) is
2 pi times an integer vector.  The contribution of each torus to the
smoothed spectral density involves the scalar curvature of the energy
level of the action Hamiltonian, computed here by two independent routes
(a frequency-map formula and direct second fundamental form), and a
phase fixed up to sign by the curvature's own sign.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import CalibrationError, VanishingCurvatureError
from .symplectic import (
    DEFAULT_RANK_TOL,
    Monodromy,
    nullspace,
    subspace_rank,
    subspaces_equal,
)

TWO_PI = 2.0 * math.pi
DEFAULT_NEWTON_TOL = 1e-10
DEFAULT_FD_STEP = 1e-5
CURVATURE_FD_STEP = 1e-4


class ActionAngleSystem:
    """Hamiltonian depending only on the action variables.

    Parameters
    ----------
    n : int
        Number of degrees of freedom.
    value : callable
        The Hamiltonian as a function of the action vector.
    domain : (n, 2) array
        Box of admissible actions, one (low, high) row per coordinate.
    grad, hess : callable, optional
        Analytic frequency map and its derivative; finite differences of
        ``value`` fill in when omitted.
    """

    def __init__(self, n, value, domain, grad=None, hess=None, name="custom"):
        self.n = int(n)
        self._value = value
        self.domain = np.asarray(domain, dtype=float).reshape(self.n, 2)
        if np.any(self.domain[:, 0] >= self.domain[:, 1]):
            raise ValueError("domain rows must be (low, high) with low < high")
        self._grad = grad
        self._hess = hess
        self.name = name

    def value(self, actions) -> float:
        return float(self._value(np.asarray(actions, dtype=float)))

    def frequencies(self, actions) -> np.ndarray:
        actions = np.asarray(actions, dtype=float)
        if self._grad is not None:
            return np.asarray(self._grad(actions), dtype=float).reshape(-1)
        return self._fd_grad(actions)

    def frequency_derivative(self, actions) -> np.ndarray:
        actions = np.asarray(actions, dtype=float)
        if self._hess is not None:
            return np.asarray(self._hess(actions), dtype=float).reshape(self.n, self.n)
        step = DEFAULT_FD_STEP
        out = np.zeros((self.n, self.n))
        for i in range(self.n):
            d = np.zeros(self.n)
            d[i] = step
            out[:, i] = (self.frequencies(actions + d)
                         - self.frequencies(actions - d)) / (2 * step)
        return 0.5 * (out + out.T)

    def _fd_grad(self, actions) -> np.ndarray:
        step = DEFAULT_FD_STEP
        out = np.zeros(self.n)
        for i in range(self.n):
            d = np.zeros(self.n)
            d[i] = step
            out[i] = (self.value(actions + d) - self.value(actions - d)) / (2 * step)
        return out

    def contains(self, actions, margin: float = 0.0) -> bool:
        actions = np.asarray(actions, dtype=float)
        return bool(np.all(actions >= self.domain[:, 0] - margin)
                    and np.all(actions <= self.domain[:, 1] + margin))

    def validate_derivatives(self, actions, tol: float = 1e-5) -> None:
        """Cross-check supplied gradient/Hessian against differences."""
        actions = np.asarray(actions, dtype=float)
        w = self.frequencies(actions)
        fd = self._fd_grad(actions)
        scale = 1.0 + float(np.max(np.abs(w)))
        if float(np.max(np.abs(w - fd))) > tol * scale:
            raise ValueError("frequency map disagrees with finite differences")
        hess = self.frequency_derivative(actions)
        if float(np.max(np.abs(hess - hess.T))) > tol * (1.0 + float(np.max(np.abs(hess)))):
            raise ValueError("frequency derivative is not symmetric")


def kinetic_actions(n: int, radius: float = 4.0) -> ActionAngleSystem:
    """The flat-torus kinetic Hamiltonian |I|^2 / 2 on a centered box."""
    domain = np.tile([-radius, radius], (n, 1))
    return ActionAngleSystem(
        n=n,
        value=lambda actions: 0.5 * float(np.dot(actions, actions)),
        grad=lambda actions: np.asarray(actions, dtype=float),
        hess=lambda actions: np.eye(n),
        domain=domain,
        name="kinetic",
    )


def quadratic_actions(matrix, domain=None, name="quadratic") -> ActionAngleSystem:
    """Hamiltonian (1/2) <A I, I> for a symmetric matrix A."""
    a = np.asarray(matrix, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n) or float(np.max(np.abs(a - a.T))) > 1e-12:
        raise ValueError("matrix must be symmetric")
    if domain is None:
        domain = np.tile([-4.0, 4.0], (n, 1))
    return ActionAngleSystem(
        n=n,
        value=lambda actions: 0.5 * float(actions @ a @ actions),
        grad=lambda actions: a @ np.asarray(actions, dtype=float),
        hess=lambda actions: a.copy(),
        domain=domain,
        name=name,
    )


def isochronicity_bracket(system: ActionAngleSystem, actions) -> float:
    """The invariant <w'(I)^{-1} w(I), w(I)> controlling period drift."""
    w = system.frequencies(actions)
    deriv = system.frequency_derivative(actions)
    return float(np.linalg.solve(deriv, w) @ w)


def _adjugate(matrix: np.ndarray) -> np.ndarray:
    n = matrix.shape[0]
    if n == 1:
        return np.ones((1, 1))
    cof = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            minor = np.delete(np.delete(matrix, i, axis=0), j, axis=1)
            cof[i, j] = ((-1.0) ** (i + j)) * float(np.linalg.det(minor))
    return cof.T


def curvature_from_frequencies(system: ActionAngleSystem, actions) -> float:
    """Shell curvature from the frequency map:

        K = (-1)^{n-1} det(w') <w'^{-1} w, w> / |w|^{n+1}.

    The product det(w') w'^{-1} is the adjugate, which stays finite when
    w' degenerates, so that route is used.
    """
    w = system.frequencies(actions)
    deriv = system.frequency_derivative(actions)
    norm = float(np.linalg.norm(w))
    if norm == 0.0:
        raise ValueError("frequency vector vanishes")
    paired = float(_adjugate(deriv) @ w @ w)
    return ((-1.0) ** (system.n - 1)) * paired / norm ** (system.n + 1)


def curvature_from_parametrization(system: ActionAngleSystem, actions,
                                   energy: float | None = None,
                                   step: float = CURVATURE_FD_STEP) -> float:
    """Shell curvature from an implicit graph parametrization.

    The level set through ``actions`` is written locally as a graph over
    the hyperplane orthogonal to the dominant frequency axis; first and
    second fundamental forms are estimated by central differences of the
    graph height, and the curvature is det(second) / det(first) with the
    normal fixed as w / |w| at the base point.
    """
    base = np.asarray(actions, dtype=float)
    if energy is None:
        energy = system.value(base)
    w = system.frequencies(base)
    norm = float(np.linalg.norm(w))
    if norm == 0.0:
        raise ValueError("frequency vector vanishes")
    normal = w / norm

    order = np.argsort(-np.abs(w))
    last_error: Exception | None = None
    for axis in order:
        try:
            return _graph_curvature(system, base, energy, int(axis), normal, step)
        except (RuntimeError, np.linalg.LinAlgError) as exc:
            last_error = exc
    raise RuntimeError(f"implicit parametrization failed on all axes: {last_error}")


def _solve_height(system: ActionAngleSystem, point: np.ndarray, axis: int,
                  energy: float, start: float) -> float:
    """1-d Newton solve of value(point + s e_axis) = energy for s."""
    s = start
    for _ in range(60):
        probe = point.copy()
        probe[axis] += s
        residual = system.value(probe) - energy
        slope = float(system.frequencies(probe)[axis])
        if slope == 0.0:
            raise RuntimeError("degenerate slope along the graph axis")
        step = residual / slope
        s -= step
        if abs(step) <= 1e-13 * (1.0 + abs(s)):
            return s
    raise RuntimeError("height solve did not converge")


def _graph_curvature(system: ActionAngleSystem, base: np.ndarray,
                     energy: float, axis: int, normal: np.ndarray,
                     step: float) -> float:
    others = [i for i in range(system.n) if i != axis]
    m = len(others)

    def height(offsets: np.ndarray) -> float:
        point = base.copy()
        for coord, delta in zip(others, offsets):
            point[coord] += delta
        return _solve_height(system, point, axis, energy, 0.0)

    zero = height(np.zeros(m))
    first = np.zeros(m)
    second = np.zeros((m, m))
    for a in range(m):
        e_a = np.zeros(m)
        e_a[a] = step
        plus = height(e_a)
        minus = height(-e_a)
        first[a] = (plus - minus) / (2 * step)
        second[a, a] = (plus - 2 * zero + minus) / step**2
    for a in range(m):
        for b in range(a + 1, m):
            e_ab = np.zeros(m)
            e_ab[a] = step
            e_ab[b] = step
            e_amb = np.zeros(m)
            e_amb[a] = step
            e_amb[b] = -step
            mixed = (height(e_ab) - height(e_amb)
                     - height(-e_amb) + height(-e_ab)) / (4 * step**2)
            second[a, b] = second[b, a] = mixed

    gram = np.eye(m) + np.outer(first, first)
    normal_axis = float(normal[axis])
    second_form = normal_axis * second
    return float(np.linalg.det(second_form) / np.linalg.det(gram))


@dataclass(frozen=True)
class PeriodicTorus:
    """A periodic invariant torus located by its integer vector."""

    period: float
    actions: np.ndarray
    integer_vector: np.ndarray
    residual: float
    bracket: float

    @property
    def lattice_norm(self) -> float:
        return float(np.linalg.norm(self.integer_vector))


@dataclass(frozen=True)
class TorusEnumeration:
    tori: tuple[PeriodicTorus, ...]
    warnings: tuple[str, ...] = ()


def _integer_vectors(n: int, bound: float):
    top = int(math.floor(bound))
    ranges = [range(-top, top + 1)] * n
    grids = np.meshgrid(*ranges, indexing="ij")
    flat = np.stack([g.ravel() for g in grids], axis=1)
    norms = np.linalg.norm(flat, axis=1)
    keep = (norms > 0) & (norms <= bound + 1e-12)
    return [tuple(int(c) for c in row) for row in flat[keep]]


def enumerate_tori(system: ActionAngleSystem, energy: float,
                   window: tuple[float, float], lattice_bound: float,
                   newton_tol: float = DEFAULT_NEWTON_TOL,
                   seeds_per_axis: int = 5,
                   dedup_tol: float = 1e-6,
                   max_newton: int = 60) -> TorusEnumeration:
    """Find all periodic tori with period in ``window``.

    For each integer vector within the lattice bound, Newton iteration
    solves T w(I) = 2 pi m together with the energy constraint, seeded
    from a coarse grid projected onto the energy level.  Distinct
    converged action points for a single integer vector are all kept and
    reported as a warning, since they are legitimate separate tori.
    """
    lo, hi = float(window[0]), float(window[1])
    seeds = _shell_seeds(system, energy, seeds_per_axis)
    found: list[PeriodicTorus] = []
    warnings: list[str] = []

    for m_vec in _integer_vectors(system.n, lattice_bound):
        m_arr = np.asarray(m_vec, dtype=float)
        solutions: list[tuple[float, np.ndarray, float]] = []
        for seed in seeds:
            result = _newton_torus(system, energy, m_arr, seed,
                                   newton_tol, max_newton)
            if result is None:
                continue
            period, actions, residual = result
            if not (lo <= period <= hi):
                continue
            if not system.contains(actions, margin=1e-9):
                continue
            if any(np.max(np.abs(actions - other[1])) <= dedup_tol
                   for other in solutions):
                continue
            solutions.append((period, actions, residual))
        if len(solutions) > 1:
            warnings.append(
                f"integer vector {m_vec} supports {len(solutions)} distinct tori")
        for period, actions, residual in solutions:
            bracket = isochronicity_bracket(system, actions)
            if abs(bracket) <= 1e-10 * (1.0 + abs(energy)):
                raise VanishingCurvatureError(
                    f"torus {m_vec} has a vanishing isochronicity bracket")
            found.append(PeriodicTorus(
                period=period, actions=actions,
                integer_vector=np.asarray(m_vec, dtype=int),
                residual=residual, bracket=bracket))

    found.sort(key=lambda t: (t.lattice_norm, tuple(t.integer_vector),
                              t.period, tuple(np.round(t.actions, 9))))
    return TorusEnumeration(tori=tuple(found), warnings=tuple(warnings))


def _shell_seeds(system: ActionAngleSystem, energy: float,
                 per_axis: int) -> list[np.ndarray]:
    axes = [np.linspace(lo, hi, per_axis + 2)[1:-1]
            for lo, hi in system.domain]
    grids = np.meshgrid(*axes, indexing="ij")
    points = np.stack([g.ravel() for g in grids], axis=1)
    seeds = []
    for point in points:
        projected = _project_to_shell(system, point.copy(), energy)
        if projected is not None and system.contains(projected, margin=1e-6):
            seeds.append(projected)
    return seeds


def _project_to_shell(system: ActionAngleSystem, actions: np.ndarray,
                      energy: float) -> np.ndarray | None:
    for _ in range(40):
        residual = system.value(actions) - energy
        if abs(residual) <= 1e-12 * (1.0 + abs(energy)):
            return actions
        w = system.frequencies(actions)
        norm_sq = float(np.dot(w, w))
        if norm_sq < 1e-14:
            return None
        actions = actions - residual * w / norm_sq
    return None


def _newton_torus(system: ActionAngleSystem, energy: float,
                  m_vec: np.ndarray, seed: np.ndarray,
                  tol: float, max_iter: int):
    actions = seed.copy()
    w = system.frequencies(actions)
    denom = float(np.dot(w, w))
    if denom < 1e-14:
        return None
    period = TWO_PI * float(np.dot(m_vec, w)) / denom

    for _ in range(max_iter):
        w = system.frequencies(actions)
        deriv = system.frequency_derivative(actions)
        residual_vec = period * w - TWO_PI * m_vec
        residual_energy = system.value(actions) - energy
        residual = float(np.linalg.norm(residual_vec)) + abs(residual_energy)
        if residual <= tol:
            return period, actions, residual
        jac = np.zeros((system.n + 1, system.n + 1))
        jac[: system.n, 0] = w
        jac[: system.n, 1:] = period * deriv
        jac[system.n, 1:] = w
        rhs = np.concatenate([residual_vec, [residual_energy]])
        try:
            update = np.linalg.solve(jac, rhs)
        except np.linalg.LinAlgError:
            return None
        period -= float(update[0])
        actions = actions - update[1:]
        if not np.all(np.isfinite(actions)) or not math.isfinite(period):
            return None
    return None


def torus_phase_integer(n: int, curvature: float) -> int:
    """The quarter-turn class beta mod 4 forced by the curvature sign.

    The torus amplitude carries exp(i pi beta / 4) with
    exp(i pi beta / 2) = i^{n-1} sign(K); this pins beta mod 4, leaving a
    sign to be calibrated.
    """
    if curvature == 0.0:
        raise VanishingCurvatureError("curvature sign is undefined at zero")
    return ((n - 1) + (2 if curvature < 0 else 0)) % 4


def torus_phase_candidates(n: int, curvature: float) -> tuple[int, int]:
    base = torus_phase_integer(n, curvature)
    return (base, base + 4)


def torus_amplitude(torus: PeriodicTorus, system: ActionAngleSystem,
                    fhat_value: complex, h: float, beta: int,
                    psi_value: float = 1.0,
                    curvature: float | None = None) -> complex:
    """Contribution of one periodic torus to the smoothed density.

        psi(E) fhat(T) e^{2 pi i <m, I> / h} e^{i pi beta / 4}
        / (|w| sqrt|K| |m|^{(n-1)/2}) * h^{(1-n)/2}.

    ``beta`` must satisfy the curvature sign constraint; an inconsistent
    value raises rather than silently flipping the phase.
    """
    n = system.n
    if curvature is None:
        curvature = curvature_from_frequencies(system, torus.actions)
    if abs(curvature) < 1e-12:
        raise VanishingCurvatureError("torus curvature is numerically zero")
    if beta % 4 != torus_phase_integer(n, curvature):
        raise CalibrationError(
            f"beta = {beta} violates the curvature sign constraint")
    w = system.frequencies(torus.actions)
    w_norm = float(np.linalg.norm(w))
    action = TWO_PI * float(np.dot(torus.integer_vector, torus.actions))
    phase = cmath.exp(1j * action / h) * cmath.exp(1j * math.pi * beta / 4.0)
    modulus = h ** ((1 - n) / 2.0) / (
        w_norm * math.sqrt(abs(curvature)) * torus.lattice_norm ** ((n - 1) / 2.0))
    return psi_value * complex(fhat_value) * phase * modulus


def model_monodromy(system: ActionAngleSystem, actions, period: float,
                    tol_symp: float = 1e-9) -> Monodromy:
    """Return-map linearization of the torus flow in flat coordinates.

    In angle-action coordinates the time-T map fixes the actions and
    shears the angles by T w'(I); the base point stores the actions in
    the momentum slots with zero angle offset.
    """
    actions = np.asarray(actions, dtype=float)
    n = system.n
    deriv = system.frequency_derivative(actions)
    matrix = np.eye(2 * n)
    matrix[:n, n:] = period * deriv
    base = np.concatenate([np.zeros(n), actions])
    return Monodromy(matrix=matrix, base_point=base, time=period,
                     tol_symp=tol_symp)


@dataclass(frozen=True)
class IntegrableModelCheck:
    """Joint report of the integrable return-map structure checks."""

    hessian_invertible: bool
    kernel_equals_action_span: bool
    bracket_nonzero: bool
    drift_in_image: bool
    nilpotent_square: bool

    @property
    def consistent(self) -> bool:
        """Both biconditionals hold and the shear is 2-step nilpotent."""
        return (self.hessian_invertible == self.kernel_equals_action_span
                and self.bracket_nonzero == (not self.drift_in_image)
                and self.nilpotent_square)


def check_integrable_normal_form(system: ActionAngleSystem, actions,
                                 period: float,
                                 rank_tol: float = DEFAULT_RANK_TOL
                                 ) -> IntegrableModelCheck:
    """Verify the torus return map's kernel structure by rank computation.

    Checks that ker(M - I) equals the angle directions exactly when the
    frequency derivative is invertible, that the drift direction escapes
    the image of the shell tangent exactly when the isochronicity bracket
    is nonzero, and that (M - I)^2 vanishes.
    """
    actions = np.asarray(actions, dtype=float)
    n = system.n
    deriv = system.frequency_derivative(actions)
    w = system.frequencies(actions)
    monodromy = model_monodromy(system, actions, period)
    matrix = monodromy.matrix
    shifted = matrix - np.eye(2 * n)

    det = float(np.linalg.det(deriv))
    scale = max(1.0, float(np.max(np.abs(deriv))) ** n)
    hess_invertible = abs(det) > rank_tol * scale

    kernel = nullspace(shifted, rank_tol,
                       scale=max(1.0, float(np.linalg.norm(matrix, 2))))
    angle_span = np.vstack([np.eye(n), np.zeros((n, n))])
    kernel_matches = subspaces_equal(kernel, angle_span, rank_tol)

    try:
        bracket = isochronicity_bracket(system, actions)
        bracket_nonzero = abs(bracket) > rank_tol * (1.0 + float(np.linalg.norm(w)) ** 2)
    except np.linalg.LinAlgError:
        bracket_nonzero = False

    grad = np.concatenate([np.zeros(n), w])
    shell_tangent = nullspace(grad.reshape(1, -1) / np.linalg.norm(grad), rank_tol)
    image = shifted @ shell_tangent
    drift = np.concatenate([w, np.zeros(n)])
    rank_image = subspace_rank(image, rank_tol)
    rank_with = subspace_rank(np.column_stack([image, drift]), rank_tol)
    drift_in_image = rank_with == rank_image

    nilpotent = float(np.max(np.abs(shifted @ shifted))) <= 1e-12 * max(
        1.0, float(np.max(np.abs(shifted))) ** 2)

    return IntegrableModelCheck(
        hessian_invertible=hess_invertible,
        kernel_equals_action_span=kernel_matches,
        bracket_nonzero=bracket_nonzero,
        drift_in_image=drift_in_image,
        nilpotent_square=nilpotent,
    )
