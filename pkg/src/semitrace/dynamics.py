"""Hamiltonian systems on R^{2n}: flows, monodromy, actions, measures.

Systems expose value/gradient/Hessian callables plus optional closed-form
flow and linearization.  The numeric fallback integrates the flow and the
variational equation together with a high-order explicit Runge-Kutta
scheme (DOP853) at tight tolerances, then certifies the result through
energy drift and the symplectic defect of the monodromy.

Liouville measures come in two independent flavors: a seeded Monte Carlo
shell estimate with a reported standard error, and closed forms for
oscillator sub-shells.  Tests hold the two against each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .errors import EnergyDriftError, MonteCarloError, NonPeriodicError
from .symplectic import DEFAULT_SYMP_TOL, Monodromy, symplectic_j

DEFAULT_RTOL = 1e-12
DEFAULT_ATOL = 1e-12
DEFAULT_ENERGY_DRIFT = 1e-9
DEFAULT_PERIOD_TOL = 1e-8
NUMERIC_SYMP_TOL = 1e-7


class HamiltonianSystem:
    """Base class for smooth Hamiltonians on R^{2n}.

    Subclasses must implement :meth:`hamiltonian`, :meth:`gradient` and
    :meth:`hessian`; closed-form flow support is optional.
    """

    def __init__(self, n: int):
        self.n = int(n)

    def hamiltonian(self, z: np.ndarray) -> float:
        raise NotImplementedError

    def gradient(self, z: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def hessian(self, z: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def hamiltonian_batch(self, points: np.ndarray) -> np.ndarray:
        """Vectorized Hamiltonian over rows of ``points``; default loops."""
        return np.array([self.hamiltonian(z) for z in points])

    def flow_closed(self, z: np.ndarray, t: float) -> np.ndarray | None:
        """Closed-form flow when available, else None."""
        return None

    def monodromy_closed(self, z: np.ndarray, t: float) -> np.ndarray | None:
        """Closed-form linearized flow when available, else None."""
        return None

    def bounding_box(self, energy: float) -> np.ndarray | None:
        """Half-widths of a box containing {H <= energy}, or None."""
        return None

    def vector_field(self, z: np.ndarray) -> np.ndarray:
        return symplectic_j(self.n) @ self.gradient(z)

    def validate_derivatives(self, z: np.ndarray, step: float = 1e-6,
                             tol: float = 1e-4) -> None:
        """Cross-check gradient and Hessian against central differences."""
        z = np.asarray(z, dtype=float)
        grad = self.gradient(z)
        hess = self.hessian(z)
        fd_grad = np.zeros_like(z)
        for i in range(z.size):
            dz = np.zeros_like(z)
            dz[i] = step
            fd_grad[i] = (self.hamiltonian(z + dz) - self.hamiltonian(z - dz)) / (2 * step)
        scale = 1.0 + float(np.max(np.abs(grad)))
        if float(np.max(np.abs(grad - fd_grad))) > tol * scale:
            raise ValueError("gradient disagrees with finite differences")
        if float(np.max(np.abs(hess - hess.T))) > tol:
            raise ValueError("Hessian is not symmetric")
        fd_hess = np.zeros_like(hess)
        for i in range(z.size):
            dz = np.zeros_like(z)
            dz[i] = step
            fd_hess[:, i] = (self.gradient(z + dz) - self.gradient(z - dz)) / (2 * step)
        hscale = 1.0 + float(np.max(np.abs(hess)))
        if float(np.max(np.abs(hess - 0.5 * (fd_hess + fd_hess.T)))) > tol * hscale:
            raise ValueError("Hessian disagrees with finite differences")


class QuadraticHamiltonian(HamiltonianSystem):
    """Decoupled oscillator H = (|xi|^2 + sum w_j^2 x_j^2) / 2.

    All flow quantities have closed forms; the per-mode energies are first
    integrals and are exposed for orbit classification.
    """

    def __init__(self, frequencies):
        w = np.asarray(frequencies, dtype=float).reshape(-1)
        if w.size == 0 or np.any(w <= 0):
            raise ValueError("frequencies must be positive")
        super().__init__(w.size)
        self.frequencies = w

    def hamiltonian(self, z):
        x, xi = np.split(np.asarray(z, dtype=float), 2)
        return 0.5 * float(np.dot(xi, xi) + np.dot(self.frequencies**2 * x, x))

    def gradient(self, z):
        x, xi = np.split(np.asarray(z, dtype=float), 2)
        return np.concatenate([self.frequencies**2 * x, xi])

    def hessian(self, z):
        return np.diag(np.concatenate([self.frequencies**2,
                                       np.ones(self.n)]))

    def hamiltonian_batch(self, points):
        pts = np.asarray(points, dtype=float)
        x = pts[:, : self.n]
        xi = pts[:, self.n:]
        return 0.5 * (np.sum(xi**2, axis=1) + np.sum((self.frequencies**2) * x**2, axis=1))

    def flow_closed(self, z, t):
        x, xi = np.split(np.asarray(z, dtype=float), 2)
        w = self.frequencies
        c, s = np.cos(w * t), np.sin(w * t)
        return np.concatenate([c * x + (s / w) * xi, -w * s * x + c * xi])

    def monodromy_closed(self, z, t):
        w = self.frequencies
        c, s = np.cos(w * t), np.sin(w * t)
        m = np.zeros((2 * self.n, 2 * self.n))
        m[: self.n, : self.n] = np.diag(c)
        m[: self.n, self.n:] = np.diag(s / w)
        m[self.n:, : self.n] = np.diag(-w * s)
        m[self.n:, self.n:] = np.diag(c)
        return m

    def bounding_box(self, energy):
        if energy <= 0:
            raise ValueError("energy must be positive")
        amp = math.sqrt(2.0 * energy)
        return np.concatenate([amp / self.frequencies, np.full(self.n, amp)])

    def mode_energy(self, index: int, z: np.ndarray) -> float:
        x, xi = np.split(np.asarray(z, dtype=float), 2)
        w = self.frequencies[index]
        return 0.5 * float(xi[index] ** 2 + (w * x[index]) ** 2)

    def mode_energy_gradient(self, index: int, z: np.ndarray) -> np.ndarray:
        x, xi = np.split(np.asarray(z, dtype=float), 2)
        grad = np.zeros(2 * self.n)
        grad[index] = self.frequencies[index] ** 2 * x[index]
        grad[self.n + index] = xi[index]
        return grad


@dataclass(frozen=True)
class FlowResult:
    """Sampled trajectory with an energy-conservation certificate."""

    times: np.ndarray
    states: np.ndarray
    energy_drift: float

    @property
    def end_state(self) -> np.ndarray:
        return self.states[-1]


def _integrate(system: HamiltonianSystem, z0: np.ndarray, t: float,
               t_eval: np.ndarray | None, with_variational: bool,
               rtol: float, atol: float):
    two_n = 2 * system.n
    j = symplectic_j(system.n)

    if with_variational:
        def rhs(_, y):
            z = y[:two_n]
            m = y[two_n:].reshape(two_n, two_n)
            dz = j @ system.gradient(z)
            dm = j @ system.hessian(z) @ m
            return np.concatenate([dz, dm.ravel()])
        y0 = np.concatenate([z0, np.eye(two_n).ravel()])
    else:
        def rhs(_, y):
            return j @ system.gradient(y)
        y0 = z0

    sol = solve_ivp(rhs, (0.0, t), y0, method="DOP853", rtol=rtol, atol=atol,
                    t_eval=t_eval, dense_output=False)
    if not sol.success:
        raise RuntimeError(f"integration failed: {sol.message}")
    return sol


def flow(system: HamiltonianSystem, z0: np.ndarray, t: float,
         n_samples: int = 0, rtol: float = DEFAULT_RTOL,
         atol: float = DEFAULT_ATOL,
         energy_tol: float = DEFAULT_ENERGY_DRIFT,
         force_numeric: bool = False) -> FlowResult:
    """Flow ``z0`` for time ``t``, optionally sampling along the way.

    Closed-form flows are used when the system provides them unless
    ``force_numeric`` is set.  The energy drift over all samples is
    checked against ``energy_tol``.
    """
    z0 = np.asarray(z0, dtype=float).reshape(-1)
    times = np.linspace(0.0, t, max(2, n_samples + 2)) if n_samples else np.array([0.0, t])

    if not force_numeric and system.flow_closed(z0, t) is not None:
        states = np.array([system.flow_closed(z0, s) for s in times])
    else:
        sol = _integrate(system, z0, t, times, False, rtol, atol)
        states = sol.y.T
    energies = system.hamiltonian_batch(states)
    drift = float(np.max(np.abs(energies - energies[0])))
    if drift > energy_tol * (1.0 + abs(energies[0])):
        raise EnergyDriftError(f"energy drift {drift:.3e} exceeds budget")
    return FlowResult(times=times, states=states, energy_drift=drift)


def monodromy(system: HamiltonianSystem, z0: np.ndarray, t: float,
              rtol: float = DEFAULT_RTOL, atol: float = DEFAULT_ATOL,
              tol_symp: float | None = None,
              force_numeric: bool = False) -> Monodromy:
    """Linearized flow map at ``z0`` after time ``t`` as a Monodromy.

    The numeric route integrates the variational equation alongside the
    flow; its symplectic defect certificate is checked at a tolerance
    looser than the closed-form default because the integrator, not the
    formula, sets the error floor.
    """
    z0 = np.asarray(z0, dtype=float).reshape(-1)
    closed = None if force_numeric else system.monodromy_closed(z0, t)
    if closed is not None:
        tol = DEFAULT_SYMP_TOL if tol_symp is None else tol_symp
        return Monodromy(matrix=closed, base_point=z0, time=t, tol_symp=tol)
    sol = _integrate(system, z0, t, np.array([0.0, t]), True, rtol, atol)
    two_n = 2 * system.n
    matrix = sol.y[two_n:, -1].reshape(two_n, two_n)
    tol = NUMERIC_SYMP_TOL if tol_symp is None else tol_symp
    return Monodromy(matrix=matrix, base_point=z0, time=t, tol_symp=tol)


def action(system: HamiltonianSystem, z0: np.ndarray, t: float,
           n_nodes: int = 256, period_tol: float = DEFAULT_PERIOD_TOL) -> float:
    """Loop action integral of p dq along a periodic trajectory.

    The trajectory must close up after time ``t`` within ``period_tol``
    (relative to the point's norm); otherwise NonPeriodicError is raised.
    Gauss-Legendre quadrature of xi . dH/dxi along the orbit; for
    separable quadratic systems the closed form t * H(z0) is checked
    against the quadrature before returning.
    """
    z0 = np.asarray(z0, dtype=float).reshape(-1)
    end = flow(system, z0, t).end_state
    scale = 1.0 + float(np.linalg.norm(z0))
    gap = float(np.linalg.norm(end - z0))
    if gap > period_tol * scale:
        raise NonPeriodicError(
            f"trajectory misses its start by {gap:.3e} after time {t}")

    nodes, weights = np.polynomial.legendre.leggauss(n_nodes)
    times = 0.5 * t * (nodes + 1.0)

    closed_form = system.flow_closed(z0, 0.0) is not None
    if closed_form:
        states = np.array([system.flow_closed(z0, s) for s in times])
    else:
        order = np.argsort(times)
        sol = _integrate(system, z0, t, np.sort(times), False,
                         DEFAULT_RTOL, DEFAULT_ATOL)
        states = np.empty((times.size, 2 * system.n))
        states[order] = sol.y.T

    n = system.n
    integrand = np.array([
        float(np.dot(state[n:], system.gradient(state)[n:])) for state in states
    ])
    value = 0.5 * t * float(np.dot(weights, integrand))

    if isinstance(system, QuadraticHamiltonian):
        expected = t * system.hamiltonian(z0)
        if abs(value - expected) > 1e-8 * (1.0 + abs(expected)):
            raise AssertionError(
                f"action quadrature {value!r} disagrees with closed form {expected!r}")
    return value


@dataclass(frozen=True)
class LiouvilleEstimate:
    """Monte Carlo estimate of an energy-shell measure with its error bar."""

    value: float
    standard_error: float
    n_samples: int
    delta: float


def liouville_measure(system: HamiltonianSystem, energy: float,
                      n_samples: int = 200_000, seed: int = 0,
                      delta: float | None = None,
                      chunk: int = 65_536,
                      box: np.ndarray | None = None) -> LiouvilleEstimate:
    """Monte Carlo shell estimate of the Liouville measure at ``energy``.

    Estimates d/dE Vol{H <= E} by the fraction of box samples landing in
    the shell |H - E| <= delta.  Sampling runs in independent seeded
    chunks whose integer counts are reduced in a fixed order, so the
    result is reproducible for a given seed regardless of how the chunks
    are scheduled.
    """
    if delta is None:
        delta = 0.01 * max(abs(energy), 1.0)
    if box is None:
        box = system.bounding_box(energy + delta)
    if box is None:
        raise ValueError("system provides no bounding box; pass one explicitly")
    box = np.asarray(box, dtype=float)
    volume = float(np.prod(2.0 * box))

    n_chunks = (n_samples + chunk - 1) // chunk
    hits = 0
    drawn = 0
    for index in range(n_chunks):
        rng = np.random.default_rng([seed, index])
        size = min(chunk, n_samples - drawn)
        points = rng.uniform(-1.0, 1.0, size=(size, box.size)) * box
        values = system.hamiltonian_batch(points)
        hits += int(np.sum(np.abs(values - energy) <= delta))
        drawn += size

    if hits < 100:
        raise MonteCarloError(
            f"only {hits} shell hits in {drawn} samples; "
            "estimate variance is out of control")
    p = hits / drawn
    value = volume * p / (2.0 * delta)
    se = volume * math.sqrt(p * (1.0 - p) / drawn) / (2.0 * delta)
    return LiouvilleEstimate(value=value, standard_error=se,
                             n_samples=drawn, delta=delta)


def oscillator_shell_measure(frequencies, energy: float) -> float:
    """Closed-form Liouville measure of a decoupled oscillator shell.

    d/dE of (2 pi)^q E^q / (q! prod w_j) for the q listed frequencies.
    """
    w = np.asarray(frequencies, dtype=float).reshape(-1)
    q = w.size
    if q == 0:
        raise ValueError("need at least one frequency")
    if energy <= 0:
        raise ValueError("energy must be positive")
    return (2.0 * math.pi) ** q * energy ** (q - 1) / (
        math.factorial(q - 1) * float(np.prod(w)))


def resonant_shell_measure(frequencies, resonant_indices, energy: float) -> float:
    """Liouville measure of a resonant sub-oscillator shell.

    The modes listed in ``resonant_indices`` span a symplectic subspace on
    which the Hamiltonian restricts to a smaller oscillator; the full
    gradient is tangent to that subspace along it, so the measure is the
    sub-oscillator's closed form.
    """
    w = np.asarray(frequencies, dtype=float).reshape(-1)
    indices = sorted(set(int(i) for i in resonant_indices))
    if not indices:
        raise ValueError("resonant index set is empty")
    if any(i < 0 or i >= w.size for i in indices):
        raise ValueError("resonant index out of range")
    return oscillator_shell_measure(w[indices], energy)
