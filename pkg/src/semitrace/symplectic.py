"""Certified linear algebra on phase space R^{2n}.

Coordinates are ordered (x_1..x_n, xi_1..xi_n) and the symplectic form is
w0(a, b) = <J a, b> with J = [[0, I], [-I, 0]].  All rank decisions go
through singular values with a relative threshold; a decision where two
singular values straddle the threshold within a factor of ten raises
RankInstabilityError instead of silently guessing a dimension.

The central objects are the monodromy matrix of a periodic trajectory and
the splitting of phase space into the generalized unit eigenspace E1 and
its symplectically natural complement V1 = (J E1)^perp, which carries the
reduced return map.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .errors import RankInstabilityError, SymplecticityError

DEFAULT_RANK_TOL = 1e-8
DEFAULT_SYMP_TOL = 1e-8

# A rank decision is trusted only when the singular values on either side
# of the cut differ by at least this factor.
RANK_GAP_FACTOR = 10.0


def symplectic_j(n: int) -> np.ndarray:
    """Canonical symplectic matrix J = [[0, I], [-I, 0]] on R^{2n}."""
    j = np.zeros((2 * n, 2 * n))
    j[:n, n:] = np.eye(n)
    j[n:, :n] = -np.eye(n)
    return j


def symplectic_defect(matrix: np.ndarray) -> float:
    """Max-norm of M^T J M - J; zero exactly when M is symplectic."""
    two_n = matrix.shape[0]
    if matrix.shape != (two_n, two_n) or two_n % 2:
        raise ValueError("matrix must be square of even dimension")
    j = symplectic_j(two_n // 2)
    return float(np.max(np.abs(matrix.T @ j @ matrix - j)))


@dataclass(frozen=True)
class Monodromy:
    """Linearization of a flow map at a base point, with certificate.

    Parameters
    ----------
    matrix : (2n, 2n) array
        The linearized flow map.
    base_point : (2n,) array
        Phase-space point where the linearization was taken.
    time : float
        Elapsed flow time.
    tol_symp : float, optional
        Construction-time bound on the symplectic defect.  Numerically
        integrated monodromies may pass a looser bound than the default.
    """

    matrix: np.ndarray
    base_point: np.ndarray
    time: float
    tol_symp: float = DEFAULT_SYMP_TOL
    symplectic_defect: float = dataclasses.field(init=False)

    def __post_init__(self):
        matrix = np.asarray(self.matrix, dtype=float)
        base_point = np.asarray(self.base_point, dtype=float)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ValueError("monodromy matrix must be square")
        if matrix.shape[0] % 2 or matrix.shape[0] != base_point.size:
            raise ValueError("matrix and base point dimensions disagree")
        defect = symplectic_defect(matrix)
        if not defect <= self.tol_symp:
            raise SymplecticityError(
                f"symplectic defect {defect:.3e} exceeds tolerance {self.tol_symp:.1e}"
            )
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "base_point", base_point)
        object.__setattr__(self, "symplectic_defect", defect)

    @property
    def n(self) -> int:
        return self.matrix.shape[0] // 2


def _rank_from_singular_values(s: np.ndarray, tol: float) -> int:
    """Count singular values above ``tol``, refusing ambiguous cuts."""
    rank = int(np.sum(s > tol))
    if 0 < rank < s.size:
        below = s[rank]
        if below > 0.0 and s[rank - 1] < RANK_GAP_FACTOR * below:
            raise RankInstabilityError(
                "singular values straddle the rank threshold: "
                f"{s[rank - 1]:.3e} vs {below:.3e} at tol {tol:.3e}"
            )
    return rank


def nullspace(matrix: np.ndarray, rank_tol: float = DEFAULT_RANK_TOL,
              scale: float = 1.0) -> np.ndarray:
    """Orthonormal basis of the kernel, columns in a (dim, k) array.

    The rank threshold is ``rank_tol`` times the larger of the top singular
    value and ``scale``; passing the natural scale of the matrix family
    keeps near-zero matrices from being read as full rank.
    """
    matrix = np.atleast_2d(matrix)
    if matrix.shape[0] == 0:
        return np.eye(matrix.shape[1])
    _, s, vh = np.linalg.svd(matrix)
    top = s[0] if s.size else 0.0
    tol = rank_tol * max(top, scale)
    rank = _rank_from_singular_values(s, tol)
    return vh[rank:].conj().T


def orthonormal_span(vectors: np.ndarray, rank_tol: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """Orthonormal basis of the column span, dropping dependent columns."""
    vectors = np.atleast_2d(vectors)
    if vectors.shape[1] == 0:
        return vectors.reshape(vectors.shape[0], 0)
    u, s, _ = np.linalg.svd(vectors, full_matrices=False)
    top = s[0] if s.size else 0.0
    tol = rank_tol * max(top, 1.0)
    rank = _rank_from_singular_values(s, tol)
    return u[:, :rank]


def subspace_rank(vectors: np.ndarray, rank_tol: float = DEFAULT_RANK_TOL) -> int:
    """Numerical rank of a set of column vectors."""
    return orthonormal_span(vectors, rank_tol).shape[1]


def intersect_subspaces(basis_a: np.ndarray, basis_b: np.ndarray,
                        rank_tol: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """Orthonormal basis of span(A) intersect span(B)."""
    if basis_a.shape[1] == 0 or basis_b.shape[1] == 0:
        return np.zeros((basis_a.shape[0], 0))
    # Pairs (u, v) with A u = B v parametrize the intersection.
    stacked = np.hstack([basis_a, -basis_b])
    pairs = nullspace(stacked, rank_tol)
    vectors = basis_a @ pairs[: basis_a.shape[1]]
    return orthonormal_span(vectors, rank_tol)


def subspace_contains(big: np.ndarray, small: np.ndarray,
                      rank_tol: float = DEFAULT_RANK_TOL) -> bool:
    """Whether span(small) lies inside span(big), columns orthonormalized."""
    if small.shape[1] == 0:
        return True
    q = orthonormal_span(big, rank_tol)
    s = orthonormal_span(small, rank_tol)
    residual = s - q @ (q.T @ s)
    return float(np.max(np.abs(residual))) <= 100.0 * rank_tol


def subspaces_equal(basis_a: np.ndarray, basis_b: np.ndarray,
                    rank_tol: float = DEFAULT_RANK_TOL) -> bool:
    a = orthonormal_span(basis_a, rank_tol)
    b = orthonormal_span(basis_b, rank_tol)
    if a.shape[1] != b.shape[1]:
        return False
    return subspace_contains(a, b, rank_tol) and subspace_contains(b, a, rank_tol)


def generalized_eigenspace(monodromy: Monodromy, eigenvalue: complex,
                           rank_tol: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """Orthonormal basis of the algebraic eigenspace of ``eigenvalue``.

    Kernels of increasing powers of (M - lambda I) are taken until the
    dimension stabilizes; the basis of the final kernel is returned.  The
    result is the zero-width array when ``eigenvalue`` is not in the
    spectrum.
    """
    matrix = monodromy.matrix
    dim = matrix.shape[0]
    if abs(complex(eigenvalue).imag) > 0:
        shifted = matrix.astype(complex) - eigenvalue * np.eye(dim)
    else:
        shifted = matrix - float(np.real(eigenvalue)) * np.eye(dim)
    basis = np.zeros((dim, 0))
    power = np.eye(dim, dtype=shifted.dtype)
    prev_dim = -1
    for _ in range(dim):
        power = power @ shifted
        basis = nullspace(power, rank_tol)
        if basis.shape[1] == prev_dim:
            break
        prev_dim = basis.shape[1]
        if prev_dim == dim:
            break
    return basis


@dataclass(frozen=True)
class EigenspaceSplit:
    """Splitting R^{2n} = E1 (+) V1 attached to a monodromy matrix.

    ``e1`` spans the generalized unit eigenspace, ``v1`` its complement
    (J E1)^perp, both invariant under the monodromy.  The shell-refined
    sub-bases (kernel_in_shell, isotropic_core, residual_shell) are filled
    by :func:`shell_refine` and stay None until then.
    """

    monodromy: Monodromy
    e1: np.ndarray
    v1: np.ndarray
    rank_tol: float
    kernel_in_shell: np.ndarray | None = None
    isotropic_core: np.ndarray | None = None
    residual_shell: np.ndarray | None = None

    @property
    def dim_e1(self) -> int:
        return self.e1.shape[1]

    @property
    def dim_v1(self) -> int:
        return self.v1.shape[1]

    @property
    def k(self) -> int:
        """dim of ker(M - I) intersected with the energy-shell tangent."""
        if self.kernel_in_shell is None:
            raise ValueError("split has not been shell-refined")
        return self.kernel_in_shell.shape[1]

    @property
    def r(self) -> int:
        """dim of the isotropic core of the shell kernel."""
        if self.isotropic_core is None:
            raise ValueError("split has not been shell-refined")
        return self.isotropic_core.shape[1]


def invariant_split(monodromy: Monodromy,
                    rank_tol: float = DEFAULT_RANK_TOL) -> EigenspaceSplit:
    """Compute the invariant splitting E1 (+) V1 for a monodromy.

    Postconditions checked here: dim E1 + dim V1 = 2n, dim E1 is even,
    both spaces are invariant under M up to residual 10 * rank_tol, and
    the two bases stacked side by side are numerically independent.
    """
    matrix = monodromy.matrix
    dim = matrix.shape[0]
    j = symplectic_j(dim // 2)
    e1 = generalized_eigenspace(monodromy, 1.0, rank_tol)
    if e1.shape[1] == 0:
        v1 = np.eye(dim)
    else:
        v1 = nullspace((j @ e1).T, rank_tol)

    if e1.shape[1] + v1.shape[1] != dim:
        raise RankInstabilityError(
            f"split dimensions {e1.shape[1]} + {v1.shape[1]} != {dim}"
        )
    if e1.shape[1] % 2:
        raise RankInstabilityError("generalized unit eigenspace has odd dimension")

    scale = max(1.0, float(np.linalg.norm(matrix, 2)))
    for basis in (e1, v1):
        if basis.shape[1] == 0:
            continue
        image = matrix @ basis
        residual = image - basis @ (basis.T @ image)
        if float(np.max(np.abs(residual))) > 10.0 * rank_tol * scale:
            raise RankInstabilityError("computed split is not invariant under M")

    stacked = np.hstack([e1, v1])
    cond = np.linalg.cond(stacked)
    if not cond < 1e6:
        raise RankInstabilityError(
            f"E1 and V1 are numerically dependent (cond {cond:.3e})"
        )
    return EigenspaceSplit(monodromy=monodromy, e1=e1, v1=v1, rank_tol=rank_tol)


def shell_refine(split: EigenspaceSplit, grad_h: np.ndarray) -> EigenspaceSplit:
    """Fill the shell-dependent sub-bases of a split.

    ``grad_h`` is the Hamiltonian gradient at the base point; it fixes the
    energy-shell tangent space as its orthogonal complement.  Computes

    * kernel_in_shell: ker(M - I) intersect grad^perp,
    * isotropic_core: the radical of the symplectic form restricted to it,
    * residual_shell: (kernel_in_shell)^perp intersect (E1 intersect grad^perp),

    the last being the space whose twisted determinant enters the general
    density formula.
    """
    monodromy = split.monodromy
    matrix = monodromy.matrix
    dim = matrix.shape[0]
    rank_tol = split.rank_tol
    grad = np.asarray(grad_h, dtype=float).reshape(-1)
    norm = np.linalg.norm(grad)
    if norm == 0.0:
        raise ValueError("gradient vanishes; point is critical")
    shell_tangent = nullspace(grad.reshape(1, -1) / norm, rank_tol)

    plain_kernel = nullspace(matrix - np.eye(dim), rank_tol,
                             scale=max(1.0, float(np.linalg.norm(matrix, 2))))
    kernel_in_shell = intersect_subspaces(plain_kernel, shell_tangent, rank_tol)

    j = symplectic_j(dim // 2)
    if kernel_in_shell.shape[1] == 0:
        core = np.zeros((dim, 0))
    else:
        gram = (j @ kernel_in_shell).T @ kernel_in_shell
        coeffs = nullspace(gram, rank_tol)
        core = orthonormal_span(kernel_in_shell @ coeffs, rank_tol)

    e1_in_shell = intersect_subspaces(split.e1, shell_tangent, rank_tol)
    if kernel_in_shell.shape[1] == 0:
        residual = e1_in_shell
    else:
        residual = intersect_subspaces(
            nullspace(kernel_in_shell.T, rank_tol), e1_in_shell, rank_tol)

    return dataclasses.replace(
        split,
        kernel_in_shell=kernel_in_shell,
        isotropic_core=core,
        residual_shell=residual,
    )


def restricted_det(operator: np.ndarray, basis: np.ndarray,
                   rank_tol: float = DEFAULT_RANK_TOL) -> float:
    """Determinant of an operator restricted to an invariant subspace.

    ``basis`` must be orthonormal and (numerically) invariant under the
    operator; the restriction is represented as B^T A B.  The empty
    subspace gives 1.0.  A result with magnitude below ``rank_tol``
    signals that the subspace leaked a unit eigenvalue and raises.
    """
    basis = np.atleast_2d(basis)
    if basis.shape[1] == 0:
        return 1.0
    image = operator @ basis
    restricted = basis.T @ image
    residual = image - basis @ restricted
    scale = max(1.0, float(np.linalg.norm(operator, 2)))
    if float(np.max(np.abs(residual))) > 10.0 * rank_tol * scale:
        raise ValueError("subspace is not invariant under the operator")
    value = float(np.linalg.det(restricted))
    if abs(value) < rank_tol:
        raise RankInstabilityError(
            f"restricted determinant {value:.3e} is below tolerance; "
            "the complement retains a unit eigenvalue"
        )
    return value


def restricted_form_det(basis: np.ndarray) -> float:
    """Determinant of the symplectic form restricted to span(basis).

    The Gram matrix G[i, j] = w0(b_i, b_j) is evaluated in a defensively
    re-orthonormalized basis, so the value only depends on the subspace.
    """
    basis = np.atleast_2d(basis)
    if basis.shape[1] == 0:
        return 1.0
    q = orthonormal_span(basis)
    if q.shape[1] != basis.shape[1]:
        raise ValueError("basis columns are numerically dependent")
    j = symplectic_j(q.shape[0] // 2)
    gram = (j @ q).T @ q
    return float(np.linalg.det(gram))


def orthogonal_projection(basis: np.ndarray, dim: int | None = None) -> np.ndarray:
    """Orthogonal projection matrix onto the span of the columns."""
    basis = np.atleast_2d(basis)
    if dim is None:
        dim = basis.shape[0]
    if basis.shape[1] == 0:
        return np.zeros((dim, dim))
    q = orthonormal_span(basis)
    return q @ q.T


def isotropic_pair_bound(monodromy: Monodromy, v_basis: np.ndarray,
                         w_basis: np.ndarray,
                         rank_tol: float = DEFAULT_RANK_TOL) -> bool:
    """Dimension bound dim E1 >= dim V + dim W for a w0-orthogonal pair.

    Preconditions (checked): W and V lie in the generalized unit
    eigenspace E1, W inside V, and w0(x, y) = 0 for all x in W, y in V.
    Violations raise ValueError; the return value is the truth of the
    bound itself, which holds for every symplectic matrix.
    """
    e1 = generalized_eigenspace(monodromy, 1.0, rank_tol)
    v_basis = orthonormal_span(np.atleast_2d(v_basis), rank_tol)
    w_basis = orthonormal_span(np.atleast_2d(w_basis), rank_tol)
    if not subspace_contains(v_basis, w_basis, rank_tol):
        raise ValueError("W is not contained in V")
    if not subspace_contains(e1, v_basis, rank_tol):
        raise ValueError("V is not contained in the generalized unit eigenspace")
    if v_basis.shape[1] and w_basis.shape[1]:
        j = symplectic_j(monodromy.n)
        pairing = (j @ w_basis).T @ v_basis
        if float(np.max(np.abs(pairing))) > 100.0 * rank_tol:
            raise ValueError("W and V are not w0-orthogonal")
    return e1.shape[1] >= v_basis.shape[1] + w_basis.shape[1]
