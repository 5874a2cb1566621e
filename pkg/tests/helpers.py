"""Shared corpus builders for the test suite.

Random symplectic matrices are assembled from canonical 2x2 blocks with
known unit-eigenvalue structure, glued as symplectic direct sums and
conjugated by random symplectic similarity transforms.  Keeping the
block recipe explicit gives every instance an independently known
dim E1, which the structural tests use as their oracle.
"""

import numpy as np
from scipy.linalg import expm

from semitrace import ActionAngleSystem, Monodromy, resonant_indices, symplectic_j


def random_symplectic(rng, n, scale=0.6):
    """Random element of Sp(2n) as a product of two Hamiltonian exponentials."""
    dim = 2 * n
    j = symplectic_j(n)
    total = np.eye(dim)
    for _ in range(2):
        sym = rng.normal(size=(dim, dim))
        sym = scale * (sym + sym.T) / 2.0
        total = total @ expm(j @ sym)
    return total


def unit_block():
    return np.eye(2), 2


def shear_block(a):
    # Unipotent: eigenvalue 1 with a 2x2 Jordan cell.
    return np.array([[1.0, a], [0.0, 1.0]]), 2


def rotation_block(theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, s], [-s, c]]), 0


def hyperbolic_block(a):
    return np.diag([np.exp(a), np.exp(-a)]), 0


def symplectic_direct_sum(blocks):
    """Interleave 2x2 symplectic blocks into the (q..., p...) ordering."""
    n = len(blocks)
    out = np.zeros((2 * n, 2 * n))
    for i, block in enumerate(blocks):
        out[i, i] = block[0, 0]
        out[i, n + i] = block[0, 1]
        out[n + i, i] = block[1, 0]
        out[n + i, n + i] = block[1, 1]
    return out


def structured_monodromy(rng, n, tol_symp=1e-8):
    """(Monodromy, expected dim E1) with block-wise known spectrum.

    Angles and stretches stay away from 0 and pi so no eigenvalue sits
    near +1 except the ones placed there on purpose; the rank cuts the
    package takes are then unambiguous.
    """
    blocks, e1_dim = [], 0
    for _ in range(n):
        kind = rng.integers(0, 4)
        if kind == 0:
            block, d = unit_block()
        elif kind == 1:
            block, d = shear_block(rng.uniform(0.5, 2.0) * rng.choice([-1, 1]))
        elif kind == 2:
            block, d = rotation_block(rng.uniform(0.4, np.pi - 0.4))
        else:
            block, d = hyperbolic_block(rng.uniform(0.3, 1.2))
        blocks.append(block)
        e1_dim += d
    raw = symplectic_direct_sum(blocks)
    basis = random_symplectic(rng, n, scale=0.4)
    matrix = basis @ raw @ np.linalg.inv(basis)
    mono = Monodromy(matrix=matrix, base_point=np.zeros(2 * n),
                     time=1.0, tol_symp=tol_symp)
    return mono, e1_dim


def shell_point(system, period, energy, rng):
    """Random point of the T-periodic set on the energy shell.

    Energy splits over the resonant modes by a Dirichlet draw; each
    excited mode gets a uniform angle via x = sqrt(2 E_j) sin(theta) / w,
    xi = sqrt(2 E_j) cos(theta).  Non-resonant modes stay at rest, which
    is what membership in the T-periodic set requires.
    """
    w = system.frequencies
    n = system.n
    if abs(period) <= 1e-9:
        resonant = list(range(n))
    else:
        resonant = sorted(resonant_indices(w, period))
    shares = rng.dirichlet(np.ones(len(resonant)))
    mode_energy = np.zeros(n)
    for share, j in zip(shares, resonant):
        mode_energy[j] = share * energy
    theta = rng.uniform(0.0, 2.0 * np.pi, size=n)
    x = np.sqrt(2.0 * mode_energy) / w * np.sin(theta)
    xi = np.sqrt(2.0 * mode_energy) * np.cos(theta)
    return np.concatenate([x, xi])


def perturbed_quadratic(rng, n, quartic_scale=0.05):
    """Positive-definite quadratic plus a bounded diagonal quartic."""
    basis, _ = np.linalg.qr(rng.normal(size=(n, n)))
    diag = rng.uniform(0.5, 2.0, size=n)
    a = basis @ np.diag(diag) @ basis.T
    b = rng.uniform(-quartic_scale, quartic_scale, size=n)

    def value(actions):
        return 0.5 * float(actions @ a @ actions) + float(b @ actions**4)

    def grad(actions):
        return a @ actions + 4.0 * b * actions**3

    def hess(actions):
        return a + np.diag(12.0 * b * actions**2)

    domain = np.tile([-4.0, 4.0], (n, 1))
    return ActionAngleSystem(n=n, value=value, grad=grad, hess=hess,
                             domain=domain)


def isotropic_flag(e1, rng, rank_tol=1e-8):
    """Nested pair W inside V inside span(e1) with the form vanishing on W x V.

    Greedily grows an isotropic subspace V of E1: each new direction is
    drawn from E1 cut by the form-orthogonal complement of the current V,
    minus its Euclidean projection onto V.  W is a random-length prefix,
    so the pair satisfies every hypothesis of the dimension bound.
    """
    dim = e1.shape[0]
    j = symplectic_j(dim // 2)
    v = np.zeros((dim, 0))
    while True:
        if v.shape[1]:
            constraints = (j @ v).T @ e1
            _, s, vh = np.linalg.svd(constraints)
            rank = int(np.sum(s > rank_tol * max(1.0, s[0]))) if s.size else 0
            inside = e1 @ vh[rank:].conj().T
        else:
            inside = e1
        if inside.shape[1] == 0:
            break
        resid = inside - v @ (v.T @ inside)
        uu, ss, _ = np.linalg.svd(resid, full_matrices=False)
        if ss.size == 0 or ss[0] < 1e-6:
            break
        v = np.column_stack([v, uu[:, 0]])
    w_cols = int(rng.integers(0, v.shape[1] + 1))
    return v, v[:, :w_cols]
