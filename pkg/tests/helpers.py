"""Shared numeric helpers for the test suite."""

import numpy as np
from scipy.linalg import sqrtm


def uhlmann_fidelity(rho, sigma):
    """Fidelity F(rho, sigma) = (tr sqrt(sqrt(rho) sigma sqrt(rho)))^2."""
    a = np.asarray(rho, dtype=complex)
    b = np.asarray(sigma, dtype=complex)
    root = sqrtm(a)
    inner = sqrtm(root @ b @ root)
    val = np.real(np.trace(inner)) ** 2
    return float(min(1.0, max(0.0, val)))


def max_singlet_overlap_grid(rho, coarse=24, refine_rounds=3, refine=9):
    """Maximal overlap with (U x 1)|psi-> found by Euler-angle grid search.

    Independent of the analytic eigenvalue route: scans U = Rz(a) Ry(b) Rz(c)
    on a coarse grid, then shrinks the grid around the best point.
    """
    rho = np.asarray(rho, dtype=complex)
    psi_minus = np.array([0.0, 1.0, -1.0, 0.0]) / np.sqrt(2.0)

    def overlap(a, b, c):
        rz1 = np.array([[np.exp(-0.5j * a), 0.0], [0.0, np.exp(0.5j * a)]])
        ry = np.array([[np.cos(b / 2.0), -np.sin(b / 2.0)],
                       [np.sin(b / 2.0), np.cos(b / 2.0)]])
        rz2 = np.array([[np.exp(-0.5j * c), 0.0], [0.0, np.exp(0.5j * c)]])
        u = rz1 @ ry @ rz2
        ket = np.kron(u, np.eye(2)) @ psi_minus
        return float(np.real(ket.conj() @ rho @ ket))

    spans = [2.0 * np.pi, np.pi, 2.0 * np.pi]
    centers = [np.pi, np.pi / 2.0, np.pi]
    best = (-1.0, centers)
    grids = [np.linspace(c - s / 2.0, c + s / 2.0, coarse) for c, s in zip(centers, spans)]
    for a in grids[0]:
        for b in grids[1]:
            for c in grids[2]:
                v = overlap(a, b, c)
                if v > best[0]:
                    best = (v, [a, b, c])
    for _ in range(refine_rounds):
        centers = best[1]
        spans = [s / 4.0 for s in spans]
        grids = [np.linspace(c - s / 2.0, c + s / 2.0, refine) for c, s in zip(centers, spans)]
        for a in grids[0]:
            for b in grids[1]:
                for c in grids[2]:
                    v = overlap(a, b, c)
                    if v > best[0]:
                        best = (v, [a, b, c])
    return best[0]


def random_density_matrix(rng, dim=4):
    """Wishart-distributed random density matrix."""
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    m = g @ g.conj().T
    return m / np.trace(m).real
