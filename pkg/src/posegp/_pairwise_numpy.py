"""Pure-numpy pairwise reductions used by Gram assembly.

Reference implementations of the numba loops in _pairwise_numba.py;
each returns an (n, m) float64 matrix.
"""

from __future__ import annotations

import numpy as np


def sqdist(A, B):
    """Squared Euclidean distance between rows of A (n,3) and B (m,3)."""
    d = A[:, None, :] - B[None, :, :]
    return np.sum(d * d, axis=-1)


def dot(A, B):
    """Row dot products: out[i, j] = A[i] . B[j]."""
    return A @ B.T


def rot_frob2(R1, R2):
    """0.5 * ||R1_i - R2_j||_F^2 over stacked rotations (n,3,3), (m,3,3).

    Equals tr(I - R1_i^T R2_j) for orthonormal inputs; exactly 0 for
    bitwise-equal pairs.
    """
    d = R1[:, None, :, :] - R2[None, :, :, :]
    return 0.5 * np.sum(d * d, axis=(-2, -1))


def rot_frob2_weighted(R1, R2, weights):
    """0.5 * sum_a w_a * sum_b (R1_i - R2_j)[a,b]^2 (row-weighted Frobenius).

    Equals tr(Lambda - R1_i^T Lambda R2_j) with Lambda = diag(weights).
    """
    d = R1[:, None, :, :] - R2[None, :, :, :]
    return 0.5 * np.einsum("ijab,a->ij", d * d, weights)


def rot_dot(R1, R2):
    """tr(R1_i^T R2_j) = elementwise dot of the stacked matrices."""
    return np.einsum("iab,jab->ij", R1, R2)


def quat_dist(Q1, Q2):
    """2 * ||q1_i - q2_j|| over stacked quaternions (n,4), (m,4)."""
    d = Q1[:, None, :] - Q2[None, :, :]
    return 2.0 * np.sqrt(np.sum(d * d, axis=-1))


def periodic_arg(a1, a2, lengthscale):
    """2 sin^2((a_i - a_j)/2) / lengthscale^2 over angle vectors."""
    s = np.sin(0.5 * (a1[:, None] - a2[None, :]))
    return (2.0 / (lengthscale * lengthscale)) * (s * s)


def euler_arg(E1, E2, lengthscales):
    """sum_k 2 sin^2((E1_ik - E2_jk)/2) / lengthscales_k^2."""
    s = np.sin(0.5 * (E1[:, None, :] - E2[None, :, :]))
    inv = 2.0 / (lengthscales * lengthscales)
    return np.einsum("ijk,k->ij", s * s, inv)
