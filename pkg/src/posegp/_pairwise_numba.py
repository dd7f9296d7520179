"""Numba-compiled pairwise reductions used by Gram assembly.

Same contracts as _pairwise_numpy.py.  Rows are computed in parallel;
every (i, j) entry is independent (no cross-iteration reductions), so
the result is bit-identical to a sequential evaluation.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange


@njit(parallel=True, cache=True)
def sqdist(A, B):
    n = A.shape[0]
    m = B.shape[0]
    out = np.empty((n, m))
    for i in prange(n):
        for j in range(m):
            acc = 0.0
            for k in range(A.shape[1]):
                d = A[i, k] - B[j, k]
                acc += d * d
            out[i, j] = acc
    return out


@njit(parallel=True, cache=True)
def dot(A, B):
    n = A.shape[0]
    m = B.shape[0]
    out = np.empty((n, m))
    for i in prange(n):
        for j in range(m):
            acc = 0.0
            for k in range(A.shape[1]):
                acc += A[i, k] * B[j, k]
            out[i, j] = acc
    return out


@njit(parallel=True, cache=True)
def rot_frob2(R1, R2):
    n = R1.shape[0]
    m = R2.shape[0]
    out = np.empty((n, m))
    for i in prange(n):
        for j in range(m):
            acc = 0.0
            for a in range(3):
                for b in range(3):
                    d = R1[i, a, b] - R2[j, a, b]
                    acc += d * d
            out[i, j] = 0.5 * acc
    return out


@njit(parallel=True, cache=True)
def rot_frob2_weighted(R1, R2, weights):
    n = R1.shape[0]
    m = R2.shape[0]
    out = np.empty((n, m))
    for i in prange(n):
        for j in range(m):
            acc = 0.0
            for a in range(3):
                row = 0.0
                for b in range(3):
                    d = R1[i, a, b] - R2[j, a, b]
                    row += d * d
                acc += weights[a] * row
            out[i, j] = 0.5 * acc
    return out


@njit(parallel=True, cache=True)
def rot_dot(R1, R2):
    n = R1.shape[0]
    m = R2.shape[0]
    out = np.empty((n, m))
    for i in prange(n):
        for j in range(m):
            acc = 0.0
            for a in range(3):
                for b in range(3):
                    acc += R1[i, a, b] * R2[j, a, b]
            out[i, j] = acc
    return out


@njit(parallel=True, cache=True)
def quat_dist(Q1, Q2):
    n = Q1.shape[0]
    m = Q2.shape[0]
    out = np.empty((n, m))
    for i in prange(n):
        for j in range(m):
            acc = 0.0
            for k in range(4):
                d = Q1[i, k] - Q2[j, k]
                acc += d * d
            out[i, j] = 2.0 * np.sqrt(acc)
    return out


@njit(parallel=True, cache=True)
def periodic_arg(a1, a2, lengthscale):
    n = a1.shape[0]
    m = a2.shape[0]
    scale = 2.0 / (lengthscale * lengthscale)
    out = np.empty((n, m))
    for i in prange(n):
        for j in range(m):
            s = np.sin(0.5 * (a1[i] - a2[j]))
            out[i, j] = scale * (s * s)
    return out


@njit(parallel=True, cache=True)
def euler_arg(E1, E2, lengthscales):
    n = E1.shape[0]
    m = E2.shape[0]
    inv = 2.0 / (lengthscales * lengthscales)
    out = np.empty((n, m))
    for i in prange(n):
        for j in range(m):
            acc = 0.0
            for k in range(3):
                s = np.sin(0.5 * (E1[i, k] - E2[j, k]))
                acc += inv[k] * (s * s)
            out[i, j] = acc
    return out
