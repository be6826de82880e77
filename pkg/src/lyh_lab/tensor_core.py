#!/usr/bin/env python3
"""Dense complex linear algebra, multi-indices and the so(n, C) calculus."""

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, List, Sequence, Tuple

import numpy as np
from scipy.linalg import expm

MAX_LIE_DIM = 8


class DimensionError(Exception):
    """Raised in case of a shape or dimension mismatch."""

    pass


class InvariantError(Exception):
    """Raised when a symmetry or reality invariant does not hold."""

    pass


class TimeError(Exception):
    """Raised when a time argument is outside its domain."""

    pass


def sort_with_sign(seq: Sequence[int]) -> Tuple[int, Tuple[int, ...]]:
    """Sort a sequence of indices, tracking the permutation sign.

    Args:
        seq (Sequence[int]): Indices, possibly unsorted

    Returns:
        Tuple[int, Tuple[int, ...]]: The sign (0 on a repeated index) and the sorted tuple

    """
    items = list(seq)
    if len(set(items)) != len(items):
        return 0, tuple(sorted(items))
    sign = 1
    for i in range(len(items)):
        for j in range(len(items) - 1 - i):
            if items[j] > items[j + 1]:
                items[j], items[j + 1] = items[j + 1], items[j]
                sign = -sign
    return sign, tuple(items)


@lru_cache(maxsize=None)
def multi_indices(m: int, p: int) -> Tuple[Tuple[int, ...], ...]:
    """Return the strictly increasing p-tuples in range(m), lexicographically."""
    return tuple(itertools.combinations(range(m), p))


@lru_cache(maxsize=None)
def index_positions(m: int, p: int) -> Dict[Tuple[int, ...], int]:
    """Map each sorted p-tuple to its position in multi_indices(m, p)."""
    return {idx: k for k, idx in enumerate(multi_indices(m, p))}


@dataclass(frozen=True)
class MultiIndex:
    """Strictly increasing multi-index over range(m), zero-based."""

    m: int
    indices: Tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.indices) > self.m:
            raise DimensionError(f"Multi-index of length {len(self.indices)} in dimension {self.m}")
        if any(b <= a for a, b in zip(self.indices, self.indices[1:])):
            raise InvariantError(f"Multi-index {self.indices} is not strictly increasing")
        if any(i < 0 or i >= self.m for i in self.indices):
            raise DimensionError(f"Multi-index {self.indices} out of range for m={self.m}")

    @property
    def p(self) -> int:
        return len(self.indices)

    @property
    def position(self) -> int:
        return index_positions(self.m, self.p)[self.indices]

    @classmethod
    def from_unsorted(cls, m: int, seq: Sequence[int]) -> Tuple[int, "MultiIndex | None"]:
        """Build the sorted multi-index of seq together with the permutation sign."""
        sign, indices = sort_with_sign(seq)
        if sign == 0:
            return 0, None
        return sign, cls(m, indices)

    def complement(self) -> "MultiIndex":
        return MultiIndex(self.m, tuple(i for i in range(self.m) if i not in self.indices))


def hermitian_residual(a: np.ndarray) -> float:
    """Return max |a - a^H| for a square matrix."""
    return float(np.max(np.abs(a - a.conj().T), initial=0.0))


def hermitian_part(a: np.ndarray) -> np.ndarray:
    return (a + a.conj().T) / 2


def psd_min_eig(a: np.ndarray) -> float:
    """Return the smallest eigenvalue of the Hermitian part of a."""
    if a.size == 0:
        return 0.0
    return float(np.linalg.eigvalsh(hermitian_part(a))[0])


@dataclass(frozen=True)
class SkewC:
    """Complex n x n matrix with A = -A^T, identified with Lambda^2(C^n)."""

    matrix: np.ndarray

    def __post_init__(self) -> None:
        a = self.matrix
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DimensionError(f"Skew matrix must be square, got {a.shape}")
        scale = max(1.0, float(np.max(np.abs(a), initial=0.0)))
        if np.max(np.abs(a + a.T), initial=0.0) > 1e-12 * scale:
            raise InvariantError("Matrix is not skew-symmetric")

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def elementary(cls, n: int, a: int, b: int) -> "SkewC":
        """Return e_a wedge e_b as the matrix E_ab - E_ba."""
        e = np.zeros((n, n), dtype=complex)
        e[a, b] = 1.0
        e[b, a] = -1.0
        return cls(e)

    @classmethod
    def from_vec(cls, n: int, vec: np.ndarray) -> "SkewC":
        return cls(vec_to_skew(n, vec))

    def to_vec(self) -> np.ndarray:
        return skew_to_vec(self.matrix)


def skew_to_vec(a: np.ndarray) -> np.ndarray:
    """Coefficients of a skew matrix on the orthonormal basis e_a wedge e_b, a < b."""
    rows, cols = np.triu_indices(a.shape[0], k=1)
    return a[rows, cols]


def vec_to_skew(n: int, vec: np.ndarray) -> np.ndarray:
    rows, cols = np.triu_indices(n, k=1)
    a = np.zeros((n, n), dtype=complex)
    a[rows, cols] = vec
    a[cols, rows] = -np.asarray(vec)
    return a


def skew_inner(a: np.ndarray, b: np.ndarray) -> complex:
    """Bilinear inner product on Lambda^2, with e_a wedge e_b orthonormal."""
    return complex(np.sum(a * b) / 2)


def skew_basis(n: int) -> List[np.ndarray]:
    """Return the real orthonormal basis e_a wedge e_b, a < b, of so(n)."""
    return [SkewC.elementary(n, a, b).matrix.real for a, b in multi_indices(n, 2)]


def structure_constants(basis: Sequence[np.ndarray]) -> np.ndarray:
    """Return c[alpha, beta, gamma] = <[b_alpha, b_beta], b_gamma> for an orthonormal real basis."""
    d = len(basis)
    c = np.zeros((d, d, d))
    for i, bi in enumerate(basis):
        for j, bj in enumerate(basis):
            br = bi @ bj - bj @ bi
            for k, bk in enumerate(basis):
                c[i, j, k] = np.sum(br * bk) / 2
    return c


def ad(v: SkewC, w: SkewC) -> SkewC:
    """Return the bracket [v, w] = vw - wv.

    Args:
        v (SkewC): Left argument
        w (SkewC): Right argument

    Returns:
        SkewC: The bracket, again skew

    """
    if v.n != w.n:
        raise DimensionError(f"Cannot bracket n={v.n} with n={w.n}")
    return SkewC(v.matrix @ w.matrix - w.matrix @ v.matrix)


def ad_matrix(v: SkewC) -> np.ndarray:
    """Matrix of ad_v acting on row-major flattened n x n matrices."""
    eye = np.eye(v.n)
    return np.kron(v.matrix, eye) - np.kron(eye, v.matrix.T)


def exp_ad(v: SkewC, w: SkewC) -> np.ndarray:
    """Return e^{ad_v}(w) by exponentiating the adjoint matrix."""
    return (expm(ad_matrix(v)) @ w.matrix.reshape(-1)).reshape(v.n, v.n)


def big_ad(v: SkewC, w: SkewC) -> np.ndarray:
    """Return Ad(Exp(v)) w = Exp(v) w Exp(-v)."""
    return expm(v.matrix) @ w.matrix @ expm(-v.matrix)


def exp_ad_consistency(v: SkewC, tol: float) -> bool:
    """Check e^{ad_v} = Ad(Exp(v)) on the elementary basis of so(n, C).

    The residual |e^{ad_v} w - Ad(Exp(v)) w| is absolute.

    Args:
        v (SkewC): Generator
        tol (float): Absolute tolerance

    Returns:
        bool: True when every basis element agrees within tol

    """
    if v.n > MAX_LIE_DIM:
        raise DimensionError(f"Dense exponentials limited to n <= {MAX_LIE_DIM}")
    for a, b in multi_indices(v.n, 2):
        w = SkewC.elementary(v.n, a, b)
        rhs = big_ad(v, w)
        err = np.linalg.norm(exp_ad(v, w) - rhs)
        if err > tol:
            return False
    return True


def complex_structure(m: int) -> np.ndarray:
    """Return J = [[0, Id], [-Id, 0]] on R^{2m}."""
    eye = np.eye(m)
    zero = np.zeros((m, m))
    return np.block([[zero, eye], [-eye, zero]])


def oneone_to_skew(c: np.ndarray) -> SkewC:
    """Map a (1,1)-vector with coefficient matrix c to the J-commuting skew matrix.

    Args:
        c (np.ndarray): m x m complex coefficient matrix

    Returns:
        SkewC: The 2m x 2m block matrix [[a, -b], [b, a]], a = c - c^T, b = -i(c + c^T)

    """
    c = np.asarray(c, dtype=complex)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise DimensionError(f"Expected a square coefficient matrix, got {c.shape}")
    a = c - c.T
    b = -1j * (c + c.T)
    return SkewC(np.block([[a, -b], [b, a]]))
