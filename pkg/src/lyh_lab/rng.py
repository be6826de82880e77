#!/usr/bin/env python3
"""Deterministic counter-based random streams."""

from typing import List

import numpy as np

RNG_ALGORITHM = "numpy.Philox-4x64"


def make_rng(seed: int | np.random.SeedSequence) -> np.random.Generator:
    """Create a Philox generator.

    Args:
        seed (int | np.random.SeedSequence): Root seed or spawned sequence

    Returns:
        np.random.Generator: The generator

    """
    return np.random.Generator(np.random.Philox(seed))


def spawn(seed: int, n: int) -> List[np.random.Generator]:
    """Derive n independent generators from a root seed, one per cell."""
    return [make_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]


def complex_normal(rng: np.random.Generator, *shape: int) -> np.ndarray:
    """Draw standard complex Gaussian entries."""
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def random_unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    """Draw a Haar-distributed unitary matrix."""
    q, r = np.linalg.qr(complex_normal(rng, n, n))
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_hermitian(rng: np.random.Generator, n: int) -> np.ndarray:
    """Draw a random Hermitian matrix."""
    a = complex_normal(rng, n, n)
    return (a + a.conj().T) / 2


def random_psd(rng: np.random.Generator, n: int, rank: int | None = None) -> np.ndarray:
    """Draw a random Hermitian positive semi-definite matrix of the given rank."""
    a = complex_normal(rng, n, n if rank is None else rank)
    return a @ a.conj().T


def cell_seeds(seed: int, n: int) -> List[int]:
    """Derive n integer seeds from a root seed; each one alone reproduces its cell."""
    return [int(s.generate_state(1, np.uint64)[0]) for s in np.random.SeedSequence(seed).spawn(n)]
