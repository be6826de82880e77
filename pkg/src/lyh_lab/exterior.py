#!/usr/bin/env python3
"""Exterior algebra of (p,q)-forms on C^m in a unitary frame.

A form is stored as phi = sum c_{IJ} dz^I ^ dzbar^J over sorted multi-indices.
Coefficients may be complex scalars or numpy arrays of a common shape (e.g.
Fourier modes or sample points); every operation acts coefficient-wise.
"""

from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, Tuple

import numpy as np

from .tensor_core import DimensionError, multi_indices, sort_with_sign

Key = Tuple[Tuple[int, ...], Tuple[int, ...]]
Coeff = complex | np.ndarray


class DegreeError(Exception):
    """Raised in case of a bidegree underflow or overflow."""

    pass


def _count_below(indices: Iterable[int], j: int) -> int:
    return sum(1 for i in indices if i < j)


def eps(p: int) -> int:
    """Return (-1)^{p(p-1)/2}, the reordering sign of dz^I ^ dzbar^I pairs."""
    return -1 if (p * (p - 1) // 2) % 2 else 1


@dataclass(frozen=True)
class Form:
    """Differential form at a point (or coefficient field) on C^m."""

    m: int
    terms: Dict[Key, Coeff] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for (i, j) in self.terms:
            if any(x < 0 or x >= self.m for x in i + j):
                raise DimensionError(f"Index out of range in {(i, j)} for m={self.m}")

    @classmethod
    def basis(cls, m: int, i: Iterable[int], j: Iterable[int], value: Coeff = 1.0) -> "Form":
        """Return value * dz^i ^ dzbar^j, reordering the indices with sign."""
        si, ii = sort_with_sign(tuple(i))
        sj, jj = sort_with_sign(tuple(j))
        if si * sj == 0:
            return cls(m)
        return cls(m, {(ii, jj): si * sj * value})

    def coeff(self, i: Iterable[int], j: Iterable[int]) -> Coeff:
        """Return the coefficient of dz^i ^ dzbar^j for possibly unsorted indices."""
        si, ii = sort_with_sign(tuple(i))
        sj, jj = sort_with_sign(tuple(j))
        if si * sj == 0:
            return 0.0
        return si * sj * self.terms.get((ii, jj), 0.0)

    def bidegrees(self) -> set[Tuple[int, int]]:
        return {(len(i), len(j)) for i, j in self.terms}

    def map(self, f: Callable[[Coeff], Coeff]) -> "Form":
        """Apply f to every coefficient."""
        return Form(self.m, {k: f(v) for k, v in self.terms.items()})

    def __add__(self, other: "Form") -> "Form":
        if other.m != self.m:
            raise DimensionError(f"Cannot add forms on C^{self.m} and C^{other.m}")
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out[k] + v if k in out else v
        return Form(self.m, out)

    def __neg__(self) -> "Form":
        return self.map(lambda v: -v)

    def __sub__(self, other: "Form") -> "Form":
        return self + (-other)

    def __mul__(self, scalar: Coeff) -> "Form":
        return self.map(lambda v: scalar * v)

    __rmul__ = __mul__

    def max_abs(self) -> float:
        """Return the largest coefficient modulus."""
        return max((float(np.max(np.abs(v))) for v in self.terms.values()), default=0.0)


def dz(j: int, a: Form) -> Form:
    """Return dz^j ^ a."""
    out: Dict[Key, Coeff] = {}
    for (i, jj), v in a.terms.items():
        if j in i:
            continue
        sign = -1 if _count_below(i, j) % 2 else 1
        key = (tuple(sorted(i + (j,))), jj)
        out[key] = out[key] + sign * v if key in out else sign * v
    return Form(a.m, out)


def dzbar(j: int, a: Form) -> Form:
    """Return dzbar^j ^ a."""
    out: Dict[Key, Coeff] = {}
    for (i, jj), v in a.terms.items():
        if j in jj:
            continue
        sign = -1 if (len(i) + _count_below(jj, j)) % 2 else 1
        key = (i, tuple(sorted(jj + (j,))))
        out[key] = out[key] + sign * v if key in out else sign * v
    return Form(a.m, out)


def iota(j: int, a: Form) -> Form:
    """Return iota_j a, the adjoint of dz^j ^."""
    out: Dict[Key, Coeff] = {}
    for (i, jj), v in a.terms.items():
        if j not in i:
            continue
        sign = -1 if _count_below(i, j) % 2 else 1
        key = (tuple(x for x in i if x != j), jj)
        out[key] = out[key] + sign * v if key in out else sign * v
    return Form(a.m, out)


def iotabar(j: int, a: Form) -> Form:
    """Return iotabar_j a, the adjoint of dzbar^j ^."""
    out: Dict[Key, Coeff] = {}
    for (i, jj), v in a.terms.items():
        if j not in jj:
            continue
        sign = -1 if (len(i) + _count_below(jj, j)) % 2 else 1
        key = (i, tuple(x for x in jj if x != j))
        out[key] = out[key] + sign * v if key in out else sign * v
    return Form(a.m, out)


def _check_degree(a: Form, holomorphic: bool) -> None:
    side = 0 if holomorphic else 1
    if a.terms and all(d[side] == 0 for d in a.bidegrees()):
        raise DegreeError("Interior product on a form of degree zero on that side")


def iota_v(v: np.ndarray | list, a: Form, side: str = "holomorphic") -> Form:
    """Interior product with a (1,0)-vector V or its conjugate.

    Args:
        v (np.ndarray | list): Components V^j; entries may be arrays broadcasting against coefficients
        a (Form): The form
        side (str): "holomorphic" for iota_V = sum V^j iota_j, "antiholomorphic" for iota_Vbar = sum conj(V^j) iotabar_j

    Returns:
        Form: The contracted form

    """
    if len(v) != a.m:
        raise DimensionError(f"Vector of length {len(v)} on C^{a.m}")
    holomorphic = side == "holomorphic"
    if side not in ("holomorphic", "antiholomorphic"):
        raise ValueError(f"Unknown side {side}")
    _check_degree(a, holomorphic)
    out = Form(a.m)
    for j in range(a.m):
        if holomorphic:
            out = out + iota(j, a) * v[j]
        else:
            out = out + iotabar(j, a) * np.conj(v[j])
    return out


def wedge(a: Form, b: Form) -> Form:
    """Return a ^ b for forms of arbitrary bidegree."""
    if a.m != b.m:
        raise DimensionError(f"Cannot wedge forms on C^{a.m} and C^{b.m}")
    out: Dict[Key, Coeff] = {}
    for (i1, j1), v1 in a.terms.items():
        for (i2, j2), v2 in b.terms.items():
            si, ii = sort_with_sign(i1 + i2)
            sj, jj = sort_with_sign(j1 + j2)
            if si * sj == 0:
                continue
            sign = si * sj * (-1 if (len(j1) * len(i2)) % 2 else 1)
            key = (ii, jj)
            val = sign * v1 * v2
            out[key] = out[key] + val if key in out else val
    return Form(a.m, out)


def omega(m: int) -> Form:
    """Return the flat Kaehler form i sum dz^j ^ dzbar^j."""
    return Form(m, {((j,), (j,)): 1j for j in range(m)})


def one(m: int, value: Coeff = 1.0) -> Form:
    return Form(m, {((), ()): value})


def omega_power(m: int, p: int) -> Form:
    """Return omega^p."""
    out = one(m)
    w = omega(m)
    for _ in range(p):
        out = wedge(w, out)
    return out


def lefschetz(a: Form) -> Form:
    """Return L a = omega ^ a."""
    out = Form(a.m)
    for j in range(a.m):
        out = out + dz(j, dzbar(j, a)) * 1j
    return out


def contract(a: Form) -> Form:
    """Return Lambda a = -i sum iotabar_j iota_j a, the adjoint of L."""
    out = Form(a.m)
    for j in range(a.m):
        out = out + iotabar(j, iota(j, a)) * (-1j)
    return out


def _perm_sign(first: Tuple[int, ...], second: Tuple[int, ...]) -> int:
    return sort_with_sign(first + second)[0]


def hodge_star(a: Form) -> Form:
    """Return the complex-linear Hodge star, with *1 = omega^m / m! and ** = (-1)^k."""
    m = a.m
    out: Dict[Key, Coeff] = {}
    unit = 1j**m * eps(m)
    full = tuple(range(m))
    for (i, j), v in a.terms.items():
        ic = tuple(x for x in full if x not in i)
        jc = tuple(x for x in full if x not in j)
        sign = (-1 if (len(i) * m) % 2 else 1) * _perm_sign(i, ic) * _perm_sign(j, jc)
        key = (jc, ic)
        val = unit * sign * v
        out[key] = out[key] + val if key in out else val
    return Form(m, out)


def inner(a: Form, b: Form) -> Coeff:
    """Pointwise Hermitian inner product sum c_{IJ} conj(c'_{IJ})."""
    total: Coeff = 0.0
    for k, v in a.terms.items():
        if k in b.terms:
            total = total + v * np.conj(b.terms[k])
    return total


def degree_part(a: Form, p: int, q: int) -> Form:
    return Form(a.m, {k: v for k, v in a.terms.items() if len(k[0]) == p and len(k[1]) == q})


def random_form(rng: np.random.Generator, m: int, p: int, q: int) -> Form:
    """Draw a form of bidegree (p, q) with standard complex Gaussian coefficients."""
    terms: Dict[Key, Coeff] = {}
    for i in multi_indices(m, p):
        for j in multi_indices(m, q):
            terms[(i, j)] = complex(rng.standard_normal() + 1j * rng.standard_normal())
    return Form(m, terms)
