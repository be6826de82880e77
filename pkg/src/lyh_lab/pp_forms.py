#!/usr/bin/env python3
"""Positive (p,p)-forms at a point.

Coefficients use the tensor convention: phi_{I, Jbar} = C[I, J] on sorted
multi-indices, with C Hermitian for real forms. The plain exterior coefficient
of dz^I ^ dzbar^J is i^p (-1)^{p(p-1)/2} C[I, J].
"""

import json
import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Any, Dict

import numpy as np

from . import exterior
from .exterior import DegreeError, Form, eps
from .rng import complex_normal, random_psd
from .search import (
    ConeVerdict,
    SearchBudget,
    VerdictStatus,
    classify,
    minimize_quotient,
)
from .tensor_core import (
    DimensionError,
    InvariantError,
    index_positions,
    multi_indices,
    sort_with_sign,
)

logger = logging.getLogger(__name__)

_EVAL_IMAG_TOL = 1e-12


class PreconditionError(Exception):
    """Raised when an operation precondition does not hold."""

    pass


def plain_factor(p: int) -> complex:
    """Return the factor turning tensor coefficients into plain exterior ones."""
    return 1j**p * eps(p)


@lru_cache(maxsize=None)
def antisymmetrizer(m: int, p: int) -> np.ndarray:
    """Return E of shape (m^p, nI) with E[a, I] = sign when sorted(a) = I."""
    pos = index_positions(m, p)
    e = np.zeros((m**p, len(pos)))
    for flat, a in enumerate(np.ndindex(*([m] * p))):
        sign, idx = sort_with_sign(a)
        if sign:
            e[flat, pos[idx]] = sign
    return e


@lru_cache(maxsize=None)
def sorted_rows(m: int, p: int) -> list[int]:
    """Flat positions of the sorted multi-indices in an (m,)*p tensor."""
    return [int(np.ravel_multi_index(idx, [m] * p)) if p else 0 for idx in multi_indices(m, p)]


def minors(v: np.ndarray) -> np.ndarray:
    """Return xi_I = det V[I, :] over sorted multi-indices, for V of shape (m, p)."""
    m, p = v.shape
    if p == 0:
        return np.ones(1, dtype=complex)
    return np.array([np.linalg.det(v[list(idx), :]) for idx in multi_indices(m, p)])


@dataclass(frozen=True)
class FrameTuple:
    """Tuple of p vectors in C^m, stored as the columns of an m x p matrix."""

    vectors: np.ndarray
    orthonormal: bool = False

    def __post_init__(self) -> None:
        if self.vectors.ndim != 2:
            raise DimensionError("Frame must be an m x p matrix")
        if self.orthonormal:
            gram = self.vectors.conj().T @ self.vectors
            if np.max(np.abs(gram - np.eye(gram.shape[0])), initial=0.0) > 1e-12:
                raise InvariantError("Frame flagged orthonormal has a non-identity Gram matrix")

    @property
    def m(self) -> int:
        return self.vectors.shape[0]

    @property
    def p(self) -> int:
        return self.vectors.shape[1]

    @classmethod
    def orthonormalized(cls, vectors: np.ndarray) -> "FrameTuple":
        """Gram-Schmidt a linearly independent tuple."""
        q, _ = np.linalg.qr(vectors)
        return cls(q, orthonormal=True)

    def to_dict(self) -> Dict[str, Any]:
        return {"vectors": [[[float(z.real), float(z.imag)] for z in col] for col in self.vectors.T]}


@dataclass(frozen=True)
class PPForm:
    """Real (p,p)-form at a point, tensor coefficients on sorted multi-indices."""

    m: int
    p: int
    coeffs: np.ndarray

    def __post_init__(self) -> None:
        if self.p < 0 or self.p > self.m:
            raise DegreeError(f"Bidegree ({self.p},{self.p}) on C^{self.m}")
        n = math.comb(self.m, self.p)
        if self.coeffs.shape != (n, n):
            raise DimensionError(f"Expected {n}x{n} coefficients, got {self.coeffs.shape}")
        scale = max(1.0, float(np.max(np.abs(self.coeffs), initial=0.0)))
        if np.max(np.abs(self.coeffs - self.coeffs.conj().T), initial=0.0) > 1e-9 * scale:
            raise InvariantError("Coefficients violate the reality condition")

    @classmethod
    def zero(cls, m: int, p: int) -> "PPForm":
        n = math.comb(m, p)
        return cls(m, p, np.zeros((n, n), dtype=complex))

    @classmethod
    def omega_power(cls, m: int, p: int) -> "PPForm":
        """Return omega^p, whose tensor coefficients are p! Id."""
        n = math.comb(m, p)
        return cls(m, p, math.factorial(p) * np.eye(n, dtype=complex))

    @classmethod
    def from_form(cls, form: Form, p: int) -> "PPForm":
        """Convert a plain-convention exterior form of bidegree (p,p)."""
        pos = index_positions(form.m, p)
        n = len(pos)
        c = np.zeros((n, n), dtype=complex)
        for (i, j), v in form.terms.items():
            if len(i) != p or len(j) != p:
                if np.max(np.abs(v)) > 0:
                    raise DegreeError(f"Term of bidegree ({len(i)},{len(j)}) in a ({p},{p})-form")
                continue
            c[pos[i], pos[j]] += v
        return cls(form.m, p, c / plain_factor(p))

    def to_form(self) -> Form:
        idx = multi_indices(self.m, self.p)
        f = plain_factor(self.p)
        return Form(
            self.m,
            {(i, j): complex(f * self.coeffs[a, b]) for a, i in enumerate(idx) for b, j in enumerate(idx)},
        )

    def coefficient(self, i: tuple, j: tuple) -> complex:
        """Return phi_{I, Jbar} for possibly unsorted multi-indices."""
        si, ii = sort_with_sign(i)
        sj, jj = sort_with_sign(j)
        if si * sj == 0:
            return 0.0
        pos = index_positions(self.m, self.p)
        return si * sj * complex(self.coeffs[pos[ii], pos[jj]])

    def full_tensor(self) -> np.ndarray:
        """Return the antisymmetric tensor phi[i_1..i_p, j_1..j_p]."""
        e = antisymmetrizer(self.m, self.p)
        return (e @ self.coeffs @ e.T).reshape([self.m] * (2 * self.p))

    @classmethod
    def from_full_tensor(cls, m: int, p: int, t: np.ndarray, hermitize: bool = False) -> "PPForm":
        """Compress an antisymmetric tensor to sorted multi-indices."""
        rows = sorted_rows(m, p)
        c = t.reshape(m**p, m**p)[np.ix_(rows, rows)]
        return cls(m, p, (c + c.conj().T) / 2 if hermitize else c)

    def __add__(self, other: "PPForm") -> "PPForm":
        return PPForm(self.m, self.p, self.coeffs + other.coeffs)

    def __sub__(self, other: "PPForm") -> "PPForm":
        return PPForm(self.m, self.p, self.coeffs - other.coeffs)

    def __mul__(self, scalar: float) -> "PPForm":
        return PPForm(self.m, self.p, scalar * self.coeffs)

    __rmul__ = __mul__

    def to_json(self) -> str:
        """Serialize as {m, p, entries: [[I, J, re, im], ...]}."""
        idx = multi_indices(self.m, self.p)
        entries = [
            [list(i), list(j), float(self.coeffs[a, b].real), float(self.coeffs[a, b].imag)]
            for a, i in enumerate(idx)
            for b, j in enumerate(idx)
            if self.coeffs[a, b] != 0
        ]
        return json.dumps({"m": self.m, "p": self.p, "entries": entries})

    @classmethod
    def from_json(cls, text: str) -> "PPForm":
        data = json.loads(text)
        m, p = data["m"], data["p"]
        pos = index_positions(m, p)
        n = len(pos)
        c = np.zeros((n, n), dtype=complex)
        for i, j, re, im in data["entries"]:
            c[pos[tuple(i)], pos[tuple(j)]] = complex(re, im)
        return cls(m, p, c)


def random_real(rng: np.random.Generator, m: int, p: int) -> PPForm:
    """Draw a real (p,p)-form with Gaussian Hermitian coefficients."""
    n = math.comb(m, p)
    a = complex_normal(rng, n, n)
    return PPForm(m, p, (a + a.conj().T) / 2)


def random_positive(rng: np.random.Generator, m: int, p: int, rank: int | None = None) -> PPForm:
    """Draw a positive (p,p)-form from a random positive semi-definite coefficient matrix."""
    n = math.comb(m, p)
    return PPForm(m, p, random_psd(rng, n, rank))


def eval(phi: PPForm, frame: FrameTuple) -> float:
    """Evaluate phi(v_1..v_p; vbar_1..vbar_p).

    Args:
        phi (PPForm): The form
        frame (FrameTuple): p vectors in C^m

    Returns:
        float: The (real) value

    """
    if frame.p != phi.p or frame.m != phi.m:
        raise DimensionError(f"Frame {frame.vectors.shape} for a ({phi.p},{phi.p})-form on C^{phi.m}")
    xi = minors(frame.vectors)
    value = complex(xi @ phi.coeffs @ xi.conj())
    scale = max(1.0, float(np.linalg.norm(phi.coeffs)) * float(np.vdot(xi, xi).real))
    if abs(value.imag) > _EVAL_IMAG_TOL * scale:
        raise InvariantError(f"Evaluation has imaginary residue {value.imag:.3e}")
    return value.real


def mixed_eval(phi: PPForm, x: np.ndarray, y: np.ndarray) -> complex:
    """Return phi(x_1..x_p; ybar_1..ybar_p) for two m x p tuples."""
    return complex(minors(x) @ phi.coeffs @ minors(y).conj())


class _LelongQuotient:
    """Quotient phi(V; Vbar) / det(V^H V) over V in C^{m x p}."""

    def __init__(self, phi: PPForm) -> None:
        e = antisymmetrizer(phi.m, phi.p)
        self.m, self.p = phi.m, phi.p
        self.size = phi.m * phi.p
        self._t = e @ phi.coeffs @ e.T
        self._g = e @ e.T

    def _partials(self, y: np.ndarray, vs: list) -> np.ndarray:
        y = y.reshape([self.m] * self.p)
        grads = []
        for r in range(self.p):
            out = y
            for s in reversed(range(self.p)):
                if s != r:
                    out = np.tensordot(out, vs[s].conj(), axes=([s], [0]))
            grads.append(out)
        return np.stack(grads, axis=1).reshape(-1)

    def evaluate(self, z: np.ndarray) -> tuple:
        v = z.reshape(self.m, self.p)
        vs = [v[:, r] for r in range(self.p)]
        x = vs[0]
        for vec in vs[1:]:
            x = np.kron(x, vec)
        yn = self._t.T @ x
        yd = self._g.T @ x
        num = float(np.vdot(x, yn).real)
        den = float(np.vdot(x, yd).real)
        return num, self._partials(yn, vs), den, self._partials(yd, vs)


def lelong_positivity(
    phi: PPForm,
    budget: SearchBudget = SearchBudget(),
    rng: np.random.Generator | None = None,
) -> ConeVerdict:
    """Certify Lelong positivity of phi by minimizing over unitary frames.

    Exact eigenvalue checks are used for p = 1 and p = m.

    Args:
        phi (PPForm): The form
        budget (SearchBudget): Restart budget and tolerances
        rng (np.random.Generator | None): Restart generator

    Returns:
        ConeVerdict: Verdict with an orthonormal FrameTuple witness

    """
    scale = float(np.linalg.norm(phi.coeffs, 2)) if phi.coeffs.size else 0.0
    if phi.p == 0 or phi.p == phi.m:
        value = float(phi.coeffs[0, 0].real)
        frame = FrameTuple(np.eye(phi.m, dtype=complex)[:, : phi.p], orthonormal=True)
        status = classify(value, scale, budget, eval(phi, frame))
        return ConeVerdict(status, value, frame if status == VerdictStatus.OUT else None, 0, scale)
    if phi.p == 1:
        w, v = np.linalg.eigh(phi.coeffs)
        frame = FrameTuple(v[:, :1].conj(), orthonormal=True)
        value = float(w[0])
        status = classify(value, scale, budget, eval(phi, frame))
        return ConeVerdict(status, value, frame if status == VerdictStatus.OUT else None, 0, scale)

    problem = _LelongQuotient(phi)
    rng = rng if rng is not None else np.random.Generator(np.random.Philox(0))
    result = minimize_quotient(problem, rng, budget, stop_below=-budget.tol_out * scale)
    frame = FrameTuple.orthonormalized(result.z.reshape(phi.m, phi.p))
    status = classify(result.value, scale, budget, eval(phi, frame))
    return ConeVerdict(status, result.value, frame, result.restarts_used, scale)


def lambda_contract(phi: PPForm) -> PPForm:
    """Return Lambda phi, (Lambda phi)_{I'J'} = sum_i phi_{iI', iJ'}."""
    if phi.p == 0:
        raise DegreeError("Cannot contract a (0,0)-form")
    idx = multi_indices(phi.m, phi.p - 1)
    n = len(idx)
    out = np.zeros((n, n), dtype=complex)
    for a, i1 in enumerate(idx):
        for b, j1 in enumerate(idx):
            out[a, b] = sum(phi.coefficient((k,) + i1, (k,) + j1) for k in range(phi.m))
    return PPForm(phi.m, phi.p - 1, out)


def lefschetz(phi: PPForm) -> PPForm:
    """Return omega ^ phi."""
    if phi.p == phi.m:
        raise DegreeError("omega ^ phi vanishes above the top degree")
    return PPForm.from_form(exterior.lefschetz(phi.to_form()), phi.p + 1)


def hodge_star(phi: PPForm) -> PPForm:
    """Return *phi, a real (m-p, m-p)-form."""
    return PPForm.from_form(exterior.hodge_star(phi.to_form()), phi.m - phi.p)


def iota(phi: PPForm, v: np.ndarray, side: str = "holomorphic") -> Form:
    """Interior product of phi with V (holomorphic) or Vbar (antiholomorphic)."""
    if phi.p == 0:
        raise DegreeError("Interior product on a (0,0)-form")
    return exterior.iota_v(v, phi.to_form(), side)


def norm(phi: PPForm) -> float:
    """Pointwise norm, with |omega| = sqrt(m)."""
    return float(np.linalg.norm(phi.coeffs))


@dataclass(frozen=True)
class DominanceResult:
    """Outcome of the |phi| <= C |Lambda phi| check."""

    passed: bool
    ratio: float
    constant: float

    def __bool__(self) -> bool:
        return self.passed


def lambda_dominance_check(phi: PPForm, constant: float, verdict: ConeVerdict) -> DominanceResult:
    """Check |phi| <= C_{p,m} |Lambda phi| on a certified positive form.

    Args:
        phi (PPForm): The form
        constant (float): The calibrated constant C_{p,m}
        verdict (ConeVerdict): Lelong positivity verdict of phi

    Returns:
        DominanceResult: Pass flag and observed ratio

    """
    if verdict.status != VerdictStatus.IN:
        raise PreconditionError("Dominance check needs a certified positive form")
    top = norm(phi)
    low = norm(lambda_contract(phi))
    ratio = top / low if low > 0 else (0.0 if top == 0 else np.inf)
    return DominanceResult(ratio <= constant, float(ratio), constant)


def calibrate_dominance_constant(rng: np.random.Generator, m: int, p: int, samples: int) -> float:
    """Estimate C_{p,m} as the largest observed ratio over random positive forms."""
    worst = 0.0
    for _ in range(samples):
        phi = random_positive(rng, m, p, rank=int(rng.integers(1, math.comb(m, p) + 1)))
        worst = max(worst, norm(phi) / norm(lambda_contract(phi)))
    logger.debug(f"Dominance constant for m={m}, p={p}: {worst:.4f}")
    return worst


def _replace(x: np.ndarray, mu: int, a: int) -> np.ndarray:
    out = x.copy()
    out[:, mu] = 0.0
    out[a, mu] = 1.0
    return out


def first_variation(phi: PPForm, frame: FrameTuple) -> np.ndarray:
    """Return F[(mu, a)] = phi_{X(mu -> e_a), Xbar}, zero at a null frame of a positive form."""
    x = frame.vectors
    return np.array([mixed_eval(phi, _replace(x, mu, a), x) for mu in range(phi.p) for a in range(phi.m)])


def second_variation_form(phi: PPForm, frame: FrameTuple) -> np.ndarray:
    """Return the pm x pm Hermitian form J[(nu, b), (mu, a)] = phi_{X(mu -> e_a), Xbar(nu -> e_b)}."""
    x = frame.vectors
    slots = [_replace(x, mu, a) for mu in range(phi.p) for a in range(phi.m)]
    xis = np.array([minors(s) for s in slots])
    return (xis @ phi.coeffs @ xis.conj().T).T
