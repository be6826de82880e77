#!/usr/bin/env python3
"""Algebraic curvature operators, Kaehler and Riemannian."""

import json
import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Tuple

import numpy as np

from .pp_forms import (
    FrameTuple,
    PPForm,
    PreconditionError,
    minors,
    second_variation_form,
)
from .rng import complex_normal
from .search import ConeVerdict, VerdictStatus
from .tensor_core import (
    DimensionError,
    InvariantError,
    MAX_LIE_DIM,
    multi_indices,
    skew_basis,
    skew_to_vec,
    structure_constants,
    vec_to_skew,
)

logger = logging.getLogger(__name__)

_SYMMETRY_TOL = 1e-10
_NULL_TOL = 1e-9


def _scale(a: np.ndarray) -> float:
    return max(1.0, float(np.max(np.abs(a), initial=0.0)))


def project_kahler(r: np.ndarray) -> np.ndarray:
    """Project onto tensors with R_{ijkl} = R_{kjil} = R_{ilkj} and conj(R_{ijkl}) = R_{jilk}."""
    r = (r + r.transpose(2, 1, 0, 3)) / 2
    r = (r + r.transpose(0, 3, 2, 1)) / 2
    return (r + r.conj().transpose(1, 0, 3, 2)) / 2


def project_riemann(r: np.ndarray) -> np.ndarray:
    """Project a real 4-tensor onto algebraic curvature tensors."""
    r = np.real(r)
    r = (r - r.transpose(1, 0, 2, 3)) / 2
    r = (r - r.transpose(0, 1, 3, 2)) / 2
    r = (r + r.transpose(2, 3, 0, 1)) / 2
    cyclic = (r + np.einsum("acdb->abcd", r) + np.einsum("adbc->abcd", r)) / 3
    return r - cyclic


@dataclass(frozen=True)
class OneOneVector:
    """Element of Lambda^{1,1}(C^m), optionally as sum_k X_k ^ Ybar_k."""

    coeffs: np.ndarray
    x: np.ndarray | None = None
    y: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.x is not None and self.y is not None:
            rebuilt = self.x @ self.y.conj().T
            if np.max(np.abs(rebuilt - self.coeffs), initial=0.0) > 1e-12 * _scale(self.coeffs):
                raise InvariantError("Decomposable representation does not match the coefficients")

    @property
    def m(self) -> int:
        return self.coeffs.shape[0]

    @classmethod
    def from_pairs(cls, x: np.ndarray, y: np.ndarray) -> "OneOneVector":
        """Build sum_k X_k ^ Ybar_k from the columns of two m x p matrices."""
        return cls(x @ y.conj().T, x, y)


@dataclass(frozen=True)
class TwoVector:
    """Element of Lambda^2(C^n) as a skew matrix, optionally as sum_k Z_k ^ W_k."""

    coeffs: np.ndarray
    z: np.ndarray | None = None
    w: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.coeffs.shape[0]

    @classmethod
    def from_pairs(cls, z: np.ndarray, w: np.ndarray) -> "TwoVector":
        """Build sum_k Z_k ^ W_k, (Z ^ W)^{ab} = Z^a W^b - Z^b W^a."""
        u = z @ w.T - w @ z.T
        return cls(u, z, w)

    def to_vec(self) -> np.ndarray:
        return skew_to_vec(self.coeffs)


@dataclass(frozen=True)
class KahlerCurvature:
    """Kaehler curvature tensor R[i, j, k, l] = R_{i jbar k lbar} in a unitary frame."""

    m: int
    R: np.ndarray

    def __post_init__(self) -> None:
        if self.R.shape != (self.m,) * 4:
            raise DimensionError(f"Expected shape {(self.m,) * 4}, got {self.R.shape}")
        residual = float(np.max(np.abs(project_kahler(self.R) - self.R), initial=0.0))
        if residual > _SYMMETRY_TOL * _scale(self.R):
            raise InvariantError(f"Kaehler symmetries violated, residual {residual:.3e}")

    @classmethod
    def projected(cls, r: np.ndarray) -> "KahlerCurvature":
        return cls(r.shape[0], project_kahler(np.asarray(r, dtype=complex)))

    def __add__(self, other: "KahlerCurvature") -> "KahlerCurvature":
        return KahlerCurvature(self.m, self.R + other.R)

    def __sub__(self, other: "KahlerCurvature") -> "KahlerCurvature":
        return KahlerCurvature(self.m, self.R - other.R)

    def __mul__(self, scalar: float) -> "KahlerCurvature":
        return KahlerCurvature(self.m, scalar * self.R)

    __rmul__ = __mul__

    def op_matrix(self) -> np.ndarray:
        """Hermitian matrix Op[(j,k),(i,l)] = R[i,j,k,l] acting on vec(alpha)."""
        return self.R.transpose(1, 2, 0, 3).reshape(self.m**2, self.m**2)

    def norm(self) -> float:
        """Operator norm on Lambda^{1,1}."""
        return float(np.linalg.norm(self.op_matrix(), 2))

    def to_json(self) -> str:
        """Serialize the generating set i <= k, j <= l."""
        entries = [
            [i, j, k, l, float(self.R[i, j, k, l].real), float(self.R[i, j, k, l].imag)]
            for i, j, k, l in np.ndindex(*self.R.shape)
            if i <= k and j <= l and self.R[i, j, k, l] != 0
        ]
        return json.dumps({"m": self.m, "entries": entries})

    @classmethod
    def from_json(cls, text: str) -> "KahlerCurvature":
        data = json.loads(text)
        m = data["m"]
        r = np.zeros((m,) * 4, dtype=complex)
        for i, j, k, l, re, im in data["entries"]:
            v = complex(re, im)
            for a, b, c, d in ((i, j, k, l), (k, j, i, l), (i, l, k, j), (k, l, i, j)):
                r[a, b, c, d] = v
        return cls(m, r)


def random_kahler(rng: np.random.Generator, m: int) -> KahlerCurvature:
    """Draw a random Kaehler curvature tensor by projection."""
    return KahlerCurvature.projected(complex_normal(rng, m, m, m, m))


def const_hol_sec(c: float, m: int) -> KahlerCurvature:
    """Return the constant holomorphic sectional curvature model c(g_ij g_kl + g_il g_kj)."""
    d = np.eye(m)
    return KahlerCurvature(m, c * (np.einsum("ij,kl->ijkl", d, d) + np.einsum("il,kj->ijkl", d, d)).astype(complex))


def product(a: KahlerCurvature, b: KahlerCurvature) -> KahlerCurvature:
    """Return the curvature of a Riemannian product, block diagonal in the frame."""
    m = a.m + b.m
    r = np.zeros((m,) * 4, dtype=complex)
    r[: a.m, : a.m, : a.m, : a.m] = a.R
    r[a.m :, a.m :, a.m :, a.m :] = b.R
    return KahlerCurvature(m, r)


def psd_generated(rng: np.random.Generator, m: int, rank: int) -> KahlerCurvature:
    """Return sum_s lambda_s v_s (x) vbar_s (x) v_s (x) vbar_s, nonnegative on all of Lambda^{1,1}."""
    r = np.zeros((m,) * 4, dtype=complex)
    for _ in range(rank):
        v = complex_normal(rng, m)
        v /= np.linalg.norm(v)
        lam = rng.uniform(0.5, 2.0)
        r += lam * np.einsum("i,j,k,l->ijkl", v, v.conj(), v, v.conj())
    return KahlerCurvature.projected(r)


def pairing(rm: KahlerCurvature, alpha: OneOneVector | np.ndarray, beta: OneOneVector | np.ndarray) -> complex:
    """Return <Rm(alpha), betabar> = sum R[i,j,k,l] alpha[i,l] conj(beta[j,k]).

    Args:
        rm (KahlerCurvature): The operator
        alpha (OneOneVector | np.ndarray): First argument
        beta (OneOneVector | np.ndarray): Second argument

    Returns:
        complex: The Hermitian pairing

    """
    a = alpha.coeffs if isinstance(alpha, OneOneVector) else np.asarray(alpha)
    b = beta.coeffs if isinstance(beta, OneOneVector) else np.asarray(beta)
    if a.shape != (rm.m, rm.m) or b.shape != (rm.m, rm.m):
        raise DimensionError(f"(1,1)-vectors {a.shape}, {b.shape} for m={rm.m}")
    return complex(np.einsum("ijkl,il,jk->", rm.R, a, b.conj()))


def ricci(rm: KahlerCurvature) -> np.ndarray:
    """Return R_{i jbar} = sum_k R_{i jbar k kbar}."""
    return np.einsum("ijkk->ij", rm.R)


def scalar(rm: KahlerCurvature) -> float:
    return float(np.trace(ricci(rm)).real)


def _contract_ricci(ric: np.ndarray, t: np.ndarray, p: int) -> np.ndarray:
    out = np.zeros_like(t)
    for nu in range(p):
        out += np.moveaxis(np.tensordot(ric, t, axes=([0], [p + nu])), 0, p + nu)
    for mu in range(p):
        out += np.moveaxis(np.tensordot(ric, t, axes=([1], [mu])), 0, mu)
    return out


def kb_reaction(rm: KahlerCurvature, ric: np.ndarray, phi: PPForm) -> PPForm:
    """Return KB(phi), the curvature reaction term of the (p,p)-form heat equation.

    KB_{I,J} = sum_{mu,nu} sum_{k,l} R_{i_mu jbar_nu l kbar} phi_{I(mu->k), J(nu->l)}
    - 1/2 (sum_nu Ric_{l jbar_nu} phi_{I, J(nu->l)} + sum_mu Ric_{i_mu kbar} phi_{I(mu->k), J}).
    """
    if rm.m != phi.m or ric.shape != (rm.m, rm.m):
        raise DimensionError("Curvature, Ricci and form dimensions differ")
    p = phi.p
    t = phi.full_tensor()
    out = np.zeros_like(t)
    for mu in range(p):
        for nu in range(p):
            term = np.tensordot(rm.R, t, axes=([3, 2], [mu, p + nu]))
            out += np.moveaxis(term, [0, 1], [mu, p + nu])
    out -= 0.5 * _contract_ricci(ric, t, p)
    return _compress(phi.m, p, out)


def _compress(m: int, p: int, t: np.ndarray) -> PPForm:
    return PPForm.from_full_tensor(m, p, t)


def lambda_ric(ric: np.ndarray, phi: PPForm) -> PPForm:
    """Return the Ricci contraction (Lambda_Ric phi)_{I'J'} = sum_{ij} Ric_{j ibar} phi_{iI', jJ'}."""
    if phi.p == 0:
        raise PreconditionError("Cannot contract a (0,0)-form")
    t = phi.full_tensor()
    p = phi.p
    out = np.tensordot(ric, t, axes=([1, 0], [0, p]))
    return _compress(phi.m, p - 1, out)


def inner_pp(a: PPForm, b: PPForm) -> complex:
    """Return <a, bbar> over sorted multi-indices."""
    return complex(np.sum(a.coeffs * b.coeffs.conj()))


def kb_sign_check(rm: KahlerCurvature, phi: PPForm, certificate: ConeVerdict | None) -> float:
    """Return Re <KB(phi), phibar>, nonpositive on curvature certified in C_2.

    Args:
        rm (KahlerCurvature): The curvature
        phi (PPForm): The form
        certificate (ConeVerdict | None): C_2 membership verdict of rm

    Returns:
        float: The real pairing

    """
    if certificate is None or certificate.status != VerdictStatus.IN:
        raise PreconditionError("Curvature is not certified in C_2")
    return inner_pp(kb_reaction(rm, ricci(rm), phi), phi).real


def curvature_variation_form(rm: KahlerCurvature, frame: FrameTuple) -> np.ndarray:
    """Return K[(mu,c),(nu,d)] = sum R[i,j,d,c] X_mu^i conj(X_nu^j)."""
    x = frame.vectors
    k = np.einsum("ijdc,im,jn->mcnd", rm.R, x, x.conj())
    n = x.shape[1] * rm.m
    return k.reshape(n, n)


def kb_frame_split(rm: KahlerCurvature, phi: PPForm, frame: FrameTuple) -> Tuple[complex, complex]:
    """Split KB(phi) at a frame into trace(K J) and the Ricci part.

    Args:
        rm (KahlerCurvature): The curvature
        phi (PPForm): The form
        frame (FrameTuple): The p vectors X_mu

    Returns:
        Tuple[complex, complex]: trace(K J) and the Ricci contribution

    """
    k = curvature_variation_form(rm, frame)
    j = second_variation_form(phi, frame)
    xi = minors(frame.vectors)
    ric_part = -0.5 * _compress(phi.m, phi.p, _contract_ricci(ricci(rm), phi.full_tensor(), phi.p)).coeffs
    return complex(np.trace(k @ j)), complex(xi @ ric_part @ xi.conj())


@dataclass(frozen=True)
class RiemCurvature:
    """Real algebraic curvature tensor R[a, b, c, d], sphere = kappa(d_ac d_bd - d_ad d_bc)."""

    n: int
    R: np.ndarray

    def __post_init__(self) -> None:
        if self.R.shape != (self.n,) * 4:
            raise DimensionError(f"Expected shape {(self.n,) * 4}, got {self.R.shape}")
        if np.iscomplexobj(self.R):
            raise InvariantError("Riemannian curvature must be real")
        residual = float(np.max(np.abs(project_riemann(self.R) - self.R), initial=0.0))
        if residual > _SYMMETRY_TOL * _scale(self.R):
            raise InvariantError(f"Curvature symmetries violated, residual {residual:.3e}")

    @classmethod
    def projected(cls, r: np.ndarray) -> "RiemCurvature":
        return cls(r.shape[0], project_riemann(r))

    @classmethod
    def from_op(cls, n: int, op: np.ndarray) -> "RiemCurvature":
        """Rebuild the tensor from Op[(ab),(cd)] = R[a,b,c,d], a < b, c < d."""
        pairs = multi_indices(n, 2)
        r = np.zeros((n,) * 4)
        op = np.real(op)
        for s, (a, b) in enumerate(pairs):
            for t, (c, d) in enumerate(pairs):
                v = op[s, t]
                r[a, b, c, d] = v
                r[b, a, c, d] = -v
                r[a, b, d, c] = -v
                r[b, a, d, c] = v
        return cls(n, r)

    def __add__(self, other: "RiemCurvature") -> "RiemCurvature":
        return RiemCurvature(self.n, self.R + other.R)

    def __sub__(self, other: "RiemCurvature") -> "RiemCurvature":
        return RiemCurvature(self.n, self.R - other.R)

    def __mul__(self, scalar: float) -> "RiemCurvature":
        return RiemCurvature(self.n, scalar * self.R)

    __rmul__ = __mul__

    def op_matrix(self) -> np.ndarray:
        """Symmetric matrix of Rm on the orthonormal basis e_a ^ e_b, a < b."""
        rows, cols = np.triu_indices(self.n, k=1)
        return self.R[rows, cols][:, rows, cols]

    def norm(self) -> float:
        return float(np.linalg.norm(self.op_matrix(), 2))

    def to_json(self) -> str:
        """Serialize the generating set a < b, c < d, (a, b) <= (c, d)."""
        pairs = multi_indices(self.n, 2)
        entries = [
            [a, b, c, d, float(self.R[a, b, c, d])]
            for s, (a, b) in enumerate(pairs)
            for t, (c, d) in enumerate(pairs)
            if s <= t and self.R[a, b, c, d] != 0
        ]
        return json.dumps({"n": self.n, "entries": entries})

    @classmethod
    def from_json(cls, text: str) -> "RiemCurvature":
        data = json.loads(text)
        n = data["n"]
        d = n * (n - 1) // 2
        op = np.zeros((d, d))
        pos = {pair: k for k, pair in enumerate(multi_indices(n, 2))}
        for a, b, c, dd, v in data["entries"]:
            op[pos[(a, b)], pos[(c, dd)]] = v
            op[pos[(c, dd)], pos[(a, b)]] = v
        return cls.from_op(n, op)


def sphere(kappa: float, n: int) -> RiemCurvature:
    """Return the round sphere tensor of sectional curvature kappa."""
    d = np.eye(n)
    return RiemCurvature(n, kappa * (np.einsum("ac,bd->abcd", d, d) - np.einsum("ad,bc->abcd", d, d)))


def random_riem(rng: np.random.Generator, n: int) -> RiemCurvature:
    return RiemCurvature.projected(rng.standard_normal((n,) * 4))


def pairing_riem(rm: RiemCurvature, u: TwoVector | np.ndarray, v: TwoVector | np.ndarray) -> complex:
    """Return <Rm(U), Vbar> = 1/4 sum R[a,b,c,d] U[a,b] conj(V[c,d])."""
    a = u.coeffs if isinstance(u, TwoVector) else np.asarray(u)
    b = v.coeffs if isinstance(v, TwoVector) else np.asarray(v)
    if a.shape != (rm.n, rm.n) or b.shape != (rm.n, rm.n):
        raise DimensionError(f"Two-vectors {a.shape}, {b.shape} for n={rm.n}")
    return complex(np.einsum("abcd,ab,cd->", rm.R, a, b.conj()) / 4)


def ricci_riem(rm: RiemCurvature) -> np.ndarray:
    """Return R_{ac} = sum_b R_{abcb}."""
    return np.einsum("abcb->ac", rm.R)


def scalar_riem(rm: RiemCurvature) -> float:
    return float(np.trace(ricci_riem(rm)))


def _lie_dim(d: int) -> int:
    n = int(round((1 + np.sqrt(1 + 8 * d)) / 2))
    if n * (n - 1) // 2 != d:
        raise DimensionError(f"{d} is not the dimension of so(n)")
    return n


@lru_cache(maxsize=None)
def _standard_constants(n: int) -> np.ndarray:
    return structure_constants(skew_basis(n))


def rm_sharp(op: np.ndarray | RiemCurvature, rotation: np.ndarray | None = None) -> np.ndarray:
    """Return the matrix of Rm^# on the standard basis of so(n).

    Rm^#[gamma, eta] = 1/2 sum A[delta, alpha] A[eps, beta] c^eta_{delta eps} c^gamma_{alpha beta}
    with structure constants of an orthonormal basis.

    Args:
        op (np.ndarray | RiemCurvature): Operator matrix on the standard basis
        rotation (np.ndarray | None): Orthogonal matrix whose columns define the basis used for the sums

    Returns:
        np.ndarray: Rm^# on the standard basis

    """
    a = op.op_matrix() if isinstance(op, RiemCurvature) else np.asarray(op)
    n = _lie_dim(a.shape[0])
    if n > MAX_LIE_DIM:
        raise DimensionError(f"Rm^# limited to n <= {MAX_LIE_DIM}")
    if rotation is None:
        c = _standard_constants(n)
        return 0.5 * np.einsum("da,eb,den,abg->gn", a, a, c, c)
    base = skew_basis(n)
    basis = [sum(rotation[b, k] * base[b] for b in range(len(base))) for k in range(len(base))]
    c = structure_constants(basis)
    a_rot = rotation.T @ a @ rotation
    sharp = 0.5 * np.einsum("da,eb,den,abg->gn", a_rot, a_rot, c, c)
    return rotation @ sharp @ rotation.T


def sharp_tensor(rm: RiemCurvature) -> np.ndarray:
    """Return R^#_{abcd} = B_{acbd} - B_{adbc}, B_{ijkl} = sum_{pq} R_{piqj} R_{pkql}."""
    b = np.einsum("piqj,pkql->ijkl", rm.R, rm.R)
    return np.einsum("acbd->abcd", b) - np.einsum("adbc->abcd", b)


def riem_ode_rhs(rm: RiemCurvature) -> RiemCurvature:
    """Return Rm^2 + Rm^# in the Uhlenbeck frame."""
    a = rm.op_matrix()
    rhs = a @ a + rm_sharp(a)
    r = RiemCurvature.from_op(rm.n, (rhs + rhs.T) / 2).R
    residual = float(np.max(np.abs(project_riemann(r) - r), initial=0.0))
    logger.debug(f"Riemannian rhs symmetry residual {residual:.3e}")
    if residual > 1e-8 * _scale(r):
        raise InvariantError(f"Riemannian rhs leaves the curvature space, residual {residual:.3e}")
    return RiemCurvature(rm.n, project_riemann(r))


def ad_on_basis(v: np.ndarray) -> np.ndarray:
    """Matrix of ad_v on the standard basis, v given by its basis coefficients."""
    n = _lie_dim(len(v))
    vm = vec_to_skew(n, v)
    return np.stack([skew_to_vec(vm @ b - b @ vm) for b in skew_basis(n)], axis=1)


def _null_check(a: np.ndarray, v0: np.ndarray) -> None:
    value = abs(np.vdot(v0, a @ v0))
    bound = _NULL_TOL * max(float(np.linalg.norm(a, 2)), 1e-300) * float(np.vdot(v0, v0).real)
    if value > bound:
        raise PreconditionError(f"v0 is not a null direction: |<Rm v0, v0bar>| = {value:.3e}")


def second_variation_positivity(op: np.ndarray | RiemCurvature, v0: np.ndarray) -> bool:
    """Test -ad_{v0bar} Rm ad_{v0} >= 0 at a null direction v0."""
    a = op.op_matrix() if isinstance(op, RiemCurvature) else np.asarray(op)
    _null_check(a, v0)
    d = ad_on_basis(v0)
    h = d.conj().T @ a @ d
    h = (h + h.conj().T) / 2
    tol = 1e-10 * max(1.0, float(np.linalg.norm(a, 2))) * float(np.vdot(v0, v0).real)
    return bool(np.linalg.eigvalsh(h)[0] >= -tol)


def sharp_nonneg_at_null(op: np.ndarray | RiemCurvature, v0: np.ndarray) -> float:
    """Return <Rm^#(v0), v0bar> at a null direction v0."""
    a = op.op_matrix() if isinstance(op, RiemCurvature) else np.asarray(op)
    _null_check(a, v0)
    return float(np.vdot(v0, rm_sharp(a) @ v0).real)


def psd_with_null(rng: np.random.Generator, n: int) -> Tuple[np.ndarray, np.ndarray]:
    """Draw a PSD operator on so(n) together with a complex null direction v0.

    Args:
        rng (np.random.Generator): Source of randomness
        n (int): Dimension of the underlying real space

    Returns:
        Tuple[np.ndarray, np.ndarray]: Operator matrix on the standard basis and v0

    """
    d = n * (n - 1) // 2
    if d < 3:
        raise DimensionError(f"so({n}) is too small for a nontrivial null direction")
    v0 = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    span = np.linalg.qr(np.stack([v0.real, v0.imag], axis=1))[0]
    b = rng.standard_normal((d, d - 2))
    b -= span @ (span.T @ b)
    return b @ b.T, v0


@lru_cache(maxsize=None)
def _realification(m: int) -> np.ndarray:
    f = np.zeros((2 * m, 2 * m), dtype=complex)
    for j in range(m):
        f[j, j] = f[j, m + j] = 1 / np.sqrt(2)
        f[m + j, j] = -1j / np.sqrt(2)
        f[m + j, m + j] = 1j / np.sqrt(2)
    return np.linalg.inv(f)


def kahler_to_riemannian(rm: KahlerCurvature) -> RiemCurvature:
    """Realify a Kaehler curvature tensor to R^{2m}, E_j = (e_j - i e_{m+j}) / sqrt(2)."""
    m = rm.m
    t = np.zeros((2 * m,) * 4, dtype=complex)
    h, a = slice(0, m), slice(m, 2 * m)
    t[h, a, a, h] = rm.R.transpose(0, 1, 3, 2)
    t[h, a, h, a] = -rm.R
    t[a, h, a, h] = -rm.R.transpose(1, 0, 3, 2)
    t[a, h, h, a] = rm.R.transpose(1, 0, 2, 3)
    g = _realification(m)
    r = np.einsum("wa,xb,yc,zd,wxyz->abcd", g, g, g, g, t)
    if np.max(np.abs(r.imag), initial=0.0) > 1e-10 * _scale(r):
        raise InvariantError("Realified curvature is not real")
    return RiemCurvature(2 * m, r.real)


def ctilde_to_c2p(z: np.ndarray, w: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Map p real-side pairs (Z_i, W_i) in C^{2m} to 2p Kaehler pairs (X_j, Y_j).

    Args:
        z (np.ndarray): 2m x p matrix of the Z_i
        w (np.ndarray): 2m x p matrix of the W_i

    Returns:
        Tuple[np.ndarray, np.ndarray]: m x 2p matrices X and Y

    """
    if z.shape != w.shape or z.shape[0] % 2:
        raise DimensionError(f"Pairs of shape {z.shape}, {w.shape}")
    m = z.shape[0] // 2
    zh, za = (z[:m] + 1j * z[m:]) / np.sqrt(2), (z[:m] - 1j * z[m:]) / np.sqrt(2)
    wh, wa = (w[:m] + 1j * w[m:]) / np.sqrt(2), (w[:m] - 1j * w[m:]) / np.sqrt(2)
    p = z.shape[1]
    x = np.zeros((m, 2 * p), dtype=complex)
    y = np.zeros((m, 2 * p), dtype=complex)
    x[:, 0::2], y[:, 0::2] = zh, wa.conj()
    x[:, 1::2], y[:, 1::2] = -wh, za.conj()
    return x, y


def pairing_equality_check(rm: KahlerCurvature, z: np.ndarray, w: np.ndarray) -> float:
    """Return |<Rm(sum Z ^ W), conj> - <Rm(sum X ^ Ybar), conj>| for the realified tensor."""
    x, y = ctilde_to_c2p(z, w)
    u = TwoVector.from_pairs(z, w)
    alpha = OneOneVector.from_pairs(x, y)
    real_side = pairing_riem(kahler_to_riemannian(rm), u, u)
    return abs(real_side - pairing(rm, alpha, alpha))


def skew_decompose(u: np.ndarray, tol: float = 1e-13) -> Tuple[np.ndarray, np.ndarray]:
    """Write a complex skew matrix as sum_k Z_k ^ W_k with at most n/2 pairs."""
    a = np.array(u, dtype=complex)
    n = a.shape[0]
    scale = max(float(np.max(np.abs(a), initial=0.0)), 1e-300)
    zs, ws = [], []
    while np.max(np.abs(a), initial=0.0) > tol * scale:
        i, j = np.unravel_index(np.argmax(np.abs(a)), a.shape)
        alpha = a[i, j]
        x, y = a[:, i].copy(), a[:, j].copy()
        a = a - (np.outer(x, y) - np.outer(y, x)) / alpha
        zs.append(x / alpha)
        ws.append(y)
    if not zs:
        return np.zeros((n, 0), dtype=complex), np.zeros((n, 0), dtype=complex)
    return np.stack(zs, axis=1), np.stack(ws, axis=1)


def unitary_transform(rm: KahlerCurvature, u: np.ndarray) -> KahlerCurvature:
    """Express rm in the frame e'_i = sum_a U[a, i] e_a."""
    r = np.einsum("ai,bj,ck,dl,abcd->ijkl", u, u.conj(), u, u.conj(), rm.R)
    return KahlerCurvature(rm.m, r)


def oneone_from_matrix(alpha: np.ndarray) -> OneOneVector:
    """Return alpha with the SVD pairs X = U sqrt(S), Y = V sqrt(S)."""
    u, s, vh = np.linalg.svd(alpha)
    root = np.sqrt(s)
    return OneOneVector(alpha, u * root, vh.conj().T * root)
