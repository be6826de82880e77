#!/usr/bin/env python3
"""Li-Yau-Hamilton quadratic forms for Kaehler-Ricci and Ricci flow."""

import enum
import logging
from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np

from ._compat import StrEnum
from .curvature import (
    KahlerCurvature,
    OneOneVector,
    RiemCurvature,
    TwoVector,
    pairing,
    pairing_riem,
    ricci,
    ricci_riem,
)
from .pp_forms import PreconditionError
from .rng import make_rng, random_psd
from .search import (
    ConeVerdict,
    SearchBudget,
    VerdictStatus,
    classify,
    minimize_quotient,
)
from .tensor_core import DimensionError, InvariantError, TimeError, hermitian_residual, vec_to_skew

logger = logging.getLogger(__name__)

_REAL_TOL = 1e-12


class Variant(StrEnum):
    """Geometry of the LYH tensors."""

    KAHLER = "Kahler"
    RIEMANNIAN = "Riemannian"


@dataclass(frozen=True)
class DerivativeData:
    """Covariant derivatives of the curvature at a point.

    Kaehler: grad_ric[a, b, c] = nabla_c R_{a bbar}.
    Riemannian: grad_ric[i, j, k] = nabla_i R_{jk}, hess_scalar[i, j] = nabla_i nabla_j R.
    """

    lap_ric: np.ndarray
    grad_ric: np.ndarray
    hess_scalar: np.ndarray | None = None


@dataclass(frozen=True)
class LYHTensors:
    """The tensors M and P at a point and time t."""

    variant: Variant
    M: np.ndarray
    P: np.ndarray
    t: float
    homogeneous: bool = True

    def __post_init__(self) -> None:
        scale = max(1.0, float(np.max(np.abs(self.M), initial=0.0)))
        if self.variant == Variant.KAHLER:
            if hermitian_residual(self.M) > 1e-10 * scale:
                raise InvariantError("Kaehler M is not Hermitian")
            if np.max(np.abs(self.P - self.P.transpose(2, 1, 0)), initial=0.0) > 1e-10 * scale:
                raise InvariantError("P violates the second Bianchi identity")
        else:
            if np.max(np.abs(self.M - self.M.T), initial=0.0) > 1e-10 * scale:
                raise InvariantError("Riemannian M is not symmetric")
            if np.max(np.abs(self.P + self.P.transpose(1, 0, 2)), initial=0.0) > 1e-10 * scale:
                raise InvariantError("P is not antisymmetric in its first two indices")

    @property
    def P2(self) -> np.ndarray:
        """P_{a bbar cbar} = conj(P_{b abar c})."""
        return self.P.conj().transpose(1, 0, 2)


def build_M_P(
    rm: KahlerCurvature | RiemCurvature,
    t: float,
    derivatives: DerivativeData | None = None,
) -> LYHTensors:
    """Assemble M and P; without derivative data the point is homogeneous.

    Kaehler: M = Delta Ric + R_{a bbar c dbar} R_{d cbar} + Ric / t, P_{a bbar c} = nabla_c R_{a bbar}.
    Riemannian: M_ij = Delta R_ij - 1/2 nabla_i nabla_j R + 2 R_ikjl R_kl - R_ik R_jk + R_ij / (2t),
    P_ijk = nabla_i R_jk - nabla_j R_ik.

    Args:
        rm (KahlerCurvature | RiemCurvature): Curvature at the point
        t (float): Time, positive
        derivatives (DerivativeData | None): Covariant derivative data

    Returns:
        LYHTensors: M and P

    """
    if t <= 0:
        raise TimeError(f"LYH tensors need t > 0, got {t}")
    if isinstance(rm, KahlerCurvature):
        ric = ricci(rm)
        m = ric.shape[0]
        lap = np.zeros((m, m), dtype=complex) if derivatives is None else derivatives.lap_ric
        grad = np.zeros((m, m, m), dtype=complex) if derivatives is None else derivatives.grad_ric
        quad = np.einsum("abcd,dc->ab", rm.R, ric)
        return LYHTensors(Variant.KAHLER, lap + quad + ric / t, grad, t, derivatives is None)
    ric = ricci_riem(rm)
    n = ric.shape[0]
    if derivatives is None:
        lap, grad, hess = np.zeros((n, n)), np.zeros((n, n, n)), np.zeros((n, n))
    else:
        lap, grad = derivatives.lap_ric, derivatives.grad_ric
        hess = derivatives.hess_scalar if derivatives.hess_scalar is not None else np.zeros((n, n))
    m_ij = lap - 0.5 * hess + 2 * np.einsum("ikjl,kl->ij", rm.R, ric) - ric @ ric.T + ric / (2 * t)
    p_ijk = grad - grad.transpose(1, 0, 2)
    return LYHTensors(Variant.RIEMANNIAN, m_ij, p_ijk, t, derivatives is None)


def _real(value: complex, scale: float, what: str) -> float:
    if abs(value.imag) > _REAL_TOL * max(1.0, scale):
        raise InvariantError(f"{what} has imaginary residue {value.imag:.3e}")
    return float(value.real)


def kahler_q_matrix(ten: LYHTensors, rm: KahlerCurvature) -> np.ndarray:
    """Hermitian matrix of Q on (W, vec(U)) in C^m + C^{m^2}."""
    m = rm.m
    h = np.zeros((m + m * m, m + m * m), dtype=complex)
    h[:m, :m] = ten.M.T
    h[:m, m:] = ten.P2.transpose(1, 0, 2).reshape(m, m * m)
    h[m:, :m] = ten.P.transpose(1, 2, 0).reshape(m * m, m)
    h[m:, m:] = rm.op_matrix()
    return h


def riem_q_matrix(ten: LYHTensors, rm: RiemCurvature) -> np.ndarray:
    """Hermitian matrix of Q~ on (W, U) in C^n + Lambda^2(C^n)."""
    n = rm.n
    rows, cols = np.triu_indices(n, k=1)
    d = len(rows)
    h = np.zeros((n + d, n + d), dtype=complex)
    h[:n, :n] = ten.M
    h[n:, :n] = ten.P[rows, cols, :]
    h[:n, n:] = h[n:, :n].conj().T
    h[n:, n:] = rm.op_matrix()
    return h


def _check_last(pairs: np.ndarray | None, w: np.ndarray, what: str) -> None:
    if pairs is None or pairs.shape[1] == 0:
        raise PreconditionError(f"{what} needs a decomposable representation")
    if np.max(np.abs(pairs[:, -1] - w), initial=0.0) > 1e-12 * max(1.0, float(np.max(np.abs(w)))):
        raise PreconditionError(f"The last pair of {what} must start with W")


def eval_Q_krf(ten: LYHTensors, rm: KahlerCurvature, u: OneOneVector, w: np.ndarray) -> float:
    """Evaluate Q(W + U) for U = sum_{i<p} X_i ^ Ybar_i + W ^ Vbar.

    Args:
        ten (LYHTensors): Kaehler M and P
        rm (KahlerCurvature): The curvature
        u (OneOneVector): U with its decomposable representation
        w (np.ndarray): The vector W

    Returns:
        float: The real value of Q

    """
    _check_last(u.x, w, "U")
    a = u.coeffs
    value = (
        np.einsum("ab,a,b->", ten.M, w, w.conj())
        + np.einsum("abc,bc,a->", ten.P, a.conj(), w)
        + np.einsum("abc,ac,b->", ten.P2, a, w.conj())
        + pairing(rm, a, a)
    )
    return _real(complex(value), rm.norm() * float(np.linalg.norm(a)) ** 2, "Q")


def z_matrix(ten: LYHTensors, rm: KahlerCurvature, v: np.ndarray) -> np.ndarray:
    """Return Z = M + P V + P2 Vbar + R(., ., V, Vbar)."""
    return (
        ten.M
        + np.einsum("abc,c->ab", ten.P, v)
        + np.einsum("abc,c->ab", ten.P2, v.conj())
        + np.einsum("abcd,c,d->ab", rm.R, v, v.conj())
    )


def eval_Z(ten: LYHTensors, rm: KahlerCurvature, w: np.ndarray, v: np.ndarray) -> float:
    """Evaluate Z_{a bbar} W^a Wbar^b."""
    value = complex(np.einsum("ab,a,b->", z_matrix(ten, rm, v), w, w.conj()))
    return _real(value, float(np.linalg.norm(ten.M)) + rm.norm(), "Z")


def eval_Qtilde_rf(ten: LYHTensors, rm: RiemCurvature, w: np.ndarray, u: TwoVector) -> float:
    """Evaluate <M W, Wbar> + 2 Re <P(W), Ubar> + <Rm U, Ubar> for U = sum W_mu ^ Z_mu, W_p = W.

    <P(W), Ubar> = 1/2 sum P_ijk W^k conj(U^ij).
    """
    _check_last(u.z, w, "U")
    cross = complex(np.einsum("ijk,k,ij->", ten.P, w, u.coeffs.conj()) / 2)
    value = complex(np.vdot(w, ten.M @ w)) + 2 * cross.real + pairing_riem(rm, u, u)
    return _real(value, rm.norm() * float(np.linalg.norm(u.coeffs)) ** 2, "Q~")


def z_matrix_riem(ten: LYHTensors, rm: RiemCurvature, z: np.ndarray) -> np.ndarray:
    """Return (Z_Z)_cd = M_cd + P_dac Zbar^a + P_cad Z^a + R(Z, e_c, Zbar, e_d)."""
    return (
        ten.M
        + np.einsum("dac,a->cd", ten.P, z.conj())
        + np.einsum("cad,a->cd", ten.P, z)
        + np.einsum("acbd,a,b->cd", rm.R, z, z.conj())
    )


def eval_Z_riem(ten: LYHTensors, rm: RiemCurvature, w: np.ndarray, z: np.ndarray) -> float:
    """Evaluate sum (Z_Z)_cd W^c Wbar^d."""
    value = complex(np.einsum("cd,c,d->", z_matrix_riem(ten, rm, z), w, w.conj()))
    return _real(value, float(np.linalg.norm(ten.M)) + rm.norm(), "Z_Z")


@dataclass(frozen=True)
class AdmissibleWitness:
    """Admissible argument (W, U) of a minimized LYH form, scaled to unit norm."""

    w: np.ndarray
    u: OneOneVector | TwoVector

    def to_dict(self) -> dict:
        def _cl(a: np.ndarray) -> list:
            return [[float(x.real), float(x.imag)] for x in np.asarray(a).reshape(-1)]

        first = self.u.x if isinstance(self.u, OneOneVector) else self.u.z
        second = self.u.y if isinstance(self.u, OneOneVector) else self.u.w
        return {"W": _cl(self.w), "first": _cl(first), "second": _cl(second)}


class _AdmissibleQuotient:
    """Quotient of a Hermitian form on (W, U) over |W|^2 + |U|^2 along admissible U."""

    def __init__(self, h: np.ndarray, dim: int, p: int, riemannian: bool, w_fixed: np.ndarray | None) -> None:
        self.h, self.dim, self.p = h, dim, p
        self.riemannian = riemannian
        self.w_fixed = None if w_fixed is None else w_fixed / np.linalg.norm(w_fixed)
        self.nw = 1 if w_fixed is not None else dim
        self.size = self.nw + 2 * dim * (p - 1) + dim
        if riemannian:
            self._rows, self._cols = np.triu_indices(dim, k=1)

    def unpack(self, z: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        d, q = self.dim, self.p - 1
        head = z[: self.nw]
        w = head[0] * self.w_fixed if self.w_fixed is not None else head
        rest = z[self.nw :]
        x = rest[: d * q].reshape(d, q)
        y = rest[d * q : 2 * d * q].reshape(d, q)
        v = rest[2 * d * q :]
        return w, x, y, v

    def assemble(self, z: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Return the full pair matrices (W last) and the state vector."""
        w, x, y, v = self.unpack(z)
        first = np.concatenate([x, w[:, None]], axis=1)
        second = np.concatenate([y, v[:, None]], axis=1)
        if self.riemannian:
            u = first @ second.T - second @ first.T
            state = np.concatenate([w, u[self._rows, self._cols]])
        else:
            u = first @ second.conj().T
            state = np.concatenate([w, u.reshape(-1)])
        return first, second, u, state

    def _chain(self, z: np.ndarray, g: np.ndarray) -> np.ndarray:
        d = self.dim
        first, second, _, _ = self.assemble(z)
        gw = g[:d]
        if self.riemannian:
            gf = vec_to_skew(d, g[d:])
            d_first = gf @ second.conj()
            d_second = -gf @ first.conj()
        else:
            gu = g[d:].reshape(d, d)
            d_first = gu @ second
            d_second = gu.conj().T @ first
        d_w = gw + d_first[:, -1]
        head = np.array([np.vdot(self.w_fixed, d_w)]) if self.w_fixed is not None else d_w
        return np.concatenate([head, d_first[:, :-1].reshape(-1), d_second[:, :-1].reshape(-1), d_second[:, -1]])

    def evaluate(self, z: np.ndarray) -> tuple:
        _, _, _, state = self.assemble(z)
        hs = self.h @ state
        num = float(np.vdot(state, hs).real)
        den = float(np.vdot(state, state).real)
        return num, self._chain(z, hs), den, self._chain(z, state)


def _exact_min(h: np.ndarray, dim: int, w_fixed: np.ndarray | None) -> float:
    if w_fixed is not None:
        t = np.zeros((h.shape[0], h.shape[0] - dim + 1), dtype=complex)
        t[:dim, 0] = w_fixed / np.linalg.norm(w_fixed)
        t[dim:, 1:] = np.eye(h.shape[0] - dim)
        h = t.conj().T @ h @ t
    return float(np.linalg.eigvalsh((h + h.conj().T) / 2)[0])


def _min_admissible(
    h: np.ndarray,
    dim: int,
    p: int,
    riemannian: bool,
    w: np.ndarray | None,
    budget: SearchBudget,
    rng: np.random.Generator | None,
    exact_collapse: bool,
    recheck: Callable[[AdmissibleWitness], float],
) -> ConeVerdict:
    if p < 1:
        raise DimensionError(f"Rank p must be >= 1, got {p}")
    if w is not None and (w.shape != (dim,) or np.linalg.norm(w) == 0.0):
        raise DimensionError(f"W must be a nonzero vector of length {dim}")
    scale = float(np.linalg.norm(h, 2))
    if scale == 0.0:
        return ConeVerdict(VerdictStatus.IN, 0.0, None, 0, 0.0)
    free_rank = dim // 2 if riemannian else dim
    if exact_collapse and p - 1 >= free_rank:
        value = _exact_min(h, dim, w)
        return ConeVerdict(classify(value, scale, budget, value), value, "eigenvector", 0, scale)
    problem = _AdmissibleQuotient(h, dim, p, riemannian, w)
    rng = rng if rng is not None else make_rng(0)
    result = minimize_quotient(problem, rng, budget, stop_below=-budget.tol_out * scale)
    first, second, _, state = problem.assemble(result.z)
    first = first / float(np.linalg.norm(state))
    if riemannian:
        witness = AdmissibleWitness(first[:, -1], TwoVector.from_pairs(first, second))
    else:
        witness = AdmissibleWitness(first[:, -1], OneOneVector.from_pairs(first, second))
    status = classify(result.value, scale, budget, recheck(witness))
    if status == VerdictStatus.INCONCLUSIVE:
        logger.warning(f"Inconclusive LYH minimum {result.value:.3e}")
    return ConeVerdict(status, result.value, witness, result.restarts_used, scale)


def min_Q_admissible(
    ten: LYHTensors,
    rm: KahlerCurvature,
    p: int,
    w: np.ndarray | None = None,
    budget: SearchBudget = SearchBudget(),
    rng: np.random.Generator | None = None,
    exact_collapse: bool = True,
) -> ConeVerdict:
    """Minimize Q over unit (W, U) with U = sum_{i<p} X_i ^ Ybar_i + W ^ Vbar.

    When W is given only its complex multiples are searched. Once p - 1 >= m
    every U is admissible and the minimum is an eigenvalue.

    Args:
        ten (LYHTensors): Kaehler M and P
        rm (KahlerCurvature): The curvature
        p (int): Number of pairs in U, the last one starting with W
        w (np.ndarray | None): Fixed direction of W
        budget (SearchBudget): Restarts and tolerances
        rng (np.random.Generator | None): Source of restarts
        exact_collapse (bool): Use the eigenvalue once the constraint is void

    Returns:
        ConeVerdict: In when Q >= 0 on the admissible set

    """
    if ten.variant != Variant.KAHLER:
        raise PreconditionError("min_Q_admissible needs Kaehler tensors")
    return _min_admissible(
        kahler_q_matrix(ten, rm),
        rm.m,
        p,
        False,
        w,
        budget,
        rng,
        exact_collapse,
        lambda wit: eval_Q_krf(ten, rm, wit.u, wit.w),
    )


def min_Qtilde_admissible(
    ten: LYHTensors,
    rm: RiemCurvature,
    p: int,
    w: np.ndarray | None = None,
    budget: SearchBudget = SearchBudget(),
    rng: np.random.Generator | None = None,
    exact_collapse: bool = True,
) -> ConeVerdict:
    """Minimize Q~ over unit (W, U) with U = sum_{mu<p} W_mu ^ Z_mu + W ^ Z."""
    if ten.variant != Variant.RIEMANNIAN:
        raise PreconditionError("min_Qtilde_admissible needs Riemannian tensors")
    return _min_admissible(
        riem_q_matrix(ten, rm),
        rm.n,
        p,
        True,
        w,
        budget,
        rng,
        exact_collapse,
        lambda wit: eval_Qtilde_rf(ten, rm, wit.w, wit.u),
    )


def p_collapse_check(
    ten: LYHTensors,
    rm: KahlerCurvature | RiemCurvature,
    p: int,
    budget: SearchBudget = SearchBudget(),
    rng: np.random.Generator | None = None,
) -> Tuple[bool, ConeVerdict, float]:
    """Compare the restart search with the exact eigenvalue of the full form.

    Returns:
        Tuple[bool, ConeVerdict, float]: Agreement flag, the searched verdict and the exact minimum

    """
    riemannian = isinstance(rm, RiemCurvature)
    dim = rm.n if riemannian else rm.m
    free_rank = dim // 2 if riemannian else dim
    if p - 1 < free_rank:
        raise PreconditionError(f"p={p} does not lift the admissibility constraint in dimension {dim}")
    if riemannian:
        h = riem_q_matrix(ten, rm)
        searched = min_Qtilde_admissible(ten, rm, p, None, budget, rng, exact_collapse=False)
    else:
        h = kahler_q_matrix(ten, rm)
        searched = min_Q_admissible(ten, rm, p, None, budget, rng, exact_collapse=False)
    exact = _exact_min(h, dim, None)
    scale = float(np.linalg.norm(h, 2))
    expected = classify(exact, scale, budget, exact)
    agree = searched.status == expected and abs(searched.min_value - exact) <= 1e-6 * max(1.0, scale)
    if not agree:
        logger.error(f"Collapse mismatch: search {searched.min_value:.6e} vs exact {exact:.6e}")
    return agree, searched, exact


def lyh_probe(
    p: int = 1, t: float = 1.0, budget: SearchBudget = SearchBudget(), seed: int = 0
) -> Callable[[KahlerCurvature | RiemCurvature, float], float]:
    """Build a callable returning the homogeneous LYH minimum of a curvature operator."""
    rng = make_rng(seed)

    def _probe(rm: KahlerCurvature | RiemCurvature, _t: float) -> float:
        ten = build_M_P(rm, t)
        if isinstance(rm, RiemCurvature):
            return min_Qtilde_admissible(ten, rm, p, None, budget, rng).min_value
        return min_Q_admissible(ten, rm, p, None, budget, rng).min_value

    return _probe


def mok_form_matrix(
    a: np.ndarray, c: np.ndarray, d: np.ndarray | None = None, b: np.ndarray | None = None
) -> np.ndarray:
    """Hermitian matrix of S(X, Y) = A X Xbar + C Y Ybar + cross terms.

    The cross term is either D_ij X^i Ybar^j (with its conjugate) or B_ij X^i Y^j
    (with its conjugate), never both. S >= 0 if and only if the matrix is PSD.
    """
    if (d is None) == (b is None):
        raise PreconditionError("Exactly one of the D and B cross terms is expected")
    if d is not None:
        return np.block([[a, d], [d.conj().T, c]])
    return np.block([[a, b], [b.conj().T, c.T]])


def mok_check(
    a: np.ndarray, c: np.ndarray, d: np.ndarray | None = None, b: np.ndarray | None = None
) -> Tuple[float, float]:
    """Return (lhs, rhs) of the trace inequality for a nonnegative form S.

    D variant: sum_ij A_ij C_ij >= Re sum_ij D_ij conj(D_ji).
    B variant: tr(AC) >= Re tr(B Bbar).
    Equality holds when S is a single square.

    Args:
        a (np.ndarray): Coefficients of X Xbar
        c (np.ndarray): Coefficients of Y Ybar
        d (np.ndarray | None): Coefficients of X Ybar
        b (np.ndarray | None): Coefficients of X Y

    Returns:
        Tuple[float, float]: Both sides

    """
    h = mok_form_matrix(a, c, d, b)
    if np.linalg.eigvalsh(h)[0] < -1e-10 * max(1.0, float(np.linalg.norm(h, 2))):
        raise PreconditionError("The form S is not nonnegative")
    if d is not None:
        return float(np.sum(a * c).real), float(np.sum(d * d.T.conj()).real)
    assert b is not None
    return float(np.trace(a @ c).real), float(np.trace(b @ b.conj()).real)


def mok_frobenius_rhs(cross: np.ndarray) -> float:
    """Return sum |cross_ij|^2, the right side of the Frobenius-norm variant."""
    return float(np.sum(np.abs(cross) ** 2))


def random_mok_blocks(
    rng: np.random.Generator, n: int, rank: int | None = None, cross: str = "D"
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Draw (A, C, cross) of a random nonnegative form S in 2n variables."""
    h = random_psd(rng, 2 * n, rank)
    a, off, c = h[:n, :n], h[:n, n:], h[n:, n:]
    if cross == "B":
        c = c.T
    return a, c, off


@dataclass(frozen=True)
class ExtensionReport:
    """Both sides of the trace rewriting of the zero-order extension terms."""

    direct: float
    trace: float
    square: float

    @property
    def defect(self) -> float:
        return abs(self.direct - self.trace) / max(1.0, abs(self.direct))


def kahler_extension_check(rm: KahlerCurvature, x: np.ndarray, y: np.ndarray, t: float) -> ExtensionReport:
    """Compare the zero-order terms at a homogeneous point with their trace form.

    The last columns of x and y are W and V; U = sum_mu X_mu ^ Ybar_mu.

    Args:
        rm (KahlerCurvature): The curvature
        x (np.ndarray): m x p matrix of X_mu
        y (np.ndarray): m x p matrix of Y_mu
        t (float): Time

    Returns:
        ExtensionReport: Direct sum, trace form and |Rm(U)|^2

    """
    ten = build_M_P(rm, t)
    m, p = x.shape
    r = rm.R
    w = x[:, -1]
    u = x @ y.conj().T
    direct = (
        np.einsum("abgd,dg,a,b->", r, ten.M, w, w.conj())
        + np.einsum("adxe,exgb,ab,dg->", r, r, u, u.conj())
        - np.einsum("axge,xbed,ab,dg->", r, r, u, u.conj())
        + np.sum(np.abs(np.einsum("axgd,ad->xg", r, u)) ** 2)
    )
    a1 = np.einsum("ijgd,im,jn->mgnd", r, x, x.conj()).reshape(p * m, p * m)
    a2 = np.einsum("ijgd,in,jm->ngmd", r, y, y.conj())
    a2[p - 1, :, p - 1, :] += ten.M
    a2 = a2.reshape(p * m, p * m)
    a3 = np.einsum("igkd,im,kn->mgnd", r, x, y).reshape(p * m, p * m)
    square = float(np.sum(np.abs(np.einsum("ijgd,ij->gd", r, u)) ** 2))
    trace = np.trace(a1 @ a2) + square - np.sum(a3 * a3.T.conj())
    return ExtensionReport(float(complex(direct).real), float(complex(trace).real), square)


def riem_extension_check(rm: RiemCurvature, ws: np.ndarray, zs: np.ndarray, t: float) -> ExtensionReport:
    """Riemannian counterpart with U = sum_mu W_mu ^ Z_mu and W = W_p."""
    ten = build_M_P(rm, t)
    n, p = ws.shape
    r = rm.R
    w = ws[:, -1]
    u = ws @ zs.T - zs @ ws.T
    direct = 2 * np.einsum("acbd,cd,a,b->", r, ten.M, w, w.conj()) + np.einsum(
        "aecf,bedf,ab,cd->", r, r, u, u.conj()
    )
    b1 = np.einsum("icjd,im,jn->mcnd", r, ws, ws.conj()).reshape(p * n, p * n)
    b2 = np.einsum("idjc,in,jm->ndmc", r, zs.conj(), zs)
    b2[p - 1, :, p - 1, :] += ten.M.T
    b2 = b2.reshape(p * n, p * n)
    b3 = np.einsum("icjd,im,jn->mcnd", r, ws, zs.conj()).reshape(p * n, p * n)
    trace = 2 * (np.trace(b1 @ b2) - np.sum(b3 * b3.T.conj()))
    rm_u = np.einsum("abcd,cd->ab", r, u) / 2
    square = float(np.sum(np.abs(rm_u) ** 2) / 2)
    return ExtensionReport(float(complex(direct).real), float(complex(trace).real), square)
