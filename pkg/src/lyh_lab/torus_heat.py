#!/usr/bin/env python3
"""Spectral heat flow of (p,q)-form fields on the flat torus C^m / (Z + iZ)^m.

A field is an exterior Form whose coefficients are Fourier coefficient arrays of
shape (2N+1,)*2m; axis order is (a_1..a_m, b_1..b_m) for the mode
e_k(z) = exp(2 pi i (a.x + b.y)), z_j = x_j + i y_j, frequencies -N..N.
On e_k, d/dz_j acts as pi (b_j + i a_j), d/dzbar_j as pi (-b_j + i a_j), and
Delta_dbar = -sum_j d_j dbar_j has eigenvalue pi^2 |k|^2.
"""

import json
import logging
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Dict, List, Sequence, Tuple

import numpy as np

from . import exterior
from .exterior import DegreeError, Form
from .pp_forms import PPForm, PreconditionError, lelong_positivity, minors, plain_factor
from .rng import random_psd, random_unitary
from .search import SearchBudget, VerdictStatus
from .tensor_core import DimensionError, InvariantError, TimeError, multi_indices

logger = logging.getLogger(__name__)

GRID_CUTOFF = 8
EPS_REL = 1e-6  # strict positivity perturbation of optimal_V, relative to |phi|


class ClosednessError(Exception):
    """Raised when a form expected to be d-closed is not."""

    pass


@lru_cache(maxsize=None)
def _frequencies(m: int, cutoff: int) -> Tuple[np.ndarray, ...]:
    """Return the 2m broadcast frequency grids (a_1..a_m, b_1..b_m)."""
    f = np.arange(-cutoff, cutoff + 1)
    return tuple(np.meshgrid(*([f] * (2 * m)), indexing="ij"))


@lru_cache(maxsize=None)
def _k_squared(m: int, cutoff: int) -> np.ndarray:
    return sum(g.astype(float) ** 2 for g in _frequencies(m, cutoff))


def d_symbol(m: int, cutoff: int, j: int) -> np.ndarray:
    """Fourier multiplier of d/dz_j."""
    g = _frequencies(m, cutoff)
    return np.pi * (g[m + j] + 1j * g[j])


def dbar_symbol(m: int, cutoff: int, j: int) -> np.ndarray:
    """Fourier multiplier of d/dzbar_j."""
    g = _frequencies(m, cutoff)
    return np.pi * (-g[m + j] + 1j * g[j])


def laplacian_symbol(m: int, cutoff: int) -> np.ndarray:
    return np.pi**2 * _k_squared(m, cutoff)


@dataclass(frozen=True)
class SpectralField:
    """Truncated Fourier series of a differential form on the flat torus."""

    m: int
    cutoff: int
    form: Form

    def __post_init__(self) -> None:
        shape = self.shape
        for key, v in self.form.terms.items():
            if np.shape(v) != shape:
                raise DimensionError(f"Coefficient {key} has shape {np.shape(v)}, expected {shape}")

    @property
    def shape(self) -> Tuple[int, ...]:
        return (2 * self.cutoff + 1,) * (2 * self.m)

    @classmethod
    def zero(cls, m: int, cutoff: int) -> "SpectralField":
        return cls(m, cutoff, Form(m))

    @classmethod
    def constant(cls, form: Form, cutoff: int) -> "SpectralField":
        """Spread a form with scalar coefficients onto the zero mode."""
        shape = (2 * cutoff + 1,) * (2 * form.m)
        centre = (cutoff,) * (2 * form.m)

        def _lift(v: complex) -> np.ndarray:
            a = np.zeros(shape, dtype=complex)
            a[centre] = v
            return a

        return cls(form.m, cutoff, form.map(_lift))

    def with_form(self, form: Form) -> "SpectralField":
        return SpectralField(self.m, self.cutoff, form)

    def _check(self, other: "SpectralField") -> None:
        if (other.m, other.cutoff) != (self.m, self.cutoff):
            raise DimensionError(f"Fields on (m={self.m}, N={self.cutoff}) and (m={other.m}, N={other.cutoff})")

    def __add__(self, other: "SpectralField") -> "SpectralField":
        self._check(other)
        return self.with_form(self.form + other.form)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        self._check(other)
        return self.with_form(self.form - other.form)

    def __mul__(self, scalar: complex) -> "SpectralField":
        return self.with_form(self.form * scalar)

    def multiply(self, symbol: np.ndarray) -> "SpectralField":
        """Apply a Fourier multiplier to every coefficient."""
        return self.with_form(self.form.map(lambda v: v * symbol))

    def max_abs(self) -> float:
        return self.form.max_abs()

    def padded(self, cutoff: int) -> "SpectralField":
        """Embed the field into a larger mode cutoff."""
        if cutoff < self.cutoff:
            raise DimensionError(f"Cannot pad cutoff {self.cutoff} down to {cutoff}")
        w = cutoff - self.cutoff
        return replace(self, cutoff=cutoff, form=self.form.map(lambda v: np.pad(v, w)))

    def evaluate(self, points: np.ndarray | None = None) -> Form:
        """Synthesize the field at points of shape (P, 2m), or on the full equispaced grid when None."""
        if points is None:
            size = 2 * self.cutoff + 1
            scale = size ** (2 * self.m)
            return self.form.map(lambda v: (np.fft.ifftn(np.fft.ifftshift(v)) * scale).reshape(-1))
        points = np.atleast_2d(points)
        if points.shape[1] != 2 * self.m:
            raise DimensionError(f"Points need {2 * self.m} real coordinates, got {points.shape[1]}")
        f = np.arange(-self.cutoff, self.cutoff + 1)
        phases = [np.exp(2j * np.pi * np.outer(points[:, ax], f)) for ax in range(2 * self.m)]
        letters = "abcdefghijkl"[: 2 * self.m]
        subscripts = ",".join("p" + c for c in letters) + "," + letters + "->p"
        return self.form.map(lambda v: np.einsum(subscripts, *phases, v, optimize=True))


def grid_points(m: int, cutoff: int = GRID_CUTOFF) -> np.ndarray:
    """Return the equispaced grid in the order used by SpectralField.evaluate(None)."""
    size = 2 * cutoff + 1
    axes = [np.arange(size) / size] * (2 * m)
    return np.stack([g.reshape(-1) for g in np.meshgrid(*axes, indexing="ij")], axis=1)


@dataclass(frozen=True)
class SpectralPPField(SpectralField):
    """Spectral field of pure bidegree (p,p), stored in the plain coefficient convention."""

    p: int = 0

    def __post_init__(self) -> None:
        super().__post_init__()
        if self.p < 0 or self.p > self.m:
            raise DegreeError(f"Bidegree ({self.p},{self.p}) on C^{self.m}")
        if any(d != (self.p, self.p) for d in self.form.bidegrees()):
            raise DegreeError(f"Field of bidegrees {self.form.bidegrees()} is not of type ({self.p},{self.p})")

    @classmethod
    def from_field(cls, f: SpectralField, p: int) -> "SpectralPPField":
        return cls(f.m, f.cutoff, f.form, p)

    @classmethod
    def from_tensor_modes(cls, m: int, p: int, cutoff: int, modes: Dict[Tuple[int, ...], np.ndarray]) -> "SpectralPPField":
        """Build a field from tensor-convention coefficient matrices indexed by mode k."""
        idx = multi_indices(m, p)
        shape = (2 * cutoff + 1,) * (2 * m)
        terms = {(i, j): np.zeros(shape, dtype=complex) for i in idx for j in idx}
        factor = plain_factor(p)
        for k, c in modes.items():
            pos = tuple(cutoff + x for x in k)
            for a, i in enumerate(idx):
                for b, j in enumerate(idx):
                    terms[(i, j)][pos] += factor * c[a, b]
        return cls(m, cutoff, Form(m, terms), p)

    def tensor_at(self, values: Form) -> np.ndarray:
        """Stack tensor-convention coefficient matrices (P, n, n) from evaluated coefficients."""
        return _tensor_stack(values, self.m, self.p)

    def reality_residual(self) -> float:
        """Return max |C_{-k}(I,J) - conj(C_k(J,I))| in the tensor convention."""
        worst = 0.0
        f = plain_factor(self.p)
        for (i, j), v in self.form.terms.items():
            w = self.form.terms.get((j, i), 0.0)
            w = np.zeros(self.shape) if np.isscalar(w) else w
            worst = max(worst, float(np.max(np.abs(np.flip(v) / f - np.conj(w / f)))))
        return worst

    def snapshot_json(self) -> str:
        """Serialize the nonzero modes as pp-forms JSON entries plus the mode index."""
        f = plain_factor(self.p)
        modes: Dict[Tuple[int, ...], list] = {}
        for (i, j), v in self.form.terms.items():
            for pos in zip(*np.nonzero(v)):
                k = tuple(int(x) - self.cutoff for x in pos)
                c = complex(v[pos] / f)
                modes.setdefault(k, []).append([list(i), list(j), c.real, c.imag])
        payload = {
            "m": self.m,
            "p": self.p,
            "cutoff": self.cutoff,
            "modes": [{"k": list(k), "entries": e} for k, e in sorted(modes.items())],
        }
        return json.dumps(payload)


def _tensor_stack(values: Form, m: int, p: int) -> np.ndarray:
    idx = multi_indices(m, p)
    f = plain_factor(p)
    size = next((np.size(v) for v in values.terms.values()), 1)
    out = np.zeros((size, len(idx), len(idx)), dtype=complex)
    for a, i in enumerate(idx):
        for b, j in enumerate(idx):
            out[:, a, b] = np.asarray(values.coeff(i, j)) / f
    return out


def heat_evolve(phi: SpectralField, t: float) -> SpectralField:
    """Run the heat flow (d/dt + Delta_dbar) phi = 0 exactly for time t.

    Args:
        phi (SpectralField): Initial field
        t (float): Elapsed time, nonnegative

    Returns:
        SpectralField: The field at time t, of the same type as phi

    """
    if t < 0:
        raise TimeError(f"Heat flow runs forward only, got t={t}")
    decay = np.exp(-laplacian_symbol(phi.m, phi.cutoff) * t)
    return replace(phi, form=phi.form.map(lambda v: v * decay))


def laplacian(phi: SpectralField) -> SpectralField:
    return phi.multiply(laplacian_symbol(phi.m, phi.cutoff))


def _degree_guard(phi: SpectralField, side: int, what: str) -> None:
    if phi.form.terms and all(d[side] == 0 for d in phi.form.bidegrees()):
        raise DegreeError(f"{what} of a form with no {'holomorphic' if side == 0 else 'antiholomorphic'} degree")


def del_(phi: SpectralField) -> SpectralField:
    """Return d phi = sum_j dz^j ^ d_j phi."""
    out = Form(phi.m)
    for j in range(phi.m):
        sym = d_symbol(phi.m, phi.cutoff, j)
        out = out + exterior.dz(j, phi.form.map(lambda v, s=sym: v * s))
    return phi.with_form(out)


def dbar(phi: SpectralField) -> SpectralField:
    """Return dbar phi = sum_j dzbar^j ^ dbar_j phi."""
    out = Form(phi.m)
    for j in range(phi.m):
        sym = dbar_symbol(phi.m, phi.cutoff, j)
        out = out + exterior.dzbar(j, phi.form.map(lambda v, s=sym: v * s))
    return phi.with_form(out)


def _del_star(phi: SpectralField) -> SpectralField:
    out = Form(phi.m)
    for j in range(phi.m):
        out = out + exterior.iota(j, phi.form) * (-dbar_symbol(phi.m, phi.cutoff, j))
    return phi.with_form(out)


def _dbar_star(phi: SpectralField) -> SpectralField:
    out = Form(phi.m)
    for j in range(phi.m):
        out = out + exterior.iotabar(j, phi.form) * (-d_symbol(phi.m, phi.cutoff, j))
    return phi.with_form(out)


def del_star(phi: SpectralField) -> SpectralField:
    """Return the L^2 adjoint of del, -sum_j dbar_j iota_j."""
    _degree_guard(phi, 0, "del*")
    return _del_star(phi)


def dbar_star(phi: SpectralField) -> SpectralField:
    """Return the L^2 adjoint of dbar, -sum_j d_j iotabar_j."""
    _degree_guard(phi, 1, "dbar*")
    return _dbar_star(phi)


def lam(phi: SpectralField) -> SpectralField:
    return phi.with_form(exterior.contract(phi.form))


def lefschetz(phi: SpectralField) -> SpectralField:
    return phi.with_form(exterior.lefschetz(phi.form))


def star(phi: SpectralField) -> SpectralField:
    return phi.with_form(exterior.hodge_star(phi.form))


def _pure_degree(phi: SpectralField) -> Tuple[int, int]:
    degrees = phi.form.bidegrees()
    if len(degrees) != 1:
        raise DegreeError(f"Expected a field of pure bidegree, got {sorted(degrees)}")
    return next(iter(degrees))


def tensor_table(phi: SpectralPPField) -> SpectralField:
    """Tensor-convention coefficients phi_{I, Jbar} of a (p,p)-field, as a coefficient table."""
    return phi.with_form(phi.form * (1 / plain_factor(phi.p)))


def div_dprime(table: SpectralField) -> SpectralField:
    """Return div''(T)_{I, J'} = sum_i nabla_i T_{I, i J'} on a coefficient table."""
    a, b = _pure_degree(table)
    if b == 0:
        raise DegreeError("div'' needs antiholomorphic degree >= 1")
    m = table.m
    terms = {}
    for i in multi_indices(m, a):
        for j in multi_indices(m, b - 1):
            acc: np.ndarray | complex = 0.0
            for k in range(m):
                acc = acc + d_symbol(m, table.cutoff, k) * table.form.coeff(i, (k,) + j)
            terms[(i, j)] = np.broadcast_to(acc, table.shape).astype(complex)
    return table.with_form(Form(m, terms))


def div_prime(table: SpectralField) -> SpectralField:
    """Return div'(T)_{I', J} = sum_i nabla_ibar T_{i I', J} on a coefficient table."""
    a, b = _pure_degree(table)
    if a == 0:
        raise DegreeError("div' needs holomorphic degree >= 1")
    m = table.m
    terms = {}
    for i in multi_indices(m, a - 1):
        for j in multi_indices(m, b):
            acc: np.ndarray | complex = 0.0
            for k in range(m):
                acc = acc + dbar_symbol(m, table.cutoff, k) * table.form.coeff((k,) + i, j)
            terms[(i, j)] = np.broadcast_to(acc, table.shape).astype(complex)
    return table.with_form(Form(m, terms))


def l2_inner(a: SpectralField, b: SpectralField) -> complex:
    """L^2 inner product on the unit-volume torus via Parseval."""
    return complex(sum(np.vdot(b.form.terms[k], v) for k, v in a.form.terms.items() if k in b.form.terms))


def _rel(diff: SpectralField | Form, ref: float) -> float:
    return diff.max_abs() / max(1.0, ref)


def kahler_identities_check(phi: SpectralField) -> Tuple[float, float]:
    """Return the residuals of (del Lam - Lam del + i dbar*) phi and (dbar Lam - Lam dbar - i del*) phi."""
    ref = phi.max_abs() * math.pi * phi.cutoff * math.sqrt(2 * phi.m)
    first = del_(lam(phi)) - lam(del_(phi)) + _dbar_star(phi) * 1j
    second = dbar(lam(phi)) - lam(dbar(phi)) - _del_star(phi) * 1j
    return _rel(first, ref), _rel(second, ref)


def commutation_residuals(phi: SpectralField) -> Dict[str, float]:
    """Residuals of the operator identities of the flat torus on a field."""
    n2 = (math.pi * phi.cutoff) ** 2 * 2 * phi.m
    ref = phi.max_abs() * n2 * (1 + n2)
    out = {
        "[Lambda, del*]": _rel(lam(_del_star(phi)) - _del_star(lam(phi)), ref),
        "[Lambda, dbar*]": _rel(lam(_dbar_star(phi)) - _dbar_star(lam(phi)), ref),
        "[Delta, del*]": _rel(laplacian(_del_star(phi)) - _del_star(laplacian(phi)), ref),
        "[Delta, dbar*]": _rel(laplacian(_dbar_star(phi)) - _dbar_star(laplacian(phi)), ref),
        "[Delta, Lambda]": _rel(laplacian(lam(phi)) - lam(laplacian(phi)), ref),
        "[Delta, star]": _rel(laplacian(star(phi)) - star(laplacian(phi)), ref),
        "dbar* = -*del*": _rel(_dbar_star(phi) + star(del_(star(phi))), ref),
        "del* = -*dbar*": _rel(_del_star(phi) + star(dbar(star(phi))), ref),
        "Delta = dbar dbar* + dbar* dbar": _rel(laplacian(phi) - dbar(_dbar_star(phi)) - _dbar_star(dbar(phi)), ref),
    }
    return out


def adjointness_residuals(phi: SpectralField, eta_dbar: SpectralField, eta_del: SpectralField) -> Tuple[float, float]:
    """Return |<dbar phi, eta> - <phi, dbar* eta>| and its del counterpart, relative to the norms."""
    bound = math.pi * phi.cutoff * math.sqrt(2 * phi.m)

    def _scale(eta: SpectralField) -> float:
        return max(1.0, bound * math.sqrt(abs(l2_inner(phi, phi)) * abs(l2_inner(eta, eta))))

    r1 = abs(l2_inner(dbar(phi), eta_dbar) - l2_inner(phi, _dbar_star(eta_dbar)))
    r2 = abs(l2_inner(del_(phi), eta_del) - l2_inner(phi, _del_star(eta_del)))
    return r1 / _scale(eta_dbar), r2 / _scale(eta_del)


def _contract_first(values: Form, v: Sequence[np.ndarray], m: int, q: int) -> Form:
    """Insert V into the first holomorphic slot of a (q+1, q) coefficient table."""
    idx = multi_indices(m, q)
    return Form(m, {(i, j): sum(v[a] * values.coeff((a,) + i, j) for a in range(m)) for i in idx for j in idx})


def _contract_first_bar(values: Form, v: Sequence[np.ndarray], m: int, q: int) -> Form:
    """Insert Vbar into the first antiholomorphic slot of a (q, q+1) coefficient table."""
    idx = multi_indices(m, q)
    return Form(m, {(i, j): sum(np.conj(v[a]) * values.coeff(i, (a,) + j) for a in range(m)) for i in idx for j in idx})


def divergence_identification_check(phi: SpectralPPField, v: np.ndarray, points: np.ndarray) -> Dict[str, float]:
    """Compare the adjoint operators with the divergence formulas.

    Checks (1/i) iota_V dbar* phi = div''_V phi, (1/i) iota_Vbar del* phi = -div'_Vbar phi,
    dbar* del* phi = i div'' div' phi and del* dbar* phi = -i div' div'' phi, in the tensor convention.

    Args:
        phi (SpectralPPField): A (p,p)-field, p >= 1
        v (np.ndarray): Vector values of shape (P, m)
        points (np.ndarray): Points of shape (P, 2m)

    Returns:
        Dict[str, float]: Named residuals

    """
    m, p = phi.m, phi.p
    q = p - 1
    comps = [v[:, a] for a in range(m)]
    table = tensor_table(phi)
    scale = max(1.0, phi.max_abs() * (math.pi * phi.cutoff) ** 2 * 2 * m)

    lhs1 = exterior.iota_v(comps, dbar_star(phi).evaluate(points)) * (-1j / plain_factor(q))
    rhs1 = _contract_first(div_dprime(table).evaluate(points), comps, m, q)
    lhs2 = exterior.iota_v(comps, del_star(phi).evaluate(points), "antiholomorphic") * (-1j / plain_factor(q))
    rhs2 = _contract_first_bar(div_prime(table).evaluate(points), comps, m, q) * -1.0
    lhs3 = dbar_star(del_star(phi)) * (1 / plain_factor(q))
    rhs3 = div_dprime(div_prime(table)) * 1j
    lhs4 = del_star(dbar_star(phi)) * (1 / plain_factor(q))
    rhs4 = div_prime(div_dprime(table)) * -1j
    return {
        "dbar* vs div''": (lhs1 - rhs1).max_abs() / scale,
        "del* vs div'": (lhs2 - rhs2).max_abs() / scale,
        "dbar* del* vs div'' div'": (lhs3 - rhs3).max_abs() / scale,
        "del* dbar* vs div' div''": (lhs4 - rhs4).max_abs() / scale,
    }


@dataclass(frozen=True)
class VectorField:
    """Pointwise values of a (1,0) vector field, optionally marked as LYH minimizers."""

    values: np.ndarray
    optimal: bool = False
    singular: np.ndarray | None = None

    @classmethod
    def zeros(cls, count: int, m: int) -> "VectorField":
        return cls(np.zeros((count, m), dtype=complex))

    def components(self) -> List[np.ndarray]:
        return [self.values[:, a] for a in range(self.values.shape[1])]


class QJet:
    """Pointwise data of a (p,p)-field entering the LYH quantity Q at time t."""

    def __init__(self, phi: SpectralPPField, t: float, points: np.ndarray | None) -> None:
        if t <= 0:
            raise TimeError(f"Q needs t > 0, got {t}")
        if phi.p == 0:
            raise DegreeError("Q is defined for p >= 1")
        self.m, self.p, self.t = phi.m, phi.p, t
        ds = del_star(phi)
        dbs = dbar_star(phi)
        self.phi = phi.evaluate(points)
        self.ds = ds.evaluate(points)
        self.dbs = dbs.evaluate(points)
        self.base = dbar_star(ds).evaluate(points) * (-1j) + lam(phi).evaluate(points) * (1 / t)
        self.count = len(next(iter(self.phi.terms.values())))

    def q(self, v: VectorField) -> Form:
        """Return (1/i) dbar* del* phi + (1/i) iota_V dbar* phi - (1/i) iota_Vbar del* phi + i iota_V iota_Vbar phi + Lam phi / t."""
        if v.values.shape != (self.count, self.m):
            raise DimensionError(f"Vector field of shape {v.values.shape} for {self.count} points")
        c = v.components()
        return (
            self.base
            + exterior.iota_v(c, self.dbs) * (-1j)
            + exterior.iota_v(c, self.ds, "antiholomorphic") * 1j
            + exterior.iota_v(c, exterior.iota_v(c, self.phi, "antiholomorphic")) * 1j
        )


def eval_Q(phi: SpectralPPField, v: VectorField, t: float, points: np.ndarray | None = None) -> Form:
    """Evaluate the (p-1,p-1)-form Q(phi, V) at points (full grid when None)."""
    return QJet(phi, t, points).q(v)


def eval_Q_dual(psi: SpectralField, v: VectorField, t: float, points: np.ndarray | None = None) -> Form:
    """Evaluate i dd-bar psi + i V* ^ dbar psi - i Vbar* ^ del psi + i V* ^ Vbar* ^ psi + omega ^ psi / t.

    V* = sum conj(V^j) dz^j and Vbar* = sum V^j dzbar^j.
    """
    if t <= 0:
        raise TimeError(f"Q* needs t > 0, got {t}")
    m = psi.m
    c = v.components()
    v_star = Form(m, {((j,), ()): np.conj(c[j]) for j in range(m)})
    vbar_star = Form(m, {((), (j,)): c[j] for j in range(m)})
    psi_vals = psi.evaluate(points)
    return (
        del_(dbar(psi)).evaluate(points) * 1j
        + exterior.wedge(v_star, dbar(psi).evaluate(points)) * 1j
        - exterior.wedge(vbar_star, del_(psi).evaluate(points)) * 1j
        + exterior.wedge(v_star, exterior.wedge(vbar_star, psi_vals)) * 1j
        + exterior.wedge(exterior.omega(m), psi_vals) * (1 / t)
    )


def duality_check(phi: SpectralPPField, v: VectorField, t: float, points: np.ndarray | None = None) -> float:
    """Return max |Q(phi, V) - *Q*(*phi, V)| over the points, relative to |Q|."""
    lhs = eval_Q(phi, v, t, points)
    rhs = exterior.hodge_star(eval_Q_dual(star(phi), v, t, points))
    return (lhs - rhs).max_abs() / max(1.0, lhs.max_abs())


def lambda_commutes_with_Q(phi: SpectralPPField, v: VectorField, t: float, points: np.ndarray | None = None) -> float:
    """Return the residual of Lambda(Q(phi, V)) = Q(Lambda phi, V); needs p >= 2."""
    lhs = exterior.contract(eval_Q(phi, v, t, points))
    rhs = eval_Q(SpectralPPField.from_field(lam(phi), phi.p - 1), v, t, points)
    return (lhs - rhs).max_abs() / max(1.0, lhs.max_abs())


def pair_with_frame(values: Form, m: int, q: int, frame: np.ndarray | None) -> np.ndarray:
    """Pair a (q,q)-form sampled at points with the frame v_1..v_q; returns the real values."""
    c = _tensor_stack(values, m, q)
    xi = np.ones(1, dtype=complex) if q == 0 else minors(frame)
    paired = np.einsum("i,pij,j->p", xi, c, xi.conj())
    scale = max(1.0, float(np.max(np.abs(paired), initial=0.0)))
    if np.max(np.abs(paired.imag), initial=0.0) > 1e-9 * scale:
        raise InvariantError("Frame-paired Q is not real")
    return paired.real


def _quadratic_form(jet: QJet, phi: Form, frame: np.ndarray | None) -> np.ndarray:
    """Return G, the Hermitian part of the paired Q in V, for the pointwise values phi."""
    m, q = jet.m, jet.p - 1
    g = np.zeros((jet.count, m, m), dtype=complex)
    for k in range(m):
        bar_k = exterior.iotabar(k, phi)
        for j in range(m):
            # coefficient of V^j conj(V^k)
            g[:, k, j] = _paired_complex(exterior.iota(j, bar_k) * 1j, m, q, frame)
    return (g + g.conj().transpose(0, 2, 1)) / 2


def _solve_quadratic(c0: np.ndarray, lb: np.ndarray, g: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    ginv = np.linalg.pinv(g, hermitian=True)
    v = -np.einsum("pij,pj->pi", ginv, lb)
    return v, c0 - np.einsum("pi,pij,pj->p", lb.conj(), ginv, lb).real


def optimal_V(
    jet: QJet, frame: np.ndarray | None, eps: float | None = None, singular_tol: float = 1e-12
) -> Tuple[VectorField, np.ndarray]:
    """Minimize the frame-paired Q over V at every sampled point.

    The paired value is c0 + lb^H V + V^H lb + V^H G V. The minimizer solves G V = -lb
    for phi + eps omega^p at eps and eps/2, and the minima and minimizers are
    Richardson-extrapolated to eps = 0. Points where the perturbed G is still
    singular, or eps = 0, fall back to the pseudo-inverse of G. Points with a
    singular unperturbed G are flagged.

    Args:
        jet (QJet): Pointwise data of the field
        frame (np.ndarray | None): m x (p-1) frame, None when p = 1
        eps (float | None): Strict positivity perturbation, 1e-6 |phi| when None
        singular_tol (float): Relative eigenvalue threshold for the singular flag

    Returns:
        Tuple[VectorField, np.ndarray]: The minimizers and the minimum values

    """
    m, q = jet.m, jet.p - 1
    if eps is None:
        eps = EPS_REL * jet.phi.max_abs()
    if eps < 0:
        raise ValueError(f"Perturbation must be nonnegative, got {eps}")
    lb = np.stack(
        [np.broadcast_to(_paired_complex(exterior.iotabar(j, jet.ds) * 1j, m, q, frame), (jet.count,)) for j in range(m)],
        axis=1,
    )
    c0 = np.broadcast_to(pair_with_frame(jet.base, m, q, frame), (jet.count,))
    g = _quadratic_form(jet, jet.phi, frame)
    eig = np.linalg.eigvalsh(g)
    singular = eig[:, 0] <= singular_tol * np.maximum(1.0, np.abs(eig[:, -1]))
    v, minima = _solve_quadratic(c0, lb, g)
    if eps > 0:
        omega_p = exterior.omega_power(m, jet.p)
        c_w = float(_paired_complex(exterior.contract(omega_p) * (1 / jet.t), m, q, frame).real[0])
        g_w = _quadratic_form(jet, omega_p, frame)
        v1, m1 = _solve_quadratic(c0 + eps * c_w, lb, g + eps * g_w)
        v2, m2 = _solve_quadratic(c0 + eps / 2 * c_w, lb, g + eps / 2 * g_w)
        half = np.linalg.eigvalsh(g + eps / 2 * g_w)
        ok = half[:, 0] > singular_tol * np.maximum(1.0, np.abs(half[:, -1]))
        v[ok] = 2 * v2[ok] - v1[ok]
        minima[ok] = 2 * m2[ok] - m1[ok]
        if not np.all(ok):
            logger.debug(f"Pseudo-inverse fallback at {int((~ok).sum())} points")
    if np.any(singular):
        logger.debug(f"Singular Q form at {int(singular.sum())} points")
    return VectorField(v, optimal=True, singular=singular), minima


def _paired_complex(values: Form, m: int, q: int, frame: np.ndarray | None) -> np.ndarray:
    c = _tensor_stack(values, m, q)
    xi = np.ones(1, dtype=complex) if q == 0 else minors(frame)
    return np.einsum("i,pij,j->p", xi, c, xi.conj())


def paired_Q(jet: QJet, v: VectorField, frame: np.ndarray | None) -> np.ndarray:
    """Return Q(phi, V) paired with the frame at every sampled point."""
    return pair_with_frame(jet.q(v), jet.m, jet.p - 1, frame)


def frames(rng: np.random.Generator, m: int, q: int, extra: int = 0) -> List[Tuple[str, np.ndarray | None]]:
    """Coordinate frames e_I for |I| = q plus extra random unitary frames."""
    if q == 0:
        return [("empty", None)]
    eye = np.eye(m, dtype=complex)
    out: List[Tuple[str, np.ndarray | None]] = [
        ("e" + "".join(str(i) for i in idx), eye[:, list(idx)]) for idx in multi_indices(m, q)
    ]
    for r in range(extra):
        out.append((f"random{r}", random_unitary(rng, m)[:, :q]))
    return out


def sample_points(rng: np.random.Generator, m: int, count: int) -> np.ndarray:
    return rng.random((count, 2 * m))


def li_yau_scalar(psi: SpectralField, t: float, points: np.ndarray | None = None) -> np.ndarray:
    """Return sum_j d_j dbar_j log psi + m/t at points for a positive scalar field."""
    if t <= 0:
        raise TimeError(f"Li-Yau quantity needs t > 0, got {t}")
    if psi.form.bidegrees() - {(0, 0)}:
        raise DegreeError("li_yau_scalar needs a (0,0)-field")
    m, n = psi.m, psi.cutoff
    scalar = psi.form.terms[((), ())]

    def _at(symbol: np.ndarray | float) -> np.ndarray:
        f = SpectralField(m, n, Form(m, {((), ()): scalar * symbol}))
        return np.asarray(f.evaluate(points).terms[((), ())])

    value = _at(1.0).real
    if np.min(value) <= 0:
        raise InvariantError("li_yau_scalar needs a positive field")
    total = np.zeros_like(value)
    for j in range(m):
        dj, dbj = d_symbol(m, n, j), dbar_symbol(m, n, j)
        total += (value * _at(dj * dbj) - _at(dj) * _at(dbj)).real / value**2
    return total + m / t


def periodized_gaussian(m: int, cutoff: int, t: float) -> SpectralPPField:
    """Heat kernel of the torus at time t, sum_k exp(-pi^2 |k|^2 t) e_k."""
    if t <= 0:
        raise TimeError(f"Heat kernel needs t > 0, got {t}")
    coeffs = np.exp(-laplacian_symbol(m, cutoff) * t).astype(complex)
    return SpectralPPField(m, cutoff, Form(m, {((), ()): coeffs}), 0)


def _random_mode(rng: np.random.Generator, m: int, modes: int) -> Tuple[int, ...]:
    while True:
        k = tuple(int(x) for x in rng.integers(-modes, modes + 1, size=2 * m))
        if any(k):
            return k


def positive_field(
    rng: np.random.Generator,
    m: int,
    p: int,
    cutoff: int,
    modes: int = 2,
    amplitude: float = 0.5,
    count: int = 3,
) -> SpectralPPField:
    """Draw omega^p + sum_r eps_r cos(2 pi k_r . x) P_r with PSD tensors P_r.

    The eigenvalues of the tensor coefficients stay above p! (1 - amplitude).
    """
    if not 0 <= amplitude <= 1:
        raise ValueError(f"Amplitude must lie in [0, 1], got {amplitude}")
    n = math.comb(m, p)
    fact = math.factorial(p)
    table: Dict[Tuple[int, ...], np.ndarray] = {(0,) * (2 * m): fact * np.eye(n, dtype=complex)}
    psds = [random_psd(rng, n, int(rng.integers(1, n + 1))) for _ in range(count)]
    weights = rng.random(count)
    total = sum(w * np.linalg.norm(a, 2) for w, a in zip(weights, psds))
    for w, a in zip(weights, psds):
        k = _random_mode(rng, m, min(modes, cutoff))
        eps_r = amplitude * fact * w / total
        for kk in (k, tuple(-x for x in k)):
            table[kk] = table.get(kk, 0) + eps_r / 2 * a
    return SpectralPPField.from_tensor_modes(m, p, cutoff, table)


def closed_positive_field(
    rng: np.random.Generator,
    m: int,
    p: int,
    cutoff: int,
    modes: int = 2,
    amplitude: float = 0.5,
    count: int = 3,
) -> SpectralPPField:
    """Draw (omega + eps i dd-bar f) ^ omega^{p-1} for a real trigonometric polynomial f."""
    if p < 1 or p > m:
        raise DegreeError(f"Closed positive data needs 1 <= p <= m, got p={p}")
    shape = (2 * cutoff + 1,) * (2 * m)
    f_hat = np.zeros(shape, dtype=complex)
    bound = 0.0
    for _ in range(count):
        k = _random_mode(rng, m, min(modes, cutoff))
        a = float(rng.standard_normal())
        for kk in (k, tuple(-x for x in k)):
            f_hat[tuple(cutoff + x for x in kk)] += a / 2
        bound += abs(a) * np.pi**2 * sum(x * x for x in k)
    f = SpectralField(m, cutoff, Form(m, {((), ()): f_hat}))
    base = SpectralField.constant(exterior.omega(m), cutoff) + del_(dbar(f)) * (1j * amplitude / bound)
    form = exterior.wedge(exterior.omega_power(m, p - 1), base.form)
    return SpectralPPField(m, cutoff, form, p)


def random_field(
    rng: np.random.Generator, m: int, p: int, q: int, cutoff: int, real: bool = False
) -> SpectralField:
    """Draw a smooth random (p,q)-field; real fields need p == q."""
    shape = (2 * cutoff + 1,) * (2 * m)
    damp = np.exp(-_k_squared(m, cutoff) / max(1, cutoff))
    terms = {}
    for i in multi_indices(m, p):
        for j in multi_indices(m, q):
            terms[(i, j)] = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * damp
    form = Form(m, terms)
    if not real:
        return SpectralField(m, cutoff, form)
    if p != q:
        raise DegreeError("Real fields have bidegree (p,p)")
    f = plain_factor(p)
    sym = {
        (i, j): (v / f + np.conj(np.flip(terms[(j, i)] / f))) / 2 * f for (i, j), v in terms.items()
    }
    return SpectralPPField(m, cutoff, Form(m, sym), p)


def _min_positivity(phi: SpectralPPField, points: np.ndarray | None, budget: SearchBudget, rng: np.random.Generator) -> float:
    c = phi.tensor_at(phi.evaluate(points))
    c = (c + c.conj().transpose(0, 2, 1)) / 2
    if phi.p in (0, 1, phi.m):
        return float(np.min(np.linalg.eigvalsh(c)[:, 0]))
    # Lelong positivity is weaker than PSD coefficients; search only where PSD fails
    eig = np.linalg.eigvalsh(c)[:, 0]
    worst = float(np.min(eig))
    if worst >= 0:
        return worst
    worst = np.inf
    for idx in np.flatnonzero(eig < 0):
        verdict = lelong_positivity(PPForm(phi.m, phi.p, c[idx]), budget, rng)
        worst = min(worst, verdict.min_value)
    return float(worst)


@dataclass
class PositivityReport:
    """Minimum of Lelong positivity over the sample points at each time."""

    times: List[float]
    minima: List[float]

    @property
    def minimum(self) -> float:
        return min(self.minima)

    def passed(self, tol: float = 1e-8) -> bool:
        return self.minimum >= -tol


def positivity_preservation_run(
    phi0: SpectralPPField,
    times: Sequence[float],
    points: np.ndarray | None = None,
    budget: SearchBudget = SearchBudget(),
    rng: np.random.Generator | None = None,
) -> PositivityReport:
    """Evolve a certified positive field and re-test positivity at each time.

    Args:
        phi0 (SpectralPPField): Initial field
        times (Sequence[float]): Times to test
        points (np.ndarray | None): Sample points, the full grid when None
        budget (SearchBudget): Budget of the Lelong searches
        rng (np.random.Generator | None): Source of restarts

    Returns:
        PositivityReport: Minima per time

    """
    rng = rng if rng is not None else np.random.Generator(np.random.Philox(0))
    start = _min_positivity(phi0, points, budget, rng)
    if start < -budget.tol_in * max(1.0, phi0.max_abs()):
        raise PreconditionError(f"Initial field is not positive (minimum {start:.3e})")
    report = PositivityReport([], [])
    for t in times:
        value = _min_positivity(SpectralPPField.from_field(heat_evolve(phi0, t), phi0.p), points, budget, rng)
        report.times.append(float(t))
        report.minima.append(value)
        logger.debug(f"Positivity minimum at t={t}: {value:.3e}")
    return report


@dataclass
class QRun:
    """Worst frame-paired Q with optimal V per (time, frame)."""

    rows: List[dict] = field(default_factory=list)

    @property
    def minimum(self) -> float:
        return min((r["min_paired_Q"] for r in self.rows), default=np.inf)


def q_minimum_run(
    phi0: SpectralPPField,
    times: Sequence[float],
    frame_list: Sequence[Tuple[str, np.ndarray | None]],
    points: np.ndarray | None = None,
) -> QRun:
    """Evaluate min_V Q(phi(t), V) paired with each frame and keep the worst point per (t, frame)."""
    sample = points if points is not None else grid_points(phi0.m, phi0.cutoff)
    run = QRun()
    for t in times:
        phi_t = SpectralPPField.from_field(heat_evolve(phi0, t), phi0.p)
        jet = QJet(phi_t, t, points)
        for frame_id, frame in frame_list:
            v, minima = optimal_V(jet, frame)
            worst = int(np.argmin(minima))
            run.rows.append(
                {
                    "t": repr(float(t)),
                    "point": ";".join(repr(float(x)) for x in sample[worst]),
                    "frame_id": frame_id,
                    "min_paired_Q": float(minima[worst]),
                    "V_used": ";".join(f"{complex(z).real!r}{complex(z).imag:+}j" for z in v.values[worst]),
                }
            )
    return run


def closedness_residual(phi: SpectralField) -> float:
    """Return max |d phi| relative to max(1, |phi|)."""
    return max(del_(phi).max_abs(), dbar(phi).max_abs()) / max(1.0, phi.max_abs())


@dataclass
class MonotonicitySeries:
    """The series t -> t * integral of Lambda phi ^ omega^{m-p+1}."""

    times: List[float]
    values: List[float]

    def slopes(self) -> np.ndarray:
        return np.diff(self.values) / np.diff(self.times)

    def nondecreasing(self, slack: float = 1e-10) -> bool:
        scale = max(1.0, max(abs(v) for v in self.values))
        return bool(np.all(np.diff(self.values) >= -slack * scale))


def monotonicity_check(phi0: SpectralPPField, times: Sequence[float]) -> MonotonicitySeries:
    """Evaluate t * int Lambda phi(t) ^ omega^{m-p+1} along the heat flow of a d-closed field."""
    if phi0.p < 1:
        raise DegreeError("Monotonicity needs p >= 1")
    residual = closedness_residual(phi0)
    if residual > 1e-12:
        raise ClosednessError(f"Initial field is not d-closed (residual {residual:.3e})")
    m = phi0.m
    full = tuple(range(m))
    centre = (phi0.cutoff,) * (2 * m)
    power = exterior.omega_power(m, m - phi0.p + 1)
    series = MonotonicitySeries([], [])
    for t in times:
        if t < 0:
            raise TimeError(f"Negative time {t}")
        top = exterior.wedge(power, lam(heat_evolve(phi0, t)).form)
        coeff = np.asarray(top.coeff(full, full))
        integral = complex(coeff[centre] / plain_factor(m)) if coeff.ndim else complex(coeff)
        series.times.append(float(t))
        series.values.append(float(t) * integral.real)
    return series
