"""Wirtinger calculus by finite differences, and hermitian linear algebra.

Every scalar or vector field in this package is *batched*: it takes a complex
array of shape ``(..., n)`` and returns an array of shape ``(...)`` (scalar
fields) or ``(..., k)`` (vector fields).  All stencils below are evaluated in a
single call of the field, so fields written with numpy broadcasting are cheap
to differentiate even when the differentiation is nested.

Conventions::

    d/dz^a    = (d/dx^a - i d/dy^a) / 2
    d/dzbar^a = (d/dx^a + i d/dy^a) / 2

and the mixed hessian ``H[a, b] = d^2 f / dz^a dzbar^b`` is hermitian for real
``f``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional

import numpy as np

from .errors import ContractError, DegenerateMetricError

__all__ = [
    "FdConfig",
    "HermitianForm",
    "PotentialFn",
    "holomorphic_derivative",
    "hermitian_inverse",
    "mixed_hessian",
    "mixed_hessian_array",
    "richardson",
    "wirtinger_derivatives",
    "wirtinger_grad",
]

log = logging.getLogger(__name__)

Field = Callable[[np.ndarray], np.ndarray]

ASYMMETRY_WARN = 1e-8


@dataclass(frozen=True)
class FdConfig:
    """Finite-difference settings.

    ``step`` drives first derivatives, ``hess_step`` second derivatives of a
    field evaluated directly, and ``nested_step`` any derivative of a field
    that is itself a finite-difference result (Ricci form, Christoffel symbols
    of an FD metric, ...).  Each step is multiplied by ``max(1, |z|)``.
    """

    step: float = 1e-5
    hess_step: float = 2e-3
    nested_step: float = 5e-3
    richardson: bool = True
    symmetrize: bool = True

    def __post_init__(self):
        for name in ("step", "hess_step", "nested_step"):
            if not getattr(self, name) > 0:
                raise ContractError(f"FdConfig.{name} must be positive")

    def check_margin(self, margin: float) -> None:
        """Raise unless every stencil stays inside a domain shrunk by ``margin``."""
        widest = max(self.step, self.hess_step, self.nested_step)
        if widest > margin / 4:
            raise ContractError(
                f"FD step {widest:g} exceeds margin/4 = {margin / 4:g}; "
                "stencils could leave the domain"
            )


DEFAULT_FD = FdConfig()


@dataclass(frozen=True)
class PotentialFn:
    """A real scalar field with optional closed-form Wirtinger derivatives.

    ``func``  maps ``(..., n)`` to ``(...)`` real values.
    ``grad``  maps ``(..., n)`` to ``(..., n)``: ``df/dz^a``.
    ``hess``  maps ``(..., n)`` to ``(..., n, n)``: ``d^2 f / dz^a dzbar^b``.
    """

    func: Field
    dim: int
    label: str = ""
    grad: Optional[Field] = None
    hess: Optional[Field] = None

    def __call__(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        if z.shape[-1] != self.dim:
            raise ContractError(f"{self.label or 'potential'} expects dimension {self.dim}, got {z.shape[-1]}")
        return self.func(z)

    @property
    def closed_form(self) -> bool:
        return self.grad is not None and self.hess is not None


def richardson(coarse, fine, order: int = 2, ratio: float = 2.0):
    """Cancel the leading ``h**order`` error term of two estimates at ``h`` and ``h/ratio``."""
    factor = ratio**order
    return (factor * fine - coarse) / (factor - 1.0)


def _as_points(z) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    if z.ndim == 0:
        raise ContractError("points must be arrays with a trailing coordinate axis")
    return z


def _real_directions(n: int) -> np.ndarray:
    """The 2n real coordinate directions of C^n: e_1..e_n, then i e_1..i e_n."""
    eye = np.eye(n, dtype=complex)
    return np.concatenate([eye, 1j * eye])


def _scaled_step(z: np.ndarray, step: float) -> np.ndarray:
    return step * np.maximum(1.0, np.linalg.norm(z, axis=-1))


def _evaluate_stencil(f: Field, z: np.ndarray, offsets: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Evaluate ``f(z + h * offset)`` for every offset; stencil axis right after the batch axes."""
    pts = z[..., None, :] + h[..., None, None] * offsets
    return np.asarray(f(pts))


def wirtinger_derivatives(f: Field, z, step: float, use_richardson: bool = True):
    """Both Wirtinger derivatives of a (possibly complex-valued) field.

    Returns ``(dz, dzbar)``, each of shape ``(*batch, *value_shape, n)``.
    Central differences along the 2n real directions; optional Richardson
    step-halving lifts the error from O(h^2) to O(h^4).
    """
    z = _as_points(z)
    batch_nd = z.ndim - 1
    n = z.shape[-1]
    dirs = _real_directions(n)
    levels = (1.0, 0.5) if use_richardson else (1.0,)
    offsets = np.concatenate([s * sign * dirs for s in levels for sign in (1.0, -1.0)])
    h = _scaled_step(z, step)
    vals = np.moveaxis(_evaluate_stencil(f, z, offsets, h), batch_nd, 0)
    value_nd = vals.ndim - 1 - batch_nd
    vals = vals.reshape((len(levels), 2, 2 * n) + vals.shape[1:])
    hb = h.reshape(h.shape + (1,) * value_nd)
    estimates = [(vals[i, 0] - vals[i, 1]) / (2.0 * s * hb) for i, s in enumerate(levels)]
    real_grad = richardson(*estimates, order=2) if use_richardson else estimates[0]
    real_grad = np.moveaxis(real_grad, 0, -1)
    dx, dy = real_grad[..., :n], real_grad[..., n:]
    return 0.5 * (dx - 1j * dy), 0.5 * (dx + 1j * dy)


def wirtinger_grad(f, z, cfg: FdConfig = DEFAULT_FD) -> np.ndarray:
    """Vector of ``df/dz^a``; uses ``f.grad`` when the field carries one."""
    z = _as_points(z)
    closed = getattr(f, "grad", None)
    if closed is not None:
        return np.asarray(closed(z))
    dz, _ = wirtinger_derivatives(f, z, cfg.step, cfg.richardson)
    return dz


def _real_hessian(f: Field, z: np.ndarray, step: float, use_richardson: bool) -> np.ndarray:
    batch_nd = z.ndim - 1
    n = z.shape[-1]
    m = 2 * n
    dirs = _real_directions(n)
    iu, ju = np.triu_indices(m, k=1)
    levels = (1.0, 0.5) if use_richardson else (1.0,)
    blocks = [np.zeros((1, n), dtype=complex)]
    for s in levels:
        blocks.append(s * dirs)
        blocks.append(-s * dirs)
        for si, sj in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
            blocks.append(s * (si * dirs[iu] + sj * dirs[ju]))
    offsets = np.concatenate(blocks)
    h = _scaled_step(z, step)
    vals = np.asarray(_evaluate_stencil(f, z, offsets, h))
    if vals.shape[batch_nd + 1:]:
        raise ContractError("mixed_hessian requires a scalar field")
    center = vals[..., 0]
    npair = len(iu)
    per_level = 2 * m + 4 * npair
    estimates = []
    for k, s in enumerate(levels):
        base = 1 + k * per_level
        plus = vals[..., base:base + m]
        minus = vals[..., base + m:base + 2 * m]
        cross = vals[..., base + 2 * m:base + per_level].reshape(z.shape[:-1] + (4, npair))
        hs = (s * h)[..., None]
        hess = np.empty(z.shape[:-1] + (m, m), dtype=vals.dtype)
        diag = (plus - 2.0 * center[..., None] + minus) / hs**2
        off = (cross[..., 0, :] - cross[..., 1, :] - cross[..., 2, :] + cross[..., 3, :]) / (4.0 * hs**2)
        idx = np.arange(m)
        hess[..., idx, idx] = diag
        hess[..., iu, ju] = off
        hess[..., ju, iu] = off
        estimates.append(hess)
    return richardson(*estimates) if use_richardson else estimates[0]


def mixed_hessian_array(f: Field, z, step: float, use_richardson: bool = True,
                        symmetrize: bool = True) -> np.ndarray:
    """Batched ``d^2 f / dz^a dzbar^b``, shape ``(*batch, n, n)``.

    Complex-valued ``f`` is differentiated correctly too; pass
    ``symmetrize=False`` to keep its non-hermitian part.
    """
    z = _as_points(z)
    n = z.shape[-1]
    real = _real_hessian(f, z, step, use_richardson)
    xx = real[..., :n, :n]
    yy = real[..., n:, n:]
    xy = real[..., :n, n:]
    yx = real[..., n:, :n]
    hess = 0.25 * ((xx + yy) + 1j * (xy - yx))
    if symmetrize:
        hess = 0.5 * (hess + np.conj(np.swapaxes(hess, -1, -2)))
    return hess


@dataclass(frozen=True)
class HermitianForm:
    """The matrix ``G[a, b] = g_{a bbar}`` of a hermitian form at one point."""

    entries: np.ndarray
    asymmetry: float = 0.0

    def __post_init__(self):
        a = np.asarray(self.entries, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ContractError(f"hermitian form needs a square matrix, got shape {a.shape}")
        object.__setattr__(self, "entries", a)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @cached_property
    def is_positive_definite(self) -> bool:
        try:
            np.linalg.cholesky(self.entries)
        except np.linalg.LinAlgError:
            return False
        return True

    @cached_property
    def determinant(self) -> float:
        return float(np.linalg.det(self.entries).real)

    @cached_property
    def inverse(self) -> "HermitianForm":
        return hermitian_inverse(self)


def hermitian_inverse(G: HermitianForm) -> HermitianForm:
    """Inverse of a positive-definite hermitian form.

    The returned matrix ``Ginv`` satisfies ``G @ Ginv = I``; in index notation
    ``g^{a bbar} = Ginv[b, a]``.
    """
    a = G.entries if isinstance(G, HermitianForm) else np.asarray(G, dtype=complex)
    try:
        chol = np.linalg.cholesky(a)
    except np.linalg.LinAlgError as exc:
        raise DegenerateMetricError("matrix is not positive definite") from exc
    eye = np.eye(a.shape[0])
    linv = np.linalg.solve(chol, eye)
    inv = linv.conj().T @ linv
    return HermitianForm(0.5 * (inv + inv.conj().T))


def mixed_hessian(f, z, cfg: FdConfig = DEFAULT_FD) -> HermitianForm:
    """Mixed complex hessian of a real field at a single point.

    Uses ``f.hess`` when available.  With ``cfg.symmetrize`` the FD result is
    replaced by ``(H + H^*)/2`` and the removed asymmetry is kept on the form
    as a diagnostic.
    """
    z = _as_points(z)
    if z.ndim != 1:
        raise ContractError("mixed_hessian takes a single point; use mixed_hessian_array for batches")
    closed = getattr(f, "hess", None)
    if closed is not None:
        return HermitianForm(np.asarray(closed(z)))
    raw = mixed_hessian_array(f, z, cfg.hess_step, cfg.richardson, symmetrize=False)
    asym = float(np.max(np.abs(raw - raw.conj().T)))
    if asym > ASYMMETRY_WARN * max(1.0, float(np.max(np.abs(raw)))):
        log.warning("mixed hessian asymmetry %.3g at %s", asym, z)
    if cfg.symmetrize:
        raw = 0.5 * (raw + raw.conj().T)
    return HermitianForm(raw, asymmetry=asym)


def holomorphic_derivative(u: Callable, zeta, radius: float = 1e-2, nodes: int = 8):
    """Derivative of a holomorphic map by the trapezoid rule on a small circle.

    ``u'(zeta) = (1 / (N r)) sum_k w^{-k} u(zeta + r w^k)`` with ``w`` the N-th
    root of unity.  Exact for polynomials of degree < N; for analytic maps the
    error decays like ``r**N``, so ``r`` can be large enough to keep rounding
    at the ``eps / r`` level.  Two nodes give the plain central difference.
    """
    zeta = np.asarray(zeta, dtype=complex)
    roots = np.exp(2j * np.pi * np.arange(nodes) / nodes)
    pts = zeta[..., None] + radius * roots
    vals = np.asarray(u(pts))
    # vals: (*zeta.shape, nodes, *out)
    axis = zeta.ndim
    weights = roots.conj().reshape((nodes,) + (1,) * (vals.ndim - axis - 1))
    return np.sum(vals * weights, axis=axis) / (nodes * radius)
