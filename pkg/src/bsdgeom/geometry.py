"""Metric-level quantities of a Kahler potential.

Index conventions: ``G[a, b] = g_{a bbar} = d^2 phi / dz^a dzbar^b`` and
``Ginv = inv(G)``, so ``g^{a bbar} = Ginv[b, a]``.  Functions accept one point
``(n,)`` or a batch ``(m, n)`` unless they return a :class:`HermitianForm`.

Derivatives of quantities that are already finite-difference results use
``FdConfig.nested_step``; with closed-form metrics one FD level suffices and
the tighter ``step``/``hess_step`` are used instead.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .calculus import (
    DEFAULT_FD,
    FdConfig,
    HermitianForm,
    PotentialFn,
    mixed_hessian_array,
    wirtinger_derivatives,
    wirtinger_grad,
)
from .domains import DomainSpec
from .errors import ContractError, DegenerateMetricError, DomainBoundaryError

__all__ = [
    "MetricField",
    "TangentVector",
    "bochner_terms",
    "christoffel",
    "constant_length_residual",
    "covariant_hessian",
    "dc_length_sq",
    "gauss_curvature_1d",
    "gradient_covariant_derivative",
    "gradient_length_sq",
    "gradient_vector",
    "laplace_beltrami",
    "metric_at",
    "ricci_at",
]


@dataclass(frozen=True)
class MetricField:
    """The Kahler metric ``g = i dd^c phi`` of a potential on a domain."""

    potential: PotentialFn
    domain: DomainSpec
    cfg: FdConfig = DEFAULT_FD

    def __post_init__(self):
        if self.potential.dim != self.domain.dim:
            raise ContractError(
                f"potential of dimension {self.potential.dim} on {self.domain.descriptor} (dim {self.domain.dim})"
            )

    @property
    def dim(self) -> int:
        return self.domain.dim

    @property
    def closed_form(self) -> bool:
        return self.potential.hess is not None

    @property
    def first_step(self) -> float:
        """Step for first derivatives of metric-level quantities."""
        return self.cfg.step if self.closed_form else self.cfg.nested_step

    @property
    def second_step(self) -> float:
        """Step for second derivatives of metric-level quantities."""
        return self.cfg.hess_step if self.closed_form else self.cfg.nested_step

    def metric(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        if self.potential.hess is not None:
            self._require_interior(z)
            return np.asarray(self.potential.hess(z), dtype=complex)
        return mixed_hessian_array(self.potential, z, self.cfg.hess_step,
                                   self.cfg.richardson, self.cfg.symmetrize)

    def _require_interior(self, z) -> None:
        for f, block in zip(self.domain.factors, self.domain.split(z)):
            if np.any(~(f.radius(block) < 1.0)):
                raise DomainBoundaryError(f"point on or outside the boundary of {f.descriptor}")

    def dphi(self, z) -> np.ndarray:
        """``phi_a = d phi / dz^a``."""
        return wirtinger_grad(self.potential, np.asarray(z, dtype=complex), self.cfg)

    def metric_inverse(self, z) -> np.ndarray:
        return _inverse(self.metric(z))

    def gradient_field(self, z) -> np.ndarray:
        """Components ``V^a = g^{a bbar} phi_bbar`` (batched)."""
        ginv = self.metric_inverse(z)
        return np.conj(np.einsum("...ab,...b->...a", ginv, self.dphi(z)))

    def length_sq_field(self, z) -> np.ndarray:
        """``|d phi|^2`` (batched)."""
        d = self.dphi(z)
        ginv = self.metric_inverse(z)
        return np.real(np.einsum("...a,...ab,...b->...", np.conj(d), ginv, d))


def _inverse(G: np.ndarray) -> np.ndarray:
    try:
        np.linalg.cholesky(G)
    except np.linalg.LinAlgError as exc:
        raise DegenerateMetricError("metric is not positive definite") from exc
    inv = np.linalg.inv(G)
    return 0.5 * (inv + np.conj(np.swapaxes(inv, -1, -2)))


def _single(z, dim) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    if z.shape != (dim,):
        raise ContractError(f"expected a single point of dimension {dim}, got shape {z.shape}")
    return z


@dataclass(frozen=True)
class TangentVector:
    """A (1,0) vector ``V^a d/dz^a`` at ``base``."""

    base: np.ndarray
    components: np.ndarray

    def norm_sq(self, m: MetricField) -> float:
        G = m.metric(self.base)
        return float(np.real(self.components @ G @ np.conj(self.components)))


def metric_at(m: MetricField, z) -> HermitianForm:
    """``g_{a bbar}(z)``; raises :class:`DegenerateMetricError` unless positive definite."""
    z = _single(z, m.dim)
    form = HermitianForm(m.metric(z))
    if not form.is_positive_definite:
        raise DegenerateMetricError(f"metric of {m.potential.label} is not positive definite at {z}")
    return form


def gradient_vector(m: MetricField, z) -> TangentVector:
    z = _single(z, m.dim)
    return TangentVector(z, m.gradient_field(z))


def gradient_length_sq(m: MetricField, z):
    """``phi_a phi_bbar g^{a bbar}``; float for one point, array for a batch."""
    out = m.length_sq_field(z)
    return float(out) if np.ndim(out) == 0 else out


def dc_length_sq(m: MetricField, z):
    """Pointwise length of the real one-form ``d^c phi``.

    Computed in real coordinates ``(x, y)`` against the Riemannian metric
    ``2 Re(g_{a bbar} dz^a dzbar^b)`` (the one with ``w = g(J., .)``), i.e.
    without going through ``|d phi|^2``.
    """
    z = np.asarray(z, dtype=complex)
    d = m.dphi(z)
    G = m.metric(z)
    # d^c phi = (i/2)(dbar phi - d phi): dx-part Im phi_a, dy-part Re phi_a
    eta = np.concatenate([np.imag(d), np.real(d)], axis=-1)
    A, B = np.real(G), np.imag(G)
    top = np.concatenate([A, B], axis=-1)
    bottom = np.concatenate([-B, A], axis=-1)
    riem = 2.0 * np.concatenate([top, bottom], axis=-2)
    sol = np.linalg.solve(riem, eta[..., None])[..., 0]
    out = np.sum(eta * sol, axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def christoffel(m: MetricField, z) -> np.ndarray:
    """``Gamma[c, a, b] = g^{c dbar} d_a g_{b dbar}``; shape ``(..., n, n, n)``."""
    z = np.asarray(z, dtype=complex)
    dG, _ = wirtinger_derivatives(m.metric, z, m.first_step, m.cfg.richardson)
    # dG[..., b, d, a] = d_a G[b, d]
    return np.einsum("...bda,...dc->...cab", dG, m.metric_inverse(z))


def gradient_covariant_derivative(m: MetricField, z) -> np.ndarray:
    """``V^a_{;b} = d_b V^a + Gamma^a_{b c} V^c`` as ``out[..., a, b]``; identically ``delta``."""
    z = np.asarray(z, dtype=complex)
    dV, _ = wirtinger_derivatives(m.gradient_field, z, m.first_step, m.cfg.richardson)
    gamma = christoffel(m, z)
    return dV + np.einsum("...abc,...c->...ab", gamma, m.gradient_field(z))


def covariant_hessian(m: MetricField, z) -> np.ndarray:
    """``phi_{a;b} = phi_{ab} - Gamma^c_{ab} phi_c``; symmetric in ``(a, b)``."""
    z = np.asarray(z, dtype=complex)
    ddphi, _ = wirtinger_derivatives(m.dphi, z, m.first_step, m.cfg.richardson)
    gamma = christoffel(m, z)
    return ddphi - np.einsum("...cab,...c->...ab", gamma, m.dphi(z))


def constant_length_residual(m: MetricField, z) -> np.ndarray:
    """``phi_{a;b} V^b + phi_a``: vanishes wherever ``d|d phi|^2 = 0``."""
    z = np.asarray(z, dtype=complex)
    S = covariant_hessian(m, z)
    return np.einsum("...ab,...b->...a", S, m.gradient_field(z)) + m.dphi(z)


def ricci_at(m: MetricField, z) -> HermitianForm:
    """``R_{a bbar} = -d_a d_bbar log det g`` at one point."""
    z = _single(z, m.dim)
    return HermitianForm(_ricci_array(m, z))


def _ricci_array(m: MetricField, z) -> np.ndarray:
    def logdet(w):
        sign, val = np.linalg.slogdet(m.metric(w))
        if np.any(np.real(sign) <= 0):
            raise DegenerateMetricError("metric determinant is not positive on the Ricci stencil")
        return val

    return -mixed_hessian_array(logdet, z, m.second_step, m.cfg.richardson)


def laplace_beltrami(f, m: MetricField, z):
    """``g^{a bbar} f_{a bbar}`` of a real field ``f``."""
    z = np.asarray(z, dtype=complex)
    closed = getattr(f, "hess", None)
    F = np.asarray(closed(z)) if closed is not None else mixed_hessian_array(
        f, z, m.second_step, m.cfg.richardson)
    out = np.real(np.einsum("...ba,...ab->...", m.metric_inverse(z), F))
    return float(out) if np.ndim(out) == 0 else out


def bochner_terms(m: MetricField, z, field=None):
    """Both sides of ``Lap |d phi|^2 = |nabla d phi|^2 + n - K |d phi|^2``.

    ``field`` replaces ``|d phi|^2`` on the left-hand side only.  Returns
    ``(lhs, rhs)``.
    """
    z = np.asarray(z, dtype=complex)
    lhs = laplace_beltrami(field if field is not None else m.length_sq_field, m, z)
    S = covariant_hessian(m, z)
    ginv = m.metric_inverse(z)
    sq = np.real(np.einsum("...ab,...gd,...ga,...db->...", S, np.conj(S), ginv, ginv))
    rhs = sq + m.dim - m.domain.ricci_constant * m.length_sq_field(z)
    return lhs, rhs


def gauss_curvature_1d(lam, zeta, step: float | None = None, use_richardson: bool = True):
    """Gaussian curvature of ``i lam(zeta) dzeta ^ dzetabar``: ``-(1/lam) d dbar log lam``.

    ``lam`` maps complex arrays of any shape to positive reals of the same shape.
    The normalization is the one for which ``2 / (K (1 - |zeta|^2)^2)`` has
    curvature ``-K``.
    """
    zeta = np.asarray(zeta, dtype=complex)
    step = DEFAULT_FD.hess_step if step is None else step

    def loglam(w):
        val = np.asarray(lam(w[..., 0]), dtype=float)
        if np.any(val <= 0):
            raise DegenerateMetricError("conformal factor must be positive")
        return np.log(val)

    lam0 = np.asarray(lam(zeta), dtype=float)
    if np.any(lam0 <= 0):
        raise DegenerateMetricError("conformal factor must be positive")
    H = mixed_hessian_array(loglam, zeta[..., None], step, use_richardson)[..., 0, 0]
    out = -np.real(H) / lam0
    return float(out) if np.ndim(out) == 0 else out
