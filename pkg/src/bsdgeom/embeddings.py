"""Totally geodesic holomorphic discs, maximal polydiscs and gradient flows."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .calculus import holomorphic_derivative
from .domains import Ball, Disc, DomainSpec, Polydisc, TypeI, contains
from .errors import (
    ConfigError,
    ContractError,
    DegenerateMetricError,
    DomainBoundaryError,
    InconsistentEmbeddingError,
)
from .geometry import MetricField, gauss_curvature_1d

__all__ = [
    "DiscEmbedding",
    "FlowResult",
    "Mobius",
    "PolydiscEmbedding",
    "RANK_WINDOW",
    "diagonal_disc",
    "disc_rank_measured",
    "flow_gradient",
    "geodesic_disc_through",
    "maximal_polydisc_typeI",
    "pullback_curvature",
    "pullback_metric_1d",
    "schwarz_pick_residual",
]

RANK_WINDOW = 0.05


@dataclass(frozen=True)
class DiscEmbedding:
    """A holomorphic map of the unit disc into ``target``.

    ``map`` sends complex arrays of shape ``(...)`` to points ``(..., dim)``.
    ``active_genera`` lists the genus of each factor slot the disc moves in; a
    totally geodesic disc then has curvature ``-2K / sum(active_genera)``.
    """

    map: Callable
    target: DomainSpec
    active_genera: tuple[int, ...]
    derivative: Callable | None = None
    label: str = ""

    @property
    def declared_rank(self) -> int:
        return len(self.active_genera)

    def expected_curvature(self, K: float | None = None) -> float:
        K = self.target.ricci_constant if K is None else K
        return -2.0 * K / sum(self.active_genera)

    def __call__(self, zeta):
        return self.map(np.asarray(zeta, dtype=complex))

    def tangent(self, zeta) -> np.ndarray:
        zeta = np.asarray(zeta, dtype=complex)
        if self.derivative is not None:
            return np.asarray(self.derivative(zeta), dtype=complex)
        return holomorphic_derivative(self.map, zeta)


def _linear_disc(vec: np.ndarray, target: DomainSpec, genera, label: str) -> DiscEmbedding:
    vec = np.asarray(vec, dtype=complex)
    return DiscEmbedding(
        map=lambda zeta: np.asarray(zeta)[..., None] * vec,
        target=target,
        active_genera=tuple(genera),
        derivative=lambda zeta: np.broadcast_to(vec, np.shape(zeta) + vec.shape).copy(),
        label=label,
    )


def diagonal_disc(n: int, k: int, K: float = 1.0) -> DiscEmbedding:
    """``zeta -> (zeta, ..., zeta, 0, ..., 0)`` with ``k`` copies, into ``polydisc:n``."""
    if not 1 <= k <= n:
        raise ContractError(f"need 1 <= k <= n, got k={k}, n={n}")
    vec = np.zeros(n, dtype=complex)
    vec[:k] = 1.0
    target = DomainSpec((Polydisc(n),), K)
    return _linear_disc(vec, target, (2,) * k, f"diagonal:{n},{k}")


@dataclass(frozen=True)
class PolydiscEmbedding:
    """Linear polydisc ``(zeta^1, ..., zeta^r) -> sum_j zeta^j basis[j]``."""

    basis: np.ndarray
    target: DomainSpec
    genus: int
    label: str = ""

    @property
    def r(self) -> int:
        return self.basis.shape[0]

    def map(self, zetas) -> np.ndarray:
        return np.asarray(zetas, dtype=complex) @ self.basis

    def coordinate_disc(self, j: int) -> DiscEmbedding:
        if not 0 <= j < self.r:
            raise ContractError(f"coordinate {j} out of range for rank {self.r}")
        return _linear_disc(self.basis[j], self.target, (self.genus,), f"{self.label}[{j}]")

    def full_rank_disc(self) -> DiscEmbedding:
        return _linear_disc(self.basis.sum(axis=0), self.target, (self.genus,) * self.r,
                            f"{self.label}[diag]")


def maximal_polydisc_typeI(p: int, q: int, K: float = 1.0) -> PolydiscEmbedding:
    """``diag(zeta^1, ..., zeta^r)`` in the leading block of a ``p x q`` matrix."""
    if p < 1 or q < 1:
        raise ContractError("p and q must be positive")
    r = min(p, q)
    basis = np.zeros((r, p * q), dtype=complex)
    for j in range(r):
        basis[j, j * q + j] = 1.0
    factor = TypeI(p, q)
    return PolydiscEmbedding(basis, DomainSpec((factor,), K), factor.genus, f"maxpoly:{p},{q}")


def pullback_metric_1d(u: DiscEmbedding, m: MetricField, zeta, margin: float = 0.0):
    """``lam(zeta) = u'^T g(u) conj(u')``, the coefficient of ``u^* omega``."""
    zeta = np.asarray(zeta, dtype=complex)
    if np.any(np.abs(zeta) >= 1.0 - margin):
        raise DomainBoundaryError("disc parameter too close to the unit circle")
    pts = u(zeta)
    if not np.all(contains(m.domain, pts, margin)):
        raise DomainBoundaryError(f"{u.label} leaves {m.domain.descriptor}")
    du = u.tangent(zeta)
    lam = np.real(np.einsum("...a,...ab,...b->...", du, m.metric(pts), np.conj(du)))
    if np.any(lam <= 0):
        raise DegenerateMetricError("pullback metric vanishes (zero tangent)")
    return float(lam) if np.ndim(lam) == 0 else lam


def pullback_curvature(u: DiscEmbedding, m: MetricField, zeta):
    """Gaussian curvature of ``u^* omega`` at ``zeta``."""
    return gauss_curvature_1d(lambda w: pullback_metric_1d(u, m, w), zeta,
                              step=m.second_step, use_richardson=m.cfg.richardson)


def disc_rank_measured(u: DiscEmbedding, m: MetricField,
                       ricci_constants: Sequence[float] | None = None) -> int:
    """Rank ``k`` read off the pullback coefficient at the centre.

    On a polydisc with one Ricci constant ``K``, ``lam(0) = 2k/K``.  With
    per-coordinate constants ``K_a`` the coordinate subsets whose ``sum 2/K_a``
    matches ``lam(0)`` are enumerated; all of them must have the same size.
    """
    lam = pullback_metric_1d(u, m, 0.0)
    if ricci_constants is None:
        k = lam * m.domain.ricci_constant / 2.0
        if abs(k - round(k)) > RANK_WINDOW or round(k) < 1:
            raise InconsistentEmbeddingError(f"measured rank {k:.4f} is not an integer")
        return int(round(k))
    weights = 2.0 / np.asarray(ricci_constants, dtype=float)
    window = RANK_WINDOW * weights.min()
    sizes = {
        size
        for size in range(1, len(weights) + 1)
        for sub in itertools.combinations(weights, size)
        if abs(sum(sub) - lam) <= window
    }
    if len(sizes) != 1:
        raise InconsistentEmbeddingError(f"pullback coefficient {lam:.6g} fits ranks {sorted(sizes)}")
    return sizes.pop()


@dataclass(frozen=True)
class Mobius:
    """Disc automorphism ``e^{i theta} (zeta - a) / (1 - conj(a) zeta)``."""

    a: complex = 0.0
    theta: float = 0.0

    def __post_init__(self):
        if abs(self.a) >= 1:
            raise ContractError("Mobius parameter must lie in the open disc")

    def __call__(self, zeta):
        zeta = np.asarray(zeta, dtype=complex)
        return np.exp(1j * self.theta) * (zeta - self.a) / (1 - np.conj(self.a) * zeta)

    def derivative(self, zeta):
        zeta = np.asarray(zeta, dtype=complex)
        return np.exp(1j * self.theta) * (1 - abs(self.a) ** 2) / (1 - np.conj(self.a) * zeta) ** 2


def schwarz_pick_residual(u: Callable, zeta) -> float:
    """``| |u'|^2 - ((1 - |u|^2) / (1 - |zeta|^2))^2 |``; zero exactly for automorphisms."""
    zeta = complex(zeta)
    if abs(zeta) >= 1:
        raise ContractError("zeta must lie in the open unit disc")
    deriv = getattr(u, "derivative", None)
    du = deriv(zeta) if deriv is not None else holomorphic_derivative(u, zeta)
    w = complex(np.asarray(u(zeta)))
    ratio = (1 - abs(w) ** 2) / (1 - abs(zeta) ** 2)
    return float(abs(abs(complex(du)) ** 2 - ratio ** 2))


@dataclass(frozen=True)
class FlowResult:
    times: np.ndarray
    points: np.ndarray
    escaped: bool = False
    meta: dict = field(default_factory=dict)


def flow_gradient(m: MetricField, z0, t_max: float = 2.0, dt: float = 1e-3,
                  margin: float = 0.01) -> FlowResult:
    """Fixed-step RK4 for ``dz/dt = V(z)``.

    Stops early, with ``escaped=True`` and the partial trajectory, once a step
    would leave the domain shrunk by ``margin``.
    """
    if dt <= 0 or t_max < 0:
        raise ContractError("need dt > 0 and t_max >= 0")
    z = np.asarray(z0, dtype=complex)
    if z.shape != (m.dim,) or not contains(m.domain, z, margin):
        raise DomainBoundaryError("flow must start at an interior point")
    steps = int(round(t_max / dt))
    V = m.gradient_field
    pts = [z]
    escaped = False
    for _ in range(steps):
        try:
            k1 = V(z)
            k2 = V(z + 0.5 * dt * k1)
            k3 = V(z + 0.5 * dt * k2)
            k4 = V(z + dt * k3)
        except (DomainBoundaryError, DegenerateMetricError):
            escaped = True
            break
        nxt = z + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not contains(m.domain, nxt, margin):
            escaped = True
            break
        z = nxt
        pts.append(z)
    pts = np.array(pts)
    return FlowResult(dt * np.arange(len(pts)), pts, escaped)


def _slot_layout(domain: DomainSpec):
    """(factor index, coordinate slice, kind, genus) per disc slot or ball factor."""
    slots = []
    for block, f in zip(domain.blocks, domain.factors):
        if isinstance(f, (Disc, Polydisc)):
            for j in range(block.start, block.stop):
                slots.append((slice(j, j + 1), "disc", f.genus))
        elif isinstance(f, Ball):
            slots.append((block, "ball", f.genus))
        else:
            raise ConfigError(f"geodesic discs through arbitrary points are not built for {f.descriptor}")
    return slots


def _ball_frame(a: np.ndarray):
    """Projection ``P`` onto ``a``, its complement ``Q`` and ``s = sqrt(1 - |a|^2)``."""
    nrm2 = float(np.real(np.vdot(a, a)))
    P = np.outer(a, np.conj(a)) / nrm2 if nrm2 > 0 else np.zeros((len(a), len(a)), complex)
    return P, np.eye(len(a)) - P, np.sqrt(1.0 - nrm2)


def _ball_automorphism(a: np.ndarray):
    """The involution of the ball exchanging ``0`` and ``a``."""
    P, Q, s = _ball_frame(a)

    def phi(w):
        num = a - w @ P.T - s * (w @ Q.T)
        return num / (1.0 - w @ np.conj(a))[..., None]

    return phi


def geodesic_disc_through(domain: DomainSpec, z, v, tol: float = 1e-6):
    """Totally geodesic disc ``u`` with ``u(0) = z`` and ``u'(0)`` parallel to ``v``.

    Works slot by slot (each polydisc coordinate, each ball factor): the
    automorphism moving ``0`` to the slot's point pulls ``v`` back to a vector
    ``t`` at the origin.  A geodesic disc exists when the nonzero ``|t|`` are all
    equal; ``mismatch`` is the largest distance of ``|t| / max|t|`` from
    ``{0, 1}``.  Slots with ratio above one half count as active.
    Returns ``(disc, mismatch)``.
    """
    z = domain.check_point(z)
    v = np.asarray(v, dtype=complex)
    slots = _slot_layout(domain)
    pulled = []
    for sl, kind, _ in slots:
        zs, vs = z[sl], v[sl]
        if kind == "disc":
            pulled.append(vs / (1.0 - abs(zs[0]) ** 2))
        else:
            P, Q, s = _ball_frame(zs)
            pulled.append(-(P @ vs) / s ** 2 - (Q @ vs) / s)
    speeds = np.array([np.linalg.norm(t) for t in pulled])
    top = speeds.max()
    if top <= tol:
        raise DegenerateMetricError("zero tangent vector")
    ratios = speeds / top
    mismatch = float(np.max(np.minimum(ratios, np.abs(1.0 - ratios))))
    active = ratios > 0.5
    units = [t / top for t in pulled]
    genera = tuple(g for (_, _, g), on in zip(slots, active) if on)

    def parts(zeta):
        zeta = np.asarray(zeta, dtype=complex)
        vals, ders = [], []
        for (sl, kind, _), t, on in zip(slots, units, active):
            zs = z[sl]
            if not on:
                vals.append(np.broadcast_to(zs, zeta.shape + zs.shape))
                ders.append(np.zeros(zeta.shape + zs.shape, complex))
            elif kind == "disc":
                e = t[0] / abs(t[0])
                den = 1.0 + np.conj(zs[0]) * e * zeta
                vals.append(((zs[0] + e * zeta) / den)[..., None])
                ders.append((e * (1.0 - abs(zs[0]) ** 2) / den ** 2)[..., None])
            else:
                e = t / np.linalg.norm(t)
                vals.append(_ball_automorphism(zs)(zeta[..., None] * e))
                ders.append(None)
        return vals, ders

    def umap(zeta):
        return np.concatenate(parts(zeta)[0], axis=-1)

    has_ball = any(kind == "ball" for (_, kind, _), on in zip(slots, active) if on)
    deriv = None
    if not has_ball:
        def deriv(zeta):
            return np.concatenate(parts(zeta)[1], axis=-1)

    disc = DiscEmbedding(umap, domain, genera, deriv, label="geodesic")
    return disc, mismatch

