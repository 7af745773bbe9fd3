"""Built-in Kahler potentials of the Kahler-Einstein metric.

``standard_potential`` is the log-kernel potential.  The ``ko_*`` potentials
differ from it by a pluriharmonic term chosen so that the gradient length is
constant; on the polydisc

    phi = (1/K) sum_a log( |1 - e^{i t_a} z_a|^4 / (1 - |z_a|^2)^2 ),

and on the ball ``phi = (c/K) log(|1 - <z, b>|^2 / (1 - |z|^2))`` for a unit
boundary point ``b``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .calculus import PotentialFn
from .domains import Ball, Disc, DomainSpec, IrreducibleFactor, Polydisc, log_kernel_potential
from .errors import ConfigError, ContractError, DomainBoundaryError

__all__ = [
    "KoParams",
    "ko_potential",
    "ko_potential_ball",
    "ko_potential_polydisc",
    "parse_perturbation",
    "perturb_pluriharmonic",
    "product_potential",
    "standard_potential",
]


@dataclass(frozen=True)
class KoParams:
    """Parameters of the constant-gradient-length potentials.

    ``thetas``: one rotation angle per disc factor (default all zero).
    ``direction``: unit boundary point ``b`` of a ball (default ``e_1``).
    """

    thetas: tuple[float, ...] = ()
    direction: tuple[complex, ...] | None = None
    K: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "thetas", tuple(float(t) for t in self.thetas))
        if self.direction is not None:
            b = tuple(complex(c) for c in self.direction)
            if abs(np.linalg.norm(b) - 1.0) > 1e-12:
                raise ContractError(f"KO direction must be a unit vector, |b| = {np.linalg.norm(b)}")
            object.__setattr__(self, "direction", b)
        if not self.K > 0:
            raise ContractError("K must be positive")


def _one_minus_sq(z, axis=None):
    s = np.abs(z) ** 2 if axis is None else np.sum(np.abs(z) ** 2, axis=axis)
    t = 1.0 - s
    if np.any(t <= 0):
        raise DomainBoundaryError("point outside the domain")
    return t


def _ball_hess(z, coef):
    t = 1.0 - np.sum(np.abs(z) ** 2, axis=-1)
    n = z.shape[-1]
    outer = np.conj(z)[..., :, None] * z[..., None, :]
    return coef * (np.eye(n) / t[..., None, None] + outer / (t**2)[..., None, None])


def _polydisc_hess(z, coef):
    t = 1.0 - np.abs(z) ** 2
    n = z.shape[-1]
    return coef * np.eye(n) * (1.0 / t**2)[..., None, :]


def _ball_standard(n: int, genus: int, K: float) -> PotentialFn:
    coef = genus / K

    def func(z):
        return -coef * np.log(_one_minus_sq(z, axis=-1))

    def grad(z):
        t = 1.0 - np.sum(np.abs(z) ** 2, axis=-1)
        return coef * np.conj(z) / t[..., None]

    return PotentialFn(func, n, label="standard", grad=grad, hess=lambda z: _ball_hess(z, coef))


def _polydisc_standard(n: int, genus: int, K: float) -> PotentialFn:
    coef = genus / K

    def func(z):
        return -coef * np.sum(np.log(_one_minus_sq(z)), axis=-1)

    def grad(z):
        return coef * np.conj(z) / (1.0 - np.abs(z) ** 2)

    return PotentialFn(func, n, label="standard", grad=grad, hess=lambda z: _polydisc_hess(z, coef))


def _factor_standard(f: IrreducibleFactor, K: float) -> PotentialFn:
    if isinstance(f, (Disc, Ball)):
        return _ball_standard(f.dim, f.genus, K)
    if isinstance(f, Polydisc):
        return _polydisc_standard(f.dim, f.genus, K)
    # no closed form: differentiate the log-kernel numerically
    return log_kernel_potential(DomainSpec((f,), K))


def product_potential(parts: Sequence[PotentialFn], label: str | None = None) -> PotentialFn:
    """Blockwise sum of potentials living on consecutive coordinate blocks.

    Closed-form derivatives are kept only when every part has them.
    """
    parts = list(parts)
    if not parts:
        raise ContractError("product_potential needs at least one part")
    if len(parts) == 1 and label is None:
        return parts[0]
    offsets = np.cumsum([0] + [p.dim for p in parts])
    blocks = [slice(offsets[i], offsets[i + 1]) for i in range(len(parts))]
    dim = int(offsets[-1])
    label = label if label is not None else " x ".join(p.label for p in parts)

    def func(z):
        return sum(p.func(z[..., b]) for p, b in zip(parts, blocks))

    grad = hess = None
    if all(p.grad is not None for p in parts):
        def grad(z):
            return np.concatenate([np.asarray(p.grad(z[..., b]), dtype=complex)
                                   for p, b in zip(parts, blocks)], axis=-1)

    if all(p.hess is not None for p in parts):
        def hess(z):
            out = np.zeros(z.shape[:-1] + (dim, dim), dtype=complex)
            for p, b in zip(parts, blocks):
                out[..., b, b] = p.hess(z[..., b])
            return out

    return PotentialFn(func, dim, label=label, grad=grad, hess=hess)


def standard_potential(domain: DomainSpec) -> PotentialFn:
    """The log-kernel potential, with closed-form derivatives for disc, ball and polydisc factors."""
    K = domain.ricci_constant
    parts = [_factor_standard(f, K) for f in domain.factors]
    return product_potential(parts, label=f"standard[{domain.descriptor}]")


def ko_potential_polydisc(n: int, params: KoParams = KoParams(), genus: int = 2) -> PotentialFn:
    """Constant-gradient-length potential of the polydisc; ``|d phi|^2 = genus * n / K``."""
    if n < 1:
        raise ContractError("n must be at least 1")
    thetas = params.thetas or (0.0,) * n
    if len(thetas) != n:
        raise ContractError(f"need {n} angles, got {len(thetas)}")
    rot = np.exp(1j * np.asarray(thetas))
    coef = genus / params.K

    def func(z):
        t = _one_minus_sq(z)
        num = np.abs(1.0 - rot * z) ** 2
        if np.any(num == 0):
            raise DomainBoundaryError("evaluation at the boundary pole of the KO potential")
        return coef * np.sum(np.log(num) - np.log(t), axis=-1)

    def grad(z):
        return coef * (np.conj(z) / (1.0 - np.abs(z) ** 2) - rot / (1.0 - rot * z))

    return PotentialFn(func, n, label=f"ko-polydisc:{n}", grad=grad,
                       hess=lambda z: _polydisc_hess(z, coef))


def ko_potential_ball(n: int, params: KoParams = KoParams(), genus: int | None = None) -> PotentialFn:
    """``phi = (c/K) log(|1 - <z, b>|^2 / (1 - |z|^2))`` with ``c = n + 1`` by default.

    The term ``log|1 - <z, b>|^2`` is pluriharmonic, so the metric is the ball's
    Kahler-Einstein metric; the gradient length is the constant ``c / K``.
    """
    if n < 1:
        raise ContractError("n must be at least 1")
    c = n + 1 if genus is None else genus
    b = np.zeros(n, dtype=complex)
    if params.direction is None:
        b[0] = 1.0
    else:
        if len(params.direction) != n:
            raise ContractError(f"direction must have {n} components")
        b[:] = params.direction
    coef = c / params.K

    def pairing(z):
        return np.sum(z * np.conj(b), axis=-1)

    def func(z):
        t = _one_minus_sq(z, axis=-1)
        num = np.abs(1.0 - pairing(z)) ** 2
        if np.any(num == 0):
            raise DomainBoundaryError("evaluation at the boundary pole of the KO potential")
        return coef * (np.log(num) - np.log(t))

    def grad(z):
        t = 1.0 - np.sum(np.abs(z) ** 2, axis=-1)
        return coef * (np.conj(z) / t[..., None] - np.conj(b) / (1.0 - pairing(z))[..., None])

    return PotentialFn(func, n, label=f"ko-ball:{n}", grad=grad, hess=lambda z: _ball_hess(z, coef))


def ko_potential(domain: DomainSpec, thetas: Sequence[float] | None = None,
                 direction: Sequence[complex] | None = None) -> PotentialFn:
    """Product of KO potentials over the factors of ``domain``.

    ``thetas`` are consumed in order by the disc coordinates (``disc`` and
    ``polydisc`` factors); ``direction`` is used by every ball factor of the
    matching dimension.
    """
    K = domain.ricci_constant
    thetas = list(thetas or [])
    n_disc = sum(f.dim for f in domain.factors if isinstance(f, (Disc, Polydisc)))
    if thetas and len(thetas) != n_disc:
        raise ConfigError(f"{domain.descriptor} has {n_disc} disc coordinates, got {len(thetas)} angles")
    parts = []
    pos = 0
    for f in domain.factors:
        if isinstance(f, (Disc, Polydisc)):
            th = tuple(thetas[pos:pos + f.dim]) if thetas else ()
            pos += f.dim
            parts.append(ko_potential_polydisc(f.dim, KoParams(th, K=K), genus=f.genus))
        elif isinstance(f, Ball):
            d = direction if direction is not None and len(direction) == f.dim else None
            if direction is not None and d is None:
                raise ConfigError(f"direction has {len(direction)} components, ball:{f.dim} needs {f.dim}")
            parts.append(ko_potential_ball(f.dim, KoParams(direction=d, K=K), genus=f.genus))
        else:
            raise ConfigError(f"no constant-length potential is built in for {f.descriptor}")
    return product_potential(parts, label=f"ko[{domain.descriptor}]")


@dataclass(frozen=True)
class _Monomials:
    exponents: np.ndarray  # (terms, n) integers
    coeffs: np.ndarray  # (terms,) complex
    dim: int = 0

    def value(self, z):
        powers = np.prod(z[..., None, :] ** self.exponents, axis=-1)
        return powers @ self.coeffs

    def gradient(self, z):
        # d/dz_a of sum c z^m = sum c m_a z^(m - e_a)
        out = []
        for a in range(self.dim):
            m = self.exponents.copy()
            lead = m[:, a].astype(float)
            m[:, a] = np.maximum(m[:, a] - 1, 0)
            powers = np.prod(z[..., None, :] ** m, axis=-1)
            out.append(powers @ (self.coeffs * lead))
        return np.stack(out, axis=-1)


def perturb_pluriharmonic(base: PotentialFn, coeffs: Sequence[tuple[Sequence[int], complex]]) -> PotentialFn:
    """``base + 2 Re h`` with ``h = sum c_m z^m``; the mixed hessian is untouched."""
    coeffs = list(coeffs)
    if not coeffs:
        return base
    exps = np.array([list(m) for m, _ in coeffs], dtype=int)
    if exps.ndim != 2 or exps.shape[1] != base.dim or np.any(exps < 0):
        raise ContractError(f"multi-indices must be {base.dim} non-negative integers")
    poly = _Monomials(exps, np.array([complex(c) for _, c in coeffs]), base.dim)

    def func(z):
        return base.func(z) + 2.0 * np.real(poly.value(z))

    grad = None
    if base.grad is not None:
        def grad(z):
            return base.grad(z) + poly.gradient(z)

    return PotentialFn(func, base.dim, label=f"{base.label}+pluriharmonic", grad=grad, hess=base.hess)


_TERM = re.compile(r"^\s*(?P<coef>[^@]+)@(?P<idx>[\d,\s]+)\s*$")


def parse_perturbation(spec: str, dim: int) -> list[tuple[tuple[int, ...], complex]]:
    """Parse ``"coef@i1,...,in;coef@..."``, e.g. ``"0.1@2"`` or ``"0.05+0.1j@1,0"``."""
    terms = []
    for chunk in filter(None, (c.strip() for c in spec.split(";"))):
        m = _TERM.match(chunk)
        if not m:
            raise ConfigError(f"malformed perturbation term {chunk!r}")
        try:
            coef = complex(m["coef"].replace(" ", ""))
            idx = tuple(int(i) for i in m["idx"].split(","))
        except ValueError as exc:
            raise ConfigError(f"malformed perturbation term {chunk!r}") from exc
        if len(idx) != dim:
            raise ConfigError(f"multi-index {idx} needs {dim} entries")
        terms.append((idx, coef))
    return terms
