"""Bounded symmetric domains in their Harish-Chandra realization.

A :class:`DomainSpec` is an ordered product of factors.  Points are complex
arrays whose trailing axis concatenates the factor coordinates in order; a
``TypeI(p, q)`` block is a ``p x q`` matrix flattened row-major.

The Bergman kernel of an irreducible factor is ``c * N(z, w) ** -genus``.  The
constant ``c`` only shifts ``log K`` by a constant, so every potential built
here drops it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, ClassVar

import numpy as np

from .calculus import PotentialFn
from .errors import ConfigError, ContractError, DomainBoundaryError, SamplingError

__all__ = [
    "Ball",
    "Disc",
    "DomainSpec",
    "IrreducibleFactor",
    "Polydisc",
    "TypeI",
    "contains",
    "generic_norm",
    "khl_length_sq",
    "log_kernel_potential",
    "parse_domain",
    "register_factor",
    "sample_interior",
]

DEFAULT_MARGIN = 0.05
MAX_REJECTIONS = 100_000


class IrreducibleFactor:
    """Interface shared by the classical factors.

    Subclasses are frozen dataclasses with a ``genus`` field, so a factor with
    a deliberately wrong genus (a negative control) is ``replace(f, genus=g)``.
    """

    kind: ClassVar[str]
    genus: int

    @property
    def dim(self) -> int:
        raise NotImplementedError

    @property
    def rank(self) -> int:
        raise NotImplementedError

    @property
    def descriptor(self) -> str:
        raise NotImplementedError

    def norm(self, z: np.ndarray, w: np.ndarray) -> np.ndarray:
        """Generic norm ``N(z, w)`` on blocks of shape ``(..., dim)``."""
        raise NotImplementedError

    def radius(self, z: np.ndarray) -> np.ndarray:
        """Membership gauge: the factor is ``{radius < 1}``."""
        raise NotImplementedError

    @property
    def ambient_radius(self) -> float:
        """Radius of a Euclidean ball containing the factor."""
        return 1.0


def _hermitian_pairing(z, w):
    return np.sum(z * np.conj(w), axis=-1)


@dataclass(frozen=True)
class Disc(IrreducibleFactor):
    genus: int = 2
    kind: ClassVar[str] = "disc"

    @property
    def dim(self):
        return 1

    @property
    def rank(self):
        return 1

    @property
    def descriptor(self):
        return "disc"

    def norm(self, z, w):
        return 1.0 - _hermitian_pairing(z, w)

    def radius(self, z):
        return np.abs(z[..., 0])


@dataclass(frozen=True)
class Ball(IrreducibleFactor):
    n: int = 1
    genus: int = None  # type: ignore[assignment]
    kind: ClassVar[str] = "ball"

    def __post_init__(self):
        if self.n < 1:
            raise ContractError("Ball needs n >= 1")
        if self.genus is None:
            object.__setattr__(self, "genus", self.n + 1)

    @property
    def dim(self):
        return self.n

    @property
    def rank(self):
        return 1

    @property
    def descriptor(self):
        return f"ball:{self.n}"

    def norm(self, z, w):
        return 1.0 - _hermitian_pairing(z, w)

    def radius(self, z):
        return np.linalg.norm(z, axis=-1)


@dataclass(frozen=True)
class Polydisc(IrreducibleFactor):
    """``n`` disc factors kept together; ``genus`` is the common disc genus."""

    n: int = 1
    genus: int = 2
    kind: ClassVar[str] = "polydisc"

    def __post_init__(self):
        if self.n < 1:
            raise ContractError("Polydisc needs n >= 1")

    @property
    def dim(self):
        return self.n

    @property
    def rank(self):
        return self.n

    @property
    def descriptor(self):
        return f"polydisc:{self.n}"

    def norm(self, z, w):
        return np.prod(1.0 - z * np.conj(w), axis=-1)

    def radius(self, z):
        return np.max(np.abs(z), axis=-1)

    @property
    def ambient_radius(self):
        return math.sqrt(self.n)


@dataclass(frozen=True)
class TypeI(IrreducibleFactor):
    """``{Z in C^{p x q} : I_p - Z Z^* > 0}``."""

    p: int = 1
    q: int = 1
    genus: int = None  # type: ignore[assignment]
    kind: ClassVar[str] = "typeI"

    def __post_init__(self):
        if self.p < 1 or self.q < 1:
            raise ContractError("TypeI needs p, q >= 1")
        if self.genus is None:
            object.__setattr__(self, "genus", self.p + self.q)

    @property
    def dim(self):
        return self.p * self.q

    @property
    def rank(self):
        return min(self.p, self.q)

    @property
    def descriptor(self):
        return f"typeI:{self.p},{self.q}"

    def as_matrix(self, z):
        return z.reshape(z.shape[:-1] + (self.p, self.q))

    def norm(self, z, w):
        Z, W = self.as_matrix(z), self.as_matrix(w)
        # det(I_p - Z W^*) = det(I_q - W^* Z); take the smaller determinant
        if self.p <= self.q:
            m = np.eye(self.p) - Z @ np.conj(np.swapaxes(W, -1, -2))
        else:
            m = np.eye(self.q) - np.conj(np.swapaxes(W, -1, -2)) @ Z
        return np.linalg.det(m)

    def radius(self, z):
        return np.linalg.norm(self.as_matrix(z), ord=2, axis=(-2, -1))

    @property
    def ambient_radius(self):
        return math.sqrt(self.rank)


_REGISTRY: dict[str, Callable[[list[int]], IrreducibleFactor]] = {}


def register_factor(name: str, build: Callable[[list[int]], IrreducibleFactor]) -> None:
    """Make ``name[:a,b,...]`` parseable; ``build`` receives the integer arguments."""
    _REGISTRY[name.lower()] = build


def _nargs(name, args, k):
    if len(args) != k:
        raise ConfigError(f"{name} takes {k} integer argument(s), got {len(args)}")
    return args


register_factor("disc", lambda a: Disc(*_nargs("disc", a, 0)))
register_factor("ball", lambda a: Ball(*_nargs("ball", a, 1)))
register_factor("polydisc", lambda a: Polydisc(*_nargs("polydisc", a, 1)))
register_factor("typei", lambda a: TypeI(*_nargs("typeI", a, 2)))


@dataclass(frozen=True)
class DomainSpec:
    """A product of factors with the Ricci normalization ``Ric(w) = -K w``."""

    factors: tuple[IrreducibleFactor, ...]
    ricci_constant: float = 1.0
    _offsets: tuple[int, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        factors = tuple(self.factors) if not isinstance(self.factors, IrreducibleFactor) else (self.factors,)
        if not factors:
            raise ContractError("a domain needs at least one factor")
        if not self.ricci_constant > 0:
            raise ContractError(f"Ricci constant K must be positive, got {self.ricci_constant}")
        object.__setattr__(self, "factors", factors)
        object.__setattr__(self, "_offsets", tuple(np.cumsum([0] + [f.dim for f in factors]).tolist()))

    @property
    def dim(self) -> int:
        return self._offsets[-1]

    @property
    def K(self) -> float:
        return self.ricci_constant

    @property
    def rank(self) -> int:
        return sum(f.rank for f in self.factors)

    @property
    def descriptor(self) -> str:
        return "x".join(f.descriptor for f in self.factors)

    @property
    def blocks(self) -> list[slice]:
        o = self._offsets
        return [slice(o[i], o[i + 1]) for i in range(len(self.factors))]

    def split(self, z) -> list[np.ndarray]:
        z = self.check_point(z)
        return [z[..., b] for b in self.blocks]

    def check_point(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        if z.ndim == 0 or z.shape[-1] != self.dim:
            got = z.shape[-1] if z.ndim else "a scalar"
            raise ContractError(f"{self.descriptor} has dimension {self.dim}, got {got}")
        return z

    def with_ricci_constant(self, K: float) -> "DomainSpec":
        return replace(self, ricci_constant=K)

    def with_genus(self, index: int, genus: int) -> "DomainSpec":
        """Copy with factor ``index`` carrying a different genus (negative controls)."""
        factors = list(self.factors)
        factors[index] = replace(factors[index], genus=genus)
        return replace(self, factors=tuple(factors))


def parse_domain(descriptor: str, K: float = 1.0) -> DomainSpec:
    """Parse ``disc``, ``ball:n``, ``polydisc:n``, ``typeI:p,q`` joined by ``x``."""
    factors = []
    for part in descriptor.strip().split("x"):
        part = part.strip()
        name, _, argstr = part.partition(":")
        build = _REGISTRY.get(name.lower())
        if build is None:
            raise ConfigError(f"unknown domain factor {name!r} in {descriptor!r}")
        try:
            args = [int(a) for a in argstr.split(",")] if argstr else []
        except ValueError as exc:
            raise ConfigError(f"malformed factor arguments in {part!r}") from exc
        try:
            factors.append(build(args))
        except ContractError as exc:
            raise ConfigError(str(exc)) from exc
    try:
        return DomainSpec(tuple(factors), K)
    except ContractError as exc:
        raise ConfigError(str(exc)) from exc


def generic_norm(domain: DomainSpec, z, w) -> np.ndarray:
    """Product of the factor generic norms; ``N(z, w) = conj(N(w, z))``."""
    zs, ws = domain.split(z), domain.split(w)
    out = 1.0 + 0j
    for f, zb, wb in zip(domain.factors, zs, ws):
        out = out * f.norm(zb, wb)
    return out


def khl_length_sq(domain: DomainSpec) -> float:
    """Sum of rank * genus over the factors (independent of K)."""
    return float(sum(f.rank * f.genus for f in domain.factors))


def log_kernel_potential(domain: DomainSpec) -> PotentialFn:
    """``phi(z) = -(1/K) sum_j genus_j * log N_j(z_j, z_j)``.

    Raises :class:`DomainBoundaryError` on evaluation where some ``N_j <= 0``.
    """
    K = domain.ricci_constant

    def phi(z):
        z = domain.check_point(z)
        total = 0.0
        for f, zb in zip(domain.factors, domain.split(z)):
            n = np.real(f.norm(zb, zb))
            if np.any(n <= 0):
                raise DomainBoundaryError(f"point outside {f.descriptor}")
            total = total + f.genus * np.log(n)
        return -total / K

    return PotentialFn(phi, domain.dim, label=f"log-kernel[{domain.descriptor}]")


def contains(domain: DomainSpec, z, margin: float = 0.0):
    """True where every factor gauge is at most ``1 - margin``.  Batched."""
    if not 0 <= margin < 1:
        raise ContractError(f"margin must lie in [0, 1), got {margin}")
    ok = True
    for f, zb in zip(domain.factors, domain.split(z)):
        ok = ok & (f.radius(zb) <= 1.0 - margin)
    return ok if np.ndim(ok) else bool(ok)


def _uniform_ball(rng: np.random.Generator, count: int, dim: int, radius: float) -> np.ndarray:
    g = rng.standard_normal((count, 2 * dim))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    r = radius * rng.random(count) ** (1.0 / (2 * dim))
    x = g * r[:, None]
    return x[:, :dim] + 1j * x[:, dim:]


def _sample_factor(f: IrreducibleFactor, rng, count: int, margin: float) -> np.ndarray:
    accepted: list[np.ndarray] = []
    have = 0
    tries = 0
    batch = max(16, 2 * count)
    while have < count:
        cand = _uniform_ball(rng, batch, f.dim, f.ambient_radius)
        good = cand[f.radius(cand) <= 1.0 - margin]
        accepted.append(good)
        have += len(good)
        tries += batch - len(good)
        if tries > MAX_REJECTIONS * count:
            raise SamplingError(f"rejection sampling of {f.descriptor} exceeded the cap")
    return np.concatenate(accepted)[:count]


def sample_interior(domain: DomainSpec, seed: int, count: int,
                    margin: float = DEFAULT_MARGIN) -> np.ndarray:
    """``count`` seeded points, each factor uniform in its ambient ball then rejected
    unless its gauge is at most ``1 - margin``.  Shape ``(count, dim)``.
    """
    if count <= 0:
        raise ContractError("count must be positive")
    if not 0 < margin < 1:
        raise ContractError(f"margin must lie in (0, 1), got {margin}")
    rng = np.random.default_rng(seed)
    blocks = [_sample_factor(f, rng, count, margin) for f in domain.factors]
    return np.concatenate(blocks, axis=1)


def describe(domain: DomainSpec) -> list[dict]:
    """Registry rows (one per factor) for listings."""
    return [
        {"factor": f.descriptor, "dim": f.dim, "rank": f.rank, "genus": f.genus,
         "khl_length_sq": f.rank * f.genus}
        for f in domain.factors
    ]

