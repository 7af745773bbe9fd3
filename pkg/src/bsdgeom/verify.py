"""Statement-level checks that turn geometric identities into pass/fail reports."""

from __future__ import annotations

import csv
import io
import json
import logging
import time
from dataclasses import asdict, dataclass, field, fields
from typing import Callable, Iterable, Sequence

import numpy as np

from .calculus import DEFAULT_FD, FdConfig, PotentialFn
from .domains import (
    DEFAULT_MARGIN,
    DomainSpec,
    khl_length_sq,
    parse_domain,
    sample_interior,
)
from .embeddings import (
    DiscEmbedding,
    Mobius,
    diagonal_disc,
    flow_gradient,
    geodesic_disc_through,
    maximal_polydisc_typeI,
    pullback_curvature,
    schwarz_pick_residual,
)
from .errors import ConfigError, DegenerateMetricError, DomainBoundaryError
from .geometry import (
    MetricField,
    bochner_terms,
    constant_length_residual,
    dc_length_sq,
    gradient_covariant_derivative,
    gradient_length_sq,
    metric_at,
    ricci_at,
)
from .potentials import ko_potential, standard_potential

log = logging.getLogger(__name__)

__all__ = [
    "CHECKS",
    "CheckReport",
    "DEFAULT_TOLERANCES",
    "SuiteConfig",
    "check_bochner",
    "check_dc_relation",
    "check_disc_curvature",
    "check_flow_foliation",
    "check_gradient_identities",
    "check_kahler_einstein",
    "check_lower_bound",
    "check_rigidity",
    "check_schwarz_pick",
    "run_suite",
    "standard_length_law",
    "write_reports",
]

DEFAULT_TOLERANCES = {
    "kahler-einstein": 1e-3,
    "rigidity": 1e-5,
    "rigidity-fd": 1e-3,
    "lower-bound": 1e-6,
    "lower-bound-fd": 1e-4,
    "lower-bound-confirm": 1e-5,
    "disc-curvature": 1e-6,
    "disc-curvature-fd": 1e-3,
    "gradient-identity": 1e-3,
    "constant-length": 1e-3,
    "flow-foliation": 1e-4,
    "bochner": 1e-2,
    "schwarz-pick": 1e-10,
    "dc-relation": 1e-12,
}


@dataclass(frozen=True)
class CheckReport:
    """Outcome of one check on one domain.

    ``passed`` is exactly ``max_residual <= tolerance``.  ``status`` refines it
    for one-sided checks (``confirmed`` / ``inconclusive`` / ``failed``).
    """

    statement_id: str
    domain: str
    sample_count: int
    max_residual: float
    mean_value: float
    expected: float
    tolerance: float
    passed: bool
    seed: int
    runtime_ms: int
    status: str = ""
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def _report(statement_id, domain, count, residual, mean, expected, tol, seed, t0,
            status=None, **details) -> CheckReport:
    residual = float(residual)
    passed = bool(residual <= tol)
    return CheckReport(
        statement_id=statement_id,
        domain=domain,
        sample_count=int(count),
        max_residual=residual,
        mean_value=float(mean),
        expected=float(expected),
        tolerance=float(tol),
        passed=passed,
        seed=int(seed),
        runtime_ms=int(round(1000 * (time.perf_counter() - t0))),
        status=status or ("passed" if passed else "failed"),
        details={k: _plain(v) for k, v in details.items()},
    )


def _plain(v):
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return v.item()
    return v


def _degenerate(statement_id, domain, count, expected, tol, seed, t0, exc) -> CheckReport:
    log.warning("%s on %s: %s", statement_id, domain, exc)
    return _report(statement_id, domain, count, np.inf, np.nan, expected, tol, seed, t0,
                   error=f"{type(exc).__name__}: {exc}")


def _metric(domain: DomainSpec, potential: PotentialFn | None, fd: FdConfig = DEFAULT_FD) -> MetricField:
    return MetricField(potential if potential is not None else standard_potential(domain), domain, fd)


def check_kahler_einstein(domain: DomainSpec, samples: int = 50, seed: int = 0,
                          tol: float = DEFAULT_TOLERANCES["kahler-einstein"],
                          potential: PotentialFn | None = None, fd: FdConfig = DEFAULT_FD,
                          margin: float = DEFAULT_MARGIN) -> CheckReport:
    """``max |Ric + K g| / max |g|`` over seeded samples (the genus oracle)."""
    t0 = time.perf_counter()
    m = _metric(domain, potential, fd)
    K = domain.ricci_constant
    res = []
    try:
        for z in sample_interior(domain, seed, samples, margin):
            g = metric_at(m, z).entries
            ric = ricci_at(m, z).entries
            res.append(np.max(np.abs(ric + K * g)) / np.max(np.abs(g)))
    except (DegenerateMetricError, DomainBoundaryError) as exc:
        return _degenerate("kahler-einstein", domain.descriptor, samples, 0.0, tol, seed, t0, exc)
    return _report("kahler-einstein", domain.descriptor, samples, max(res), np.mean(res), 0.0,
                   tol, seed, t0, genera=[f.genus for f in domain.factors])


def check_rigidity(domain: DomainSpec, potential: PotentialFn, samples: int = 100, seed: int = 0,
                   tol: float | None = None, fd: FdConfig = DEFAULT_FD,
                   margin: float = DEFAULT_MARGIN) -> CheckReport:
    """Max deviation of ``|d phi|^2`` from ``L^2 / K``."""
    t0 = time.perf_counter()
    m = MetricField(potential, domain, fd)
    if tol is None:
        tol = DEFAULT_TOLERANCES["rigidity" if m.closed_form else "rigidity-fd"]
    expected = khl_length_sq(domain) / domain.ricci_constant
    vals = gradient_length_sq(m, sample_interior(domain, seed, samples, margin))
    return _report("rigidity", domain.descriptor, samples, np.max(np.abs(vals - expected)),
                   np.mean(vals), expected, tol, seed, t0, potential=potential.label)


def standard_length_law(domain: DomainSpec) -> Callable:
    """``|d phi|^2 = (1/K) sum_j genus_j |z_j|^2`` for the standard potential.

    ``|z_j|`` is the Euclidean (Frobenius, for matrices) norm of block ``j``.
    Its supremum over the domain is ``sum_j rank_j genus_j / K``.
    """
    genera = [f.genus for f in domain.factors]

    def law(z):
        parts = domain.split(z)
        total = sum(g * np.sum(np.abs(p) ** 2, axis=-1) for g, p in zip(genera, parts))
        return total / domain.ricci_constant

    return law


def _to_shell(domain: DomainSpec, z: np.ndarray, gauge: float) -> np.ndarray:
    """Rescale each factor block so its gauge equals ``gauge``."""
    out = []
    for f, block in zip(domain.factors, domain.split(z)):
        r = f.radius(block)
        out.append(block * (gauge / np.where(r > 0, r, 1.0))[..., None])
    return np.concatenate(out, axis=-1)


def check_lower_bound(domain: DomainSpec, potential: PotentialFn, samples: int = 100, seed: int = 0,
                      law: Callable | None = None, shell: float | None = None,
                      tol: float | None = None,
                      confirm_tol: float = DEFAULT_TOLERANCES["lower-bound-confirm"],
                      fd: FdConfig = DEFAULT_FD, margin: float = DEFAULT_MARGIN) -> CheckReport:
    """One-sided check of ``sup |d phi|^2 >= L^2 / K``.

    A sampled maximum below the bound never refutes it, so the status is
    ``confirmed`` when the maximum reaches ``L^2/K - confirm_tol`` and
    ``inconclusive`` otherwise.  Only a violated pointwise ``law`` (when given)
    makes the check fail.  ``shell`` rescales samples onto a gauge level set.
    """
    t0 = time.perf_counter()
    m = MetricField(potential, domain, fd)
    if tol is None:
        tol = DEFAULT_TOLERANCES["lower-bound" if m.closed_form else "lower-bound-fd"]
    bound = khl_length_sq(domain) / domain.ricci_constant
    z = sample_interior(domain, seed, samples, margin)
    if shell is not None:
        z = _to_shell(domain, z, shell)
    vals = gradient_length_sq(m, z)
    residual = float(np.max(np.abs(vals - law(z)))) if law is not None else 0.0
    top = float(np.max(vals))
    if residual > tol:
        status = "failed"
    elif top >= bound - confirm_tol:
        status = "confirmed"
    else:
        status = "inconclusive"
    return _report("lower-bound", domain.descriptor, samples, residual, np.mean(vals), bound, tol,
                   seed, t0, status=status, sampled_max=top, potential=potential.label,
                   pointwise_law=law is not None)


def check_disc_curvature(embedding: DiscEmbedding, m: MetricField | None = None, points: int = 20,
                         seed: int = 0, tol: float | None = None, radius: float = 0.9,
                         statement_id: str = "disc-curvature", fd: FdConfig = DEFAULT_FD) -> CheckReport:
    """Max ``|kappa - (-2K / sum active genera)|`` of the pullback metric."""
    t0 = time.perf_counter()
    target = embedding.target
    m = m if m is not None else _metric(target, None, fd)
    if tol is None:
        tol = DEFAULT_TOLERANCES["disc-curvature" if m.closed_form else "disc-curvature-fd"]
    expected = embedding.expected_curvature(m.domain.ricci_constant)
    zeta = sample_interior(parse_domain("disc"), seed, points, margin=1.0 - radius)[:, 0]
    try:
        kappa = pullback_curvature(embedding, m, zeta)
    except (DegenerateMetricError, DomainBoundaryError) as exc:
        return _degenerate(statement_id, target.descriptor, points, expected, tol, seed, t0, exc)
    return _report(statement_id, target.descriptor, points, np.max(np.abs(kappa - expected)),
                   np.mean(kappa), expected, tol, seed, t0, embedding=embedding.label)


def check_gradient_identities(domain: DomainSpec, potential: PotentialFn, samples: int = 30,
                              seed: int = 0, tol: float = DEFAULT_TOLERANCES["gradient-identity"],
                              constant_length: bool = True,
                              cl_tol: float = DEFAULT_TOLERANCES["constant-length"],
                              fd: FdConfig = DEFAULT_FD, margin: float = DEFAULT_MARGIN) -> list[CheckReport]:
    """``V^a_{;b} = delta``, and with ``constant_length`` also ``phi_{a;b} V^b = -phi_a``."""
    m = MetricField(potential, domain, fd)
    z = sample_interior(domain, seed, samples, margin)
    t0 = time.perf_counter()
    eye = np.eye(domain.dim)
    res = np.max(np.abs(gradient_covariant_derivative(m, z) - eye), axis=(-2, -1))
    out = [_report("gradient-identity", domain.descriptor, samples, np.max(res), np.mean(res), 0.0,
                   tol, seed, t0, potential=potential.label)]
    if constant_length:
        t0 = time.perf_counter()
        res = np.max(np.abs(constant_length_residual(m, z)), axis=-1)
        out.append(_report("constant-length", domain.descriptor, samples, np.max(res), np.mean(res),
                           0.0, cl_tol, seed, t0, potential=potential.label))
    return out


def check_flow_foliation(domain: DomainSpec, potential: PotentialFn, start, t_max: float = 2.0,
                         dt: float = 1e-3, probes: int = 11, seed: int = 0,
                         tol: float = DEFAULT_TOLERANCES["flow-foliation"],
                         fd: FdConfig = DEFAULT_FD) -> CheckReport:
    """Integrate the gradient flow and probe the surface it sweeps.

    At ``probes`` points of the trajectory the totally geodesic disc tangent to
    ``V`` is built and its curvature compared with ``-2K / L^2``; the residual
    also includes the disc-construction mismatch, which is nonzero when no
    full-rank geodesic disc is tangent to ``V``.
    """
    t0 = time.perf_counter()
    m = MetricField(potential, domain, fd)
    expected = -2.0 * domain.ricci_constant / khl_length_sq(domain)
    flow = flow_gradient(m, np.asarray(start, dtype=complex), t_max, dt)
    idx = np.unique(np.linspace(0, len(flow.points) - 1, probes).round().astype(int))
    kappas, mismatch = [], 0.0
    for z in flow.points[idx]:
        disc, mis = geodesic_disc_through(domain, z, m.gradient_field(z))
        mismatch = max(mismatch, mis)
        kappas.append(pullback_curvature(disc, m, 0.0))
    kappas = np.array(kappas)
    curv_res = float(np.max(np.abs(kappas - expected)))
    spread = float(np.max(np.ptp(flow.points, axis=1).__abs__())) if domain.dim > 1 else 0.0
    residual = max(curv_res, mismatch) if not flow.escaped else np.inf
    return _report("flow-foliation", domain.descriptor, len(idx), residual, np.mean(kappas), expected,
                   tol, seed, t0, curvature_residual=curv_res, tangency_mismatch=mismatch,
                   coordinate_spread=spread, escaped=flow.escaped, steps=len(flow.points) - 1,
                   potential=potential.label)


def check_bochner(domain: DomainSpec, potential: PotentialFn | None = None, samples: int = 20,
                  seed: int = 0, tol: float = DEFAULT_TOLERANCES["bochner"], field=None,
                  fd: FdConfig = DEFAULT_FD, margin: float = DEFAULT_MARGIN) -> CheckReport:
    """``Lap |d phi|^2 = |nabla d phi|^2 + n - K |d phi|^2`` for a KE potential."""
    t0 = time.perf_counter()
    m = _metric(domain, potential, fd)
    lhs, rhs = bochner_terms(m, sample_interior(domain, seed, samples, margin), field=field)
    res = np.abs(lhs - rhs)
    return _report("bochner", domain.descriptor, samples, np.max(res), np.mean(lhs), 0.0, tol,
                   seed, t0, potential=m.potential.label)


def check_dc_relation(domain: DomainSpec, potential: PotentialFn | None = None, samples: int = 50,
                      seed: int = 0, tol: float = DEFAULT_TOLERANCES["dc-relation"],
                      fd: FdConfig = DEFAULT_FD, margin: float = DEFAULT_MARGIN) -> CheckReport:
    """``2 |d^c phi|^2 = |d phi|^2`` up to rounding (relative residual)."""
    t0 = time.perf_counter()
    m = _metric(domain, potential, fd)
    z = sample_interior(domain, seed, samples, margin)
    half = gradient_length_sq(m, z) / 2.0
    res = np.abs(dc_length_sq(m, z) - half) / np.maximum(1.0, half)
    return _report("dc-relation", domain.descriptor, samples, np.max(res), np.mean(half), 0.0, tol,
                   seed, t0, potential=m.potential.label)


def check_schwarz_pick(samples: int = 50, seed: int = 0, radius: float = 0.9,
                       tol: float = DEFAULT_TOLERANCES["schwarz-pick"],
                       maps: Sequence[Callable] | None = None) -> CheckReport:
    """Schwarz-Pick equality for seeded random automorphisms (or the given ``maps``)."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    disc = parse_domain("disc")
    pts = sample_interior(disc, seed, samples, margin=1.0 - radius)[:, 0]
    if maps is None:
        centres = sample_interior(disc, seed + 1, samples, margin=1.0 - radius)[:, 0]
        maps = [Mobius(a, th) for a, th in zip(centres, rng.uniform(0, 2 * np.pi, samples))]
    res = np.array([schwarz_pick_residual(u, z) for u, z in zip(maps, pts)])
    return _report("schwarz-pick", "disc", len(res), np.max(res), np.mean(res), 0.0, tol, seed, t0)


CHECKS = (
    "kahler-einstein", "rigidity", "lower-bound", "disc-curvature", "polydisc-curvature",
    "gradient-identity", "flow-foliation", "bochner", "schwarz-pick", "dc-relation",
)


@dataclass(frozen=True)
class SuiteConfig:
    """What ``run_suite`` executes.

    ``genus_overrides`` maps a factor descriptor (e.g. ``typeI:2,2``) to a
    replacement genus, applied wherever that factor appears; it exists for
    negative controls.  ``tolerances`` overrides entries of
    :data:`DEFAULT_TOLERANCES`.
    """

    checks: tuple[str, ...] = CHECKS
    seed: int = 0
    K: float = 1.0
    samples: int | None = None
    tolerances: dict = field(default_factory=dict)
    genus_overrides: dict = field(default_factory=dict)
    fd: FdConfig = DEFAULT_FD
    margin: float = DEFAULT_MARGIN

    def __post_init__(self):
        unknown = set(self.checks) - set(CHECKS)
        if unknown:
            raise ConfigError(f"unknown checks {sorted(unknown)}; known: {', '.join(CHECKS)}")
        unknown = set(self.tolerances) - set(DEFAULT_TOLERANCES)
        if unknown:
            raise ConfigError(f"unknown tolerance keys {sorted(unknown)}")

    def tol(self, key: str) -> float:
        return float(self.tolerances.get(key, DEFAULT_TOLERANCES[key]))

    def domain(self, descriptor: str) -> DomainSpec:
        d = parse_domain(descriptor, self.K)
        for i, f in enumerate(d.factors):
            key = f.descriptor.lower()
            match = {k.lower(): v for k, v in self.genus_overrides.items()}.get(key)
            if match is not None:
                d = d.with_genus(i, int(match))
        return d

    def n(self, default: int) -> int:
        return self.samples if self.samples is not None else default


def _suite_jobs(cfg: SuiteConfig) -> Iterable[tuple[str, Callable[[int], list[CheckReport]]]]:
    D = cfg.domain
    if "kahler-einstein" in cfg.checks:
        for desc in ("disc", "ball:2", "polydisc:3", "typeI:2,2", "typeI:2,3"):
            yield "kahler-einstein", lambda s, d=D(desc): [
                check_kahler_einstein(d, cfg.n(50), s, cfg.tol("kahler-einstein"), fd=cfg.fd, margin=cfg.margin)]
    if "rigidity" in cfg.checks:
        for desc in ("polydisc:1", "polydisc:2", "polydisc:3", "ball:1", "ball:2", "ball:3"):
            yield "rigidity", lambda s, d=D(desc): [
                check_rigidity(d, ko_potential(d), cfg.n(100), s, cfg.tol("rigidity"), cfg.fd, cfg.margin)]
    if "lower-bound" in cfg.checks:
        for desc in ("disc", "ball:2"):
            yield "lower-bound", lambda s, d=D(desc): [
                check_lower_bound(d, standard_potential(d), cfg.n(100), s, law=standard_length_law(d),
                                  shell=0.95, tol=cfg.tol("lower-bound"),
                                  confirm_tol=cfg.tol("lower-bound-confirm"),
                                  fd=cfg.fd, margin=cfg.margin)]
        for desc in ("polydisc:3", "ball:2"):
            yield "lower-bound", lambda s, d=D(desc): [
                check_lower_bound(d, ko_potential(d), cfg.n(100), s, tol=cfg.tol("lower-bound"),
                                  confirm_tol=cfg.tol("lower-bound-confirm"),
                                  fd=cfg.fd, margin=cfg.margin)]
    if "disc-curvature" in cfg.checks:
        for n, k in ((4, 4), (3, 1), (4, 2)):
            yield "disc-curvature", lambda s, n=n, k=k: [
                check_disc_curvature(diagonal_disc(n, k, cfg.K), seed=s, tol=cfg.tol("disc-curvature"),
                                     fd=cfg.fd)]
        for p, q in ((2, 2), (2, 3)):
            yield "disc-curvature", lambda s, p=p, q=q: [
                check_disc_curvature(maximal_polydisc_typeI(p, q, cfg.K).full_rank_disc(), seed=s,
                                     tol=cfg.tol("disc-curvature-fd"), fd=cfg.fd)]
    if "polydisc-curvature" in cfg.checks:
        for p, q in ((2, 2), (2, 3)):
            def job(s, p=p, q=q):
                P = maximal_polydisc_typeI(p, q, cfg.K)
                return [check_disc_curvature(P.coordinate_disc(j), seed=s, tol=cfg.tol("disc-curvature-fd"),
                                             statement_id="polydisc-curvature", fd=cfg.fd) for j in range(P.r)]
            yield "polydisc-curvature", job
    if "gradient-identity" in cfg.checks:
        for desc, pot in (("ball:2", "standard"), ("typeI:2,2", "standard"),
                          ("polydisc:2", "ko"), ("ball:2", "ko"), ("disc x ball:2", "ko")):
            def job(s, d=D(desc), pot=pot):
                phi = ko_potential(d) if pot == "ko" else standard_potential(d)
                return check_gradient_identities(d, phi, cfg.n(30), s, cfg.tol("gradient-identity"),
                                                 constant_length=pot == "ko",
                                                 cl_tol=cfg.tol("constant-length"),
                                                 fd=cfg.fd, margin=cfg.margin)
            yield "gradient-identity", job
    if "flow-foliation" in cfg.checks:
        for desc, start in (("polydisc:3", [0.1 + 0.05j] * 3), ("disc x ball:2", [0.2, 0.1j, -0.3])):
            yield "flow-foliation", lambda s, d=D(desc), z0=start: [
                check_flow_foliation(d, ko_potential(d), z0, seed=s, tol=cfg.tol("flow-foliation"), fd=cfg.fd)]
    if "bochner" in cfg.checks:
        for desc in ("disc", "ball:2"):
            yield "bochner", lambda s, d=D(desc): [check_bochner(d, None, cfg.n(20), s, cfg.tol("bochner"),
                                                                  fd=cfg.fd, margin=cfg.margin)]
    if "schwarz-pick" in cfg.checks:
        yield "schwarz-pick", lambda s: [check_schwarz_pick(cfg.n(50), s, tol=cfg.tol("schwarz-pick"))]
    if "dc-relation" in cfg.checks:
        for desc, pot in (("ball:2", "standard"), ("polydisc:3", "ko"), ("typeI:2,2", "standard")):
            def job(s, d=D(desc), pot=pot):
                phi = ko_potential(d) if pot == "ko" else standard_potential(d)
                return [check_dc_relation(d, phi, cfg.n(50), s, cfg.tol("dc-relation"), cfg.fd, cfg.margin)]
            yield "dc-relation", job


def run_suite(cfg: SuiteConfig = SuiteConfig()) -> list[CheckReport]:
    """Run every enabled check; job ``i`` samples with seed ``cfg.seed + i``.

    Reports are sorted by statement id, then domain.
    """
    reports: list[CheckReport] = []
    for i, (name, job) in enumerate(_suite_jobs(cfg)):
        log.info("running %s (job %d)", name, i)
        reports.extend(job(cfg.seed + i))
    return sorted(reports, key=lambda r: (r.statement_id, r.domain))


REPORT_COLUMNS = [f.name for f in fields(CheckReport)]


def write_reports(reports: Sequence[CheckReport], stream=None, fmt: str = "json") -> str:
    """Serialize as newline-delimited JSON or CSV; also returns the text."""
    buf = io.StringIO()
    if fmt == "json":
        for r in reports:
            buf.write(json.dumps(r.to_dict(), sort_keys=False) + "\n")
    elif fmt == "csv":
        writer = csv.DictWriter(buf, fieldnames=REPORT_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for r in reports:
            row = r.to_dict()
            row["details"] = json.dumps(row["details"], sort_keys=True)
            writer.writerow(row)
    else:
        raise ConfigError(f"unknown report format {fmt!r}")
    text = buf.getvalue()
    if stream is not None:
        stream.write(text)
    return text
