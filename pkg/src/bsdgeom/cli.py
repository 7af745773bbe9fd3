"""Command-line front end: ``bsdgeom <command> [options]``.

Exit codes: 0 when every executed check passed (or the command is purely
informational), 1 when a check failed or a flow escaped, 2 on usage or I/O
errors.  Reports go to stdout (or ``--output``), diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from dataclasses import dataclass, field, replace

import numpy as np

from .calculus import DEFAULT_FD, FdConfig
from .domains import DEFAULT_MARGIN, DomainSpec, describe, khl_length_sq, parse_domain
from .embeddings import diagonal_disc, flow_gradient, maximal_polydisc_typeI
from .errors import GeometryError
from .geometry import MetricField, dc_length_sq, gradient_length_sq, gradient_vector, metric_at
from .potentials import ko_potential, parse_perturbation, perturb_pluriharmonic, standard_potential
from .verify import (
    CHECKS,
    DEFAULT_TOLERANCES,
    SuiteConfig,
    check_bochner,
    check_dc_relation,
    check_disc_curvature,
    check_flow_foliation,
    check_gradient_identities,
    check_kahler_einstein,
    check_lower_bound,
    check_rigidity,
    check_schwarz_pick,
    run_suite,
    standard_length_law,
    write_reports,
)

log = logging.getLogger("bsdgeom")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
LISTED_DOMAINS = ("disc", "ball:2", "ball:3", "polydisc:2", "polydisc:3", "typeI:2,2", "typeI:2,3")
POTENTIALS = ("standard", "ko", "ko-perturbed")


class UsageError(Exception):
    """Invalid flag value detected after argparse."""


@dataclass(frozen=True)
class CliConfig:
    command: str
    domain: DomainSpec | None = None
    K: float = 1.0
    potential: str = "standard"
    thetas: tuple[float, ...] = ()
    direction: tuple[complex, ...] | None = None
    perturb: str = ""
    samples: int | None = None
    seed: int = 0
    margin: float = DEFAULT_MARGIN
    fd: FdConfig = DEFAULT_FD
    tolerances: dict = field(default_factory=dict)
    genus_overrides: dict = field(default_factory=dict)
    output: str | None = None
    fmt: str = "json"
    check: str | None = None
    checks: tuple[str, ...] = CHECKS
    embedding: str | None = None
    point: tuple[complex, ...] | None = None
    shell: float | None = None
    t_max: float = 2.0
    dt: float = 1e-3


def parse_point(text: str) -> tuple[complex, ...]:
    """``"re1,im1,re2,im2"`` -> ``(re1 + i im1, re2 + i im2)``."""
    try:
        vals = [float(v) for v in text.replace(" ", "").split(",") if v]
    except ValueError as exc:
        raise UsageError(f"malformed point {text!r}") from exc
    if not vals or len(vals) % 2:
        raise UsageError(f"point {text!r} needs interleaved real,imag pairs")
    return tuple(complex(a, b) for a, b in zip(vals[::2], vals[1::2]))


def _key_values(items, cast, what):
    out = {}
    for item in items or []:
        key, sep, val = item.partition("=")
        if not sep:
            raise UsageError(f"{what} {item!r} is not key=value")
        try:
            out[key.strip()] = cast(val)
        except ValueError as exc:
            raise UsageError(f"bad value in {what} {item!r}") from exc
    return out


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--domain", default="ball:2",
                        help="factors joined by 'x': disc, ball:n, polydisc:n, typeI:p,q (default ball:2)")
    parser.add_argument("--K", type=float, default=1.0, help="Ricci constant, Ric = -K g (default 1)")
    parser.add_argument("--potential", choices=POTENTIALS, default="standard")
    parser.add_argument("--theta", default="", help="comma-separated angles, one per disc coordinate")
    parser.add_argument("--direction", default=None,
                        help="ball boundary point, interleaved re,im pairs (default e1)")
    parser.add_argument("--perturb", default="",
                        help="holomorphic perturbation 'coef@i,j,...;...' (exponents per coordinate) "
                             "for ko-perturbed; default 0.1 z^1")
    parser.add_argument("--samples", type=int, default=None, help="sample count (check default if omitted)")
    parser.add_argument("--seed", type=int, default=None, help="base seed (env BSD_SEED, else 0)")
    parser.add_argument("--margin", type=float, default=DEFAULT_MARGIN, help="sampling margin in (0, 1)")
    parser.add_argument("--fd-step", type=float, default=None, help="finite-difference step for metrics")
    parser.add_argument("--no-richardson", action="store_true", help="plain central differences")
    parser.add_argument("--tol", action="append", metavar="KEY=VAL",
                        help=f"override a tolerance; keys: {', '.join(DEFAULT_TOLERANCES)}")
    parser.add_argument("--genus-override", action="append", metavar="FACTOR=GENUS",
                        help="replace the genus of a factor (negative controls), e.g. typeI:2,2=5")
    parser.add_argument("--output", "-o", default=None, help="write to this file instead of stdout")
    parser.add_argument("--format", dest="fmt", choices=("json", "csv"), default="json")
    parser.add_argument("--csv", dest="fmt", action="store_const", const="csv", help="same as --format csv")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bsdgeom",
        description="Numerical geometry of bounded symmetric domains.",
        epilog="Points are comma-separated interleaved real,imag pairs: '0.5,0,0,0.1' is (0.5, 0.1i).",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("list-domains", help="registry table with rank, genus and L^2")
    _common(p)
    p.set_defaults(domain=None)

    p = sub.add_parser("eval", help="evaluate metric quantities at one point")
    _common(p)
    p.add_argument("--point", required=True, help="interleaved re,im pairs")

    p = sub.add_parser("check", help="run one check")
    _common(p)
    p.add_argument("name", choices=CHECKS + ("constant-length",))
    p.add_argument("--embedding", default=None,
                   help="disc-curvature: diagonal:n,k or maxpoly:p,q; polydisc-curvature: maxpoly:p,q")
    p.add_argument("--shell", type=float, default=None, help="lower-bound: sample on this gauge level")
    p.add_argument("--start", default=None, help="flow-foliation start point")
    p.add_argument("--t-max", type=float, default=2.0)
    p.add_argument("--dt", type=float, default=1e-3)

    p = sub.add_parser("flow", help="integrate the gradient flow and emit the trajectory as CSV")
    _common(p)
    p.add_argument("--start", required=True, help="start point, interleaved re,im pairs")
    p.add_argument("--t-max", type=float, default=2.0)
    p.add_argument("--dt", type=float, default=1e-3)

    p = sub.add_parser("suite", help="run the full check suite")
    _common(p)
    p.add_argument("--checks", default=",".join(CHECKS), help="comma-separated subset of checks")
    return parser


def parse_args(argv=None) -> CliConfig:
    """Parse and validate; raises ``SystemExit(2)`` on usage errors."""
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        return _to_config(ns)
    except (UsageError, GeometryError, ValueError) as exc:
        parser.error(str(exc))


def _to_config(ns) -> CliConfig:
    if not ns.K > 0:
        raise UsageError(f"--K must be positive, got {ns.K}")
    if ns.samples is not None and ns.samples < 1:
        raise UsageError("--samples must be at least 1")
    if not 0 < ns.margin < 1:
        raise UsageError("--margin must lie in (0, 1)")
    seed = ns.seed
    if seed is None:
        env = os.environ.get("BSD_SEED")
        try:
            seed = int(env) if env else 0
        except ValueError as exc:
            raise UsageError(f"BSD_SEED={env!r} is not an integer") from exc
    fd = DEFAULT_FD
    if ns.fd_step is not None:
        if not ns.fd_step > 0:
            raise UsageError("--fd-step must be positive")
        fd = replace(fd, hess_step=ns.fd_step)
    if ns.no_richardson:
        fd = replace(fd, richardson=False)
    tolerances = _key_values(ns.tol, float, "--tol")
    unknown = set(tolerances) - set(DEFAULT_TOLERANCES)
    if unknown:
        raise UsageError(f"unknown tolerance keys {sorted(unknown)}")
    genus = _key_values(ns.genus_override, int, "--genus-override")
    thetas = tuple(float(t) for t in ns.theta.split(",") if t.strip()) if ns.theta else ()
    direction = parse_point(ns.direction) if ns.direction else None
    domain = parse_domain(ns.domain, ns.K) if ns.domain else None
    if domain is not None and genus:
        for i, f in enumerate(domain.factors):
            g = {k.lower(): v for k, v in genus.items()}.get(f.descriptor.lower())
            if g is not None:
                domain = domain.with_genus(i, g)
    cfg = CliConfig(
        command=ns.command, domain=domain, K=ns.K, potential=ns.potential, thetas=thetas,
        direction=direction, perturb=ns.perturb, samples=ns.samples, seed=seed, margin=ns.margin,
        fd=fd, tolerances=tolerances, genus_overrides=genus, output=ns.output, fmt=ns.fmt,
    )
    if ns.command == "eval":
        cfg = replace(cfg, point=parse_point(ns.point))
    elif ns.command == "check":
        start = parse_point(ns.start) if ns.start else None
        cfg = replace(cfg, check=ns.name, embedding=ns.embedding, shell=ns.shell, point=start,
                      t_max=ns.t_max, dt=ns.dt)
    elif ns.command == "flow":
        if not ns.dt > 0 or ns.t_max < 0:
            raise UsageError("need --dt > 0 and --t-max >= 0")
        cfg = replace(cfg, point=parse_point(ns.start), t_max=ns.t_max, dt=ns.dt)
    elif ns.command == "suite":
        cfg = replace(cfg, checks=tuple(c.strip() for c in ns.checks.split(",") if c.strip()))
    return cfg


def build_potential(cfg: CliConfig):
    d = cfg.domain
    if cfg.potential == "standard":
        return standard_potential(d)
    base = ko_potential(d, thetas=cfg.thetas or None, direction=cfg.direction)
    if cfg.potential == "ko":
        return base
    spec = cfg.perturb or "0.1@" + ",".join(["1"] + ["0"] * (d.dim - 1))
    return perturb_pluriharmonic(base, parse_perturbation(spec, d.dim))


def _parse_embedding(text: str, K: float):
    kind, _, args = (text or "").partition(":")
    try:
        nums = [int(a) for a in args.split(",")]
    except ValueError as exc:
        raise UsageError(f"malformed embedding {text!r}") from exc
    if kind == "diagonal" and len(nums) == 2:
        return diagonal_disc(nums[0], nums[1], K)
    if kind == "maxpoly" and len(nums) == 2:
        return maximal_polydisc_typeI(nums[0], nums[1], K)
    raise UsageError(f"embedding must be diagonal:n,k or maxpoly:p,q, got {text!r}")


def _run_check(cfg: CliConfig):
    name, d, s = cfg.check, cfg.domain, cfg.seed
    tol = {**DEFAULT_TOLERANCES, **cfg.tolerances}
    n = (lambda default: cfg.samples or default)
    kw = dict(fd=cfg.fd, margin=cfg.margin)
    if name == "kahler-einstein":
        pot = None if cfg.potential == "standard" else build_potential(cfg)
        return [check_kahler_einstein(d, n(50), s, tol[name], potential=pot, **kw)]
    if name == "rigidity":
        pot = build_potential(cfg)
        t = tol.get("rigidity") if pot.hess is not None else tol.get("rigidity-fd")
        return [check_rigidity(d, pot, n(100), s, t, **kw)]
    if name == "lower-bound":
        pot = build_potential(cfg)
        law = standard_length_law(d) if cfg.potential == "standard" else None
        t = tol["lower-bound"] if pot.hess is not None else tol["lower-bound-fd"]
        return [check_lower_bound(d, pot, n(100), s, law=law, shell=cfg.shell, tol=t,
                                  confirm_tol=tol["lower-bound-confirm"], **kw)]
    if name in ("disc-curvature", "polydisc-curvature"):
        emb = _parse_embedding(cfg.embedding or "diagonal:2,2", cfg.K)
        if hasattr(emb, "coordinate_disc"):
            discs = ([emb.coordinate_disc(j) for j in range(emb.r)] if name == "polydisc-curvature"
                     else [emb.full_rank_disc()])
            t = tol["disc-curvature-fd"]
        else:
            if name == "polydisc-curvature":
                raise UsageError("polydisc-curvature needs --embedding maxpoly:p,q")
            discs, t = [emb], tol["disc-curvature"]
        return [check_disc_curvature(u, points=n(20), seed=s, tol=t, statement_id=name, fd=cfg.fd)
                for u in discs]
    if name in ("gradient-identity", "constant-length"):
        reports = check_gradient_identities(d, build_potential(cfg), n(30), s, tol["gradient-identity"],
                                            constant_length=True, cl_tol=tol["constant-length"], **kw)
        return [r for r in reports if r.statement_id == name]
    if name == "flow-foliation":
        start = cfg.point if cfg.point is not None else (0.1 + 0.05j,) * d.dim
        return [check_flow_foliation(d, build_potential(cfg), start, cfg.t_max, cfg.dt, seed=s,
                                     tol=tol[name], fd=cfg.fd)]
    if name == "bochner":
        return [check_bochner(d, build_potential(cfg), n(20), s, tol[name], **kw)]
    if name == "dc-relation":
        return [check_dc_relation(d, build_potential(cfg), n(50), s, tol[name], **kw)]
    if name == "schwarz-pick":
        return [check_schwarz_pick(n(50), s, tol=tol[name])]
    raise UsageError(f"unknown check {name!r}")


def _cmd_list(cfg: CliConfig, out) -> int:
    descs = [cfg.domain.descriptor] if cfg.domain is not None else LISTED_DOMAINS
    rows = []
    for desc in descs:
        d = parse_domain(desc, cfg.K) if cfg.domain is None else cfg.domain
        rows.append({"domain": d.descriptor, "dim": d.dim, "rank": d.rank,
                     "genus": "/".join(str(r["genus"]) for r in describe(d)),
                     "L2": khl_length_sq(d), "L2_over_K": khl_length_sq(d) / d.ricci_constant})
    cols = list(rows[0])
    if cfg.fmt == "csv":
        w = csv.DictWriter(out, fieldnames=cols, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    else:
        widths = {c: max(len(c), *(len(str(r[c])) for r in rows)) for c in cols}
        out.write("  ".join(c.ljust(widths[c]) for c in cols).rstrip() + "\n")
        for r in rows:
            out.write("  ".join(str(r[c]).ljust(widths[c]) for c in cols).rstrip() + "\n")
    return EXIT_OK


def _fmt(v) -> str:
    if isinstance(v, complex):
        return f"{v.real + 0.0:.12g}{v.imag + 0.0:+.12g}j"
    return f"{v:.12g}" if isinstance(v, float) else str(v)


def _cmd_eval(cfg: CliConfig, out) -> int:
    d = cfg.domain
    z = np.array(cfg.point, dtype=complex)
    if z.shape != (d.dim,):
        raise UsageError(f"--point has {len(z)} coordinates, {d.descriptor} needs {d.dim}")
    m = MetricField(build_potential(cfg), d, cfg.fd)
    g = metric_at(m, z)
    V = gradient_vector(m, z).components
    lines = [
        ("potential", m.potential.label),
        ("gradient_length_sq", gradient_length_sq(m, z)),
        ("dc_length_sq", dc_length_sq(m, z)),
        ("L2_over_K", khl_length_sq(d) / d.ricci_constant),
        ("metric_det", float(np.real(g.determinant))),
    ]
    lines += [(f"gradient[{i}]", complex(v)) for i, v in enumerate(V)]
    for k, v in lines:
        out.write(f"{k} = {_fmt(v)}\n")
    return EXIT_OK


def _cmd_flow(cfg: CliConfig, out) -> int:
    d = cfg.domain
    z0 = np.array(cfg.point, dtype=complex)
    if z0.shape != (d.dim,):
        raise UsageError(f"--start has {len(z0)} coordinates, {d.descriptor} needs {d.dim}")
    m = MetricField(build_potential(cfg), d, cfg.fd)
    res = flow_gradient(m, z0, cfg.t_max, cfg.dt, margin=min(cfg.margin, 0.01))
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["t"] + [f"{part}{i}" for i in range(d.dim) for part in ("re", "im")])
    for t, z in zip(res.times, res.points):
        w.writerow([repr(float(t))] + [repr(float(x)) for c in z for x in (c.real, c.imag)])
    if res.escaped:
        log.error("flow left the domain at t=%.6g; partial trajectory written", res.times[-1])
        return EXIT_FAIL
    return EXIT_OK


def run(cfg: CliConfig) -> int:
    """Execute a parsed configuration and return the exit code."""
    try:
        out = open(cfg.output, "w", newline="") if cfg.output else sys.stdout
    except OSError as exc:
        log.error("cannot open %s: %s", cfg.output, exc)
        return EXIT_USAGE
    try:
        if cfg.command == "list-domains":
            return _cmd_list(cfg, out)
        if cfg.command == "eval":
            return _cmd_eval(cfg, out)
        if cfg.command == "flow":
            return _cmd_flow(cfg, out)
        if cfg.command == "check":
            reports = _run_check(cfg)
        else:
            suite = SuiteConfig(checks=cfg.checks, seed=cfg.seed, K=cfg.K, samples=cfg.samples,
                                tolerances=cfg.tolerances, genus_overrides=cfg.genus_overrides,
                                fd=cfg.fd, margin=cfg.margin)
            reports = run_suite(suite)
        reports = sorted(reports, key=lambda r: (r.statement_id, r.domain))
        write_reports(reports, out, cfg.fmt)
        failed = [r for r in reports if not r.passed]
        for r in failed:
            log.error("FAILED %s on %s: residual %.3g > %.3g", r.statement_id, r.domain,
                      r.max_residual, r.tolerance)
        return EXIT_FAIL if failed else EXIT_OK
    except (UsageError, GeometryError) as exc:
        log.error("%s", exc)
        return EXIT_USAGE
    except OSError as exc:
        log.error("I/O error: %s", exc)
        return EXIT_USAGE
    finally:
        if out is not sys.stdout:
            out.close()


def main(argv=None) -> int:
    cfg = parse_args(argv)
    logging.basicConfig(level=logging.INFO if _verbose(argv) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    return run(cfg)


def _verbose(argv) -> bool:
    args = sys.argv[1:] if argv is None else argv
    return "-v" in args or "--verbose" in args


if __name__ == "__main__":
    sys.exit(main())
