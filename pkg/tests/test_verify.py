import csv
import dataclasses
import io
import json

import numpy as np
import pytest

from bsdgeom import (
    CheckReport,
    KoParams,
    PotentialFn,
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
    diagonal_disc,
    ko_potential,
    ko_potential_polydisc,
    maximal_polydisc_typeI,
    parse_domain,
    parse_perturbation,
    perturb_pluriharmonic,
    run_suite,
    standard_potential,
    write_reports,
)
from bsdgeom.errors import ConfigError
from bsdgeom.verify import CHECKS, DEFAULT_TOLERANCES, standard_length_law


def _strip(report):
    return {k: v for k, v in report.to_dict().items() if k != "runtime_ms"}


@pytest.mark.parametrize("descriptor, K, tol", [("disc", 1.0, 1e-4), ("ball:3", 2.0, 1e-3), ("typeI:2,2", 1.0, 1e-3)])
def test_kahler_einstein_passes(descriptor, K, tol):
    r = check_kahler_einstein(parse_domain(descriptor, K), samples=50, seed=1, tol=tol)
    assert r.passed and r.max_residual <= tol and r.sample_count == 50


@pytest.mark.parametrize("genus", [3, 5])
def test_kahler_einstein_negative_control(genus):
    d = parse_domain("typeI:2,2").with_genus(0, genus)
    r = check_kahler_einstein(d, samples=10, seed=1)
    assert not r.passed and r.max_residual > 1e-2


def test_kahler_einstein_degenerate_sample_is_reported():
    d = parse_domain("disc")
    concave = PotentialFn(lambda z: -np.abs(z[..., 0]) ** 2, 1, label="concave")
    r = check_kahler_einstein(d, samples=5, potential=concave)
    assert not r.passed and r.max_residual == np.inf and "DegenerateMetricError" in r.details["error"]


@pytest.mark.parametrize(
    "descriptor, K, mean",
    [("polydisc:3", 1.0, 6.0), ("ball:2", 2.0, 1.5), ("disc", 4.0, 0.5)],
)
def test_rigidity_examples(descriptor, K, mean):
    d = parse_domain(descriptor, K)
    r = check_rigidity(d, ko_potential(d), samples=100, seed=3)
    assert r.passed and r.mean_value == pytest.approx(mean, rel=1e-10) and r.expected == mean


def test_rigidity_negative_control():
    d = parse_domain("polydisc:2")
    r = check_rigidity(d, standard_potential(d), samples=100, seed=3)
    assert not r.passed and r.tolerance == DEFAULT_TOLERANCES["rigidity"]


def test_rigidity_fd_tolerance_for_numeric_potentials():
    d = parse_domain("typeI:2,2")
    r = check_rigidity(d, standard_potential(d), samples=5)
    assert r.tolerance == DEFAULT_TOLERANCES["rigidity-fd"] and not r.passed


def test_lower_bound_ball_shell():
    d = parse_domain("ball:2", 2.0)
    r = check_lower_bound(d, standard_potential(d), samples=50, law=standard_length_law(d), shell=0.95)
    assert r.passed and r.max_residual <= 1e-6
    assert r.details["sampled_max"] == pytest.approx(3 * 0.9025 / 2.0, rel=1e-9)
    assert r.status == "inconclusive"


def test_lower_bound_ko_equality_case():
    d = parse_domain("ball:2")
    r = check_lower_bound(d, ko_potential(d), samples=20)
    assert r.passed and r.status == "confirmed"
    assert r.details["sampled_max"] == pytest.approx(3.0, rel=1e-12)


def test_lower_bound_near_origin_is_inconclusive_not_failed():
    d = parse_domain("polydisc:2")
    r = check_lower_bound(d, standard_potential(d), samples=20, shell=0.1)
    assert r.passed and r.status == "inconclusive"


def test_lower_bound_wrong_law_fails():
    d = parse_domain("ball:2")
    r = check_lower_bound(d, standard_potential(d), samples=20, law=lambda z: 0 * z[..., 0].real)
    assert not r.passed and r.status == "failed"


def test_standard_length_law_for_typeI():
    d = parse_domain("typeI:2,2")
    r = check_lower_bound(d, standard_potential(d), samples=10, law=standard_length_law(d))
    assert r.passed and r.tolerance == DEFAULT_TOLERANCES["lower-bound-fd"]


@pytest.mark.parametrize(
    "embedding, expected, tol",
    [
        (lambda: diagonal_disc(4, 4), -0.25, 1e-6),
        (lambda: diagonal_disc(3, 1, 2.0), -2.0, 1e-6),
        (lambda: maximal_polydisc_typeI(2, 2).full_rank_disc(), -0.25, 1e-3),
    ],
)
def test_disc_curvature_examples(embedding, expected, tol):
    r = check_disc_curvature(embedding())
    assert r.passed and r.expected == pytest.approx(expected) and r.tolerance == tol


def test_disc_curvature_detects_wrong_declared_rank():
    u = dataclasses.replace(diagonal_disc(3, 2), active_genera=(2,))
    assert not check_disc_curvature(u).passed


def test_gradient_identities_examples():
    d = parse_domain("ball:2")
    (ident,) = check_gradient_identities(d, standard_potential(d), constant_length=False)
    assert ident.passed
    d2 = parse_domain("polydisc:2")
    assert all(r.passed for r in check_gradient_identities(d2, ko_potential(d2)))
    pert = perturb_pluriharmonic(ko_potential(d2), parse_perturbation("0.3@2,0", 2))
    ident, cl = check_gradient_identities(d2, pert)
    assert ident.passed and not cl.passed
    assert (ident.statement_id, cl.statement_id) == ("gradient-identity", "constant-length")


@pytest.mark.parametrize(
    "descriptor, start, L2",
    [("polydisc:3", [0.1 + 0.05j] * 3, 6), ("discxball:2", [0.2, 0.1j, -0.3], 5), ("ball:2", [0.3, 0.1], 3)],
)
def test_flow_foliation(descriptor, start, L2):
    d = parse_domain(descriptor, 2.0)
    r = check_flow_foliation(d, ko_potential(d), start, t_max=0.5, dt=5e-3)
    assert r.passed, r.details
    assert r.expected == pytest.approx(-2 * 2.0 / L2)


def test_flow_foliation_symmetric_start_keeps_coordinates_equal():
    d = parse_domain("polydisc:3")
    r = check_flow_foliation(d, ko_potential(d), [0.1 + 0.05j] * 3, t_max=0.5, dt=5e-3)
    assert r.details["coordinate_spread"] <= 1e-8 and not r.details["escaped"]


def test_flow_foliation_fails_for_non_constant_length():
    # the standard potential's flow is tangent to discs of mixed rank
    d = parse_domain("polydisc:2")
    r = check_flow_foliation(d, standard_potential(d), [0.3, 0.1j], t_max=0.2, dt=1e-2)
    assert not r.passed


def test_bochner_examples():
    assert check_bochner(parse_domain("disc"), samples=20).passed
    ko = ko_potential_polydisc(1, KoParams(K=1.0))
    r = check_bochner(parse_domain("disc"), ko, samples=10)
    assert r.passed
    flat = check_bochner(parse_domain("ball:2"), samples=5, field=lambda w: np.ones(w.shape[:-1]))
    assert flat.mean_value == pytest.approx(0, abs=1e-9) and not flat.passed


def test_dc_relation_is_exact():
    for descriptor in ("ball:2", "typeI:2,2"):
        r = check_dc_relation(parse_domain(descriptor))
        assert r.passed and r.max_residual <= 1e-12


def test_schwarz_pick_check():
    r = check_schwarz_pick(samples=50, seed=4)
    assert r.passed and r.max_residual <= 1e-10
    neg = check_schwarz_pick(samples=5, maps=[lambda z: z / 2] * 5)
    assert not neg.passed and neg.max_residual > 1e-2


def test_reports_are_reproducible():
    d = parse_domain("typeI:2,2")
    a = check_kahler_einstein(d, samples=5, seed=9)
    b = check_kahler_einstein(d, samples=5, seed=9)
    assert _strip(a) == _strip(b)
    assert _strip(a) != _strip(check_kahler_einstein(d, samples=5, seed=10))


def test_passed_iff_within_tolerance():
    d = parse_domain("ball:2")
    r = check_rigidity(d, standard_potential(d), samples=10)
    for tol in (r.max_residual, np.nextafter(r.max_residual, 0)):
        rr = check_rigidity(d, standard_potential(d), samples=10, tol=tol)
        assert rr.passed == (rr.max_residual <= tol)


def test_empty_suite():
    assert run_suite(SuiteConfig(checks=())) == []


@pytest.mark.parametrize("kw", [{"checks": ("nope",)}, {"tolerances": {"nope": 1.0}}])
def test_suite_config_rejects_unknown(kw):
    with pytest.raises(ConfigError):
        SuiteConfig(**kw)


def test_suite_subset_is_deterministic():
    cfg = SuiteConfig(checks=("rigidity", "schwarz-pick", "dc-relation"), seed=5, samples=10)
    a, b = run_suite(cfg), run_suite(cfg)
    assert [_strip(r) for r in a] == [_strip(r) for r in b]
    assert all(r.passed for r in a)
    keys = [(r.statement_id, r.domain) for r in a]
    assert keys == sorted(keys)


def test_suite_genus_override_fails_exactly_the_ke_report():
    cfg = SuiteConfig(genus_overrides={"typeI:2,2": 5}, samples=10)
    reports = run_suite(cfg)
    assert len(reports) >= 12
    failed = [(r.statement_id, r.domain) for r in reports if not r.passed]
    assert failed == [("kahler-einstein", "typeI:2,2")]
    assert {r.statement_id for r in reports} == set(CHECKS) | {"constant-length"}


def _sample_reports():
    d = parse_domain("ball:2")
    return [check_rigidity(d, ko_potential(d), samples=5), check_schwarz_pick(samples=3),
            check_lower_bound(d, ko_potential(d), samples=5)]


def test_json_round_trip():
    reports = _sample_reports()
    buf = io.StringIO()
    text = write_reports(reports, buf)
    assert buf.getvalue() == text
    lines = text.splitlines()
    assert len(lines) == 3
    back = [CheckReport(**json.loads(line)) for line in lines]
    assert back == reports


def test_csv_output_has_report_columns():
    reports = _sample_reports()
    rows = list(csv.DictReader(io.StringIO(write_reports(reports, fmt="csv"))))
    assert list(rows[0]) == [f.name for f in dataclasses.fields(CheckReport)]
    assert [r["statement_id"] for r in rows] == ["rigidity", "schwarz-pick", "lower-bound"]
    assert json.loads(rows[2]["details"])["sampled_max"] == pytest.approx(3.0)
    assert float(rows[0]["max_residual"]) == reports[0].max_residual


def test_unknown_format():
    with pytest.raises(ConfigError):
        write_reports([], fmt="xml")
