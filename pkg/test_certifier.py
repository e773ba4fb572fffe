import json
from dataclasses import replace
from types import SimpleNamespace

import pytest

import certifier
import fox_oracle
from certifier import (
    Budget,
    ConsistentUpTo,
    Degenerate,
    Evidence,
    ExcludedManifoldError,
    NormError,
    NotFibered,
    Truncated,
    certify,
    check_property_m,
    evaluate_quotient,
    infer_norm,
)
from finite_quotients import enumerate_homs, group_by_name
from fox_oracle import alexander_polynomial, run_mapping_torus_oracle
from laurent_ring import GF, LaurentPoly
from reports import CertReportRecord
from twisted_alexander import AlexPolys, ManifoldMeta, Route, TwistedSetup, compute_delta
from words_presentations import FreeAutomorphism, PDCode, PhiClass, Presentation, mapping_torus, wirtinger

TREFOIL = [[1, 5, 2, 4], [3, 1, 4, 6], [5, 3, 6, 2]]
FIGURE_EIGHT = [[4, 2, 5, 1], [8, 6, 1, 5], [6, 3, 7, 4], [2, 7, 3, 8]]
FIVE_TWO = [[1, 5, 2, 4], [3, 9, 4, 8], [5, 1, 6, 10], [7, 3, 8, 2], [9, 7, 10, 6]]
SIX_ONE = [[1, 7, 2, 6], [3, 10, 4, 11], [5, 3, 6, 2], [7, 1, 8, 12], [9, 4, 10, 5], [11, 9, 12, 8]]

SMALL = Budget(max_order=4, primes=(2, 3), time_limit=None, jobs=1, cross_check_max_order=4)


def knot(pd, label):
    return wirtinger(PDCode.from_json(json.dumps(pd)), label=label)


def trivial_alex(pres, phi, meta=ManifoldMeta()):
    alpha = enumerate_homs(pres, group_by_name("trivial"))[0]
    return compute_delta(TwistedSetup(pres, phi, alpha, meta=meta))


# ── Property (M) per quotient ──

def test_property_m_passes_on_the_trefoil():
    pres, phi = knot(TREFOIL, "3_1")
    verdict = check_property_m(trivial_alex(pres, phi), 1, ManifoldMeta())
    assert verdict.passed and verdict.monic
    assert verdict.degree == verdict.expected_degree == 2
    assert verdict.evidence == Evidence.Z_EXACT
    assert verdict.order == 1


def test_property_m_fails_on_a_non_monic_polynomial():
    pres, phi = knot(FIVE_TWO, "5_2")
    verdict = check_property_m(trivial_alex(pres, phi), 1, ManifoldMeta())
    assert not verdict.passed
    assert not verdict.monic
    assert verdict.degree == 2
    with pytest.raises(NormError):
        check_property_m(trivial_alex(pres, phi), -1, ManifoldMeta())


def test_degree_counts_b3_for_closed_manifolds():
    pres, phi = mapping_torus(FreeAutomorphism.parse(["y", "Xy"]))
    meta = ManifoldMeta.for_closed(True)
    verdict = check_property_m(trivial_alex(pres, phi, meta), 0, meta)
    assert verdict.expected_degree == 2
    assert verdict.passed


def test_zero_delta_flags_non_prime():
    pres, phi = knot(TREFOIL, "3_1")
    alex = trivial_alex(pres, phi)
    zero = AlexPolys(alex.delta0, LaurentPoly.zero(), None, 1, Route.WADA_Z, 0, alex.alpha)
    verdict = check_property_m(zero, 1, ManifoldMeta())
    assert not verdict.passed
    assert verdict.possibly_not_prime
    assert verdict.degree is None


def test_fp_only_monic_means_stable_degree():
    pres, phi = knot(FIVE_TWO, "5_2")
    alpha = enumerate_homs(pres, group_by_name("trivial"))[0]
    setup = TwistedSetup(pres, phi, alpha)

    def fake(p):
        return AlexPolys(LaurentPoly((-1, 1), 0, GF(p)), compute_delta(setup.with_ring(GF(p))).delta1,
                         None, 1, Route.SMITH_FP, 0, alpha, z_unavailable=True)

    unstable = check_property_m(fake(5), 1, ManifoldMeta(), other_primes=(fake(2),))
    assert unstable.evidence == Evidence.FP_ONLY
    assert not unstable.monic
    stable = check_property_m(fake(5), 1, ManifoldMeta(), other_primes=(fake(3),))
    assert stable.monic and stable.passed


def test_infer_norm():
    pres, phi = knot(TREFOIL, "3_1")
    (onto_s3,) = enumerate_homs(pres, group_by_name("S3"), surjective_only=True)
    entries = [
        check_property_m(trivial_alex(pres, phi), 1, ManifoldMeta()),
        check_property_m(compute_delta(TwistedSetup(pres, phi, onto_s3)), 1, ManifoldMeta()),
    ]
    assert infer_norm(entries).value == 1
    assert infer_norm([]).value is None
    bad = check_property_m(trivial_alex(*knot(FIVE_TWO, "5_2")), 3, ManifoldMeta())
    wrong_degree = type(bad)(bad.hom, True, 4, 4, True, Evidence.Z_EXACT, 1, 0, bad.delta1)
    inference = infer_norm([entries[0], wrong_degree])
    assert inference.value is None
    assert inference.conflict is not None


# ── sweeps ──

def test_trefoil_is_consistent():
    pres, phi = knot(TREFOIL, "3_1")
    report = certify(pres, phi, ManifoldMeta(label="3_1"), SMALL)
    assert isinstance(report.verdict, ConsistentUpTo)
    assert report.verdict.max_order == 4
    assert report.verdict.quotient_count == len(report.ledger)
    assert report.inferred_norm == 1
    assert report.norm_source == "inferred"
    assert all(e.passed and e.evidence == Evidence.Z_EXACT for e in report.ledger)
    assert [e.hom.group.name for e in report.ledger][:2] == ["Z1", "Z2"]
    assert all(len(e.mod_p) == 2 for e in report.ledger)


def test_five_two_is_not_fibered():
    pres, phi = knot(FIVE_TWO, "5_2")
    report = certify(pres, phi, ManifoldMeta(label="5_2"), SMALL)
    assert isinstance(report.verdict, NotFibered)
    witness = report.verdict.witness
    assert witness.hom.group.name == "Z1"
    assert witness.delta1 == LaurentPoly((2, -3, 2))
    assert witness.degree_drop_primes == [2]
    assert report.ledger == (witness,)
    assert any("degree drops mod [2]" in w for w in report.warnings)


def test_norm_hint_is_used():
    pres, phi = knot(FIVE_TWO, "5_2")
    report = certify(pres, phi, ManifoldMeta(norm_hint=1, label="5_2"), SMALL)
    assert report.norm_source == "hint"
    assert isinstance(report.verdict, NotFibered)


def test_fp_only_failures_are_degenerate():
    pres, phi = knot(FIVE_TWO, "5_2")
    redundant = Presentation(pres.num_generators, pres.relators + pres.relators[:1], "5_2+")
    report = certify(redundant, phi, ManifoldMeta(label="5_2+"), Budget(max_order=2, primes=(2, 3)))
    assert isinstance(report.verdict, Degenerate)
    assert report.ledger[0].evidence == Evidence.FP_ONLY


def test_time_limit_truncates():
    pres, phi = knot(TREFOIL, "3_1")
    report = certify(pres, phi, ManifoldMeta(), Budget(max_order=4, primes=(3,), time_limit=1e-9))
    assert isinstance(report.verdict, Truncated)
    assert report.verdict.completed_order == 0
    assert report.ledger == ()


def test_time_limit_is_checked_between_quotients_of_one_group(monkeypatch):
    pres, phi = knot(TREFOIL, "3_1")
    clock = {"now": 0.0}
    real = certifier.evaluate_quotient

    def stalls_on_z5(task):
        result = real(task)
        if task[3].group.name == "Z5":
            clock["now"] = 1000.0
        return result

    monkeypatch.setattr(certifier, "evaluate_quotient", stalls_on_z5)
    monkeypatch.setattr(certifier, "time", SimpleNamespace(monotonic=lambda: clock["now"]))
    report = certify(pres, phi, ManifoldMeta(), Budget(max_order=5, primes=(3,), time_limit=10.0, jobs=1))
    assert isinstance(report.verdict, Truncated)
    assert report.verdict.completed_order == 4
    assert "Z5" in report.verdict.reason
    assert [e.hom.group.name for e in report.ledger].count("Z5") == 1


def test_kinked_unknot_is_degenerate_not_a_witness():
    pres, phi = wirtinger(PDCode(((4, 1, 1, 2), (2, 3, 3, 4))), label="kinked")
    report = certify(pres, phi, ManifoldMeta(label="kinked"), SMALL)
    assert isinstance(report.verdict, Degenerate)
    assert "S¹×D²" in report.verdict.reason
    assert report.ledger == ()
    assert report.inferred_norm is None


def test_six_one_is_not_fibered():
    pres, phi = knot(SIX_ONE, "6_1")
    report = certify(pres, phi, ManifoldMeta(label="6_1"), SMALL)
    assert isinstance(report.verdict, NotFibered)
    witness = report.verdict.witness
    assert witness.hom.group.name == "Z1"
    assert witness.delta1 == alexander_polynomial(pres, phi) == LaurentPoly((2, -5, 2))
    assert not witness.monic


def test_asymmetric_extremes_are_warned_about(monkeypatch):
    pres, phi = knot(TREFOIL, "3_1")
    real = certifier.evaluate_quotient

    def lopsided(task):
        result = real(task)
        return replace(result, alex=replace(result.alex, delta1=LaurentPoly((2, 0, 1))))

    monkeypatch.setattr(certifier, "evaluate_quotient", lopsided)
    report = certify(pres, phi, ManifoldMeta(), Budget(max_order=1, primes=(3,), time_limit=None, jobs=1))
    assert any(w.startswith("asymmetric extremes at Z1") for w in report.warnings)


def test_excluded_and_invalid_inputs():
    pres, phi = wirtinger(PDCode(()))
    with pytest.raises(ExcludedManifoldError):
        certify(pres, phi, ManifoldMeta(), SMALL)
    pres, _ = knot(TREFOIL, "3_1")
    with pytest.raises(NormError):
        certify(pres, PhiClass((0, 0, 0)), ManifoldMeta(), SMALL)


def test_parallel_sweep_matches_serial():
    pres, phi = knot(TREFOIL, "3_1")
    serial = certify(pres, phi, ManifoldMeta(), SMALL)
    parallel = certify(pres, phi, ManifoldMeta(), Budget(max_order=4, primes=(2, 3), jobs=2,
                                                          cross_check_max_order=4))
    assert [e.delta1 for e in parallel.ledger] == [e.delta1 for e in serial.ledger]
    assert parallel.verdict == serial.verdict


def test_evaluate_quotient():
    pres, phi = knot(TREFOIL, "3_1")
    alpha = enumerate_homs(pres, group_by_name("trivial"))[0]
    result = evaluate_quotient((pres, phi, ManifoldMeta(), alpha, (2, 3), True))
    assert result.alex.delta1 == LaurentPoly((1, -1, 1))
    assert [c.prime for c in result.mod_p] == [2, 3]
    assert all(result.mod_p)


# ── reports ──

def test_report_json_is_deterministic_and_parses_back():
    pres, phi = knot(FIVE_TWO, "5_2")
    first = CertReportRecord.from_report(certify(pres, phi, ManifoldMeta(label="5_2"), SMALL)).to_json()
    second = CertReportRecord.from_report(certify(pres, phi, ManifoldMeta(label="5_2"), SMALL)).to_json()
    assert first == second
    data = json.loads(first)
    assert data["schema"] == "fibercert-report/1"
    assert data["verdict"]["kind"] == "NotFibered"
    assert data["verdict"]["witness"]["pass"] is False
    assert CertReportRecord.model_validate_json(first) == CertReportRecord.model_validate(data)


# ── mapping tori ──

def test_mapping_torus_oracle_is_clean():
    budget = Budget(max_order=4, primes=(3,), cross_check_max_order=2)
    cases = run_mapping_torus_oracle(4, seed=11, budget=budget, max_rank=2)
    assert len(cases) == 4
    assert all(c.sound for c in cases), [c.problems for c in cases]
    assert all(c.verdict == "ConsistentUpTo" for c in cases)


def test_oracle_flags_asymmetric_extremes(monkeypatch):
    real = fox_oracle.certify

    def lopsided(*args, **kwargs):
        report = real(*args, **kwargs)
        first = replace(report.ledger[0], delta1=LaurentPoly((3, 1)))
        return replace(report, ledger=(first,) + report.ledger[1:])

    monkeypatch.setattr(fox_oracle, "certify", lopsided)
    (case,) = run_mapping_torus_oracle(1, seed=11, budget=Budget(max_order=2, primes=(3,)), max_rank=2)
    assert not case.symmetric
    assert not case.sound
    assert any(p.startswith("asymmetric extremes") for p in case.problems)


# ── acceptance-scale sweeps ──

@pytest.mark.slow
@pytest.mark.parametrize("pd, label", [(TREFOIL, "3_1"), (FIGURE_EIGHT, "4_1")])
def test_fibered_knots_are_consistent_up_to_order_24(pd, label):
    pres, phi = knot(pd, label)
    budget = Budget(max_order=24, primes=(2, 3, 5), time_limit=None, jobs=1, cross_check_max_order=12)
    report = certify(pres, phi, ManifoldMeta(label=label), budget)
    assert report.verdict == ConsistentUpTo(24, len(report.ledger))
    assert report.inferred_norm == 1
    assert all(e.passed for e in report.ledger)
    assert not report.warnings


@pytest.mark.slow
def test_mapping_torus_oracle_at_order_12():
    budget = Budget(max_order=12, primes=(2, 3, 5), time_limit=None, jobs=1, cross_check_max_order=12)
    cases = run_mapping_torus_oracle(50, seed=2024, budget=budget, max_rank=3)
    assert len(cases) == 50
    assert all(c.sound for c in cases), [c.problems for c in cases if not c.sound]
    assert all(c.verdict == "ConsistentUpTo" and c.symmetric for c in cases)
