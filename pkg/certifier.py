"""
Property (M) per finite quotient and the budgeted sweep over the catalog.

Verdicts never claim fiberedness: a clean sweep is reported as
ConsistentUpTo(max_order, count). NotFibered needs a failure with ℤ-exact
evidence.
"""
from __future__ import annotations

import logging
import multiprocessing
import time
from concurrent.futures import Executor, ProcessPoolExecutor, ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum

from tqdm import tqdm

import settings
from finite_quotients import Hom, catalog, enumerate_homs
from laurent_ring import GF, ZZ, LaurentPoly, deg_span, is_monic
from twisted_alexander import (
    AlexPolys,
    ManifoldMeta,
    ModPStatus,
    TwistedSetup,
    compute_delta,
    delta_mod_p_consistency,
    symmetric_extremes,
)
from words_presentations import PhiClass, Presentation, validate_phi

logger = logging.getLogger(__name__)

DEGREE_DROP_JUSTIFICATION = (
    "a leading or trailing coefficient equal to ±1 over Z stays a unit mod every prime, "
    "so a degree drop mod p shows the Z polynomial is not monic"
)


class ExcludedManifoldError(ValueError):
    pass


class NormError(ValueError):
    pass


class Evidence(str, Enum):
    Z_EXACT = "Z-exact"
    FP_ONLY = "Fp-only"


@dataclass(frozen=True)
class PropertyMVerdict:
    hom: Hom
    monic: bool
    degree: int | None
    expected_degree: int
    passed: bool
    evidence: Evidence
    div: int
    b3: int
    delta1: LaurentPoly
    possibly_not_prime: bool = False
    mod_p: tuple = ()

    @property
    def order(self):
        return self.hom.group.order

    @property
    def degree_drop_primes(self):
        return [c.prime for c in self.mod_p if c.status == ModPStatus.DEGREE_DROP]


def check_property_m(alex: AlexPolys, norm: int, meta: ManifoldMeta, hom: Hom | None = None,
                     other_primes: tuple = ()) -> PropertyMVerdict:
    """
    pass ⟺ Δ₁ monic and deg Δ₁ = |G|·norm + (1 + b3)·div.
    With only 𝔽_p values available, "monic" means the degree is the same
    over every prime tried.
    """
    if norm < 0:
        raise NormError(f"Thurston norm cannot be negative ({norm})")
    hom = hom or alex.alpha
    expected = hom.group.order * norm + (1 + meta.b3) * alex.div
    evidence = Evidence.FP_ONLY if alex.z_unavailable else Evidence.Z_EXACT

    if not alex.delta1:
        logger.warning(f"Δ₁ = 0 for {hom.describe()}: fails, and the manifold may not be prime")
        return PropertyMVerdict(hom, False, None, expected, False, evidence, alex.div,
                                meta.b3, alex.delta1, possibly_not_prime=True)

    degree = deg_span(alex.delta1)
    if alex.z_unavailable:
        degrees = {degree} | {deg_span(a.delta1) for a in other_primes}
        monic = len(degrees) == 1 and all(a.delta1 for a in other_primes)
    else:
        monic = is_monic(alex.delta1)
    passed = monic and degree == expected
    return PropertyMVerdict(hom, monic, degree, expected, passed, evidence, alex.div, meta.b3, alex.delta1)


@dataclass(frozen=True)
class NormInference:
    value: int | None
    conflict: tuple | None = None


def infer_norm(ledger: list) -> NormInference:
    """The single x ≥ 0 with deg = |G|·x + (1+b3)·div on every entry, if any."""
    value, first = None, None
    for entry in ledger:
        if entry.degree is None:
            continue
        numerator = entry.degree - (1 + entry.b3) * entry.div
        if numerator < 0 or numerator % entry.order:
            return NormInference(None, (first or entry, entry))
        x = numerator // entry.order
        if value is None:
            value, first = x, entry
        elif x != value:
            return NormInference(None, (first, entry))
    return NormInference(value)


# ── verdicts ──

@dataclass(frozen=True)
class NotFibered:
    witness: PropertyMVerdict
    kind: str = "NotFibered"


@dataclass(frozen=True)
class ConsistentUpTo:
    max_order: int
    quotient_count: int
    kind: str = "ConsistentUpTo"


@dataclass(frozen=True)
class Degenerate:
    reason: str
    kind: str = "Degenerate"


@dataclass(frozen=True)
class Truncated:
    reason: str
    completed_order: int
    kind: str = "Truncated"


@dataclass(frozen=True)
class Budget:
    max_order: int = settings.DEFAULT_MAX_ORDER
    primes: tuple = tuple(settings.DEFAULT_PRIMES)
    time_limit: float | None = settings.DEFAULT_TIME_LIMIT
    jobs: int = settings.DEFAULT_JOBS
    cross_check_max_order: int = settings.CROSSCHECK_MAX_ORDER


@dataclass(frozen=True)
class CertReport:
    label: str
    meta: ManifoldMeta
    budget: Budget
    verdict: object
    inferred_norm: int | None
    norm_source: str
    ledger: tuple
    warnings: tuple = field(default=())


# ── per-quotient work ──

@dataclass(frozen=True)
class QuotientResult:
    alex: AlexPolys
    mod_p: tuple = ()
    other_primes: tuple = ()


def evaluate_quotient(task: tuple) -> QuotientResult:
    """Top-level so process pools can pickle it."""
    pres, phi, meta, hom, primes, cross_check = task
    setup = TwistedSetup(pres, phi, hom, ZZ, meta)
    alex = compute_delta(setup)
    if alex.z_unavailable:
        others = tuple(
            compute_delta(setup.with_ring(GF(p)))
            for p in primes if p != settings.FALLBACK_PRIME
        )
        return QuotientResult(alex, (), others)
    checks = tuple(delta_mod_p_consistency(setup, p, alex) for p in primes) if cross_check else ()
    return QuotientResult(alex, checks)


def _make_executor(max_workers: int) -> Executor:
    try:
        return ProcessPoolExecutor(max_workers=max_workers, mp_context=multiprocessing.get_context("fork"))
    except Exception as e:
        logger.warning(f"process pool unavailable ({e}); falling back to threads")
        return ThreadPoolExecutor(max_workers=max_workers)


def _reject_excluded(pres: Presentation, meta: ManifoldMeta) -> None:
    if pres.is_free_cyclic():
        name = "S¹×S²" if meta.closed else "S¹×D²"
        raise ExcludedManifoldError(
            f"⟨x | ⟩ presents {name}, where the degree formula does not apply"
        )


def _norm_from_trivial_quotient(alex: AlexPolys, meta: ManifoldMeta) -> int | None:
    """deg Δ₁ − (1 + b3)·div; None when Δ₁ = 0."""
    if not alex.delta1:
        return None
    return deg_span(alex.delta1) - (1 + meta.b3) * alex.div


def certify(pres: Presentation, phi: PhiClass, meta: ManifoldMeta, budget: Budget | None = None,
            progress: bool = False) -> CertReport:
    budget = budget or Budget()
    _reject_excluded(pres, meta)
    validate_phi(pres, phi)
    if phi.trivial:
        raise NormError("φ is the zero class")

    started = time.monotonic()
    norm = meta.norm_hint
    norm_source = "hint" if norm is not None else "inferred"
    ledger, warnings = [], []
    witness, degenerate, truncated, excluded = None, None, None, None
    completed_order = 0

    def out_of_time() -> bool:
        return budget.time_limit is not None and time.monotonic() - started > budget.time_limit

    executor = _make_executor(budget.jobs) if budget.jobs > 1 else None
    try:
        for G in tqdm(catalog(budget.max_order), desc="quotients", disable=not progress):
            if out_of_time():
                truncated = f"time limit of {budget.time_limit}s reached before {G.name}"
                break
            homs = enumerate_homs(pres, G, surjective_only=True)
            cross_check = G.order <= budget.cross_check_max_order
            tasks = [(pres, phi, meta, h, tuple(budget.primes), cross_check) for h in homs]
            if executor is not None and len(tasks) > 1:
                results = executor.map(evaluate_quotient, tasks)
            else:
                results = (evaluate_quotient(task) for task in tasks)

            for index, hom in enumerate(homs):
                if index and out_of_time():
                    truncated = f"time limit of {budget.time_limit}s reached inside {G.name}"
                    break
                result = next(results)
                alex = result.alex
                if norm is None:
                    inferred = _norm_from_trivial_quotient(alex, meta)
                    if inferred is not None and inferred < 0:
                        excluded = (
                            f"no nonnegative norm fits the trivial quotient (Δ₁ = {alex.delta1}); "
                            f"the input may be S¹×D² or S¹×S², or the norm must be given"
                        )
                        logger.warning(excluded)
                        break
                    if inferred is None:
                        warnings.append("Δ₁ = 0 at the trivial quotient; no norm can be inferred")
                    norm = inferred or 0
                    logger.info(f"norm inferred from the trivial quotient: x = {norm}")

                verdict = check_property_m(alex, norm, meta, hom, result.other_primes)
                verdict = replace(verdict, mod_p=result.mod_p)
                ledger.append(verdict)
                if not symmetric_extremes(alex):
                    warnings.append(f"asymmetric extremes at {hom.describe()}: Δ₁ = {alex.delta1}")

                mismatches = [c for c in result.mod_p if c.status == ModPStatus.MISMATCH]
                if mismatches and degenerate is None:
                    degenerate = f"route disagreement mod {mismatches[0].prime} at {hom.describe()}"
                if not verdict.passed and witness is None:
                    if verdict.evidence == Evidence.Z_EXACT:
                        witness = verdict
                        logger.info(f"Property (M) fails at {hom.describe()}: Δ₁ = {alex.delta1}")
                        break
                    if degenerate is None:
                        degenerate = f"Fp-only failure at {hom.describe()}: Δ₁ = {alex.delta1}"
                        logger.warning(degenerate)

            if witness is not None or truncated is not None or excluded is not None:
                break
            completed_order = G.order
            logger.info(f"{G.name}: {len(homs)} surjections checked")
    finally:
        if executor is not None:
            executor.shutdown(cancel_futures=True)

    if witness is not None:
        verdict = NotFibered(witness)
        if witness.degree_drop_primes:
            warnings.append(
                f"degree drops mod {witness.degree_drop_primes}: {DEGREE_DROP_JUSTIFICATION}"
            )
    elif excluded is not None:
        verdict = Degenerate(excluded)
    elif truncated is not None:
        verdict = Truncated(truncated, completed_order)
    elif degenerate is not None:
        verdict = Degenerate(degenerate)
    else:
        verdict = ConsistentUpTo(budget.max_order, len(ledger))

    passing = [e for e in ledger if e.passed]
    inference = infer_norm(passing)
    if inference.conflict:
        a, b = inference.conflict
        warnings.append(f"passing entries disagree on the norm: {a.hom.describe()} vs {b.hom.describe()}")
    if degenerate is not None and not isinstance(verdict, Degenerate):
        warnings.append(degenerate)

    logger.info(f"{pres.label or 'input'}: {verdict.kind} after {len(ledger)} quotients")
    return CertReport(
        label=pres.label,
        meta=meta,
        budget=budget,
        verdict=verdict,
        inferred_norm=inference.value,
        norm_source=norm_source,
        ledger=tuple(ledger),
        warnings=tuple(warnings),
    )
