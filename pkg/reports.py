"""
JSON shapes of everything fibercert prints. Built from the engine's
dataclasses; parsing a dumped report gives back an equal model.
"""
from __future__ import annotations

from typing import Annotated, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field

import settings


class PolyRecord(BaseModel):
    offset: int
    coeffs: list[int]

    @classmethod
    def from_poly(cls, poly):
        return cls(**poly.to_json())


class HomRecord(BaseModel):
    group: str
    images: list[str]

    @classmethod
    def from_hom(cls, hom):
        return cls(**hom.to_json())


class AlexPolysRecord(BaseModel):
    group: str
    images: list[str]
    div: int
    delta0: PolyRecord
    delta1: PolyRecord
    delta2: Optional[PolyRecord] = None
    route: Literal["wada-Z", "smith-Fp"]
    ring: str
    pivot: int
    z_unavailable: bool = False
    text: dict[str, str] = Field(default_factory=dict)

    @classmethod
    def from_alex(cls, alex):
        data = alex.to_json()
        data["text"] = {
            "delta0": alex.delta0.to_text(),
            "delta1": alex.delta1.to_text(),
            "delta2": alex.delta2.to_text() if alex.delta2 is not None else "",
        }
        return cls(**data)


class ModPRecord(BaseModel):
    prime: int
    status: Literal["agree", "degree-drop", "mismatch"]
    reduced: str
    modular: str

    @classmethod
    def from_check(cls, check):
        return cls(prime=check.prime, status=check.status.value,
                   reduced=check.reduced.to_text(), modular=check.modular.to_text())


class PropertyMRecord(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    hom: HomRecord
    monic: bool
    degree: Optional[int]
    expected_degree: int
    passed: bool = Field(alias="pass")
    evidence: Literal["Z-exact", "Fp-only"]
    div: int
    delta1: str
    possibly_not_prime: bool = False
    mod_p: list[ModPRecord] = Field(default_factory=list)

    @classmethod
    def from_verdict(cls, v):
        return cls(
            hom=HomRecord.from_hom(v.hom),
            monic=v.monic,
            degree=v.degree,
            expected_degree=v.expected_degree,
            passed=v.passed,
            evidence=v.evidence.value,
            div=v.div,
            delta1=v.delta1.to_text(),
            possibly_not_prime=v.possibly_not_prime,
            mod_p=[ModPRecord.from_check(c) for c in v.mod_p],
        )


class NotFiberedRecord(BaseModel):
    kind: Literal["NotFibered"] = "NotFibered"
    witness: PropertyMRecord
    degree_drop_primes: list[int] = Field(default_factory=list)


class ConsistentUpToRecord(BaseModel):
    kind: Literal["ConsistentUpTo"] = "ConsistentUpTo"
    max_order: int
    quotient_count: int


class DegenerateRecord(BaseModel):
    kind: Literal["Degenerate"] = "Degenerate"
    reason: str


class TruncatedRecord(BaseModel):
    kind: Literal["Truncated"] = "Truncated"
    reason: str
    completed_order: int


VerdictRecord = Annotated[
    Union[NotFiberedRecord, ConsistentUpToRecord, DegenerateRecord, TruncatedRecord],
    Field(discriminator="kind"),
]


class BudgetRecord(BaseModel):
    max_order: int
    primes: list[int]
    time_limit: Optional[float] = None
    cross_check_max_order: int


def _verdict_record(verdict):
    if verdict.kind == "NotFibered":
        return NotFiberedRecord(witness=PropertyMRecord.from_verdict(verdict.witness),
                                degree_drop_primes=verdict.witness.degree_drop_primes)
    if verdict.kind == "ConsistentUpTo":
        return ConsistentUpToRecord(max_order=verdict.max_order, quotient_count=verdict.quotient_count)
    if verdict.kind == "Degenerate":
        return DegenerateRecord(reason=verdict.reason)
    return TruncatedRecord(reason=verdict.reason, completed_order=verdict.completed_order)


class CertReportRecord(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    schema_version: str = Field(default=settings.REPORT_SCHEMA, alias="schema")
    tool: str = settings.TOOL_NAME
    version: str = settings.TOOL_VERSION
    label: str
    closed: bool
    b3: int
    budget: BudgetRecord
    verdict: VerdictRecord
    inferred_norm: Optional[int] = None
    norm_source: Literal["hint", "inferred"]
    ledger: list[PropertyMRecord]
    warnings: list[str] = Field(default_factory=list)

    @classmethod
    def from_report(cls, report):
        return cls(
            label=report.label,
            closed=report.meta.closed,
            b3=report.meta.b3,
            budget=BudgetRecord(
                max_order=report.budget.max_order,
                primes=list(report.budget.primes),
                time_limit=report.budget.time_limit,
                cross_check_max_order=report.budget.cross_check_max_order,
            ),
            verdict=_verdict_record(report.verdict),
            inferred_norm=report.inferred_norm,
            norm_source=report.norm_source,
            ledger=[PropertyMRecord.from_verdict(v) for v in report.ledger],
            warnings=list(report.warnings),
        )

    def to_json(self):
        return self.model_dump_json(by_alias=True, indent=2)


class ComputeReportRecord(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    schema_version: str = Field(default=settings.REPORT_SCHEMA, alias="schema")
    label: str
    entries: list[AlexPolysRecord]

    def to_json(self):
        return self.model_dump_json(by_alias=True, indent=2)


class HomListingRecord(BaseModel):
    hom: HomRecord
    div: int


class CorpusRow(BaseModel):
    name: str
    delta1: Optional[str] = None
    verdict: str
    inferred_norm: Optional[int] = None
    expected_norm: Optional[int] = None
    agreement: Optional[bool] = None
    known_fibered: Optional[bool] = None
    error: Optional[str] = None


class CorpusReportRecord(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    schema_version: str = Field(default=settings.REPORT_SCHEMA, alias="schema")
    rows: list[CorpusRow]
    soundness_violations: list[str] = Field(default_factory=list)

    def to_json(self):
        return self.model_dump_json(by_alias=True, indent=2)
