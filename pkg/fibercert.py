"""
fibercert command line.

    python fibercert.py compute corpus/trefoil.pd --group trivial
    python fibercert.py certify corpus/5_2.pd
    python fibercert.py homs corpus/trefoil.pd --group S3
    python fibercert.py corpus corpus/knots.json --format json
    python fibercert.py oracle --count 50 --seed 1

Exit codes: 0 consistent / ok, 2 invalid input, 3 NotFibered,
4 Degenerate or Truncated, 1 soundness violation (corpus, oracle).
"""
import json
import logging
from pathlib import Path
from typing import Literal, Optional

import click
from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator
from sympy import isprime

import settings
from certifier import Budget, ExcludedManifoldError, NormError, certify
from finite_quotients import CatalogError, div_phi_alpha, enumerate_homs, group_by_name
from fox_oracle import run_mapping_torus_oracle
from laurent_ring import GF, deg_span, is_monic
from reports import (
    AlexPolysRecord,
    CertReportRecord,
    ComputeReportRecord,
    CorpusReportRecord,
    CorpusRow,
    HomListingRecord,
    HomRecord,
)
from twisted_alexander import ManifoldMeta, PreconditionError, TwistedSetup, compute_delta
from words_presentations import (
    PDCode,
    PDCodeError,
    PhiError,
    PresentationSyntaxError,
    abelian_phi,
    parse_presentation_text,
    wirtinger,
)

logger = logging.getLogger(settings.TOOL_NAME)

EXIT_CODES = {"ConsistentUpTo": 0, "NotFibered": 3, "Degenerate": 4, "Truncated": 4}


class InputError(click.ClickException):
    exit_code = 2


class RunConfig(BaseModel):
    command: Literal["compute", "certify", "homs", "corpus", "oracle"]
    input_path: Optional[Path] = None
    group: Optional[str] = None
    max_order: int = Field(default=settings.DEFAULT_MAX_ORDER, ge=1, le=settings.MAX_CATALOG_ORDER)
    primes: list[int] = Field(default_factory=lambda: list(settings.DEFAULT_PRIMES))
    norm: Optional[int] = Field(default=None, ge=0)
    output_format: Literal["text", "json"] = "text"
    seed: int = 0
    jobs: int = Field(default=settings.DEFAULT_JOBS, ge=1)
    time_limit: Optional[float] = Field(default=None, gt=0)
    closed: Optional[bool] = None

    @field_validator("primes")
    @classmethod
    def _check_primes(cls, primes):
        if not primes:
            raise ValueError("at least one prime is required")
        for p in primes:
            if not isprime(p) or p >= settings.MAX_PRIME:
                raise ValueError(f"{p} is not a prime below {settings.MAX_PRIME}")
        return primes

    def budget(self):
        return Budget(
            max_order=self.max_order,
            primes=tuple(self.primes),
            time_limit=self.time_limit,
            jobs=self.jobs,
        )


class CorpusEntry(BaseModel):
    name: str
    pd: Optional[list[list[int]]] = None
    presentation: Optional[str] = None
    known_genus: Optional[int] = Field(default=None, ge=0)
    known_fibered: Optional[bool] = None
    closed: Optional[bool] = None

    @model_validator(mode="after")
    def _needs_input(self):
        if self.pd is None and self.presentation is None:
            raise ValueError(f"corpus entry {self.name!r} has neither a PD code nor a presentation")
        return self

    def load(self):
        if self.pd is not None:
            pres, phi = wirtinger(PDCode(tuple(tuple(c) for c in self.pd)), label=self.name)
            return pres, phi, ManifoldMeta(label=self.name)
        return _presentation_input(self.presentation, self.closed, self.name)


def _make_config(**kwargs):
    primes = kwargs.pop("primes", None)
    if primes is not None:
        try:
            kwargs["primes"] = [int(p) for p in str(primes).replace(" ", "").split(",") if p]
        except ValueError:
            raise InputError(f"--primes expects a comma-separated list, got {primes!r}")
    kwargs = {k: v for k, v in kwargs.items() if v is not None}
    try:
        return RunConfig(**kwargs)
    except ValidationError as e:
        raise InputError(str(e))


def _presentation_input(text, closed_flag, label=""):
    parsed = parse_presentation_text(text)
    pres = parsed.presentation
    phi = parsed.phi or abelian_phi(pres)
    if phi is None:
        raise PhiError("no 'phi:' line and φ ≡ 1 does not kill every relator")
    closed = parsed.closed if parsed.closed is not None else bool(closed_flag)
    return pres, phi, ManifoldMeta.for_closed(closed, label=pres.label or label)


def load_input(path, closed_flag=None, norm=None):
    try:
        text = path.read_text()
        if path.suffix == ".pres":
            pres, phi, meta = _presentation_input(text, closed_flag, path.stem)
        else:
            pres, phi = wirtinger(PDCode.from_json(text), label=path.stem)
            meta = ManifoldMeta(label=path.stem)
    except OSError as e:
        raise InputError(f"cannot read {path}: {e}")
    except (PDCodeError, PresentationSyntaxError, PhiError, PreconditionError) as e:
        raise InputError(f"{path}: {e}")
    if not pres.label:
        pres = type(pres)(pres.num_generators, pres.relators, path.stem, pres.names)
    if norm is not None:
        meta = ManifoldMeta(meta.b3, meta.closed, norm, meta.label)
    logger.info(f"📂 {path.name}: {pres.num_generators} generators, {len(pres.relators)} relators")
    return pres, phi, meta


def _groups(config):
    try:
        return [group_by_name(config.group or "trivial")]
    except CatalogError as e:
        raise InputError(str(e))


def _monic_text(poly):
    if not poly:
        return "zero"
    return f"{'monic' if is_monic(poly) else 'not monic'}, deg {deg_span(poly)}"


@click.group()
@click.option("--log-level", default=None, help="DEBUG, INFO, WARNING, ERROR")
@click.option("--log-file", default=None, type=click.Path(dir_okay=False))
def cli(log_level, log_file):
    """Twisted Alexander polynomials and fiberedness certificates."""
    settings.configure_logging(log_level, log_file)


@cli.command()
@click.argument("path", type=click.Path(path_type=Path))
@click.option("--group", default=None, help="catalog group name, default trivial")
@click.option("--primes", default=None, help="comma-separated primes for an F_p cross-check")
@click.option("--closed/--bounded", default=None)
@click.option("--format", "output_format", type=click.Choice(["text", "json"]), default="text")
def compute(path, group, primes, closed, output_format):
    """Print Δ₀, Δ₁, Δ₂ for every surjection onto one group."""
    config = _make_config(command="compute", input_path=path, group=group, primes=primes,
                          closed=closed, output_format=output_format)
    pres, phi, meta = load_input(path, config.closed)
    records, lines = [], []
    for G in _groups(config):
        homs = enumerate_homs(pres, G, surjective_only=True)
        if not homs:
            lines.append(f"no surjections onto {G.name}")
        for hom in homs:
            setup = TwistedSetup(pres, phi, hom, meta=meta)
            alex = compute_delta(setup)
            records.append(AlexPolysRecord.from_alex(alex))
            ring_note = f" [{alex.ring} only]" if alex.z_unavailable else ""
            lines.append(f"{hom.describe()}  div = {alex.div}  route = {alex.route.value}{ring_note}")
            lines.append(f"  Δ₀ = {alex.delta0}")
            lines.append(f"  Δ₁ = {alex.delta1} ({_monic_text(alex.delta1)})")
            lines.append(f"  Δ₂ = {alex.delta2 if alex.delta2 is not None else 'n/a'}")
            if primes is not None:
                for p in config.primes:
                    modular = compute_delta(setup.with_ring(GF(p))).delta1
                    lines.append(f"  Δ₁ over F_{p} = {modular}")

    if config.output_format == "json":
        click.echo(ComputeReportRecord(label=pres.label, entries=records).to_json())
    else:
        click.echo(f"{pres.label}:")
        for line in lines:
            click.echo(line)


def _certify_text(report):
    v = report.verdict
    out = []
    if v.kind == "NotFibered":
        w = v.witness
        out.append(f"{report.label}: NotFibered")
        out.append(f"  witness: {w.hom.describe()}  Δ₁ = {w.delta1} "
                   f"({_monic_text(w.delta1)}, expected deg {w.expected_degree})")
        if w.possibly_not_prime:
            out.append("  Δ₁ = 0: the manifold may not be prime")
    elif v.kind == "ConsistentUpTo":
        out.append(f"{report.label}: ConsistentUpTo(max order {v.max_order}, {v.quotient_count} quotients)")
    elif v.kind == "Degenerate":
        out.append(f"{report.label}: Degenerate ({v.reason})")
    else:
        out.append(f"{report.label}: Truncated ({v.reason})")
    norm = report.inferred_norm if report.inferred_norm is not None else "n/a"
    out.append(f"  norm: {norm} ({report.norm_source})")
    out.extend(f"  warning: {w}" for w in report.warnings)
    return out


@cli.command(name="certify")
@click.argument("path", type=click.Path(path_type=Path))
@click.option("--max-order", type=int, default=None)
@click.option("--primes", default=None)
@click.option("--norm", type=int, default=None, help="known Thurston norm of φ")
@click.option("--jobs", type=int, default=None)
@click.option("--time-limit", type=float, default=None)
@click.option("--closed/--bounded", default=None)
@click.option("--progress/--no-progress", default=False)
@click.option("--format", "output_format", type=click.Choice(["text", "json"]), default="text")
def certify_cmd(path, max_order, primes, norm, jobs, time_limit, closed, progress, output_format):
    """Check Property (M) over every catalog quotient up to --max-order."""
    config = _make_config(command="certify", input_path=path, max_order=max_order, primes=primes,
                          norm=norm, jobs=jobs, time_limit=time_limit, closed=closed,
                          output_format=output_format)
    pres, phi, meta = load_input(path, config.closed, config.norm)
    try:
        report = certify(pres, phi, meta, config.budget(), progress=progress)
    except (ExcludedManifoldError, NormError) as e:
        raise InputError(str(e))

    if config.output_format == "json":
        click.echo(CertReportRecord.from_report(report).to_json())
    else:
        for line in _certify_text(report):
            click.echo(line)
    raise SystemExit(EXIT_CODES[report.verdict.kind])


@cli.command()
@click.argument("path", type=click.Path(path_type=Path))
@click.option("--group", required=True)
@click.option("--all/--surjective", "include_all", default=False)
@click.option("--format", "output_format", type=click.Choice(["text", "json"]), default="text")
def homs(path, group, include_all, output_format):
    """List homomorphisms onto a group, one per conjugacy orbit, with div φ_α."""
    config = _make_config(command="homs", input_path=path, group=group, output_format=output_format)
    pres, phi, _ = load_input(path)
    listing = []
    for G in _groups(config):
        for hom in enumerate_homs(pres, G, surjective_only=not include_all):
            listing.append(HomListingRecord(hom=HomRecord.from_hom(hom), div=div_phi_alpha(pres, phi, hom)))
    if config.output_format == "json":
        click.echo(json.dumps([h.model_dump() for h in listing], indent=2))
    else:
        for item in listing:
            click.echo(f"{item.hom.group} [{', '.join(item.hom.images)}]  div = {item.div}")
        click.echo(f"{len(listing)} homomorphism(s)")


def run_corpus(entries, budget):
    rows, violations = [], []
    for entry in entries:
        expected = 2 * entry.known_genus - 1 if entry.known_genus else None
        row = dict(name=entry.name, expected_norm=expected, known_fibered=entry.known_fibered)
        try:
            pres, phi, meta = entry.load()
            trivial = enumerate_homs(pres, group_by_name("trivial"))[0]
            row["delta1"] = compute_delta(TwistedSetup(pres, phi, trivial, meta=meta)).delta1.to_text()
            try:
                report = certify(pres, phi, meta, budget)
            except ExcludedManifoldError:
                row["verdict"] = "n/a"
            else:
                row["verdict"] = report.verdict.kind
                row["inferred_norm"] = report.inferred_norm
                if expected is not None and report.inferred_norm is not None:
                    row["agreement"] = report.inferred_norm == expected
                if entry.known_fibered and report.verdict.kind == "NotFibered":
                    violations.append(f"{entry.name}: known fibered but certified NotFibered")
        except Exception as e:
            logger.error(f"❌ corpus entry {entry.name} failed: {e}")
            row["verdict"] = "error"
            row["error"] = str(e)
        rows.append(CorpusRow(**row))
    return CorpusReportRecord(rows=rows, soundness_violations=violations)


@cli.command()
@click.argument("path", type=click.Path(path_type=Path))
@click.option("--max-order", type=int, default=None)
@click.option("--primes", default=None)
@click.option("--jobs", type=int, default=None)
@click.option("--format", "output_format", type=click.Choice(["text", "json"]), default="text")
def corpus(path, max_order, primes, jobs, output_format):
    """Certify every entry of a corpus file and compare with known genera."""
    config = _make_config(command="corpus", input_path=path, max_order=max_order, primes=primes,
                          jobs=jobs, output_format=output_format)
    try:
        data = json.loads(path.read_text())
        raw = data.get("entries", []) if isinstance(data, dict) else data
        entries = [CorpusEntry(**item) for item in raw]
    except (OSError, json.JSONDecodeError, ValidationError, TypeError) as e:
        raise InputError(f"{path}: {e}")

    result = run_corpus(entries, config.budget())
    if config.output_format == "json":
        click.echo(result.to_json())
    else:
        click.echo(f"{'name':<12} {'Δ₁':<24} {'verdict':<16} {'norm':>4} {'2g-1':>4}  agree")
        for row in result.rows:
            click.echo(
                f"{row.name:<12} {row.delta1 or '-':<24} {row.verdict:<16} "
                f"{'-' if row.inferred_norm is None else row.inferred_norm:>4} "
                f"{'-' if row.expected_norm is None else row.expected_norm:>4}  "
                f"{'-' if row.agreement is None else ('yes' if row.agreement else 'no')}"
            )
        for v in result.soundness_violations:
            click.echo(f"SOUNDNESS VIOLATION: {v}")
    if result.soundness_violations:
        raise SystemExit(1)


@cli.command()
@click.option("--count", type=int, default=50)
@click.option("--seed", type=int, default=0)
@click.option("--max-order", type=int, default=None)
@click.option("--primes", default=None)
@click.option("--jobs", type=int, default=None)
@click.option("--progress/--no-progress", default=False)
@click.option("--format", "output_format", type=click.Choice(["text", "json"]), default="text")
def oracle(count, seed, max_order, primes, jobs, progress, output_format):
    """Certify seeded random mapping tori; any NotFibered is a soundness violation."""
    config = _make_config(command="oracle", max_order=max_order, primes=primes, jobs=jobs,
                          seed=seed, output_format=output_format)
    cases = run_mapping_torus_oracle(count, config.seed, config.budget(), progress=progress)
    bad = [c for c in cases if not c.sound]
    if config.output_format == "json":
        click.echo(json.dumps([
            {"index": c.index, "automorphism": c.automorphism, "rank": c.rank, "verdict": c.verdict,
             "inferred_norm": c.inferred_norm, "problems": list(c.problems)}
            for c in cases
        ], indent=2))
    else:
        for c in cases:
            status = "ok" if c.sound else "FAIL: " + "; ".join(c.problems)
            click.echo(f"#{c.index:<3} rank {c.rank}  [{c.automorphism}]  {c.verdict}  {status}")
        click.echo(f"{len(cases) - len(bad)}/{len(cases)} mapping tori consistent")
    if bad:
        raise SystemExit(1)


if __name__ == "__main__":
    cli()
