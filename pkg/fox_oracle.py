"""
Independent reference computations, done with sympy on the abelianized
Fox matrix and on characteristic polynomials. Nothing here goes through
laurent_ring's kernels, so the tests can hold the engine against it.

    python fox_oracle.py corpus/5_2.pd
"""
import itertools
import logging
import math
import random
import sys
from dataclasses import dataclass
from pathlib import Path

from sympy import Matrix, Poly, cancel, eye, symbols
from tqdm import tqdm

from certifier import certify
from finite_quotients import enumerate_homs, group_by_name
from laurent_ring import LaurentPoly
from twisted_alexander import ManifoldMeta, TwistedSetup, compute_delta, extremes_agree
from words_presentations import (
    FreeAutomorphism,
    PDCode,
    abelian_phi,
    mapping_torus,
    parse_presentation_text,
    wirtinger,
)

logger = logging.getLogger(__name__)

t = symbols("t")


def _abelian_fox_entry(word, j, phi):
    """∂w/∂x_j pushed to ℤ[t±] by g ↦ t^φ(g), walking the letters directly."""
    total = 0
    height = 0
    for gen, exp in word.letters:
        if exp == 1:
            if gen == j:
                total += t ** height
            height += phi.values[gen]
        else:
            height -= phi.values[gen]
            if gen == j:
                total -= t ** height
    return total


def _normalized(expr):
    """Coefficients (ascending) of expr·t^k, sign fixed so the top one is positive."""
    expr = cancel(expr)
    if expr == 0:
        return ()
    num, den = expr.as_numer_denom()
    poly = Poly(num, t)
    if len(Poly(den, t).terms()) > 1:
        raise ArithmeticError(f"oracle quotient is not a Laurent polynomial: {expr}")
    coeffs = [int(c) for c in reversed(poly.all_coeffs())]
    while coeffs and coeffs[0] == 0:
        coeffs.pop(0)
    if coeffs[-1] < 0:
        coeffs = [-c for c in coeffs]
    return tuple(coeffs)


def alexander_polynomial(pres, phi):
    """Untwisted Δ₁ = det(Fox matrix minus one column) · (1 − t^gcd φ) / (t^φ_j − 1)."""
    k = pres.num_generators
    pivot = next(j for j, v in enumerate(phi.values) if v)
    rows = [[_abelian_fox_entry(r, j, phi) for j in range(k) if j != pivot] for r in pres.relators]
    minor = Matrix(rows).det() if rows else 1
    div = math.gcd(*phi.values)
    expr = minor * (1 - t ** div) / (t ** phi.values[pivot] - 1)
    return LaurentPoly(_normalized(expr))


def characteristic_polynomial(h):
    """det(t·I − Ab(h)), normalized."""
    ab = Matrix(h.abelianization())
    return LaurentPoly(_normalized((t * eye(h.rank) - ab).det()))


def brute_force_homs(pres, G):
    """Every relator-respecting image tuple, no pruning and no dedupe."""
    found = []
    for images in itertools.product(range(G.order), repeat=pres.num_generators):
        ok = True
        for r in pres.relators:
            x = 0
            for gen, exp in r.letters:
                g = images[gen]
                x = G.mul(x, g if exp == 1 else G.inverse(g))
            if x != 0:
                ok = False
                break
        if ok:
            found.append(images)
    return found


def conjugacy_orbits(G, tuples):
    """Partition image tuples into orbits under g·(−)·g⁻¹."""
    remaining = set(tuples)
    orbits = []
    while remaining:
        seed = min(remaining)
        orbit = set()
        for g in G.elements:
            gi = G.inverse(g)
            orbit.add(tuple(G.mul(G.mul(g, x), gi) for x in seed))
        orbits.append(orbit)
        remaining -= orbit
    return orbits


def generates(G, images):
    closure = {0}
    frontier = [0]
    while frontier:
        x = frontier.pop()
        for g in images:
            y = G.mul(x, g)
            if y not in closure:
                closure.add(y)
                frontier.append(y)
    return len(closure) == G.order


# ── mapping-torus positive oracle ──

@dataclass(frozen=True)
class OracleCase:
    index: int
    automorphism: str
    rank: int
    verdict: str
    inferred_norm: int | None
    determinant_identity: bool
    degree_formula: bool
    symmetric: bool
    problems: tuple

    @property
    def sound(self):
        return not self.problems


def run_mapping_torus_oracle(count, seed, budget, max_rank=3, max_length=6, progress=False):
    rng = random.Random(seed)
    trivial = group_by_name("trivial")
    cases = []
    for index in tqdm(range(count), desc="mapping tori", disable=not progress):
        rank = rng.randint(1, max_rank)
        h = FreeAutomorphism.random(rank, rng, max_length=max_length)
        pres, phi = mapping_torus(h)
        meta = ManifoldMeta(label=pres.label)
        problems = []

        alpha = enumerate_homs(pres, trivial)[0]
        delta1 = compute_delta(TwistedSetup(pres, phi, alpha, meta=meta)).delta1
        determinant_identity = delta1 == characteristic_polynomial(h)
        if not determinant_identity:
            problems.append(f"Δ₁ = {delta1} but det(tI − Ab(h)) = {characteristic_polynomial(h)}")

        report = certify(pres, phi, meta, budget)
        if report.verdict.kind != "ConsistentUpTo":
            problems.append(f"verdict {report.verdict.kind}")
        degree_formula = all(
            e.degree == e.order * (rank - 1) + e.div for e in report.ledger
        )
        if not degree_formula:
            problems.append("degree formula fails on a ledger entry")
        if report.inferred_norm != rank - 1:
            problems.append(f"inferred norm {report.inferred_norm}, fiber has χ₋ = {rank - 1}")
        asymmetric = [e for e in report.ledger if not extremes_agree(e.delta1)]
        for e in asymmetric:
            problems.append(f"asymmetric extremes at {e.hom.describe()}: Δ₁ = {e.delta1}")

        cases.append(OracleCase(index, h.describe(), rank, report.verdict.kind, report.inferred_norm,
                                determinant_identity, degree_formula, not asymmetric, tuple(problems)))
        if problems:
            logger.error(f"oracle case {index} [{h.describe()}]: {'; '.join(problems)}")
    return cases


def _load(path):
    text = Path(path).read_text()
    if path.endswith(".pd") or path.endswith(".json"):
        return wirtinger(PDCode.from_json(text), label=Path(path).stem)
    parsed = parse_presentation_text(text)
    return parsed.presentation, parsed.phi or abelian_phi(parsed.presentation)


if __name__ == "__main__":
    if len(sys.argv) < 2:
        print("usage: python fox_oracle.py <file.pd|file.pres> ...")
        sys.exit(2)
    for path in sys.argv[1:]:
        pres, phi = _load(path)
        print(f"{path}: Δ₁ = {alexander_polynomial(pres, phi)}")
