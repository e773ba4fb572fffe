"""
Twisted Alexander polynomials Δ₀, Δ₁, Δ₂ of (presentation, φ, α).

Two routes:
  wada-Z    Δ₁ = det(Fox matrix minus the pivot column block) · Δ₀ / det(ρ(x_pivot) − I)
            over ℤ[t±]; needs a deficiency-one presentation.
  smith-Fp  orders of H₁ and H₀ over 𝔽_p[t±] from diagonal reductions of the
            Fox matrix and of the boundary column; coker(Fox) is H₁ plus a free
            summand, so its torsion order is Δ₁.
ρ is the regular representation of G twisted by t^φ, acting on columns.
"""
from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass, replace
from enum import Enum

import settings
from finite_quotients import Hom, div_phi_alpha
from laurent_ring import (
    GF,
    ZZ,
    ChainComplexError,
    LaurentPoly,
    NotDivisible,
    PolyMatrix,
    Ring,
    deg_span,
    det_fraction_free,
    echelon_dimension,
    exact_div,
    extreme_coefficients_are_units,
    homology_orders,
    module_order,
)
from words_presentations import FoxElement, PhiClass, Presentation, Word, fox_derivative, phi_of_word

logger = logging.getLogger(__name__)


class PreconditionError(ValueError):
    pass


class InternalInconsistencyError(ArithmeticError):
    pass


@dataclass(frozen=True)
class ManifoldMeta:
    b3: int = 0
    closed: bool = False
    norm_hint: int | None = None
    label: str = ""

    def __post_init__(self):
        if self.b3 not in (0, 1):
            raise PreconditionError(f"b3 must be 0 or 1, got {self.b3}")
        if self.closed != (self.b3 == 1):
            raise PreconditionError("closed manifolds have b3 = 1, bounded ones b3 = 0")
        if self.norm_hint is not None and self.norm_hint < 0:
            raise PreconditionError(f"Thurston norm cannot be negative ({self.norm_hint})")

    @classmethod
    def for_closed(cls, closed, norm_hint=None, label=""):
        return cls(1 if closed else 0, bool(closed), norm_hint, label)


class Route(str, Enum):
    WADA_Z = "wada-Z"
    SMITH_FP = "smith-Fp"


@dataclass(frozen=True)
class TwistedSetup:
    pres: Presentation
    phi: PhiClass
    alpha: Hom
    ring: Ring = ZZ
    meta: ManifoldMeta = ManifoldMeta()

    def __post_init__(self):
        if len(self.phi.values) != self.pres.num_generators:
            raise PreconditionError("φ must have one value per generator")
        if self.phi.trivial:
            raise PreconditionError("φ is the zero class")
        if len(self.alpha.images) != self.pres.num_generators:
            raise PreconditionError("α must have one image per generator")
        if not self.alpha.respects(self.pres):
            raise PreconditionError(f"{self.alpha.describe()} does not kill every relator")

    def with_ring(self, ring):
        return replace(self, ring=ring)

    @property
    def group(self):
        return self.alpha.group

    @property
    def pivot(self):
        return next(j for j, v in enumerate(self.phi.values) if v)


@dataclass(frozen=True)
class AlexPolys:
    delta0: LaurentPoly
    delta1: LaurentPoly
    delta2: LaurentPoly | None
    div: int
    route: Route
    pivot_generator: int
    alpha: Hom
    z_unavailable: bool = False

    @property
    def ring(self):
        return self.delta1.ring

    def to_json(self):
        return {
            "group": self.alpha.group.name,
            "images": self.alpha.image_names,
            "div": self.div,
            "delta0": self.delta0.to_json(),
            "delta1": self.delta1.to_json(),
            "delta2": self.delta2.to_json() if self.delta2 is not None else None,
            "route": self.route.value,
            "ring": str(self.ring),
            "pivot": self.pivot_generator,
            "z_unavailable": self.z_unavailable,
        }


# ── matrices ──

def _block(setup: TwistedSetup, element: FoxElement) -> PolyMatrix:
    """ρ applied linearly to a group-ring element."""
    G = setup.group
    n = G.order
    terms = defaultdict(lambda: defaultdict(int))
    for word, coeff in element.terms:
        a = setup.alpha.evaluate(word)
        e = phi_of_word(setup.phi, word)
        for h in range(n):
            terms[(G.mul(a, h), h)][e] += coeff
    zero = LaurentPoly.zero(setup.ring)
    entries = [[zero] * n for _ in range(n)]
    for (row, col), poly in terms.items():
        entries[row][col] = LaurentPoly.from_dict(poly, setup.ring)
    return PolyMatrix(n, n, tuple(tuple(r) for r in entries), setup.ring)


def tensor_block(setup: TwistedSetup, g: Word) -> PolyMatrix:
    return _block(setup, FoxElement.from_word(g))


def fox_matrix(setup: TwistedSetup) -> PolyMatrix:
    k = setup.pres.num_generators
    n = setup.group.order
    if not setup.pres.relators:
        return PolyMatrix(0, k * n, (), setup.ring)
    grid = [
        [_block(setup, fox_derivative(r, j)) for j in range(k)]
        for r in setup.pres.relators
    ]
    return PolyMatrix.from_blocks(grid, setup.ring)


def boundary_column(setup: TwistedSetup) -> PolyMatrix:
    """Column of blocks ρ(x_j) − I, the ∂₁ map C₁ → C₀."""
    n = setup.group.order
    identity = PolyMatrix.identity(n, setup.ring)
    grid = [[tensor_block(setup, Word.generator(j)) - identity] for j in range(setup.pres.num_generators)]
    return PolyMatrix.from_blocks(grid, setup.ring)


def pivot_determinant_by_cycles(setup: TwistedSetup, j: int) -> LaurentPoly:
    """
    det(ρ(x_j) − I) from the cycle type of left multiplication by α(x_j):
    every cycle of length L contributes (−1)^L (1 − t^(φ_j·L)).
    """
    G = setup.group
    a = setup.alpha.images[j]
    e = setup.phi.values[j]
    one = LaurentPoly.one(setup.ring)
    result = one
    seen = set()
    for start in range(G.order):
        if start in seen:
            continue
        length, h = 0, start
        while h not in seen:
            seen.add(h)
            h = G.mul(a, h)
            length += 1
        factor = one - LaurentPoly.monomial(1, e * length, setup.ring)
        result = result * (factor if length % 2 == 0 else -factor)
    return result


def _delta0_law(setup: TwistedSetup, div: int) -> LaurentPoly:
    """(1 − t^div) per orbit of π on G; one orbit when α is onto."""
    index = setup.group.order // len(setup.alpha.image)
    one = LaurentPoly.one(setup.ring)
    return (one - LaurentPoly.monomial(1, div, setup.ring)) ** index


def _delta2(setup: TwistedSetup, delta0: LaurentPoly, delta1: LaurentPoly) -> LaurentPoly | None:
    if not delta1:
        return None
    return (delta0 ** setup.meta.b3).normalize()


# ── routes ──

def _wada(setup: TwistedSetup, div: int) -> AlexPolys:
    n = setup.group.order
    j = setup.pivot
    F = fox_matrix(setup)
    M = F.delete_columns(range(j * n, (j + 1) * n))
    D = det_fraction_free(M)
    P = det_fraction_free(tensor_block(setup, Word.generator(j)) - PolyMatrix.identity(n, setup.ring))
    delta0 = _delta0_law(setup, div)
    quotient = exact_div(D * delta0, P)
    if isinstance(quotient, NotDivisible):
        raise InternalInconsistencyError(
            f"{setup.alpha.describe()}: det(ρ(x_{j}) − I) = {P} does not divide D·Δ₀"
        )
    delta1 = quotient.normalize()
    logger.debug(f"wada-Z {setup.alpha.describe()}: {M.rows}x{M.cols} minor, Δ₁ = {delta1}")
    return AlexPolys(delta0.normalize(), delta1, _delta2(setup, delta0, delta1), div,
                     Route.WADA_Z, j, setup.alpha)


def _complex(setup: TwistedSetup) -> tuple[LaurentPoly, LaurentPoly, PolyMatrix]:
    F = fox_matrix(setup)
    A = boundary_column(setup)
    try:
        return homology_orders(F, A)
    except ChainComplexError as e:
        raise InternalInconsistencyError(f"{setup.alpha.describe()}: {e}")


def _smith(setup: TwistedSetup, div: int) -> AlexPolys:
    F = fox_matrix(setup)
    A = boundary_column(setup)
    rank_a, torsion0 = module_order(A)
    rank_f, torsion1 = module_order(F)
    free_rank = A.rows - rank_f - rank_a
    if free_rank < 0:
        raise InternalInconsistencyError(
            f"{setup.alpha.describe()} over {setup.ring}: rank {rank_f} + {rank_a} exceeds {A.rows}"
        )
    zero = LaurentPoly.zero(setup.ring)
    delta0 = torsion0 if rank_a == A.cols else zero
    delta1 = torsion1 if free_rank == 0 else zero
    expected = _delta0_law(setup, div).normalize()
    if delta0 != expected:
        raise InternalInconsistencyError(
            f"{setup.alpha.describe()} over {setup.ring}: Δ₀ = {delta0}, expected {expected}"
        )
    logger.debug(f"smith-Fp {setup.alpha.describe()} over {setup.ring}: Δ₁ = {delta1}")
    return AlexPolys(delta0, delta1, _delta2(setup, delta0, delta1), div,
                     Route.SMITH_FP, setup.pivot, setup.alpha)


def compute_delta(setup: TwistedSetup) -> AlexPolys:
    div = div_phi_alpha(setup.pres, setup.phi, setup.alpha)
    if setup.ring.p:
        return _smith(setup, div)
    if setup.pres.deficiency != 1:
        logger.warning(
            f"{setup.pres.label or 'presentation'} has deficiency {setup.pres.deficiency}; "
            f"Δ over ℤ unavailable, using F_{settings.FALLBACK_PRIME}"
        )
        fallback = _smith(setup.with_ring(GF(settings.FALLBACK_PRIME)), div)
        return replace(fallback, z_unavailable=True)
    return _wada(setup, div)


# ── cross-checks ──

class ModPStatus(str, Enum):
    AGREE = "agree"
    DEGREE_DROP = "degree-drop"
    MISMATCH = "mismatch"


@dataclass(frozen=True)
class ModPCheck:
    prime: int
    status: ModPStatus
    reduced: LaurentPoly
    modular: LaurentPoly

    def __bool__(self):
        return self.status != ModPStatus.MISMATCH


def delta_mod_p_consistency(setup: TwistedSetup, p: int, integral: AlexPolys | None = None) -> ModPCheck:
    """Compare Δ₁^ℤ mod p against the smith-Fp Δ₁."""
    integral = integral or compute_delta(setup.with_ring(ZZ))
    if integral.route != Route.WADA_Z:
        raise PreconditionError("the ℤ route is unavailable for this presentation")
    modular = compute_delta(setup.with_ring(GF(p))).delta1
    reduced = integral.delta1.reduce_mod(p).normalize()
    z = integral.delta1
    if z and (z.lead % p == 0 or z.trail % p == 0):
        status = ModPStatus.DEGREE_DROP
    elif reduced == modular:
        status = ModPStatus.AGREE
    else:
        status = ModPStatus.MISMATCH
        logger.error(
            f"route disagreement for {setup.alpha.describe()} mod {p}: "
            f"ℤ gives {reduced}, F_{p} gives {modular}"
        )
    return ModPCheck(p, status, reduced, modular)


def rank_check(setup: TwistedSetup) -> bool:
    """
    deg Δ₁ from the diagonal reduction equals the 𝔽_p-dimension of H₁ read off
    an echelon form of its presentation on a kernel basis.
    """
    if not setup.ring.p:
        raise PreconditionError("rank_check runs over 𝔽_p")
    delta1 = compute_delta(setup).delta1
    _, _, X = _complex(setup)
    from_orders = deg_span(delta1) if delta1 else None
    from_echelon = echelon_dimension(X)
    if from_orders != from_echelon:
        logger.error(f"rank law fails for {setup.alpha.describe()}: {from_orders} vs {from_echelon}")
    return from_orders == from_echelon


def extremes_agree(f: LaurentPoly) -> bool:
    """Bottom coefficient is a unit exactly when the top one is."""
    if not f or extreme_coefficients_are_units(f):
        return True
    return not f.ring.is_unit(f.lead) and not f.ring.is_unit(f.trail)


def symmetric_extremes(alex: AlexPolys) -> bool:
    symmetric = extremes_agree(alex.delta1)
    if not symmetric:
        logger.warning(f"asymmetric extremes for {alex.alpha.describe()}: Δ₁ = {alex.delta1}")
    return symmetric
