import json
import random
from dataclasses import replace

import pytest

from finite_quotients import Hom, catalog, enumerate_homs, group_by_name
from fox_oracle import alexander_polynomial, characteristic_polynomial
from laurent_ring import GF, LaurentPoly, PolyMatrix, deg_span, det_fraction_free, is_monic
from twisted_alexander import (
    ManifoldMeta,
    ModPStatus,
    PreconditionError,
    Route,
    TwistedSetup,
    compute_delta,
    delta_mod_p_consistency,
    extremes_agree,
    pivot_determinant_by_cycles,
    rank_check,
    symmetric_extremes,
    tensor_block,
)
from words_presentations import (
    FreeAutomorphism,
    PDCode,
    PhiClass,
    Presentation,
    Word,
    mapping_torus,
    wirtinger,
)

KNOTS = {
    "3_1": [[1, 5, 2, 4], [3, 1, 4, 6], [5, 3, 6, 2]],
    "4_1": [[4, 2, 5, 1], [8, 6, 1, 5], [6, 3, 7, 4], [2, 7, 3, 8]],
    "5_2": [[1, 5, 2, 4], [3, 9, 4, 8], [5, 1, 6, 10], [7, 3, 8, 2], [9, 7, 10, 6]],
    "6_1": [[1, 7, 2, 6], [3, 10, 4, 11], [5, 3, 6, 2], [7, 1, 8, 12], [9, 4, 10, 5], [11, 9, 12, 8]],
}


def knot(name):
    return wirtinger(PDCode.from_json(json.dumps(KNOTS[name])), label=name)


def trivial_setup(pres, phi, **kwargs):
    alpha = enumerate_homs(pres, group_by_name("trivial"))[0]
    return TwistedSetup(pres, phi, alpha, **kwargs)


def surjections(pres, group):
    return enumerate_homs(pres, group_by_name(group), surjective_only=True)


@pytest.mark.parametrize("name", sorted(KNOTS))
def test_untwisted_delta_matches_sympy(name):
    pres, phi = knot(name)
    alex = compute_delta(trivial_setup(pres, phi))
    assert alex.route == Route.WADA_Z
    assert alex.delta1 == alexander_polynomial(pres, phi)
    assert alex.delta0 == LaurentPoly((-1, 1))
    assert alex.delta2 == LaurentPoly.one()
    assert alex.div == 1
    assert not alex.z_unavailable


def test_mapping_torus_delta_is_characteristic_polynomial():
    h = FreeAutomorphism.parse(["y", "Xy"])
    pres, phi = mapping_torus(h)
    alex = compute_delta(trivial_setup(pres, phi))
    assert alex.delta1 == characteristic_polynomial(h)
    assert alex.pivot_generator == 2


def test_closed_manifolds_carry_delta2():
    h = FreeAutomorphism.parse(["y", "Xy"])
    pres, phi = mapping_torus(h)
    alex = compute_delta(trivial_setup(pres, phi, meta=ManifoldMeta.for_closed(True)))
    assert alex.delta2 == alex.delta0


@pytest.mark.parametrize("name, group", [
    ("3_1", "S3"),
    ("3_1", "Z3"),
    ("4_1", "D5"),
    ("4_1", "Z2"),
    ("5_2", "Z3"),
])
def test_routes_agree(name, group):
    pres, phi = knot(name)
    homs = surjections(pres, group)
    assert homs
    for alpha in homs:
        setup = TwistedSetup(pres, phi, alpha)
        integral = compute_delta(setup)
        for p in (3, 7):
            check = delta_mod_p_consistency(setup, p, integral)
            assert check.status != ModPStatus.MISMATCH
            assert check
        assert rank_check(setup.with_ring(GF(5)))
        assert symmetric_extremes(integral)


@pytest.mark.parametrize("name, group", [("3_1", "S3"), ("4_1", "D5"), ("3_1", "Z4")])
def test_fibered_knots_satisfy_the_degree_law(name, group):
    pres, phi = knot(name)
    G = group_by_name(group)
    for alpha in surjections(pres, G.name):
        alex = compute_delta(TwistedSetup(pres, phi, alpha))
        assert is_monic(alex.delta1)
        assert deg_span(alex.delta1) == G.order * 1 + alex.div


def test_trefoil_s3_div():
    pres, phi = knot("3_1")
    (alpha,) = surjections(pres, "S3")
    alex = compute_delta(TwistedSetup(pres, phi, alpha))
    assert alex.div == 2
    assert alex.delta0 == LaurentPoly((-1, 0, 1))
    assert deg_span(alex.delta1) == 8


def test_degree_drop_is_not_a_mismatch():
    pres, phi = knot("5_2")
    setup = trivial_setup(pres, phi)
    assert compute_delta(setup).delta1 == LaurentPoly((2, -3, 2))
    drop = delta_mod_p_consistency(setup, 2)
    assert drop.status == ModPStatus.DEGREE_DROP
    agree = delta_mod_p_consistency(setup, 3)
    assert agree.status == ModPStatus.AGREE
    assert agree.modular == LaurentPoly((1, 0, 1), 0, GF(3))


@pytest.mark.parametrize("name, group", [("3_1", "S3"), ("4_1", "D5"), ("5_2", "Z5")])
def test_pivot_determinant_by_cycles(name, group):
    pres, phi = knot(name)
    for alpha in surjections(pres, group):
        setup = TwistedSetup(pres, phi, alpha)
        n = alpha.group.order
        for j in range(pres.num_generators):
            block = tensor_block(setup, Word.generator(j)) - PolyMatrix.identity(n)
            assert pivot_determinant_by_cycles(setup, j) == det_fraction_free(block)


def test_fallback_prime_without_deficiency_one():
    pres, phi = knot("3_1")
    redundant = Presentation(pres.num_generators, pres.relators + pres.relators[:1], "3_1+")
    assert redundant.deficiency == 0
    alex = compute_delta(trivial_setup(redundant, phi))
    assert alex.z_unavailable
    assert alex.route == Route.SMITH_FP
    assert alex.delta1 == LaurentPoly((1, -1, 1)).reduce_mod(5)
    with pytest.raises(PreconditionError):
        delta_mod_p_consistency(trivial_setup(redundant, phi), 3)


def test_smith_route_over_a_prime_field():
    pres, phi = knot("4_1")
    alex = compute_delta(trivial_setup(pres, phi, ring=GF(7)))
    assert alex.route == Route.SMITH_FP
    assert alex.delta1 == LaurentPoly((1, -3, 1)).reduce_mod(7)
    with pytest.raises(PreconditionError):
        rank_check(trivial_setup(pres, phi))


def test_setup_preconditions():
    pres, phi = knot("3_1")
    alpha = enumerate_homs(pres, group_by_name("trivial"))[0]
    with pytest.raises(PreconditionError):
        TwistedSetup(pres, PhiClass((0, 0, 0)), alpha)
    with pytest.raises(PreconditionError):
        TwistedSetup(pres, PhiClass((1, 1)), alpha)
    (onto_s3,) = surjections(pres, "S3")
    free = Presentation(3, (), "free")
    bogus = Hom(onto_s3.group, onto_s3.images, True)
    assert TwistedSetup(free, phi, bogus)
    broken = Hom(onto_s3.group, (onto_s3.images[0], 0, 0), False)
    with pytest.raises(PreconditionError):
        TwistedSetup(pres, phi, broken)


def test_manifold_meta_validation():
    with pytest.raises(PreconditionError):
        ManifoldMeta(b3=1, closed=False)
    with pytest.raises(PreconditionError):
        ManifoldMeta(b3=2, closed=True)
    with pytest.raises(PreconditionError):
        ManifoldMeta(norm_hint=-1)
    assert ManifoldMeta.for_closed(True).b3 == 1


def test_symmetry_of_extreme_coefficients():
    pres, phi = knot("3_1")
    alex = compute_delta(trivial_setup(pres, phi))
    assert symmetric_extremes(alex)
    assert symmetric_extremes(replace(alex, delta1=LaurentPoly((2, -3, 2))))
    assert not symmetric_extremes(replace(alex, delta1=LaurentPoly((2, 0, 1))))
    assert extremes_agree(LaurentPoly.zero())
    assert extremes_agree(LaurentPoly((2, 0, 3), 0, GF(7)))


def test_induced_representation_identity():
    pres, phi = knot("3_1")
    trivial_into_a4 = next(h for h in enumerate_homs(pres, group_by_name("A4")) if not any(h.images))
    alex = compute_delta(TwistedSetup(pres, phi, trivial_into_a4))
    assert alex.delta1 == (LaurentPoly((1, -1, 1)) ** 12).normalize()
    assert alex.delta0 == (LaurentPoly((-1, 1)) ** 12).normalize()

    through_z3 = next(h for h in enumerate_homs(pres, group_by_name("Z6")) if set(h.images) == {2})
    onto_z3 = next(h for h in surjections(pres, "Z3") if set(h.images) == {1})
    doubled = compute_delta(TwistedSetup(pres, phi, through_z3)).delta1
    single = compute_delta(TwistedSetup(pres, phi, onto_z3)).delta1
    assert doubled == (single ** 2).normalize()


@pytest.mark.parametrize("name, group", [("3_1", "S3"), ("4_1", "D5"), ("6_1", "S3")])
def test_delta_is_invariant_under_conjugation(name, group):
    pres, phi = knot(name)
    G = group_by_name(group)
    rng = random.Random(3)
    homs = surjections(pres, group)
    assert homs
    for alpha in homs:
        expected = compute_delta(TwistedSetup(pres, phi, alpha)).delta1
        for g in rng.sample(range(G.order), 3):
            assert compute_delta(TwistedSetup(pres, phi, alpha.conjugate(g))).delta1 == expected


def _sweep_setups(max_order, tori=0, seed=0):
    rng = random.Random(seed)
    inputs = [knot(name) for name in sorted(KNOTS)]
    inputs += [mapping_torus(FreeAutomorphism.random(rng.randint(1, 3), rng, max_length=4)) for _ in range(tori)]
    for pres, phi in inputs:
        for G in catalog(max_order):
            for alpha in enumerate_homs(pres, G, surjective_only=True):
                yield TwistedSetup(pres, phi, alpha)


@pytest.mark.slow
def test_routes_agree_across_the_small_catalog():
    statuses = []
    for setup in _sweep_setups(8, tori=10, seed=5):
        integral = compute_delta(setup)
        for p in (3, 5, 7, 11):
            statuses.append(delta_mod_p_consistency(setup, p, integral).status)
    assert ModPStatus.MISMATCH not in statuses
    assert statuses.count(ModPStatus.AGREE) >= 200


@pytest.mark.slow
def test_rank_law_across_the_small_catalog():
    instances = 0
    for setup in _sweep_setups(4, tori=4, seed=9):
        for p in (3, 5, 7):
            assert rank_check(setup.with_ring(GF(p)))
            instances += 1
    assert instances >= 50
