"""
Finite groups as multiplication tables, homomorphisms out of a presentation,
and the small group-theoretic diagnostics used around them.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Sequence

import networkx as nx
import numpy as np
from sympy import primerange, primitive_root
from sympy.combinatorics import Permutation, PermutationGroup
from sympy.combinatorics.named_groups import AlternatingGroup, DihedralGroup, SymmetricGroup

from settings import MAX_CATALOG_ORDER
from words_presentations import PhiClass, Presentation, Word

logger = logging.getLogger(__name__)


class CatalogError(ValueError):
    pass


class SubgroupError(ValueError):
    pass


class DivisibilityError(ArithmeticError):
    pass


@dataclass(frozen=True, eq=False)
class FiniteGroup:
    """Element 0 is the identity; mult_table[a, b] is the index of a·b."""
    name: str
    mult_table: np.ndarray
    element_names: tuple
    solvable: bool = True
    derived_length: int | None = None
    inverse_table: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        table = np.asarray(self.mult_table, dtype=np.int64)
        object.__setattr__(self, "mult_table", table)
        object.__setattr__(self, "inverse_table", np.argmin(table, axis=1))

    @property
    def order(self):
        return self.mult_table.shape[0]

    @property
    def elements(self):
        return range(self.order)

    def mul(self, a, b):
        return int(self.mult_table[a, b])

    def inverse(self, a):
        return int(self.inverse_table[a])

    @cached_property
    def conjugation_table(self):
        """[g, x] -> g·x·g⁻¹."""
        return self.mult_table[self.mult_table, self.inverse_table[:, None]]

    @cached_property
    def class_minima(self):
        """Smallest element index of each conjugacy class."""
        return tuple(sorted({int(self.conjugation_table[:, x].min()) for x in self.elements}))

    def __repr__(self):
        return f"FiniteGroup({self.name}, order={self.order})"


def validate_group_table(table: np.ndarray) -> bool:
    """Identity at 0, Latin square, associativity (checked on all triples)."""
    t = np.asarray(table)
    if t.ndim != 2 or t.shape[0] != t.shape[1] or t.shape[0] == 0:
        return False
    n = t.shape[0]
    ids = np.arange(n)
    if not (np.array_equal(t[0], ids) and np.array_equal(t[:, 0], ids)):
        return False
    if not (np.all(np.sort(t, axis=1) == ids) and np.all(np.sort(t, axis=0) == ids[:, None])):
        return False
    left = t[t]                               # (a·b)·c
    right = t[ids[:, None, None], t[None]]    # a·(b·c)
    return bool(np.array_equal(left, right))


# ── catalog ──

def _cyclic(n: int) -> FiniteGroup:
    ids = np.arange(n)
    table = (ids[:, None] + ids[None, :]) % n
    return FiniteGroup(f"Z{n}", table, tuple(str(i) for i in range(n)), True, 0 if n == 1 else 1)


def _cycle_name(perm: Permutation) -> str:
    cycles = perm.cyclic_form
    if not cycles:
        return "()"
    return "".join("(" + " ".join(str(x + 1) for x in c) + ")" for c in cycles)


def _from_permutation_group(name: str, group: PermutationGroup) -> FiniteGroup:
    elements = sorted(group.elements, key=lambda g: g.array_form)
    index = {tuple(g.array_form): i for i, g in enumerate(elements)}
    n = len(elements)
    table = np.zeros((n, n), dtype=np.int64)
    forms = [g.array_form for g in elements]
    for i, a in enumerate(forms):
        for j, b in enumerate(forms):
            table[i, j] = index[tuple(a[x] for x in b)]
    solvable = bool(group.is_solvable)
    derived_length = len(group.derived_series()) - 1 if solvable else None
    return FiniteGroup(name, table, tuple(_cycle_name(g) for g in elements), solvable, derived_length)


def _metacyclic(q: int, p: int) -> FiniteGroup:
    """ℤ/q ⋊ ℤ/p acting on ℤ/q by x ↦ x+1 and x ↦ r·x, r of order p."""
    r = pow(primitive_root(q), (q - 1) // p, q)
    shift = Permutation([(x + 1) % q for x in range(q)])
    scale = Permutation([(r * x) % q for x in range(q)])
    return _from_permutation_group(f"Z{q}:Z{p}", PermutationGroup([shift, scale]))


@lru_cache(maxsize=None)
def _groups_up_to(max_order: int) -> tuple:
    groups = [_cyclic(n) for n in range(1, max_order + 1)]
    if max_order >= 4:
        groups.append(_from_permutation_group("D2", DihedralGroup(2)))
    # D3 is S3
    groups.extend(
        _from_permutation_group(f"D{n}", DihedralGroup(n))
        for n in range(4, max_order // 2 + 1)
    )
    if max_order >= 6:
        groups.append(_from_permutation_group("S3", SymmetricGroup(3)))
    if max_order >= 12:
        groups.append(_from_permutation_group("A4", AlternatingGroup(4)))
    if max_order >= 24:
        groups.append(_from_permutation_group("S4", SymmetricGroup(4)))
    if max_order >= 60:
        groups.append(_from_permutation_group("A5", AlternatingGroup(5)))
    for p in primerange(3, max_order + 1):
        for q in primerange(p + 1, max_order // p + 1):
            if (q - 1) % p == 0:
                groups.append(_metacyclic(q, p))
    groups.sort(key=lambda g: (g.order, g.name))
    return tuple(groups)


def catalog(max_order: int) -> list:
    if max_order < 1:
        raise CatalogError("max_order must be at least 1")
    if max_order > MAX_CATALOG_ORDER:
        raise CatalogError(f"catalog stops at order {MAX_CATALOG_ORDER}, asked for {max_order}")
    return list(_groups_up_to(max_order))


def group_by_name(name: str) -> FiniteGroup:
    key = name.strip()
    if key.lower() in ("trivial", "1", "z1"):
        key = "Z1"
    for group in _groups_up_to(MAX_CATALOG_ORDER):
        if group.name.lower() == key.lower():
            return group
    raise CatalogError(f"unknown group {name!r}")


# ── subgroups ──

def subgroup_generated(G: FiniteGroup, elements: Sequence[int]) -> frozenset:
    gens = {int(g) for g in elements if g}
    seen = {0}
    frontier = [0]
    while frontier:
        nxt = []
        for x in frontier:
            for g in gens:
                y = G.mul(x, g)
                if y not in seen:
                    seen.add(y)
                    nxt.append(y)
        frontier = nxt
    return frozenset(seen)


def _validate_subgroup(G: FiniteGroup, elements: Sequence[int], label: str) -> frozenset:
    subset = frozenset(int(e) for e in elements)
    if 0 not in subset or any(not 0 <= e < G.order for e in subset):
        raise SubgroupError(f"{label} must contain the identity and only elements of {G.name}")
    for a in subset:
        for b in subset:
            if G.mul(a, b) not in subset:
                raise SubgroupError(f"{label} is not closed under multiplication in {G.name}")
    return subset


@dataclass(frozen=True)
class DoubleCosetDecomp:
    representatives: tuple
    sizes: tuple

    @property
    def k(self):
        return len(self.representatives)


def double_cosets(G: FiniteGroup, C: Sequence[int], H: Sequence[int]) -> DoubleCosetDecomp:
    C = sorted(_validate_subgroup(G, C, "C"))
    H = sorted(_validate_subgroup(G, H, "H"))
    covered = set()
    reps, sizes = [], []
    for g in G.elements:
        if g in covered:
            continue
        block = {G.mul(G.mul(c, g), h) for c in C for h in H}
        reps.append(g)
        sizes.append(len(block))
        covered |= block
    return DoubleCosetDecomp(tuple(reps), tuple(sizes))


def coset_h0_rank(G: FiniteGroup, C, H) -> int:
    """Number of C-orbits on the left cosets G/H, via connected components."""
    C = _validate_subgroup(G, C, "C")
    H = _validate_subgroup(G, H, "H")
    cosets = {g: frozenset(G.mul(g, h) for h in H) for g in G.elements}
    graph = nx.Graph()
    graph.add_nodes_from(set(cosets.values()))
    for g, coset in cosets.items():
        for c in C:
            graph.add_edge(coset, cosets[G.mul(c, g)])
    return nx.number_connected_components(graph)


# ── homomorphisms ──

def _evaluate(G: FiniteGroup, images: Sequence[int], word: Word) -> int:
    x = 0
    table, inv = G.mult_table, G.inverse_table
    for gen, exp in word:
        g = images[gen]
        x = int(table[x, g if exp == 1 else inv[g]])
    return x


@dataclass(frozen=True)
class Hom:
    group: FiniteGroup
    images: tuple
    surjective: bool

    def evaluate(self, word: Word) -> int:
        return _evaluate(self.group, self.images, word)

    def respects(self, pres: Presentation) -> bool:
        return all(self.evaluate(r) == 0 for r in pres.relators)

    def conjugate(self, g):
        conj = self.group.conjugation_table
        return Hom(self.group, tuple(int(conj[g, x]) for x in self.images), self.surjective)

    @property
    def image(self):
        return subgroup_generated(self.group, self.images)

    @property
    def image_names(self):
        return [self.group.element_names[x] for x in self.images]

    @property
    def sort_key(self):
        return (self.group.order, self.group.name, self.images)

    def to_json(self):
        return {"group": self.group.name, "images": self.image_names}

    def describe(self):
        return f"{self.group.name} [{', '.join(self.image_names)}]"


def _search_order(pres: Presentation) -> tuple[list, list]:
    """Generator 0 first, then whichever generator completes the most relators."""
    k = pres.num_generators
    supports = [frozenset(g for g, _ in r) for r in pres.relators]
    order = [0]
    assigned = {0}
    while len(order) < k:
        def score(g):
            done = sum(1 for s in supports if g in s and s <= assigned | {g})
            touching = sum(1 for s in supports if g in s and s & assigned)
            return (done, touching, -g)
        nxt = max((g for g in range(k) if g not in assigned), key=score)
        order.append(nxt)
        assigned.add(nxt)

    checks = [[] for _ in range(k)]
    position = {g: i for i, g in enumerate(order)}
    for r, s in zip(pres.relators, supports):
        level = max((position[g] for g in s), default=0)
        checks[level].append(r)
    return order, checks


def canonical_images(G: FiniteGroup, images: Sequence[int]) -> tuple:
    """Lexicographically smallest tuple in the orbit under inner automorphisms."""
    rows = G.conjugation_table[:, list(images)]
    return min(tuple(int(x) for x in row) for row in rows)


def enumerate_homs(pres: Presentation, G: FiniteGroup, surjective_only: bool = False,
                   dedupe: bool = True) -> list:
    """Relator-respecting image tuples, one per inner-automorphism orbit when dedupe."""
    k = pres.num_generators
    if G.order == 1:
        return [Hom(G, (0,) * k, True)]

    order, checks = _search_order(pres)
    first_choices = G.class_minima if dedupe else tuple(G.elements)
    images = [0] * k
    found = []

    def extend(level):
        if level == k:
            tup = tuple(images)
            if dedupe and canonical_images(G, tup) != tup:
                return
            surjective = len(subgroup_generated(G, tup)) == G.order
            if surjective or not surjective_only:
                found.append(Hom(G, tup, surjective))
            return
        gen = order[level]
        for x in (first_choices if level == 0 else G.elements):
            images[gen] = x
            if all(_evaluate(G, images, r) == 0 for r in checks[level]):
                extend(level + 1)
        images[gen] = 0

    extend(0)
    found.sort(key=lambda h: h.images)
    logger.debug(f"{G.name}: {len(found)} homomorphisms (surjective_only={surjective_only}, dedupe={dedupe})")
    return found


def div_phi_alpha(pres: Presentation, phi: PhiClass, alpha: Hom) -> int:
    """
    Index of φ(ker α) in ℤ: gcd of the φ-defects around the cycles of the
    Cayley graph of im α on the images of the generators.
    """
    if phi.trivial:
        raise ValueError("div φ_α needs a nontrivial φ")
    G = alpha.group
    graph = nx.MultiDiGraph()
    graph.add_node(0)
    for g in sorted(alpha.image):
        for j, x in enumerate(alpha.images):
            h = G.mul(g, x)
            graph.add_edge(g, h, weight=phi.values[j])
            graph.add_edge(h, g, weight=-phi.values[j])

    potential = {0: 0}
    for u, v in nx.bfs_edges(graph, 0):
        first = next(iter(graph[u][v].values()))
        potential[v] = potential[u] + first["weight"]

    div = 0
    for u, v, w in graph.edges(data="weight"):
        div = math.gcd(div, potential[u] + w - potential[v])
    if div == 0:
        raise DivisibilityError(f"φ vanishes on ker α for {alpha.describe()}")
    return div


def image_equal(generator_map: Sequence[Word], beta: Hom) -> bool:
    """im(A → B → G) == im(B → G), A's generators sent to the given words of B."""
    composite = [beta.evaluate(w) for w in generator_map]
    return subgroup_generated(beta.group, composite) == beta.image
