"""
Free-group words, finite presentations and Fox calculus.

Builders produce (Presentation, PhiClass) pairs: Wirtinger presentations of
knot exteriors from PD codes, and mapping tori of free-group automorphisms.
Everything here is immutable once built.
"""
from __future__ import annotations

import json
import math
import random
import re
import string
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

ALPHABET = string.ascii_lowercase
# Fiber generators of a mapping torus never use "t"; that letter is the stable letter.
FIBER_NAMES = "xyzuvwabcdefghijklmnopqrs"

_TOKEN = re.compile(r"\[([gG])(\d+)\]|([A-Za-z])|(1)|(\s+)")


class WordSyntaxError(ValueError):
    def __init__(self, message, column=None):
        super().__init__(message)
        self.column = column


class PresentationSyntaxError(ValueError):
    def __init__(self, message, line=None, column=None):
        where = f"line {line}" if line is not None else "input"
        if column is not None:
            where += f", column {column}"
        super().__init__(f"{where}: {message}")
        self.line = line
        self.column = column


class PDCodeError(ValueError):
    pass


class PhiError(ValueError):
    pass


class NonInvertibleAutomorphismError(ValueError):
    pass


def _free_reduce(letters: Sequence[tuple[int, int]]) -> tuple:
    out = []
    for letter in letters:
        gen, exp = letter
        if exp not in (1, -1):
            raise WordSyntaxError(f"exponent must be +1 or -1, got {exp}")
        if gen < 0:
            raise WordSyntaxError(f"negative generator index {gen}")
        if out and out[-1][0] == gen and out[-1][1] == -exp:
            out.pop()
        else:
            out.append((int(gen), int(exp)))
    return tuple(out)


@dataclass(frozen=True, order=True)
class Word:
    """A freely reduced word; letters are (generator index, ±1)."""
    letters: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "letters", _free_reduce(self.letters))

    @classmethod
    def generator(cls, index, exponent=1):
        return cls(((index, exponent),))

    def __len__(self):
        return len(self.letters)

    def __iter__(self):
        return iter(self.letters)

    def __bool__(self):
        return bool(self.letters)

    def __mul__(self, other):
        return Word(self.letters + other.letters)

    def __pow__(self, n):
        base = self if n >= 0 else self.inverse()
        return Word(base.letters * abs(n))

    def inverse(self):
        return Word(tuple((gen, -exp) for gen, exp in reversed(self.letters)))

    def max_generator(self):
        return max((gen for gen, _ in self.letters), default=-1)

    def exponent_sum(self, index):
        return sum(exp for gen, exp in self.letters if gen == index)

    def to_text(self, names=ALPHABET):
        if not self.letters:
            return "1"
        parts = []
        for gen, exp in self.letters:
            if names and gen < len(names):
                parts.append(names[gen] if exp == 1 else names[gen].upper())
            else:
                parts.append(f"[{'g' if exp == 1 else 'G'}{gen}]")
        return "".join(parts)

    @classmethod
    def parse(cls, text, names=ALPHABET):
        """Lowercase letter = generator, uppercase = its inverse; "1" is the empty word."""
        letters = []
        pos = 0
        while pos < len(text):
            match = _TOKEN.match(text, pos)
            if match is None:
                raise WordSyntaxError(f"unexpected character {text[pos]!r}", column=pos + 1)
            bracket, index, letter = match.group(1), match.group(2), match.group(3)
            if bracket:
                letters.append((int(index), 1 if bracket == "g" else -1))
            elif letter:
                gen = names.find(letter.lower())
                if gen < 0:
                    raise WordSyntaxError(f"unknown generator {letter!r}", column=pos + 1)
                letters.append((gen, 1 if letter.islower() else -1))
            pos = match.end()
        return cls(tuple(letters))

    def __str__(self):
        return self.to_text()


@dataclass(frozen=True)
class FoxElement:
    """Element of the integral group ring of the free group."""
    terms: tuple = ()

    def __post_init__(self):
        merged = Counter()
        for word, coeff in self.terms:
            merged[word] += coeff
        object.__setattr__(
            self, "terms", tuple(sorted((w, c) for w, c in merged.items() if c))
        )

    @classmethod
    def from_word(cls, word, coeff=1):
        return cls(((word, coeff),))

    @classmethod
    def one(cls):
        return cls.from_word(Word())

    def __bool__(self):
        return bool(self.terms)

    def __add__(self, other):
        return FoxElement(self.terms + other.terms)

    def __neg__(self):
        return FoxElement(tuple((w, -c) for w, c in self.terms))

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        return FoxElement(tuple(
            (u * v, a * b) for u, a in self.terms for v, b in other.terms
        ))

    def left_multiply(self, word):
        return FoxElement(tuple((word * w, c) for w, c in self.terms))

    def as_dict(self):
        return dict(self.terms)


def fox_derivative(word: Word, index: int) -> FoxElement:
    """∂w/∂x_index by the product rule: ∂x/∂x = 1, ∂x⁻¹/∂x = −x⁻¹."""
    terms = []
    letters = word.letters
    for pos, (gen, exp) in enumerate(letters):
        if gen != index:
            continue
        if exp == 1:
            terms.append((Word(letters[:pos]), 1))
        else:
            terms.append((Word(letters[:pos + 1]), -1))
    return FoxElement(tuple(terms))


def fox_fundamental_check(relator: Word, num_generators: int) -> bool:
    """Σ_j (∂r/∂x_j)(x_j − 1) = r − 1 in ℤ[F]."""
    one = FoxElement.one()
    lhs = FoxElement()
    for j in range(num_generators):
        lhs = lhs + fox_derivative(relator, j) * (FoxElement.from_word(Word.generator(j)) - one)
    return lhs == FoxElement.from_word(relator) - one


@dataclass(frozen=True)
class Presentation:
    num_generators: int
    relators: tuple = ()
    label: str = ""
    names: str | None = None

    def __post_init__(self):
        if self.num_generators < 1:
            raise PresentationSyntaxError("a presentation needs at least one generator")
        # only free reduction and removal of empty relators, no Tietze moves
        relators = tuple(r for r in self.relators if len(r))
        for r in relators:
            if r.max_generator() >= self.num_generators:
                raise PresentationSyntaxError(
                    f"relator {r.to_text(self.names or ALPHABET)} uses generator "
                    f"{r.max_generator()} >= {self.num_generators}"
                )
        if self.names is not None and len(self.names) < self.num_generators:
            raise PresentationSyntaxError("fewer generator names than generators")
        object.__setattr__(self, "relators", relators)

    @property
    def deficiency(self):
        return self.num_generators - len(self.relators)

    @property
    def alphabet(self):
        if self.names is not None:
            return self.names
        return ALPHABET if self.num_generators <= len(ALPHABET) else ""

    def word_text(self, word):
        return word.to_text(self.alphabet)

    def is_free_cyclic(self):
        return self.num_generators == 1 and not self.relators

    def to_text(self, phi=None, closed=None):
        lines = [f"gens: {self.num_generators}"]
        if self.names:
            lines.append(f"names: {self.names[:self.num_generators]}")
        lines.extend(f"rel: {self.word_text(r)}" for r in self.relators)
        if phi is not None:
            lines.append("phi: " + " ".join(str(v) for v in phi.values))
        if closed is not None:
            lines.append(f"closed: {'true' if closed else 'false'}")
        if self.label:
            lines.append(f"label: {self.label}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class PhiClass:
    """φ ∈ Hom(π, ℤ), one value per generator."""
    values: tuple

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(int(v) for v in self.values))

    @property
    def primitive(self):
        return math.gcd(*self.values) == 1 if self.values else False

    @property
    def trivial(self):
        return not any(self.values)

    def of_word(self, word):
        return phi_of_word(self, word)


def phi_of_word(phi: PhiClass, word: Word) -> int:
    total = 0
    for gen, exp in word:
        if gen >= len(phi.values):
            raise PhiError(f"generator {gen} has no φ value")
        total += exp * phi.values[gen]
    return total


def validate_phi(pres: Presentation, phi: PhiClass) -> None:
    if len(phi.values) != pres.num_generators:
        raise PhiError(
            f"φ has {len(phi.values)} values for {pres.num_generators} generators"
        )
    for r in pres.relators:
        value = phi_of_word(phi, r)
        if value:
            raise PhiError(f"φ({pres.word_text(r)}) = {value}, expected 0")
    return phi


@dataclass(frozen=True)
class PresentationFile:
    presentation: Presentation
    phi: PhiClass | None = None
    closed: bool | None = None


def parse_presentation_text(text: str) -> PresentationFile:
    """Parse the .pres format: gens / names / rel / phi / label / closed lines."""
    num_generators = None
    names = None
    label = ""
    closed = None
    phi_line = None
    raw_relators = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition(":")
        if not sep:
            raise PresentationSyntaxError(f"expected 'key: value', got {line!r}", lineno, 1)
        key = key.strip().lower()
        value = value.strip()
        colon = raw.index(":")
        after = raw[colon + 1:]
        value_column = colon + 2 + len(after) - len(after.lstrip())
        if key == "gens":
            try:
                num_generators = int(value)
            except ValueError:
                raise PresentationSyntaxError(f"bad generator count {value!r}", lineno, value_column)
        elif key == "names":
            if not value.isalpha() or not value.islower() or len(set(value)) != len(value):
                raise PresentationSyntaxError("names must be distinct lowercase letters", lineno, value_column)
            names = value
        elif key == "rel":
            raw_relators.append((lineno, value_column, value))
        elif key == "phi":
            phi_line = (lineno, value_column, value)
        elif key == "label":
            label = value
        elif key == "closed":
            if value.lower() not in ("true", "false"):
                raise PresentationSyntaxError("closed must be true or false", lineno, value_column)
            closed = value.lower() == "true"
        else:
            raise PresentationSyntaxError(f"unknown key {key!r}", lineno, 1)

    if num_generators is None:
        raise PresentationSyntaxError("missing 'gens:' line", 1, 1)

    alphabet = names or ALPHABET
    relators = []
    for lineno, column, value in raw_relators:
        try:
            relators.append(Word.parse(value, alphabet))
        except WordSyntaxError as e:
            raise PresentationSyntaxError(str(e), lineno, column + (e.column or 1) - 1)

    pres = Presentation(num_generators, tuple(relators), label, names)

    phi = None
    if phi_line is not None:
        lineno, column, value = phi_line
        try:
            phi = PhiClass(tuple(int(v) for v in value.split()))
        except ValueError:
            raise PresentationSyntaxError(f"bad phi values {value!r}", lineno, column)
        try:
            validate_phi(pres, phi)
        except PhiError as e:
            raise PresentationSyntaxError(str(e), lineno, column)
    return PresentationFile(pres, phi, closed)


def abelian_phi(pres: Presentation) -> PhiClass | None:
    """φ ≡ 1 when that kills every relator (the knot-group case), else None."""
    phi = PhiClass((1,) * pres.num_generators)
    try:
        return validate_phi(pres, phi)
    except PhiError:
        return None


# ── PD codes ──

@dataclass(frozen=True)
class PDCode:
    """Crossings [i, j, k, l] counterclockwise, i the incoming under-edge."""
    crossings: tuple = ()

    def __post_init__(self):
        crossings = []
        for pos, crossing in enumerate(self.crossings):
            if len(crossing) != 4:
                raise PDCodeError(f"crossing {pos} has {len(crossing)} labels, expected 4")
            crossings.append(tuple(int(label) for label in crossing))
        counts = Counter(label for crossing in crossings for label in crossing)
        for label, count in sorted(counts.items()):
            if count != 2:
                raise PDCodeError(f"arc label {label} appears {count} times, expected exactly 2")
        object.__setattr__(self, "crossings", tuple(crossings))

    @classmethod
    def from_json(cls, text):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise PDCodeError(f"invalid JSON at line {e.lineno}, column {e.colno}: {e.msg}")
        if isinstance(data, dict):
            data = data.get("pd", data.get("crossings"))
        if not isinstance(data, list):
            raise PDCodeError("PD code must be a JSON array of 4-tuples")
        return cls(tuple(tuple(c) for c in data))

    @property
    def labels(self):
        return sorted({label for crossing in self.crossings for label in crossing})

    @property
    def num_arcs(self):
        return max(len(self.labels), 1)

    def _successor(self):
        labels = self.labels
        return {label: labels[(pos + 1) % len(labels)] for pos, label in enumerate(labels)}

    def crossing_sign(self, pos):
        succ = self._successor()
        i, j, k, l = self.crossings[pos]
        if succ[i] != k:
            raise PDCodeError(f"crossing {pos}: under-strand {i} -> {k} is not consecutive")
        if succ[l] == j:
            return 1
        if succ[j] == l:
            return -1
        raise PDCodeError(f"crossing {pos}: cannot orient over-strand {j}/{l}")

    def mirror(self):
        return PDCode(tuple((i, l, k, j) for i, j, k, l in self.crossings))


def _arc_classes(pd: PDCode) -> tuple[dict, int]:
    parent = {label: label for label in pd.labels}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for _, j, _, l in pd.crossings:
        a, b = find(j), find(l)
        if a != b:
            parent[max(a, b)] = min(a, b)

    roots = sorted({find(label) for label in pd.labels})
    index = {root: pos for pos, root in enumerate(roots)}
    return {label: index[find(label)] for label in pd.labels}, len(roots)


def wirtinger(pd: PDCode, label: str = "") -> tuple[Presentation, PhiClass]:
    """One generator per arc, one relator per crossing minus the last one."""
    if not pd.crossings:
        return Presentation(1, (), label or "unknot"), PhiClass((1,))

    arc_of, num_arcs = _arc_classes(pd)
    relators = []
    for pos, (i, j, k, l) in enumerate(pd.crossings):
        a, c, y = arc_of[i], arc_of[k], arc_of[j]
        over = Word.generator(y, pd.crossing_sign(pos))
        relators.append(over * Word.generator(a) * over.inverse() * Word.generator(c, -1))

    pres = Presentation(num_arcs, tuple(relators[:-1]), label)
    return pres, validate_phi(pres, PhiClass((1,) * num_arcs))


# ── free-group automorphisms ──

def _substitute(images: Sequence[Word], word: Word) -> Word:
    letters = []
    for gen, exp in word:
        image = images[gen] if exp == 1 else images[gen].inverse()
        letters.extend(image.letters)
    return Word(tuple(letters))


def _compose(outer: Sequence[Word], inner: Sequence[Word]) -> tuple:
    """Images of outer ∘ inner."""
    return tuple(_substitute(outer, w) for w in inner)


def _identity_images(rank: int) -> tuple:
    return tuple(Word.generator(i) for i in range(rank))


def _nielsen_inverse(images: Sequence[Word], rank: int) -> tuple | None:
    """
    Shorten the image tuple by elementary Nielsen moves until it is a signed
    permutation of the generators. `track` holds e with current = h ∘ e, so
    h⁻¹ = e ∘ σ⁻¹ at the end.
    """
    current = list(images)
    track = list(_identity_images(rank))
    improved = True
    while improved:
        improved = False
        for i in range(rank):
            for j in range(rank):
                if i == j:
                    continue
                for eps in (1, -1):
                    right = current[i] * current[j] ** eps
                    if len(right) < len(current[i]):
                        current[i], track[i] = right, track[i] * track[j] ** eps
                        improved = True
                        continue
                    left = current[j] ** eps * current[i]
                    if len(left) < len(current[i]):
                        current[i], track[i] = left, track[j] ** eps * track[i]
                        improved = True

    if any(len(w) != 1 for w in current) or len({w.letters[0][0] for w in current}) != rank:
        return None
    inverse = [None] * rank
    for k, w in enumerate(current):
        gen, sign = w.letters[0]
        inverse[gen] = track[k] ** sign
    return tuple(inverse)


@dataclass(frozen=True)
class FreeAutomorphism:
    rank: int
    images: tuple
    inverse_images: tuple = field(default=())

    def __post_init__(self):
        if self.rank < 1 or len(self.images) != self.rank or len(self.inverse_images) != self.rank:
            raise NonInvertibleAutomorphismError("images and inverse must list one word per generator")
        for w in self.images + self.inverse_images:
            if w.max_generator() >= self.rank:
                raise NonInvertibleAutomorphismError(f"word {w} leaves the free group of rank {self.rank}")
        identity = _identity_images(self.rank)
        if (_compose(self.images, self.inverse_images) != identity
                or _compose(self.inverse_images, self.images) != identity):
            raise NonInvertibleAutomorphismError("supplied inverse does not invert the map")

    @classmethod
    def from_images(cls, images, inverse=None):
        images = tuple(images)
        rank = len(images)
        if inverse is None:
            inverse = _nielsen_inverse(images, rank)
            if inverse is None:
                raise NonInvertibleAutomorphismError(
                    "Nielsen reduction did not reach a basis; the map is not an automorphism"
                )
        return cls(rank, images, tuple(inverse))

    @classmethod
    def parse(cls, texts, inverse_texts=None, names=FIBER_NAMES):
        images = [Word.parse(t, names) for t in texts]
        inverse = [Word.parse(t, names) for t in inverse_texts] if inverse_texts else None
        return cls.from_images(images, inverse)

    @classmethod
    def identity(cls, rank):
        ident = _identity_images(rank)
        return cls(rank, ident, ident)

    def apply(self, word):
        return _substitute(self.images, word)

    def compose(self, other):
        """self ∘ other."""
        return FreeAutomorphism(
            self.rank,
            _compose(self.images, other.images),
            _compose(other.inverse_images, self.inverse_images),
        )

    def inverse(self):
        return FreeAutomorphism(self.rank, self.inverse_images, self.images)

    def abelianization(self):
        """Integer matrix with column j = exponent sums of h(x_j)."""
        return tuple(
            tuple(self.images[j].exponent_sum(i) for j in range(self.rank))
            for i in range(self.rank)
        )

    def describe(self, names=FIBER_NAMES):
        return ", ".join(
            f"{names[i]}->{w.to_text(names)}" for i, w in enumerate(self.images)
        )

    @classmethod
    def random(cls, rank, rng, max_length=6, steps=None):
        """Product of random elementary Nielsen moves, image lengths capped."""
        images = _identity_images(rank)
        inverse = _identity_images(rank)
        steps = steps if steps is not None else rng.randint(1, 3 * rank + 1)
        for _ in range(steps):
            move, undo = _random_elementary(rank, rng)
            candidate = _compose(images, move)
            if max(len(w) for w in candidate) > max_length:
                continue
            images = candidate
            inverse = _compose(undo, inverse)
        return cls(rank, images, inverse)


def _random_elementary(rank: int, rng: random.Random) -> tuple[tuple, tuple]:
    gens = list(_identity_images(rank))
    kind = rng.choice(("right", "left", "invert", "swap") if rank > 1 else ("invert",))
    i = rng.randrange(rank)
    if kind == "invert":
        gens[i] = gens[i].inverse()
        return tuple(gens), tuple(gens)
    j = rng.choice([k for k in range(rank) if k != i])
    if kind == "swap":
        gens[i], gens[j] = gens[j], gens[i]
        return tuple(gens), tuple(gens)
    eps = rng.choice((1, -1))
    undo = list(gens)
    xi, xj = Word.generator(i), Word.generator(j)
    if kind == "right":
        gens[i], undo[i] = xi * xj ** eps, xi * xj ** -eps
    else:
        gens[i], undo[i] = xj ** eps * xi, xj ** -eps * xi
    return tuple(gens), tuple(undo)


def mapping_torus(h: FreeAutomorphism, label: str = "") -> tuple[Presentation, PhiClass]:
    """⟨x_1..x_k, t | t x_i t⁻¹ = h(x_i)⟩ with φ(t) = 1, φ(x_i) = 0."""
    k = h.rank
    t = Word.generator(k)
    relators = tuple(
        t * Word.generator(i) * t.inverse() * h.images[i].inverse() for i in range(k)
    )
    names = FIBER_NAMES[:k] + "t" if k <= len(FIBER_NAMES) else None
    pres = Presentation(k + 1, relators, label or f"mapping torus [{h.describe()}]", names)
    return pres, validate_phi(pres, PhiClass((0,) * k + (1,)))
