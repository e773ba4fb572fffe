"""
Exact Laurent polynomials over ℤ and 𝔽_p, polynomial matrices, and the
determinant / Smith-form kernels the Δ computations rest on.

ℤ coefficients are Python ints (unbounded). 𝔽_p kernels run on numpy int64
coefficient arrays, which is why primes are capped at settings.MAX_PRIME.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import reduce

import numpy as np
from sympy import isprime

from settings import MAX_PRIME

logger = logging.getLogger(__name__)


class UndefinedInputError(ValueError):
    pass


class DimensionError(ValueError):
    pass


class UnsupportedRingError(ValueError):
    pass


class ChainComplexError(ArithmeticError):
    pass


@dataclass(frozen=True)
class Ring:
    """p == 0 is ℤ; otherwise the prime field 𝔽_p."""
    p: int = 0

    def __post_init__(self):
        if self.p != 0:
            if not isprime(self.p):
                raise ValueError(f"{self.p} is not prime")
            if self.p >= MAX_PRIME:
                raise ValueError(f"prime {self.p} exceeds the supported bound {MAX_PRIME}")

    @property
    def is_field(self):
        return self.p != 0

    def reduce(self, c):
        return c % self.p if self.p else c

    def is_unit(self, c):
        c = self.reduce(c)
        return c != 0 if self.p else c in (1, -1)

    def __str__(self):
        return f"F_{self.p}" if self.p else "Z"


ZZ = Ring(0)


def GF(p: int) -> Ring:
    return Ring(p)


class _NegativeInfinity:
    """Degree of the zero polynomial."""
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __lt__(self, other):
        return other is not self

    def __le__(self, other):
        return True

    def __gt__(self, other):
        return False

    def __ge__(self, other):
        return other is self

    def __repr__(self):
        return "-inf"

    def __reduce__(self):
        return (_NegativeInfinity, ())


NEG_INF = _NegativeInfinity()


@dataclass(frozen=True)
class LaurentPoly:
    """Σ coeffs[i]·t^(offset+i). Stored trimmed; the zero polynomial has no coefficients."""
    coeffs: tuple = ()
    offset: int = 0
    ring: Ring = ZZ

    def __post_init__(self):
        coeffs = [self.ring.reduce(int(c)) for c in self.coeffs]
        lo = 0
        while lo < len(coeffs) and coeffs[lo] == 0:
            lo += 1
        hi = len(coeffs)
        while hi > lo and coeffs[hi - 1] == 0:
            hi -= 1
        object.__setattr__(self, "coeffs", tuple(coeffs[lo:hi]))
        object.__setattr__(self, "offset", int(self.offset) + lo if hi > lo else 0)

    # ── constructors ──

    @classmethod
    def zero(cls, ring=ZZ):
        return cls((), 0, ring)

    @classmethod
    def one(cls, ring=ZZ):
        return cls((1,), 0, ring)

    @classmethod
    def monomial(cls, coeff, exponent, ring=ZZ):
        return cls((coeff,), exponent, ring)

    @classmethod
    def from_dict(cls, terms, ring=ZZ):
        terms = {int(e): int(c) for e, c in terms.items() if c}
        if not terms:
            return cls.zero(ring)
        lo, hi = min(terms), max(terms)
        return cls(tuple(terms.get(e, 0) for e in range(lo, hi + 1)), lo, ring)

    @classmethod
    def from_json(cls, data, ring=ZZ):
        return cls(tuple(data["coeffs"]), data["offset"], ring)

    # ── inspection ──

    def __bool__(self):
        return bool(self.coeffs)

    def is_zero(self):
        return not self.coeffs

    @property
    def min_exp(self):
        return self.offset if self.coeffs else NEG_INF

    @property
    def max_exp(self):
        return self.offset + len(self.coeffs) - 1 if self.coeffs else NEG_INF

    @property
    def lead(self):
        return self.coeffs[-1] if self.coeffs else 0

    @property
    def trail(self):
        return self.coeffs[0] if self.coeffs else 0

    def coefficient(self, exponent):
        i = exponent - self.offset
        return self.coeffs[i] if 0 <= i < len(self.coeffs) else 0

    def as_dict(self):
        return {self.offset + i: c for i, c in enumerate(self.coeffs) if c}

    # ── arithmetic ──

    def _check(self, other):
        if isinstance(other, int):
            return LaurentPoly((other,), 0, self.ring)
        if other.ring != self.ring:
            raise UnsupportedRingError(f"cannot mix {self.ring} and {other.ring}")
        return other

    def __add__(self, other):
        other = self._check(other)
        if not other.coeffs:
            return self
        if not self.coeffs:
            return other
        lo = min(self.offset, other.offset)
        hi = max(self.max_exp, other.max_exp)
        out = [0] * (hi - lo + 1)
        for i, c in enumerate(self.coeffs):
            out[self.offset - lo + i] += c
        for i, c in enumerate(other.coeffs):
            out[other.offset - lo + i] += c
        return LaurentPoly(tuple(out), lo, self.ring)

    __radd__ = __add__

    def __neg__(self):
        return LaurentPoly(tuple(-c for c in self.coeffs), self.offset, self.ring)

    def __sub__(self, other):
        return self + (-self._check(other))

    def __rsub__(self, other):
        return self._check(other) - self

    def __mul__(self, other):
        other = self._check(other)
        if not self.coeffs or not other.coeffs:
            return LaurentPoly.zero(self.ring)
        out = [0] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a:
                for j, b in enumerate(other.coeffs):
                    out[i + j] += a * b
        return LaurentPoly(tuple(out), self.offset + other.offset, self.ring)

    __rmul__ = __mul__

    def __pow__(self, n):
        if n < 0:
            if len(self.coeffs) == 1 and self.ring.is_unit(self.coeffs[0]):
                inv = pow(self.coeffs[0], -1, self.ring.p) if self.ring.p else self.coeffs[0]
                return LaurentPoly((inv,), -self.offset, self.ring) ** (-n)
            raise UndefinedInputError("only units have negative powers")
        result = LaurentPoly.one(self.ring)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def shift(self, k):
        return LaurentPoly(self.coeffs, self.offset + k, self.ring)

    def substitute_inverse(self):
        """f(t) ↦ f(t⁻¹)."""
        return LaurentPoly(tuple(reversed(self.coeffs)), -self.max_exp if self.coeffs else 0, self.ring)

    def reduce_mod(self, p):
        if self.ring.p not in (0, p):
            raise UnsupportedRingError(f"cannot reduce a {self.ring} polynomial mod {p}")
        return LaurentPoly(self.coeffs, self.offset, GF(p))

    def normalize(self):
        """Lowest exponent 0; leading coefficient positive over ℤ, 1 over 𝔽_p."""
        if not self.coeffs:
            return self
        coeffs = self.coeffs
        if self.ring.p:
            inv = pow(coeffs[-1], -1, self.ring.p)
            coeffs = tuple(c * inv for c in coeffs)
        elif coeffs[-1] < 0:
            coeffs = tuple(-c for c in coeffs)
        return LaurentPoly(coeffs, 0, self.ring)

    def unit_equivalent(self, other):
        return self.normalize() == other.normalize()

    # ── forms ──

    def to_text(self, var="t"):
        if not self.coeffs:
            return "0"
        parts = []
        for i in range(len(self.coeffs) - 1, -1, -1):
            c = self.coeffs[i]
            if not c:
                continue
            e = self.offset + i
            mono = "" if e == 0 else var if e == 1 else f"{var}^{e}"
            mag = abs(c)
            if not mono:
                body = str(mag)
            elif mag == 1:
                body = mono
            else:
                body = f"{mag}*{mono}"
            if not parts:
                parts.append(f"-{body}" if c < 0 else body)
            else:
                parts.append(f"- {body}" if c < 0 else f"+ {body}")
        return " ".join(parts)

    def to_json(self):
        return {"offset": self.offset, "coeffs": list(self.coeffs)}

    def __str__(self):
        return self.to_text()


def normalize(f: LaurentPoly) -> LaurentPoly:
    return f.normalize()


def deg_span(f: LaurentPoly) -> int | _NegativeInfinity:
    if not f.coeffs:
        return NEG_INF
    return len(f.coeffs) - 1


def is_monic(f: LaurentPoly) -> bool:
    if not f.coeffs:
        raise UndefinedInputError("monicness of the zero polynomial is undefined")
    return f.ring.is_unit(f.lead)


def extreme_coefficients_are_units(f: LaurentPoly) -> bool:
    return bool(f.coeffs) and f.ring.is_unit(f.lead) and f.ring.is_unit(f.trail)


@dataclass(frozen=True)
class NotDivisible:
    numerator: LaurentPoly
    denominator: LaurentPoly

    def __bool__(self):
        return False


def exact_div(f: LaurentPoly, g: LaurentPoly) -> LaurentPoly | NotDivisible:
    """q with f = q·g, or NotDivisible."""
    if not g.coeffs:
        raise ZeroDivisionError("division by the zero polynomial")
    if f.ring != g.ring:
        raise UnsupportedRingError(f"cannot mix {f.ring} and {g.ring}")
    ring = f.ring
    if not f.coeffs:
        return LaurentPoly.zero(ring)
    a = list(f.coeffs)
    b = g.coeffs
    if len(a) < len(b):
        return NotDivisible(f, g)
    lead = b[-1]
    inv = pow(lead, -1, ring.p) if ring.p else None
    q = [0] * (len(a) - len(b) + 1)
    for k in range(len(q) - 1, -1, -1):
        top = a[k + len(b) - 1]
        if not top:
            continue
        if ring.p:
            c = top * inv % ring.p
        else:
            c, rem = divmod(top, lead)
            if rem:
                return NotDivisible(f, g)
        q[k] = c
        for i, bc in enumerate(b):
            a[k + i] = ring.reduce(a[k + i] - c * bc)
    if any(a):
        return NotDivisible(f, g)
    return LaurentPoly(tuple(q), f.offset - g.offset, ring)


# ── 𝔽_p[t] kernels on numpy int64 arrays (ascending coefficients, trimmed) ──

_EMPTY = np.zeros(0, dtype=np.int64)


def _fp_trim(a: np.ndarray) -> np.ndarray:
    nz = np.flatnonzero(a)
    return a[: nz[-1] + 1] if nz.size else _EMPTY


def _fp_add(a: np.ndarray, b: np.ndarray, p: int) -> np.ndarray:
    if a.size < b.size:
        a, b = b, a
    out = a.copy()
    out[: b.size] += b
    return _fp_trim(out % p)


def _fp_sub(a: np.ndarray, b: np.ndarray, p: int) -> np.ndarray:
    return _fp_add(a, (-b) % p, p)


def _fp_mul(a: np.ndarray, b: np.ndarray, p: int) -> np.ndarray:
    if not a.size or not b.size:
        return _EMPTY
    return _fp_trim(np.convolve(a, b) % p)


def _fp_scale(a: np.ndarray, c: int, p: int) -> np.ndarray:
    return _fp_trim(a * (c % p) % p)


def _fp_divmod(a: np.ndarray, b: np.ndarray, p: int) -> tuple[np.ndarray, np.ndarray]:
    db = b.size - 1
    if a.size <= db:
        return _EMPTY, a
    inv = pow(int(b[-1]), -1, p)
    r = a.copy()
    q = np.zeros(a.size - db, dtype=np.int64)
    for k in range(a.size - b.size, -1, -1):
        c = int(r[k + db]) * inv % p
        if c:
            q[k] = c
            r[k: k + db + 1] = (r[k: k + db + 1] - c * b) % p
    return _fp_trim(q), _fp_trim(r[:db])


def _fp_from_poly(f: LaurentPoly, shift: int) -> np.ndarray:
    """Coefficient array of t^shift·f; shift must make it polynomial."""
    if not f.coeffs:
        return _EMPTY
    out = np.zeros(f.offset + shift + len(f.coeffs), dtype=np.int64)
    out[f.offset + shift:] = f.coeffs
    return out


def _fp_to_poly(a: np.ndarray, ring: Ring) -> LaurentPoly:
    return LaurentPoly(tuple(int(c) for c in a), 0, ring)


@dataclass(frozen=True)
class PolyMatrix:
    rows: int
    cols: int
    entries: tuple
    ring: Ring = ZZ

    def __post_init__(self):
        entries = tuple(tuple(row) for row in self.entries)
        if len(entries) != self.rows or any(len(row) != self.cols for row in entries):
            raise DimensionError(f"entries do not form a {self.rows}x{self.cols} grid")
        for row in entries:
            for e in row:
                if e.ring != self.ring:
                    raise UnsupportedRingError(f"entry over {e.ring} in a {self.ring} matrix")
        object.__setattr__(self, "entries", entries)

    @classmethod
    def from_rows(cls, rows, ring=ZZ):
        rows = [list(r) for r in rows]
        cols = len(rows[0]) if rows else 0
        return cls(len(rows), cols, tuple(
            tuple(e if isinstance(e, LaurentPoly) else LaurentPoly((e,), 0, ring) for e in r)
            for r in rows
        ), ring)

    @classmethod
    def zeros(cls, rows, cols, ring=ZZ):
        z = LaurentPoly.zero(ring)
        return cls(rows, cols, tuple((z,) * cols for _ in range(rows)), ring)

    @classmethod
    def identity(cls, n, ring=ZZ):
        z, o = LaurentPoly.zero(ring), LaurentPoly.one(ring)
        return cls(n, n, tuple(tuple(o if i == j else z for j in range(n)) for i in range(n)), ring)

    @classmethod
    def from_blocks(cls, grid, ring=ZZ):
        """Assemble a block matrix; every block row must be non-empty."""
        rows = []
        for block_row in grid:
            height = block_row[0].rows
            if any(b.rows != height for b in block_row):
                raise DimensionError("blocks in one row differ in height")
            for i in range(height):
                rows.append(tuple(e for b in block_row for e in b.entries[i]))
        cols = len(rows[0]) if rows else 0
        return cls(len(rows), cols, tuple(rows), ring)

    def __getitem__(self, key):
        i, j = key
        return self.entries[i][j]

    def __matmul__(self, other):
        if self.cols != other.rows:
            raise DimensionError(f"cannot multiply {self.rows}x{self.cols} by {other.rows}x{other.cols}")
        z = LaurentPoly.zero(self.ring)
        out = []
        for row in self.entries:
            out_row = []
            for j in range(other.cols):
                acc = z
                for k, e in enumerate(row):
                    if e and other.entries[k][j]:
                        acc = acc + e * other.entries[k][j]
                out_row.append(acc)
            out.append(tuple(out_row))
        return PolyMatrix(self.rows, other.cols, tuple(out), self.ring)

    def __add__(self, other):
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise DimensionError("shape mismatch")
        return PolyMatrix(self.rows, self.cols, tuple(
            tuple(a + b for a, b in zip(r, s)) for r, s in zip(self.entries, other.entries)
        ), self.ring)

    def __sub__(self, other):
        return self + other.scale(LaurentPoly((-1,), 0, self.ring))

    def scale(self, f):
        return PolyMatrix(self.rows, self.cols, tuple(
            tuple(e * f for e in r) for r in self.entries
        ), self.ring)

    def delete_columns(self, columns):
        drop = set(columns)
        keep = [j for j in range(self.cols) if j not in drop]
        return PolyMatrix(self.rows, len(keep), tuple(
            tuple(r[j] for j in keep) for r in self.entries
        ), self.ring)

    def reduce_mod(self, p):
        return PolyMatrix(self.rows, self.cols, tuple(
            tuple(e.reduce_mod(p) for e in r) for r in self.entries
        ), GF(p))

    def is_zero(self):
        return not any(e for r in self.entries for e in r)

    def min_exponent(self):
        exps = [e.offset for r in self.entries for e in r if e]
        return min(exps) if exps else 0


# ── determinants ──

def _bareiss_int(a: list) -> int:
    n = len(a)
    if n == 0:
        return 1
    sign, prev = 1, 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for r in range(k + 1, n):
                if a[r][k] != 0:
                    a[k], a[r] = a[r], a[k]
                    sign = -sign
                    break
            else:
                return 0
        pivot = a[k][k]
        row_k = a[k]
        for i in range(k + 1, n):
            row_i = a[i]
            aik = row_i[k]
            for j in range(k + 1, n):
                row_i[j] = (row_i[j] * pivot - aik * row_k[j]) // prev
        prev = pivot
    return sign * a[n - 1][n - 1]


def _det_integer(m: PolyMatrix) -> LaurentPoly:
    """
    Kronecker substitution t = 2^B turns the matrix into an integer matrix;
    B exceeds twice the coefficient bound of every minor, so the balanced
    base-2^B digits of the integer determinant are the coefficients.
    """
    shifts, degrees, bound = [], [], 1
    for row in m.entries:
        nonzero = [e for e in row if e]
        if not nonzero:
            return LaurentPoly.zero(ZZ)
        lo = min(e.offset for e in nonzero)
        shifts.append(lo)
        degrees.append(max(e.max_exp for e in nonzero) - lo)
        bound *= max(1, sum(abs(c) for e in nonzero for c in e.coeffs))

    bits = bound.bit_length() + 2
    bits += -bits % 8
    radix = 1 << bits

    def pack(e, lo):
        value = 0
        for c in reversed(e.coeffs):
            value = value * radix + c
        return value << (bits * (e.offset - lo)) if e.coeffs else 0

    grid = [[pack(e, lo) for e in row] for row, lo in zip(m.entries, shifts)]
    value = _bareiss_int(grid)

    mask, half = radix - 1, radix >> 1
    coeffs = []
    for _ in range(sum(degrees) + 1):
        digit = value & mask
        if digit >= half:
            digit -= radix
        coeffs.append(digit)
        value = (value - digit) >> bits
    if value != 0:
        raise ArithmeticError("determinant exceeded its coefficient bound")
    return LaurentPoly(tuple(coeffs), sum(shifts), ZZ)


def _det_fp(m: PolyMatrix) -> LaurentPoly:
    p = m.ring.p
    shifts = []
    grid = []
    for row in m.entries:
        nonzero = [e for e in row if e]
        if not nonzero:
            return LaurentPoly.zero(m.ring)
        lo = min(e.offset for e in nonzero)
        shifts.append(lo)
        grid.append([_fp_from_poly(e, -lo) for e in row])

    n = len(grid)
    sign, prev = 1, np.ones(1, dtype=np.int64)
    for k in range(n - 1):
        if not grid[k][k].size:
            for r in range(k + 1, n):
                if grid[r][k].size:
                    grid[k], grid[r] = grid[r], grid[k]
                    sign = -sign
                    break
            else:
                return LaurentPoly.zero(m.ring)
        pivot = grid[k][k]
        for i in range(k + 1, n):
            aik = grid[i][k]
            for j in range(k + 1, n):
                num = _fp_sub(_fp_mul(grid[i][j], pivot, p), _fp_mul(aik, grid[k][j], p), p)
                q, r = _fp_divmod(num, prev, p)
                if r.size:
                    raise ArithmeticError("Bareiss step was not exact")
                grid[i][j] = q
        prev = pivot
    det = _fp_scale(grid[n - 1][n - 1], sign, p)
    return _fp_to_poly(det, m.ring).shift(sum(shifts))


def det_fraction_free(m: PolyMatrix) -> LaurentPoly:
    if m.rows != m.cols:
        raise DimensionError(f"determinant of a non-square {m.rows}x{m.cols} matrix")
    if m.rows == 0:
        return LaurentPoly.one(m.ring)
    if m.ring.p:
        return _det_fp(m)
    return _det_integer(m)


# ── gcd / Smith form over 𝔽_p[t] ──

def _require_field(ring: Ring) -> None:
    if not ring.p:
        raise UnsupportedRingError("only 𝔽_p coefficients are supported here")


def gcd_univariate(f: LaurentPoly, g: LaurentPoly) -> LaurentPoly:
    _require_field(f.ring)
    if f.ring != g.ring:
        raise UnsupportedRingError(f"cannot mix {f.ring} and {g.ring}")
    p = f.ring.p
    a = _fp_from_poly(f, -f.offset)
    b = _fp_from_poly(g, -g.offset)
    while b.size:
        a, b = b, _fp_divmod(a, b, p)[1]
    return _fp_to_poly(a, f.ring).normalize()


def _matrix_to_fp(m: PolyMatrix) -> list:
    """Polynomial arrays of t^-k·M, k the smallest exponent present."""
    lo = m.min_exponent()
    return [[_fp_from_poly(e, -lo) for e in row] for row in m.entries]


def _identity_fp(n: int) -> list:
    one = np.ones(1, dtype=np.int64)
    return [[one if i == j else _EMPTY for j in range(n)] for i in range(n)]


def _smith_fp(a: list, rows: int, cols: int, p: int, linv: list | None = None) -> list:
    """
    In-place Smith reduction of the grid `a`. Returns the diagonal. When
    `linv` is given it is kept equal to L⁻¹ for the accumulated row
    transform L.
    """

    def swap_rows(i, j):
        a[i], a[j] = a[j], a[i]
        if linv is not None:
            for row in linv:
                row[i], row[j] = row[j], row[i]

    def swap_cols(i, j):
        for row in a:
            row[i], row[j] = row[j], row[i]

    def sub_row(i, k, q):
        # row_i -= q * row_k
        for c in range(cols):
            if a[k][c].size:
                a[i][c] = _fp_sub(a[i][c], _fp_mul(q, a[k][c], p), p)
        if linv is not None:
            for row in linv:
                if row[i].size:
                    row[k] = _fp_add(row[k], _fp_mul(q, row[i], p), p)

    def add_row(k, i):
        # row_k += row_i
        for c in range(cols):
            if a[i][c].size:
                a[k][c] = _fp_add(a[k][c], a[i][c], p)
        if linv is not None:
            for row in linv:
                if row[k].size:
                    row[i] = _fp_sub(row[i], row[k], p)

    def sub_col(j, k, q):
        for row in a:
            if row[k].size:
                row[j] = _fp_sub(row[j], _fp_mul(q, row[k], p), p)

    diagonal = []
    for k in range(min(rows, cols)):
        best = None
        for i in range(k, rows):
            for j in range(k, cols):
                size = a[i][j].size
                if size and (best is None or size < best[0]):
                    best = (size, i, j)
        if best is None:
            break
        swap_rows(k, best[1])
        swap_cols(k, best[2])

        while True:
            pivot = a[k][k]
            clean = True
            for i in range(k + 1, rows):
                if a[i][k].size:
                    q, r = _fp_divmod(a[i][k], pivot, p)
                    sub_row(i, k, q)
                    clean = clean and not r.size
            for j in range(k + 1, cols):
                if a[k][j].size:
                    q, r = _fp_divmod(a[k][j], pivot, p)
                    sub_col(j, k, q)
                    clean = clean and not r.size
            if not clean:
                best = None
                for i in range(k + 1, rows):
                    if a[i][k].size and (best is None or a[i][k].size < best[0]):
                        best = (a[i][k].size, i, None)
                for j in range(k + 1, cols):
                    if a[k][j].size and (best is None or a[k][j].size < best[0]):
                        best = (a[k][j].size, None, j)
                if best[1] is not None:
                    swap_rows(k, best[1])
                else:
                    swap_cols(k, best[2])
                continue

            stray = next(
                (i for i in range(k + 1, rows) for j in range(k + 1, cols)
                 if a[i][j].size and _fp_divmod(a[i][j], pivot, p)[1].size),
                None,
            )
            if stray is None:
                break
            add_row(k, stray)

        lead = int(a[k][k][-1])
        if lead != 1:
            inv = pow(lead, -1, p)
            for c in range(cols):
                a[k][c] = _fp_scale(a[k][c], inv, p)
            if linv is not None:
                for row in linv:
                    row[k] = _fp_scale(row[k], lead, p)
        diagonal.append(a[k][k])
    return diagonal


def smith_diagonal(m: PolyMatrix) -> list:
    """Invariant factors d₁ | d₂ | … of M over 𝔽_p[t±], normalized."""
    _require_field(m.ring)
    grid = _matrix_to_fp(m)
    diagonal = _smith_fp(grid, m.rows, m.cols, m.ring.p)
    return [_fp_to_poly(d, m.ring).normalize() for d in diagonal]


# ── whole-matrix diagonal reduction over 𝔽_p[t] ──
# The matrix lives in one R×C×D int64 array (D coefficient slots, ascending),
# so a row or column move is a few numpy calls across every entry at once.

def _degrees(a: np.ndarray) -> np.ndarray:
    """Degree along the last axis, −1 for zero entries."""
    nonzero = a != 0
    top = a.shape[-1] - 1 - np.argmax(nonzero[..., ::-1], axis=-1)
    return np.where(nonzero.any(axis=-1), top, -1)


def _rows_array(m: PolyMatrix) -> np.ndarray:
    """Coefficient array of M, each row multiplied by the power of t that starts it at t^0."""
    shifts, width = [], 1
    for row in m.entries:
        nonzero = [e for e in row if e]
        lo = min((e.offset for e in nonzero), default=0)
        shifts.append(lo)
        width = max([width] + [e.max_exp - lo + 1 for e in nonzero])
    a = np.zeros((m.rows, m.cols, width), dtype=np.int64)
    for i, (row, lo) in enumerate(zip(m.entries, shifts)):
        for j, e in enumerate(row):
            if e:
                start = e.offset - lo
                a[i, j, start: start + len(e.coeffs)] = e.coeffs
    return a


def _widen(a: np.ndarray, width: int) -> np.ndarray:
    if width <= a.shape[-1]:
        return a
    pad = np.zeros(a.shape[:-1] + (width - a.shape[-1],), dtype=np.int64)
    return np.concatenate([a, pad], axis=-1)


def _swap(a: np.ndarray, k: int, i: int, j: int) -> None:
    if i != k:
        a[[k, i]] = a[[i, k]]
    if j != k:
        a[:, [k, j]] = a[:, [j, k]]


def _divide_rows(polys: np.ndarray, pivot: np.ndarray, dp: int, p: int) -> np.ndarray:
    """Quotients of every row of `polys` (m×D) by `pivot`, which has degree dp."""
    r = polys.copy()
    top = int(_degrees(r).max())
    q = np.zeros((r.shape[0], max(top - dp + 1, 1)), dtype=np.int64)
    inv = pow(int(pivot[dp]), -1, p)
    divisor = pivot[: dp + 1]
    for s in range(top, dp - 1, -1):
        c = r[:, s] * inv % p
        if c.any():
            q[:, s - dp] = c
            r[:, s - dp: s + 1] = (r[:, s - dp: s + 1] - c[:, None] * divisor[None, :]) % p
    return q


def _subtract_multiples(block: np.ndarray, q: np.ndarray, source: np.ndarray, p: int) -> np.ndarray:
    """block[i] − q[i]·source for every i; block is m×C×D, q is m×Q, source is C×D."""
    out = block.copy()
    width = block.shape[-1]
    for s in range(q.shape[1]):
        c = q[:, s]
        if c.any():
            out[:, :, s:] = (out[:, :, s:] - c[:, None, None] * source[None, :, : width - s]) % p
    return out


def _diagonal_reduction(a: np.ndarray, p: int) -> tuple[int, np.ndarray]:
    """
    Diagonalize `a` by unimodular row and column moves. Returns the number of
    nonzero pivots and their product; the pivots need not divide each other.
    """
    rows, cols = a.shape[:2]
    product = np.ones(1, dtype=np.int64)
    rank = 0
    for k in range(min(rows, cols)):
        degrees = _degrees(a[k:, k:])
        if degrees.max() < 0:
            break
        masked = np.where(degrees >= 0, degrees, a.shape[-1])
        i, j = np.unravel_index(int(np.argmin(masked)), masked.shape)
        _swap(a, k, k + int(i), k + int(j))

        while True:
            dp = int(_degrees(a[k, k]))
            below = k + 1 + np.flatnonzero(a[k + 1:, k].any(axis=1))
            if below.size:
                q = _divide_rows(a[below, k], a[k, k], dp, p)
                a = _widen(a, int(_degrees(a[k]).max()) + q.shape[1])
                a[below] = _subtract_multiples(a[below], q, a[k], p)
            right = k + 1 + np.flatnonzero(a[k, k + 1:].any(axis=1))
            if right.size:
                q = _divide_rows(a[k, right], a[k, k], dp, p)
                a = _widen(a, int(_degrees(a[:, k]).max()) + q.shape[1])
                by_column = a.transpose(1, 0, 2)
                a[:, right] = _subtract_multiples(by_column[right], q, by_column[k], p).transpose(1, 0, 2)

            # remainders left in row k or column k are below the pivot degree
            column = _degrees(a[k + 1:, k]).tolist()
            row = _degrees(a[k, k + 1:]).tolist()
            candidates = [(d, 0, k + 1 + i) for i, d in enumerate(column) if d >= 0]
            candidates += [(d, 1, k + 1 + j) for j, d in enumerate(row) if d >= 0]
            if not candidates:
                break
            _, axis, index = min(candidates)
            if axis == 0:
                _swap(a, k, index, k)
            else:
                _swap(a, k, k, index)

        product = np.convolve(product, a[k, k, : dp + 1]) % p
        rank += 1
    return rank, product


def module_order(m: PolyMatrix) -> tuple[int, LaurentPoly]:
    """
    Rank of M over 𝔽_p[t±] and the order of the torsion part of
    𝔽_p[t±]^cols / rowspace(M), normalized.
    """
    _require_field(m.ring)
    if not m.rows or not m.cols:
        return 0, LaurentPoly.one(m.ring)
    rank, product = _diagonal_reduction(_rows_array(m), m.ring.p)
    return rank, _fp_to_poly(product, m.ring).normalize()


def _fp_product(polys: list, p: int) -> np.ndarray:
    return reduce(lambda x, y: _fp_mul(x, y, p), polys, np.ones(1, dtype=np.int64))


def homology_orders(F: PolyMatrix, A: PolyMatrix) -> tuple[LaurentPoly, LaurentPoly, PolyMatrix]:
    """
    For a row-vector complex C₂ --·F--> C₁ --·A--> C₀ over 𝔽_p[t±], return
    (order of ker(·A)/im(·F), order of coker(·A), X) where X presents the
    first module over the basis L[r:] of ker(·A). Orders are normalized;
    a non-torsion module has order 0.
    """
    _require_field(A.ring)
    p = A.ring.p
    m, n = A.rows, A.cols
    if F.cols != m:
        raise DimensionError(f"F has {F.cols} columns, A has {m} rows")

    grid = _matrix_to_fp(A)
    linv = _identity_fp(m)
    diagonal = _smith_fp(grid, m, n, p, linv)
    r = len(diagonal)

    delta0 = _fp_to_poly(_fp_product(diagonal, p), A.ring).normalize() if r == n \
        else LaurentPoly.zero(A.ring)

    f_grid = _matrix_to_fp(F)
    x_rows = []
    for f_row in f_grid:
        full = []
        for c in range(m):
            acc = _EMPTY
            for k, e in enumerate(f_row):
                if e.size and linv[k][c].size:
                    acc = _fp_add(acc, _fp_mul(e, linv[k][c], p), p)
            full.append(acc)
        if any(e.size for e in full[:r]):
            raise ChainComplexError("rows of F do not lie in the kernel of ·A")
        x_rows.append(full[r:])

    c = m - r
    x_matrix = PolyMatrix(len(x_rows), c, tuple(
        tuple(_fp_to_poly(e, A.ring) for e in row) for row in x_rows
    ), A.ring)
    if c == 0:
        delta1 = LaurentPoly.one(A.ring)
    elif len(x_rows) < c:
        delta1 = LaurentPoly.zero(A.ring)
    else:
        factors = _smith_fp([list(row) for row in x_rows], len(x_rows), c, p)
        delta1 = _fp_to_poly(_fp_product(factors, p), A.ring).normalize() \
            if len(factors) == c else LaurentPoly.zero(A.ring)
    logger.debug(f"homology over F_{p}: rank(A)={r}, H1 presented as {len(x_rows)}x{c}")
    return delta1, delta0, x_matrix


def echelon_dimension(x: PolyMatrix) -> int | None:
    """
    𝔽_p-dimension of 𝔽_p[t±]^c / rowspace(X) from a row-echelon form alone;
    None when X lacks full column rank (the quotient is then infinite).
    """
    _require_field(x.ring)
    p = x.ring.p
    a = _matrix_to_fp(x)
    rows, cols = x.rows, x.cols
    total = 0
    k = 0
    for c in range(cols):
        while True:
            live = [i for i in range(k, rows) if a[i][c].size]
            if not live:
                return None
            pivot_row = min(live, key=lambda i: a[i][c].size)
            a[k], a[pivot_row] = a[pivot_row], a[k]
            others = [i for i in range(k + 1, rows) if a[i][c].size]
            if not others:
                break
            for i in others:
                q, _ = _fp_divmod(a[i][c], a[k][c], p)
                for j in range(c, cols):
                    if a[k][j].size:
                        a[i][j] = _fp_sub(a[i][j], _fp_mul(q, a[k][j], p), p)
        pivot = a[k][c]
        valuation = int(np.flatnonzero(pivot)[0])
        total += pivot.size - 1 - valuation
        k += 1
    return total
