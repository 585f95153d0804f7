"""Exact arithmetic: multivariate polynomials over Q and rational linear algebra.

Coefficients are `fractions.Fraction` throughout (always in lowest terms,
positive denominator), so every operation in this module is exact.  A
polynomial is a sparse map from exponent tuples to coefficients, aligned
with a sorted tuple of symbol names; two polynomials representing the same
abstract polynomial compare equal structurally.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence, Union

Q = Fraction

Scalar = Union[Fraction, int]
PolyLike = Union["MultiPoly", Fraction, int]


class UnboundSymbol(KeyError):
    """A substitution left a symbol of the polynomial without a binding."""


class ShapeError(ValueError):
    """Matrix dimensions are inconsistent for the requested operation."""


def _as_fraction(value: Scalar) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    raise TypeError(f"expected an exact rational, got {type(value).__name__}")


class MultiPoly:
    """Sparse multivariate polynomial with Fraction coefficients.

    Canonical form: `vars` is sorted, every variable occurs in some term
    with positive exponent, and no zero coefficients are stored.  Instances
    are immutable; all operators return new polynomials.
    """

    __slots__ = ("vars", "terms")

    def __init__(self, vars: Sequence[str], terms: Mapping[tuple[int, ...], Scalar]):
        vars = tuple(vars)
        if len(set(vars)) != len(vars):
            raise ValueError(f"duplicate symbols in {vars}")
        cleaned: dict[tuple[int, ...], Fraction] = {}
        for exps, coeff in terms.items():
            exps = tuple(exps)
            if len(exps) != len(vars):
                raise ValueError("exponent tuple does not match variable list")
            c = _as_fraction(coeff)
            if c != 0:
                acc = cleaned.get(exps, Q(0)) + c
                if acc == 0:
                    cleaned.pop(exps, None)
                else:
                    cleaned[exps] = acc
        # drop variables unused by every term, then sort the remainder
        used = [i for i in range(len(vars)) if any(e[i] for e in cleaned)]
        order = sorted(used, key=lambda i: vars[i])
        object.__setattr__(self, "vars", tuple(vars[i] for i in order))
        object.__setattr__(
            self,
            "terms",
            {tuple(exps[i] for i in order): c for exps, c in cleaned.items()},
        )

    def __setattr__(self, name, value):  # pragma: no cover - immutability guard
        raise AttributeError("MultiPoly is immutable")

    def __copy__(self):
        return self

    def __deepcopy__(self, memo):
        return self

    # ------------------------------------------------------------------
    # constructors

    @classmethod
    def zero(cls) -> MultiPoly:
        return cls((), {})

    @classmethod
    def const(cls, value: Scalar) -> MultiPoly:
        return cls((), {(): value})

    @classmethod
    def var(cls, name: str) -> MultiPoly:
        return cls((name,), {(1,): 1})

    # ------------------------------------------------------------------
    # predicates and accessors

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def is_constant(self) -> bool:
        return not self.vars

    def constant_value(self) -> Fraction:
        if self.vars:
            raise ValueError(f"not a constant polynomial: {self}")
        return self.terms.get((), Q(0))

    def symbols(self) -> tuple[str, ...]:
        return self.vars

    def degree_in(self, name: str) -> int:
        """Degree in one variable; 0 if the variable does not occur."""
        if name not in self.vars:
            return 0
        i = self.vars.index(name)
        return max(e[i] for e in self.terms)

    def total_degree(self) -> int:
        """Max total degree; -1 for the zero polynomial."""
        if not self.terms:
            return -1
        return max(sum(e) for e in self.terms)

    def weighted_degree(self, weights: Mapping[str, int]) -> int | None:
        """Max of sum(weight * exponent) over terms; None for the zero polynomial.

        Symbols missing from `weights` contribute 0 (this is how the time
        variable and parameter symbols are kept weightless).
        """
        if not self.terms:
            return None
        w = [weights.get(v, 0) for v in self.vars]
        return max(sum(wi * ei for wi, ei in zip(w, e)) for e in self.terms)

    # ------------------------------------------------------------------
    # ring operations

    def _aligned(self, other: MultiPoly) -> tuple[tuple[str, ...], dict, dict]:
        if self.vars == other.vars:
            return self.vars, dict(self.terms), dict(other.terms)
        union = tuple(sorted(set(self.vars) | set(other.vars)))

        def remap(poly: MultiPoly) -> dict:
            idx = [union.index(v) for v in poly.vars]
            out = {}
            for exps, c in poly.terms.items():
                key = [0] * len(union)
                for i, e in zip(idx, exps):
                    key[i] = e
                out[tuple(key)] = c
            return out

        return union, remap(self), remap(other)

    def __add__(self, other: PolyLike) -> MultiPoly:
        other = as_poly(other)
        vars, a, b = self._aligned(other)
        for e, c in b.items():
            a[e] = a.get(e, Q(0)) + c
        return MultiPoly(vars, a)

    __radd__ = __add__

    def __sub__(self, other: PolyLike) -> MultiPoly:
        return self + (-as_poly(other))

    def __rsub__(self, other: PolyLike) -> MultiPoly:
        return as_poly(other) + (-self)

    def __neg__(self) -> MultiPoly:
        return MultiPoly(self.vars, {e: -c for e, c in self.terms.items()})

    def __mul__(self, other: PolyLike) -> MultiPoly:
        if isinstance(other, (int, Fraction)):
            c0 = _as_fraction(other)
            return MultiPoly(self.vars, {e: c * c0 for e, c in self.terms.items()})
        vars, a, b = self._aligned(other)
        out: dict[tuple[int, ...], Fraction] = {}
        for ea, ca in a.items():
            for eb, cb in b.items():
                key = tuple(x + y for x, y in zip(ea, eb))
                out[key] = out.get(key, Q(0)) + ca * cb
        return MultiPoly(vars, out)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> MultiPoly:
        if not isinstance(n, int) or n < 0:
            raise ValueError("polynomial powers must be non-negative integers")
        result = MultiPoly.const(1)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base if n > 1 else base
            n >>= 1
        return result

    def partial(self, name: str) -> MultiPoly:
        """Partial derivative with respect to one symbol."""
        if name not in self.vars:
            return MultiPoly.zero()
        i = self.vars.index(name)
        out = {}
        for exps, c in self.terms.items():
            if exps[i] == 0:
                continue
            key = list(exps)
            key[i] -= 1
            out[tuple(key)] = out.get(tuple(key), Q(0)) + c * exps[i]
        return MultiPoly(self.vars, out)

    # ------------------------------------------------------------------
    # substitution

    def replace(self, bindings: Mapping[str, PolyLike]) -> MultiPoly:
        """Substitute the given symbols; symbols without a binding are kept."""
        if not any(v in bindings for v in self.vars):
            return self
        polys = {v: as_poly(bindings[v]) for v in self.vars if v in bindings}
        powers: dict[tuple[str, int], MultiPoly] = {}

        def power(v: str, e: int) -> MultiPoly:
            key = (v, e)
            if key not in powers:
                powers[key] = polys[v] ** e
            return powers[key]

        result = MultiPoly.zero()
        for exps, c in self.terms.items():
            part = MultiPoly.const(c)
            residual_vars = []
            residual_exps = []
            for v, e in zip(self.vars, exps):
                if e == 0:
                    continue
                if v in polys:
                    part = part * power(v, e)
                else:
                    residual_vars.append(v)
                    residual_exps.append(e)
            if residual_vars:
                part = part * MultiPoly(tuple(residual_vars), {tuple(residual_exps): 1})
            result = result + part
        return result

    def substitute(self, bindings: Mapping[str, PolyLike]) -> MultiPoly:
        """Substitute every symbol of the polynomial.

        Raises UnboundSymbol if any symbol that occurs has no binding; use
        `replace` for partial substitution.
        """
        missing = [v for v in self.vars if v not in bindings]
        if missing:
            raise UnboundSymbol(missing[0])
        return self.replace(bindings)

    def evaluate(self, bindings: Mapping[str, Scalar]) -> Fraction:
        """Evaluate at rational values; every symbol must be bound."""
        return self.substitute(
            {v: MultiPoly.const(bindings[v]) for v in self.vars if v in bindings}
        ).constant_value()

    # ------------------------------------------------------------------
    # comparisons and printing

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = as_poly(other)
        if not isinstance(other, MultiPoly):
            return NotImplemented
        return self.vars == other.vars and self.terms == other.terms

    def __hash__(self) -> int:
        return hash((self.vars, tuple(sorted(self.terms.items()))))

    def __bool__(self) -> bool:
        return bool(self.terms)

    def sorted_terms(self) -> list[tuple[tuple[int, ...], Fraction]]:
        """Terms in canonical print order: total degree, then exponents, descending."""
        return sorted(self.terms.items(), key=lambda t: (-sum(t[0]), tuple(-x for x in t[0])))

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for exps, c in self.sorted_terms():
            factors = []
            for v, e in zip(self.vars, exps):
                if e == 1:
                    factors.append(v)
                elif e > 1:
                    factors.append(f"{v}^{e}")
            if not factors:
                body = str(abs(c))
            elif abs(c) == 1:
                body = "*".join(factors)
            else:
                body = "*".join([str(abs(c))] + factors)
            sign = "-" if c < 0 else "+"
            parts.append((sign, body))
        first_sign, first_body = parts[0]
        text = ("-" if first_sign == "-" else "") + first_body
        for sign, body in parts[1:]:
            text += f" {sign} {body}"
        return text

    def __repr__(self) -> str:
        return f"MultiPoly({self})"


def as_poly(value: PolyLike) -> MultiPoly:
    if isinstance(value, MultiPoly):
        return value
    return MultiPoly.const(value)


def poly_sum(items: Iterable[PolyLike]) -> MultiPoly:
    total = MultiPoly.zero()
    for item in items:
        total = total + as_poly(item)
    return total


# ----------------------------------------------------------------------
# rational matrices


class RatMatrix:
    """Immutable dense matrix of Fractions."""

    __slots__ = ("rows", "cols", "data")

    def __init__(self, data: Sequence[Sequence[Scalar]]):
        rows = tuple(tuple(_as_fraction(x) for x in row) for row in data)
        if rows and any(len(r) != len(rows[0]) for r in rows):
            raise ShapeError("ragged rows")
        object.__setattr__(self, "data", rows)
        object.__setattr__(self, "rows", len(rows))
        object.__setattr__(self, "cols", len(rows[0]) if rows else 0)

    def __setattr__(self, name, value):  # pragma: no cover - immutability guard
        raise AttributeError("RatMatrix is immutable")

    def __copy__(self):
        return self

    def __deepcopy__(self, memo):
        return self

    @classmethod
    def identity(cls, n: int) -> RatMatrix:
        return cls([[1 if i == j else 0 for j in range(n)] for i in range(n)])

    @classmethod
    def zeros(cls, rows: int, cols: int) -> RatMatrix:
        return cls([[0] * cols for _ in range(rows)])

    @classmethod
    def from_columns(cls, columns: Sequence[Sequence[Scalar]]) -> RatMatrix:
        if not columns:
            return cls([])
        n = len(columns[0])
        return cls([[columns[j][i] for j in range(len(columns))] for i in range(n)])

    def entry(self, i: int, j: int) -> Fraction:
        return self.data[i][j]

    def row(self, i: int) -> tuple[Fraction, ...]:
        return self.data[i]

    def column(self, j: int) -> tuple[Fraction, ...]:
        return tuple(self.data[i][j] for i in range(self.rows))

    def is_square(self) -> bool:
        return self.rows == self.cols

    def __eq__(self, other) -> bool:
        return isinstance(other, RatMatrix) and self.data == other.data

    def __hash__(self) -> int:
        return hash(self.data)

    def __add__(self, other: RatMatrix) -> RatMatrix:
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise ShapeError("matrix addition shape mismatch")
        return RatMatrix(
            [
                [self.data[i][j] + other.data[i][j] for j in range(self.cols)]
                for i in range(self.rows)
            ]
        )

    def __sub__(self, other: RatMatrix) -> RatMatrix:
        return self + other.scale(-1)

    def scale(self, factor: Scalar) -> RatMatrix:
        f = _as_fraction(factor)
        return RatMatrix([[x * f for x in row] for row in self.data])

    def __mul__(self, other: RatMatrix) -> RatMatrix:
        if self.cols != other.rows:
            raise ShapeError("matrix product shape mismatch")
        return RatMatrix(
            [
                [
                    sum((self.data[i][k] * other.data[k][j] for k in range(self.cols)), Q(0))
                    for j in range(other.cols)
                ]
                for i in range(self.rows)
            ]
        )

    def matvec(self, vec: Sequence[Scalar]) -> list[Fraction]:
        if len(vec) != self.cols:
            raise ShapeError("matvec shape mismatch")
        v = [_as_fraction(x) for x in vec]
        return [sum((row[k] * v[k] for k in range(self.cols)), Q(0)) for row in self.data]

    def transpose(self) -> RatMatrix:
        return RatMatrix([[self.data[i][j] for i in range(self.rows)] for j in range(self.cols)])

    def trace(self) -> Fraction:
        if not self.is_square():
            raise ShapeError("trace of a non-square matrix")
        return sum((self.data[i][i] for i in range(self.rows)), Q(0))

    def det(self) -> Fraction:
        if not self.is_square():
            raise ShapeError("determinant of a non-square matrix")
        m = [list(row) for row in self.data]
        n = self.rows
        det = Q(1)
        for col in range(n):
            pivot = next((r for r in range(col, n) if m[r][col] != 0), None)
            if pivot is None:
                return Q(0)
            if pivot != col:
                m[col], m[pivot] = m[pivot], m[col]
                det = -det
            det *= m[col][col]
            inv = 1 / m[col][col]
            for r in range(col + 1, n):
                if m[r][col] == 0:
                    continue
                f = m[r][col] * inv
                for c in range(col, n):
                    m[r][c] -= f * m[col][c]
        return det

    def inverse(self) -> RatMatrix:
        if not self.is_square():
            raise ShapeError("inverse of a non-square matrix")
        n = self.rows
        m = [list(row) + [Q(1) if i == j else Q(0) for j in range(n)] for i, row in enumerate(self.data)]
        for col in range(n):
            pivot = next((r for r in range(col, n) if m[r][col] != 0), None)
            if pivot is None:
                raise ShapeError("matrix is singular")
            m[col], m[pivot] = m[pivot], m[col]
            inv = 1 / m[col][col]
            m[col] = [x * inv for x in m[col]]
            for r in range(n):
                if r != col and m[r][col] != 0:
                    f = m[r][col]
                    m[r] = [x - f * y for x, y in zip(m[r], m[col])]
        return RatMatrix([row[n:] for row in m])

    def __str__(self) -> str:
        return "[" + "; ".join(" ".join(str(x) for x in row) for row in self.data) + "]"

    def __repr__(self) -> str:
        return f"RatMatrix({self})"


def rref(matrix: RatMatrix) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form; returns (rows, pivot column indices).

    Pivots take the first row with a nonzero entry, scanning columns left to
    right, which fixes the free-column convention used everywhere downstream.
    """
    m = [list(row) for row in matrix.data]
    pivots: list[int] = []
    r = 0
    for col in range(matrix.cols):
        pivot = next((i for i in range(r, matrix.rows) if m[i][col] != 0), None)
        if pivot is None:
            continue
        m[r], m[pivot] = m[pivot], m[r]
        inv = 1 / m[r][col]
        m[r] = [x * inv for x in m[r]]
        for i in range(matrix.rows):
            if i != r and m[i][col] != 0:
                f = m[i][col]
                m[i] = [x - f * y for x, y in zip(m[i], m[r])]
        pivots.append(col)
        r += 1
        if r == matrix.rows:
            break
    return m, pivots


def nullspace(matrix: RatMatrix) -> list[list[Fraction]]:
    """Exact basis of the kernel; each vector has 1 in its free coordinate."""
    m, pivots = rref(matrix)
    basis = []
    for free in range(matrix.cols):
        if free in pivots:
            continue
        vec = [Q(0)] * matrix.cols
        vec[free] = Q(1)
        for r, col in enumerate(pivots):
            vec[col] = -m[r][free]
        basis.append(vec)
    return basis


def char_poly(matrix: RatMatrix, var: str = "lambda") -> MultiPoly:
    """Exact monic characteristic polynomial det(x*I - M).

    Faddeev-LeVerrier: division-safe (only divides by integers 1..n).
    """
    if not matrix.is_square():
        raise ShapeError("characteristic polynomial of a non-square matrix")
    n = matrix.rows
    coeffs = [Q(0)] * (n + 1)
    coeffs[n] = Q(1)
    aux = RatMatrix.identity(n)
    for k in range(1, n + 1):
        aux = matrix * aux
        c = -aux.trace() / k
        coeffs[n - k] = c
        if k < n:
            aux = aux + RatMatrix.identity(n).scale(c)
    x = MultiPoly.var(var)
    return poly_sum(x**i * coeffs[i] for i in range(n + 1) if coeffs[i] != 0)


def char_poly_coeffs(matrix: RatMatrix) -> list[Fraction]:
    """Coefficients c_0..c_n of the characteristic polynomial, ascending."""
    p = char_poly(matrix, var="_x")
    n = matrix.rows
    out = [Q(0)] * (n + 1)
    for exps, c in p.terms.items():
        out[exps[0] if exps else 0] = c
    return out


def _divisors(n: int) -> list[int]:
    n = abs(n)
    small, large = [], []
    d = 1
    while d * d <= n:
        if n % d == 0:
            small.append(d)
            if d != n // d:
                large.append(n // d)
        d += 1
    return small + large[::-1]


def _int_lcm(values: Iterable[int]) -> int:
    from math import gcd

    out = 1
    for v in values:
        out = out * v // gcd(out, v)
    return out


@dataclass(frozen=True)
class EigenPair:
    value: int
    algebraic: int
    geometric: int
    basis: tuple[tuple[Fraction, ...], ...]


@dataclass(frozen=True)
class IntegerSpectrum:
    pairs: tuple[EigenPair, ...]

    def values(self) -> tuple[int, ...]:
        return tuple(p.value for p in self.pairs)


@dataclass(frozen=True)
class NonIntegerSpectrum:
    """The characteristic polynomial does not split over Z.

    Carries the unfactored remainder plus whatever integer eigenvalues were
    found before the search stalled (their multiplicities and the remainder
    degree account for the full dimension)."""

    remainder: MultiPoly
    partial: tuple[EigenPair, ...] = ()


def integer_eigen_data(matrix: RatMatrix) -> IntegerSpectrum | NonIntegerSpectrum:
    """Integer eigenvalues with multiplicities and exact eigenbases.

    The characteristic polynomial is factored over Z by rational-root
    search on its integer-cleared form.  If it does not split over Z, the
    unfactored remainder is reported instead of an eigenvalue list.
    """
    coeffs = char_poly_coeffs(matrix)
    n = matrix.rows
    roots: dict[int, int] = {}
    poly = coeffs[:]
    degree = n

    def eval_at(p: list[Fraction], d: int, x: int) -> Fraction:
        acc = Q(0)
        for i in range(d, -1, -1):
            acc = acc * x + p[i]
        return acc

    def deflate(p: list[Fraction], d: int, root: int) -> list[Fraction]:
        # synthetic division by (x - root); exact by construction
        out = [Q(0)] * d
        out[d - 1] = p[d]
        for i in range(d - 2, -1, -1):
            out[i] = p[i + 1] + root * out[i + 1]
        return out + [Q(0)]

    while degree > 0:
        if poly[0] == 0:
            roots[0] = roots.get(0, 0) + 1
            poly = deflate(poly, degree, 0)
            degree -= 1
            continue
        denom = _int_lcm(poly[i].denominator for i in range(degree + 1))
        const = int(poly[0] * denom)
        found = None
        for d in _divisors(const):
            for cand in (d, -d):
                if eval_at(poly, degree, cand) == 0:
                    found = cand
                    break
            if found is not None:
                break
        if found is None:
            break
        roots[found] = roots.get(found, 0) + 1
        poly = deflate(poly, degree, found)
        degree -= 1

    pairs = []
    for value in sorted(roots):
        shifted = matrix - RatMatrix.identity(n).scale(value)
        basis = nullspace(shifted)
        pairs.append(
            EigenPair(
                value=value,
                algebraic=roots[value],
                geometric=len(basis),
                basis=tuple(tuple(v) for v in basis),
            )
        )
    if degree > 0:
        x = MultiPoly.var("lambda")
        remainder = poly_sum(x**i * poly[i] for i in range(degree + 1) if poly[i] != 0)
        return NonIntegerSpectrum(remainder, tuple(pairs))
    return IntegerSpectrum(tuple(pairs))


@dataclass(frozen=True)
class AffineSolution:
    """Particular solution (free coordinates set to 0) plus kernel basis."""

    particular: tuple[MultiPoly, ...]
    nullspace: tuple[tuple[Fraction, ...], ...]


@dataclass(frozen=True)
class Inconsistent:
    """The elimination forced `witness = 0` for a nonzero polynomial."""

    witness: MultiPoly


def solve_affine(
    matrix: RatMatrix, rhs: Sequence[PolyLike]
) -> AffineSolution | Inconsistent:
    """Solve M x = b exactly, where b has polynomial entries.

    M is constant rational, so Gaussian elimination applies entrywise to the
    polynomial right side.  Free coordinates are set to zero; the kernel of
    M is returned separately so callers can attach parameters themselves.
    """
    if not matrix.is_square():
        raise ShapeError("solve_affine expects a square matrix")
    if len(rhs) != matrix.rows:
        raise ShapeError("right side length mismatch")
    n = matrix.rows
    m = [list(row) for row in matrix.data]
    b = [as_poly(x) for x in rhs]
    pivots: list[int] = []
    r = 0
    for col in range(n):
        pivot = next((i for i in range(r, n) if m[i][col] != 0), None)
        if pivot is None:
            continue
        m[r], m[pivot] = m[pivot], m[r]
        b[r], b[pivot] = b[pivot], b[r]
        inv = 1 / m[r][col]
        m[r] = [x * inv for x in m[r]]
        b[r] = b[r] * inv
        for i in range(n):
            if i != r and m[i][col] != 0:
                f = m[i][col]
                m[i] = [x - f * y for x, y in zip(m[i], m[r])]
                b[i] = b[i] - b[r] * f
        pivots.append(col)
        r += 1
        if r == n:
            break
    for i in range(r, n):
        if not b[i].is_zero:
            return Inconsistent(witness=b[i])
    particular = [MultiPoly.zero()] * n
    for row, col in enumerate(pivots):
        particular[col] = b[row]
    kernel = nullspace(matrix)
    return AffineSolution(tuple(particular), tuple(tuple(v) for v in kernel))


def poly_det(rows: Sequence[Sequence[MultiPoly]]) -> MultiPoly:
    """Determinant of a small matrix with polynomial entries (cofactor expansion)."""
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise ShapeError("poly_det expects a square matrix")
    if n == 0:
        return MultiPoly.const(1)
    if n == 1:
        return rows[0][0]
    total = MultiPoly.zero()
    for j in range(n):
        entry = rows[0][j]
        if entry.is_zero:
            continue
        minor = [[rows[i][k] for k in range(n) if k != j] for i in range(1, n)]
        term = entry * poly_det(minor)
        total = total + (term if j % 2 == 0 else -term)
    return total
