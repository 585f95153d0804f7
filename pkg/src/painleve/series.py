"""Truncated Laurent series in one distinguished variable.

Coefficients are MultiPoly values (parameter symbols, possibly the time
symbol), orders may be negative.  A series with truncation T asserts that
the coefficient of every order o < T equals `coeffs.get(o, 0)`; orders at
or beyond T are unknown.  All operations propagate the truncation so that
only genuinely known coefficients are ever produced.

EXACT is a sentinel truncation for objects that are known completely
(finite Laurent polynomials); arithmetic keeps it out of the way.
"""

from __future__ import annotations

from typing import Callable, Mapping

from .algebra import MultiPoly, PolyLike, Q, as_poly

EXACT = 1 << 30


class VariableMismatch(ValueError):
    """Operands are series in different variables."""


class NotReversible(ValueError):
    """Leading coefficient is zero or not an invertible rational constant."""


class TruncationUnderflow(ValueError):
    """The inputs are too shallow to determine any coefficient of the result."""


class TruncatedSeries:
    __slots__ = ("var", "trunc", "coeffs")

    def __init__(self, var: str, coeffs: Mapping[int, PolyLike], trunc: int):
        object.__setattr__(self, "var", var)
        object.__setattr__(self, "trunc", trunc)
        cleaned = {}
        for order, poly in coeffs.items():
            if order >= trunc:
                continue
            p = as_poly(poly)
            if not p.is_zero:
                cleaned[order] = p
        object.__setattr__(self, "coeffs", cleaned)

    def __setattr__(self, name, value):  # pragma: no cover - immutability guard
        raise AttributeError("TruncatedSeries is immutable")

    def __copy__(self):
        return self

    def __deepcopy__(self, memo):
        return self

    # ------------------------------------------------------------------

    @classmethod
    def zero(cls, var: str, trunc: int = EXACT) -> TruncatedSeries:
        return cls(var, {}, trunc)

    @classmethod
    def constant(cls, var: str, value: PolyLike, trunc: int = EXACT) -> TruncatedSeries:
        return cls(var, {0: as_poly(value)}, trunc)

    @classmethod
    def monomial(cls, var: str, order: int, value: PolyLike = 1, trunc: int = EXACT) -> TruncatedSeries:
        return cls(var, {order: as_poly(value)}, trunc)

    @property
    def min_exp(self) -> int | None:
        return min(self.coeffs) if self.coeffs else None

    @property
    def max_exp(self) -> int | None:
        return max(self.coeffs) if self.coeffs else None

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    def _eff_min(self) -> int:
        # earliest order at which the series could be nonzero
        return min(self.coeffs) if self.coeffs else self.trunc

    def coeff(self, order: int) -> MultiPoly:
        if order >= self.trunc:
            raise ValueError(f"order {order} is beyond truncation {self.trunc}")
        return self.coeffs.get(order, MultiPoly.zero())

    def orders(self) -> list[int]:
        return sorted(self.coeffs)

    # ------------------------------------------------------------------
    # arithmetic

    def _check_var(self, other: TruncatedSeries) -> None:
        if self.var != other.var:
            raise VariableMismatch(f"{self.var} vs {other.var}")

    def __add__(self, other: TruncatedSeries) -> TruncatedSeries:
        self._check_var(other)
        trunc = min(self.trunc, other.trunc)
        out = dict(self.coeffs)
        for o, p in other.coeffs.items():
            out[o] = out.get(o, MultiPoly.zero()) + p
        return TruncatedSeries(self.var, out, trunc)

    def __sub__(self, other: TruncatedSeries) -> TruncatedSeries:
        return self + (-other)

    def __neg__(self) -> TruncatedSeries:
        return TruncatedSeries(self.var, {o: -p for o, p in self.coeffs.items()}, self.trunc)

    def scale(self, factor: PolyLike) -> TruncatedSeries:
        f = as_poly(factor)
        return TruncatedSeries(self.var, {o: p * f for o, p in self.coeffs.items()}, self.trunc)

    def __mul__(self, other: TruncatedSeries) -> TruncatedSeries:
        self._check_var(other)
        trunc = min(
            self.trunc + other._eff_min(),
            other.trunc + self._eff_min(),
        )
        out: dict[int, MultiPoly] = {}
        for oa, pa in self.coeffs.items():
            for ob, pb in other.coeffs.items():
                o = oa + ob
                if o >= trunc:
                    continue
                prod = pa * pb
                out[o] = out.get(o, MultiPoly.zero()) + prod
        return TruncatedSeries(self.var, out, trunc)

    def shift(self, by: int) -> TruncatedSeries:
        return TruncatedSeries(
            self.var, {o + by: p for o, p in self.coeffs.items()}, self.trunc + by
        )

    def truncate(self, trunc: int) -> TruncatedSeries:
        return TruncatedSeries(self.var, self.coeffs, min(self.trunc, trunc))

    def slice_from(self, min_order: int) -> TruncatedSeries:
        """Tail of the series: orders >= min_order only."""
        return TruncatedSeries(
            self.var, {o: p for o, p in self.coeffs.items() if o >= min_order}, self.trunc
        )

    def inverse(self) -> TruncatedSeries:
        """Multiplicative inverse; requires an invertible rational leading coefficient."""
        m = self.min_exp
        if m is None:
            raise NotReversible("cannot invert the zero series")
        lead = self.coeffs[m]
        if not lead.is_constant or lead.constant_value() == 0:
            raise NotReversible(f"leading coefficient {lead} is not an invertible constant")
        c = lead.constant_value()
        # s = c x^m (1 + w); 1/s = x^{-m} c^{-1} sum (-w)^j
        unit = self.shift(-m).scale(1 / c)
        w = unit - TruncatedSeries.constant(self.var, 1, trunc=unit.trunc)
        if not w.is_zero and unit.trunc > 1 << 20:
            raise ValueError(
                "inverse of an untruncated non-monomial series is an infinite "
                "object; truncate the operand first"
            )
        total = TruncatedSeries.constant(self.var, 1, trunc=unit.trunc)
        power = TruncatedSeries.constant(self.var, 1, trunc=unit.trunc)
        wmin = w._eff_min() if not w.is_zero else None
        j = 0
        while not w.is_zero and wmin is not None and (j + 1) * wmin < unit.trunc:
            power = power * (-w)
            total = total + power
            j += 1
        return total.shift(-m).scale(1 / c)

    def __pow__(self, n: int) -> TruncatedSeries:
        if n < 0:
            return self.inverse() ** (-n)
        if n == 0:
            return TruncatedSeries.constant(self.var, 1, trunc=EXACT)
        result = self
        for _ in range(n - 1):
            result = result * self
        return result

    def map_coeffs(self, fn: Callable[[MultiPoly], MultiPoly]) -> TruncatedSeries:
        return TruncatedSeries(self.var, {o: fn(p) for o, p in self.coeffs.items()}, self.trunc)

    def rename_var(self, var: str) -> TruncatedSeries:
        return TruncatedSeries(var, self.coeffs, self.trunc)

    def var_derivative(self) -> TruncatedSeries:
        """d/dx of the series in its own variable."""
        return TruncatedSeries(
            self.var,
            {o - 1: p * o for o, p in self.coeffs.items() if o != 0},
            self.trunc - 1,
        )

    def agrees_with(self, other: TruncatedSeries, upto: int | None = None) -> bool:
        """Equality of coefficients on the common valid range (orders < bound)."""
        self._check_var(other)
        bound = min(self.trunc, other.trunc)
        if upto is not None:
            bound = min(bound, upto)
        orders = {o for o in self.coeffs if o < bound} | {o for o in other.coeffs if o < bound}
        return all(
            self.coeffs.get(o, MultiPoly.zero()) == other.coeffs.get(o, MultiPoly.zero())
            for o in orders
        )

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, TruncatedSeries)
            and self.var == other.var
            and self.trunc == other.trunc
            and self.coeffs == other.coeffs
        )

    def __hash__(self) -> int:
        return hash((self.var, self.trunc, tuple(sorted((o, str(p)) for o, p in self.coeffs.items()))))

    def __str__(self) -> str:
        if not self.coeffs:
            return "0"
        chunks = []
        for o in self.orders():
            p = self.coeffs[o]
            if o == 0:
                chunks.append(str(p) if p.is_constant else f"({p})")
                continue
            power = self.var if o == 1 else f"{self.var}^{o}"
            if p.is_constant:
                c = p.constant_value()
                if c == 1:
                    chunks.append(power)
                elif c == -1:
                    chunks.append(f"-{power}")
                else:
                    chunks.append(f"{c}*{power}")
            else:
                chunks.append(f"({p})*{power}")
        out = chunks[0]
        for text in chunks[1:]:
            out += f" - {text[1:]}" if text.startswith("-") else f" + {text}"
        return out

    def __repr__(self) -> str:
        return f"TruncatedSeries({self}, trunc={self.trunc})"


def substitute_poly(
    f: MultiPoly,
    bindings: Mapping[str, TruncatedSeries],
    order: int = EXACT,
) -> TruncatedSeries:
    """Expand a polynomial with some symbols bound to series.

    Unbound symbols stay inside the coefficient polynomials (this is how the
    time symbol and not-yet-absorbed parameters ride along).  `order` caps
    the truncation of the result; bindings impose their own caps through the
    ordinary truncation bookkeeping.
    """
    if not bindings:
        raise ValueError("substitute_poly needs at least one binding")
    var = next(iter(bindings.values())).var
    for s in bindings.values():
        if s.var != var:
            raise VariableMismatch("bindings use different series variables")
    if f.is_zero:
        return TruncatedSeries.zero(var, trunc=order)
    bound_names = [v for v in f.symbols() if v in bindings]
    power_cache: dict[tuple[str, int], TruncatedSeries] = {}

    def power(name: str, e: int) -> TruncatedSeries:
        key = (name, e)
        if key not in power_cache:
            power_cache[key] = bindings[name] ** e
        return power_cache[key]

    result = TruncatedSeries.zero(var, trunc=EXACT)
    min_possible = None
    for exps, c in f.terms.items():
        residual_vars = []
        residual_exps = []
        acc = TruncatedSeries.constant(var, c, trunc=EXACT)
        term_min = 0
        dead_term = False  # a zero-series factor makes the term vanish
        for name, e in zip(f.symbols(), exps):
            if e == 0:
                continue
            if name in bindings:
                acc = acc * power(name, e)
                if bindings[name].is_zero:
                    dead_term = True
                else:
                    term_min += e * bindings[name]._eff_min()
            else:
                residual_vars.append(name)
                residual_exps.append(e)
        if residual_vars:
            acc = acc.scale(MultiPoly(tuple(residual_vars), {tuple(residual_exps): 1}))
        result = result + acc
        if not dead_term:
            min_possible = term_min if min_possible is None else min(min_possible, term_min)
    # the order cap never triggers underflow: claiming zeros below every
    # possible contribution is valid knowledge.  Only the bindings' own
    # truncations can starve the result (a defensive check: honest truncation
    # propagation always leaves at least the lowest product order claimable).
    if min_possible is not None and result.trunc <= min_possible and bound_names:
        raise TruncationUnderflow(
            f"truncation {result.trunc} cannot reach the lowest possible order {min_possible}"
        )
    return result.truncate(order)


def compose(outer: TruncatedSeries, inner: TruncatedSeries) -> TruncatedSeries:
    """outer(inner(x)), exact to the tracked truncation.

    The inner series must vanish at the origin (min_exp >= 1).  Negative
    orders of the outer series are handled through inversion of the inner
    series, which requires its leading coefficient to be an invertible
    rational; NotReversible otherwise.
    """
    if outer.var != inner.var:
        raise VariableMismatch(f"{outer.var} vs {inner.var}")
    if inner.is_zero or inner.min_exp < 1:
        raise ValueError("inner series must have min_exp >= 1")
    var = outer.var
    if outer.is_zero:
        return TruncatedSeries.zero(var, trunc=outer.trunc * inner.min_exp)
    lo = outer.min_exp
    hi = outer.trunc  # exclusive
    if hi >= EXACT:
        hi = outer.max_exp + 1  # a finite Laurent polynomial: sum every term
    if lo < 0:
        # the result cannot be known beyond hi * min_exp(inner); cap the inner
        # so negative powers of an exactly-known inner stay finite objects
        result_cap = hi * inner.min_exp
        inner = inner.truncate(min(inner.trunc, result_cap - lo * inner.min_exp + 2))
    power = inner**lo
    result = TruncatedSeries.zero(var, trunc=EXACT)
    for j in range(lo, hi):
        c = outer.coeffs.get(j)
        if c is not None:
            result = result + power.scale(c)
        if j + 1 < hi:
            power = power * inner
    if outer.trunc >= EXACT:
        return result
    return result.truncate(min(result.trunc, outer.trunc * inner.min_exp))


def revert_series(s: TruncatedSeries) -> TruncatedSeries:
    """Compositional inverse w with s(w(x)) = x modulo x^trunc.

    Solved order by order: each new coefficient is fixed by dividing the
    defect by the (rational, invertible) leading coefficient.
    """
    if s.is_zero or s.min_exp != 1:
        raise NotReversible("reversion needs min_exp exactly 1")
    lead = s.coeffs[1]
    if not lead.is_constant or lead.constant_value() == 0:
        raise NotReversible(f"leading coefficient {lead} is not an invertible constant")
    c1 = lead.constant_value()
    T = s.trunc
    w = TruncatedSeries.monomial(s.var, 1, Q(1) / c1, trunc=T)
    identity = TruncatedSeries.monomial(s.var, 1, 1, trunc=T)
    for m in range(2, T):
        defect = compose(s, w) - identity
        if defect.trunc <= m:
            break
        d = defect.coeffs.get(m)
        if d is None or d.is_zero:
            continue
        w = w + TruncatedSeries.monomial(s.var, m, -d * (Q(1) / c1), trunc=T)
    return w


def rational_power_of_unit(s: TruncatedSeries, num: int, den: int) -> TruncatedSeries:
    """(1 + w)^(num/den) for a series s = 1 + w with w of positive order.

    Binomial expansion with exact rational binomial coefficients; used for
    the k-th-root extraction in the indicial normalization.
    """
    one = TruncatedSeries.constant(s.var, 1, trunc=s.trunc)
    w = s - one
    if not w.is_zero and w.min_exp <= 0:
        raise NotReversible("rational power needs a unit series 1 + O(x)")
    alpha = Q(num, den)
    result = one
    power = one
    coeff = Q(1)
    j = 0
    wmin = w._eff_min() if not w.is_zero else None
    while not w.is_zero and wmin is not None and (j + 1) * wmin < s.trunc:
        coeff = coeff * (alpha - j) / (j + 1)
        power = power * w
        result = result + power.scale(coeff)
        j += 1
    return result


