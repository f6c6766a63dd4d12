"""Exact differential-polynomial algebra for the mKdV and Painlevé II hierarchies.

A differential polynomial is a finite sum of monomials ``c * prod_k (u^(k))^p_k``
with exact rational coefficients.  On top of that ring this module provides the
total x-derivative, its inverse on exact derivatives, the Lenard ladder applied
to ``f = u' - u^2``, the n-th mKdV flow, the n-th Painlevé II left-hand side and
the Lax-pair coefficients together with a zero-curvature check.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

Factors = tuple[tuple[int, int], ...]


class NotExactDerivative(ValueError):
    """Raised when a differential polynomial has no antiderivative in the ring."""


class JetTooShort(ValueError):
    """Raised when a jet does not supply every derivative a polynomial uses."""


def _weight(factors: Factors) -> int:
    return sum(p * (k + 1) for k, p in factors)


def _sort_key(factors: Factors):
    return (_weight(factors), factors)


def _normalize_factors(factors: Mapping[int, int] | Iterable[tuple[int, int]]) -> Factors:
    items = factors.items() if isinstance(factors, Mapping) else factors
    acc: dict[int, int] = {}
    for k, p in items:
        if k < 0 or p < 0:
            raise ValueError(f"bad factor (k={k}, p={p})")
        if p:
            acc[k] = acc.get(k, 0) + p
    return tuple(sorted(acc.items()))


@dataclass(frozen=True)
class DiffMonomial:
    coeff: Fraction
    factors: Factors

    @property
    def order(self) -> int:
        """Highest derivative order present, -1 for a constant."""
        return self.factors[-1][0] if self.factors else -1

    @property
    def degree(self) -> int:
        return sum(p for _, p in self.factors)

    def power_of(self, k: int) -> int:
        for kk, p in self.factors:
            if kk == k:
                return p
        return 0


class DiffPoly:
    """Immutable differential polynomial in one field, kept in canonical form.

    Terms are combined on construction and ordered by scaling weight
    ``sum p_k (k + 1)`` and then lexicographically in ``(k, p)``.
    """

    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping[Factors, Fraction] | Iterable[DiffMonomial] = ()):
        acc: dict[Factors, Fraction] = {}
        items = terms.items() if isinstance(terms, Mapping) else ((m.factors, m.coeff) for m in terms)
        for factors, c in items:
            factors = _normalize_factors(factors)
            acc[factors] = acc.get(factors, Fraction(0)) + Fraction(c)
        self._terms: dict[Factors, Fraction] = {
            f: acc[f] for f in sorted(acc, key=_sort_key) if acc[f] != 0
        }

    # construction helpers -------------------------------------------------

    @classmethod
    def const(cls, c) -> DiffPoly:
        return cls({(): Fraction(c)})

    @classmethod
    def jet(cls, k: int = 0, power: int = 1, coeff=1) -> DiffPoly:
        """The monomial ``coeff * (u^(k))^power``."""
        return cls({((k, power),): Fraction(coeff)})

    @classmethod
    def monomial(cls, coeff, factors: Mapping[int, int]) -> DiffPoly:
        return cls({_normalize_factors(factors): Fraction(coeff)})

    # inspection -----------------------------------------------------------

    @property
    def terms(self) -> tuple[DiffMonomial, ...]:
        return tuple(DiffMonomial(c, f) for f, c in self._terms.items())

    def items(self):
        return self._terms.items()

    def is_zero(self) -> bool:
        return not self._terms

    @property
    def order(self) -> int:
        return max((m.order for m in self.terms), default=-1)

    def coeff(self, factors: Mapping[int, int] | Factors) -> Fraction:
        return self._terms.get(_normalize_factors(factors), Fraction(0))

    def linear_part(self) -> DiffPoly:
        return DiffPoly({f: c for f, c in self._terms.items() if sum(p for _, p in f) == 1})

    # arithmetic -----------------------------------------------------------

    def __add__(self, other) -> DiffPoly:
        other = _coerce(other)
        merged = dict(self._terms)
        for f, c in other._terms.items():
            merged[f] = merged.get(f, Fraction(0)) + c
        return DiffPoly(merged)

    __radd__ = __add__

    def __neg__(self) -> DiffPoly:
        return DiffPoly({f: -c for f, c in self._terms.items()})

    def __sub__(self, other) -> DiffPoly:
        return self + (-_coerce(other))

    def __rsub__(self, other) -> DiffPoly:
        return _coerce(other) - self

    def __mul__(self, other) -> DiffPoly:
        other = _coerce(other)
        out: dict[Factors, Fraction] = {}
        for f1, c1 in self._terms.items():
            for f2, c2 in other._terms.items():
                f = _normalize_factors(f1 + f2)
                out[f] = out.get(f, Fraction(0)) + c1 * c2
        return DiffPoly(out)

    __rmul__ = __mul__

    def __pow__(self, e: int) -> DiffPoly:
        out = DiffPoly.const(1)
        for _ in range(e):
            out = out * self
        return out

    def __eq__(self, other) -> bool:
        try:
            other = _coerce(other)
        except TypeError:
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self) -> int:
        return hash(tuple(self._terms.items()))

    def __repr__(self) -> str:
        return f"DiffPoly({to_text(self)!r})"

    def __str__(self) -> str:
        return to_text(self)


def _coerce(x) -> DiffPoly:
    if isinstance(x, DiffPoly):
        return x
    if isinstance(x, (int, Fraction)):
        return DiffPoly.const(x)
    raise TypeError(f"cannot coerce {type(x).__name__} to DiffPoly")


U = DiffPoly.jet(0)


def D(k: int) -> DiffPoly:
    """Shorthand for the jet variable u^(k)."""
    return DiffPoly.jet(k)


# ---------------------------------------------------------------------------
# calculus


def diff(p: DiffPoly) -> DiffPoly:
    """Total x-derivative, applying the Leibniz rule over the jet variables."""
    out: dict[Factors, Fraction] = {}
    for factors, c in p.items():
        base = dict(factors)
        for k, pk in factors:
            new = dict(base)
            new[k] -= 1
            new[k + 1] = new.get(k + 1, 0) + 1
            f = _normalize_factors(new)
            out[f] = out.get(f, Fraction(0)) + c * pk
    return DiffPoly(out)


def partial(p: DiffPoly, k: int) -> DiffPoly:
    """Partial derivative with respect to the jet variable u^(k)."""
    out: dict[Factors, Fraction] = {}
    for factors, c in p.items():
        pk = dict(factors).get(k, 0)
        if pk:
            f = dict(factors)
            f[k] = pk - 1
            key = _normalize_factors(f)
            out[key] = out.get(key, Fraction(0)) + c * pk
    return DiffPoly(out)


def diff_n(p: DiffPoly, times: int) -> DiffPoly:
    for _ in range(times):
        p = diff(p)
    return p


def formal_integrate(p: DiffPoly) -> DiffPoly:
    """Antiderivative with zero constant term.

    Peels the highest-order monomial ``c * S * (u^(m-1))^q * u^(m)`` by parts
    into ``c/(q+1) * S * (u^(m-1))^(q+1)`` until nothing is left.  A residual
    of order-0 monomials, or a top-order factor with power above one, has no
    antiderivative in the ring.
    """
    result = DiffPoly()
    rest = p
    while not rest.is_zero():
        m = rest.order
        if m <= 0:
            raise NotExactDerivative(f"order-0 residual {to_text(rest)!s}")
        top = next(t for t in reversed(rest.terms) if t.order == m)
        if top.power_of(m) != 1:
            raise NotExactDerivative(f"top-order factor is nonlinear in {to_text(DiffPoly([top]))}")
        others = {k: pk for k, pk in top.factors if k != m}
        q = others.pop(m - 1, 0)
        others[m - 1] = q + 1
        piece = DiffPoly.monomial(top.coeff / (q + 1), others)
        result = result + piece
        rest = rest - diff(piece)
    return result


# ---------------------------------------------------------------------------
# hierarchies


def _f() -> DiffPoly:
    return D(1) - U * U


@lru_cache(maxsize=None)
def lenard_mkdv(j: int) -> DiffPoly:
    """``L_j[u' - u^2]`` from the Lenard ladder with ``L_0 = 1/2``."""
    if j < 0:
        raise ValueError("j must be non-negative")
    if j == 0:
        return DiffPoly.const(Fraction(1, 2))
    prev = lenard_mkdv(j - 1)
    f = _f()
    rhs = diff_n(prev, 3) + 4 * f * diff(prev) + 2 * diff(f) * prev
    return formal_integrate(rhs)


def _dx_plus_2u(p: DiffPoly) -> DiffPoly:
    return diff(p) + 2 * U * p


@lru_cache(maxsize=None)
def mkdv_rhs(n: int) -> DiffPoly:
    """Right-hand side of ``u_t = -d/dx (d/dx + 2u) L_n[u' - u^2]``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return -diff(_dx_plus_2u(lenard_mkdv(n)))


@lru_cache(maxsize=None)
def pii_lhs(n: int) -> DiffPoly:
    """``(d/dx + 2q) L_n[q' - q^2]``; the n-th Painlevé II equation sets it to ``x q``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return _dx_plus_2u(lenard_mkdv(n))


def reflect(p: DiffPoly) -> DiffPoly:
    """Rewrite ``p`` for ``w(x) = u(-x)``: each u^(k) picks up ``(-1)^k``."""
    return DiffPoly({f: c * (-1) ** (sum(k * pk for k, pk in f) % 2) for f, c in p.items()})


# ---------------------------------------------------------------------------
# Lax pair


@dataclass(frozen=True)
class LaxPair:
    """Coefficients of ``A, B, D`` as polynomials in ``i*lambda``."""

    n: int
    a_coeffs: tuple[DiffPoly, ...]
    b_coeffs: tuple[DiffPoly, ...]
    d_coeffs: tuple[DiffPoly, ...]


@lru_cache(maxsize=None)
def lax_matrices(n: int) -> LaxPair:
    if n < 1:
        raise ValueError("n must be >= 1")
    L = lenard_mkdv
    a = [DiffPoly() for _ in range(2 * n + 2)]
    b = [DiffPoly() for _ in range(2 * n + 1)]
    a[2 * n + 1] = DiffPoly.const(4**n)
    for k in range(n):
        inner = diff(_dx_plus_2u(L(n - k - 1)))
        half = Fraction(4 ** (k + 1), 2)
        a[2 * k + 1] = half * (L(n - k) - inner)
        b[2 * k + 1] = half * inner
    for k in range(n + 1):
        b[2 * k] = -(4**k) * _dx_plus_2u(L(n - k))
    d = [(-1) ** k * bk for k, bk in enumerate(b)]
    return LaxPair(n, tuple(a), tuple(b), tuple(d))


LambdaPoly = dict[int, DiffPoly]
Matrix2 = list[list[LambdaPoly]]


def _padd(x: LambdaPoly, y: LambdaPoly, sign: int = 1) -> LambdaPoly:
    out = dict(x)
    for k, v in y.items():
        out[k] = out.get(k, DiffPoly()) + (v if sign > 0 else -v)
    return {k: v for k, v in out.items() if not v.is_zero()}


def _pmul(x: LambdaPoly, y: LambdaPoly) -> LambdaPoly:
    out: LambdaPoly = {}
    for i, p in x.items():
        for j, q in y.items():
            out[i + j] = out.get(i + j, DiffPoly()) + p * q
    return {k: v for k, v in out.items() if not v.is_zero()}


def _mmul(X: Matrix2, Y: Matrix2) -> Matrix2:
    return [
        [_padd(_pmul(X[r][0], Y[0][c]), _pmul(X[r][1], Y[1][c])) for c in range(2)]
        for r in range(2)
    ]


def zero_curvature_residual(n: int, u_t: DiffPoly | None = None) -> Matrix2:
    """Entries of ``U_t - V_x + [U, V]`` as polynomials in ``mu = i*lambda``.

    ``U = [[-mu, u], [u, mu]]`` and ``V = [[A, B], [D, -A]]``.  The only time
    derivative is ``u_t`` in ``U_t``; it is replaced by ``u_t`` (default:
    ``mkdv_rhs(n)``).  Returns a 2x2 nested list of ``{power: DiffPoly}`` maps
    with zero entries omitted, so the flow is compatible iff every map is empty.
    """
    if u_t is None:
        u_t = mkdv_rhs(n)
    lp = lax_matrices(n)
    A = {j: c for j, c in enumerate(lp.a_coeffs) if not c.is_zero()}
    B = {j: c for j, c in enumerate(lp.b_coeffs) if not c.is_zero()}
    Dm = {j: c for j, c in enumerate(lp.d_coeffs) if not c.is_zero()}
    negA = {j: -c for j, c in A.items()}
    Um: Matrix2 = [[{1: DiffPoly.const(-1)}, {0: U}], [{0: U}, {1: DiffPoly.const(1)}]]
    Vm: Matrix2 = [[A, B], [Dm, negA]]
    Ut: Matrix2 = [[{}, {0: u_t}], [{0: u_t}, {}]]
    Vx: Matrix2 = [[{j: diff(c) for j, c in e.items()} for e in row] for row in Vm]
    UV = _mmul(Um, Vm)
    VU = _mmul(Vm, Um)
    return [
        [_padd(_padd(_padd(Ut[r][c], Vx[r][c], -1), UV[r][c]), VU[r][c], -1) for c in range(2)]
        for r in range(2)
    ]


def residual_is_zero(res: Matrix2) -> bool:
    return all(not entry for row in res for entry in row)


# ---------------------------------------------------------------------------
# numerics and text


def evaluate(p: DiffPoly, jet: Sequence):
    """Value of ``p`` at a jet ``(u, u', u'', ...)``.

    Jet entries may be floats or numpy arrays of a common shape.
    """
    need = p.order + 1
    if len(jet) < need:
        raise JetTooShort(f"polynomial needs {need} jet entries, got {len(jet)}")
    total = 0.0
    for factors, c in p.items():
        term = 1.0
        for k, pk in factors:
            term = term * jet[k] ** pk if pk > 1 else term * jet[k]
        total = total + float(c) * term
    return total


def compile_poly(p: DiffPoly):
    """Float-coefficient term list for repeated numeric evaluation."""
    return [(float(c), factors) for factors, c in p.items()]


def eval_compiled(terms, jet):
    total = 0.0
    for c, factors in terms:
        term = c
        for k, pk in factors:
            term = term * (jet[k] if pk == 1 else jet[k] ** pk)
        total = total + term
    return total


def _fmt_coeff(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def _fmt_factor(var: str, k: int, p: int) -> str:
    base = var if k == 0 else f"{var}^({k})"
    return base if p == 1 else f"{base}^{p}"


def to_text(p: DiffPoly, var: str = "u") -> str:
    """Canonical text: ``c*u^(k1)^p1*...`` joined by `` + `` / `` - ``."""
    if p.is_zero():
        return "0"
    parts = []
    for i, (factors, c) in enumerate(p.items()):
        sign = "-" if c < 0 else "+"
        mag = abs(c)
        body = [_fmt_factor(var, k, pk) for k, pk in factors]
        if mag != 1 or not body:
            body.insert(0, _fmt_coeff(mag))
        s = "*".join(body)
        if i == 0:
            parts.append(s if sign == "+" else f"-{s}")
        else:
            parts.append(f"{sign} {s}")
    return " ".join(parts)


def to_latex(p: DiffPoly, var: str = "u") -> str:
    if p.is_zero():
        return "0"
    parts = []
    for i, (factors, c) in enumerate(p.items()):
        mag = abs(c)
        if mag.denominator == 1:
            cs = "" if (mag == 1 and factors) else str(mag.numerator)
        else:
            cs = rf"\frac{{{mag.numerator}}}{{{mag.denominator}}}"
        fs = []
        for k, pk in factors:
            base = var if k == 0 else f"{var}^{{({k})}}"
            if pk == 1:
                fs.append(base)
            elif k == 0:
                fs.append(f"{var}^{{{pk}}}")
            else:
                fs.append(rf"\left({base}\right)^{{{pk}}}")
        body = cs + " ".join(fs)
        if i == 0:
            parts.append(body if c > 0 else f"-{body}")
        else:
            parts.append(("+ " if c > 0 else "- ") + body)
    return " ".join(parts)


def from_terms(terms: Iterable[tuple[object, Mapping[int, int]]]) -> DiffPoly:
    """Build a polynomial from ``(coeff, {k: power})`` pairs."""
    return sum((DiffPoly.monomial(c, f) for c, f in terms), DiffPoly())
