"""Exact arithmetic: Gaussian rationals, sparse Laurent polynomials, quotients.

Everything downstream (operators, polynomial families, skein coefficients) is
built over one coefficient field: rational functions in the five ring variables

    s, x, x0, x1, u

with Gaussian-rational coefficients (a + b*I, I**2 = -1).  Conventions:

* ``q`` is never a variable of its own: by convention ``q = s**4``, so every
  quarter-integer power of q is an honest integer power of s
  (``q**(1/2) = s**2``, ``q**(1/4) = s``).
* ``u`` is a formal stand-in for the n-th power of q in degree-indexed
  coefficient formulas (``q**(2n) = u**2``, ``q**(n+1) = u*q``); substituting
  ``u -> s**(4n)`` recovers the concrete-n value.

A :class:`LaurentPolynomial` is a dict from exponent 5-tuples (one integer per
variable, negative allowed) to nonzero :class:`Scalar` coefficients.  A
:class:`RationalExpr` is a quotient num/den; the denominator is held as a
multiset of small factor polynomials, each free of monomial content and with
leading coefficient 1 under the graded-lexicographic term order, so the
expanded denominator satisfies the same normal form.  No multivariate gcd is
ever computed: cancellation only divides out stored denominator factors when
they divide exactly, and equality of quotients is decided by
cross-multiplication.
"""

from __future__ import annotations

import heapq
import random
from fractions import Fraction
from typing import Iterable, Mapping, Union

VARIABLES: tuple[str, ...] = ("s", "x", "x0", "x1", "u")
_VAR_INDEX = {name: i for i, name in enumerate(VARIABLES)}
_NVARS = len(VARIABLES)
_ZERO_EXP = (0,) * _NVARS

# Guard against runaway exponent growth (e.g. int_pow misuse).
MAX_EXPONENT = 1 << 24


class SubstitutionError(ValueError):
    """A substitution made a denominator vanish identically."""


class ResampleNeeded(Exception):
    """Random evaluation hit a vanishing denominator; retry with a new point."""


class NotLaurentInX(ValueError):
    """The expression is not a Laurent polynomial in the requested variable."""


# ---------------------------------------------------------------------------
# Scalars: Gaussian rationals
# ---------------------------------------------------------------------------


class Scalar:
    """A Gaussian rational a + b*I with Fraction components in lowest terms."""

    __slots__ = ("re", "im")

    def __init__(self, re: int | Fraction = 0, im: int | Fraction = 0):
        self.re = re if isinstance(re, Fraction) else Fraction(re)
        self.im = im if isinstance(im, Fraction) else Fraction(im)

    def __add__(self, other: "Scalar") -> "Scalar":
        return Scalar(self.re + other.re, self.im + other.im)

    def __sub__(self, other: "Scalar") -> "Scalar":
        return Scalar(self.re - other.re, self.im - other.im)

    def __neg__(self) -> "Scalar":
        return Scalar(-self.re, -self.im)

    def __mul__(self, other: "Scalar") -> "Scalar":
        a, b, c, d = self.re, self.im, other.re, other.im
        if not b:
            if not d:
                return Scalar(a * c)
            return Scalar(a * c, a * d)
        if not d:
            return Scalar(a * c, b * c)
        return Scalar(a * c - b * d, a * d + b * c)

    def inverse(self) -> "Scalar":
        norm = self.re * self.re + self.im * self.im
        if norm == 0:
            raise ZeroDivisionError("inverse of zero scalar")
        return Scalar(self.re / norm, -self.im / norm)

    def __truediv__(self, other: "Scalar") -> "Scalar":
        return self * other.inverse()

    def __pow__(self, k: int) -> "Scalar":
        if k < 0:
            return self.inverse() ** (-k)
        out = SC_ONE
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def is_zero(self) -> bool:
        return not self.re and not self.im

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Scalar):
            return NotImplemented
        return self.re == other.re and self.im == other.im

    def __hash__(self) -> int:
        return hash((self.re, self.im))

    def __repr__(self) -> str:
        return f"Scalar({self.re!r}, {self.im!r})"

    def text(self) -> str:
        """Canonical text: 'a', 'b*I', or 'a+b*I' (I coefficient signed)."""
        if not self.im:
            return str(self.re)
        if self.im == 1:
            im = "I"
        elif self.im == -1:
            im = "-I"
        else:
            im = f"{self.im}*I"
        if not self.re:
            return im
        sign = "+" if self.im > 0 else "-"
        mag = im.lstrip("-")
        return f"{self.re}{sign}{mag}"


SC_ZERO = Scalar(0)
SC_ONE = Scalar(1)
SC_I = Scalar(0, 1)


# ---------------------------------------------------------------------------
# Laurent polynomials
# ---------------------------------------------------------------------------


def _grlex_key(exps: tuple[int, ...]) -> tuple:
    return (sum(exps), exps)


class LaurentPolynomial:
    """Sparse Laurent polynomial: exponent 5-tuple -> nonzero Scalar.

    The zero polynomial is the empty dict.  Constructors canonicalise; the
    arithmetic methods keep the no-stored-zero invariant.
    """

    __slots__ = ("terms",)

    def __init__(self, terms: dict[tuple[int, ...], Scalar] | None = None):
        self.terms = terms if terms is not None else {}

    # -- constructors --

    @classmethod
    def zero(cls) -> "LaurentPolynomial":
        return cls({})

    @classmethod
    def constant(cls, sc: Scalar) -> "LaurentPolynomial":
        if sc.is_zero():
            return cls({})
        return cls({_ZERO_EXP: sc})

    @classmethod
    def monomial(cls, sc: Scalar, exps: tuple[int, ...]) -> "LaurentPolynomial":
        if sc.is_zero():
            return cls({})
        return cls({tuple(exps): sc})

    @classmethod
    def variable(cls, name: str, power: int = 1) -> "LaurentPolynomial":
        exps = [0] * _NVARS
        exps[_VAR_INDEX[name]] = power
        return cls({tuple(exps): SC_ONE})

    # -- predicates / inspection --

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def is_one(self) -> bool:
        return len(self.terms) == 1 and self.terms.get(_ZERO_EXP) == SC_ONE

    @property
    def is_monomial(self) -> bool:
        return len(self.terms) == 1

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LaurentPolynomial):
            return NotImplemented
        return self.terms == other.terms

    __hash__ = None  # type: ignore[assignment]

    def sorted_terms(self) -> list[tuple[tuple[int, ...], Scalar]]:
        """Terms in canonical order: graded lexicographic, leading first."""
        return sorted(self.terms.items(), key=lambda kv: _grlex_key(kv[0]), reverse=True)

    def leading(self) -> tuple[tuple[int, ...], Scalar]:
        exps = max(self.terms, key=_grlex_key)
        return exps, self.terms[exps]

    def total_spread(self) -> int:
        """Degree bound for identity testing: max over terms of sum |e_v|."""
        if not self.terms:
            return 0
        return max(sum(abs(e) for e in exps) for exps in self.terms)

    # -- ring operations --

    def __add__(self, other: "LaurentPolynomial") -> "LaurentPolynomial":
        if not self.terms:
            return other
        if not other.terms:
            return self
        big, small = (self.terms, other.terms) if len(self.terms) >= len(other.terms) else (other.terms, self.terms)
        out = dict(big)
        for exps, sc in small.items():
            cur = out.get(exps)
            if cur is None:
                out[exps] = sc
            else:
                tot = cur + sc
                if tot.is_zero():
                    del out[exps]
                else:
                    out[exps] = tot
        return LaurentPolynomial(out)

    def __neg__(self) -> "LaurentPolynomial":
        return LaurentPolynomial({exps: -sc for exps, sc in self.terms.items()})

    def __sub__(self, other: "LaurentPolynomial") -> "LaurentPolynomial":
        return self + (-other)

    def __mul__(self, other: "LaurentPolynomial") -> "LaurentPolynomial":
        if not self.terms or not other.terms:
            return LaurentPolynomial({})
        if self.is_one:
            return other
        if other.is_one:
            return self
        out: dict[tuple[int, ...], Scalar] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                exps = (e1[0] + e2[0], e1[1] + e2[1], e1[2] + e2[2], e1[3] + e2[3], e1[4] + e2[4])
                prod = c1 * c2
                cur = out.get(exps)
                if cur is None:
                    out[exps] = prod
                else:
                    tot = cur + prod
                    if tot.is_zero():
                        del out[exps]
                    else:
                        out[exps] = tot
        return LaurentPolynomial(out)

    def scale(self, sc: Scalar) -> "LaurentPolynomial":
        if sc.is_zero():
            return LaurentPolynomial({})
        if sc == SC_ONE:
            return self
        return LaurentPolynomial({exps: c * sc for exps, c in self.terms.items()})

    def shift(self, exps: tuple[int, ...]) -> "LaurentPolynomial":
        """Multiply by the monomial with the given exponent vector."""
        if exps == _ZERO_EXP:
            return self
        return LaurentPolynomial(
            {
                (e[0] + exps[0], e[1] + exps[1], e[2] + exps[2], e[3] + exps[3], e[4] + exps[4]): c
                for e, c in self.terms.items()
            }
        )

    def __pow__(self, k: int) -> "LaurentPolynomial":
        if k < 0:
            raise ValueError("LaurentPolynomial powers must be nonnegative; use RationalExpr")
        if k > MAX_EXPONENT:
            raise OverflowError("exponent too large")
        out = LaurentPolynomial({_ZERO_EXP: SC_ONE})
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base if k > 1 else base
            k >>= 1
        return out

    def content_exponents(self) -> tuple[int, ...]:
        """Componentwise minimum exponent across terms (the monomial content)."""
        it = iter(self.terms)
        mins = list(next(it))
        for exps in it:
            for i, e in enumerate(exps):
                if e < mins[i]:
                    mins[i] = e
        return tuple(mins)

    def _exponent_box(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        it = iter(self.terms)
        first = next(it)
        lo = list(first)
        hi = list(first)
        for exps in it:
            for i, e in enumerate(exps):
                if e < lo[i]:
                    lo[i] = e
                elif e > hi[i]:
                    hi[i] = e
        return tuple(lo), tuple(hi)

    def exact_div(
        self,
        q: "LaurentPolynomial",
        collapse_cache: "dict[int, dict[int, int] | None] | None" = None,
    ) -> "LaurentPolynomial | None":
        """Quotient self/q when q divides exactly, else None.

        Leading-term division under the graded-lex order; sound for Laurent
        exponents because quotient exponents are confined to the box fixed by
        the componentwise min/max exponents of self and q.  A modular
        univariate pre-check rejects most non-divisible pairs cheaply.
        """
        if q.is_zero:
            raise ZeroDivisionError("division by zero polynomial")
        if self.is_zero:
            return self
        if q.is_one:
            return self
        if q.is_monomial:
            (qe, qc), = q.terms.items()
            inv = qc.inverse()
            return LaurentPolynomial(
                {
                    (e[0] - qe[0], e[1] - qe[1], e[2] - qe[2], e[3] - qe[3], e[4] - qe[4]): c * inv
                    for e, c in self.terms.items()
                }
            )
        p_lo, p_hi = self._exponent_box()
        q_lo, q_hi = q._exponent_box()
        floor = tuple(a - b for a, b in zip(p_lo, q_lo))
        ceil = tuple(a - b for a, b in zip(p_hi, q_hi))
        if any(f > c for f, c in zip(floor, ceil)):
            return None
        if not _divisibility_precheck(self, q, q_lo, q_hi, collapse_cache):
            return None
        q_lead_exps, q_lead_sc = q.leading()
        q_lead_inv = q_lead_sc.inverse()
        rem = dict(self.terms)
        # Max-heap on the graded-lex key (negated for heapq); stale entries
        # are skipped lazily, duplicates are harmless.
        heap = [(-sum(e), tuple(-c for c in e), e) for e in rem]
        heapq.heapify(heap)
        out: dict[tuple[int, ...], Scalar] = {}
        max_steps = 16 * (len(self.terms) + len(q.terms)) + 64
        steps = 0
        while rem:
            steps += 1
            if steps > max_steps:
                return None
            while True:
                lead = heapq.heappop(heap)[2]
                if lead in rem:
                    break
            t_exps = tuple(a - b for a, b in zip(lead, q_lead_exps))
            if any(t < f for t, f in zip(t_exps, floor)):
                return None
            t_sc = rem.pop(lead) * q_lead_inv
            out[t_exps] = t_sc
            for qe, qc in q.terms.items():
                if qe == q_lead_exps:
                    continue
                key = (
                    t_exps[0] + qe[0],
                    t_exps[1] + qe[1],
                    t_exps[2] + qe[2],
                    t_exps[3] + qe[3],
                    t_exps[4] + qe[4],
                )
                prod = t_sc * qc
                cur = rem.get(key)
                if cur is None:
                    rem[key] = -prod
                    heapq.heappush(heap, (-sum(key), tuple(-c for c in key), key))
                else:
                    tot = cur - prod
                    if tot.is_zero():
                        del rem[key]
                    else:
                        rem[key] = tot
        return LaurentPolynomial(out)

    def var_degrees(self, var: str) -> tuple[int, int]:
        """(min, max) exponent of ``var`` across terms; (0, 0) for zero."""
        i = _VAR_INDEX[var]
        if not self.terms:
            return (0, 0)
        exps = [e[i] for e in self.terms]
        return (min(exps), max(exps))

    def text(self) -> str:
        return _poly_text(self)

    def __repr__(self) -> str:
        return f"<LaurentPolynomial {self.text()}>"


_POLY_ZERO = LaurentPolynomial({})
_POLY_ONE = LaurentPolynomial({_ZERO_EXP: SC_ONE})


def _poly_key(poly: LaurentPolynomial) -> tuple:
    return tuple(
        (exps, sc.re.numerator, sc.re.denominator, sc.im.numerator, sc.im.denominator)
        for exps, sc in sorted(poly.terms.items())
    )


# Fixed evaluation data for the modular divisibility pre-check.
_PRECHECK_PRIME = 2305843009213693973
_PRECHECK_POINT = (
    1234567891234567891,
    987654321987654321,
    192837465564738291,
    1122334455667788993,
    564738291029384757,
)
_PRECHECK_I: int | None = None
_PRECHECK_POWS: tuple[dict[int, int], ...] = tuple({} for _ in range(_NVARS))
_PRECHECK_INVS: dict[int, int] = {}


def _precheck_pow(j: int, e: int) -> int:
    table = _PRECHECK_POWS[j]
    got = table.get(e)
    if got is None:
        p = _PRECHECK_PRIME
        got = pow(_PRECHECK_POINT[j], e % (p - 1), p)
        table[e] = got
    return got


def _precheck_inv(d: int) -> int:
    got = _PRECHECK_INVS.get(d)
    if got is None:
        got = pow(d, -1, _PRECHECK_PRIME)
        _PRECHECK_INVS[d] = got
    return got


def _collapse_mod(poly: LaurentPolynomial, vi: int, i_unit: int) -> dict[int, int] | None:
    """Evaluate all variables except ``vi`` at the fixed point mod the prime.

    Returns {vi-exponent: residue} or None when a coefficient denominator is
    not invertible mod the prime (inconclusive).
    """
    p = _PRECHECK_PRIME
    out: dict[int, int] = {}
    for exps, sc in poly.terms.items():
        re = sc.re
        if not sc.im:
            rd = re.denominator
            if rd == 1:
                val = re.numerator % p
            else:
                if rd % p == 0:
                    return None
                val = re.numerator * _precheck_inv(rd) % p
        else:
            rd = re.denominator
            idn = sc.im.denominator
            if rd % p == 0 or idn % p == 0:
                return None
            val = (re.numerator * _precheck_inv(rd) + i_unit * sc.im.numerator * _precheck_inv(idn)) % p
        for j, e in enumerate(exps):
            if e and j != vi:
                val = val * _precheck_pow(j, e) % p
        e = exps[vi]
        cur = (out.get(e, 0) + val) % p
        if cur:
            out[e] = cur
        else:
            out.pop(e, None)
    return out


def _divisibility_precheck(
    p_poly: LaurentPolynomial,
    q_poly: LaurentPolynomial,
    q_lo: tuple[int, ...],
    q_hi: tuple[int, ...],
    collapse_cache: dict[int, "dict[int, int] | None"] | None = None,
) -> bool:
    """False only when q certainly does not divide p (checked mod a prime)."""
    global _PRECHECK_I
    spreads = [hi - lo for lo, hi in zip(q_lo, q_hi)]
    vi = max(range(_NVARS), key=lambda i: spreads[i])
    if spreads[vi] == 0:
        return True
    if _PRECHECK_I is None:
        _PRECHECK_I = find_imaginary_unit(_PRECHECK_PRIME)
    qbar = _collapse_mod(q_poly, vi, _PRECHECK_I)
    if qbar is None or not qbar:
        return True
    if collapse_cache is not None and vi in collapse_cache:
        pbar = collapse_cache[vi]
    else:
        pbar = _collapse_mod(p_poly, vi, _PRECHECK_I)
        if collapse_cache is not None:
            collapse_cache[vi] = pbar
    if pbar is None or not pbar:
        return True
    p = _PRECHECK_PRIME
    qmin, qmax = min(qbar), max(qbar)
    pmin, pmax = min(pbar), max(pbar)
    if pmax - pmin < qmax - qmin:
        # Degree spans add under multiplication over a field, so a shorter
        # span certainly rules out exact division.
        return False
    dq = qmax - qmin
    qd = [0] * (dq + 1)
    for e, v in qbar.items():
        qd[e - qmin] = v
    pd = [0] * (pmax - pmin + 1)
    for e, v in pbar.items():
        pd[e - pmin] = v
    linv = pow(qd[dq], -1, p)
    for i in range(len(pd) - 1, dq - 1, -1):
        c = pd[i]
        if c == 0:
            continue
        c = c * linv % p
        off = i - dq
        for j in range(dq + 1):
            pd[off + j] = (pd[off + j] - c * qd[j]) % p
    return not any(pd)


# ---------------------------------------------------------------------------
# Rational expressions with factored denominators
# ---------------------------------------------------------------------------

Coercible = Union["RationalExpr", LaurentPolynomial, Scalar, int, Fraction]

# Denominator multiset: factor key -> (factor polynomial, multiplicity >= 1).
Factors = dict[tuple, tuple[LaurentPolynomial, int]]


def _expand_factors(factors: Iterable[tuple[LaurentPolynomial, int]]) -> LaurentPolynomial:
    out = _POLY_ONE
    for poly, mult in factors:
        for _ in range(mult):
            out = out * poly
    return out


class RationalExpr:
    """Quotient of Laurent polynomials, normalised but never gcd-reduced.

    The denominator is a multiset of factor polynomials, each nonzero, free of
    monomial content, non-monomial, and with leading coefficient 1; monomial
    parts live in the numerator as Laurent exponents.  Stored factors are
    divided out of the numerator whenever they divide exactly, which keeps
    long add/multiply chains from swelling, but no gcd is ever computed.
    """

    __slots__ = ("num", "_factors", "_den_cache")

    def __init__(self, num: LaurentPolynomial, den: LaurentPolynomial = _POLY_ONE):
        built = _make(num, [(den, 1)])
        self.num = built.num
        self._factors = built._factors
        self._den_cache = built._den_cache

    # -- plumbing --

    @classmethod
    def _raw(cls, num: LaurentPolynomial, factors: Factors) -> "RationalExpr":
        self = object.__new__(cls)
        self.num = num
        self._factors = factors
        self._den_cache = None
        return self

    @property
    def den(self) -> LaurentPolynomial:
        if self._den_cache is None:
            self._den_cache = _expand_factors(self._factors.values())
        return self._den_cache

    def den_factors(self) -> list[tuple[LaurentPolynomial, int]]:
        return [self._factors[k] for k in sorted(self._factors)]

    def den_spread(self) -> int:
        return sum(mult * poly.total_spread() for poly, mult in self._factors.values())

    # -- constructors --

    @classmethod
    def from_int(cls, k: int | Fraction) -> "RationalExpr":
        return cls._raw(LaurentPolynomial.constant(Scalar(k)), {})

    @classmethod
    def from_scalar(cls, sc: Scalar) -> "RationalExpr":
        return cls._raw(LaurentPolynomial.constant(sc), {})

    @staticmethod
    def coerce(value: Coercible) -> "RationalExpr":
        if isinstance(value, RationalExpr):
            return value
        if isinstance(value, LaurentPolynomial):
            return RationalExpr._raw(value, {})
        if isinstance(value, Scalar):
            return RationalExpr.from_scalar(value)
        if isinstance(value, (int, Fraction)):
            return RationalExpr.from_int(value)
        raise TypeError(f"cannot coerce {value!r} to RationalExpr")

    # -- predicates --

    @property
    def is_zero(self) -> bool:
        return self.num.is_zero

    @property
    def is_monomial(self) -> bool:
        return not self._factors and len(self.num.terms) == 1

    # -- field operations --

    def __add__(self, other: Coercible) -> "RationalExpr":
        other = RationalExpr.coerce(other)
        if self.is_zero:
            return other
        if other.is_zero:
            return self
        if not self._factors and not other._factors:
            return RationalExpr._raw(self.num + other.num, {})
        if self._factors.keys() == other._factors.keys() and all(
            self._factors[k][1] == other._factors[k][1] for k in self._factors
        ):
            return _reduce(self.num + other.num, dict(self._factors))
        lcm: Factors = dict(self._factors)
        for key, (poly, mult) in other._factors.items():
            cur = lcm.get(key)
            if cur is None or cur[1] < mult:
                lcm[key] = (poly, mult)
        left = self.num * _expand_factors(
            (poly, mult - self._factors.get(key, (poly, 0))[1])
            for key, (poly, mult) in lcm.items()
            if mult > self._factors.get(key, (poly, 0))[1]
        )
        right = other.num * _expand_factors(
            (poly, mult - other._factors.get(key, (poly, 0))[1])
            for key, (poly, mult) in lcm.items()
            if mult > other._factors.get(key, (poly, 0))[1]
        )
        return _reduce(left + right, lcm)

    __radd__ = __add__

    def __neg__(self) -> "RationalExpr":
        out = RationalExpr._raw(-self.num, self._factors)
        out._den_cache = self._den_cache
        return out

    def __sub__(self, other: Coercible) -> "RationalExpr":
        return self + (-RationalExpr.coerce(other))

    def __rsub__(self, other: Coercible) -> "RationalExpr":
        return RationalExpr.coerce(other) + (-self)

    def __mul__(self, other: Coercible) -> "RationalExpr":
        other = RationalExpr.coerce(other)
        if self.is_zero or other.is_zero:
            return RE_ZERO
        num = self.num * other.num
        if not self._factors:
            if not other._factors:
                return RationalExpr._raw(num, {})
            return _reduce(num, dict(other._factors))
        if not other._factors:
            return _reduce(num, dict(self._factors))
        merged: Factors = dict(self._factors)
        for key, (poly, mult) in other._factors.items():
            cur = merged.get(key)
            merged[key] = (poly, mult + (cur[1] if cur else 0))
        return _reduce(num, merged)

    __rmul__ = __mul__

    def __truediv__(self, other: Coercible) -> "RationalExpr":
        other = RationalExpr.coerce(other)
        if other.is_zero:
            raise ZeroDivisionError("division by zero expression")
        if self.is_zero:
            return RE_ZERO
        # Cancel shared denominator factors: they move to the numerator here.
        remaining: Factors = dict(self._factors)
        up: list[tuple[LaurentPolynomial, int]] = []
        for key, (poly, mult) in other._factors.items():
            cur = remaining.get(key)
            if cur is None:
                up.append((poly, mult))
            elif cur[1] > mult:
                remaining[key] = (poly, cur[1] - mult)
            else:
                if cur[1] < mult:
                    up.append((poly, mult - cur[1]))
                del remaining[key]
        num = self.num * _expand_factors(up)
        return _make(num, list(remaining.values()) + [(other.num, 1)])

    def __rtruediv__(self, other: Coercible) -> "RationalExpr":
        return RationalExpr.coerce(other) / self

    def __pow__(self, k: int) -> "RationalExpr":
        if abs(k) > MAX_EXPONENT:
            raise OverflowError("exponent too large")
        if k < 0:
            if self.is_zero:
                raise ZeroDivisionError("negative power of zero expression")
            num = _expand_factors((poly, mult * -k) for poly, mult in self._factors.values())
            return _make(num, [(self.num, -k)])
        if k == 0:
            return RE_ONE
        factors: Factors = {key: (poly, mult * k) for key, (poly, mult) in self._factors.items()}
        return RationalExpr._raw(self.num**k, factors)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, (int, Fraction, Scalar, LaurentPolynomial)):
            other = RationalExpr.coerce(other)
        if not isinstance(other, RationalExpr):
            return NotImplemented
        return rf_equal(self, other)

    __hash__ = None  # type: ignore[assignment]

    def substitute(self, mapping: Mapping[str, Coercible]) -> "RationalExpr":
        return substitute(self, mapping)

    def text(self) -> str:
        if not self._factors:
            return _poly_text(self.num)
        return f"({_poly_text(self.num)}) / ({_poly_text(self.den)})"

    def __repr__(self) -> str:
        return f"<RationalExpr {self.text()}>"


def _make(num: LaurentPolynomial, raw_factors: Iterable[tuple[LaurentPolynomial, int]]) -> RationalExpr:
    """Normalise a numerator and raw denominator factors into a RationalExpr."""
    factors: Factors = {}
    shift = [0] * _NVARS
    scale = SC_ONE
    for poly, mult in raw_factors:
        if mult == 0:
            continue
        if poly.is_zero:
            raise ZeroDivisionError("zero denominator in RationalExpr")
        if poly.is_one:
            continue
        if num.is_zero:
            continue
        content = poly.content_exponents()
        if content != _ZERO_EXP:
            poly = poly.shift(tuple(-e for e in content))
            for i, e in enumerate(content):
                shift[i] -= e * mult
        if poly.is_one:
            continue
        if poly.is_monomial:
            # Only a scalar remains after content removal.
            (_, sc), = poly.terms.items()
            scale = scale * (sc.inverse() ** mult)
            continue
        _, lead = poly.leading()
        if lead != SC_ONE:
            poly = poly.scale(lead.inverse())
            scale = scale * (lead.inverse() ** mult)
        key = _poly_key(poly)
        cur = factors.get(key)
        factors[key] = (poly, mult + (cur[1] if cur else 0))
    if num.is_zero:
        return RE_ZERO
    if scale != SC_ONE:
        num = num.scale(scale)
    if any(shift):
        num = num.shift(tuple(shift))
    return _reduce(num, factors)


def _reduce(num: LaurentPolynomial, factors: Factors) -> RationalExpr:
    """Divide stored factors out of the numerator where they divide exactly."""
    if num.is_zero:
        return RE_ZERO
    if factors and not num.is_monomial:
        collapse_cache: dict[int, dict[int, int] | None] = {}
        for key in list(factors):
            poly, mult = factors[key]
            while mult > 0:
                quo = num.exact_div(poly, collapse_cache)
                if quo is None:
                    break
                num = quo
                collapse_cache.clear()
                mult -= 1
            if mult == 0:
                del factors[key]
            else:
                factors[key] = (poly, mult)
    return RationalExpr._raw(num, factors)


RE_ZERO = RationalExpr._raw(_POLY_ZERO, {})
RE_ONE = RationalExpr._raw(_POLY_ONE, {})
RE_I = RationalExpr._raw(LaurentPolynomial.constant(SC_I), {})

S = RationalExpr._raw(LaurentPolynomial.variable("s"), {})
X = RationalExpr._raw(LaurentPolynomial.variable("x"), {})
X0 = RationalExpr._raw(LaurentPolynomial.variable("x0"), {})
X1 = RationalExpr._raw(LaurentPolynomial.variable("x1"), {})
U = RationalExpr._raw(LaurentPolynomial.variable("u"), {})


def integer(k: int | Fraction) -> RationalExpr:
    return RationalExpr.from_int(k)


def q_power(m: int) -> RationalExpr:
    """q**m as a monomial (q = s**4)."""
    return RationalExpr._raw(LaurentPolynomial.variable("s", 4 * m), {})


def half_q_power(m: int) -> RationalExpr:
    """q**(m/2) as a monomial."""
    return RationalExpr._raw(LaurentPolynomial.variable("s", 2 * m), {})


def quarter_q_power(m: int) -> RationalExpr:
    """q**(m/4) as a monomial."""
    return RationalExpr._raw(LaurentPolynomial.variable("s", m), {})


def monomial(
    coeff: Scalar | int | Fraction = 1,
    s: int = 0,
    x: int = 0,
    x0: int = 0,
    x1: int = 0,
    u: int = 0,
) -> RationalExpr:
    sc = coeff if isinstance(coeff, Scalar) else Scalar(coeff)
    return RationalExpr._raw(LaurentPolynomial.monomial(sc, (s, x, x0, x1, u)), {})


# ---------------------------------------------------------------------------
# Core operations
# ---------------------------------------------------------------------------


def rf_equal(f: RationalExpr, g: RationalExpr) -> bool:
    """Exact equality by cross-multiplication after dropping shared factors."""
    f_extra: list[tuple[LaurentPolynomial, int]] = []
    g_extra: list[tuple[LaurentPolynomial, int]] = []
    keys = set(f._factors) | set(g._factors)
    for key in keys:
        fm = f._factors.get(key)
        gm = g._factors.get(key)
        fmult = fm[1] if fm else 0
        gmult = gm[1] if gm else 0
        poly = (fm or gm)[0]  # type: ignore[index]
        if fmult > gmult:
            g_extra.append((poly, fmult - gmult))
        elif gmult > fmult:
            f_extra.append((poly, gmult - fmult))
    left = f.num * _expand_factors(f_extra)
    right = g.num * _expand_factors(g_extra)
    return left == right


def rf_sum(items: Iterable[Coercible]) -> RationalExpr:
    """Sum many quotients at once: group by denominator, reduce only once.

    Equivalent to folding with ``+`` but avoids re-reducing and re-expanding
    cofactors at every intermediate step, which matters in operator sums.
    """
    groups: dict[tuple, list] = {}
    for item in items:
        f = RationalExpr.coerce(item)
        if f.is_zero:
            continue
        sig = tuple(sorted((key, mult) for key, (_, mult) in f._factors.items()))
        got = groups.get(sig)
        if got is None:
            groups[sig] = [f.num, dict(f._factors)]
        else:
            got[0] = got[0] + f.num
    acc_num: LaurentPolynomial | None = None
    acc_factors: Factors = {}
    for sig in sorted(groups):
        num, factors = groups[sig]
        if num.is_zero:
            continue
        if acc_num is None:
            acc_num, acc_factors = num, factors
            continue
        lcm: Factors = dict(acc_factors)
        for key, (poly, mult) in factors.items():
            cur = lcm.get(key)
            if cur is None or cur[1] < mult:
                lcm[key] = (poly, mult)
        acc_num = acc_num * _expand_factors(
            (poly, mult - acc_factors.get(key, (poly, 0))[1])
            for key, (poly, mult) in lcm.items()
            if mult > acc_factors.get(key, (poly, 0))[1]
        ) + num * _expand_factors(
            (poly, mult - factors.get(key, (poly, 0))[1])
            for key, (poly, mult) in lcm.items()
            if mult > factors.get(key, (poly, 0))[1]
        )
        acc_factors = lcm
    if acc_num is None:
        return RE_ZERO
    return _reduce(acc_num, acc_factors)


def q_pochhammer(z: Coercible, k: int) -> RationalExpr:
    """Finite q-shifted factorial: product of (1 - z*q**i) for i = 0..k-1."""
    if k < 0:
        raise ValueError("q_pochhammer length must be nonnegative")
    z = RationalExpr.coerce(z)
    out = RE_ONE
    for i in range(k):
        out = out * (RE_ONE - z * q_power(i))
    return out


def ch(f: Coercible) -> RationalExpr:
    """f + 1/f."""
    f = RationalExpr.coerce(f)
    if f.is_zero:
        raise ZeroDivisionError("ch of zero expression")
    return f + RE_ONE / f


def sh(f: Coercible) -> RationalExpr:
    """f - 1/f."""
    f = RationalExpr.coerce(f)
    if f.is_zero:
        raise ZeroDivisionError("sh of zero expression")
    return f - RE_ONE / f


def ch_sh(f: Coercible, kind: str) -> RationalExpr:
    if kind == "ch":
        return ch(f)
    if kind == "sh":
        return sh(f)
    raise ValueError(f"kind must be 'ch' or 'sh', got {kind!r}")


# -- substitution ------------------------------------------------------------


def _as_monomial_image(img: RationalExpr) -> tuple[Scalar, tuple[int, ...]] | None:
    if not img._factors and len(img.num.terms) == 1:
        exps, sc = next(iter(img.num.terms.items()))
        return sc, exps
    return None


def _poly_monomial_sub(
    poly: LaurentPolynomial, images: dict[int, tuple[Scalar, tuple[int, ...]]]
) -> LaurentPolynomial:
    out: dict[tuple[int, ...], Scalar] = {}
    for exps, sc in poly.terms.items():
        new = list(exps)
        coeff = sc
        for i, (isc, iexps) in images.items():
            e = exps[i]
            if e == 0:
                continue
            new[i] -= e
            for j, ie in enumerate(iexps):
                if ie:
                    new[j] += ie * e
            if isc != SC_ONE:
                coeff = coeff * (isc**e)
        key = tuple(new)
        cur = out.get(key)
        if cur is None:
            out[key] = coeff
        else:
            tot = cur + coeff
            if tot.is_zero():
                del out[key]
            else:
                out[key] = tot
    return LaurentPolynomial(out)


def _poly_general_sub(poly: LaurentPolynomial, images: dict[int, RationalExpr]) -> RationalExpr:
    cache: dict[tuple[int, int], RationalExpr] = {}

    def power(i: int, e: int) -> RationalExpr:
        key = (i, e)
        got = cache.get(key)
        if got is None:
            got = images[i] ** e
            cache[key] = got
        return got

    total = RE_ZERO
    for exps, sc in poly.terms.items():
        rest = [0] * _NVARS
        term = RationalExpr.from_scalar(sc)
        for i, e in enumerate(exps):
            if e == 0:
                continue
            if i in images:
                term = term * power(i, e)
            else:
                rest[i] = e
        if tuple(rest) != _ZERO_EXP:
            term = term * RationalExpr._raw(LaurentPolynomial.monomial(SC_ONE, tuple(rest)), {})
        total = total + term
    return total


def substitute(f: Coercible, mapping: Mapping[str, Coercible]) -> RationalExpr:
    """Exact simultaneous substitution variable -> expression.

    Raises :class:`SubstitutionError` (naming the offending factor) when the
    substitution makes the denominator vanish identically.
    """
    f = RationalExpr.coerce(f)
    images = {_VAR_INDEX[name]: RationalExpr.coerce(val) for name, val in mapping.items()}
    if not images:
        return f
    mono_images: dict[int, tuple[Scalar, tuple[int, ...]]] = {}
    all_monomial = True
    for i, img in images.items():
        m = _as_monomial_image(img)
        if m is None:
            all_monomial = False
            break
        mono_images[i] = m
    if all_monomial:
        num = _poly_monomial_sub(f.num, mono_images)
        new_factors: list[tuple[LaurentPolynomial, int]] = []
        for poly, mult in f._factors.values():
            sub = _poly_monomial_sub(poly, mono_images)
            if sub.is_zero:
                raise SubstitutionError(f"denominator factor vanishes under substitution: {poly.text()}")
            new_factors.append((sub, mult))
        return _make(num, new_factors)
    out = _poly_general_sub(f.num, images)
    for poly, mult in f._factors.values():
        sub = _poly_general_sub(poly, images)
        if sub.is_zero:
            raise SubstitutionError(f"denominator factor vanishes under substitution: {poly.text()}")
        out = out / sub**mult
    return out


# -- Laurent decomposition in one variable ------------------------------------


def laurent_in(f: RationalExpr, var: str = "x") -> dict[int, RationalExpr]:
    """Write f as a Laurent polynomial in ``var`` with coefficients free of it.

    Returns {exponent: coefficient}.  Raises :class:`NotLaurentInX` when the
    denominator does not divide the numerator in ``var`` (a genuine pole).
    """
    vi = _VAR_INDEX[var]

    def split(poly: LaurentPolynomial) -> dict[int, LaurentPolynomial]:
        out: dict[int, dict[tuple[int, ...], Scalar]] = {}
        for exps, sc in poly.terms.items():
            e = exps[vi]
            rest = list(exps)
            rest[vi] = 0
            out.setdefault(e, {})[tuple(rest)] = sc
        return {e: LaurentPolynomial(t) for e, t in out.items()}

    num_parts = split(f.num)
    den = f.den
    den_parts = split(den)
    if not num_parts:
        return {}
    if len(den_parts) == 1:
        (d_exp, d_poly), = den_parts.items()
        d = RationalExpr(_POLY_ONE, d_poly)
        return {e - d_exp: RationalExpr.coerce(p) * d for e, p in num_parts.items()}

    # Exact division from the top degree down; quotient exponents live in
    # [min(num)-min(den), max(num)-max(den)] when the division is exact.
    rem: dict[int, RationalExpr] = {e: RationalExpr.coerce(p) for e, p in num_parts.items()}
    den_re: dict[int, RationalExpr] = {e: RationalExpr.coerce(p) for e, p in den_parts.items()}
    d_top = max(den_re)
    d_lead = den_re[d_top]
    floor = min(num_parts) - min(den_parts)
    quot: dict[int, RationalExpr] = {}
    while rem:
        r_top = max(rem)
        e = r_top - d_top
        if e < floor:
            raise NotLaurentInX(f"expression has a pole in {var}")
        c = rem[r_top] / d_lead
        quot[e] = c
        for de, dc in den_re.items():
            k = e + de
            cur = rem.get(k, RE_ZERO) - c * dc
            if cur.is_zero:
                rem.pop(k, None)
            else:
                rem[k] = cur
    return quot


# ---------------------------------------------------------------------------
# Random evaluation (polynomial identity testing)
# ---------------------------------------------------------------------------


def find_imaginary_unit(p: int) -> int:
    """Deterministic square root of -1 mod p; requires p == 1 (mod 4)."""
    if p % 4 != 1:
        raise ValueError("prime must be 1 mod 4 to host an imaginary unit")
    for a in range(2, p):
        if pow(a, (p - 1) // 2, p) == p - 1:
            return pow(a, (p - 1) // 4, p)
    raise ValueError("no quadratic non-residue found")


def _scalar_mod(sc: Scalar, p: int, i_unit: int) -> int:
    re = sc.re.numerator * pow(sc.re.denominator, -1, p)
    im = sc.im.numerator * pow(sc.im.denominator, -1, p)
    return (re + i_unit * im) % p


def _poly_eval_mod(poly: LaurentPolynomial, point: Mapping[str, int], p: int, i_unit: int) -> int:
    values = [point[name] % p for name in VARIABLES]
    total = 0
    for exps, sc in poly.terms.items():
        term = _scalar_mod(sc, p, i_unit)
        for v, e in zip(values, exps):
            if e:
                term = term * pow(v, e % (p - 1), p) % p
        total = (total + term) % p
    return total


def _poly_eval_exact(poly: LaurentPolynomial, point: Mapping[str, Scalar]) -> Scalar:
    values = [point[name] for name in VARIABLES]
    total = SC_ZERO
    for exps, sc in poly.terms.items():
        term = sc
        for v, e in zip(values, exps):
            if e:
                if e < 0 and v.is_zero():
                    raise ResampleNeeded("zero base with negative exponent")
                term = term * (v**e)
        total = total + term
    return total


def eval_random(
    f: RationalExpr,
    point: Mapping[str, int] | Mapping[str, Scalar],
    modulus: int | None = None,
    i_unit: int | None = None,
) -> int | Scalar:
    """Evaluate f exactly at a point, over GF(modulus) or over Q(i).

    Over GF(p) the point maps variables to integers and ``i_unit`` must square
    to -1 mod p.  A vanishing denominator raises :class:`ResampleNeeded`.
    """
    if modulus is not None:
        if i_unit is None:
            i_unit = find_imaginary_unit(modulus)
        den = 1
        for poly, mult in f._factors.values():
            val = _poly_eval_mod(poly, point, modulus, i_unit)  # type: ignore[arg-type]
            if val == 0:
                raise ResampleNeeded("denominator vanished at sample point")
            den = den * pow(val, mult, modulus) % modulus
        num = _poly_eval_mod(f.num, point, modulus, i_unit)  # type: ignore[arg-type]
        return num * pow(den, -1, modulus) % modulus
    pt = {k: (v if isinstance(v, Scalar) else Scalar(v)) for k, v in point.items()}
    den_val = SC_ONE
    for poly, mult in f._factors.values():
        val = _poly_eval_exact(poly, pt)
        if val.is_zero():
            raise ResampleNeeded("denominator vanished at sample point")
        den_val = den_val * val**mult
    return _poly_eval_exact(f.num, pt) * den_val.inverse()


# ---------------------------------------------------------------------------
# Equality strategies for the verification suites
# ---------------------------------------------------------------------------


class ExactChecker:
    """Decides equality by cross-multiplication (the exact route)."""

    mode = "exact"

    def equal(self, f: RationalExpr, g: RationalExpr) -> bool:
        return rf_equal(f, g)


# Default prime for randomized identity testing: 1 mod 4, close to 2**61.
DEFAULT_PRIME = 2305843009213693973


class RandomChecker:
    """Schwartz-Zippel equality over a prime field, deterministic per seed.

    Repetition count comes from the cross-multiplied total-degree bound of the
    pair being compared; points with vanishing denominators are resampled.
    """

    mode = "random"

    def __init__(self, modulus: int = DEFAULT_PRIME, seed: int = 0, confidence_bits: int = 80):
        if modulus % 4 != 1:
            raise ValueError("modulus must be 1 mod 4")
        self.modulus = modulus
        self.seed = seed
        self.confidence_bits = confidence_bits
        self.i_unit = find_imaginary_unit(modulus)
        self._rng = random.Random(seed)

    def _repetitions(self, degree_bound: int) -> int:
        import math

        per_trial = math.log2((self.modulus - 1) / max(degree_bound, 2))
        if per_trial <= 0:
            raise ValueError("modulus too small for degree bound")
        return max(1, -(-self.confidence_bits // int(per_trial)))

    def equal(self, f: RationalExpr, g: RationalExpr) -> bool:
        d = f.num.total_spread() + f.den_spread() + g.num.total_spread() + g.den_spread() + 1
        reps = self._repetitions(d)
        done = 0
        attempts = 0
        while done < reps:
            attempts += 1
            if attempts > 100 * reps:
                raise RuntimeError("too many resamples; denominators vanish everywhere sampled")
            point = {name: self._rng.randrange(1, self.modulus) for name in VARIABLES}
            try:
                left = eval_random(f, point, self.modulus, self.i_unit)
                right = eval_random(g, point, self.modulus, self.i_unit)
            except ResampleNeeded:
                continue
            if left != right:
                return False
            done += 1
        return True


# ---------------------------------------------------------------------------
# Canonical text format
# ---------------------------------------------------------------------------


def _term_text(exps: tuple[int, ...], sc: Scalar) -> str:
    parts = []
    for name, e in zip(VARIABLES, exps):
        if e == 0:
            continue
        parts.append(name if e == 1 else f"{name}^{e}")
    mono = "*".join(parts)
    if not mono:
        return sc.text()
    if sc == SC_ONE:
        return mono
    if sc == Scalar(-1):
        return f"-{mono}"
    st = sc.text()
    if sc.re and sc.im:
        return f"({st})*{mono}"
    return f"{st}*{mono}"


def _poly_text(poly: LaurentPolynomial) -> str:
    if poly.is_zero:
        return "0"
    pieces = []
    for exps, sc in poly.sorted_terms():
        t = _term_text(exps, sc)
        if not pieces:
            pieces.append(t)
        elif t.startswith("-"):
            pieces.append(" - " + t[1:])
        else:
            pieces.append(" + " + t)
    return "".join(pieces)
