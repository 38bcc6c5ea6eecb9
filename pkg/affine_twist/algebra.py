"""
Exact scalar and series arithmetic.

Scalars are either ``fractions.Fraction`` or ``CycNumber`` (an element of a
cyclotomic field). Every operation that produces a cyclotomic value which
happens to be rational hands back a plain Fraction, so rational code paths
never pay for the field arithmetic.

``PuiseuxSeries`` is a truncated series in q^(1/M); ``EpsSeries`` is a
truncated Laurent expansion in an auxiliary parameter epsilon whose
coefficients are Puiseux series, used to take limits z -> 1.
"""

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache, reduce

from sympy import Poly, Rational, Symbol, cyclotomic_poly, factorint

from affine_twist.exceptions import (
    DivisionByZero,
    InsufficientEpsDegree,
    InsufficientTruncation,
    MathError,
    ParameterError,
    PoleError,
    UnderdeterminedSystem,
    InconsistentSystem,
)

logger = logging.getLogger(__name__)

EXACT = math.inf

ZERO = Fraction(0)
ONE = Fraction(1)

_X = Symbol("x")


def to_fraction(value):
    """Coerce ints, Fractions and "p/q" strings to a Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, str)):
        return Fraction(value)
    if isinstance(value, Rational):
        return Fraction(int(value.p), int(value.q))
    raise TypeError(f"Cannot read {value!r} as a rational number")


def to_scalar(value):
    if isinstance(value, CycNumber):
        return value
    return to_fraction(value)


def is_zero(value):
    return not isinstance(value, CycNumber) and value == 0


def _lcm(a, b):
    return a * b // math.gcd(a, b)


# Cyclotomic numbers


@lru_cache(maxsize=None)
def _phi(order):
    """Ascending integer coefficients of the order-th cyclotomic polynomial."""
    coeffs = Poly(cyclotomic_poly(order, _X), _X).all_coeffs()
    return tuple(int(c) for c in reversed(coeffs))


@lru_cache(maxsize=None)
def _normalized_trace_of_power(order, power):
    # Ramanujan sum c_N(i) divided by phi(N)
    m = order // math.gcd(power, order)
    factors = factorint(m)
    if any(e > 1 for e in factors.values()):
        return ZERO
    mu = -1 if len(factors) % 2 else 1
    totient = m
    for p in factors:
        totient = totient // p * (p - 1)
    return Fraction(mu, totient)


def _reduce(order, coeffs):
    """Reduce an ascending coefficient list modulo x^N - 1 and Phi_N."""
    folded = [ZERO] * order
    for i, c in enumerate(coeffs):
        if c:
            folded[i % order] += c
    phi = _phi(order)
    deg = len(phi) - 1
    for i in range(order - 1, deg - 1, -1):
        c = folded[i]
        if c:
            base = i - deg
            for j in range(deg):
                if phi[j]:
                    folded[base + j] -= c * phi[j]
            folded[i] = ZERO
    return folded[:deg]


def _make(order, coeffs):
    reduced = _reduce(order, coeffs)
    if all(c == 0 for c in reduced[1:]):
        return Fraction(reduced[0]) if reduced else ZERO
    return CycNumber(order, tuple(reduced))


@dataclass(frozen=True, eq=False)
class CycNumber:
    """
    An element of Q(zeta_N) stored as coefficients of 1, zeta, ..., zeta^(d-1)
    with d = deg Phi_N, reduced modulo the cyclotomic polynomial.
    """

    order: int
    coeffs: tuple

    @classmethod
    def root_of_unity(cls, turn):
        """e^(2 pi i turn) for a rational turn; rational results come back as Fractions."""
        turn = to_fraction(turn) % 1
        order = turn.denominator
        if order <= 2:
            return ONE if turn == 0 else -ONE
        coeffs = [ZERO] * (turn.numerator + 1)
        coeffs[turn.numerator] = ONE
        return _make(order, coeffs)

    @classmethod
    def sqrt3(cls):
        zeta = cls.root_of_unity(Fraction(1, 12))
        return zeta + zeta.conjugate()

    @classmethod
    def imaginary_unit(cls):
        return cls.root_of_unity(Fraction(1, 4))

    def lift(self, order):
        """Coefficients of this element as a polynomial in zeta_order."""
        step = order // self.order
        coeffs = [ZERO] * (step * (len(self.coeffs) - 1) + 1)
        for i, c in enumerate(self.coeffs):
            coeffs[i * step] = c
        return _reduce(order, coeffs)

    def conjugate(self):
        coeffs = [ZERO] * self.order
        for i, c in enumerate(self.coeffs):
            coeffs[(-i) % self.order] += c
        return _make(self.order, coeffs)

    def inverse(self):
        phi = Poly(list(reversed(_phi(self.order))), _X, domain="QQ")
        own = Poly(
            [Rational(c.numerator, c.denominator) for c in reversed(self.coeffs)],
            _X,
            domain="QQ",
        )
        inv = own.invert(phi)
        return _make(self.order, [to_fraction(c) for c in reversed(inv.all_coeffs())])

    def normalized_trace(self):
        return sum(
            (c * _normalized_trace_of_power(self.order, i) for i, c in enumerate(self.coeffs)),
            ZERO,
        )

    def to_complex(self):
        return sum(
            float(c) * complex(math.cos(2 * math.pi * i / self.order), math.sin(2 * math.pi * i / self.order))
            for i, c in enumerate(self.coeffs)
        )

    # Arithmetic

    def _common(self, other):
        if isinstance(other, CycNumber):
            order = _lcm(self.order, other.order)
            return order, self.lift(order), other.lift(order)
        other = to_fraction(other)
        return self.order, list(self.coeffs), [other]

    def __add__(self, other):
        if not isinstance(other, (CycNumber, Fraction, int)):
            return NotImplemented
        order, a, b = self._common(other)
        size = max(len(a), len(b))
        a = a + [ZERO] * (size - len(a))
        for i, c in enumerate(b):
            a[i] += c
        return _make(order, a)

    __radd__ = __add__

    def __neg__(self):
        return CycNumber(self.order, tuple(-c for c in self.coeffs))

    def __sub__(self, other):
        if not isinstance(other, (CycNumber, Fraction, int)):
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (Fraction, int)):
            if other == 0:
                return ZERO
            return CycNumber(self.order, tuple(c * other for c in self.coeffs))
        if not isinstance(other, CycNumber):
            return NotImplemented
        order, a, b = self._common(other)
        prod = [ZERO] * (len(a) + len(b) - 1)
        for i, x in enumerate(a):
            if x:
                for j, y in enumerate(b):
                    if y:
                        prod[i + j] += x * y
        return _make(order, prod)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (Fraction, int)):
            if other == 0:
                raise DivisionByZero("Division of a cyclotomic number by zero")
            return self * (ONE / other)
        if not isinstance(other, CycNumber):
            return NotImplemented
        return self * other.inverse()

    def __rtruediv__(self, other):
        return self.inverse() * to_fraction(other)

    def __pow__(self, n):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return scalar_inverse(self) ** (-n)
        result, base = ONE, self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __eq__(self, other):
        if isinstance(other, CycNumber):
            order = _lcm(self.order, other.order)
            return self.lift(order) == other.lift(order)
        if isinstance(other, (Fraction, int)):
            # normalized elements are never rational
            return False
        return NotImplemented

    def __hash__(self):
        return hash(self.normalized_trace())

    def __str__(self):
        parts = []
        for i, c in enumerate(self.coeffs):
            if c == 0:
                continue
            base = "" if i == 0 else f"zeta{self.order}" + ("" if i == 1 else f"^{i}")
            if not base:
                parts.append(str(c))
            elif c == 1:
                parts.append(base)
            elif c == -1:
                parts.append(f"-{base}")
            else:
                parts.append(f"{c}*{base}")
        return "(" + " + ".join(parts).replace("+ -", "- ") + ")"

    def to_json(self):
        return {"order": self.order, "coeffs": [str(c) for c in self.coeffs]}


def scalar_inverse(value):
    if isinstance(value, CycNumber):
        return value.inverse()
    if value == 0:
        raise DivisionByZero("Division by the zero scalar")
    return ONE / value


def scalar_to_json(value):
    if isinstance(value, CycNumber):
        return value.to_json()
    return str(value)


def scalar_from_json(data):
    if isinstance(data, dict):
        return _make(int(data["order"]), [to_fraction(c) for c in data["coeffs"]])
    return to_fraction(data)


def format_scalar(value):
    return str(value)


# Monomials


@dataclass(frozen=True)
class Monomial:
    """
    scale * e^(2 pi i turn) * q^exponent * (1 + eps)^eps.

    The eps part is nonzero only while a limit z -> 1 is being taken.
    """

    turn: Fraction = ZERO
    exponent: Fraction = ZERO
    scale: Fraction = ONE
    eps: Fraction = ZERO

    def __post_init__(self):
        object.__setattr__(self, "turn", to_fraction(self.turn) % 1)
        object.__setattr__(self, "exponent", to_fraction(self.exponent))
        object.__setattr__(self, "scale", to_fraction(self.scale))
        object.__setattr__(self, "eps", to_fraction(self.eps))
        if self.scale == 0:
            raise ParameterError("A monomial needs a nonzero phase")

    def phase(self):
        return self.scale * CycNumber.root_of_unity(self.turn)

    def is_one(self):
        return self.turn == 0 and self.exponent == 0 and self.scale == 1 and self.eps == 0

    def is_unit_phase(self):
        """True when the constant part (phase and q-power) equals 1."""
        return self.turn == 0 and self.exponent == 0 and self.scale == 1

    def __mul__(self, other):
        if not isinstance(other, Monomial):
            return NotImplemented
        return Monomial(
            self.turn + other.turn,
            self.exponent + other.exponent,
            self.scale * other.scale,
            self.eps + other.eps,
        )

    def __truediv__(self, other):
        return self * other ** -1

    def __pow__(self, power):
        power = to_fraction(power)
        if power.denominator != 1 and self.scale != 1:
            raise ParameterError(f"Fractional power {power} of a monomial with scale {self.scale}")
        scale = self.scale ** int(power) if power.denominator == 1 else ONE
        return Monomial(self.turn * power, self.exponent * power, scale, self.eps * power)

    def without_eps(self):
        return Monomial(self.turn, self.exponent, self.scale)

    def to_series(self):
        if self.eps:
            raise ParameterError("Monomial carries an epsilon part; expand it with eps_power")
        return PuiseuxSeries.from_exponents({self.exponent: self.phase()})

    def __str__(self):
        return f"Monomial(turn={self.turn}, exponent={self.exponent}, scale={self.scale}, eps={self.eps})"


# Puiseux series


class PuiseuxSeries:
    """
    A truncated series sum c_e q^e with exponents in (1/ram)Z.

    Terms are stored by integer numerator over ``ram``; every stored term has
    exponent below ``trunc``. ``trunc == EXACT`` means the series is known
    completely.
    """

    __slots__ = ("ram", "_terms", "trunc")

    def __init__(self, ram=1, terms=None, trunc=EXACT):
        if not isinstance(trunc, Fraction) and trunc not in (EXACT, -EXACT):
            trunc = to_fraction(trunc)
        limit = trunc * ram
        kept = {k: c for k, c in (terms or {}).items() if not is_zero(c) and k < limit}
        g = reduce(math.gcd, kept, ram)
        if g > 1:
            kept = {k // g: c for k, c in kept.items()}
            ram //= g
        self.ram = ram
        self._terms = kept
        self.trunc = trunc

    @classmethod
    def from_exponents(cls, mapping, trunc=EXACT):
        mapping = {to_fraction(e): c for e, c in mapping.items()}
        ram = reduce(_lcm, (e.denominator for e in mapping), 1)
        terms = {}
        for e, c in mapping.items():
            k = e.numerator * (ram // e.denominator)
            terms[k] = terms.get(k, ZERO) + to_scalar(c)
        return cls(ram, terms, trunc)

    @classmethod
    def zero(cls, trunc=EXACT):
        return cls(1, {}, trunc)

    @classmethod
    def one(cls):
        return cls(1, {0: ONE})

    @classmethod
    def constant(cls, value):
        return cls(1, {0: to_scalar(value)})

    @classmethod
    def monomial(cls, exponent, coeff=ONE):
        return cls.from_exponents({exponent: coeff})

    # Inspection

    def items(self):
        """(exponent, coefficient) pairs in increasing exponent order."""
        for k in sorted(self._terms):
            yield Fraction(k, self.ram), self._terms[k]

    def __len__(self):
        return len(self._terms)

    def is_exact(self):
        return self.trunc == EXACT

    def is_zero(self):
        """Exactly zero, as opposed to merely empty below the truncation."""
        return not self._terms and self.trunc == EXACT

    def is_empty(self):
        return not self._terms

    def valuation(self):
        """Lowest exponent with a nonzero coefficient, or the truncation when none is known."""
        if not self._terms:
            return self.trunc
        return Fraction(min(self._terms), self.ram)

    def leading(self):
        if not self._terms:
            raise InsufficientTruncation(f"No known terms below q^{self.trunc}")
        k = min(self._terms)
        return Fraction(k, self.ram), self._terms[k]

    def coefficient(self, exponent):
        exponent = to_fraction(exponent)
        if exponent >= self.trunc:
            raise InsufficientTruncation(f"Coefficient of q^{exponent} lies beyond truncation q^{self.trunc}")
        if (exponent * self.ram).denominator != 1:
            return ZERO
        return self._terms.get(int(exponent * self.ram), ZERO)

    def is_rational(self):
        return not any(isinstance(c, CycNumber) for c in self._terms.values())

    def _lifted(self, ram):
        step = ram // self.ram
        if step == 1:
            return self._terms
        return {k * step: c for k, c in self._terms.items()}

    # Ring operations

    def __add__(self, other):
        if isinstance(other, EpsSeries):
            return NotImplemented
        if not isinstance(other, PuiseuxSeries):
            other = PuiseuxSeries.constant(other)
        ram = _lcm(self.ram, other.ram)
        terms = dict(self._lifted(ram))
        for k, c in other._lifted(ram).items():
            terms[k] = terms.get(k, ZERO) + c
        return PuiseuxSeries(ram, terms, min(self.trunc, other.trunc))

    __radd__ = __add__

    def __neg__(self):
        return PuiseuxSeries(self.ram, {k: -c for k, c in self._terms.items()}, self.trunc)

    def __sub__(self, other):
        if isinstance(other, EpsSeries):
            return NotImplemented
        if not isinstance(other, PuiseuxSeries):
            other = PuiseuxSeries.constant(other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, value):
        value = to_scalar(value)
        if is_zero(value):
            return PuiseuxSeries.zero(self.trunc)
        return PuiseuxSeries(self.ram, {k: c * value for k, c in self._terms.items()}, self.trunc)

    def __mul__(self, other):
        if isinstance(other, EpsSeries):
            return NotImplemented
        if not isinstance(other, PuiseuxSeries):
            return self.scale(other)
        if self.is_zero() or other.is_zero():
            return PuiseuxSeries.zero()
        trunc = min(self.trunc + other.valuation(), other.trunc + self.valuation())
        ram = _lcm(self.ram, other.ram)
        limit = trunc * ram
        a = sorted(self._lifted(ram).items())
        b = sorted(other._lifted(ram).items())
        out = {}
        for ka, ca in a:
            for kb, cb in b:
                k = ka + kb
                if k >= limit:
                    break
                out[k] = out.get(k, ZERO) + ca * cb
        return PuiseuxSeries(ram, out, trunc)

    __rmul__ = __mul__

    def inverse(self, trunc=None):
        """
        Multiplicative inverse. A series known through q^T with valuation v
        has an inverse known through q^(T - 2v); exact series with several
        terms need an explicit ``trunc``.
        """
        if self.is_zero():
            raise PoleError("Inverse of the zero series")
        if not self._terms:
            raise InsufficientTruncation(f"Inverse of a series with no known terms below q^{self.trunc}")
        v, lead = self.leading()
        target = self.trunc - 2 * v
        if trunc is not None:
            target = min(target, to_fraction(trunc))
        lead_inv = scalar_inverse(lead)
        if len(self._terms) == 1 and target == EXACT:
            return PuiseuxSeries.from_exponents({-v: lead_inv})
        if target == EXACT:
            raise InsufficientTruncation("Inverse of an exact series with several terms needs a truncation")

        # normalized a' = a / (lead q^v) = 1 + sum_{k>0} a'_k q^{k/ram}
        base = min(self._terms)
        rest = sorted((k - base, c * lead_inv) for k, c in self._terms.items() if k != base)
        steps = math.ceil((target + v) * self.ram)
        inv = {0: ONE}
        for n in range(1, steps):
            acc = ZERO
            for k, c in rest:
                if k > n:
                    break
                prev = inv.get(n - k)
                if prev is not None:
                    acc = acc + c * prev
            if not is_zero(acc):
                inv[n] = -acc
        terms = {n - base: c * lead_inv for n, c in inv.items()}
        return PuiseuxSeries(self.ram, terms, target)

    def __truediv__(self, other):
        if isinstance(other, EpsSeries):
            return NotImplemented
        if isinstance(other, PuiseuxSeries):
            return self * other.inverse()
        return self.scale(scalar_inverse(to_scalar(other)))

    def __pow__(self, n):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return self.inverse() ** (-n)
        result, base = PuiseuxSeries.one(), self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    pow = __pow__

    # Substitutions

    def substitute_scale(self, u):
        """q -> q^u for a positive rational u."""
        u = to_fraction(u)
        if u <= 0:
            raise ParameterError(f"Scale substitution needs u > 0, got {u}")
        ram = self.ram * u.denominator
        terms = {k * u.numerator: c for k, c in self._terms.items()}
        return PuiseuxSeries(ram, terms, self.trunc * u)

    def qderiv(self):
        """q d/dq"""
        return PuiseuxSeries(
            self.ram,
            {k: c * Fraction(k, self.ram) for k, c in self._terms.items()},
            self.trunc,
        )

    def shift(self, exponent):
        """Multiply by q^exponent."""
        exponent = to_fraction(exponent)
        ram = _lcm(self.ram, exponent.denominator)
        offset = exponent.numerator * (ram // exponent.denominator)
        terms = {k + offset: c for k, c in self._lifted(ram).items()}
        return PuiseuxSeries(ram, terms, self.trunc + exponent)

    def truncate(self, trunc):
        if trunc >= self.trunc:
            return self
        return PuiseuxSeries(self.ram, self._terms, trunc)

    # Comparison and output

    def matches(self, other, through):
        """True when both series agree on every exponent below ``through``."""
        through = to_fraction(through)
        for series in (self, other):
            if series.trunc < through:
                raise InsufficientTruncation(f"Series known only through q^{series.trunc}, need q^{through}")
        return self.truncate(through)._same_terms(other.truncate(through))

    def _same_terms(self, other):
        return dict(self.items()) == dict(other.items())

    def __eq__(self, other):
        if not isinstance(other, PuiseuxSeries):
            return NotImplemented
        return self.trunc == other.trunc and self._same_terms(other)

    def __hash__(self):
        return hash((self.trunc, tuple(self.items())))

    def pretty(self, max_terms=None):
        """Human-readable form like q^{1/6}(1 + 4q + 10q^2 + O(q^6))."""
        items = list(self.items())
        if max_terms is not None:
            items = items[:max_terms]
        lead = items[0][0] if items else ZERO
        body = []
        for e, c in items:
            e = e - lead
            if e == 0:
                power = ""
            elif e == 1:
                power = "q"
            else:
                power = f"q^{e}" if e.denominator == 1 and e > 0 else f"q^{{{e}}}"
            coeff = format_scalar(c)
            if power and c == 1:
                term = power
            elif power and c == -1:
                term = f"-{power}"
            else:
                term = f"{coeff}{power}"
            body.append(term)
        if self.trunc != EXACT:
            rel = self.trunc - lead
            body.append(f"O(q^{rel})" if rel.denominator == 1 else f"O(q^{{{rel}}})")
        inner = " + ".join(body).replace("+ -", "- ") or "0"
        if lead == 0:
            return inner
        prefix = f"q^{lead}" if lead.denominator == 1 else f"q^{{{lead}}}"
        return f"{prefix}({inner})"

    def __repr__(self):
        return f"PuiseuxSeries({self.pretty()})"

    def to_json(self):
        return {
            "ram": self.ram,
            "trunc": "exact" if self.trunc == EXACT else str(self.trunc),
            "terms": [[str(e), scalar_to_json(c)] for e, c in self.items()],
        }

    @classmethod
    def from_json(cls, data):
        trunc = EXACT if data["trunc"] == "exact" else to_fraction(data["trunc"])
        series = cls.from_exponents(
            {to_fraction(e): scalar_from_json(c) for e, c in data["terms"]},
            trunc,
        )
        return series


def expand_geometric(m, trunc):
    """1/(1 - m) for a monomial m, expanded with exponents bounded below."""
    if m.eps:
        raise ParameterError("expand_geometric works on monomials without epsilon part")
    if m.exponent > 0:
        return _geometric_tail(m, 0, trunc)
    if m.exponent < 0:
        return -_geometric_tail(m ** -1, 1, trunc)
    phase = m.phase()
    if phase == 1:
        raise PoleError("1/(1 - m) at m = 1")
    return PuiseuxSeries.constant(scalar_inverse(ONE - phase))


def geometric_ratio(m, trunc):
    """m/(1 - m) expanded with exponents bounded below."""
    if m.exponent > 0:
        return _geometric_tail(m, 1, trunc)
    if m.exponent < 0:
        return -_geometric_tail(m ** -1, 0, trunc)
    phase = m.phase()
    if phase == 1:
        raise PoleError("m/(1 - m) at m = 1")
    return PuiseuxSeries.constant(phase * scalar_inverse(ONE - phase))


def _geometric_tail(m, start, trunc):
    # sum_{j >= start} m^j for a monomial with positive exponent
    terms = {}
    phase = m.phase()
    j = start
    while j * m.exponent < trunc:
        e = j * m.exponent
        terms[e] = terms.get(e, ZERO) + phase ** j
        j += 1
    return PuiseuxSeries.from_exponents(terms, trunc)


# Epsilon expansions


def binomial(c, k):
    """Generalized binomial coefficient C(c, k) for rational c."""
    result = ONE
    for i in range(k):
        result = result * (c - i) / (i + 1)
    return result


class EpsSeries:
    """
    A truncated expansion sum_k eps^k A_k with Puiseux coefficients.

    ``coeffs`` maps eps-powers (possibly negative) to coefficients; an absent
    key is an exact zero, a present key with no known terms is only zero
    below its truncation. Coefficients at eps-powers >= ``prec`` are unknown.
    ``floor`` bounds the q-valuation of every coefficient from below, the
    unknown ones included.
    """

    __slots__ = ("coeffs", "prec", "floor")

    def __init__(self, coeffs=None, prec=EXACT, floor=None):
        kept = {}
        for k, series in (coeffs or {}).items():
            if k < prec and not series.is_zero():
                kept[k] = series
        self.coeffs = kept
        self.prec = prec
        if floor is None:
            default = EXACT if prec == EXACT else -EXACT
            floor = min((s.valuation() for s in kept.values()), default=default)
        self.floor = floor

    @classmethod
    def constant(cls, series):
        if not isinstance(series, PuiseuxSeries):
            series = PuiseuxSeries.constant(series)
        return cls({0: series})

    @classmethod
    def zero(cls):
        return cls({})

    def is_zero(self):
        return not self.coeffs and self.prec == EXACT

    def nonempty_keys(self):
        return sorted(k for k, s in self.coeffs.items() if not s.is_empty())

    def valuation(self):
        """Lowest eps-power with known nonzero terms; the precision when there is none."""
        keys = self.nonempty_keys()
        return keys[0] if keys else self.prec

    def coefficient(self, k):
        if k >= self.prec:
            raise InsufficientEpsDegree(f"eps^{k} lies beyond the expansion degree")
        return self.coeffs.get(k, PuiseuxSeries.zero())

    def __add__(self, other):
        if not isinstance(other, EpsSeries):
            other = EpsSeries.constant(other)
        prec = min(self.prec, other.prec)
        coeffs = dict(self.coeffs)
        for k, s in other.coeffs.items():
            coeffs[k] = coeffs[k] + s if k in coeffs else s
        return EpsSeries(coeffs, prec, min(self.floor, other.floor))

    __radd__ = __add__

    def __neg__(self):
        return EpsSeries({k: -s for k, s in self.coeffs.items()}, self.prec, self.floor)

    def __sub__(self, other):
        if not isinstance(other, EpsSeries):
            other = EpsSeries.constant(other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, value):
        value = to_scalar(value)
        if is_zero(value):
            return EpsSeries.zero()
        return EpsSeries({k: s.scale(value) for k, s in self.coeffs.items()}, self.prec, self.floor)

    def __mul__(self, other):
        if isinstance(other, PuiseuxSeries):
            other = EpsSeries.constant(other)
        elif not isinstance(other, EpsSeries):
            return self.scale(other)
        if self.is_zero() or other.is_zero():
            return EpsSeries.zero()
        prec = min(self.prec + other.valuation(), other.prec + self.valuation())
        coeffs = {}
        for i, a in self.coeffs.items():
            for j, b in other.coeffs.items():
                if i + j >= prec:
                    continue
                product = a * b
                coeffs[i + j] = coeffs[i + j] + product if i + j in coeffs else product
        # known-empty coefficients times the unknown tail of the other factor
        for left, right in ((self, other), (other, self)):
            if right.prec == EXACT:
                continue
            for i, a in left.coeffs.items():
                if not a.is_empty():
                    continue
                cap = a.trunc + right.floor
                for k in range(i + right.prec, prec if prec != EXACT else i + right.prec):
                    current = coeffs.get(k, PuiseuxSeries.zero())
                    coeffs[k] = current.truncate(cap)
        return EpsSeries(coeffs, prec, self.floor + other.floor)

    __rmul__ = __mul__

    def inverse(self, degree=None):
        """
        Inverse as a Laurent expansion in eps. With leading eps-power v and
        precision p the result is known below eps^(p - 2v).
        """
        keys = self.nonempty_keys()
        if not keys:
            if self.prec == EXACT:
                raise PoleError("Inverse of the zero expansion")
            raise InsufficientEpsDegree(f"Expansion vanishes through eps^{self.prec - 1}")
        v = keys[0]
        if any(k < v for k in self.coeffs):
            raise InsufficientTruncation(
                f"eps-coefficients below eps^{v} are only known to vanish to finite q-order"
            )
        lead = self.coeffs[v]
        w = lead.valuation()
        if self.prec == EXACT and len(self.coeffs) == 1:
            return EpsSeries({-v: lead.inverse()}, EXACT, -w)
        if self.prec == EXACT:
            if degree is None:
                raise InsufficientEpsDegree("Inverse of an exact expansion needs a degree bound")
            prec = v + degree + 1
        else:
            prec = self.prec
        lead_inv = lead.inverse()
        out = {-v: lead_inv}
        for n in range(1, prec - v):
            acc = None
            for k in range(1, n + 1):
                a = self.coeffs.get(v + k)
                b = out.get(-v + n - k)
                if a is None or b is None:
                    continue
                term = a * b
                acc = term if acc is None else acc + term
            if acc is not None:
                out[-v + n] = -(lead_inv * acc)
        floor = -w if self.floor >= w else -EXACT
        return EpsSeries(out, prec - 2 * v, floor)

    def __truediv__(self, other):
        if not isinstance(other, EpsSeries):
            if isinstance(other, PuiseuxSeries):
                other = EpsSeries.constant(other)
            else:
                return self.scale(scalar_inverse(to_scalar(other)))
        return self * other.inverse()

    def __pow__(self, n):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return self.inverse() ** (-n)
        result = EpsSeries.constant(PuiseuxSeries.one())
        for _ in range(n):
            result = result * self
        return result

    def limit(self):
        """The eps^0 coefficient, provided no negative power survives."""
        if self.prec <= 0:
            raise InsufficientEpsDegree("The eps^0 coefficient lies beyond the expansion degree")
        cap = EXACT
        for k, series in self.coeffs.items():
            if k >= 0:
                continue
            if not series.is_empty():
                e, c = series.leading()
                raise PoleError(f"Pole of order {-k} in eps survives the limit (coefficient {c} at q^{e})")
            cap = min(cap, series.trunc)
        result = self.coeffs.get(0, PuiseuxSeries.zero())
        return result.truncate(cap)

    def __repr__(self):
        body = ", ".join(f"eps^{k}: {s.pretty(4)}" for k, s in sorted(self.coeffs.items()))
        return f"EpsSeries({{{body}}}, prec={self.prec})"


def eps_power(c, degree):
    """(1 + eps)^c through eps^degree; exact when c is a nonnegative integer."""
    c = to_fraction(c)
    exact = c.denominator == 1 and 0 <= c <= degree
    top = int(c) if exact else degree
    coeffs = {k: PuiseuxSeries.constant(binomial(c, k)) for k in range(top + 1)}
    return EpsSeries(coeffs, EXACT if exact else degree + 1, ZERO)


def eps_from_terms(terms, degree, trunc, floor=None, vanishing=()):
    """
    Expand sum coeff * q^exponent * (1 + eps)^power, given as (coeff,
    exponent, power) triples, through eps^degree. Keys listed in
    ``vanishing`` are known to be exactly zero.
    """
    terms = list(terms)
    if all(power == 0 for _, _, power in terms):
        constant = {}
        for coeff, exponent, _ in terms:
            constant[exponent] = constant.get(exponent, ZERO) + coeff
        series = PuiseuxSeries.from_exponents(constant, trunc)
        if 0 in vanishing:
            series = PuiseuxSeries.zero()
        return EpsSeries({0: series}, EXACT, series.valuation() if floor is None else floor)
    buckets = [dict() for _ in range(degree + 1)]
    low = EXACT
    for coeff, exponent, power in terms:
        low = min(low, exponent)
        for k in range(degree + 1):
            b = binomial(power, k)
            if b:
                bucket = buckets[k]
                bucket[exponent] = bucket.get(exponent, ZERO) + coeff * b
    coeffs = {}
    for k, bucket in enumerate(buckets):
        if k in vanishing:
            continue
        coeffs[k] = PuiseuxSeries.from_exponents(bucket, trunc)
    return EpsSeries(coeffs, degree + 1, low if floor is None else floor)


def eps_limit_ratio(numer, denom, degree=None):
    """Limit eps -> 0 of numer/denom."""
    return (numer * denom.inverse(degree)).limit()


# Exact linear algebra


def solve_linear(rows, rhs):
    """
    Solve rows * x = rhs exactly by Gauss-Jordan elimination over Fractions
    or cyclotomic numbers. Raises UnderdeterminedSystem when the solution is
    not unique and InconsistentSystem when there is none.
    """
    n_cols = len(rows[0]) if rows else 0
    aug = [list(row) + [value] for row, value in zip(rows, rhs)]
    pivots = []
    r = 0
    for col in range(n_cols):
        pivot = next((i for i in range(r, len(aug)) if not is_zero(aug[i][col])), None)
        if pivot is None:
            continue
        aug[r], aug[pivot] = aug[pivot], aug[r]
        inv = scalar_inverse(aug[r][col])
        aug[r] = [x * inv for x in aug[r]]
        for i in range(len(aug)):
            if i != r and not is_zero(aug[i][col]):
                factor = aug[i][col]
                aug[i] = [x - factor * y for x, y in zip(aug[i], aug[r])]
        pivots.append(col)
        r += 1
    for row in aug[r:]:
        if not is_zero(row[-1]):
            raise InconsistentSystem("Linear system has no solution")
    if len(pivots) < n_cols:
        raise UnderdeterminedSystem(f"Linear system has rank {len(pivots)} < {n_cols}")
    solution = [ZERO] * n_cols
    for i, col in enumerate(pivots):
        solution[col] = aug[i][-1]
    return solution


def matrix_inverse(rows):
    size = len(rows)
    columns = []
    for j in range(size):
        unit = [ONE if i == j else ZERO for i in range(size)]
        try:
            columns.append(solve_linear(rows, unit))
        except MathError as exc:
            raise DivisionByZero(f"Singular matrix: {exc}") from exc
    return [[columns[j][i] for j in range(size)] for i in range(size)]


def matrix_product(a, b):
    return [
        [sum((a[i][k] * b[k][j] for k in range(len(b))), ZERO) for j in range(len(b[0]))]
        for i in range(len(a))
    ]
