"""
Normal ordering in the universal enveloping algebra of affine sl2.

Vectors of a Verma module are PBW elements: dicts from monomials to Fractions,
where a monomial is a tuple of (generator, mode) factors read left to right and
applied right to left to the highest-weight vector. The normal form sorts the
factors by mode, ties broken f < h < e.
"""

import json
import logging
import os
import re
from dataclasses import dataclass, field
from fractions import Fraction

from sympy import QQ, Poly, Symbol

from affine_twist.algebra import ONE, ZERO, binomial, to_fraction
from affine_twist.exceptions import ParameterError, TranscriptionError
from affine_twist.settings import DATA_DIR, PBW_DEPTH_BOUND, UL0_PARAMETER_BOUND

logger = logging.getLogger(__name__)

GENERATORS = ("f", "h", "e")
ROOT = {"e": 2, "h": 0, "f": -2}

# [x, y] in sl2 and the invariant form <x, y>
_LIE = {
    ("e", "f"): ((1, "h"),),
    ("f", "e"): ((-1, "h"),),
    ("h", "e"): ((2, "e"),),
    ("e", "h"): ((-2, "e"),),
    ("h", "f"): ((-2, "f"),),
    ("f", "h"): ((2, "f"),),
}
_FORM = {("e", "f"): 1, ("f", "e"): 1, ("h", "h"): 2}

HIGHEST_WEIGHT_RAISING = frozenset({("e", 0), ("f", 1)})
CONTRAGREDIENT_RAISING = frozenset({("f", 0), ("e", 1)})
VACUUM_RAISING = frozenset({("e", 1), ("f", 1), ("h", 1)})

X = Symbol("x")


def _key(factor):
    gen, mode = factor
    return (mode, GENERATORS.index(gen))


def bracket(x, y):
    """[x_m, y_n] as ((coefficient, generator, mode), ...) plus the coefficient of K."""
    (g1, m), (g2, n) = x, y
    terms = tuple((c, g, m + n) for c, g in _LIE.get((g1, g2), ()))
    central = m * _FORM.get((g1, g2), 0) if m + n == 0 else 0
    return terms, central


def charge(monomial):
    return sum(ROOT[g] for g, _ in monomial)


def depth(monomial):
    return -sum(mode for _, mode in monomial)


# PBW elements


@dataclass(frozen=True)
class PBWElement:
    terms: dict = field(default_factory=dict)

    @classmethod
    def from_terms(cls, pairs):
        out = {}
        for mono, c in pairs:
            c = out.get(mono, ZERO) + to_fraction(c)
            if c:
                out[mono] = c
            else:
                out.pop(mono, None)
        return cls(out)

    @classmethod
    def highest_weight(cls):
        return cls({(): ONE})

    def is_zero(self):
        return not self.terms

    def __add__(self, other):
        return PBWElement.from_terms(list(self.terms.items()) + list(other.terms.items()))

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c):
        c = to_fraction(c)
        if c == 0:
            return PBWElement()
        return PBWElement({m: v * c for m, v in self.terms.items()})

    def __eq__(self, other):
        if not isinstance(other, PBWElement):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def charges(self):
        return {charge(m) for m in self.terms}

    def depths(self):
        return {depth(m) for m in self.terms}

    def is_homogeneous(self):
        return len(self.charges()) <= 1 and len(self.depths()) <= 1

    def __str__(self):
        return format_pbw(self)


class VermaModule:
    """
    The Verma module of highest weight ``hw`` at level ``level``. With
    ``vacuum`` set, f_0 also annihilates the highest-weight vector, which
    gives the vacuum module V^k(sl2).
    """

    def __init__(self, level, hw=ZERO, vacuum=False):
        self.level = to_fraction(level)
        self.hw = to_fraction(hw)
        self.vacuum = vacuum
        if vacuum and self.hw:
            raise ParameterError(f"The vacuum module has highest weight 0, got {self.hw}")
        self._cache = {}

    @property
    def default_raising(self):
        return VACUUM_RAISING if self.vacuum else HIGHEST_WEIGHT_RAISING

    def creates(self, factor):
        gen, mode = factor
        return mode < 0 or (mode == 0 and gen == "f" and not self.vacuum)

    def _on_highest_weight(self, factor):
        gen, mode = factor
        if mode > 0 or (mode == 0 and gen == "e"):
            return {}
        if mode == 0 and gen == "h":
            return {(): self.hw} if self.hw else {}
        if self.creates(factor):
            return {(factor,): ONE}
        return {}

    def act(self, factor, monomial):
        """factor applied to a normal-ordered monomial, as a dict in normal form."""
        cache_key = (factor, monomial)
        if cache_key in self._cache:
            return self._cache[cache_key]
        if not monomial:
            out = self._on_highest_weight(factor)
        elif self.creates(factor) and _key(factor) <= _key(monomial[0]):
            out = {(factor,) + monomial: ONE}
        else:
            # x y R = y (x R) + [x, y] R
            head, rest = monomial[0], monomial[1:]
            out = {}
            for mono, c in self.act(factor, rest).items():
                for mono2, c2 in self.act(head, mono).items():
                    out[mono2] = out.get(mono2, ZERO) + c * c2
            terms, central = bracket(factor, head)
            for c, gen, mode in terms:
                for mono2, c2 in self.act((gen, mode), rest).items():
                    out[mono2] = out.get(mono2, ZERO) + c * c2
            if central:
                out[rest] = out.get(rest, ZERO) + central * self.level
            out = {m: c for m, c in out.items() if c}
        self._cache[cache_key] = out
        return out

    def apply_mode(self, gen, mode, element):
        if gen not in ROOT:
            raise ParameterError(f"Unknown generator {gen!r}")
        pairs = []
        for mono, c in element.terms.items():
            pairs.extend((m2, c * c2) for m2, c2 in self.act((gen, mode), mono).items())
        return PBWElement.from_terms(pairs)

    def apply_word(self, word, element=None):
        """Apply factors right to left, the way a written product acts."""
        element = element if element is not None else PBWElement.highest_weight()
        for gen, mode in reversed(word):
            element = self.apply_mode(gen, mode, element)
        return element

    def describe(self):
        if self.vacuum:
            return f"|vac: level={self.level}>"
        return f"|hw: level={self.level}, j={self.hw}>"


def apply_mode(gen, mode, element, level, hw=ZERO):
    return VermaModule(level, hw).apply_mode(gen, mode, element)


def is_singular(element, module, raising=None):
    """True iff every raising operator annihilates the homogeneous element."""
    if not element.is_homogeneous():
        raise ParameterError(
            f"Singular-vector check needs a homogeneous vector; charges {sorted(element.charges())}, "
            f"depths {sorted(element.depths())}"
        )
    raising = module.default_raising if raising is None else raising
    for gen, mode in sorted(raising):
        image = module.apply_mode(gen, mode, element)
        if not image.is_zero():
            logger.info(f"{gen}_{mode} does not annihilate the vector: {format_pbw(image)}")
            return False
    return True


# Text format


_STATE = re.compile(
    r"\|\s*(?:hw:\s*level\s*=\s*(?P<level>[-+/\d]+)\s*,\s*j\s*=\s*(?P<hw>[-+/\d]+)"
    r"|vac:\s*level\s*=\s*(?P<vlevel>[-+/\d]+))\s*>"
)
_TERM = re.compile(r"\s*([+-])?\s*(?:\(?\s*([-+]?\d+(?:/\d+)?)\s*\)?\s*\*?)?\s*((?:[ehf]\[-?\d+\](?:\^\d+)?)*)")
_FACTOR = re.compile(r"([ehf])\[(-?\d+)\](?:\^(\d+))?")


def parse_state(text):
    """Split '<terms> <state>' into (module, element)."""
    match = _STATE.search(text)
    if match is None:
        raise ParameterError(f"No highest-weight state in {text!r}")
    if match.group("vlevel") is not None:
        module = VermaModule(Fraction(match.group("vlevel")), vacuum=True)
    else:
        module = VermaModule(Fraction(match.group("level")), Fraction(match.group("hw")))
    return module, parse_pbw(text[: match.start()], module)


def parse_pbw(text, module):
    """Parse a sum of words like '(-1/3)*e[-1]h[-1]' and normal-order it in the module."""
    text = text.strip()
    if not text or text == "0":
        return PBWElement()
    total = PBWElement()
    pos = 0
    while pos < len(text):
        match = _TERM.match(text, pos)
        if match is None or match.end() == pos:
            raise ParameterError(f"Cannot parse PBW text at {text[pos:]!r}")
        sign, coefficient, word = match.groups()
        if coefficient is None and not word:
            raise ParameterError(f"Empty term at {text[pos:]!r}")
        c = Fraction(coefficient) if coefficient else ONE
        if sign == "-":
            c = -c
        factors = []
        for gen, mode, power in _FACTOR.findall(word):
            factors.extend([(gen, int(mode))] * int(power or 1))
        total = total + module.apply_word(factors).scale(c)
        pos = match.end()
        while pos < len(text) and text[pos].isspace():
            pos += 1
    return total


def _format_word(monomial):
    parts = []
    i = 0
    while i < len(monomial):
        j = i
        while j < len(monomial) and monomial[j] == monomial[i]:
            j += 1
        gen, mode = monomial[i]
        parts.append(f"{gen}[{mode}]" + (f"^{j - i}" if j - i > 1 else ""))
        i = j
    return "".join(parts)


def format_pbw(element, module=None):
    if element.is_zero():
        text = "0"
    else:
        pieces = []
        for mono in sorted(element.terms, key=lambda m: (len(m), [_key(f) for f in m])):
            c = element.terms[mono]
            word = _format_word(mono)
            if not word:
                pieces.append(f"({c})")
            elif c == 1:
                pieces.append(word)
            else:
                pieces.append(f"({c})*{word}")
        text = " + ".join(pieces)
    return f"{text} {module.describe()}" if module is not None else text


def load_vectors(path=None):
    """Stored vectors by name: (module, element, expected singularity or None)."""
    path = path or os.path.join(DATA_DIR, "singular_vectors.json")
    with open(path, "r") as f:
        data = json.load(f)
    out = {}
    for name, entry in data["vectors"].items():
        module, element = parse_state(f"{entry['vector']} {entry['state']}")
        out[name] = (module, element, entry.get("singular"))
    return out


def golden_vector(name, path=None):
    vectors = load_vectors(path)
    if name not in vectors:
        raise ParameterError(f"No stored vector {name!r}; known: {sorted(vectors)}")
    return vectors[name]


# Twisted Zhu algebra of the vacuum module


def _qq(c):
    c = to_fraction(c)
    return QQ(c.numerator, c.denominator)


class TwistedZhuReducer:
    """
    Image of vacuum-module vectors in the Zhu algebra twisted by e^(pi i h_0 / 2),
    identified with Q[x] through x = [h(-1)]. The leftmost factor u(n) is removed by

      e, f:      u(n) w = -sum_{i >= 1} C(1/2, i) u(n + i) w
      h, n <= -2: h(n) w = -h(n + 1) w
      h, n = -1:  [h(-1) w] = (x - h_0-weight of w) [w]
    """

    def __init__(self, level):
        self.module = VermaModule(level, vacuum=True)
        self._images = {}
        self._zero = Poly(0, X, domain=QQ)
        self._x = Poly(X, X, domain=QQ)

    def image(self, element):
        if element.charges() - {0}:
            raise ParameterError(f"Twisted Zhu image needs h_0-weight 0, got charges {sorted(element.charges())}")
        deepest = max(element.depths(), default=0)
        if deepest > PBW_DEPTH_BOUND:
            raise ParameterError(f"Vector depth {deepest} exceeds the bound {PBW_DEPTH_BOUND}")
        return self._sum_images(element.terms)

    def _sum_images(self, terms):
        total = self._zero
        for mono, c in terms.items():
            total = total + self._monomial(mono).mul_ground(_qq(c))
        return total

    def _monomial(self, mono):
        if mono in self._images:
            return self._images[mono]
        if not mono:
            result = Poly(1, X, domain=QQ)
        else:
            (gen, mode), rest = mono[0], mono[1:]
            if gen in ("e", "f"):
                result = self._zero
                i = 1
                while mode + i <= depth(rest):
                    shifted = self._sum_images(self.module.act((gen, mode + i), rest))
                    result = result - shifted.mul_ground(_qq(binomial(Fraction(1, 2), i)))
                    i += 1
            elif mode <= -2:
                result = -self._sum_images(self.module.act(("h", mode + 1), rest))
            else:
                inner = self._monomial(rest)
                result = self._x * inner - inner.mul_ground(_qq(charge(rest)))
        self._images[mono] = result
        return result


def zhu_twisted_image(element, lvl):
    """The twisted Zhu image of a weight-zero vacuum vector as a polynomial in x."""
    level = getattr(lvl, "level", lvl)
    return TwistedZhuReducer(level).image(element)


# U(L0): the sl2 spanned by T+ = e(0), T- = f(-1), T0 = h(-1) modulo B0


@dataclass(frozen=True)
class UL0Element:
    """Sum of c T-^a T0^b T+^d, stored as {(a, b, d): c}."""

    terms: dict = field(default_factory=dict)

    @classmethod
    def from_terms(cls, pairs):
        out = {}
        for mono, c in pairs:
            c = out.get(mono, ZERO) + c
            if c:
                out[mono] = c
            else:
                out.pop(mono, None)
        return cls(out)

    @classmethod
    def monomial(cls, a=0, b=0, d=0, c=ONE):
        return cls({(a, b, d): to_fraction(c)}) if c else cls()

    @classmethod
    def t0_polynomial(cls, coeffs, d=0):
        """sum_b coeffs[b] T0^b T+^d."""
        return cls.from_terms(((0, b, d), to_fraction(c)) for b, c in enumerate(coeffs) if c)

    def __add__(self, other):
        return UL0Element.from_terms(list(self.terms.items()) + list(other.terms.items()))

    def scale(self, c):
        return UL0Element.from_terms((m, v * c) for m, v in self.terms.items())

    def left_t_minus(self, power=1):
        return UL0Element({(a + power, b, d): c for (a, b, d), c in self.terms.items()})

    def left_t0(self):
        pairs = []
        for (a, b, d), c in self.terms.items():
            pairs.append(((a, b + 1, d), c))
            if a:
                pairs.append(((a, b, d), 2 * a * c))
        return UL0Element.from_terms(pairs)

    def left_t_plus(self):
        pairs = []
        for (a, b, d), c in self.terms.items():
            # T+ T0^b = (T0 + 2)^b T+
            for i in range(b + 1):
                pairs.append(((a, i, d + 1), c * binomial(b, i) * 2 ** (b - i)))
            if a:
                # T+ T-^a = T-^a T+ + T-^(a-1) (a T0 + a(a - 1))
                pairs.append(((a - 1, b + 1, d), c * a))
                pairs.append(((a - 1, b, d), c * a * (a - 1)))
        return UL0Element.from_terms(pairs)

    def __mul__(self, other):
        total = UL0Element()
        for (a, b, d), c in self.terms.items():
            piece = other
            for _ in range(d):
                piece = piece.left_t_plus()
            for _ in range(b):
                piece = piece.left_t0()
            total = total + piece.left_t_minus(a).scale(c)
        return total

    def modulo_t_minus(self):
        """Drop the right ideal T- U(L0)."""
        return UL0Element({m: c for m, c in self.terms.items() if m[0] == 0})

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for (a, b, d), c in sorted(self.terms.items()):
            word = "".join(
                f"{name}^{k}" if k > 1 else name
                for name, k in (("T-", a), ("T0", b), ("T+", d))
                if k
            )
            parts.append(f"({c})*{word}" if word else f"({c})")
        return " + ".join(parts)


def g_alpha(alpha):
    """G_alpha = T- T+ - alpha T0 + alpha (alpha + 1)."""
    alpha = to_fraction(alpha)
    return UL0Element.from_terms(
        [((1, 0, 1), ONE), ((0, 1, 0), -alpha), ((0, 0, 0), alpha * (alpha + 1))]
    )


def _product(elements):
    total = UL0Element.monomial()
    for element in elements:
        total = total * element
    return total


def _check_ul0_parameters(a, b, d, n, kappa, lvl):
    for name, value in (("a", a), ("b", b), ("d", d), ("n", n), ("kappa", kappa)):
        if value < 0 or value > UL0_PARAMETER_BOUND:
            raise ParameterError(f"{name}={value} outside [0, {UL0_PARAMETER_BOUND}]")
    if not 1 <= n <= lvl.p - 1 or not 1 <= kappa <= lvl.q:
        raise ParameterError(f"(n, kappa)=({n}, {kappa}) is not an admissible label at {lvl}")


def projected_e1(n, kappa, lvl):
    """P(E_1(n, kappa)) = prod_{r=1..n} prod_{s=1..kappa-1} G_{-r-st} T+^n."""
    factors = [g_alpha(-r - s * lvl.t) for r in range(1, n + 1) for s in range(1, kappa)]
    return _product(factors) * UL0Element.monomial(d=n)


def projected_e2(n, kappa, lvl):
    """P(E_2(n, kappa)) = prod_{r=0..p-n-1} prod_{s=1..q-kappa} G_{r+st} T-^(p-n)."""
    factors = [g_alpha(r + s * lvl.t) for r in range(lvl.p - n) for s in range(1, lvl.q - kappa + 1)]
    return _product(factors) * UL0Element.monomial(a=lvl.p - n)


def ul0_reduce(a, b, d, n, kappa, lvl):
    """
    T-^a (T0^b T+^d P(E_i) mod T- U(L0)) for i = 1, 2, by direct expansion.
    Returns the pair of reductions.
    """
    _check_ul0_parameters(a, b, d, n, kappa, lvl)
    prefix = UL0Element.monomial(b=b, d=d)
    out = []
    for projected in (projected_e1(n, kappa, lvl), projected_e2(n, kappa, lvl)):
        out.append((prefix * projected).modulo_t_minus().left_t_minus(a))
    return tuple(out)


def _linear_factor_product(factors):
    """prod (u T0 + v) as an ascending coefficient list in T0."""
    coeffs = [ONE]
    for u, v in factors:
        nxt = [ZERO] * (len(coeffs) + 1)
        for i, c in enumerate(coeffs):
            nxt[i] += c * v
            nxt[i + 1] += c * u
        coeffs = nxt
    return coeffs


def _shift_by_t0_power(coeffs, b):
    return [ZERO] * b + list(coeffs)


def appen1_closed(a, b, d, n, kappa, lvl):
    """T-^a prod_{r,s} (r + st + d)(T0 + r + st + d - 1) T0^b T+^(n+d)."""
    _check_ul0_parameters(a, b, d, n, kappa, lvl)
    factors = []
    for r in range(1, n + 1):
        for s in range(1, kappa):
            c = r + s * lvl.t + d
            factors.append((c, c * (c - 1)))
    coeffs = _shift_by_t0_power(_linear_factor_product(factors), b)
    return UL0Element.t0_polynomial(coeffs, d=n + d).left_t_minus(a)


def appen2_closed(a, b, d, n, kappa, lvl):
    """
    For d >= p - n, with m = d - (p - n):
    T-^a prod_{r=1..p-n} prod_{s=0..q-kappa} (st - m - r)(-T0 + st - m - r + 1) T0^b T+^m.
    For d < p - n everything lies in T- U(L0) and the reduction vanishes.
    """
    _check_ul0_parameters(a, b, d, n, kappa, lvl)
    if d < lvl.p - n:
        return UL0Element()
    m = d - (lvl.p - n)
    factors = []
    for r in range(1, lvl.p - n + 1):
        for s in range(lvl.q - kappa + 1):
            c = s * lvl.t - m - r
            factors.append((-c, c * (c + 1)))
    coeffs = _shift_by_t0_power(_linear_factor_product(factors), b)
    return UL0Element.t0_polynomial(coeffs, d=m).left_t_minus(a)


def check_reduction_identities(a, b, d, n, kappa, lvl):
    """Compare the direct reductions with both closed forms; raise on a mismatch."""
    direct1, direct2 = ul0_reduce(a, b, d, n, kappa, lvl)
    closed1, closed2 = appen1_closed(a, b, d, n, kappa, lvl), appen2_closed(a, b, d, n, kappa, lvl)
    for which, direct, closed in (("E1", direct1, closed1), ("E2", direct2, closed2)):
        if direct != closed:
            raise TranscriptionError(
                f"{which} reduction at (a,b,d,n,kappa)=({a},{b},{d},{n},{kappa}), {lvl}: "
                f"direct {direct} != closed form {closed}"
            )
    return direct1, direct2
