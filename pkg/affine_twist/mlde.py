"""
Modular linear differential equations.

An operator D^(k) + sum_r f_r D^(k-r) is stored as its order, its modular
group and the list of (derivative order, basis form, rational weight)
triples making up the f_r. Basis forms are named by strings:

  "E4", "E6", "E4^2", "E4E6", ...      products of Eisenstein series
  "Theta(i,j)"                         the Gamma^0(2) generators theta_bar
  "E4[-1;1]", "E4[1;-1]", ...          twisted Eisenstein brackets E_k[phi; theta]
"""

import json
import logging
import math
import os
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

from sympy import QQ, Symbol, expand, roots
from sympy.polys.matrices import DomainMatrix

from affine_twist.algebra import (
    EXACT,
    ONE,
    ZERO,
    Monomial,
    PuiseuxSeries,
    to_fraction,
)
from affine_twist.exceptions import (
    InconsistentSystem,
    InsufficientTruncation,
    ParameterError,
    UnderdeterminedSystem,
)
from affine_twist.modforms import eisenstein, theta_bar, twisted_eisenstein
from affine_twist.settings import DATA_DIR, DEFAULT_TRUNCATION, FIT_SAFETY_MARGIN

logger = logging.getLogger(__name__)

FULL_SL2Z = "full_SL2Z"
GAMMA0_2 = "Gamma0_2"
GROUPS = (FULL_SL2Z, GAMMA0_2)

_THETA_NAME = re.compile(r"^Theta\((\d+),(\d+)\)$")
_BRACKET_NAME = re.compile(r"^E(\d+)\[(-?1);(-?1)\]$")
_EISENSTEIN_NAME = re.compile(r"^(?:E4(?:\^(\d+))?)?(?:E6(?:\^(\d+))?)?$")

_A = Symbol("a")


# Basis forms


def eisenstein_monomial_name(a, b):
    parts = []
    if a:
        parts.append("E4" if a == 1 else f"E4^{a}")
    if b:
        parts.append("E6" if b == 1 else f"E6^{b}")
    return "".join(parts) or "1"


def theta_name(i, j):
    return f"Theta({min(i, j)},{max(i, j)})"


def basis_names(group, weight):
    """The monomial basis of holomorphic forms of the given weight."""
    if weight % 2 or weight <= 0:
        raise ParameterError(f"Basis weights are positive and even, got {weight}")
    if group == FULL_SL2Z:
        return [
            eisenstein_monomial_name(a, (weight - 4 * a) // 6)
            for a in range(weight // 4 + 1)
            if (weight - 4 * a) % 6 == 0
        ]
    if group == GAMMA0_2:
        r = weight // 2
        return [theta_name(i, r - i) for i in range(r // 2 + 1)]
    raise ParameterError(f"Unknown modular group {group!r}; expected one of {GROUPS}")


def basis_weight(name):
    match = _THETA_NAME.match(name)
    if match:
        return 2 * (int(match.group(1)) + int(match.group(2)))
    match = _BRACKET_NAME.match(name)
    if match:
        return int(match.group(1))
    match = _EISENSTEIN_NAME.match(name)
    if match and name:
        a = int(match.group(1) or 1) if "E4" in name else 0
        b = int(match.group(2) or 1) if "E6" in name else 0
        return 4 * a + 6 * b
    raise ParameterError(f"Unknown basis form {name!r}")


def _sign_turn(sign):
    return ZERO if int(sign) == 1 else Fraction(1, 2)


@lru_cache(maxsize=None)
def basis_series(name, trunc):
    """q-expansion of a named basis form through q^trunc."""
    trunc = to_fraction(trunc)
    match = _THETA_NAME.match(name)
    if match:
        return theta_bar(int(match.group(1)), int(match.group(2)), trunc)
    match = _BRACKET_NAME.match(name)
    if match:
        k, phi, theta = int(match.group(1)), match.group(2), match.group(3)
        return twisted_eisenstein(k, _sign_turn(phi), Monomial(turn=_sign_turn(theta)), trunc)
    match = _EISENSTEIN_NAME.match(name)
    if match and name:
        a = int(match.group(1) or 1) if "E4" in name else 0
        b = int(match.group(2) or 1) if "E6" in name else 0
        result = PuiseuxSeries.one()
        for k, n in ((4, a), (6, b)):
            if n:
                result = result * eisenstein(k, trunc) ** n
        return result.truncate(trunc)
    raise ParameterError(f"Unknown basis form {name!r}")


# Serre derivatives


def _form_trunc(f):
    if f.trunc == EXACT:
        return Fraction(DEFAULT_TRUNCATION)
    return f.trunc - min(f.valuation(), ZERO)


def serre_derivative(f, w):
    """q d/dq f + w E_2 f, with E_2 = -1/12 + 2q + ... ."""
    w = to_fraction(w)
    derivative = f.qderiv()
    if w == 0 or f.is_zero():
        return derivative
    e2 = eisenstein(2, _form_trunc(f))
    return derivative + (e2 * f).scale(w)


def _derivatives(f, k):
    tower = [f]
    for j in range(k):
        tower.append(serre_derivative(tower[-1], 2 * j))
    return tower


def d_power(f, k):
    """D^(k) f = d_(2k-2) ... d_(2) d_(0) f."""
    if k < 0:
        raise ParameterError(f"Derivative order must be nonnegative, got {k}")
    return _derivatives(f, k)[k]


# Operators


@dataclass(frozen=True)
class MLDETerm:
    at: int
    basis: str
    weight: Fraction

    def to_json(self):
        return {"at": self.at, "basis": self.basis, "weight": str(self.weight)}


@dataclass(frozen=True)
class MLDEOp:
    order: int
    group: str
    coeffs: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.order < 1:
            raise ParameterError(f"MLDE order must be positive, got {self.order}")
        for term in self.coeffs:
            if not 0 <= term.at < self.order:
                raise ParameterError(f"Term {term.basis} sits at D^({term.at}) outside an order-{self.order} operator")
            expected = 2 * (self.order - term.at)
            if basis_weight(term.basis) != expected:
                raise ParameterError(f"{term.basis} multiplies D^({term.at}) but has weight {basis_weight(term.basis)}, not {expected}")

    def weight_of(self, at, basis):
        return sum((t.weight for t in self.coeffs if t.at == at and t.basis == basis), ZERO)

    def nonzero_terms(self):
        return [t for t in self.coeffs if t.weight != 0]

    def constant_terms(self):
        """f_r(0) for r = 1..k."""
        out = {}
        for t in self.coeffs:
            r = self.order - t.at
            out[r] = out.get(r, ZERO) + t.weight * basis_series(t.basis, 1).coefficient(0)
        return out

    def __str__(self):
        parts = [f"D^({self.order})"]
        for t in self.nonzero_terms():
            sign = "-" if t.weight < 0 else "+"
            d = f" D^({t.at})" if t.at else ""
            parts.append(f"{sign} {abs(t.weight)} {t.basis}{d}")
        return " ".join(parts)

    def to_json(self):
        return {"order": self.order, "group": self.group, "coeffs": [t.to_json() for t in self.coeffs]}

    @classmethod
    def from_json(cls, data):
        terms = tuple(MLDETerm(int(c["at"]), c["basis"], to_fraction(c["weight"])) for c in data["coeffs"])
        return cls(int(data["order"]), data["group"], terms)


def mlde_apply(op, f):
    tower = _derivatives(f, op.order)
    result = tower[op.order]
    trunc = _form_trunc(f)
    for term in op.nonzero_terms():
        result = result + (basis_series(term.basis, trunc) * tower[term.at]).scale(term.weight)
    return result.truncate(f.trunc)


def mlde_verify(op, f, through):
    """True iff op annihilates f below q^through."""
    through = to_fraction(through)
    residual = mlde_apply(op, f)
    if residual.trunc < through:
        raise InsufficientTruncation(f"Residual known through q^{residual.trunc}, need q^{through}")
    offending = [(e, c) for e, c in residual.items() if e < through]
    if offending:
        e, c = offending[0]
        logger.debug(f"{op} leaves {c} q^{e} on the series")
    return not offending


def _unknowns(k, group):
    return [(k - r, name) for r in range(1, k + 1) for name in _safe_basis(group, 2 * r)]


def _safe_basis(group, weight):
    if group == FULL_SL2Z and weight == 2:
        return []
    return basis_names(group, weight)


def _usable_digits(f, trunc):
    if f.is_empty():
        return 0
    return max(0, math.ceil((trunc - f.valuation()) * f.ram))


def _fit_equations(f, k, unknowns):
    tower = _derivatives(f, k)
    form_trunc = _form_trunc(f)
    columns = [basis_series(name, form_trunc) * tower[at] for at, name in unknowns]
    target = -tower[k]
    trunc = min([target.trunc] + [c.trunc for c in columns])
    exponents = sorted({e for s in columns + [target] for e, _ in s.items() if e < trunc})
    rows = [[c.coefficient(e) for c in columns] for e in exponents]
    rhs = [target.coefficient(e) for e in exponents]
    return rows, rhs, _usable_digits(f, trunc)


def _qq(value):
    if not isinstance(value, (Fraction, int)):
        raise ParameterError(f"Fitting works over the rationals; got coefficient {value}")
    value = Fraction(value)
    return QQ(value.numerator, value.denominator)


def _solve_rational(rows, rhs, n):
    if not rows:
        raise UnderdeterminedSystem("No equations to fit")
    augmented = [[_qq(x) for x in row] + [_qq(b)] for row, b in zip(rows, rhs)]
    matrix = DomainMatrix(augmented, (len(augmented), n + 1), QQ)
    reduced, pivots = matrix.rref()
    if n in pivots:
        raise InconsistentSystem("No operator of this shape annihilates every solution")
    if len(pivots) < n:
        raise UnderdeterminedSystem(f"Fitting system has rank {len(pivots)} < {n} unknowns")
    entries = reduced.to_Matrix()
    return [to_fraction(entries[i, n]) for i in range(n)]


def mlde_fit(solutions, k, group, margin=FIT_SAFETY_MARGIN):
    """
    The unique monic order-k operator over ``group`` annihilating every
    series in ``solutions`` through their known truncation.
    """
    if group not in GROUPS:
        raise ParameterError(f"Unknown modular group {group!r}; expected one of {GROUPS}")
    if not solutions:
        raise UnderdeterminedSystem("mlde_fit needs at least one solution")
    unknowns = _unknowns(k, group)
    rows, rhs = [], []
    for f in solutions:
        r, b, digits = _fit_equations(f, k, unknowns)
        if digits < len(unknowns) + margin:
            raise UnderdeterminedSystem(
                f"Solution {f.pretty(3)} gives {digits} usable digits; need {len(unknowns) + margin}"
            )
        rows.extend(r)
        rhs.extend(b)
    logger.info(f"Fitting order-{k} {group} operator: {len(unknowns)} unknowns, {len(rows)} equations")
    if unknowns:
        weights = _solve_rational(rows, rhs, len(unknowns))
    else:
        if any(b != 0 for b in rhs):
            raise InconsistentSystem(f"D^({k}) alone does not annihilate the solutions")
        weights = []
    op = MLDEOp(k, group, tuple(MLDETerm(at, name, w) for (at, name), w in zip(unknowns, weights)))
    for f in solutions:
        if not mlde_verify(op, f, f.trunc):
            raise InconsistentSystem(f"Fitted operator {op} fails on {f.pretty(3)}")
    return op


def indicial_roots(op):
    """Roots of prod_(i<k)(a - i/6) + sum_r f_r(0) prod_(i<k-r)(a - i/6)."""
    constants = op.constant_terms()

    def falling(n):
        out = 1
        for i in range(n):
            out = out * (_A - Fraction(i, 6))
        return out

    poly = falling(op.order)
    for r, value in constants.items():
        poly = poly + value * falling(op.order - r)
    found = roots(expand(poly), _A)
    out = []
    for root, multiplicity in found.items():
        value = to_fraction(root) if root.is_Rational else root
        out.extend([value] * multiplicity)
    return sorted(out, key=lambda x: complex(x).real)


# Golden operators


def load_operators(path=None):
    path = path or os.path.join(DATA_DIR, "mlde_operators.json")
    with open(path, "r") as f:
        data = json.load(f)
    return {name: MLDEOp.from_json(entry) for name, entry in data["operators"].items()}


def golden_operator(name):
    operators = load_operators()
    if name not in operators:
        raise ParameterError(f"No stored operator {name!r}; known: {sorted(operators)}")
    return operators[name]
