"""
Symbolic characters of affine vertex-algebra modules.

A character is a ``CharExpr``: an immutable tree of eta, theta, twisted
Eisenstein and literal atoms combined by prefactors, weighted sums, products
and quotients, over formal variables y, z1, z2, ... . Spectral flow rewrites
the tree; ``evaluate`` specializes the variables to monomials in q (or to the
limit z -> 1 along a direction) and returns a Puiseux series.
"""

import json
import logging
import operator
import os
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from itertools import product as cartesian
from math import gcd

from affine_twist.algebra import (
    EXACT,
    ONE,
    ZERO,
    CycNumber,
    EpsSeries,
    Monomial,
    PuiseuxSeries,
    eps_power,
    scalar_from_json,
    scalar_inverse,
    scalar_to_json,
    to_fraction,
    to_scalar,
)
from affine_twist.exceptions import (
    InsufficientEpsDegree,
    InsufficientTruncation,
    NonGenericDirection,
    ParameterError,
    UnknownVariable,
)
from affine_twist.modforms import (
    eta_power,
    jacobi_theta_eps,
    theta_parts,
    theta_prefactor,
    theta_vanishes,
    twisted_eisenstein,
    twisted_eisenstein_eps,
)
from affine_twist.settings import (
    DATA_DIR,
    DEFAULT_TRUNCATION,
    EPS_DEGREE,
    EPS_DEGREE_MAX,
    EPS_DEGREE_STEP,
    GUARD_RETRIES,
    TRUNCATION_GUARD,
)

logger = logging.getLogger(__name__)

Q = "q"
Y = "y"

HALF = Fraction(1, 2)


# Formal monomials


@dataclass(frozen=True)
class FormalMonomial:
    """prod var^power times a constant monomial (phase and q-power)."""

    powers: tuple = ()
    constant: Monomial = Monomial()

    @classmethod
    def build(cls, q=0, turn=0, scale=1, **powers):
        cleaned = tuple(sorted((v, to_fraction(p)) for v, p in powers.items() if to_fraction(p) != 0))
        return cls(cleaned, Monomial(turn, q, scale))

    def variables(self):
        return {v for v, _ in self.powers}

    def power_of(self, variable):
        return dict(self.powers).get(variable, ZERO)

    def __mul__(self, other):
        merged = dict(self.powers)
        for v, p in other.powers:
            merged[v] = merged.get(v, ZERO) + p
        return FormalMonomial(
            tuple(sorted((v, p) for v, p in merged.items() if p != 0)),
            self.constant * other.constant,
        )

    def __pow__(self, power):
        power = to_fraction(power)
        return FormalMonomial(
            tuple((v, p * power) for v, p in self.powers if p * power != 0),
            self.constant ** power,
        )

    def flow(self, f):
        """Apply y -> y prod z^p q^(p_q) and z_i -> z_i q^(s_i)."""
        powers = dict(self.powers)
        exponent = self.constant.exponent
        for v, p in self.powers:
            exponent += p * f.shift.get(v, ZERO)
        a = powers.get(Y, ZERO)
        if a:
            for v, p in f.y_map.items():
                if v == Q:
                    exponent += a * p
                else:
                    powers[v] = powers.get(v, ZERO) + a * p
        constant = Monomial(self.constant.turn, exponent, self.constant.scale)
        return FormalMonomial(tuple(sorted((v, p) for v, p in powers.items() if p != 0)), constant)

    def value(self, assignment):
        result = self.constant
        for v, p in self.powers:
            if v not in assignment:
                raise UnknownVariable(f"Variable {v!r} has no value in this specialization")
            result = result * assignment[v] ** p
        return result

    def to_json(self):
        return {
            "powers": {v: str(p) for v, p in self.powers},
            "exponent": str(self.constant.exponent),
            "turn": str(self.constant.turn),
            "scale": str(self.constant.scale),
        }

    @classmethod
    def from_json(cls, data):
        return cls.build(
            q=to_fraction(data.get("exponent", "0")),
            turn=to_fraction(data.get("turn", "0")),
            scale=to_fraction(data.get("scale", "1")),
            **{v: to_fraction(p) for v, p in data.get("powers", {}).items()},
        )

    def __str__(self):
        parts = [f"{v}^{p}" if p != 1 else v for v, p in self.powers]
        if self.constant.exponent:
            parts.append(f"q^{self.constant.exponent}")
        return "*".join(parts) or "1"


def fm(q=0, turn=0, scale=1, **powers):
    return FormalMonomial.build(q=q, turn=turn, scale=scale, **powers)


# Expression nodes


class Node:
    tag = None

    def children(self):
        return ()

    def variables(self):
        found = set()
        for child in self.children():
            found |= child.variables()
        return found


@dataclass(frozen=True, eq=False)
class Eta(Node):
    u: Fraction = ONE
    tag = "eta"

    def flow(self, f):
        return self

    def to_json(self):
        return {"tag": self.tag, "u": str(self.u)}


@dataclass(frozen=True, eq=False)
class Theta(Node):
    index: int
    arg: FormalMonomial
    u: Fraction = ONE
    tag = "theta"

    def variables(self):
        return self.arg.variables()

    def flow(self, f):
        return Theta(self.index, self.arg.flow(f), self.u)

    def to_json(self):
        return {"tag": self.tag, "index": self.index, "u": str(self.u), "arg": self.arg.to_json()}


@dataclass(frozen=True, eq=False)
class TwistedEis(Node):
    k: int
    lam: Fraction
    arg: FormalMonomial
    tag = "eisenstein"

    def variables(self):
        return self.arg.variables()

    def flow(self, f):
        return TwistedEis(self.k, self.lam, self.arg.flow(f))

    def to_json(self):
        return {"tag": self.tag, "k": self.k, "lambda": str(self.lam), "arg": self.arg.to_json()}


@dataclass(frozen=True, eq=False)
class Literal(Node):
    series: PuiseuxSeries
    tag = "literal"

    def flow(self, f):
        return self

    def to_json(self):
        return {"tag": self.tag, "series": self.series.to_json()}


@dataclass(frozen=True, eq=False)
class Prefactor(Node):
    monomial: FormalMonomial
    tag = "prefactor"

    def variables(self):
        return self.monomial.variables()

    def flow(self, f):
        return Prefactor(self.monomial.flow(f))

    def to_json(self):
        return {"tag": self.tag, "monomial": self.monomial.to_json()}


@dataclass(frozen=True, eq=False)
class Sum(Node):
    terms: tuple
    weights: tuple
    tag = "sum"

    def children(self):
        return self.terms

    def flow(self, f):
        return Sum(tuple(t.flow(f) for t in self.terms), self.weights)

    def to_json(self):
        return {
            "tag": self.tag,
            "children": [t.to_json() for t in self.terms],
            "weights": [scalar_to_json(w) for w in self.weights],
        }


@dataclass(frozen=True, eq=False)
class Product(Node):
    factors: tuple
    tag = "product"

    def children(self):
        return self.factors

    def flow(self, f):
        return Product(tuple(x.flow(f) for x in self.factors))

    def to_json(self):
        return {"tag": self.tag, "children": [x.to_json() for x in self.factors]}


@dataclass(frozen=True, eq=False)
class Quotient(Node):
    numer: Node
    denom: Node
    tag = "quotient"

    def children(self):
        return (self.numer, self.denom)

    def flow(self, f):
        return Quotient(self.numer.flow(f), self.denom.flow(f))

    def to_json(self):
        return {"tag": self.tag, "numer": self.numer.to_json(), "denom": self.denom.to_json()}


@dataclass(frozen=True, eq=False)
class Power(Node):
    base: Node
    exponent: int
    tag = "power"

    def children(self):
        return (self.base,)

    def flow(self, f):
        return Power(self.base.flow(f), self.exponent)

    def to_json(self):
        return {"tag": self.tag, "base": self.base.to_json(), "exponent": self.exponent}


def node_from_json(data):
    tag = data["tag"]
    if tag == "eta":
        return Eta(to_fraction(data.get("u", "1")))
    if tag == "theta":
        return Theta(int(data["index"]), FormalMonomial.from_json(data["arg"]), to_fraction(data.get("u", "1")))
    if tag == "eisenstein":
        return TwistedEis(int(data["k"]), to_fraction(data["lambda"]), FormalMonomial.from_json(data["arg"]))
    if tag == "literal":
        return Literal(PuiseuxSeries.from_json(data["series"]))
    if tag == "prefactor":
        return Prefactor(FormalMonomial.from_json(data["monomial"]))
    if tag == "sum":
        return Sum(
            tuple(node_from_json(c) for c in data["children"]),
            tuple(scalar_from_json(w) for w in data["weights"]),
        )
    if tag == "product":
        return Product(tuple(node_from_json(c) for c in data["children"]))
    if tag == "quotient":
        return Quotient(node_from_json(data["numer"]), node_from_json(data["denom"]))
    if tag == "power":
        return Power(node_from_json(data["base"]), int(data["exponent"]))
    raise ParameterError(f"Unknown expression tag {tag!r}")


@dataclass(frozen=True, eq=False)
class CharExpr:
    """An expression tree together with the formal variables it is declared over."""

    node: Node
    variables: tuple = ()
    label: str = ""

    def __post_init__(self):
        undeclared = self.node.variables() - set(self.variables)
        if undeclared:
            raise UnknownVariable(f"Expression uses undeclared variables {sorted(undeclared)}")

    def _join(self, other):
        return tuple(sorted(set(self.variables) | set(other.variables), key=_variable_order))

    def __add__(self, other):
        return self._sum(other, ONE)

    def __sub__(self, other):
        return self._sum(other, -ONE)

    def _sum(self, other, sign):
        terms, weights = [], []
        for expr, w in ((self, ONE), (other, sign)):
            if isinstance(expr.node, Sum):
                terms.extend(expr.node.terms)
                weights.extend(w * x for x in expr.node.weights)
            else:
                terms.append(expr.node)
                weights.append(w)
        return CharExpr(Sum(tuple(terms), tuple(weights)), self._join(other))

    def __neg__(self):
        return self.scale(-ONE)

    def scale(self, value):
        return CharExpr(Sum((self.node,), (to_scalar(value),)), self.variables, self.label)

    def __mul__(self, other):
        if not isinstance(other, CharExpr):
            return self.scale(other)
        factors = []
        for expr in (self, other):
            factors.extend(expr.node.factors if isinstance(expr.node, Product) else (expr.node,))
        return CharExpr(Product(tuple(factors)), self._join(other))

    def __rmul__(self, other):
        return self.scale(other)

    def __truediv__(self, other):
        if not isinstance(other, CharExpr):
            return self.scale(scalar_inverse(to_scalar(other)))
        return CharExpr(Quotient(self.node, other.node), self._join(other))

    def __pow__(self, n):
        if not isinstance(n, int):
            return NotImplemented
        return CharExpr(Power(self.node, n), self.variables, self.label)

    def declared(self, variables, label=None):
        return CharExpr(self.node, tuple(variables), self.label if label is None else label)

    def to_json(self):
        return {"label": self.label, "variables": list(self.variables), "node": self.node.to_json()}

    @classmethod
    def from_json(cls, data):
        return cls(node_from_json(data["node"]), tuple(data["variables"]), data.get("label", ""))

    def dumps(self):
        return json.dumps(self.to_json())


def _variable_order(name):
    return (name != Y, len(name), name)


def eta(u=1):
    return CharExpr(Eta(to_fraction(u)))


def theta(index, arg, u=1):
    return CharExpr(Theta(index, arg, to_fraction(u)), tuple(sorted(arg.variables(), key=_variable_order)))


def eisenstein_bracket(k, lam, arg):
    return CharExpr(TwistedEis(k, to_fraction(lam), arg), tuple(sorted(arg.variables(), key=_variable_order)))


def prefactor(monomial):
    return CharExpr(Prefactor(monomial), tuple(sorted(monomial.variables(), key=_variable_order)))


def literal(series):
    return CharExpr(Literal(series))


# Spectral flow


@dataclass(frozen=True)
class FlowData:
    """
    The substitution y -> y prod z_i^(p_i) q^(p_q), z_i -> z_i q^(s_i).

    ``y_map`` holds the p_i and, under the key "q", p_q; ``shift`` holds
    the s_i. ``level`` is the level k the y-prefactor is raised to.
    """

    y_map: dict = field(default_factory=dict)
    shift: dict = field(default_factory=dict)
    level: Fraction = ZERO
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "y_map", {v: to_fraction(p) for v, p in self.y_map.items() if to_fraction(p) != 0})
        object.__setattr__(self, "shift", {v: to_fraction(s) for v, s in self.shift.items() if to_fraction(s) != 0})
        object.__setattr__(self, "level", to_fraction(self.level))

    def variables(self):
        names = {v for v in self.y_map if v != Q} | set(self.shift)
        if self.y_map:
            names.add(Y)
        return names

    def is_identity(self):
        return not self.y_map and not self.shift

    def to_json(self):
        return {
            "label": self.label,
            "level": str(self.level),
            "y_map": {v: str(p) for v, p in self.y_map.items()},
            "shift": {v: str(s) for v, s in self.shift.items()},
        }


def compose_flows(first, second):
    """The flow equal to applying ``first`` and then ``second``."""
    y_map = dict(first.y_map)
    for v, p in second.y_map.items():
        y_map[v] = y_map.get(v, ZERO) + p
    cross = sum((p * second.shift.get(v, ZERO) for v, p in first.y_map.items() if v != Q), ZERO)
    y_map[Q] = y_map.get(Q, ZERO) + cross
    shift = dict(first.shift)
    for v, s in second.shift.items():
        shift[v] = shift.get(v, ZERO) + s
    label = "+".join(x for x in (first.label, second.label) if x)
    return FlowData(y_map, shift, first.level or second.level, label)


def scale_flow(f, t):
    """The flow along t times the coweight of ``f``; the q-part of y_map scales quadratically."""
    t = to_fraction(t)
    y_map = {v: (p * t * t if v == Q else p * t) for v, p in f.y_map.items()}
    shift = {v: s * t for v, s in f.shift.items()}
    return FlowData(y_map, shift, f.level, f"{t}*({f.label})" if f.label else "")


def sl2_flow(ell, variable="z"):
    """sigma^ell on A1^(1): y -> y z^ell q^(ell^2/4), z -> z q^(ell/2)."""
    ell = to_fraction(ell)
    if (2 * ell).denominator != 1:
        raise ParameterError(f"sl2 flow parameters live in Z/2, got {ell}")
    return FlowData({variable: ell, Q: ell * ell / 4}, {variable: ell / 2}, label=f"sl2({ell})")


def a2_flow_half_lambda1():
    return FlowData(
        {"z1": Fraction(1, 3), "z2": Fraction(1, 6), Q: Fraction(1, 12)},
        {"z1": HALF},
        Fraction(-3, 2),
        "a2(Lambda1/2)",
    )


def a2_flow_third_rho():
    return FlowData(
        {"z1": Fraction(1, 3), "z2": Fraction(1, 3), Q: Fraction(1, 9)},
        {"z1": Fraction(1, 3), "z2": Fraction(1, 3)},
        Fraction(-3, 2),
        "a2(rho/3)",
    )


_D4_FLOWS = {
    (1, ONE): ({"z1": 1, "z2": 1, "z3": HALF, "z4": HALF, Q: HALF}, {"z1": 1}),
    (3, ONE): ({"z1": HALF, "z2": 1, "z3": 1, "z4": HALF, Q: HALF}, {"z3": 1}),
    (4, ONE): ({"z1": HALF, "z2": 1, "z3": HALF, "z4": 1, Q: HALF}, {"z4": 1}),
    (2, -HALF): ({"z1": HALF, "z2": 1, "z3": HALF, "z4": HALF, Q: Fraction(1, 4)}, {"z2": -HALF}),
}


def d4_flow(index, coefficient=1):
    """Flow along coefficient * Lambda_index for the displayed D4 cases."""
    key = (index, to_fraction(coefficient))
    if key not in _D4_FLOWS:
        raise ParameterError(f"No D4 flow preset for {coefficient} * Lambda_{index}")
    y_map, shift = _D4_FLOWS[key]
    return FlowData(y_map, shift, Fraction(-2), f"d4({coefficient}*Lambda{index})")


def apply_spectral_flow(expr, f):
    unknown = f.variables() - set(expr.variables)
    if unknown:
        raise UnknownVariable(f"Flow {f.label or f} refers to variables {sorted(unknown)} not in the expression")
    label = f"sigma[{f.label}]({expr.label})" if expr.label else ""
    return CharExpr(expr.node.flow(f), expr.variables, label)


# Specialization and evaluation


@dataclass(frozen=True)
class Limit:
    """The marker z -> 1 along z = (1 + eps)^direction."""

    direction: int

    def __post_init__(self):
        if int(self.direction) != self.direction:
            raise ParameterError(f"Limit directions are integers, got {self.direction}")


DROP = "drop"


@dataclass
class Specialization:
    values: dict = field(default_factory=dict)
    y: object = DROP
    trunc: Fraction = Fraction(DEFAULT_TRUNCATION)
    eps_degree: int = EPS_DEGREE

    def __post_init__(self):
        self.trunc = to_fraction(self.trunc)
        limits = [v for v in self.values.values() if isinstance(v, Limit)]
        if limits and all(v.direction == 0 for v in limits):
            raise ParameterError("Limit directions must not all vanish")

    @classmethod
    def at_powers(cls, exponents, trunc=DEFAULT_TRUNCATION, y=DROP):
        """z_i = q^(s_i)."""
        return cls({v: Monomial(exponent=to_fraction(s)) for v, s in exponents.items()}, y, trunc)

    @classmethod
    def at_one(cls, directions, trunc=DEFAULT_TRUNCATION, eps_degree=EPS_DEGREE):
        """z_i -> 1 along (1 + eps)^(c_i)."""
        return cls({v: Limit(c) for v, c in directions.items()}, DROP, trunc, eps_degree)

    def has_limits(self):
        return any(isinstance(v, Limit) for v in self.values.values())

    def limit_variables(self):
        return {k for k, v in self.values.items() if isinstance(v, Limit)}

    def assignment(self, variables):
        extra = set(self.values) - set(variables)
        if extra:
            raise UnknownVariable(f"Specialization names variables {sorted(extra)} the expression lacks")
        out = {}
        for v in variables:
            if v == Y:
                out[v] = Monomial() if self.y == DROP else self.y
                continue
            if v not in self.values:
                raise UnknownVariable(f"Variable {v!r} has no value in this specialization")
            value = self.values[v]
            out[v] = Monomial(eps=value.direction) if isinstance(value, Limit) else value
        return out


class _Evaluation:
    """
    One pass over the tree at a fixed working truncation and eps degree.

    Every node evaluates to (factor, value) with a scalar factor kept apart
    from the series, so the i of theta_1 never enters the coefficients.
    """

    def __init__(self, expr, spec, trunc, degree):
        self.assignment = spec.assignment(expr.variables)
        self.limit_vars = spec.limit_variables()
        self.eps_mode = spec.has_limits()
        self.trunc = trunc
        self.degree = degree
        self.expr = expr
        self.memo = {}

    def run(self):
        factor, value = self.visit(self.expr.node)
        if self.eps_mode:
            value = value.limit()
        return factor, value

    def visit(self, node):
        key = id(node)
        if key not in self.memo:
            self.memo[key] = getattr(self, f"_visit_{node.tag}")(node)
        return self.memo[key]

    def _lift(self, series):
        return EpsSeries.constant(series) if self.eps_mode else series

    def _visit_eta(self, node):
        return ONE, self._lift(eta_power(node.u, self.trunc))

    def _visit_theta(self, node):
        m = node.arg.value(self.assignment)
        if self.eps_mode and m.eps:
            return theta_prefactor(node.index), jacobi_theta_eps(node.index, m, node.u, self.trunc, self.degree)
        if self.eps_mode and node.arg.variables() & self.limit_vars and theta_vanishes(node.index, m, node.u):
            raise NonGenericDirection(f"theta_{node.index}({node.arg}) stays on a zero along the limit direction")
        factor, series = theta_parts(node.index, m, node.u, self.trunc)
        return factor, self._lift(series)

    def _visit_eisenstein(self, node):
        m = node.arg.value(self.assignment)
        if self.eps_mode and m.eps:
            return ONE, twisted_eisenstein_eps(node.k, node.lam, m, self.trunc, self.degree)
        return ONE, self._lift(twisted_eisenstein(node.k, node.lam, m, self.trunc))

    def _visit_literal(self, node):
        return ONE, self._lift(node.series)

    def _visit_prefactor(self, node):
        m = node.monomial.value(self.assignment)
        shift = PuiseuxSeries.monomial(m.exponent)
        if self.eps_mode:
            return m.phase(), eps_power(m.eps, self.degree) * shift
        return m.phase(), shift

    def _visit_sum(self, node):
        parts = [(w * f, value) for w, (f, value) in zip(node.weights, map(self.visit, node.terms))]
        base = next((f for f, _ in parts if f != 0), ONE)
        inv = scalar_inverse(base)
        total = reduce(operator.add, (value.scale(f * inv) for f, value in parts))
        return base, total

    def _visit_product(self, node):
        parts = [self.visit(x) for x in node.factors]
        factor = reduce(operator.mul, (f for f, _ in parts), ONE)
        return factor, reduce(operator.mul, (value for _, value in parts))

    def _invert(self, value):
        if self.eps_mode:
            return value.inverse(self.degree)
        return value.inverse()

    def _visit_quotient(self, node):
        fn, numer = self.visit(node.numer)
        fd, denom = self.visit(node.denom)
        return fn * scalar_inverse(fd), numer * self._invert(denom)

    def _visit_power(self, node):
        f, value = self.visit(node.base)
        n = node.exponent
        if n < 0:
            f, value, n = scalar_inverse(f), self._invert(value), -n
        result = reduce(operator.mul, [value] * n) if n else self._lift(PuiseuxSeries.one())
        return f ** n, result


def evaluate(expr, spec):
    """
    Specialize ``expr`` and return its Puiseux series known through
    q^spec.trunc. Limits are taken through eps-expansions whose degree is
    raised until the eps^0 coefficient is determined.
    """
    target = spec.trunc
    if target == EXACT:
        raise ParameterError("Evaluation needs a finite truncation")
    degree = spec.eps_degree
    guard = Fraction(TRUNCATION_GUARD)
    retries = 0
    while True:
        try:
            factor, series = _Evaluation(expr, spec, target + guard, degree).run()
        except InsufficientEpsDegree:
            if not spec.has_limits() or degree + EPS_DEGREE_STEP > EPS_DEGREE_MAX:
                logger.warning(f"Giving up on {expr.label or 'expression'} at eps degree {degree}")
                raise
            degree += EPS_DEGREE_STEP
            logger.debug(f"Raising eps degree to {degree} for {expr.label or 'expression'}")
            continue
        except InsufficientTruncation:
            if retries >= GUARD_RETRIES:
                logger.warning(f"Giving up on {expr.label or 'expression'} with guard {guard}")
                raise
            retries += 1
            guard *= 2
            logger.debug(f"Doubling truncation guard to {guard}")
            continue
        if series.trunc < target:
            if retries >= GUARD_RETRIES:
                logger.warning(f"Series known only through q^{series.trunc}, wanted q^{target}")
                raise InsufficientTruncation(f"Evaluation reached q^{series.trunc} only, need q^{target}")
            retries += 1
            guard = 2 * guard + (target - series.trunc)
            logger.debug(f"Result short of q^{target}; guard now {guard}")
            continue
        return series.scale(factor).truncate(target)


# Builders


def _odd_u(u):
    if not isinstance(u, int) or u < 3 or u % 2 == 0:
        raise ParameterError(f"Boundary level needs an odd integer u >= 3, got {u!r}")


def sl2_boundary_level(u):
    return Fraction(-2) + Fraction(2, u)


def build_sl2_boundary_char(u, j):
    """y^k z^(-2j/u) q^(j^2/2u) theta_1(z^2 q^-j; q^u) / theta_1(z^2; q) at k = -2 + 2/u."""
    _odd_u(u)
    if not isinstance(j, int) or not 0 <= j < u:
        raise ParameterError(f"j must lie in [0, {u - 1}], got {j!r}")
    k = sl2_boundary_level(u)
    pre = prefactor(fm(q=Fraction(j * j, 2 * u), y=k, z=Fraction(-2 * j, u)))
    expr = pre * theta(1, fm(q=-j, z=2), u) / theta(1, fm(z=2))
    return expr.declared((Y, "z"), f"sl2(u={u},j={j})")


SL2_HALF_FAMILY = ("L0", "L1", "Dplus_half", "Dplus_threehalf")


def build_sl2_half_char(which):
    """The four irreducible characters at k = -1/2."""
    if which not in SL2_HALF_FAMILY:
        raise ParameterError(f"Unknown k=-1/2 module {which!r}; expected one of {SL2_HALF_FAMILY}")
    z = fm(z=1)
    pre = prefactor(fm(y=-HALF)).scale(HALF)
    if which in ("L0", "L1"):
        first, second = eta() / theta(4, z), eta() / theta(3, z)
    else:
        first, second = (eta() / theta(1, z)).scale(-CycNumber.imaginary_unit()), eta() / theta(2, z)
    bracket = first + second if which in ("L0", "Dplus_half") else first - second
    return (pre * bracket).declared((Y, "z"), f"sl2(k=-1/2,{which})")


SL3_FAMILY = ("Lambda0", "Lambda1", "Lambda2", "rho_half")


def build_sl3_boundary_char(which):
    """The boundary admissible A2^(1) characters at k = -3/2."""
    if which not in SL3_FAMILY:
        raise ParameterError(f"Unknown A2 module {which!r}; expected one of {SL3_FAMILY}")
    z1, z2, z12 = fm(z1=1), fm(z2=1), fm(z1=1, z2=1)
    # (eta(2 tau)/eta(tau))^(-1)
    ratio = eta() / eta(2)
    denom = theta(1, z1) * theta(1, z2) * theta(1, z12)
    if which == "Lambda0":
        numer = theta(1, z1, 2) * theta(1, z2, 2) * theta(1, z12, 2)
        pre = prefactor(fm(y=Fraction(-3, 2)))
    elif which == "Lambda1":
        numer = theta(1, z2, 2) * theta(4, z1, 2) * theta(4, z12, 2)
        pre = prefactor(fm(y=Fraction(-3, 2), scale=-1))
    elif which == "Lambda2":
        numer = theta(1, z1, 2) * theta(4, z12, 2) * theta(4, z2, 2)
        pre = prefactor(fm(y=Fraction(-3, 2), scale=-1))
    else:
        numer = (
            theta(1, fm(q=-1, z2=-1), 2)
            * theta(1, fm(q=-1, z1=-1), 2)
            * theta(1, fm(q=-2, z1=-1, z2=-1), 2)
        )
        pre = prefactor(fm(q=Fraction(3, 2), y=Fraction(-3, 2), z1=Fraction(3, 2), z2=Fraction(3, 2)))
    return (pre * ratio * numer / denom).declared((Y, "z1", "z2"), f"a2({which})")


D4_VARIABLES = (Y, "z1", "z2", "z3", "z4")
D4_FAMILY = ("vac", "L1", "L3", "L4", "Lmid")
D4_LEVEL = Fraction(-2)


def d4_masses():
    """m_1..m_4 in terms of z: z1 = m1/m2, z2 = m2/m3, z3 = m3 m4, z4 = m3/m4."""
    m3 = fm(z3=HALF, z4=HALF)
    m4 = fm(z3=HALF, z4=-HALF)
    m2 = fm(z2=1, z3=HALF, z4=HALF)
    m1 = fm(z1=1, z2=1, z3=HALF, z4=HALF)
    return (m1, m2, m3, m4)


def _d4_vacuum():
    denom = theta(1, fm(z1=1, z2=2, z3=1, z4=1)) * theta(1, fm(z1=1)) * theta(1, fm(z4=1)) * theta(1, fm(z3=1))
    f = (fm(z1=HALF, z2=1, z3=HALF, z4=HALF), fm(z1=HALF), fm(z4=HALF), fm(z3=HALF))
    brackets = None
    for signs in cartesian((1, -1), repeat=4):
        arg = reduce(operator.mul, (x ** s for x, s in zip(f, signs)))
        sign = reduce(operator.mul, signs)
        term = eisenstein_bracket(2, 0, arg).scale(sign)
        brackets = term if brackets is None else brackets + term
    pre = prefactor(fm(y=D4_LEVEL)).scale(HALF)
    return pre * eta() ** 2 / denom * brackets


def build_Rj(j):
    """-(i/2) theta_1(m_j^2) eta^5 / prod_(l != j) theta_1(m_j m_l) theta_1(m_j/m_l)."""
    if j not in (1, 2, 3, 4):
        raise ParameterError(f"R_j needs j in 1..4, got {j!r}")
    masses = d4_masses()
    mj = masses[j - 1]
    denom = None
    for l, ml in enumerate(masses, start=1):
        if l == j:
            continue
        pair = theta(1, mj * ml) * theta(1, mj * ml ** -1)
        denom = pair if denom is None else denom * pair
    pre = prefactor(fm(y=D4_LEVEL)).scale(-HALF * CycNumber.imaginary_unit())
    expr = pre * theta(1, mj ** 2) * eta() ** 5 / denom
    return expr.declared(D4_VARIABLES, f"R{j}")


def build_d4_char(which):
    """Characters of the level -2 D4 modules: vacuum, the three flowed images and L(-Lambda_2)."""
    if which not in D4_FAMILY:
        raise ParameterError(f"Unknown D4 module {which!r}; expected one of {D4_FAMILY}")
    vac = _d4_vacuum().declared(D4_VARIABLES, "d4(vac)")
    if which == "vac":
        return vac
    r1, r2, r3, r4 = (build_Rj(j) for j in (1, 2, 3, 4))
    if which == "L1":
        expr = vac - r1.scale(2)
    elif which == "Lmid":
        expr = vac.scale(-2) + r1.scale(2) + r2.scale(2)
    elif which == "L3":
        expr = vac - r1 - r2 - r3 - r4
    else:
        expr = vac - r1 - r2 - r3 + r4
    return expr.declared(D4_VARIABLES, f"d4({which})")


def bp_flowed_char():
    """The flowed Bershadsky-Polyakov vacuum character at k = -9/4, read from package data."""
    path = os.path.join(DATA_DIR, "bp_series.json")
    with open(path, "r") as f:
        data = json.load(f)
    series = PuiseuxSeries.from_json(data["series"])
    logger.debug(f"Loaded BP series from {path}: {series.pretty()}")
    return series


# Weights and conformal dimensions


@dataclass(frozen=True)
class WeightDim:
    dynkin_label: Fraction
    conformal_dim: Fraction

    def to_json(self):
        return {"dynkin_label": str(self.dynkin_label), "conformal_dim": str(self.conformal_dim)}


def flowed_weight_dim(u, j):
    """Label and conformal dimension of sigma^(-1/2) L(Lambda_(k,j)) at k = -2 + 2/u."""
    _odd_u(u)
    if not isinstance(j, int) or not 0 <= j < u:
        raise ParameterError(f"j must lie in [0, {u - 1}], got {j!r}")
    return WeightDim(Fraction(u - 2 * j - 1, u), Fraction(1 + 4 * j * (1 + j - u) - u, 8 * u))


def _admissible_level(p, q, i, j):
    if not isinstance(p, int) or not isinstance(q, int) or p < 2 or q < 1 or gcd(p, q) != 1:
        raise ParameterError(f"Admissible level needs coprime p >= 2, q >= 1, got ({p}, {q})")
    if not 1 <= i <= p - 1 or not 0 <= j <= q - 1:
        raise ParameterError(f"Labels (i, j) = ({i}, {j}) outside [1, {p - 1}] x [0, {q - 1}]")
    return Fraction(-2) + Fraction(p, q)


def untwisted_weight_dim(p, q, i, j):
    """lambda = i - 1 - (k+2) j with its Sugawara dimension lambda(lambda+2)/(4(k+2))."""
    k = _admissible_level(p, q, i, j)
    label = i - 1 - (k + 2) * j
    return WeightDim(label, label * (label + 2) / (4 * (k + 2)))


def general_admissible_weight_dim(p, q, i, j):
    """The (i, j) admissible weight after the sigma^(-1/2) flow at k = -2 + p/q."""
    k = _admissible_level(p, q, i, j)
    t = k + 2
    label = i - 1 - t * j - k / 2
    a = i - t * j
    dim = (4 + k - 4 * i + 4 * t * j + 4 * (a * a - 1) / t) / 16
    return WeightDim(label, dim)


def spectral_flow_state(label, dim, ell, level):
    """(lambda + ell k, Delta + ell lambda / 2 + ell^2 k / 4)."""
    label, dim, ell, level = map(to_fraction, (label, dim, ell, level))
    return WeightDim(label + ell * level, dim + ell * label / 2 + ell * ell * level / 4)


def sugawara_central_charge(level, dim=3, dual_coxeter=2):
    level = to_fraction(level)
    if level == -dual_coxeter:
        raise ParameterError("Critical level has no Sugawara vector")
    return level * dim / (level + dual_coxeter)


def bp_central_charge(level):
    level = to_fraction(level)
    if level == -3:
        raise ParameterError("Bershadsky-Polyakov central charge is singular at k = -3")
    return -(2 * level + 3) * (3 * level + 1) / (level + 3)


def bp_flow_state(label, dim, ell, level):
    label, dim, ell, level = map(to_fraction, (label, dim, ell, level))
    slope = (2 * level + 3) / 3
    return WeightDim(label + ell * slope, dim + ell * label + slope * ell * ell / 2)
