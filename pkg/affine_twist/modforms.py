"""
Modular-form atoms as Puiseux series: Dedekind eta, Jacobi thetas in sum and
product form, classical thetas, Eisenstein series (plain and twisted) and the
Gamma^0(2) generators theta_bar(r, s).

Every function takes the truncation order ``trunc`` explicitly. Results for a
given argument set are cached; the caches are process-wide and thread-safe.
"""

import logging
import math
from fractions import Fraction
from functools import lru_cache

from sympy import bernoulli as _sympy_bernoulli
from sympy import binomial as _sympy_binomial
from sympy import divisor_sigma, factorial

from affine_twist.algebra import (
    EXACT,
    ONE,
    ZERO,
    CycNumber,
    EpsSeries,
    Monomial,
    PuiseuxSeries,
    eps_from_terms,
    eps_power,
    scalar_inverse,
    to_fraction,
)
from affine_twist.exceptions import NonGenericDirection, ParameterError, PoleError

logger = logging.getLogger(__name__)

THETA_INDICES = (1, 2, 3, 4)

HALF = Fraction(1, 2)


def _check_trunc(trunc):
    trunc = to_fraction(trunc)
    if trunc == EXACT:
        raise ParameterError("Modular-form atoms need a finite truncation")
    return trunc


# Dedekind eta


@lru_cache(maxsize=None)
def dedekind_eta(trunc, u=1):
    """eta(u tau) = q^(u/24) prod (1 - q^(un)), through the pentagonal-number sum."""
    trunc = _check_trunc(trunc)
    u = to_fraction(u)
    terms = {}
    n = 0
    while True:
        grew = False
        for m in ((n, -n) if n else (0,)):
            e = u * (Fraction(1, 24) + Fraction(m * (3 * m - 1), 2))
            if e < trunc:
                terms[e] = terms.get(e, ZERO) + (-1) ** (m % 2)
                grew = True
        if not grew and n > 0:
            break
        n += 1
    return PuiseuxSeries.from_exponents(terms, trunc)


def eta_power(u, trunc):
    """eta(u tau), realised as q -> q^u on eta(tau)."""
    u = to_fraction(u)
    return dedekind_eta(_check_trunc(trunc) / u).substitute_scale(u)


# Jacobi thetas


def _lattice(offset, slope, u, trunc):
    """Points x in Z + offset with slope*x + u*x^2/2 < trunc."""
    u = Fraction(u)
    centre = -slope / u
    low = -slope * slope / (2 * u)
    if trunc <= low:
        return
    radius = math.sqrt(float(2 * (trunc - low) / u))
    start = math.floor(float(centre) - radius - float(offset)) - 1
    stop = math.ceil(float(centre) + radius - float(offset)) + 1
    for n in range(start, stop + 1):
        x = n + offset
        if slope * x + u * x * x / 2 < trunc:
            yield x


def _lattice_floor(offset, slope, u):
    # minimum of slope*x + u*x^2/2 over Z + offset
    u = Fraction(u)
    centre = -slope / u
    n = math.floor(centre - offset)
    return min(slope * x + u * x * x / 2 for x in (n + offset, n + 1 + offset))


def theta_vanishes(i, arg, u=1):
    """True when theta_i(arg; q^u) is identically zero (arg sits on a lattice zero)."""
    if arg.scale != 1:
        return False
    ratio = arg.exponent / u
    if i == 1:
        return arg.turn == 0 and ratio.denominator == 1
    if i == 2:
        return arg.turn == HALF and ratio.denominator == 1
    if i == 3:
        return arg.turn == HALF and (ratio - HALF).denominator == 1
    return arg.turn == 0 and (ratio - HALF).denominator == 1


def _theta_terms(i, arg, u, trunc):
    """
    (coefficient, exponent, eps power) for theta_i(arg; q^u) divided by its
    constant prefactor (i for theta_1, 1 otherwise).
    """
    offset = HALF if i in (1, 2) else ZERO
    for x in _lattice(offset, arg.exponent, u, trunc):
        power = arg.without_eps() ** x
        coeff = power.phase()
        if i == 1:
            coeff = coeff * (-1) ** (int(x - HALF) % 2)
        elif i == 4:
            coeff = coeff * (-1) ** (int(x) % 2)
        yield coeff, power.exponent + u * x * x / 2, arg.eps * x


def theta_prefactor(i):
    return CycNumber.imaginary_unit() if i == 1 else ONE


@lru_cache(maxsize=None)
def theta_parts(i, arg, u, trunc):
    """
    (prefactor, series) with theta_i = prefactor * series; the series is
    rational whenever the argument's phase is.
    """
    if i not in THETA_INDICES:
        raise ParameterError(f"Unknown theta index {i}")
    trunc = _check_trunc(trunc)
    if arg.eps:
        raise ParameterError("theta_parts takes an argument without epsilon part")
    if theta_vanishes(i, arg, u):
        return ONE, PuiseuxSeries.zero()
    terms = {}
    for coeff, e, _ in _theta_terms(i, arg, u, trunc):
        terms[e] = terms.get(e, ZERO) + coeff
    return theta_prefactor(i), PuiseuxSeries.from_exponents(terms, trunc)


def jacobi_theta(i, arg, u, trunc):
    """theta_i(arg; q^u) from its defining sum."""
    factor, series = theta_parts(i, arg, u, trunc)
    return series.scale(factor)


def jacobi_theta_eps(i, arg, u, trunc, degree):
    """
    theta_i(arg; q^u) with arg carrying a (1 + eps)^c factor, expanded through
    eps^degree, divided by its constant prefactor (see theta_prefactor).
    """
    trunc = _check_trunc(trunc)
    constant = arg.without_eps()
    vanishing = (0,) if theta_vanishes(i, constant, u) else ()
    if vanishing and arg.eps == 0:
        raise NonGenericDirection(f"theta_{i} argument stays on a zero along the limit direction")
    offset = HALF if i in (1, 2) else ZERO
    floor = _lattice_floor(offset, constant.exponent, u)
    return eps_from_terms(_theta_terms(i, arg, u, trunc), degree, trunc, floor, vanishing)


def _binomial_factor(sign, m):
    return PuiseuxSeries.from_exponents({0: ONE, m.exponent: sign * m.phase()})


def _product_series(block, slope, u, prefix, trunc):
    """
    prefix * prod_n prod (1 + sign*m) with block(n) listing the (sign, m)
    pairs of index n; every factor of index n has exponent >= u(n-1) - |slope|.
    """
    low = PuiseuxSeries.one()
    pending = []
    n = 1
    while u * (n - 1) <= abs(slope):
        for sign, m in block(n):
            if m.exponent < 0:
                low = low * _binomial_factor(sign, m)
            elif m.exponent == 0:
                value = ONE + sign * m.phase()
                if value == 0:
                    return PuiseuxSeries.zero()
                low = low.scale(value)
            else:
                pending.append((sign, m))
        n += 1
    target = trunc - prefix.exponent - low.valuation()
    while u * (n - 1) - abs(slope) < target:
        pending.extend(block(n))
        n += 1
    rest = PuiseuxSeries.one().truncate(target)
    for sign, m in pending:
        if m.exponent < target:
            rest = rest * _binomial_factor(sign, m)
    return (low * rest).shift(prefix.exponent).scale(prefix.phase())


def jacobi_theta_product(i, arg, u, trunc):
    """theta_i(arg; q^u) from the Jacobi triple product."""
    trunc = _check_trunc(trunc)
    if i not in THETA_INDICES:
        raise ParameterError(f"Unknown theta index {i}")
    inverse = arg ** -1

    def block(n):
        factors = [(-1, Monomial(exponent=u * n))]
        if i in (1, 2):
            sign = -1 if i == 1 else 1
            factors.append((sign, arg * Monomial(exponent=u * n)))
            factors.append((sign, inverse * Monomial(exponent=u * (n - 1))))
        else:
            sign = 1 if i == 3 else -1
            half = Monomial(exponent=u * (n - HALF))
            factors.append((sign, arg * half))
            factors.append((sign, inverse * half))
        return factors

    if i in (1, 2):
        prefix = arg ** HALF * Monomial(exponent=Fraction(u, 8))
        series = _product_series(block, arg.exponent, u, prefix, trunc)
        return series.scale(theta_prefactor(i))
    return _product_series(block, arg.exponent, u, Monomial(), trunc)


def classical_theta(m, n, arg, trunc):
    """Theta_{m,n}(arg) = sum over x in Z + m/(2n) of arg^(n x) q^(n x^2)."""
    trunc = _check_trunc(trunc)
    if n < 1:
        raise ParameterError(f"Classical theta needs n >= 1, got {n}")
    offset = Fraction(m, 2 * n) % 1
    terms = {}
    slope = n * arg.exponent
    for x in _lattice(offset, slope, 2 * n, trunc):
        power = arg ** (n * x)
        e = power.exponent + n * x * x
        terms[e] = terms.get(e, ZERO) + power.phase()
    return PuiseuxSeries.from_exponents(terms, trunc)


# Eisenstein series


def _bernoulli_number(k):
    # B_1 = -1/2 regardless of the sympy version
    if k == 1:
        return Fraction(-1, 2)
    return to_fraction(_sympy_bernoulli(k))


def bernoulli_poly(k, x):
    """B_k(x) = sum_j C(k, j) B_j x^(k - j)."""
    x = to_fraction(x)
    return sum(
        (to_fraction(_sympy_binomial(k, j)) * _bernoulli_number(j) * x ** (k - j) for j in range(k + 1)),
        ZERO,
    )


@lru_cache(maxsize=None)
def eisenstein(k, trunc):
    """E_k = -B_k/k! + 2/(k-1)! sum sigma_{k-1}(n) q^n."""
    if k < 2 or k % 2:
        raise ParameterError(f"Eisenstein series needs even k >= 2, got {k}")
    trunc = _check_trunc(trunc)
    fact = to_fraction(factorial(k - 1))
    terms = {ZERO: -_bernoulli_number(k) / (fact * k)}
    n = 1
    while n < trunc:
        terms[Fraction(n)] = 2 * to_fraction(divisor_sigma(n, k - 1)) / fact
        n += 1
    return PuiseuxSeries.from_exponents(terms, trunc)


def _bracket_terms(k, lam, theta, trunc):
    """
    (weight, monomial) pairs of the twisted Eisenstein series, where each
    monomial m contributes weight * m/(1 - m).
    """
    fact = to_fraction(factorial(k - 1))
    skip_origin = lam == 0 and theta.is_one()
    r = 0
    while r + lam - theta.exponent < trunc:
        weight = (r + lam) ** (k - 1)
        if weight and not (r == 0 and skip_origin):
            yield weight / fact, theta ** -1 * Monomial(exponent=r + lam)
        r += 1
    sign = (-1) ** k
    r = 1
    while r - lam + theta.exponent < trunc:
        weight = (r - lam) ** (k - 1)
        if weight:
            yield sign * weight / fact, theta * Monomial(exponent=r - lam)
        r += 1


def _geometric_terms(m, trunc):
    """(coefficient, exponent, eps power) for m/(1 - m) with exponent(m) != 0."""
    phase = m.without_eps().phase()
    if m.exponent > 0:
        j = 1
        while j * m.exponent < trunc:
            yield phase ** j, j * m.exponent, j * m.eps
            j += 1
    else:
        inv_phase = scalar_inverse(phase)
        j = 0
        while -j * m.exponent < trunc:
            yield -(inv_phase ** j), -j * m.exponent, -j * m.eps
            j += 1


def _check_lambda(lam):
    lam = to_fraction(lam)
    if not 0 <= lam < 1:
        raise ParameterError(f"Twist parameter lambda must lie in [0, 1), got {lam}")
    return lam


@lru_cache(maxsize=None)
def twisted_eisenstein(k, lam, theta, trunc):
    """E_k[phi; theta] with phi = e^(2 pi i lam) and theta a monomial."""
    lam = _check_lambda(lam)
    trunc = _check_trunc(trunc)
    if k < 1:
        raise ParameterError(f"Twisted Eisenstein series needs k >= 1, got {k}")
    fact = to_fraction(factorial(k))
    constant = -bernoulli_poly(k, lam) / fact
    terms = {ZERO: constant}
    for weight, m in _bracket_terms(k, lam, theta, trunc):
        if m.exponent == 0:
            phase = m.phase()
            if phase == 1:
                raise PoleError(f"Twisted Eisenstein term m/(1 - m) at m = 1 (k={k}, lambda={lam})")
            terms[ZERO] = terms[ZERO] + weight * phase / (ONE - phase)
            continue
        for coeff, e, _ in _geometric_terms(m, trunc):
            terms[e] = terms.get(e, ZERO) + weight * coeff
    return PuiseuxSeries.from_exponents(terms, trunc)


def twisted_eisenstein_eps(k, lam, theta, trunc, degree):
    """twisted_eisenstein with theta carrying a (1 + eps)^c factor."""
    lam = _check_lambda(lam)
    trunc = _check_trunc(trunc)
    fact = to_fraction(factorial(k))
    total = EpsSeries.constant(PuiseuxSeries.constant(-bernoulli_poly(k, lam) / fact))
    series_terms = []
    low = ZERO
    for weight, m in _bracket_terms(k, lam, theta, trunc):
        if m.exponent == 0:
            phase = m.without_eps().phase()
            if m.eps == 0:
                if phase == 1:
                    raise NonGenericDirection("Twisted Eisenstein argument stays at 1 along the limit direction")
                total = total + EpsSeries.constant(PuiseuxSeries.constant(weight * phase / (ONE - phase)))
                continue
            numer = eps_power(m.eps, degree).scale(phase)
            denom = EpsSeries.constant(PuiseuxSeries.one()) - numer
            total = total + (numer * denom.inverse(degree)).scale(weight)
            continue
        for coeff, e, c in _geometric_terms(m, trunc):
            series_terms.append((weight * coeff, e, c))
            low = min(low, e)
    if series_terms:
        total = total + eps_from_terms(series_terms, degree, trunc, low)
    return total


# Gamma^0(2) generators


@lru_cache(maxsize=None)
def theta_nullwert_power(i, power, trunc):
    return jacobi_theta(i, Monomial(), 1, trunc) ** power


@lru_cache(maxsize=None)
def theta_bar(r, s, trunc):
    """theta_2^(4r) theta_3^(4s) + theta_2^(4s) theta_3^(4r) at z = 1."""
    if r < 0 or s < 0:
        raise ParameterError(f"theta_bar indices must be nonnegative, got ({r}, {s})")
    if r > s:
        return theta_bar(s, r, trunc)
    trunc = _check_trunc(trunc)
    first = theta_nullwert_power(2, 4 * r, trunc) * theta_nullwert_power(3, 4 * s, trunc)
    second = theta_nullwert_power(2, 4 * s, trunc) * theta_nullwert_power(3, 4 * r, trunc)
    return (first + second).truncate(trunc)
