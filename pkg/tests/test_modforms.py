import random
from fractions import Fraction

import pytest

from affine_twist.algebra import CycNumber, Monomial
from affine_twist.exceptions import ParameterError
from affine_twist.modforms import (
    bernoulli_poly,
    classical_theta,
    dedekind_eta,
    eisenstein,
    eta_power,
    jacobi_theta,
    jacobi_theta_product,
    theta_bar,
    twisted_eisenstein,
)

F = Fraction

# phases off every theta zero
GENERIC_TURNS = [F(k, 12) for k in (1, 2, 3, 4, 5, 7, 8, 9, 10, 11)]


def test_eta_pentagonal():
    """eta = q^(1/24)(1 - q - q^2 + q^5 + q^7 - ...)."""
    eta = dedekind_eta(F(10))
    assert dict(eta.items()) == {
        F(1, 24): 1,
        F(25, 24): -1,
        F(49, 24): -1,
        F(121, 24): 1,
        F(169, 24): 1,
    }


def test_eta_cube_is_jacobi():
    """eta^3 = sum (-1)^n (2n + 1) q^(1/8 + n(n+1)/2) through q^20."""
    cube = dedekind_eta(F(21)) ** 3
    expected = {}
    n = 0
    while F(1, 8) + F(n * (n + 1), 2) < 20:
        expected[F(1, 8) + F(n * (n + 1), 2)] = (-1) ** n * (2 * n + 1)
        n += 1
    assert dict(cube.truncate(F(20)).items()) == expected


def test_eta_power_scales():
    """eta(2 tau) starts at q^(1/12)."""
    assert eta_power(2, F(6)).leading() == (F(1, 12), 1)
    assert eta_power(2, F(6)).coefficient(F(25, 12)) == -1


@pytest.mark.parametrize("seed", range(20))
def test_theta_sum_equals_product(seed):
    """The defining sums agree with the triple products at random arguments."""
    rng = random.Random(seed)
    i = rng.choice((1, 2, 3, 4))
    arg = Monomial(turn=rng.choice(GENERIC_TURNS), exponent=F(rng.randrange(-3, 4), rng.choice((2, 3, 4))))
    u = rng.choice((1, 2, 3))
    trunc = F(20)
    assert jacobi_theta(i, arg, u, trunc).matches(jacobi_theta_product(i, arg, u, trunc), trunc)


@pytest.mark.parametrize("seed", range(5))
def test_theta_from_classical_thetas(seed):
    """theta_1..theta_4 split into the index-2 classical thetas Theta_{m,2}."""
    rng = random.Random(seed)
    arg = Monomial(turn=rng.choice(GENERIC_TURNS), exponent=F(rng.randrange(-3, 4), rng.choice((2, 3, 4))))
    trunc = F(8)
    even, odd = classical_theta(0, 2, arg, trunc), classical_theta(2, 2, arg, trunc)
    plus, minus = classical_theta(1, 2, arg, trunc), classical_theta(-1, 2, arg, trunc)
    assert jacobi_theta(3, arg, 1, trunc).matches(even + odd, trunc)
    assert jacobi_theta(4, arg, 1, trunc).matches(even - odd, trunc)
    assert jacobi_theta(2, arg, 1, trunc).matches(plus + minus, trunc)
    assert jacobi_theta(1, arg, 1, trunc).matches((plus - minus).scale(CycNumber.imaginary_unit()), trunc)


def test_theta_nullwerte():
    """theta_3 = 1 + 2q^(1/2) + ..., theta_2 = 2q^(1/8) + ..., theta_1(1) = 0."""
    theta3 = jacobi_theta(3, Monomial(), 1, F(3))
    assert dict(theta3.items()) == {F(0): 1, F(1, 2): 2, F(2): 2}
    theta2 = jacobi_theta(2, Monomial(), 1, F(2))
    assert theta2.leading() == (F(1, 8), 2)
    assert jacobi_theta(1, Monomial(), 1, F(3)).is_zero()


def test_theta1_carries_i():
    """theta_1 at a phase has the factor i in its coefficients."""
    theta1 = jacobi_theta(1, Monomial(turn=F(1, 4)), 1, F(2))
    _, lead = theta1.leading()
    assert isinstance(lead, CycNumber)


def test_classical_theta_lattice():
    """Theta_{0,1}(1) = sum q^(n^2) = 1 + 2q + 2q^4 + ..."""
    theta = classical_theta(0, 1, Monomial(), F(10))
    assert dict(theta.items()) == {F(0): 1, F(1): 2, F(4): 2, F(9): 2}
    with pytest.raises(ParameterError):
        classical_theta(0, 0, Monomial(), F(3))


@pytest.mark.parametrize(
    "k, constant, first",
    [(2, F(-1, 12), F(2)), (4, F(1, 720), F(1, 3)), (6, F(-1, 30240), F(1, 60))],
)
def test_eisenstein_normalization(k, constant, first):
    """Constant terms -B_k/k! and the q^1 coefficient 2/(k-1)!."""
    e = eisenstein(k, F(5))
    assert e.coefficient(0) == constant
    assert e.coefficient(1) == first


def test_eisenstein_divisor_sums():
    """q^6 coefficient of E_4 is sigma_3(6)/3 = 252/3."""
    assert eisenstein(4, F(8)).coefficient(6) == F(252, 3)


@pytest.mark.parametrize("k", [2, 4, 6])
def test_untwisted_bracket_is_eisenstein(k):
    """E_k[1; 1] = E_k."""
    assert twisted_eisenstein(k, F(0), Monomial(), F(8)) == eisenstein(k, F(8))


def test_twisted_bracket_constant_term():
    """E_2[1; -1] has constant term -1/12."""
    assert twisted_eisenstein(2, F(0), Monomial(turn=F(1, 2)), F(4)).coefficient(0) == F(-1, 12)


def test_twisted_bracket_lambda_range():
    """lambda outside [0, 1) is rejected."""
    with pytest.raises(ParameterError):
        twisted_eisenstein(2, F(1), Monomial(), F(4))


def test_bernoulli_polynomials():
    """B_2(x) = x^2 - x + 1/6 and B_1(1/2) = 0."""
    assert bernoulli_poly(2, F(1, 3)) == F(1, 9) - F(1, 3) + F(1, 6)
    assert bernoulli_poly(1, F(1, 2)) == 0


def test_theta_bar_zero_one():
    """theta_bar(0, 1) = theta_3^4 + theta_2^4 = 1 + 24 q^(1/2) + ..."""
    form = theta_bar(0, 1, F(2))
    assert form.coefficient(0) == 1
    assert form.coefficient(F(1, 2)) == 24


def test_theta_bar_symmetric():
    """theta_bar(r, s) = theta_bar(s, r)."""
    assert theta_bar(2, 0, F(3)) == theta_bar(0, 2, F(3))
