import random
from fractions import Fraction

import pytest
from sympy import QQ, Poly, Rational

from affine_twist.exceptions import ParameterError
from affine_twist.fusion import Level, twisted_zhu_roots
from affine_twist.uea import (
    GENERATORS,
    X,
    PBWElement,
    UL0Element,
    VermaModule,
    appen2_closed,
    bracket,
    check_reduction_identities,
    format_pbw,
    golden_vector,
    is_singular,
    load_vectors,
    parse_pbw,
    parse_state,
    ul0_reduce,
    zhu_twisted_image,
)

F = Fraction

K_MINUS_FOUR_THIRDS = Level(2, 3)


def poly(*coeffs):
    """Ascending rational coefficients as a Poly in x."""
    return Poly(sum(Rational(c.numerator, c.denominator) * X ** i for i, c in enumerate(map(F, coeffs))), X, domain=QQ)


def test_stored_vectors_load():
    assert {"sing", "sing_as_printed", "sing2", "sing3", "sing4"} <= set(load_vectors())
    with pytest.raises(ParameterError):
        golden_vector("sing5")


@pytest.mark.parametrize("name", ["sing", "sing2", "sing4"])
def test_singular_vectors(name):
    """The stored k = -4/3 singular vectors are annihilated by every raising mode."""
    module, element, expected = golden_vector(name)
    assert expected is True
    assert is_singular(element, module)


def test_printed_signs_are_not_singular():
    """With the charged terms' signs as printed, e_1 or f_1 survives."""
    module, element, _ = golden_vector("sing_as_printed")
    assert not is_singular(element, module)


def test_long_generator_is_singular():
    """The long V(-4/3, -4/3) generator is singular with its stored coefficients."""
    module, element, _ = golden_vector("sing3")
    assert is_singular(element, module)


def test_perturbed_vector_is_not_singular():
    """Adding a multiple of h[-3]|0> breaks singularity."""
    module, element, _ = golden_vector("sing")
    perturbed = element + parse_pbw("h[-3]", module)
    assert not is_singular(perturbed, module)


def test_singular_check_needs_homogeneous_vector():
    module = VermaModule(F(-4, 3), vacuum=True)
    with pytest.raises(ParameterError):
        is_singular(parse_pbw("h[-1] + h[-2]", module), module)


def test_central_term():
    """e(1) f(-1)|0> = k|0>."""
    module = VermaModule(F(-4, 3), vacuum=True)
    result = module.apply_word([("e", 1), ("f", -1)])
    assert result == PBWElement.highest_weight().scale(F(-4, 3))


def test_highest_weight_action():
    """h(0) acts on |j> by j and f(0) creates in the Verma module but not in the vacuum."""
    verma = VermaModule(F(-4, 3), F(-2, 3))
    assert verma.apply_word([("h", 0)]) == PBWElement.highest_weight().scale(F(-2, 3))
    assert not verma.apply_word([("f", 0)]).is_zero()
    assert VermaModule(F(-4, 3), vacuum=True).apply_word([("f", 0)]).is_zero()
    with pytest.raises(ParameterError):
        VermaModule(F(-4, 3), F(1), vacuum=True)


def test_singular_vector_zhu_image():
    """The singular vector maps to a multiple of x(x^2 - 4/9), whose roots are the twisted Zhu roots."""
    module, element, _ = golden_vector("sing")
    image = zhu_twisted_image(element, K_MINUS_FOUR_THIRDS)
    assert image == poly(0, -4, 0, 9)
    found = sorted(F(int(r.p), int(r.q)) for r in image.ground_roots())
    assert found == sorted(twisted_zhu_roots(K_MINUS_FOUR_THIRDS))


@pytest.mark.parametrize(
    "text, expected",
    [
        ("e[-2]f[-1]", (F(1, 6), F(3, 8))),
        ("f[-2]e[-1]", (F(1, 6), F(-3, 8))),
        ("h[-1]", (0, 1)),
        ("h[-2]", (0, -1)),
    ],
)
def test_weight_zero_images(text, expected):
    """Images of short weight-zero vectors at k = -4/3."""
    module, element = parse_state(f"{text} |vac: level=-4/3>")
    assert zhu_twisted_image(element, module.level) == poly(*expected)


def test_zhu_image_needs_weight_zero():
    module, element = parse_state("e[-1] |vac: level=-4/3>")
    with pytest.raises(ParameterError):
        zhu_twisted_image(element, module.level)


def test_parse_and_format():
    """Text written back by format_pbw parses to the same element."""
    module, element, _ = golden_vector("sing2")
    text = format_pbw(element, module)
    assert text.endswith("|hw: level=-4/3, j=-2/3>")
    again_module, again = parse_state(text)
    assert again == element
    assert again_module.hw == F(-2, 3)


def test_parse_errors():
    with pytest.raises(ParameterError):
        parse_state("e[-1]")
    with pytest.raises(ParameterError):
        parse_state("x[-1] |vac: level=-4/3>")


def test_parse_normal_orders():
    """f[-1]e[-1] and e[-1]f[-1] differ by h[-2] in the vacuum module."""
    module = VermaModule(F(-4, 3), vacuum=True)
    left = parse_pbw("e[-1]f[-1]", module)
    right = parse_pbw("f[-1]e[-1]", module)
    assert left - right == parse_pbw("h[-2]", module)


@pytest.mark.parametrize("p, q", [(2, 3), (3, 2), (3, 4)])
def test_reduction_identities(p, q):
    """Direct U(L0) reductions match both closed forms for small parameters."""
    lvl = Level(p, q)
    for n in range(1, p):
        for kappa in range(1, q + 1):
            for a in range(2):
                for b in range(2):
                    for d in range(3):
                        check_reduction_identities(a, b, d, n, kappa, lvl)


def test_second_reduction_vanishes_below_p_minus_n():
    """For d < p - n the second projection lies in T- U(L0)."""
    lvl = Level(3, 2)
    assert appen2_closed(0, 0, 0, 1, 1, lvl) == UL0Element()
    _, direct = ul0_reduce(0, 0, 0, 1, 1, lvl)
    assert direct == UL0Element()


def test_ul0_parameter_bounds():
    with pytest.raises(ParameterError):
        ul0_reduce(0, 0, 0, 3, 1, K_MINUS_FOUR_THIRDS)
    with pytest.raises(ParameterError):
        ul0_reduce(-1, 0, 0, 1, 1, K_MINUS_FOUR_THIRDS)


def random_state(rng, module):
    """A few creation modes applied to the highest-weight vector."""
    word = [(rng.choice(GENERATORS), rng.choice((-2, -1))) for _ in range(rng.randrange(1, 4))]
    if not module.vacuum and rng.random() < 0.5:
        word.append(("f", 0))
    return module.apply_word(word)


@pytest.mark.parametrize("vacuum", [False, True])
@pytest.mark.parametrize("seed", range(15))
def test_mode_commutators_act_as_brackets(seed, vacuum):
    """x(y v) - y(x v) = [x, y] v for random modes x, y and random states v."""
    rng = random.Random(seed)
    module = VermaModule(F(-4, 3), vacuum=True) if vacuum else VermaModule(F(-4, 3), F(-2, 3))
    v = random_state(rng, module)
    x, y = ((rng.choice(GENERATORS), rng.randrange(-2, 3)) for _ in range(2))
    lhs = module.apply_mode(*x, module.apply_mode(*y, v)) - module.apply_mode(*y, module.apply_mode(*x, v))
    terms, central = bracket(x, y)
    rhs = v.scale(central * module.level)
    for c, gen, mode in terms:
        rhs = rhs + module.apply_mode(gen, mode, v).scale(c)
    assert lhs == rhs


@pytest.mark.parametrize("seed", range(10))
def test_h0_measures_charge(seed):
    """h_0 acts on a normal-ordered monomial by the highest weight plus its charge."""
    rng = random.Random(seed)
    module = VermaModule(F(-4, 3), F(-2, 3))
    word = [(rng.choice(GENERATORS), rng.choice((-2, -1))) for _ in range(rng.randrange(1, 4))]
    v = module.apply_word(word)
    for mono, c in v.terms.items():
        single = PBWElement({mono: c})
        weight = module.hw + sum(2 if g == "e" else -2 if g == "f" else 0 for g, _ in mono)
        assert module.apply_mode("h", 0, single) == single.scale(weight)
