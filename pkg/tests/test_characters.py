import random
from fractions import Fraction

import pytest

from affine_twist.characters import (
    CharExpr,
    Specialization,
    a2_flow_third_rho,
    apply_spectral_flow,
    bp_central_charge,
    bp_flow_state,
    bp_flowed_char,
    build_d4_char,
    build_sl2_boundary_char,
    build_sl2_half_char,
    build_sl3_boundary_char,
    compose_flows,
    d4_flow,
    evaluate,
    flowed_weight_dim,
    general_admissible_weight_dim,
    scale_flow,
    sl2_flow,
    spectral_flow_state,
    sugawara_central_charge,
    untwisted_weight_dim,
)
from affine_twist.exceptions import ParameterError, PoleError, UnknownVariable
from affine_twist.jobs.series_jobs import family_series
from affine_twist.settings import EPS_DEGREE

F = Fraction

TRUNC = F(10)

# z_i = q^(s_i) for D4, built from masses a_i via z = (a1 - a2, a2 - a3, a3 + a4, a3 - a4)
D4_MASSES = [
    (F(1, 10), F(2, 10), F(3, 10), F(4, 10)),
    (F(1, 11), F(2, 11), F(3, 11), F(4, 11)),
    (F(2, 17), F(3, 17), F(5, 17), F(7, 17)),
]


def d4_specialization(a, trunc):
    a1, a2, a3, a4 = a
    z = {"z1": a1 - a2, "z2": a2 - a3, "z3": a3 + a4, "z4": a3 - a4}
    return Specialization.at_powers(z, trunc)


def flowed_boundary(u, j, trunc=TRUNC, direction=1):
    expr = apply_spectral_flow(build_sl2_boundary_char(u, j), sl2_flow(F(-1, 2)))
    return evaluate(expr, Specialization.at_one({"z": direction}, trunc))


@pytest.mark.parametrize("j, exponent", [(0, F(1, 6)), (1, F(0))])
def test_flowed_boundary_leading_terms(j, exponent):
    """At k = -4/3 the flowed characters start at q^(Delta - c/24) with coefficient 1."""
    assert flowed_boundary(3, j).leading() == (exponent, 1)


@pytest.mark.parametrize("u", [3, 5, 7])
def test_flowed_boundary_symmetry(u):
    """The flowed j and u-1-j characters coincide at y = z = 1."""
    for j in range((u - 1) // 2):
        assert flowed_boundary(u, j).matches(flowed_boundary(u, u - 1 - j), TRUNC)


def test_limit_is_direction_independent():
    """Two limit directions give the same series."""
    assert flowed_boundary(3, 1, direction=1) == flowed_boundary(3, 1, direction=3)


def test_untwisted_character_has_pole_at_one():
    """The unflowed j = 1 character at k = -4/3 diverges at z = 1."""
    with pytest.raises(PoleError):
        evaluate(build_sl2_boundary_char(3, 1), Specialization.at_one({"z": 1}, TRUNC))


def test_untwisted_vacuum_is_finite_at_one():
    """The unflowed vacuum has matching zeros and a finite limit."""
    series = evaluate(build_sl2_boundary_char(3, 0), Specialization.at_one({"z": 1}, TRUNC))
    assert not series.is_empty()


def test_boundary_builder_rejects_even_u():
    """u must be odd."""
    with pytest.raises(ParameterError):
        build_sl2_boundary_char(4, 0)
    with pytest.raises(ParameterError):
        build_sl2_boundary_char(3, 3)


def test_half_level_vacuum_expansion():
    """ch[L0] at z = 1 is q^(1/24)(1 + 3q + 9q^2 + ...)."""
    series = evaluate(build_sl2_half_char("L0"), Specialization.at_powers({"z": 0}, F(4)))
    assert series.leading() == (F(1, 24), 1)
    assert series.coefficient(F(25, 24)) == 3
    assert series.coefficient(F(49, 24)) == 9


def test_half_level_l1_is_shifted():
    """ch[L1] at z = 1 starts half a unit above ch[L0]."""
    series = evaluate(build_sl2_half_char("L1"), Specialization.at_powers({"z": 0}, F(4)))
    assert series.leading() == (F(13, 24), 2)


def test_half_level_dplus_pole():
    """ch[D+] needs theta_1(1) in a denominator and diverges at z = 1."""
    with pytest.raises(PoleError):
        evaluate(build_sl2_half_char("Dplus_half"), Specialization.at_one({"z": 1}, F(4)))


def test_a2_swap_symmetry():
    """ch[Lambda1] at (a, b) equals ch[Lambda2] at (b, a)."""
    a, b = F(1, 5), F(2, 7)
    first = evaluate(build_sl3_boundary_char("Lambda1"), Specialization.at_powers({"z1": a, "z2": b}, F(6)))
    second = evaluate(build_sl3_boundary_char("Lambda2"), Specialization.at_powers({"z1": b, "z2": a}, F(6)))
    assert first == second


def test_a2_third_rho_flow_is_finite():
    """The rho/2 module flowed along rho/3 is a well-defined series at generic z."""
    flowed = apply_spectral_flow(build_sl3_boundary_char("rho_half"), a2_flow_third_rho())
    series = evaluate(flowed, Specialization.at_powers({"z1": F(1, 5), "z2": F(2, 7)}, F(4)))
    assert not series.is_empty()


def test_flow_composition():
    """sigma^(1/2) twice is sigma^1, as flow data and as evaluated series."""
    twice = compose_flows(sl2_flow(F(1, 2)), sl2_flow(F(1, 2)))
    once = sl2_flow(1)
    assert twice.y_map == once.y_map
    assert twice.shift == once.shift
    assert scale_flow(sl2_flow(F(1, 2)), 2).y_map == once.y_map

    vacuum = build_sl2_boundary_char(3, 0)
    spec = Specialization.at_powers({"z": F(1, 7)}, F(6))
    stepwise = apply_spectral_flow(apply_spectral_flow(vacuum, sl2_flow(F(1, 2))), sl2_flow(F(1, 2)))
    assert evaluate(stepwise, spec) == evaluate(apply_spectral_flow(vacuum, once), spec)


def test_zero_flow_is_identity():
    """sigma^0 changes nothing."""
    vacuum = build_sl2_boundary_char(5, 1)
    spec = Specialization.at_powers({"z": F(1, 9)}, F(5))
    assert evaluate(apply_spectral_flow(vacuum, sl2_flow(0)), spec) == evaluate(vacuum, spec)


def test_flow_with_unknown_variable():
    """A flow along z1 cannot act on an sl2 character."""
    with pytest.raises(UnknownVariable):
        apply_spectral_flow(build_sl2_boundary_char(3, 0), sl2_flow(1, "z1"))


def test_sl2_flow_needs_half_integers():
    """ell = 1/3 is not a flow parameter."""
    with pytest.raises(ParameterError):
        sl2_flow(F(1, 3))


def test_expression_json_round_trip():
    """A flowed expression evaluates identically after a JSON round trip."""
    expr = apply_spectral_flow(build_sl2_boundary_char(5, 2), sl2_flow(F(-1, 2)))
    again = CharExpr.from_json(expr.to_json())
    spec = Specialization.at_powers({"z": F(1, 11)}, F(5))
    assert evaluate(again, spec) == evaluate(expr, spec)


def test_bp_series_data():
    """The stored BP series: q^(1/6)(1 + 4q + 10q^2 + 24q^3 + 51q^4 + 100q^5 + O(q^6))."""
    series = bp_flowed_char()
    assert series.trunc == F(37, 6)
    assert series.coefficient(F(7, 6)) == 4
    assert series.coefficient(F(25, 6)) == 51


def test_bp_flow_lands_on_the_series_exponent():
    """|1/4, -3/8> flows to |0, -5/16>, whose character starts at q^(1/6)."""
    state = bp_flow_state(F(1, 4), F(-3, 8), F(1, 2), F(-9, 4))
    assert (state.dynkin_label, state.conformal_dim) == (0, F(-5, 16))
    assert state.conformal_dim - bp_central_charge(F(-9, 4)) / 24 == F(1, 6)


@pytest.mark.parametrize("j, label, dim", [(0, F(2, 3), F(-1, 12)), (1, F(0), F(-1, 4))])
def test_flowed_weight_dim(j, label, dim):
    """Label and conformal dimension of the flowed k = -4/3 modules."""
    wd = flowed_weight_dim(3, j)
    assert (wd.dynkin_label, wd.conformal_dim) == (label, dim)
    assert general_admissible_weight_dim(2, 3, 1, j) == wd


@pytest.mark.parametrize("u", [3, 5, 7])
def test_flowed_weight_symmetry(u):
    """label(j) = -label(u-1-j) and dim(j) = dim(u-1-j)."""
    for j in range(u):
        a, b = flowed_weight_dim(u, j), flowed_weight_dim(u, u - 1 - j)
        assert a.dynkin_label == -b.dynkin_label
        assert a.conformal_dim == b.conformal_dim


@pytest.mark.parametrize("p, q", [(2, 3), (3, 2), (3, 4), (4, 3)])
def test_general_weight_matches_flowed_sugawara(p, q):
    """Flowing the untwisted Sugawara data by -1/2 gives the general formula."""
    level = F(p, q) - 2
    for i in range(1, p):
        for j in range(q):
            plain = untwisted_weight_dim(p, q, i, j)
            flowed = spectral_flow_state(plain.dynkin_label, plain.conformal_dim, F(-1, 2), level)
            assert flowed == general_admissible_weight_dim(p, q, i, j)


def test_central_charges():
    """c = -6 at k = -4/3; the critical level is rejected."""
    assert sugawara_central_charge(F(-4, 3)) == -6
    with pytest.raises(ParameterError):
        sugawara_central_charge(-2)


@pytest.mark.slow
@pytest.mark.parametrize("index, module", [(1, "L1"), (3, "L3"), (4, "L4")])
@pytest.mark.parametrize("masses", D4_MASSES)
def test_d4_flowed_vacuum_identities(index, module, masses):
    """sigma^(Lambda_i) of the D4 vacuum is L(-2 Lambda_i) at generic z."""
    spec = d4_specialization(masses, F(8))
    flowed = apply_spectral_flow(build_d4_char("vac"), d4_flow(index))
    assert evaluate(flowed, spec).matches(evaluate(build_d4_char(module), spec), F(8))


def test_d4_flow_presets():
    """Only the displayed D4 flows exist."""
    assert d4_flow(2, F(-1, 2)).shift == {"z2": F(-1, 2)}
    with pytest.raises(ParameterError):
        d4_flow(2)


@pytest.mark.parametrize("u", [3, 5])
@pytest.mark.parametrize("seed", range(10))
def test_random_flow_composition(u, seed):
    """sigma^l followed by sigma^l' is sigma^(l + l') for random half-integer pairs."""
    rng = random.Random(seed)
    first, second = (rng.choice((F(-1), F(-1, 2), F(1, 2), F(1))) for _ in range(2))
    composed = compose_flows(sl2_flow(first), sl2_flow(second))
    direct = sl2_flow(first + second)
    assert composed.y_map == direct.y_map
    assert composed.shift == direct.shift

    char = build_sl2_boundary_char(u, rng.randrange(0, u))
    spec = Specialization.at_powers({"z": F(1, 7)}, F(6))
    stepwise = apply_spectral_flow(apply_spectral_flow(char, sl2_flow(first)), sl2_flow(second))
    assert evaluate(stepwise, spec) == evaluate(apply_spectral_flow(char, direct), spec)


@pytest.mark.parametrize(
    "family, options, directions",
    [
        ("sl2-boundary", {"u": 3, "j": 0}, [(1,), (3,)]),
        ("sl2-boundary", {"u": 5, "j": 1, "flow": "-1/2"}, [(1,), (3,)]),
        ("sl2-boundary", {"u": 5, "j": 2, "flow": "-1/2"}, [(1,), (2,)]),
        ("sl2-half", {"module": "L1", "flow": "-1/2"}, [(1,), (2,)]),
        ("sl3-boundary", {"module": "Lambda0", "flow": "half-lambda1"}, [(1, 3), (2, 5)]),
    ],
)
def test_limits_agree_across_directions(family, options, directions):
    """z -> 1 gives the same series along different generic directions."""
    trunc = F(4)
    found = [family_series(family, trunc, EPS_DEGREE, directions=d, **options)[1] for d in directions]
    assert found[0].matches(found[1], trunc)
