import json
import os
from fractions import Fraction

import pytest

from affine_twist.exceptions import ParameterError
from affine_twist.fusion import (
    HW,
    TWISTED,
    AdmLabel,
    Level,
    ModuleKind,
    ModuleLabel,
    admissible_labels,
    bimodule_oracle,
    closed_form_matrices,
    fuse,
    fuse_hw_hw,
    fuse_hw_twisted,
    fusion_table,
    label_for_weight,
    twisted_zhu_roots,
    untwisted_zhu_roots,
    vacuum,
    verlinde_check,
    verlinde_matrices,
)
from affine_twist.jobs.fusion_jobs import oracle_verdicts, parse_module
from affine_twist.settings import DATA_DIR

F = Fraction

K_MINUS_FOUR_THIRDS = Level(2, 3)

ORACLE_LEVELS = [(2, 3), (2, 5), (3, 2), (3, 4), (4, 3)]


@pytest.fixture(scope="module")
def tables():
    with open(os.path.join(DATA_DIR, "fusion_tables.json"), "r") as f:
        return json.load(f)


def as_fractions(matrices):
    return [[[F(x) for x in row] for row in m] for m in matrices]


def test_level_validation():
    """p >= 2, q >= 1 and coprime."""
    assert K_MINUS_FOUR_THIRDS.level == F(-4, 3)
    with pytest.raises(ParameterError):
        Level(2, 4)
    with pytest.raises(ParameterError):
        Level(1, 3)


def test_admissible_weights():
    """At k = -4/3 the admissible weights are 0, -2/3 and -4/3."""
    weights = sorted(lab.weight for lab in admissible_labels(K_MINUS_FOUR_THIRDS))
    assert weights == [F(-4, 3), F(-2, 3), 0]
    assert len(admissible_labels(Level(3, 4))) == 8


@pytest.mark.parametrize("convention", [HW, TWISTED])
def test_label_for_weight(convention):
    """Weights map back to their labels; non-admissible weights give None."""
    for lab in admissible_labels(Level(3, 4), convention):
        assert label_for_weight(Level(3, 4), lab.weight, convention) == lab
    assert label_for_weight(K_MINUS_FOUR_THIRDS, F(1, 3), convention) is None
    assert label_for_weight(K_MINUS_FOUR_THIRDS, F(2, 3), convention) is None
    assert vacuum(K_MINUS_FOUR_THIRDS, convention).weight == 0


def test_label_ranges():
    """n runs over [1, p-1] for hw labels and [0, p-2] for twisted ones."""
    assert AdmLabel(K_MINUS_FOUR_THIRDS, 0, 1, TWISTED).weight == 0
    with pytest.raises(ParameterError):
        AdmLabel(K_MINUS_FOUR_THIRDS, 0, 1, HW)
    with pytest.raises(ParameterError):
        AdmLabel(K_MINUS_FOUR_THIRDS, 1, 4, HW)
    with pytest.raises(ParameterError):
        AdmLabel(K_MINUS_FOUR_THIRDS, 1, 1, "vertex")


def test_twisted_zhu_roots():
    """x(x^2 - 4/9) at k = -4/3."""
    assert sorted(twisted_zhu_roots(K_MINUS_FOUR_THIRDS)) == [F(-2, 3), 0, F(2, 3)]
    assert sorted(untwisted_zhu_roots(K_MINUS_FOUR_THIRDS)) == [F(-4, 3), F(-2, 3), 0]


def test_twisted_zhu_roots_are_flowed_weights():
    """The roots are the admissible weights shifted by -k/2."""
    lvl = Level(3, 4)
    shifted = sorted(lab.weight - lvl.level / 2 for lab in admissible_labels(lvl))
    assert sorted(twisted_zhu_roots(lvl)) == shifted


def test_vacuum_is_a_unit():
    """L(0) x sigma(L(j)) = sigma(L(j)) for every j."""
    lvl = Level(3, 4)
    unit = vacuum(lvl)
    for lab in admissible_labels(lvl):
        result = fuse_hw_twisted(lvl, unit, lab)
        assert [(m.kind, m.weight) for m in result.summands] == [(ModuleKind.TW_HW, lab.weight)]


def test_hw_twisted_examples():
    """At k = -4/3: L(-2/3) x sigma(L(-2/3)) = sigma(L(-4/3)); the kappa window kills L(-2/3) x sigma(L(-4/3))."""
    lvl = K_MINUS_FOUR_THIRDS
    j1 = label_for_weight(lvl, F(-2, 3))
    j2 = label_for_weight(lvl, F(-4, 3))
    assert fuse_hw_twisted(lvl, j1, j1).weights() == [F(-4, 3)]
    assert fuse_hw_twisted(lvl, j1, j2).is_zero
    assert fuse_hw_twisted(lvl, j2, j2).is_zero


def test_hw_hw_at_half_level():
    """L(1) x L(1) = L(0) at k = -1/2."""
    lvl = Level(3, 2)
    one = label_for_weight(lvl, 1)
    assert fuse_hw_hw(lvl, one, one).weights() == [0]
    assert fuse_hw_hw(lvl, one, label_for_weight(lvl, F(-3, 2))).weights() == [F(-1, 2)]


def test_fusion_is_commutative():
    """fuse(a, b) = fuse(b, a) on the hw x twisted table."""
    lvl = Level(3, 4)
    for row in fusion_table(lvl):
        assert fuse(lvl, row["b"], row["a"]) == row["result"]


def test_fusion_table_covers_every_pair():
    lvl = K_MINUS_FOUR_THIRDS
    table = fusion_table(lvl)
    assert len(table) == 9
    assert {row["result"].is_zero for row in table} == {True, False}


@pytest.mark.parametrize("p, q", ORACLE_LEVELS)
@pytest.mark.parametrize("kind", ["twisted", "hw", "contra"])
def test_oracle_agrees_with_closed_form(p, q, kind):
    """The bimodule quotient and the closed-form rule agree on every pair."""
    for verdict in oracle_verdicts(Level(p, q), kind):
        assert verdict.passed, verdict.detail


def test_oracle_kinds():
    lab = vacuum(K_MINUS_FOUR_THIRDS)
    assert bimodule_oracle(K_MINUS_FOUR_THIRDS, lab, lab, "twisted").weights() == [0]
    with pytest.raises(ParameterError):
        bimodule_oracle(K_MINUS_FOUR_THIRDS, lab, lab, "untwisted")


def test_contragredient_pairs(tables):
    """Mixed hw x contragredient products match the stored k = -4/3 table."""
    lvl = K_MINUS_FOUR_THIRDS
    for pair in tables["contragredient_pairs"]:
        a = ModuleLabel(ModuleKind[pair["a"][0]], label_for_weight(lvl, F(pair["a"][1])))
        b = ModuleLabel(ModuleKind[pair["b"][0]], label_for_weight(lvl, F(pair["b"][1])))
        expected = sorted((ModuleKind[kind], F(w)) for kind, w in pair["result"])
        result = fuse(lvl, a, b)
        assert sorted((m.kind, m.weight) for m in result.summands) == expected
        assert fuse(lvl, b, a) == result


def test_unsupported_kinds():
    """Two -1/2-flowed modules have no rule here."""
    lab = vacuum(K_MINUS_FOUR_THIRDS)
    twisted = ModuleLabel(ModuleKind.TW_HW, lab)
    with pytest.raises(ParameterError):
        fuse(K_MINUS_FOUR_THIRDS, twisted, twisted)


def test_closed_form_matrices(tables):
    """The closed-form N_a at k = -4/3."""
    assert closed_form_matrices() == as_fractions(tables["closed_form"])


def test_verlinde_matrices(tables):
    """The Verlinde formula over Q(zeta_12) gives the stored integer matrices."""
    assert verlinde_matrices() == as_fractions(tables["verlinde"])


def test_verlinde_agrees_up_to_signs():
    """N_0 agrees; elsewhere Verlinde only adds entries of -1 where the closed form has 0."""
    closed, verlinde = verlinde_check()
    assert closed[0] == verlinde[0]
    for c, v in zip(closed, verlinde):
        for c_row, v_row in zip(c, v):
            for x, y in zip(c_row, v_row):
                assert x == y or (x == 0 and y == -1)


def test_parse_module():
    """KIND:n:kappa strings."""
    module = parse_module(K_MINUS_FOUR_THIRDS, "TW_HW:1:2")
    assert module.kind == ModuleKind.TW_HW
    assert module.weight == F(-2, 3)
    assert parse_module(K_MINUS_FOUR_THIRDS, "s-1/2(L):1:1").kind == ModuleKind.TW_HW
    for bad in ("TW_HW:1", "TW_HW:x:1", "XX:1:1"):
        with pytest.raises(ParameterError):
            parse_module(K_MINUS_FOUR_THIRDS, bad)


UNIT_LEVELS = [(2, 3), (3, 2), (3, 4), (4, 3), (2, 5), (5, 2)]

# (kind of the vacuum, kind of the other module, kind of the result)
UNIT_CASES = [
    (ModuleKind.HW, ModuleKind.HW, ModuleKind.HW),
    (ModuleKind.HW, ModuleKind.TW_HW, ModuleKind.TW_HW),
    (ModuleKind.HW, ModuleKind.CONTRA, ModuleKind.CONTRA),
    (ModuleKind.CONTRA, ModuleKind.HW, ModuleKind.HW),
    (ModuleKind.CONTRA, ModuleKind.CONTRA, ModuleKind.CONTRA),
    (ModuleKind.CONTRA, ModuleKind.TW_CONTRA, ModuleKind.TW_CONTRA),
    (ModuleKind.CONTRA, ModuleKind.TW_HW_PLUS, ModuleKind.TW_HW_PLUS),
    (ModuleKind.HW, ModuleKind.TW_CONTRA_MINUS, ModuleKind.TW_CONTRA_MINUS),
]


@pytest.mark.parametrize("p, q", UNIT_LEVELS)
@pytest.mark.parametrize("unit_kind, kind, expected", UNIT_CASES)
def test_vacuum_is_a_unit_for_every_kind(p, q, unit_kind, kind, expected):
    """Fusing with the vacuum returns the other module, in both orders."""
    lvl = Level(p, q)
    unit = ModuleLabel(unit_kind, vacuum(lvl))
    for lab in admissible_labels(lvl):
        other = ModuleLabel(kind, lab)
        for result in (fuse(lvl, unit, other), fuse(lvl, other, unit)):
            assert [(m.kind, m.weight) for m in result.summands] == [(expected, lab.weight)]


def contra_times_hw(lvl, j1, j2):
    a = ModuleLabel(ModuleKind.CONTRA, label_for_weight(lvl, F(j1)))
    b = ModuleLabel(ModuleKind.HW, label_for_weight(lvl, F(j2)))
    return [(m.kind, m.weight) for m in fuse(lvl, a, b).summands]


def test_mixed_rule_follows_n_split():
    """With both weights admissible, n2 - n1 decides between L(j2 - j1) and (L(j1 - j2))*."""
    lvl = Level(4, 3)
    assert contra_times_hw(lvl, F(2, 3), 0) == [(ModuleKind.CONTRA, F(2, 3))]
    assert contra_times_hw(lvl, F(-2, 3), 0) == [(ModuleKind.CONTRA, F(-2, 3))]
    assert contra_times_hw(lvl, 0, F(2, 3)) == [(ModuleKind.HW, F(2, 3))]
    assert contra_times_hw(lvl, 1, 2) == [(ModuleKind.HW, 1)]
    assert contra_times_hw(Level(5, 2), F(1, 2), 0) == [(ModuleKind.CONTRA, F(1, 2))]
    assert contra_times_hw(Level(3, 4), 1, 0) == [(ModuleKind.CONTRA, 1)]


def test_mixed_rule_falls_back_to_the_admissible_module():
    """n2 = n1 with kappa2 < kappa1: L(j2 - j1) is not admissible, so its dual is used."""
    lvl = K_MINUS_FOUR_THIRDS
    assert contra_times_hw(lvl, F(-4, 3), F(-2, 3)) == [(ModuleKind.CONTRA, F(-2, 3))]
    assert contra_times_hw(lvl, F(-2, 3), F(-4, 3)) == [(ModuleKind.HW, F(-2, 3))]


def test_twisted_mixed_rules_follow_n_split():
    """The sigma^(1/2) and sigma^(-1/2) variants split like the untwisted rule."""
    lvl = Level(4, 3)
    plus = fuse(
        lvl,
        ModuleLabel(ModuleKind.CONTRA, label_for_weight(lvl, F(2, 3))),
        ModuleLabel(ModuleKind.TW_HW_PLUS, vacuum(lvl)),
    )
    assert [(m.kind, m.weight) for m in plus.summands] == [(ModuleKind.TW_CONTRA, F(2, 3))]
    minus = fuse(
        lvl,
        ModuleLabel(ModuleKind.HW, label_for_weight(lvl, F(2, 3))),
        ModuleLabel(ModuleKind.TW_CONTRA_MINUS, vacuum(lvl)),
    )
    assert [(m.kind, m.weight) for m in minus.summands] == [(ModuleKind.TW_HW, F(2, 3))]


def test_mixed_rule_without_admissible_result():
    """(L(1))* x L(-3/4) at k = -5/4: neither 7/4 nor -7/4 is admissible."""
    lvl = Level(3, 4)
    with pytest.raises(ParameterError):
        contra_times_hw(lvl, 1, F(-3, 4))


@pytest.mark.parametrize("p, q", [(3, 2), (3, 4), (4, 3)])
def test_contra_hw_table_marks_unresolved_pairs(p, q):
    """The table never reports a zero for the mixed rule; unresolved pairs are undefined."""
    lvl = Level(p, q)
    table = fusion_table(lvl, (ModuleKind.CONTRA, ModuleKind.HW))
    assert not any(row["result"].is_zero for row in table)
    undefined = [row for row in table if not row["result"].defined]
    assert undefined
    for row in undefined:
        assert row["result"].to_json() is None
        assert str(row["result"]) == "undefined"
    resolved = [row for row in table if row["result"].defined]
    assert all(len(row["result"].summands) == 1 for row in resolved)


def test_kappa_window_removes_non_admissible_summand():
    """At k = -4/3, L(-4/3) x L(-4/3) would have weight -8/3, which is not admissible."""
    lvl = K_MINUS_FOUR_THIRDS
    j = label_for_weight(lvl, F(-4, 3))
    assert label_for_weight(lvl, F(-8, 3)) is None
    assert fuse_hw_hw(lvl, j, j).is_zero
    assert fuse_hw_twisted(lvl, j, j).is_zero
