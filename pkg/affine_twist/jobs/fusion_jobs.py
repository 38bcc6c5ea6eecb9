import logging

from sympy import QQ, Poly

from affine_twist.exceptions import ParameterError
from affine_twist.fusion import (
    CONVENTIONS,
    HW,
    AdmLabel,
    Level,
    ModuleKind,
    ModuleLabel,
    admissible_labels,
    bimodule_oracle,
    fuse,
    fuse_contra,
    fuse_hw_hw,
    fuse_hw_twisted,
    fusion_table,
    twisted_zhu_roots,
    untwisted_zhu_roots,
    verlinde_check,
)
from affine_twist.items import FusionItem, PolynomialItem, VerdictItem
from affine_twist.jobs import Job
from affine_twist.uea import X


def parse_kind(text):
    """A module kind by enum name (TW_HW) or by its display form (s-1/2(L))."""
    for kind in ModuleKind:
        if text in (kind.name, kind.value):
            return kind
    raise ParameterError(f"Unknown module kind {text!r}; expected one of {[k.name for k in ModuleKind]}")


def parse_module(lvl, text, convention=HW):
    """'KIND:n:kappa', for example 'TW_HW:1:2'."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ParameterError(f"Modules are written KIND:n:kappa, got {text!r}")
    kind, n, kappa = parts
    try:
        return ModuleLabel(parse_kind(kind), AdmLabel(lvl, int(n), int(kappa), convention))
    except ValueError:
        raise ParameterError(f"n and kappa must be integers in {text!r}") from None


def _closed_form_for_oracle(lvl, kind, j1, j2):
    if kind == "twisted":
        return fuse_hw_twisted(lvl, j1, j2)
    if kind == "hw":
        return fuse_hw_hw(lvl, j1, j2)
    return fuse_contra(lvl, ModuleLabel(ModuleKind.CONTRA, j1), ModuleLabel(ModuleKind.CONTRA, j2))


def oracle_verdicts(lvl, kind, convention=HW):
    """Compare the bimodule oracle with the closed form on every admissible pair."""
    labels = admissible_labels(lvl, convention)
    for j1 in labels:
        for j2 in labels:
            oracle = bimodule_oracle(lvl, j1, j2, kind)
            closed = _closed_form_for_oracle(lvl, kind, j1, j2)
            yield VerdictItem(
                f"oracle[{kind}] {j1.weight} x {j2.weight} at {lvl}",
                oracle.multiplicities() == closed.multiplicities(),
                f"oracle {oracle}, closed form {closed}",
            )


def _rational_polynomial(values):
    poly = Poly(1, X, domain=QQ)
    for value in values:
        poly = poly * Poly(X - QQ(value.numerator, value.denominator), X, domain=QQ)
    return poly


class FusionJob(Job):
    name = "fusion"

    def run(self):
        lvl = Level(self.p, self.q)
        convention = self.convention or HW
        if convention not in CONVENTIONS:
            raise ParameterError(f"Unknown label convention {convention!r}")
        if self.oracle:
            failures = 0
            for verdict in oracle_verdicts(lvl, self.oracle, convention):
                failures += not verdict.passed
                yield verdict
            if failures:
                self.log(f"{failures} pairs disagree with the {self.oracle} oracle at {lvl}", logging.WARNING)
            return
        if self.all:
            kinds = tuple(parse_kind(k) for k in (self.kinds or "HW,TW_HW").split(","))
            if len(kinds) != 2:
                raise ParameterError(f"--kinds names two module kinds, got {self.kinds!r}")
            pairs = fusion_table(lvl, kinds, convention)
            self.log(f"{len(pairs)} pairs at {lvl}", logging.INFO)
            yield FusionItem(lvl, pairs)
            return
        if not (self.a and self.b):
            raise ParameterError("fusion needs --all, --oracle or both --a and --b")
        a, b = parse_module(lvl, self.a, convention), parse_module(lvl, self.b, convention)
        yield FusionItem(lvl, [{"a": a, "b": b, "result": fuse(lvl, a, b)}])


class ZhuJob(Job):
    name = "zhu"

    def run(self):
        lvl = Level(self.p, self.q)
        if self.untwisted:
            found, label = untwisted_zhu_roots(lvl), f"untwisted Zhu relation at {lvl}"
        else:
            found, label = twisted_zhu_roots(lvl), f"twisted Zhu relation at {lvl}"
        yield PolynomialItem(label, _rational_polynomial(found), sorted(found))


class VerlindeJob(Job):
    name = "verlinde"

    def run(self):
        closed, verlinde = verlinde_check()
        for a, (c, v) in enumerate(zip(closed, verlinde)):
            yield VerdictItem(
                f"N_{a} closed form equals Verlinde",
                c == v,
                f"closed {[[str(x) for x in row] for row in c]}, Verlinde {[[str(x) for x in row] for row in v]}",
            )
