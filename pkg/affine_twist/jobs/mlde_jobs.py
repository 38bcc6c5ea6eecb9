import json
import logging
from fractions import Fraction

from affine_twist.algebra import PuiseuxSeries
from affine_twist.exceptions import ParameterError
from affine_twist.items import OperatorItem, VerdictItem
from affine_twist.jobs import Job
from affine_twist.jobs.series_jobs import family_series
from affine_twist.mlde import FULL_SL2Z, GAMMA0_2, MLDEOp, golden_operator, indicial_roots, mlde_fit, mlde_verify

GROUP_NAMES = {"full-sl2z": FULL_SL2Z, "gamma0-2": GAMMA0_2}

# Command-line shortcuts for the stored operators: which series each one annihilates
OPERATOR_FAMILIES = {
    "sl2_boundary_u3": {"family": "sl2-boundary", "u": 3, "js": (0, 1), "flow": "-1/2"},
    "sl2_boundary_u3_brackets": {"family": "sl2-boundary", "u": 3, "js": (0, 1), "flow": "-1/2"},
    "sl2_boundary_u5": {"family": "sl2-boundary", "u": 5, "js": (0, 1, 2), "flow": "-1/2"},
    "sl2_boundary_u7": {"family": "sl2-boundary", "u": 7, "js": (0, 1, 2, 3), "flow": "-1/2"},
    "sl2_half_L0": {"family": "sl2-half", "modules": ("L0",)},
    "sl2_half_flowed": {"family": "sl2-half", "modules": ("L0", "L1"), "flow": "-1/2"},
    "a2_flowed_vacuum": {"family": "sl3-boundary", "modules": ("Lambda0",), "flow": "half-lambda1"},
    "bp_twisted": {"family": "bp"},
    "d4_twisted": {"family": "d4", "modules": ("Lmid",), "flow": "2:-1/2"},
}

BOUNDARY_TWISTED = "sl2-boundary-twisted"
FIT_FAMILIES = (BOUNDARY_TWISTED,) + tuple(OPERATOR_FAMILIES)


def load_series_file(path):
    """A JSON file holding one serialized series or a list of them."""
    with open(path, "r") as f:
        data = json.load(f)
    entries = data if isinstance(data, list) else [data]
    return [(f"{path}[{i}]", PuiseuxSeries.from_json(entry)) for i, entry in enumerate(entries)]


def family_solutions(family, trunc, eps_degree, u=None, js=None, modules=None, flow=None, z=None):
    """Every listed j or module of one family, flowed and specialized alike."""
    if family == "sl2-boundary":
        if u is None:
            raise ParameterError("sl2-boundary needs --u")
        js = js or range((u - 1) // 2 + 1)
        return [family_series(family, trunc, eps_degree, u=u, j=j, flow=flow, z=z) for j in js]
    if family == "bp":
        return [family_series(family, trunc, eps_degree)]
    return [family_series(family, trunc, eps_degree, module=m, flow=flow, z=z) for m in modules or (None,)]


def _pick(value, fallback):
    return value if value is not None else fallback


def boundary_solutions(u, trunc, eps_degree):
    """The sigma^(-1/2)-flowed k = -2 + 2/u characters j = 0..(u-1)/2 at z -> 1."""
    return family_solutions("sl2-boundary", trunc, eps_degree, u=u, flow="-1/2", z="1")


class MLDEVerifyJob(Job):
    name = "mlde-verify"

    def __init__(self, *args, **kwargs):
        """
        operator names a stored operator; operator_file points at a JSON
        operator instead. The series come from series_file when given,
        otherwise from the family options or the operator's own defaults.
        """
        super().__init__(*args, **kwargs)
        for attr in ("operator", "operator_file", "series_file", "family", "u", "js", "modules", "flow", "z", "through"):
            if not hasattr(self, attr):
                setattr(self, attr, None)

    def load_operator(self):
        if self.operator_file:
            with open(self.operator_file, "r") as f:
                return self.operator_file, MLDEOp.from_json(json.load(f))
        if not self.operator:
            raise ParameterError("mlde-verify needs --operator or --operator-file")
        return self.operator, golden_operator(self.operator)

    def series(self):
        if self.series_file:
            return load_series_file(self.series_file)
        defaults = OPERATOR_FAMILIES.get(self.operator, {}) if not self.family else {}
        family = self.family or defaults.get("family")
        if family is None:
            raise ParameterError("mlde-verify needs --family or --series-file for this operator")
        return family_solutions(
            family,
            self.trunc,
            self.eps_degree,
            u=_pick(self.u, defaults.get("u")),
            js=self.js or defaults.get("js"),
            modules=self.modules or defaults.get("modules"),
            flow=_pick(self.flow, defaults.get("flow")),
            z=self.z,
        )

    def run(self):
        name, op = self.load_operator()
        for label, series in self.series():
            through = Fraction(self.through) if self.through is not None else series.trunc
            self.log(f"Checking {name} on {label} through q^{through}")
            passed = mlde_verify(op, series, through)
            if not passed:
                self.log(f"{name} does not annihilate {label}", logging.WARNING)
            yield VerdictItem(f"{name} on {label}", passed, f"through q^{through}")


class MLDEFitJob(Job):
    name = "mlde-fit"

    def solutions(self):
        """
        A label and the (label, series) solutions: the twisted boundary family
        at --u, or the characters a stored operator was derived for.
        """
        if self.family == BOUNDARY_TWISTED:
            if getattr(self, "u", None) is None:
                raise ParameterError(f"mlde-fit --family {BOUNDARY_TWISTED} needs --u")
            return f"sl2(u={self.u}) flowed by -1/2", boundary_solutions(self.u, self.trunc, self.eps_degree)
        if self.family not in OPERATOR_FAMILIES:
            raise ParameterError(f"mlde-fit supports the families {FIT_FAMILIES}, got {self.family!r}")
        entry = dict(OPERATOR_FAMILIES[self.family])
        family = entry.pop("family")
        return self.family, family_solutions(family, self.trunc, self.eps_degree, **entry)

    def run(self):
        group = GROUP_NAMES.get(self.group, self.group)
        label, solutions = self.solutions()
        self.log(f"Fitting order {self.order} over {group} to {len(solutions)} characters of {label}", logging.INFO)
        op = mlde_fit([s for _, s in solutions], self.order, group)
        yield OperatorItem(label, op, indicial_roots(op))
