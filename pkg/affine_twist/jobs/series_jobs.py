import logging
from fractions import Fraction

from affine_twist.algebra import Monomial
from affine_twist.characters import (
    D4_FAMILY,
    DROP,
    SL2_HALF_FAMILY,
    SL3_FAMILY,
    Y,
    Specialization,
    a2_flow_half_lambda1,
    a2_flow_third_rho,
    apply_spectral_flow,
    bp_flowed_char,
    build_d4_char,
    build_sl2_boundary_char,
    build_sl2_half_char,
    build_sl3_boundary_char,
    d4_flow,
    evaluate,
    sl2_flow,
)
from affine_twist.exceptions import ParameterError
from affine_twist.items import SeriesItem
from affine_twist.jobs import Job
from affine_twist.modforms import dedekind_eta, eisenstein, jacobi_theta, twisted_eisenstein

FAMILIES = ("sl2-boundary", "sl2-half", "sl3-boundary", "d4", "bp")

# z_i -> 1 along (1 + eps)^(c_i); chosen off every lattice zero and Eisenstein pole
DEFAULT_DIRECTIONS = {
    "sl2-boundary": (1,),
    "sl2-half": (1,),
    "sl3-boundary": (1, 3),
    "d4": (1, 3, 7, 19),
}

_SL3_FLOWS = {
    "half-lambda1": a2_flow_half_lambda1,
    "third-rho": a2_flow_third_rho,
}


def _rational(text, what):
    try:
        return Fraction(text)
    except (TypeError, ValueError, ZeroDivisionError):
        raise ParameterError(f"{what} must be a rational number, got {text!r}") from None


def build_family_expr(family, u=None, j=None, module=None):
    """The unflowed character expression of one module of a family."""
    if family == "sl2-boundary":
        if u is None or j is None:
            raise ParameterError("sl2-boundary needs --u and --j")
        return build_sl2_boundary_char(u, j)
    if family == "sl2-half":
        return build_sl2_half_char(module or SL2_HALF_FAMILY[0])
    if family == "sl3-boundary":
        return build_sl3_boundary_char(module or SL3_FAMILY[0])
    if family == "d4":
        return build_d4_char(module or D4_FAMILY[0])
    raise ParameterError(f"Unknown character family {family!r}; expected one of {FAMILIES}")


def parse_flow(family, text):
    """
    sl2 families take a half-integer ell; sl3 takes 'half-lambda1' or
    'third-rho'; d4 takes 'INDEX:COEFFICIENT' such as '2:-1/2'.
    """
    if text is None:
        return None
    if family.startswith("sl2"):
        return sl2_flow(_rational(text, "Flow parameter"))
    if family == "sl3-boundary":
        if text not in _SL3_FLOWS:
            raise ParameterError(f"Unknown A2 flow {text!r}; expected one of {sorted(_SL3_FLOWS)}")
        return _SL3_FLOWS[text]()
    if family == "d4":
        index, _, coefficient = text.partition(":")
        if not index.strip().isdigit():
            raise ParameterError(f"D4 flows are written INDEX:COEFFICIENT, got {text!r}")
        return d4_flow(int(index), _rational(coefficient or "1", "Flow coefficient"))
    raise ParameterError(f"Family {family!r} takes no flow")


def _exponent(text):
    text = text.strip()
    if text.startswith("q^"):
        text = text[2:]
    return _rational(text, "Specialization exponent")


def parse_specialization(expr, family, z=None, y=None, directions=None, trunc=None, eps_degree=None):
    """
    ``z`` is '1' for the limit z_i -> 1, or comma-separated exponents s_i
    for z_i = q^(s_i). ``y`` may only be '1', which drops the y-prefactor.
    """
    if y not in (None, "1", DROP):
        raise ParameterError(f"Only y = 1 is supported, got {y!r}")
    names = [v for v in expr.variables if v != Y]
    if z is None or z.strip() == "1":
        chosen = directions or DEFAULT_DIRECTIONS.get(family, (1,) * len(names))
        if len(chosen) != len(names):
            raise ParameterError(f"{family} needs {len(names)} limit directions, got {len(chosen)}")
        return Specialization.at_one(dict(zip(names, chosen)), trunc, eps_degree)
    values = [_exponent(part) for part in z.split(",")]
    if len(values) == 1:
        values = values * len(names)
    if len(values) != len(names):
        raise ParameterError(f"{family} needs {len(names)} z-values, got {len(values)}")
    return Specialization.at_powers(dict(zip(names, values)), trunc)


def family_series(family, trunc, eps_degree, u=None, j=None, module=None, flow=None, z=None, y=None, directions=None):
    """(label, series) for one specialized, optionally flowed, character."""
    if family == "bp":
        return "bp(k=-9/4, flowed vacuum)", bp_flowed_char()
    expr = build_family_expr(family, u=u, j=j, module=module)
    flow_data = parse_flow(family, flow)
    if flow_data is not None:
        expr = apply_spectral_flow(expr, flow_data)
    spec = parse_specialization(expr, family, z, y, directions, trunc, eps_degree)
    return expr.label, evaluate(expr, spec)


class ThetaJob(Job):
    name = "theta"

    def run(self):
        arg = Monomial(turn=self.turn or 0, exponent=self.exponent or 0)
        self.log(f"theta_{self.index}({arg}; q^{self.u}) through q^{self.trunc}")
        series = jacobi_theta(self.index, arg, self.u, self.trunc)
        yield SeriesItem(
            "theta",
            f"theta_{self.index}",
            series,
            {"index": self.index, "exponent": str(arg.exponent), "turn": str(arg.turn), "u": str(self.u)},
        )


class EtaJob(Job):
    name = "eta"

    def run(self):
        yield SeriesItem("eta", f"eta(q^{self.u})", dedekind_eta(self.trunc, self.u), {"u": str(self.u)})


class EisensteinJob(Job):
    name = "eisenstein"

    def run(self):
        if self.lam is None and self.turn is None:
            series = eisenstein(self.k, self.trunc)
            label = f"E_{self.k}"
        else:
            lam, turn = self.lam or Fraction(0), self.turn or Fraction(0)
            series = twisted_eisenstein(self.k, lam, Monomial(turn=turn), self.trunc)
            label = f"E_{self.k}[{lam};{turn}]"
        yield SeriesItem("eisenstein", label, series, {"k": self.k})


class CharacterJob(Job):
    name = "char"

    def run(self):
        label, series = family_series(
            self.family,
            self.trunc,
            self.eps_degree,
            u=self.u,
            j=self.j,
            module=self.module,
            flow=self.flow,
            z=self.z,
            y=self.y,
            directions=self.directions,
        )
        if series.is_empty():
            self.log(f"{label} has no known terms below q^{self.trunc}", logging.WARNING)
        params = {"family": self.family, "flow": self.flow, "z": self.z, "y": self.y}
        yield SeriesItem("character", label, series, {k: v for k, v in params.items() if v is not None})
