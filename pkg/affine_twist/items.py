# Records yielded by the jobs and consumed by the pipelines.
#
# Each item knows how to flatten itself to JSON-ready data; the pipelines
# decide how that data reaches the terminal or a feed file.

from dataclasses import dataclass, field

from affine_twist.algebra import scalar_to_json


@dataclass
class SeriesItem:
    kind: str
    label: str
    series: object
    params: dict = field(default_factory=dict)

    def to_dict(self):
        return {"kind": self.kind, "label": self.label, "params": self.params, "series": self.series.to_json()}

    def pretty(self):
        return f"{self.label}: {self.series.pretty()}"

    def rows(self):
        return [
            {"label": self.label, "exponent": str(e), "coefficient": str(scalar_to_json(c))}
            for e, c in self.series.items()
        ]


@dataclass
class OperatorItem:
    label: str
    operator: object
    indicial_roots: list = field(default_factory=list)

    def to_dict(self):
        return {
            "label": self.label,
            "operator": self.operator.to_json(),
            "indicial_roots": [str(r) for r in self.indicial_roots],
        }

    def pretty(self):
        roots = ", ".join(str(r) for r in self.indicial_roots)
        return f"{self.label}: {self.operator}" + (f"  [roots {roots}]" if roots else "")

    def rows(self):
        return [
            {"label": self.label, "at": t.at, "basis": t.basis, "weight": str(t.weight)}
            for t in self.operator.coeffs
        ]


@dataclass
class FusionItem:
    level: object
    pairs: list = field(default_factory=list)

    def to_dict(self):
        return {
            "level": self.level.to_json(),
            "pairs": [
                {"a": p["a"].to_json(), "b": p["b"].to_json(), "result": p["result"].to_json()}
                for p in self.pairs
            ],
        }

    def pretty(self):
        lines = [str(self.level)]
        lines.extend(f"  {p['a']} x {p['b']} = {p['result']}" for p in self.pairs)
        return "\n".join(lines)

    def rows(self):
        return [{"a": str(p["a"]), "b": str(p["b"]), "result": str(p["result"])} for p in self.pairs]


@dataclass
class VerdictItem:
    check: str
    passed: bool
    detail: str = ""

    def to_dict(self):
        return {"check": self.check, "passed": self.passed, "detail": self.detail}

    def pretty(self):
        status = "ok" if self.passed else "FAILED"
        return f"{self.check}: {status}" + (f" ({self.detail})" if self.detail else "")

    def rows(self):
        return [self.to_dict()]


@dataclass
class PolynomialItem:
    label: str
    polynomial: object
    roots: list = field(default_factory=list)

    def to_dict(self):
        return {
            "label": self.label,
            "coefficients": [str(c) for c in reversed(self.polynomial.all_coeffs())],
            "roots": [str(r) for r in self.roots],
        }

    def pretty(self):
        return f"{self.label}: {self.polynomial.as_expr()}"

    def rows(self):
        return [
            {"label": self.label, "degree": i, "coefficient": str(c)}
            for i, c in enumerate(reversed(self.polynomial.all_coeffs()))
        ]
