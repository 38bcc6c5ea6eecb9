import logging
from itertools import product as cartesian

from sympy import roots

from affine_twist.algebra import to_fraction
from affine_twist.exceptions import ParameterError, TranscriptionError
from affine_twist.fusion import Level
from affine_twist.items import PolynomialItem, VerdictItem
from affine_twist.jobs import Job
from affine_twist.settings import UL0_PARAMETER_BOUND
from affine_twist.uea import (
    check_reduction_identities,
    format_pbw,
    is_singular,
    load_vectors,
    parse_state,
    zhu_twisted_image,
)


class VectorJob(Job):
    """Shared lookup of the vectors a job works on."""

    state = None
    vector = None
    vector_file = None
    p = None
    q = None

    def vectors(self):
        if self.state:
            module, element = parse_state(self.state)
            return [("vector", module, element, None)]
        stored = load_vectors(self.vector_file)
        if self.vector:
            if self.vector not in stored:
                raise ParameterError(f"No vector {self.vector!r}; known: {sorted(stored)}")
            names = [self.vector]
        else:
            names = sorted(stored)
        return [(name, *stored[name]) for name in names]


class SingularCheckJob(VectorJob):
    name = "singular-check"

    def run(self):
        for name, module, element, expected in self.vectors():
            self.log(f"{name}: {format_pbw(element, module)}")
            found = is_singular(element, module)
            if expected is not None and found != expected:
                raise TranscriptionError(
                    f"{name} is stored as {'singular' if expected else 'not singular'} "
                    f"but the check says {'singular' if found else 'not singular'}"
                )
            detail = module.describe() if expected is None else f"{module.describe()}, as stored"
            yield VerdictItem(f"{name} is singular", found, detail)


class ZhuImageJob(VectorJob):
    name = "zhu-image"

    def run(self):
        for name, module, element, _ in self.vectors():
            if not module.vacuum:
                if self.vector is None and self.state is None:
                    continue
                raise ParameterError(f"{name} does not live in the vacuum module")
            if self.p is not None and self.q is not None and Level(self.p, self.q).level != module.level:
                raise ParameterError(f"{name} sits at level {module.level}, not at p={self.p}, q={self.q}")
            image = zhu_twisted_image(element, module.level)
            found = []
            for root, multiplicity in roots(image).items():
                found.extend([to_fraction(root) if root.is_Rational else root] * multiplicity)
            self.log(f"{name} maps to {image.as_expr()}", logging.INFO)
            yield PolynomialItem(f"[{name}]", image, sorted(found, key=lambda r: complex(r).real))


class UL0Job(Job):
    name = "ul0"
    bound = None

    def run(self):
        lvl = Level(self.p, self.q)
        bound = self.bound if self.bound is not None else 2
        if bound > UL0_PARAMETER_BOUND:
            raise ParameterError(f"Bound {bound} exceeds {UL0_PARAMETER_BOUND}")
        for n in range(1, min(lvl.p - 1, UL0_PARAMETER_BOUND) + 1):
            for kappa in range(1, min(lvl.q, UL0_PARAMETER_BOUND) + 1):
                for a, b, d in cartesian(range(bound + 1), repeat=3):
                    check_reduction_identities(a, b, d, n, kappa, lvl)
                yield VerdictItem(f"U(L0) reductions n={n} kappa={kappa} at {lvl}", True, f"a, b, d <= {bound}")
