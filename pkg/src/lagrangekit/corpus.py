"""Named Lagrangians used by the identity suite, the CLI and the tests."""

from __future__ import annotations

from dataclasses import dataclass

from lagrangekit.counterexample import POLAR_BOX, make_family
from lagrangekit.jets import LagrangianField, TangentPoint
from lagrangekit.sampling import Box


@dataclass(frozen=True)
class CorpusEntry:
    name: str
    text: str
    box: Box
    u0: TangentPoint
    family: str | None = None

    def field(self) -> LagrangianField:
        if self.family is not None:
            return make_family(self.family).lagrangian
        return LagrangianField.parse(self.text, 2, name=self.name)


_FLAT_BOX = Box.default(2)

CORPUS = {
    e.name: e
    for e in [
        CorpusEntry("flat", "y1^2 + y2^2", _FLAT_BOX, TangentPoint((0, 0), (1, 0))),
        CorpusEntry("pert", "y1^2 + y2^2 + 2*x1*y1", _FLAT_BOX, TangentPoint((1, 0), (1, 0)),
                    family="flat-quadratic-phi"),
        CorpusEntry("polar", "y1^2 + x1^2*y2^2", POLAR_BOX, TangentPoint((1, 0), (0, 1)),
                    family="homogeneous-control"),
        CorpusEntry("polar-pert", "y1^2 + x1^2*y2^2 + y2", POLAR_BOX, TangentPoint((1, 0), (1, 1)),
                    family="polar-linear-phi"),
        CorpusEntry("quartic", "(y1^2 + y2^2)^2", _FLAT_BOX, TangentPoint((0, 0), (1, 0.5))),
        CorpusEntry("null-control", "y1^2 + y2^2 + y1 + 2*y2", _FLAT_BOX, TangentPoint((0, 0), (1, 1)),
                    family="null-control"),
    ]
}

# family names resolve to the corpus entry of the same Lagrangian
ALIASES = {
    "flat-quadratic-phi": "pert",
    "polar-linear-phi": "polar-pert",
    "homogeneous-control": "polar",
    "null-control": "null-control",
}


def lookup(name: str) -> CorpusEntry:
    key = ALIASES.get(name, name)
    if key not in CORPUS:
        raise KeyError(f"unknown Lagrangian {name!r}; known: {', '.join(sorted(set(CORPUS) | set(ALIASES)))}")
    return CORPUS[key]
