"""Built-in jets used for demonstrations and cross-validation."""

from __future__ import annotations

import difflib
from dataclasses import dataclass

from .polycore import PolyMap


@dataclass(frozen=True)
class CorpusEntry:
    name: str
    components: tuple[str, ...]
    n: int
    r: int
    description: str
    # expected status of every cross-validated criterion (class E_r)
    expected: str

    @property
    def m(self) -> int:
        return len(self.components)

    def polymap(self) -> PolyMap:
        return PolyMap.parse(self.components, self.n)


CORPUS: dict[str, CorpusEntry] = {e.name: e for e in (
    CorpusEntry("example1", ("x1^2 - 2*x1*x2^2 + x1^4 + x2^4",), 2, 4,
                "quartic (x1-x2^2)^2 + x1^4 whose 4-jet is not sufficient", "INSUFFICIENT"),
    CorpusEntry("hopf", ("x2*x3 + x1*x4", "x1*x3 - x2*x4"), 4, 2,
                "Hopf 2-jet, variables (tau, lambda, xi, eta) = (x1, x2, x3, x4)", "SUFFICIENT"),
    CorpusEntry("linear", ("x1",), 1, 1, "regular linear germ on the line", "SUFFICIENT"),
    CorpusEntry("radial", ("x1^2 + x2^2",), 2, 2, "positive definite quadratic form", "SUFFICIENT"),
    CorpusEntry("axis_degenerate", ("x1^2",), 2, 2,
                "x1^2 in the plane: the gradient vanishes on the x2-axis", "INSUFFICIENT"),
    CorpusEntry("cusp", ("x1^2 - x2^3",), 2, 3, "ordinary cusp, 3-determined", "SUFFICIENT"),
    CorpusEntry("map_degenerate", ("x1*x2", "x1*x3"), 3, 2,
                "map vanishing on the plane x1=0 with rank-1 derivative there", "INSUFFICIENT"),
)}


class UnknownCorpusEntry(KeyError):
    def __init__(self, name: str):
        self.name = name
        self.suggestions = difflib.get_close_matches(name, list(CORPUS), n=3, cutoff=0.4)
        super().__init__(name)

    def __str__(self):
        msg = f"unknown corpus entry {self.name!r}"
        if self.suggestions:
            msg += "; did you mean " + ", ".join(self.suggestions) + "?"
        else:
            msg += "; available: " + ", ".join(CORPUS)
        return msg


def get_entry(name: str) -> CorpusEntry:
    try:
        return CORPUS[name]
    except KeyError:
        raise UnknownCorpusEntry(name) from None
