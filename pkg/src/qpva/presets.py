"""Built-in named datasets: heisenberg, virasoro, cp1, sl3-subregular."""

from __future__ import annotations

from dataclasses import dataclass, field

from .algebra import Context
from .frontend import parse, parse_table


@dataclass(frozen=True)
class Preset:
    name: str
    fields: tuple
    params: tuple = ()
    laurent: tuple = None
    density: str = None
    table: tuple = None      # row-major strings, table[a][b] = {u^a_λ u^b}
    extra: dict = field(default_factory=dict, hash=False, compare=False)

    def context(self):
        return Context(self.fields, None, self.params, self.laurent, self.name)

    def parsed_density(self, ctx=None):
        return parse(self.density, ctx or self.context()) if self.density else None

    def operator(self, ctx=None):
        return parse_table([list(r) for r in self.table], ctx or self.context()) if self.table else None


PRESETS = {
    "heisenberg": Preset("heisenberg", ("u",), density="1/2*th*th'", table=(("L",),)),
    # Virasoro–Magri in the H = u' + 2uλ + cλ³ normalization
    "virasoro": Preset("virasoro", ("u",), ("c",), density="u*th*th' + 1/2*c*th*th^(3)",
                       table=(("u' + 2*u*L + c*L^3",),)),
    # ½f' + fλ + (c/12)λ³ with f = 2u on the chart U1; the chart maps come from geometry.cp1_charts
    "cp1": Preset("cp1", ("u",), ("c",), (True,), density="u*th*th' + 1/24*c*th*th^(3)",
                  table=(("u' + 2*u*L + 1/12*c*L^3",),), extra={"bound": 4}),
    "sl3-subregular": Preset("sl3-subregular", ("u1", "u2", "u3"),
                             table=(("0", "-2*u1", "u2^2"), ("2*u1", "0", "-2*u3"), ("-u2^2", "2*u3", "0")),
                             extra={"S": "1/6*u2^3 + u1*u3", "J": "u1^2 + u3^2"}),
}


def get(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; known: {', '.join(sorted(PRESETS))}") from None
