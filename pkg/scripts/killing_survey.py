#!/usr/bin/env python3
"""Dimension of the Killing algebra on geodesic disks of catalog surfaces."""
from isoshell.geodesic import GridSpec, PolarGrid
from isoshell.killing import killing_dimension
from isoshell.surface import catalog

CASES = [
    ("sphere", (1.0,), {}, (0.0, 0.0), GridSpec(16, 1.2, 24)),
    ("plane", (), {}, (0.0, 0.0), GridSpec(16, 1.0, 20)),
    ("cylinder", (1.0, 5.0), {}, (0.0, 0.0), GridSpec(16, 4.0, 80)),
    ("log_revolution", (), {}, (1.8, 0.3), GridSpec(16, 0.15, 20)),
]


def main():
    for name, params, kw, origin, spec in CASES:
        grid = PolarGrid(catalog(name, *params, **kw), origin, spec)
        res = killing_dimension(grid, wraps=grid.crossings())
        sv = ", ".join(f"{s:.2e}" for s in res.singular_values)
        print(f"{name:>15}: dim {res.dim}  crossings {res.n_crossings}  sigma [{sv}]")


if __name__ == "__main__":
    main()
