#!/usr/bin/env python3
"""Evolve the characteristic equation across a sector of the hyperboloid.

Three step counts show the second-order convergence of the scheme; the
growth constants of the energy norm are printed for the finest run.
"""
import numpy as np

from isoshell.hyperbolic import (build_nonlocal, check_assumptions, evolve_with_sides, growth_fit,
                                 pde_residual)
from isoshell.surface import hyperboloid

U0, B, TH0 = 1.3, 1.0, 0.8


def main():
    hyp = hyperboloid()
    chart = check_assumptions(hyp, U0, B)
    term = build_nonlocal(hyp, U0, B, (1.8, 0.4), (0.0, TH0), n_s=12, n_theta=10)
    print(f"nonlocal term on {term.diagnostics['n_nodes']} nodes, rays up to t = "
          f"{term.diagnostics['max_t']:.3f}")
    runs = []
    for n in (100, 200, 400):
        ev = evolve_with_sides(chart, lambda t: np.cos(2 * t) + 0.3, np.sin,
                               lambda s: 1.3 + 0 * s,
                               lambda s: np.cos(2 * TH0) + 0.3 + s * np.sin(TH0),
                               TH0, B, n, mode="full", ray_term=term)
        runs.append(ev)
        print(f"steps {n:4d}: picard {ev.picard_iterations}, cfl {ev.cfl:.3f}, "
              f"residual {pde_residual(chart, ev):.2e}")
    d1 = np.abs(runs[0].final - runs[1].final).max()
    d2 = np.abs(runs[1].final - runs[2].final).max()
    print(f"observed order {np.log2(d1 / d2):.3f}")
    C, omega = growth_fit(runs[-1])
    print(f"||U(s)|| <= {C:.3f} ||U(0)|| exp({omega:.3f} s)")


if __name__ == "__main__":
    main()
