#!/usr/bin/env python3
"""Bending energy of the isometries of a spherical cap, mode by mode.

For boundary data cos(m theta) the energy is computed twice: by quadrature
of Q2(Xi) over the cap and by the boundary integral.  m = 1 is rigid.
"""
import argparse

import numpy as np

from isoshell.bending import ElasticModuli, cap_interior_energy, sphere_boundary_energy
from isoshell.elliptic import cap_eigen_lambda1, cap_problem


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--kappa", type=float, default=1.0)
    ap.add_argument("--angle", type=float, default=np.pi / 4, help="geodesic radius times sqrt(kappa)")
    ap.add_argument("--modes", type=int, default=6)
    ap.add_argument("--mu", type=float, default=1.0)
    ap.add_argument("--lam", type=float, default=1.0)
    args = ap.parse_args()

    a = args.angle / np.sqrt(args.kappa)
    m = ElasticModuli(args.mu, args.lam)
    P = cap_problem(args.kappa, a, 32, 16)
    print(f"lambda1 = {cap_eigen_lambda1(args.kappa, a):.6f}  (2 kappa = {2 * args.kappa:g})")
    print(f"{'m':>3} {'interior':>14} {'boundary':>14}")
    for k in range(args.modes + 1):
        psi = lambda th, k=k: np.cos(k * th)
        ii = cap_interior_energy(args.kappa, a, psi, m, P)
        ib = sphere_boundary_energy(args.kappa, a, psi, m, P)
        print(f"{k:>3} {ii:>14.8g} {ib:>14.8g}")


if __name__ == "__main__":
    main()
