"""Solve a detection design and print the resulting test parameters."""

import argparse

from seqtest.design import predicted_type2_minimax, solve_design


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--s", type=float, default=1.0, help="smoothness index")
    parser.add_argument("--p0", type=float, default=1.0, help="ball radius budget")
    parser.add_argument("--rho", type=float, default=3e-4, help="separation radius")
    parser.add_argument("--n", type=int, default=10_000)
    parser.add_argument("--sigma", type=float, default=1.0)
    parser.add_argument("--alpha", type=float, default=0.05)
    args = parser.parse_args()

    design = solve_design(args.s, args.p0, args.rho, args.n, sigma=args.sigma)
    beta = predicted_type2_minimax(design, args.alpha)
    print(f"k_n            {design.k_n}")
    print(f"j_max          {design.j_max}")
    print(f"kappa_sq       {design.kappa_j2[0]:.6e}")
    print(f"a_n            {design.a_n:.6f}")
    print(f"c_n            {design.c_n:.6f}")
    print(f"type II error  {beta:.4f} at alpha={args.alpha:g}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
