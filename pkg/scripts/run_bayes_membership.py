"""Check how often the smoothed random prior lands in the alternative set."""

import argparse

from seqtest.design import solve_design
from seqtest.experiments import bayes_membership_rate


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--s", type=float, default=1.0)
    parser.add_argument("--p0", type=float, default=1.0)
    parser.add_argument("--rho", type=float, default=4e-5)
    parser.add_argument("--n", type=int, default=10_000)
    parser.add_argument("--delta", type=float, default=0.2)
    parser.add_argument("--draws", type=int, default=1000)
    parser.add_argument("--seed", type=int, default=77_001)
    args = parser.parse_args()

    design = solve_design(args.s, args.p0, args.rho, args.n)
    report = bayes_membership_rate(design, delta=args.delta, draws=args.draws, seed=args.seed)
    print(
        f"k_n={design.k_n}: {report['members']}/{report['draws']} draws in the "
        f"alternative set (rate {report['rate']:.3f} +/- {report['std_err']:.3f})"
    )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
