"""Estimate the Markovian-body fraction of the CP tetrahedron by Monte Carlo."""
import argparse
import time

from paulidiv.divisibility import mc_body_fraction


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=10**6)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    start = time.perf_counter()
    res = mc_body_fraction(args.n, seed=args.seed)
    print(f"fraction {res.fraction:.5f} +- {res.stderr:.5f} (exact 3/32 = {3 / 32:.5f})")
    print(f"elapsed {time.perf_counter() - start:.2f} s")


if __name__ == "__main__":
    main()
