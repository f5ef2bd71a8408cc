"""Error of the XY collision model against its Lindblad limit as tau shrinks."""
import argparse

import numpy as np

from paulidiv.collision import HamiltonianXY, run_factorized, stroboscopic_coupling


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--gamma", type=float, default=1.0)
    ap.add_argument("--t", type=float, default=1.0)
    args = ap.parse_args()
    prev = None
    print(f"{'tau':>10} {'max error':>12} {'ratio':>8}")
    for tau in 1e-2 / 2.0 ** np.arange(8):
        g = stroboscopic_coupling(args.gamma, tau)
        traj = run_factorized(HamiltonianXY(g, g, tau), round(args.t / tau))
        exact = np.exp(-args.gamma * np.outer(traj.times, (1, 1, 2)))
        err = np.max(np.abs(traj.lambdas - exact))
        ratio = "" if prev is None else f"{err / prev:8.3f}"
        print(f"{tau:10.2e} {err:12.4e} {ratio}")
        prev = err


if __name__ == "__main__":
    main()
