"""Compile the volume-monotone example into a collision schedule and check it."""
import argparse
import pathlib

import numpy as np

from paulidiv.core import Trajectory
from paulidiv.families import volume_example
from paulidiv.props import monotonicity_scan
from paulidiv.synthesis import minimal_coupling, schedule_pauli, schedule_to_json, verify_schedule


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--tau", type=float, default=1e-6)
    ap.add_argument("--n", type=int, default=10**6)
    ap.add_argument("--margin", type=float, default=1.5, help="coupling as a multiple of the minimum")
    ap.add_argument("--stride", type=int, default=10_000, help="slots per property-check sample")
    ap.add_argument("--out", type=pathlib.Path, default=None, help="write the schedule JSON here")
    args = ap.parse_args()

    fam = volume_example()
    gmin = minimal_coupling(fam, args.tau, args.n, rtol=0.05)
    schedule = schedule_pauli(fam, args.margin * gmin, args.tau, args.n)
    traj = verify_schedule(schedule)
    err = np.max(np.abs(traj.lambdas - fam.lam(traj.times)))
    coarse = Trajectory(traj.times[:: args.stride], traj.lambdas[:: args.stride])
    vol = monotonicity_scan(coarse, quantity="volume", tol=0.0)
    lam1_mono = bool(np.all(np.diff(coarse.lambdas[:, 0]) <= 0))

    print(f"minimal coupling {gmin:.2f}, used {schedule.g:.2f}")
    print(f"weights {np.round(schedule.weights, 4).tolist()}")
    print(f"max |lambda - target| {err:.4f}")
    print(f"volume monotone {vol.monotone}, lambda1 monotone {lam1_mono}")
    if args.out is not None:
        args.out.write_text(schedule_to_json(schedule))
        print(f"schedule written to {args.out}")


if __name__ == "__main__":
    main()
