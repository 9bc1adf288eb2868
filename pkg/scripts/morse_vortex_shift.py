"""Tracked x-shift of the origin vortex for the Morse (0, 2) pair against its first-order estimate."""
import argparse
import math

import numpy as np

from wignerflow.eigensolver import solve_bound_states
from wignerflow.flow import vortex_displacement_approx
from wignerflow.potentials import PotentialModel
from wignerflow.tracking import origin_vortex_track
from wignerflow.wigner import TwoStateSpec, default_phase_grid


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--depth", type=float, default=16.0)
    parser.add_argument("--frames", type=int, default=100)
    parser.add_argument("--cutoff", type=int, default=10)
    args = parser.parse_args()
    model = PotentialModel.morse(args.depth)
    spec = TwoStateSpec(solve_bound_states(model, count=3), 0, 2, math.pi / 4)
    times = np.linspace(0.0, spec.period, args.frames + 1)
    tracked = origin_vortex_track(spec, times, args.cutoff, grid=default_phase_grid(model))
    approx = vortex_displacement_approx(model, spec, times)
    amplitude = math.sqrt(2) / (4 * math.sqrt(2 * args.depth))
    for t, x, a in zip(times[:: max(1, args.frames // 20)], tracked[:: max(1, args.frames // 20)], approx[:: max(1, args.frames // 20)]):
        print(f"t={t:7.3f}  tracked {x:+.5f}  estimate {a:+.5f}")
    print(f"max deviation {np.max(np.abs(tracked - approx)):.4f} = {np.max(np.abs(tracked - approx)) / amplitude:.3f} x amplitude")


if __name__ == "__main__":
    main()
