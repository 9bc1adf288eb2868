"""Stagnation points of psi_n for each family, with charges and diagonal angles."""
import argparse
import math

from wignerflow.eigensolver import solve_bound_states
from wignerflow.flow import flow_field
from wignerflow.potentials import PotentialModel
from wignerflow.topology import stagnation_points
from wignerflow.wigner import default_phase_grid, eigenstate_field


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--states", type=int, default=2, help="report psi_1 .. psi_states")
    parser.add_argument("--cutoff", type=int, default=10)
    args = parser.parse_args()
    for family in ("harmonic", "eckart", "rosen-morse", "morse"):
        model = PotentialModel.from_name(family)
        basis = solve_bound_states(model, count=args.states + 1)
        grid = default_phase_grid(model)
        for n in range(1, args.states + 1):
            s = stagnation_points(flow_field(eigenstate_field(basis, n, grid), model, args.cutoff))
            print(f"{model.label()} psi_{n}: {len(s)} points, {len(s.lines)} lines, total charge {s.total_charge():+d}")
            for pt in s.points:
                angle = math.degrees(math.atan2(pt.p, pt.x))
                print(f"  ({pt.x:+.5f}, {pt.p:+.5f})  omega {pt.charge:+d}  angle {angle:+7.2f}  {pt.classification}")


if __name__ == "__main__":
    main()
