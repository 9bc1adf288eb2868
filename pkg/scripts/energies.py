"""Table of solver energies against closed forms for the three anharmonic families."""
import argparse

from wignerflow.eigensolver import bound_state_count, closed_form_energy, solve_bound_states
from wignerflow.potentials import PotentialModel


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--count", type=int, default=4)
    parser.add_argument("--depths", default="4,4,16", help="D for eckart, rosen-morse, morse")
    args = parser.parse_args()
    depths = [float(d) for d in args.depths.split(",")]
    for family, depth in zip(("eckart", "rosen-morse", "morse"), depths):
        model = PotentialModel.from_name(family, depth)
        count = min(args.count, bound_state_count(model))
        basis = solve_bound_states(model, count=count)
        print(f"{model.label()}  bound states: {bound_state_count(model)}")
        for n, e in enumerate(basis.energies):
            exact = closed_form_energy(model, n)
            print(f"  n={n}  E={e:.10f}  closed form {exact:.10f}  rel err {abs(e - exact) / exact:.2e}")


if __name__ == "__main__":
    main()
