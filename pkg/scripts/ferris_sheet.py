"""Contact sheet of stagnation panels along one revolution of a (0, 1) pair."""
import argparse
from pathlib import Path

from wignerflow.cli import main as cli


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--potential", default="eckart")
    parser.add_argument("--theta", type=float, default=1.3089969389957472)
    parser.add_argument("--panels", type=int, default=8)
    parser.add_argument("--grid", type=int, default=256)
    parser.add_argument("--out", default="out/ferris")
    args = parser.parse_args()
    root = Path(args.out)
    runs = []
    for k in range(args.panels):
        run = root / f"t{k:02d}"
        flags = ["--potential", args.potential, "--state", "0,1", "--theta", str(args.theta)]
        cli(["stag", *flags, "--phase", str(k / args.panels), "--grid", str(args.grid), "--out", str(run)])
        runs.append(str(run))
    labels = ",".join(f"t={k}/{args.panels} T" for k in range(args.panels))
    return cli(["render", *runs, "--columns", "4", "--labels", labels, "--out", str(root / "sheet")])


if __name__ == "__main__":
    raise SystemExit(main())
