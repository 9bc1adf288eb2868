"""Run named presets through the CLI and report their exit status.

Examples:

    python3 scripts/presets.py weak-hard-quartic-tracks weak-soft-quartic-tracks weak-odd-cubic-tracks
    python3 scripts/presets.py weak-hard-quartic-rabi
    python3 scripts/presets.py eckart-petal-state morse-petal-state rosen-morse-petal-state --render
"""
import argparse
import json
import time
from pathlib import Path

from wignerflow.cli import load_preset, main as cli, preset_names


def main():
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("presets", nargs="*", help="preset names (default: list them)")
    parser.add_argument("--out", default="out")
    parser.add_argument("--render", action="store_true")
    args = parser.parse_args()
    if not args.presets:
        for name in preset_names():
            print(f"{name:40s} {load_preset(name)['description']}")
        return 0
    worst = 0
    for name in args.presets:
        preset = load_preset(name)
        start = time.perf_counter()
        argv = [preset["command"], "--preset", name, "--out", str(Path(args.out) / name)]
        status = cli(argv + (["--render"] if args.render else []))
        print(json.dumps({"preset": name, "status": status, "seconds": round(time.perf_counter() - start, 1)}))
        worst = max(worst, status)
    return worst


if __name__ == "__main__":
    raise SystemExit(main())
