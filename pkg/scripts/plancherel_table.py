"""Relative error of the leading Plancherel-Rotach form against the exact log-scaled h_n.

    python3 scripts/plancherel_table.py --phi 0.25 0.5 1.0
"""
import argparse
import math

from hermite_hardy import specfun


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--phi", type=float, nargs="+", default=[0.25, 0.5, 1.0])
    ap.add_argument("--n", type=int, nargs="+", default=[16, 32, 64, 128, 256, 512, 1024, 2048])
    args = ap.parse_args()

    print("n".rjust(6) + "".join(f"  relerr(phi={p:g})  n*relerr".rjust(30) for p in args.phi))
    for n in args.n:
        cols = []
        for phi in args.phi:
            x = math.sqrt(2 * n + 1) * math.cosh(phi)
            err = abs(math.expm1(specfun.plancherel_rotach_log(n, x).log_mag - specfun.hermite_log(n, x).log_mag))
            cols.append(f"{err:18.3e} {n * err:10.4f}")
        print(f"{n:6d}" + "".join(c.rjust(30) for c in cols))


if __name__ == "__main__":
    main()
