"""Write synthetic train_FD00x.txt files in the CMAPSS text layout.

Usage: python3 scripts/make_surrogate_cmapss.py data/surrogate --seed 0
"""
import argparse

from rashomon_surv.simulate import write_surrogate_cmapss


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("out_dir")
    ap.add_argument("--subsets", nargs="+", default=["FD001", "FD002", "FD003", "FD004"])
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    for path in write_surrogate_cmapss(args.out_dir, subsets=tuple(args.subsets), seed=args.seed):
        print(path)


if __name__ == "__main__":
    main()
