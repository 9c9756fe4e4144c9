"""Empirical ILT constant eps(n) over several seeds."""
import argparse

from sigma2graph import verify


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dims", default="3,4,5")
    ap.add_argument("--samples", type=int, default=100_000)
    ap.add_argument("--seeds", type=int, default=5)
    args = ap.parse_args()
    print("n,seed,eps")
    for n in (int(d) for d in args.dims.split(",")):
        for seed in range(args.seeds):
            print(f"{n},{seed},{verify.empirical_ilt_epsilon(n, args.samples, seed):.6f}")


if __name__ == "__main__":
    main()
