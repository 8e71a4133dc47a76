"""Response curves of the IDT map and of FIDT maps for a grid of (alpha, beta).

Writes one long-format CSV: alpha,beta,distance,idt,fidt.
"""
import argparse
import itertools
import sys

from fidtloc import FidtParams, fidt_profile


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--alphas", type=float, nargs="+", default=[0.0, 0.01, 0.02, 0.05])
    ap.add_argument("--betas", type=float, nargs="+", default=[0.5, 0.75, 1.0])
    ap.add_argument("--max-d", type=float, default=50.0)
    ap.add_argument("--step", type=float, default=0.5)
    ap.add_argument("--out", type=argparse.FileType("w"), default=sys.stdout)
    args = ap.parse_args()

    args.out.write("alpha,beta,distance,idt,fidt\n")
    for a, b in itertools.product(args.alphas, args.betas):
        for d, f, i in fidt_profile(FidtParams(a, b), args.max_d, args.step):
            args.out.write(f"{a},{b},{d},{i!r},{f!r}\n")


if __name__ == "__main__":
    main()
