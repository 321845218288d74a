"""Observed refinement ratios for the Zeno product formulae and the resolvent sweep.

Prints error(n) and error(n)/error(n/4) for each ordering on a seeded random
instance, then the same for the tau sweep of the Chernoff resolvent.
"""
import argparse

from zlab import chernoff as ch
from zlab.models import SeededGenerator, random_projection, random_psd, random_state
from zlab.zeno import ZenoVariant, zeno_error_sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--dim", type=int, default=8)
    ap.add_argument("--rank", type=int, default=3)
    ap.add_argument("--t", type=float, default=1.0)
    args = ap.parse_args()

    gen = SeededGenerator(args.seed)
    h = random_psd(args.dim, gen)
    p = random_projection(args.dim, args.rank, gen)
    f = random_state(args.dim, gen)

    ns = [4**k for k in range(2, 8)]
    print(f"{'variant':>10} {'n':>6} {'error':>12} {'ratio':>7}")
    for v in ZenoVariant:
        errs = zeno_error_sweep(h, p, args.t, 1, v, f, ns).errors
        for i, (n, e) in enumerate(zip(ns, errs)):
            ratio = f"{e / errs[i - 1]:.3f}" if i else ""
            print(f"{v.value:>10} {n:>6} {e:12.4e} {ratio:>7}")

    taus = [0.1 / 4**k for k in range(5)]
    print(f"\n{'tau':>10} {'resolvent':>12} {'ratio':>7}")
    prev = None
    for tau in taus:
        e = ch.chernoff_error(h, p, args.t, tau, f)
        print(f"{tau:10.3e} {e:12.4e} {'' if prev is None else f'{e / prev:.3f}':>7}")
        prev = e


if __name__ == "__main__":
    main()
