"""How fast the square-root columns of the kappa split and the diagonal resolvent shrink.

The G column behaves like sqrt(kappa / 2) * ||H u|| for small kappa, so a
100x reduction in kappa shrinks it by a factor just above 10.  The diagonal
resolvent error behaves like n^{-1/2}, so 64x more steps buys a factor 8.
"""
import math

import numpy as np

from zlab import chernoff as ch
from zlab.models import SeededGenerator, random_projection, random_psd, random_state


def main():
    gen = SeededGenerator(7)
    h = random_psd(8, gen, 4.0)
    p = random_projection(8, 3, gen)
    u = random_state(8, gen)

    kappas = [10.0**-k for k in range(1, 7)]
    res = ch.split_root_sweep(h, u, kappas)
    hu = float(np.linalg.norm(h.matrix @ u))
    print(f"{'kappa':>8} {'g_root':>12} {'sqrt(k/2)|Hu|':>14} {'plus_gap':>12} {'abs_gap':>12}")
    for k, g, pg, ag in zip(kappas, res.column("g_root"), res.column("plus_root_gap"), res.column("abs_root_gap")):
        print(f"{k:8.0e} {g:12.5e} {math.sqrt(k / 2) * hu:14.5e} {pg:12.5e} {ag:12.5e}")

    h1 = random_psd(8, SeededGenerator(7))
    ns = [4**k for k in range(2, 8)]
    errs = ch.diag_trick_check(h1, p, 1.0, u, ns).column("error")
    print(f"\n{'n':>6} {'diag error':>12} {'sqrt(n)*err':>12}")
    for n, e in zip(ns, errs):
        print(f"{n:>6} {e:12.5e} {math.sqrt(n) * e:12.5e}")


if __name__ == "__main__":
    main()
