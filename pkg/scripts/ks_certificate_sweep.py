"""Kunze-Stein integral of the kernel at infinity for several p.

Builds the global kernel of Delta^{-beta/2} exp(i Delta^{alpha/2}) on H3,
prints the unit-annulus pieces I_j and the tail ratio, and writes
ks_certificate_p{p}.csv per exponent.

    python scripts/ks_certificate_sweep.py --p 1.5 2 4 8
"""

import argparse

from oscikernel import H3
from oscikernel.multiplier import MultiplierParams, SymbolClassParams
from oscikernel.operator import global_kernel, ij_summability, ks_certificate


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--alpha", type=float, default=0.5)
    ap.add_argument("--beta", type=float, default=2.0)
    ap.add_argument("--p", type=float, nargs="+", default=[1.5, 2.0, 4.0, 8.0])
    args = ap.parse_args()
    params = MultiplierParams(args.alpha, args.beta)
    gk = global_kernel(H3, params)
    print("\n".join(gk.notes))
    for p in args.p:
        rep = ks_certificate(H3, gk, p)
        print(rep.summary())
        print("  I_j:", " ".join(f"{v:.3e}" for v in rep.I_j[:12]), "...")
        rep.to_csv(f"ks_certificate_p{p:g}.csv")
    summ = ij_summability(H3, params, SymbolClassParams.from_params(params, v=0.9, N=5))
    print(summ.summary())
    for r in summ.rows:
        print(f"  J={r['J']:5d} partial={r['partial_sum']:.6e} rel_tail={r['rel_tail']:.2e}")


if __name__ == "__main__":
    main()
