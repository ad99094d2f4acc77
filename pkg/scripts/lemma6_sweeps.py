"""L^2 norms of the dyadic kernels kappa_j on the whole space and on annuli.

Runs the global slope check on both models and the compensated annulus
grid on H3; writes lemma6_global_{model}.csv and lemma6_annulus.csv.

    python scripts/lemma6_sweeps.py --jmax 14
"""

import argparse

from oscikernel import H3, H3xH3
from oscikernel.kernels import verify_lemma6_annulus, verify_lemma6_global
from oscikernel.multiplier import MultiplierParams


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--jmax", type=int, default=14)
    ap.add_argument("--k", type=int, default=2)
    args = ap.parse_args()
    for model, beta in ((H3, 2.0), (H3xH3, 4.0)):
        rep = verify_lemma6_global(model, MultiplierParams(0.5, beta), range(4, args.jmax + 1))
        print(rep.summary(), "|", rep.notes[0])
        rep.to_csv(f"lemma6_global_{model.id}.csv")
    rep = verify_lemma6_annulus(H3, MultiplierParams(0.5, 2.0), [6, 8, 10, 12], list(range(-4, 1)), k=args.k)
    print(rep.summary())
    print("\n".join(rep.notes))
    rep.to_csv("lemma6_annulus.csv")


if __name__ == "__main__":
    main()
