"""Fitted slope of log2 ||kappa_j||_{L^1(B(0,1))} over sliding j windows.

Shows whether a slope measured on j = 4..14 is pre-asymptotic.  Writes
lemma7_windows.csv (per-j norms) and prints the slope for each window.

    python scripts/lemma7_window_sweep.py --model h3xh3 --beta 4 --jmax 18
"""

import argparse
import csv

from oscikernel import RegionSpec
from oscikernel.kernels import _piece, norm
from oscikernel.multiplier import MultiplierParams
from oscikernel.reports import fit_exponent
from oscikernel.space_models import get_model


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--model", default="h3xh3")
    ap.add_argument("--alpha", type=float, default=0.5)
    ap.add_argument("--beta", type=float, default=4.0)
    ap.add_argument("--jmax", type=int, default=18)
    ap.add_argument("--out", default="lemma7_windows.csv")
    args = ap.parse_args()
    model = get_model(args.model)
    params = MultiplierParams(args.alpha, args.beta)
    rows = []
    for j in range(4, args.jmax + 1):
        v = norm(_piece(model, params, j), "L1", RegionSpec.ball(1.0)).value
        rows.append((j, v))
        print(f"j={j:2d}  ||kappa_j||_L1(B) = {v:.6e}", flush=True)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["j", "l1_ball"])
        w.writerows((j, repr(v)) for j, v in rows)
    thr = -(args.beta - args.alpha * model.n / 2) / 2 + 0.1
    print(f"threshold {thr:+.4f}")
    for lo in range(4, args.jmax - 2, 2):
        for hi in range(lo + 4, args.jmax + 1, 2):
            sel = [r for r in rows if lo <= r[0] <= hi]
            print(f"j={lo}..{hi}: slope {fit_exponent(sel).slope:+.4f}")


if __name__ == "__main__":
    main()
