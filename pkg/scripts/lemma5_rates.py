"""Band-limited approximation rates ||f - f*psi_xi||_inf for the bump suite.

Writes lemma5_rates.csv with one row per (function, xi) and prints the
fitted log-log slope for every k.

    python scripts/lemma5_rates.py --xi 16 32 64 128 256
"""

import argparse
import csv

from oscikernel.band_limited import exp_bump, gaussian_line, poly_bump, rate_table, verify_approx_rate


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--xi", type=float, nargs="+", default=[16.0, 32.0, 64.0, 128.0, 256.0])
    ap.add_argument("--out", default="lemma5_rates.csv")
    args = ap.parse_args()
    funcs = [poly_bump(1), poly_bump(2), poly_bump(3), gaussian_line(), exp_bump()]
    tables = {f.name: rate_table(f, args.xi) for f in funcs}
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["function", "xi", "error"])
        for name, tab in tables.items():
            for xi, err in tab.items():
                w.writerow([name, repr(xi), repr(err)])
    for k in (1, 2, 3):
        for f in (poly_bump(k), gaussian_line(), exp_bump()):
            rep = verify_approx_rate(f, k, args.xi, errors=tables[f.name])
            print(rep.summary(), "|", rep.notes[0])


if __name__ == "__main__":
    main()
