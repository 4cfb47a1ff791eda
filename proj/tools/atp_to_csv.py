#!/usr/bin/env python3
"""Converts Jeff Sackmann's atp_matches_YYYY.csv files to the skillgp format.

The winner is placed on either side at random (fixed seed) so that the
outcome column is not constant.
"""

import argparse
import csv
import datetime as dt
import random


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("inputs", nargs="+", help="atp_matches_YYYY.csv files")
    parser.add_argument("--out", required=True)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    rng = random.Random(args.seed)
    rows = []
    for name in args.inputs:
        with open(name, newline="", encoding="utf-8") as f:
            for row in csv.DictReader(f):
                date = row["tourney_date"]
                if not date or not row["winner_id"] or not row["loser_id"]:
                    continue
                day = dt.datetime.strptime(date, "%Y%m%d").date().isoformat()
                w, l = "p" + row["winner_id"], "p" + row["loser_id"]
                rows.append([day, w, l, 1] if rng.random() < 0.5 else [day, l, w, -1])
    rows.sort(key=lambda r: r[0])
    with open(args.out, "w", newline="") as f:
        out = csv.writer(f, lineterminator="\n")
        out.writerow(["t", "comp_i", "comp_j", "outcome"])
        out.writerows(rows)


if __name__ == "__main__":
    main()
