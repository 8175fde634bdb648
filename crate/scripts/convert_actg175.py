#!/usr/bin/env python3
"""Convert an ACTG 175 export into the calrank trial CSV schema.

Accepted inputs:

* a CSV written from the R package speff2trial, e.g.
  Rscript -e 'data(ACTG175, package = "speff2trial");
              write.csv(ACTG175, "ACTG175.csv", row.names = FALSE)'
  (columns days, cens, arms, strat, cd40, preanti)
* the UCI "AIDS Clinical Trials Group Study 175" CSV
  (columns time, cid, trt, strat, cd40, preanti)
* the speff2trial .rda file, if pyreadr is installed.

With --fetch, the script tries Rscript with speff2trial installed.

Output columns: time, event, arm, stratum, cd40, preanti.

* Only zidovudine alone (arms/trt = 0, written as arm 0) and didanosine
  alone (arms/trt = 3, written as arm 1) are kept; n = 1,093.
* event is the composite primary endpoint indicator (cens / cid).
* time is days to event or censoring.
* stratum is the prior-therapy stratum 1, 2, 3 (0, 1-52, >52 weeks).
* cd40 is baseline CD4 count, preanti is days of prior antiretroviral
  therapy, both untransformed.
"""

import argparse
import csv
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

LAYOUTS = [
    {"time": "days", "event": "cens", "arm": "arms"},
    {"time": "time", "event": "cid", "arm": "trt"},
]
ARM_CODES = {"0": 0, "3": 1}


def read_rows(path):
    if path.suffix.lower() in (".rda", ".rdata"):
        try:
            import pyreadr
        except ImportError:
            sys.exit("reading .rda needs pyreadr (pip install pyreadr)")
        frame = next(iter(pyreadr.read_r(str(path)).values()))
        return [
            {k: str(v) for k, v in rec.items()} for rec in frame.to_dict("records")
        ]
    with path.open(newline="") as f:
        return list(csv.DictReader(f))


def as_int_code(raw):
    return str(int(float(raw)))


def convert(rows):
    if not rows:
        sys.exit("input has no rows")
    header = rows[0].keys()
    layout = next((l for l in LAYOUTS if all(c in header for c in l.values())), None)
    if layout is None:
        sys.exit(f"unrecognized columns: {sorted(header)}")
    for col in ("strat", "cd40", "preanti"):
        if col not in header:
            sys.exit(f"missing column {col}")
    out = []
    for r in rows:
        code = as_int_code(r[layout["arm"]])
        if code not in ARM_CODES:
            continue
        out.append(
            {
                "time": r[layout["time"]],
                "event": as_int_code(r[layout["event"]]),
                "arm": ARM_CODES[code],
                "stratum": as_int_code(r["strat"]),
                "cd40": r["cd40"],
                "preanti": r["preanti"],
            }
        )
    return out


def fetch(dest):
    if shutil.which("Rscript") is None:
        sys.exit("--fetch needs Rscript with the speff2trial package")
    expr = (
        'data(ACTG175, package = "speff2trial"); '
        f'write.csv(ACTG175, "{dest}", row.names = FALSE)'
    )
    subprocess.run(["Rscript", "-e", expr], check=True)


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("input", nargs="?", type=Path, help="export to convert")
    p.add_argument("-o", "--output", type=Path, default=Path("data/actg175.csv"))
    p.add_argument("--fetch", action="store_true", help="export via Rscript first")
    args = p.parse_args()

    with tempfile.TemporaryDirectory() as tmp:
        src = args.input
        if args.fetch:
            src = Path(tmp) / "ACTG175.csv"
            fetch(src)
        if src is None:
            p.error("give an input file or --fetch")
        rows = convert(read_rows(src))

    args.output.parent.mkdir(parents=True, exist_ok=True)
    with args.output.open("w", newline="") as f:
        w = csv.DictWriter(
            f, fieldnames=["time", "event", "arm", "stratum", "cd40", "preanti"]
        )
        w.writeheader()
        w.writerows(rows)
    print(f"wrote {len(rows)} subjects to {args.output}")
    if len(rows) != 1093:
        print(f"warning: expected 1093 subjects, got {len(rows)}", file=sys.stderr)


if __name__ == "__main__":
    main()
