"""Build data/compas.csv from the ProPublica two-year recidivism table.

The raw table ships inside the ``responsibly`` wheel on PyPI. Rows are filtered
with the usual ProPublica screening rules and reduced to the columns the
bundled COMPAS configs use.

    pip download --no-deps -d /tmp/pd responsibly==0.1.2
    python tools/prepare_compas.py /tmp/pd/responsibly-0.1.2-py3-none-any.whl
"""
import csv
import io
import sys
import zipfile
from pathlib import Path

MEMBER = "responsibly/dataset/compas/compas-scores-two-years.csv"
COLUMNS = [
    "sex",
    "age",
    "race",
    "juv_fel_count",
    "juv_misd_count",
    "juv_other_count",
    "priors_count",
    "c_charge_degree",
    "two_year_recid",
]


def keep(row):
    days = row["days_b_screening_arrest"]
    if days == "" or not -30 <= float(days) <= 30:
        return False
    return row["is_recid"] != "-1" and row["c_charge_degree"] != "O" and row["score_text"] != "N/A"


def main(wheel, out="data/compas.csv"):
    with zipfile.ZipFile(wheel) as zf:
        text = zf.read(MEMBER).decode("utf-8")
    rows = [r for r in csv.DictReader(io.StringIO(text)) if keep(r)]
    Path(out).parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(COLUMNS)
        for r in rows:
            writer.writerow([r[c] for c in COLUMNS])
    print(f"wrote {len(rows)} rows to {out}")


if __name__ == "__main__":
    main(*sys.argv[1:])
