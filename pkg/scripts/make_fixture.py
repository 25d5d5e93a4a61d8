#!/usr/bin/env python3
"""Regenerate the bundled raw-data fixture.

The fixture is a deterministic reconstruction of the public payment and GDP
tables: monthly Bacs (low value), CHAPS (high value), cheque and credit-card
volumes/values, and quarterly nominal GDP in £m.  Magnitudes follow the
published series loosely; the files reproduce the source-format defects the
cleaning rules exist for:

* narrative header and footer rows, headers split over two rows;
* the year printed only on January rows;
* Bacs amounts from January 2010 printed in pence-like units (x1000);
* cheque values moved to column G between June 2009 and September 2019;
* "£" prefixes, thousands separators and stray minus signs on CHAPS values;
* GDP period labels with trailing / doubled spaces.

Usage: python scripts/make_fixture.py [--seed N] [--out DIR]
"""

from __future__ import annotations

import argparse
import csv
from pathlib import Path

import numpy as np

MONTHS = ["Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"]
OUT = Path(__file__).resolve().parents[1] / "src" / "paynowcast" / "data" / "fixtures"


def quarters(start_year, end_year, end_q):
    return [(y, q) for y in range(start_year, end_year + 1) for q in range(1, 5) if (y, q) <= (end_year, end_q)]


def months(start, end):
    (y0, m0), (y1, m1) = start, end
    out = []
    y, m = y0, m0
    while (y, m) <= (y1, m1):
        out.append((y, m))
        m += 1
        if m == 13:
            y, m = y + 1, 1
    return out


def gdp_path(qs, rng):
    """Nominal GDP in £ per quarter: steady growth, a 2008-09 slump and a 2020 shock."""
    level = np.log(1.45e11)
    out = []
    for y, q in qs:
        t = y + (q - 1) / 4
        if 2008.25 <= t < 2009.5:
            g = -0.012
        elif t >= 2009.5:
            g = 0.0085
        else:
            g = 0.0118
        if (y, q) == (2020, 2):
            g = -0.21
        if (y, q) == (2020, 3):
            g = 0.16
        level += g + rng.normal(0, 0.004)
        out.append(np.exp(level))
    return np.array(out)


def ar1(n, phi, sd, rng):
    e = np.empty(n)
    e[0] = rng.normal(0, sd / np.sqrt(1 - phi**2))
    for i in range(1, n):
        e[i] = phi * e[i - 1] + rng.normal(0, sd)
    return e


def fmt_money(v, pound=False):
    s = f"{v:,.0f}"
    return f"£{s}" if pound else s


def write(path, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        csv.writer(fh, lineterminator="\n").writerows(rows)


def payment_rows(title, mon, vol, val, value_col=3, width=5, pound=False, negate=(), thousands=None):
    rows = [
        [title] + [""] * (width - 1),
        ["Monthly volumes and values. Reconstructed fixture for testing."] + [""] * (width - 1),
        [""] * width,
        ["", "", "Volume", "Value"] + [""] * (width - 4),
        ["Year", "Month", "(number of items)", "(£)"] + [""] * (width - 4),
    ]
    for i, ((y, m), v, a) in enumerate(zip(mon, vol, val)):
        row = [""] * width
        row[0] = str(y) if m == 1 or i == 0 else ""
        row[1] = MONTHS[m - 1]
        row[2] = f"{v:,.0f}"
        amount = a * (1000.0 if thousands and thousands(y, m) else 1.0)
        cell = fmt_money(amount, pound)
        if i in negate:
            cell = "-" + cell
        col = value_col(y, m) if callable(value_col) else value_col
        row[col] = cell
        rows.append(row)
    rows.append([""] * width)
    rows.append(["Notes: figures are subject to revision."] + [""] * (width - 1))
    rows.append(["Source: reconstructed for paynowcast tests."] + [""] * (width - 1))
    return rows


def build(seed, out):
    rng = np.random.default_rng(seed)
    out.mkdir(parents=True, exist_ok=True)

    gdp_q = quarters(1990, 2020, 3)
    gdp = gdp_path(gdp_q, rng)
    gdp_by_q = dict(zip(gdp_q, gdp))

    # quarterly average transaction values driven by GDP
    lv_avg = (gdp + 2.139e11) / 8.211e8 + ar1(len(gdp), 0.1, 22.0, rng)
    span = (gdp - gdp.min()) / (gdp.max() - gdp.min())
    cc_avg = 44.0 + 22.0 * span + ar1(len(gdp), 0.6, 4.2, rng)
    hv_avg = 2.9e6 - 1.2e6 * span + ar1(len(gdp), 0.7, 1.6e5, rng)
    ch_avg = 380.0 + 520.0 * span + ar1(len(gdp), 0.5, 25.0, rng)
    avg = {"lv": dict(zip(gdp_q, lv_avg)), "cc": dict(zip(gdp_q, cc_avg)),
           "hv": dict(zip(gdp_q, hv_avg)), "ch": dict(zip(gdp_q, ch_avg))}

    bank_m = months((1990, 1), (2020, 9))
    cc_m = months((1994, 1), (2013, 6))
    season = np.array([0.96, 0.92, 1.02, 0.99, 1.0, 1.01, 1.03, 0.98, 1.0, 1.04, 1.01, 1.04])

    def monthly(mon, start, growth, key, noise=0.02):
        t = np.arange(len(mon))
        vol = start * np.exp(growth * t) * season[[m - 1 for _, m in mon]] * (1 + rng.normal(0, noise, len(mon)))
        a = np.array([avg[key][(y, (m - 1) // 3 + 1)] for y, m in mon])
        val = a * vol * (1 + rng.normal(0, 0.01, len(mon)))
        return np.round(vol), np.round(val)

    lv_vol, lv_val = monthly(bank_m, 1.55e8, 0.0034, "lv")
    hv_vol, hv_val = monthly(bank_m, 1.1e6, 0.0028, "hv", noise=0.03)
    ch_vol, ch_val = monthly(bank_m, 3.4e8, -0.0066, "ch", noise=0.03)
    cc_vol, cc_val = monthly(cc_m, 6.0e7, 0.0050, "cc", noise=0.03)

    write(out / "bacs_low_value.csv", payment_rows(
        "Bacs payments (low value)", bank_m, lv_vol, lv_val,
        thousands=lambda y, m: y >= 2010))
    negate = set(rng.choice(len(bank_m), size=6, replace=False).tolist())
    write(out / "chaps_high_value.csv", payment_rows(
        "CHAPS payments (high value)", bank_m, hv_vol, hv_val, pound=True, negate=negate))
    write(out / "cheques.csv", payment_rows(
        "Cheque and credit clearing", bank_m, ch_vol, ch_val, width=7,
        value_col=lambda y, m: 6 if (2009, 6) <= (y, m) <= (2019, 9) else 3))
    write(out / "credit_card.csv", payment_rows(
        "Credit card spending", cc_m, cc_vol, cc_val))

    rows = [
        ["Title", "Gross Domestic Product at market prices: Current price: Seasonally adjusted £m"],
        ["CDID", "YBHA"],
        ["Source dataset ID", "QNA"],
        ["PreUnit", "£"],
        ["Unit", "m"],
        ["Release date", "fixture"],
        ["Next release", ""],
        ["Important notes", ""],
    ]
    for i, ((y, q), g) in enumerate(zip(gdp_q, gdp)):
        label = f"{y} Q{q}"
        if i % 7 == 0:
            label += " "
        elif i % 11 == 0:
            label = f"{y}  Q{q}"
        rows.append([label, f"{g / 1e6:.0f}"])
    write(out / "gdp_nominal.csv", rows)
    return gdp_by_q


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=20201220)
    ap.add_argument("--out", type=Path, default=OUT)
    args = ap.parse_args()
    build(args.seed, args.out)
    print(f"fixture written to {args.out}")


if __name__ == "__main__":
    main()
