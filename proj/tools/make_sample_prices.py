"""Writes data/omxs30_sample.csv: 252 synthetic daily closes from an SV model.

Log-returns in percent follow y_t ~ N(0, exp(x_t)) with
x_t = mu + rho (x_{t-1} - mu) + sigma_v v_t. Dates are business days.
"""
import argparse

import numpy as np
import pandas as pd


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="data/omxs30_sample.csv")
    ap.add_argument("--rows", type=int, default=252)
    ap.add_argument("--seed", type=int, default=20150102)
    ap.add_argument("--mu", type=float, default=0.3)
    ap.add_argument("--rho", type=float, default=0.95)
    ap.add_argument("--sigma-v", type=float, default=0.2)
    ap.add_argument("--start-price", type=float, default=1500.0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    n_ret = args.rows - 1
    x = args.mu + args.sigma_v / np.sqrt(1 - args.rho**2) * rng.standard_normal()
    closes = [args.start_price]
    for _ in range(n_ret):
        x = args.mu + args.rho * (x - args.mu) + args.sigma_v * rng.standard_normal()
        y = np.exp(0.5 * x) * rng.standard_normal()
        closes.append(closes[-1] * np.exp(y / 100.0))
    dates = pd.bdate_range("2015-01-02", periods=args.rows)
    frame = pd.DataFrame({"date": dates.strftime("%Y-%m-%d"), "close": np.round(closes, 2)})
    frame.to_csv(args.out, index=False, lineterminator="\n")


if __name__ == "__main__":
    main()
