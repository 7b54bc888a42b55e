"""Generate the synthetic red-wine stand-in dataset.

The benchmark expects a semicolon-delimited table shaped like the UCI
red-wine file (1599 rows, 11 physicochemical features, integer quality
3..8). This sandbox cannot download the original, so a deterministic
synthetic twin is checked in instead: same header, same shape, same
delimiter, plausible marginals, and a sparse linear ground truth (quality
driven by four features plus noise) so subset-selection benchmarks behave
like they do on real data.

Run from anywhere; writes the packaged data file unless --out is given.
"""

import argparse
from pathlib import Path

import numpy as np

HEADER = (
    '"fixed acidity";"volatile acidity";"citric acid";"residual sugar";'
    '"chlorides";"free sulfur dioxide";"total sulfur dioxide";"density";'
    '"pH";"sulphates";"alcohol";"quality"'
)
N_ROWS = 1599


def synthesize(seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    n = N_ROWS

    acid = rng.gamma(14.0, 0.6, n)                      # fixed acidity ~ 8.3
    citric = np.clip(0.06 * (acid - 4.0) + rng.normal(0.0, 0.12, n), 0.0, 1.0)
    volatile = np.clip(0.75 - 0.35 * citric + rng.normal(0.0, 0.13, n),
                       0.10, 1.60)
    sugar = np.clip(rng.lognormal(0.75, 0.45, n), 0.9, 16.0)
    chlorides = np.clip(rng.lognormal(-2.55, 0.35, n), 0.01, 0.62)
    free_so2 = np.clip(rng.gamma(2.6, 6.0, n), 1.0, 72.0)
    total_so2 = np.clip(free_so2 * rng.uniform(1.8, 4.2, n)
                        + rng.normal(8.0, 6.0, n), 6.0, 290.0)
    alcohol = np.clip(rng.normal(10.4, 1.07, n), 8.4, 14.9)
    density = (0.9967 + 0.00045 * (sugar - 2.5) - 0.00095 * (alcohol - 10.4)
               + rng.normal(0.0, 0.0006, n))
    ph = np.clip(3.31 - 0.035 * (acid - 8.3) + rng.normal(0.0, 0.10, n),
                 2.74, 4.01)
    sulph = np.clip(rng.lognormal(-0.42, 0.18, n), 0.33, 2.0)

    def std(v):
        return (v - v.mean()) / v.std()

    # Sparse ground truth: five informative features with well-separated
    # weights and low noise, so subset selection has a clear support and
    # branch-and-bound masters are not stuck between near-tied subsets.
    score = (5.6 + 0.9 * std(alcohol) - 0.7 * std(volatile)
             + 0.45 * std(sulph) + 0.3 * std(citric)
             - 0.22 * std(chlorides)
             + rng.normal(0.0, 0.28, n))
    quality = np.clip(np.round(score), 3, 8)

    return np.column_stack([
        acid, volatile, citric, sugar, chlorides, free_so2, total_so2,
        density, ph, sulph, alcohol, quality,
    ])


_DECIMALS = (1, 2, 2, 1, 3, 0, 0, 4, 2, 2, 1, 0)


def fmt(value: float, dec: int) -> str:
    s = f"{value:.{dec}f}" if dec else f"{value:.0f}"
    if "." in s:
        s = s.rstrip("0").rstrip(".")
    return s or "0"


def main() -> None:
    default_out = (Path(__file__).resolve().parent.parent
                   / "src" / "paroa" / "data" / "winequality_red_synth.csv")
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=20240817)
    ap.add_argument("--out", type=Path, default=default_out)
    args = ap.parse_args()

    table = synthesize(args.seed)
    lines = [HEADER]
    for row in table:
        lines.append(";".join(fmt(v, d) for v, d in zip(row, _DECIMALS)))
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {args.out} ({table.shape[0]} rows)")


if __name__ == "__main__":
    main()
