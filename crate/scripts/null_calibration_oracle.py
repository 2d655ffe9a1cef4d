#!/usr/bin/env python3
"""Independent Monte-Carlo check of the statistical thresholds used by the
test suite, written against numpy only (no code shared with the crate).

For each replication it draws fresh datasets and reports:

* exchangeable null: share of datasets whose observed/null ratio lies in
  [0.7, 1.4], and share whose observed mean |bias| lies in [q05, q95] of
  the label-swap distribution (dim 8, 30+30 images, 20 statements,
  500 trials);
* injected structure: share with ratio > 1.5 (group means at +-u/2 with
  |u| = 0.5, isotropic noise 0.3);
* bootstrap coverage: share of 95% percentile intervals (1000 resamples,
  20 images per group) containing a large-sample estimate of the true score.

Usage: scripts/null_calibration_oracle.py [--replications 5] [--seed 1]
"""
import argparse

import numpy as np


def unit(x):
    return x / np.linalg.norm(x, axis=-1, keepdims=True)


def label_swap(rng, sims, n_a, trials):
    """Observed statistic and trial statistics: mean over statements of |bias|."""
    n = sims.shape[1]

    def mean_abs_bias(order):
        a = sims[:, order[:n_a]].mean(axis=1)
        b = sims[:, order[n_a:]].mean(axis=1)
        return np.abs(a - b).mean()

    observed = mean_abs_bias(np.arange(n))
    null = np.array([mean_abs_bias(rng.permutation(n)) for _ in range(trials)])
    return observed, null


def null_dataset(rng, separation, noise, dim=8, n_a=30, n_b=30, statements=20):
    if separation == 0.0:
        images = unit(rng.normal(size=(n_a + n_b, dim)))
    else:
        u = unit(rng.normal(size=dim)) * separation
        a = rng.normal(size=(n_a, dim)) * noise + u / 2
        b = rng.normal(size=(n_b, dim)) * noise - u / 2
        images = unit(np.vstack([a, b]))
    t = unit(rng.normal(size=(statements, dim)))
    return t @ images.T


def null_experiment(rng, separation, noise, datasets=100, trials=500):
    ratios, inside = [], 0
    for _ in range(datasets):
        observed, null = label_swap(rng, null_dataset(rng, separation, noise), 30, trials)
        ratios.append(observed / null.mean())
        q05, q95 = np.quantile(null, [0.05, 0.95])
        inside += q05 <= observed <= q95
    return np.array(ratios), inside / datasets


def coverage_experiment(rng, n=20, replicates=200, resamples=1000, dim=8):
    u = np.zeros(dim)
    u[0] = 0.5
    t = unit(np.array([1.0, 1.0] + [0.0] * (dim - 2)))

    def draw(count, sign):
        return unit(rng.normal(size=(count, dim)) * 0.3 + sign * u / 2) @ t

    big = 400_000
    truth = draw(big, 1).mean() - draw(big, -1).mean()
    covered = 0
    for _ in range(replicates):
        a, b = draw(n, 1), draw(n, -1)
        idx_a = rng.integers(0, n, size=(resamples, n))
        idx_b = rng.integers(0, n, size=(resamples, n))
        boot = a[idx_a].mean(axis=1) - b[idx_b].mean(axis=1)
        lo, hi = np.quantile(boot, [0.025, 0.975])
        covered += lo <= truth <= hi
    return truth, covered / replicates


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--replications", type=int, default=5)
    parser.add_argument("--seed", type=int, default=1)
    args = parser.parse_args()
    rng = np.random.default_rng(args.seed)

    print("rep  band[0.7,1.4]  in[q05,q95]  injected>1.5  coverage")
    for rep in range(args.replications):
        ratios, inside = null_experiment(rng, 0.0, 1.0)
        band = np.mean((ratios >= 0.7) & (ratios <= 1.4))
        injected, _ = null_experiment(rng, 0.5, 0.3)
        above = np.mean(injected > 1.5)
        truth, coverage = coverage_experiment(rng)
        print(f"{rep:3d}  {band:13.2f}  {inside:11.2f}  {above:12.2f}  {coverage:8.3f}  (truth {truth:.4f})")


if __name__ == "__main__":
    main()
