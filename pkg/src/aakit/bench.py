"""Per-iteration timing harness on seeded synthetic data.

The generator plants p random vertices and draws each data point as a
random simplex combination of them, so scaling numbers are comparable
across machines in shape (even if not in magnitude).
"""

import numpy as np

from .fitting import FitConfig, fit


def synthetic_data(m, n, p, seed=0):
    rng = np.random.default_rng(seed)
    vertices = rng.random((m, p))
    weights = rng.dirichlet(np.ones(p), size=n).T
    return np.asfortranarray(vertices @ weights)


def _one_rep(m, n, p, seed, n_iter, threads):
    """Mean CPU seconds per outer iteration for one fit, iteration 1
    excluded (warm-up and allocation)."""
    X = synthetic_data(m, n, p, seed=seed)
    cfg = FitConfig(p=p, n_iter=n_iter, seed=seed, threads=threads)
    model = fit(X, cfg)
    timed = model.iter_seconds[1:] or model.iter_seconds
    return float(np.mean(timed))


def time_fit(m, n, p, seed=0, n_iter=4, reps=3, threads=1):
    """Median over reps of the mean CPU seconds per outer iteration.

    Returns (median_seconds_per_iteration, std_across_reps).
    """
    per_rep = [_one_rep(m, n, p, seed + r, n_iter, threads)
               for r in range(reps)]
    return float(np.median(per_rep)), float(np.std(per_rep))


def run_grid(n_list, p_list, m, seed=0, n_iter=4, reps=3, threads=1):
    """Yield (n, p, seconds_per_iteration, std) rows over the grid.

    Reps are interleaved across grid cells (all cells once, then all cells
    again, ...) so that slow drift in machine speed spreads evenly over the
    grid instead of biasing whichever cell runs last.
    """
    cells = [(n, p) for p in p_list for n in n_list]
    samples = {cell: [] for cell in cells}
    for r in range(reps):
        for n, p in cells:
            samples[(n, p)].append(_one_rep(m, n, p, seed + r, n_iter,
                                            threads))
    for n, p in cells:
        vals = samples[(n, p)]
        yield n, p, float(np.median(vals)), float(np.std(vals))
