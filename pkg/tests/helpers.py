"""Shared builders for randomized query instances."""
import numpy as np

from driftindex import Drift, DriftSet


def drift_sets(spec):
    """``{g: [i, ...]}`` -> ``{g: DriftSet}`` with dummy scores."""
    return {g: DriftSet(g, [Drift(g, i, i * g, 1.0, 0.5) for i in sorted(idx)])
            for g, idx in spec.items()}


def random_instance(rng, max_levels=4, max_drifts=40):
    """A random divisibility chain and random drift sets over a common horizon."""
    n_levels = int(rng.integers(1, max_levels + 1))
    chain = [int(rng.choice([1, 2, 5, 10]))]
    for _ in range(n_levels - 1):
        chain.append(chain[-1] * int(rng.choice([2, 3, 5])))
    coarse_intervals = int(rng.integers(2, 12))
    horizon = chain[-1] * coarse_intervals
    sets = {}
    for g in chain:
        n_pairs = horizon // g - 1
        k = int(rng.integers(0, min(max_drifts, n_pairs) + 1))
        idx = rng.choice(np.arange(1, n_pairs + 1), size=k, replace=False) if k else []
        sets[g] = sorted(int(i) for i in idx)
    return chain, drift_sets(sets)


ACCEPTANCE = []


def record(criterion, ok, detail):
    ACCEPTANCE.append(f"{'PASS' if ok else 'FAIL'}  {criterion}: {detail}")
    return ok
