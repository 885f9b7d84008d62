"""Seeded, reproducible Monte Carlo engine.

Trials are processed in fixed-size blocks and each block draws from its
own generator seeded by (master seed, block index).  Results therefore
depend only on (seed, trials, configuration) -- never on how blocks
might be scheduled across workers -- and block outputs are integer
counts or compensated partial sums, so aggregation order cannot change
the answer either.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import model, selection
from .model import CsiErrorModel, LinkBudget, NetworkTopology

__all__ = [
    "McEstimate",
    "wilson_interval",
    "two_proportion_z",
    "estimate_outage",
    "estimate_throughput",
    "estimate_cdf",
]

BLOCK = 1 << 16  # trials per derived random stream (fixed by design)


@dataclass(frozen=True)
class McEstimate:
    """Monte Carlo point estimate with a confidence interval."""

    mean: float
    ci_low: float
    ci_high: float
    trials: int
    seed: int


def _block_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(index)])


def _blocks(trials: int):
    start = 0
    index = 0
    while start < trials:
        yield index, min(BLOCK, trials - start)
        start += BLOCK
        index += 1


def _check_trials(trials: int, minimum: int = 1):
    if trials < minimum:
        raise ValueError(f"trials must be >= {minimum}, got {trials}")


def wilson_interval(successes: int, trials: int, z: float = 1.96):
    """Wilson score interval for a binomial proportion; well behaved for
    the rare events met at high SNR."""
    p = successes / trials
    zz = z * z
    denom = 1.0 + zz / trials
    center = (p + zz / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + zz / (4 * trials * trials)) / denom
    # the interval provably contains p; keep that under rounding too
    return min(p, max(0.0, center - half)), max(p, min(1.0, center + half))


def two_proportion_z(successes_a: int, successes_b: int, trials: int) -> float:
    """z statistic for equality of two proportions on equal sample sizes."""
    pa = successes_a / trials
    pb = successes_b / trials
    pooled = (successes_a + successes_b) / (2 * trials)
    var = pooled * (1 - pooled) * 2 / trials
    if var == 0:
        return 0.0
    return (pa - pb) / math.sqrt(var)


def _trial_snrs(topology: NetworkTopology, budget: LinkBudget, rng, block: int,
                csi: CsiErrorModel | None) -> np.ndarray:
    if csi is None:
        draws = model.sample_realization(topology, rng, trials=block)
        return model.snr_matrix(draws, topology, budget)
    draws = model.sample_estimated_realization(topology, csi, rng, trials=block)
    return model.snr_matrix_imperfect(draws, csi, topology, budget)


def estimate_outage(topology: NetworkTopology, budget: LinkBudget, scheme: str,
                    gamma_th: float, trials: int, seed: int, z: float = 1.96,
                    csi: CsiErrorModel | None = None) -> list[McEstimate]:
    """Per-user empirical outage probability with a Wilson interval.

    Each trial samples a channel realization, runs the selection scheme
    and records, per user, whether the selected SNR is at or below the
    threshold.  Pass ``csi`` to sample estimated channels and score the
    imperfect-CSI SNR matrix instead.
    """
    _check_trials(trials)
    hits = np.zeros(topology.num_users, dtype=np.int64)
    for index, block in _blocks(trials):
        rng = _block_rng(seed, index)
        snrs = _trial_snrs(topology, budget, rng, block, csi)
        _, eff, _ = selection.assign_batch(scheme, snrs, rng)
        hits += (eff <= gamma_th).sum(axis=0)
    return [
        McEstimate(int(h) / trials, *wilson_interval(int(h), trials, z),
                   trials, seed)
        for h in hits
    ]


def estimate_throughput(topology: NetworkTopology, budget: LinkBudget,
                        scheme: str, trials: int, seed: int,
                        z: float = 1.96) -> list[McEstimate]:
    """Per-user empirical average throughput (bits per channel use) with
    a normal-approximation interval."""
    _check_trials(trials)
    num_users = topology.num_users
    sums = [[] for _ in range(num_users)]
    sq_sums = [[] for _ in range(num_users)]
    for index, block in _blocks(trials):
        rng = _block_rng(seed, index)
        snrs = _trial_snrs(topology, budget, rng, block, None)
        _, eff, _ = selection.assign_batch(scheme, snrs, rng)
        tau = np.log2(1.0 + eff) / (2.0 * num_users)
        for u in range(num_users):
            sums[u].append(float(tau[:, u].sum()))
            sq_sums[u].append(float(np.square(tau[:, u]).sum()))
    out = []
    for u in range(num_users):
        total = math.fsum(sums[u])
        mean = total / trials
        var = max(0.0, math.fsum(sq_sums[u]) / trials - mean * mean)
        half = z * math.sqrt(var / trials)
        out.append(McEstimate(mean, max(0.0, mean - half), mean + half,
                              trials, seed))
    return out


def estimate_cdf(topology: NetworkTopology, budget: LinkBudget, grid,
                 trials: int, seed: int, z: float = 1.96) -> list[McEstimate]:
    """Empirical CDF of a single user-relay link SNR on an ascending
    grid (the cross-check oracle for the closed-form link CDF)."""
    _check_trials(trials)
    grid = np.asarray(grid, dtype=float)
    if np.any(np.diff(grid) < 0):
        raise ValueError("grid must be sorted ascending")
    single = NetworkTopology(
        num_users=1, num_relays=1, nakagami_m=topology.nakagami_m,
        mean_gain_hop1=topology.mean_gain_hop1,
        mean_gain_hop2=topology.mean_gain_hop2,
        mean_gain_interf=topology.mean_gain_interf,
        dist_hop1=topology.dist_hop1, dist_hop2=topology.dist_hop2,
        dist_interf=topology.dist_interf,
        path_loss_exp=topology.path_loss_exp,
    )
    hits = np.zeros(len(grid), dtype=np.int64)
    for index, block in _blocks(trials):
        rng = _block_rng(seed, index)
        draws = model.sample_realization(single, rng, trials=block)
        snr = model.snr_matrix(draws, single, budget).reshape(-1)
        hits += (snr[:, None] <= grid[None, :]).sum(axis=0)
    return [
        McEstimate(int(h) / trials, *wilson_interval(int(h), trials, z),
                   trials, seed)
        for h in hits
    ]
