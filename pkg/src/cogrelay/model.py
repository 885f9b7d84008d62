"""Network configuration, channel sampling and SNR-matrix construction.

All transmit powers are carried as ratios to the receiver noise power
(linear SNR-like quantities), so the absolute noise level never appears
at runtime.  Conversion from dB happens once, at the configuration
boundary (see :func:`db_to_linear` and :meth:`LinkBudget.from_db`).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "NetworkTopology",
    "LinkBudget",
    "ChannelRealization",
    "CsiErrorModel",
    "db_to_linear",
    "linear_to_db",
    "sample_realization",
    "sample_estimated_realization",
    "relay_power",
    "snr_matrix",
    "snr_matrix_imperfect",
]


def db_to_linear(value_db: float) -> float:
    return 10.0 ** (value_db / 10.0)


def linear_to_db(value: float) -> float:
    return 10.0 * np.log10(value)


@dataclass(frozen=True)
class NetworkTopology:
    """Static layout of the secondary network.

    ``num_users`` source-destination pairs communicate through
    ``num_relays`` decode-and-forward relays (no relay is shared, hence
    num_relays >= num_users).  Squared channel gains on the first hop,
    second hop and the relay-to-primary interference path are gamma
    distributed with integer shape ``nakagami_m`` and the given mean
    gains; hop distances enter through ``path_loss_exp``.
    """

    num_users: int
    num_relays: int
    nakagami_m: int = 1
    mean_gain_hop1: float = 1.0
    mean_gain_hop2: float = 1.0
    mean_gain_interf: float = 1.0
    dist_hop1: float = 1.0
    dist_hop2: float = 1.0
    dist_interf: float = 1.0
    path_loss_exp: float = 2.0

    def __post_init__(self):
        if self.num_users < 1:
            raise ValueError(f"num_users must be >= 1, got {self.num_users}")
        if self.num_relays < self.num_users:
            raise ValueError(
                f"num_relays ({self.num_relays}) must be >= num_users "
                f"({self.num_users}); each user needs its own relay"
            )
        if self.nakagami_m != int(self.nakagami_m) or self.nakagami_m < 1:
            raise ValueError(
                f"nakagami_m must be an integer >= 1, got {self.nakagami_m!r}"
            )
        for name in ("mean_gain_hop1", "mean_gain_hop2", "mean_gain_interf",
                     "dist_hop1", "dist_hop2", "dist_interf"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")
        if self.path_loss_exp < 0:
            raise ValueError(f"path_loss_exp must be >= 0, got {self.path_loss_exp}")

    # mean gains after distance-dependent path loss
    @property
    def eff_gain_hop1(self) -> float:
        return self.mean_gain_hop1 / self.dist_hop1 ** self.path_loss_exp

    @property
    def eff_gain_hop2(self) -> float:
        return self.mean_gain_hop2 / self.dist_hop2 ** self.path_loss_exp

    @property
    def eff_gain_interf(self) -> float:
        return self.mean_gain_interf / self.dist_interf ** self.path_loss_exp


@dataclass(frozen=True)
class LinkBudget:
    """Power levels normalised by noise power, all linear.

    ``source_snr``        fixed source transmit power / noise
    ``relay_snr_cap``     peak relay transmit power / noise
    ``interference_snr_cap``  peak tolerable interference at the primary
                          receiver / noise
    ``threshold_snr``     outage threshold
    """

    source_snr: float
    relay_snr_cap: float
    interference_snr_cap: float
    threshold_snr: float

    def __post_init__(self):
        for name in ("source_snr", "relay_snr_cap", "interference_snr_cap",
                     "threshold_snr"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")

    @classmethod
    def from_db(cls, source_db, relay_cap_db, interference_cap_db, threshold_db):
        return cls(
            source_snr=db_to_linear(source_db),
            relay_snr_cap=db_to_linear(relay_cap_db),
            interference_snr_cap=db_to_linear(interference_cap_db),
            threshold_snr=db_to_linear(threshold_db),
        )


@dataclass(frozen=True)
class ChannelRealization:
    """Squared channel gains for every user-relay pair.

    Arrays have shape (..., num_users, num_relays); a leading axis holds
    independent trials when sampled in batch.
    """

    hop1: np.ndarray
    hop2: np.ndarray
    interf: np.ndarray


@dataclass(frozen=True)
class CsiErrorModel:
    """Channel-estimation error model (Rayleigh fading only).

    Estimated channels are complex Gaussian with the ``est_gain_*``
    variances and the independent estimation errors have the
    ``err_var_*`` variances; the true gain splits as est + err.
    """

    est_gain_hop1: float
    est_gain_hop2: float
    est_gain_interf: float
    err_var_hop1: float
    err_var_hop2: float
    err_var_interf: float

    def __post_init__(self):
        for name in ("est_gain_hop1", "est_gain_hop2", "est_gain_interf"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")
        for name in ("err_var_hop1", "err_var_hop2", "err_var_interf"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")

    @classmethod
    def from_error_ratios(cls, topology: NetworkTopology,
                          ratio_hop1: float, ratio_hop2: float,
                          ratio_interf: float) -> "CsiErrorModel":
        """Split each true mean gain into estimate + error given the
        error-to-total variance ratios."""
        for name, r in (("ratio_hop1", ratio_hop1), ("ratio_hop2", ratio_hop2),
                        ("ratio_interf", ratio_interf)):
            if not 0 <= r < 1:
                raise ValueError(f"{name} must be in [0, 1), got {r}")
        return cls(
            est_gain_hop1=topology.mean_gain_hop1 * (1 - ratio_hop1),
            est_gain_hop2=topology.mean_gain_hop2 * (1 - ratio_hop2),
            est_gain_interf=topology.mean_gain_interf * (1 - ratio_interf),
            err_var_hop1=topology.mean_gain_hop1 * ratio_hop1,
            err_var_hop2=topology.mean_gain_hop2 * ratio_hop2,
            err_var_interf=topology.mean_gain_interf * ratio_interf,
        )


def _gamma_gains(rng: np.random.Generator, m: int, mean: float, shape) -> np.ndarray:
    # sum of m exponentials of mean mean/m == squared Nakagami-m amplitude;
    # avoids any rejection-sampling edge cases and is trivially verifiable
    draws = rng.exponential(scale=mean / m, size=(m,) + shape)
    return draws.sum(axis=0)


def sample_realization(topology: NetworkTopology, rng: np.random.Generator,
                       trials: int | None = None) -> ChannelRealization:
    """Draw i.i.d. squared gains for every link; deterministic for a
    given generator state.  ``trials`` adds a leading batch axis."""
    base = (topology.num_users, topology.num_relays)
    shape = base if trials is None else (trials,) + base
    m = topology.nakagami_m
    return ChannelRealization(
        hop1=_gamma_gains(rng, m, topology.mean_gain_hop1, shape),
        hop2=_gamma_gains(rng, m, topology.mean_gain_hop2, shape),
        interf=_gamma_gains(rng, m, topology.mean_gain_interf, shape),
    )


def sample_estimated_realization(topology: NetworkTopology, err: CsiErrorModel,
                                 rng: np.random.Generator,
                                 trials: int | None = None) -> ChannelRealization:
    """Draw squared gains of the *estimated* channels (Rayleigh only).

    Estimates are sampled directly from their own variances rather than
    by perturbing true channels: every imperfect-CSI statistic in this
    package depends only on the estimates and the error variances.
    """
    if topology.nakagami_m != 1:
        raise ValueError("imperfect-CSI model requires nakagami_m == 1")
    base = (topology.num_users, topology.num_relays)
    shape = base if trials is None else (trials,) + base
    return ChannelRealization(
        hop1=_gamma_gains(rng, 1, err.est_gain_hop1, shape),
        hop2=_gamma_gains(rng, 1, err.est_gain_hop2, shape),
        interf=_gamma_gains(rng, 1, err.est_gain_interf, shape),
    )


def relay_power(f_gain, budget: LinkBudget, topology: NetworkTopology):
    """Relay transmit power over noise: the peak-power cap or the level
    that meets the interference cap at the primary receiver, whichever
    binds.  A zero interference gain means the cap cannot bind, so the
    peak power is returned."""
    f = np.asarray(f_gain, dtype=float)
    if np.any(f < 0):
        raise ValueError("interference gain must be >= 0")
    d3b = topology.dist_interf ** topology.path_loss_exp
    with np.errstate(divide="ignore"):
        interference_limit = np.where(
            f > 0, budget.interference_snr_cap * d3b / f, np.inf
        )
    out = np.minimum(budget.relay_snr_cap, interference_limit)
    return float(out) if out.ndim == 0 else out


def snr_matrix(realization: ChannelRealization, topology: NetworkTopology,
               budget: LinkBudget) -> np.ndarray:
    """End-to-end SNR of every user-relay pair: the smaller of the two
    decode-and-forward hop SNRs.  Shape matches the realization arrays."""
    d1b = topology.dist_hop1 ** topology.path_loss_exp
    d2b = topology.dist_hop2 ** topology.path_loss_exp
    hop1_snr = budget.source_snr * realization.hop1 / d1b
    hop2_snr = relay_power(realization.interf, budget, topology) \
        * realization.hop2 / d2b
    return np.minimum(hop1_snr, hop2_snr)


def snr_matrix_imperfect(estimates: ChannelRealization, err: CsiErrorModel,
                         topology: NetworkTopology,
                         budget: LinkBudget) -> np.ndarray:
    """End-to-end SNR built from estimated channels with the residual
    estimation error folded into the effective noise of each hop."""
    if topology.nakagami_m != 1:
        raise ValueError("imperfect-CSI model requires nakagami_m == 1")
    d1b = topology.dist_hop1 ** topology.path_loss_exp
    d2b = topology.dist_hop2 ** topology.path_loss_exp
    q = relay_power(estimates.interf, budget, topology)
    hop1_snr = budget.source_snr * estimates.hop1 \
        / (budget.source_snr * err.err_var_hop1 + d1b)
    hop2_snr = q * estimates.hop2 / (q * err.err_var_hop2 + d2b)
    return np.minimum(hop1_snr, hop2_snr)
