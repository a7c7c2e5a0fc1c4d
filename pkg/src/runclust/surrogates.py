"""Poissonian surrogates and Monte-Carlo confidence bands.

A surrogate keeps the event count, observation window and mark multiset
of the original process but redraws the event times as i.i.d. uniforms
over the window, which is a homogeneous Poisson process conditioned on
its count.  Comparing an observed statistic against the band spanned by
many surrogates turns it into a significance test: values above the
band mean clustering, values below mean quasi-periodicity.

Randomness comes from the counter-based Philox generator keyed with
``(seed, stream)``, so surrogate i is stream i of the configured seed:
fully deterministic, platform-independent, and independent across
surrogates regardless of evaluation order.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .allan import _af_at_tau
from .runs import MarkedPointProcess, linear_quantile
from .stats import coefficient_of_variation, interevent_times, \
    local_coefficient_of_variation

__all__ = [
    "AfBand",
    "ScalarBand",
    "SurrogateConfig",
    "af_band",
    "cell_bands",
    "poisson_surrogate",
    "scalar_band",
    "surrogate_rng",
]

_MAX_SEED = 2 ** 64


@dataclass(frozen=True)
class SurrogateConfig:
    """How many surrogates to draw, from which seed, and the band levels."""

    seed: int
    n_surrogates: int = 1000
    band: tuple[float, float] = (0.025, 0.975)

    def __post_init__(self):
        if not 0 <= self.seed < _MAX_SEED:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.n_surrogates < 2:
            raise ValueError("need at least 2 surrogates for a band")
        lo, hi = self.band
        if not 0.0 < lo < hi < 1.0:
            raise ValueError("band levels must satisfy 0 < lo < hi < 1")


def surrogate_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Generator for one substream: Philox keyed with ``(seed, stream)``."""
    if not 0 <= seed < _MAX_SEED:
        raise ValueError("seed must be a 64-bit unsigned integer")
    if not 0 <= stream < _MAX_SEED:
        raise ValueError("stream must be a 64-bit unsigned integer")
    key = np.array([seed, stream], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def poisson_surrogate(pp: MarkedPointProcess, seed: int,
                      stream: int = 0) -> MarkedPointProcess:
    """One Poissonian surrogate of a marked point process.

    Draws exactly ``pp.n_events`` times i.i.d. uniformly over the
    window, sorts them, and pairs them with a uniformly random
    permutation of the original marks.  Deterministic given
    ``(seed, stream)``.
    """
    n = pp.n_events
    if n < 2:
        raise ValueError("need at least 2 events to build a surrogate")
    rng = surrogate_rng(seed, stream)
    span = pp.window_end - pp.window_start
    times = np.sort(pp.window_start + rng.random(n) * span)
    # Ties have probability ~n^2/2^53 but would break strict monotonicity;
    # redraw from the same substream until clean.
    while np.any(np.diff(times) == 0):
        times = np.sort(pp.window_start + rng.random(n) * span)
    lengths = rng.permutation(pp.lengths)
    return dataclasses.replace(pp, times=times, lengths=lengths, dt=0.0)


@dataclass(frozen=True)
class ScalarBand:
    """Surrogate band for a scalar statistic, with the observed verdict.

    ``classification`` is "clustered" above the band, "quasi-periodic"
    below it, "poissonian" inside it.
    """

    statistic: str
    observed: float
    lo: float
    hi: float
    classification: str
    n_surrogates: int
    seed: int
    band: tuple[float, float]


_SCALAR_STATISTICS = {
    "cv": coefficient_of_variation,
    "lv": local_coefficient_of_variation,
}


def _classify(observed: float, lo: float, hi: float) -> str:
    if observed > hi:
        return "clustered"
    if observed < lo:
        return "quasi-periodic"
    return "poissonian"


def _scalar_band_from_samples(statistic: str, observed: float,
                              samples: np.ndarray,
                              config: SurrogateConfig) -> ScalarBand:
    lo = linear_quantile(samples, config.band[0])
    hi = linear_quantile(samples, config.band[1])
    return ScalarBand(statistic=statistic, observed=observed, lo=lo, hi=hi,
                      classification=_classify(observed, lo, hi),
                      n_surrogates=config.n_surrogates, seed=config.seed,
                      band=config.band)


def scalar_band(pp: MarkedPointProcess, statistic: str,
                config: SurrogateConfig) -> ScalarBand:
    """Surrogate confidence band for ``cv`` or ``lv``.

    Evaluates the statistic on every surrogate and takes the configured
    quantiles with the same rank-interpolation estimator used for
    thresholds.  Needs at least 3 events so the statistic is defined on
    each surrogate.
    """
    if statistic not in _SCALAR_STATISTICS:
        raise ValueError(f"unknown statistic {statistic!r}; expected 'cv' or 'lv'")
    if pp.n_events < 3:
        raise ValueError("need at least 3 events for a scalar band")
    fn = _SCALAR_STATISTICS[statistic]
    observed = fn(interevent_times(pp))

    samples = np.empty(config.n_surrogates)
    for i in range(config.n_surrogates):
        surr = poisson_surrogate(pp, config.seed, stream=i)
        samples[i] = fn(np.diff(surr.times))
    return _scalar_band_from_samples(statistic, observed, samples, config)


@dataclass(frozen=True, eq=False)
class AfBand:
    """Per-tau surrogate quantiles of the Allan factor.

    ``lo``/``hi`` are NaN at grid points where no surrogate produced a
    defined factor; ``n_samples`` counts the defined surrogate values
    entering each quantile.
    """

    taus: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    n_samples: np.ndarray
    n_surrogates: int
    seed: int
    band: tuple[float, float]

    def __post_init__(self):
        taus = np.asarray(self.taus, dtype=float)
        lo = np.asarray(self.lo, dtype=float)
        hi = np.asarray(self.hi, dtype=float)
        n_samples = np.asarray(self.n_samples, dtype=np.int64)
        if not (taus.shape == lo.shape == hi.shape == n_samples.shape):
            raise ValueError("band arrays must share one shape")
        both = np.isfinite(lo) & np.isfinite(hi)
        if np.any(lo[both] > hi[both]):
            raise ValueError("band lower edge exceeds upper edge")
        for name, arr in (("taus", taus), ("lo", lo), ("hi", hi),
                          ("n_samples", n_samples)):
            object.__setattr__(self, name, arr)


def af_band(pp: MarkedPointProcess, taus: np.ndarray,
            config: SurrogateConfig) -> AfBand:
    """Surrogate confidence band for the Allan-factor curve.

    Each surrogate contributes its factor at every tau where defined;
    undefined surrogate values contribute no sample at that tau rather
    than a placeholder.
    """
    taus = np.asarray(taus, dtype=float)
    if pp.n_events < 2:
        raise ValueError("need at least 2 events for an Allan-factor band")

    values = np.full((config.n_surrogates, taus.size), np.nan)
    for i in range(config.n_surrogates):
        surr = poisson_surrogate(pp, config.seed, stream=i)
        for j, tau in enumerate(taus):
            values[i, j], _ = _af_at_tau(surr.times, surr.window_start,
                                         surr.duration, tau)
    return _af_band_from_values(taus, values, config)


def _af_band_from_values(taus: np.ndarray, values: np.ndarray,
                         config: SurrogateConfig) -> AfBand:
    lo = np.full(taus.size, np.nan)
    hi = np.full(taus.size, np.nan)
    n_samples = np.zeros(taus.size, dtype=np.int64)
    for j in range(taus.size):
        column = values[:, j]
        column = column[np.isfinite(column)]
        n_samples[j] = column.size
        if column.size:
            lo[j] = linear_quantile(column, config.band[0])
            hi[j] = linear_quantile(column, config.band[1])
    return AfBand(taus=taus, lo=lo, hi=hi, n_samples=n_samples,
                  n_surrogates=config.n_surrogates, seed=config.seed,
                  band=config.band)


def cell_bands(pp: MarkedPointProcess, taus: np.ndarray,
               config: SurrogateConfig) -> tuple[ScalarBand, ScalarBand, AfBand]:
    """Cv band, Lv band and Allan-factor band from one surrogate sweep.

    Surrogate i is stream i of the configured seed, exactly as in
    :func:`scalar_band` and :func:`af_band`, so the three results are
    identical to three separate calls; each surrogate is just generated
    once instead of three times.
    """
    if pp.n_events < 3:
        raise ValueError("need at least 3 events for scalar bands")
    taus = np.asarray(taus, dtype=float)
    observed = interevent_times(pp)
    obs_cv = coefficient_of_variation(observed)
    obs_lv = local_coefficient_of_variation(observed)

    cv_samples = np.empty(config.n_surrogates)
    lv_samples = np.empty(config.n_surrogates)
    values = np.full((config.n_surrogates, taus.size), np.nan)
    for i in range(config.n_surrogates):
        surr = poisson_surrogate(pp, config.seed, stream=i)
        d = np.diff(surr.times)
        cv_samples[i] = coefficient_of_variation(d)
        lv_samples[i] = local_coefficient_of_variation(d)
        for j, tau in enumerate(taus):
            values[i, j], _ = _af_at_tau(surr.times, surr.window_start,
                                         surr.duration, tau)
    return (_scalar_band_from_samples("cv", obs_cv, cv_samples, config),
            _scalar_band_from_samples("lv", obs_lv, lv_samples, config),
            _af_band_from_values(taus, values, config))
