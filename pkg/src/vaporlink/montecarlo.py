"""Discrete-event simulation of the nested single-photon repeater.

Validates the waiting-time structure of the analytic distribution time by
simulating the protocol literally: every elementary link repeats
independent generation attempts in units of the attempt time T_att =
L0/c + t_trans + t_ch; a level-i swap fires when both child links are
ready, costs one extra T_att of readout, and on failure destroys both
subtrees (photons were consumed), which then rebuild from scratch; two
full chains run in parallel and the final post-selection costs one more
T_att per attempt, restarting both chains on failure.  Success
probabilities are imported from :mod:`vaporlink.repeater` (exact
generation efficiency, level-i swap probability, post-selection
probability) -- the simulation validates time accounting, never re-derives
probabilities.

Sampling strategy: the number of tries of every node is geometric, so the
engine first samples all try/attempt COUNTS top-down (post-selection tries,
then swap tries level by level, then link attempts), then rolls completion
times bottom-up with segmented reductions.  This is distribution-exact for
the process above and fully vectorized.

Reproducibility: trial t draws from the ``splitmix64-counter`` stream
keyed by (seed, t) (see :mod:`vaporlink.rng`).  Within a trial, counter
positions are consumed in a fixed documented order: position 0 holds the
post-selection try count, followed by the per-node try counts for swap
levels n down to 1 (nodes in enumeration order), followed by per-link
attempt counts in leaf order.  Because draws are addressed by explicit
counters, batching and vectorization cannot change any trial's sequence;
identical (config, seed) gives bit-identical results, and trials may be
evaluated in any partition.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
import math

import numpy as np

from .errors import ParameterError
from .params import ProtocolParams
from .repeater import (attempt_time, generation_fidelity_efficiency,
                       postselection_probability, resolve_charging,
                       swap_probability, total_time)
from .rng import geometric_at, stream_key

try:
    from ._mc_kernel import _run_trials as _jit_run_trials
except Exception:  # numba unavailable: the numpy engine still works
    _jit_run_trials = None

__all__ = ["SimConfig", "SimResult", "ValidationRow", "RATIO_BAND",
           "make_config", "simulate_chain", "validate_formula"]

RATIO_BAND = (0.5, 2.0)


@dataclass(frozen=True)
class SimConfig:
    """One Monte Carlo run: protocol parameters, trial budget, seed.

    The restart policy is fixed to restart-both-sublinks (swap failure
    consumes the photons of both children).  max_attempts caps the total
    link attempts of a single trial; exceeding it raises instead of
    silently truncating.
    """

    protocol: ProtocolParams
    trials: int
    seed: int
    max_attempts: int = 10 ** 9
    batch_size: int = 4096

    def __post_init__(self):
        if self.trials < 1:
            raise ParameterError("trials must be >= 1")
        if self.batch_size < 1:
            raise ParameterError("batch_size must be >= 1")

    @property
    def l_total_km(self) -> float:
        return self.protocol.L0_km * 2 ** self.protocol.n


@dataclass(frozen=True)
class SimResult:
    """Aggregated waiting-time statistics of one configuration.

    attempts_histogram holds (floor(log2(attempts)), trial count) pairs
    over the per-trial total link attempts.  All fields are plain scalars
    or tuples so equality is bitwise-meaningful for determinism checks.
    """

    n: int
    l_total_km: float
    trials: int
    seed: int
    mean_s: float
    stderr_s: float
    p50_s: float
    p90_s: float
    p99_s: float
    analytic_s: float
    ratio: float
    max_idle_s: float
    total_links: int
    total_link_attempts: int
    attempts_histogram: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class ValidationRow:
    n: int
    l_total_km: float
    trials: int
    seed: int
    mean_s: float
    stderr_s: float
    p50_s: float
    p90_s: float
    p99_s: float
    analytic_s: float
    ratio: float
    ci95_s: float
    in_band: bool


def make_config(p: ProtocolParams, n: int, l_total_km: float, trials: int,
                seed: int, **kwargs) -> SimConfig:
    """Configuration for a total distance; L0 = L/2^n, charging rebound
    from the bundled table when it covers (n, F_targ)."""
    pp = resolve_charging(p, n)
    pp = replace(pp, L0_km=l_total_km / 2 ** n)
    return SimConfig(protocol=pp, trials=trials, seed=seed, **kwargs)


class _Probabilities:
    def __init__(self, p: ProtocolParams):
        self.eta_gen = generation_fidelity_efficiency(p).eta_gen
        self.p_swap = [swap_probability(i, p) for i in range(1, p.n + 1)]
        self.p_ps = postselection_probability(p.n, p)
        for name, val in [("eta_gen", self.eta_gen), ("P_ps", self.p_ps),
                          *[(f"P_{i + 1}", v) for i, v in enumerate(self.p_swap)]]:
            if not (0.0 < val <= 1.0):
                raise ParameterError(
                    f"per-attempt probability {name} = {val!r} outside (0, 1]")


def _trial_grouped_counters(counts, next_ctr):
    """Counter positions for `counts[t]` consecutive draws per trial."""
    total = int(counts.sum())
    trial_of_item = np.repeat(np.arange(counts.size), counts)
    starts = np.zeros(counts.size, dtype=np.int64)
    np.cumsum(counts[:-1], out=starts[1:])
    rank = np.arange(total, dtype=np.int64) - np.repeat(starts, counts)
    ctr = next_ctr[trial_of_item] + rank
    next_ctr += counts
    return trial_of_item, ctr


def _segment_starts(seg_counts):
    starts = np.zeros(seg_counts.size, dtype=np.int64)
    np.cumsum(seg_counts[:-1], out=starts[1:])
    return starts


def _simulate_batch(keys, probs: _Probabilities, n: int, t_att: float,
                    max_attempts: int):
    """One batch of trials; returns (total time, max idle, link attempts)
    per trial."""
    b = keys.size
    next_ctr = np.zeros(b, dtype=np.int64)

    # --- top-down counts ---------------------------------------------------
    _, ctr = _trial_grouped_counters(np.ones(b, dtype=np.int64), next_ctr)
    k_ps = geometric_at(keys, ctr, probs.p_ps)          # ps tries per trial

    node_trials = np.repeat(np.arange(b), 2 * k_ps)     # level-n completions
    level_tries = []                                    # per level: K array
    for i in range(n, 0, -1):
        counts = np.bincount(node_trials, minlength=b).astype(np.int64)
        trial_of_node, ctr = _trial_grouped_counters(counts, next_ctr)
        k_i = geometric_at(keys[trial_of_node], ctr, probs.p_swap[i - 1])
        level_tries.append(k_i)
        # each try spawns two completions one level down
        node_trials = np.repeat(trial_of_node, 2 * k_i)

    link_trials = node_trials
    counts = np.bincount(link_trials, minlength=b).astype(np.int64)
    trial_of_link, ctr = _trial_grouped_counters(counts, next_ctr)
    attempts = geometric_at(keys[trial_of_link], ctr, probs.eta_gen)

    per_trial_attempts = np.bincount(trial_of_link, weights=attempts,
                                     minlength=b)
    worst = per_trial_attempts.max(initial=0.0)
    if worst > max_attempts:
        raise ParameterError(
            f"a trial needed {int(worst)} link attempts, exceeding the "
            f"max_attempts cap {max_attempts}; raise the cap explicitly "
            "if this configuration is intended")

    # --- bottom-up roll-up --------------------------------------------------
    t_child = attempts.astype(np.float64) * t_att
    idle_child = np.zeros_like(t_child)
    for k_i in reversed(level_tries):                   # levels 1 .. n
        t0, t1 = t_child[0::2], t_child[1::2]
        t_try = np.maximum(t0, t1) + t_att
        wait = np.abs(t0 - t1)
        idle_try = np.maximum(np.maximum(idle_child[0::2], idle_child[1::2]),
                              wait)
        starts = _segment_starts(k_i)
        t_child = np.add.reduceat(t_try, starts)
        idle_child = np.maximum.reduceat(idle_try, starts)

    t0, t1 = t_child[0::2], t_child[1::2]
    t_try = np.maximum(t0, t1) + t_att
    wait = np.abs(t0 - t1)
    idle_try = np.maximum(np.maximum(idle_child[0::2], idle_child[1::2]), wait)
    starts = _segment_starts(k_ps)
    total = np.add.reduceat(t_try, starts)
    idle = np.maximum.reduceat(idle_try, starts)
    return total, idle, per_trial_attempts.astype(np.int64), attempts.size


def simulate_chain(cfg: SimConfig, engine: str = "auto") -> SimResult:
    """Run all trials of one configuration.  Deterministic given
    (config, seed): integer attempt counting, floating-point only in
    fixed-order time sums.

    engine: "auto" uses the compiled kernel when numba is available,
    "jit" requires it, "numpy" forces the vectorized reference engine.
    Both engines consume identical RNG streams and produce identical
    integer statistics; float aggregates agree to roundoff (segment sums
    are sequential in the kernel, pairwise in numpy's reduceat).
    """
    p = cfg.protocol
    probs = _Probabilities(p)
    t_att = attempt_time(p)
    analytic = total_time(p)

    if engine not in ("auto", "jit", "numpy"):
        raise ParameterError(f"unknown engine {engine!r}")
    if engine == "jit" and _jit_run_trials is None:
        raise ParameterError("engine='jit' requires numba")
    use_jit = engine != "numpy" and _jit_run_trials is not None

    times = np.empty(cfg.trials, dtype=np.float64)
    attempts = np.empty(cfg.trials, dtype=np.int64)
    max_idle = 0.0
    n_links = 0
    if use_jit:
        with np.errstate(divide="ignore"):
            log1m_swap = np.log1p(-np.asarray(probs.p_swap, dtype=np.float64))
            log1m_ps = float(np.log1p(-probs.p_ps))
            log1m_gen = float(np.log1p(-probs.eta_gen))
        idle_arr = np.empty(cfg.trials, dtype=np.float64)
        links_arr = np.empty(cfg.trials, dtype=np.int64)
        bad = _jit_run_trials(np.uint64(cfg.seed), 0, cfg.trials, p.n,
                              log1m_swap, log1m_ps, log1m_gen, t_att,
                              cfg.max_attempts, times, idle_arr, attempts,
                              links_arr)
        if bad >= 0:
            raise ParameterError(
                f"trial {bad} exceeded the max_attempts cap "
                f"{cfg.max_attempts}; raise the cap explicitly if this "
                "configuration is intended")
        max_idle = float(idle_arr.max())
        n_links = int(links_arr.sum())
    else:
        for lo in range(0, cfg.trials, cfg.batch_size):
            hi = min(lo + cfg.batch_size, cfg.trials)
            keys = stream_key(cfg.seed, np.arange(lo, hi, dtype=np.uint64))
            tot, idle, att, links = _simulate_batch(keys, probs, p.n, t_att,
                                                    cfg.max_attempts)
            times[lo:hi] = tot
            attempts[lo:hi] = att
            max_idle = max(max_idle, float(idle.max()))
            n_links += links

    mean = float(times.mean())
    stderr = (float(times.std(ddof=1) / math.sqrt(cfg.trials))
              if cfg.trials > 1 else 0.0)
    p50, p90, p99 = (float(q) for q in np.quantile(times, (0.5, 0.9, 0.99)))
    buckets = np.floor(np.log2(attempts)).astype(np.int64)
    hist = tuple(sorted(
        (int(kk), int(v)) for kk, v in
        zip(*np.unique(buckets, return_counts=True))))
    return SimResult(
        n=p.n, l_total_km=cfg.l_total_km, trials=cfg.trials, seed=cfg.seed,
        mean_s=mean, stderr_s=stderr, p50_s=p50, p90_s=p90, p99_s=p99,
        analytic_s=analytic, ratio=mean / analytic, max_idle_s=max_idle,
        total_links=n_links,
        total_link_attempts=int(attempts.sum()),
        attempts_histogram=hist,
    )


def validate_formula(configs, engine: str = "auto") -> list[ValidationRow]:
    """Systematic accuracy study of the analytic total-time formula over a
    grid of configurations; flags any MC/analytic ratio outside
    ``RATIO_BAND``.  An empty grid yields an empty report."""
    rows = []
    for cfg in configs:
        res = simulate_chain(cfg, engine=engine)
        ci95 = 1.96 * res.stderr_s
        in_band = RATIO_BAND[0] <= res.ratio <= RATIO_BAND[1]
        rows.append(ValidationRow(
            n=res.n, l_total_km=res.l_total_km, trials=res.trials,
            seed=res.seed, mean_s=res.mean_s, stderr_s=res.stderr_s,
            p50_s=res.p50_s, p90_s=res.p90_s, p99_s=res.p99_s,
            analytic_s=res.analytic_s, ratio=res.ratio, ci95_s=ci95,
            in_band=in_band))
    return rows
