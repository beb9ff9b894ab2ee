"""Seeded Monte Carlo harness: single-point block-error estimation, parameter
sweeps with common random numbers across the family axis, the analytic random
parity-check reference curve, and the paired MAP-vs-SC permutation comparison.

Every trial draws its own counter-based stream from (master seed, point salt,
trial index), so estimates are byte-reproducible regardless of worker count or
scheduling. A block error is any trial whose decoded information word differs
from the transmitted one; ambiguous and failed decodes count as errors.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp
from scipy.stats import binom

from .channels import (
    BAWGN,
    BEC,
    ChannelModel,
    ConvexPerfect,
    derive_key,
    snr_db_to_noise_var,
    transmit,
    trial_stream,
)
from .construction import CodeSpec, LayerPermutation, interp_code, permuted_code
from .decoders import (
    DecodeStatus,
    bp_decode,
    map_decode_bec,
    sc_decode_bec,
    sc_decode_llr,
    scl_decode,
)
from .gf2 import BitBlock, encode

_WILSON_Z = 1.959963984540054  # two-sided 95%


def wilson_interval(errors: int, trials: int, z: float = _WILSON_Z) -> tuple[float, float]:
    """Wilson score interval; well behaved at zero observed errors."""
    if trials < 1:
        raise ValueError("trials must be positive")
    p = errors / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2.0 * trials)) / denom
    half = (z / denom) * math.sqrt(p * (1.0 - p) / trials + z * z / (4.0 * trials * trials))
    return max(0.0, center - half), min(1.0, center + half)


@dataclass(frozen=True)
class DecoderConfig:
    kind: str  # "map" | "sc" | "scl" | "bp"
    list_size: int | None = None
    max_iter: int | None = None

    def __post_init__(self):
        if self.kind not in ("map", "sc", "scl", "bp"):
            raise ValueError(f"unknown decoder kind {self.kind!r}")
        if self.kind == "scl" and (self.list_size is None or self.list_size < 1):
            raise ValueError("list decoding needs list_size >= 1")


@dataclass(frozen=True)
class SimEstimate:
    trials: int
    errors: int
    p_hat: float
    ci_lo: float
    ci_hi: float
    seed: int
    wall_time: float = 0.0


@dataclass(frozen=True)
class SweepPlan:
    """Cartesian sweep over family weight, channel parameter, and decoder.

    ``params`` are erasure rates for ``channel_kind="bec"`` and SNR values in
    dB for ``"bawgn"``. With ``redesign_per_point`` each code is designed for
    the point's own channel parameter; otherwise ``design_param`` (an erasure
    rate or a noise variance) fixes the design channel for the whole sweep.
    With ``paired`` the channel realizations and information words are shared
    across the alpha and decoder axes at each (trial, param) pair.
    """

    n: int
    rate: float
    channel_kind: str
    params: tuple[float, ...]
    alphas: tuple[float, ...]
    decoders: tuple[DecoderConfig, ...]
    trials: int
    seed: int
    paired: bool = True
    redesign_per_point: bool = True
    design_param: float | None = None
    workers: int = 1

    def __post_init__(self):
        if self.channel_kind not in ("bec", "bawgn"):
            raise ValueError("channel kind must be 'bec' or 'bawgn'")
        if not self.params or not self.alphas or not self.decoders:
            raise ValueError("sweep axes must be non-empty")
        if self.trials < 1:
            raise ValueError("trials must be positive")
        if not self.redesign_per_point and self.design_param is None:
            raise ValueError("fixed-design sweeps need design_param")


@dataclass(frozen=True)
class ResultRow:
    family: str
    alpha: float | None
    n: int | None
    rate: float | None
    channel: str
    param: float
    decoder: str
    list_size: int | None
    max_iter: int | None
    est: SimEstimate


CSV_HEADER = "family,alpha,n,rate,channel,param,decoder,L,max_iter,trials,errors,pe,ci_lo,ci_hi,seed"


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def rows_to_csv(rows) -> str:
    lines = [CSV_HEADER]
    ordered = sorted(
        rows,
        key=lambda r: (
            -1.0 if r.alpha is None else r.alpha,
            r.param,
            r.decoder,
            -1 if r.list_size is None else r.list_size,
        ),
    )
    for r in ordered:
        est = r.est
        lines.append(
            ",".join(
                [
                    r.family,
                    _fmt(r.alpha),
                    _fmt(r.n),
                    _fmt(r.rate),
                    r.channel,
                    _fmt(r.param),
                    r.decoder,
                    _fmt(r.list_size),
                    _fmt(r.max_iter),
                    _fmt(est.trials),
                    _fmt(est.errors),
                    _fmt(est.p_hat),
                    _fmt(est.ci_lo),
                    _fmt(est.ci_hi),
                    _fmt(est.seed),
                ]
            )
        )
    return "\n".join(lines) + "\n"


def write_csv(rows, path) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="ascii", newline="\n") as fh:
        fh.write(rows_to_csv(rows))
    os.replace(tmp, path)


# --- single point -------------------------------------------------------------


def _lower(obs):
    if obs.kind != "convex":
        return obs
    return obs.to_bec() if obs.llr is None else obs.to_llr()


def _check_compat(channel: ChannelModel, decoder: DecoderConfig) -> None:
    erasure = isinstance(channel, BEC) or (
        isinstance(channel, ConvexPerfect) and isinstance(channel.base, BEC)
    )
    if decoder.kind == "map" and not erasure:
        raise ValueError("exact MAP decoding is only available over erasure channels")


@dataclass(frozen=True)
class _PointJob:
    spec: CodeSpec
    channel: ChannelModel
    decoder: DecoderConfig
    seed: int
    salt: tuple[int, ...]


def _decode(job: _PointJob, obs):
    kind = job.decoder.kind
    if kind == "map":
        return map_decode_bec(job.spec, obs)
    if kind == "sc":
        return sc_decode_bec(job.spec, obs) if obs.kind == "bec" else sc_decode_llr(job.spec, obs)
    if kind == "scl":
        return scl_decode(job.spec, obs, job.decoder.list_size)
    return bp_decode(job.spec, obs, job.decoder.max_iter)


def _run_trials(job: _PointJob, start: int, stop: int) -> int:
    spec = job.spec
    size = spec.block_length
    info_idx = np.fromiter(spec.info_set, dtype=np.int64)
    errors = 0
    u_bits = np.zeros(size, dtype=np.uint8)
    for trial in range(start, stop):
        rng = trial_stream(job.seed, *job.salt, trial)
        info = rng.integers(0, 2, info_idx.size, dtype=np.uint8)
        u_bits[:] = 0
        u_bits[info_idx] = info
        codeword = encode(BitBlock.from_bits(u_bits))
        obs = _lower(transmit(job.channel, codeword, rng))
        result = _decode(job, obs)
        if result.status is not DecodeStatus.DECODED or not np.array_equal(
            result.info_bits.to_bits(), info
        ):
            errors += 1
    return errors


def run_point(
    spec: CodeSpec,
    channel: ChannelModel,
    decoder: DecoderConfig,
    trials: int,
    seed: int,
    stream_salt: tuple[int, ...] = (),
    workers: int = 1,
    executor: ProcessPoolExecutor | None = None,
) -> SimEstimate:
    """Estimate the block error probability over ``trials`` seeded trials.

    Identical inputs give a bit-identical estimate; the worker count only
    affects wall time because every trial derives its own stream.
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    _check_compat(channel, decoder)
    job = _PointJob(spec, channel, decoder, seed, tuple(stream_salt))
    t0 = time.perf_counter()
    if workers <= 1 and executor is None:
        errors = _run_trials(job, 0, trials)
    else:
        own = executor is None
        pool = executor or ProcessPoolExecutor(max_workers=workers)
        try:
            nw = pool._max_workers
            edges = np.linspace(0, trials, nw + 1, dtype=np.int64)
            parts = pool.map(
                _run_trials,
                [job] * nw,
                edges[:-1].tolist(),
                edges[1:].tolist(),
            )
            errors = int(sum(parts))
        finally:
            if own:
                pool.shutdown()
    lo, hi = wilson_interval(errors, trials)
    return SimEstimate(trials, errors, errors / trials, lo, hi, seed, time.perf_counter() - t0)


# --- sweeps --------------------------------------------------------------------


def _transmission_channel(kind: str, param: float) -> ChannelModel:
    if kind == "bec":
        return BEC(param)
    return BAWGN(snr_db_to_noise_var(param))


def _design_base(plan: SweepPlan, param: float) -> ChannelModel:
    if plan.channel_kind == "bec":
        eps = param if plan.redesign_per_point else plan.design_param
        return BEC(eps)
    var = snr_db_to_noise_var(param) if plan.redesign_per_point else plan.design_param
    return BAWGN(var)


def _point_salt(plan: SweepPlan, param: float, alpha: float, dec: DecoderConfig) -> tuple[int, ...]:
    if plan.paired:
        return derive_key("paired", plan.channel_kind, param)
    return derive_key(
        "unpaired", plan.channel_kind, param, alpha, dec.kind, dec.list_size, dec.max_iter
    )


def run_sweep(plan: SweepPlan, progress=None) -> list[ResultRow]:
    """Run the full Cartesian sweep, returning rows in deterministic order."""
    rows: list[ResultRow] = []
    executor = None
    if plan.workers > 1:
        executor = ProcessPoolExecutor(max_workers=plan.workers)
    try:
        for alpha in plan.alphas:
            for param in plan.params:
                base = _design_base(plan, param)
                spec = interp_code(plan.n, plan.rate, base, alpha)
                channel = _transmission_channel(plan.channel_kind, param)
                for dec in plan.decoders:
                    est = run_point(
                        spec,
                        channel,
                        dec,
                        plan.trials,
                        plan.seed,
                        stream_salt=_point_salt(plan, param, alpha, dec),
                        workers=plan.workers,
                        executor=executor,
                    )
                    rows.append(
                        ResultRow(
                            "interp",
                            alpha,
                            plan.n,
                            plan.rate,
                            plan.channel_kind,
                            param,
                            dec.kind,
                            dec.list_size,
                            dec.max_iter,
                            est,
                        )
                    )
                    if progress is not None:
                        progress(rows[-1])
    finally:
        if executor is not None:
            executor.shutdown()
    return rows


# --- analytic random-code reference ---------------------------------------------


def random_code_reference(block_len: int, dim: int, eps_grid) -> list[tuple[float, float]]:
    """Average MAP block-error probability of the uniform random parity-check
    ensemble over the erasure channel.

    With e erased positions and m = block_len - dim checks, decoding fails
    exactly when the e erased columns are linearly dependent, which happens
    with probability 1 - prod_{i<e}(1 - 2^(i-m)); the binomial average over e
    is accumulated in log space.
    """
    if not 0 < dim < block_len:
        raise ValueError("dimension must satisfy 0 < k < N")
    m = block_len - dim
    e_vals = np.arange(block_len + 1)
    log_pf = np.full(block_len + 1, -np.inf)
    run = 0.0
    for e in range(block_len + 1):
        if e > m:
            log_pf[e] = 0.0
            continue
        if e > 0:
            run += math.log1p(-(2.0 ** (e - 1 - m)))
        log_pf[e] = math.log(-math.expm1(run)) if run < 0.0 else -np.inf
    out = []
    for eps in eps_grid:
        if not 0.0 <= eps <= 1.0:
            raise ValueError("erasure probabilities must lie in [0, 1]")
        with np.errstate(divide="ignore"):
            log_pmf = binom.logpmf(e_vals, block_len, eps)
        pe = float(np.exp(logsumexp(log_pmf + log_pf)))
        out.append((float(eps), min(1.0, pe)))
    return out


def random_reference_rows(block_len: int, dim: int, eps_grid) -> list[ResultRow]:
    n = int(round(math.log2(block_len)))
    n_col = n if (1 << n) == block_len else None
    rows = []
    for eps, pe in random_code_reference(block_len, dim, eps_grid):
        est = SimEstimate(0, 0, pe, pe, pe, 0)
        rows.append(
            ResultRow(
                "random", None, n_col, dim / block_len, "bec", eps, "random-map", None, None, est
            )
        )
    return rows


# --- permuted-code MAP vs SC comparison ------------------------------------------


@dataclass(frozen=True)
class PermutationReport:
    perm: LayerPermutation
    map_permuted: SimEstimate
    sc_original: SimEstimate
    holds: bool


def permutation_check(
    spec: CodeSpec,
    perm: LayerPermutation,
    eps: float,
    trials: int,
    seed: int,
    workers: int = 1,
) -> PermutationReport:
    """Estimate MAP error on the layer-permuted code against SC error on the
    original code over paired erasure realizations, and report whether the
    permuted-MAP estimate is no larger."""
    if trials < 1:
        raise ValueError("trials must be positive")
    channel = BEC(eps)
    salt = derive_key("permcheck", eps)
    permuted = permuted_code(spec, perm)
    map_est = run_point(
        permuted, channel, DecoderConfig("map"), trials, seed, stream_salt=salt, workers=workers
    )
    sc_est = run_point(
        spec, channel, DecoderConfig("sc"), trials, seed, stream_salt=salt, workers=workers
    )
    return PermutationReport(perm, map_est, sc_est, map_est.p_hat <= sc_est.p_hat)
