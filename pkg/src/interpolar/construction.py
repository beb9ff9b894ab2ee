"""Row-selection engines for the interpolating code family.

Two selection rules share the same index universe: the weight rule keeps the
heaviest generator rows (channel independent), the reliability rule keeps the
synthetic channels with the best reliability profile (channel specific). The
family parameter ``alpha`` scales the design channel toward the perfect one,
sweeping the selection from the reliability rule at alpha=1 to the weight rule
at alpha=0.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import ndtr

from .channels import BAWGN, BEC, ChannelModel, ConvexPerfect, format_channel, parse_channel
from .gf2 import row_weight

#: Tie-break erasure rate used inside the weight rule: weight classes are cut
#: by ascending Bhattacharyya value at this epsilon, which makes the alpha=0
#: code the limit of the family instead of an arbitrary subset.
RM_TIEBREAK_EPS = 1e-3


class ProfileKind(enum.Enum):
    BHATTACHARYYA_EXACT = "bhattacharyya-exact"
    DE_SURROGATE = "density-evolution-surrogate"


@dataclass(frozen=True)
class ReliabilityProfile:
    """Per-index reliability scores; lower is more reliable."""

    n: int
    scores: np.ndarray
    kind: ProfileKind
    llr_means: np.ndarray | None = None


@dataclass(frozen=True)
class CodeSpec:
    """Block length 2^n, target rate, sorted information set, and the design
    point (base channel plus interpolation weight) it was built from."""

    n: int
    rate: float
    info_set: tuple[int, ...]
    design_channel: ChannelModel | None
    alpha: float

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("need at least one polarization stage")
        size = 1 << self.n
        k = round_half_up(size * self.rate)
        info = tuple(sorted(self.info_set))
        if len(info) != len(set(info)) or (info and not 0 <= info[0] <= info[-1] < size):
            raise ValueError("information set must be distinct indices below 2^n")
        if len(info) != k:
            raise ValueError(f"information set size {len(info)} != round(N*R) = {k}")
        object.__setattr__(self, "info_set", info)

    @property
    def block_length(self) -> int:
        return 1 << self.n

    @property
    def dimension(self) -> int:
        return len(self.info_set)

    @property
    def realized_rate(self) -> float:
        return self.dimension / self.block_length


@dataclass(frozen=True)
class LayerPermutation:
    """Bijection on the n expansion positions (0 = most significant)."""

    n: int
    mapping: tuple[int, ...]

    def __post_init__(self):
        if sorted(self.mapping) != list(range(self.n)):
            raise ValueError("mapping must be a permutation of 0..n-1")

    @classmethod
    def identity(cls, n: int) -> "LayerPermutation":
        return cls(n, tuple(range(n)))

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> "LayerPermutation":
        return cls(n, tuple(int(v) for v in rng.permutation(n)))


@dataclass(frozen=True)
class BinaryExpansion:
    """MSB-first bit expansion of an index over n positions."""

    n: int
    bits: tuple[int, ...]

    def __post_init__(self):
        if len(self.bits) != self.n or any(b not in (0, 1) for b in self.bits):
            raise ValueError("bits must be n values in {0, 1}")

    @classmethod
    def of_index(cls, index: int, n: int) -> "BinaryExpansion":
        if not 0 <= index < (1 << n):
            raise ValueError("index out of range")
        return cls(n, tuple((index >> (n - 1 - k)) & 1 for k in range(n)))

    def value(self) -> int:
        v = 0
        for b in self.bits:
            v = (v << 1) | b
        return v


def round_half_up(x: float) -> int:
    return math.floor(x + 0.5)


def z_worse(x: float) -> float:
    """Bhattacharyya map of the degraded (check-side) synthetic channel."""
    if not 0.0 <= x <= 1.0:
        raise ValueError("argument must lie in [0, 1]")
    return x * (2.0 - x)


def z_better(x: float) -> float:
    """Bhattacharyya map of the upgraded (variable-side) synthetic channel."""
    if not 0.0 <= x <= 1.0:
        raise ValueError("argument must lie in [0, 1]")
    return x * x


def bhattacharyya_bec(i: int, n: int, eps: float) -> float:
    """Erasure Bhattacharyya parameter of synthetic channel ``i``: the maps
    selected by the expansion bits of i are composed onto eps, least
    significant bit applied first."""
    if not 0 <= i < (1 << n):
        raise ValueError("index out of range")
    if not 0.0 <= eps <= 1.0:
        raise ValueError("erasure probability must lie in [0, 1]")
    z = eps
    for _ in range(n):
        z = z_better(z) if i & 1 else z_worse(z)
        i >>= 1
    return z


def bec_profile(n: int, eps: float) -> ReliabilityProfile:
    """All 2^n erasure Bhattacharyya parameters at once via stage doubling."""
    if not 0.0 <= eps <= 1.0:
        raise ValueError("erasure probability must lie in [0, 1]")
    z = np.array([eps], dtype=np.float64)
    for _ in range(n):
        z = np.concatenate([z * (2.0 - z), z * z])
    return ReliabilityProfile(n, z, ProfileKind.BHATTACHARYYA_EXACT)


# --- Gaussian-approximation density evolution -------------------------------
#
# Mean-LLR evolution: the variable-side mean doubles; the check-side mean is
# pulled back through phi(x) ~ exp(-0.4527 x^0.86 + 0.0218) below 10 and the
# sqrt(pi/x) exp(-x/4) (1 - 10/(7x)) tail above. Everything runs on ln(phi)
# so extreme means never underflow.


def _ln_phi(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    small = x < 10.0
    xs = x[small]
    out[small] = -0.4527 * np.power(xs, 0.86) + 0.0218
    xl = x[~small]
    out[~small] = 0.5 * np.log(np.pi / xl) - xl / 4.0 + np.log1p(-10.0 / (7.0 * xl))
    return out


def _phi_inv_ln(ln_target: np.ndarray) -> np.ndarray:
    """Invert ln(phi) by bisection, elementwise, to 1e-12."""
    ln_target = np.asarray(ln_target, dtype=np.float64)
    lo = np.full_like(ln_target, 1e-300)
    hi = np.ones_like(ln_target)
    # expand right brackets until phi(hi) has dropped below the target
    for _ in range(80):
        need = _ln_phi(hi) >= ln_target
        if not need.any():
            break
        hi[need] *= 2.0
    for _ in range(140):
        mid = 0.5 * (lo + hi)
        go_right = _ln_phi(mid) > ln_target
        lo = np.where(go_right, mid, lo)
        hi = np.where(go_right, hi, mid)
        if np.max(hi - lo) <= 1e-12:
            break
    return 0.5 * (lo + hi)


def gaussian_profile(n: int, noise_var: float) -> ReliabilityProfile:
    """Density-evolution surrogate for the Gaussian channel.

    Tracks the mean LLR of each synthetic channel from the all-zero codeword
    assumption and reports Q(sqrt(mean/2)) as the per-index score. The means
    are kept on the profile: they refine selection order where the Q scores
    underflow to equal values.
    """
    if noise_var <= 0.0:
        raise ValueError("noise variance must be positive")
    means = np.array([2.0 / noise_var], dtype=np.float64)
    for _ in range(n):
        ln_phi_m = _ln_phi(means)
        # ln of 1 - (1 - phi)^2 = phi * (2 - phi), stable even when phi
        # underflows (the factor tends to 2)
        ln_check = ln_phi_m + np.log(2.0 - np.exp(ln_phi_m))
        worse = _phi_inv_ln(ln_check)
        means = np.concatenate([worse, 2.0 * means])
    scores = ndtr(-np.sqrt(means / 2.0))
    return ReliabilityProfile(n, scores, ProfileKind.DE_SURROGATE, llr_means=means)


# --- selection rules ---------------------------------------------------------


def _dimension(n: int, rate: float) -> int:
    if not 0.0 < rate < 1.0:
        raise ValueError("rate must lie strictly between 0 and 1")
    k = round_half_up((1 << n) * rate)
    if k < 1:
        raise ValueError("rate too small: empty information set")
    return k


def rm_select(n: int, rate: float) -> CodeSpec:
    """Weight rule: keep the round(N*R) heaviest generator rows.

    Ties inside a weight class are cut by ascending Bhattacharyya value at
    ``RM_TIEBREAK_EPS`` (then by index), so whenever the rate matches a whole
    weight threshold the set is exactly {i : popcount(i) >= k}.
    """
    k = _dimension(n, rate)
    size = 1 << n
    idx = np.arange(size)
    weights = np.array([row_weight(i, n) for i in idx], dtype=np.int64)
    tie = bec_profile(n, RM_TIEBREAK_EPS).scores
    order = np.lexsort((idx, tie, -weights))
    return CodeSpec(n, rate, tuple(int(i) for i in order[:k]), None, 0.0)


def _design_profile(n: int, channel: ChannelModel) -> ReliabilityProfile:
    if isinstance(channel, BEC):
        return bec_profile(n, channel.erasure_prob)
    if isinstance(channel, BAWGN):
        return gaussian_profile(n, channel.noise_var)
    if isinstance(channel, ConvexPerfect):
        base = channel.base
        if isinstance(base, BEC):
            return bec_profile(n, channel.weight * base.erasure_prob)
        return gaussian_profile(n, channel.weight * base.noise_var)
    raise TypeError(f"unknown channel model {channel!r}")


def polar_select(n: int, rate: float, channel: ChannelModel) -> CodeSpec:
    """Reliability rule: keep the round(N*R) indices with the best profile
    scores (ties by descending LLR mean where available, then by index)."""
    k = _dimension(n, rate)
    profile = _design_profile(n, channel)
    idx = np.arange(1 << n)
    if profile.llr_means is not None:
        order = np.lexsort((idx, -profile.llr_means, profile.scores))
    else:
        order = np.lexsort((idx, profile.scores))
    return CodeSpec(n, rate, tuple(int(i) for i in order[:k]), channel, 1.0)


def _scaled_design(base: ChannelModel, alpha: float, bawgn_alpha_mode: str) -> ChannelModel:
    if isinstance(base, BEC):
        return BEC(alpha * base.erasure_prob)
    if isinstance(base, BAWGN):
        if bawgn_alpha_mode == "variance":
            return BAWGN(alpha * base.noise_var)
        if bawgn_alpha_mode == "bhattacharyya":
            # variance whose Bhattacharyya parameter is alpha times the base one
            return BAWGN(base.noise_var / (1.0 - 2.0 * base.noise_var * math.log(alpha)))
        raise ValueError(f"unknown alpha mode {bawgn_alpha_mode!r}")
    raise ValueError("interpolation base must be a plain BEC or BAWGN channel")


def interp_code(
    n: int,
    rate: float,
    base: ChannelModel,
    alpha: float,
    bawgn_alpha_mode: str = "variance",
) -> CodeSpec:
    """Family member at weight ``alpha``: the reliability rule applied to the
    alpha-scaled design channel, degenerating to the weight rule at alpha=0."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    if alpha == 0.0:
        spec = rm_select(n, rate)
        return replace(spec, design_channel=base)
    scaled = _scaled_design(base, alpha, bawgn_alpha_mode)
    spec = polar_select(n, rate, scaled)
    return replace(spec, design_channel=base, alpha=alpha)


@dataclass(frozen=True)
class FamilyStep:
    alpha: float
    spec: CodeSpec
    swapped_in: tuple[tuple[int, int], ...] = ()  # (index, row weight)
    swapped_out: tuple[tuple[int, int], ...] = ()

    @property
    def swap_count(self) -> int:
        return len(self.swapped_in) + len(self.swapped_out)


def family_walk(
    n: int,
    rate: float,
    base: ChannelModel,
    alpha_grid,
    bawgn_alpha_mode: str = "variance",
) -> list[FamilyStep]:
    """Walk the family along a descending alpha grid, reporting the symmetric
    difference between consecutive information sets together with the row
    weight of every swapped index. The walk reports; it does not assert that
    swapped-in rows are heavier."""
    grid = [float(a) for a in alpha_grid]
    if not grid:
        raise ValueError("alpha grid must be non-empty")
    if any(not 0.0 <= a <= 1.0 for a in grid):
        raise ValueError("alpha grid must lie within [0, 1]")
    if any(b > a for a, b in zip(grid, grid[1:], strict=False)):
        raise ValueError("alpha grid must be non-ascending")
    steps: list[FamilyStep] = []
    prev: set[int] | None = None
    for alpha in grid:
        spec = interp_code(n, rate, base, alpha, bawgn_alpha_mode)
        cur = set(spec.info_set)
        if prev is None:
            steps.append(FamilyStep(alpha, spec))
        else:
            added = tuple((i, row_weight(i, n)) for i in sorted(cur - prev))
            removed = tuple((i, row_weight(i, n)) for i in sorted(prev - cur))
            steps.append(FamilyStep(alpha, spec, added, removed))
        prev = cur
    return steps


def permuted_code(spec: CodeSpec, perm: LayerPermutation) -> CodeSpec:
    """Relabel every information index by permuting its expansion positions;
    the multiset of row weights (and hence rate and N) is preserved."""
    if spec.n != perm.n:
        raise ValueError("permutation order does not match the code")
    n = spec.n
    new_set = []
    for i in spec.info_set:
        bits = BinaryExpansion.of_index(i, n).bits
        moved = [0] * n
        for k, b in enumerate(bits):
            moved[perm.mapping[k]] = b
        new_set.append(BinaryExpansion(n, tuple(moved)).value())
    return replace(spec, info_set=tuple(sorted(new_set)))


def union_bound(spec: CodeSpec, eps: float) -> float:
    """Sum of the selected synthetic-channel Bhattacharyya parameters at the
    given erasure rate. Returns the raw sum; clamp to [0, 1] for reporting."""
    design = spec.design_channel
    if isinstance(design, BAWGN) or (
        isinstance(design, ConvexPerfect) and isinstance(design.base, BAWGN)
    ):
        raise ValueError("union bound is only supported for erasure-designed codes")
    profile = bec_profile(spec.n, eps)
    return float(math.fsum(profile.scores[list(spec.info_set)]))


# --- code-spec files ---------------------------------------------------------


def spec_to_text(spec: CodeSpec) -> str:
    channel = "none" if spec.design_channel is None else format_channel(spec.design_channel)
    lines = [
        f"n={spec.n}",
        f"rate={spec.rate:.17g}",
        f"alpha={spec.alpha:.17g}",
        f"channel={channel}",
    ]
    lines.extend(str(i) for i in spec.info_set)
    return "\n".join(lines) + "\n"


def spec_from_text(text: str) -> CodeSpec:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if len(lines) < 5:
        raise ValueError("truncated code-spec file")
    header = {}
    for ln in lines[:4]:
        key, _, value = ln.partition("=")
        header[key] = value
    try:
        n = int(header["n"])
        rate = float(header["rate"])
        alpha = float(header["alpha"])
        channel = None if header["channel"] == "none" else parse_channel(header["channel"])
    except KeyError as exc:
        raise ValueError(f"missing header line {exc} in code-spec file") from None
    info = tuple(int(ln) for ln in lines[4:])
    if list(info) != sorted(info):
        raise ValueError("information set must be listed in ascending order")
    return CodeSpec(n, rate, info, channel, alpha)


def save_spec(spec: CodeSpec, path) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(spec_to_text(spec))


def load_spec(path) -> CodeSpec:
    with open(path, "r", encoding="ascii") as fh:
        return spec_from_text(fh.read())
