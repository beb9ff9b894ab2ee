"""Block decoders: exact erasure MAP, successive cancellation (erasure and
LLR forms), successive-cancellation list, and sum-product message passing on
the encoding butterfly.

All decoders use the natural row order of the Kronecker-power transform: the
recursion splits on the most significant index bit, pairing symbol j with
j + half. Frozen bits are fixed to zero throughout.

Erasure messages are held as int8 in {+1, -1, 0}: +1 means a known 0, -1 a
known 1, 0 an erasure. The check combine is then a plain product and the
variable combine keeps whichever operand is known.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numba import njit

from .channels import LLR_CLAMP, ObservationBlock
from .construction import CodeSpec
from .gf2 import BitBlock, GF2Matrix, SolveStatus, solve_unique


class IntegrityError(RuntimeError):
    """Observations are inconsistent with every codeword (tampered input)."""


class DecodeStatus(enum.Enum):
    DECODED = "decoded"
    AMBIGUOUS = "ambiguous"
    FAILED = "failed"


@dataclass
class DecodeResult:
    status: DecodeStatus
    info_bits: BitBlock | None = None
    first_error: int | None = None
    survivors: int | None = None
    iterations: int | None = None


# --- shared numba helpers ----------------------------------------------------


@njit(cache=True, inline="always")
def _ctz(i):
    t = 0
    while not (i >> t) & 1:
        t += 1
    return t


@njit(cache=True, inline="always")
def _boxplus(a, b):
    s = min(abs(a), abs(b))
    if (a < 0.0) != (b < 0.0):
        s = -s
    t = abs(a + b)
    if t < 30.0:  # beyond 30 the correction is below 1e-13
        s += math.log1p(math.exp(-t))
    t = abs(a - b)
    if t < 30.0:
        s -= math.log1p(math.exp(-t))
    if s > 40.0:
        return 40.0
    if s < -40.0:
        return -40.0
    return s


@njit(cache=True, inline="always")
def _metric_pen(lam, u):
    # log(1 + exp(-(1-2u)*lam)), saturated for large magnitudes
    a = lam if u == 0 else -lam
    if a > 35.0:
        return math.exp(-a)
    if a < -35.0:
        return -a
    return math.log1p(math.exp(-a))


@njit(cache=True, inline="always")
def _ec_var(a, b):
    # erasure-alphabet variable combine; disagreement of two known values is
    # impossible on genuine channel output, the caller handles guessed paths
    if a == 0:
        return b
    return a


# --- single-path successive cancellation -------------------------------------
#
# Iterative schedule over leaves 0..N-1. Before leaf i the buffers of depths
# n-ctz(i)..n are refreshed (the shallowest is a variable combine against the
# stored left-sibling codeword, the deeper ones are check combines); after the
# decision the completed subtree codewords are merged upward while the trailing
# index bits are ones.


@njit(cache=True)
def _sc_bec_kernel(chan, frozen, u_out):  # pragma: no cover
    n_bits = chan.shape[0]
    n = 0
    while (1 << n) < n_bits:
        n += 1
    sym = np.empty((n + 1, n_bits), dtype=np.int8)
    csum = np.empty((n + 1, n_bits), dtype=np.int8)
    scratch = np.empty(n_bits, dtype=np.int8)
    sym[0, :] = chan
    for i in range(n_bits):
        d0 = 1 if i == 0 else n - _ctz(i)
        for d in range(d0, n + 1):
            half = 1 << (n - d)
            right = (i >> (n - d)) & 1
            if right:
                for j in range(half):
                    a = sym[d - 1, j]
                    if csum[d, j] == 1:
                        a = -a
                    sym[d, j] = _ec_var(a, sym[d - 1, j + half])
            else:
                for j in range(half):
                    sym[d, j] = sym[d - 1, j] * sym[d - 1, j + half]
        lam = sym[n, 0]
        if frozen[i]:
            u = np.uint8(0)
        elif lam == 0:
            return i  # first information decision still erased
        else:
            u = np.uint8(1) if lam < 0 else np.uint8(0)
        u_out[i] = u
        # merge completed subtrees upward
        scratch[0] = u
        clen = 1
        d = n
        while d > 0 and (i >> (n - d)) & 1:
            for j in range(clen):
                scratch[clen + j] = scratch[j]
                scratch[j] ^= csum[d, j]
            d -= 1
            clen <<= 1
        if d > 0:
            for j in range(clen):
                csum[d, j] = scratch[j]
    return -1


@njit(cache=True)
def _sc_llr_kernel(chan, frozen, u_out):  # pragma: no cover
    n_bits = chan.shape[0]
    n = 0
    while (1 << n) < n_bits:
        n += 1
    sym = np.empty((n + 1, n_bits), dtype=np.float64)
    csum = np.empty((n + 1, n_bits), dtype=np.int8)
    scratch = np.empty(n_bits, dtype=np.int8)
    sym[0, :] = chan
    for i in range(n_bits):
        d0 = 1 if i == 0 else n - _ctz(i)
        for d in range(d0, n + 1):
            half = 1 << (n - d)
            right = (i >> (n - d)) & 1
            if right:
                for j in range(half):
                    a = sym[d - 1, j]
                    if csum[d, j] == 1:
                        a = -a
                    sym[d, j] = a + sym[d - 1, j + half]
            else:
                for j in range(half):
                    sym[d, j] = _boxplus(sym[d - 1, j], sym[d - 1, j + half])
        if frozen[i]:
            u = np.uint8(0)
        else:
            u = np.uint8(1) if sym[n, 0] < 0.0 else np.uint8(0)
        u_out[i] = u
        scratch[0] = u
        clen = 1
        d = n
        while d > 0 and (i >> (n - d)) & 1:
            for j in range(clen):
                scratch[clen + j] = scratch[j]
                scratch[j] ^= csum[d, j]
            d -= 1
            clen <<= 1
        if d > 0:
            for j in range(clen):
                csum[d, j] = scratch[j]
    return 0


# --- list decoding -----------------------------------------------------------
#
# Per-path message and partial-sum buffers live in per-depth pools with
# reference counts. Every write fully overwrites the live region of a buffer,
# so copy-on-write degenerates to remapping: forks only adjust counts.


@njit(cache=True, inline="always")
def _pool_cow(pmap, pref, pfree, pnfree, d, slot):
    b = pmap[d, slot]
    if pref[d, b] > 1:
        pref[d, b] -= 1
        nb = pfree[d, pnfree[d] - 1]
        pnfree[d] -= 1
        pref[d, nb] = 1
        pmap[d, slot] = nb
        b = nb
    return b


@njit(cache=True)
def _pool_share(pmap, pref, nd, src, dst):  # pragma: no cover
    for d in range(1, nd):
        b = pmap[d, src]
        pmap[d, dst] = b
        pref[d, b] += 1


@njit(cache=True)
def _pool_release(pmap, pref, pfree, pnfree, nd, slot):  # pragma: no cover
    for d in range(1, nd):
        b = pmap[d, slot]
        pref[d, b] -= 1
        if pref[d, b] == 0:
            pfree[d, pnfree[d]] = b
            pnfree[d] += 1


@njit(cache=True)
def _scl_bec_kernel(chan, frozen, list_size, u_out):  # pragma: no cover
    """Path-forking erasure SC. Forks at erased information decisions, kills
    paths contradicting a known value, keeps the lexicographically first
    ``list_size`` paths. Returns (status, survivors): 0 decoded, 1 ambiguous,
    2 failed."""
    n_bits = chan.shape[0]
    n = 0
    while (1 << n) < n_bits:
        n += 1
    big_l = list_size
    sym = np.empty((n + 1, big_l, n_bits), dtype=np.int8)
    csum = np.empty((n + 1, big_l, n_bits), dtype=np.int8)
    sym_map = np.zeros((n + 1, big_l), dtype=np.int32)
    sym_ref = np.zeros((n + 1, big_l), dtype=np.int32)
    sym_free = np.zeros((n + 1, big_l), dtype=np.int32)
    sym_nfree = np.zeros(n + 1, dtype=np.int32)
    cs_map = np.zeros((n + 1, big_l), dtype=np.int32)
    cs_ref = np.zeros((n + 1, big_l), dtype=np.int32)
    cs_free = np.zeros((n + 1, big_l), dtype=np.int32)
    cs_nfree = np.zeros(n + 1, dtype=np.int32)
    for d in range(1, n + 1):
        sym_ref[d, 0] = 1
        cs_ref[d, 0] = 1
        for b in range(big_l - 1, 0, -1):
            sym_free[d, sym_nfree[d]] = b
            sym_nfree[d] += 1
            cs_free[d, cs_nfree[d]] = b
            cs_nfree[d] += 1
    order = np.zeros(big_l, dtype=np.int32)
    new_order = np.zeros(big_l, dtype=np.int32)
    slot_used = np.zeros(big_l, dtype=np.uint8)
    slot_used[0] = 1
    dead = np.zeros(big_l, dtype=np.uint8)
    bits_now = np.zeros(big_l, dtype=np.uint8)
    scratch = np.empty((big_l, n_bits), dtype=np.int8)
    # decision-history tree: one node per information decision per path
    cap = 2 * big_l * n_bits + 2
    node_parent = np.zeros(cap, dtype=np.int32)
    node_bit = np.zeros(cap, dtype=np.uint8)
    node_count = 1  # node 0 is the root sentinel
    tails = np.zeros(big_l, dtype=np.int32)
    n_paths = 1
    overflow = False
    for i in range(n_bits):
        d0 = 1 if i == 0 else n - _ctz(i)
        for q in range(n_paths):
            slot = order[q]
            for d in range(d0, n + 1):
                half = 1 << (n - d)
                right = (i >> (n - d)) & 1
                b = _pool_cow(sym_map, sym_ref, sym_free, sym_nfree, d, slot)
                ok = True
                if right:
                    cb = cs_map[d, slot]
                    for j in range(half):
                        if d == 1:
                            a = chan[j]
                            c = chan[j + half]
                        else:
                            pb = sym_map[d - 1, slot]
                            a = sym[d - 1, pb, j]
                            c = sym[d - 1, pb, j + half]
                        if csum[d, cb, j] == 1:
                            a = -a
                        if a != 0 and c != 0 and a != c:
                            ok = False  # path prefix contradicts the output
                            break
                        sym[d, b, j] = _ec_var(a, c)
                else:
                    for j in range(half):
                        if d == 1:
                            a = chan[j]
                            c = chan[j + half]
                        else:
                            pb = sym_map[d - 1, slot]
                            a = sym[d - 1, pb, j]
                            c = sym[d - 1, pb, j + half]
                        sym[d, b, j] = a * c
                if not ok:
                    dead[slot] = 1
                    break
        # decisions
        n_new = 0
        if frozen[i]:
            for q in range(n_paths):
                slot = order[q]
                if dead[slot]:
                    continue
                b = sym_map[n, slot]
                if sym[n, b, 0] == -1:
                    dead[slot] = 1
                    continue
                bits_now[slot] = 0
                new_order[n_new] = slot
                n_new += 1
            for q in range(n_paths):
                slot = order[q]
                if dead[slot]:
                    _pool_release(sym_map, sym_ref, sym_free, sym_nfree, n + 1, slot)
                    _pool_release(cs_map, cs_ref, cs_free, cs_nfree, n + 1, slot)
                    slot_used[slot] = 0
                    dead[slot] = 0
        else:
            ncand = 0
            for q in range(n_paths):
                slot = order[q]
                if dead[slot]:
                    continue
                ncand += 2 if sym[n, sym_map[n, slot], 0] == 0 else 1
            if ncand > big_l:
                overflow = True
            kept = 0
            for q in range(n_paths):
                slot = order[q]
                if dead[slot]:
                    _pool_release(sym_map, sym_ref, sym_free, sym_nfree, n + 1, slot)
                    _pool_release(cs_map, cs_ref, cs_free, cs_nfree, n + 1, slot)
                    slot_used[slot] = 0
                    dead[slot] = 0
                    continue
                lam = sym[n, sym_map[n, slot], 0]
                if kept == big_l:
                    _pool_release(sym_map, sym_ref, sym_free, sym_nfree, n + 1, slot)
                    _pool_release(cs_map, cs_ref, cs_free, cs_nfree, n + 1, slot)
                    slot_used[slot] = 0
                    continue
                if lam != 0:
                    u = np.uint8(1) if lam < 0 else np.uint8(0)
                    bits_now[slot] = u
                    node_parent[node_count] = tails[slot]
                    node_bit[node_count] = u
                    tails[slot] = node_count
                    node_count += 1
                    new_order[n_new] = slot
                    n_new += 1
                    kept += 1
                    continue
                # erased decision: zero branch keeps the slot, one branch
                # clones it (lexicographic order is generation order)
                bits_now[slot] = 0
                node_parent[node_count] = tails[slot]
                node_bit[node_count] = 0
                old_tail = tails[slot]
                tails[slot] = node_count
                node_count += 1
                new_order[n_new] = slot
                n_new += 1
                kept += 1
                if kept < big_l:
                    ns = -1
                    for s in range(big_l):
                        if not slot_used[s]:
                            ns = s
                            break
                    slot_used[ns] = 1
                    _pool_share(sym_map, sym_ref, n + 1, slot, ns)
                    _pool_share(cs_map, cs_ref, n + 1, slot, ns)
                    bits_now[ns] = 1
                    node_parent[node_count] = old_tail
                    node_bit[node_count] = 1
                    tails[ns] = node_count
                    node_count += 1
                    new_order[n_new] = ns
                    n_new += 1
                    kept += 1
        if n_new == 0:
            return 2, 0
        n_paths = n_new
        for q in range(n_paths):
            order[q] = new_order[q]
        # merge completed subtrees for every surviving path
        for q in range(n_paths):
            slot = order[q]
            scratch[slot, 0] = bits_now[slot]
            clen = 1
            d = n
            while d > 0 and (i >> (n - d)) & 1:
                cb = cs_map[d, slot]
                for j in range(clen):
                    scratch[slot, clen + j] = scratch[slot, j]
                    scratch[slot, j] ^= csum[d, cb, j]
                d -= 1
                clen <<= 1
            if d > 0:
                b = _pool_cow(cs_map, cs_ref, cs_free, cs_nfree, d, slot)
                for j in range(clen):
                    csum[d, b, j] = scratch[slot, j]
    if n_paths == 1 and not overflow:
        node = tails[order[0]]
        pos = n_bits - 1
        while node != 0:
            while frozen[pos]:
                u_out[pos] = 0
                pos -= 1
            u_out[pos] = node_bit[node]
            pos -= 1
            node = node_parent[node]
        while pos >= 0:
            u_out[pos] = 0
            pos -= 1
        return 0, 1
    return 1, n_paths


@njit(cache=True)
def _scl_llr_kernel(chan, frozen, list_size, u_out):  # pragma: no cover
    """Metric-driven list SC: every information bit forks all paths and the
    ``list_size`` smallest path metrics survive (ties resolved in path order,
    zero branch first). Fills u_out from the best final path."""
    n_bits = chan.shape[0]
    n = 0
    while (1 << n) < n_bits:
        n += 1
    big_l = list_size
    sym = np.empty((n + 1, big_l, n_bits), dtype=np.float64)
    csum = np.empty((n + 1, big_l, n_bits), dtype=np.int8)
    sym_map = np.zeros((n + 1, big_l), dtype=np.int32)
    sym_ref = np.zeros((n + 1, big_l), dtype=np.int32)
    sym_free = np.zeros((n + 1, big_l), dtype=np.int32)
    sym_nfree = np.zeros(n + 1, dtype=np.int32)
    cs_map = np.zeros((n + 1, big_l), dtype=np.int32)
    cs_ref = np.zeros((n + 1, big_l), dtype=np.int32)
    cs_free = np.zeros((n + 1, big_l), dtype=np.int32)
    cs_nfree = np.zeros(n + 1, dtype=np.int32)
    for d in range(1, n + 1):
        sym_ref[d, 0] = 1
        cs_ref[d, 0] = 1
        for b in range(big_l - 1, 0, -1):
            sym_free[d, sym_nfree[d]] = b
            sym_nfree[d] += 1
            cs_free[d, cs_nfree[d]] = b
            cs_nfree[d] += 1
    order = np.zeros(big_l, dtype=np.int32)
    new_order = np.zeros(big_l, dtype=np.int32)
    slot_used = np.zeros(big_l, dtype=np.uint8)
    slot_used[0] = 1
    metric = np.zeros(big_l, dtype=np.float64)
    bits_now = np.zeros(big_l, dtype=np.uint8)
    scratch = np.empty((big_l, n_bits), dtype=np.int8)
    cap = 2 * big_l * n_bits + 2
    node_parent = np.zeros(cap, dtype=np.int32)
    node_bit = np.zeros(cap, dtype=np.uint8)
    node_count = 1
    tails = np.zeros(big_l, dtype=np.int32)
    cand_metric = np.zeros(2 * big_l, dtype=np.float64)
    survive = np.zeros(2 * big_l, dtype=np.uint8)
    parent_tail = np.zeros(big_l, dtype=np.int32)
    parent_metric = np.zeros(big_l, dtype=np.float64)
    n_paths = 1
    for i in range(n_bits):
        d0 = 1 if i == 0 else n - _ctz(i)
        for q in range(n_paths):
            slot = order[q]
            for d in range(d0, n + 1):
                half = 1 << (n - d)
                right = (i >> (n - d)) & 1
                b = _pool_cow(sym_map, sym_ref, sym_free, sym_nfree, d, slot)
                if right:
                    cb = cs_map[d, slot]
                    for j in range(half):
                        if d == 1:
                            a = chan[j]
                            c = chan[j + half]
                        else:
                            pb = sym_map[d - 1, slot]
                            a = sym[d - 1, pb, j]
                            c = sym[d - 1, pb, j + half]
                        if csum[d, cb, j] == 1:
                            a = -a
                        sym[d, b, j] = a + c
                else:
                    for j in range(half):
                        if d == 1:
                            a = chan[j]
                            c = chan[j + half]
                        else:
                            pb = sym_map[d - 1, slot]
                            a = sym[d - 1, pb, j]
                            c = sym[d - 1, pb, j + half]
                        sym[d, b, j] = _boxplus(a, c)
        if frozen[i]:
            for q in range(n_paths):
                slot = order[q]
                lam = sym[n, sym_map[n, slot], 0]
                metric[slot] += _metric_pen(lam, 0)
                bits_now[slot] = 0
        else:
            nc = 2 * n_paths
            for q in range(n_paths):
                slot = order[q]
                lam = sym[n, sym_map[n, slot], 0]
                cand_metric[2 * q] = metric[slot] + _metric_pen(lam, 0)
                cand_metric[2 * q + 1] = metric[slot] + _metric_pen(lam, 1)
                parent_tail[q] = tails[slot]
                parent_metric[q] = metric[slot]
            if nc <= big_l:
                for c in range(nc):
                    survive[c] = 1
            else:
                tmp = cand_metric[:nc].copy()
                tmp = np.partition(tmp, big_l - 1)
                tau = tmp[big_l - 1]
                quota = big_l
                for c in range(nc):
                    if cand_metric[c] < tau:
                        quota -= 1
                for c in range(nc):
                    if cand_metric[c] < tau:
                        survive[c] = 1
                    elif cand_metric[c] == tau and quota > 0:
                        survive[c] = 1
                        quota -= 1
                    else:
                        survive[c] = 0
            # release parents with no surviving child, then rebuild the list
            for q in range(n_paths):
                if not survive[2 * q] and not survive[2 * q + 1]:
                    slot = order[q]
                    _pool_release(sym_map, sym_ref, sym_free, sym_nfree, n + 1, slot)
                    _pool_release(cs_map, cs_ref, cs_free, cs_nfree, n + 1, slot)
                    slot_used[slot] = 0
            n_new = 0
            for q in range(n_paths):
                slot = order[q]
                for bit in range(2):
                    if not survive[2 * q + bit]:
                        continue
                    if bit == 0 or not survive[2 * q]:
                        dst = slot  # first surviving child reuses the slot
                    else:
                        dst = -1
                        for s in range(big_l):
                            if not slot_used[s]:
                                dst = s
                                break
                        slot_used[dst] = 1
                        _pool_share(sym_map, sym_ref, n + 1, slot, dst)
                        _pool_share(cs_map, cs_ref, n + 1, slot, dst)
                    metric[dst] = cand_metric[2 * q + bit]
                    bits_now[dst] = bit
                    node_parent[node_count] = parent_tail[q]
                    node_bit[node_count] = bit
                    tails[dst] = node_count
                    node_count += 1
                    new_order[n_new] = dst
                    n_new += 1
            n_paths = n_new
            for q in range(n_paths):
                order[q] = new_order[q]
        for q in range(n_paths):
            slot = order[q]
            scratch[slot, 0] = bits_now[slot]
            clen = 1
            d = n
            while d > 0 and (i >> (n - d)) & 1:
                cb = cs_map[d, slot]
                for j in range(clen):
                    scratch[slot, clen + j] = scratch[slot, j]
                    scratch[slot, j] ^= csum[d, cb, j]
                d -= 1
                clen <<= 1
            if d > 0:
                b = _pool_cow(cs_map, cs_ref, cs_free, cs_nfree, d, slot)
                for j in range(clen):
                    csum[d, b, j] = scratch[slot, j]
    best = order[0]
    for q in range(1, n_paths):
        if metric[order[q]] < metric[best]:
            best = order[q]
    node = tails[best]
    pos = n_bits - 1
    while node != 0:
        while frozen[pos]:
            u_out[pos] = 0
            pos -= 1
        u_out[pos] = node_bit[node]
        pos -= 1
        node = node_parent[node]
    while pos >= 0:
        u_out[pos] = 0
        pos -= 1
    return metric[best]


# --- belief propagation -------------------------------------------------------
#
# The factor graph is the encoding butterfly itself: n+1 levels of N variable
# nodes, level 0 holding the input word (leaf priors) and level n the codeword
# (channel priors). Stage s couples levels s-1 and s through 2x2 kernels with
# step 2^(s-1). One iteration is a full leftward sweep followed by a full
# rightward sweep.


@njit(cache=True)
def _bp_bec_kernel(chan, leaf_prior, max_iter, belief_out):  # pragma: no cover
    n_bits = chan.shape[0]
    n = 0
    while (1 << n) < n_bits:
        n += 1
    left = np.zeros((n + 1, n_bits), dtype=np.int8)  # left[s] arrives at level s from the right
    right = np.zeros((n + 1, n_bits), dtype=np.int8)  # right[s] arrives at level s from the left
    iters = 0
    for _ in range(max_iter):
        iters += 1
        changed = False
        for s in range(n, 0, -1):
            step = 1 << (s - 1)
            for j in range(n_bits):
                if j & step:
                    continue
                ul = right[s - 1, j] if s > 1 else leaf_prior[j]
                ll = right[s - 1, j + step] if s > 1 else leaf_prior[j + step]
                ur = left[s, j] if s < n else chan[j]
                lr = left[s, j + step] if s < n else chan[j + step]
                new_u = ur * _ec_var(ll, lr)
                new_l = _ec_var(ul * ur, lr)
                if new_u != left[s - 1, j]:
                    left[s - 1, j] = new_u
                    changed = True
                if new_l != left[s - 1, j + step]:
                    left[s - 1, j + step] = new_l
                    changed = True
        for s in range(1, n + 1):
            step = 1 << (s - 1)
            for j in range(n_bits):
                if j & step:
                    continue
                ul = right[s - 1, j] if s > 1 else leaf_prior[j]
                ll = right[s - 1, j + step] if s > 1 else leaf_prior[j + step]
                ur = left[s, j] if s < n else chan[j]
                lr = left[s, j + step] if s < n else chan[j + step]
                new_u = ul * _ec_var(ll, lr)
                new_l = _ec_var(ul * ur, ll)
                if new_u != right[s, j]:
                    right[s, j] = new_u
                    changed = True
                if new_l != right[s, j + step]:
                    right[s, j + step] = new_l
                    changed = True
        if not changed:
            break
    for j in range(n_bits):
        belief_out[j] = _ec_var(leaf_prior[j], left[0, j])
    return iters


@njit(cache=True)
def _bp_llr_kernel(chan, leaf_prior, max_iter, belief_out):  # pragma: no cover
    n_bits = chan.shape[0]
    n = 0
    while (1 << n) < n_bits:
        n += 1
    left = np.zeros((n + 1, n_bits), dtype=np.float64)
    right = np.zeros((n + 1, n_bits), dtype=np.float64)
    for _ in range(max_iter):
        for s in range(n, 0, -1):
            step = 1 << (s - 1)
            for j in range(n_bits):
                if j & step:
                    continue
                ul = right[s - 1, j] if s > 1 else leaf_prior[j]
                ll = right[s - 1, j + step] if s > 1 else leaf_prior[j + step]
                ur = left[s, j] if s < n else chan[j]
                lr = left[s, j + step] if s < n else chan[j + step]
                left[s - 1, j] = _boxplus(ur, ll + lr)
                left[s - 1, j + step] = _boxplus(ul, ur) + lr
        for s in range(1, n + 1):
            step = 1 << (s - 1)
            for j in range(n_bits):
                if j & step:
                    continue
                ul = right[s - 1, j] if s > 1 else leaf_prior[j]
                ll = right[s - 1, j + step] if s > 1 else leaf_prior[j + step]
                ur = left[s, j] if s < n else chan[j]
                lr = left[s, j + step] if s < n else chan[j + step]
                right[s, j] = _boxplus(ul, ll + lr)
                right[s, j + step] = _boxplus(ul, ur) + ll
    for j in range(n_bits):
        belief_out[j] = leaf_prior[j] + left[0, j]
    return max_iter


# --- python wrappers -----------------------------------------------------------


@lru_cache(maxsize=64)
def _info_row_bits(n: int, info_set: tuple[int, ...]) -> np.ndarray:
    """Unpacked generator rows for the information set: row i has ones exactly
    at the column indices whose bit pattern is covered by i."""
    size = 1 << n
    cols = np.arange(size, dtype=np.int64)
    rows = np.array(info_set, dtype=np.int64)
    return ((cols[None, :] & ~rows[:, None] & (size - 1)) == 0).astype(np.uint8)


def _frozen_mask(spec: CodeSpec) -> np.ndarray:
    mask = np.ones(spec.block_length, dtype=np.uint8)
    mask[list(spec.info_set)] = 0
    return mask


def _bec_channel_symbols(obs: ObservationBlock) -> np.ndarray:
    sym = np.zeros(obs.length, dtype=np.int8)
    sym[obs.symbols == 0] = 1
    sym[obs.symbols == 1] = -1
    return sym


def _check_obs(spec: CodeSpec, obs: ObservationBlock, kind: str) -> None:
    if obs.kind != kind:
        raise ValueError(f"decoder needs {kind!r} observations, got {obs.kind!r}")
    if obs.length != spec.block_length:
        raise ValueError("observation length does not match the block length")


def _extract_info(spec: CodeSpec, u_full: np.ndarray) -> BitBlock:
    return BitBlock.from_bits(u_full[np.fromiter(spec.info_set, dtype=np.int64)])


def map_decode_bec(spec: CodeSpec, obs: ObservationBlock) -> DecodeResult:
    """Exact erasure MAP: solve for the information word from the generator
    rows restricted to the unerased positions (frozen rows are zero under the
    all-zero frozen convention)."""
    _check_obs(spec, obs, "bec")
    unerased = np.flatnonzero(obs.symbols >= 0)
    if unerased.size == 0:
        return DecodeResult(DecodeStatus.AMBIGUOUS)
    bits = _info_row_bits(spec.n, spec.info_set)
    a = GF2Matrix.from_bit_rows(bits[:, unerased])
    b = BitBlock.from_bits(obs.symbols[unerased])
    status, x = solve_unique(a, b)
    if status is SolveStatus.UNIQUE:
        return DecodeResult(DecodeStatus.DECODED, info_bits=x)
    if status is SolveStatus.NON_UNIQUE:
        return DecodeResult(DecodeStatus.AMBIGUOUS)
    raise IntegrityError("observations are inconsistent with every codeword")


def sc_decode_bec(spec: CodeSpec, obs: ObservationBlock) -> DecodeResult:
    """Erasure successive cancellation; fails at the first information
    decision that is still erased. Decisions that are made are always correct
    on genuine channel output."""
    _check_obs(spec, obs, "bec")
    u_full = np.zeros(spec.block_length, dtype=np.uint8)
    first_err = int(_sc_bec_kernel(_bec_channel_symbols(obs), _frozen_mask(spec), u_full))
    if first_err >= 0:
        return DecodeResult(DecodeStatus.FAILED, first_error=first_err)
    return DecodeResult(DecodeStatus.DECODED, info_bits=_extract_info(spec, u_full))


def sc_decode_llr(spec: CodeSpec, obs: ObservationBlock) -> DecodeResult:
    """LLR successive cancellation; always produces a word (hard decisions,
    ties to zero), errors surface only by comparison in the harness."""
    _check_obs(spec, obs, "llr")
    if not np.all(np.isfinite(obs.llr)):
        raise ValueError("LLR observations must be finite")
    u_full = np.zeros(spec.block_length, dtype=np.uint8)
    _sc_llr_kernel(obs.llr, _frozen_mask(spec), u_full)
    return DecodeResult(DecodeStatus.DECODED, info_bits=_extract_info(spec, u_full))


def scl_decode(spec: CodeSpec, obs: ObservationBlock, list_size: int) -> DecodeResult:
    """Successive-cancellation list decoding over erasure or LLR observations.

    The erasure form mirrors the MAP convention: the result is DECODED only
    when exactly one consistent path survives and no path was ever dropped
    for list capacity, AMBIGUOUS otherwise, FAILED when all paths die.
    """
    if list_size < 1:
        raise ValueError("list size must be at least 1")
    if obs.kind == "bec":
        _check_obs(spec, obs, "bec")
        u_full = np.zeros(spec.block_length, dtype=np.uint8)
        code, survivors = _scl_bec_kernel(
            _bec_channel_symbols(obs), _frozen_mask(spec), list_size, u_full
        )
        code = int(code)
        if code == 0:
            return DecodeResult(
                DecodeStatus.DECODED, info_bits=_extract_info(spec, u_full), survivors=1
            )
        if code == 1:
            return DecodeResult(DecodeStatus.AMBIGUOUS, survivors=int(survivors))
        return DecodeResult(DecodeStatus.FAILED, survivors=0)
    if obs.kind == "llr":
        _check_obs(spec, obs, "llr")
        if not np.all(np.isfinite(obs.llr)):
            raise ValueError("LLR observations must be finite")
        u_full = np.zeros(spec.block_length, dtype=np.uint8)
        _scl_llr_kernel(obs.llr, _frozen_mask(spec), list_size, u_full)
        return DecodeResult(
            DecodeStatus.DECODED, info_bits=_extract_info(spec, u_full), survivors=list_size
        )
    raise ValueError("list decoding needs erasure or LLR observations")


def bp_decode(spec: CodeSpec, obs: ObservationBlock, max_iter: int | None = None) -> DecodeResult:
    """Sum-product decoding on the encoding butterfly.

    Erasure form runs to its fixed point (capped at N*n sweeps); the LLR form
    runs exactly ``max_iter`` sweeps (default 100). Fails when an information
    decision is still erased at the fixed point.
    """
    if max_iter is not None and max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    frozen = _frozen_mask(spec)
    if obs.kind == "bec":
        _check_obs(spec, obs, "bec")
        cap = max_iter if max_iter is not None else spec.block_length * spec.n
        leaf = frozen.astype(np.int8)  # frozen leaves known zero, info leaves erased
        belief = np.zeros(spec.block_length, dtype=np.int8)
        iters = int(_bp_bec_kernel(_bec_channel_symbols(obs), leaf, cap, belief))
        info_idx = np.fromiter(spec.info_set, dtype=np.int64)
        decisions = belief[info_idx]
        if np.any(decisions == 0):
            return DecodeResult(DecodeStatus.FAILED, iterations=iters)
        info = (decisions < 0).astype(np.uint8)
        return DecodeResult(
            DecodeStatus.DECODED, info_bits=BitBlock.from_bits(info), iterations=iters
        )
    if obs.kind == "llr":
        _check_obs(spec, obs, "llr")
        if not np.all(np.isfinite(obs.llr)):
            raise ValueError("LLR observations must be finite")
        iters = max_iter if max_iter is not None else 100
        leaf = frozen.astype(np.float64) * LLR_CLAMP
        belief = np.zeros(spec.block_length, dtype=np.float64)
        _bp_llr_kernel(obs.llr, leaf, iters, belief)
        info_idx = np.fromiter(spec.info_set, dtype=np.int64)
        info = (belief[info_idx] < 0).astype(np.uint8)
        return DecodeResult(
            DecodeStatus.DECODED, info_bits=BitBlock.from_bits(info), iterations=iters
        )
    raise ValueError("belief propagation needs erasure or LLR observations")
