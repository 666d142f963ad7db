"""Auxiliary processes driven by the same uniforms as the simulation.

The spontaneous trace keeps only the symbols forced by uniforms landing in
the spontaneous region; the distance to the last spontaneous reference
occurrence bounds how much past the construction can need, which is what
makes the backward search analyzable.  Rescaling time by len(ref) turns
the spontaneous reference occurrences into an i.i.d. block indicator, and
the dominating process over blocks bounds where construction can fail.
The monotone envelope of the reach function is used throughout this
module, so the bounds stay valid for non-monotone reach tables.

Windowed computation: distances to the last reference occurrence are
reported as inf until the first in-window occurrence.  For every consumer
here (regeneration-time scans, the dominating process) that convention is
not just conservative but exact, because an out-of-window occurrence is
far enough away that the corresponding bound fails or clamps to zero
regardless of where the occurrence actually is.

Regeneration times come in three flavors: hidden ones read off the
uniforms (window-limited over-approximations of the infinite-horizon
notion), the spontaneous-trace anchor time, and visible anchors defined on
the symbol sequence alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import randsrc
from .cftp import DEFAULT_MAX_BACK, construct_window, simulate
from .errors import AbortedError
from .model import INF, ContextTreeModel, context_of
from .partition import updater


# ---------------------------------------------------------------------------
# site-level spontaneous trace


@dataclass(frozen=True)
class SpontaneousTrace:
    """Per-site spontaneous symbols, reference distances and needed lengths.

    z[i] is the spontaneous symbol at i (None when the uniform is above the
    spontaneous mass); ref_dist[i] is the distance from i to the end of the
    last spontaneous reference occurrence strictly before i (inf until one
    is visible in the window); need[i] is 0 at spontaneous sites and
    ref_dist[i] + len(ref) + reach(ref_dist[i]) otherwise.
    """

    lo: int
    hi: int
    z: dict[int, int | None]
    ref_dist: dict[int, float]
    need: dict[int, float]


def spontaneous_trace(source, lo: int, hi: int, model: ContextTreeModel) -> SpontaneousTrace:
    up = updater(model)
    ref = tuple(model.ref)
    lw = len(ref)
    env = model.reach.envelope
    z: dict[int, int | None] = {}
    ref_dist: dict[int, float] = {}
    need: dict[int, float] = {}
    ref_end: int | None = None
    for i in range(lo, hi + 1):
        m = INF if ref_end is None else i - 1 - ref_end
        ref_dist[i] = m
        zi = up.spontaneous(source.u_at(i))
        z[i] = zi
        if zi is None:
            need[i] = INF if m is INF else m + lw + env(int(m))
        else:
            need[i] = 0
        if i - lw + 1 >= lo and all(z.get(i - lw + 1 + t) == ref[t] for t in range(lw)):
            ref_end = i
    return SpontaneousTrace(lo, hi, z, ref_dist, need)


# ---------------------------------------------------------------------------
# block rescaling


def coarse_length(model: ContextTreeModel, i: int) -> int:
    """Reach function rescaled to blocks of len(ref) sites (ceiling)."""
    lw = len(model.ref)
    return -(-model.reach.envelope((i + 1) * lw - 1) // lw)


def coarse_length_sup(model: ContextTreeModel) -> float:
    """Supremum of the block reach; inf when unbounded."""
    sup = model.reach.bounded_sup()
    if sup is None:
        return INF
    lw = len(model.ref)
    return -(-sup // lw)


def coarse_length_inverse(model: ContextTreeModel, i: int) -> float:
    """Least k >= 1 with block reach(k) > i; inf if the block reach never
    exceeds i."""
    if coarse_length_sup(model) <= i:
        return INF
    k = 1
    while coarse_length(model, k) <= i:
        k += 1
    return k


def block_index(site: int, lw: int) -> int:
    """Block b covers sites (b-1)*lw + 1 .. b*lw."""
    return -((-site) // lw)


@dataclass(frozen=True)
class RescaledTrace:
    """Block-level indicator of spontaneous reference blocks and its bounds."""

    lo: int  # first block
    hi: int  # last block
    one: dict[int, bool]  # block spells the reference string spontaneously
    ref_dist: dict[int, float]
    need: dict[int, float]


def _block_is_ref(source, b: int, model: ContextTreeModel, up) -> bool:
    lw = len(model.ref)
    start = (b - 1) * lw + 1
    for t in range(lw):
        if up.spontaneous(source.u_at(start + t)) != model.ref[t]:
            return False
    return True


def rescaled_trace(source, lo: int, hi: int, model: ContextTreeModel) -> RescaledTrace:
    up = updater(model)
    one: dict[int, bool] = {}
    ref_dist: dict[int, float] = {}
    need: dict[int, float] = {}
    last_one: int | None = None
    for b in range(lo, hi + 1):
        m = INF if last_one is None else b - 1 - last_one
        ref_dist[b] = m
        zb = _block_is_ref(source, b, model, up)
        one[b] = zb
        if zb:
            need[b] = 0
            last_one = b
        else:
            need[b] = INF if m is INF else m + 1 + coarse_length(model, int(m))
    return RescaledTrace(lo, hi, one, ref_dist, need)


def block_regen_time(source, n: int, model: ContextTreeModel,
                     max_back: int = DEFAULT_MAX_BACK) -> int:
    """Largest block j <= 0 such that no block in [j, n] needs to look back
    past j.  A lower-bound companion to the site-level regeneration time."""
    up = updater(model)
    zcache: dict[int, bool] = {}

    def zbar(b: int) -> bool:
        v = zcache.get(b)
        if v is None:
            v = _block_is_ref(source, b, model, up)
            zcache[b] = v
        return v

    j = 0
    while True:
        ok = True
        last_one: int | None = None
        for i in range(j, n + 1):
            if zbar(i):
                last_one = i
                continue
            if last_one is None:
                ok = False
                break
            m = i - 1 - last_one
            if m + 1 + coarse_length(model, m) > i - j:
                ok = False
                break
        if ok:
            return j
        j -= 1
        if -j > max_back:
            raise AbortedError(0, j, max_back)


@dataclass(frozen=True)
class CoarseBoundReport:
    holds: bool
    theta: int
    block_theta: int
    bound: int


def check_coarse_bound(source, n: int, model: ContextTreeModel,
                       max_back: int = DEFAULT_MAX_BACK) -> CoarseBoundReport:
    """Verify theta[0, n*lw] >= lw*(block_theta[0,n] - 1) + 1 on one
    realization; both sides are computed from the same source."""
    lw = len(model.ref)
    bt = block_regen_time(source, n, model, max_back)
    bound = lw * (bt - 1) + 1
    th = simulate(source, 0, n * lw, model, max_back).theta
    return CoarseBoundReport(th >= bound, th, bt, bound)


# ---------------------------------------------------------------------------
# dominating process


@dataclass(frozen=True)
class DominatingProcess:
    """Block-level process that is zero wherever construction could still
    need unseen past; zero for all blocks at or before the origin."""

    origin: int
    horizon: int
    values: tuple[int, ...]  # blocks origin .. horizon

    def value(self, i: int) -> int:
        if i <= self.origin:
            return 0
        return self.values[i - self.origin]


def dominating_process(source, origin: int, horizon: int,
                       model: ContextTreeModel) -> DominatingProcess:
    if horizon < origin:
        raise ValueError("horizon must be >= origin")
    up = updater(model)
    vals = [0]
    last_one: int | None = None
    prev_zero = origin
    for i in range(origin + 1, horizon + 1):
        zb = _block_is_ref(source, i, model, up)
        if zb:
            need = 0
        elif last_one is None:
            need = INF
        else:
            m = i - 1 - last_one
            need = m + 1 + coarse_length(model, m)
        d = max(i - prev_zero - need, 0)
        d = int(d)
        vals.append(d)
        if d == 0:
            prev_zero = i
        if zb:
            last_one = i
    return DominatingProcess(origin, horizon, tuple(vals))


# ---------------------------------------------------------------------------
# occupation / first-return statistics of the dominating process


@dataclass
class ReturnTimeStats:
    """Monte Carlo estimates of zero-occupation (u) and first-return (f)
    probabilities of the dominating process started at origin 0, plus the
    residuals of the renewal identity u_k = sum_i f_i u_{k-i}."""

    n_seeds: int
    k_max: int
    u_hat: np.ndarray
    u_se: np.ndarray
    f_hat: np.ndarray
    f_se: np.ndarray
    residual: np.ndarray
    residual_se: np.ndarray

    def max_residual_ratio(self) -> float:
        se = np.maximum(self.residual_se, 1e-300)
        return float(np.max(np.abs(self.residual) / se))


def return_time_statistics(model: ContextTreeModel, seeds: int, horizon: int,
                           seed_base: int = 0, chunk: int = 50_000) -> ReturnTimeStats:
    """Estimate u_k and f_k over independent seeds, k = 1..horizon.

    Vectorized across seeds; the per-seed dynamics match
    dominating_process(origin=0) exactly (cross-checked in tests).
    Standard errors of the residuals come from the delta method with the
    empirical covariance of the per-seed indicator vector.
    """
    lw = len(model.ref)
    eps = float(model.rules.epsilon)
    k_max = horizon
    tab = np.array([coarse_length(model, i) for i in range(horizon + 2)], dtype=np.int64)
    big = np.int64(1) << 40

    dim = 2 * k_max
    s1 = np.zeros(dim)
    s2 = np.zeros((dim, dim))
    done = 0
    while done < seeds:
        nc = min(chunk, seeds - done)
        sd = np.arange(seed_base + done, seed_base + done + nc, dtype=np.int64)
        bases = randsrc.seed_bases(sd)
        zbar = np.ones((nc, k_max), dtype=bool)
        for b in range(1, k_max + 1):
            start = (b - 1) * lw + 1
            for t in range(lw):
                u = randsrc.u_for_bases(bases, start + t)
                s = model.ref[t]
                zbar[:, b - 1] &= (u >= s * eps) & (u < (s + 1) * eps)
        last_one = np.full(nc, -big, dtype=np.int64)
        prev_zero = np.zeros(nc, dtype=np.int64)
        ret = np.zeros(nc, dtype=np.int64)
        u_ind = np.zeros((nc, k_max))
        f_ind = np.zeros((nc, k_max))
        for i in range(1, k_max + 1):
            zb = zbar[:, i - 1]
            m = np.minimum(i - 1 - last_one, horizon + 1)
            need = np.where(zb, 0, m + 1 + tab[m])
            d = np.maximum(i - prev_zero - need, 0)
            zero = d == 0
            u_ind[:, i - 1] = zero
            first = zero & (ret == 0)
            f_ind[first, i - 1] = 1.0
            ret[first] = i
            prev_zero = np.where(zero, i, prev_zero)
            last_one = np.where(zb, i, last_one)
        v = np.concatenate([u_ind, f_ind], axis=1)
        s1 += v.sum(axis=0)
        s2 += v.T @ v
        done += nc

    n = seeds
    mean = s1 / n
    cov = (s2 / n - np.outer(mean, mean)) * (n / max(n - 1, 1))
    u_hat = mean[:k_max]
    f_hat = mean[k_max:]
    u_se = np.sqrt(np.maximum(np.diag(cov)[:k_max], 0) / n)
    f_se = np.sqrt(np.maximum(np.diag(cov)[k_max:], 0) / n)

    u0 = np.concatenate([[1.0], u_hat])  # u0[j] = u_hat at lag j, u0[0] = 1
    residual = np.zeros(k_max)
    residual_se = np.zeros(k_max)
    for k in range(1, k_max + 1):
        conv = sum(f_hat[i - 1] * u0[k - i] for i in range(1, k + 1))
        residual[k - 1] = u_hat[k - 1] - conv
        g = np.zeros(dim)
        g[k - 1] += 1.0
        for j in range(1, k):  # d/du_j of f_{k-j} * u_j terms
            g[j - 1] -= f_hat[k - j - 1]
        for i in range(1, k + 1):
            g[k_max + i - 1] -= u0[k - i]
        var = float(g @ cov @ g) / n
        residual_se[k - 1] = math.sqrt(max(var, 0.0))
    return ReturnTimeStats(n, k_max, u_hat, u_se, f_hat, f_se, residual, residual_se)


def summability_terms(model: ContextTreeModel, count: int) -> list[float]:
    """Terms (1 - eps^lw)^{block_reach_inverse(i)} whose summability is the
    practical diagnostic for geometric decay of the return probabilities."""
    q = 1.0 - float(model.rules.epsilon) ** len(model.ref)
    out = []
    for i in range(count):
        inv = coarse_length_inverse(model, i)
        out.append(0.0 if inv is INF else q ** int(inv))
    return out


# ---------------------------------------------------------------------------
# regeneration reports


@dataclass(frozen=True)
class RegenerationReport:
    """Hidden and/or visible regeneration findings on one realization."""

    horizon: int | None = None
    hidden_times: tuple[int, ...] = ()
    visible_times: tuple[int, ...] = ()
    theta_x: int | None = None
    gaps: tuple[int, ...] = ()
    blocks: tuple[tuple[int, ...], ...] = field(default=())


def hidden_regeneration(source, lo: int, hi: int, horizon: int,
                        model: ContextTreeModel) -> RegenerationReport:
    """Flag each j in [lo, hi] whose window [j, j+horizon] regenerates at j.

    These are horizon-limited over-approximations: the flagged set can only
    shrink as the horizon grows, and its infinite-horizon limit is the set
    of true hidden regeneration times.
    """
    flagged = tuple(
        j for j in range(lo, hi + 1)
        if construct_window(source, j, j + horizon, model).ok
    )
    gaps = tuple(b - a for a, b in zip(flagged, flagged[1:]))
    return RegenerationReport(horizon=horizon, hidden_times=flagged, gaps=gaps)


def anchor_repeats(model: ContextTreeModel) -> int:
    """How many consecutive copies of the reference string a visible anchor
    needs so that the construction can always extend past them."""
    lw = len(model.ref)
    return -(-model.reach.envelope(lw - 1) // lw) + 1


def visible_regeneration(sample: tuple[int, ...], start: int,
                         model: ContextTreeModel) -> RegenerationReport:
    """Regeneration anchors detectable on the symbol sequence alone.

    An anchor is a position where anchor_repeats copies of the reference
    string begin and after which every context fits inside the sample seen
    since the anchor.  Context lengths are computed from the sample itself;
    no uniforms are consulted, so reports are reproducible from saved
    samples.
    """
    lw = len(model.ref)
    sigma = anchor_repeats(model)
    span = sigma * lw
    end = start + len(sample) - 1
    if len(sample) - 1 < span:
        raise ValueError(f"sample must cover at least {span} + 1 sites")

    raw = model.reach.raw
    ref = tuple(model.ref)
    # needed context length before each position, from the sample alone
    need: dict[int, float] = {}
    ref_end: int | None = None
    for i in range(start + 1, end + 1):
        p = i - 1 - start  # offset of symbol i-1
        if p + 1 >= lw and sample[p + 1 - lw : p + 1] == ref:
            ref_end = i - 1
        if ref_end is None:
            need[i] = INF
        else:
            m = i - 1 - ref_end
            ln = m + lw + raw(m)
            need[i] = ln if ln <= i - start else INF
    # suffix minimum of i - need[i]
    slack: dict[int, float] = {end + 1: INF}
    for i in range(end, start, -1):
        slack[i] = min(slack[i + 1], i - need[i])

    target = ref * sigma
    anchors = []
    for k in range(start, end - span + 2):
        off = k - start
        if sample[off : off + span] != target:
            continue
        if k <= slack.get(k + span, INF):
            anchors.append(k)
    anchors = tuple(anchors)
    gaps = tuple(b - a for a, b in zip(anchors, anchors[1:]))
    blocks = tuple(
        sample[a - start : b - start] for a, b in zip(anchors, anchors[1:])
    )
    if anchors:
        blocks += (sample[anchors[-1] - start :],)
    theta_x = start if anchors and anchors[0] == start else None
    return RegenerationReport(
        visible_times=anchors, theta_x=theta_x, gaps=gaps, blocks=blocks
    )


def spontaneous_anchor_time(source, n: int, model: ContextTreeModel,
                            max_back: int = DEFAULT_MAX_BACK) -> int:
    """Largest k <= 0 where the spontaneous trace shows anchor_repeats
    copies of the reference string and no later site needs to look back
    past k.  Always a valid visible anchor on the constructed sample."""
    lw = len(model.ref)
    sigma = anchor_repeats(model)
    span = sigma * lw
    if n < span:
        raise ValueError(f"need n >= {span}")
    up = updater(model)
    env = model.reach.envelope
    ref = tuple(model.ref)
    zcache: dict[int, int | None] = {}

    def z(i: int) -> int | None:
        v = zcache.get(i, -1)
        if v == -1:
            v = up.spontaneous(source.u_at(i))
            zcache[i] = v
        return v

    k = 0
    while True:
        if -k > max_back:
            raise AbortedError(0, k, max_back)
        if all(z(k + t) == ref[t % lw] for t in range(span)):
            ok = True
            ref_end = k + span - 1
            for i in range(k + span, n + 1):
                p = i - 1
                if p - lw + 1 >= k and all(z(p - lw + 1 + t) == ref[t] for t in range(lw)):
                    ref_end = p
                m = i - 1 - ref_end
                if m + lw + env(m) > i - k:
                    ok = False
                    break
            if ok:
                return k
        k -= 1


# ---------------------------------------------------------------------------
# bundle for the trace export command


@dataclass(frozen=True)
class AuxiliaryTrace:
    spont: SpontaneousTrace
    rescaled: RescaledTrace
    dominating: dict[int, DominatingProcess]


def auxiliary_trace(source, lo: int, hi: int, model: ContextTreeModel,
                    origins: tuple[int, ...] = ()) -> AuxiliaryTrace:
    lw = len(model.ref)
    blo = -(-(lo - 1) // lw) + 1
    bhi = hi // lw
    if bhi < blo:
        blo, bhi = 0, 0
    spont = spontaneous_trace(source, lo, hi, model)
    resc = rescaled_trace(source, blo, bhi, model)
    dom = {o: dominating_process(source, o, bhi, model) for o in origins if o <= bhi}
    return AuxiliaryTrace(spont, resc, dom)
