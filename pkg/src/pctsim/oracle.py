"""Independent ground truth for the acceptance tests.

Nothing here reuses the simulation path: the stationary marginal of a
renewal-type model comes from classical renewal theory, goodness of fit is
a chi-square harness, and the window law comes from enumerating how the
backward construction can unfold, with exact rational weights.

The enumeration reveals one site at a time, top down: a site is either
spontaneous (one branch per regular symbol, weight epsilon) or not (one
lazy branch of weight 1 - spontaneous mass; which part of the non-regular
region the uniform hit is only branched on at the moment the site gets
constructed, with the exact conditional interval widths).  Branch weights
therefore multiply out to exactly the interval lengths a grid enumeration
would sum, without materializing cells.  Whenever every window site is
resolved the branch stops: symbols already constructed can never change
when more past is revealed, so deeper uniforms cannot matter.  Weight that
is still alive at the depth limit (or pruned by the state cap) is reported
as unresolved mass, never dropped: tallied mass + unresolved mass == 1
exactly.

State is kept small by quotienting islands of constructed symbols down to
what can still matter: their length, the distance to the last reference
occurrence inside them, and the top suffix long enough to evaluate every
explicit rule key.  Models whose distance rules carry free-prefix patterns
would need unbounded suffixes and are rejected.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from scipy.stats import chi2

from .errors import OracleUnsupportedError
from .model import ContextTreeModel, validate


# ---------------------------------------------------------------------------
# renewal-theory stationary marginal


@dataclass(frozen=True)
class RenewalSpec:
    """Return probabilities of the reference symbol at distance i, as a
    finite table plus the constant value used beyond it."""

    probs: tuple[float, ...]
    tail: float

    def __post_init__(self):
        for p in tuple(self.probs) + (self.tail,):
            if not 0 < p <= 1:
                raise ValueError(f"return probability {p} outside (0, 1]")

    def p(self, i: int) -> float:
        return self.probs[i] if i < len(self.probs) else self.tail


@dataclass(frozen=True)
class MarginalReport:
    value: float
    mean_return: float
    remainder_bound: float
    truncation: int


def renewal_stationary_marginal(spec: RenewalSpec, truncation: int = 4000) -> MarginalReport:
    """Stationary frequency of the renewal symbol: one over the expected
    return time.  The survival sum is closed off geometrically once the
    table is exhausted, so constant-tail specs are computed exactly up to
    float rounding."""
    surv = 1.0
    total = 0.0
    k = 0
    while k < truncation and k < len(spec.probs):
        total += surv
        surv *= 1.0 - spec.p(k)
        k += 1
    if k >= len(spec.probs):
        # geometric closure: sum_{j>=0} surv * (1-tail)^j
        total += surv / spec.tail
        remainder = 0.0
    else:
        remainder = surv * (1.0 - spec.tail) / spec.tail + surv
    value = 1.0 / (total + remainder) if remainder else 1.0 / total
    return MarginalReport(value, total + remainder, remainder, k)


# ---------------------------------------------------------------------------
# chi-square harness


@dataclass(frozen=True)
class ChiSquareReport:
    statistic: float
    df: int
    critical: float
    passed: bool
    level: float
    n: int


def geometric_test(samples, p: float, level: float = 0.99,
                   min_expected: float = 5.0) -> ChiSquareReport:
    """Chi-square goodness of fit of nonnegative counts against the
    geometric law P(k) = p (1-p)^k, pooling the tail so every bin has a
    workable expected count."""
    n = len(samples)
    if n == 0:
        raise ValueError("no samples")
    counts: dict[int, int] = {}
    for s in samples:
        counts[s] = counts.get(s, 0) + 1
    bins: list[tuple[float, float]] = []  # (observed, expected)
    k = 0
    cum = 0.0
    while True:
        exp_k = n * p * (1.0 - p) ** k
        tail_exp = n * (1.0 - p) ** (k + 1)
        if exp_k < min_expected or tail_exp < min_expected:
            break
        bins.append((counts.get(k, 0), exp_k))
        cum += exp_k
        k += 1
    tail_obs = sum(c for kk, c in counts.items() if kk >= k)
    tail_exp = n - cum
    if bins and tail_exp < min_expected:
        o, e = bins.pop()
        tail_obs += o
        tail_exp += e
    bins.append((tail_obs, tail_exp))
    stat = sum((o - e) ** 2 / e for o, e in bins if e > 0)
    df = len(bins) - 1
    if df <= 0:
        return ChiSquareReport(stat, 0, 0.0, stat <= 1e-9, level, n)
    crit = float(chi2.ppf(level, df))
    return ChiSquareReport(stat, df, crit, stat <= crit, level, n)


# ---------------------------------------------------------------------------
# exact window-law enumeration


@dataclass(frozen=True)
class WindowLaw:
    length: int
    probs: dict[tuple[int, ...], Fraction]
    unresolved: Fraction
    depth: int
    max_states: int

    def total_variation(self, empirical: dict[tuple[int, ...], float]) -> float:
        keys = set(self.probs) | set(empirical)
        return 0.5 * sum(
            abs(float(self.probs.get(s, 0)) - empirical.get(s, 0.0)) for s in keys
        )


def _model_vectors(model: ContextTreeModel):
    vecs = [v for _, v in model.rules.by_context]
    vecs += [r.probs for r in model.rules.by_distance]
    if model.rules.default is not None:
        vecs.append(model.rules.default)
    return vecs


def check_resolution(model: ContextTreeModel, resolution: int) -> None:
    """Every interval endpoint must sit on the 1/resolution grid, so that
    enumeration by intervals agrees with enumeration by grid cells."""
    eps = model.rules.epsilon
    n_reg = model.alphabet.n_regular
    points = [a * eps for a in range(n_reg + 1)]
    for vec in _model_vectors(model):
        acc = n_reg * eps
        for a, pr in enumerate(vec):
            acc += pr - eps if a < n_reg else pr
            points.append(acc)
    for pt in points:
        if (pt * resolution).denominator != 1:
            raise OracleUnsupportedError(
                f"endpoint {pt} is not a multiple of 1/{resolution}"
            )


def brute_force_window_law(model: ContextTreeModel, length: int, resolution: int,
                           depth: int = 24, state_cap: int = 200_000) -> WindowLaw:
    """Law of X_1..X_length under the stationary chain, exact up to the
    reported unresolved mass."""
    if validate(model):
        raise OracleUnsupportedError("model does not validate")
    for rule in model.rules.by_distance:
        if rule.free is not None:
            raise OracleUnsupportedError("free-prefix distance rules not supported")
    check_resolution(model, resolution)

    eps = model.rules.epsilon
    n_reg = model.alphabet.n_regular
    n_sym = model.alphabet.size
    mass = n_reg * eps
    ref = tuple(model.ref)
    lw = len(ref)
    raw = model.reach.raw
    ctx_map = dict(model.rules.by_context)
    s_max = max((len(k) for k in ctx_map), default=0)
    s_track = max(s_max, lw)
    by_dist = model.rules.by_distance
    default = model.rules.default

    def resolve(m: int, suffix: tuple[int, ...], need: int):
        if ctx_map and need <= s_max:
            vec = ctx_map.get(suffix[len(suffix) - need :])
            if vec is not None:
                return vec
        for rule in by_dist:
            kind = rule.selector[0]
            if kind == "exact" and rule.selector[1] != m:
                continue
            if kind == "parity" and m % 2 != rule.selector[1]:
                continue
            return rule.probs
        if default is None:
            raise OracleUnsupportedError(f"no rule for distance class {m}")
        return default

    # conditional symbol weights given a non-spontaneous uniform
    cond_cache: dict[tuple, tuple[Fraction, ...]] = {}

    def cond_weights(vec):
        w = cond_cache.get(vec)
        if w is None:
            w = tuple(
                (vec[a] - (eps if a < n_reg else 0)) / (1 - mass) for a in range(n_sym)
            )
            cond_cache[vec] = w
        return w

    GAP, ISL = 0, 1
    law: dict[tuple[int, ...], Fraction] = {}
    pruned = Fraction(0)
    max_states = 0

    def grow(frontier: dict, out: dict):
        """Extend bottom islands upward as far as the rules allow, tallying
        branches whose window resolves and collecting the rest in out.

        Every transition strictly increases the bottom island, so states
        are processed round by round with weight coalescing; identical
        partial constructions reached along different symbol paths merge
        instead of multiplying.
        """
        while frontier:
            nxt: dict[tuple, Fraction] = {}
            for (segs, win), w in frontier.items():
                if all(s is not None for s in win):
                    law[win] = law.get(win, Fraction(0)) + w
                    continue
                if len(segs) == 1:
                    key = (segs, win)
                    out[key] = out.get(key, Fraction(0)) + w
                    continue
                q = segs[0]
                above = segs[1]
                if above[0] == ISL:
                    _, m2, suf2, len2 = above
                    _, m1, suf1, len1 = q
                    if m2 is not None:
                        m = m2
                    elif m1 is not None:
                        m = m1 + len2
                    else:
                        m = None
                    suf = suf2 if len2 >= s_track else (suf1 + suf2)[-s_track:]
                    merged = (ISL, m, suf, len1 + len2)
                    key = ((merged,) + segs[2:], win)
                    nxt[key] = nxt.get(key, Fraction(0)) + w
                    continue
                # gap above: try to construct its bottom site
                _, m1, suf1, len1 = q
                need = -1
                if m1 is not None:
                    need = m1 + lw + raw(m1)
                if need < 0 or need > len1:
                    key = (segs, win)
                    out[key] = out.get(key, Fraction(0)) + w
                    continue
                total = sum(s[3] if s[0] == ISL else s[1] for s in segs)
                bottom = length + 1 - total
                pos = bottom + len1  # site being constructed
                vec = resolve(m1, suf1, need)
                weights = cond_weights(vec)
                gap_n = above[1]
                rest = segs[2:] if gap_n == 1 else ((GAP, gap_n - 1),) + segs[2:]
                for a in range(n_sym):
                    cw = weights[a]
                    if cw == 0:
                        continue
                    suf = (suf1 + (a,))[-s_track:]
                    if len1 + 1 >= lw and suf[len(suf) - lw :] == ref:
                        m = 0
                    elif m1 is not None:
                        m = m1 + 1
                    else:
                        m = None
                    isl = (ISL, m, suf, len1 + 1)
                    w2 = win
                    if 1 <= pos <= length:
                        w2 = win[: pos - 1] + (a,) + win[pos:]
                    key = ((isl,) + rest, w2)
                    nxt[key] = nxt.get(key, Fraction(0)) + w * cw
            frontier = nxt

    blank = (None,) * length
    states: dict[tuple, Fraction] = {((), blank): Fraction(1)}
    for site in range(length, -depth, -1):  # reveal sites length down to 1-depth
        nxt: dict[tuple, Fraction] = {}
        seeded: dict[tuple, Fraction] = {}
        for (segs, win), w in states.items():
            if mass < 1:
                if segs and segs[0][0] == GAP:
                    segs2 = ((GAP, segs[0][1] + 1),) + segs[1:]
                else:
                    segs2 = ((GAP, 1),) + segs
                key = (segs2, win)
                nxt[key] = nxt.get(key, Fraction(0)) + w * (1 - mass)
            for a in range(n_reg):
                m0 = 0 if (lw == 1 and a == ref[0]) else None
                isl = (ISL, m0, (a,), 1)
                w2 = win
                if 1 <= site <= length:
                    w2 = win[: site - 1] + (a,) + win[site:]
                key = ((isl,) + segs, w2)
                seeded[key] = seeded.get(key, Fraction(0)) + w * eps
        grow(seeded, nxt)
        if len(nxt) > state_cap:
            ranked = sorted(nxt.items(), key=lambda kv: kv[1], reverse=True)
            nxt = dict(ranked[:state_cap])
            pruned += sum(wv for _, wv in ranked[state_cap:])
        max_states = max(max_states, len(nxt))
        states = nxt

    unresolved = pruned + sum(states.values())
    return WindowLaw(length, law, unresolved, depth, max_states)
