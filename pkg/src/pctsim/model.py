"""Finite representation of a context-tree chain with a reference string.

A model is (alphabet, ref, reach, rules):

* ``ref`` is a fixed string whose most recent occurrence anchors the memory:
  if it ended ``k`` steps ago, the next symbol depends on the suffix of
  length ``k + len(ref) + reach(k)``.
* ``reach`` is the deterministic look-further function; it fully determines
  the context tree, so infinite trees are stored finitely (explicit rule
  keys for a few contexts, distance-class rules or a default for the rest).
* symbols are indexed by position in the alphabet; the declared regular
  prefix of the alphabet is the set of symbols guaranteed probability at
  least ``epsilon`` under every rule.

Strings (pasts, contexts, samples) are tuples of symbol indices in time
order, oldest first.  Rule keys in configuration files are written in
display order, most recent symbol first, and are reversed on parse; all
in-memory tuples are time order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

from .errors import ModelInconsistentError, NoRuleError

INF = math.inf


def as_fraction(x) -> Fraction:
    """Exact value of a probability given as Fraction, str, int or float.

    Floats go through their shortest decimal repr, so 0.2 becomes exactly
    1/5: interval endpoints must come out as the decimals the user wrote.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


@dataclass(frozen=True)
class Violation:
    code: str
    where: str = ""
    detail: str = ""

    def __str__(self):
        loc = f" at {self.where}" if self.where else ""
        return f"{self.code}{loc}: {self.detail}"


@dataclass(frozen=True)
class Alphabet:
    """Ordered symbol names; the first n_regular of them are the regular set."""

    symbols: tuple[str, ...]
    n_regular: int

    @property
    def size(self) -> int:
        return len(self.symbols)

    def index(self, name: str) -> int:
        return self.symbols.index(name)

    def label(self, idx: int) -> str:
        return self.symbols[idx]

    def to_display(self, time_order: tuple[int, ...]) -> str:
        """Most-recent-first string form, as used in rule keys."""
        return "".join(self.symbols[i] for i in reversed(time_order))

    def to_time(self, display: str) -> tuple[int, ...]:
        return tuple(self.index(ch) for ch in reversed(display))

    def word(self, time_order) -> str:
        """Oldest-first string form, as samples are printed."""
        return "".join(self.symbols[i] for i in time_order)


@dataclass(frozen=True)
class LengthFn:
    """The reach function k -> how much beyond the reference occurrence to look.

    kinds: zero | identity | affine(a,b) | power(c,alpha) | exp(r) | table.
    A table holds explicit values and may declare a tail LengthFn evaluated
    at k directly once k runs off the table; without a declared tail the
    last value repeats (keeps the function total) but growth questions are
    reported as undecidable.
    """

    kind: str
    params: tuple[float, ...] = ()
    table: tuple[int, ...] = ()
    tail: "LengthFn | None" = None

    def raw(self, k: int) -> int:
        if self.kind == "zero":
            return 0
        if self.kind == "identity":
            return k
        if self.kind == "affine":
            a, b = self.params
            return math.ceil(a * k + b)
        if self.kind == "power":
            c, alpha = self.params
            return math.ceil(c * k ** alpha)
        if self.kind == "exp":
            (r,) = self.params
            return math.ceil(math.exp(min(r * k, 700.0)))
        if self.kind == "table":
            if k < len(self.table):
                return self.table[k]
            if self.tail is not None:
                return self.tail.raw(k)
            return self.table[-1]
        raise ValueError(f"unknown reach kind {self.kind!r}")

    def envelope(self, k: int) -> int:
        """Monotone normalization max_{j<=k} raw(j), used by the bounding processes."""
        env = _envelope_cache.setdefault(self, [])
        while len(env) <= k:
            j = len(env)
            v = self.raw(j)
            env.append(v if not env else max(env[-1], v))
        return env[k]

    def is_bounded(self) -> bool:
        if self.kind == "zero":
            return True
        if self.kind == "identity":
            return False
        if self.kind == "affine":
            return self.params[0] == 0
        if self.kind == "power":
            c, alpha = self.params
            return c == 0 or alpha == 0
        if self.kind == "exp":
            return self.params[0] <= 0
        if self.kind == "table":
            return True if self.tail is None else self.tail.is_bounded()
        raise ValueError(self.kind)

    def bounded_sup(self) -> int | None:
        """Supremum of raw when bounded, else None."""
        if not self.is_bounded():
            return None
        if self.kind == "zero":
            return 0
        if self.kind == "affine":
            return math.ceil(self.params[1])
        if self.kind == "power":
            return 0 if self.params[0] == 0 else math.ceil(self.params[0])
        if self.kind == "exp":
            return 1
        if self.kind == "table":
            best = max(self.table)
            if self.tail is not None:
                # tail is bounded here; it is one of the closed forms above
                tail_sup = self.tail.bounded_sup()
                best = max(best, tail_sup)
            return best
        raise ValueError(self.kind)


_envelope_cache: dict[LengthFn, list[int]] = {}


@dataclass(frozen=True)
class DistanceRule:
    """Probability vector for a class of contexts keyed by reference distance.

    selector: ("exact", k) | ("parity", 0 or 1) | ("any",)
    free: optional time-order pattern the oldest context symbols must match.
    """

    selector: tuple
    probs: tuple[Fraction, ...]
    free: tuple[int, ...] | None = None

    def matches(self, m_dist: int, context: tuple[int, ...]) -> bool:
        kind = self.selector[0]
        if kind == "exact" and m_dist != self.selector[1]:
            return False
        if kind == "parity" and m_dist % 2 != self.selector[1]:
            return False
        if self.free is not None and context[: len(self.free)] != self.free:
            return False
        return True


@dataclass(frozen=True)
class TransitionRules:
    epsilon: Fraction
    by_context: tuple[tuple[tuple[int, ...], tuple[Fraction, ...]], ...] = ()
    by_distance: tuple[DistanceRule, ...] = ()
    default: tuple[Fraction, ...] | None = None


@dataclass(frozen=True)
class ContextTreeModel:
    alphabet: Alphabet
    ref: tuple[int, ...]
    reach: LengthFn
    rules: TransitionRules

    @property
    def epsilon(self) -> Fraction:
        return self.rules.epsilon

    @property
    def spontaneous_mass(self) -> Fraction:
        """Total width of the spontaneous region: n_regular * epsilon."""
        return self.alphabet.n_regular * self.rules.epsilon


def cache_by_identity(store: dict, obj, build):
    """Memoize build(obj) keyed on object identity; models and their vector
    tuples are immutable and long-lived, and hashing them per call is what
    this avoids.  The stored strong reference keeps ids from being reused
    while an entry is alive; a mismatch check guards the remaining case."""
    entry = store.get(id(obj))
    if entry is None or entry[0] is not obj:
        entry = (obj, build(obj))
        store[id(obj)] = entry
    return entry[1]


_context_map_store: dict = {}


def _context_map(model: ContextTreeModel):
    """Explicit keys as a dict plus the distinct key lengths, longest first."""

    def build(m):
        keys = dict(m.rules.by_context)
        lengths = sorted({len(k) for k in keys}, reverse=True)
        return keys, lengths

    return cache_by_identity(_context_map_store, model, build)


def ref_distance(model: ContextTreeModel, past: tuple[int, ...]) -> float:
    """Least j >= 0 such that the reference string ends j symbols before the
    end of past; INF when it does not occur."""
    ref = model.ref
    lw = len(ref)
    n = len(past)
    for j in range(n - lw + 1):
        if past[n - j - lw : n - j] == ref:
            return j
    return INF


def context_of(model: ContextTreeModel, past: tuple[int, ...]) -> tuple[int, ...] | None:
    """The unique context that is a suffix of past, or None when the past is
    too short to pin one down.

    Resolution is structural: the most recent reference occurrence at
    distance k implies a context of length k + len(ref) + reach(k).  Any
    explicit rule key that is a suffix of past must coincide with that
    context; a mismatch means the stored rules contradict the tree shape.
    """
    k = ref_distance(model, past)
    ctx = None
    if k is not INF:
        k = int(k)
        need = k + len(model.ref) + model.reach.raw(k)
        if len(past) >= need:
            ctx = past[-need:] if need > 0 else ()
    keys, lengths = _context_map(model)
    if keys:
        n = len(past)
        for length in lengths:
            if length > n:
                continue
            suffix = past[n - length :]
            if suffix in keys and suffix != ctx:
                raise ModelInconsistentError(
                    f"rule key {model.alphabet.to_display(suffix)!r} matches this past "
                    f"but the structural context is "
                    f"{model.alphabet.to_display(ctx) if ctx else 'undetermined'!r}"
                )
    return ctx


def transition_vector(model: ContextTreeModel, context: tuple[int, ...]) -> tuple[Fraction, ...]:
    """Probability vector over the alphabet for a resolved context."""
    keys, _ = _context_map(model)
    vec = keys.get(context)
    if vec is not None:
        return vec
    if model.rules.by_distance:
        m = ref_distance(model, context)
        m = int(m) if m is not INF else -1
        for rule in model.rules.by_distance:
            if m >= 0 and rule.matches(m, context):
                return rule.probs
    if model.rules.default is not None:
        return model.rules.default
    raise NoRuleError(
        f"no rule for context {model.alphabet.to_display(context)!r} and no default"
    )


def regen_rate(model: ContextTreeModel) -> float:
    """Exponential rate at which spontaneous reference occurrences accrue
    per time step; infinite when epsilon = 1.

    This is the yardstick the reach function is compared against when
    deciding whether the backward search terminates.
    """
    eps = float(model.epsilon)
    lw = len(model.ref)
    if eps >= 1.0:
        return INF
    return -math.log(1.0 - eps ** lw) / lw


@dataclass(frozen=True)
class TerminationReport:
    verdict: str  # PASS | FAIL | INCONCLUSIVE
    rate: float | None  # limsup log(reach(k)) / (regen_rate * k) when known
    detail: str
    trend: tuple[float, ...] = ()


def check_termination(model: ContextTreeModel, horizon: int = 64) -> TerminationReport:
    """Decide limsup_k log(reach(k)) / (C k) < 1 with C = regen_rate(model).

    Closed forms are decided analytically; a table with a declared tail is
    decided by its tail; a bare table only yields the empirical trend up to
    the horizon and the verdict INCONCLUSIVE.
    """
    c = regen_rate(model)
    fn = model.reach

    def analytic(f: LengthFn):
        if f.kind in ("zero", "identity", "affine", "power"):
            return 0.0
        if f.kind == "exp":
            return 0.0 if c is INF else f.params[0] / c
        return None

    rate = analytic(fn)
    if rate is None and fn.kind == "table" and fn.tail is not None:
        rate = analytic(fn.tail)
    if rate is not None:
        verdict = "PASS" if rate < 1.0 else "FAIL"
        return TerminationReport(verdict, rate, f"analytic growth ratio {rate:g}")

    trend = []
    for k in range(1, horizon + 1):
        v = fn.raw(k)
        trend.append(-INF if v <= 0 else math.log(v) / (c * k))
    return TerminationReport(
        "INCONCLUSIVE",
        None,
        "table has no declared tail; growth beyond the table is unknown",
        tuple(trend),
    )


def validate(model: ContextTreeModel) -> list[Violation]:
    """All invariant violations; empty list means the model is well formed."""
    out: list[Violation] = []
    ab = model.alphabet
    n = ab.size
    if n == 0:
        return [Violation("ALPHABET_EMPTY")]
    if len(set(ab.symbols)) != n:
        out.append(Violation("ALPHABET_DUP", detail=repr(ab.symbols)))
    if not 0 <= ab.n_regular <= n:
        out.append(Violation("REGULAR_PREFIX", detail=f"n_regular={ab.n_regular}"))

    eps = model.rules.epsilon
    if not 0 < eps <= 1:
        out.append(Violation("EPSILON_RANGE", detail=str(eps)))
    if ab.n_regular * eps > 1:
        out.append(
            Violation("REGULAR_MASS", detail=f"{ab.n_regular} * {eps} > 1")
        )

    if len(model.ref) == 0:
        out.append(Violation("REF_EMPTY"))
    for s in model.ref:
        if s >= ab.n_regular:
            out.append(Violation("REF_NOT_REGULAR", detail=ab.label(s)))
            break

    def check_vector(vec, where):
        if len(vec) != n:
            out.append(Violation("VECTOR_LENGTH", where, f"{len(vec)} != {n}"))
            return
        if any(p < 0 for p in vec):
            out.append(Violation("NEGATIVE_PROB", where))
        if abs(float(sum(vec)) - 1.0) > 1e-12:
            out.append(Violation("PROBABILITY_SUM", where, f"sum={float(sum(vec))}"))
        for a in range(min(ab.n_regular, len(vec))):
            if vec[a] < eps:
                out.append(
                    Violation("EPSILON_REGULARITY", where, f"p({ab.label(a)}|.) = {vec[a]} < {eps}")
                )

    keys = [k for k, _ in model.rules.by_context]
    for key, vec in model.rules.by_context:
        check_vector(vec, ab.to_display(key))
    for i, rule in enumerate(model.rules.by_distance):
        check_vector(rule.probs, f"dist rule #{i}")
        if rule.selector[0] == "exact" and rule.selector[1] < 0:
            out.append(Violation("DISTANCE_NEGATIVE", f"dist rule #{i}"))
    if model.rules.default is not None:
        check_vector(model.rules.default, "default")

    for i, a in enumerate(keys):
        for b in keys[i + 1 :]:
            s, v = (a, b) if len(a) <= len(b) else (b, a)
            if len(s) < len(v) and v[len(v) - len(s) :] == s:
                out.append(
                    Violation(
                        "SUFFIX_VIOLATION",
                        ab.to_display(s),
                        f"suffix of {ab.to_display(v)!r}",
                    )
                )

    lw = len(model.ref)
    for key in keys:
        m = ref_distance(model, key)
        if m is INF:
            out.append(
                Violation(
                    "STRUCTURAL_LAW",
                    ab.to_display(key),
                    "reference string does not occur in the key",
                )
            )
            continue
        m = int(m)
        expect = m + lw + model.reach.raw(m)
        if len(key) != expect:
            out.append(
                Violation(
                    "STRUCTURAL_LAW",
                    ab.to_display(key),
                    f"length {len(key)} != {m} + {lw} + reach({m}) = {expect}",
                )
            )
    return out
