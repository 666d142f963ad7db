"""The [0,1) interval layout that couples every chain to one uniform sequence.

Per regular symbol a there is a spontaneous interval J(a|empty) of width
epsilon at the bottom of [0,1); a uniform landing there produces a
regardless of the past.  Above the spontaneous block, each context v gets
intervals of width p(a|v) - epsilon for regular a followed by width p(a|v)
for the others, so the total mass assigned to a given v and a is exactly
p(a|v).  All intervals are half-open on the right.

Endpoints are exact rationals; the update hot path uses float mirrors that
are cached per probability vector.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .errors import NegativeWidthError
from .model import ContextTreeModel, cache_by_identity, context_of, transition_vector


class _Star:
    """Returned by the update function when the known past is too short."""

    def __repr__(self):
        return "STAR"


STAR = _Star()


@dataclass(frozen=True)
class IntervalPartition:
    """Exact interval layout for one context row (or just the spontaneous row).

    spontaneous[a] covers the regular symbols; blocks[a] covers every symbol
    for the given context and is None when only the spontaneous row was
    requested.  k_length(a) is the total mass that yields symbol a.
    """

    epsilon: Fraction
    n_regular: int
    spontaneous: tuple[tuple[Fraction, Fraction], ...]
    blocks: tuple[tuple[Fraction, Fraction], ...] | None

    def k_length(self, a: int) -> Fraction:
        total = Fraction(0)
        if a < self.n_regular:
            lo, hi = self.spontaneous[a]
            total += hi - lo
        if self.blocks is not None:
            lo, hi = self.blocks[a]
            total += hi - lo
        return total

    def all_intervals(self) -> list[tuple[Fraction, Fraction]]:
        out = list(self.spontaneous)
        if self.blocks is not None:
            out.extend(self.blocks)
        return out


def build_partition(model: ContextTreeModel, context: tuple[int, ...] | None) -> IntervalPartition:
    """Interval row for a context (None builds only the spontaneous row)."""
    eps = model.rules.epsilon
    n_reg = model.alphabet.n_regular
    spont = tuple(((a) * eps, (a + 1) * eps) for a in range(n_reg))
    if context is None:
        return IntervalPartition(eps, n_reg, spont, None)
    vec = transition_vector(model, context)
    blocks = []
    lo = n_reg * eps
    for a in range(model.alphabet.size):
        width = vec[a] - eps if a < n_reg else vec[a]
        if width < 0:
            raise NegativeWidthError(
                f"p({model.alphabet.label(a)}|{model.alphabet.to_display(context)}) = "
                f"{vec[a]} < epsilon = {eps}"
            )
        blocks.append((lo, lo + width))
        lo += width
    return IntervalPartition(eps, n_reg, spont, tuple(blocks))


@lru_cache(maxsize=4096)
def _row_endpoints(vec: tuple[Fraction, ...], eps: Fraction, n_reg: int) -> tuple[float, ...]:
    """Float cumulative endpoints of a context row, from n_reg*eps up to 1.

    Segment i lies between endpoint i and i+1 and maps to symbol i; zero
    width segments are skipped naturally by bisect.
    """
    pts = [n_reg * eps]
    for a, p in enumerate(vec):
        width = p - eps if a < n_reg else p
        if width < 0:
            raise NegativeWidthError(f"symbol {a}: p = {p} < epsilon = {eps}")
        pts.append(pts[-1] + width)
    return tuple(float(x) for x in pts)


class Updater:
    """Cached per-model machinery for evaluating the update function fast."""

    def __init__(self, model: ContextTreeModel):
        self.model = model
        eps = model.rules.epsilon
        n_reg = model.alphabet.n_regular
        self.mass = float(n_reg * eps)
        self._spont_pts = tuple(float(a * eps) for a in range(n_reg + 1))
        self._rows: dict = {}

    def spontaneous(self, u: float) -> int | None:
        """Regular symbol whose spontaneous interval holds u, else None."""
        if u >= self.mass:
            return None
        return bisect.bisect_right(self._spont_pts, u) - 1

    def from_vector(self, vec: tuple[Fraction, ...], u: float) -> int:
        """Symbol for u >= mass under a context row with the given vector."""
        pts = cache_by_identity(
            self._rows, vec,
            lambda v: _row_endpoints(v, self.model.rules.epsilon,
                                     self.model.alphabet.n_regular),
        )
        return bisect.bisect_right(pts, u) - 1


_updater_store: dict = {}


def updater(model: ContextTreeModel) -> Updater:
    return cache_by_identity(_updater_store, model, Updater)


def update_F(u: float, past: tuple[int, ...], model: ContextTreeModel):
    """One construction step: symbol index, or STAR when it cannot be decided.

    Below the spontaneous mass the symbol depends on u alone; above it the
    context of the known past picks the row, and an unresolved context
    yields STAR.
    """
    up = updater(model)
    a = up.spontaneous(u)
    if a is not None:
        return a
    ctx = context_of(model, past)
    if ctx is None:
        return STAR
    return up.from_vector(transition_vector(model, ctx), u)
