"""Constructors for delta-fine tagged partitions.

Two strategies with different failure modes:

* greedy creep walks left to right, tagging each cell at its left
  endpoint, and degrades gracefully — a stall reports the frontier where
  forward progress died;
* midpoint bisection splits until each cell fits inside some candidate
  tag's ball, and localizes hard spots spatially.

Both re-check nothing: soundness of their output is established by the
exact checkers in :mod:`gaugekit.intervals`, which the tests (and the CLI,
before emission) run on every result.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Union

from .intervals import (
    GaugeLike,
    Interval,
    TaggedInterval,
    TaggedPartition,
    as_gauge,
)

DEFAULT_MAX_CELLS = 1_000_000
DEFAULT_MAX_DEPTH = 60


class StrategyKind(Enum):
    GREEDY_CREEP = "creep"
    BISECTION = "bisect"
    HYBRID = "hybrid"


@dataclass(frozen=True)
class PartitionStrategy:
    """Strategy choice plus iteration caps.

    Black-box gauges admit no termination guarantee, so both constructors
    carry explicit budgets and report diagnostics instead of spinning.
    """

    kind: StrategyKind = StrategyKind.HYBRID
    max_cells: int = DEFAULT_MAX_CELLS
    max_depth: int = DEFAULT_MAX_DEPTH

    def __post_init__(self):
        if self.max_cells <= 0 or self.max_depth <= 0:
            raise ValueError("strategy caps must be positive")


@dataclass(frozen=True)
class Stall:
    """Greedy creep stopped short; ``frontier`` is the last point reached."""

    frontier: float
    cells_so_far: tuple[TaggedInterval, ...]


@dataclass(frozen=True)
class DepthExceeded:
    """Bisection hit its depth (or cell) budget inside ``deepest_cell``."""

    deepest_cell: Interval


@dataclass(frozen=True)
class PartitionFailure:
    """Aggregated diagnostics from the strategies that were attempted."""

    stall: Stall | None = None
    depth_exceeded: DepthExceeded | None = None


def creep_partition(gauge: GaugeLike, dom: Interval, *,
                    max_cells: int = DEFAULT_MAX_CELLS) -> Union[TaggedPartition, Stall]:
    """Build a delta-fine partition left to right.

    At frontier s: if ``hi - s <= delta(hi)`` emit the final cell
    ``([s, hi], tag hi)``; otherwise emit ``([s, min(hi, s + delta(s))],
    tag s)`` and advance.  The final-cell lookahead is what lets gauges
    that vanish toward ``hi`` terminate.

    Returns a :class:`Stall` carrying the frontier when the cell budget
    runs out or the step underflows (``s + delta(s) == s`` in binary64).

    Raises:
        ValueError: if dom is degenerate.
        GaugeNonpositiveError: if the gauge is not positive somewhere.
    """
    g = as_gauge(gauge)
    a, b = dom.lo, dom.hi
    if not a < b:
        raise ValueError(f"domain must be nondegenerate, got [{a!r}, {b!r}]")
    delta_b = g(b)
    cells: list[TaggedInterval] = []
    s = a
    while True:
        if b - s <= delta_b:
            cells.append(TaggedInterval(Interval(s, b), b))
            return TaggedPartition(dom, tuple(cells))
        if len(cells) >= max_cells:
            return Stall(s, tuple(cells))
        t = min(b, s + g(s))
        if t <= s:
            return Stall(s, tuple(cells))
        cells.append(TaggedInterval(Interval(s, t), s))
        if t == b:
            return TaggedPartition(dom, tuple(cells))
        s = t


def bisect_partition(gauge: GaugeLike, dom: Interval, *,
                     max_depth: int = DEFAULT_MAX_DEPTH,
                     max_cells: int = DEFAULT_MAX_CELLS) -> Union[TaggedPartition, DepthExceeded]:
    """Build a delta-fine partition by recursive midpoint splitting.

    A cell [u, v] is emitted with the first candidate tag x of (u,
    midpoint, v) whose ball [x - delta(x), x + delta(x)] properly contains
    [u, v] (containment with at least one side strict); otherwise the cell
    is split.  Proper containment keeps the accepted cell strictly inside
    the ball on one side, so emitted cells are delta-fine with margin.

    Raises:
        ValueError: if dom is degenerate.
        GaugeNonpositiveError: if the gauge is not positive somewhere.
    """
    g = as_gauge(gauge)
    a, b = dom.lo, dom.hi
    if not a < b:
        raise ValueError(f"domain must be nondegenerate, got [{a!r}, {b!r}]")
    cells: list[TaggedInterval] = []

    def cover(u: float, v: float, depth: int) -> Interval | None:
        mid = 0.5 * (u + v)
        for x in (u, mid, v):
            d = g(x)
            lo_edge, hi_edge = x - d, x + d
            if lo_edge <= u and v <= hi_edge and (lo_edge < u or v < hi_edge):
                if len(cells) >= max_cells:
                    return Interval(u, v)
                cells.append(TaggedInterval(Interval(u, v), x))
                return None
        if depth >= max_depth or not u < mid < v:
            return Interval(u, v)
        bad = cover(u, mid, depth + 1)
        if bad is not None:
            return bad
        return cover(mid, v, depth + 1)

    bad = cover(a, b, 0)
    if bad is not None:
        return DepthExceeded(bad)
    return TaggedPartition(dom, tuple(cells))


def fine_partition(gauge: GaugeLike, dom: Interval,
                   strategy: PartitionStrategy = PartitionStrategy(),
                   ) -> Union[TaggedPartition, PartitionFailure]:
    """Dispatch to a strategy; HYBRID falls back to bisection on a stall.

    Raises:
        ValueError: if dom is degenerate.
        GaugeNonpositiveError: if the gauge is not positive somewhere.
    """
    if not dom.lo < dom.hi:
        raise ValueError(f"domain must be nondegenerate, got [{dom.lo!r}, {dom.hi!r}]")
    kind = strategy.kind
    if kind is StrategyKind.GREEDY_CREEP:
        result = creep_partition(gauge, dom, max_cells=strategy.max_cells)
        if isinstance(result, Stall):
            return PartitionFailure(stall=result)
        return result
    if kind is StrategyKind.BISECTION:
        result = bisect_partition(gauge, dom, max_depth=strategy.max_depth,
                                  max_cells=strategy.max_cells)
        if isinstance(result, DepthExceeded):
            return PartitionFailure(depth_exceeded=result)
        return result
    first = creep_partition(gauge, dom, max_cells=strategy.max_cells)
    if isinstance(first, TaggedPartition):
        return first
    second = bisect_partition(gauge, dom, max_depth=strategy.max_depth,
                              max_cells=strategy.max_cells)
    if isinstance(second, DepthExceeded):
        return PartitionFailure(stall=first, depth_exceeded=second)
    return second
