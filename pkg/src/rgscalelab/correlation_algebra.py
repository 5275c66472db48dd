"""Full and truncated l-point functions over the lattice of set partitions."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import DimensionError, MissingValueError

MAX_ORDER = 10

Partition = tuple[tuple[int, ...], ...]


@dataclass(frozen=True)
class LabeledPoint:
    position: tuple[float, ...]
    time: float = 0.0
    observable_label: str = "A"

    def __post_init__(self):
        pos = np.atleast_1d(np.asarray(self.position, dtype=float))
        object.__setattr__(self, "position", tuple(float(v) for v in pos))
        object.__setattr__(self, "time", float(self.time))

    @property
    def dimension(self) -> int:
        return len(self.position)

    def shifted(self, a: Sequence[float], t: float = 0.0) -> "LabeledPoint":
        pos = tuple(p + float(s) for p, s in zip(self.position, a))
        return LabeledPoint(pos, self.time + t, self.observable_label)


TwoPoint = Callable[[LabeledPoint, LabeledPoint], complex]


# ------------------------------------------------------------- partitions


@lru_cache(maxsize=None)
def _partitions(l: int) -> tuple[Partition, ...]:
    # restricted-growth strings: element i joins an existing block or opens a new one
    out: list[Partition] = []

    def grow(i: int, blocks: list[list[int]]):
        if i > l:
            out.append(tuple(tuple(b) for b in blocks))
            return
        for b in blocks:
            b.append(i)
            grow(i + 1, blocks)
            b.pop()
        blocks.append([i])
        grow(i + 1, blocks)
        blocks.pop()

    grow(1, [])
    return tuple(out)


def enumerate_partitions(l: int) -> list[Partition]:
    """All set partitions of {1..l}; indices inside each block stay increasing."""
    if int(l) != l or not 1 <= l <= MAX_ORDER:
        raise ValueError(f"l must be an integer in [1, {MAX_ORDER}], got {l!r}")
    return list(_partitions(int(l)))


def bell_number(l: int) -> int:
    # Bell triangle
    row = [1]
    for _ in range(l - 1):
        nxt = [row[-1]]
        for v in row:
            nxt.append(nxt[-1] + v)
        row = nxt
    return row[-1]


# ------------------------------------------------------------- hierarchy


@dataclass
class CorrelationHierarchy:
    """Tabulated full (W) and truncated (W^T) values on ordered tuples of points.

    One-point values are 0 by normalisation and are never stored.
    """

    dimension: int
    max_order: int
    two_point: TwoPoint | None = None
    full_values: dict = field(default_factory=dict)
    truncated_values: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 1 <= self.max_order <= MAX_ORDER:
            raise ValueError(f"max_order must lie in [1, {MAX_ORDER}]")

    def _check(self, points: Sequence[LabeledPoint]) -> tuple[LabeledPoint, ...]:
        points = tuple(points)
        if len(points) > self.max_order:
            raise ValueError(f"tuple of length {len(points)} exceeds max_order {self.max_order}")
        for p in points:
            if p.dimension != self.dimension:
                raise DimensionError(f"point of dimension {p.dimension} in a {self.dimension}-dimensional hierarchy")
        return points

    def set_full(self, points, value) -> None:
        points = self._check(points)
        if len(points) > 1:
            self.full_values[points] = complex(value)

    def set_truncated(self, points, value) -> None:
        points = self._check(points)
        if len(points) > 1:
            self.truncated_values[points] = complex(value)

    def full(self, points) -> complex:
        return self._lookup(self.full_values, points, "full")

    def truncated(self, points) -> complex:
        return self._lookup(self.truncated_values, points, "truncated")

    def _lookup(self, table, points, kind) -> complex:
        points = tuple(points)
        if len(points) <= 1:
            return 0j
        try:
            return table[points]
        except KeyError:
            raise MissingValueError(f"no {kind} value tabulated for a {len(points)}-point tuple") from None

    def populate_full(self, points, func: Callable[[tuple], complex]) -> None:
        """Tabulate func on every order-preserving sub-tuple of ``points`` (length >= 2)."""
        points = self._check(points)
        for sub in _subtuples(points):
            self.full_values.setdefault(sub, complex(func(sub)))

    def populate_truncated(self, points, func: Callable[[tuple], complex]) -> None:
        points = self._check(points)
        for sub in _subtuples(points):
            self.truncated_values.setdefault(sub, complex(func(sub)))

    @classmethod
    def quasifree(cls, two_point: TwoPoint, tuples: Iterable[Sequence[LabeledPoint]], max_order: int):
        tuples = [tuple(t) for t in tuples]
        h = cls(dimension=tuples[0][0].dimension, max_order=max_order, two_point=two_point)
        for t in tuples:
            h.populate_full(t, lambda sub: quasifree_extend(two_point, sub))
        return h


def _subtuples(points: tuple) -> Iterable[tuple]:
    for size in range(2, len(points) + 1):
        for idx in itertools.combinations(range(len(points)), size):
            yield tuple(points[i] for i in idx)


# ------------------------------------------------------------- transforms


def compose_from_truncated(hierarchy: CorrelationHierarchy, points) -> complex:
    """W(points) as the sum over partitions of products of truncated values."""
    points = hierarchy._check(points)
    l = len(points)
    if l <= 1:
        return 0j
    total = 0j
    for part in _partitions(l):
        if any(len(b) == 1 for b in part):
            continue
        prod = 1.0 + 0j
        for block in part:
            prod *= hierarchy.truncated(tuple(points[i - 1] for i in block))
            if prod == 0:
                break
        total += prod
    return total


def truncate(hierarchy: CorrelationHierarchy, points) -> complex:
    """W^T(points) by induction over the order: W minus all proper partition products."""
    points = hierarchy._check(points)
    memo: dict[tuple[int, ...], complex] = {}

    def wt(idx: tuple[int, ...]) -> complex:
        if len(idx) <= 1:
            return 0j
        if idx in memo:
            return memo[idx]
        val = hierarchy.full(tuple(points[i] for i in idx))
        for part in _partitions(len(idx)):
            if len(part) == 1 or any(len(b) == 1 for b in part):
                continue
            prod = 1.0 + 0j
            for block in part:
                prod *= wt(tuple(idx[i - 1] for i in block))
                if prod == 0:
                    break
            val -= prod
        memo[idx] = val
        return val

    return wt(tuple(range(len(points))))


def _pairings(idx: tuple[int, ...]):
    if not idx:
        yield ()
        return
    first, rest = idx[0], idx[1:]
    for pos, partner in enumerate(rest):
        remaining = rest[:pos] + rest[pos + 1 :]
        for tail in _pairings(remaining):
            yield ((first, partner),) + tail


def quasifree_extend(two_point: TwoPoint, points) -> complex:
    """Unsigned sum over pairings (i < j) of products two_point(p_i, p_j)."""
    points = tuple(points)
    if len(points) % 2:
        return 0j
    cache: dict[tuple[int, int], complex] = {}

    def w2(i, j):
        if (i, j) not in cache:
            cache[(i, j)] = complex(two_point(points[i], points[j]))
        return cache[(i, j)]

    total = 0j
    for pairing in _pairings(tuple(range(len(points)))):
        prod = 1.0 + 0j
        for i, j in pairing:
            prod *= w2(i, j)
        total += prod
    return total


def verify_quasifree(hierarchy: CorrelationHierarchy, l_max: int, tuples: Iterable | None = None) -> float:
    """Largest |W^T| over tabulated tuples of length 3..l_max."""
    candidates = hierarchy.full_values.keys() if tuples is None else tuples
    worst = 0.0
    for t in candidates:
        if 3 <= len(t) <= l_max:
            worst = max(worst, abs(truncate(hierarchy, t)))
    return worst


def random_hierarchy(
    rng: np.random.Generator, points: Sequence[LabeledPoint], max_order: int | None = None
) -> CorrelationHierarchy:
    """Hierarchy with independent complex normal truncated values on all sub-tuples."""
    points = tuple(points)
    h = CorrelationHierarchy(points[0].dimension, max_order or len(points))
    h.populate_truncated(points, lambda sub: complex(rng.normal(), rng.normal()))
    return h

