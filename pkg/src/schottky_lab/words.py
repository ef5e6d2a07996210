"""Admissible words, their disks and intervals, partitions of the word tree.

Words are tuples of letters ``1..2r``. A word is admissible when no letter is
followed by its bar; ``a'`` drops the last letter and ``I_a = γ_{a'}(I_{a_n})``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Sequence, TypeAlias

import numpy as np

from schottky_lab.errors import (
    ConvergenceError,
    InadmissibleWordError,
    InvalidParameterError,
    InvalidPartitionError,
)
from schottky_lab.mobius import MobiusMap
from schottky_lab.schottky import SchottkyData

logger = logging.getLogger(__name__)

Word: TypeAlias = tuple[int, ...]
Interval: TypeAlias = tuple[float, float]

DEFAULT_MAX_WORDS = 2_000_000


@dataclass(slots=True, frozen=True)
class Alphabet:
    """The letters ``1..2r`` with the bar involution ``a <-> a + r``."""

    r: int

    def __post_init__(self) -> None:
        if self.r < 1:
            raise InvalidParameterError(f"r must be positive, got {self.r!r}")

    @classmethod
    def of(cls, data: SchottkyData) -> "Alphabet":
        return cls(data.r)

    @property
    def letters(self) -> range:
        return range(1, 2 * self.r + 1)

    def bar(self, a: int) -> int:
        return a + self.r if a <= self.r else a - self.r

    def successors(self, a: int) -> tuple[int, ...]:
        """Letters ``b`` with ``a -> b``, i.e. ``b != ā``."""
        forbidden = self.bar(a)
        return tuple(b for b in self.letters if b != forbidden)

    def is_admissible(self, word: Sequence[int]) -> bool:
        if any(a not in self.letters for a in word):
            return False
        return all(nxt != self.bar(cur) for cur, nxt in zip(word, word[1:]))

    def check(self, word: Sequence[int]) -> Word:
        """Return ``word`` as a tuple or raise if it is empty or inadmissible."""
        if not word:
            raise InadmissibleWordError(word, "the empty word has no interval")
        bad = [a for a in word if a not in self.letters]
        if bad:
            raise InadmissibleWordError(word, f"letters {bad} outside 1..{2 * self.r}")
        for j, (cur, nxt) in enumerate(zip(word, word[1:])):
            if nxt == self.bar(cur):
                raise InadmissibleWordError(word, f"letter {nxt} follows its bar at position {j + 1}")
        return tuple(word)

    def bar_word(self, word: Sequence[int]) -> Word:
        """``ā_n ... ā_1``; ``γ_{bar(a)} = γ_a^{-1}``."""
        return tuple(self.bar(a) for a in reversed(word))

    def children(self, word: Word) -> tuple[Word, ...]:
        if not word:
            return tuple((a,) for a in self.letters)
        return tuple(word + (b,) for b in self.successors(word[-1]))

    def words_of_length(self, n: int) -> Iterator[Word]:
        """All admissible words of length ``n``; there are ``2r(2r-1)^{n-1}``."""
        if n < 1:
            raise InvalidParameterError(f"word length must be positive, got {n!r}")
        layer: list[Word] = [(a,) for a in self.letters]
        for _ in range(n - 1):
            layer = [child for word in layer for child in self.children(word)]
        yield from layer


def format_word(word: Sequence[int], r: int) -> str:
    """Letter string of a word: plain digits while ``2r <= 9``, dot separated otherwise."""
    if 2 * r <= 9:
        return "".join(str(a) for a in word)
    return ".".join(str(a) for a in word)


def parse_word(text: str, r: int) -> Word:
    if 2 * r <= 9 and "." not in text:
        return tuple(int(ch) for ch in text)
    return tuple(int(part) for part in text.split("."))


def word_map(data: SchottkyData, word: Sequence[int]) -> MobiusMap:
    """``γ_a = γ_{a_1} ... γ_{a_n}``; the empty word gives the identity."""
    result = MobiusMap.identity()
    for a in word:
        result = result @ data.generator(a)
    return result


def _image(m: MobiusMap, interval: Interval) -> Interval:
    left = (m.a * interval[0] + m.b) / (m.c * interval[0] + m.d)
    right = (m.a * interval[1] + m.b) / (m.c * interval[1] + m.d)
    return (left, right) if left <= right else (right, left)


def word_interval(data: SchottkyData, w: Sequence[int]) -> Interval:
    """``I_a = γ_{a'}(I_{a_n})`` as ``(left, right)``.

    Raises:
        InadmissibleWordError: If ``w`` is empty or inadmissible.
    """
    word = Alphabet.of(data).check(w)
    return _image(word_map(data, word[:-1]), data.interval(word[-1]))


def _letter_interval_prime(data: SchottkyData, a: int) -> Interval:
    alphabet = Alphabet.of(data)
    gamma = data.generator(a)
    images = [_image(gamma, data.interval(b)) for b in alphabet.successors(a)]
    return (min(i[0] for i in images), max(i[1] for i in images))


def word_interval_prime(data: SchottkyData, w: Sequence[int]) -> Interval:
    """``I'_a``: the convex hull of the children intervals, carried by ``γ_{a'}``.

    Raises:
        InadmissibleWordError: If ``w`` is empty or inadmissible.
    """
    word = Alphabet.of(data).check(w)
    return _image(word_map(data, word[:-1]), _letter_interval_prime(data, word[-1]))


# ---- word tree traversal


@dataclass(slots=True, frozen=True)
class _Node:
    word: Word
    prefix_map: MobiusMap
    left: float
    right: float

    @property
    def length(self) -> float:
        return self.right - self.left


def _walk(
    data: SchottkyData,
    descend: Callable[[_Node], bool],
    max_nodes: int = DEFAULT_MAX_WORDS,
) -> Iterator[_Node]:
    """Depth-first traversal of the word tree, lexicographic order.

    Every visited node is yielded; its children are visited when
    ``descend(node)`` is true.
    """
    alphabet = Alphabet.of(data)
    identity = MobiusMap.identity()
    stack = [
        _Node((a,), identity, *data.interval(a)) for a in reversed(alphabet.letters)
    ]
    visited = 0
    while stack:
        node = stack.pop()
        visited += 1
        if visited > max_nodes:
            raise ConvergenceError(f"word tree traversal exceeded {max_nodes} nodes")
        yield node
        if descend(node):
            last = node.word[-1]
            child_map = node.prefix_map @ data.generator(last)
            for b in reversed(alphabet.successors(last)):
                left, right = _image(child_map, data.interval(b))
                stack.append(_Node(node.word + (b,), child_map, left, right))


def _partition_nodes(data: SchottkyData, tau: float, max_words: int) -> list[_Node]:
    if not (math.isfinite(tau) and tau > 0.0):
        raise InvalidParameterError(f"tau must be positive, got {tau!r}")
    return [
        node
        for node in _walk(data, lambda node: node.length > tau, max_nodes=max_words)
        if node.length <= tau
    ]


def check_partition(words: Iterable[Sequence[int]], r: int) -> None:
    """Raise unless ``words`` is prefix-free and covers every long enough word.

    Raises:
        InvalidPartitionError: If the set is empty, nested or incomplete.
        InadmissibleWordError: If some word is inadmissible.
    """
    alphabet = Alphabet(r)
    word_set = {alphabet.check(w) for w in words}
    if not word_set:
        raise InvalidPartitionError("a partition needs at least one word")
    prefixes = {w[:k] for w in word_set for k in range(len(w))}
    nested = word_set & prefixes
    if nested:
        raise InvalidPartitionError(
            f"word {format_word(min(nested), r)} is a prefix of another element"
        )
    for prefix in prefixes:
        for child in alphabet.children(prefix):
            if child not in word_set and child not in prefixes:
                raise InvalidPartitionError(
                    f"no element has {format_word(child, r)} as a prefix or extension"
                )


@dataclass(slots=True, frozen=True)
class Partition:
    """A finite prefix-complete set of words, optionally tagged with its resolution."""

    words: tuple[Word, ...]
    r: int
    resolution: float | None = None

    def __post_init__(self) -> None:
        check_partition(self.words, self.r)

    @classmethod
    def alphabet(cls, r: int) -> "Partition":
        return cls(tuple((a,) for a in Alphabet(r).letters), r)

    @classmethod
    def of_length(cls, r: int, n: int) -> "Partition":
        """``W_n`` as a partition."""
        return cls(tuple(Alphabet(r).words_of_length(n)), r)

    def __len__(self) -> int:
        return len(self.words)

    def __iter__(self) -> Iterator[Word]:
        return iter(self.words)

    def __contains__(self, word: object) -> bool:
        return word in self.words

    def bar(self) -> tuple[Word, ...]:
        """``Z̄``; in general not a partition itself."""
        alphabet = Alphabet(self.r)
        return tuple(alphabet.bar_word(w) for w in self.words)


def enumerate_partition(
    data: SchottkyData, tau: float, *, max_words: int = DEFAULT_MAX_WORDS
) -> Partition:
    """``Z(τ) = {a : |I_a| <= τ < |I_{a'}|}`` by depth-first search.

    Children are shorter than their parent, so the length test prunes exactly.
    ``τ >= max |I_a|`` returns the alphabet.

    Raises:
        InvalidParameterError: If ``tau <= 0``.
    """
    nodes = _partition_nodes(data, tau, max_words)
    return Partition(tuple(node.word for node in nodes), data.r, resolution=tau)


@dataclass(slots=True, frozen=True)
class CoverEntry:
    word: Word
    left: float
    right: float

    @property
    def length(self) -> float:
        return self.right - self.left


@dataclass(slots=True, frozen=True)
class IntervalCover:
    """Intervals of ``Z(τ)``, optionally widened by ``margin`` on each side."""

    entries: tuple[CoverEntry, ...]
    resolution: float
    margin: float = 0.0

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def lefts(self) -> np.ndarray:
        return np.array([e.left for e in self.entries]) - self.margin

    @property
    def rights(self) -> np.ndarray:
        return np.array([e.right for e in self.entries]) + self.margin

    @property
    def total_length(self) -> float:
        return float(np.sum(self.rights - self.lefts))

    @property
    def scale_ratio(self) -> float:
        """Smallest ``C`` with ``C^{-1} τ <= |I_a|`` for all entries."""
        return self.resolution / min(e.length for e in self.entries)

    def inflate(self, margin: float) -> "IntervalCover":
        if margin < 0.0:
            raise InvalidParameterError(f"margin must be nonnegative, got {margin!r}")
        return IntervalCover(self.entries, self.resolution, margin)

    def merged(self) -> list[Interval]:
        """Union of the (widened) intervals as sorted disjoint pieces."""
        pieces: list[list[float]] = []
        for left, right in sorted(zip(self.lefts.tolist(), self.rights.tolist())):
            if pieces and left <= pieces[-1][1]:
                pieces[-1][1] = max(pieces[-1][1], right)
            else:
                pieces.append([left, right])
        return [(p[0], p[1]) for p in pieces]

    def contains(self, x: np.ndarray | float) -> np.ndarray:
        """Membership of real points in the union (closed intervals)."""
        merged = self.merged()
        starts = np.array([p[0] for p in merged])
        ends = np.array([p[1] for p in merged])
        idx = np.searchsorted(starts, np.asarray(x, dtype=float), side="right") - 1
        safe = np.clip(idx, 0, len(merged) - 1)
        return (idx >= 0) & (np.asarray(x) <= ends[safe])

    def partition(self, r: int) -> Partition:
        return Partition(tuple(e.word for e in self.entries), r, resolution=self.resolution)


def limit_set_cover(
    data: SchottkyData,
    tau: float,
    margin: float = 0.0,
    *,
    max_words: int = DEFAULT_MAX_WORDS,
) -> IntervalCover:
    """Cover of the limit set by the intervals of ``Z(τ)``.

    With ``margin = m`` the union contains the ``m``-neighbourhood of the
    limit set and has total length at most ``#Z(τ)(τ + 2m)``.
    """
    if margin < 0.0:
        raise InvalidParameterError(f"margin must be nonnegative, got {margin!r}")
    nodes = _partition_nodes(data, tau, max_words)
    entries = tuple(CoverEntry(n.word, n.left, n.right) for n in nodes)
    return IntervalCover(entries, tau, margin)


# ---- partition checks


@dataclass(slots=True, frozen=True)
class MultiplicityReport:
    tau: float
    C1: float
    max_count: int
    intervals: int

    @property
    def bound_constant(self) -> float:
        """``max_count / log C1``."""
        return self.max_count / math.log(self.C1)


def multiplicity_check(data: SchottkyData, tau: float, C1: float) -> MultiplicityReport:
    """Largest number of intervals with ``τ <= |I_a| <= C1 τ`` through one point.

    The counting function is piecewise constant with breaks at endpoints, so
    endpoints and midpoints are a complete sample.
    """
    if not tau > 0.0:
        raise InvalidParameterError(f"tau must be positive, got {tau!r}")
    if not C1 >= 2.0:
        raise InvalidParameterError(f"C1 must be at least 2, got {C1!r}")
    nodes = [
        node
        for node in _walk(data, lambda node: node.length >= tau)
        if tau <= node.length <= C1 * tau
    ]
    if not nodes:
        return MultiplicityReport(tau, C1, 0, 0)
    lefts = np.sort(np.array([n.left for n in nodes]))
    rights = np.sort(np.array([n.right for n in nodes]))
    samples = np.concatenate(
        [lefts, rights, np.array([(n.left + n.right) / 2.0 for n in nodes])]
    )
    counts = np.searchsorted(lefts, samples, side="right") - np.searchsorted(
        rights, samples, side="left"
    )
    return MultiplicityReport(tau, C1, int(np.max(counts)), len(nodes))


@dataclass(slots=True, frozen=True)
class MultiplicityFit:
    constant: float
    reports: tuple[MultiplicityReport, ...]

    def holds(self) -> bool:
        return all(
            rep.max_count <= self.constant * math.log(rep.C1) + 1e-12 for rep in self.reports
        )


def fit_multiplicity_constant(
    data: SchottkyData, taus: Sequence[float], C1s: Sequence[float]
) -> MultiplicityFit:
    """One constant ``C`` with count ``<= C log C1`` over every sampled ``(τ, C1)``."""
    reports = tuple(multiplicity_check(data, tau, c1) for tau in taus for c1 in C1s)
    constant = max(rep.bound_constant for rep in reports)
    return MultiplicityFit(constant, reports)


@dataclass(slots=True, frozen=True)
class DerivativeBoundReport:
    depth: int
    per_depth: tuple[tuple[int, float, float], ...]
    ratio_min: float
    ratio_max: float

    @property
    def spread(self) -> float:
        return self.ratio_max / self.ratio_min


def derivative_bound_check(
    data: SchottkyData, depth: int, samples: int = 8
) -> DerivativeBoundReport:
    """Statistics of ``|γ'_{a'}(z)| / |I_a|`` over ``z`` in ``D_{a_n}`` and ``|a| <= depth``.

    Sample points are Chebyshev points on the real diameter of ``D_{a_n}``
    and on its upper boundary half-circle.
    """
    if depth < 2:
        raise InvalidParameterError(f"depth must be at least 2, got {depth!r}")
    k = np.arange(samples)
    unit = np.cos((2 * k + 1) * np.pi / (2 * samples))
    arc = np.exp(1j * np.pi * (unit + 1.0) / 2.0)
    points = {
        a: np.concatenate(
            [data.disk(a).center + data.disk(a).radius * unit,
             data.disk(a).center + data.disk(a).radius * arc]
        )
        for a in data.letters
    }
    stats: dict[int, list[float]] = {}
    for node in _walk(data, lambda node: len(node.word) < depth):
        ratio = np.abs(node.prefix_map.derivative(points[node.word[-1]])) / node.length
        low, high = stats.setdefault(len(node.word), [math.inf, 0.0])
        stats[len(node.word)] = [min(low, float(ratio.min())), max(high, float(ratio.max()))]
    per_depth = tuple((n, lo, hi) for n, (lo, hi) in sorted(stats.items()))
    return DerivativeBoundReport(
        depth=depth,
        per_depth=per_depth,
        ratio_min=min(lo for _, lo, _ in per_depth),
        ratio_max=max(hi for _, _, hi in per_depth),
    )


@dataclass(slots=True, frozen=True)
class ContractionProfile:
    max_lengths: tuple[float, ...]
    rate: float
    constant: float

    def envelope(self, n: int) -> float:
        return self.constant * self.rate**n


def contraction_profile(data: SchottkyData, max_depth: int) -> ContractionProfile:
    """Largest ``|I_a|`` per word length and a fitted geometric envelope.

    ``rate`` comes from a log-linear least-squares fit; ``constant`` is the
    smallest factor making ``constant * rate**n`` dominate every depth.
    """
    if max_depth < 2:
        raise InvalidParameterError(f"max_depth must be at least 2, got {max_depth!r}")
    longest = [0.0] * max_depth
    for node in _walk(data, lambda node: len(node.word) < max_depth):
        n = len(node.word)
        longest[n - 1] = max(longest[n - 1], node.length)
    depths = np.arange(1, max_depth + 1)
    slope, _ = np.polyfit(depths, np.log(longest), 1)
    rate = float(np.exp(slope))
    constant = float(np.max(np.array(longest) / rate**depths))
    return ContractionProfile(tuple(longest), rate, constant)


@dataclass(slots=True, frozen=True)
class DimensionEstimate:
    dimension: float
    taus: tuple[float, ...]
    counts: tuple[int, ...]
    residual: float
    target_reached: bool
    fitted_scales: int = field(default=5)


def box_counting_dimension(
    data: SchottkyData,
    target_count: int = 10_000,
    scales: int = 5,
    *,
    max_halvings: int = 45,
) -> DimensionEstimate:
    """Slope of ``log #Z(τ)`` against ``log(1/τ)`` over the last dyadic scales.

    ``τ`` halves from the largest base interval until ``#Z(τ)`` reaches
    ``target_count`` (or ``max_halvings`` is hit); the fit uses the last
    ``scales`` values.
    """
    if scales < 2:
        raise InvalidParameterError(f"need at least two scales, got {scales!r}")
    tau = max(data.disk(a).length for a in data.letters)
    taus: list[float] = []
    counts: list[int] = []
    reached = False
    for _ in range(max_halvings):
        tau /= 2.0
        taus.append(tau)
        counts.append(len(_partition_nodes(data, tau, DEFAULT_MAX_WORDS)))
        if counts[-1] >= target_count and len(counts) >= scales:
            reached = True
            break
    if not reached:
        logger.warning(
            "box counting stopped at tau=%.3g with %d words (target %d)", tau, counts[-1], target_count
        )
    x = np.log(1.0 / np.array(taus[-scales:]))
    y = np.log(np.array(counts[-scales:], dtype=float))
    slope, intercept = np.polyfit(x, y, 1)
    residual = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    return DimensionEstimate(
        dimension=float(slope),
        taus=tuple(taus),
        counts=tuple(counts),
        residual=residual,
        target_reached=reached,
        fitted_scales=scales,
    )
