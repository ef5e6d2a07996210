import math

import numpy as np
import pytest

from schottky_lab.errors import InadmissibleWordError, InvalidParameterError, InvalidPartitionError
from schottky_lab.transfer import bowen_dimension
from schottky_lab.words import (
    Alphabet,
    Partition,
    box_counting_dimension,
    check_partition,
    contraction_profile,
    derivative_bound_check,
    enumerate_partition,
    fit_multiplicity_constant,
    format_word,
    limit_set_cover,
    multiplicity_check,
    parse_word,
    word_interval,
    word_interval_prime,
    word_map,
)


class TestAlphabet:

    @pytest.mark.parametrize(
        ("r", "n"),
        [(1, 1), (1, 5), (2, 1), (2, 3), (3, 4)],
        ids=["r1-n1", "r1-n5", "r2-n1", "r2-n3", "r3-n4"],
    )
    def test_word_counts(self, r, n):
        words = list(Alphabet(r).words_of_length(n))
        assert len(words) == 2 * r * (2 * r - 1) ** (n - 1)
        assert len(set(words)) == len(words)
        assert all(Alphabet(r).is_admissible(w) for w in words)

    def test_bar_is_an_involution(self):
        alphabet = Alphabet(3)
        assert [alphabet.bar(a) for a in alphabet.letters] == [4, 5, 6, 1, 2, 3]
        assert alphabet.bar_word((1, 2, 6)) == (3, 5, 4)

    @pytest.mark.parametrize(
        "word",
        [(), (1, 3), (2, 4, 1), (5,)],
        ids=["empty", "letter-then-bar", "bar-in-the-middle", "unknown-letter"],
    )
    def test_check_rejects(self, word):
        with pytest.raises(InadmissibleWordError):
            Alphabet(2).check(word)

    def test_word_format(self):
        assert format_word((1, 2, 1), 2) == "121"
        assert format_word((10, 2), 5) == "10.2"
        assert parse_word("10.2", 5) == (10, 2)
        assert parse_word("121", 2) == (1, 2, 1)


class TestIntervals:

    def test_single_letter_is_base_interval(self, symmetric):
        for a in symmetric.letters:
            assert word_interval(symmetric, (a,)) == pytest.approx(symmetric.interval(a))

    def test_children_nest_in_parent(self, symmetric):
        alphabet = Alphabet.of(symmetric)
        for word in alphabet.words_of_length(3):
            left, right = word_interval(symmetric, word)
            for child in alphabet.children(word):
                c_left, c_right = word_interval(symmetric, child)
                assert left <= c_left < c_right <= right

    def test_prime_interval_inside_interval(self, symmetric):
        for word in Alphabet.of(symmetric).words_of_length(2):
            left, right = word_interval(symmetric, word)
            p_left, p_right = word_interval_prime(symmetric, word)
            assert left < p_left < p_right < right

    def test_word_map_is_ordered_product(self, symmetric):
        gamma = word_map(symmetric, (1, 2))
        expected = symmetric.generator(1) @ symmetric.generator(2)
        assert gamma.is_close(expected)
        assert word_map(symmetric, ()).is_close(type(gamma).identity())

    def test_elementary_intervals_shrink_to_fixed_point(self, elementary):
        left, right = word_interval(elementary, (1,) * 8)
        assert left < 1.0 < right
        assert right - left < 1e-5


class TestPartitions:

    @pytest.mark.parametrize("tau", [0.5, 0.1, 0.01], ids=["coarse", "medium", "fine"])
    def test_enumerated_partition_lengths(self, symmetric, tau):
        partition = enumerate_partition(symmetric, tau)
        for word in partition:
            left, right = word_interval(symmetric, word)
            assert right - left <= tau
            if len(word) > 1:
                p_left, p_right = word_interval(symmetric, word[:-1])
                assert p_right - p_left > tau

    @pytest.mark.parametrize("family", ["elementary", "symmetric"])
    def test_random_resolutions(self, family, request, rng):
        data = request.getfixturevalue(family)
        branching = 2 * data.r - 1
        for tau in np.exp(rng.uniform(math.log(0.01), math.log(0.5), 50)):
            words = list(enumerate_partition(data, tau))
            check_partition(words, data.r)
            word_set = set(words)
            assert not any(w[:k] in word_set for w in words for k in range(1, len(w)))
            depth = max(len(w) for w in words)
            covered = sum(branching ** (depth - len(w)) for w in words)
            assert covered == 2 * data.r * branching ** (depth - 1)
            intervals = sorted(word_interval(data, w) for w in words)
            for (_, right), (left, _) in zip(intervals, intervals[1:]):
                assert left >= right

    def test_large_tau_gives_alphabet(self, symmetric):
        partition = enumerate_partition(symmetric, 100.0)
        assert set(partition) == set(Partition.alphabet(2))

    def test_nonpositive_tau(self, symmetric):
        with pytest.raises(InvalidParameterError):
            enumerate_partition(symmetric, 0.0)

    def test_nested_words_rejected(self):
        with pytest.raises(InvalidPartitionError):
            check_partition([(1,), (1, 1), (2,)], 1)

    def test_incomplete_set_rejected(self):
        with pytest.raises(InvalidPartitionError):
            check_partition([(1,)], 1)

    def test_empty_set_rejected(self):
        with pytest.raises(InvalidPartitionError):
            check_partition([], 2)

    def test_fixed_length_partition(self):
        partition = Partition.of_length(2, 3)
        assert len(partition) == 4 * 3 * 3
        assert (1, 2, 1) in partition

    def test_bar_reverses_words(self):
        partition = Partition.of_length(2, 2)
        assert set(partition.bar()) == set(partition)
        assert (4, 3) in partition.bar()


class TestCover:

    def test_margin_bound(self, symmetric):
        tau, margin = 0.05, 0.01
        cover = limit_set_cover(symmetric, tau, margin)
        assert cover.total_length <= len(cover) * (tau + 2 * margin) + 1e-12
        assert cover.scale_ratio >= 1.0

    def test_merged_pieces_disjoint_and_sorted(self, symmetric):
        merged = limit_set_cover(symmetric, 0.05, 0.02).merged()
        for (l1, r1), (l2, r2) in zip(merged, merged[1:]):
            assert l1 < r1 < l2 < r2

    def test_contains_limit_points(self, elementary):
        cover = limit_set_cover(elementary, 0.01, 0.001)
        assert cover.contains(np.array([1.0, -1.0])).all()
        assert not cover.contains(0.0)

    def test_negative_margin(self, symmetric):
        with pytest.raises(InvalidParameterError):
            limit_set_cover(symmetric, 0.1, -0.1)
        with pytest.raises(InvalidParameterError):
            limit_set_cover(symmetric, 0.1).inflate(-1.0)


class TestPartitionChecks:

    def test_multiplicity_is_logarithmic(self, symmetric):
        fit = fit_multiplicity_constant(symmetric, [0.05, 0.01, 0.002], [2.0, 4.0, 16.0])
        assert fit.holds()
        assert math.isfinite(fit.constant)

    def test_multiplicity_rejects_small_C1(self, symmetric):
        with pytest.raises(InvalidParameterError):
            multiplicity_check(symmetric, 0.1, 1.5)

    def test_multiplicity_counts_overlaps(self, symmetric):
        report = multiplicity_check(symmetric, 0.01, 4.0)
        assert report.intervals > 0
        # nested intervals of comparable length stack up; disjoint ones do not
        assert 1 <= report.max_count <= report.intervals

    def test_derivative_ratios_bounded(self, symmetric):
        report = derivative_bound_check(symmetric, depth=4)
        assert report.ratio_min > 0.0
        assert report.spread < 1e3
        assert [n for n, _, _ in report.per_depth] == [1, 2, 3, 4]

    def test_contraction_envelope(self, symmetric):
        profile = contraction_profile(symmetric, 6)
        assert 0.0 < profile.rate < 1.0
        for n, length in enumerate(profile.max_lengths, start=1):
            assert length <= profile.envelope(n) * (1 + 1e-12)

    def test_depth_too_small(self, symmetric):
        with pytest.raises(InvalidParameterError):
            contraction_profile(symmetric, 1)


class TestBoxCounting:

    def test_elementary_dimension_zero(self, elementary):
        estimate = box_counting_dimension(elementary, target_count=100, scales=5, max_halvings=30)
        assert not estimate.target_reached
        assert abs(estimate.dimension) < 0.05

    def test_too_few_scales(self, symmetric):
        with pytest.raises(InvalidParameterError):
            box_counting_dimension(symmetric, scales=1)

    @pytest.mark.integration
    def test_agrees_with_bowen(self, symmetric):
        box = box_counting_dimension(symmetric, target_count=100_000, scales=8)
        bowen = bowen_dimension(symmetric)
        assert box.target_reached
        assert abs(box.dimension - bowen.dimension) <= 1e-2
