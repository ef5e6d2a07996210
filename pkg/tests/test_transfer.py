import math

import numpy as np
import pytest

from schottky_lab.errors import BranchTrackingError, InvalidParameterError, InvalidPartitionError
from schottky_lab.schottky import symmetric_schottky
from schottky_lab.transfer import (
    RESOLUTION_WARNING,
    assemble_refined,
    assemble_transfer,
    bowen_dimension,
    complex_power,
    cylinder_zeta,
    eigenfunction_at_zero,
    refined_invariance_residual,
    tracked_log,
    zeta_certificate,
    zeta_det,
)
from schottky_lab.words import Partition


class TestComplexPower:

    def test_real_positive_branch(self):
        assert complex_power(4.0, 0.5) == pytest.approx(2.0)
        assert complex_power(np.e, 1j) == pytest.approx(np.exp(1j))

    def test_tracks_a_rotating_path(self):
        path = np.exp(1j * np.linspace(0.1, 3.0, 40))
        logs = tracked_log(path)
        assert logs[-1].imag == pytest.approx(3.0)

    def test_quarter_turn_jump_raises(self):
        with pytest.raises(BranchTrackingError):
            tracked_log([1.0, -1.0])

    def test_zero_value_raises(self):
        with pytest.raises(BranchTrackingError):
            tracked_log([1.0, 0.0])

    def test_base_value_must_be_positive(self):
        with pytest.raises(InvalidParameterError):
            complex_power(1.0, 0.5, base_point_value=-1.0)


class TestAssembly:

    def test_alphabet_partition_is_identity(self, symmetric):
        matrix = assemble_transfer(symmetric, Partition.alphabet(2), 0.4 + 3j, 12)
        assert np.array_equal(matrix.entries, np.eye(48))

    def test_foreign_partition_rejected(self, symmetric):
        with pytest.raises(InvalidPartitionError):
            assemble_transfer(symmetric, Partition.alphabet(1), 0.5, 12)

    @pytest.mark.parametrize("fixture", ["elementary", "symmetric"])
    @pytest.mark.parametrize("N", [3, 4])
    def test_word_length_partition_is_power(self, request, fixture, N):
        data = request.getfixturevalue(fixture)
        s, M = 0.3 + 1.0j, 24
        refined = assemble_transfer(data, Partition.of_length(data.r, N), s, M).entries
        single = assemble_transfer(data, Partition.of_length(data.r, 2), s, M).entries
        power = np.linalg.matrix_power(single, N - 1)
        assert np.linalg.norm(refined - power, 2) <= 1e-8

    def test_resolution_diagnostic(self, elementary):
        matrix = assemble_transfer(elementary, Partition.of_length(1, 2), 0.5 + 2j, 24)
        assert matrix.interpolation_residual < RESOLUTION_WARNING

    def test_under_resolved_weights_warn(self, symmetric, caplog):
        with caplog.at_level("WARNING", logger="schottky_lab.transfer"):
            matrix = assemble_refined(symmetric, [(1, 1), (1, 2), (2, 1)], 0.5 + 400j, 4)
        assert matrix.interpolation_residual > RESOLUTION_WARNING
        assert "increase M" in caplog.text


class TestZetaDeterminant:

    @pytest.mark.parametrize(
        "s",
        [0.3 + 1.7j, 1.0 + 0.0j, -0.2 + 5.0j, 0.5 - 9.0j],
        ids=["generic", "real", "left-of-axis", "high-frequency"],
    )
    def test_elementary_matches_cylinder_product(self, elementary, s):
        assert zeta_det(elementary, s, 24) == pytest.approx(cylinder_zeta(2.0, s), abs=1e-10)

    def test_elementary_zero_on_lattice(self, elementary):
        assert abs(zeta_det(elementary, 1j * math.pi, 24)) < 1e-12

    @pytest.mark.parametrize(
        ("fixture", "max_imag"),
        [("elementary", 10.0), ("symmetric", 5.0)],
        ids=["elementary", "symmetric"],
    )
    def test_node_doubling(self, request, rng, fixture, max_imag):
        data = request.getfixturevalue(fixture)
        for _ in range(20):
            s = complex(rng.uniform(0.0, 1.0), rng.uniform(-max_imag, max_imag))
            assert zeta_certificate(data, s, 24).delta <= 1e-10

    def test_conjugate_symmetry(self, symmetric):
        s = 0.4 + 2.5j
        assert zeta_det(symmetric, s.conjugate(), 24) == pytest.approx(
            zeta_det(symmetric, s, 24).conjugate(), abs=1e-12
        )


class TestBowenDimension:

    def test_elementary_dimension_zero(self, elementary):
        estimate = bowen_dimension(elementary)
        assert estimate.dimension <= 1e-6
        assert estimate.eigenvalue == pytest.approx(1.0, abs=1e-10)

    def test_symmetric_dimension_is_zero_of_zeta(self, symmetric):
        estimate = bowen_dimension(symmetric)
        assert 0.0 < estimate.dimension < 1.0
        assert abs(estimate.eigenvalue - 1.0) <= 1e-10
        assert abs(zeta_det(symmetric, estimate.dimension, 24)) <= 1e-6

    def test_wider_gap_smaller_dimension(self):
        narrow = bowen_dimension(symmetric_schottky(2, 0.3)).dimension
        wide = bowen_dimension(symmetric_schottky(2, 1.2)).dimension
        assert wide < narrow

    def test_tolerance_floor(self, symmetric):
        with pytest.raises(InvalidParameterError):
            bowen_dimension(symmetric, tol=1e-12)


class TestEigenfunction:

    def test_no_eigenfunction_off_zero(self, elementary):
        eigen = eigenfunction_at_zero(elementary, 0.3 + 1.0j, 24)
        assert not eigen.is_null
        assert eigen.multiplicity == 0
        with pytest.raises(InvalidParameterError):
            eigen.evaluate(1, [1.0])

    def test_double_zero_has_two_dimensional_kernel(self, elementary):
        eigen = eigenfunction_at_zero(elementary, 1j * math.pi, 24)
        assert eigen.is_null
        assert eigen.multiplicity == 2
        assert not eigen.isolated
        assert eigen.residual < 1e-8

    def test_refined_invariance(self, elementary):
        eigen = eigenfunction_at_zero(elementary, 2j * math.pi, 24)
        assert refined_invariance_residual(elementary, eigen, 0.1) <= 1e-5

    def test_invariance_needs_a_zero(self, elementary):
        eigen = eigenfunction_at_zero(elementary, 0.3, 24)
        with pytest.raises(InvalidParameterError):
            refined_invariance_residual(elementary, eigen, 0.1)
