from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fdi_glrt.grid import (
    CaseParseError, CaseValidationError, FlowMeter, GridModelError, InjectionMeter,
    MeasurementMatrix, MeterPlan, RankDeficientError, build_dc_jacobian, bundled_matrix,
    decompose_attack, format_matrix, load_matrix, orthogonal_complement, parse_case,
    synthetic_matrix,
)

DATA = Path(__file__).parent / "data"


def exact_rank(rows) -> int:
    """Row reduction over the rationals."""
    A = [[Fraction(v).limit_denominator(10**6) for v in r] for r in rows]
    rank, ncol = 0, len(A[0])
    for c in range(ncol):
        piv = next((i for i in range(rank, len(A)) if A[i][c] != 0), None)
        if piv is None:
            continue
        A[rank], A[piv] = A[piv], A[rank]
        for i in range(len(A)):
            if i != rank and A[i][c] != 0:
                f = A[i][c] / A[rank][c]
                A[i] = [x - f * y for x, y in zip(A[i], A[rank])]
        rank += 1
    return rank


class TestParseCase:
    def test_two_bus(self):
        case = parse_case((DATA / "two_bus.case").read_text())
        assert len(case.buses) == 2 and len(case.branches) == 1
        assert case.slack == 1
        assert case.branches[0].reactance == 0.5

    def test_negative_reactance(self):
        text = (DATA / "two_bus.case").read_text().replace("0.5", "-0.5")
        with pytest.raises(CaseValidationError, match="nonpositive reactance"):
            parse_case(text)

    def test_triangle(self):
        case = parse_case((DATA / "triangle.case").read_text())
        assert [b.id for b in case.buses] == [1, 2, 3]
        assert [(b.from_bus, b.to_bus, b.reactance) for b in case.branches] == [
            (1, 2, 1.0), (2, 3, 1.0), (3, 1, 1.0)]

    @pytest.mark.parametrize("text, match", [
        ("bus 1\nbus 2\nbranch 1 2 1", "no slack"),
        ("bus 1 slack\nbus 1\n", "duplicate"),
        ("bus 1 slack\nbus 2\nbus 3\nbranch 1 2 1", "disconnected"),
        ("bus 1 slack\nbranch 1 9 1", "unknown bus"),
    ])
    def test_validation(self, text, match):
        with pytest.raises(CaseValidationError, match=match):
            parse_case(text)

    def test_parse_error_location(self):
        with pytest.raises(CaseParseError) as exc:
            parse_case("bus 1 slack\nbranch 1 2 abc\n")
        assert exc.value.line == 2 and exc.value.column == 12

    def test_unknown_record(self):
        with pytest.raises(CaseParseError, match="unknown record"):
            parse_case("node 1\n")


class TestDcJacobian:
    def test_two_bus_hand_derivation(self):
        case = parse_case("bus 1 slack\nbus 2\nbranch 1 2 1.0\n")
        plan = MeterPlan((FlowMeter(0), InjectionMeter(1), InjectionMeter(2)))
        mm = build_dc_jacobian(case, plan)
        np.testing.assert_array_equal(mm.H, [[-1.0], [-1.0], [1.0]])

    def test_underdetermined(self):
        case = parse_case("bus 1 slack\nbus 2\nbranch 1 2 1.0\n")
        with pytest.raises(GridModelError, match="M <= K is violated"):
            build_dc_jacobian(case, MeterPlan((FlowMeter(0),)))

    def test_triangle_full_plan(self):
        case = parse_case((DATA / "triangle.case").read_text())
        mm = build_dc_jacobian(case, MeterPlan.full(case))
        assert mm.H.shape == (9, 2)
        assert exact_rank(mm.H) == 2

    def test_flow_rows_conserve(self):
        case = parse_case((DATA / "triangle.case").read_text())
        plan = MeterPlan.full(case)
        mm = build_dc_jacobian(case, plan)
        # re-insert the slack column: -(sum of state columns) for a flow row
        for row, meter in zip(mm.H, plan.entries):
            if isinstance(meter, FlowMeter):
                full = np.r_[-row.sum(), row]
                assert abs(full.sum()) < 1e-12
                assert sorted(np.abs(full))[-2:] == [1.0, 1.0]

    def test_rank_deficient_plan(self):
        # flows only on one branch of the triangle cannot see both angles
        case = parse_case((DATA / "triangle.case").read_text())
        plan = MeterPlan((FlowMeter(0), FlowMeter(0, reverse=True), FlowMeter(0)))
        with pytest.raises(RankDeficientError):
            build_dc_jacobian(case, plan)


class TestMatrixFile:
    def test_canonical(self):
        mm = load_matrix("2 1\n1\n0\n")
        np.testing.assert_array_equal(mm.H, [[1.0], [0.0]])
        np.testing.assert_allclose(np.abs(mm.B), [[0.0], [1.0]], atol=1e-15)

    def test_paper_size(self):
        mm = bundled_matrix()
        assert (mm.M, mm.K) == (284, 60)

    def test_duplicate_column_rank_59(self, rng):
        H = rng.standard_normal((284, 60))
        H[:, 59] = H[:, 0]
        with pytest.raises(RankDeficientError, match="rank 59"):
            load_matrix(format_matrix(H))

    def test_dimension_mismatch(self):
        with pytest.raises(GridModelError, match="dimension mismatch"):
            load_matrix("3 1\n1\n2\n")
        with pytest.raises(GridModelError, match="dimension mismatch"):
            load_matrix("2 2\n1 2\n3\n")

    def test_round_trip_exact(self, rng):
        H = rng.standard_normal((7, 3)) * 10.0 ** rng.integers(-8, 8, size=(7, 3))
        np.testing.assert_array_equal(load_matrix(format_matrix(H)).H, H)

    def test_bundled_matches_generator(self):
        np.testing.assert_array_equal(bundled_matrix().H, synthetic_matrix(284, 60, 1))


class TestOrthogonalComplement:
    def test_column(self):
        np.testing.assert_allclose(np.abs(orthogonal_complement([[1.0], [0.0]])), [[0], [1]])

    def test_padded_identity(self):
        B = orthogonal_complement(np.vstack([np.eye(2), np.zeros((1, 2))]))
        np.testing.assert_allclose(np.abs(B), [[0], [0], [1]], atol=1e-15)

    def test_rank_deficient(self):
        with pytest.raises(RankDeficientError):
            orthogonal_complement(np.ones((4, 2)))

    @settings(max_examples=50, deadline=None)
    @given(st.integers(2, 30), st.integers(1, 10), st.integers(0, 2**32 - 1))
    def test_invariants(self, M, K, seed):
        if K >= M:
            return
        H = np.random.default_rng(seed).standard_normal((M, K))
        B = orthogonal_complement(H)
        assert B.shape == (M, M - K)
        assert np.abs(B.T @ H).max(initial=0) <= 1e-10 * max(1, np.abs(H).max())
        assert np.abs(B.T @ B - np.eye(M - K)).max(initial=0) <= 1e-10
        # together the two spaces span R^M
        assert np.linalg.matrix_rank(np.hstack([H, B])) == M


class TestDecomposeAttack:
    def test_trivial(self):
        mm = load_matrix("2 1\n1\n0\n")
        dec = decompose_attack(mm, [2.0, 3.0])
        np.testing.assert_allclose(dec.theta_a, [2.0])
        np.testing.assert_allclose(np.abs(dec.theta_b), [3.0])

    def test_column_space_is_unobservable(self, mm10x4):
        a = mm10x4.H @ np.array([5.0, -1.0, 2.0, 0.5])
        dec = decompose_attack(mm10x4, a)
        assert dec.is_unobservable()
        assert np.abs(dec.theta_b).max() <= 1e-9 * (1 + np.linalg.norm(a))

    def test_reassembly(self, mm10x4, rng):
        a = rng.standard_normal(10)
        dec = decompose_attack(mm10x4, a)
        assert np.linalg.norm(a - dec.reassemble(mm10x4)) <= 1e-9 * (1 + np.linalg.norm(a))
        assert not dec.is_unobservable()

    def test_length_mismatch(self, mm10x4):
        with pytest.raises(ValueError):
            decompose_attack(mm10x4, np.ones(9))

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_reassembly_property(self, seed):
        r = np.random.default_rng(seed)
        M = int(r.integers(3, 25))
        K = int(r.integers(1, M))
        mm = MeasurementMatrix.from_H(r.standard_normal((M, K)))
        a = r.standard_normal(M) * 10
        dec = decompose_attack(mm, a)
        assert np.linalg.norm(a - dec.reassemble(mm)) <= 1e-9 * (1 + np.linalg.norm(a))
        dec0 = decompose_attack(mm, mm.H @ r.standard_normal(K))
        assert dec0.is_unobservable()


def test_matrix_is_immutable(mm10x4):
    with pytest.raises(ValueError):
        mm10x4.H[0, 0] = 1.0
