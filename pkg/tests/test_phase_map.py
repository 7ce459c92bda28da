import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bose_complexity.phase_map import (
    GRID_HEADER,
    PhasePoint,
    ScopeError,
    alpha_axis,
    classify,
    gamma_easy,
    gamma_hard,
    hardness_protocol_time,
    phase_grid,
    snake_index,
    transition_kind,
    ts_1d,
)


def test_easy_exponent_nearest_neighbor_limit():
    assert gamma_easy(1e6, 2.0, 1).value == pytest.approx(1.0, abs=1e-5)


@pytest.mark.parametrize("alpha", [2.5, 5.0, 40.0])
def test_easy_exponent_negative_for_unit_beta(alpha):
    e = gamma_easy(alpha, 1.0, 1)
    assert e.value < 0 and e.log_regime and e.threshold == 0.0


def test_easy_exponent_arithmetic():
    assert gamma_easy(8.0, 2.0, 2).value == pytest.approx(1 / 6, abs=1e-15)


def test_easy_exponent_scope():
    with pytest.raises(ScopeError):
        gamma_easy(3.0, 2.0, 2)


@pytest.mark.parametrize("alpha", [1.0, 1.5, 2.0])
def test_hard_exponent_flat_between_half_and_full_dimension(alpha):
    h = gamma_hard(PhasePoint(alpha, 2.0, 2, "constant"))
    assert h.value == 0.0 and h.kind == "I"


def test_hard_exponent_type_one_arithmetic():
    h = gamma_hard(PhasePoint(2.5, 2.0, 2, "constant"))
    assert h.value == pytest.approx(0.25) and h.kind == "I"


def test_hard_exponent_type_two_noninteracting():
    h = gamma_hard(PhasePoint(0.5, 2.0, 2, "vanishing", delta=0.01))
    assert h.value == pytest.approx(-0.49) and h.kind == "II"


def test_hard_exponent_one_dimension_uses_type_two():
    h = gamma_hard(PhasePoint(3.0, 2.0, 1, "constant"))
    assert h.kind == "II" and set(h.candidates) == {"II"}


def test_hard_exponent_takes_minimum_of_applicable_types():
    h = gamma_hard(PhasePoint(0.4, 2.0, 1, "constant"))
    assert set(h.candidates) == {"II"}
    h = gamma_hard(PhasePoint(2.5, 2.0, 2, "hardcore"))
    assert set(h.candidates) == {"I"}


@pytest.mark.parametrize(
    "gamma, verdict", [(0.4, "Easy"), (0.6, "Hard")]
)
def test_classify_nearest_neighbor_proxy(gamma, verdict):
    v = classify(PhasePoint(1e6, 2.0, 2, "constant", gamma))
    assert v.verdict == verdict


def test_classify_gap_is_unknown():
    hard = gamma_hard(PhasePoint(3.0, 2.0, 2, "constant")).value
    v = classify(PhasePoint(3.0, 2.0, 2, "constant", hard / 2))
    assert v.verdict == "Unknown" and v.gamma_easy is None


def test_transition_kinds():
    assert transition_kind(PhasePoint(math.inf, 2.0, 2, "constant")) == "Sharp"
    assert transition_kind(PhasePoint(math.inf, 2.0, 1, "constant")) == "Coarse"
    assert transition_kind(PhasePoint(5.0, 2.0, 1, "constant")) == "Suggested-Coarse"
    assert transition_kind(PhasePoint(math.inf, 2.0, 3, "vanishing")) == "Suggested-Coarse"
    assert transition_kind(PhasePoint(5.0, 2.0, 2, "constant")) == "Unknown"


@pytest.mark.parametrize("D", [2, 3])
@pytest.mark.parametrize("beta", [1.5, 2.0])
def test_exponents_converge_monotonically_to_nearest_neighbor(D, beta):
    target = (beta - 1) / D
    gaps_easy, gaps_hard = [], []
    for alpha in (1e2, 1e4, 1e6):
        gaps_easy.append(abs(gamma_easy(alpha, beta, D).value - target))
        gaps_hard.append(abs(gamma_hard(PhasePoint(alpha, beta, D, "constant")).value - target))
    assert gaps_easy == sorted(gaps_easy, reverse=True) and gaps_easy[-1] < 1e-5
    assert gaps_hard == sorted(gaps_hard, reverse=True) and gaps_hard[-1] < 1e-5


def test_invalid_point():
    with pytest.raises(ValueError):
        PhasePoint(1.0, 0.5, 2, "constant")
    with pytest.raises(ValueError):
        PhasePoint(1.0, 2.0, 2, "strong")


# -- transfer time and protocol budget ---------------------------------------


@pytest.mark.parametrize("alpha, expected", [(3.0, 100.0), (1.5, 10.0), (0.3, 100**-0.2), (0.7, 1.0), (1.0, math.log(100))])
def test_transfer_time_branches(alpha, expected):
    assert ts_1d(100, alpha) == pytest.approx(expected, rel=1e-14)


def test_transfer_time_continuity():
    L = 50
    assert ts_1d(L, 2.0) == pytest.approx(ts_1d(L, 2.0 + 1e-12), rel=1e-9)
    assert ts_1d(L, 0.5) == pytest.approx(ts_1d(L, 0.5 - 1e-12), rel=1e-9)


def test_transfer_time_domain():
    with pytest.raises(ValueError):
        ts_1d(1, 2.0)


def test_protocol_long_range_transfer_budget():
    time, strategy, cands = hardness_protocol_time(2.5, 2, 16, 256, 2.0, 0.01)
    assert strategy == "long-range-transfer"
    assert time == pytest.approx(min(16, 4 * math.log(16)) + 1, rel=1e-12)
    assert cands["nearest-neighbor"] == 97


def test_protocol_constant_budget_for_intermediate_decay():
    time, strategy, _ = hardness_protocol_time(1.5, 2, 16, 256, 2.0, 0.01)
    assert (time, strategy) == (1.0, "entangling-gate-limited")


def test_protocol_nearest_neighbor_limit():
    time, strategy, _ = hardness_protocol_time(1e6, 2, 16, 256, 2.0, 0.01)
    assert (time, strategy) == (97, "nearest-neighbor")


def test_snake_examples():
    assert snake_index(0, 0, (2, 3)) == 0
    assert snake_index(1, 2, (2, 3)) == 3
    with pytest.raises(IndexError):
        snake_index(2, 0, (2, 3))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 12), st.integers(1, 12))
def test_snake_is_a_bijection_preserving_row_neighbors(rows, cols):
    seen = sorted(snake_index(r, c, (rows, cols)) for r in range(rows) for c in range(cols))
    assert seen == list(range(rows * cols))
    for r in range(rows):
        for c in range(cols - 1):
            assert abs(snake_index(r, c, (rows, cols)) - snake_index(r, c + 1, (rows, cols))) == 1


# -- grids -------------------------------------------------------------------


def test_alpha_axis_inverse_sqrt():
    axis = alpha_axis(0.25, math.inf, 5, "inverse_sqrt")
    assert axis[0] == pytest.approx(0.25) and math.isinf(axis[-1])
    ys = [1 / math.sqrt(a) for a in axis[:-1]]
    assert ys == pytest.approx([2.0, 1.5, 1.0, 0.5])
    assert alpha_axis(0, 2, 3) == [0.0, 1.0, 2.0]
    with pytest.raises(ValueError):
        alpha_axis(0, math.inf, 3)


def test_grid_rows_flag_zero_alpha():
    rows = phase_grid(2, 2.0, "constant", [0.0, 4.0], [0.0, 0.5])
    assert len(rows) == 4 and len(rows[0]) == len(GRID_HEADER)
    assert rows[0][1] == "" and rows[0][-1] == "alpha_zero"
    assert rows[2][1] == pytest.approx(0.5) and rows[2][-1] == ""


@settings(max_examples=200, deadline=None)
@given(
    st.floats(0, 50),
    st.sampled_from([1.0, 1.5, 2.0, 3.0]),
    st.integers(1, 3),
    st.sampled_from(["vanishing", "constant", "polynomial", "hardcore"]),
)
def test_easy_never_exceeds_hard(alpha, beta, D, regime):
    point = PhasePoint(alpha, beta, D, regime)
    hard = gamma_hard(point).value
    if alpha > D + 1:
        assert gamma_easy(alpha, beta, D).threshold <= hard + 1e-12
