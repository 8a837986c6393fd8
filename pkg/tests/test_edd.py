import pytest

from anchoredmv.solver.edd import EXPECTED, count_edd


def test_expected_formulas():
    assert [EXPECTED["anchored-point"](m) for m in (2, 3, 4)] == [4, 7, 10]
    assert [EXPECTED["anchored-line"](m) for m in (3, 4)] == [15, 37]
    assert EXPECTED["point-mv"](2) == 6


def test_anchored_point_count_small():
    s = count_edd("anchored-point", 3, trials=4, seed=0)
    assert s.modal == 7 and s.matches and len(s.counts) == 4


def test_count_edd_validation():
    with pytest.raises(ValueError):
        count_edd("plane", 3)
    with pytest.raises(ValueError):
        count_edd("anchored-point", 1)
