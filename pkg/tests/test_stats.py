import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats as sps

from snakedex.stats import mann_whitney_z


def test_identical_lists():
    a = [0.1, 0.2, 0.3, 0.4]
    r = mann_whitney_z(a, list(a))
    assert r.U == 8 and r.Z == 0 and not r.significant


def test_all_dominant():
    a = np.arange(10) + 100.0
    b = np.arange(10.0)
    r = mann_whitney_z(a, b)
    assert r.U == 100
    assert r.Z == pytest.approx(50 / math.sqrt(175))
    assert round(r.Z, 4) == 3.7796
    assert r.significant


def test_matches_scipy_u():
    rng = np.random.default_rng(0)
    a, b = rng.normal(size=7), rng.normal(0.5, size=9)
    r = mann_whitney_z(a, b)
    ref = sps.mannwhitneyu(a, b, alternative="two-sided", method="asymptotic", use_continuity=False)
    assert r.U == pytest.approx(ref.statistic)
    assert 2 * sps.norm.sf(abs(r.Z)) == pytest.approx(ref.pvalue)


def test_ties_use_midranks():
    r = mann_whitney_z([1, 2, 2], [2, 3])
    # pairs a>b: none; ties (2,2) x2 count one half each
    assert r.U == 1.0


@pytest.mark.parametrize("a,b", [([], [1, 2]), ([1, 2], []), ([1], [1, 2])])
def test_rejects_small(a, b):
    with pytest.raises(ValueError):
        mann_whitney_z(a, b)


@given(st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=12),
       st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=12))
def test_bounds_and_antisymmetry(a, b):
    ab = mann_whitney_z(a, b)
    ba = mann_whitney_z(b, a)
    assert 0 <= ab.U <= len(a) * len(b)
    assert ab.U + ba.U == pytest.approx(len(a) * len(b))
    assert math.isfinite(ab.Z) and ab.Z == pytest.approx(-ba.Z)
