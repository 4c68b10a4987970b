import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from puea_detect.features import absolute_gradient, assemble_feature
from puea_detect.pipeline import feature_matrix
from puea_detect.pursuit import PursuitTrace
from puea_detect.signal_synth import Hypothesis


def diff_oracle(r):
    out = []
    for i in range(len(r)):
        if i == 0:
            out.append(r[1] - r[0])
        elif i == len(r) - 1:
            out.append(r[-1] - r[-2])
        else:
            out.append((r[i + 1] - r[i - 1]) / 2)
    return np.abs(np.array(out))


def trace(norms):
    return PursuitTrace(np.asarray(norms, dtype=float), np.zeros(0, dtype=int), np.zeros(0, dtype=complex))


def test_constant_and_linear():
    assert np.array_equal(absolute_gradient([2.0, 2, 2, 2]), [0, 0, 0, 0])
    assert np.array_equal(absolute_gradient([4.0, 3, 2, 1]), [1, 1, 1, 1])


@given(arrays(float, st.integers(2, 120), elements=st.floats(0, 1e3)))
def test_gradient_matches_difference_oracle(r):
    assert np.max(np.abs(absolute_gradient(r) - diff_oracle(r))) <= 1e-12 * max(1.0, np.max(r))


def test_gradient_rejects_short():
    with pytest.raises(ValueError):
        absolute_gradient([1.0])


@pytest.mark.parametrize("m", [30, 100])
def test_feature_length(m):
    fv = assemble_feature(trace(np.linspace(5, 1, m)), "PU", 10)
    assert fv.values.shape == (2 * m,)
    assert fv.m == m and fv.label is Hypothesis.H1_PU


def test_zero_trace():
    assert np.all(assemble_feature(trace(np.zeros(30)), 0, 0).values == 0)


@pytest.mark.parametrize("bad", [[1.0], [1.0, np.nan], [1.0, -0.5]])
def test_invalid_trace(bad):
    with pytest.raises(ValueError):
        assemble_feature(trace(bad), 0, 0)


def test_batch_matches_single_and_ignores_order(rng):
    norms = np.sort(rng.random((20, 30)), axis=1)[:, ::-1]
    batch = feature_matrix(norms)
    perm = rng.permutation(20)
    assert np.array_equal(feature_matrix(norms[perm]), batch[perm])
    for i in range(20):
        assert np.array_equal(batch[i], assemble_feature(trace(norms[i]), 0, 0).values)
