import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dirac_qpm.hermite import (
    hermite_functions,
    odd_hermite_derivatives,
    odd_hermite_functions,
    odd_hermite_with_derivatives,
)


def mp_psi(n, r):
    # h_n(r) exp(-r^2/2) / sqrt(2^(n-1) n! sqrt(pi)), evaluated in log space
    with mpmath.workdps(40):
        r = mpmath.mpf(r)
        h = mpmath.hermite(n, r)
        if h == 0:
            return 0.0
        log_mag = mpmath.log(abs(h)) - r * r / 2 - ((n - 1) * mpmath.log(2) + mpmath.loggamma(n + 1) + mpmath.log(mpmath.pi) / 2) / 2
        return float(mpmath.sign(h) * mpmath.exp(log_mag))


@pytest.mark.parametrize("r", [0.1, 1.0, 5.0])
def test_odd_functions_match_log_space_oracle(r):
    vals = odd_hermite_functions(51, [r])[:, 0]
    for k in range(51):
        ref = mp_psi(2 * k + 1, r)
        assert vals[k] == pytest.approx(ref, rel=1e-10, abs=1e-300)


def test_large_degree_far_tail_is_finite():
    vals = hermite_functions(2000, [0.5, 30.0, 80.0])
    assert np.all(np.isfinite(vals))
    assert vals[2000, 1] == pytest.approx(mp_psi(2000, 30.0), rel=1e-8)


def test_half_line_orthonormality():
    x, w = np.polynomial.legendre.leggauss(400)
    r = 6.0 * (x + 1.0) + 1e-300
    phi = odd_hermite_functions(15, r)
    gram = (phi * (6.0 * w)) @ phi.T
    assert np.allclose(gram, np.eye(15), atol=1e-12)


def test_derivatives_match_finite_differences():
    r = np.linspace(0.2, 6.0, 30)
    h = 1e-5
    d = odd_hermite_derivatives(10, r)
    fd = (odd_hermite_functions(10, r + h) - odd_hermite_functions(10, r - h)) / (2 * h)
    assert np.allclose(d, fd, atol=1e-8)
    v, d2 = odd_hermite_with_derivatives(10, r)
    assert np.array_equal(d, d2)
    assert np.array_equal(v, odd_hermite_functions(10, r))


def test_odd_functions_vanish_at_origin():
    assert np.allclose(odd_hermite_functions(20, [0.0])[:, 0], 0.0)


def test_rejects_negative_degree():
    with pytest.raises(ValueError):
        hermite_functions(-1, [1.0])


@settings(max_examples=40, deadline=None)
@given(n=st.integers(0, 120), r=st.floats(0.01, 15.0))
def test_recurrence_matches_oracle_property(n, r):
    val = hermite_functions(n, [r])[n, 0]
    ref = mp_psi(n, r)
    assert val == pytest.approx(ref, rel=1e-9, abs=1e-290)
