import cmath
import math

from hypothesis import given
from hypothesis import strategies as st

from diracspec.scaled import ScaledComplex, scaled_sum

finite = st.floats(-1e3, 1e3, allow_nan=False)
cplx = st.complex_numbers(max_magnitude=1e6, allow_nan=False, allow_infinity=False)


def close(a, b, rel=1e-12):
    return abs(a - b) <= rel * max(abs(a), abs(b), 1e-300)


def test_zero_sentinel():
    z = ScaledComplex.from_complex(0)
    assert z.is_zero and z.to_complex() == 0 and abs(z) == 0.0


def test_overflowing_value_refuses_plain_conversion():
    big = ScaledComplex.exp(800.0)
    try:
        big.to_complex()
    except OverflowError:
        pass
    else:
        raise AssertionError("expected OverflowError")
    assert close(big.mantissa(800.0), 1.0)


@given(cplx, cplx)
def test_arithmetic_matches_plain(a, b):
    sa, sb = ScaledComplex.from_complex(a), ScaledComplex.from_complex(b)
    assert close((sa * sb).to_complex(), a * b, 1e-12)
    s = (sa + sb).to_complex()
    assert abs(s - (a + b)) <= 1e-12 * (abs(a) + abs(b)) + 1e-300
    d = (sa - sb).to_complex()
    assert abs(d - (a - b)) <= 1e-12 * (abs(a) + abs(b)) + 1e-300


@given(finite, st.floats(-10, 10))
def test_phase_wrapped(logmag, phase):
    z = ScaledComplex(logmag, phase)
    assert -math.pi < z.phase <= math.pi
    assert close(cmath.exp(1j * z.phase), cmath.exp(1j * phase), 1e-12)


def test_scaled_sum_of_huge_terms():
    total = scaled_sum([1000.0, 1000.0], [1.0, 1.0j])
    assert abs(total.logmag - (1000.0 + 0.5 * math.log(2))) < 1e-12
    assert abs(total.phase - math.pi / 4) < 1e-12
