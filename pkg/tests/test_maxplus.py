import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from maxtrust import maxplus as mp
from maxtrust.maxplus import EPS

from conftest import exact, matrices, scalars

X = [[EPS, 1.0], [2.0, EPS]]


@pytest.mark.parametrize("x,y,expected", [(3, 5, 5), (EPS, 7, 7), (4, 4, 4)])
def test_oplus(x, y, expected):
    assert mp.oplus(x, y) == expected


@pytest.mark.parametrize("x,y,expected", [(3, 5, 8), (EPS, 7, EPS), (mp.E, 9, 9), (EPS, EPS, EPS)])
def test_otimes(x, y, expected):
    assert mp.otimes(x, y) == expected


def _loop_mul(a, b):
    # scalar-loop oracle built only from oplus/otimes
    n, k = len(a), len(a[0])
    m = len(b[0])
    out = [[EPS] * m for _ in range(n)]
    for i in range(n):
        for j in range(m):
            for t in range(k):
                out[i][j] = mp.oplus(out[i][j], mp.otimes(a[i][t], b[t][j]))
    return np.array(out)


def test_mat_mul_examples():
    a = mp.as_tropical([[1.5, -2.0], [EPS, 0.25]])
    assert mp.tropical_close(mp.mat_mul(mp.identity(2), a), a)
    assert mp.tropical_close(mp.mat_mul(mp.zeros(2), a), mp.zeros(2))
    expected = [[3.0, EPS], [EPS, 3.0]]
    assert mp.tropical_close(_loop_mul(X, X), expected)
    assert mp.tropical_close(mp.mat_mul(X, X), expected)


def test_mat_mul_shape_error():
    with pytest.raises(mp.ShapeError):
        mp.mat_mul(np.zeros((2, 3)), np.zeros((2, 3)))


def test_mat_mul_vector():
    assert mp.tropical_close(mp.mat_mul(X, [0.0, 0.0]), [1.0, 2.0])


def test_mat_pow_examples():
    a = mp.as_tropical([[0.5, EPS], [1.0, -1.0]])
    assert mp.tropical_close(mp.mat_pow(a, 0), mp.identity(2))
    assert mp.tropical_close(mp.mat_pow(a, 1), a)
    assert mp.tropical_close(mp.mat_pow(X, 2), [[3.0, EPS], [EPS, 3.0]])
    with pytest.raises(mp.ShapeError):
        mp.mat_pow(np.zeros((2, 3)), 2)


def test_trace_examples():
    assert mp.trace(mp.identity(3)) == 0.0
    assert mp.trace(mp.zeros(3)) == EPS
    assert mp.trace(X) == EPS
    with pytest.raises(mp.ShapeError):
        mp.trace(np.zeros((2, 3)))


def test_identity_and_zero():
    e3 = mp.identity(3)
    assert np.all(np.diag(e3) == 0.0)
    assert np.all(e3[~np.eye(3, dtype=bool)] == EPS)
    assert np.all(mp.zeros(2, 4) == EPS) and mp.zeros(2, 4).shape == (2, 4)


def test_arrays_are_read_only():
    a = mp.mat_mul(X, X)
    with pytest.raises(ValueError):
        a[0, 0] = 1.0


def test_rejects_nan_and_plus_inf():
    with pytest.raises(ValueError):
        mp.as_tropical([[np.nan]])
    with pytest.raises(ValueError):
        mp.as_tropical([[np.inf]])


def test_admissible_eigenvector():
    assert not mp.is_admissible_eigenvector([EPS, EPS])
    assert mp.is_admissible_eigenvector([EPS, 0.0])


@given(exact, exact, exact)
def test_semiring_laws(x, y, z):
    o, t = mp.oplus, mp.otimes
    assert o(x, y) == o(y, x)
    assert t(x, y) == t(y, x)
    assert o(o(x, y), z) == o(x, o(y, z))
    assert t(t(x, y), z) == t(x, t(y, z))
    assert t(x, o(y, z)) == o(t(x, y), t(x, z))
    assert o(x, x) == x
    assert o(EPS, x) == x
    assert t(EPS, x) == EPS
    assert t(mp.E, x) == x


@given(st.data())
def test_mat_mul_associative(data):
    n, k, m, p = (data.draw(st.integers(1, 4)) for _ in range(4))
    a = data.draw(matrices(n, k))
    b = data.draw(matrices(k, m))
    c = data.draw(matrices(m, p))
    left = mp.mat_mul(mp.mat_mul(a, b), c)
    right = mp.mat_mul(a, mp.mat_mul(b, c))
    assert np.array_equal(left, right)


@given(st.data())
def test_mat_pow_additive(data):
    n = data.draw(st.integers(1, 4))
    a = data.draw(matrices(n, n))
    i = data.draw(st.integers(0, 8))
    j = data.draw(st.integers(0, 8 - i))
    assert np.array_equal(mp.mat_pow(a, i + j), mp.mat_mul(mp.mat_pow(a, i), mp.mat_pow(a, j)))


@given(st.data())
def test_finite_products_are_plain_max_plus(data):
    n, k, m = (data.draw(st.integers(1, 4)) for _ in range(3))
    a = data.draw(matrices(n, k, st.integers(-50, 50).map(float)))
    b = data.draw(matrices(k, m, st.integers(-50, 50).map(float)))
    out = mp.mat_mul(a, b)
    assert np.all(np.isfinite(out))
    assert np.array_equal(out, _loop_mul(a.tolist(), b.tolist()))


@given(matrices(elements=scalars))
def test_text_round_trip_is_bit_exact(a):
    back = mp.loads(mp.dumps(a))
    assert back.shape == a.shape
    assert np.array_equal(back.view(np.int64), np.asarray(a, float).view(np.int64))


def test_text_format():
    text = mp.dumps([[1.5, EPS], [0.0, -2.0]])
    assert text == "2 2\n1.5 eps\n0.0 -2.0\n"
    buf = io.StringIO()
    mp.dump(mp.identity(2), buf)
    buf.seek(0)
    assert mp.tropical_close(mp.load(buf), mp.identity(2))


@pytest.mark.parametrize(
    "text,line,column",
    [
        ("2 2\n1 2\n3 oops\n", 3, 3),
        ("2 2\n1 2\n", 3, None),
        ("2\n", 1, None),
        ("1 2\n1 2 3\n", 2, None),
        ("1 1\ninf\n", 2, 1),
    ],
)
def test_parse_errors_name_position(text, line, column):
    with pytest.raises(mp.ParseError) as info:
        mp.loads(text)
    assert info.value.line == line
    assert info.value.column == column


def test_parse_skips_comments():
    assert mp.tropical_close(mp.loads("# c\n1 2   # dims\n\neps 4\n"), [[EPS, 4.0]])
