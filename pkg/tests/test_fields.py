import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from latlab.exceptions import CapExceededError
from latlab.fields import (field_of_order, is_irreducible, prime_power,
                           smallest_irreducible)

SMALL_ORDERS = [q for q in range(2, 65) if prime_power(q)]


def naive_mul(a, b, p, modulus):
    """Schoolbook product of coefficient lists, then long division by the modulus."""
    prod = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            prod[i + j] = (prod[i + j] + x * y) % p
    d = len(modulus) - 1
    for top in range(len(prod) - 1, d - 1, -1):
        c = prod[top]
        if c:
            for i, m in enumerate(modulus):
                prod[top - d + i] = (prod[top - d + i] - c * m) % p
    return (prod + [0] * d)[:d]


def digits(i, p, e):
    return [(i // p**k) % p for k in range(e)]


def test_prime_power_detection():
    assert prime_power(8) == (2, 3)
    assert prime_power(9) == (3, 2)
    assert prime_power(12) is None
    assert prime_power(1) is None


@pytest.mark.parametrize("p,e", [(2, 2), (2, 3), (3, 2), (2, 4), (5, 2)])
def test_irreducible_against_all_products(p, e):
    monic = lambda d: [list(c) + [1] for c in itertools.product(range(p), repeat=d)]
    reducible = set()
    for d1 in range(1, e):
        for f in monic(d1):
            for g in monic(e - d1):
                prod = [0] * (e + 1)
                for i, x in enumerate(f):
                    for j, y in enumerate(g):
                        prod[i + j] = (prod[i + j] + x * y) % p
                reducible.add(tuple(prod))
    for f in monic(e):
        assert is_irreducible(f, p) == (tuple(f) not in reducible)
    assert tuple(smallest_irreducible(p, e)) not in reducible


def test_known_moduli():
    assert list(field_of_order(4).modulus) == [1, 1, 1]
    assert list(field_of_order(9).modulus) == [1, 0, 1]


@pytest.mark.parametrize("q", SMALL_ORDERS)
def test_field_axioms_exhaustive(q):
    F = field_of_order(q)
    a = np.arange(q)[:, None]
    b = np.arange(q)[None, :]
    mul = F.mul(a, b)
    add = F.add(a, b)
    assert np.array_equal(mul, mul.T) and np.array_equal(add, add.T)
    for x in range(0, q, max(1, q // 7)):
        for y in range(0, q, max(1, q // 5)):
            assert np.array_equal(F.mul(mul[x, y], np.arange(q)), F.mul(x, mul[y]))
            assert np.array_equal(F.mul(x, add[y]), F.add(mul[x, y], mul[x]))
    nz = np.arange(1, q)
    assert np.all(F.mul(nz, F.inv(nz)) == 1)
    assert np.all(F.add(np.arange(q), F.neg(np.arange(q))) == 0)
    # multiplicative group is cyclic, generated by the chosen element
    assert F.order(F.generator_index) == q - 1


@pytest.mark.parametrize("q", [4, 8, 9, 16, 25, 27, 49, 64])
def test_mul_matches_polynomial_reduction(q):
    F = field_of_order(q)
    p, e = F.p, F.e
    modulus = list(F.modulus)
    for x in range(q):
        for y in range(q):
            expect = naive_mul(digits(x, p, e), digits(y, p, e), p, modulus)
            assert digits(int(F.mul(x, y)), p, e) == expect


@settings(max_examples=60, deadline=None)
@given(q=st.sampled_from(SMALL_ORDERS), data=st.data())
def test_element_wrapper_consistent(q, data):
    F = field_of_order(q)
    i = data.draw(st.integers(0, q - 1))
    j = data.draw(st.integers(1, q - 1))
    x, y = F(i), F(j)
    assert (x * y) / y == x
    assert (x - y) + y == x
    assert x ** (q - 1) == (F.one if i else F.zero)
    assert F(x.coeffs) == x


def test_mixed_fields_rejected():
    with pytest.raises(ValueError):
        field_of_order(5)(1) + field_of_order(7)(1)


def test_zero_inverse_raises():
    with pytest.raises(ZeroDivisionError):
        field_of_order(7).zero.inv()


def test_non_prime_power_rejected():
    with pytest.raises(ValueError):
        field_of_order(6)


def test_order_cap():
    with pytest.raises((CapExceededError, ValueError)):
        field_of_order(2**17)
