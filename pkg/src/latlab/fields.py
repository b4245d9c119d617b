"""Finite fields F_q, q = p**e, with a deterministic polynomial model.

Elements are identified with their canonical index: the coefficient vector
(c_0, ..., c_{e-1}) of a polynomial of degree < e, read as the base-p integer
c_0 + c_1 p + ... + c_{e-1} p**(e-1).  The modulus is the monic irreducible
polynomial of degree e whose low-order coefficients give the smallest such
integer, so two runs always build the same field.

Two layers are provided: :class:`FieldElem` for readable scalar code, and the
vectorised methods of :class:`FiniteField` (``add``, ``mul``, ...) that act on
numpy arrays of indices and are what the group code uses internally.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import CapExceededError

#: Largest field order the package will build.
MAX_ORDER = 2**16


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


def prime_power(q: int) -> tuple[int, int] | None:
    """Return (p, e) with q == p**e, or None if q is not a prime power."""
    if q < 2:
        return None
    p = 2
    while p * p <= q and q % p:
        p += 1
    if q % p:
        p = q
    e = 0
    r = q
    while r % p == 0:
        r //= p
        e += 1
    return (p, e) if r == 1 else None


# Polynomials over F_p in this module are tuples of coefficients, low degree
# first, with no trailing zeros (the zero polynomial is ()).

def _trim(c):
    c = list(c)
    while c and c[-1] == 0:
        c.pop()
    return tuple(c)


def poly_mul(a, b, p):
    if not a or not b:
        return ()
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] = (out[i + j] + x * y) % p
    return _trim(out)


def poly_divmod(a, b, p):
    """Long division over F_p; b must be nonzero."""
    a = list(a)
    inv_lead = pow(b[-1], p - 2, p)
    q = [0] * max(len(a) - len(b) + 1, 0)
    for shift in range(len(a) - len(b), -1, -1):
        coef = a[shift + len(b) - 1] * inv_lead % p
        q[shift] = coef
        if coef:
            for j, y in enumerate(b):
                a[shift + j] = (a[shift + j] - coef * y) % p
    return _trim(q), _trim(a)


def is_irreducible(f, p) -> bool:
    """Trial division by every monic polynomial of degree 1..deg(f)//2."""
    n = len(f) - 1
    if n < 1:
        return False
    for d in range(1, n // 2 + 1):
        for low in itertools.product(range(p), repeat=d):
            g = tuple(low) + (1,)
            if not poly_divmod(f, g, p)[1]:
                return False
    return True


def smallest_irreducible(p: int, e: int):
    """The monic irreducible of degree e over F_p with the least coefficient index."""
    for code in range(p**e):
        low = [(code // p**i) % p for i in range(e)]
        f = tuple(low) + (1,)
        if is_irreducible(f, p):
            return f
    raise AssertionError("no irreducible polynomial found")  # pragma: no cover


class FiniteField:
    """The field F_{p^e}.  Use :func:`make_field` to get a cached instance."""

    def __init__(self, p: int, e: int = 1):
        if not is_prime(p):
            raise ValueError(f"{p} is not prime")
        if e < 1:
            raise ValueError("extension degree must be >= 1")
        if p**e > MAX_ORDER:
            raise CapExceededError(f"field order {p}**{e} exceeds cap {MAX_ORDER}")
        self.p = p
        self.e = e
        self.q = p**e
        # For e == 1 the modulus is x, which is never used for reduction.
        self.modulus = smallest_irreducible(p, e) if e > 1 else (0, 1)
        self._powers = np.array([p**i for i in range(e)], dtype=np.int64)
        idx = np.arange(self.q, dtype=np.int64)
        self._digits = (idx[:, None] // self._powers[None, :]) % p
        self._build_log_tables()

    # -- construction helpers -------------------------------------------------
    def _to_poly(self, i: int):
        return _trim((i // self.p**j) % self.p for j in range(self.e))

    def _from_poly(self, c) -> int:
        return sum(int(x) * self.p**j for j, x in enumerate(c))

    def _mulmod(self, a: int, b: int) -> int:
        prod = poly_mul(self._to_poly(a), self._to_poly(b), self.p)
        if self.e == 1:
            return prod[0] if prod else 0
        return self._from_poly(poly_divmod(prod, self.modulus, self.p)[1])

    def _build_log_tables(self):
        q = self.q
        n = q - 1
        factors = [r for r in range(2, n + 1) if n % r == 0 and is_prime(r)]
        gen = None
        for g in range(2 if q > 2 else 1, q):
            # g generates iff g**(n/r) != 1 for every prime r | n
            if all(self._pow_slow(g, n // r) != 1 for r in factors):
                gen = g
                break
        exp = np.zeros(n, dtype=np.int64)
        log = np.full(q, -1, dtype=np.int64)
        x = 1
        for k in range(n):
            exp[k] = x
            log[x] = k
            x = self._mulmod(x, gen)
        self.generator_index = gen
        self._exp = exp
        self._log = log

    def _pow_slow(self, a: int, k: int) -> int:
        result, base = 1, a
        while k:
            if k & 1:
                result = self._mulmod(result, base)
            base = self._mulmod(base, base)
            k >>= 1
        return result

    # -- vectorised arithmetic on canonical indices --------------------------
    def add(self, a, b):
        if self.e == 1:
            return (np.asarray(a) + np.asarray(b)) % self.p
        s = (self._digits[a] + self._digits[b]) % self.p
        return s @ self._powers

    def neg(self, a):
        if self.e == 1:
            return (-np.asarray(a)) % self.p
        return ((-self._digits[a]) % self.p) @ self._powers

    def sub(self, a, b):
        return self.add(a, self.neg(b))

    def mul(self, a, b):
        a = np.asarray(a)
        b = np.asarray(b)
        zero = (a == 0) | (b == 0)
        la = self._log[np.where(a == 0, 1, a)]
        lb = self._log[np.where(b == 0, 1, b)]
        return np.where(zero, 0, self._exp[(la + lb) % (self.q - 1)])

    def inv(self, a):
        a = np.asarray(a)
        if np.any(a == 0):
            raise ZeroDivisionError("inverse of zero in a finite field")
        return self._exp[(-self._log[a]) % (self.q - 1)]

    def power(self, a, k: int):
        a = np.asarray(a)
        la = self._log[np.where(a == 0, 1, a)]
        out = self._exp[(la * k) % (self.q - 1)]
        if k == 0:
            return np.ones_like(a)
        return np.where(a == 0, 0, out)

    def order(self, a: int) -> int:
        """Multiplicative order of a nonzero element."""
        if a == 0:
            raise ZeroDivisionError("zero has no multiplicative order")
        n = self.q - 1
        return n // math.gcd(int(self._log[a]), n)

    # -- scalar interface -----------------------------------------------------
    def __call__(self, value) -> "FieldElem":
        if isinstance(value, FieldElem):
            if value.field is not self:
                raise ValueError("element belongs to a different field")
            return value
        if isinstance(value, (tuple, list)):
            if len(value) > self.e or any(not 0 <= c < self.p for c in value):
                raise ValueError("coefficient vector out of range")
            return FieldElem(self, self._from_poly(value))
        value = int(value)
        if self.e == 1:
            return FieldElem(self, value % self.p)
        if not 0 <= value < self.q:
            raise ValueError("index out of range")
        return FieldElem(self, value)

    @property
    def zero(self) -> "FieldElem":
        return FieldElem(self, 0)

    @property
    def one(self) -> "FieldElem":
        return FieldElem(self, 1)

    def generator(self) -> "FieldElem":
        """Least (by index) generator of the multiplicative group."""
        return FieldElem(self, self.generator_index)

    def elements(self) -> list["FieldElem"]:
        return [FieldElem(self, i) for i in range(self.q)]

    def additive_basis(self) -> list[int]:
        """Indices of 1, x, ..., x^(e-1); they generate (F_q, +)."""
        return [self.p**i for i in range(self.e)]

    def __repr__(self):
        if self.e == 1:
            return f"GF({self.p})"
        return f"GF({self.p}^{self.e}, modulus={self.modulus})"


@functools.cache
def make_field(p: int, e: int = 1) -> FiniteField:
    return FiniteField(p, e)


def field_of_order(q: int) -> FiniteField:
    pe = prime_power(q)
    if pe is None:
        raise ValueError(f"{q} is not a prime power")
    return make_field(*pe)


@dataclass(frozen=True, eq=False)
class FieldElem:
    field: FiniteField
    index: int

    @property
    def coeffs(self) -> tuple[int, ...]:
        p, e = self.field.p, self.field.e
        return tuple((self.index // p**i) % p for i in range(e))

    def _check(self, other) -> "FieldElem":
        if not isinstance(other, FieldElem):
            other = self.field(other)
        if other.field is not self.field:
            raise ValueError("cannot mix elements of different fields")
        return other

    def __add__(self, other):
        other = self._check(other)
        return FieldElem(self.field, int(self.field.add(self.index, other.index)))

    __radd__ = __add__

    def __sub__(self, other):
        other = self._check(other)
        return FieldElem(self.field, int(self.field.sub(self.index, other.index)))

    def __rsub__(self, other):
        return self._check(other) - self

    def __neg__(self):
        return FieldElem(self.field, int(self.field.neg(self.index)))

    def __mul__(self, other):
        other = self._check(other)
        return FieldElem(self.field, int(self.field.mul(self.index, other.index)))

    __rmul__ = __mul__

    def inv(self) -> "FieldElem":
        return FieldElem(self.field, int(self.field.inv(self.index)))

    def __truediv__(self, other):
        return self * self._check(other).inv()

    def __pow__(self, k: int):
        if k < 0:
            return self.inv() ** (-k)
        return FieldElem(self.field, int(self.field.power(self.index, k)))

    def __eq__(self, other):
        if isinstance(other, int):
            other = self.field(other)
        if not isinstance(other, FieldElem):
            return NotImplemented
        return self.field is other.field and self.index == other.index

    def __hash__(self):
        return hash((self.field.p, self.field.e, self.index))

    def __bool__(self):
        return self.index != 0

    def __int__(self):
        return self.index

    def __repr__(self):
        if self.field.e == 1:
            return str(self.index)
        terms = [f"{c}*x^{i}" if i else str(c) for i, c in enumerate(self.coeffs) if c]
        return " + ".join(terms) or "0"
