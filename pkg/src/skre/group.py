"""Prime-order elliptic-curve groups used by the AHE layer.

Two interchangeable backends share one interface:

* ``Secp256k1``: libsecp256k1 through coincurve (default, fast).
* ``WeierstrassGroup``: pure Python short-Weierstrass arithmetic over gmpy2,
  instantiated for secp256r1 and secp256k1. The secp256k1 instance doubles as
  an independent check on the coincurve backend.

Points travel as 33-byte SEC1 compressed encodings; the identity encodes as
33 zero bytes.
"""

from __future__ import annotations

from functools import lru_cache

import coincurve
import gmpy2
from gmpy2 import mpz

POINT_SIZE = 33
SCALAR_SIZE = 32
IDENTITY_BYTES = bytes(POINT_SIZE)


class InvalidPoint(ValueError):
    pass


class Group:
    """Interface shared by the backends. Points are opaque backend objects."""

    name: str
    order: int
    generator: object
    identity: object = None

    def add(self, a, b): ...
    def neg(self, a): ...
    def mul(self, a, k: int): ...
    def encode(self, a) -> bytes: ...
    def decode(self, data: bytes): ...

    def mul_base(self, k: int):
        return self.mul(self.generator, k)

    def sub(self, a, b):
        return self.add(a, self.neg(b))

    def is_identity(self, a) -> bool:
        return a is None

    def eq(self, a, b) -> bool:
        return self.encode(a) == self.encode(b)

    def sum(self, points):
        acc = self.identity
        for pt in points:
            acc = self.add(acc, pt)
        return acc

    def scalar_bytes(self, k: int) -> bytes:
        return (k % self.order).to_bytes(SCALAR_SIZE, "big")

    def __repr__(self):
        return f"<{type(self).__name__} {self.name}>"


class Secp256k1(Group):
    """secp256k1 via libsecp256k1. ``None`` stands for the identity."""

    name = "secp256k1"
    order = 0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEBAAEDCE6AF48A03BBFD25E8CD0364141

    def __init__(self):
        self.generator = coincurve.PrivateKey.from_int(1).public_key

    def add(self, a, b):
        if a is None:
            return b
        if b is None:
            return a
        try:
            return coincurve.PublicKey.combine_keys([a, b])
        except ValueError:
            # a == -b
            return None

    def neg(self, a):
        if a is None:
            return None
        raw = a.format()
        return coincurve.PublicKey(bytes([raw[0] ^ 1]) + raw[1:])

    def mul(self, a, k: int):
        k %= self.order
        if a is None or k == 0:
            return None
        return a.multiply(k.to_bytes(SCALAR_SIZE, "big"))

    def mul_base(self, k: int):
        k %= self.order
        if k == 0:
            return None
        return coincurve.PrivateKey.from_int(k).public_key

    def encode(self, a) -> bytes:
        return IDENTITY_BYTES if a is None else a.format()

    def decode(self, data: bytes):
        if len(data) != POINT_SIZE:
            raise InvalidPoint(f"expected {POINT_SIZE} bytes, got {len(data)}")
        if data == IDENTITY_BYTES:
            return None
        try:
            return coincurve.PublicKey(bytes(data))
        except ValueError as exc:
            raise InvalidPoint(str(exc)) from exc


class WeierstrassGroup(Group):
    """y^2 = x^3 + ax + b over F_q, prime order, cofactor 1.

    Points are affine ``(x, y)`` tuples of mpz; ``None`` is the identity.
    Scalar multiplication runs in Jacobian coordinates with a 4-bit window.
    """

    def __init__(self, name, q, a, b, order, gx, gy):
        self.name = name
        self.q = mpz(q)
        self.a = mpz(a) % self.q
        self.b = mpz(b)
        self.order = int(order)
        self.generator = (mpz(gx), mpz(gy))
        if not self.on_curve(self.generator):
            raise InvalidPoint("generator not on curve")

    def on_curve(self, pt) -> bool:
        if pt is None:
            return True
        x, y = pt
        return (y * y - (x * x * x + self.a * x + self.b)) % self.q == 0

    def add(self, p1, p2):
        if p1 is None:
            return p2
        if p2 is None:
            return p1
        q = self.q
        x1, y1 = p1
        x2, y2 = p2
        if x1 == x2:
            if (y1 + y2) % q == 0:
                return None
            lam = (3 * x1 * x1 + self.a) * gmpy2.invert(2 * y1, q) % q
        else:
            lam = (y2 - y1) * gmpy2.invert(x2 - x1, q) % q
        x3 = (lam * lam - x1 - x2) % q
        return (x3, (lam * (x1 - x3) - y1) % q)

    def neg(self, pt):
        if pt is None:
            return None
        return (pt[0], (-pt[1]) % self.q)

    # Jacobian helpers; Z == 0 marks the identity.
    def _jdbl(self, P):
        X, Y, Z = P
        if not Z or not Y:
            return (mpz(1), mpz(1), mpz(0))
        q = self.q
        YY = Y * Y % q
        S = 4 * X * YY % q
        ZZ = Z * Z % q
        M = (3 * X * X + self.a * ZZ * ZZ) % q
        X3 = (M * M - 2 * S) % q
        Y3 = (M * (S - X3) - 8 * YY * YY) % q
        return (X3, Y3, 2 * Y * Z % q)

    def _jadd(self, P, Q):
        X1, Y1, Z1 = P
        X2, Y2, Z2 = Q
        if not Z1:
            return Q
        if not Z2:
            return P
        q = self.q
        Z1Z1 = Z1 * Z1 % q
        Z2Z2 = Z2 * Z2 % q
        U1 = X1 * Z2Z2 % q
        U2 = X2 * Z1Z1 % q
        S1 = Y1 * Z2 * Z2Z2 % q
        S2 = Y2 * Z1 * Z1Z1 % q
        H = (U2 - U1) % q
        R = (S2 - S1) % q
        if not H:
            return self._jdbl(P) if not R else (mpz(1), mpz(1), mpz(0))
        HH = H * H % q
        HHH = H * HH % q
        V = U1 * HH % q
        X3 = (R * R - HHH - 2 * V) % q
        Y3 = (R * (V - X3) - S1 * HHH) % q
        return (X3, Y3, Z1 * Z2 * H % q)

    def mul(self, pt, k: int):
        k = int(k) % self.order
        if pt is None or k == 0:
            return None
        base = (pt[0], pt[1], mpz(1))
        table = [(mpz(1), mpz(1), mpz(0)), base]
        for _ in range(14):
            table.append(self._jadd(table[-1], base))
        acc = (mpz(1), mpz(1), mpz(0))
        top = (k.bit_length() + 3) // 4 * 4 - 4
        for shift in range(top, -1, -4):
            for _ in range(4):
                acc = self._jdbl(acc)
            digit = (k >> shift) & 15
            if digit:
                acc = self._jadd(acc, table[digit])
        X, Y, Z = acc
        if not Z:
            return None
        zinv = gmpy2.invert(Z, self.q)
        zinv2 = zinv * zinv % self.q
        return (X * zinv2 % self.q, Y * zinv2 * zinv % self.q)

    def encode(self, pt) -> bytes:
        if pt is None:
            return IDENTITY_BYTES
        x, y = pt
        return bytes([2 | int(y & 1)]) + int(x).to_bytes(32, "big")

    def decode(self, data: bytes):
        if len(data) != POINT_SIZE:
            raise InvalidPoint(f"expected {POINT_SIZE} bytes, got {len(data)}")
        if data == IDENTITY_BYTES:
            return None
        if data[0] not in (2, 3):
            raise InvalidPoint("not a compressed point")
        x = mpz(int.from_bytes(data[1:], "big"))
        if x >= self.q:
            raise InvalidPoint("x coordinate out of range")
        rhs = (x * x * x + self.a * x + self.b) % self.q
        y = gmpy2.powmod(rhs, (self.q + 1) // 4, self.q)
        if y * y % self.q != rhs:
            raise InvalidPoint("point not on curve")
        if int(y & 1) != data[0] & 1:
            y = self.q - y
        return (x, y)

    def eq(self, a, b) -> bool:
        return a == b


def secp256r1_python() -> WeierstrassGroup:
    q = 0xFFFFFFFF00000001000000000000000000000000FFFFFFFFFFFFFFFFFFFFFFFF
    return WeierstrassGroup(
        "secp256r1",
        q,
        q - 3,
        0x5AC635D8AA3A93E7B3EBBD55769886BC651D06B0CC53B0F63BCE3C3E27D2604B,
        0xFFFFFFFF00000000FFFFFFFFFFFFFFFFBCE6FAADA7179E84F3B9CAC2FC632551,
        0x6B17D1F2E12C4247F8BCE6E563A440F277037D812DEB33A0F4A13945D898C296,
        0x4FE342E2FE1A7F9B8EE7EB4A7C0F9E162BCE33576B315ECECBB6406837BF51F5,
    )


def secp256k1_python() -> WeierstrassGroup:
    return WeierstrassGroup(
        "secp256k1-python",
        0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEFFFFFC2F,
        0,
        7,
        Secp256k1.order,
        0x79BE667EF9DCBBAC55A06295CE870B07029BFCDB2DCE28D959F2815B16F81798,
        0x483ADA7726A3C4655DA4FBFC0E1108A8FD17B448A68554199C47D08FFB10D4B8,
    )


CURVES = {
    "secp256k1": Secp256k1,
    "secp256r1": secp256r1_python,
    "secp256k1-python": secp256k1_python,
}

DEFAULT_CURVE = "secp256k1"


@lru_cache(maxsize=None)
def get_group(name: str = DEFAULT_CURVE) -> Group:
    try:
        return CURVES[name]()
    except KeyError:
        raise ValueError(f"unknown curve {name!r}; choose from {sorted(CURVES)}") from None
