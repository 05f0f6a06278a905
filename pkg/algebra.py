# algebra.py
"""Prime-order group, scalar field, hashing into both, and the Fiat-Shamir transcript.

Everything runs on secp256k1 through the ``ecdsa`` package. Scalars are integers
modulo the group order; group elements wrap ``ecdsa`` Jacobian points, with
``None`` standing for the identity so the rest of the code never touches
``ecdsa``'s INFINITY sentinel directly.

Notation follows multiplicative group convention: ``P * Q`` is the group law,
``P ** k`` exponentiation and ``P / Q`` multiplication by the inverse.
"""
import hashlib
import logging
import secrets
from functools import lru_cache
from itertools import count
from typing import Iterable, Iterator, List, Optional, Sequence, Set, Tuple, Union

import numpy as np
from ecdsa import SECP256k1
from ecdsa.ellipticcurve import INFINITY, PointJacobi
from ecdsa.errors import MalformedPointError

from errors import InvalidParameter, MalformedEncoding

logger = logging.getLogger(__name__)

GROUP_NAME = "secp256k1"
CURVE = SECP256k1.curve
ORDER = int(SECP256k1.order)
FIELD_PRIME = int(CURVE.p())

SCALAR_BYTES = 32
ELEMENT_BYTES = 33
_IDENTITY_BYTES = bytes(ELEMENT_BYTES)

H_G_TAG = b"proswap/H_G"
U_TAG = b"proswap/generator-u"

Rng = Optional[np.random.Generator]


class Scalar:
    """An integer modulo the group order, always held in canonical form."""

    __slots__ = ("value",)

    def __init__(self, value: Union[int, "Scalar"] = 0):
        if isinstance(value, Scalar):
            value = value.value
        object.__setattr__(self, "value", int(value) % ORDER)

    def __setattr__(self, name, value):
        raise AttributeError("Scalar is immutable")

    @staticmethod
    def _coerce(other) -> int:
        if isinstance(other, Scalar):
            return other.value
        if isinstance(other, int):
            return other
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        return NotImplemented if o is NotImplemented else Scalar(self.value + o)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        return NotImplemented if o is NotImplemented else Scalar(self.value - o)

    def __rsub__(self, other):
        o = self._coerce(other)
        return NotImplemented if o is NotImplemented else Scalar(o - self.value)

    def __mul__(self, other):
        o = self._coerce(other)
        return NotImplemented if o is NotImplemented else Scalar(self.value * o)

    __rmul__ = __mul__

    def __neg__(self):
        return Scalar(-self.value)

    def inverse(self) -> "Scalar":
        if self.value == 0:
            raise InvalidParameter("zero has no inverse")
        return Scalar(pow(self.value, -1, ORDER))

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return self * Scalar(o).inverse()

    def __eq__(self, other):
        if isinstance(other, Scalar):
            return self.value == other.value
        if isinstance(other, int):
            return self.value == other % ORDER
        return NotImplemented

    def __hash__(self):
        return hash(("Scalar", self.value))

    def __bool__(self):
        return self.value != 0

    def __int__(self):
        return self.value

    def __repr__(self):
        return f"Scalar(0x{self.value:064x})"

    def to_bytes(self) -> bytes:
        return self.value.to_bytes(SCALAR_BYTES, "big")

    @classmethod
    def from_bytes(cls, data: bytes) -> "Scalar":
        """Strict decode: exactly 32 bytes holding a value below the order."""
        if len(data) != SCALAR_BYTES:
            raise MalformedEncoding(f"scalar must be {SCALAR_BYTES} bytes, got {len(data)}")
        value = int.from_bytes(data, "big")
        if value >= ORDER:
            raise MalformedEncoding("scalar is not reduced modulo the group order")
        return cls(value)


def _is_infinity(point) -> bool:
    return point is None or point is INFINITY or point == INFINITY


class GroupElement:
    """An element of the secp256k1 prime-order group."""

    __slots__ = ("_point", "_encoded")

    def __init__(self, point: Optional[PointJacobi]):
        object.__setattr__(self, "_point", None if _is_infinity(point) else point)
        object.__setattr__(self, "_encoded", None)

    def __setattr__(self, name, value):
        raise AttributeError("GroupElement is immutable")

    @classmethod
    def identity(cls) -> "GroupElement":
        return cls(None)

    def is_identity(self) -> bool:
        return self._point is None

    def __mul__(self, other: "GroupElement") -> "GroupElement":
        if not isinstance(other, GroupElement):
            return NotImplemented
        if self._point is None:
            return other
        if other._point is None:
            return self
        return GroupElement(self._point + other._point)

    def __pow__(self, k: Union[Scalar, int]) -> "GroupElement":
        k = int(k) % ORDER
        if self._point is None or k == 0:
            return GroupElement.identity()
        return GroupElement(self._point * k)

    def inverse(self) -> "GroupElement":
        if self._point is None:
            return self
        x, y = self._point.x(), self._point.y()
        return GroupElement(PointJacobi(CURVE, x, (-y) % FIELD_PRIME, 1, ORDER))

    def __truediv__(self, other: "GroupElement") -> "GroupElement":
        if not isinstance(other, GroupElement):
            return NotImplemented
        return self * other.inverse()

    def to_bytes(self) -> bytes:
        if self._encoded is None:
            encoded = _IDENTITY_BYTES if self._point is None else self._point.to_bytes("compressed")
            object.__setattr__(self, "_encoded", bytes(encoded))
        return self._encoded

    @classmethod
    def from_bytes(cls, data: bytes) -> "GroupElement":
        """Decode a compressed point; 33 zero bytes decode to the identity."""
        if len(data) != ELEMENT_BYTES:
            raise MalformedEncoding(f"group element must be {ELEMENT_BYTES} bytes, got {len(data)}")
        if data == _IDENTITY_BYTES:
            return cls.identity()
        if int.from_bytes(data[1:], "big") >= FIELD_PRIME:
            raise MalformedEncoding("x coordinate is not a field element")
        try:
            point = PointJacobi.from_bytes(CURVE, data, valid_encodings=("compressed",), order=ORDER)
        except (MalformedPointError, ValueError, AssertionError) as e:
            raise MalformedEncoding(f"not a curve point: {e}") from e
        return cls(point)

    def __eq__(self, other):
        if not isinstance(other, GroupElement):
            return NotImplemented
        return self.to_bytes() == other.to_bytes()

    def __hash__(self):
        return hash(("GroupElement", self.to_bytes()))

    def __repr__(self):
        return f"GroupElement({self.to_bytes().hex()})"


def product(elements: Iterable[GroupElement]) -> GroupElement:
    acc = GroupElement.identity()
    for element in elements:
        acc = acc * element
    return acc


# Generator g with ecdsa's precomputed table.
G = GroupElement(SECP256k1.generator)


def encode_fields(*fields: bytes) -> bytes:
    """Concatenate fields, each behind a 4-byte big-endian length."""
    return b"".join(len(f).to_bytes(4, "big") + f for f in fields)


def as_bytes(value) -> bytes:
    """Canonical bytes for anything that gets hashed or serialized."""
    if isinstance(value, (bytes, bytearray)):
        return bytes(value)
    if isinstance(value, (Scalar, GroupElement)):
        return value.to_bytes()
    if isinstance(value, bool):
        return b"\x01" if value else b"\x00"
    if isinstance(value, int):
        if value < 0:
            raise InvalidParameter("negative integers have no canonical encoding")
        return value.to_bytes(8, "big")
    if isinstance(value, str):
        return value.encode("utf-8")
    raise TypeError(f"cannot encode {type(value).__name__}")


class FieldReader:
    """Cursor over an ``encode_fields`` blob; every failure is a MalformedEncoding."""

    def __init__(self, data: bytes):
        self._data = bytes(data)
        self._pos = 0

    def take(self) -> bytes:
        if self._pos + 4 > len(self._data):
            raise MalformedEncoding("truncated length prefix")
        size = int.from_bytes(self._data[self._pos:self._pos + 4], "big")
        start = self._pos + 4
        if start + size > len(self._data):
            raise MalformedEncoding("field runs past end of input")
        self._pos = start + size
        return self._data[start:self._pos]

    def scalar(self) -> Scalar:
        return Scalar.from_bytes(self.take())

    def element(self) -> GroupElement:
        return GroupElement.from_bytes(self.take())

    def integer(self) -> int:
        raw = self.take()
        if len(raw) != 8:
            raise MalformedEncoding("integer field must be 8 bytes")
        return int.from_bytes(raw, "big")

    def tag(self, expected: bytes) -> None:
        if self.take() != expected:
            raise MalformedEncoding(f"expected tag {expected!r}")

    def done(self) -> None:
        if self._pos != len(self._data):
            raise MalformedEncoding("trailing bytes after last field")


def hash_to_scalar(domain: Union[bytes, str], parts: Sequence) -> Scalar:
    """SHA-512 over length-prefixed domain and parts, reduced modulo the order."""
    digest = hashlib.sha512(encode_fields(as_bytes(domain), *(as_bytes(p) for p in parts))).digest()
    return Scalar(int.from_bytes(digest, "big"))


def _map_to_group(tag: bytes, data: bytes) -> GroupElement:
    # try-and-increment onto even-y points
    for ctr in count():
        digest = hashlib.sha256(encode_fields(tag, data, ctr.to_bytes(4, "big"))).digest()
        if int.from_bytes(digest, "big") >= FIELD_PRIME:
            continue
        try:
            return GroupElement.from_bytes(b"\x02" + digest)
        except MalformedEncoding:
            continue
    raise AssertionError("unreachable")


@lru_cache(maxsize=1 << 16)
def hash_to_group(data: bytes) -> GroupElement:
    """Random-oracle map from bytes into the group; never returns the identity."""
    return _map_to_group(H_G_TAG, bytes(data))


def _second_generator() -> GroupElement:
    base = _map_to_group(U_TAG, b"proswap/u")
    point = base._point
    return GroupElement(PointJacobi(CURVE, point.x(), point.y(), 1, ORDER, generator=True))


# Independent generator u, never computed as a power of g.
U = _second_generator()


class Transcript:
    """Ordered, labelled record of everything a Fiat-Shamir challenge depends on."""

    def __init__(self, label: Union[bytes, str], absorbed: Iterable[Tuple[bytes, bytes]] = ()):
        self.label = as_bytes(label)
        self.absorbed: List[Tuple[bytes, bytes]] = list(absorbed)

    def absorb(self, tag: Union[bytes, str], *values) -> "Transcript":
        """Append one (tag, bytes) pair per value. Returns self for chaining."""
        tag = as_bytes(tag)
        for value in values:
            self.absorbed.append((tag, as_bytes(value)))
        return self

    def clone(self) -> "Transcript":
        return Transcript(self.label, self.absorbed)

    def serialize(self) -> bytes:
        return encode_fields(self.label, *(encode_fields(t, v) for t, v in self.absorbed))

    def __eq__(self, other):
        if not isinstance(other, Transcript):
            return NotImplemented
        return self.serialize() == other.serialize()

    def __repr__(self):
        return f"Transcript({self.label!r}, {len(self.absorbed)} entries)"


def fs_challenge(t: Transcript) -> Scalar:
    return hash_to_scalar(b"proswap/fs-challenge", [t.serialize()])


def _stream(seed: bytes) -> Iterator[int]:
    """Unbounded stream of 32-bit words expanded from seed in counter mode."""
    for ctr in count():
        block = hashlib.sha256(seed + ctr.to_bytes(8, "big")).digest()
        for i in range(0, 32, 4):
            yield int.from_bytes(block[i:i + 4], "big")


def _uniform_below(words: Iterator[int], bound: int) -> int:
    limit = (1 << 32) - ((1 << 32) % bound)
    for word in words:
        if word < limit:
            return word % bound
    raise AssertionError("unreachable")


def fs_subset(t: Transcript, n: int, k: int) -> Set[int]:
    """Deterministic size-k subset of {1..n} drawn from the transcript.

    A partial Fisher-Yates shuffle driven by an unbiased word stream, so every
    subset is equally likely when the transcript hash is uniform.
    """
    if k < 0 or n < 0 or k > n:
        raise InvalidParameter(f"cannot choose {k} of {n}")
    if n >= 1 << 32:
        raise InvalidParameter("subset universe too large")
    seed = hashlib.sha256(encode_fields(b"proswap/fs-subset", t.serialize(), as_bytes(n), as_bytes(k))).digest()
    words = _stream(seed)
    pool = list(range(1, n + 1))
    for i in range(k):
        j = i + _uniform_below(words, n - i)
        pool[i], pool[j] = pool[j], pool[i]
    return set(pool[:k])


def make_rng(seed: Optional[int]) -> Rng:
    """Seeded generator, or None to fall back to the OS CSPRNG."""
    return None if seed is None else np.random.default_rng(seed)


def random_bytes(n: int, rng: Rng = None) -> bytes:
    if rng is None:
        return secrets.token_bytes(n)
    return rng.bytes(n)


def random_below(bound: int, rng: Rng = None) -> int:
    """Uniform integer in [0, bound)."""
    if bound < 1:
        raise InvalidParameter("bound must be positive")
    if rng is None:
        return secrets.randbelow(bound)
    nbytes = max(1, (bound.bit_length() + 7) // 8) + 8
    space = 1 << (8 * nbytes)
    limit = space - space % bound
    while True:
        v = int.from_bytes(rng.bytes(nbytes), "big")
        if v < limit:
            return v % bound


def random_scalar(rng: Rng = None) -> Scalar:
    """Uniform nonzero scalar."""
    while True:
        s = Scalar(int.from_bytes(random_bytes(48, rng), "big"))
        if s:
            return s
