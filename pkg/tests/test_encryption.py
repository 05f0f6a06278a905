"""
Tests for ElGamal encryption
"""
import pytest

from algebra import G, Scalar
from encryption import ElGamalCiphertext, eg_dec, eg_enc, eg_keygen
from errors import MalformedEncoding


class TestElGamal:
    """Encryption round trips and encodings"""

    def test_round_trip(self, rng):
        Z, z = eg_keygen(rng)
        M = G ** 42
        ct, _ = eg_enc(Z, M, rng)
        assert eg_dec(z, ct) == M

    def test_wrong_key_garbles(self, rng):
        Z, z = eg_keygen(rng)
        ct, _ = eg_enc(Z, G ** 42, rng)
        assert eg_dec(z + 1, ct) != G ** 42

    def test_explicit_randomness(self, rng):
        Z, _ = eg_keygen(rng)
        ct, alpha = eg_enc(Z, G, alpha=Scalar(3))
        assert alpha == 3
        assert ct.c1 == G ** 3
        assert ct.c2 == (Z ** 3) * G

    def test_fresh_randomness_each_time(self, rng):
        Z, _ = eg_keygen(rng)
        a, _ = eg_enc(Z, G, rng)
        b, _ = eg_enc(Z, G, rng)
        assert a != b

    def test_bytes(self, rng):
        Z, _ = eg_keygen(rng)
        ct, _ = eg_enc(Z, G, rng)
        assert ElGamalCiphertext.from_bytes(ct.to_bytes()) == ct
        with pytest.raises(MalformedEncoding):
            ElGamalCiphertext.from_bytes(ct.to_bytes()[:65])
