import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skre import aheg
from skre.group import get_group
from skre.rng import make_rng


@pytest.fixture(scope="module")
def kp(group):
    return aheg.keygen(group, make_rng(7))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**16 - 1), st.integers(0, 2**16 - 1), st.integers(1, 50))
def test_homomorphism(kp, a, b, s):
    rng = make_rng(a * 7 + b)
    ca, cb = aheg.encrypt(kp.pk, a, rng), aheg.encrypt(kp.pk, b, rng)
    assert aheg.decrypt(kp.sk, aheg.add(ca, cb), 2**18) == a + b
    assert aheg.decrypt(kp.sk, aheg.scalar_mul(ca, s), 2**23) == a * s
    assert aheg.decrypt(kp.sk, aheg.rerandomize(kp.pk, ca, rng), 2**16) == a
    if a >= b:
        assert aheg.decrypt(kp.sk, aheg.sub(ca, cb), 2**16) == a - b


def test_rerandomize_changes_bytes(kp, rng):
    c = aheg.encrypt(kp.pk, 3, rng)
    assert aheg.rerandomize(kp.pk, c, rng).to_bytes() != c.to_bytes()


def test_xor_plain(kp, rng):
    for a, b in itertools.product((0, 1), repeat=2):
        c = aheg.xor_plain(aheg.encrypt(kp.pk, a, rng), b, kp.pk, rng)
        assert aheg.decrypt(kp.sk, c, 2) == a ^ b


def test_trivial_and_add_all(kp, rng, group):
    cts = [aheg.encrypt(kp.pk, v, rng) for v in (1, 2, 3)] + [aheg.trivial(group, 4)]
    assert aheg.decrypt(kp.sk, aheg.add_all(cts), 16) == 10
    assert aheg.decrypt(kp.sk, aheg.negate(aheg.trivial(group, 0)), 2) == 0


def test_ciphertext_serialisation(kp, rng, group):
    c = aheg.encrypt(kp.pk, 5, rng)
    assert len(c.to_bytes()) == aheg.CIPHERTEXT_SIZE
    assert aheg.Ciphertext.from_bytes(group, c.to_bytes()) == c
    with pytest.raises(ValueError):
        aheg.Ciphertext.from_bytes(group, c.to_bytes()[:-1])


def test_bounded_decode(group):
    assert aheg.decode_bounded(group, None, 10) == 0
    assert aheg.decode_bounded(group, group.mul_base(2**16 - 1), 2**16) == 2**16 - 1
    assert aheg.decode_bounded(group, group.mul_base(2**16), 2**16) is None
    assert aheg.decode_bounded(group, group.mul_base(2**40 - 3), 2**40) == 2**40 - 3
    with pytest.raises(ValueError):
        aheg.decode_bounded(group, None, 2**41)


@pytest.mark.parametrize("n,t", [(1, 1), (3, 2), (5, 3), (4, 4)])
def test_threshold_subsets(group, n, t):
    rng = make_rng(n * 10 + t)
    pk, shares = aheg.threshold_keygen(group, n, t, rng)
    c = aheg.encrypt(pk, 42, rng)
    for subset in itertools.combinations(shares, t):
        ids = [s.index for s in subset]
        point = aheg.final_decrypt(c, [aheg.partial_decrypt(s, ids, c) for s in subset])
        assert aheg.decode_bounded(group, point, 64) == 42
        assert group.eq(pk.point, group.mul_base(aheg.reconstruct_secret(list(subset), group.order)))


def test_threshold_rejects_inconsistent_partials(group, rng):
    pk, shares = aheg.threshold_keygen(group, 4, 2, rng)
    c = aheg.encrypt(pk, 1, rng)
    p1 = aheg.partial_decrypt(shares[0], (1, 2), c)
    p3 = aheg.partial_decrypt(shares[2], (1, 3), c)
    with pytest.raises(aheg.DecryptionError):
        aheg.final_decrypt(c, [p1, p3])
    with pytest.raises(aheg.DecryptionError):
        aheg.final_decrypt(c, [p1])
    with pytest.raises(ValueError):
        aheg.partial_decrypt(shares[3], (1, 2), c)


def test_reference_curve_backend():
    g = get_group("secp256r1")
    rng = make_rng(3)
    kp = aheg.keygen(g, rng)
    assert aheg.decrypt(kp.sk, aheg.encrypt(kp.pk, 77, rng), 128) == 77


def test_sealed_box(kp, rng, group):
    msg = b"partial decryption share" * 3
    box = aheg.seal(kp.pk, msg, rng)
    assert aheg.open_sealed(kp.sk, box) == msg
    assert aheg.open_sealed(kp.sk, aheg.SealedBox.from_bytes(group, box.to_bytes())) == msg
    other = aheg.keygen(group, rng)
    assert aheg.open_sealed(other.sk, box) != msg
