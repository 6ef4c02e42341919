import itertools

import pytest

from skre import aheg, garble
from skre.core import to_bits
from skre.rng import make_rng


def _eval(F, e, x, y, bi, bj, mu):
    gen = garble.encode(e, "gen", bi, to_bits(x, mu))
    eva = garble.encode(e, "eva", bj, to_bits(y, mu))
    return garble.evaluate(F, gen, eva)


@pytest.mark.parametrize("lam", [80, 128])
def test_comparator_all_inputs(lam):
    mu = 3
    F, e = garble.garble(garble.SharedSeed(b"s" * (lam // 8)), mu, lam)
    for x, y, bi, bj in itertools.product(range(2**mu), range(2**mu), (0, 1), (0, 1)):
        assert _eval(F, e, x, y, bi, bj, mu) == bi ^ bj ^ int(x >= y)


def test_shape_and_serialisation():
    F, _ = garble.garble(garble.SharedSeed(b"k" * 16), 11)
    assert F.and_gates == 11 and F.row_count == 44
    assert garble.GarbledComparator.from_bytes(F.to_bytes()) == F
    with pytest.raises(garble.GarbleError):
        garble.GarbledComparator.from_bytes(F.to_bytes()[:-1])
    bad = bytearray(F.to_bytes())
    bad[0] = 9
    with pytest.raises(garble.GarbleError):
        garble.GarbledComparator.from_bytes(bytes(bad))


def test_garbling_is_deterministic_in_seed():
    a, _ = garble.garble(garble.SharedSeed(b"a" * 16), 4)
    b, _ = garble.garble(garble.SharedSeed(b"a" * 16), 4)
    c, _ = garble.garble(garble.SharedSeed(b"c" * 16), 4)
    assert a == b and a != c


def test_dh_seed_is_symmetric(group):
    rng = make_rng(4)
    a, b = aheg.keygen(group, rng), aheg.keygen(group, rng)
    sa = garble.dh_seed(group, a.sk, b.pk.point, context=b"ctx")
    sb = garble.dh_seed(group, b.sk, a.pk.point, context=b"ctx")
    assert sa == sb and len(sa.key) == 16
    assert garble.dh_seed(group, a.sk, b.pk.point, context=b"other") != sa
    with pytest.raises(garble.GarbleError):
        garble.dh_seed(group, a.sk, None)


def test_encode_validates():
    _, e = garble.garble(garble.SharedSeed(b"k" * 16), 3)
    with pytest.raises(garble.GarbleError):
        garble.encode(e, "gen", 0, [0, 1])
    with pytest.raises(garble.GarbleError):
        garble.encode(e, "other", 0, [0, 1, 1])
    with pytest.raises(garble.GarbleError):
        garble.encode(e, "gen", 2, [0, 1, 1])
