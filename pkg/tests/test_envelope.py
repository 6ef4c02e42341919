import pytest
from hypothesis import given
from hypothesis import strategies as st

from skre import aheg, garble
from skre.net.codec import Codec, GarbledInput, count_objects
from skre.net.envelope import HEADER, HEADER_SIZE, MAGIC, MAX_PAYLOAD, Envelope, EnvelopeError, FrameTooLarge, peek_header
from skre.rng import make_rng


@given(
    st.sampled_from([1, 2, 3, 4]),
    st.integers(0, 2**64 - 1),
    st.integers(0, 2**16 - 1),
    st.integers(0, 2**32 - 1),
    st.integers(0, 2**32 - 1),
    st.binary(max_size=300),
)
def test_round_trip(proto, session, rnd, sender, receiver, payload):
    env = Envelope(proto, session, rnd, sender, receiver, payload)
    data = env.to_bytes()
    assert len(data) == HEADER_SIZE + len(payload) and data[:4] == MAGIC
    assert Envelope.from_bytes(data) == env
    assert peek_header(data) == (proto, session, rnd, sender, receiver, len(payload))


def test_header_layout_is_fixed():
    env = Envelope(2, 0x0102030405060708, 3, 1, 0, b"xyz")
    assert env.to_bytes()[:HEADER_SIZE] == HEADER.pack(b"SKRE", 1, 2, 0x0102030405060708, 3, 1, 0, 3)
    assert HEADER_SIZE == 33


def test_rejects_malformed():
    good = Envelope(1, 1, 1, 1, 0, b"abc").to_bytes()
    for bad in (good[:10], b"XXXX" + good[4:], good[:4] + b"\x09" + good[5:], good + b"!", good[:-1]):
        with pytest.raises(EnvelopeError):
            Envelope.from_bytes(bad)
    with pytest.raises(EnvelopeError):
        Envelope(9, 1, 1, 1, 0, b"").to_bytes()
    with pytest.raises(EnvelopeError):
        Envelope.from_bytes(Envelope(1, 1, 1, 7, 0, b"").to_bytes(), n=5)


def test_oversize_payload():
    head = HEADER.pack(MAGIC, 1, 1, 1, 1, 1, 0, MAX_PAYLOAD + 1)
    with pytest.raises(FrameTooLarge):
        Envelope.from_bytes(head)
    with pytest.raises(FrameTooLarge):
        Envelope(1, 1, 1, 1, 0, bytes(MAX_PAYLOAD + 1)).to_bytes()


def test_codec_round_trip_and_counts(group):
    rng = make_rng(1)
    kp = aheg.keygen(group, rng)
    F, e = garble.garble(garble.SharedSeed(b"k" * 16), 4)
    labels = GarbledInput(garble.encode(e, "gen", 1, [0, 1, 1, 0]), 128)
    payload = {
        "type": "x",
        "cts": {1: aheg.encrypt(kp.pk, 1, rng), 2: [aheg.encrypt(kp.pk, 2, rng)]},
        "pk": kp.pk,
        "gc": [F, labels],
        "box": aheg.seal(kp.pk, b"hi", rng),
    }
    codec = Codec(group)
    blob = codec.dumps(payload)
    assert codec.dumps(codec.loads(blob)) == blob
    back = codec.loads(blob)
    assert aheg.decrypt(kp.sk, back["cts"][2][0], 4) == 2 and back["gc"][0] == F
    counts = count_objects(blob)
    assert counts["ahe"] == 2 and counts["points"] == 1 and counts["gc_rows"] == 16
    assert counts["labels"] == 5 and counts["sealed"] == 1


def test_codec_refuses_unknown_objects(group):
    with pytest.raises(Exception):
        Codec(group).dumps({"x": object()})
