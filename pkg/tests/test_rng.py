from skre.rng import make_rng


def test_streams_are_reproducible():
    assert make_rng(5).randbytes(40) == make_rng(5).randbytes(40)
    assert make_rng(5).randbytes(40) != make_rng(6).randbytes(40)


def test_forks_are_independent_of_parent_consumption():
    a, b = make_rng(9), make_rng(9)
    b.randbytes(100)
    assert a.fork("x", 1).getrandbits(128) == b.fork("x", 1).getrandbits(128)
    assert a.fork("x", 1).getrandbits(128) != a.fork("x", 2).getrandbits(128)


def test_helpers():
    r = make_rng(1)
    assert sorted(r.permutation(10)) == list(range(10))
    assert all(0 < r.nonzero_below(3) < 3 for _ in range(100))
    assert 0 <= r.randrange(7) < 7
