from collections import Counter

import pytest

from skre.proto.decreq import assignment, dec_req, request_rows, row_decryptors


@pytest.mark.parametrize("n", range(1, 9))
def test_every_row_to_t_clients_and_every_client_t_rows(n):
    for t in range(1, n + 1):
        seen = Counter()
        for i in range(1, n + 1):
            rows = request_rows(i, n, t)
            assert len(set(rows)) == t
            seen.update(rows)
            for j in rows:
                assert i in row_decryptors(j, n, t)
        assert all(seen[j] == t for j in range(1, n + 1))


def test_small_example_assignment():
    table = assignment(3, 2)
    assert {j: (sorted(d), c) for j, (d, c) in table.items()} == {1: ([1, 2], 1), 2: ([2, 3], 2), 3: ([1, 3], 3)}
    assert sorted(request_rows(1, 3, 2)) == [1, 3]


def test_combiner_is_a_decryptor():
    for n in range(1, 9):
        for t in range(1, n + 1):
            for j, (dec, comb) in assignment(n, t).items():
                assert comb in dec


def test_dec_req_uses_the_permutation():
    G = [["a1", "a2", "a3"], ["b1", "b2", "b3"], ["c1", "c2", "c3"]]
    req = dec_req(G, 1, 2, [2, 3, 1])
    assert req.rows == (3, 1) and req.source_rows == (1, 2)
    assert req.entries == (tuple(G[0]), tuple(G[1]))
    with pytest.raises(ValueError):
        dec_req(G, 1, 2, [1, 1, 2])
    with pytest.raises(ValueError):
        dec_req([["x"], ["y", "z"], ["w"]], 1, 2, [1, 2, 3])
    with pytest.raises(ValueError):
        request_rows(4, 3, 2)
