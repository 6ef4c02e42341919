"""Threshold-AHE protocol with client-side DGK comparisons.

Rounds: (1) ``[x_i]`` and ``[x_i^b]_i`` up; (2) DGK for every paired
(head, tail): bits to the tail, ``Z`` and ``[delta]`` relayed to the head,
``[b_ht]`` up; (3) one-column decryption requests over the permuted ``Y``,
partials up; (4) partials to combiners, ``[m^(j)]_1..n`` up, result down.
"""

from __future__ import annotations

import random
from typing import Mapping, Sequence

from .. import aheg
from ..compare import dgk_combine, dgk_dec, dgk_eva, encrypt_bits
from ..core import head_pairs, paired
from ..net.envelope import SERVER
from .base import ClientBase, ProtocolViolation, ServerBase
from .decreq import request_rows, row_decryptors


def compute_kre_ahe(
    G: Mapping[tuple[int, int], aheg.Ciphertext],
    X: Mapping[int, aheg.Ciphertext],
    k: int,
    pk: aheg.PublicKey,
    rng: random.Random,
    parties: Sequence[int] | None = None,
) -> dict[int, aheg.Ciphertext]:
    """``y_i = (r_i - k) * alpha_i + x_i`` with ``r_i`` assembled from paired entries of ``G``."""
    parties = sorted(X) if parties is None else list(parties)
    g = pk.group
    Y = {}
    for i in parties:
        r = aheg.trivial(g, 1)  # g_ii
        for j in parties:
            if j == i:
                continue
            key = (i, j) if paired(i, j) else (j, i)
            if key not in G:
                raise ValueError(f"missing comparison entry for pair {key}")
            r = aheg.add(r, G[key]) if key == (i, j) else aheg.add(r, aheg.sub(aheg.trivial(g, 1), G[key]))
        alpha = 1 + rng.randrange(g.order - 1)
        y = aheg.add(aheg.scalar_mul(aheg.sub(r, aheg.trivial(g, k)), alpha), X[i])
        Y[i] = aheg.rerandomize(pk, y, rng)
    return Y


class AheDgkClient(ClientBase):
    protocol = "ahe-dgk"

    def round1(self):
        rng = self.rng.fork("upload")
        payload = {
            "type": "upload",
            "x": aheg.encrypt(self.keys.common_pk, self.input.value, rng),
            "bits": list(encrypt_bits(self.personal.pk, self.distinct.bits, rng)),
        }
        return [self.env(SERVER, 1, payload)]

    def on_dgk(self, sender, rnd, p):
        self.roster = list(p["roster"])
        outs = []
        for h, enc_bits in sorted(p["eval"].items()):
            if not paired(h, self.index):
                raise ProtocolViolation(f"asked to evaluate for non-head {h}")
            rng = self.rng.fork("dgk", h)
            delta, z = dgk_eva(enc_bits, self.distinct.bits, self.pks[h], rng)
            d = aheg.encrypt(self.keys.common_pk, delta, rng)
            outs.append(self.env(h, 2, {"type": "dgk_z", "z": z, "d": d}))
        return outs

    def on_dgk_z(self, sender, rnd, p):
        t = sender
        if not paired(self.index, t):
            raise ProtocolViolation(f"DGK reply from {t}, who is not this party's tail")
        if len(p["z"]) != self.cfg.mu_prime:
            raise ProtocolViolation("DGK vector has the wrong width")
        delta_ij = dgk_dec(p["z"], self.personal.sk)
        rng = self.rng.fork("cmp", t)
        pk = self.keys.common_pk
        ct = aheg.rerandomize(pk, dgk_combine(p["d"], delta_ij, pk, rng), rng)
        return [self.env(SERVER, 2, {"type": "cmp", "peer": t, "ct": ct})]

    def on_decreq(self, sender, rnd, p):
        share = self.keys.ahe_share
        out = {}
        for row in p["rows"]:
            j, decryptors, combiner = row["row"], tuple(row["decryptors"]), row["combiner"]
            rng = self.rng.fork("partials", j)
            part = aheg.partial_decrypt(share, decryptors, row["ct"]).point
            out[j] = aheg.encrypt_point(self.pks[combiner], part, rng)
            if combiner == self.index:
                self.own_row = row
        return [self.env(SERVER, 3, {"type": "partials", "rows": out})]

    def on_forward(self, sender, rnd, p):
        row = self.own_row
        if p["row"] != row["row"] or sorted(p["partials"]) != sorted(row["decryptors"]):
            raise ProtocolViolation("forwarded partials do not match this party's row")
        g = self.group
        total = g.sum(aheg.decrypt_point(self.personal.sk, c) for c in p["partials"].values())
        value = aheg.decode_bounded(g, g.sub(row["ct"].c2, total), self.value_bound)
        self.m = 0 if value is None else value
        self.decoded = value is not None
        rng = self.rng.fork("m")
        cts = {j: aheg.encrypt(self.pks[j], self.m, rng) for j in self.roster}
        return [self.env(SERVER, 4, {"type": "m", "cts": cts})]

    def on_result(self, sender, rnd, p):
        return self.finish(self.decode(aheg.decrypt_point(self.personal.sk, p["ct"])))


class AheDgkServer(ServerBase):
    protocol = "ahe-dgk"
    fault_tolerant = True

    def __init__(self, *a, **kw):
        super().__init__(*a, **kw)
        self.uploads: dict[int, dict] = {}
        self.G: dict[tuple[int, int], aheg.Ciphertext] = {}
        self.pending: dict[int, int] = {}
        self.partials: dict[int, dict] = {}
        self.m_cts: dict[int, dict] = {}
        self.layout: dict[int, tuple[list[int], int]] = {}

    def on_upload(self, sender, rnd, p):
        if len(p["bits"]) != self.cfg.mu_prime:
            raise ProtocolViolation(f"bit encryption from {sender} has the wrong width")
        self.uploads[sender] = p
        if self.arrived("upload", sender):
            return self.after_upload()
        return []

    def after_upload(self):
        roster = list(self.live)
        live = set(roster)
        pairs = [(h, t) for h, t in head_pairs(self.cfg.n) if h in live and t in live]
        evals: dict[int, dict] = {i: {} for i in roster}
        self.pending = {i: 0 for i in roster}
        for h, t in pairs:
            evals[t][h] = self.uploads[h]["bits"]
            self.pending[h] += 1
        self.expect("cmp", [i for i in roster if self.pending[i]])
        return [self.env(i, 2, {"type": "dgk", "roster": roster, "eval": evals[i]}) for i in roster]

    def on_cmp(self, sender, rnd, p):
        t = p["peer"]
        if not paired(sender, t) or (sender, t) in self.G or self.pending.get(sender, 0) <= 0:
            raise ProtocolViolation(f"unexpected comparison result ({sender},{t})")
        self.G[sender, t] = p["ct"]
        self.pending[sender] -= 1
        if self.pending[sender] == 0 and self.arrived("cmp", sender):
            return self.send_decreq()
        return []

    def send_decreq(self):
        pk = self.keys.common_pk
        roster = list(self.live)
        n, t = len(roster), self.cfg.t
        X = {i: self.uploads[i]["x"] for i in roster}
        self.uploads.clear()
        Y = compute_kre_ahe(self.G, X, self.cfg.k, pk, self.rng.fork("kre"), roster)
        pi = [s + 1 for s in self.rng.fork("pi").permutation(n)]
        cts = {}
        for j in range(1, n + 1):
            cts[j] = Y[roster[pi[j - 1] - 1]]
            self.layout[j] = ([roster[d - 1] for d in row_decryptors(j, n, t)], roster[j - 1])
        outs = []
        for pos, i in enumerate(roster, start=1):
            rows = [
                {"row": j, "decryptors": self.layout[j][0], "combiner": self.layout[j][1], "ct": cts[j]}
                for j in request_rows(pos, n, t)
            ]
            outs.append(self.env(i, 3, {"type": "decreq", "rows": rows}))
        self.expect("partials", roster)
        return outs

    def on_partials(self, sender, rnd, p):
        self.partials[sender] = p["rows"]
        if not self.arrived("partials", sender):
            return []
        outs = []
        for j, (dec, comb) in sorted(self.layout.items()):
            fwd = {d: self.partials[d][j] for d in dec}
            outs.append(self.env(comb, 4, {"type": "forward", "row": j, "partials": fwd}))
        self.expect("m", self.live)
        return outs

    def on_m(self, sender, rnd, p):
        self.m_cts[sender] = p["cts"]
        if not self.arrived("m", sender):
            return []
        outs = []
        for i in self.live:
            total = aheg.add_all(self.m_cts[j][i] for j in self.live)
            total = aheg.rerandomize(self.pks[i], total, self.rng.fork("result", i))
            outs.append(self.env(i, 4, {"type": "result", "ct": total}))
        self.done()
        return outs
