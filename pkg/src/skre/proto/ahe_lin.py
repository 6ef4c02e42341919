"""Threshold-AHE protocol with server-side LinCompare.

Rounds: (1) ``[x_i]``, ``[V0]``, ``[V1]`` up; (2) permuted comparison rows
down as decryption requests, partial decryptions (re-encrypted to each
row's combiner) up; (3) partials forwarded to combiners, ``c~_l`` up;
(4) threshold decryption of ``c^`` by a t-subset and the result fan-out.

A row's combiner is one of its own decryptors, so it already holds the
row ciphertexts and finishes the decryption with them.
"""

from __future__ import annotations

from .. import aheg
from ..compare import lin_compare
from ..core import encode_zero_one
from ..net.envelope import SERVER
from .base import ClientBase, ProtocolViolation, ServerBase
from .decreq import request_rows, row_decryptors


def threshold_contribution(share, decryptors, c: aheg.Ciphertext, lead: bool):
    """This party's share of ``m*P``; the lead folds in ``A2``, the rest send ``-partial``."""
    g = c.group
    part = aheg.partial_decrypt(share, decryptors, c).point
    return g.sub(c.c2, part) if lead else g.neg(part)


class AheLinClient(ClientBase):
    protocol = "ahe-lin"

    def round1(self):
        pk = self.keys.common_pk
        enc = encode_zero_one(self.distinct, self.rng.fork("encoding"))
        rng = self.rng.fork("upload")
        payload = {
            "type": "upload",
            "x": aheg.encrypt(pk, self.input.value, rng),
            "v0": [aheg.encrypt(pk, v, rng) for v in enc.v0],
            "v1": [aheg.encrypt(pk, v, rng) for v in enc.v1],
        }
        return [self.env(SERVER, 1, payload)]

    def on_decreq(self, sender, rnd, p):
        self.roster = list(p["roster"])
        share = self.keys.ahe_share
        out = {}
        for row in p["rows"]:
            j, decryptors, combiner = row["row"], tuple(row["decryptors"]), row["combiner"]
            if self.index not in decryptors:
                raise ProtocolViolation(f"asked to decrypt row {j} without being a decryptor")
            rng = self.rng.fork("partials", j)
            pk_c = self.pks[combiner]
            out[j] = [
                [aheg.encrypt_point(pk_c, aheg.partial_decrypt(share, decryptors, c).point, rng) for c in entry]
                for entry in row["entries"]
            ]
            if combiner == self.index:
                self.own_row = row
                self.own_c = p["c"]
        return [self.env(SERVER, 2, {"type": "partials", "rows": out})]

    def on_forward(self, sender, rnd, p):
        row = self.own_row
        if p["row"] != row["row"]:
            raise ProtocolViolation("forwarded partials for a row this party does not combine")
        g = self.group
        partials = p["partials"]
        if sorted(partials) != sorted(row["decryptors"]):
            raise ProtocolViolation("partials missing for some decryptors")
        bits = []
        for e, entry in enumerate(row["entries"]):
            zero = False
            for u, c in enumerate(entry):
                total = g.sum(aheg.decrypt_point(self.personal.sk, partials[d][e][u]) for d in partials)
                if g.is_identity(g.sub(c.c2, total)):
                    zero = True
            bits.append(int(zero))
        self.row_bits = bits
        self.rank = sum(bits)
        rng = self.rng.fork("ctilde")
        pk = self.keys.common_pk
        if self.rank == self.cfg.k:
            ct = aheg.rerandomize(pk, self.own_c, rng)
        else:
            ct = aheg.encrypt(pk, 0, rng)
        return [self.env(SERVER, 3, {"type": "ctilde", "ct": ct})]

    def on_final(self, sender, rnd, p):
        decryptors = tuple(p["decryptors"])
        point = threshold_contribution(self.keys.ahe_share, decryptors, p["ct"], self.index == p["lead"])
        rng = self.rng.fork("reveal")
        cts = {j: aheg.encrypt_point(self.pks[j], point, rng) for j in self.roster}
        return [self.env(SERVER, 4, {"type": "reveal", "cts": cts})]

    def on_result(self, sender, rnd, p):
        g = self.group
        q = g.sum(aheg.decrypt_point(self.personal.sk, c) for c in p["cts"])
        return self.finish(self.decode(q))


def diagonal_entry(pk: aheg.PublicKey, width: int, rng) -> list[aheg.Ciphertext]:
    """Comparison-shaped vector with exactly one zero, standing in for ``b_ll = 1``."""
    zero_at = rng.randrange(width)
    return [
        aheg.encrypt(pk, 0 if u == zero_at else rng.nonzero_below(pk.group.order), rng)
        for u in range(width)
    ]


class AheLinServer(ServerBase):
    protocol = "ahe-lin"
    fault_tolerant = True

    def __init__(self, *a, **kw):
        super().__init__(*a, **kw)
        self.uploads: dict[int, dict] = {}
        self.partials: dict[int, dict] = {}
        self.ctildes: dict[int, aheg.Ciphertext] = {}
        self.reveals: dict[int, dict] = {}
        self.layout: dict[int, tuple[list[int], int]] = {}

    def on_upload(self, sender, rnd, p):
        if len(p["v0"]) != self.cfg.mu_prime or len(p["v1"]) != self.cfg.mu_prime:
            raise ProtocolViolation(f"encoding from {sender} has the wrong width")
        self.uploads[sender] = p
        if self.arrived("upload", sender):
            return self.after_upload()
        return []

    def after_upload(self):
        pk = self.keys.common_pk
        roster = list(self.live)
        n, t = len(roster), self.cfg.t
        G = {}
        for a in roster:
            for b in roster:
                if a == b:
                    G[a, b] = diagonal_entry(pk, self.cfg.mu_prime, self.rng.fork("diag", a))
                else:
                    G[a, b] = lin_compare(
                        self.uploads[a]["v1"], self.uploads[b]["v0"], pk, self.rng.fork("lin", a, b)
                    )
        pi0 = [s + 1 for s in self.rng.fork("pi", 0).permutation(n)]
        rows = {}
        for j in range(1, n + 1):
            owner = roster[pi0[j - 1] - 1]
            cols = self.rng.fork("pi", j).permutation(n)
            rows[j] = [G[owner, roster[q]] for q in cols]
            c = aheg.rerandomize(pk, self.uploads[owner]["x"], self.rng.fork("c", j))
            dec = [roster[d - 1] for d in row_decryptors(j, n, t)]
            self.layout[j] = (dec, roster[j - 1], c)
        self.uploads.clear()
        outs = []
        for pos, i in enumerate(roster, start=1):
            req = []
            own_c = None
            for j in request_rows(pos, n, t):
                dec, comb, c = self.layout[j]
                req.append({"row": j, "decryptors": dec, "combiner": comb, "entries": rows[j]})
                if comb == i:
                    own_c = c
            outs.append(self.env(i, 2, {"type": "decreq", "roster": roster, "rows": req, "c": own_c}))
        self.expect("partials", roster)
        return outs

    def on_partials(self, sender, rnd, p):
        self.partials[sender] = p["rows"]
        if not self.arrived("partials", sender):
            return []
        outs = []
        for j, (dec, comb, _) in sorted(self.layout.items()):
            fwd = {d: self.partials[d][j] for d in dec}
            outs.append(self.env(comb, 3, {"type": "forward", "row": j, "partials": fwd}))
        self.partials.clear()
        self.expect("ctilde", self.live)
        return outs

    def on_ctilde(self, sender, rnd, p):
        self.ctildes[sender] = p["ct"]
        if not self.arrived("ctilde", sender):
            return []
        pk = self.keys.common_pk
        rng = self.rng.fork("final")
        chat = aheg.rerandomize(pk, aheg.add_all(self.ctildes[i] for i in self.live), rng)
        self.decryptors = sorted(rng.sample(self.live, self.cfg.t))
        lead = self.decryptors[0]
        payload = {"type": "final", "ct": chat, "decryptors": self.decryptors, "lead": lead}
        self.expect("reveal", self.decryptors)
        return [self.env(i, 4, payload) for i in self.decryptors]

    def on_reveal(self, sender, rnd, p):
        self.reveals[sender] = p["cts"]
        if not self.arrived("reveal", sender):
            return []
        outs = []
        for i in self.live:
            cts = [self.reveals[d][i] for d in self.decryptors]
            outs.append(self.env(i, 4, {"type": "result", "cts": cts}))
        self.done()
        return outs
