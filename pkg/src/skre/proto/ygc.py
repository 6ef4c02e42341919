"""Garbled-circuit protocol with AHE unblinding under personal keys.

Rounds: (1) garbled circuits and inputs up, server evaluates; (2) blinded
bits down and the two-step unblinding relay; (3) ``[beta_i]_i`` down and
``[m_i]_1..[m_i]_n`` up; (4) ``[sum m]_i`` down.
"""

from __future__ import annotations

from .. import aheg, garble
from ..core import paired
from ..net.codec import GarbledInput
from ..net.envelope import SERVER
from .base import ClientBase, ProtocolViolation, ServerBase


def _pair(i: int, j: int) -> tuple[int, int]:
    return (i, j) if paired(i, j) else (j, i)


class YgcClient(ClientBase):
    protocol = "ygc"
    uses_dh = True

    def round1(self):
        i = self.index
        lam = self.cfg.lam
        bits = self.distinct.bits
        self.blinds: dict[int, int] = {}
        heads, tails = {}, {}
        ctx = self.session.to_bytes(8, "big")
        for j in self.roster:
            if j == i:
                continue
            h, t = _pair(i, j)
            seed = garble.dh_seed(
                self.group, self.dh.sk, self.dh_pubs[j].point, lam, ctx + bytes([0]) + f"{h},{t}".encode()
            )
            F, e = garble.garble(seed, self.cfg.mu_prime, lam)
            blind = self.rng.fork("blind", h, t).getrandbits(1)
            self.blinds[j] = blind
            if h == i:
                heads[j] = [F, GarbledInput(garble.encode(e, "gen", blind, bits), lam)]
            else:
                tails[j] = GarbledInput(garble.encode(e, "eva", blind, bits), lam)
        return [self.env(SERVER, 1, {"type": "gc", "heads": heads, "tails": tails})]

    def on_blinded(self, sender, rnd, p):
        outs = []
        for j, bprime in sorted(p["bits"].items()):
            # [b' ^ own blind]_i = [peer blind ^ b_ht]_i, relayed to the peer
            ct = aheg.encrypt(self.personal.pk, bprime ^ self.blinds[j], self.rng.fork("unblind", j))
            outs.append(self.env(j, 2, {"type": "unblind1", "ct": ct}))
        return outs

    def on_unblind1(self, sender, rnd, p):
        j = sender
        if j not in self.blinds:
            raise ProtocolViolation(f"unblinding message from non-peer {j}")
        rng = self.rng.fork("unblind2", j)
        ct = aheg.xor_plain(p["ct"], self.blinds[j], self.pks[j], rng)
        ct = aheg.rerandomize(self.pks[j], ct, rng)
        return [self.env(SERVER, 2, {"type": "unblind2", "peer": j, "ct": ct})]

    def on_beta(self, sender, rnd, p):
        q = aheg.decrypt_point(self.personal.sk, p["ct"])
        m = self.input.value if self.group.is_identity(q) else 0
        cts = {j: aheg.encrypt(self.pks[j], m, self.rng.fork("m", j)) for j in self.roster}
        return [self.env(SERVER, 3, {"type": "m", "cts": cts})]

    def on_result(self, sender, rnd, p):
        return self.finish(self.decode(aheg.decrypt_point(self.personal.sk, p["ct"])))


class YgcServer(ServerBase):
    protocol = "ygc"

    def __init__(self, *a, **kw):
        super().__init__(*a, **kw)
        self.uploads: dict[int, dict] = {}
        self.blinded: dict[tuple[int, int], int] = {}
        self.enc_bits: dict[tuple[int, int], aheg.Ciphertext] = {}
        self.pending: dict[int, int] = {}
        self.m_cts: dict[int, dict] = {}

    def pairs(self):
        return [_pair(a, b) for a in self.live for b in self.live if a < b]

    def on_gc(self, sender, rnd, p):
        self.uploads[sender] = p
        if self.arrived("upload", sender):
            return self.after_upload()
        return []

    def after_upload(self):
        for h, t in self.pairs():
            try:
                F, gin = self.uploads[h]["heads"][t]
                ein = self.uploads[t]["tails"][h]
            except (KeyError, ValueError) as exc:
                raise ProtocolViolation(f"missing garbled material for pair ({h},{t})") from exc
            self.blinded[(h, t)] = garble.evaluate(F, gin.labels, ein.labels)
        self.uploads.clear()
        self.expect("unblind", self.live)
        self.pending = {i: len(self.live) - 1 for i in self.live}
        outs = []
        for i in self.live:
            bits = {}
            for (h, t), b in self.blinded.items():
                if i in (h, t):
                    bits[t if i == h else h] = b
            outs.append(self.env(i, 2, {"type": "blinded", "bits": bits}))
        return outs

    def on_unblind2(self, sender, rnd, p):
        if self.phase != "unblind" or self.pending.get(sender, 0) <= 0:
            raise ProtocolViolation(f"unexpected unblinding reply from {sender}")
        peer = p["peer"]
        h, t = _pair(sender, peer)
        if sender == t:
            self.enc_bits[(h, t)] = p["ct"]  # [b_ht]_h
        else:
            self.enc_bits[(t, h)] = aheg.sub(aheg.trivial(self.group, 1), p["ct"])  # [b_th]_t
        self.pending[sender] -= 1
        if self.pending[sender] == 0 and self.arrived("unblind", sender):
            return self.send_beta()
        return []

    def send_beta(self):
        outs = []
        g = self.group
        for i in self.live:
            r = aheg.trivial(g, 1)
            for j in self.live:
                if j != i:
                    r = aheg.add(r, self.enc_bits[(i, j)])
            rng = self.rng.fork("beta", i)
            alpha = rng.nonzero_below(g.order)
            beta = aheg.scalar_mul(aheg.sub(r, aheg.trivial(g, self.cfg.k)), alpha)
            beta = aheg.rerandomize(self.pks[i], beta, rng)
            outs.append(self.env(i, 3, {"type": "beta", "ct": beta}))
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

