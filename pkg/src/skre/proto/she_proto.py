"""SHE protocol: non-interactive evaluation at the server.

Rounds: (1) bitwise and packed encryptions up; (2) the server evaluates the
KRE circuit, every decryptor partially decrypts and seals its share to each
client, and the server fans the sealed shares out.

The debug backend shares its key n-out-of-n, so every live client is a
decryptor (t = n).
"""

from __future__ import annotations

from .. import aheg, she
from ..core import from_bits, strip_index, to_bits
from ..net.envelope import SERVER
from .base import ClientBase, ProtocolViolation, ServerBase


class SheClient(ClientBase):
    protocol = "she"

    def round1(self):
        ctx = self.keys.she_ctx
        rng = self.rng.fork("upload")
        mu_p = self.cfg.mu_prime
        payload = {
            "type": "upload",
            "bits": she.encrypt_bitwise(ctx, self.distinct.value, mu_p, rng),
            "packed": she.encrypt_packed(ctx, self.distinct.value, mu_p, rng),
        }
        return [self.env(SERVER, 1, payload)]

    def on_final(self, sender, rnd, p):
        part = she.partial_decrypt(self.keys.she_share, p["ct"], lead=self.index == p["lead"])
        rng = self.rng.fork("reveal")
        boxes = {j: aheg.seal(self.pks[j], part.to_bytes(), rng) for j in self.roster}
        return [self.env(SERVER, 2, {"type": "reveal", "boxes": boxes})]

    def on_result(self, sender, rnd, p):
        ctx = self.keys.she_ctx
        partials = [
            she.ShePartial.from_bytes(d, ctx.slots, aheg.open_sealed(self.personal.sk, box))
            for d, box in sorted(p["boxes"].items())
        ]
        slots = she.combine_partials(ctx, partials)
        value = from_bits([int(b) for b in slots[: self.cfg.mu_prime]])
        return self.finish(strip_index(value, self.cfg.n))


class SheServer(ServerBase):
    protocol = "she"

    def __init__(self, *a, **kw):
        super().__init__(*a, **kw)
        self.uploads: dict[int, dict] = {}
        self.reveals: dict[int, dict] = {}
        self.depth = 0

    def on_upload(self, sender, rnd, p):
        if len(p["bits"]) != self.cfg.mu_prime:
            raise ProtocolViolation(f"bit encryption from {sender} has the wrong width")
        self.uploads[sender] = p
        if self.arrived("upload", sender):
            return self.after_upload()
        return []

    def after_upload(self):
        ctx = self.keys.she_ctx
        roster = list(self.live)
        X = [self.uploads[i]["bits"] for i in roster]
        Z = [self.uploads[i]["packed"] for i in roster]
        c = [she.constant(ctx, b) for b in to_bits(self.cfg.k, she.counter_width(len(roster)))]
        with she.counting() as counter:
            out = she.compute_kre_she(X, Z, c)
        self.depth, self.mults = out.depth, counter.mults
        self.uploads.clear()
        self.decryptors = roster
        payload = {"type": "final", "ct": out, "lead": roster[0]}
        self.expect("reveal", roster)
        return [self.env(i, 2, payload) for i in roster]

    def on_reveal(self, sender, rnd, p):
        self.reveals[sender] = p["boxes"]
        if not self.arrived("reveal", sender):
            return []
        outs = []
        for i in self.live:
            boxes = {d: self.reveals[d][i] for d in self.decryptors}
            outs.append(self.env(i, 2, {"type": "result", "boxes": boxes}))
        self.done()
        return outs
