"""Shared test machinery: batched in-array Montgomery multiplication runs.

B operands are packed one per tile so a single command stream verifies many
cases at once.  B is reduced mod M at load time (Montgomery needs residue
multiplicands; the oracle value is unchanged by the reduction).
"""

from __future__ import annotations

from sramntt.bitparallel import (
    DirectEmitter,
    ExecPolicy,
    MontgomeryContext,
    default_rowmap,
    emit_modmul,
    emit_resolve,
    load_constants,
    pack_words,
    tiles_in,
    unpack_word,
)
from sramntt.subarray import Subarray

B_ROW = 0


class ModmulBench:
    """Reusable subarray wired for multiplications modulo one fixed modulus."""

    def __init__(self, modulus: int, width: int, rows: int = 32, cols: int = 256,
                 record: bool = False, verify: bool = True):
        self.ctx = MontgomeryContext.create(modulus, width)
        self.lane = self.ctx.lane_width
        self.tiles = tiles_in(cols, self.lane)
        self.arr = Subarray(rows, cols, record=record)
        self.rm = default_rowmap(rows, self.ctx, b_row=B_ROW)
        self.policy = ExecPolicy(verify_observations=verify)
        self.emitter = DirectEmitter(self.arr, self.rm, self.policy)
        load_constants(self.arr, self.rm, self.ctx)

    def run(self, a_value: int, b_values) -> list[int]:
        """One SIMD multiplication A * b_t * R^-1 mod M per tile; resolved values."""
        m = self.ctx.modulus
        reduced = [b % m for b in b_values]
        self.arr.write_row(B_ROW, pack_words(
            reduced + [0] * (self.tiles - len(reduced)), self.lane, self.arr.cols))
        emit_modmul(self.emitter, self.rm, a_value, self.ctx.width, b_row=B_ROW)
        emit_resolve(self.emitter, self.rm, self.rm.mask_row)
        bits = self.arr.read_row(self.rm.mask_row)
        return [unpack_word(bits, t, self.lane) for t in range(len(b_values))]


def modmul_value(a: int, b: int, modulus: int, width: int, **kw) -> int:
    """Single in-array Montgomery product (fresh bench per call)."""
    return ModmulBench(modulus, width, **kw).run(a, [b])[0]
