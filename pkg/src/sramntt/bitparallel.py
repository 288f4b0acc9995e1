"""Bit-parallel carry-save Montgomery multiplication and modular add/sub.

Everything here compiles down to the five subarray micro-ops and runs SIMD
across all tiles at once.  A multiplication by the compile-time constant A
("the twiddle") is a CommandStream: the bits of A decide which iterations get
the add-multiplicand block, so A never exists in the array at runtime.

Word layout: one operand word per row per tile, LSB at tile column offset 0.
The Montgomery word width is ``ctx.width`` (R = 2**width); words occupy
``ctx.lane_width`` columns, which is width+1 when the modulus has no headroom
bit (M >= 2**(width-1)).  With a headroom bit the running value Sum + 2*Carry
stays below 2M <= 2**lane, which makes three invariants provable:

* the carry word's top lane bit is 0 before every left shift,
* the half-sum's low bit is 0 before every right shift (Montgomery parity),
* therefore every bit a global shift pushes across a tile edge is 0.

The executor can check all three on the fly (``verify_observations``).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import AddressError, ObservationError, ParameterError, TileGeometryError
from .subarray import (
    ACTIVATE2,
    AND,
    GLOBAL,
    LEFT,
    OR,
    RIGHT,
    SHIFT,
    TILE,
    WRITEBACK,
    XOR,
    Subarray,
    apply_op,
)


def full_tile_edges(cols: int, lane: int) -> tuple[int, int]:
    """LSB/MSB column masks of the full lanes only (remainder zone excluded)."""
    lsb = msb = 0
    for t in range(cols // lane):
        lsb |= 1 << (t * lane)
        msb |= 1 << (t * lane + lane - 1)
    return lsb, msb


@dataclass(frozen=True)
class MontgomeryContext:
    """Modulus M, word width n (R = 2**n) and the derived lane geometry.

    The radix-2 loop needs no precomputed -M^-1 constant, so none is stored.
    """

    modulus: int
    width: int
    lane_width: int

    @classmethod
    def create(cls, modulus: int, width: int, lane_width: int | None = None) -> "MontgomeryContext":
        if width <= 2:
            raise ParameterError(f"word width must exceed 2, got {width}")
        if modulus % 2 == 0 or not 2 < modulus < (1 << width):
            raise ParameterError(
                f"modulus must be odd with 2 < M < 2^{width}, got {modulus}"
            )
        if lane_width is None:
            # One headroom column keeps Sum + 2*Carry < 2M representable.
            lane_width = width if modulus < (1 << (width - 1)) else width + 1
        if lane_width < width:
            raise ParameterError("lane narrower than the Montgomery word")
        return cls(modulus=modulus, width=width, lane_width=lane_width)

    @property
    def radix(self) -> int:
        return 1 << self.width

    @property
    def radix_inverse(self) -> int:
        return pow(self.radix, -1, self.modulus)

    @property
    def has_headroom(self) -> bool:
        return self.modulus < (1 << (self.lane_width - 1))


@dataclass(frozen=True)
class ExecPolicy:
    """Execution knobs: static worst-case loops vs. zero-test exits, shift scoping."""

    deterministic: bool = True
    tile_scope_all: bool = False
    verify_observations: bool = False


@dataclass(frozen=True)
class RowMap:
    """Row assignment for one multiplication: operands, the six scratch rows
    (Sum, Carry, three half-adder temporaries, the predication mask m) and the
    constant rows the micro-op sequences lean on."""

    tile_width: int
    sum_row: int
    carry_row: int
    aux1: int
    aux2: int
    aux3: int
    mask_row: int
    zeros: int
    ones: int
    lsb_mask: int
    msb_mask: int
    modulus_row: int
    neg_modulus_row: int
    b_row: int | None = None
    tile_origin: int = 0

    def scratch_rows(self) -> tuple[int, ...]:
        return (self.sum_row, self.carry_row, self.aux1, self.aux2, self.aux3, self.mask_row)

    def constant_rows(self) -> tuple[int, ...]:
        return (self.zeros, self.ones, self.lsb_mask, self.msb_mask,
                self.modulus_row, self.neg_modulus_row)

    def validate(self) -> None:
        rows = self.scratch_rows() + self.constant_rows()
        if self.b_row is not None:
            rows = rows + (self.b_row,)
        if len(set(rows)) != len(rows):
            raise AddressError("row map assigns one row to two roles")
        if self.tile_width < 2:
            raise TileGeometryError("tile width must be >= 2")


@dataclass
class CommandStream:
    """Compiled micro-op sequence for one multiplication by the constant A."""

    ops: list[tuple]
    twiddle: int
    width: int
    lane_width: int
    obs_marks: dict[int, str] = field(default_factory=dict)
    step_marks: list[tuple[int, tuple]] = field(default_factory=list)

    def count(self, kind: str) -> int:
        return sum(1 for op in self.ops if op[0] == kind)

    def global_shift_count(self) -> int:
        return sum(1 for op in self.ops if op[0] == SHIFT and op[2] == GLOBAL)

    def tile_shift_count(self) -> int:
        return sum(1 for op in self.ops if op[0] == SHIFT and op[2] == TILE)


# -- constants setup --------------------------------------------------------

def tiles_in(cols: int, lane: int) -> int:
    return cols // lane


def pack_words(values, lane: int, cols: int) -> int:
    """Per-tile words -> one row int (word t lands at columns [t*lane, (t+1)*lane))."""
    row = 0
    limit = 1 << lane
    for t, v in enumerate(values):
        if not 0 <= v < limit:
            raise ParameterError(f"word {v} does not fit a {lane}-bit lane")
        row |= v << (t * lane)
    if row >= (1 << cols):
        raise ParameterError("packed words exceed the array width")
    return row


def unpack_word(row: int, tile: int, lane: int) -> int:
    return (row >> (tile * lane)) & ((1 << lane) - 1)


def broadcast_word(value: int, lane: int, cols: int) -> int:
    return pack_words([value] * tiles_in(cols, lane), lane, cols)


def load_constants(arr: Subarray, rm: RowMap, ctx: MontgomeryContext) -> None:
    """Write the constant rows (replicated per tile) through the host port.

    The all-ones row is tile-masked (zero in any partial remainder zone) so
    complements computed against it never seed live bits outside the lanes;
    that keeps every bit a global shift can inject across a tile edge zero.
    """
    lane = ctx.lane_width
    cols = arr.cols
    neg_m = (1 << lane) - ctx.modulus
    arr.write_row(rm.zeros, 0)
    arr.write_row(rm.ones, broadcast_word((1 << lane) - 1, lane, cols))
    arr.write_row(rm.lsb_mask, broadcast_word(1, lane, cols))
    arr.write_row(rm.msb_mask, broadcast_word(1 << (lane - 1), lane, cols))
    arr.write_row(rm.modulus_row, broadcast_word(ctx.modulus, lane, cols))
    arr.write_row(rm.neg_modulus_row, broadcast_word(neg_m, lane, cols))


def default_rowmap(arr_rows: int, ctx: MontgomeryContext, b_row: int | None = None) -> RowMap:
    """Scratch at the top of the array, constants just below (standalone use)."""
    top = arr_rows
    rm = RowMap(
        tile_width=ctx.lane_width,
        sum_row=top - 1, carry_row=top - 2, aux1=top - 3, aux2=top - 4,
        aux3=top - 5, mask_row=top - 6,
        zeros=top - 7, ones=top - 8, lsb_mask=top - 9, msb_mask=top - 10,
        modulus_row=top - 11, neg_modulus_row=top - 12,
        b_row=b_row,
    )
    rm.validate()
    return rm


# -- emitters ---------------------------------------------------------------

class DirectEmitter:
    """Executes micro-ops on a subarray as they are emitted (array records the trace)."""

    __slots__ = ("arr", "rm", "policy", "_full_lsb", "_full_msb", "step_callback")

    def __init__(self, arr: Subarray, rm: RowMap, policy: ExecPolicy, step_callback=None):
        self.arr = arr
        self.rm = rm
        self.policy = policy
        self.step_callback = step_callback
        # Edge masks over full tiles only; the partial remainder zone holds no data.
        self._full_lsb, self._full_msb = full_tile_edges(arr.cols, rm.tile_width)

    def act(self, a: int, b: int, mode: str) -> None:
        self.arr.activate_pair(a, b, mode)

    def wb(self, row: int) -> None:
        self.arr.latch_writeback(row)

    def shift_data(self, direction: str, obs: str | None = None) -> None:
        """Arithmetic 1-bit shift; global unless the policy masks everything."""
        if obs is not None and self.policy.verify_observations:
            latch = self.arr.latch
            if obs == "msb" and latch & self._full_msb:
                raise ObservationError("carry word has a live top bit before a left shift")
            if obs == "lsb" and latch & self._full_lsb:
                raise ObservationError("half-sum has a live low bit before a right shift")
        if self.policy.tile_scope_all:
            self.arr.shift_latch(direction, TILE, self.rm.tile_width, self.rm.tile_origin)
        else:
            self.arr.shift_latch(direction, GLOBAL)

    def shift_mask(self, direction: str) -> None:
        """Predication-mask smear shift; always tile-masked."""
        self.arr.shift_latch(direction, TILE, self.rm.tile_width, self.rm.tile_origin)

    def ztest(self) -> bool:
        return self.arr.latch_is_zero()

    def step(self, tag: tuple) -> None:
        if self.step_callback is not None:
            self.step_callback(tag, self.arr)


class CollectEmitter:
    """Builds a CommandStream instead of touching an array (deterministic flows only)."""

    __slots__ = ("rm", "policy", "ops", "obs_marks", "step_marks")

    def __init__(self, rm: RowMap, policy: ExecPolicy):
        self.rm = rm
        self.policy = policy
        self.ops: list[tuple] = []
        self.obs_marks: dict[int, str] = {}
        self.step_marks: list[tuple[int, tuple]] = []

    def act(self, a: int, b: int, mode: str) -> None:
        self.ops.append((ACTIVATE2, a, b, mode))

    def wb(self, row: int) -> None:
        self.ops.append((WRITEBACK, row))

    def shift_data(self, direction: str, obs: str | None = None) -> None:
        if obs is not None:
            self.obs_marks[len(self.ops)] = obs
        if self.policy.tile_scope_all:
            self.ops.append((SHIFT, direction, TILE, self.rm.tile_width, self.rm.tile_origin))
        else:
            self.ops.append((SHIFT, direction, GLOBAL, 0, 0))

    def shift_mask(self, direction: str) -> None:
        self.ops.append((SHIFT, direction, TILE, self.rm.tile_width, self.rm.tile_origin))

    def ztest(self) -> bool:
        raise ParameterError("zero-test loops cannot be compiled ahead of time")

    def step(self, tag: tuple) -> None:
        self.step_marks.append((len(self.ops) - 1, tag))


ACTIVATE2_KIND = "ACTIVATE2"
WRITEBACK_KIND = "WRITEBACK"


# -- micro-op sequences ------------------------------------------------------

def emit_select_m(E, rm: RowMap) -> None:
    """mask_row := M where LSB(Sum)=1, else 0, independently per tile.

    Isolates the low bit of Sum, widens it across the tile by shift+OR
    doubling, then masks the modulus row with it.
    """
    E.act(rm.sum_row, rm.lsb_mask, AND)
    E.wb(rm.mask_row)
    emit_smear(E, rm, rm.mask_row, rm.aux3, toward_msb=True)
    E.act(rm.mask_row, rm.modulus_row, AND)
    E.wb(rm.mask_row)


def emit_smear(E, rm: RowMap, row: int, temp: int, toward_msb: bool) -> None:
    """Widen a one-bit-per-tile mask to the whole tile by doubling rounds.

    Precondition: the latch still holds `row` (true right after its writeback).
    Doubling needs ceil(log2 w) OR rounds; the hardware shifts one bit per
    micro-op, so a stride-s round costs s shift pulses (w-1 pulses in total).
    """
    w = rm.tile_width
    direction = LEFT if toward_msb else RIGHT
    span = 1
    while span < w:
        stride = min(span, w - span)
        for _ in range(stride):
            E.shift_mask(direction)
        E.wb(temp)
        E.act(row, temp, OR)
        E.wb(row)
        span += stride


def emit_modmul(E, rm: RowMap, a_value: int, width: int, b_row: int | None = None) -> None:
    """The carry-save Montgomery loop for the compile-time constant A = a_value.

    Emits a 3-op prologue zeroing Sum and Carry (leaving latch == Carry), then
    per bit position i in [0, width): the add-B block when a_i is 1, always
    followed by the m-selection and halving block.  Invariant between
    iterations: the last writeback was Carry, so the latch already holds the
    word the next left shift needs.
    """
    if b_row is None:
        b_row = rm.b_row
    if b_row is None:
        raise AddressError("no multiplicand row bound")
    E.act(rm.zeros, rm.ones, AND)
    E.wb(rm.sum_row)
    E.wb(rm.carry_row)
    for i in range(width):
        if (a_value >> i) & 1:
            E.shift_data(LEFT, obs="msb")      # Carry << 1
            E.wb(rm.carry_row)
            E.act(rm.sum_row, b_row, AND)      # c1
            E.wb(rm.aux1)
            E.act(rm.sum_row, b_row, XOR)      # s1
            E.wb(rm.aux2)
            E.step((i, 1))
            E.act(rm.carry_row, rm.aux2, AND)  # c2
            E.wb(rm.aux3)
            E.act(rm.carry_row, rm.aux2, XOR)  # Sum
            E.wb(rm.sum_row)
            E.step((i, 2))
            E.act(rm.aux1, rm.aux3, OR)        # Carry = c1 | c2
            E.wb(rm.carry_row)
            E.step((i, 3))
        emit_select_m(E, rm)
        E.act(rm.sum_row, rm.mask_row, AND)    # c1
        E.wb(rm.aux1)
        E.act(rm.sum_row, rm.mask_row, XOR)    # s1
        E.wb(rm.aux2)
        E.shift_data(RIGHT, obs="lsb")         # s1 >> 1
        E.wb(rm.aux2)
        E.step((i, 4))
        E.act(rm.aux2, rm.aux1, AND)           # c2
        E.wb(rm.aux3)
        E.act(rm.aux2, rm.aux1, XOR)           # s2 (c1's row is free)
        E.wb(rm.aux1)
        E.step((i, 5))
        E.act(rm.carry_row, rm.aux1, AND)      # c3 (s1's row is free)
        E.wb(rm.aux2)
        E.act(rm.carry_row, rm.aux1, XOR)      # Sum
        E.wb(rm.sum_row)
        E.step((i, 6))
        E.act(rm.aux3, rm.aux2, OR)            # Carry = c2 | c3
        E.wb(rm.carry_row)
        E.step((i, 7))


def emit_add(E, rm: RowMap, x_row: int, y_row: int, dest_row: int,
             tmp_a: int, tmp_b: int, cs_row: int, deterministic: bool = True) -> None:
    """dest := (x + y) mod 2^lane per tile, by iterated half-add + carry shift.

    Deterministic mode unrolls the worst case (lane_width iterations, after
    which the tile-masked carry word is provably zero); otherwise the loop
    exits on the wired-OR zero test.
    """
    w = rm.tile_width
    E.act(x_row, y_row, XOR)
    E.wb(tmp_a)
    E.act(x_row, y_row, AND)                   # latch = carry word
    cur, other = tmp_a, tmp_b
    if deterministic:
        for k in range(w):
            E.shift_mask(LEFT)
            E.wb(cs_row)
            last = k == w - 1
            target = dest_row if last else other
            E.act(cur, cs_row, XOR)
            E.wb(target)
            if not last:
                E.act(cur, cs_row, AND)
                cur, other = target, cur
        return
    for _ in range(w):
        E.shift_mask(LEFT)
        E.wb(cs_row)
        E.act(cur, cs_row, XOR)
        E.wb(other)
        E.act(cur, cs_row, AND)
        cur, other = other, cur
        if E.ztest():
            break
    if cur != dest_row:
        E.act(cur, rm.zeros, OR)
        E.wb(dest_row)


def emit_add3(E, rm: RowMap, x_row: int, y_row: int, z_row: int, dest_row: int,
              p_row: int, cb_row: int, tmp_a: int, deterministic: bool = True) -> None:
    """dest := (x + y + z) mod 2^lane; one carry-save layer, then the add loop.

    The two partial carry words are disjoint (x&y vs (x^y)&z), so OR merges
    them exactly.  Reuses p_row for the second carry and cb_row for the
    shifted carry inside the loop.
    """
    w = rm.tile_width
    E.act(x_row, y_row, XOR)
    E.wb(p_row)
    E.act(p_row, z_row, XOR)
    E.wb(tmp_a)
    E.act(p_row, z_row, AND)
    E.wb(cb_row)
    E.act(x_row, y_row, AND)
    E.wb(p_row)
    E.act(p_row, cb_row, OR)                   # latch = merged carry word
    cur, other = tmp_a, p_row
    if deterministic:
        for k in range(w):
            E.shift_mask(LEFT)
            E.wb(cb_row)
            last = k == w - 1
            target = dest_row if last else other
            E.act(cur, cb_row, XOR)
            E.wb(target)
            if not last:
                E.act(cur, cb_row, AND)
                cur, other = target, cur
        return
    for _ in range(w):
        E.shift_mask(LEFT)
        E.wb(cb_row)
        E.act(cur, cb_row, XOR)
        E.wb(other)
        E.act(cur, cb_row, AND)
        cur, other = other, cur
        if E.ztest():
            break
    if cur != dest_row:
        E.act(cur, rm.zeros, OR)
        E.wb(dest_row)


def emit_mask_select(E, rm: RowMap, take_row: int, else_row: int, sel_row: int,
                     tmp: int, dest_row: int) -> None:
    """dest := (take AND sel) OR (else AND NOT sel); sel is a full-tile mask.

    The complement is an XOR against the tile-masked ones row, so lanes are
    inverted but no bit appears outside them.
    """
    E.act(take_row, sel_row, AND)
    E.wb(take_row)
    E.act(sel_row, rm.ones, XOR)
    E.wb(tmp)
    E.act(else_row, tmp, AND)
    E.wb(else_row)
    E.act(take_row, else_row, OR)
    E.wb(dest_row)


def emit_resolve(E, rm: RowMap, dest_row: int, deterministic: bool = True) -> None:
    """dest := ((Sum + 2*Carry) conditionally minus M) per tile, in [0, M).

    Precondition: the latch holds Carry (always true right after the modmul
    loop).  t = Sum + Carry<<1 < 2M fits the lane; u = t - M mod 2^lane has an
    unambiguous sign bit thanks to the headroom column, and a smeared sign
    mask selects t (u negative) or u.
    """
    E.shift_data(LEFT, obs="msb")              # Carry << 1, provably lossless
    E.wb(rm.carry_row)
    emit_add(E, rm, rm.sum_row, rm.carry_row, rm.aux1,
             rm.aux2, rm.aux3, rm.mask_row, deterministic)          # t
    emit_add(E, rm, rm.aux1, rm.neg_modulus_row, rm.aux2,
             rm.aux3, rm.mask_row, rm.carry_row, deterministic)     # u = t - M
    E.act(rm.aux2, rm.msb_mask, AND)
    E.wb(rm.aux3)
    emit_smear(E, rm, rm.aux3, rm.mask_row, toward_msb=False)       # L = sign(u)
    emit_mask_select(E, rm, rm.aux1, rm.aux2, rm.aux3, rm.mask_row, dest_row)


def emit_modadd(E, rm: RowMap, a_row: int, b_row: int, dest_row: int,
                pool: tuple[int, int, int, int, int], deterministic: bool = True) -> None:
    """dest := (a + b) mod M.  Needs the headroom bit (M < 2^(lane-1))."""
    t_row, u_row, l_row, tmp, cs = pool
    emit_add(E, rm, a_row, b_row, t_row, u_row, l_row, cs, deterministic)
    emit_add(E, rm, t_row, rm.neg_modulus_row, u_row, l_row, tmp, cs, deterministic)
    E.act(u_row, rm.msb_mask, AND)
    E.wb(l_row)
    emit_smear(E, rm, l_row, tmp, toward_msb=False)   # set iff a+b < M: keep t
    emit_mask_select(E, rm, t_row, u_row, l_row, tmp, dest_row)


def emit_modsub(E, rm: RowMap, a_row: int, b_row: int, dest_row: int,
                pool: tuple[int, int, int, int, int], deterministic: bool = True) -> None:
    """dest := (a - b) mod M via two's complement; conditional +M by sign mask."""
    p1, p2, p3, p4, p5 = pool
    E.act(b_row, rm.ones, XOR)                         # ~b within the lane
    E.wb(p1)
    emit_add3(E, rm, a_row, p1, rm.lsb_mask, p2, p3, p4, p5, deterministic)  # u = a-b
    emit_add(E, rm, p2, rm.modulus_row, p3, p4, p5, p1, deterministic)       # w = u+M
    E.act(p2, rm.msb_mask, AND)
    E.wb(p4)
    emit_smear(E, rm, p4, p5, toward_msb=False)        # set iff a < b: take w
    emit_mask_select(E, rm, p3, p2, p4, p5, dest_row)


# -- public operations -------------------------------------------------------

def compile_twiddle_commands(a_value: int, ctx: MontgomeryContext, rm: RowMap,
                             b_row: int | None = None,
                             policy: ExecPolicy = ExecPolicy()) -> CommandStream:
    """Compile the multiplication-by-A micro-op stream (A appears only here).

    The stream starts with a 3-op prologue establishing Sum = Carry = 0 and
    contains, per bit position, the add-B block exactly when that bit of A is
    set; no data-dependent test on A remains at runtime.
    """
    if not 0 <= a_value < ctx.radix:
        raise ParameterError(f"twiddle {a_value} outside [0, 2^{ctx.width})")
    rm.validate()
    E = CollectEmitter(rm, policy)
    emit_modmul(E, rm, a_value, ctx.width, b_row)
    return CommandStream(ops=E.ops, twiddle=a_value, width=ctx.width,
                         lane_width=ctx.lane_width, obs_marks=E.obs_marks,
                         step_marks=E.step_marks)


def run_stream(arr: Subarray, stream: CommandStream, rm: RowMap,
               verify: bool = False, step_callback=None) -> None:
    """Execute a compiled stream; optionally check the shift-edge invariants."""
    if not verify and step_callback is None:
        for op in stream.ops:
            apply_op(arr, op)
        return
    lsb_edges, msb_edges = full_tile_edges(arr.cols, rm.tile_width)
    marks = stream.obs_marks
    steps = dict(stream.step_marks)
    for idx, op in enumerate(stream.ops):
        if verify and idx in marks:
            obs = marks[idx]
            latch = arr.latch
            if obs == "msb" and latch & msb_edges:
                raise ObservationError("carry word has a live top bit before a left shift")
            if obs == "lsb" and latch & lsb_edges:
                raise ObservationError("half-sum has a live low bit before a right shift")
        apply_op(arr, op)
        if step_callback is not None and idx in steps:
            step_callback(steps[idx], arr)


def bp_modmul(arr: Subarray, stream: CommandStream, rm: RowMap,
              verify: bool = False, step_callback=None) -> tuple[int, int]:
    """Run a compiled twiddle stream; the product lands carry-save in (Sum, Carry)."""
    run_stream(arr, stream, rm, verify=verify, step_callback=step_callback)
    return rm.sum_row, rm.carry_row


def select_m(arr: Subarray, rm: RowMap, policy: ExecPolicy = ExecPolicy()) -> int:
    """Standalone m-selection: mask_row := M * LSB(Sum) per tile."""
    emit_select_m(DirectEmitter(arr, rm, policy), rm)
    return rm.mask_row


def resolve_carry_save(arr: Subarray, rm: RowMap, ctx: MontgomeryContext,
                       dest_row: int | None = None,
                       policy: ExecPolicy = ExecPolicy()) -> int:
    """Collapse (Sum, Carry) to a single row holding the residue < M."""
    if dest_row is None:
        dest_row = rm.mask_row
    E = DirectEmitter(arr, rm, policy)
    emit_resolve(E, rm, dest_row, policy.deterministic)
    return dest_row


def bp_add(arr: Subarray, rm: RowMap, a_row: int, b_row: int,
           dest_row: int | None = None, policy: ExecPolicy = ExecPolicy()) -> int:
    """dest := (a + b) mod 2^lane per tile."""
    if dest_row is None:
        dest_row = rm.aux1
    E = DirectEmitter(arr, rm, policy)
    emit_add(E, rm, a_row, b_row, dest_row, rm.aux2, rm.aux3, rm.mask_row,
             policy.deterministic)
    return dest_row


def _headroom_or_raise(ctx: MontgomeryContext) -> None:
    if not ctx.has_headroom:
        raise ParameterError(
            f"modulus {ctx.modulus} needs a headroom bit for modular add/sub "
            f"(lane {ctx.lane_width})"
        )


def bp_modadd(arr: Subarray, rm: RowMap, a_row: int, b_row: int, ctx: MontgomeryContext,
              dest_row: int | None = None, policy: ExecPolicy = ExecPolicy()) -> int:
    """dest := (a + b) mod M for residue operands."""
    _headroom_or_raise(ctx)
    if dest_row is None:
        dest_row = rm.aux1
    pool = _pool_for(rm, (a_row, b_row, dest_row))
    E = DirectEmitter(arr, rm, policy)
    emit_modadd(E, rm, a_row, b_row, dest_row, pool, policy.deterministic)
    return dest_row


def bp_modsub(arr: Subarray, rm: RowMap, a_row: int, b_row: int, ctx: MontgomeryContext,
              dest_row: int | None = None, policy: ExecPolicy = ExecPolicy()) -> int:
    """dest := (a - b) mod M for residue operands."""
    _headroom_or_raise(ctx)
    if dest_row is None:
        dest_row = rm.aux1
    pool = _pool_for(rm, (a_row, b_row, dest_row))
    E = DirectEmitter(arr, rm, policy)
    emit_modsub(E, rm, a_row, b_row, dest_row, pool, policy.deterministic)
    return dest_row


def _pool_for(rm: RowMap, busy) -> tuple[int, int, int, int, int]:
    """Five scratch rows not aliased with the operation's operands."""
    free = [r for r in rm.scratch_rows() if r not in busy]
    if len(free) < 5:
        raise AddressError("not enough free scratch rows for modular add/sub")
    return tuple(free[:5])
