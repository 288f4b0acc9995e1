"""Negacyclic NTT pipeline on the simulated subarray.

Layout: each tile holds one polynomial, one coefficient per row, so butterfly
operands are picked purely by row address (no word-alignment shifting ever).
The forward transform is in-place Cooley-Tukey with merged psi powers in
bit-reversed twiddle order (output bit-reversed); the inverse is
Gentleman-Sande consuming bit-reversed input, with the final n^-1 scaling
folded into one extra multiplication per coefficient.  Twiddles are stored
pre-multiplied by R = 2^width so the Montgomery products come out plain.

Coefficient rows beyond the per-tile resident capacity are staged by the host
(WRITE_ROW swaps, identical row indices in every tile), which keeps the SIMD
schedule shared across tiles for any polynomial order.
"""

from __future__ import annotations

from dataclasses import dataclass

from .bitparallel import (
    DirectEmitter,
    ExecPolicy,
    MontgomeryContext,
    RowMap,
    emit_modadd,
    emit_modmul,
    emit_modsub,
    emit_resolve,
    load_constants,
    pack_words,
    unpack_word,
)
from .errors import CapacityError, ParameterError
from .subarray import OR, Subarray

SCRATCH_ROWS = 6
CONSTANT_ROWS = 6

_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin (exact for anything a modulus here can be)."""
    if n < 2:
        return False
    for p in _MR_BASES:
        if n % p == 0:
            return n == p
    d = n - 1
    s = 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def find_roots(q: int, order: int) -> tuple[int, int]:
    """Smallest psi with psi^order = -1 mod q, plus omega = psi^2.

    psi^order = -1 forces the multiplicative order to be exactly 2*order (a
    power of two), so any hit is automatically a primitive 2*order-th root.
    """
    if order < 2 or order & (order - 1):
        raise ParameterError(f"order must be a power of two >= 2, got {order}")
    if not is_prime(q):
        raise ParameterError(f"modulus {q} is not prime")
    if (q - 1) % (2 * order) != 0:
        raise ParameterError(
            f"no 2*{order}-th root of unity: {q} != 1 (mod {2 * order})"
        )
    for psi in range(2, q):
        if pow(psi, order, q) == q - 1:
            return psi, psi * psi % q
    raise ParameterError(f"no root found for q={q}, order={order}")


def bit_reverse(x: int, bits: int) -> int:
    r = 0
    for _ in range(bits):
        r = (r << 1) | (x & 1)
        x >>= 1
    return r


def bit_reverse_permute(coeffs):
    """out[i] = in[bitrev(i)]; involutive."""
    n = len(coeffs)
    if n & (n - 1):
        raise ParameterError("length must be a power of two")
    bits = n.bit_length() - 1
    return [coeffs[bit_reverse(i, bits)] for i in range(n)]


@dataclass(frozen=True)
class RingParams:
    """Z_q[x]/(x^order + 1) with a chosen coefficient bitwidth."""

    q: int
    order: int
    psi: int
    omega: int
    width: int

    @classmethod
    def create(cls, q: int, order: int, width: int | None = None) -> "RingParams":
        psi, omega = find_roots(q, order)
        min_width = max((q - 1).bit_length(), 3)
        if width is None:
            width = min_width + 1      # headroom bit for modular add/sub
        if width < min_width:
            raise ParameterError(
                f"width {width} cannot represent residues mod {q}"
            )
        return cls(q=q, order=order, psi=psi, omega=omega, width=width)

    @property
    def log2_order(self) -> int:
        return self.order.bit_length() - 1


@dataclass(frozen=True)
class TwiddleTable:
    """Montgomery-scaled butterfly constants, bit-reversed twiddle indexing.

    forward[k] feeds the k-th Cooley-Tukey block (k = 1..order-1, pre-increment
    order); inverse[k] is the negated counterpart for the Gentleman-Sande
    sweep; scale_inv_r is n^-1 * R mod q for the final inverse scaling.
    """

    forward: tuple[int, ...]
    inverse: tuple[int, ...]
    scale_inv_r: tuple[int, ...] | int
    negacyclic: bool


def precompute_twiddles(ring: RingParams, ctx: MontgomeryContext,
                        negacyclic: bool = True) -> TwiddleTable:
    """Forward table psi^bitrev(k) * R (omega in cyclic mode) and the paired
    inverse table.

    The Gentleman-Sande sweep visits the (length, start) blocks in reverse
    stage order, so inverse index k_i within the per-stage band [L, 2L) pairs
    with forward index k_f = 3L - 1 - k_i; the stored value is the modular
    inverse of that block's forward twiddle, Montgomery-scaled.  In the
    negacyclic case this equals the negated forward twiddle at k_i
    (psi^order = -1).
    """
    q = ring.q
    r = ctx.radix % q
    bits = ring.log2_order
    base = ring.psi if negacyclic else ring.omega
    fwd_plain = [0] * ring.order
    for k in range(1, ring.order):
        fwd_plain[k] = pow(base, bit_reverse(k, bits), q)
    inv = [0] * ring.order
    band = 1
    while band < ring.order:
        for k_i in range(band, 2 * band):
            k_f = 3 * band - 1 - k_i
            inv[k_i] = pow(fwd_plain[k_f], -1, q) * r % q
        band *= 2
    fwd = [z * r % q for z in fwd_plain]
    n_inv = pow(ring.order, -1, q)
    return TwiddleTable(forward=tuple(fwd), inverse=tuple(inv),
                        scale_inv_r=n_inv * r % q, negacyclic=negacyclic)


@dataclass(frozen=True)
class TileLayout:
    """Row/column assignment of one subarray for SIMD transforms.

    capacity counts coefficient space the headline way (rows minus the 6 scratch
    rows, times tiles); resident_rows is what one tile can actually keep
    while the constant rows are loaded; the gap is host-swapped.
    """

    rows: int
    cols: int
    tile_width: int
    tiles: int
    order: int
    coeff_rows: tuple[int, ...]
    rowmap: RowMap
    capacity: int
    resident_rows: int

    @property
    def swapped(self) -> bool:
        return self.order > self.resident_rows

    def spill_map(self) -> dict[int, int]:
        """Virtual coefficient -> shared slot, for coefficients past residency."""
        return {c: c % self.resident_rows for c in range(self.resident_rows, self.order)}


def resident_rows(rows: int, order: int) -> int:
    """Coefficient rows a tile can keep loaded alongside scratch and constants.

    In the host-swap regime the direct-mapped slot count must not divide any
    butterfly span (a power of two), or a pair could collide on one slot; one
    row is dropped to force an odd factor in.
    """
    resident = rows - SCRATCH_ROWS - CONSTANT_ROWS
    if order > resident and resident > 1 and resident & (resident - 1) == 0:
        resident -= 1
    return resident


def layout_plan(rows: int, cols: int, width: int, order: int) -> TileLayout:
    if width < 3:
        raise ParameterError(f"coefficient width must be >= 3, got {width}")
    tiles = cols // width
    if tiles < 1:
        raise CapacityError(f"no {width}-bit tile fits in {cols} columns")
    capacity = tiles * (rows - SCRATCH_ROWS)
    if order > capacity:
        raise CapacityError(
            f"order {order} exceeds array capacity {capacity} "
            f"({tiles} tiles x {rows - SCRATCH_ROWS} coefficient rows)"
        )
    resident = resident_rows(rows, order)
    if resident < 1:
        raise CapacityError("array too small for scratch and constant rows")
    top = rows
    rowmap = RowMap(
        tile_width=width,
        sum_row=top - 1, carry_row=top - 2, aux1=top - 3, aux2=top - 4,
        aux3=top - 5, mask_row=top - 6,
        zeros=top - 7, ones=top - 8, lsb_mask=top - 9, msb_mask=top - 10,
        modulus_row=top - 11, neg_modulus_row=top - 12,
    )
    rowmap.validate()
    return TileLayout(
        rows=rows, cols=cols, tile_width=width, tiles=tiles, order=order,
        coeff_rows=tuple(range(resident)), rowmap=rowmap,
        capacity=capacity, resident_rows=resident,
    )


def _forward_schedule(order: int):
    """(j, length, twiddle index) triples of the in-place Cooley-Tukey sweep."""
    k = 0
    length = order // 2
    while length >= 1:
        for start in range(0, order, 2 * length):
            k += 1
            for j in range(start, start + length):
                yield j, length, k
        length //= 2


def _inverse_schedule(order: int):
    k = order
    length = 1
    while length < order:
        for start in range(0, order, 2 * length):
            k -= 1
            for j in range(start, start + length):
                yield j, length, k
        length *= 2


class TransformUnit:
    """One subarray loaded for SIMD transforms: up to `tiles` polynomials,
    shared command schedule, host-swapped rows when the order outgrows the
    per-tile residency."""

    def __init__(self, ring: RingParams, rows: int = 256, cols: int = 256,
                 policy: ExecPolicy = ExecPolicy(), record: bool = True,
                 negacyclic: bool = True):
        self.ring = ring
        # the context widens the lane by one column when the ring width
        # leaves no headroom bit, so modular add/sub always have one
        self.ctx = MontgomeryContext.create(ring.q, ring.width)
        self.layout = layout_plan(rows, cols, self.ctx.lane_width, ring.order)
        self.table = precompute_twiddles(ring, self.ctx, negacyclic)
        self.policy = policy
        self.arr = Subarray(rows, cols, record=record)
        self.rm = self.layout.rowmap
        self.emitter = DirectEmitter(self.arr, self.rm, policy)
        load_constants(self.arr, self.rm, self.ctx)
        self._host: list[int] = [0] * ring.order        # packed row per coefficient
        self._slot_virt: list[int | None] = [None] * self.layout.resident_rows
        self._pool = (self.rm.sum_row, self.rm.carry_row, self.rm.aux1,
                      self.rm.aux2, self.rm.aux3)
        self.butterflies = 0

    # -- residency -----------------------------------------------------

    def _ensure(self, coeff: int) -> int:
        slot = coeff % self.layout.resident_rows
        row = self.layout.coeff_rows[slot]
        occupant = self._slot_virt[slot]
        if occupant != coeff:
            if occupant is not None:
                self._host[occupant] = self.arr.read_row(row)
            self.arr.write_row(row, self._host[coeff])
            self._slot_virt[slot] = coeff
        return row

    def load_polynomials(self, polys) -> None:
        """One polynomial per tile (extra tiles stay zero); standard order in."""
        tiles = self.layout.tiles
        order = self.ring.order
        if len(polys) > tiles:
            raise CapacityError(f"{len(polys)} polynomials for {tiles} tiles")
        lane = self.ctx.lane_width
        for p in polys:
            if len(p) != order:
                raise ParameterError("polynomial length must equal the ring order")
            if any(not 0 <= c < self.ring.q for c in p):
                raise ParameterError("coefficients must be residues in [0, q)")
        for c in range(order):
            words = [p[c] for p in polys]
            self._host[c] = pack_words(words + [0] * (tiles - len(words)),
                                       lane, self.arr.cols)
        self._slot_virt = [None] * self.layout.resident_rows
        for c in range(min(order, self.layout.resident_rows)):
            self._ensure(c)

    def read_polynomials(self, count: int | None = None) -> list[list[int]]:
        if count is None:
            count = self.layout.tiles
        lane = self.ctx.lane_width
        out = [[0] * self.ring.order for _ in range(count)]
        for c in range(self.ring.order):
            slot = c % self.layout.resident_rows
            if self._slot_virt[slot] == c:
                bits = self.arr.read_row(self.layout.coeff_rows[slot])
            else:
                bits = self._host[c]
            for t in range(count):
                out[t][c] = unpack_word(bits, t, lane)
        return out

    # -- butterfly kernels ----------------------------------------------

    def _product_into_mask(self, scaled_twiddle: int, b_row: int) -> None:
        E = self.emitter
        emit_modmul(E, self.rm, scaled_twiddle, self.ctx.width, b_row=b_row)
        emit_resolve(E, self.rm, self.rm.mask_row, self.policy.deterministic)

    def _scale_rows(self, scaled_values) -> None:
        """coefficient_row := scaled_values[c] * row * R^-1, for every c."""
        E = self.emitter
        for c in range(self.ring.order):
            row = self._ensure(c)
            emit_modmul(E, self.rm, scaled_values[c], self.ctx.width, b_row=row)
            emit_resolve(E, self.rm, row, self.policy.deterministic)

    def forward(self) -> None:
        """In-place forward transform; rows end up holding the bit-reversed spectrum."""
        E = self.emitter
        rm = self.rm
        det = self.policy.deterministic
        fwd = self.table.forward
        for j, length, k in _forward_schedule(self.ring.order):
            rj = self._ensure(j)
            rl = self._ensure(j + length)
            self._product_into_mask(fwd[k], rl)
            emit_modsub(E, rm, rj, rm.mask_row, rl, self._pool, det)
            emit_modadd(E, rm, rj, rm.mask_row, rj, self._pool, det)
            self.butterflies += 1

    def inverse(self) -> None:
        """Gentleman-Sande inverse on a bit-reversed spectrum; standard order out."""
        E = self.emitter
        rm = self.rm
        det = self.policy.deterministic
        inv = self.table.inverse
        for j, length, k in _inverse_schedule(self.ring.order):
            rj = self._ensure(j)
            rl = self._ensure(j + length)
            emit_modsub(E, rm, rj, rl, rm.mask_row, self._pool, det)
            emit_modadd(E, rm, rj, rl, rj, self._pool, det)
            # park the difference in the now-dead a[j+len] row: the multiply
            # loop needs mask_row for its own per-iteration predication
            E.act(rm.mask_row, rm.zeros, OR)
            E.wb(rl)
            emit_modmul(E, rm, inv[k], self.ctx.width, b_row=rl)
            emit_resolve(E, rm, rl, det)
            self.butterflies += 1
        self._scale_rows([self.table.scale_inv_r] * self.ring.order)

    def pointwise_by(self, spectrum) -> None:
        """Multiply the resident spectra by a shared spectrum (bit-reversed order).

        The multiplier values are compiled into the command stream after
        Montgomery pre-scaling, exactly like twiddles.
        """
        if len(spectrum) != self.ring.order:
            raise ParameterError("spectrum length must equal the ring order")
        q = self.ring.q
        r = self.ctx.radix % q
        self._scale_rows([v % q * r % q for v in spectrum])


def ntt_forward(unit: TransformUnit) -> None:
    unit.forward()


def ntt_inverse(unit: TransformUnit) -> None:
    unit.inverse()


def pointwise_mul(unit: TransformUnit, spectrum) -> None:
    unit.pointwise_by(spectrum)


def polymul_pipeline(a_polys, b, ring: RingParams, rows: int = 256, cols: int = 256,
                     policy: ExecPolicy = ExecPolicy(), record: bool = True):
    """NTT(a_i) * NTT(b) -> INTT, batched one a-polynomial per tile.

    Returns (products, unit_a, unit_b); the units expose traces and stats.
    The b spectrum is read out once and compiled into the pointwise stream,
    so it is shared by every tile.
    """
    unit_b = TransformUnit(ring, rows, cols, policy, record=record)
    unit_b.load_polynomials([list(b)])
    unit_b.forward()
    b_hat = unit_b.read_polynomials(1)[0]
    unit_a = TransformUnit(ring, rows, cols, policy, record=record)
    unit_a.load_polynomials([list(p) for p in a_polys])
    unit_a.forward()
    unit_a.pointwise_by(b_hat)
    unit_a.inverse()
    return unit_a.read_polynomials(len(a_polys)), unit_a, unit_b


def polymul_negacyclic(a, b, ring: RingParams, rows: int = 256, cols: int = 256,
                       policy: ExecPolicy = ExecPolicy(), record: bool = True):
    """a * b in Z_q[x]/(x^order + 1), entirely through the array pipeline."""
    products, _, _ = polymul_pipeline([a], b, ring, rows, cols, policy, record)
    return products[0]
