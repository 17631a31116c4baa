"""Dense bit-packed linear algebra over GF(2).

Matrices are row-major with each row packed into a Python int: bit j of a
row int is the entry in column j.  Rank-deficient inputs are first-class:
the elimination routines report existence, one solution, and generalized
inverses without ever assuming full rank.

The streamed elimination (`lifted_forward` / `lifted_gauss_jordan`) keeps
pivot rows indexed by their pivot column: the result has n rows, row j
holding the pivot row whose leading one is in column j (zero row if column
j never acquires a pivot).  Rows whose matrix part eliminates to zero are
retained as residuals; their spectator bits decide solvability.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Union

__all__ = [
    "Gf2Matrix",
    "LiftedEchelon",
    "SolveReport",
    "gauss_jordan",
    "lifted_forward",
    "lifted_gauss_jordan",
    "solve_existence",
    "solve",
    "generalized_inverse",
    "rank",
    "extract_submatrix",
    "bits_to_int",
    "int_to_bits",
]


def bits_to_int(bits: Iterable[int]) -> int:
    """Pack a 0/1 sequence into an int, index 0 at the lowest bit."""
    out = 0
    for i, b in enumerate(bits):
        if b not in (0, 1):
            raise ValueError(f"bit {i} is {b}, expected 0 or 1")
        out |= int(b) << i
    return out


def int_to_bits(x: int, width: int) -> list[int]:
    """Unpack the low `width` bits of an int into a list."""
    return [(x >> i) & 1 for i in range(width)]


def _lsb(x: int) -> int:
    """Index of the lowest set bit of a nonzero int."""
    return (x & -x).bit_length() - 1


class Gf2Matrix:
    """Immutable m x n matrix over GF(2), rows packed as ints."""

    __slots__ = ("m", "n", "_rows")

    def __init__(self, m: int, n: int, rows: Sequence[int]):
        if m < 0 or n < 0:
            raise ValueError("matrix dimensions must be non-negative")
        if len(rows) != m:
            raise ValueError(f"expected {m} rows, got {len(rows)}")
        mask = (1 << n) - 1
        packed = []
        for i, r in enumerate(rows):
            r = int(r)
            if r < 0 or r & ~mask:
                raise ValueError(f"row {i} has bits outside column range 0..{n - 1}")
            packed.append(r)
        self.m = m
        self.n = n
        self._rows = tuple(packed)

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]], n: Optional[int] = None) -> "Gf2Matrix":
        """Build from row lists of 0/1 entries."""
        rows = list(rows)
        if n is None:
            n = len(rows[0]) if rows else 0
        for r in rows:
            if len(r) != n:
                raise ValueError("ragged rows")
        return cls(len(rows), n, [bits_to_int(r) for r in rows])

    @classmethod
    def zeros(cls, m: int, n: int) -> "Gf2Matrix":
        return cls(m, n, [0] * m)

    @classmethod
    def identity(cls, n: int) -> "Gf2Matrix":
        return cls(n, n, [1 << j for j in range(n)])

    def row_int(self, i: int) -> int:
        return self._rows[i]

    @property
    def rows(self) -> tuple[int, ...]:
        return self._rows

    def get(self, i: int, j: int) -> int:
        if not (0 <= i < self.m and 0 <= j < self.n):
            raise IndexError((i, j))
        return (self._rows[i] >> j) & 1

    def to_lists(self) -> list[list[int]]:
        return [int_to_bits(r, self.n) for r in self._rows]

    def column_int(self, j: int) -> int:
        """Column j packed as an int (bit i = entry in row i)."""
        out = 0
        for i, r in enumerate(self._rows):
            out |= ((r >> j) & 1) << i
        return out

    def transpose(self) -> "Gf2Matrix":
        return Gf2Matrix(self.n, self.m, [self.column_int(j) for j in range(self.n)])

    def mul_vec(self, x: int) -> int:
        """Matrix-vector product A x over GF(2); x packed with bit j = x_j."""
        out = 0
        for i, r in enumerate(self._rows):
            out |= ((r & x).bit_count() & 1) << i
        return out

    def matmul(self, other: "Gf2Matrix") -> "Gf2Matrix":
        if self.n != other.m:
            raise ValueError(f"shape mismatch {self.m}x{self.n} @ {other.m}x{other.n}")
        # row i of product = XOR of rows of `other` selected by row i of self
        rows = []
        for r in self._rows:
            acc = 0
            rr = r
            while rr:
                j = _lsb(rr)
                rr &= rr - 1
                acc ^= other._rows[j]
            rows.append(acc)
        return Gf2Matrix(self.m, other.n, rows)

    def hstack(self, other: "Gf2Matrix") -> "Gf2Matrix":
        if self.m != other.m:
            raise ValueError("row count mismatch")
        rows = [a | (b << self.n) for a, b in zip(self._rows, other._rows)]
        return Gf2Matrix(self.m, self.n + other.n, rows)

    def submatrix_cols(self, cols: Sequence[int]) -> "Gf2Matrix":
        """Columns gathered in the given order (order need not be sorted)."""
        for j in cols:
            if not 0 <= j < self.n:
                raise IndexError(j)
        rows = []
        for r in self._rows:
            acc = 0
            for pos, j in enumerate(cols):
                acc |= ((r >> j) & 1) << pos
            rows.append(acc)
        return Gf2Matrix(self.m, len(cols), rows)

    def is_zero(self) -> bool:
        return not any(self._rows)

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, Gf2Matrix)
            and self.m == other.m
            and self.n == other.n
            and self._rows == other._rows
        )

    def __hash__(self) -> int:
        return hash((self.m, self.n, self._rows))

    def __repr__(self) -> str:
        if self.m * self.n <= 64:
            body = "; ".join("".join(str(b) for b in row) for row in self.to_lists())
            return f"Gf2Matrix({self.m}x{self.n}: {body})"
        return f"Gf2Matrix({self.m}x{self.n})"


@dataclass(frozen=True)
class LiftedEchelon:
    """Result of streamed elimination on [A | B].

    matrix: n x (n + l); row j is the pivot row with leading one in column
      j (plus its spectator bits in columns n..n+l-1), or a zero row when
      column j holds no pivot.
    pivot_mask: int, bit j set iff column j acquired a pivot.
    rank: number of pivots.
    residuals: spectator bit patterns (ints over l bits) of input rows whose
      matrix part eliminated to zero, in arrival order.  Nonzero entries
      witness that the corresponding stacked system is inconsistent.
    """

    matrix: Gf2Matrix
    pivot_mask: int
    rank: int
    residuals: tuple[int, ...]
    spectator_width: int

    @property
    def pivots(self) -> list[int]:
        return [j for j in range(self.matrix.m) if (self.pivot_mask >> j) & 1]

    @property
    def residual_count(self) -> int:
        return sum(1 for r in self.residuals if r)


@dataclass(frozen=True)
class SolveReport:
    """Outcome of solving A x = y over GF(2)."""

    solvable: bool
    solution: Optional[int]  # packed bits, None when unsolvable
    residual_rows: int  # count of nonzero spectator rows seen during elimination
    n: int

    def solution_bits(self) -> Optional[list[int]]:
        if self.solution is None:
            return None
        return int_to_bits(self.solution, self.n)


def _coerce_spectator(A: Gf2Matrix, B: Union[Gf2Matrix, int, Sequence[int], None]) -> tuple[list[int], int]:
    """Normalize the spectator block to per-row ints plus its width."""
    if B is None:
        return [0] * A.m, 0
    if isinstance(B, Gf2Matrix):
        if B.m != A.m:
            raise ValueError("spectator block row count mismatch")
        return list(B.rows), B.n
    if isinstance(B, int):
        if B < 0 or B >> A.m:
            raise ValueError("packed right-hand side has bits outside row range")
        return [(B >> i) & 1 for i in range(A.m)], 1
    bits = list(B)
    if len(bits) != A.m:
        raise ValueError("right-hand side length mismatch")
    return [int(b) & 1 for b in bits], 1


def lifted_forward(A: Gf2Matrix, B: Union[Gf2Matrix, int, Sequence[int], None] = None) -> LiftedEchelon:
    """Stream rows of [A | B] into row-echelon form keyed by pivot column.

    Each incoming row is reduced by already-locked pivot rows until its
    leading one lands on an unlocked column (the row locks there) or its
    matrix part vanishes (the spectator remainder is kept as a residual).
    """
    n, l = A.n, 0
    spect, l = _coerce_spectator(A, B)
    a_mask = (1 << n) - 1
    stored = [0] * n  # combined row: low n bits matrix part, high l bits spectator
    locked = [False] * n
    residuals: list[int] = []
    for i in range(A.m):
        row = A.row_int(i) | (spect[i] << n)
        while row & a_mask:
            p = _lsb(row & a_mask)
            if not locked[p]:
                stored[p] = row
                locked[p] = True
                break
            row ^= stored[p]
        else:
            residuals.append(row >> n)
    pivot_mask = bits_to_int(1 if f else 0 for f in locked)
    return LiftedEchelon(
        matrix=Gf2Matrix(n, n + l, stored),
        pivot_mask=pivot_mask,
        rank=pivot_mask.bit_count(),
        residuals=tuple(residuals),
        spectator_width=l,
    )


def lifted_gauss_jordan(A: Gf2Matrix, B: Union[Gf2Matrix, int, Sequence[int], None] = None) -> LiftedEchelon:
    """Full two-pass elimination: forward streaming, then clear above pivots.

    The backward pass walks pivot columns from high to low, adding pivot
    row p into every row above it that still has a one in column p.  Zero
    (non-pivot) rows are skipped; they stay zero.
    """
    ech = lifted_forward(A, B)
    n = A.n
    stored = list(ech.matrix.rows)
    for p in range(n - 1, 0, -1):
        if not (ech.pivot_mask >> p) & 1:
            continue
        src = stored[p]
        bit = 1 << p
        for q in range(p):
            if stored[q] & bit:
                stored[q] ^= src
    return LiftedEchelon(
        matrix=Gf2Matrix(n, n + ech.spectator_width, stored),
        pivot_mask=ech.pivot_mask,
        rank=ech.rank,
        residuals=ech.residuals,
        spectator_width=ech.spectator_width,
    )


def solve_existence(A: Gf2Matrix, y: Union[int, Sequence[int]]) -> bool:
    """True iff A x = y has a solution (forward elimination only)."""
    ech = lifted_forward(A, y)
    return ech.residual_count == 0


def solve(A: Gf2Matrix, y: Union[int, Sequence[int]]) -> SolveReport:
    """Solve A x = y; pivot columns carry the spectator bit, others are zero."""
    full = lifted_gauss_jordan(A, y)
    residual_rows = full.residual_count
    if residual_rows:
        return SolveReport(solvable=False, solution=None, residual_rows=residual_rows, n=A.n)
    x = 0
    for j in full.pivots:
        x |= ((full.matrix.row_int(j) >> A.n) & 1) << j
    return SolveReport(solvable=True, solution=x, residual_rows=0, n=A.n)


def generalized_inverse(A: Gf2Matrix) -> Gf2Matrix:
    """n x m matrix X with A X A = A, valid for any rank.

    Runs the full elimination on [A | I_m]; row j of X is the transformed
    identity block of pivot row j, and zero for non-pivot columns.
    """
    full = lifted_gauss_jordan(A, Gf2Matrix.identity(A.m))
    n, m = A.n, A.m
    rows = []
    for j in range(n):
        if (full.pivot_mask >> j) & 1:
            rows.append(full.matrix.row_int(j) >> n)
        else:
            rows.append(0)
    return Gf2Matrix(n, m, rows)


def rank(A: Gf2Matrix) -> int:
    return lifted_forward(A).rank


def gauss_jordan(A: Gf2Matrix) -> Gf2Matrix:
    """Reduced row-echelon form in conventional row order (zero rows last)."""
    lifted = lifted_gauss_jordan(A)
    rows = [lifted.matrix.row_int(j) for j in lifted.pivots]
    rows += [0] * (A.m - len(rows))
    return Gf2Matrix(A.m, A.n, rows)


def extract_submatrix(source, rows: Sequence[int], cols: Sequence[int]) -> Gf2Matrix:
    """Submatrix at the given strictly increasing row/column indices.

    `source` is a Gf2Matrix or any object with `M` (row count) and
    `column_rows(j)` (sorted row indices of column j) - the sparse
    column form the decoding problems expose.
    """
    for seq, limit_name in ((rows, "row"), (cols, "column")):
        for a, b in zip(seq, list(seq)[1:]):
            if b <= a:
                raise ValueError(f"{limit_name} indices must be strictly increasing")
    if isinstance(source, Gf2Matrix):
        num_rows, num_cols = source.m, source.n
        for i in rows:
            if not 0 <= i < num_rows:
                raise IndexError(f"row index {i} out of range")
        for j in cols:
            if not 0 <= j < num_cols:
                raise IndexError(f"column index {j} out of range")
        row_ints = []
        for i in rows:
            r = source.row_int(i)
            acc = 0
            for pos, j in enumerate(cols):
                acc |= ((r >> j) & 1) << pos
            row_ints.append(acc)
        return Gf2Matrix(len(rows), len(cols), row_ints)
    # sparse column provider
    num_rows = source.M
    for i in rows:
        if not 0 <= i < num_rows:
            raise IndexError(f"row index {i} out of range")
    row_pos = {i: pos for pos, i in enumerate(rows)}
    out_rows = [0] * len(rows)
    for pos_j, j in enumerate(cols):
        for i in source.column_rows(j):
            p = row_pos.get(int(i))
            if p is not None:
                out_rows[p] |= 1 << pos_j
    return Gf2Matrix(len(rows), len(cols), out_rows)
