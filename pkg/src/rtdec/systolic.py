"""Cycle-accurate systolic elimination arrays.

Streamed GF(2) elimination on a triangular grid of single-bit processing
elements.  Rows of [A | B] enter the top ports staggered one column per
tick and descend one cell per tick; each diagonal cell decides pass, add
or lock for its slot, and the decision travels east in lockstep with the
data wavefront.  For the combined pass a reduce token injected behind the
last row unloads the locked rows top to bottom; on the way down each
unloaded row is eliminated against the slots it crosses, so fully reduced
rows leave at the bottom ports (pivot column bits leave as zeros at their
own diagonal, which is the elimination made visible).

Two engines produce identical results: a fast row-level replay used by
the decoders, and a cell-level machine with explicit nearest-neighbor
wiring whose reads can be recorded and audited.  The driver runs a fixed
data-independent schedule; iteration counts per pass are

  forward pass       2n + m + l - 1   (last possible bottom-port read)
  combined pass      3n + m + l - 2   (last cell update; the port register
                                       at the boundary latches one tick later)
  solver, solvable   3n + m - 1       (combined pass at l = 1)
  solver, failure    n + m - 1        (declared once the last column of A
                                       has been consumed at the top ports)
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import IO, Optional, Sequence, Union

from rtdec.gf2 import Gf2Matrix, SolveReport

__all__ = [
    "SystolicRunResult",
    "SystolicMachine",
    "run_forward",
    "run_full",
    "run_solver",
    "pe_count",
    "run_H_example",
    "forward_iterations",
    "full_iterations",
    "solver_cycles",
]

# control ops; a real cell needs only a two-bit identifier
OP_PASS = "pass"
OP_ADD = "add"
OP_LOCK = "lock"
OP_UNLOAD = "unload"
OP_UNLOAD_TOKEN = "unload+token"  # unload wave carrying the start token one hop east

FORWARD = "fwd"
BACKWARD = "bwd"


def forward_iterations(n: int, m: int, l: int) -> int:
    return 2 * n + m + l - 1


def full_iterations(n: int, m: int, l: int) -> int:
    return 3 * n + m + l - 2


def solver_cycles(n: int, m: int, solvable: bool) -> int:
    return 3 * n + m - 1 if solvable else n + m - 1


def pe_count(n: int, mode: str) -> int:
    """Single-bit processing elements for an n-wide array.

    mode "solve" appends one spectator column, mode "generalized-inverse"
    appends n of them.
    """
    if n < 1:
        raise ValueError("array width must be >= 1")
    base = n * (n + 1) // 2
    if mode == "solve":
        return base + n
    if mode == "generalized-inverse":
        return base + n * n
    raise ValueError(f"unknown mode {mode!r}")


def _lsb(x: int) -> int:
    return (x & -x).bit_length() - 1


@dataclass(frozen=True)
class SystolicRunResult:
    """Observable outcome of one array run.

    stored: n x (n+l) matrix; echelon pivot rows for the forward pass,
      fully reduced rows for the combined pass.
    bottom_emissions: per spectator column, (iteration, bit) port reads in
      arrival order.  Forward-pass entries are the spectator remainders of
      rows whose matrix part eliminated to zero; combined-pass runs append
      the n unloaded reduced rows after them.
    iterations_used: ticks of the fixed schedule for the executed pass.
    readout_cycles: extra cycles billed for draining stored memories when
      requested (combined pass only), reported separately.
    """

    stored: Gf2Matrix
    bottom_emissions: tuple[tuple[tuple[int, int], ...], ...]
    iterations_used: int
    n: int
    m: int
    l: int
    readout_cycles: int = 0

    @property
    def total_cycles(self) -> int:
        return self.iterations_used + self.readout_cycles

    def residual_ints(self) -> list[int]:
        """Spectator remainders of eliminated rows, in arrival order."""
        if self.l < 1:
            raise ValueError("no spectator columns to reconstruct residuals from")
        out: Optional[list[int]] = None
        for s, col in enumerate(self.bottom_emissions):
            # forward exits end at tick m + 2n + s; unload exits start one later
            fwd = [bit for (t, bit) in col if t <= self.m + 2 * self.n + s]
            if out is None:
                out = [0] * len(fwd)
            for r, bit in enumerate(fwd):
                out[r] |= bit << s
        return out or []


def _coerce_b(A: Gf2Matrix, B: Optional[Gf2Matrix]) -> tuple[list[int], int]:
    if B is None:
        return [0] * A.m, 0
    if B.m != A.m:
        raise ValueError("spectator block row count mismatch")
    return list(B.rows), B.n


def _stream(A: Gf2Matrix, spect: list[int]) -> tuple[list[int], list[bool], list[tuple]]:
    """Row-level replay of the forward pass.

    fates[i] is ("locked", slot) or ("residual", combined_row) for input
    row i, where combined rows carry spectator bits above bit n.
    """
    n = A.n
    a_mask = (1 << n) - 1
    stored = [0] * n
    locked = [False] * n
    fates: list[tuple] = []
    for i in range(A.m):
        row = A.row_int(i) | (spect[i] << n)
        while row & a_mask:
            p = _lsb(row & a_mask)
            if not locked[p]:
                stored[p] = row
                locked[p] = True
                fates.append(("locked", p))
                break
            row ^= stored[p]
        else:
            fates.append(("residual", row))
    return stored, locked, fates


def _reduce_rows(stored: list[int], locked: list[bool], n: int) -> list[int]:
    """Eliminate each echelon row against the slots below it, ascending.

    Adding slot p clears column p and can only set columns above p, so one
    ascending sweep leaves no ones at other pivot columns; that row is the
    unique such element of the row space, i.e. the fully reduced row.
    """
    reduced = []
    for j in range(n):
        v = stored[j]
        for p in range(j + 1, n):
            if locked[p] and (v >> p) & 1:
                v ^= stored[p]
        reduced.append(v)
    return reduced


def _fast_forward(A: Gf2Matrix, B: Optional[Gf2Matrix]) -> SystolicRunResult:
    spect, l = _coerce_b(A, B)
    n, m = A.n, A.m
    stored, _, fates = _stream(A, spect)
    cols: list[list[tuple[int, int]]] = [[] for _ in range(l)]
    for i, fate in enumerate(fates):
        if fate[0] != "residual":
            continue
        combined = fate[1]
        for s in range(l):
            cols[s].append((i + 2 * n + s + 1, (combined >> (n + s)) & 1))
    return SystolicRunResult(
        stored=Gf2Matrix(n, n + l, stored),
        bottom_emissions=tuple(tuple(c) for c in cols),
        iterations_used=forward_iterations(n, m, l),
        n=n,
        m=m,
        l=l,
    )


def _fast_full(A: Gf2Matrix, B: Optional[Gf2Matrix]) -> SystolicRunResult:
    spect, l = _coerce_b(A, B)
    n, m = A.n, A.m
    stored, locked, fates = _stream(A, spect)
    reduced = _reduce_rows(stored, locked, n)
    cols: list[list[tuple[int, int]]] = [[] for _ in range(l)]
    for i, fate in enumerate(fates):
        if fate[0] != "residual":
            continue
        combined = fate[1]
        for s in range(l):
            cols[s].append((i + 2 * n + s + 1, (combined >> (n + s)) & 1))
    for j in range(n):
        for s in range(l):
            cols[s].append((m + 2 * n + s + j + 1, (reduced[j] >> (n + s)) & 1))
    return SystolicRunResult(
        stored=Gf2Matrix(n, n + l, reduced),
        bottom_emissions=tuple(tuple(c) for c in cols),
        iterations_used=full_iterations(n, m, l),
        n=n,
        m=m,
        l=l,
    )


class SystolicMachine:
    """Cell-level array with explicit nearest-neighbor wiring.

    Column k holds cells (0,k) .. (min(k, n-1), k); the diagonal cell of
    an A-column sits at the bottom of that column.  South wires carry
    tagged data bits or the reduce token; east wires carry control ops.
    Outputs written during iteration t are read at iteration t+1 (double
    buffering), so a cell sees only its own state plus last-tick neighbor
    outputs.  With record_reads=True every read is logged and checked
    against the static neighbor map.
    """

    def __init__(self, n: int, l: int, record_reads: bool = False,
                 trace_sink: Optional[IO] = None):
        if n < 1 or l < 0:
            raise ValueError("need n >= 1 and l >= 0")
        self.n = n
        self.l = l
        self.record_reads = record_reads
        self.trace_sink = trace_sink
        self.cells: dict[tuple[int, int], dict] = {}
        for k in range(n + l):
            for j in range(min(k, n - 1) + 1):
                cell = {"stored": 0}
                if j == k:
                    cell["locked"] = False
                self.cells[(j, k)] = cell
        self.allowed_reads: dict[tuple[int, int], set] = {}
        for (j, k) in self.cells:
            allowed = set()
            allowed.add(("cell", (j - 1, k)) if j > 0 else ("port", "top", k))
            if k > j:
                allowed.add(("cell", (j, k - 1)))
            self.allowed_reads[(j, k)] = allowed
        self.read_log: list[tuple] = []
        self.ports: list[list[tuple[int, int]]] = [[] for _ in range(n + l)]
        self.iteration = 0
        self._south: dict[tuple[int, int], tuple] = {}
        self._east: dict[tuple[int, int], str] = {}
        self._locked_history: list[int] = []

    @property
    def cell_count(self) -> int:
        return len(self.cells)

    def _read(self, reader, source, value):
        if self.record_reads:
            assert source in self.allowed_reads[reader], (reader, source)
            self.read_log.append((self.iteration, reader, source))
        return value

    def _cell_update(self, j: int, k: int, state: dict, data_in, ctrl_in):
        """One tick of one cell; returns (south_out, east_out)."""
        if j == k:  # diagonal
            if data_in is None:
                return None, None
            if data_in[0] == "token":
                # unload this slot: pivot bit exits south, wave heads east;
                # the token rides along only while there is a next diagonal
                east = OP_UNLOAD_TOKEN if j + 1 < self.n else OP_UNLOAD
                return ("d", state["stored"], BACKWARD), east
            _, bit, phase = data_in
            if state["locked"]:
                if bit:
                    return ("d", bit ^ state["stored"], phase), OP_ADD
                return ("d", bit, phase), OP_PASS
            if phase == FORWARD and bit:
                state["locked"] = True
                state["stored"] = 1
                return None, OP_LOCK
            return ("d", bit, phase), OP_PASS
        # off-diagonal
        if ctrl_in in (OP_UNLOAD, OP_UNLOAD_TOKEN):
            assert data_in is None, (j, k, data_in)
            if ctrl_in == OP_UNLOAD_TOKEN:
                state["pending_token"] = True  # token detaches, hops south next tick
            return ("d", state["stored"], BACKWARD), OP_UNLOAD
        if ctrl_in is not None:
            assert data_in is not None and data_in[0] == "d", (j, k, ctrl_in, data_in)
            _, bit, phase = data_in
            if ctrl_in == OP_PASS:
                return ("d", bit, phase), OP_PASS
            if ctrl_in == OP_ADD:
                return ("d", bit ^ state["stored"], phase), OP_ADD
            assert ctrl_in == OP_LOCK and phase == FORWARD
            state["stored"] = bit
            return None, OP_LOCK
        assert data_in is None, (j, k, data_in)  # data never travels without control
        return None, None

    def _latch_ports(self, t: int):
        for k in range(self.n + self.l):
            bottom = (min(k, self.n - 1), k)
            v = self._south.get(bottom)
            if v is not None and v[0] == "d":
                self.ports[k].append((t, v[1]))

    def _step(self, t: int, feeds: dict):
        self.iteration = t
        self._latch_ports(t)
        south_new: dict[tuple[int, int], tuple] = {}
        east_new: dict[tuple[int, int], str] = {}
        for (j, k) in sorted(self.cells):
            state = self.cells[(j, k)]
            if j == 0:
                data_in = self._read((j, k), ("port", "top", k), feeds.get((t, k)))
            else:
                data_in = self._read((j, k), ("cell", (j - 1, k)), self._south.get((j - 1, k)))
            ctrl_in = None
            if k > j:
                ctrl_in = self._read((j, k), ("cell", (j, k - 1)), self._east.get((j, k - 1)))
            pending = state.pop("pending_token", False)
            south, east = self._cell_update(j, k, state, data_in, ctrl_in)
            if pending:
                assert south is None, (j, k)
                south = ("token",)
            if south is not None:
                south_new[(j, k)] = south
            if east is not None and (j, k + 1) in self.cells:
                east_new[(j, k)] = east
        self._south = south_new
        self._east = east_new
        self._locked_history.append(sum(1 for c in self.cells.values() if c.get("locked")))
        if self.trace_sink is not None:
            self._emit_trace(t)

    def _emit_trace(self, t: int):
        rec = {
            "iteration": t,
            "stored": [[j, k, c["stored"]] for (j, k), c in sorted(self.cells.items()) if c["stored"]],
            "locked": [j for j in range(self.n) if self.cells[(j, j)].get("locked")],
            "south": [[j, k, list(v)] for (j, k), v in sorted(self._south.items())],
            "east": [[j, k, v] for (j, k), v in sorted(self._east.items())],
        }
        self.trace_sink.write(json.dumps(rec) + "\n")

    def _run(self, A: Gf2Matrix, spect: list[int], reduce_token: bool) -> int:
        n, l, m = self.n, self.l, A.m
        assert A.n == n
        feeds: dict[tuple[int, int], tuple] = {}
        for i in range(m):
            row = A.row_int(i) | (spect[i] << n)
            for k in range(n + l):
                feeds[(i + k + 1, k)] = ("d", (row >> k) & 1, FORWARD)
        if reduce_token:
            feeds[(m + 1, 0)] = ("token",)
        total = full_iterations(n, m, l) if reduce_token else forward_iterations(n, m, l)
        for t in range(1, total + 1):
            self._step(t, feeds)
        self._latch_ports(total + 1)  # boundary register drains the last south wires
        self._south = {}
        assert not self._east and not any(
            c.get("pending_token") for c in self.cells.values()
        ), "machine not quiescent at end of schedule"
        # locked flags are monotone over the whole run
        assert all(b <= a for b, a in zip(self._locked_history, self._locked_history[1:]))
        return total

    def _stored_matrix(self) -> Gf2Matrix:
        rows = []
        for j in range(self.n):
            acc = 0
            for k in range(j, self.n + self.l):
                acc |= self.cells[(j, k)]["stored"] << k
            rows.append(acc)
        return Gf2Matrix(self.n, self.n + self.l, rows)

    def _spectator_emissions(self) -> tuple:
        return tuple(tuple(self.ports[self.n + s]) for s in range(self.l))

    def run_forward(self, A: Gf2Matrix, B: Optional[Gf2Matrix] = None) -> SystolicRunResult:
        spect, l = _coerce_b(A, B)
        assert l == self.l
        total = self._run(A, spect, reduce_token=False)
        return SystolicRunResult(
            stored=self._stored_matrix(),
            bottom_emissions=self._spectator_emissions(),
            iterations_used=total,
            n=self.n,
            m=A.m,
            l=self.l,
        )

    def run_full(self, A: Gf2Matrix, B: Optional[Gf2Matrix] = None) -> SystolicRunResult:
        spect, l = _coerce_b(A, B)
        assert l == self.l
        m = A.m
        total = self._run(A, spect, reduce_token=True)
        n = self.n
        rows = [0] * n
        for k in range(n + l):
            # unload exits trail the forward traffic; the last min(k,n-1)+1
            # reads of each column are rows 0..min(k,n-1) in order
            depth = min(k, n - 1) + 1
            tail = self.ports[k][-depth:]
            assert len(tail) == depth, (k, self.ports[k])
            cutoff = m + 1 + 2 * k if k < n else m + n + k
            assert all(t > cutoff for t, _ in tail)
            for j, (_, bit) in enumerate(tail):
                rows[j] |= bit << k
        return SystolicRunResult(
            stored=Gf2Matrix(n, n + l, rows),
            bottom_emissions=self._spectator_emissions(),
            iterations_used=total,
            n=n,
            m=m,
            l=l,
        )


def run_forward(A: Gf2Matrix, B: Optional[Gf2Matrix] = None, *, engine: str = "fast",
                record_reads: bool = False, trace_sink: Optional[IO] = None) -> SystolicRunResult:
    """Forward pass: stored echelon rows plus spectator residual emissions."""
    if engine == "fast":
        return _fast_forward(A, B)
    if engine == "cells":
        machine = SystolicMachine(A.n, B.n if B is not None else 0,
                                  record_reads=record_reads, trace_sink=trace_sink)
        return machine.run_forward(A, B)
    raise ValueError(f"unknown engine {engine!r}")


def run_full(A: Gf2Matrix, B: Optional[Gf2Matrix] = None, *, reduce: bool = True,
             readout: bool = False, engine: str = "fast",
             record_reads: bool = False, trace_sink: Optional[IO] = None) -> SystolicRunResult:
    """Combined pass: fully reduced rows.  Without the reduce token the run
    degenerates to the forward pass.  readout=True bills n extra cycles for
    draining the result, reported separately."""
    if not reduce:
        return run_forward(A, B, engine=engine, record_reads=record_reads, trace_sink=trace_sink)
    if engine == "fast":
        res = _fast_full(A, B)
    elif engine == "cells":
        machine = SystolicMachine(A.n, B.n if B is not None else 0,
                                  record_reads=record_reads, trace_sink=trace_sink)
        res = machine.run_full(A, B)
    else:
        raise ValueError(f"unknown engine {engine!r}")
    if readout:
        res = SystolicRunResult(
            stored=res.stored,
            bottom_emissions=res.bottom_emissions,
            iterations_used=res.iterations_used,
            n=res.n,
            m=res.m,
            l=res.l,
            readout_cycles=res.n,
        )
    return res


def run_solver(A: Gf2Matrix, y: Union[int, Sequence[int]], *,
               padded_to: Optional[int] = None,
               engine: str = "fast") -> tuple[SolveReport, int]:
    """Solve A x = y on the array; returns the report and the cycle count.

    Cycles follow the actual column count by default; padded_to forces the
    timing of a fixed array of that width (zero-padded columns).
    """
    if isinstance(y, int):
        if y < 0 or y >> A.m:
            raise ValueError("right-hand side has bits outside row range")
        bits = [(y >> i) & 1 for i in range(A.m)]
    else:
        bits = [int(b) & 1 for b in y]
        if len(bits) != A.m:
            raise ValueError("right-hand side length mismatch")
    width = A.n if padded_to is None else padded_to
    if width < A.n:
        raise ValueError("padded width smaller than the instance")
    a_run = A if width == A.n else Gf2Matrix(A.m, width, list(A.rows))
    col = Gf2Matrix(A.m, 1, bits)
    res = run_full(a_run, col, engine=engine)
    residuals = res.residual_ints()
    if any(residuals):
        return (
            SolveReport(solvable=False, solution=None,
                        residual_rows=sum(1 for r in residuals if r), n=A.n),
            solver_cycles(width, A.m, solvable=False),
        )
    x = 0
    for j in range(width):
        if res.stored.get(j, j):
            x |= ((res.stored.row_int(j) >> width) & 1) << j
    assert x < (1 << A.n)  # pivots never land in padded columns
    return (
        SolveReport(solvable=True, solution=x, residual_rows=0, n=A.n),
        solver_cycles(width, A.m, solvable=True),
    )


def run_H_example(a: str, b: str) -> str:
    """Warm-up line circuit: returns a+b when the leading bits agree, else b.

    One cell per position; the leftmost cell compares the leading bits and
    its decision travels right one cell per tick, in step with the staggered
    inputs, so output k appears at tick k+2.
    """
    if len(a) != len(b):
        raise ValueError("inputs must have equal length")
    if not all(c in "01" for c in a + b):
        raise ValueError("inputs must be bitstrings")
    n = len(a)
    ctrl: list[Optional[str]] = [None] * (n + 1)
    out: dict[int, tuple[int, int]] = {}
    for t in range(1, n + 1):
        nxt: list[Optional[str]] = [None] * (n + 1)
        for k in range(n):
            if t != k + 1:
                continue
            ak, bk = int(a[k]), int(b[k])
            if k == 0:
                op = OP_ADD if ak == bk else OP_PASS
            else:
                op = ctrl[k]
                assert op is not None
            out[k] = (t + 1, ak ^ bk if op == OP_ADD else bk)
            nxt[k + 1] = op
        ctrl = nxt
    return "".join(str(out[k][1]) for k in range(n))
