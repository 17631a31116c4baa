"""Decoding problems: the (H, A, p) triple plus generators and sampling.

A decoding problem is a binary decoding matrix H (M checks x N faults), a
logical action matrix A (K x N), and independent fault probabilities p.
Columns are stored sparsely (sorted row indices per column).  Fault sets
and syndromes are numpy uint8 vectors of length N and M.

A fault with p[j] == 1/2 is an erasure: its prior log-likelihood ratio is
exactly zero.
"""
from __future__ import annotations

import gzip
import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from rtdec import gf2
from rtdec.rng import generator

__all__ = [
    "DecodingProblem",
    "load_problem",
    "save_problem",
    "build_repetition_problem",
    "build_bb_code_problem",
    "stack_phenomenological",
    "sample_faults",
    "is_logical_failure",
    "GROSS_CODE_PARAMS",
    "TWO_GROSS_CODE_PARAMS",
]

# Bivariate bicycle presets: (l, m, a_terms, b_terms) with terms (i, j)
# meaning x^i y^j.  The [[144,12,12]] and [[288,12,18]] instances.
GROSS_CODE_PARAMS = (12, 6, ((3, 0), (0, 1), (0, 2)), ((0, 3), (1, 0), (2, 0)))
TWO_GROSS_CODE_PARAMS = (12, 12, ((3, 0), (0, 2), (0, 7)), ((0, 3), (1, 0), (2, 0)))


def _as_sorted_unique(idx: Sequence[int], limit: int, what: str) -> np.ndarray:
    arr = np.unique(np.asarray(idx, dtype=np.int64))
    if arr.size and (arr[0] < 0 or arr[-1] >= limit):
        raise ValueError(f"{what} index out of range [0, {limit})")
    return arr


def _csc(columns: Sequence[Sequence[int]], limit: int, what: str) -> tuple[np.ndarray, np.ndarray]:
    indptr = np.zeros(len(columns) + 1, dtype=np.int64)
    chunks = []
    for j, col in enumerate(columns):
        arr = _as_sorted_unique(col, limit, what)
        chunks.append(arr)
        indptr[j + 1] = indptr[j] + arr.size
    data = np.concatenate(chunks) if chunks else np.zeros(0, dtype=np.int64)
    return indptr, data


@dataclass(frozen=True)
class DecodingProblem:
    """Immutable decoding problem (H, A, p) with sparse column storage."""

    name: str
    M: int
    N: int
    K: int
    h_indptr: np.ndarray
    h_rows: np.ndarray
    a_indptr: np.ndarray
    a_rows: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        if min(self.M, self.N, self.K) < 0:
            raise ValueError("dimensions must be non-negative")
        if self.h_indptr.shape != (self.N + 1,) or self.a_indptr.shape != (self.N + 1,):
            raise ValueError("column pointer length mismatch")
        if self.p.shape != (self.N,):
            raise ValueError(f"p must have length {self.N}")
        if np.any(self.p < 0.0) or np.any(self.p > 1.0):
            raise ValueError("fault probabilities must lie in [0, 1]")
        widths = np.diff(self.h_indptr)
        if np.any(widths == 0):
            j = int(np.argmax(widths == 0))
            raise ValueError(f"column {j} of the decoding matrix is all-zero")
        for arr in (self.h_indptr, self.h_rows, self.a_indptr, self.a_rows, self.p):
            arr.setflags(write=False)

    # --- sparse accessors -------------------------------------------------

    def column_rows(self, j: int) -> np.ndarray:
        """Sorted check indices of decoding-matrix column j."""
        return self.h_rows[self.h_indptr[j]:self.h_indptr[j + 1]]

    def logical_rows(self, j: int) -> np.ndarray:
        """Sorted logical indices of action-matrix column j."""
        return self.a_rows[self.a_indptr[j]:self.a_indptr[j + 1]]

    def h_columns(self) -> list[list[int]]:
        return [self.column_rows(j).tolist() for j in range(self.N)]

    def a_columns(self) -> list[list[int]]:
        return [self.logical_rows(j).tolist() for j in range(self.N)]

    # --- linear maps ------------------------------------------------------

    def syndrome_of(self, faults: np.ndarray) -> np.ndarray:
        """H F over GF(2) by sparse column accumulation."""
        faults = np.asarray(faults, dtype=np.uint8)
        if faults.shape != (self.N,):
            raise ValueError(f"fault set must have length {self.N}")
        active = np.flatnonzero(faults)
        if active.size == 0:
            return np.zeros(self.M, dtype=np.uint8)
        idx = np.concatenate([self.column_rows(j) for j in active])
        return (np.bincount(idx, minlength=self.M) & 1).astype(np.uint8)

    def logical_action(self, faults: np.ndarray) -> np.ndarray:
        """A F over GF(2)."""
        faults = np.asarray(faults, dtype=np.uint8)
        if faults.shape != (self.N,):
            raise ValueError(f"fault set must have length {self.N}")
        active = np.flatnonzero(faults)
        if active.size == 0 or self.K == 0:
            return np.zeros(self.K, dtype=np.uint8)
        idx = np.concatenate([self.logical_rows(j) for j in active])
        if idx.size == 0:
            return np.zeros(self.K, dtype=np.uint8)
        return (np.bincount(idx, minlength=self.K) & 1).astype(np.uint8)

    def priors(self) -> np.ndarray:
        """Prior log-likelihood ratios log((1-p)/p), clamped away from 0/1."""
        p = np.clip(self.p, 1e-12, 1.0 - 1e-12)
        return np.log((1.0 - p) / p)

    @property
    def erasure_mask(self) -> np.ndarray:
        """Faults whose probability is exactly one half (zero prior)."""
        return self.p == 0.5

    def check_columns(self) -> list[np.ndarray]:
        """Fault indices per check (transposed adjacency), sorted."""
        cols: list[list[int]] = [[] for _ in range(self.M)]
        for j in range(self.N):
            for i in self.column_rows(j):
                cols[int(i)].append(j)
        return [np.asarray(c, dtype=np.int64) for c in cols]

    def h_dense(self) -> gf2.Gf2Matrix:
        """Dense bit-packed copy of H."""
        rows = [0] * self.M
        for j in range(self.N):
            for i in self.column_rows(j):
                rows[int(i)] |= 1 << j
        return gf2.Gf2Matrix(self.M, self.N, rows)

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, DecodingProblem)
            and self.name == other.name
            and (self.M, self.N, self.K) == (other.M, other.N, other.K)
            and np.array_equal(self.h_indptr, other.h_indptr)
            and np.array_equal(self.h_rows, other.h_rows)
            and np.array_equal(self.a_indptr, other.a_indptr)
            and np.array_equal(self.a_rows, other.a_rows)
            and np.array_equal(self.p, other.p)
        )


def make_problem(
    name: str,
    M: int,
    N: int,
    K: int,
    h_columns: Sequence[Sequence[int]],
    a_columns: Sequence[Sequence[int]],
    p: Sequence[float],
) -> DecodingProblem:
    """Validate and canonicalize (sorted, deduplicated) sparse columns."""
    if len(h_columns) != N or len(a_columns) != N:
        raise ValueError("column count must equal N")
    h_indptr, h_rows = _csc(h_columns, M, "check")
    a_indptr, a_rows = _csc(a_columns, K, "logical")
    return DecodingProblem(
        name=name,
        M=M,
        N=N,
        K=K,
        h_indptr=h_indptr,
        h_rows=h_rows,
        a_indptr=a_indptr,
        a_rows=a_rows,
        p=np.asarray(p, dtype=np.float64),
    )


# --- file format ----------------------------------------------------------


def _open_maybe_gz(path: str, mode: str):
    if str(path).endswith(".gz"):
        return gzip.open(path, mode + "t", encoding="utf-8")
    return open(path, mode, encoding="utf-8")


def load_problem(path: str) -> DecodingProblem:
    """Load a problem from JSON (optionally gzip-compressed).

    Schema: {"name": str, "M": int, "N": int, "K": int,
    "H": [[check indices] per fault column], "A": [[logical indices] per
    column], "p": [float per column]} with 0-based indices.
    """
    try:
        with _open_maybe_gz(path, "r") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError, gzip.BadGzipFile) as exc:
        raise ValueError(f"cannot parse problem file {path}: {exc}") from exc
    try:
        name = str(doc["name"])
        M, N, K = int(doc["M"]), int(doc["N"]), int(doc["K"])
        h_cols, a_cols, p = doc["H"], doc["A"], doc["p"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed problem file {path}: {exc}") from exc
    if len(h_cols) != N or len(a_cols) != N or len(p) != N:
        raise ValueError(
            f"dimension mismatch in {path}: N={N} but |H|={len(h_cols)}, "
            f"|A|={len(a_cols)}, |p|={len(p)}"
        )
    return make_problem(name, M, N, K, h_cols, a_cols, p)


def save_problem(path: str, problem: DecodingProblem) -> None:
    """Write the canonical JSON form (gzip when the path ends in .gz)."""
    doc = {
        "name": problem.name,
        "M": problem.M,
        "N": problem.N,
        "K": problem.K,
        "H": problem.h_columns(),
        "A": problem.a_columns(),
        "p": problem.p.tolist(),
    }
    with _open_maybe_gz(path, "w") as fh:
        json.dump(doc, fh, separators=(",", ":"))


# --- generators -----------------------------------------------------------


def build_repetition_problem(d: int, p_err: float) -> DecodingProblem:
    """Distance-d repetition code: chain of d-1 parity checks, one logical.

    d must be an odd integer >= 3.
    """
    if d < 3 or d % 2 == 0:
        raise ValueError("repetition distance must be an odd integer >= 3")
    h_cols = []
    for j in range(d):
        col = [i for i in (j - 1, j) if 0 <= i < d - 1]
        h_cols.append(col)
    a_cols = [[0]] * d
    return make_problem(f"repetition-d{d}", d - 1, d, 1, h_cols, a_cols, [p_err] * d)


def _circulant_block(l: int, m: int, terms: Sequence[tuple[int, int]]) -> gf2.Gf2Matrix:
    """Sum over terms (i, j) of the shift x^i y^j on the l*m torus, over GF(2)."""
    n = l * m
    rows = [0] * n
    for a, b in terms:
        if not (0 <= a < l and 0 <= b < m):
            raise ValueError(f"exponent pair {(a, b)} not reduced modulo ({l}, {m})")
        for i in range(l):
            for j in range(m):
                src = i * m + j
                dst = ((i + a) % l) * m + ((j + b) % m)
                rows[src] ^= 1 << dst
    return gf2.Gf2Matrix(n, n, rows)


def build_bb_code_problem(
    l: int,
    m: int,
    a_terms: Sequence[tuple[int, int]],
    b_terms: Sequence[tuple[int, int]],
    p_err: float,
    noise: str = "code-capacity",
    rounds: Optional[int] = None,
) -> DecodingProblem:
    """Bivariate bicycle code over an l x m torus of circulants.

    Builds the decoding problem whose checks are X-type detectors: the
    decoding matrix is [B^T | A^T] with A = sum x^i y^j over a_terms and
    B likewise over b_terms.  The logical action rows are a basis of
    ker(HX) modulo the row space of the decoding matrix, so K equals
    2*l*m - rank(HX) - rank(HZ).

    noise="code-capacity" gives one round of data faults only;
    noise="phenomenological" stacks `rounds` noisy rounds with measurement
    errors at the same rate (see `stack_phenomenological`).
    """
    if l < 1 or m < 1:
        raise ValueError("circulant dimensions must be positive")
    A_blk = _circulant_block(l, m, a_terms)
    B_blk = _circulant_block(l, m, b_terms)
    if A_blk.is_zero() or B_blk.is_zero():
        raise ValueError("degenerate polynomials produce an all-zero column")
    n_half = l * m
    h_x = A_blk.hstack(B_blk)  # [A | B]
    h_z = B_blk.transpose().hstack(A_blk.transpose())  # [B^T | A^T]
    # CSS commutation: HX HZ^T = AB + BA = 0 for commuting circulants
    if not h_x.matmul(h_z.transpose()).is_zero():
        raise ValueError("check matrices do not commute; not a CSS pair")
    n = 2 * n_half
    k = n - gf2.rank(h_x) - gf2.rank(h_z)

    logical_rows = _logical_basis(h_x, h_z, k)

    h_cols = [[] for _ in range(n)]
    for i in range(n_half):
        r = h_z.row_int(i)
        while r:
            j = (r & -r).bit_length() - 1
            r &= r - 1
            h_cols[j].append(i)
    a_cols: list[list[int]] = [[] for _ in range(n)]
    for r_idx, vec in enumerate(logical_rows):
        v = vec
        while v:
            j = (v & -v).bit_length() - 1
            v &= v - 1
            a_cols[j].append(r_idx)
    name = f"bb-l{l}m{m}"
    prob = make_problem(name, n_half, n, k, h_cols, a_cols, [p_err] * n)
    if noise == "code-capacity":
        if rounds is not None:
            raise ValueError("rounds only applies to phenomenological noise")
        return prob
    if noise == "phenomenological":
        if rounds is None or rounds < 1:
            raise ValueError("phenomenological noise needs rounds >= 1")
        return stack_phenomenological(prob, rounds, p_err)
    raise ValueError(f"unknown noise model {noise!r}")


def _logical_basis(h_x: gf2.Gf2Matrix, h_z: gf2.Gf2Matrix, k: int) -> list[int]:
    """Basis of ker(h_x) independent of the row space of h_z."""
    n = h_x.n
    full = gf2.lifted_gauss_jordan(h_x)
    kernel = []
    for j in range(n):
        if (full.pivot_mask >> j) & 1:
            continue
        vec = 1 << j
        for p in full.pivots:
            if (full.matrix.row_int(p) >> j) & 1:
                vec |= 1 << p
        kernel.append(vec)
    # sift: keep kernel vectors independent modulo the row space of h_z,
    # reducing by matched lowest set bit (rows keep distinct lead bits)
    ech = gf2.lifted_forward(h_z)
    by_lead = {p: ech.matrix.row_int(p) for p in ech.pivots}
    kept: list[int] = []
    for vec in kernel:
        v = vec
        while v:
            row = by_lead.get((v & -v).bit_length() - 1)
            if row is None:
                break
            v ^= row
        if v:
            kept.append(vec)
            by_lead[(v & -v).bit_length() - 1] = v
    if len(kept) != k:
        raise AssertionError(f"logical basis size {len(kept)} != K {k}")
    return kept


def stack_phenomenological(problem: DecodingProblem, rounds: int, p_meas: float) -> DecodingProblem:
    """Stack noisy measurement rounds onto a code-capacity problem.

    Detectors become per-round syndrome differences (round t vs t-1), so a
    data fault in round t touches only the round-t difference rows of its
    column, and a measurement error in round t touches the round-t and
    round-(t+1) difference rows of its check (only round t in the final
    round).  Measurement errors have no logical action.
    """
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    M, N, K = problem.M, problem.N, problem.K
    h_cols: list[list[int]] = []
    a_cols: list[list[int]] = []
    p: list[float] = []
    for t in range(rounds):
        for j in range(N):
            h_cols.append([t * M + int(i) for i in problem.column_rows(j)])
            a_cols.append(problem.logical_rows(j).tolist())
            p.append(float(problem.p[j]))
    for t in range(rounds):
        for i in range(M):
            support = [t * M + i]
            if t + 1 < rounds:
                support.append((t + 1) * M + i)
            h_cols.append(support)
            a_cols.append([])
            p.append(p_meas)
    return make_problem(
        f"{problem.name}-pheno{rounds}",
        rounds * M,
        rounds * (N + M),
        K,
        h_cols,
        a_cols,
        p,
    )


# --- sampling -------------------------------------------------------------


def sample_faults(problem: DecodingProblem, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Draw an independent fault set and its syndrome, deterministic in seed."""
    rng = generator(seed)
    u = rng.random(problem.N)
    faults = (u < problem.p).astype(np.uint8)
    return faults, problem.syndrome_of(faults)


def is_logical_failure(problem: DecodingProblem, truth: np.ndarray, correction: np.ndarray) -> bool:
    """True iff the residual fault set acts nontrivially on the logicals."""
    residual = (np.asarray(truth, dtype=np.uint8) ^ np.asarray(correction, dtype=np.uint8))
    return bool(problem.logical_action(residual).any())
