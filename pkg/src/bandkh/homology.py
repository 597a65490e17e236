"""Exact homology of the graded integer complexes.

Everything here is arbitrary-precision integer (or small-field) linear
algebra on the small dense blocks produced by :mod:`bandkh.state_complex`.
Smith normal form uses elimination with pivoting on entries of minimal
absolute value; no modular shortcuts.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable

from .state_complex import GradedComplex, GradingKey, Matrix
from .surface import GradingS


class HomologyError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Smith normal form and ranks
# ---------------------------------------------------------------------------

def smith_normal_form(matrix: Matrix) -> tuple[int, ...]:
    """Invariant factors d1 | d2 | ... | dr (all positive, r = rank).

    >>> smith_normal_form([[2, 0], [0, 0]])
    (2,)
    >>> smith_normal_form([[1, 1], [1, 1]])
    (1,)
    >>> smith_normal_form([[2, 4], [6, 8]])
    (2, 4)
    """
    m = [list(row) for row in matrix]
    rows = len(m)
    cols = len(m[0]) if m else 0
    invariants: list[int] = []
    top = 0
    while top < rows and top < cols:
        # Locate a pivot of minimal absolute value in the active submatrix.
        pivot = None
        best = None
        for r in range(top, rows):
            for c in range(top, cols):
                v = m[r][c]
                if v and (best is None or abs(v) < best):
                    best = abs(v)
                    pivot = (r, c)
                    if best == 1:
                        break
            if best == 1:
                break
        if pivot is None:
            break
        r, c = pivot
        m[top], m[r] = m[r], m[top]
        for row in m:
            row[top], row[c] = row[c], row[top]
        while True:
            # Clear the pivot column, then the pivot row, by division with
            # remainder; restart whenever a smaller remainder appears.
            p = m[top][top]
            dirty = False
            for r in range(top + 1, rows):
                if m[r][top]:
                    q = m[r][top] // p
                    if q:
                        for c in range(top, cols):
                            m[r][c] -= q * m[top][c]
                    if m[r][top]:
                        m[top], m[r] = m[r], m[top]
                        dirty = True
                        break
            if dirty:
                continue
            for c in range(top + 1, cols):
                if m[top][c]:
                    q = m[top][c] // p
                    if q:
                        for r in range(top, rows):
                            m[r][c] -= q * m[r][top]
                    if m[top][c]:
                        for row in m:
                            row[top], row[c] = row[c], row[top]
                        dirty = True
                        break
            if not dirty:
                break
        # Enforce divisibility of the remaining submatrix by the pivot.
        p = m[top][top]
        offender = None
        for r in range(top + 1, rows):
            for c in range(top + 1, cols):
                if m[r][c] % p:
                    offender = r
                    break
            if offender is not None:
                break
        if offender is not None:
            for c in range(top, cols):
                m[top][c] += m[offender][c]
            continue
        invariants.append(abs(p))
        top += 1
    return tuple(invariants)


def rank_rational(matrix: Matrix) -> int:
    """Rank over the rationals by fraction-free (Bareiss) elimination."""
    m = [list(row) for row in matrix]
    rows = len(m)
    cols = len(m[0]) if m else 0
    rank = 0
    prev = 1
    for c in range(cols):
        pivot_row = None
        for r in range(rank, rows):
            if m[r][c]:
                pivot_row = r
                break
        if pivot_row is None:
            continue
        m[rank], m[pivot_row] = m[pivot_row], m[rank]
        p = m[rank][c]
        for r in range(rank + 1, rows):
            for cc in range(c + 1, cols):
                m[r][cc] = (p * m[r][cc] - m[r][c] * m[rank][cc]) // prev
            m[r][c] = 0
        prev = p
        rank += 1
        if rank == rows:
            break
    return rank


def rank_mod2(matrix: Matrix) -> int:
    """Rank over GF(2); rows packed into Python ints."""
    packed = []
    for row in matrix:
        bits = 0
        for c, v in enumerate(row):
            if v & 1:
                bits |= 1 << c
        if bits:
            packed.append(bits)
    rank = 0
    for _ in range(len(packed)):
        packed = [b for b in packed if b]
        if not packed:
            break
        pivot = min(packed, key=lambda b: b & -b)
        packed.remove(pivot)
        low = pivot & -pivot
        packed = [b ^ pivot if b & low else b for b in packed]
        rank += 1
    return rank


# ---------------------------------------------------------------------------
# Abelian groups and homology tables
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AbelianGroup:
    """Finitely generated abelian group: free rank plus a divisor chain."""

    rank: int
    torsion: tuple[int, ...] = ()

    def __post_init__(self):
        if self.rank < 0:
            raise HomologyError("negative rank")
        for a, b in zip(self.torsion, self.torsion[1:]):
            if b % a:
                raise HomologyError("torsion must form a divisor chain")
        if any(t <= 1 for t in self.torsion):
            raise HomologyError("torsion entries must exceed 1")

    @property
    def trivial(self) -> bool:
        return self.rank == 0 and not self.torsion

    @property
    def text(self) -> str:
        if self.trivial:
            return "0"
        parts = []
        if self.rank:
            parts.append("Z" if self.rank == 1 else f"Z^{self.rank}")
        parts.extend(f"Z/{t}" for t in self.torsion)
        return " + ".join(parts)

    def __repr__(self):
        return f"AbelianGroup({self.text})"


def divisor_chain(factors: Iterable[int]) -> tuple[int, ...]:
    """Canonical divisor chain of a direct sum of cyclic groups."""
    primes: dict[int, list[int]] = {}
    for n in factors:
        n = abs(n)
        if n <= 1:
            continue
        d = 2
        while d * d <= n:
            if n % d == 0:
                e = 0
                while n % d == 0:
                    n //= d
                    e += 1
                primes.setdefault(d, []).append(e)
            d += 1
        if n > 1:
            primes.setdefault(n, []).append(1)
    if not primes:
        return ()
    depth = max(len(v) for v in primes.values())
    chain = []
    for k in range(depth):
        term = 1
        for p, exps in primes.items():
            exps_sorted = sorted(exps, reverse=True)
            if k < len(exps_sorted):
                term *= p ** exps_sorted[k]
        chain.append(term)
    return tuple(reversed(chain))


@dataclass
class HomologyTable:
    """Map (i, j, s) -> group, with the coefficient tag it was computed over."""

    groups: dict[GradingKey, AbelianGroup]
    coefficients: str = "Z"

    def group(self, key: GradingKey) -> AbelianGroup:
        return self.groups.get(key, AbelianGroup(0))

    def keys_sorted(self) -> list[GradingKey]:
        return sorted(self.groups, key=lambda k: (k[1], k[2].sort_key, k[0]))

    def total_rank(self) -> int:
        return sum(g.rank for g in self.groups.values())

    def to_tsv(self) -> str:
        lines = []
        for (i, j, s) in self.keys_sorted():
            g = self.groups[(i, j, s)]
            torsion = ",".join(str(t) for t in g.torsion) or "-"
            lines.append(f"{i}\t{j}\t{s.text}\t{g.rank}\t{torsion}")
        return "\n".join(lines)


COEFFICIENTS = ("Z", "Q", "Z2")


def homology(cx: GradedComplex, coefficients: str = "Z") -> HomologyTable:
    """Homology of every (i, j, s) block.

    Over Z the result is rank plus torsion divisor chain; over Q and Z/2 the
    rank field holds the dimension and torsion is empty.
    """
    if coefficients not in COEFFICIENTS:
        raise HomologyError(f"unknown coefficients {coefficients!r}")
    cx.check_d_squared()
    groups: dict[GradingKey, AbelianGroup] = {}
    for key in cx.buckets:
        i, j, s = key
        dim = cx.dim(key)
        d_out = cx.differential(key)
        d_in = cx.differential((i + 2, j, s))
        if coefficients == "Z":
            snf_in = smith_normal_form(d_in)
            rank = dim - len(smith_normal_form(d_out)) - len(snf_in)
            torsion = divisor_chain(t for t in snf_in if t > 1)
        elif coefficients == "Q":
            rank = dim - rank_rational(d_out) - rank_rational(d_in)
            torsion = ()
        else:
            rank = dim - rank_mod2(d_out) - rank_mod2(d_in)
            torsion = ()
        if rank or torsion:
            groups[key] = AbelianGroup(rank, torsion)
    return HomologyTable(groups, coefficients)


def aggregate_handlebody(table: HomologyTable) -> dict[tuple[int, int], AbelianGroup]:
    """Direct sum over the s-grading, leaving a table indexed by (i, j)."""
    ranks: dict[tuple[int, int], int] = {}
    torsions: dict[tuple[int, int], list[int]] = {}
    for (i, j, _s), g in table.groups.items():
        ranks[(i, j)] = ranks.get((i, j), 0) + g.rank
        torsions.setdefault((i, j), []).extend(g.torsion)
    out = {}
    for ij in ranks:
        grp = AbelianGroup(ranks[ij], divisor_chain(torsions[ij]))
        if not grp.trivial:
            out[ij] = grp
    return out


def table_isomorphic(t1: HomologyTable, t2: HomologyTable,
                     shift: tuple[int, int] = (0, 0),
                     s_map: Callable[[GradingS], GradingS] | None = None) -> bool:
    """Entrywise equality of t1 at (i, j, s) with t2 at (i+di, j+dj, s_map(s))."""
    di, dj = shift
    remap = s_map or (lambda s: s)
    moved = {(i + di, j + dj, remap(s)): g for (i, j, s), g in t1.groups.items()}
    return moved == t2.groups


def euler_characteristic_consistent(cx: GradedComplex, table: HomologyTable) -> bool:
    """Alternating block dimensions match alternating homology ranks per (j, s)."""
    sums: dict[tuple[int, GradingS], int] = {}
    for (i, j, s) in cx.buckets:
        sign = -1 if ((j - i) // 2) % 2 else 1
        sums[(j, s)] = sums.get((j, s), 0) + sign * cx.dim((i, j, s))
    for (i, j, s), g in table.groups.items():
        sign = -1 if ((j - i) // 2) % 2 else 1
        sums[(j, s)] = sums.get((j, s), 0) - sign * g.rank
    return all(v == 0 for v in sums.values())
