"""Enhanced states and the triply-graded chain complex of a diagram.

An enhanced state is a marker vector (one sign per crossing) together with a
sign label on every circle of the resulting smoothing.  Its gradings are

* ``i``  -- positive minus negative markers,
* ``tau`` -- positive minus negative *trivial* circles,
* ``j = i + 2 tau``,
* ``s``  -- the signed sum of the unbounding circle classes.

Labels of Moebius-bounding circles are stored but contribute to neither
``tau`` nor ``s``.

The differential lowers ``i`` by 2 and preserves ``j`` and ``s``.  Its
matrix entry from S to S' is ``(-1)^t`` when the two states differ exactly
by one marker turning from +1 to -1, all untouched circles keep their
labels, ``j`` is preserved, and the signed label sum of every nontrivial
class is conserved (Moebius-bounding classes included, even though the
gradings ignore them); ``t`` counts the negative markers at crossings
ordered after the flipped one.  The local label rules (the merge/split
table) are *derived* from these conditions, never hard-coded.

Frozen markers
--------------
A :class:`GradedComplex` may freeze some crossings at a fixed marker.  The
frozen complex is canonically the complex of the diagram with those
crossings smoothed away, without rebuilding the diagram: the gradings count
free crossings only, and the differential never flips a frozen crossing.
This representation is what the skein-triple and Reidemeister chain maps
are built on, since all their states live over one common diagram.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .diagram import Circle, Diagram, MarkerVector, smooth
from .surface import CurveKind, GradingS

Matrix = list[list[int]]
GradingKey = tuple[int, int, GradingS]


class ComplexError(ValueError):
    pass


@dataclass(frozen=True)
class EnhancedState:
    """One basis state: full markers plus one label per circle.

    The cached gradings refer to the owning complex: ``i`` and ``m_neg``
    count free crossings only.
    """

    markers: MarkerVector
    labels: tuple[int, ...]
    i: int = field(compare=False)
    tau: int = field(compare=False)
    j: int = field(compare=False)
    s: GradingS = field(compare=False)
    m_neg: int = field(compare=False)

    @property
    def grading(self) -> GradingKey:
        return (self.i, self.j, self.s)


def _state_text(circles: Sequence[Circle], markers: MarkerVector,
                labels: Sequence[int]) -> str:
    marks = "".join("+" if m > 0 else "-" for m in markers)
    parts = []
    for circ, lab in zip(circles, labels):
        sign = "+" if lab > 0 else "-"
        if circ.kind is CurveKind.TRIVIAL:
            parts.append(f"(triv:{sign})")
        else:
            parts.append(f"({circ.cls.text}:{sign}0)")
    return marks + " " + "".join(parts) if parts else marks


@dataclass
class _Smoothing:
    """Cached data of one marker vector's smoothing."""

    circles: tuple[Circle, ...]
    trivial: tuple[int, ...]
    unbounding: tuple[tuple[int, object], ...]  # (circle index, CurveClass)
    by_key: dict


def _analyze(diagram: Diagram, markers: MarkerVector) -> _Smoothing:
    circles = smooth(diagram, markers)
    trivial = tuple(k for k, c in enumerate(circles) if c.kind is CurveKind.TRIVIAL)
    unb = tuple((k, c.cls) for k, c in enumerate(circles)
                if c.kind is CurveKind.UNBOUNDING)
    return _Smoothing(circles, trivial, unb, {c.key: k for k, c in enumerate(circles)})


class GradedComplex:
    """The chain complex of a diagram, optionally with frozen markers.

    States are enumerated deterministically: free markers in binary order
    (+1 before -1, earliest crossing most significant), then labels in the
    same order per circle, circles in their canonical smoothing order.
    """

    def __init__(self, diagram: Diagram, frozen: Mapping[int, int] | None = None):
        self.diagram = diagram
        self.frozen = dict(frozen or {})
        for pos, mark in self.frozen.items():
            if not 0 <= pos < diagram.n_crossings or mark not in (1, -1):
                raise ComplexError(f"bad frozen marker {pos}:{mark}")
        self.free = tuple(k for k in range(diagram.n_crossings)
                          if k not in self.frozen)
        self._smooth_cache: dict[MarkerVector, _Smoothing] = {}
        self.buckets: dict[GradingKey, list[EnhancedState]] = {}
        self.index: dict[tuple, tuple[GradingKey, int]] = {}
        self._blocks: dict[GradingKey, Matrix] = {}
        self._enumerate()

    # -- construction ---------------------------------------------------

    def smoothing(self, markers: MarkerVector) -> _Smoothing:
        try:
            return self._smooth_cache[markers]
        except KeyError:
            data = _analyze(self.diagram, markers)
            self._smooth_cache[markers] = data
            return data

    def _full_markers(self, free_markers: Sequence[int]) -> MarkerVector:
        out = [0] * self.diagram.n_crossings
        for pos, mark in self.frozen.items():
            out[pos] = mark
        for pos, mark in zip(self.free, free_markers):
            out[pos] = mark
        return tuple(out)

    def make_state(self, markers: MarkerVector, labels: Sequence[int]) -> EnhancedState:
        data = self.smoothing(markers)
        if len(labels) != len(data.circles):
            raise ComplexError("label count does not match circle count")
        i = sum(markers[p] for p in self.free)
        tau = sum(labels[k] for k in data.trivial)
        s = GradingS.from_pairs((cls, labels[k]) for k, cls in data.unbounding)
        m_neg = sum(1 for p in self.free if markers[p] < 0)
        return EnhancedState(markers, tuple(labels), i, tau, i + 2 * tau, s, m_neg)

    def _enumerate(self) -> None:
        for free_markers in itertools.product((1, -1), repeat=len(self.free)):
            markers = self._full_markers(free_markers)
            data = self.smoothing(markers)
            for labels in itertools.product((1, -1), repeat=len(data.circles)):
                state = self.make_state(markers, labels)
                bucket = self.buckets.setdefault(state.grading, [])
                self.index[(state.markers, state.labels)] = (state.grading, len(bucket))
                bucket.append(state)

    # -- queries ----------------------------------------------------------

    def dim(self, key: GradingKey) -> int:
        return len(self.buckets.get(key, ()))

    def gradings(self) -> list[GradingKey]:
        return sorted(self.buckets, key=lambda k: (k[1], k[2].sort_key, k[0]))

    def locate(self, markers: MarkerVector, labels: Sequence[int]) -> tuple[GradingKey, int]:
        return self.index[(markers, tuple(labels))]

    def state_text(self, state: EnhancedState) -> str:
        return _state_text(self.smoothing(state.markers).circles,
                           state.markers, state.labels)

    def t_count(self, state: EnhancedState, pos: int) -> int:
        """Negative free markers at crossings ordered after ``pos``."""
        return sum(1 for q in self.free if q > pos and state.markers[q] < 0)

    def t_count_plus(self, state: EnhancedState, pos: int) -> int:
        """Positive free markers at crossings ordered after ``pos``."""
        return sum(1 for q in self.free if q > pos and state.markers[q] > 0)

    # -- the differential ---------------------------------------------------

    def resmoothings(self, state: EnhancedState, pos: int,
                     delta_tau: int = 1) -> list[EnhancedState]:
        """States reached by turning the +1 marker at ``pos`` into -1.

        Untouched circles keep their labels; the circles through the
        crossing are relabeled in every way that raises the trivial-circle
        sum by ``delta_tau`` and preserves the signed class sum of the
        nontrivial circles.  With ``delta_tau=1`` this is exactly the
        incidence condition of the differential.

        The conservation law covers Moebius-bounding classes as well, even
        though they enter neither the j- nor the s-grading: dropping them
        from it makes the partial derivatives at two crossings stop
        commuting on the Moebius band (a folded boundary-parallel loop is a
        counterexample), while with them the local rules reproduce the
        merge/split table including its one-sided rows.
        """
        if state.markers[pos] <= 0:
            return []
        src = self.smoothing(state.markers)
        flipped = state.markers[:pos] + (-1,) + state.markers[pos + 1:]
        tgt = self.smoothing(flipped)
        cid = self.diagram.crossings[pos]
        vslots = {(cid, s) for s in range(4)}

        touched_src = [k for k, c in enumerate(src.circles) if c.slots & vslots]
        labels_by_key = {}
        for k, c in enumerate(src.circles):
            if not (c.slots & vslots):
                labels_by_key[c.key] = state.labels[k]

        fixed: dict[int, int] = {}
        new_circles: list[int] = []
        for k, c in enumerate(tgt.circles):
            if c.slots & vslots:
                new_circles.append(k)
            else:
                fixed[k] = labels_by_key[c.key]

        tau_src = 0
        psi_src: dict = {}
        for k in touched_src:
            circ, lab = src.circles[k], state.labels[k]
            if circ.kind is CurveKind.TRIVIAL:
                tau_src += lab
            else:
                psi_src[circ.cls] = psi_src.get(circ.cls, 0) + lab

        out = []
        for assignment in itertools.product((1, -1), repeat=len(new_circles)):
            tau_tgt = 0
            psi_tgt: dict = {}
            for k, lab in zip(new_circles, assignment):
                circ = tgt.circles[k]
                if circ.kind is CurveKind.TRIVIAL:
                    tau_tgt += lab
                else:
                    psi_tgt[circ.cls] = psi_tgt.get(circ.cls, 0) + lab
            if tau_tgt != tau_src + delta_tau:
                continue
            if {c: x for c, x in psi_tgt.items() if x} != \
                    {c: x for c, x in psi_src.items() if x}:
                continue
            labels = [0] * len(tgt.circles)
            for k, lab in fixed.items():
                labels[k] = lab
            for k, lab in zip(new_circles, assignment):
                labels[k] = lab
            out.append(self.make_state(flipped, labels))
        return out

    def partial_derivative(self, state: EnhancedState, pos: int) -> list[EnhancedState]:
        """Unsigned partial derivative at one free crossing."""
        if pos not in self.free:
            raise ComplexError(f"crossing position {pos} is frozen")
        return self.resmoothings(state, pos)

    def differential(self, key: GradingKey) -> Matrix:
        """Matrix of d from the bucket at ``key`` to the bucket at i-2."""
        if key in self._blocks:
            return self._blocks[key]
        i, j, s = key
        src = self.buckets.get(key, [])
        tgt_key = (i - 2, j, s)
        rows = self.dim(tgt_key)
        mat = [[0] * len(src) for _ in range(rows)]
        for col, state in enumerate(src):
            for pos in self.free:
                if state.markers[pos] <= 0:
                    continue
                sign = -1 if self.t_count(state, pos) % 2 else 1
                for target in self.resmoothings(state, pos):
                    tkey, row = self.locate(target.markers, target.labels)
                    assert tkey == tgt_key
                    mat[row][col] += sign
        self._blocks[key] = mat
        return mat

    def check_d_squared(self) -> None:
        """Raise :class:`ComplexError` unless d composed with itself is zero."""
        for (i, j, s) in list(self.buckets):
            upper = self.differential((i + 2, j, s))
            lower = self.differential((i, j, s))
            if not upper or not lower:
                continue
            prod = _mat_mul(lower, upper)
            if any(any(row) for row in prod):
                raise ComplexError(
                    "differential does not square to zero; the diagram is not "
                    "drawable on the declared surface")

    def dual_matrices(self) -> dict[GradingKey, Matrix]:
        """Cochain blocks: the map out of (i, j, s) raising i by 2.

        The block at (i, j, s) is the transpose of the differential block at
        (i+2, j, s); identifying each state with its dual basis vector makes
        this the coboundary.
        """
        out = {}
        for (i, j, s) in self.buckets:
            out[(i, j, s)] = _transpose(self.differential((i + 2, j, s)),
                                        self.dim((i, j, s)), self.dim((i + 2, j, s)))
        return out

    def d_plus(self, key: GradingKey) -> Matrix:
        """Differential signed by positive markers after the crossing instead."""
        i, j, s = key
        src = self.buckets.get(key, [])
        tgt_key = (i - 2, j, s)
        mat = [[0] * len(src) for _ in range(self.dim(tgt_key))]
        for col, state in enumerate(src):
            for pos in self.free:
                if state.markers[pos] <= 0:
                    continue
                sign = -1 if self.t_count_plus(state, pos) % 2 else 1
                for target in self.resmoothings(state, pos):
                    _, row = self.locate(target.markers, target.labels)
                    mat[row][col] += sign
        return mat


def incidence_number(complex_: GradedComplex, s_from: EnhancedState,
                     s_to: EnhancedState, pos: int) -> int:
    """1 when the flip at ``pos`` connects the two states, else 0."""
    return int(any(t.markers == s_to.markers and t.labels == s_to.labels
                   for t in complex_.resmoothings(s_from, pos))
               if s_from.markers[pos] > 0 else 0)


# ---------------------------------------------------------------------------
# Spec-level convenience wrappers
# ---------------------------------------------------------------------------

def enumerate_states(diagram: Diagram) -> GradedComplex:
    return GradedComplex(diagram)


def differential_matrices(diagram: Diagram) -> GradedComplex:
    cx = GradedComplex(diagram)
    for key in list(cx.buckets):
        cx.differential(key)
    return cx


# ---------------------------------------------------------------------------
# Small exact integer matrix helpers shared across modules
# ---------------------------------------------------------------------------

def _mat_mul(a: Matrix, b: Matrix) -> Matrix:
    if not a or not b:
        return [[0] * (len(b[0]) if b else 0) for _ in range(len(a))]
    n, k, m = len(a), len(b), len(b[0])
    out = [[0] * m for _ in range(n)]
    for r in range(n):
        ar = a[r]
        orow = out[r]
        for t in range(k):
            x = ar[t]
            if x:
                brow = b[t]
                for c in range(m):
                    if brow[c]:
                        orow[c] += x * brow[c]
    return out


def _transpose(mat: Matrix, rows: int, cols: int) -> Matrix:
    out = [[0] * rows for _ in range(cols)]
    for r in range(rows):
        for c in range(cols):
            if mat[r][c]:
                out[c][r] = mat[r][c]
    return out
