"""Run-interval extraction, candidate pairing, and one-to-one matching.

Maximal active runs of a mask become half open intervals ``[i*h, j*h)``;
adjacent runs never share an endpoint frame, which avoids double
ownership of shared boundaries.  A reference/prediction pair is a
matching candidate when the intervals overlap and at least one endpoint
pair differs by at most three times the tolerance; its cost is

    cost = |r0 - p0| + |r1 - p1| - overlap

so small boundary error is cheap and overlap is a reward.  The greedy
policy keeps the cheapest still-unmatched candidates; the exact policy
returns a maximum cardinality matching of minimum total cost and is
intended for bounded audit instances.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .frames import ObligationScore, _as_mask

_TIME_EPS = 1e-9


class AuditBoundError(Exception):
    """An exact-matching instance exceeded the configured audit bound."""


@dataclass(frozen=True)
class Interval:
    """Half open span ``[start, end)`` in seconds."""

    start: float
    end: float

    def __post_init__(self) -> None:
        if not (self.start < self.end):
            raise ValueError(f"empty interval [{self.start}, {self.end})")

    @property
    def length(self) -> float:
        return self.end - self.start


def overlap_length(a: Interval, b: Interval) -> float:
    """Overlap of half open intervals; touching intervals overlap zero."""
    return max(0.0, min(a.end, b.end) - max(a.start, b.start))


def extract_intervals(mask, h: float, merge_gap: float = 0.0) -> tuple[Interval, ...]:
    """Maximal active runs as half open intervals, in one left-to-right scan.

    Runs separated by an inactive gap of duration at most ``merge_gap``
    are combined into one interval.
    """
    if merge_gap < 0.0:
        raise ValueError(f"merge gap must be nonnegative, got {merge_gap!r}")
    arr = _as_mask(mask)
    if not (h > 0.0):
        raise ValueError(f"frame step must be positive, got {h!r}")
    runs: list[tuple[int, int]] = []
    start = None
    for i, active in enumerate(arr):
        if active and start is None:
            start = i
        elif not active and start is not None:
            runs.append((start, i))
            start = None
    if start is not None:
        runs.append((start, len(arr)))
    merged: list[tuple[int, int]] = []
    for lo, hi in runs:
        if merged and (lo - merged[-1][1]) * h <= merge_gap + _TIME_EPS:
            merged[-1] = (merged[-1][0], hi)
        else:
            merged.append((lo, hi))
    return tuple(Interval(lo * h, hi * h) for lo, hi in merged)


@dataclass(frozen=True)
class CandidatePair:
    ref_index: int
    pred_index: int
    ref: Interval
    pred: Interval
    cost: float


def candidates(refs, preds, epsilon: float) -> tuple[CandidatePair, ...]:
    """All overlapping pairs with some endpoint within three tolerances."""
    if not (epsilon > 0.0):
        raise ValueError(f"tolerance must be positive, got {epsilon!r}")
    limit = 3.0 * epsilon + _TIME_EPS
    out: list[CandidatePair] = []
    for ri, ref in enumerate(refs):
        for pi, pred in enumerate(preds):
            if overlap_length(ref, pred) <= 0.0:
                continue
            if (
                abs(ref.start - pred.start) > limit
                and abs(ref.end - pred.end) > limit
            ):
                continue
            cost = (
                abs(ref.start - pred.start)
                + abs(ref.end - pred.end)
                - overlap_length(ref, pred)
            )
            out.append(CandidatePair(ri, pi, ref, pred, cost))
    return tuple(out)


@dataclass(frozen=True)
class Matching:
    """One-to-one subset of the candidate relation."""

    pairs: frozenset[tuple[int, int]]
    policy: str

    @property
    def sorted_pairs(self) -> tuple[tuple[int, int], ...]:
        return tuple(sorted(self.pairs))

    @property
    def matched_refs(self) -> frozenset[int]:
        return frozenset(ri for ri, _ in self.pairs)

    @property
    def matched_preds(self) -> frozenset[int]:
        return frozenset(pi for _, pi in self.pairs)

    def __len__(self) -> int:
        return len(self.pairs)


def _greedy_key(pair: CandidatePair):
    # Ties on cost break by interval position; starts are unique within a
    # family of disjoint runs, the ends extend the order to arbitrary input.
    return (pair.cost, pair.ref.start, pair.pred.start, pair.ref.end, pair.pred.end)


def match_greedy(cands) -> Matching:
    """Ascending-cost scan keeping pairs whose sides are both unmatched."""
    taken_refs: set[int] = set()
    taken_preds: set[int] = set()
    pairs: set[tuple[int, int]] = set()
    for pair in sorted(cands, key=_greedy_key):
        if pair.ref_index in taken_refs or pair.pred_index in taken_preds:
            continue
        taken_refs.add(pair.ref_index)
        taken_preds.add(pair.pred_index)
        pairs.add((pair.ref_index, pair.pred_index))
    return Matching(frozenset(pairs), "greedy")


def match_exact(cands, bound: int = 24) -> Matching:
    """Maximum cardinality matching of minimum total cost.

    Solved by an assignment reduction: candidate cells are discounted by a
    constant larger than the total absolute cost, so the solver prefers
    more real pairs before comparing costs.  Instances with more than
    ``bound`` intervals on either side raise :class:`AuditBoundError`.
    """
    cands = tuple(cands)
    if not cands:
        return Matching(frozenset(), "exact")
    ref_ids = sorted({c.ref_index for c in cands})
    pred_ids = sorted({c.pred_index for c in cands})
    if len(ref_ids) > bound or len(pred_ids) > bound:
        raise AuditBoundError(
            f"instance has {len(ref_ids)}x{len(pred_ids)} intervals, bound is {bound}"
        )
    big = sum(abs(c.cost) for c in cands) + 1.0
    matrix = np.zeros((len(ref_ids), len(pred_ids)))
    ref_pos = {r: i for i, r in enumerate(ref_ids)}
    pred_pos = {p: i for i, p in enumerate(pred_ids)}
    cells = {}
    for c in cands:
        key = (ref_pos[c.ref_index], pred_pos[c.pred_index])
        # Duplicate candidates for the same pair keep the cheapest cell.
        if key not in cells or c.cost < cells[key]:
            cells[key] = c.cost
    for (i, j), cost in cells.items():
        matrix[i, j] = cost - big
    rows, cols = linear_sum_assignment(matrix)
    pairs = frozenset(
        (ref_ids[i], pred_ids[j])
        for i, j in zip(rows, cols)
        if (i, j) in cells
    )
    return Matching(pairs, "exact")


def boundary_f1(refs, preds, matching: Matching) -> float:
    """Event-level F1 of the matching: |M|/|P| precision, |M|/|R| recall."""
    n_refs = len(tuple(refs))
    n_preds = len(tuple(preds))
    if n_refs == 0 and n_preds == 0:
        return 1.0
    if n_refs == 0 or n_preds == 0:
        return 0.0
    matched = len(matching)
    if matched == 0:
        return 0.0
    precision = matched / n_preds
    recall = matched / n_refs
    return 2.0 * precision * recall / (precision + recall)


def duration_score(refs, preds, matching: Matching, threshold: float) -> ObligationScore:
    """Mean over matched pairs of |ref length - pred length| <= threshold."""
    refs = tuple(refs)
    preds = tuple(preds)
    obligated = len(matching)
    satisfied = 0
    for ri, pi in matching.pairs:
        if abs(refs[ri].length - preds[pi].length) <= threshold + _TIME_EPS:
            satisfied += 1
    ratio = satisfied / obligated if obligated else 1.0
    return ObligationScore(ratio, obligated, satisfied, obligated - satisfied)


def covering_counts(refs, preds) -> tuple[int, ...]:
    """Number of predictions with positive overlap against each reference."""
    preds = tuple(preds)
    return tuple(
        sum(1 for p in preds if overlap_length(r, p) > 0.0) for r in refs
    )


def fragmentation_score(refs, preds, matching: Matching) -> ObligationScore:
    """Mean over references of (matched and covered by at most one prediction)."""
    refs = tuple(refs)
    counts = covering_counts(refs, preds)
    matched_refs = matching.matched_refs
    obligated = len(refs)
    satisfied = sum(
        1 for ri in range(obligated) if ri in matched_refs and counts[ri] <= 1
    )
    ratio = satisfied / obligated if obligated else 1.0
    return ObligationScore(ratio, obligated, satisfied, obligated - satisfied)


@dataclass(frozen=True)
class MatcherAudit:
    """Greedy-versus-exact comparison on one interval instance."""

    greedy: Matching
    exact: Matching
    changed: bool
    greedy_boundary_f1: float
    exact_boundary_f1: float
    greedy_duration: ObligationScore
    exact_duration: ObligationScore
    greedy_fragmentation: ObligationScore
    exact_fragmentation: ObligationScore

    @property
    def boundary_f1_delta(self) -> float:
        return self.exact_boundary_f1 - self.greedy_boundary_f1

    @property
    def duration_delta(self) -> float:
        return self.exact_duration.score - self.greedy_duration.score

    @property
    def fragmentation_delta(self) -> float:
        return self.exact_fragmentation.score - self.greedy_fragmentation.score


def matcher_audit(refs, preds, epsilon: float, bound: int = 24) -> MatcherAudit:
    """Run both matching policies and report the event-level deltas.

    The duration predicate uses the standard ``2 * epsilon`` threshold.
    """
    refs = tuple(refs)
    preds = tuple(preds)
    cands = candidates(refs, preds, epsilon)
    greedy = match_greedy(cands)
    exact = match_exact(cands, bound=bound)
    threshold = 2.0 * epsilon
    return MatcherAudit(
        greedy=greedy,
        exact=exact,
        changed=greedy.pairs != exact.pairs,
        greedy_boundary_f1=boundary_f1(refs, preds, greedy),
        exact_boundary_f1=boundary_f1(refs, preds, exact),
        greedy_duration=duration_score(refs, preds, greedy, threshold),
        exact_duration=duration_score(refs, preds, exact, threshold),
        greedy_fragmentation=fragmentation_score(refs, preds, greedy),
        exact_fragmentation=fragmentation_score(refs, preds, exact),
    )
