"""Finite-universe theory helpers and risk-ordered contract selection.

Truth signatures enumerate every Boolean environment over a small atom
set and frame count, so formula equivalence and satisfiability are
decided exactly on that universe.  Clause signatures over a calibration
set drive duplicate collapse (observational equivalence), retained-basis
construction, and the search for the lexicographically least separating
contract under (coordinate count, monitor cost, source order).
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Mapping, Sequence

import numpy as np

from .contracts import (
    Contract,
    EventClause,
    FrameClause,
    event_clause_score,
)
from .frames import derive_edge_atoms, evaluate_arrays, score
from .intervals import candidates, extract_intervals, match_exact, match_greedy
from .parser import Formula, node_count

# Enumeration ceiling: 2**(atoms * frames) environments.
MAX_UNIVERSE_BITS = 20


class EnumerationBoundError(Exception):
    """The requested universe exceeds the enumeration ceiling."""


def _universe(atoms: Sequence[str], n: int) -> dict[str, np.ndarray]:
    """All 2**(a*n) environments stacked row-wise per atom.

    Environment ``e`` assigns atom ``j`` (sorted order) at frame ``i`` the
    bit ``j * n + i`` of ``e``.
    """
    names = sorted(atoms)
    bits = len(names) * n
    if bits > MAX_UNIVERSE_BITS:
        raise EnumerationBoundError(
            f"universe needs 2**{bits} environments, ceiling is 2**{MAX_UNIVERSE_BITS}"
        )
    count = 1 << bits
    env_ids = np.arange(count, dtype=np.int64)
    stacked: dict[str, np.ndarray] = {}
    for j, name in enumerate(names):
        shifts = j * n + np.arange(n, dtype=np.int64)
        stacked[name] = ((env_ids[:, None] >> shifts[None, :]) & 1).astype(bool)
    return stacked


def truth_signature(formula: Formula, atoms: Sequence[str], n: int, h: float) -> bytes:
    """Concatenated valuation over every environment, canonically packed.

    Two formulas are equivalent on the universe iff their signatures are
    equal byte for byte.
    """
    stacked = _universe(atoms, n)
    if n == 0:
        return b""
    values = evaluate_arrays(formula, stacked, h)
    return np.packbits(values.reshape(-1).astype(np.uint8)).tobytes()


def satisfiable(formula: Formula, atoms: Sequence[str], n: int, h: float) -> bool:
    """True iff some environment in the universe yields a true frame."""
    stacked = _universe(atoms, n)
    if n == 0:
        return False
    return bool(evaluate_arrays(formula, stacked, h).any())


@dataclass(frozen=True)
class CalibrationCase:
    """One trace pair with its declared risk value (higher = riskier)."""

    id: str
    ref_mask: tuple[int, ...]
    pred_mask: tuple[int, ...]
    risk: float
    frame_step: float

    def __post_init__(self) -> None:
        if len(self.ref_mask) != len(self.pred_mask):
            raise ValueError(f"case {self.id!r}: mask lengths differ")


@dataclass(frozen=True)
class BasisClause:
    """A candidate clause with its source position and monitor cost."""

    clause: FrameClause | EventClause
    source_order: int
    cost: int

    @property
    def name(self) -> str:
        return self.clause.name


@dataclass(frozen=True)
class CandidateBasis:
    """Ordered candidate clauses plus the settings used to evaluate them."""

    clauses: tuple[BasisClause, ...]
    tolerance: float
    merge_gap: float = 0.0
    matcher: str = "greedy"


def clause_cost(clause: FrameClause | EventClause) -> int:
    """Monitor cost in evaluation nodes; event clauses count their two sides."""
    if isinstance(clause, FrameClause):
        return node_count(clause.formula) + node_count(clause.obligation)
    return 2


def basis_from_contract(contract: Contract) -> CandidateBasis:
    clauses = tuple(
        BasisClause(clause, order, clause_cost(clause))
        for order, clause in enumerate(contract.clauses)
    )
    return CandidateBasis(clauses, contract.tolerance, contract.merge_gap, contract.matcher)


def clause_value(basis: CandidateBasis, clause: BasisClause, case: CalibrationCase) -> float:
    """Monitor one clause on one calibration case."""
    h = case.frame_step
    env = derive_edge_atoms(case.ref_mask, case.pred_mask, h)
    inner = clause.clause
    if isinstance(inner, FrameClause):
        return score(inner.formula, inner.obligation, env).score
    refs = extract_intervals(case.ref_mask, h, basis.merge_gap)
    preds = extract_intervals(case.pred_mask, h, basis.merge_gap)
    cands = candidates(refs, preds, basis.tolerance)
    matching = match_greedy(cands) if basis.matcher == "greedy" else match_exact(cands)
    return event_clause_score(inner, refs, preds, matching, basis.tolerance).score


@dataclass(frozen=True)
class ClauseSignature:
    """Clause values across the calibration cases, reproducible by re-monitoring."""

    clause_id: int
    values: tuple[float, ...]


def clause_signatures(
    basis: CandidateBasis, cases: Sequence[CalibrationCase]
) -> tuple[ClauseSignature, ...]:
    return tuple(
        ClauseSignature(
            clause.source_order,
            tuple(clause_value(basis, clause, case) for case in cases),
        )
        for clause in basis.clauses
    )


@dataclass(frozen=True)
class ObservationalClass:
    """Clauses indistinguishable on every calibration case."""

    members: tuple[int, ...]  # source orders, ascending
    values: tuple[float, ...]
    constant: bool

    @property
    def representative(self) -> int:
        return self.members[0]


def observational_classes(
    basis: CandidateBasis, cases: Sequence[CalibrationCase]
) -> tuple[ObservationalClass, ...]:
    """Partition clauses by exact equality of their calibration signatures."""
    groups: dict[tuple[float, ...], list[int]] = {}
    for signature in clause_signatures(basis, cases):
        groups.setdefault(signature.values, []).append(signature.clause_id)
    classes = []
    for values, members in groups.items():
        constant = len(set(values)) <= 1
        classes.append(ObservationalClass(tuple(sorted(members)), values, constant))
    classes.sort(key=lambda c: c.representative)
    return tuple(classes)


def retained_basis(
    basis: CandidateBasis, cases: Sequence[CalibrationCase]
) -> CandidateBasis:
    """Lowest-source-order representative per nonconstant class.

    Constant clauses cannot separate any risk pair and are removed.
    """
    keep = {
        cls.representative
        for cls in observational_classes(basis, cases)
        if not cls.constant
    }
    clauses = tuple(c for c in basis.clauses if c.source_order in keep)
    return CandidateBasis(clauses, basis.tolerance, basis.merge_gap, basis.matcher)


@dataclass(frozen=True)
class SelectionResult:
    """Outcome of the separating-contract search.

    ``certificate`` maps each strict risk pair (low id, high id) to the
    witnessing clause's source order.  Infeasibility is a result, not an
    error: ``unseparated_pair`` names a strict pair no candidate clause
    separates.
    """

    feasible: bool
    selected: tuple[BasisClause, ...]
    certificate: tuple[tuple[str, str, int], ...]
    unseparated_pair: tuple[str, str] | None = None


def select_contract(
    basis: CandidateBasis,
    cases: Sequence[CalibrationCase],
    risk: Callable[[CalibrationCase], float] | None = None,
) -> SelectionResult:
    """Lexicographically least separating subset of the basis.

    A subset separates the risk order when for every pair with strictly
    lower risk the lower-risk case scores strictly higher on at least one
    selected clause.  Subsets are compared by (size, total monitor cost,
    sorted source-order tuple); the search enumerates ascending by size.
    """
    risk_of = risk if risk is not None else (lambda case: case.risk)
    signatures = clause_signatures(basis, cases)
    values = {sig.clause_id: sig.values for sig in signatures}
    constraints: list[tuple[int, int]] = []
    for i, u in enumerate(cases):
        for j, v in enumerate(cases):
            if risk_of(u) < risk_of(v):
                constraints.append((i, j))
    clause_masks: dict[int, int] = {}
    for clause in basis.clauses:
        mask = 0
        vals = values[clause.source_order]
        for k, (i, j) in enumerate(constraints):
            if vals[i] > vals[j]:
                mask |= 1 << k
        clause_masks[clause.source_order] = mask
    full = (1 << len(constraints)) - 1
    union_all = 0
    for mask in clause_masks.values():
        union_all |= mask
    if union_all != full:
        for k, (i, j) in enumerate(constraints):
            if not (union_all >> k) & 1:
                return SelectionResult(False, (), (), (cases[i].id, cases[j].id))
    best: tuple[int, tuple[int, ...]] | None = None
    best_subset: tuple[BasisClause, ...] = ()
    for size in range(0, len(basis.clauses) + 1):
        for subset in combinations(basis.clauses, size):
            covered = 0
            for clause in subset:
                covered |= clause_masks[clause.source_order]
            if covered != full:
                continue
            key = (
                sum(c.cost for c in subset),
                tuple(sorted(c.source_order for c in subset)),
            )
            if best is None or key < best:
                best = key
                best_subset = subset
        if best is not None:
            break
    certificate = []
    selected_orders = [c.source_order for c in best_subset]
    for i, j in constraints:
        witness = next(
            order
            for order in selected_orders
            if values[order][i] > values[order][j]
        )
        certificate.append((cases[i].id, cases[j].id, witness))
    return SelectionResult(True, best_subset, tuple(certificate))


def load_calibration(path) -> list[CalibrationCase]:
    """Calibration set file: JSON array of {id, risk, frame_step, ref_mask, pred_mask}."""
    import json

    from .tracefile import TraceFormatError, parse_mask

    with open(path, "r", encoding="utf-8") as handle:
        try:
            data = json.load(handle)
        except json.JSONDecodeError as exc:
            raise TraceFormatError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(data, list):
        raise TraceFormatError(f"{path}: expected a JSON array of cases")
    cases = []
    for index, node in enumerate(data):
        context = f"{path}[{index}]"
        if not isinstance(node, dict):
            raise TraceFormatError(f"{context}: expected an object")
        try:
            case = CalibrationCase(
                id=str(node["id"]),
                ref_mask=tuple(int(v) for v in parse_mask(node["ref_mask"], context)),
                pred_mask=tuple(int(v) for v in parse_mask(node["pred_mask"], context)),
                risk=float(node["risk"]),
                frame_step=float(node["frame_step"]),
            )
        except KeyError as exc:
            raise TraceFormatError(f"{context}: missing field {exc}") from None
        except ValueError as exc:
            raise TraceFormatError(f"{context}: {exc}") from None
        cases.append(case)
    return cases


def save_calibration(cases: Sequence[CalibrationCase], path) -> None:
    import json

    from .tracefile import mask_to_string

    data = [
        {
            "id": case.id,
            "risk": case.risk,
            "frame_step": case.frame_step,
            "ref_mask": mask_to_string(case.ref_mask),
            "pred_mask": mask_to_string(case.pred_mask),
        }
        for case in cases
    ]
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(data, handle, indent=2, sort_keys=True)
        handle.write("\n")


@dataclass(frozen=True)
class ProfileScore:
    score: float
    lead_coordinate: str


# Example risk profiles over the default guard names; weights are relative.
PROFILES: dict[str, dict[str, float]] = {
    "balanced": {
        "onset_guard": 1.0,
        "offset_guard": 1.0,
        "missing_guard": 1.0,
        "spurious_guard": 1.0,
        "silence_guard": 1.0,
        "duration_guard": 1.0,
        "fragmentation_guard": 1.0,
    },
    "support_recall": {"missing_guard": 3.0, "onset_guard": 1.0, "offset_guard": 1.0},
    "edge_timing": {"onset_guard": 3.0, "offset_guard": 2.0},
    "silence_protection": {"silence_guard": 3.0, "spurious_guard": 2.0},
    "event_integrity": {"fragmentation_guard": 3.0, "duration_guard": 2.0},
}


def profile_score(vector, weights: Mapping[str, float]) -> ProfileScore:
    """Normalized weighted mean of the guard vector under a risk profile.

    The lead coordinate (largest weight, first in vector order on ties)
    is reported alongside the scalar.
    """
    names = set(vector.names)
    unknown = set(weights) - names
    if unknown:
        raise ValueError(f"weights name unknown coordinates: {sorted(unknown)}")
    if any(w < 0.0 for w in weights.values()):
        raise ValueError("weights must be nonnegative")
    total = sum(weights.values())
    if total <= 0.0:
        raise ValueError("weights must not all be zero")
    value = sum(weights.get(c.name, 0.0) * c.score for c in vector) / total
    max_weight = max(weights.values())
    lead = next(name for name in vector.names if weights.get(name, 0.0) == max_weight)
    return ProfileScore(float(value), lead)
