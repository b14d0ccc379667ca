"""Classical side: deterministic bipartition-local strategies and their polytope.

A bipartition-local vertex lets each side of a cut answer with a fixed function
of its own settings.  The side may correlate its own parties arbitrarily, so a
side with ``k`` parties has ``(2**k) ** (2**k)`` response functions.
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import linprog, nnls

from .errors import InvalidArgument, NumericalFailure, UnsupportedSize
from .inequalities import Bipartition, Inequality
from .qcore import BehaviorTable

MAX_ENUMERATED_SIDE = 2
MAX_FULLY_LOCAL_PARTIES = 6


def _sub_index(vec: Sequence[int], parties: Sequence[int]) -> int:
    out = 0
    for p in parties:
        out = (out << 1) | vec[p]
    return out


def _sub_bits(index: int, width: int) -> tuple[int, ...]:
    return tuple((index >> (width - 1 - k)) & 1 for k in range(width))


@dataclass(frozen=True)
class DeterministicStrategy:
    """Outcome tables for each side of ``cut``.

    ``side_one_map[s]`` is the outcome index of side one's parties (ascending
    party order, first party most significant) when they use the setting index
    ``s`` built the same way.  Likewise for side two.
    """

    cut: Bipartition
    side_one_map: tuple[int, ...]
    side_two_map: tuple[int, ...]

    def __post_init__(self):
        k1, k2 = len(self.cut.parties_one), len(self.cut.parties_two)
        for m, k in ((self.side_one_map, k1), (self.side_two_map, k2)):
            if len(m) != 2**k or any(not 0 <= int(v) < 2**k for v in m):
                raise InvalidArgument(f"a side with {k} parties needs {2**k} outcome entries in [0, {2**k})")
        object.__setattr__(self, "side_one_map", tuple(int(v) for v in self.side_one_map))
        object.__setattr__(self, "side_two_map", tuple(int(v) for v in self.side_two_map))

    def outcomes(self, settings: Sequence[int]) -> tuple[int, ...]:
        one, two = self.cut.parties_one, self.cut.parties_two
        out = [0] * self.cut.num_parties
        for parties, table in ((one, self.side_one_map), (two, self.side_two_map)):
            bits = _sub_bits(table[_sub_index(settings, parties)], len(parties))
            for p, b in zip(parties, bits):
                out[p] = b
        return tuple(out)


def vertex_behavior(strategy: DeterministicStrategy) -> BehaviorTable:
    """0/1 behavior of ``strategy``; no-signaling holds across the cut but not inside a side."""
    n = strategy.cut.num_parties
    probs = np.zeros((2**n, 2**n))
    for s in range(2**n):
        o = strategy.outcomes(_sub_bits(s, n))
        probs[s, _sub_index(o, range(n))] = 1.0
    return BehaviorTable(n, probs, enforce_no_signaling=False)


@dataclass(frozen=True)
class VertexMaximum:
    value: int
    witness: DeterministicStrategy


def maximize_over_vertices(ineq: Inequality, cut: Bipartition) -> VertexMaximum:
    """Exact maximum of ``ineq`` over the deterministic strategies of ``cut``.

    The side with at most two parties is enumerated; for each of its response
    functions the other side picks, per settings group, the outcome maximizing
    the summed coefficients (ties go to the lexicographically smallest outcome).
    """
    n = ineq.num_parties
    if cut.num_parties != n:
        raise InvalidArgument(f"cut has {cut.num_parties} parties, inequality has {n}")
    one, two = cut.parties_one, cut.parties_two
    enum_side, free_side = (one, two) if len(one) <= len(two) else (two, one)
    if len(enum_side) > MAX_ENUMERATED_SIDE:
        raise UnsupportedSize(f"exact enumeration needs one side with at most {MAX_ENUMERATED_SIDE} parties")

    ke, kf = len(enum_side), len(free_side)
    terms = [
        (
            _sub_index(t.settings, enum_side),
            _sub_index(t.outcomes, enum_side),
            _sub_index(t.settings, free_side),
            _sub_index(t.outcomes, free_side),
            int(t.coefficient),
        )
        for t in ineq.terms
    ]

    best_value = None
    best = None
    for emap in itertools.product(range(2**ke), repeat=2**ke):
        groups: dict[int, dict[int, int]] = {}
        for es, eo, fs, fo, c in terms:
            if emap[es] == eo:
                bucket = groups.setdefault(fs, {})
                bucket[fo] = bucket.get(fo, 0) + c
        value = 0
        fmap = [0] * (2**kf)
        for fs, bucket in groups.items():
            # outcomes absent from the bucket score 0
            choice = max(range(2**kf), key=lambda o: (bucket.get(o, 0), -o))
            fmap[fs] = choice
            value += bucket.get(choice, 0)
        if best_value is None or value > best_value:
            best_value, best = value, (emap, tuple(fmap))

    emap, fmap = best
    maps = (tuple(emap), fmap) if enum_side == one else (fmap, tuple(emap))
    return VertexMaximum(int(best_value), DeterministicStrategy(cut, *maps))


def vertex_max(ineq: Inequality, cut: Bipartition) -> int:
    return maximize_over_vertices(ineq, cut).value


def local_vertex_max(ineq: Inequality) -> int:
    """Exact maximum over fully local deterministic strategies (every party separate)."""
    n = ineq.num_parties
    if n > MAX_FULLY_LOCAL_PARTIES:
        raise UnsupportedSize(f"fully local enumeration is limited to {MAX_FULLY_LOCAL_PARTIES} parties")
    best = None
    # party response: (outcome on setting 0, outcome on setting 1)
    responses = list(itertools.product((0, 1), repeat=2))
    for assignment in itertools.product(responses, repeat=n):
        value = 0
        for t in ineq.terms:
            if all(assignment[p][t.settings[p]] == t.outcomes[p] for p in range(n)):
                value += t.coefficient
        best = value if best is None else max(best, value)
    return int(best)


def _side_maps(k: int):
    return itertools.product(range(2**k), repeat=2**k)


@functools.lru_cache(maxsize=None)
def _vertex_matrix(num_parties: int, side_one: int) -> np.ndarray:
    cut = Bipartition(num_parties, side_one)
    n = num_parties
    one, two = cut.parties_one, cut.parties_two
    settings = [_sub_bits(s, n) for s in range(2**n)]
    s1 = [_sub_index(v, one) for v in settings]
    s2 = [_sub_index(v, two) for v in settings]
    rows = []
    for m1 in _side_maps(len(one)):
        for m2 in _side_maps(len(two)):
            probs = np.zeros((2**n, 2**n))
            for s in range(2**n):
                out = [0] * n
                for parties, bits in ((one, _sub_bits(m1[s1[s]], len(one))), (two, _sub_bits(m2[s2[s]], len(two)))):
                    for p, b in zip(parties, bits):
                        out[p] = b
                probs[s, _sub_index(out, range(n))] = 1.0
            rows.append(probs.ravel())
    mat = np.array(rows)
    mat.setflags(write=False)
    return mat


def _require_three(n: int):
    if n != 3:
        raise UnsupportedSize(f"vertex enumeration and LP membership are provided for 3 parties, got {n}")


def enumerate_vertices(num_parties: int, cut: Bipartition) -> list[BehaviorTable]:
    _require_three(num_parties)
    if cut.num_parties != num_parties:
        raise InvalidArgument("cut does not match the number of parties")
    size = 2**num_parties
    return [
        BehaviorTable(num_parties, row.reshape(size, size), enforce_no_signaling=False)
        for row in _vertex_matrix(num_parties, cut.side_one)
    ]


@dataclass(frozen=True)
class MembershipResult:
    is_member: bool
    weights: Optional[np.ndarray]
    max_constraint_violation: float


def is_bipartition_local(b: BehaviorTable, cut: Bipartition, tol: float = 1e-9) -> MembershipResult:
    """Decide whether ``b`` is a convex mixture of the deterministic strategies of ``cut``.

    Solves ``min t`` subject to ``|V^T w - b| <= t``, ``w >= 0``, ``sum w = 1``,
    then polishes the weights on the support with nonnegative least squares.
    """
    _require_three(b.num_parties)
    if cut.num_parties != b.num_parties:
        raise InvalidArgument("cut does not match the behavior")
    if not tol > 0:
        raise InvalidArgument(f"tolerance must be positive, got {tol!r}")

    verts = _vertex_matrix(b.num_parties, cut.side_one)
    target = b.probabilities.ravel()
    nv, m = verts.shape
    vt = verts.T
    ones = np.ones((m, 1))
    a_ub = np.block([[vt, -ones], [-vt, -ones]])
    b_ub = np.concatenate([target, -target])
    a_eq = np.concatenate([np.ones(nv), [0.0]])[None, :]
    cost = np.zeros(nv + 1)
    cost[-1] = 1.0
    res = linprog(
        cost,
        A_ub=a_ub,
        b_ub=b_ub,
        A_eq=a_eq,
        b_eq=[1.0],
        bounds=[(0, None)] * (nv + 1),
        method="highs",
        options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
    )
    if res.status != 0:
        raise NumericalFailure(
            "membership LP did not converge",
            {"status": int(res.status), "message": str(res.message), "cut": cut.label},
        )

    weights = np.clip(res.x[:nv], 0.0, None)
    support = np.flatnonzero(weights > 1e-12)
    if support.size:
        scale = 1e3
        lhs = np.vstack([vt[:, support], scale * np.ones((1, support.size))])
        rhs = np.concatenate([target, [scale]])
        polished, _ = nnls(lhs, rhs)
        candidate = np.zeros(nv)
        candidate[support] = polished
        if candidate.sum() > 0:
            candidate /= candidate.sum()
            if np.max(np.abs(vt @ candidate - target)) < np.max(np.abs(vt @ weights - target)):
                weights = candidate
    residual = float(np.max(np.abs(vt @ weights - target)))
    member = residual <= tol
    return MembershipResult(member, weights if member else None, residual)
