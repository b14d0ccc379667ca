"""Wigner-type local-realist inequalities as explicit signed probability sums.

Every inequality here has the form ``sum_k c_k P(outcomes_k | settings_k) <= 0``
with ``c_k = +-1``.  The first term is always ``+P(all settings 0, all +)``.

Parties are 0-based in code; a :class:`Bipartition` stores one side as a
bitmask where bit ``j`` stands for party ``j``.
"""

from __future__ import annotations

import enum
import functools
import itertools
import json
import string
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import InvalidArgument
from .qcore import (
    BehaviorTable,
    CorrelatorTable,
    bits_to_index,
    outcomes_to_str,
    parse_outcomes,
)

SCHEMA_VERSION = 1
MAX_PARTIES = 10


class Family(str, enum.Enum):
    WIGNER_ORIGINAL = "WIGNER_ORIGINAL"
    WIGNER_2Q = "WIGNER_2Q"
    GWI = "GWI"
    THM1 = "THM1"
    WLR = "WLR"


def _party_label(j: int, n: int) -> str:
    return string.ascii_uppercase[j] if n <= 3 else str(j + 1)


@dataclass(frozen=True)
class Bipartition:
    """A cut of ``num_parties`` parties into two nonempty groups.

    ``side_one`` is canonicalized to the side that contains party 0.
    """

    num_parties: int
    side_one: int

    def __post_init__(self):
        n, mask = self.num_parties, self.side_one
        if not isinstance(n, (int, np.integer)) or not 2 <= n <= MAX_PARTIES:
            raise InvalidArgument(f"bipartitions need 2..{MAX_PARTIES} parties, got {n!r}")
        full = (1 << n) - 1
        if not isinstance(mask, (int, np.integer)) or mask <= 0 or mask >= full:
            raise InvalidArgument(f"side mask {mask!r} is not a nonempty proper subset of {n} parties")
        if not mask & 1:
            mask = full ^ mask
        object.__setattr__(self, "side_one", int(mask))

    @classmethod
    def from_parties(cls, num_parties: int, parties: Iterable[int]) -> "Bipartition":
        mask = 0
        for p in parties:
            if not 0 <= int(p) < num_parties:
                raise InvalidArgument(f"party {p!r} out of range for {num_parties} parties")
            mask |= 1 << int(p)
        return cls(num_parties, mask)

    @classmethod
    def parse(cls, num_parties: int, text: str) -> "Bipartition":
        """Parse ``"A|BC"`` or ``"2|134"`` (1-based digits)."""
        if "|" not in text:
            raise InvalidArgument(f"cut {text!r} must look like 'A|BC' or '12|34'")
        left, right = (part.strip() for part in text.split("|", 1))

        def party(ch: str) -> int:
            if ch.isdigit():
                return int(ch) - 1
            if ch.upper() in string.ascii_uppercase:
                return string.ascii_uppercase.index(ch.upper())
            raise InvalidArgument(f"bad party symbol {ch!r} in cut {text!r}")

        lp, rp = [party(c) for c in left], [party(c) for c in right]
        if sorted(lp + rp) != list(range(num_parties)):
            raise InvalidArgument(f"cut {text!r} must name every one of {num_parties} parties exactly once")
        return cls.from_parties(num_parties, lp)

    @property
    def parties_one(self) -> tuple[int, ...]:
        return tuple(j for j in range(self.num_parties) if self.side_one >> j & 1)

    @property
    def parties_two(self) -> tuple[int, ...]:
        return tuple(j for j in range(self.num_parties) if not self.side_one >> j & 1)

    @property
    def small_side(self) -> tuple[int, ...]:
        """The side playing ``r`` in the generated inequality (smaller; party 0's side on ties)."""
        one, two = self.parties_one, self.parties_two
        return two if len(two) < len(one) else one

    @property
    def large_side(self) -> tuple[int, ...]:
        one, two = self.parties_one, self.parties_two
        return one if len(two) < len(one) else two

    @property
    def label(self) -> str:
        n = self.num_parties
        lab = lambda side: "".join(_party_label(j, n) for j in side)  # noqa: E731
        return f"{lab(self.small_side)}|{lab(self.large_side)}"

    def permuted(self, perm: Sequence[int]) -> "Bipartition":
        return Bipartition.from_parties(self.num_parties, [perm[j] for j in self.parties_one])

    def __str__(self):
        return self.label


def all_cuts(num_parties: int) -> list[Bipartition]:
    """Every bipartition once, ordered by size of the smaller side, then lexicographically."""
    n = num_parties
    if not 2 <= n <= MAX_PARTIES:
        raise InvalidArgument(f"need 2..{MAX_PARTIES} parties, got {n}")
    cuts = [Bipartition(n, mask) for mask in range(1, 1 << n, 2) if mask != (1 << n) - 1]
    return sorted(cuts, key=lambda c: (len(c.small_side), c.small_side))


@dataclass(frozen=True)
class InequalityTerm:
    coefficient: int
    settings: tuple[int, ...]
    outcomes: tuple[int, ...]

    def __post_init__(self):
        if self.coefficient not in (1, -1):
            raise InvalidArgument(f"term coefficient must be +1 or -1, got {self.coefficient!r}")
        settings = tuple(int(s) for s in self.settings)
        outcomes = parse_outcomes(self.outcomes)
        if len(settings) != len(outcomes) or any(s not in (0, 1) for s in settings):
            raise InvalidArgument("term settings/outcomes must be equal-length 0/1 vectors")
        object.__setattr__(self, "settings", settings)
        object.__setattr__(self, "outcomes", outcomes)

    def __str__(self):
        sign = "+" if self.coefficient > 0 else "-"
        body = ",".join(f"x{s}{_o}" for s, _o in zip(self.settings, outcomes_to_str(self.outcomes)))
        return f"{sign}P({body})"


def _term(c: int, settings: str, outcomes: str) -> InequalityTerm:
    return InequalityTerm(c, tuple(int(ch) for ch in settings), outcomes)


@dataclass(frozen=True)
class Inequality:
    num_parties: int
    family: Family
    terms: tuple[InequalityTerm, ...]
    bipartition: Optional[Bipartition] = None
    bound: float = 0.0
    r_order: Optional[tuple[int, ...]] = None
    s_order: Optional[tuple[int, ...]] = None

    def __post_init__(self):
        n = self.num_parties
        object.__setattr__(self, "family", Family(self.family))
        object.__setattr__(self, "terms", tuple(self.terms))
        if not self.terms:
            raise InvalidArgument("an inequality needs at least one term")
        for t in self.terms:
            if len(t.settings) != n:
                raise InvalidArgument(f"term {t} does not have {n} parties")
        lead = self.terms[0]
        if lead.coefficient != 1 or any(lead.settings) or any(lead.outcomes):
            raise InvalidArgument("the leading term must be +P(all x_0, all +)")
        if self.bipartition is not None and self.bipartition.num_parties != n:
            raise InvalidArgument("bipartition party count does not match the inequality")

    @property
    def name(self) -> str:
        if self.family is Family.GWI:
            return f"GWI({self.num_parties})"
        if self.family in (Family.WIGNER_ORIGINAL, Family.WIGNER_2Q):
            return self.family.value
        cut = self.bipartition.label if self.bipartition else "?"
        if self.family is Family.WLR and self.r_order is not None:
            lab = lambda side: "".join(_party_label(j, self.num_parties) for j in side)  # noqa: E731
            return f"WLR[{lab(self.r_order)}|{lab(self.s_order)}]"
        return f"{self.family.value}[{cut}]"

    @functools.cached_property
    def compiled(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(settings_index, outcomes_index, coefficients)`` arrays for fast evaluation."""
        s = np.array([bits_to_index(t.settings) for t in self.terms])
        o = np.array([bits_to_index(t.outcomes) for t in self.terms])
        c = np.array([t.coefficient for t in self.terms], dtype=float)
        return s, o, c

    def evaluate_array(self, probs: np.ndarray) -> float:
        s, o, c = self.compiled
        return float(c @ probs[s, o])

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "name": self.name,
            "family": self.family.value,
            "N": self.num_parties,
            "side_one": None if self.bipartition is None else self.bipartition.side_one,
            "cut": None if self.bipartition is None else self.bipartition.label,
            "r_order": None if self.r_order is None else list(self.r_order),
            "s_order": None if self.s_order is None else list(self.s_order),
            "bound": self.bound,
            "terms": [
                {"c": t.coefficient, "settings": "".join(map(str, t.settings)), "outcomes": outcomes_to_str(t.outcomes)}
                for t in self.terms
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Inequality":
        try:
            n = int(data["N"])
            terms = tuple(_term(int(t["c"]), t["settings"], t["outcomes"]) for t in data["terms"])
            side = data.get("side_one")
            cut = None if side is None else Bipartition(n, int(side))
            r = data.get("r_order")
            s = data.get("s_order")
            return cls(
                n,
                Family(data["family"]),
                terms,
                cut,
                float(data.get("bound", 0.0)),
                None if r is None else tuple(r),
                None if s is None else tuple(s),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, InvalidArgument):
                raise
            raise InvalidArgument(f"malformed inequality JSON: {exc}") from exc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def evaluate(ineq: Inequality, b: BehaviorTable) -> float:
    """Value of the left-hand side; ``> 0`` is a violation."""
    if ineq.num_parties != b.num_parties:
        raise InvalidArgument(f"inequality has {ineq.num_parties} parties, behavior has {b.num_parties}")
    return ineq.evaluate_array(b.probabilities)


# ---------------------------------------------------------------------------
# families
# ---------------------------------------------------------------------------


class WignerVariant(str, enum.Enum):
    THREE_TERM = "THREE_TERM"
    FOUR_TERM = "FOUR_TERM"


def wigner_bipartite(variant: WignerVariant | str) -> Inequality:
    """Two-party Wigner inequalities.

    THREE_TERM is Wigner's original ``P(00++) <= P(01++) + P(10++)``.  It relies on
    the singlet's perfect anticorrelation and is *not* a general local bound
    (a local strategy reaches 1).  FOUR_TERM adds ``-P(11--)`` and holds for
    every local model.
    """
    variant = WignerVariant(variant)
    terms = [_term(1, "00", "++"), _term(-1, "01", "++"), _term(-1, "10", "++")]
    family = Family.WIGNER_ORIGINAL
    if variant is WignerVariant.FOUR_TERM:
        terms.append(_term(-1, "11", "--"))
        family = Family.WIGNER_2Q
    return Inequality(2, family, tuple(terms), Bipartition(2, 0b01))


def gwi(n: int) -> Inequality:
    """Generalized Wigner inequality for ``n`` parties (fully-local bound 0)."""
    if not isinstance(n, (int, np.integer)) or not 2 <= n <= MAX_PARTIES:
        raise InvalidArgument(f"GWI needs 2..{MAX_PARTIES} parties, got {n!r}")
    zeros = "0" * n
    terms = [_term(1, zeros, "+" * n)]
    for j in range(n):
        terms.append(_term(-1, zeros[:j] + "1" + zeros[j + 1:], "+" * n))
    terms.append(_term(-1, "1" * n, "-" * n))
    return Inequality(n, Family.GWI, tuple(terms))


# Tripartite set with party order (A, B, C); stored literally.
_THM1_TERMS = {
    0: [
        (1, "000", "+++"),
        (-1, "100", "+++"),
        (-1, "110", "-++"),
        (-1, "010", "+-+"),
        (-1, "110", "-+-"),
        (-1, "010", "+--"),
    ],
    1: [
        (1, "000", "+++"),
        (-1, "010", "+++"),
        (-1, "110", "+-+"),
        (-1, "100", "-++"),
        (-1, "110", "+--"),
        (-1, "100", "-+-"),
    ],
    2: [
        (1, "000", "+++"),
        (-1, "001", "+++"),
        (-1, "011", "++-"),
        (-1, "010", "+-+"),
        (-1, "011", "-+-"),
        (-1, "010", "--+"),
    ],
}

def theorem1_set() -> list[Inequality]:
    """The three tripartite inequalities for the cuts A|BC, B|AC, C|AB."""
    out = []
    for party, rows in _THM1_TERMS.items():
        terms = tuple(_term(c, s, o) for c, s, o in rows)
        out.append(Inequality(3, Family.THM1, terms, Bipartition.from_parties(3, [party])))
    return out


def wlr_from_order(n: int, r_order: Sequence[int], s_order: Sequence[int]) -> Inequality:
    """The ``I_{n|N-n}`` inequality for an explicit labelling ``r_1..r_n | s_1..s_{N-n}``.

    Only ``r_1`` and ``s_1`` are distinguished; the remaining order is irrelevant
    to the term set but is kept for bookkeeping.
    """
    r_order, s_order = tuple(int(p) for p in r_order), tuple(int(p) for p in s_order)
    if not 2 <= n <= MAX_PARTIES:
        raise InvalidArgument(f"WLR inequalities need 2..{MAX_PARTIES} parties, got {n}")
    if not r_order or not s_order or sorted(r_order + s_order) != list(range(n)):
        raise InvalidArgument(f"r/s orders {r_order}|{s_order} do not partition {n} parties")
    r1, s1 = r_order[0], s_order[0]

    def term(c, ones, assign):
        settings = [0] * n
        outcomes = [0] * n
        for p in ones:
            settings[p] = 1
        for p, o in assign.items():
            outcomes[p] = o
        return InequalityTerm(c, tuple(settings), tuple(outcomes))

    terms = [term(1, (), {}), term(-1, (r1,), {})]
    for pattern in itertools.product((0, 1), repeat=len(r_order)):
        if any(pattern):
            terms.append(term(-1, (r1, s1), dict(zip(r_order, pattern))))
    for pattern in itertools.product((0, 1), repeat=len(s_order)):
        if any(pattern):
            terms.append(term(-1, (s1,), dict(zip(s_order, pattern))))
    cut = Bipartition.from_parties(n, r_order)
    return Inequality(n, Family.WLR, tuple(terms), cut, 0.0, r_order, s_order)


def canonical_order(cut: Bipartition) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Labelling of ``cut`` obtained from the template ``0..n-1 | n..N-1`` by transpositions.

    Template parties that must leave the r-side are swapped, in ascending order,
    with the incoming parties in ascending order.  For three parties this gives
    B|AC -> (B | A, C) and C|AB -> (C | B, A).
    """
    n = cut.num_parties
    r_set = cut.small_side
    k = len(r_set)
    r_tmpl, s_tmpl = list(range(k)), list(range(k, n))
    incoming = sorted(set(r_set) - set(r_tmpl))
    outgoing = sorted(set(r_tmpl) - set(r_set))
    swap = dict(zip(outgoing, incoming))
    swap.update({v: key for key, v in swap.items()})
    return tuple(swap.get(p, p) for p in r_tmpl), tuple(swap.get(p, p) for p in s_tmpl)


def wlr_inequality(n: int, cut: Bipartition) -> Inequality:
    if not isinstance(cut, Bipartition) or cut.num_parties != n:
        raise InvalidArgument(f"cut {cut!r} is not a bipartition of {n} parties")
    r_order, s_order = canonical_order(cut)
    return wlr_from_order(n, r_order, s_order)


def wlr_full_set(n: int) -> list[Inequality]:
    return [wlr_inequality(n, cut) for cut in all_cuts(n)]


def wlr_variants(cut: Bipartition) -> list[Inequality]:
    """All distinct labellings of ``cut``: which side is r, the choice of r_1 and of s_1."""
    n = cut.num_parties
    out = []
    seen = set()
    for r_side, s_side in ((cut.small_side, cut.large_side), (cut.large_side, cut.small_side)):
        for r1 in r_side:
            for s1 in s_side:
                r_order = (r1,) + tuple(p for p in r_side if p != r1)
                s_order = (s1,) + tuple(p for p in s_side if p != s1)
                ineq = wlr_from_order(n, r_order, s_order)
                key = frozenset(ineq.terms)
                if key not in seen:
                    seen.add(key)
                    out.append(ineq)
    return out


def _check_perm(perm: Sequence[int], n: int) -> tuple[int, ...]:
    perm = tuple(int(p) for p in perm)
    if sorted(perm) != list(range(n)):
        raise InvalidArgument(f"{perm!r} is not a permutation of {n} parties")
    return perm


def relabel(ineq: Inequality, permutation: Sequence[int]) -> Inequality:
    """Move party ``i`` to position ``permutation[i]`` in every term."""
    n = ineq.num_parties
    perm = _check_perm(permutation, n)

    def move(vec):
        out = [0] * n
        for i, v in enumerate(vec):
            out[perm[i]] = v
        return tuple(out)

    terms = tuple(InequalityTerm(t.coefficient, move(t.settings), move(t.outcomes)) for t in ineq.terms)
    cut = None if ineq.bipartition is None else ineq.bipartition.permuted(perm)
    r = None if ineq.r_order is None else tuple(perm[p] for p in ineq.r_order)
    s = None if ineq.s_order is None else tuple(perm[p] for p in ineq.s_order)
    return Inequality(n, ineq.family, terms, cut, ineq.bound, r, s)


def inverse_permutation(perm: Sequence[int]) -> tuple[int, ...]:
    inv = [0] * len(perm)
    for i, p in enumerate(perm):
        inv[p] = i
    return tuple(inv)


# ---------------------------------------------------------------------------
# Svetlichny
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SvetlichnyFunctional:
    """``S = sum_s coeff(s) E(s)`` with hybrid local-nonlocal bound ``|S| <= hybrid_bound``.

    Coefficients are ``(-1)**floor(k/2)`` where ``k`` is the number of parties
    using setting 1, i.e. for three parties
    ``S3 = E000 + E001 + E010 - E011 + E100 - E101 - E110 - E111``.
    """

    num_parties: int
    coefficients: np.ndarray = field(repr=False)
    hybrid_bound: float

    def table(self) -> dict[str, int]:
        n = self.num_parties
        return {format(s, f"0{n}b"): int(c) for s, c in enumerate(self.coefficients)}


def svetlichny(n: int) -> SvetlichnyFunctional:
    if n not in (3, 4):
        raise InvalidArgument(f"Svetlichny functional is provided for 3 or 4 parties, got {n!r}")
    coeffs = np.array([(-1) ** (bin(s).count("1") // 2) for s in range(2**n)], dtype=float)
    coeffs.setflags(write=False)
    return SvetlichnyFunctional(n, coeffs, float(2 ** (n - 1)))


def evaluate_svetlichny(f: SvetlichnyFunctional, c: CorrelatorTable) -> float:
    if f.num_parties != c.num_parties:
        raise InvalidArgument(f"functional has {f.num_parties} parties, correlators have {c.num_parties}")
    return float(f.coefficients @ c.values)


def inequality_from_spec(text: str, n: int) -> Inequality:
    """Parse a short selector: ``WLR:2|134``, ``THM1:A|BC``, ``GWI``, ``WIGNER3``, ``WIGNER4``."""
    head, _, arg = text.partition(":")
    head = head.strip().upper()
    if head == "GWI":
        return gwi(int(arg) if arg else n)
    if head in ("WIGNER3", "WIGNER_ORIGINAL"):
        return wigner_bipartite(WignerVariant.THREE_TERM)
    if head in ("WIGNER4", "WIGNER_2Q"):
        return wigner_bipartite(WignerVariant.FOUR_TERM)
    if head == "THM1":
        if n != 3:
            raise InvalidArgument("THM1 inequalities are tripartite")
        cut = Bipartition.parse(3, arg)
        for ineq in theorem1_set():
            if ineq.bipartition == cut:
                return ineq
    if head == "WLR":
        return wlr_inequality(n, Bipartition.parse(n, arg))
    raise InvalidArgument(f"unknown inequality selector {text!r}")
