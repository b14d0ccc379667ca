"""N-qubit states, real-plane projective measurements and Born-rule behaviors.

Conventions used throughout the package:

* Party ``j`` (0-based in code, 1-based in labels) is the ``j``-th tensor
  factor; party 0 occupies the most significant bit of a basis index, so
  ``|100>`` is index 4 for three qubits.
* Setting and outcome vectors are tuples of 0/1.  Outcome bit 0 is ``+`` (the
  first basis vector ``(cos a, sin a)``), bit 1 is ``-``.
* Behavior tables are stored as a dense ``(2**N, 2**N)`` array indexed by
  ``[settings_index, outcomes_index]`` with the same bit ordering.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .errors import InvalidArgument

MAX_PARTIES = 10
TWO_PI = 2.0 * math.pi


def bits_to_index(bits: Sequence[int]) -> int:
    idx = 0
    for b in bits:
        idx = (idx << 1) | int(b)
    return idx


def index_to_bits(index: int, n: int) -> tuple[int, ...]:
    return tuple((index >> (n - 1 - j)) & 1 for j in range(n))


def parse_outcomes(outcomes) -> tuple[int, ...]:
    """Accept ``"+-+"`` strings or 0/1 (or +1/-1) sequences; return 0/1 bits."""
    if isinstance(outcomes, str):
        table = {"+": 0, "-": 1}
        try:
            return tuple(table[ch] for ch in outcomes)
        except KeyError:
            raise InvalidArgument(f"outcome string {outcomes!r} must contain only '+' and '-'") from None
    out = []
    for o in outcomes:
        if o in (0, 1):
            out.append(int(o))
        elif o == -1:
            out.append(1)
        else:
            raise InvalidArgument(f"bad outcome value {o!r}")
    return tuple(out)


def outcomes_to_str(bits: Sequence[int]) -> str:
    return "".join("+" if b == 0 else "-" for b in bits)


def _check_parties(n: int) -> None:
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise InvalidArgument(f"num_parties must be a positive integer, got {n!r}")
    if n > MAX_PARTIES:
        raise InvalidArgument(f"at most {MAX_PARTIES} parties are supported, got {n}")


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


# ---------------------------------------------------------------------------
# states
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PureState:
    num_parties: int
    amplitudes: np.ndarray
    norm_factor: float = 1.0
    label: str = ""

    def __post_init__(self):
        _check_parties(self.num_parties)
        amps = np.asarray(self.amplitudes)
        if amps.ndim != 1 or amps.shape[0] != 2**self.num_parties:
            raise InvalidArgument(
                f"expected {2**self.num_parties} amplitudes for {self.num_parties} parties, got shape {amps.shape}"
            )
        if not np.all(np.isfinite(amps)):
            raise InvalidArgument("amplitudes must be finite")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > 1e-12:
            raise InvalidArgument(f"state is not normalized (|psi|^2 = {norm!r})")
        if np.iscomplexobj(amps) and np.all(amps.imag == 0):
            amps = amps.real
        object.__setattr__(self, "amplitudes", _readonly(amps))

    @property
    def dim(self) -> int:
        return 2**self.num_parties

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.amplitudes)

    def to_density(self) -> "DensityMatrix":
        v = self.amplitudes
        return DensityMatrix(self.num_parties, np.outer(v, v.conj()), label=self.label)

    def tensor(self, other: "PureState") -> "PureState":
        return PureState(
            self.num_parties + other.num_parties,
            np.kron(self.amplitudes, other.amplitudes),
            label=f"{self.label}*{other.label}",
        )


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    num_parties: int
    entries: np.ndarray
    label: str = ""

    def __post_init__(self):
        _check_parties(self.num_parties)
        rho = np.asarray(self.entries)
        d = 2**self.num_parties
        if rho.shape != (d, d):
            raise InvalidArgument(f"density matrix must be {d}x{d}, got {rho.shape}")
        if not np.all(np.isfinite(rho)):
            raise InvalidArgument("density matrix entries must be finite")
        if np.max(np.abs(rho - rho.conj().T)) > 1e-10:
            raise InvalidArgument("density matrix is not Hermitian")
        tr = np.trace(rho).real
        if abs(tr - 1.0) > 1e-10:
            raise InvalidArgument(f"density matrix trace is {tr!r}, expected 1")
        if np.iscomplexobj(rho) and np.max(np.abs(rho.imag)) == 0:
            rho = rho.real
        if np.linalg.eigvalsh(rho).min() < -1e-10:
            raise InvalidArgument("density matrix has a negative eigenvalue")
        object.__setattr__(self, "entries", _readonly(rho))

    @property
    def dim(self) -> int:
        return 2**self.num_parties

    @functools.cached_property
    def ensemble(self) -> tuple[np.ndarray, np.ndarray]:
        """Eigen-decomposition ``(weights, vectors)``; columns of ``vectors`` are states."""
        w, v = np.linalg.eigh(self.entries)
        keep = w > 1e-14
        return w[keep], v[:, keep]


State = Union[PureState, DensityMatrix]


def as_ensemble(state: State) -> tuple[int, np.ndarray, np.ndarray]:
    """Return ``(num_parties, weights, vectors)`` with vectors stored column-wise."""
    if isinstance(state, PureState):
        return state.num_parties, np.ones(1), state.amplitudes.reshape(-1, 1)
    if isinstance(state, DensityMatrix):
        w, v = state.ensemble
        return state.num_parties, w, v
    raise InvalidArgument(f"expected PureState or DensityMatrix, got {type(state).__name__}")


class StateName(str, enum.Enum):
    GHZ3 = "GHZ3"
    W3 = "W3"
    GENW3 = "GENW3"
    WPRIME3 = "WPRIME3"
    GHZ4G = "GHZ4G"
    W4 = "W4"
    GENW4 = "GENW4"
    PSI_MS = "PSI_MS"
    PHI_QUAD = "PHI_QUAD"
    BISEP3 = "BISEP3"
    PRODUCT_W3_0 = "PRODUCT_W3_0"
    CUSTOM = "CUSTOM"


_ARITY = {
    StateName.GHZ3: 0,
    StateName.W3: 0,
    StateName.GENW3: 2,  # (mu, theta)
    StateName.WPRIME3: 1,  # theta
    StateName.GHZ4G: 1,  # theta
    StateName.W4: 0,
    StateName.GENW4: 3,  # (theta, mu, nu)
    StateName.PSI_MS: 0,
    StateName.PHI_QUAD: 0,
    StateName.BISEP3: 0,
    StateName.PRODUCT_W3_0: 0,
}


def _ket(n: int, terms: dict[str, float]) -> np.ndarray:
    v = np.zeros(2**n)
    for bits, amp in terms.items():
        v[int(bits, 2)] += amp
    return v


def _kron(*vs: np.ndarray) -> np.ndarray:
    return functools.reduce(np.kron, vs)


def _phi_quad_unnormalized() -> np.ndarray:
    zero, one = np.array([1.0, 0.0]), np.array([0.0, 1.0])
    plus, minus = (zero + one) / math.sqrt(2), (zero - one) / math.sqrt(2)
    return (
        _kron(zero, zero, zero, zero)
        + _kron(plus, zero, zero, zero)
        + _kron(minus, plus, plus, plus)
        + _kron(zero, one, one, one)
    )


def _normalized(n: int, v: np.ndarray, label: str) -> PureState:
    norm = float(np.sqrt(np.vdot(v, v).real))
    if norm == 0.0:
        raise InvalidArgument("cannot normalize the zero vector")
    return PureState(n, v / norm, norm_factor=1.0 / norm, label=label)


def named_state(name: StateName | str, params: Sequence[float] = ()) -> PureState:
    """Build one of the states used in the experiments.

    Parameter order: ``GENW3(mu, theta)``, ``WPRIME3(theta)``, ``GHZ4G(theta)``,
    ``GENW4(theta, mu, nu)``, ``CUSTOM(amplitudes...)``.
    """
    try:
        name = name if isinstance(name, StateName) else StateName(str(name).upper())
    except ValueError:
        raise InvalidArgument(f"unknown state name {name!r}") from None
    params = list(params)

    if name is StateName.CUSTOM:
        amps = np.asarray(params, dtype=complex)
        if amps.size == 0 or amps.size & (amps.size - 1):
            raise InvalidArgument(f"CUSTOM needs 2**N amplitudes, got {amps.size}")
        n = amps.size.bit_length() - 1
        if np.all(amps.imag == 0):
            amps = amps.real
        return _normalized(n, amps, "CUSTOM")

    if len(params) != _ARITY[name]:
        raise InvalidArgument(f"{name.value} takes {_ARITY[name]} parameter(s), got {len(params)}")
    if not all(math.isfinite(float(p)) for p in params):
        raise InvalidArgument("state parameters must be finite")
    label = name.value if not params else f"{name.value}({','.join(f'{p:.6g}' for p in params)})"
    r2, r3 = 1 / math.sqrt(2), 1 / math.sqrt(3)

    if name is StateName.GHZ3:
        v = _ket(3, {"000": r2, "111": r2})
    elif name is StateName.W3:
        v = _ket(3, {"001": r3, "010": r3, "100": r3})
    elif name is StateName.GENW3:
        mu, theta = params
        v = _ket(3, {
            "001": math.cos(mu),
            "010": math.sin(mu) * math.cos(theta),
            "100": math.sin(mu) * math.sin(theta),
        })
    elif name is StateName.WPRIME3:
        (theta,) = params
        v = _ket(3, {"001": r2, "010": r2 * math.cos(theta), "100": r2 * math.sin(theta)})
    elif name is StateName.GHZ4G:
        (theta,) = params
        v = _ket(4, {"0000": math.cos(theta), "1111": math.sin(theta)})
    elif name is StateName.W4:
        v = _ket(4, {"0001": 0.5, "0010": 0.5, "0100": 0.5, "1000": 0.5})
    elif name is StateName.GENW4:
        theta, mu, nu = params
        st, ct = math.sin(theta), math.cos(theta)
        v = _ket(4, {
            "0001": ct,
            "0010": st * math.sin(mu),
            "0100": st * math.cos(mu) * math.sin(nu),
            "1000": st * math.cos(mu) * math.cos(nu),
        })
    elif name is StateName.PSI_MS:
        v = _ket(3, {"000": math.sqrt(3) / 2, "110": math.sqrt(3) / 4, "111": 0.25})
    elif name is StateName.PHI_QUAD:
        # the printed 1/sqrt(26) prefactor does not normalize this vector
        return _normalized(4, _phi_quad_unnormalized(), label)
    elif name is StateName.BISEP3:
        v = _ket(3, {"000": r2, "011": r2})
    elif name is StateName.PRODUCT_W3_0:
        v = _ket(4, {"0010": r3, "0100": r3, "1000": r3})
    # re-normalize away rounding so the 1e-12 invariant always holds
    v = v / np.linalg.norm(v)
    return PureState(int(v.size).bit_length() - 1, v, label=label)


def white_noise_mix(psi: PureState, p: float) -> DensityMatrix:
    """``p |psi><psi| + (1 - p) I / 2**N``."""
    if not (0.0 <= p <= 1.0) or not math.isfinite(p):
        raise InvalidArgument(f"visibility must lie in [0, 1], got {p!r}")
    d = psi.dim
    v = psi.amplitudes
    rho = p * np.outer(v, v.conj()) + (1.0 - p) / d * np.eye(d)
    return DensityMatrix(psi.num_parties, rho, label=f"{psi.label}@p={p:.6g}")


# ---------------------------------------------------------------------------
# measurements
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class AngleTable:
    """Measurement angles ``alpha[j, i]`` for party ``j`` and setting ``i``, stored mod 2*pi."""

    num_parties: int
    alpha: np.ndarray = field(repr=False)

    def __post_init__(self):
        _check_parties(self.num_parties)
        a = np.asarray(self.alpha, dtype=float)
        if a.shape != (self.num_parties, 2):
            raise InvalidArgument(f"angle table must have shape ({self.num_parties}, 2), got {a.shape}")
        if not np.all(np.isfinite(a)):
            raise InvalidArgument("angles must be finite")
        object.__setattr__(self, "alpha", _readonly(_wrap(a, TWO_PI)))

    @classmethod
    def from_rows(cls, rows) -> "AngleTable":
        a = np.asarray(rows, dtype=float)
        if a.ndim != 2:
            raise InvalidArgument("angles must be a list of [alpha_0, alpha_1] pairs")
        return cls(a.shape[0], a)

    def reduced(self) -> np.ndarray:
        """Angles modulo pi (alpha and alpha + pi give the same projectors)."""
        return _wrap(self.alpha, math.pi)

    def tolist(self) -> list[list[float]]:
        return self.alpha.tolist()

    def __repr__(self):
        return f"AngleTable({np.array2string(self.alpha, precision=4)})"


def _wrap(a: np.ndarray, period: float) -> np.ndarray:
    out = np.mod(a, period)
    out[out >= period] = 0.0
    return out


def measurement_basis(alpha: float) -> tuple[np.ndarray, np.ndarray]:
    if not math.isfinite(alpha):
        raise InvalidArgument(f"angle must be finite, got {alpha!r}")
    c, s = math.cos(alpha), math.sin(alpha)
    return np.array([c, s]), np.array([-s, c])


def _basis_stack(alpha: np.ndarray) -> np.ndarray:
    """``B[j, setting, outcome, component]`` for all parties at once."""
    c, s = np.cos(alpha), np.sin(alpha)
    plus = np.stack([c, s], axis=-1)
    minus = np.stack([-s, c], axis=-1)
    return np.stack([plus, minus], axis=-2)


def born_table(weights: np.ndarray, vectors: np.ndarray, alpha: np.ndarray) -> np.ndarray:
    """Dense ``(2**N, 2**N)`` probability array for an ensemble and raw angles.

    This is the hot path of the optimizer; it skips all validation.
    """
    n = alpha.shape[0]
    B = _basis_stack(alpha)
    t = vectors
    k = vectors.shape[1]
    for j in range(n):
        t = t.reshape(4**j, 2, (2 ** (n - 1 - j)) * k)
        t = np.einsum("sox,pxr->psor", B[j], t)
    t = t.reshape(4**n, k)
    if np.iscomplexobj(t):
        sq = t.real**2 + t.imag**2
    else:
        sq = t * t
    probs = sq @ weights
    probs = probs.reshape((2, 2) * n)
    order = [2 * j for j in range(n)] + [2 * j + 1 for j in range(n)]
    return probs.transpose(order).reshape(2**n, 2**n)


# ---------------------------------------------------------------------------
# behaviors
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class BehaviorTable:
    num_parties: int
    probabilities: np.ndarray = field(repr=False)
    validate: bool = field(default=True, repr=False, compare=False)
    # Deterministic strategies of a cut may signal inside one side; those set this False.
    enforce_no_signaling: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        _check_parties(self.num_parties)
        p = np.asarray(self.probabilities, dtype=float)
        d = 2**self.num_parties
        if p.shape != (d, d):
            raise InvalidArgument(f"behavior must have shape ({d}, {d}), got {p.shape}")
        object.__setattr__(self, "probabilities", _readonly(p))
        if self.validate:
            self.check()

    def check(self, atol: float = 1e-10) -> None:
        p = self.probabilities
        if p.min() < -1e-12 or p.max() > 1 + 1e-12:
            raise InvalidArgument("behavior entries must lie in [0, 1]")
        if np.max(np.abs(p.sum(axis=1) - 1.0)) > atol:
            raise InvalidArgument("behavior is not normalized for every setting")
        if self.enforce_no_signaling and self.no_signaling_deviation() > atol:
            raise InvalidArgument("behavior violates no-signaling")

    def prob(self, settings: Sequence[int], outcomes) -> float:
        settings = tuple(int(s) for s in settings)
        outcomes = parse_outcomes(outcomes)
        if len(settings) != self.num_parties or len(outcomes) != self.num_parties:
            raise InvalidArgument("settings/outcomes length must equal num_parties")
        return float(self.probabilities[bits_to_index(settings), bits_to_index(outcomes)])

    def as_tensor(self) -> np.ndarray:
        """Shape ``(2,)*N + (2,)*N``: settings axes first, then outcome axes."""
        return self.probabilities.reshape((2,) * (2 * self.num_parties))

    def no_signaling_deviation(self) -> float:
        """Largest change of any (N-1)-party marginal under a change of the remaining party's setting.

        Checking every single-party deletion is enough: marginals of smaller
        subsets are sums of these.
        """
        n = self.num_parties
        t = self.as_tensor()
        worst = 0.0
        for j in range(n):
            marg = t.sum(axis=n + j)
            diff = np.take(marg, 0, axis=j) - np.take(marg, 1, axis=j)
            worst = max(worst, float(np.max(np.abs(diff))))
        return worst

    def cut_signaling_deviation(self, side: Sequence[int]) -> float:
        """How much the marginal of ``side`` moves when the complementary parties change settings."""
        n = self.num_parties
        other = [j for j in range(n) if j not in set(side)]
        marg = self.as_tensor().sum(axis=tuple(n + j for j in other))
        worst = 0.0
        for j in other:
            diff = np.take(marg, 0, axis=j) - np.take(marg, 1, axis=j)
            worst = max(worst, float(np.max(np.abs(diff))))
        return worst

    def marginal(self, parties: Sequence[int], settings: Sequence[int]) -> np.ndarray:
        """Outcome distribution of ``parties`` given their settings (others at setting 0)."""
        n = self.num_parties
        parties = list(parties)
        full = [0] * n
        for p, s in zip(parties, settings):
            full[p] = int(s)
        t = self.as_tensor()[tuple(full)]
        drop = tuple(j for j in range(n) if j not in parties)
        return t.sum(axis=drop).reshape(-1)

    def __sub__(self, other: "BehaviorTable") -> np.ndarray:
        return self.probabilities - other.probabilities


@dataclass(frozen=True, eq=False)
class CorrelatorTable:
    num_parties: int
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        _check_parties(self.num_parties)
        v = np.asarray(self.values, dtype=float)
        if v.shape != (2**self.num_parties,):
            raise InvalidArgument(f"correlator table must have {2**self.num_parties} entries")
        if np.max(np.abs(v)) > 1 + 1e-12:
            raise InvalidArgument("correlators must lie in [-1, 1]")
        object.__setattr__(self, "values", _readonly(v))

    def __getitem__(self, settings) -> float:
        return float(self.values[bits_to_index(settings)])


@functools.lru_cache(maxsize=None)
def parity_signs(n: int) -> np.ndarray:
    """``(-1)**popcount(o)`` for every outcome index."""
    signs = np.array([(-1) ** bin(o).count("1") for o in range(2**n)], dtype=float)
    signs.setflags(write=False)
    return signs


def _check_angles(n: int, angles: AngleTable) -> None:
    if not isinstance(angles, AngleTable):
        raise InvalidArgument("angles must be an AngleTable")
    if angles.num_parties != n:
        raise InvalidArgument(f"angle table has {angles.num_parties} parties, state has {n}")


def joint_probability(state: State, settings: Sequence[int], outcomes, angles: AngleTable) -> float:
    """``Tr(rho * (x)_j Pi_j)`` built from explicit Kronecker products."""
    n = state.num_parties
    _check_angles(n, angles)
    settings = tuple(int(s) for s in settings)
    outcomes = parse_outcomes(outcomes)
    if len(settings) != n or len(outcomes) != n or any(s not in (0, 1) for s in settings):
        raise InvalidArgument("settings/outcomes must be 0/1 vectors of length num_parties")
    vecs = [measurement_basis(angles.alpha[j, settings[j]])[outcomes[j]] for j in range(n)]
    m = _kron(*vecs)
    if isinstance(state, PureState):
        amp = np.vdot(m, state.amplitudes)
        return float(abs(amp) ** 2)
    return float(np.real(np.vdot(m, state.entries @ m)))


def behavior(state: State, angles: AngleTable) -> BehaviorTable:
    n, w, v = as_ensemble(state)
    _check_angles(n, angles)
    p = born_table(w, v, angles.alpha)
    np.clip(p, 0.0, 1.0, out=p)
    return BehaviorTable(n, p)


def correlators(b: BehaviorTable) -> CorrelatorTable:
    """Full correlators ``E(s) = sum_o (prod_j sign(o_j)) P(o|s)``."""
    values = b.probabilities @ parity_signs(b.num_parties)
    return CorrelatorTable(b.num_parties, np.clip(values, -1.0, 1.0))
