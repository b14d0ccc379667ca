import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wigner_lr.errors import InvalidArgument
from wigner_lr.qcore import (
    AngleTable,
    BehaviorTable,
    DensityMatrix,
    PureState,
    StateName,
    behavior,
    correlators,
    joint_probability,
    measurement_basis,
    named_state,
    white_noise_mix,
)

angle = st.floats(min_value=-10.0, max_value=10.0, allow_nan=False)


def angles_for(n):
    return st.lists(st.tuples(angle, angle), min_size=n, max_size=n).map(AngleTable.from_rows)


def random_state(n, seed, complex_=False):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=2**n) + (1j * rng.normal(size=2**n) if complex_ else 0)
    return PureState(n, v / np.linalg.norm(v))


class TestMeasurementBasis:
    @pytest.mark.parametrize(
        "alpha, plus, minus",
        [
            (0.0, (1, 0), (0, 1)),
            (math.pi / 2, (0, 1), (-1, 0)),
            (math.pi / 4, (2**-0.5, 2**-0.5), (-(2**-0.5), 2**-0.5)),
        ],
    )
    def test_examples(self, alpha, plus, minus):
        p, m = measurement_basis(alpha)
        np.testing.assert_allclose(p, plus, atol=1e-15)
        np.testing.assert_allclose(m, minus, atol=1e-15)

    @given(angle)
    def test_orthonormal(self, a):
        p, m = measurement_basis(a)
        assert abs(p @ m) < 1e-15
        assert abs(p @ p - 1) < 1e-14 and abs(m @ m - 1) < 1e-14

    @pytest.mark.parametrize("bad", [math.nan, math.inf])
    def test_non_finite(self, bad):
        with pytest.raises(InvalidArgument):
            measurement_basis(bad)


class TestNamedStates:
    def test_ghz3(self):
        psi = named_state("GHZ3")
        expected = np.zeros(8)
        expected[0] = expected[7] = 2**-0.5
        np.testing.assert_allclose(psi.amplitudes, expected)

    def test_genw3_corner_is_100(self):
        psi = named_state(StateName.GENW3, (math.pi / 2, math.pi / 2))
        assert abs(abs(psi.amplitudes[0b100]) - 1) < 1e-15
        assert np.sum(np.abs(psi.amplitudes) > 1e-15) == 1

    def test_phi_quad_matches_direct_kronecker(self):
        plus = np.array([1, 1]) / math.sqrt(2)
        minus = np.array([1, -1]) / math.sqrt(2)
        k0, k1 = np.array([1.0, 0.0]), np.array([0.0, 1.0])

        def kron(*vs):
            out = np.ones(1)
            for v in vs:
                out = np.kron(out, v)
            return out

        raw = (
            kron(k0, k0, k0, k0) + kron(plus, k0, k0, k0)
            + kron(minus, plus, plus, plus) + kron(k0, k1, k1, k1)
        )
        psi = named_state("PHI_QUAD")
        np.testing.assert_allclose(psi.amplitudes, raw / np.linalg.norm(raw), atol=1e-12)
        # the printed 1/sqrt(26) prefactor does not normalize the expansion
        assert abs(np.linalg.norm(raw / math.sqrt(26)) - 1) > 0.1
        assert abs(np.linalg.norm(psi.amplitudes) - 1) < 1e-12

    def test_product_w3_zero(self):
        psi = named_state("PRODUCT_W3_0")
        w = named_state("W3")
        np.testing.assert_allclose(psi.amplitudes, np.kron(w.amplitudes, [1, 0]))

    @pytest.mark.parametrize("name", [n for n in StateName if n is not StateName.CUSTOM])
    def test_all_named_are_normalized(self, name):
        from wigner_lr.qcore import _ARITY

        psi = named_state(name, (0.7,) * _ARITY[name])
        assert abs(np.vdot(psi.amplitudes, psi.amplitudes).real - 1) < 1e-12

    def test_custom_records_norm(self):
        psi = named_state("CUSTOM", (3.0, 4.0))
        assert psi.num_parties == 1
        assert abs(psi.norm_factor - 0.2) < 1e-15

    def test_errors(self):
        with pytest.raises(InvalidArgument):
            named_state("GENW3", (0.1,))
        with pytest.raises(InvalidArgument):
            named_state("CUSTOM", (0.0, 0.0))
        with pytest.raises(InvalidArgument):
            named_state("NOT_A_STATE")
        with pytest.raises(InvalidArgument):
            PureState(1, np.array([1.0, 1.0]))


class TestWhiteNoise:
    def test_limits(self):
        psi = named_state("W3")
        rho1 = white_noise_mix(psi, 1.0)
        assert np.linalg.matrix_rank(rho1.entries, tol=1e-10) == 1
        rho0 = white_noise_mix(psi, 0.0)
        np.testing.assert_allclose(rho0.entries, np.eye(8) / 8)

    def test_ghz_half_spectrum(self):
        ev = np.sort(np.linalg.eigvalsh(white_noise_mix(named_state("GHZ3"), 0.5).entries))
        np.testing.assert_allclose(ev, [0.0625] * 7 + [0.5625], atol=1e-14)

    @pytest.mark.parametrize("p", [-0.1, 1.1, math.nan])
    def test_range(self, p):
        with pytest.raises(InvalidArgument):
            white_noise_mix(named_state("GHZ3"), p)

    def test_density_validation(self):
        with pytest.raises(InvalidArgument):
            DensityMatrix(1, np.array([[0.5, 0.1], [0.0, 0.5]]))
        with pytest.raises(InvalidArgument):
            DensityMatrix(1, np.diag([1.5, -0.5]))


class TestBornRule:
    def test_ghz_readout(self):
        a = AngleTable(3, np.zeros((3, 2)))
        assert abs(joint_probability(named_state("GHZ3"), (0, 0, 0), "+++", a) - 0.5) < 1e-15
        assert joint_probability(named_state("W3"), (0, 0, 0), "+++", a) == pytest.approx(0, abs=1e-15)

    @given(angle, angle)
    def test_singlet_analog(self, a, b):
        singlet = PureState(2, np.array([0, 1, -1, 0]) / math.sqrt(2))
        angles = AngleTable.from_rows([[a, 0.0], [b, 0.0]])
        p = joint_probability(singlet, (0, 0), "++", angles)
        assert p == pytest.approx(0.5 * math.sin(a - b) ** 2, abs=1e-12)
        e = correlators(behavior(singlet, angles))[(0, 0)]
        assert e == pytest.approx(-math.cos(2 * (a - b)), abs=1e-12)

    def test_table_angles_two_paths(self):
        psi = named_state("W3")
        a = AngleTable.from_rows([[1.27, 0.29], [0.0, math.pi / 4], [0.0, 1.45]])
        b = behavior(psi, a)
        for s in range(8):
            for o in range(8):
                sb = tuple((s >> (2 - k)) & 1 for k in range(3))
                ob = tuple((o >> (2 - k)) & 1 for k in range(3))
                assert b.probabilities[s, o] == pytest.approx(joint_probability(psi, sb, ob, a), abs=1e-14)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1), angles_for(3))
    def test_normalized_and_no_signaling(self, seed, a):
        b = behavior(random_state(3, seed, complex_=True), a)
        assert np.max(np.abs(b.probabilities.sum(axis=1) - 1)) < 1e-10
        assert b.no_signaling_deviation() < 1e-10

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1), angles_for(3), st.integers(0, 2), st.integers(0, 1))
    def test_pi_shift_invariance(self, seed, a, party, setting):
        psi = random_state(3, seed)
        shifted = a.alpha.copy()
        shifted[party, setting] += math.pi
        b1 = behavior(psi, a).probabilities
        b2 = behavior(psi, AngleTable(3, shifted)).probabilities
        np.testing.assert_allclose(b1, b2, atol=1e-12)

    def test_product_state_factorizes(self):
        psi = PureState(3, np.eye(8)[0])
        a = AngleTable.from_rows([[0.3, 1.1], [0.7, 2.0], [1.9, 0.4]])
        b = behavior(psi, a)
        for s in range(8):
            for o in range(8):
                prod = 1.0
                for j in range(3):
                    alpha = a.alpha[j, (s >> (2 - j)) & 1]
                    bit = (o >> (2 - j)) & 1
                    prod *= (math.cos(alpha) if bit == 0 else -math.sin(alpha)) ** 2
                assert b.probabilities[s, o] == pytest.approx(prod, abs=1e-14)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2**32 - 1), angles_for(3))
    def test_purity_and_linearity(self, seed, a):
        psi, phi = random_state(3, seed), random_state(3, seed + 1)
        direct = behavior(psi, a).probabilities
        np.testing.assert_allclose(behavior(white_noise_mix(psi, 1.0), a).probabilities, direct, atol=1e-12)
        p = 0.3
        mixed = DensityMatrix(3, p * psi.to_density().entries + (1 - p) * phi.to_density().entries)
        np.testing.assert_allclose(
            behavior(mixed, a).probabilities,
            p * direct + (1 - p) * behavior(phi, a).probabilities,
            atol=1e-12,
        )

    def test_mismatched_angles(self):
        with pytest.raises(InvalidArgument):
            behavior(named_state("W3"), AngleTable(4, np.zeros((4, 2))))


class TestCorrelators:
    def test_uniform_behavior(self):
        b = BehaviorTable(3, np.full((8, 8), 1 / 8))
        np.testing.assert_allclose(correlators(b).values, 0, atol=1e-15)

    def test_ghz_x_bases_two_ways(self):
        a = AngleTable(3, np.full((3, 2), math.pi / 4))
        e = correlators(behavior(named_state("GHZ3"), a))[(0, 0, 0)]
        x = np.array([[0, 1], [1, 0]])
        op = np.kron(np.kron(x, x), x)
        v = named_state("GHZ3").amplitudes
        assert e == pytest.approx(float(v @ op @ v), abs=1e-10)

    def test_behavior_validation(self):
        bad = np.full((4, 4), 0.25)
        bad[0] = [1, 0, 0, 0]
        with pytest.raises(InvalidArgument):
            BehaviorTable(2, bad)
        with pytest.raises(InvalidArgument):
            BehaviorTable(2, np.full((4, 4), 0.3))
