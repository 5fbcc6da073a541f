# SPDX-FileCopyrightText: 2023-present Eric T. Johnson
#
# SPDX-License-Identifier: BSD-3-Clause

import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from qdsat.errors import (
    DomainError,
    InsufficientDataError,
    NoDetectionsError,
    ParameterError,
    ZeroKeyCause,
)
from qdsat.keyrate import (
    FiniteKeyParams,
    QdKeyInput,
    adjusted_qber,
    asymptotic_qd_fraction,
    finite_size_delta,
    multiphoton_correction,
    qd_key_length,
)
from qdsat.numerics import binary_entropy

FIXED_SPLIT = FiniteKeyParams(eps_bar=2e-11, eps_PA=1e-11)


class TestFiniteKeyParams:
    def test_defaults(self):
        params = FiniteKeyParams()
        assert params.eps_total == pytest.approx(1e-9)
        assert params.f == 1.16
        assert params.q == 0.5

    def test_with_split(self):
        params = FiniteKeyParams().with_split(3e-10, 1e-10)
        assert (params.eps_bar, params.eps_PA) == (3e-10, 1e-10)
        assert params.eps_EC == 1e-10

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"eps_bar": 1e-11, "eps_PA": 2e-11},
            {"eps_bar": 1e-11, "eps_PA": 1e-11},
            {"eps_PA": 0.0},
            {"eps_EC": 1.0},
            {"eps_EC": 0.5, "eps_bar": 0.6},
            {"eps_PE": 0.0},
            {"f": 0.9},
            {"q": 0.0},
        ],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(ParameterError):
            FiniteKeyParams(**kwargs)


class TestQdKeyInput:
    @pytest.mark.parametrize(
        "kwargs",
        [
            {"n": -1.0},
            {"m": -1.0},
            {"E": 0.6},
            {"E": -0.01},
            {"Pm": -1e-9},
        ],
    )
    def test_invalid(self, kwargs):
        values = {"n": 1e6, "m": 5e5, "E": 0.02, "p_det": 1e-3, "Pm": 0.0}
        values.update(kwargs)
        with pytest.raises(DomainError):
            QdKeyInput(**values)


class TestAdjustedQber:
    def test_value(self):
        assert adjusted_qber(0.02, 1e6, 1e-10) == pytest.approx(
            0.02429193211, rel=1e-9
        )

    def test_small_sample(self):
        assert adjusted_qber(0.0, 100, 0.5) == pytest.approx(0.1629151266, rel=1e-9)

    @given(st.floats(min_value=0.0, max_value=0.5))
    def test_converges(self, E: float):
        assert adjusted_qber(E, 1e12, 1e-10) == pytest.approx(E, abs=1e-3)

    def test_no_bits(self):
        with pytest.raises(InsufficientDataError):
            adjusted_qber(0.02, 0.0, 1e-10)


class TestMultiphotonCorrection:
    def test_value(self):
        assert multiphoton_correction(1e-3, 1e-5) == pytest.approx(0.99)

    def test_clamped(self):
        assert multiphoton_correction(1e-5, 1e-3) == 0.0

    @given(
        st.floats(min_value=1e-9, max_value=1.0),
        st.floats(min_value=0.0, max_value=1e-3),
        st.floats(min_value=1e-3, max_value=1e3),
    )
    def test_scaling(self, p_det: float, Pm: float, c: float):
        # only the ratio Pm / p_det matters
        if c * p_det > 1.0:
            c = 1.0 / p_det
        assert multiphoton_correction(c * p_det, c * Pm) == pytest.approx(
            multiphoton_correction(p_det, Pm), abs=1e-12
        )

    def test_no_detections(self):
        with pytest.raises(NoDetectionsError):
            multiphoton_correction(0.0, 0.0)


class TestDelta:
    def test_value(self):
        assert finite_size_delta(1e6, 1e-10, 1e-12, 1e-10) == pytest.approx(
            0.04106201958, rel=1e-9
        )

    @given(st.floats(min_value=1.0, max_value=1e15))
    def test_decreasing(self, m: float):
        assert finite_size_delta(2 * m, 5e-10, 4e-10, 1e-10) < finite_size_delta(
            m, 5e-10, 4e-10, 1e-10
        )

    def test_vanishes(self):
        assert finite_size_delta(1e12, 5e-10, 4e-10, 1e-10) < 1e-3

    def test_needs_bits(self):
        with pytest.raises(InsufficientDataError):
            finite_size_delta(0.5, 5e-10, 4e-10, 1e-10)

    def test_checks_chain(self):
        with pytest.raises(ParameterError):
            finite_size_delta(1e6, 1e-12, 1e-10, 1e-10)


def _input(n: float = 1e6, E: float = 0.02, p_det: float = 1e-3, Pm: float = 0.0):
    return QdKeyInput(n=n, m=0.5 * n, E=E, p_det=p_det, Pm=Pm)


class TestQdKeyLength:
    def test_fixed_instance(self):
        result = qd_key_length(_input(), FIXED_SPLIT)
        assert result.qber_adjusted == pytest.approx(0.02601233867, rel=1e-9)
        assert result.delta == pytest.approx(0.06005638217, rel=1e-9)
        assert result.correction == 1.0
        assert result.key_bits == pytest.approx(300945.4887, abs=1.0)
        assert result.cause is None
        assert result.positive

    def test_perfect_channel_limit(self):
        inp = QdKeyInput(n=1e12, m=5e11, E=0.0, p_det=1.0, Pm=0.0)
        result = qd_key_length(inp, FiniteKeyParams(f=1.0))
        assert result.key_bits / (inp.n * 0.5) == pytest.approx(1.0, abs=1e-3)

    @given(
        st.floats(min_value=0.0, max_value=0.08),
        st.floats(min_value=0.0, max_value=0.05),
    )
    def test_asymptotic_recovery(self, E: float, ratio: float):
        p_det = 1e-3
        inp = QdKeyInput(n=1e13, m=5e12, E=E, p_det=p_det, Pm=ratio * p_det)
        result = qd_key_length(inp, FiniteKeyParams())
        A = 1.0 - ratio
        expected = max(asymptotic_qd_fraction(E, A, 1.16), 0.0)
        assert result.key_bits / (inp.n * 0.5) == pytest.approx(expected, abs=1e-3)

    @given(
        st.floats(min_value=0.0, max_value=0.1),
        st.floats(min_value=0.0, max_value=0.1),
    )
    def test_monotone_in_qber(self, E1: float, E2: float):
        lo, hi = sorted((E1, E2))
        params = FiniteKeyParams()
        assert (
            qd_key_length(_input(E=hi), params).key_bits
            <= qd_key_length(_input(E=lo), params).key_bits
        )

    @given(
        st.floats(min_value=0.0, max_value=1e-3),
        st.floats(min_value=0.0, max_value=1e-3),
    )
    def test_monotone_in_pm(self, Pm1: float, Pm2: float):
        lo, hi = sorted((Pm1, Pm2))
        params = FiniteKeyParams()
        assert (
            qd_key_length(_input(Pm=hi), params).key_bits
            <= qd_key_length(_input(Pm=lo), params).key_bits
        )

    @given(st.floats(min_value=10.0, max_value=1e10))
    def test_monotone_in_n(self, n: float):
        params = FiniteKeyParams()
        assert (
            qd_key_length(_input(n=n), params).key_bits
            <= qd_key_length(_input(n=2 * n), params).key_bits
        )

    @given(
        st.floats(min_value=0.0, max_value=0.5),
        st.floats(min_value=1.0, max_value=1e9),
        st.floats(min_value=0.0, max_value=2e-3),
    )
    def test_never_negative(self, E: float, n: float, Pm: float):
        result = qd_key_length(_input(n=n, E=E, Pm=Pm), FiniteKeyParams())
        assert result.key_bits >= 0.0
        assert (result.cause is None) == (result.key_bits > 0)

    def test_no_detections(self):
        result = qd_key_length(_input(p_det=0.0), FiniteKeyParams())
        assert result.key_bits == 0.0
        assert result.cause is ZeroKeyCause.NO_DETECTIONS
        assert math.isnan(result.delta)

    def test_too_few_bits(self):
        inp = QdKeyInput(n=1.0, m=0.5, E=0.0, p_det=1e-3, Pm=0.0)
        result = qd_key_length(inp, FiniteKeyParams())
        assert result.cause is ZeroKeyCause.NO_DETECTIONS

    def test_multiphoton_dominated(self):
        result = qd_key_length(_input(Pm=2e-3), FiniteKeyParams())
        assert result.cause is ZeroKeyCause.MULTIPHOTON_DOMINATED
        assert result.correction == 0.0

    def test_noise_dominated(self):
        result = qd_key_length(_input(E=0.3, Pm=5e-4), FiniteKeyParams())
        assert result.cause is ZeroKeyCause.NOISE_DOMINATED
        assert result.key_bits == 0.0

    def test_negative_bracket(self):
        result = qd_key_length(_input(E=0.15), FiniteKeyParams())
        assert result.cause is ZeroKeyCause.NEGATIVE_BRACKET
        assert result.qber_adjusted is not None
        assert result.qber_adjusted / result.correction < 0.5


class TestAsymptoticFraction:
    def test_no_errors(self):
        assert asymptotic_qd_fraction(0.0, 1.0, 1.16) == 1.0

    def test_value(self):
        expected = 0.9 * (1 - binary_entropy(0.02 / 0.9) - 1.16 * binary_entropy(0.02))
        assert asymptotic_qd_fraction(0.02, 0.9, 1.16) == pytest.approx(expected)

    @pytest.mark.parametrize(("E", "A"), [(0.3, 0.5), (0.01, 0.0)])
    def test_zero(self, E, A):
        assert asymptotic_qd_fraction(E, A, 1.16) == 0.0
