import pytest

from switchcount.mse import (DistributionModel, InfeasibleBudgetError,
                             ModelKind, MseParams,
                             empirical_pann_weight_error, mse_general,
                             mse_pann, mse_pann_fixed_r, mse_ruq,
                             monte_carlo_mse, optimal_bx, ratio_curve,
                             uniform_crossing_bit)


class TestClosedForms:
    def test_general_matches_ruq_form(self):
        p = MseParams.uniform(d=100, m_x=1.0, m_w=1.0, b_x=4, b_w=4)
        assert mse_general(p) == pytest.approx(mse_ruq(100, 1.0, 1.0, 4, 4))

    def test_second_order_term_is_small(self):
        p = MseParams.uniform(d=100, m_x=1.0, m_w=1.0, b_x=4, b_w=4)
        first = mse_general(p)
        both = mse_general(p, include_second_order=True)
        assert first < both < first * 1.01

    def test_budget_bracket_value(self):
        # d=1, M=1: bracket at (b_x=3, P=10) is 4^-3 + 9/289
        assert mse_pann(1, 1.0, 1.0, 3, 10) * 144 == pytest.approx(0.046767, abs=1e-5)

    def test_fixed_r_form(self):
        assert mse_pann_fixed_r(1, 1.0, 1.0, 3, 2.0) * 144 == pytest.approx(
            4.0 ** -3 + 1 / 16)

    def test_optimal_bx_p10(self):
        b, _ = optimal_bx(1024, 1.0, 1.0, 10)
        assert b == 3

    def test_infeasible(self):
        with pytest.raises(InfeasibleBudgetError):
            mse_pann(1, 1.0, 1.0, 8, 4.0)
        with pytest.raises(InfeasibleBudgetError):
            optimal_bx(1, 1.0, 1.0, 0.9, b_range=range(2, 9))

    def test_validation(self):
        with pytest.raises(ValueError):
            mse_ruq(1, 1.0, 1.0, 0, 4)
        with pytest.raises(ValueError):
            mse_pann_fixed_r(1, 1.0, 1.0, 3, 0.0)


class TestRatioCurve:
    def test_low_bits_favor_additions(self):
        rows = {b: ratio for b, _, _, _, _, ratio in ratio_curve(1024, 1.0, 1.0, [2, 3, 4, 8])}
        assert rows[2] == pytest.approx(6.7, abs=0.1)
        assert rows[2] > 1 and rows[3] > 1 and rows[4] > 1
        assert rows[8] < 1

    def test_crossing_bit(self):
        assert 4 < uniform_crossing_bit(1024, range(2, 9)) <= 8


class TestMonteCarlo:
    MODEL = DistributionModel(ModelKind.UNIFORM_PAPER)

    def test_ruq_ruq_agreement(self):
        got = monte_carlo_mse(self.MODEL, 256, {"weights": ("ruq", 4), "acts": ("ruq", 4)},
                              trials=4000, seed=5)
        want = mse_ruq(256, 1.0, 1.0, 4, 4)
        assert got == pytest.approx(want, rel=0.10)

    def test_pann_ruq_agreement(self):
        got = monte_carlo_mse(self.MODEL, 256, {"weights": ("pann", 2.0), "acts": ("ruq", 4)},
                              trials=4000, seed=5)
        want = mse_pann_fixed_r(256, 1.0, 1.0, 4, 2.0)
        assert got == pytest.approx(want, rel=0.10)

    def test_weight_error_second_moment(self):
        # sigma_ew^2 = M_w^2 / (192 R^2) for the L1-normalized quantizer:
        # step = E|w| / R = (M_w/4)/R, error uniform over +-step/2
        got = empirical_pann_weight_error(1.0, 2.0, 512, trials=200, seed=9)
        assert got == pytest.approx(1.0 / (192 * 4), rel=0.10)

    def test_trial_floor(self):
        with pytest.raises(ValueError):
            monte_carlo_mse(self.MODEL, 8, {"weights": ("ruq", 2), "acts": ("ruq", 2)},
                            trials=10, seed=0)

    def test_deterministic(self):
        cfg = {"weights": ("ruq", 3), "acts": ("ruq", 3)}
        a = monte_carlo_mse(self.MODEL, 32, cfg, trials=1000, seed=1)
        b = monte_carlo_mse(self.MODEL, 32, cfg, trials=1000, seed=1)
        assert a == b
