import pytest

from switchcount.power_model import (EqualPowerPoint, InfeasibleBudgetError,
                                     MacPowerBreakdown, PowerBudget,
                                     equal_power_points, mac_power,
                                     network_power, pann_power,
                                     required_acc_width, unsigned_power_save)


class TestMacPower:
    def test_signed_4bit(self):
        bp = mac_power(4, 4, 32, signed=True)
        assert bp.mult == 12
        assert bp.acc == 24
        assert bp.total == 36
        assert 16 / bp.total == pytest.approx(0.444, abs=1e-3)

    def test_unsigned_4bit(self):
        assert mac_power(4, 4, 32, signed=False).total == 24  # 0.5b^2 + 4b

    def test_mixed_4_8(self):
        assert mac_power(4, 8, 32, signed=True).mult == 38

    def test_scalar_reduction_all_b(self):
        for b in range(1, 17):
            s = mac_power(b, b, 4 * b, signed=True)
            assert s.mult == 0.5 * b * b + b
            assert s.acc == 0.5 * (4 * b) + 2 * b
            u = mac_power(b, b, 4 * b, signed=False)
            assert u.total == 0.5 * b * b + 4 * b

    def test_monotone(self):
        base = mac_power(4, 4, 32, True).total
        assert mac_power(5, 4, 32, True).total > base
        assert mac_power(4, 5, 32, True).total > base
        assert mac_power(4, 4, 33, True).total > base

    def test_narrow_accumulator_rejected(self):
        with pytest.raises(ValueError):
            mac_power(4, 4, 7, signed=True)


class TestPannPower:
    def test_examples(self):
        assert pann_power(2, 4) == 10
        assert pann_power(0, 6) == 3.0
        assert pann_power(7.5, 8) == 64  # equals the 8-bit unsigned MAC

    def test_validation(self):
        with pytest.raises(ValueError):
            pann_power(-0.1, 4)
        with pytest.raises(ValueError):
            pann_power(1, 0)


class TestEqualPower:
    def test_table_points(self):
        pts = {p.b_x: p.r for p in equal_power_points(PowerBudget(10), range(2, 9))}
        assert pts[6] == pytest.approx(1.1667, abs=1e-4)
        pts = {p.b_x: p.r for p in equal_power_points(PowerBudget(16.5), range(2, 9))}
        assert pts[6] == pytest.approx(2.25)
        pts = {p.b_x: p.r for p in equal_power_points(PowerBudget(24), range(2, 9))}
        assert pts[7] == pytest.approx(2.9286, abs=1e-3)

    def test_budget_identity(self):
        for p in equal_power_points(PowerBudget(13.7), range(2, 9)):
            assert pann_power(p.r, p.b_x) == pytest.approx(13.7, abs=1e-9)

    def test_infeasible_omitted_then_error(self):
        pts = equal_power_points(PowerBudget(2.0), range(2, 9))
        assert all(pt.r > 0 for pt in pts)
        assert {pt.b_x for pt in pts} == {2, 3}
        with pytest.raises(InfeasibleBudgetError):
            equal_power_points(PowerBudget(0.5), range(2, 9))

    def test_budget_validation(self):
        with pytest.raises(ValueError):
            PowerBudget(0)


class TestUnsignedSave:
    def test_headline_numbers(self):
        assert unsigned_power_save(4, 32) == pytest.approx(1 / 3)
        assert unsigned_power_save(2, 32) == pytest.approx(7 / 12)
        assert round(100 * unsigned_power_save(2, 17)) == 39

    def test_tight_accumulator_column(self):
        expected = {2: 39, 3: 28, 4: 21, 5: 16, 6: 13}
        for b, pct in expected.items():
            B = required_acc_width(b, b, 3, 512)
            assert int(100 * unsigned_power_save(b, B)) == pct


class TestAccWidth:
    def test_table_column(self):
        assert [required_acc_width(b, b, 3, 512) for b in range(2, 7)] == [17, 19, 21, 23, 25]

    def test_trivial(self):
        assert required_acc_width(1, 1, 1, 1) == 3


class TestNetworkPower:
    def test_resnet18_scale(self):
        assert network_power(24, 1_820_000_000) == pytest.approx(4.368e10)
        assert network_power(10, 1_820_000_000) == pytest.approx(1.82e10)
        assert network_power(0, 10) == 0
