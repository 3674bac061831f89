import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from annealslice.errors import ParseError, ScheduleConstraintError
from annealslice.schedule import (
    DEFAULT_ENERGY_SCALES,
    AnnealSchedule,
    EnergyScaleTable,
    interpolate_energy_scales,
    pause_then_quench_schedule,
    sliced_schedule,
    standard_schedule,
    validate,
)


def pts(sch):
    return [tuple(p) for p in sch.points]


class TestBuilders:
    @pytest.mark.parametrize("T", [1000, 1, 2000])
    def test_standard(self, T):
        assert pts(standard_schedule(T)) == [(0, 0), (T, 1)]

    def test_standard_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            standard_schedule(0)

    @pytest.mark.parametrize("t,expected", [
        (200, [(0, 0), (200, 0.2), (201, 1)]),
        (500, [(0, 0), (500, 0.5), (501, 1)]),
        (100, [(0, 0), (100, 0.1), (101, 1)]),
    ])
    def test_sliced(self, t, expected):
        assert pts(sliced_schedule(1000, t, 1)) == expected

    def test_last_slice_is_full_anneal(self):
        assert sliced_schedule(1000, 1000, 1) == standard_schedule(1000)

    def test_sliced_errors(self):
        with pytest.raises(ValueError):
            sliced_schedule(1000, 1001)
        with pytest.raises(ValueError):
            sliced_schedule(1000, 0)
        with pytest.raises(ScheduleConstraintError):
            sliced_schedule(1000, 200, 0.5)

    def test_pause(self):
        assert pts(pause_then_quench_schedule(1000, 200, 1)) == [
            (0, 0), (200, 0.2), (999, 0.2), (1000, 1)
        ]

    def test_pause_zero_length_hold_collapses(self):
        assert pts(pause_then_quench_schedule(1000, 999, 1)) == [(0, 0), (999, 0.999), (1000, 1)]

    def test_pause_fractional_quench(self):
        # quench from 0.2 to 1 in 0.5 us would break the slope cap, so relax it
        sch = pause_then_quench_schedule(1000, 200, 0.5, slope_max=2.0)
        assert sch.points[2] == (999.5, 0.2)

    def test_pause_overrun(self):
        with pytest.raises(ValueError):
            pause_then_quench_schedule(1000, 999.5, 1)


class TestValidate:
    def test_standard_valid(self):
        assert validate(standard_schedule(1000)) == []

    def test_too_many_points(self):
        times = np.linspace(0, 1000, 51)
        sch = AnnealSchedule.from_points(zip(times, times / 1000))
        kinds = [v.kind for v in validate(sch)]
        assert kinds == ["point_count"]

    def test_slope(self):
        sch = AnnealSchedule.from_points([(0, 0), (200, 0.2), (200.5, 1.0)])
        v = validate(sch, slope_max=1.0)
        assert [x.kind for x in v] == ["slope"]
        assert "1.6" in v[0].message

    def test_endpoints_and_monotonicity(self):
        sch = AnnealSchedule.from_points([(1, 0.1), (5, 0.5), (4, 0.4), (10, 0.9)])
        kinds = {v.kind for v in validate(sch)}
        assert kinds == {"endpoint", "monotonicity"}

    def test_reverse_anneal_rejected(self):
        sch = AnnealSchedule.from_points([(0, 0), (10, 0.5), (20, 0.3), (30, 1)])
        assert "monotonicity" in {v.kind for v in validate(sch)}

    def test_pure(self):
        sch = sliced_schedule(1000, 300)
        before = pts(sch)
        validate(sch)
        assert pts(sch) == before

    @given(st.floats(min_value=1.0, max_value=1e6))
    def test_standard_always_valid(self, T):
        assert validate(standard_schedule(T)) == []


class TestSliceProperties:
    @given(
        st.floats(min_value=2.0, max_value=5000.0),
        st.floats(min_value=0.001, max_value=1.0),
    )
    def test_agrees_with_ramp_before_slice(self, T, frac):
        t = T * frac
        assume(t > 0)
        sch = sliced_schedule(T, t, 1.0, slope_max=np.inf)
        ramp = standard_schedule(T)
        probe = np.linspace(0, t, 17)
        np.testing.assert_allclose(sch.fraction_at(probe), ramp.fraction_at(probe), rtol=0, atol=1e-12)
        if t < T:
            assert abs(sch.points[1].s - t / T) <= 1e-12

    def test_csv_round_trip(self):
        sch = sliced_schedule(1000, 200)
        text = sch.to_csv()
        assert text.splitlines()[0] == "time_us,s"
        assert AnnealSchedule.from_csv(text) == sch

    def test_csv_bad_header(self):
        with pytest.raises(ParseError):
            AnnealSchedule.from_csv("t,s\n0,0\n")


class TestEnergyScales:
    def test_exact_at_rows(self):
        t = DEFAULT_ENERGY_SCALES
        for s, A, B in zip(t.s, t.A, t.B):
            assert interpolate_energy_scales(t, s) == (A, B)

    def test_two_row_midpoint(self):
        t = EnergyScaleTable([0, 1], [6, 0], [0, 12])
        assert interpolate_energy_scales(t, 0.5) == (3.0, 6.0)

    def test_default_vanishes_at_end(self):
        A, B = interpolate_energy_scales(DEFAULT_ENERGY_SCALES, 1.0)
        assert A == 0.0 and B > 0

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            interpolate_energy_scales(DEFAULT_ENERGY_SCALES, 1.01)

    def test_table_invariants(self):
        with pytest.raises(ValueError):
            EnergyScaleTable([0, 0.5, 0.4, 1], [4, 3, 2, 0], [0, 1, 2, 3])
        with pytest.raises(ValueError):
            EnergyScaleTable([0, 1], [0, 1], [0, 1])

    @given(st.lists(st.floats(min_value=0, max_value=1), min_size=2, max_size=30))
    def test_monotone(self, ss):
        ss = sorted(ss)
        A, B = interpolate_energy_scales(DEFAULT_ENERGY_SCALES, np.array(ss))
        assert np.all(np.diff(A) <= 0) and np.all(np.diff(B) >= 0)

    def test_csv(self, tmp_path):
        p = tmp_path / "t.csv"
        p.write_text(DEFAULT_ENERGY_SCALES.to_csv())
        t = EnergyScaleTable.load(p)
        np.testing.assert_array_equal(t.A, DEFAULT_ENERGY_SCALES.A)
        p.write_text("s,A,B\n0,1,0\n1,0,1\n")
        with pytest.raises(ParseError):
            EnergyScaleTable.load(p)
        p.write_text("s,A_GHz,B_GHz\n0,1,0\n0.5,2,1\n1,0,1\n")
        with pytest.raises(ParseError):
            EnergyScaleTable.load(p)
