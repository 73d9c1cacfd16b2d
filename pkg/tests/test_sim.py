import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ftkit.errors import BlowUpError, ValidationError
from ftkit.laws import DifferentiatorConfig, GainScheme, binomial_gains, exponent_ladder
from ftkit.sim import (
    ConvergenceCriterion,
    Signal,
    SimConfig,
    Trajectory,
    _run_chain,
    _run_differentiator,
    closed_loop_rhs,
    default_t_max,
    detect_convergence,
    differentiator_python_rhs,
    integrate,
    simulate_closed_loop,
    simulate_differentiator,
)


def decay(t, x):
    return -x


class TestIntegrate:
    def test_euler_step(self):
        traj = integrate(decay, [1.0], SimConfig(step_h=0.1, method="euler", t_max=0.1))
        assert traj.states[-1, 0] == pytest.approx(0.9, abs=1e-15)

    def test_rk4_step(self):
        # stages: -1, -0.95, -0.9525, -0.90475
        traj = integrate(decay, [1.0], SimConfig(step_h=0.1, method="rk4", t_max=0.1))
        assert traj.states[-1, 0] == pytest.approx(0.9048375, abs=1e-15)

    def test_zero_rhs(self):
        traj = integrate(lambda t, x: np.zeros_like(x), [1.0, -2.0], SimConfig(0.01, "rk4", 1.0))
        assert np.all(traj.states == [1.0, -2.0])

    def test_grid(self):
        traj = integrate(decay, [1.0], SimConfig(0.01, "rk4", 1.0, record_stride=10))
        assert traj.times.size == 11
        np.testing.assert_allclose(np.diff(traj.times), 0.1, rtol=1e-12)

    def test_blow_up(self):
        def explode(t, x):
            return x * 1e300 if t >= 0.25 else x

        with pytest.raises(BlowUpError) as info, np.errstate(over="ignore"):
            integrate(explode, [1.0], SimConfig(0.1, "euler", 1.0))
        # x ~ 1e299 after the step from 0.3, overflows on the step from 0.4
        assert info.value.time == pytest.approx(0.5)

    def test_rk4_order(self):
        errs = []
        for h in (0.1, 0.05):
            x = integrate(decay, [1.0], SimConfig(h, "rk4", 1.0)).states[-1, 0]
            errs.append(abs(x - math.exp(-1)))
        assert 14 < errs[0] / errs[1] < 18

    @pytest.mark.parametrize("kwargs", [dict(step_h=0), dict(method="rk45"), dict(t_max=1e-9),
                                        dict(record_stride=0)])
    def test_config_validation(self, kwargs):
        with pytest.raises(ValidationError):
            SimConfig(**kwargs)


class TestDetectConvergence:
    def _traj(self, times, values):
        return Trajectory(np.asarray(times), np.asarray(values, dtype=float).reshape(len(times), -1))

    def test_zero(self):
        t = np.arange(0, 5, 0.1)
        rep = detect_convergence(self._traj(t, np.zeros(t.size)), ConvergenceCriterion())
        assert rep.converged and rep.t_conv == 0.0

    def test_exponential_crossing(self):
        t = np.arange(0, 20, 0.01)
        rep = detect_convergence(self._traj(t, np.exp(-t)), ConvergenceCriterion(1e-6, 0.0))
        expected = t[np.searchsorted(t, math.log(1e6))]
        assert rep.t_conv == expected
        assert rep.t_conv == pytest.approx(13.82, abs=0.01)

    def test_never(self):
        t = np.arange(0, 5, 0.1)
        rep = detect_convergence(self._traj(t, np.ones(t.size)), ConvergenceCriterion())
        assert not rep.converged and rep.t_conv is None

    def test_dwell_skips_transient_dip(self):
        t = np.arange(0, 10, 0.1)
        y = np.where((t > 2) & (t < 2.5), 0.0, 1.0)
        y[t >= 6] = 0.0
        rep = detect_convergence(self._traj(t, y), ConvergenceCriterion(1e-6, 1.0))
        assert rep.t_conv == pytest.approx(6.0)

    def test_dwell_must_fit(self):
        t = np.arange(0, 10.05, 0.1)
        y = np.where(t >= 9.5, 0.0, 1.0)
        rep = detect_convergence(self._traj(t, y), ConvergenceCriterion(1e-6, 1.0))
        assert not rep.converged

    def test_max_norm(self):
        t = np.arange(0, 3, 1.0)
        traj = Trajectory(t, np.array([[1.0, 0.0], [0.0, 1e-3], [0.0, 0.0]]))
        assert detect_convergence(traj, ConvergenceCriterion(1e-6, 0.0)).t_conv == 2.0


class TestClosedLoop:
    def test_origin(self):
        _, rep = simulate_closed_loop(2, 0.0, cfg=SimConfig(t_max=5.0, record_stride=10))
        assert rep.t_conv == 0.0

    def test_n2_unit(self):
        traj, rep = simulate_closed_loop(2, 1.0, cfg=SimConfig(record_stride=10))
        assert rep.converged
        assert rep.t_conv == pytest.approx(13.9, rel=0.2)
        assert traj.header() == ["t", "x1", "x2", "u"]

    def test_default_horizon(self):
        assert default_t_max(3) == 300.0 and default_t_max(5) == 600.0

    def test_kernel_matches_python_integrate(self):
        k = binomial_gains(3)
        g = exponent_ladder(3).as_array()
        for method in ("rk4", "euler"):
            cfg = SimConfig(1e-3, method, 2.0, 5)
            py = integrate(closed_loop_rhs(k, g), np.full(3, 2.0), cfg).states
            jit = _run_chain(np.full(3, 2.0), cfg, k, g)
            np.testing.assert_allclose(jit, py, rtol=1e-12, atol=1e-15)

    def test_deterministic(self):
        cfg = SimConfig(1e-4, "rk4", 20.0, 10)
        a, _ = simulate_closed_loop(3, 5.0, cfg=cfg)
        b, _ = simulate_closed_loop(3, 5.0, cfg=cfg)
        assert np.array_equal(a.states, b.states) and np.array_equal(a.inputs, b.inputs)

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_odd_symmetry(self, n):
        cfg = SimConfig(1e-4, "rk4", 30.0, 10)
        a, _ = simulate_closed_loop(n, 3.0, cfg=cfg)
        b, _ = simulate_closed_loop(n, -3.0, cfg=cfg)
        np.testing.assert_allclose(b.states, -a.states, rtol=0, atol=1e-12)

    def test_step_halving(self):
        _, a = simulate_closed_loop(2, 1.0, cfg=SimConfig(1e-4, "rk4", None, 10))
        _, b = simulate_closed_loop(2, 1.0, cfg=SimConfig(5e-5, "rk4", None, 20))
        assert abs(a.t_conv - b.t_conv) < 0.01 * a.t_conv

    def test_scheme_mismatch(self):
        with pytest.raises(ValidationError):
            simulate_closed_loop(3, 1.0, scheme=GainScheme(mu=1.0, n=2))

    def test_blow_up_reported(self):
        with pytest.raises(BlowUpError):
            _run_chain(np.array([1.0, 1.0]), SimConfig(1.0, "euler", 100.0), np.array([-1e200, -1e200]),
                       np.array([1.0, 1.0]))

    def test_csv(self):
        traj, _ = simulate_closed_loop(2, 1.0, cfg=SimConfig(1e-3, "rk4", 0.01, 5))
        buf = io.StringIO()
        traj.write_csv(buf)
        lines = buf.getvalue().splitlines()
        assert lines[0] == "t,x1,x2,u"
        assert len(lines) == 1 + traj.times.size
        first = [float(v) for v in lines[1].split(",")]
        assert first == [0.0, 1.0, 1.0, -3.0]
        # full precision round trip
        last = np.array([float(v) for v in lines[-1].split(",")])
        assert np.array_equal(last[1:3], traj.states[-1])


class TestSignal:
    @settings(max_examples=50)
    @given(st.floats(-5, 5), st.integers(0, 3))
    def test_derivatives_match_finite_differences(self, t, order):
        h = 1e-4
        for sig in (Signal.polynomial(1.0, -2.0, 0.5, 0.25), Signal.sinusoid(1.5, 2.0, 0.3)):
            fd = (sig.derivative(t + h, order) - sig.derivative(t - h, order)) / (2 * h)
            exact = sig.derivative(t, order + 1)
            assert abs(fd - exact) <= 1e-6 * max(1.0, abs(exact))

    def test_parse(self):
        assert Signal.parse("poly:1,2") == Signal.polynomial(1, 2)
        assert Signal.parse("sin:1,1") == Signal.sinusoid(1, 1, 0)
        assert Signal.parse("const:3") == Signal.constant(3)
        with pytest.raises(ValidationError):
            Signal.parse("cos:1")

    def test_constant_derivatives(self):
        assert Signal.constant(2.0).derivative(1.0, 1) == 0.0


def run_diff(signal, variant, lam, n=2, t_max=30.0):
    d = DifferentiatorConfig.default(n, variant, lam)
    return simulate_differentiator(signal, np.zeros(d.dim), d, SimConfig(1e-4, "rk4", t_max, 10))[1]


class TestDifferentiatorRuns:
    def test_zero_signal(self):
        assert np.all(run_diff(Signal.constant(0.0), "basic", 0.0, t_max=5.0) == 0.0)

    def test_ramp_exact(self):
        err = run_diff(Signal.polynomial(1.0, 2.0), "basic", 0.0)
        assert err[1] < 1e-3

    def test_sine_basic_not_exact(self):
        assert run_diff(Signal.sinusoid(1.0, 1.0), "basic", 0.0)[1] >= 1e-2

    def test_sine_modified(self):
        assert run_diff(Signal.sinusoid(1.0, 1.0), "modified", 1.5)[1] < 1e-2

    def test_sine_smooth(self):
        err = run_diff(Signal.sinusoid(1.0, 1.0), "smooth", 1.5)
        assert err.size == 3 and err[1] < 1e-2

    def test_kernel_matches_python_integrate(self):
        sig = Signal.sinusoid(1.0, 1.0, 0.2)
        d = DifferentiatorConfig.default(2, "smooth", 1.5)
        cfg = SimConfig(1e-3, "rk4", 1.0, 10)
        py = integrate(differentiator_python_rhs(sig, d), [0.5, 0.0, 0.0], cfg).states
        jit = _run_differentiator([0.5, 0.0, 0.0], cfg, d, sig)
        np.testing.assert_allclose(jit, py, rtol=1e-11, atol=1e-13)

    def test_bad_z0(self):
        d = DifferentiatorConfig.default(2, "smooth", 1.5)
        with pytest.raises(ValidationError):
            simulate_differentiator(Signal.constant(0.0), np.zeros(2), d)
