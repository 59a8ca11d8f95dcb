import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lincap.channel import DetectorModel, blahut_arimoto
from lincap.fock import basis_state, enumerate_basis
from lincap.optimize import (
    OptimizerConfig,
    ProblemSpec,
    ProtocolObjective,
    alphabet_sweep,
    decode_state,
    encode_state,
    evaluate_parameters,
    finite_diff_gradient,
    maximize_capacity,
    pack_parameters,
    sweep_constraint,
    sweep_to_csv,
)
from lincap.protocols import canonical_protocol

FAST = dict(restarts=2, max_iters=60)


def four_point(f, x, h=1e-3):
    E = h * np.eye(x.size)
    return np.array(
        [(-f(x + 2 * e) + 8 * f(x + e) - 8 * f(x - e) + f(x - 2 * e)) / (12 * h) for e in E]
    )


def canonical_parameters(spec):
    proto = canonical_protocol()
    return pack_parameters(spec, proto.input, proto.alice_ops, proto.bob_op)


class TestProblemSpec:
    def test_parameter_count(self):
        spec = ProblemSpec()
        # 19 state reals, 3 x 4 for Alice, 16 for Bob
        assert (spec.n_state, spec.n_alice, spec.n_bob, spec.n_params) == (19, 12, 16, 47)

    @pytest.mark.parametrize(
        "kwargs",
        [dict(alice_modes=4), dict(alice_modes=0), dict(M=1), dict(constraint=2.5), dict(constraint=-0.1),
         dict(priors_mode="softmax"), dict(optimize_input=False)],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            ProblemSpec(**kwargs)

    def test_fixed_input_sector(self):
        with pytest.raises(ValueError, match="sector"):
            ProblemSpec(optimize_input=False, fixed_input=basis_state(enumerate_basis(1, 4), (1, 0, 0, 0)))

    def test_alice_photon_counts(self):
        counts = ProblemSpec().alice_photon_counts()
        np.testing.assert_array_equal(counts, [2, 2, 1, 1, 2, 1, 1, 0, 0, 0])

    @pytest.mark.parametrize("kwargs", [dict(restarts=0), dict(fd_step=0.0), dict(jobs=0)])
    def test_config_invalid(self, kwargs):
        with pytest.raises(ValueError):
            OptimizerConfig(**kwargs)


class TestFiniteDifferences:
    def test_quadratic_exact(self):
        A = np.array([[2.0, 0.5], [0.5, 1.0]])
        f = lambda x: 0.5 * x @ A @ x + x[0]  # noqa: E731
        x = np.array([0.3, -1.2])
        np.testing.assert_allclose(finite_diff_gradient(f, x), A @ x + [1, 0], atol=1e-8)

    def test_zero_step(self):
        with pytest.raises(ValueError):
            finite_diff_gradient(np.sum, np.zeros(2), h=0.0)

    def test_non_finite(self):
        with pytest.raises(FloatingPointError):
            with np.errstate(invalid="ignore", divide="ignore"):
                finite_diff_gradient(lambda x: np.log(x[0]), np.zeros(1))

    def test_vectorized_matches_loop(self, rng):
        obj = ProtocolObjective(ProblemSpec())
        x = rng.standard_normal(47)
        g1 = finite_diff_gradient(lambda X: obj.information(X), x, vectorized=True)
        g2 = finite_diff_gradient(lambda z: float(obj.information(z)), x)
        # batched and single evaluations differ only by rounding, amplified by 1/2h
        np.testing.assert_allclose(g1, g2, rtol=0, atol=1e-8)

    @pytest.mark.parametrize("seed", range(3))
    def test_mutual_information_against_stencil(self, seed):
        rng = np.random.default_rng(seed)
        obj = ProtocolObjective(ProblemSpec(detector=DetectorModel(0.9, 0.99) if seed == 2 else None))
        x = rng.standard_normal(47)
        f = lambda X: obj.information(X)  # noqa: E731
        g = finite_diff_gradient(f, x, 1e-6, vectorized=True)
        assert np.abs(g - four_point(f, x)).max() < 1e-5


class TestStateChart:
    @given(st.integers(0, 2**32 - 1))
    def test_round_trip_up_to_phase(self, seed):
        rng = np.random.default_rng(seed)
        c = rng.standard_normal(10) + 1j * rng.standard_normal(10)
        c /= np.linalg.norm(c)
        back = decode_state(encode_state(c), 10)
        assert abs(abs(np.vdot(back, c)) - 1) < 1e-12

    def test_chart_size(self):
        assert encode_state(np.ones(10)).shape == (19,)


class TestObjective:
    def test_channels_stochastic(self, rng):
        obj = ProtocolObjective(ProblemSpec(M=6))
        W = obj.channels(rng.standard_normal((4, ProblemSpec(M=6).n_params)))
        assert W.shape == (4, 6, 10)
        np.testing.assert_allclose(W.sum(axis=-1), 1, atol=1e-9)

    def test_detector_outcomes(self, rng):
        spec = ProblemSpec(detector=DetectorModel(0.8, 0.99))
        assert ProtocolObjective(spec).channels(rng.standard_normal(47)[None]).shape == (1, 4, 16)

    def test_canonical_parameters(self):
        cap, p = evaluate_parameters(ProblemSpec(), canonical_parameters(ProblemSpec()))
        assert cap == pytest.approx(2.0, abs=1e-12)
        np.testing.assert_allclose(p, 0.25)

    def test_pack_requires_identity_first(self):
        proto = canonical_protocol()
        ops = list(proto.alice_ops)
        with pytest.raises(ValueError):
            pack_parameters(ProblemSpec(), proto.input, ops[::-1], proto.bob_op)


class TestMaximize:
    def test_identity_alphabet_gives_zero(self):
        spec = ProblemSpec(fixed_alice=tuple(np.eye(2) for _ in range(4)))
        res = maximize_capacity(spec, OptimizerConfig(**FAST))
        assert res.capacity_bits == pytest.approx(0.0, abs=1e-9)

    def test_everything_fixed(self):
        proto = canonical_protocol()
        spec = ProblemSpec(optimize_input=False, fixed_input=proto.input, fixed_alice=proto.alice_ops, fixed_bob=proto.bob_op)
        res = maximize_capacity(spec)
        assert spec.n_params == 0 and res.capacity_bits == pytest.approx(2.0)

    def test_result_reproduces_and_is_bounded(self):
        spec = ProblemSpec(M=5, priors_mode="blahut-arimoto")
        res = maximize_capacity(spec, OptimizerConfig(**FAST))
        assert res.capacity_bits <= math.log2(5)
        cap, _ = evaluate_parameters(spec, res.parameters)
        assert cap == pytest.approx(res.capacity_bits, abs=1e-9)

    def test_constraint_residual(self):
        spec = ProblemSpec(constraint=0.4)
        res = maximize_capacity(spec, OptimizerConfig(**FAST))
        assert res.feasibility_gap < 1e-6
        assert abs(res.info["mean_alice_photons"] - 0.4) < 1e-6

    def test_deterministic(self):
        spec = ProblemSpec(constraint=0.7)
        a = maximize_capacity(spec, OptimizerConfig(seed=3, **FAST))
        b = maximize_capacity(spec, OptimizerConfig(seed=3, **FAST))
        assert a.capacity_bits == b.capacity_bits
        np.testing.assert_array_equal(a.parameters, b.parameters)

    def test_jobs_do_not_change_result(self):
        spec = ProblemSpec(constraint=0.7)
        a = maximize_capacity(spec, OptimizerConfig(seed=3, **FAST))
        b = maximize_capacity(spec, OptimizerConfig(seed=3, jobs=2, **FAST))
        assert a.capacity_bits == b.capacity_bits
        np.testing.assert_array_equal(a.restart_capacities, b.restart_capacities)

    def test_stop_at_truncates(self):
        spec = ProblemSpec()
        x = canonical_parameters(spec)
        res = maximize_capacity(spec, OptimizerConfig(restarts=50, initial=(x,), stop_at=1.999))
        assert res.info["restarts_used"] == 1 and res.capacity_bits == pytest.approx(2.0)

    def test_two_bit_optimum_priors_are_uniform(self):
        spec = ProblemSpec()
        x = canonical_parameters(spec)
        res = maximize_capacity(spec, OptimizerConfig(restarts=1, initial=(x,), max_iters=20))
        W = ProtocolObjective(spec).channels(res.parameters[None])[0]
        assert abs(blahut_arimoto(W).capacity - res.capacity_bits) < 1e-6


class TestSweeps:
    def test_sweep_rows_and_csv(self):
        rows = sweep_constraint(ProblemSpec(), [0.0, 0.5], OptimizerConfig(restarts=2, warm_restarts=1, max_iters=60))
        assert rows[0]["capacity_bits"] == pytest.approx(0.0, abs=1e-9)
        assert rows[1]["capacity_bits"] > 0.5
        text = sweep_to_csv(rows, "meta")
        assert text.splitlines()[1] == "target,capacity_bits,feasibility_gap,restarts_used"
        assert len(text.splitlines()) == 4

    def test_sweep_requires_ascending(self):
        with pytest.raises(ValueError):
            sweep_constraint(ProblemSpec(), [0.5, 0.2])

    def test_alphabet_warm_start_exact(self):
        spec = ProblemSpec()
        x = canonical_parameters(spec)
        rows = alphabet_sweep(spec, [4], OptimizerConfig(restarts=1, initial=(x,), max_iters=20))
        assert rows[0]["normalized"] == pytest.approx(1.0, abs=1e-12)

    def test_alphabet_too_large(self):
        with pytest.raises(ValueError):
            alphabet_sweep(ProblemSpec(), [11])
