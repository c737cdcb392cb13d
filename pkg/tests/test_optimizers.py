import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aegdm.optimizers import (
    BaselineState,
    HyperParams,
    NonPositiveShiftedValue,
    OptimizerState,
    adam_step,
    aegd_step,
    aegdm_step,
    energy_update,
    generic_step,
    momentum_accumulate,
    position_update,
    sgd_step,
    sgdm_step,
    transformed_gradient,
)
from aegdm.problems import Evaluation, Rosenbrock, finite_difference_gradient


# ---------------------------------------------------------------------------
# transformed gradient
# ---------------------------------------------------------------------------

def test_transformed_gradient_values():
    np.testing.assert_allclose(transformed_gradient([4.0], 3.0, 1.0), [1.0])
    np.testing.assert_array_equal(
        transformed_gradient([0.0, 0.0, 0.0], 7.2, 1.0), [0.0, 0.0, 0.0])
    np.testing.assert_allclose(
        transformed_gradient([1.0, -2.0], 0.0, 1.0), [0.5, -1.0])


def test_transformed_gradient_rejects_nonpositive_shift():
    with pytest.raises(NonPositiveShiftedValue):
        transformed_gradient([1.0], -2.0, 1.0)
    with pytest.raises(NonPositiveShiftedValue):
        transformed_gradient([1.0], -1.0, 1.0)  # boundary f + c == 0


def test_transformed_gradient_matches_shifted_sqrt_fd():
    # v is the gradient of sqrt(f + c); check against central differences
    problem = Rosenbrock()
    c = 1.0
    rng = np.random.default_rng(3)
    for _ in range(5):
        theta = rng.uniform(-1.5, 1.5, size=2)
        ev = problem.evaluate(theta)
        v = transformed_gradient(ev.gradient, ev.value, c)
        fd = finite_difference_gradient(
            lambda th: math.sqrt(problem.evaluate(th).value + c), theta, h=1e-6)
        np.testing.assert_allclose(v, fd, rtol=1e-6, atol=1e-8)


# ---------------------------------------------------------------------------
# momentum and energy updates
# ---------------------------------------------------------------------------

def test_momentum_running_sum():
    np.testing.assert_allclose(momentum_accumulate([0.0], [1.0], 0.9), [1.0])
    np.testing.assert_allclose(momentum_accumulate([1.0], [1.0], 0.9), [1.9])


def test_momentum_ema_fixed_point():
    np.testing.assert_allclose(
        momentum_accumulate([1.0], [1.0], 0.9, "ema"), [1.0])


def test_energy_update_values():
    np.testing.assert_allclose(energy_update([1.5], [0.5], 0.1), [1.5 / 1.05])
    np.testing.assert_array_equal(
        energy_update([2.0, 3.0], [0.0, 0.0], 10.0), [2.0, 3.0])
    np.testing.assert_allclose(energy_update([1.0], [1.0], 0.5), [0.5])


@settings(max_examples=200)
@given(
    r=st.floats(min_value=1e-300, max_value=1e300),
    v=st.floats(min_value=-1e150, max_value=1e150),
    eta=st.floats(min_value=1e-12, max_value=1e6),
)
def test_energy_never_increases(r, v, eta):
    r_next = energy_update([r], [v], eta)[0]
    assert r_next <= r
    if v == 0.0:
        assert r_next == r


@settings(max_examples=200)
@given(
    r=st.floats(min_value=1e-30, max_value=1e30),
    v=st.floats(min_value=-1e10, max_value=1e10),
    eta=st.floats(min_value=1e-9, max_value=1e3),
)
def test_energy_recurrence_within_4_ulps(r, v, eta):
    r_next = energy_update([r], [v], eta)[0]
    recon = r_next * (1.0 + 2.0 * eta * v * v)
    assert abs(recon - r) <= 4.0 * np.spacing(max(abs(recon), abs(r)))


# ---------------------------------------------------------------------------
# position update and the generic form
# ---------------------------------------------------------------------------

def test_position_update_values():
    np.testing.assert_allclose(position_update([2.0], [1.0], [1.0], 0.01), [1.98])
    np.testing.assert_array_equal(
        position_update([5.0, -3.0], [1.0, 1.0], [0.0, 0.0], 1.0), [5.0, -3.0])
    np.testing.assert_allclose(position_update([0.0], [0.5], [-2.0], 0.1), [0.2])


def test_generic_step_identity_diagonal_is_sgd():
    theta = np.array([1.0, -2.0])
    g = np.array([2.0, 0.5])
    np.testing.assert_array_equal(
        generic_step(g, np.ones(2), theta, 0.5), theta - 0.5 * g)


def test_generic_step_energy_diagonal_matches_position_update():
    rng = np.random.default_rng(0)
    for _ in range(20):
        theta = rng.normal(size=4)
        r = np.abs(rng.normal(size=4)) + 0.1
        m = rng.normal(size=4)
        eta = float(np.abs(rng.normal())) + 0.01
        np.testing.assert_array_equal(
            generic_step(m, 2.0 * r, theta, eta),
            position_update(theta, r, m, eta))


@pytest.mark.parametrize("optimizer", ["aegdm", "aegd", "sgd", "sgdm", "adam"])
def test_generic_form_reproduces_native_step_exactly(optimizer):
    rng = np.random.default_rng(7)
    hp = HyperParams(eta=0.05, mu=0.9, c=1.0)
    theta = rng.normal(size=3)
    ev = Evaluation(value=2.5, gradient=rng.normal(size=3))
    if optimizer in ("aegdm", "aegd"):
        state = OptimizerState.initial(theta, 3.0, hp.c)
        state = replace(state, m=rng.normal(size=3), r=np.abs(rng.normal(size=3)) + 0.2)
        step_fn = aegdm_step if optimizer == "aegdm" else aegd_step
    else:
        state = BaselineState.initial(theta)
        state = replace(state, m=rng.normal(size=3), s=np.abs(rng.normal(size=3)), t=4)
        step_fn = {"sgd": sgd_step, "sgdm": sgdm_step, "adam": adam_step}[optimizer]
    out = step_fn(state, ev, hp)
    redone = generic_step(out.new_state.m, out.a_inv_diag, state.theta, hp.eta)
    np.testing.assert_array_equal(redone, out.new_state.theta)


# ---------------------------------------------------------------------------
# full-step oracle: a literal transcription of the update equations
# ---------------------------------------------------------------------------

def _oracle_aegdm(f_and_grad, theta0, eta, mu, c, steps):
    """Plain-Python transcription of the four update equations."""
    theta = [float(x) for x in theta0]
    f, _ = f_and_grad(theta)
    r = [math.sqrt(f + c)] * len(theta)
    m = [0.0] * len(theta)
    states = []
    for _ in range(steps):
        f, grad = f_and_grad(theta)
        v = [g / (2.0 * math.sqrt(f + c)) for g in grad]
        m = [mu * mi + vi for mi, vi in zip(m, v)]
        r = [ri / (1.0 + 2.0 * eta * vi * vi) for ri, vi in zip(r, v)]
        theta = [ti - 2.0 * eta * ri * mi for ti, ri, mi in zip(theta, r, m)]
        states.append((list(theta), list(m), list(r), list(v)))
    return states


def _drive(step_fn, f_and_grad, theta0, hp, steps):
    theta = np.asarray(theta0, dtype=np.float64)
    f, _ = f_and_grad(theta)
    state = OptimizerState.initial(theta, f, hp.c)
    states = []
    for _ in range(steps):
        f, grad = f_and_grad(state.theta)
        out = step_fn(state, Evaluation(value=f, gradient=np.asarray(grad)), hp)
        state = out.new_state
        states.append((state.theta, state.m, state.r, out.v))
    return states


def _quad_1d(theta):
    x = float(theta[0])
    return 0.5 * x * x, [x]


def _rosen(theta):
    ev = Rosenbrock().evaluate(theta)
    return ev.value, list(ev.gradient)


@pytest.mark.parametrize("mu", [0.0, 0.9])
def test_aegdm_matches_oracle_on_1d_quadratic(mu):
    hp = HyperParams(eta=0.1, mu=mu, c=1.0)
    got = _drive(aegdm_step, _quad_1d, [1.0], hp, 5)
    want = _oracle_aegdm(_quad_1d, [1.0], 0.1, mu, 1.0, 5)
    for (theta, m, r, v), (tw, mw, rw, vw) in zip(got, want):
        np.testing.assert_array_equal(theta, tw)
        np.testing.assert_array_equal(m, mw)
        np.testing.assert_array_equal(r, rw)
        np.testing.assert_array_equal(v, vw)


def test_aegdm_matches_oracle_two_steps_rosenbrock():
    hp = HyperParams(eta=1e-4, mu=0.9, c=1.0)
    got = _drive(aegdm_step, _rosen, [-3.0, -4.0], hp, 2)
    want = _oracle_aegdm(_rosen, [-3.0, -4.0], 1e-4, 0.9, 1.0, 2)
    for (theta, m, r, v), (tw, mw, rw, vw) in zip(got, want):
        np.testing.assert_array_equal(theta, tw)
        np.testing.assert_array_equal(m, mw)
        np.testing.assert_array_equal(r, rw)
        np.testing.assert_array_equal(v, vw)


def test_aegd_first_iterates_match_oracle_1d_quadratic():
    hp = HyperParams(eta=0.1, mu=0.0, c=1.0)
    got = _drive(aegd_step, _quad_1d, [2.0], hp, 5)
    want = _oracle_aegdm(_quad_1d, [2.0], 0.1, 0.0, 1.0, 5)
    for (theta, _, r, _), (tw, _, rw, _) in zip(got, want):
        np.testing.assert_array_equal(theta, tw)
        np.testing.assert_array_equal(r, rw)


def test_zero_gradient_is_fixed_point_from_rest():
    # at a stationary point with zero momentum nothing moves; with leftover
    # momentum the energy still freezes and the buffer decays by mu
    hp = HyperParams(eta=0.5, mu=0.9, c=1.0)
    rest = OptimizerState(theta=np.array([1.0, 2.0]), m=np.zeros(2),
                          r=np.array([0.7, 0.9]), t=3)
    out = aegdm_step(rest, Evaluation(value=4.0, gradient=np.zeros(2)), hp)
    np.testing.assert_array_equal(out.new_state.theta, rest.theta)
    np.testing.assert_array_equal(out.new_state.r, rest.r)
    np.testing.assert_array_equal(out.new_state.m, np.zeros(2))

    coasting = replace(rest, m=np.array([0.3, -0.2]))
    out = aegdm_step(coasting, Evaluation(value=4.0, gradient=np.zeros(2)), hp)
    np.testing.assert_array_equal(out.new_state.r, coasting.r)
    np.testing.assert_array_equal(out.new_state.m, 0.9 * coasting.m)


def test_aegd_equals_aegdm_mu_zero_bitwise():
    rng = np.random.default_rng(11)
    hp_aegd = HyperParams(eta=0.07, mu=0.9, c=1.0)  # aegd must ignore mu
    hp_mu0 = HyperParams(eta=0.07, mu=0.0, c=1.0)
    theta = rng.normal(size=6)
    f0, grad0 = 1.7, rng.normal(size=6)
    sa = OptimizerState.initial(theta, f0, 1.0)
    sb = OptimizerState.initial(theta, f0, 1.0)
    for _ in range(25):
        ev = Evaluation(value=abs(float(rng.normal())) + 0.1,
                        gradient=rng.normal(size=6))
        oa = aegd_step(sa, ev, hp_aegd)
        ob = aegdm_step(sb, ev, hp_mu0)
        np.testing.assert_array_equal(oa.new_state.theta, ob.new_state.theta)
        np.testing.assert_array_equal(oa.new_state.r, ob.new_state.r)
        np.testing.assert_array_equal(oa.new_state.m, ob.new_state.m)
        sa, sb = oa.new_state, ob.new_state
    _ = grad0


def test_step_field_is_exact_update_vector():
    hp = HyperParams(eta=0.03, mu=0.5, c=1.0)
    state = OptimizerState(theta=np.array([1.0, -2.0]),
                           m=np.array([0.4, 0.1]),
                           r=np.array([1.2, 0.8]), t=0)
    out = aegdm_step(state, Evaluation(value=1.0, gradient=np.array([2.0, -1.0])), hp)
    expected = -2.0 * hp.eta * out.new_state.r * out.new_state.m
    np.testing.assert_array_equal(out.step, expected)


def test_momentum_reformulation_identity_along_run():
    # step_t = -2 eta r_{t+1} v_t + mu (r_{t+1}/r_t) step_{t-1}
    hp = HyperParams(eta=1e-3, mu=0.9, c=1.0)
    theta = np.array([-1.2, 1.0])
    f, grad = _rosen(theta)
    state = OptimizerState.initial(theta, f, hp.c)
    prev_step = None
    prev_r = state.r
    for _ in range(200):
        f, grad = _rosen(state.theta)
        out = aegdm_step(state, Evaluation(value=f, gradient=np.asarray(grad)), hp)
        if prev_step is not None:
            predicted = -2.0 * hp.eta * out.new_state.r * out.v \
                + hp.mu * (out.new_state.r / prev_r) * prev_step
            scale = max(np.linalg.norm(out.step), np.linalg.norm(predicted))
            assert np.linalg.norm(out.step - predicted) <= 1e-12 * scale
        prev_step = out.step
        prev_r = out.new_state.r
        state = out.new_state


# ---------------------------------------------------------------------------
# baselines
# ---------------------------------------------------------------------------

def test_sgd_step_value():
    hp = HyperParams(eta=0.5)
    state = BaselineState.initial([1.0])
    out = sgd_step(state, Evaluation(value=1.0, gradient=np.array([2.0])), hp)
    np.testing.assert_array_equal(out.new_state.theta, [0.0])


def test_sgdm_with_zero_mu_equals_sgd():
    hp = HyperParams(eta=0.2, mu=0.0)
    rng = np.random.default_rng(5)
    sa = BaselineState.initial(rng.normal(size=3))
    sb = replace(sa)
    for _ in range(10):
        ev = Evaluation(value=1.0, gradient=rng.normal(size=3))
        sa = sgd_step(sa, ev, hp).new_state
        sb = sgdm_step(sb, ev, hp).new_state
        np.testing.assert_array_equal(sa.theta, sb.theta)


def test_adam_zero_gradient_never_moves():
    hp = HyperParams(eta=0.1)
    state = BaselineState.initial([1.0, -2.0])
    for _ in range(10):
        state = adam_step(state, Evaluation(value=1.0, gradient=np.zeros(2)), hp).new_state
    np.testing.assert_array_equal(state.theta, [1.0, -2.0])


def test_adam_first_step_has_unit_direction_magnitude():
    # at t=0 the corrected moments collapse to g and |g|, so the move is
    # eta * g/(|g| + eps), i.e. unit magnitude per coordinate up to eps
    hp = HyperParams(eta=0.001)
    state = BaselineState.initial([0.0])
    out = adam_step(state, Evaluation(value=1.0, gradient=np.array([3.0])), hp)
    assert abs(abs(out.step[0]) / hp.eta - 1.0) < 1e-8


def test_adam_table_form_drops_corrections():
    hp = HyperParams(eta=0.001)
    state = BaselineState.initial([0.0])
    ev = Evaluation(value=1.0, gradient=np.array([3.0]))
    raw = adam_step(state, ev, hp, table_form=True)
    # m1 = (1-b1) g, A_inv = ((1-b2) g^2)^(-1/2)
    expected = -hp.eta * (1.0 - state.beta1) * 3.0 / np.sqrt((1.0 - state.beta2) * 9.0)
    np.testing.assert_allclose(raw.step, [expected])
    # zero-moment coordinates stay put instead of dividing by zero
    still = adam_step(state, Evaluation(value=1.0, gradient=np.zeros(1)), hp,
                      table_form=True)
    np.testing.assert_array_equal(still.step, [0.0])


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

def test_hyperparams_validation():
    with pytest.raises(ValueError):
        HyperParams(eta=0.0)
    with pytest.raises(ValueError):
        HyperParams(eta=0.1, mu=1.0)
    with pytest.raises(ValueError):
        HyperParams(eta=0.1, mu=-0.1)
    with pytest.raises(ValueError):
        HyperParams(eta=0.1, momentum_variant="nesterov")


def test_state_shape_validation():
    with pytest.raises(ValueError):
        OptimizerState(theta=np.zeros(2), m=np.zeros(3), r=np.ones(2))
    with pytest.raises(ValueError):
        BaselineState(theta=np.zeros(2), m=np.zeros(2), s=np.array([-1.0, 0.0]))


def test_initial_state_rejects_nonpositive_shift():
    with pytest.raises(NonPositiveShiftedValue):
        OptimizerState.initial([1.0], -3.0, 1.0)
