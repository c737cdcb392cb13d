"""Energy-stable gradient optimizers and classical baselines.

The energy methods (AEGD and its momentum variant AEGDM) couple every
parameter update to a per-coordinate energy vector r that starts at
sqrt(f(theta_0) + c) and can only shrink:

    v_t         = grad f_t(theta_t) / (2 sqrt(f_t(theta_t) + c))
    m_{t+1}     = mu * m_t + v_t                    (momentum, m_0 = 0)
    r_{t+1}     = r_t / (1 + 2 eta v_t^2)           (element-wise decay)
    theta_{t+1} = theta_t - 2 eta r_{t+1} m_{t+1}

The energy denominator is >= 1 for every eta > 0, so r is monotonically
non-increasing regardless of step size or objective shape; the effective
per-coordinate learning rate is 2 eta r_{t+1}.

All optimizers here, baselines included, are expressed through one generic
update theta' = theta - eta * a_inv * m with a positive diagonal a_inv
(identity for SGD/SGDM, the inverse square-root second moment for Adam,
2 r_{t+1} for the energy methods).  Each step returns a fresh immutable
state, so trajectories are replayable and runs can share nothing.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

__all__ = [
    "NonPositiveShiftedValue",
    "HyperParams",
    "OptimizerState",
    "BaselineState",
    "StepOutput",
    "transformed_gradient",
    "momentum_accumulate",
    "energy_update",
    "position_update",
    "generic_step",
    "aegdm_step",
    "aegd_step",
    "sgd_step",
    "sgdm_step",
    "adam_step",
]

MOMENTUM_VARIANTS = ("running_sum", "ema")


class NonPositiveShiftedValue(RuntimeError):
    """Raised when f(theta) + c <= 0 at an evaluated point.

    The shift c must keep the objective strictly positive everywhere the
    run visits; a violation means c was chosen too small and the whole
    scheme (and every guarantee attached to it) is void, so the run must
    abort rather than clamp.
    """


def _as_vector(x) -> np.ndarray:
    return np.atleast_1d(np.asarray(x, dtype=np.float64))


@dataclass(frozen=True)
class HyperParams:
    """Scheme constants: base learning rate, momentum, energy shift.

    momentum_variant selects between the running sum m' = mu*m + v
    (default; all stability/regret guarantees are stated for it) and the
    exponential moving average m' = mu*m + (1-mu)*v, which behaves
    similarly at base rate eta/(1-mu).
    """

    eta: float
    mu: float = 0.0
    c: float = 1.0
    momentum_variant: str = "running_sum"

    def __post_init__(self):
        if not self.eta > 0.0:
            raise ValueError(f"eta must be positive, got {self.eta}")
        if not (0.0 <= self.mu < 1.0):
            raise ValueError(f"mu must lie in [0, 1), got {self.mu}")
        if self.momentum_variant not in MOMENTUM_VARIANTS:
            raise ValueError(
                f"momentum_variant must be one of {MOMENTUM_VARIANTS}, "
                f"got {self.momentum_variant!r}"
            )


@dataclass(frozen=True)
class OptimizerState:
    """AEGD/AEGDM state: iterate, momentum buffer, energy vector, step count."""

    theta: np.ndarray
    m: np.ndarray
    r: np.ndarray
    t: int = 0

    def __post_init__(self):
        if not (self.theta.shape == self.m.shape == self.r.shape):
            raise ValueError("theta, m, r must share one shape")

    @classmethod
    def initial(cls, theta0, f0_value: float, c: float) -> "OptimizerState":
        """State at t=0: m = 0 and r_i = sqrt(f0 + c) for every coordinate.

        f0_value is the first evaluation of the objective at theta0; when
        evaluations are stochastic this same sample also produces v_0, so
        the energy is seeded by the sample that drives the first step.
        """
        theta = _as_vector(theta0)
        shifted = f0_value + c
        if not shifted > 0.0:
            raise NonPositiveShiftedValue(
                f"f(theta_0) + c = {shifted} is not positive; increase c"
            )
        r0 = np.full_like(theta, np.sqrt(shifted))
        return cls(theta=theta, m=np.zeros_like(theta), r=r0, t=0)


@dataclass(frozen=True)
class BaselineState:
    """SGD/SGDM/Adam state.

    m is the heavy-ball buffer (SGDM) or first moment (Adam); s is Adam's
    second moment and stays zero for SGD/SGDM.
    """

    theta: np.ndarray
    m: np.ndarray
    s: np.ndarray
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if not (0.0 < self.beta1 < 1.0 and 0.0 < self.beta2 < 1.0):
            raise ValueError("beta1, beta2 must lie in (0, 1)")
        if np.any(self.s < 0.0):
            raise ValueError("second moment must be non-negative")

    @classmethod
    def initial(cls, theta0, beta1: float = 0.9, beta2: float = 0.999,
                eps: float = 1e-8) -> "BaselineState":
        theta = _as_vector(theta0)
        return cls(theta=theta, m=np.zeros_like(theta), s=np.zeros_like(theta),
                   t=0, beta1=beta1, beta2=beta2, eps=eps)


@dataclass(frozen=True)
class StepOutput:
    """Result of one optimizer step.

    step is the exact update vector subtracted from theta (for the energy
    methods, -2 eta r_{t+1} m_{t+1} element-wise), and a_inv_diag is the
    positive diagonal such that generic_step(m_next, a_inv_diag, theta, eta)
    reproduces the new iterate bit for bit.
    """

    new_state: OptimizerState | BaselineState
    v: np.ndarray
    step: np.ndarray
    a_inv_diag: np.ndarray = field(repr=False, default=None)


def transformed_gradient(grad, f_value: float, c: float) -> np.ndarray:
    """v = grad / (2 sqrt(f + c)), the gradient of sqrt(f + c).

    Raises NonPositiveShiftedValue when f + c <= 0: the transform is
    undefined there and the run must abort.
    """
    shifted = f_value + c
    if not shifted > 0.0:
        raise NonPositiveShiftedValue(
            f"f(theta) + c = {shifted} is not positive; increase c"
        )
    return _as_vector(grad) / (2.0 * np.sqrt(shifted))


def momentum_accumulate(m, v, mu: float, variant: str = "running_sum") -> np.ndarray:
    """Accumulate the momentum buffer: mu*m + v, or mu*m + (1-mu)*v for ema."""
    m = _as_vector(m)
    v = _as_vector(v)
    if variant == "running_sum":
        return mu * m + v
    if variant == "ema":
        return mu * m + (1.0 - mu) * v
    raise ValueError(f"unknown momentum variant {variant!r}")


def energy_update(r, v, eta: float) -> np.ndarray:
    """r' = r / (1 + 2 eta v^2) element-wise.

    The denominator is >= 1 for any eta > 0, so no coordinate can grow and
    a coordinate stays put exactly when its transformed gradient is zero.
    """
    r = _as_vector(r)
    v = _as_vector(v)
    return r / (1.0 + 2.0 * eta * v * v)


def generic_step(m_next, a_inv_diag, theta, eta: float) -> np.ndarray:
    """theta' = theta - eta * a_inv_diag * m_next, the shared update form."""
    return _as_vector(theta) - eta * _as_vector(a_inv_diag) * _as_vector(m_next)


def position_update(theta, r_next, m_next, eta: float) -> np.ndarray:
    """theta' = theta - 2 eta r_{t+1} m_{t+1}; the energy methods' diagonal is 2r."""
    return generic_step(m_next, 2.0 * _as_vector(r_next), theta, eta)


def aegdm_step(state: OptimizerState, ev, hp: HyperParams) -> StepOutput:
    """One AEGDM step: transform, accumulate momentum, decay energy, move.

    The energy update consumes v_t while the position update consumes the
    already-updated r_{t+1} and m_{t+1}; that ordering is what makes the
    energy recurrence exact.
    """
    v = transformed_gradient(ev.gradient, ev.value, hp.c)
    m_next = momentum_accumulate(state.m, v, hp.mu, hp.momentum_variant)
    r_next = energy_update(state.r, v, hp.eta)
    a_inv = 2.0 * r_next
    delta = -(hp.eta * a_inv * m_next)
    new_state = OptimizerState(theta=state.theta + delta, m=m_next,
                               r=r_next, t=state.t + 1)
    return StepOutput(new_state=new_state, v=v, step=delta, a_inv_diag=a_inv)


def aegd_step(state: OptimizerState, ev, hp: HyperParams) -> StepOutput:
    """AEGD is exactly AEGDM with mu = 0 (m_{t+1} = v_t); run it as that."""
    if hp.mu == 0.0:
        return aegdm_step(state, ev, hp)
    return aegdm_step(state, ev, replace(hp, mu=0.0))


def sgd_step(state: BaselineState, ev, hp: HyperParams) -> StepOutput:
    g = _as_vector(ev.gradient)
    a_inv = np.ones_like(g)
    delta = -(hp.eta * a_inv * g)
    new_state = replace(state, theta=state.theta + delta, m=g, t=state.t + 1)
    return StepOutput(new_state=new_state, v=g, step=delta, a_inv_diag=a_inv)


def sgdm_step(state: BaselineState, ev, hp: HyperParams) -> StepOutput:
    """Heavy-ball: m' = mu*m + g, theta' = theta - eta*m'."""
    g = _as_vector(ev.gradient)
    m_next = momentum_accumulate(state.m, g, hp.mu, hp.momentum_variant)
    a_inv = np.ones_like(g)
    delta = -(hp.eta * a_inv * m_next)
    new_state = replace(state, theta=state.theta + delta, m=m_next, t=state.t + 1)
    return StepOutput(new_state=new_state, v=g, step=delta, a_inv_diag=a_inv)


def adam_step(state: BaselineState, ev, hp: HyperParams, *,
              table_form: bool = False) -> StepOutput:
    """Adam baseline with the standard bias-corrected, eps-guarded update.

    table_form=True drops both corrections and steps with the raw inverse
    square-root second moment (coordinates with zero accumulated moment do
    not move); it exists to replicate the plain generic-form definition.
    """
    g = _as_vector(ev.gradient)
    m_next = state.beta1 * state.m + (1.0 - state.beta1) * g
    s_next = state.beta2 * state.s + (1.0 - state.beta2) * (g * g)
    if table_form:
        with np.errstate(divide="ignore"):
            a_inv = np.where(s_next > 0.0, 1.0 / np.sqrt(s_next), 0.0)
    else:
        bc1 = 1.0 - state.beta1 ** (state.t + 1)
        bc2 = 1.0 - state.beta2 ** (state.t + 1)
        a_inv = 1.0 / (bc1 * (np.sqrt(s_next / bc2) + state.eps))
    delta = -(hp.eta * a_inv * m_next)
    new_state = replace(state, theta=state.theta + delta, m=m_next,
                        s=s_next, t=state.t + 1)
    return StepOutput(new_state=new_state, v=g, step=delta, a_inv_diag=a_inv)
