"""Spiking neuron dynamics: discrete-step LIF and event-driven EA-LIF.

Two recurrence kernels carry hand-derived backward rules (``ealif_filter``
and ``ealif_spike_scan``); everything else composes tape primitives. The
hand-derived scans keep memory per step O(state) instead of materializing
one tape node per event per channel, and the per-step functions double as
an independent reference implementation for testing the scans.

Spike nonlinearity: the forward pass is a hard threshold H(u) = 1{u >= 0}
(u == 0 fires). The backward pass always uses the scaled sigmoid surrogate
a*s(a*u)*(1-s(a*u)). With ``smooth=True`` the forward is replaced by the
sigmoid itself, which makes finite-difference checks of the full model
exact; hard mode is what training and inference use.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError, ShapeError
from .tensor import Tensor, accumulate_grad, make_op, parameter, sigmoid, softplus


def heaviside(u: np.ndarray) -> np.ndarray:
    """Hard threshold; fires at exactly zero."""
    return (np.asarray(u) >= 0.0).astype(np.float64)


def surrogate_grad(u: np.ndarray, alpha: float) -> np.ndarray:
    """d/du of the surrogate: a*s(a*u)*(1-s(a*u))."""
    s = sigmoid(alpha * np.asarray(u, dtype=np.float64))
    return alpha * s * (1.0 - s)


def spike(u: Tensor, alpha: float = 4.0, smooth: bool = False) -> Tensor:
    """Threshold with a straight-through surrogate gradient.

    Forward: H(u) (hard) or s(alpha*u) (smooth). Backward: surrogate in
    both modes, so gradients are identical across modes.
    """
    if alpha <= 0:
        raise ConfigError(f"surrogate sharpness must be positive, got {alpha}")
    u_data = u.data
    out = sigmoid(alpha * u_data) if smooth else heaviside(u_data)
    psi = surrogate_grad(u_data, alpha)

    def bwd(g):
        accumulate_grad(u, g * psi)

    return make_op(out, (u,), bwd)


@dataclass
class LifConfig:
    """Discrete-step LIF: fixed leak alpha in [0, 1)."""

    alpha: float = 0.5
    v_th: float = 1.0
    alpha_ste: float = 4.0

    def __post_init__(self):
        if not (0.0 <= self.alpha < 1.0):
            raise ConfigError(f"leak alpha must lie in [0, 1), got {self.alpha}")
        if self.v_th <= 0:
            raise ConfigError(f"threshold must be positive, got {self.v_th}")
        if self.alpha_ste <= 0:
            raise ConfigError(f"surrogate sharpness must be positive, got {self.alpha_ste}")


@dataclass
class EaLifConfig:
    """Event-driven LIF: learnable eta with tau = softplus(eta) + 1 > 1."""

    eta: Tensor = field(default_factory=lambda: parameter(eta_for_tau(2.0)))
    v_th: float = 1.0
    alpha_ste: float = 4.0

    def __post_init__(self):
        if not isinstance(self.eta, Tensor):
            self.eta = parameter(float(self.eta))
        if self.v_th <= 0:
            raise ConfigError(f"threshold must be positive, got {self.v_th}")
        if self.alpha_ste <= 0:
            raise ConfigError(f"surrogate sharpness must be positive, got {self.alpha_ste}")


def lif_step(v_prev: Tensor, x: Tensor, cfg: LifConfig,
             smooth: bool = False) -> tuple[Tensor, Tensor, Tensor]:
    """One discrete leaky integrate-and-fire step.

    m = alpha * v_prev + (1 - alpha) * x; spike at m >= v_th; soft reset
    subtracts v_th on firing. Returns (m, s, v). alpha=0 keeps no membrane
    memory across steps (the non-leaky reduction).
    """
    m = v_prev * cfg.alpha + x * (1.0 - cfg.alpha)
    s = spike(m - cfg.v_th, alpha=cfg.alpha_ste, smooth=smooth)
    v = m - s * cfg.v_th
    return m, s, v


def tau_from_eta(eta: Tensor) -> Tensor:
    """Membrane time constant tau = softplus(eta) + 1; always > 1."""
    return eta.softplus() + 1.0


def eta_for_tau(tau: float) -> float:
    """Inverse of tau_from_eta, for initialization."""
    if tau <= 1.0:
        raise ConfigError(f"tau must exceed 1, got {tau}")
    return float(np.log(np.expm1(tau - 1.0)))


def eta_for_tau_init(tau: float) -> float:
    """eta for a requested init tau, saturating at the tau -> 1 limit.

    The softplus(eta)+1 reparameterization keeps tau > 1 strictly, so a
    requested 1.0 maps to the closest representable setting (1 + 1e-9).
    """
    return eta_for_tau(max(float(tau), 1.0 + 1e-9))


def ealif_leak(dt, eta: Tensor) -> Tensor:
    """Gap-dependent decay beta = exp(-dt / tau), differentiable in eta.

    dt: scalar or [K] nonnegative gaps; beta = 1 at dt = 0.
    """
    dt = np.asarray(dt, dtype=np.float64)
    if np.any(dt < 0):
        raise DataError("event gaps must be nonnegative")
    tau = tau_from_eta(eta)
    return (Tensor(-dt) / tau).exp()


def ealif_step(v_prev: Tensor, current: Tensor, dt: float, cfg: EaLifConfig,
               smooth: bool = False) -> tuple[Tensor, Tensor, Tensor]:
    """One event-driven LIF update; the leak depends on the elapsed gap.

    m = beta(dt) * v_prev + (1 - beta(dt)) * I; threshold and soft reset as
    in lif_step. Returns (m, s, v). Composed from tape primitives; the
    batched scan below is the production path.
    """
    beta = ealif_leak(float(dt), cfg.eta)
    m = v_prev * beta + current * (1.0 - beta)
    s = spike(m - cfg.v_th, alpha=cfg.alpha_ste, smooth=smooth)
    v = m - s * cfg.v_th
    return m, s, v


def _beta_and_chain(dt: np.ndarray, eta_data: float) -> tuple[np.ndarray, np.ndarray]:
    """beta[k] and d(beta[k])/d(eta) for the scalar eta of one scan."""
    tau = float(softplus(eta_data) + 1.0)
    beta = np.exp(-dt / tau)
    # d beta / d tau = beta * dt / tau^2; d tau / d eta = sigmoid(eta)
    dbeta_deta = beta * dt / (tau * tau) * float(sigmoid(eta_data))
    return beta, dbeta_deta


def _check_scan_args(x: Tensor, dt: np.ndarray, eta: Tensor) -> np.ndarray:
    if eta.size != 1:
        raise ShapeError("scan kernels take a scalar eta per call")
    dt = np.asarray(dt, dtype=np.float64)
    if dt.shape != (x.shape[0],):
        raise ShapeError(f"dt must have shape ({x.shape[0]},), got {dt.shape}")
    if np.any(dt < 0):
        raise DataError("event gaps must be nonnegative")
    return dt


def ealif_filter(x: Tensor, dt: np.ndarray, eta: Tensor,
                 squash: str | None = "softplus") -> Tensor:
    """Event-driven low-pass filter without threshold or reset.

    m_k = beta_k * m_{k-1} + (1 - beta_k) * x_k with m_0 = 0 and
    beta_k = exp(-dt_k / tau). Optional elementwise squash of the output
    ("softplus" or None). x: [K, ...]; dt: [K]; eta: scalar parameter.
    The carried state is m itself (no reset on continuous features).

    Backward is hand-derived: the adjoint runs the recurrence in reverse,
    so memory stays O(state) rather than O(K * state) tape nodes.
    """
    dt = _check_scan_args(x, dt, eta)
    if squash not in (None, "softplus"):
        raise ConfigError(f"unsupported squash: {squash!r}")
    K = x.shape[0]
    beta, dbeta_deta = _beta_and_chain(dt, float(eta.data))
    xv = x.data
    m = np.zeros_like(xv)
    prev = np.zeros(xv.shape[1:])
    for k in range(K):
        prev = beta[k] * prev + (1.0 - beta[k]) * xv[k]
        m[k] = prev
    out = softplus(m) if squash == "softplus" else m

    def bwd(g):
        gm = g * sigmoid(m) if squash == "softplus" else np.asarray(g, dtype=np.float64)
        gx = np.empty_like(xv)
        geta = 0.0
        carry = np.zeros(xv.shape[1:])
        for k in range(K - 1, -1, -1):
            total = gm[k] + carry
            m_prev = m[k - 1] if k > 0 else np.zeros(xv.shape[1:])
            gx[k] = (1.0 - beta[k]) * total
            geta += dbeta_deta[k] * float(np.sum(total * (m_prev - xv[k])))
            carry = beta[k] * total
        accumulate_grad(x, gx)
        accumulate_grad(eta, np.full_like(eta.data, geta))

    return make_op(out, (x, eta), bwd)


def ealif_spike_scan(current: Tensor, dt: np.ndarray, eta: Tensor,
                     v_th: float = 1.0, alpha: float = 4.0,
                     smooth: bool = False) -> Tensor:
    """Event-driven LIF with threshold and soft reset, over a whole scan.

    For k = 1..K (v_0 = 0):
        beta_k = exp(-dt_k / tau)
        m_k = beta_k * v_{k-1} + (1 - beta_k) * I_k
        s_k = H(m_k - v_th)           (surrogate gradient)
        v_k = m_k - v_th * s_k
    Returns the spike train s, same shape as ``current`` [K, ...].

    Backward (hand-derived, reverse recurrence):
        psi_k   = surrogate'(m_k - v_th)
        Gm_k    = Gs_k * psi_k + Gv_k * (1 - v_th * psi_k)
        dI_k   += (1 - beta_k) * Gm_k
        dbeta_k = sum(Gm_k * (v_{k-1} - I_k))
        Gv_{k-1} = beta_k * Gm_k
    """
    dt = _check_scan_args(current, dt, eta)
    if v_th <= 0:
        raise ConfigError(f"threshold must be positive, got {v_th}")
    K = current.shape[0]
    beta, dbeta_deta = _beta_and_chain(dt, float(eta.data))
    I = current.data
    tail = I.shape[1:]
    m = np.empty_like(I)
    v = np.empty_like(I)
    v_prev = np.zeros(tail)
    for k in range(K):
        m[k] = beta[k] * v_prev + (1.0 - beta[k]) * I[k]
        s_k = sigmoid(alpha * (m[k] - v_th)) if smooth else heaviside(m[k] - v_th)
        v[k] = m[k] - v_th * s_k
        v_prev = v[k]
    s = sigmoid(alpha * (m - v_th)) if smooth else heaviside(m - v_th)
    psi = surrogate_grad(m - v_th, alpha)

    def bwd(g):
        gI = np.empty_like(I)
        geta = 0.0
        Gv = np.zeros(tail)
        for k in range(K - 1, -1, -1):
            Gm = g[k] * psi[k] + Gv * (1.0 - v_th * psi[k])
            gI[k] = (1.0 - beta[k]) * Gm
            vp = v[k - 1] if k > 0 else np.zeros(tail)
            geta += dbeta_deta[k] * float(np.sum(Gm * (vp - I[k])))
            Gv = beta[k] * Gm
        accumulate_grad(current, gI)
        accumulate_grad(eta, np.full_like(eta.data, geta))

    return make_op(s, (current, eta), bwd)
