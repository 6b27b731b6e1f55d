"""Dip-model fitting: coherence time and jitter width from measured areas.

The model is the analytic dip curve evaluated at the data's period
mismatches, with two free parameters: the packet coherence time tau_c
(the Lorentzian packet's 1/e field-coherence time, so the envelope decay
is tau_c / 2) and the jitter width sigma.  Both are fitted in log space to
enforce positivity, with a damped (Levenberg-style) least-squares
iteration and finite-difference Jacobians.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .analytic import DEFAULT_QUAD, QuadratureSpec, jitter_averaged_areas
from .core import (
    EmitterParams,
    GateWindow,
    JitterInterpretation,
    JitterSpec,
    ValidationError,
    gated_packet,
)

_LOG_BOUNDS = (math.log(1e-2), math.log(1e5))
_MAX_ITER = 200
_CONV_TOL = 1e-6
_FD_STEP = 1e-5


@dataclass(frozen=True)
class FitResult:
    """Fitted dip parameters with quadratic-approximation uncertainties."""

    tau_c: float
    sigma_jitter: float
    visibility_at_zero: float
    residual_norm: float
    tau_c_halfwidth: float
    sigma_halfwidth: float
    iterations: int
    converged: bool
    degenerate: bool
    pinned: bool

    def to_json(self, path=None) -> str:
        payload = {
            "tau_c_ps": self.tau_c,
            "sigma_jitter_ps": self.sigma_jitter,
            "visibility_at_zero": self.visibility_at_zero,
            "residual_norm": self.residual_norm,
            "tau_c_halfwidth_ps": self.tau_c_halfwidth,
            "sigma_halfwidth_ps": self.sigma_halfwidth,
            "iterations": self.iterations,
            "converged": self.converged,
            "degenerate": self.degenerate,
            "pinned": self.pinned,
        }
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
        if path is not None:
            with open(path, "w") as f:
                f.write(text)
        return text

    def summary(self) -> str:
        lines = [
            f"  coherence time tau_c : {self.tau_c:10.3f} +/- {self.tau_c_halfwidth:.3f} ps",
            f"  jitter width sigma   : {self.sigma_jitter:10.3f} +/- {self.sigma_halfwidth:.3f} ps",
            f"  visibility at zero   : {self.visibility_at_zero:10.4f}",
            f"  residual norm        : {self.residual_norm:10.3e}",
            f"  iterations           : {self.iterations:6d}"
            f"  converged: {self.converged}  degenerate: {self.degenerate}  pinned: {self.pinned}",
        ]
        return "\n".join(lines)


class DipModel:
    """central_area(delta; tau_c, sigma) for a fixed emitter and gate."""

    def __init__(self, emitter: EmitterParams, gate: GateWindow,
                 interpretation: JitterInterpretation = JitterInterpretation.FWHM,
                 quad: QuadratureSpec = DEFAULT_QUAD):
        self.emitter = emitter
        self.gate = gate
        self.interpretation = interpretation
        self.quad = quad

    def areas(self, deltas: np.ndarray, tau_c: float, sigma: float) -> np.ndarray:
        template = gated_packet(self.gate, 0.5 * tau_c, center_time=0.0)
        pair_sigma = math.sqrt(2.0) * JitterSpec(sigma, self.interpretation).sigma_std
        return jitter_averaged_areas(template, deltas, pair_sigma, 0.0, self.quad)


def _residuals(model: DipModel, deltas, areas, weights, log_p):
    tau_c, sigma = math.exp(log_p[0]), math.exp(log_p[1])
    return weights * (model.areas(deltas, tau_c, sigma) - areas)


def _jacobian(model, deltas, areas, weights, log_p, step=_FD_STEP):
    """Forward-difference Jacobian in log-parameter space."""
    r0 = _residuals(model, deltas, areas, weights, log_p)
    J = np.empty((len(r0), 2))
    for k in range(2):
        p = log_p.copy()
        p[k] += step
        J[:, k] = (_residuals(model, deltas, areas, weights, p) - r0) / step
    return r0, J


def fit_dip(
    data,
    initial: tuple[float, float],
    emitter: EmitterParams,
    gate: GateWindow,
    interpretation: JitterInterpretation = JitterInterpretation.FWHM,
    quad: QuadratureSpec = DEFAULT_QUAD,
) -> FitResult:
    """Fit (tau_c, sigma) to (delta_ps, central_area[, weight]) rows.

    Minimizes the weighted squared residuals with an adaptively damped
    Gauss-Newton step; converged when both the relative step and the
    relative residual change drop below 1e-6.  Non-convergence returns a
    result flagged converged=False rather than raising.
    """
    rows = [tuple(map(float, row)) for row in data]
    if len(rows) < 4:
        raise ValidationError("dip fit needs at least 4 data points")
    if initial[0] <= 0 or initial[1] <= 0:
        raise ValidationError("initial parameters must be positive")
    deltas = np.array([r[0] for r in rows])
    areas = np.array([r[1] for r in rows])
    weights = np.array([r[2] if len(r) > 2 else 1.0 for r in rows])
    if np.any(weights < 0):
        raise ValidationError("weights must be nonnegative")

    model = DipModel(emitter, gate, interpretation, quad)
    log_p = np.array([math.log(initial[0]), math.log(initial[1])])
    lam = 1e-3
    r = _residuals(model, deltas, areas, weights, log_p)
    cost = float(r @ r)
    # below this the residuals are numerically exhausted (perfect fit or
    # flat data chased into the asymptote)
    cost_floor = 1e-24 * max(1.0, float(areas @ areas))
    converged = cost <= cost_floor
    pinned = False
    iterations = 0
    J = None
    while not converged and iterations < _MAX_ITER:
        iterations += 1
        r, J = _jacobian(model, deltas, areas, weights, log_p)
        JtJ = J.T @ J
        g = J.T @ r
        stepped = False
        for _ in range(40):
            H = JtJ + lam * np.diag(np.maximum(np.diag(JtJ), 1e-300))
            try:
                delta = np.linalg.solve(H, -g)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            trial = np.clip(log_p + delta, *_LOG_BOUNDS)
            r_trial = _residuals(model, deltas, areas, weights, trial)
            cost_trial = float(r_trial @ r_trial)
            if cost_trial <= cost:
                rel_step = float(np.max(np.abs(trial - log_p)))
                rel_cost = abs(cost - cost_trial) / max(cost, 1e-300)
                pinned = bool(np.any(trial <= _LOG_BOUNDS[0]) or np.any(trial >= _LOG_BOUNDS[1]))
                log_p, cost, r = trial, cost_trial, r_trial
                lam = max(lam / 3.0, 1e-12)
                stepped = True
                if (rel_step < _CONV_TOL and rel_cost < _CONV_TOL) or cost <= cost_floor:
                    converged = True
                break
            lam *= 10.0
        if not stepped:
            break

    tau_c, sigma = math.exp(log_p[0]), math.exp(log_p[1])
    # curvature-based half widths, mapped from log space; a Jacobian
    # column with no leverage on the data marks the fit degenerate
    _, J = _jacobian(model, deltas, areas, weights, log_p)
    JtJ = J.T @ J
    dof = max(len(rows) - 2, 1)
    s2 = cost / dof
    col_norms = np.sqrt(np.maximum(np.diag(JtJ), 0.0))
    degenerate = bool(np.any(col_norms < 1e-6))
    try:
        cov = np.linalg.inv(JtJ) * s2
        hw_log = np.sqrt(np.maximum(np.diag(cov), 0.0))
    except np.linalg.LinAlgError:
        hw_log = np.array([math.inf, math.inf])
    if not np.all(np.isfinite(hw_log)) or np.any(hw_log > 1.0):
        degenerate = True
    hw_log = np.minimum(hw_log, 100.0)
    v0 = 1.0 - 2.0 * float(model.areas(np.array([0.0]), tau_c, sigma)[0])
    return FitResult(
        tau_c=tau_c,
        sigma_jitter=sigma,
        visibility_at_zero=min(max(v0, 0.0), 1.0),
        residual_norm=math.sqrt(cost),
        tau_c_halfwidth=tau_c * math.expm1(float(hw_log[0])) if hw_log[0] < 100 else math.inf,
        sigma_halfwidth=sigma * math.expm1(float(hw_log[1])) if hw_log[1] < 100 else math.inf,
        iterations=iterations,
        converged=converged,
        degenerate=degenerate,
        pinned=pinned,
    )
