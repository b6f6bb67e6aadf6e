"""
Scenario models: metric coefficient h, mass m and conformal factor u.

A MetricModel holds parsed expressions and samples them, with exact first
and second derivatives, on a (t, x) grid with x periodic on [0, 2*pi).
"""

import logging
from dataclasses import dataclass, replace
from typing import Tuple

import numpy as np

from src.errors import DimensionError, EllipticityError, InterpolationError
from src.modelspec.dual import UNARY_JETS, Dual, HyperDual
from src.modelspec.parser import (
    Binary,
    Const,
    Node,
    Unary,
    Var,
    depends_on,
    evaluate_jet,
    parse_expr,
    to_source,
)

logger = logging.getLogger(__name__)


def space_grid(M: int) -> np.ndarray:
    """Uniform periodic grid x_j = 2*pi*j/M."""
    return 2.0 * np.pi * np.arange(M) / M


@dataclass(frozen=True)
class FieldSamples:
    """
    A scalar field and its derivatives on a T x M grid.

    Attributes:
        value: f(t_i, x_j)
        dt, dx: First derivatives
        dtt, dtx: Second derivatives used for exact time derivatives of symbols
    """
    value: np.ndarray
    dt: np.ndarray
    dx: np.ndarray
    dtt: np.ndarray
    dtx: np.ndarray

    def time_jet(self) -> Dual:
        """f together with its time derivative."""
        return Dual(self.value, self.dt)

    def dx_jet(self) -> Dual:
        """df/dx together with its time derivative."""
        return Dual(self.dx, self.dtx)

    def dt_jet(self) -> Dual:
        """df/dt together with its time derivative."""
        return Dual(self.dt, self.dtt)

    def row(self, i: int) -> 'FieldSamples':
        """Restriction to the single time index i (shape 1 x M)."""
        return FieldSamples(*(arr[i:i + 1] for arr in
                              (self.value, self.dt, self.dx, self.dtt, self.dtx)))


@dataclass(frozen=True)
class SampledModel:
    """Model fields sampled on a grid."""
    t: np.ndarray
    x: np.ndarray
    n: int
    h: FieldSamples
    m: FieldSamples
    u: FieldSamples

    @property
    def shape(self) -> Tuple[int, int]:
        return len(self.t), len(self.x)

    def row(self, i: int) -> 'SampledModel':
        return SampledModel(self.t[i:i + 1], self.x, self.n,
                            self.h.row(i), self.m.row(i), self.u.row(i))


def _broadcast(part, shape) -> np.ndarray:
    return np.broadcast_to(np.asarray(part, dtype=float), shape).copy()


def _sample_field(node: Node, t: np.ndarray, x: np.ndarray) -> FieldSamples:
    tt, xx = np.meshgrid(t, x, indexing='ij')
    shape = tt.shape

    mixed = evaluate_jet(node, HyperDual(tt, 1.0, 0.0, 0.0), HyperDual(xx, 0.0, 1.0, 0.0))
    pure_t = evaluate_jet(node, HyperDual(tt, 1.0, 1.0, 0.0), HyperDual(xx, 0.0, 0.0, 0.0))
    return FieldSamples(
        value=_broadcast(mixed.f, shape),
        dt=_broadcast(mixed.f1, shape),
        dx=_broadcast(mixed.f2, shape),
        dtt=_broadcast(pure_t.f12, shape),
        dtx=_broadcast(mixed.f12, shape),
    )


@dataclass(frozen=True)
class MetricModel:
    """
    Scenario on I x S^1 with metric e^{2u}(-dt^2 + h dx^2) and mass m.

    Attributes:
        h_expr: Spatial metric coefficient (must stay above h_floor)
        m_expr: Mass of the Dirac operator on -dt^2 + h dx^2
        u_expr: Conformal factor
        time_interval: (t_min, t_max)
        n: Spacetime dimension (2, or 4 with fields depending on (t, x) only)
        h_floor: Ellipticity floor for h
    """
    h_expr: Node
    m_expr: Node
    u_expr: Node
    time_interval: Tuple[float, float]
    n: int = 2
    h_floor: float = 1e-3

    @classmethod
    def from_strings(cls, h: str, m: str, u: str = "0",
                     time_interval: Tuple[float, float] = (-1.0, 1.0),
                     n: int = 2, h_floor: float = 1e-3) -> 'MetricModel':
        """Parse the three expressions and build a model."""
        if n not in (2, 4):
            raise DimensionError(f"scenarios support n = 2 or n = 4, got {n}")
        return cls(parse_expr(h), parse_expr(m), parse_expr(u),
                   (float(time_interval[0]), float(time_interval[1])), n, h_floor)

    @property
    def sources(self) -> dict:
        return {
            'h_expr': to_source(self.h_expr),
            'm_expr': to_source(self.m_expr),
            'u_expr': to_source(self.u_expr),
        }

    def is_static(self) -> bool:
        """Whether h and m are independent of t (u is irrelevant for the reduced operator)."""
        return not depends_on(self.h_expr, 't') and not depends_on(self.m_expr, 't')

    def has_conformal_factor(self) -> bool:
        return not _is_zero(self.u_expr)

    def with_mass(self, m_expr: Node) -> 'MetricModel':
        return replace(self, m_expr=m_expr)

    def without_conformal_factor(self) -> 'MetricModel':
        return replace(self, u_expr=parse_expr("0"))

    def frozen_at(self, t0: float) -> 'MetricModel':
        """Static model obtained by freezing h and m at time t0."""
        return replace(self, h_expr=_substitute_t(self.h_expr, t0),
                       m_expr=_substitute_t(self.m_expr, t0),
                       u_expr=_substitute_t(self.u_expr, t0))

    def sample(self, t: np.ndarray, M: int) -> SampledModel:
        """
        Sample h, m, u and their derivatives at times t on the M-point space grid.

        Raises:
            EllipticityError: If h drops below h_floor, naming the worst grid point
        """
        t = np.atleast_1d(np.asarray(t, dtype=float))
        x = space_grid(M)
        h = _sample_field(self.h_expr, t, x)
        check_ellipticity(h.value, t, x, self.h_floor)
        m = _sample_field(self.m_expr, t, x)
        u = _sample_field(self.u_expr, t, x)
        return SampledModel(t, x, self.n, h, m, u)


def _is_zero(node: Node) -> bool:
    return isinstance(node, Const) and node.value == 0.0


def _substitute_t(node: Node, t0: float) -> Node:
    if isinstance(node, Var) and node.name == 't':
        return Const(float(t0)) if t0 >= 0 else Unary('neg', Const(float(-t0)))
    if isinstance(node, Unary):
        return Unary(node.op, _substitute_t(node.arg, t0))
    if isinstance(node, Binary):
        return Binary(node.op, _substitute_t(node.left, t0), _substitute_t(node.right, t0))
    return node


def check_ellipticity(h: np.ndarray, t: np.ndarray, x: np.ndarray, h_floor: float) -> None:
    """
    Raises:
        EllipticityError: If min h < h_floor
    """
    worst = np.unravel_index(np.argmin(h), h.shape)
    if h[worst] < h_floor:
        raise EllipticityError(
            f"h = {h[worst]:.6g} below floor {h_floor} at t = {t[worst[0]]:.6g}, x = {x[worst[1]]:.6g}",
            invariant="ellipticity", residual=float(h_floor - h[worst]))


def sample_model(model, time_steps: int, space_points: int) -> SampledModel:
    """
    Sample a model on the uniform grid of its time interval.

    Args:
        model: MetricModel or BlendedModel
        time_steps: Number of time points T_n >= 2
        space_points: Number of space points M_n >= 4, even

    Returns:
        SampledModel with arrays of shape (T_n, M_n)
    """
    if time_steps < 2:
        raise DimensionError(f"need at least 2 time points, got {time_steps}")
    if space_points < 4 or space_points % 2:
        raise DimensionError(f"space points must be even and >= 4, got {space_points}")
    t = np.linspace(model.time_interval[0], model.time_interval[1], time_steps)
    return model.sample(t, space_points)


def periodicity_defect(model: MetricModel, t: np.ndarray) -> float:
    """Largest |f(t, 0) - f(t, 2*pi)| over h, m, u on the given times."""
    t = np.asarray(t, dtype=float)
    worst = 0.0
    for node in (model.h_expr, model.m_expr, model.u_expr):
        at_zero = evaluate_jet(node, HyperDual(t), HyperDual(np.zeros_like(t))).f
        at_period = evaluate_jet(node, HyperDual(t), HyperDual(np.full_like(t, 2 * np.pi))).f
        worst = max(worst, float(np.max(np.abs(np.asarray(at_zero) - np.asarray(at_period)))))
    return worst


def _phi(z: HyperDual) -> HyperDual:
    # exp(-1/z) for z > 0, continued by 0
    mask = (np.asarray(z.f) > 0).astype(float)
    safe = HyperDual(np.where(mask > 0, z.f, 1.0), z.f1, z.f2, z.f12)
    e = (-safe.reciprocal()).apply(UNARY_JETS['exp'])
    return HyperDual(e.f * mask, e.f1 * mask, e.f2 * mask, e.f12 * mask)


def step_jet(t: np.ndarray, kind: str = 'smooth') -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Interpolating step s(t) with its first and second derivative.

    'smooth' is exactly 0 for t <= -1 and exactly 1 for t >= 1;
    'tanh' is 1/2 (1 + tanh(3t)).
    """
    t = np.asarray(t, dtype=float)
    seed = HyperDual(t, 1.0, 1.0, 0.0)
    if kind == 'tanh':
        s = (3.0 * seed).apply(UNARY_JETS['tanh']) * 0.5 + 0.5
    elif kind == 'smooth':
        a = _phi(seed + 1.0)
        b = _phi(1.0 - seed)
        s = a / (a + b)
    else:
        raise ValueError(f"unknown step kind: {kind}")
    return (_broadcast(s.f, t.shape), _broadcast(s.f1, t.shape), _broadcast(s.f12, t.shape))


def _blend(us: FieldSamples, phys: FieldSamples, s, ds, dds) -> FieldSamples:
    s, ds, dds = (arr[:, None] for arr in (s, ds, dds))
    r = 1.0 - s
    return FieldSamples(
        value=r * us.value + s * phys.value,
        dt=-ds * us.value + r * us.dt + ds * phys.value + s * phys.dt,
        dx=r * us.dx + s * phys.dx,
        dtt=(-dds * us.value - 2 * ds * us.dt + r * us.dtt
             + dds * phys.value + 2 * ds * phys.dt + s * phys.dtt),
        dtx=-ds * us.dx + r * us.dtx + ds * phys.dx + s * phys.dtx,
    )


@dataclass(frozen=True)
class BlendedModel:
    """
    Interpolation between an ultrastatic model and a physical model.

    The interpolating clock runs over time_interval (default [-2, 2]); the
    physical model is evaluated at t - shift, so t = shift on the
    interpolating clock is the physical surface t = 0.
    """
    ultrastatic: MetricModel
    physical: MetricModel
    time_interval: Tuple[float, float] = (-2.0, 2.0)
    shift: float = 2.0
    step: str = 'smooth'

    @property
    def n(self) -> int:
        return self.physical.n

    @property
    def h_floor(self) -> float:
        return min(self.ultrastatic.h_floor, self.physical.h_floor)

    @property
    def sources(self) -> dict:
        return {'ultrastatic': self.ultrastatic.sources, 'physical': self.physical.sources,
                'step': self.step, 'shift': self.shift}

    def is_static(self) -> bool:
        return False

    def sample(self, t: np.ndarray, M: int) -> SampledModel:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        us = self.ultrastatic.sample(t, M)
        ph = self.physical.sample(t - self.shift, M)
        s, ds, dds = step_jet(t, self.step)
        fields = {name: _blend(getattr(us, name), getattr(ph, name), s, ds, dds)
                  for name in ('h', 'm', 'u')}
        check_ellipticity(fields['h'].value, t, us.x, self.h_floor)
        return SampledModel(t, us.x, self.n, fields['h'], fields['m'], fields['u'])

    def check_ends(self, M: int, samples: int = 9, tol: float = 1e-12) -> float:
        """
        Verify the blend equals its ends outside [-1, 1].

        Raises:
            InterpolationError: If either end deviates by more than tol
        """
        if not self.ultrastatic.is_static():
            raise InterpolationError("ultrastatic end depends on t", invariant="interpolation_ends")
        lo = np.linspace(self.time_interval[0], -1.0, samples, endpoint=False)
        hi = np.linspace(self.time_interval[1], 1.0, samples, endpoint=False)
        blended_lo = self.sample(lo, M)
        blended_hi = self.sample(hi, M)
        us = self.ultrastatic.sample(lo, M)
        ph = self.physical.sample(hi - self.shift, M)
        worst = 0.0
        for name in ('h', 'm', 'u'):
            worst = max(worst,
                        float(np.max(np.abs(getattr(blended_lo, name).value - getattr(us, name).value))),
                        float(np.max(np.abs(getattr(blended_hi, name).value - getattr(ph, name).value))))
        if worst > tol:
            raise InterpolationError(
                f"interpolating model deviates from its ends by {worst:.3e}",
                invariant="interpolation_ends", residual=worst)
        logger.debug(f"Interpolation ends match to {worst:.3e}")
        return worst
