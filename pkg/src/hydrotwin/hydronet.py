"""Steady-state 1D model of the closed loop.

Topology (flow direction)::

    pump -> section 1 -> [exchanger || regulation valve] -> section 2
         -> tank -> section 3 -> pump

The operating flow is where the pump curve meets the network curve;
pressures are then walked node by node from the tank, which is the only
absolute pressure reference in the loop.

Units: pressure bar, flow m^3/h, head m.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

PARAMETER_NAMES = ("loss1", "loss3", "lossx", "p_tank", "hmt", "debit")
PROCESS_NAMES = ("p1", "p2", "p3", "p4", "fl")

MAX_BISECTION_ITERATIONS = 200
HEAD_TOLERANCE = 1e-6  # m


class NoConvergence(RuntimeError):
    """The operating-point solve could not bracket or converge."""


@dataclass(frozen=True)
class ControlVector:
    """Actuator setpoints: pump speed and regulation valve opening, in %."""

    u1: float
    u2: float

    def __post_init__(self):
        for name in ("u1", "u2"):
            value = getattr(self, name)
            if not (0.0 <= value <= 100.0):
                raise ValueError(f"{name}={value} outside [0, 100]")

    def as_array(self) -> np.ndarray:
        return np.array([self.u1, self.u2], dtype=float)


@dataclass(frozen=True)
class ComponentVector:
    """Internal parameters of the loop; their drift is what a fault is.

    Parameters are addressed 1-based (``theta_1 .. theta_6``) everywhere the
    FDD code talks about a "parameter index".
    """

    loss1: float = 4.5
    loss3: float = 1.17
    lossx: float = 10.35
    p_tank: float = 3.0
    hmt: float = 229.0
    debit: float = 15.3

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not (value > 0.0 and math.isfinite(value)):
                raise ValueError(f"{f.name}={value} must be finite and > 0")

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in PARAMETER_NAMES], dtype=float)

    @classmethod
    def from_array(cls, values) -> "ComponentVector":
        return cls(*(float(v) for v in values))

    def get(self, index: int) -> float:
        return getattr(self, PARAMETER_NAMES[_check_index(index)])

    def with_value(self, index: int, value: float) -> "ComponentVector":
        values = self.as_array()
        values[_check_index(index)] = value
        return ComponentVector.from_array(values)


NOMINAL_THETA = ComponentVector()


def _check_index(index: int) -> int:
    if not 1 <= index <= len(PARAMETER_NAMES):
        raise IndexError(f"parameter index {index} outside 1..{len(PARAMETER_NAMES)}")
    return index - 1


@dataclass(frozen=True)
class ProcessVector:
    """Observables: four node pressures (bar) and loop flow (m^3/h)."""

    p1: float
    p2: float
    p3: float
    p4: float
    fl: float

    def as_array(self) -> np.ndarray:
        return np.array([self.p1, self.p2, self.p3, self.p4, self.fl], dtype=float)

    @classmethod
    def from_array(cls, values) -> "ProcessVector":
        return cls(*(float(v) for v in values))


@dataclass(frozen=True)
class LoopConfig:
    """Reconstruction constants of the loop model (not fault parameters)."""

    pipe_diameter: float = 0.025
    k_section2: float = 0.5
    kv100: float = 2.0
    pump_c0: float = 1.25
    pump_c2: float = 0.25
    rho: float = 1000.0
    g: float = 9.81

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not (value > 0.0 and math.isfinite(value)):
                raise ValueError(f"{f.name}={value} must be finite and > 0")
        # keeps the rated point (debit, hmt) on the full-speed curve
        if abs(self.pump_c0 - self.pump_c2 - 1.0) > 1e-12:
            raise ValueError(
                f"pump_c0 - pump_c2 must equal 1, got {self.pump_c0 - self.pump_c2!r}"
            )

    @property
    def area(self) -> float:
        return math.pi * self.pipe_diameter**2 / 4.0


DEFAULT_CONFIG = LoopConfig()


def velocity_head(q: float, cfg: LoopConfig) -> float:
    """v^2 / 2g in metres for a flow ``q`` in m^3/h."""
    v = (q / 3600.0) / cfg.area
    return v * v / (2.0 * cfg.g)


def head_to_bar(h: float, cfg: LoopConfig) -> float:
    return cfg.rho * cfg.g * h / 1e5


def pump_head(q: float, s: float, theta: ComponentVector, cfg: LoopConfig = DEFAULT_CONFIG) -> float:
    """Affinity-law quadratic pump curve; ``s`` is the speed fraction."""
    r = q / theta.debit
    return theta.hmt * (cfg.pump_c0 * s * s - cfg.pump_c2 * r * r)


def valve_k(u2: float, cfg: LoopConfig = DEFAULT_CONFIG) -> float:
    """Valve loss coefficient; infinite when closed."""
    if u2 <= 0.0:
        return math.inf
    frac2 = (u2 / 100.0) ** 2
    return cfg.kv100 / frac2 if frac2 > 0.0 else math.inf


def parallel_k(u2: float, theta: ComponentVector, cfg: LoopConfig = DEFAULT_CONFIG) -> float:
    """Equivalent coefficient of the exchanger and valve in parallel."""
    if u2 <= 0.0:
        return theta.lossx
    inv = 1.0 / math.sqrt(theta.lossx) + 1.0 / math.sqrt(valve_k(u2, cfg))
    return 1.0 / (inv * inv)


def total_k(u2: float, theta: ComponentVector, cfg: LoopConfig = DEFAULT_CONFIG) -> float:
    return theta.loss1 + cfg.k_section2 + theta.loss3 + parallel_k(u2, theta, cfg)


def network_head_loss(q: float, u2: float, theta: ComponentVector, cfg: LoopConfig = DEFAULT_CONFIG) -> float:
    return total_k(u2, theta, cfg) * velocity_head(q, cfg)


def solve_operating_point(u: ControlVector, theta: ComponentVector, cfg: LoopConfig = DEFAULT_CONFIG) -> float:
    """Flow at which pump head equals network loss, by bracketed bisection.

    The residual is strictly decreasing in q for a running pump, so the
    root on ``[0, s * sqrt(c0/c2) * debit]`` is unique. Bisection runs down to
    float resolution (well inside the iteration budget) so the pressure
    walk closes on the tank to round-off.
    """
    s = u.u1 / 100.0
    if s == 0.0:
        return 0.0
    k = total_k(u.u2, theta, cfg)

    def residual(q):
        return pump_head(q, s, theta, cfg) - k * velocity_head(q, cfg)

    # the pump head is non-negative at the root, which caps q at shut-off flow
    lo, hi = 0.0, s * math.sqrt(cfg.pump_c0 / cfg.pump_c2) * theta.debit
    r_lo, r_hi = residual(lo), residual(hi)
    if r_lo == 0.0:  # speed so small that the shut-off head underflows
        return 0.0
    if not (r_lo > 0.0 and r_hi <= 0.0):
        raise NoConvergence(f"operating point not bracketed: r(0)={r_lo}, r({hi})={r_hi}")
    for _ in range(MAX_BISECTION_ITERATIONS):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        r_mid = residual(mid)
        if r_mid > 0.0:
            lo, r_lo = mid, r_mid
        else:
            hi, r_hi = mid, r_mid
    else:
        raise NoConvergence(f"bisection budget of {MAX_BISECTION_ITERATIONS} exhausted")
    q, r = (lo, r_lo) if abs(r_lo) <= abs(r_hi) else (hi, r_hi)
    if not abs(r) < HEAD_TOLERANCE:
        raise NoConvergence(f"head residual {r} m above tolerance")
    return q


def simulate(u: ControlVector, theta: ComponentVector, cfg: LoopConfig = DEFAULT_CONFIG) -> ProcessVector:
    q = solve_operating_point(u, theta, cfg)
    hv = velocity_head(q, cfg)
    p2 = theta.p_tank - head_to_bar(theta.loss3 * hv, cfg)
    p1 = p2 + head_to_bar(pump_head(q, u.u1 / 100.0, theta, cfg), cfg)
    p3 = p1 - head_to_bar(theta.loss1 * hv, cfg)
    p4 = p3 - head_to_bar(parallel_k(u.u2, theta, cfg) * hv, cfg)
    return ProcessVector(p1, p2, p3, p4, q)


def loop_closure_error(u: ControlVector, theta: ComponentVector, y: ProcessVector,
                       cfg: LoopConfig = DEFAULT_CONFIG) -> float:
    """Pressure mismatch (bar) when walking section 2 back into the tank."""
    hv = velocity_head(y.fl, cfg)
    return y.p4 - head_to_bar(cfg.k_section2 * hv, cfg) - theta.p_tank
