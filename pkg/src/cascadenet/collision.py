"""Stroboscopic collision simulation in truncated Fock space.

Each step adjoins a fresh group of carriers (one mode per channel) in their
input state, lets them collide with nodes ``1..M`` in order, with the stage
optics acting on the carriers between consecutive nodes, and traces them out.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .coefficients import (carrier_modes, carrier_layout, element_unitary, fmt,
                           thermal_carrier_state)
from .dynamics import PhysicalityViolation, Trajectory, check_density_matrix, evolve, monitor
from .errors import InvalidDimension
from .gksl import assemble_gksl
from .coefficients import compute_coefficients
from .network import NetworkSpec
from .operators import OperatorMatrix, SpaceLayout, annihilation, embed, matrix_exponential, trace_distance

MAX_GDT = 0.3


@dataclass(frozen=True)
class CollisionConfig:
    g: float
    dt: float
    steps: int
    carrier_dim: int = 2

    @classmethod
    def from_gdt(cls, gdt: float, steps: int, rate: float = 1.0, carrier_dim: int = 2) -> "CollisionConfig":
        """Choose ``dt`` and ``g`` from the product ``g dt`` with ``g^2 dt = rate``."""
        dt = gdt ** 2 / rate
        return cls(gdt / dt, dt, steps, carrier_dim)

    def validate(self, rate: float):
        if self.dt <= 0 or self.steps < 0:
            raise ValueError("dt must be positive and steps non-negative")
        if self.carrier_dim < 2:
            raise InvalidDimension(f"carrier_dim must be >= 2, got {self.carrier_dim}")
        if self.g == 0:
            return
        if abs(self.g) * self.dt > MAX_GDT + 1e-12:
            raise ValueError(f"g*dt = {abs(self.g) * self.dt:.3g} exceeds {MAX_GDT}")
        if not math.isclose(self.g ** 2 * self.dt, rate, rel_tol=1e-9):
            raise ValueError(f"g^2 dt = {self.g ** 2 * self.dt:.6g} differs from the rate {rate}")


def joint_layout(net: NetworkSpec, carrier_dim: int, groups: int = 1) -> SpaceLayout:
    """Nodes first, then ``groups`` blocks of one carrier per channel."""
    return net.layout + SpaceLayout((carrier_dim,) * (net.n_channels * groups))


def interaction_unitary(net: NetworkSpec, m: int, g: float, dt: float, carrier_dim: int,
                        groups: int = 1, group: int = 0) -> np.ndarray:
    """``exp(-i g dt sum_k (w a_m^dag b_k + h.c.))`` for node ``m`` (zero-based) and one carrier group."""
    layout = joint_layout(net, carrier_dim, groups)
    a = embed(annihilation(net.nodes[m].dim), layout, m).entries
    weights = net.coupling_matrix()[m]
    h = np.zeros((layout.total_dim,) * 2, dtype=complex)
    for k, w in enumerate(weights):
        if w == 0:
            continue
        slot = net.n_nodes + group * net.n_channels + k
        b = embed(annihilation(carrier_dim), layout, slot).entries
        term = w * a.conj().T @ b
        h += term + term.conj().T
    return matrix_exponential(OperatorMatrix(layout, h), -1j * g * dt).entries


def stage_operator(net: NetworkSpec, m: int, carrier_dim: int, groups: int = 1, group: int = 0) -> np.ndarray:
    """Stage optics after node ``m`` (one-based) acting on one carrier group of the joint space."""
    local = carrier_layout(net, carrier_dim)
    v = np.eye(local.total_dim, dtype=complex)
    stage = net.stage(m)
    if stage is not None:
        for element in stage.elements:
            v = element_unitary(element, local) @ v
    before = net.layout.total_dim * local.total_dim ** group
    after = local.total_dim ** (groups - group - 1)
    return np.kron(np.kron(np.eye(before), v), np.eye(after))


def step_unitary(net: NetworkSpec, cfg: CollisionConfig) -> np.ndarray:
    """``V_M U_M ... V_1 U_1`` on nodes plus one carrier group."""
    s = np.eye(joint_layout(net, cfg.carrier_dim).total_dim, dtype=complex)
    for m in range(net.n_nodes):
        s = interaction_unitary(net, m, cfg.g, cfg.dt, cfg.carrier_dim) @ s
        s = stage_operator(net, m + 1, cfg.carrier_dim) @ s
    return s


def trace_out_carriers(joint: np.ndarray, system_dim: int) -> np.ndarray:
    env = joint.shape[0] // system_dim
    return np.einsum("iaja->ij", joint.reshape(system_dim, env, system_dim, env))


def collision_step(rho: np.ndarray, unitary: np.ndarray, eta: np.ndarray) -> np.ndarray:
    joint = unitary @ np.kron(rho, eta) @ unitary.conj().T
    return trace_out_carriers(joint, rho.shape[0])


def collide(net: NetworkSpec, rho0: np.ndarray, cfg: CollisionConfig,
            carrier_state: np.ndarray | None = None, check: bool = True) -> Trajectory:
    """Trajectory ``rho(n)`` sampled at ``t = n dt`` for ``n = 0..steps``."""
    cfg.validate(net.rate)
    rho = np.array(rho0, dtype=complex)
    if rho.shape != (net.layout.total_dim,) * 2:
        raise InvalidDimension(f"initial state of shape {rho.shape} does not match the network")
    check_density_matrix(rho)
    eta = thermal_carrier_state(net, cfg.carrier_dim) if carrier_state is None else carrier_state
    unitary = step_unitary(net, cfg)

    times, states, monitors = [], [], []
    for n in range(cfg.steps + 1):
        if n > 0:
            rho = collision_step(rho, unitary, eta)
        sample = monitor(rho, n, n * cfg.dt)
        if check and sample.breached():
            raise PhysicalityViolation(f"collision step {n} left the state space", sample)
        times.append(n * cfg.dt)
        states.append(rho)
        monitors.append(sample)
    return Trajectory(np.array(times), states, monitors)


def _probe_state(dim: int) -> np.ndarray:
    ket = np.ones(dim, dtype=complex) / math.sqrt(dim)
    return np.outer(ket, ket.conj())


def first_order_drift(net: NetworkSpec, cfg: CollisionConfig, rho: np.ndarray | None = None,
                      carrier_state: np.ndarray | None = None) -> np.ndarray:
    """Odd-in-``g`` part of one collision step, ``(rho(+g) - rho(-g)) / 2``, flattened.

    Its leading term is the first-order contribution proportional to the
    carrier first moments.
    """
    cfg.validate(net.rate)
    rho = _probe_state(net.layout.total_dim) if rho is None else np.asarray(rho, dtype=complex)
    eta = thermal_carrier_state(net, cfg.carrier_dim) if carrier_state is None else carrier_state
    plus = collision_step(rho, step_unitary(net, cfg), eta)
    minus_cfg = CollisionConfig(-cfg.g, cfg.dt, cfg.steps, cfg.carrier_dim)
    minus = collision_step(rho, step_unitary(net, minus_cfg), eta)
    return ((plus - minus) / 2).ravel()


def coherent_carrier_state(net: NetworkSpec, carrier_dim: int, alphas) -> np.ndarray:
    """Product of truncated, renormalised coherent states, one amplitude per channel."""
    ket = np.ones(1, dtype=complex)
    n = np.arange(carrier_dim)
    log_fact = np.array([math.lgamma(k + 1) for k in n])
    for alpha in alphas:
        amp = np.where(n == 0, 1.0, 0j) if alpha == 0 else np.exp(
            n * np.log(complex(alpha)) - 0.5 * log_fact)
        amp = amp / np.linalg.norm(amp)
        ket = np.kron(ket, amp)
    return np.outer(ket, ket.conj())


@dataclass(frozen=True)
class ConvergencePoint:
    dt: float
    gdt: float
    max_distance: float


@dataclass(frozen=True)
class ConvergenceReport:
    points: tuple[ConvergencePoint, ...]

    @property
    def ratios(self) -> list[float]:
        d = [p.max_distance for p in self.points]
        return [a / b for a, b in zip(d, d[1:])]

    def to_csv(self, stream=None) -> str | None:
        buffer = stream if stream is not None else io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["dt", "max_distance"])
        for p in self.points:
            writer.writerow([fmt(p.dt), fmt(p.max_distance)])
        if stream is None:
            return buffer.getvalue()
        return None


def convergence_report(net: NetworkSpec, rho0: np.ndarray, dts, t_final: float,
                       reference_dt: float = 1e-3, carrier_dim: int = 2) -> ConvergenceReport:
    """Max trace distance between the collision model and the master equation per ``dt``."""
    gen = assemble_gksl(net, compute_coefficients(net))
    reference = evolve(gen, rho0, t_final, reference_dt)
    points = []
    for dt in dts:
        stride = int(round(dt / reference_dt))
        if not math.isclose(stride * reference_dt, dt, rel_tol=1e-9):
            raise ValueError(f"dt={dt} is not a multiple of the reference step {reference_dt}")
        steps = int(round(t_final / dt))
        cfg = CollisionConfig(math.sqrt(net.rate / dt), dt, steps, carrier_dim)
        traj = collide(net, rho0, cfg)
        dist = max(trace_distance(rho, reference.states[n * stride]) for n, rho in enumerate(traj.states))
        points.append(ConvergencePoint(dt, cfg.g * dt, float(dist)))
    return ConvergenceReport(tuple(points))
