"""Fixed-step integration of the master equation with physicality monitors."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .coefficients import compute_coefficients, fmt
from .errors import InvalidDimension, PhysicalityViolation
from .gksl import assemble_gksl
from .network import NetworkSpec
from .operators import OperatorMatrix, partial_trace, trace_distance

TRACE_BOUND = 1e-8
HERMITIAN_BOUND = 1e-9
POSITIVITY_BOUND = -1e-7
INPUT_TOLERANCE = 1e-10
RICHARDSON_EVERY = 100


@dataclass(frozen=True)
class Observable:
    name: str
    operator: OperatorMatrix


@dataclass(frozen=True)
class MonitorSample:
    index: int
    time: float
    trace_dev: float
    herm_dev: float
    min_eig: float

    def breached(self) -> bool:
        return (self.trace_dev > TRACE_BOUND or self.herm_dev > HERMITIAN_BOUND
                or self.min_eig < POSITIVITY_BOUND)


@dataclass(eq=False)
class Trajectory:
    times: np.ndarray
    states: list
    monitors: list[MonitorSample]
    values: dict[str, np.ndarray] = field(default_factory=dict)
    richardson: list[tuple[float, float]] = field(default_factory=list)

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    def to_csv(self, stream=None, observables: Mapping[str, object] | None = None) -> str | None:
        """Columns ``t``, one per observable (real part), ``trace_dev, herm_dev, min_eig``."""
        names = list(self.values) if observables is None else list(observables)
        columns = {}
        for name in names:
            if observables is not None:
                columns[name] = expectation(self, observables[name]).real
            else:
                columns[name] = np.asarray(self.values[name]).real
        buffer = stream if stream is not None else io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["t", *names, "trace_dev", "herm_dev", "min_eig"])
        for i, (t, mon) in enumerate(zip(self.times, self.monitors)):
            writer.writerow([fmt(t), *(fmt(columns[n][i]) for n in names),
                             fmt(mon.trace_dev), fmt(mon.herm_dev), fmt(mon.min_eig)])
        if stream is None:
            return buffer.getvalue()
        return None


def monitor(rho: np.ndarray, index: int = 0, time: float = 0.0) -> MonitorSample:
    herm = 0.5 * (rho + rho.conj().T)
    return MonitorSample(
        index=index,
        time=float(time),
        trace_dev=float(abs(np.trace(rho) - 1.0)),
        herm_dev=float(np.max(np.abs(rho - rho.conj().T))),
        min_eig=float(np.linalg.eigvalsh(herm)[0]),
    )


def check_density_matrix(rho: np.ndarray, tolerance: float = INPUT_TOLERANCE):
    sample = monitor(rho)
    if sample.trace_dev > tolerance or sample.herm_dev > tolerance or sample.min_eig < -tolerance:
        raise ValueError(
            f"initial state is not a density matrix (trace dev {sample.trace_dev:.2e}, "
            f"Hermiticity dev {sample.herm_dev:.2e}, min eigenvalue {sample.min_eig:.2e})"
        )


def rk4_step(f: Callable, rho: np.ndarray, h: float) -> np.ndarray:
    k1 = f(rho)
    k2 = f(rho + 0.5 * h * k1)
    k3 = f(rho + 0.5 * h * k2)
    k4 = f(rho + h * k3)
    return rho + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def vectorized_rhs(gen) -> Callable:
    """Right-hand side on density matrices, via the sparse superoperator when available."""
    sup = getattr(gen, "superoperator", None)
    if sup is None:
        return gen.rhs
    return lambda rho: (sup @ rho.ravel()).reshape(rho.shape)


def _operator(obs) -> np.ndarray:
    if isinstance(obs, Observable):
        obs = obs.operator
    return obs.entries if isinstance(obs, OperatorMatrix) else np.asarray(obs)


def evolve(gen, rho0: np.ndarray, t_final: float, dt: float = 1e-3, sample_every: int = 1,
           observables: Mapping[str, object] | None = None, keep_states: bool = True,
           check: bool = True) -> Trajectory:
    """Integrate ``d rho / dt = gen.rhs(rho)`` with classic RK4.

    Every ``RICHARDSON_EVERY`` steps the local error is estimated by comparing
    one step with two half steps; estimates are stored on the trajectory.
    Samples are taken every ``sample_every`` steps and at the final time.
    """
    rho = np.array(rho0, dtype=complex)
    dim = gen.layout.total_dim
    if rho.shape != (dim, dim):
        raise InvalidDimension(f"initial state of shape {rho.shape} does not match dimension {dim}")
    if dt <= 0 or t_final < 0:
        raise ValueError("dt must be positive and t_final non-negative")
    check_density_matrix(rho)
    n_steps = int(round(t_final / dt))
    ops = {name: _operator(o) for name, o in (observables or {}).items()}

    times, states, monitors, values = [], [], [], {name: [] for name in ops}
    richardson = []

    def record(i, state):
        t = i * dt
        sample = monitor(state, i, t)
        if check and sample.breached():
            raise PhysicalityViolation(
                f"physicality monitor breached at t={t:.6g}: trace dev {sample.trace_dev:.2e}, "
                f"Hermiticity dev {sample.herm_dev:.2e}, min eigenvalue {sample.min_eig:.2e}",
                sample,
            )
        times.append(t)
        monitors.append(sample)
        if keep_states or i == n_steps:
            states.append(state.copy())
        for name, op in ops.items():
            values[name].append(np.sum(op.T * state))

    f = vectorized_rhs(gen)
    record(0, rho)
    for i in range(1, n_steps + 1):
        if (i - 1) % RICHARDSON_EVERY == 0:
            full = rk4_step(f, rho, dt)
            half = rk4_step(f, rk4_step(f, rho, dt / 2), dt / 2)
            richardson.append(((i - 1) * dt, float(np.max(np.abs(full - half))) / 15.0))
            rho = full
        else:
            rho = rk4_step(f, rho, dt)
        if i % sample_every == 0 or i == n_steps:
            record(i, rho)
    return Trajectory(np.array(times), states, monitors,
                      {name: np.array(v) for name, v in values.items()}, richardson)


def expectation(traj: Trajectory, obs) -> np.ndarray:
    """``Tr[obs rho(t)]`` at every stored sample."""
    op = _operator(obs)
    if len(traj.states) != len(traj.times):
        raise ValueError("trajectory was evolved without keeping states")
    if traj.states and op.shape != traj.states[0].shape:
        raise InvalidDimension(f"observable of shape {op.shape} does not match state {traj.states[0].shape}")
    return np.array([np.sum(op.T * rho) for rho in traj.states])


def steady_state_residual(gen, rho: np.ndarray) -> float:
    return float(np.max(np.abs(gen.rhs(rho))))


@dataclass(frozen=True)
class AutonomyReport:
    m: int
    distance: float
    reverse_distance: float


def upstream_autonomy_check(net: NetworkSpec, rho0: np.ndarray, m: int = 1, t_final: float = 5.0,
                            dt: float = 1e-2, backend: str = "gaussian") -> AutonomyReport:
    """Compare nodes ``1..m`` of the full network against the network truncated to them.

    The reverse distance compares the downstream nodes of the full network
    against a copy whose upstream nodes are decoupled; it is expected to be
    large and is only reported.
    """
    if net.n_nodes < 2:
        raise ValueError("autonomy check needs at least two nodes")
    factors = net.layout.factors
    up = list(range(m))
    down = list(range(m, net.n_nodes))

    def run(network, state):
        gen = assemble_gksl(network, compute_coefficients(network, backend))
        return evolve(gen, state, t_final, dt).states

    full = run(net, rho0)
    truncated = run(net.upstream(m), partial_trace(rho0, factors, up))
    distance = max(trace_distance(partial_trace(a, factors, up), b) for a, b in zip(full, truncated))

    silenced = run(net.silenced([node.id for node in net.nodes[:m]]), rho0)
    reverse = max(trace_distance(partial_trace(a, factors, down), partial_trace(b, factors, down))
                  for a, b in zip(full, silenced))
    return AutonomyReport(m, float(distance), float(reverse))
