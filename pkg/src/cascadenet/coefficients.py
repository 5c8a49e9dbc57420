"""Environment correlation coefficients of the cascade master equation.

Node ``m`` couples to channel ``k`` through ``g a_m^dag b_k + g^* a_m b_k^dag``,
split into two ladder terms ``A^(l,k) (x) B^(l,k)``:

    l = 1:  A = a_m^dag,  B = g b_k
    l = 2:  A = a_m,      B = g^* b_k^dag

With ``<X>`` the expectation on the carrier input state and every carrier
operator taken in the input (Heisenberg) frame of the stage it is applied
at, the coefficients are

    first_order[m, k, l]            = <B_m^(l,k)>
    local[m, k, k', l, l']          = <B_m^(l',k') B_m^(l,k)>
    zeta[m, m', k, k', l, l']       = <B_m'^(l',k') B_m^(l,k)>      (m < m')
    xi[m, m', k, k', l, l']         = <B_m^(l,k) B_m'^(l',k')>      (m < m')

Array indices are zero-based (``l = 0`` is the ``a^dag`` term).

Two independent backends are provided: a closed form in the thermal second
moments (:func:`gaussian_coefficients`) and literal traces over truncated
Fock carriers (:func:`fock_coefficients`).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import TruncationInsufficient, UnsupportedCoupling
from .network import BeamSplitter, NetworkSpec, PhaseShift
from .operators import OperatorMatrix, SpaceLayout, annihilation, embed, matrix_exponential

TAIL_TOLERANCE = 1e-6
STABILITY_TOLERANCE = 1e-10


@dataclass(frozen=True, eq=False)
class CoefficientSet:
    first_order: np.ndarray
    local: np.ndarray
    zeta: np.ndarray
    xi: np.ndarray
    backend: str = "gaussian"

    @property
    def n_nodes(self) -> int:
        return self.local.shape[0]

    @property
    def n_channels(self) -> int:
        return self.local.shape[1]

    def symmetry_defect(self) -> float:
        """Largest violation of the conjugation identities.

        With ladder operators ``B^(2) = B^(1)dag`` the identities read
        ``local[l~, l'~]_(kk') = conj(local[l', l]_(k'k))`` and
        ``xi[l, l'] = conj(zeta[l~, l'~])``, ``~`` swapping the ladder label.
        """
        local = self.local
        d_local = np.abs(local[..., ::-1, ::-1] - local.transpose(0, 2, 1, 4, 3).conj())
        upper = np.triu(np.ones((self.n_nodes,) * 2, dtype=bool), k=1)
        d_cross = np.abs(self.xi - self.zeta[..., ::-1, ::-1].conj())[upper]
        return float(max(d_local.max(initial=0.0), d_cross.max(initial=0.0)))

    def max_difference(self, other: "CoefficientSet") -> float:
        return float(max(
            np.max(np.abs(self.first_order - other.first_order), initial=0.0),
            np.max(np.abs(self.local - other.local), initial=0.0),
            np.max(np.abs(self.zeta - other.zeta), initial=0.0),
            np.max(np.abs(self.xi - other.xi), initial=0.0),
        ))

    def rows(self) -> Iterator[tuple]:
        """Flat records ``(kind, m, m_prime, k, k_prime, l, l_prime, value)``, 1-based."""
        M, K = self.n_nodes, self.n_channels
        for m in range(M):
            for k in range(K):
                for l in range(2):
                    yield ("first_order", m + 1, "", k + 1, "", l + 1, "", self.first_order[m, k, l])
        for m in range(M):
            for k in range(K):
                for kp in range(K):
                    for l in range(2):
                        for lp in range(2):
                            yield ("local", m + 1, m + 1, k + 1, kp + 1, l + 1, lp + 1,
                                   self.local[m, k, kp, l, lp])
        for kind, arr in (("zeta", self.zeta), ("xi", self.xi)):
            for m in range(M):
                for mp in range(m + 1, M):
                    for k in range(K):
                        for kp in range(K):
                            for l in range(2):
                                for lp in range(2):
                                    yield (kind, m + 1, mp + 1, k + 1, kp + 1, l + 1, lp + 1,
                                           arr[m, mp, k, kp, l, lp])

    def to_csv(self, stream=None) -> str | None:
        """Write ``kind,m,m_prime,k,k_prime,l,l_prime,re,im`` rows."""
        buffer = stream if stream is not None else io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["kind", "m", "m_prime", "k", "k_prime", "l", "l_prime", "re", "im"])
        for *key, value in self.rows():
            writer.writerow([*key, fmt(value.real), fmt(value.imag)])
        if stream is None:
            return buffer.getvalue()
        return None


def fmt(x: float) -> str:
    """Fixed 17-significant-digit formatting used by every CSV writer."""
    x = float(x)
    if x == 0.0:
        x = 0.0  # drop the sign of negative zero
    return format(x, ".17g")


@dataclass(frozen=True)
class StabilityReport:
    first_order: np.ndarray
    max_abs: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_abs <= self.tolerance


def _empty(M, K):
    return (
        np.zeros((M, K, 2), dtype=complex),
        np.zeros((M, K, K, 2, 2), dtype=complex),
        np.zeros((M, M, K, K, 2, 2), dtype=complex),
        np.zeros((M, M, K, K, 2, 2), dtype=complex),
    )


def _check_ladder(net: NetworkSpec):
    for node in net.nodes:
        if node.kind not in ("qubit", "cavity"):
            raise UnsupportedCoupling(f"node {node.id}: coupling of kind {node.kind!r} is not a ladder term")


def gaussian_coefficients(net: NetworkSpec) -> CoefficientSet:
    """Closed-form coefficients for product thermal carrier inputs."""
    _check_ladder(net)
    M, K = net.n_nodes, net.n_channels
    N = net.occupations
    modes = net.effective_modes()

    def ladder(m, k, l):
        # (is_creation, coefficient vector over input modes)
        v = modes[m, k]
        return (False, v) if l == 0 else (True, v.conj())

    def moment(x, y):
        (x_cr, xv), (y_cr, yv) = x, y
        if x_cr and not y_cr:
            return np.sum(xv * yv * N)
        if y_cr and not x_cr:
            return np.sum(xv * yv * (N + 1.0))
        return 0j

    first, local, zeta, xi = _empty(M, K)
    for m in range(M):
        for k in range(K):
            for kp in range(K):
                for l in range(2):
                    for lp in range(2):
                        local[m, k, kp, l, lp] = moment(ladder(m, kp, lp), ladder(m, k, l))
        for mp in range(m + 1, M):
            for k in range(K):
                for kp in range(K):
                    for l in range(2):
                        for lp in range(2):
                            b, bp = ladder(m, k, l), ladder(mp, kp, lp)
                            zeta[m, mp, k, kp, l, lp] = moment(bp, b)
                            xi[m, mp, k, kp, l, lp] = moment(b, bp)
    return CoefficientSet(first, local, zeta, xi, backend="gaussian")


# --- truncated Fock carriers ---------------------------------------------------

def thermal_populations(occupation: float, dim: int) -> tuple[np.ndarray, float]:
    """Renormalised truncated Gibbs populations and the discarded tail mass."""
    if occupation == 0:
        p = np.zeros(dim)
        p[0] = 1.0
        return p, 0.0
    q = occupation / (occupation + 1.0)
    p = (1.0 - q) * q ** np.arange(dim)
    tail = q ** dim
    return p / p.sum(), float(tail)


def thermal_tail(occupations, dim: int) -> float:
    return max((thermal_populations(float(n), dim)[1] for n in occupations), default=0.0)


def carrier_layout(net: NetworkSpec, carrier_dim: int) -> SpaceLayout:
    return SpaceLayout((int(carrier_dim),) * net.n_channels)


def thermal_carrier_state(net: NetworkSpec, carrier_dim: int,
                          tail_tolerance: float = TAIL_TOLERANCE) -> np.ndarray:
    """Product of truncated thermal states, one per channel."""
    if carrier_dim < 2:
        raise TruncationInsufficient(f"carrier_dim must be >= 2, got {carrier_dim}")
    state = np.ones((1, 1))
    for ch in net.channels:
        p, tail = thermal_populations(ch.occupation, carrier_dim)
        if tail > tail_tolerance:
            need = minimum_carrier_dim(ch.occupation, tail_tolerance)
            raise TruncationInsufficient(
                f"channel {ch.id}: thermal tail mass {tail:.3e} exceeds {tail_tolerance:.0e} "
                f"at carrier_dim={carrier_dim} (need >= {need})"
            )
        state = np.kron(state, np.diag(p))
    return state.astype(complex)


def minimum_carrier_dim(occupation: float, tail_tolerance: float = TAIL_TOLERANCE) -> int:
    if occupation == 0:
        return 2
    q = occupation / (occupation + 1.0)
    return max(2, math.ceil(math.log(tail_tolerance) / math.log(q) - 1e-12))


def carrier_modes(layout: SpaceLayout) -> list[np.ndarray]:
    a = annihilation(layout.factors[0])
    return [embed(a, layout, k).entries for k in range(len(layout))]


def element_unitary(element, layout: SpaceLayout) -> np.ndarray:
    """Truncated passive unitary of one optical element on the carrier modes.

    The beam splitter is ``exp(-i theta (b_a^dag b_b + b_b^dag b_a))`` with
    ``cos theta = sqrt(epsilon)``; the phase shifter is ``exp(-i phi n_k)``.
    Both reproduce the element's mode matrix on every excitation sector the
    truncation preserves.
    """
    b = carrier_modes(layout)
    if isinstance(element, BeamSplitter):
        theta = math.acos(min(1.0, math.sqrt(element.epsilon)))
        ba, bb = b[element.a - 1], b[element.b - 1]
        gen = theta * (ba.conj().T @ bb + bb.conj().T @ ba)
    elif isinstance(element, PhaseShift):
        bk = b[element.channel - 1]
        gen = element.phi * (bk.conj().T @ bk)
    else:
        raise TypeError(f"unknown optical element {element!r}")
    return matrix_exponential(OperatorMatrix(layout, gen), -1j).entries


def stage_unitary(net: NetworkSpec, m: int, carrier_dim: int) -> np.ndarray:
    """Carrier unitary of the stage between node ``m`` and node ``m + 1``."""
    layout = carrier_layout(net, carrier_dim)
    v = np.eye(layout.total_dim, dtype=complex)
    stage = net.stage(m)
    if stage is not None:
        for element in stage.elements:
            v = element_unitary(element, layout) @ v
    return v


def fock_coefficients(net: NetworkSpec, carrier_dim: int, carrier_state: np.ndarray | None = None,
                      tail_tolerance: float = TAIL_TOLERANCE) -> CoefficientSet:
    """Coefficients as literal traces over truncated carriers.

    ``carrier_state`` overrides the thermal product input (any density matrix
    on the ``K`` truncated carrier modes, correlations allowed).
    """
    _check_ladder(net)
    M, K = net.n_nodes, net.n_channels
    layout = carrier_layout(net, carrier_dim)
    eta = (thermal_carrier_state(net, carrier_dim, tail_tolerance)
           if carrier_state is None else np.asarray(carrier_state, dtype=complex))
    b = carrier_modes(layout)
    g = net.coupling_matrix()

    # B operators pulled back to the input frame: S^dag B S, S = stages before node m
    frames = []
    s = np.eye(layout.total_dim, dtype=complex)
    for m in range(M):
        if m > 0:
            s = stage_unitary(net, m, carrier_dim) @ s
        ops = {}
        for k in range(K):
            lower = g[m, k] * b[k]
            ops[k, 0] = s.conj().T @ lower @ s
            ops[k, 1] = ops[k, 0].conj().T
        frames.append(ops)

    def tr(x, y):
        return np.sum(x.T * y)

    first, local, zeta, xi = _empty(M, K)
    b_eta = [{key: op @ eta for key, op in ops.items()} for ops in frames]
    eta_b = [{key: eta @ op for key, op in ops.items()} for ops in frames]
    for m in range(M):
        for k in range(K):
            for l in range(2):
                first[m, k, l] = np.trace(b_eta[m][k, l])
                for kp in range(K):
                    for lp in range(2):
                        local[m, k, kp, l, lp] = tr(frames[m][kp, lp], b_eta[m][k, l])
        for mp in range(m + 1, M):
            for k in range(K):
                for kp in range(K):
                    for l in range(2):
                        for lp in range(2):
                            bp = frames[mp][kp, lp]
                            zeta[m, mp, k, kp, l, lp] = tr(bp, b_eta[m][k, l])
                            xi[m, mp, k, kp, l, lp] = tr(bp, eta_b[m][k, l])
    return CoefficientSet(first, local, zeta, xi, backend="fock")


def check_stability(net: NetworkSpec, backend: str = "gaussian", carrier_dim: int | None = None,
                    carrier_state: np.ndarray | None = None,
                    tolerance: float = STABILITY_TOLERANCE) -> StabilityReport:
    """Evaluate every first-moment coefficient; pass iff all vanish."""
    if backend == "gaussian" and carrier_state is None:
        coeffs = gaussian_coefficients(net)
    else:
        if carrier_dim is None:
            carrier_dim = max(minimum_carrier_dim(n) for n in net.occupations)
        coeffs = fock_coefficients(net, carrier_dim, carrier_state)
    max_abs = float(np.max(np.abs(coeffs.first_order), initial=0.0))
    return StabilityReport(coeffs.first_order, max_abs, tolerance)


def compute_coefficients(net: NetworkSpec, backend: str = "gaussian",
                         carrier_dim: int | None = None) -> CoefficientSet:
    if backend == "gaussian":
        return gaussian_coefficients(net)
    if backend == "fock":
        if carrier_dim is None:
            carrier_dim = max(minimum_carrier_dim(n) for n in net.occupations)
        return fock_coefficients(net, carrier_dim)
    raise ValueError(f"unknown backend {backend!r}")
