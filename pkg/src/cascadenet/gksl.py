"""Master-equation generator in coefficient form and in GKSL form.

Node operators follow the coupling's ladder split: ``A_(m,k,0) = a_m^dag`` and
``A_(m,k,1) = a_m``. The joint index ``J = (m, k, l)`` runs over active
couplings (nonzero weight), node-major, then channel, then ladder label.

Coefficient form::

    L_m(rho)     = 1/2 sum local[k,k',l,l'] (2 A_(k,l) rho A_(k',l') - {A_(k',l') A_(k,l), rho})
    D_m->m'(rho) = sum zeta[k,k',l,l'] A_(m,k,l) [rho, A_(m',k',l')]
                       - xi[k,k',l,l'] [rho, A_(m',k',l')] A_(m,k,l)

GKSL form::

    rhs(rho) = -i [H, rho] + sum_i kappa_i (L_i rho L_i^dag - 1/2 {L_i^dag L_i, rho})

Both right-hand sides are multiplied by the network rate.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .coefficients import CoefficientSet
from .errors import InconsistentCoefficients, NegativeRate, NotHermitian
from .network import NetworkSpec
from .operators import OperatorMatrix, annihilation, embed, hermitian_eigen, hermiticity_defect

SYMMETRY_TOLERANCE = 1e-8
HERMITIAN_TOLERANCE = 1e-10
CLAMP_TOLERANCE = 1e-9
DROP_TOLERANCE = 1e-12


def node_operators(net: NetworkSpec) -> dict[tuple[int, int], OperatorMatrix]:
    """``{(m, l): A}`` with ``m`` zero-based; ``l = 0`` is ``a^dag``, ``l = 1`` is ``a``."""
    layout = net.layout
    table = {}
    for m, node in enumerate(net.nodes):
        a = embed(annihilation(node.dim), layout, m)
        table[m, 0] = a.dag()
        table[m, 1] = a
    return table


def joint_index(net: NetworkSpec) -> list[tuple[int, int, int]]:
    g = net.coupling_matrix()
    return [(m, k, l) for m in range(net.n_nodes) for k in range(net.n_channels)
            if g[m, k] != 0 for l in range(2)]


def _sparse(op: OperatorMatrix):
    return sp.csr_matrix(op.entries)


def _flip(l: int) -> int:
    return 1 - l


def _sandwich(left, right):
    """Superoperator of ``rho -> left rho right`` on row-major ``vec(rho)``."""
    return sp.kron(left, right.T, format="csr")


def _identity(dim):
    return sp.identity(dim, dtype=complex, format="csr")


@dataclass(frozen=True, eq=False)
class LocalTerm:
    node: int
    theta: np.ndarray
    index: tuple[tuple[int, int], ...]


@dataclass(frozen=True, eq=False)
class CrossTerm:
    node: int
    node_prime: int
    zeta: np.ndarray
    xi: np.ndarray


@dataclass(frozen=True, eq=False)
class CoefficientGenerator:
    """Per-node dissipators and per-pair cascade terms, evaluated literally.

    ``theta`` of a node is the Hermitian positive block over ``(k, l)`` with
    ``theta[(k,l),(k',l'')] = local[k,k',l,flip(l'')]``.
    """

    net: NetworkSpec
    coeffs: CoefficientSet
    locals: tuple[LocalTerm, ...]
    crossings: tuple[CrossTerm, ...]
    operators: dict = field(repr=False)
    rate: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "_ops", {key: _sparse(op) for key, op in self.operators.items()})

    @property
    def layout(self):
        return self.net.layout

    def local_rhs(self, m: int, rho: np.ndarray) -> np.ndarray:
        ops = self._ops
        # A_(m,k,l) does not depend on k, so channel sums collapse
        gamma = self.coeffs.local[m].sum(axis=(0, 1))
        out = np.zeros_like(rho, dtype=complex)
        for l in range(2):
            for lp in range(2):
                c = gamma[l, lp]
                if c == 0:
                    continue
                a, ap = ops[m, l], ops[m, lp]
                prod = ap @ a
                out += 0.5 * c * (2 * (a @ (ap.T @ rho.T).T) - prod @ rho - (prod.T @ rho.T).T)
        return out

    def cross_rhs(self, m: int, mp: int, rho: np.ndarray) -> np.ndarray:
        ops = self._ops
        zeta = self.coeffs.zeta[m, mp].sum(axis=(0, 1))
        xi = self.coeffs.xi[m, mp].sum(axis=(0, 1))
        out = np.zeros_like(rho, dtype=complex)
        for l in range(2):
            for lp in range(2):
                z, x = zeta[l, lp], xi[l, lp]
                if z == 0 and x == 0:
                    continue
                a, ap = ops[m, l], ops[mp, lp]
                comm = (ap.T @ rho.T).T - ap @ rho  # [rho, A']
                out += z * (a @ comm) - x * (a.T @ comm.T).T
        return out

    @cached_property
    def superoperator(self) -> sp.csr_matrix:
        """Sparse matrix of ``rhs`` acting on row-major ``vec(rho)``."""
        ops = self._ops
        eye = _identity(self.layout.total_dim)
        out = sp.csr_matrix((eye.shape[0] ** 2,) * 2, dtype=complex)
        for term in self.locals:
            gamma = self.coeffs.local[term.node].sum(axis=(0, 1))
            for l in range(2):
                for lp in range(2):
                    c = gamma[l, lp]
                    if c != 0:
                        a, ap = ops[term.node, l], ops[term.node, lp]
                        prod = ap @ a
                        out = out + 0.5 * c * (2 * _sandwich(a, ap) - _sandwich(prod, eye)
                                               - _sandwich(eye, prod))
        for term in self.crossings:
            zeta = term.zeta.sum(axis=(0, 1))
            xi = term.xi.sum(axis=(0, 1))
            for l in range(2):
                for lp in range(2):
                    z, x = zeta[l, lp], xi[l, lp]
                    if z != 0 or x != 0:
                        a, ap = ops[term.node, l], ops[term.node_prime, lp]
                        out = out + z * (_sandwich(a, ap) - _sandwich(a @ ap, eye))
                        out = out - x * (_sandwich(eye, ap @ a) - _sandwich(ap, a))
        return (self.rate * out).tocsr()

    def rhs(self, rho: np.ndarray) -> np.ndarray:
        rho = np.asarray(rho, dtype=complex)
        out = np.zeros_like(rho)
        for term in self.locals:
            out += self.local_rhs(term.node, rho)
        for term in self.crossings:
            out += self.cross_rhs(term.node, term.node_prime, rho)
        return self.rate * out


def build_coefficient_generator(net: NetworkSpec, coeffs: CoefficientSet) -> CoefficientGenerator:
    defect = coeffs.symmetry_defect()
    if defect > SYMMETRY_TOLERANCE:
        raise InconsistentCoefficients(f"coefficient symmetry violated by {defect:.3e}")
    g = net.coupling_matrix()
    locals_ = []
    for m in range(net.n_nodes):
        index = tuple((k, l) for k in range(net.n_channels) if g[m, k] != 0 for l in range(2))
        theta = np.array([[coeffs.local[m, k, kp, l, _flip(lpp)] for (kp, lpp) in index]
                          for (k, l) in index], dtype=complex).reshape(len(index), len(index))
        locals_.append(LocalTerm(m, theta, index))
    crossings = tuple(
        CrossTerm(m, mp, coeffs.zeta[m, mp], coeffs.xi[m, mp])
        for m in range(net.n_nodes) for mp in range(m + 1, net.n_nodes)
    )
    return CoefficientGenerator(net, coeffs, tuple(locals_), crossings, node_operators(net), net.rate)


@dataclass(frozen=True, eq=False)
class GkslGenerator:
    net: NetworkSpec
    hamiltonian: OperatorMatrix
    omega: np.ndarray
    index: tuple[tuple[int, int, int], ...]
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    jumps: tuple[tuple[float, OperatorMatrix], ...]
    rate: float = 1.0
    backend: str = "gaussian"

    def __post_init__(self):
        object.__setattr__(self, "_h", _sparse(self.hamiltonian))
        object.__setattr__(self, "_jumps", tuple(
            (kappa, _sparse(op), _sparse(op.dag() @ op)) for kappa, op in self.jumps))

    @property
    def layout(self):
        return self.net.layout

    @property
    def kappas(self) -> np.ndarray:
        return np.array([kappa for kappa, _ in self.jumps])

    @property
    def delta_omega(self) -> np.ndarray:
        """``omega`` with every same-node block set to zero."""
        nodes = np.array([m for m, _, _ in self.index])
        return np.where(nodes[:, None] != nodes[None, :], self.omega, 0)

    @cached_property
    def superoperator(self) -> sp.csr_matrix:
        """Sparse matrix of ``rhs`` acting on row-major ``vec(rho)``."""
        eye = _identity(self.layout.total_dim)
        out = -1j * (_sandwich(self._h, eye) - _sandwich(eye, self._h))
        for kappa, op, n in self._jumps:
            out = out + kappa * (_sandwich(op, op.conj().T) - 0.5 * _sandwich(n, eye)
                                 - 0.5 * _sandwich(eye, n))
        return (self.rate * out).tocsr()

    def rhs(self, rho: np.ndarray) -> np.ndarray:
        rho = np.asarray(rho, dtype=complex)
        h = self._h
        hr = h @ rho
        out = -1j * (hr - (h.T @ rho.T).T)
        for kappa, op, n in self._jumps:
            lr = op @ rho
            nr = n @ rho
            out += kappa * ((op.conj() @ lr.T).T - 0.5 * (nr + (n.T @ rho.T).T))
        return self.rate * out

    def to_dict(self) -> dict:
        def flat(m):
            m = np.asarray(m)
            return {"re": m.real.ravel().tolist(), "im": m.imag.ravel().tolist()}

        return {
            "layout": list(self.layout.factors),
            "rate": self.rate,
            "index": [{"m": m + 1, "k": k + 1, "l": l + 1} for m, k, l in self.index],
            "hamiltonian": flat(self.hamiltonian.entries),
            "omega": flat(self.omega),
            "kappas": self.kappas.tolist(),
            "jumps": [{"kappa": kappa, **flat(op.entries)} for kappa, op in self.jumps],
            "provenance": {"network_sha256": self.net.fingerprint(), "backend": self.backend},
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def omega_matrix(net: NetworkSpec, coeffs: CoefficientSet) -> tuple[np.ndarray, list]:
    """Kossakowski matrix over the joint index."""
    index = joint_index(net)
    pos = {key: i for i, key in enumerate(index)}
    omega = np.zeros((len(index), len(index)), dtype=complex)
    for (m, k, l), i in pos.items():
        for (mp, kp, lp), j in pos.items():
            if m == mp:
                omega[i, j] = coeffs.local[m, k, kp, l, _flip(lp)]
    for (m, k, l), i in pos.items():
        for (mp, kp, lp), j in pos.items():
            if m < mp:
                omega[i, pos[mp, kp, _flip(lp)]] += coeffs.zeta[m, mp, k, kp, l, lp]
                omega[j, pos[m, k, _flip(l)]] += coeffs.xi[m, mp, k, kp, l, lp]
    return omega, index


def effective_hamiltonian(net: NetworkSpec, coeffs: CoefficientSet) -> OperatorMatrix:
    ops = node_operators(net)
    h = np.zeros((net.layout.total_dim,) * 2, dtype=complex)
    for m, mp in pair_list(net):
        h += pair_hamiltonian(net, coeffs, m, mp, ops).entries
    return OperatorMatrix(net.layout, h)


def pair_list(net: NetworkSpec):
    return [(m, mp) for m in range(net.n_nodes) for mp in range(m + 1, net.n_nodes)]


def pair_hamiltonian(net, coeffs, m, mp, ops=None) -> OperatorMatrix:
    """Coherent part ``H_(m,m')`` generated by the cascade between two nodes (zero-based)."""
    ops = ops or node_operators(net)
    h = np.zeros((net.layout.total_dim,) * 2, dtype=complex)
    for l in range(2):
        for lp in range(2):
            w = np.sum(coeffs.zeta[m, mp, :, :, l, lp] - coeffs.xi[m, mp, :, :, l, lp]) / 2j
            if w != 0:
                h += w * (ops[m, l].entries @ ops[mp, lp].entries)
    return OperatorMatrix(net.layout, h)


def assemble_gksl(net: NetworkSpec, coeffs: CoefficientSet) -> GkslGenerator:
    defect = coeffs.symmetry_defect()
    if defect > SYMMETRY_TOLERANCE:
        raise InconsistentCoefficients(f"coefficient symmetry violated by {defect:.3e}")
    h = effective_hamiltonian(net, coeffs)
    scale = max(1.0, float(np.max(np.abs(h.entries), initial=0.0)))
    if hermiticity_defect(h) > HERMITIAN_TOLERANCE * scale:
        raise NotHermitian(f"effective Hamiltonian not Hermitian (defect {hermiticity_defect(h):.3e})")
    omega, index = omega_matrix(net, coeffs)
    if omega.size == 0:
        values, vectors = np.zeros(0), np.zeros((0, 0), dtype=complex)
    else:
        eig = hermitian_eigen(omega, rtol=HERMITIAN_TOLERANCE)
        values, vectors = eig.eigenvalues, eig.eigenvectors
    if values.size and values.min() < -CLAMP_TOLERANCE:
        raise NegativeRate(f"Kossakowski eigenvalue {values.min():.3e} is negative")
    values = np.where(values < 0, 0.0, values)

    ops = node_operators(net)
    jumps = []
    for i, kappa in enumerate(values):
        if kappa < DROP_TOLERANCE:
            continue
        entries = sum(vectors[j, i] * ops[m, l].entries for j, (m, _, l) in enumerate(index))
        jumps.append((float(kappa), OperatorMatrix(net.layout, entries)))
    return GkslGenerator(net, h, omega, tuple(index), values, vectors, tuple(jumps), net.rate,
                         coeffs.backend)


def mz_transfer(eps1: float, eps2: float, phi: float) -> tuple[complex, complex]:
    """First row ``(c, s)`` of the interferometer's mode matrix."""
    t1, t2 = math.sqrt(eps1), math.sqrt(eps2)
    r1, r2 = math.sqrt(1 - eps1), math.sqrt(1 - eps2)
    e = np.exp(-1j * phi)
    return complex(t1 * t2 * e - r1 * r2), complex(-1j * (r1 * t2 * e + t1 * r2))


def kappa_closed_form_mz(n1: float, n2: float, eps1: float, eps2: float, phi: float):
    """Rates ``(k1+, k1-, k2+, k2-)`` of the two-node interferometer."""
    if n1 < 0 or n2 < 0:
        raise ValueError("occupations must be non-negative")
    if not (0 <= eps1 <= 1 and 0 <= eps2 <= 1):
        raise ValueError("transmissivities must lie in [0, 1]")
    c, _ = mz_transfer(eps1, eps2, phi)
    c2 = abs(c) ** 2
    n12 = n2 + (n1 - n2) * c2
    half = (n12 - n1) / 2
    r1 = math.sqrt(half ** 2 + c2 * (n1 + 1) ** 2)
    r2 = math.sqrt(half ** 2 + c2 * n1 ** 2)
    mean1 = (n1 + n12) / 2 + 1
    mean2 = (n1 + n12) / 2
    return mean1 + r1, mean1 - r1, mean2 + r2, mean2 - r2


def single_excitation_state(net: NetworkSpec, m: int) -> np.ndarray:
    """Ket with one excitation on node ``m`` (zero-based), vacuum elsewhere."""
    occ = [0] * net.n_nodes
    occ[m] = 1
    ket = np.zeros(net.layout.total_dim, dtype=complex)
    ket[net.layout.basis_index(occ)] = 1.0
    return ket


def coupling_amplitude(net: NetworkSpec, h: OperatorMatrix, m: int, mp: int) -> complex:
    """``<1_m| H |1_m'>`` between single-excitation states (zero-based nodes)."""
    return complex(single_excitation_state(net, m).conj() @ h.entries @ single_excitation_state(net, mp))
