"""Declarative description of a cascade network and its validation.

A network is a chain of nodes ``1..M`` visited in order by ``K`` bosonic
channels. Between node ``m`` and node ``m+1`` the channel modes pass through
a stage of passive optics (beam splitters and phase shifters). Every stage
is summarised by its mode matrix ``U``: the Heisenberg image of the
channel annihilation operators is ``b_k -> sum_j U[k, j] b_j``.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path
from typing import Union

import numpy as np

from .errors import NetworkValidationError
from .operators import SpaceLayout


@dataclass(frozen=True)
class Coupling:
    """Excitation-hopping term ``weight * a_m^dag b_k + h.c.``"""

    channel: int
    weight: complex = 1.0


@dataclass(frozen=True)
class NodeSpec:
    id: int
    dim: int = 2
    kind: str = "qubit"
    couplings: tuple[Coupling, ...] = ()
    passive: bool = False

    @classmethod
    def qubit(cls, id, couplings=(), passive=False):
        return cls(id, 2, "qubit", tuple(couplings), passive)

    @classmethod
    def cavity(cls, id, dim, couplings=(), passive=False):
        return cls(id, int(dim), "cavity", tuple(couplings), passive)

    def weight(self, channel: int) -> complex:
        return sum((c.weight for c in self.couplings if c.channel == channel), 0j)


@dataclass(frozen=True)
class ChannelSpec:
    id: int
    occupation: float = 0.0


@dataclass(frozen=True)
class BeamSplitter:
    a: int
    b: int
    epsilon: float

    def mode_matrix(self, n_channels: int) -> np.ndarray:
        u = np.eye(n_channels, dtype=complex)
        t = math.sqrt(self.epsilon)
        r = -1j * math.sqrt(1.0 - self.epsilon)
        i, j = self.a - 1, self.b - 1
        u[i, i], u[i, j], u[j, i], u[j, j] = t, r, r, t
        return u


@dataclass(frozen=True)
class PhaseShift:
    channel: int
    phi: float

    def mode_matrix(self, n_channels: int) -> np.ndarray:
        u = np.eye(n_channels, dtype=complex)
        u[self.channel - 1, self.channel - 1] = np.exp(-1j * self.phi)
        return u


Element = Union[BeamSplitter, PhaseShift]


@dataclass(frozen=True)
class StageMap:
    after_node: int
    elements: tuple[Element, ...] = ()

    def mode_matrix(self, n_channels: int) -> np.ndarray:
        u = np.eye(n_channels, dtype=complex)
        for element in self.elements:
            # later elements act on the already-transformed modes
            u = element.mode_matrix(n_channels) @ u
        return u


@dataclass(frozen=True)
class Violation:
    path: str
    message: str

    def __str__(self):
        return f"{self.path}: {self.message}"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok

    def __str__(self):
        return "ok" if self.ok else "\n".join(str(v) for v in self.violations)


@dataclass(frozen=True)
class NetworkSpec:
    nodes: tuple[NodeSpec, ...]
    channels: tuple[ChannelSpec, ...]
    stages: tuple[StageMap, ...] = ()
    rate: float = 1.0
    name: str = field(default="", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "channels", tuple(self.channels))
        object.__setattr__(self, "stages", tuple(self.stages))

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_channels(self) -> int:
        return len(self.channels)

    @property
    def layout(self) -> SpaceLayout:
        return SpaceLayout(tuple(node.dim for node in self.nodes))

    @property
    def occupations(self) -> np.ndarray:
        return np.array([c.occupation for c in self.channels], dtype=float)

    def stage(self, m: int) -> StageMap | None:
        for stage in self.stages:
            if stage.after_node == m:
                return stage
        return None

    def stage_matrix(self, m: int) -> np.ndarray:
        stage = self.stage(m)
        if stage is None:
            return np.eye(self.n_channels, dtype=complex)
        return stage.mode_matrix(self.n_channels)

    @cached_property
    def _cumulative(self) -> tuple[np.ndarray, ...]:
        w = np.eye(self.n_channels, dtype=complex)
        out = [w]
        for m in range(1, self.n_nodes):
            w = self.stage_matrix(m) @ w
            out.append(w)
        for item in out:
            item.setflags(write=False)
        return tuple(out)

    def cumulative_transform(self, m: int) -> np.ndarray:
        return cumulative_transform(self, m)

    def coupling_matrix(self) -> np.ndarray:
        """``G[m-1, k-1]`` is the hopping weight between node m and channel k."""
        g = np.zeros((self.n_nodes, self.n_channels), dtype=complex)
        for i, node in enumerate(self.nodes):
            for c in node.couplings:
                g[i, c.channel - 1] += c.weight
        return g

    def effective_modes(self) -> np.ndarray:
        """``V[m-1, k-1, :]``: input-frame coefficients of ``g_mk * b_k`` seen by node m."""
        g = self.coupling_matrix()
        return np.stack([
            g[m][:, None] * self._cumulative[m] for m in range(self.n_nodes)
        ])

    def upstream(self, m: int) -> "NetworkSpec":
        """The network made of nodes ``1..m`` only."""
        if not 1 <= m <= self.n_nodes:
            raise IndexError(f"node index {m} out of range 1..{self.n_nodes}")
        return replace(
            self,
            nodes=self.nodes[:m],
            stages=tuple(s for s in self.stages if s.after_node < m),
        )

    def silenced(self, node_ids) -> "NetworkSpec":
        """Copy with the listed nodes decoupled from every channel."""
        ids = set(node_ids)
        nodes = tuple(
            replace(n, couplings=(), passive=True) if n.id in ids else n
            for n in self.nodes
        )
        return replace(self, nodes=nodes)

    def to_dict(self) -> dict:
        return network_to_dict(self)

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    def fingerprint(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()


def cumulative_transform(net: NetworkSpec, m: int) -> np.ndarray:
    """Mode matrix ``W = U^(m-1) ... U^(1)`` of all stages preceding node ``m``.

    Row ``k`` gives the Heisenberg image ``b_k -> sum_j W[k, j] b_j``.
    """
    if not 1 <= m <= net.n_nodes:
        raise IndexError(f"node index {m} out of range 1..{net.n_nodes}")
    return net._cumulative[m - 1]


def validate(net: NetworkSpec) -> ValidationReport:
    found: list[Violation] = []

    def bad(path, message):
        found.append(Violation(path, message))

    if not net.nodes:
        bad("nodes", "network needs at least one node")
    if not net.channels:
        bad("channels", "network needs at least one channel")
    if not (isinstance(net.rate, (int, float)) and math.isfinite(net.rate) and net.rate > 0):
        bad("rate", f"rate must be a positive finite number, got {net.rate!r}")

    channel_ids = [c.id for c in net.channels]
    if channel_ids != list(range(1, len(channel_ids) + 1)):
        bad("channels", f"channel ids must be 1..K in order, got {channel_ids}")
    for i, ch in enumerate(net.channels):
        occ = ch.occupation
        if not (isinstance(occ, (int, float)) and math.isfinite(occ) and occ >= 0):
            bad(f"channels[{i}].occupation", f"occupation must be finite and >= 0, got {occ!r}")
    known = set(channel_ids)

    node_ids = [n.id for n in net.nodes]
    if node_ids != list(range(1, len(node_ids) + 1)):
        bad("nodes", f"cascade order must be 1..M, strictly increasing and contiguous, got {node_ids}")
    for i, node in enumerate(net.nodes):
        if node.kind not in ("qubit", "cavity"):
            bad(f"nodes[{i}].kind", f"unknown node kind {node.kind!r}")
        if node.kind == "qubit" and node.dim != 2:
            bad(f"nodes[{i}].kind", "qubit nodes have dimension 2")
        if not isinstance(node.dim, int) or node.dim < 2:
            bad(f"nodes[{i}].kind", f"truncation must be >= 2, got {node.dim!r}")
        for j, c in enumerate(node.couplings):
            if c.channel not in known:
                bad(f"nodes[{i}].couplings[{j}].channel",
                    f"references channel {c.channel} of a {len(known)}-channel network")
            if not np.isfinite(complex(c.weight)):
                bad(f"nodes[{i}].couplings[{j}]", "weight must be finite")
        if not node.passive and not any(c.weight != 0 for c in node.couplings):
            bad(f"nodes[{i}].couplings", "node has no nonzero coupling and is not passive")

    seen = set()
    for i, stage in enumerate(net.stages):
        where = f"stages[{i}]"
        if not 1 <= stage.after_node <= max(len(net.nodes), 1):
            bad(f"{where}.after_node", f"after_node {stage.after_node} outside 1..{len(net.nodes)}")
        if stage.after_node in seen:
            bad(f"{where}.after_node", f"duplicate stage after node {stage.after_node}")
        seen.add(stage.after_node)
        for j, el in enumerate(stage.elements):
            at = f"{where}.elements[{j}]"
            if isinstance(el, BeamSplitter):
                if el.a not in known or el.b not in known:
                    bad(at, f"beam splitter references unknown channel ({el.a}, {el.b})")
                elif el.a == el.b:
                    bad(at, "beam splitter needs two distinct channels")
                if not (isinstance(el.epsilon, (int, float)) and 0.0 <= el.epsilon <= 1.0):
                    bad(f"{at}.epsilon", f"transmissivity out of range [0, 1]: {el.epsilon!r}")
            elif isinstance(el, PhaseShift):
                if el.channel not in known:
                    bad(at, f"phase shifter references unknown channel {el.channel}")
                if not (isinstance(el.phi, (int, float)) and math.isfinite(el.phi)):
                    bad(f"{at}.phi", "phase must be finite")
            else:
                bad(at, f"unknown element {el!r}")

    if not found:
        for m in range(1, len(net.nodes)):
            u = net.stage_matrix(m)
            if np.max(np.abs(u.conj().T @ u - np.eye(len(u)))) > 1e-12:
                bad(f"stages(after_node={m})", "stage mode matrix is not unitary")
    return ValidationReport(tuple(found))


# --- JSON ------------------------------------------------------------------

def network_to_dict(net: NetworkSpec) -> dict:
    nodes = []
    for node in net.nodes:
        entry = {
            "id": node.id,
            "kind": "qubit" if node.kind == "qubit" else {"cavity": node.dim},
            "couplings": [
                {"channel": c.channel, "re": complex(c.weight).real, "im": complex(c.weight).imag}
                for c in node.couplings
            ],
        }
        if node.passive:
            entry["passive"] = True
        nodes.append(entry)
    stages = []
    for stage in net.stages:
        elements = []
        for el in stage.elements:
            if isinstance(el, BeamSplitter):
                elements.append({"bs": {"a": el.a, "b": el.b, "epsilon": float(el.epsilon)}})
            else:
                elements.append({"ps": {"channel": el.channel, "phi": float(el.phi)}})
        stages.append({"after_node": stage.after_node, "elements": elements})
    return {
        "nodes": nodes,
        "channels": [{"id": c.id, "occupation": float(c.occupation)} for c in net.channels],
        "stages": stages,
        "rate": float(net.rate),
    }


def _expect_keys(obj, path, required, optional=()):
    if not isinstance(obj, dict):
        raise NetworkValidationError(f"expected an object, got {type(obj).__name__}", path)
    for key in obj:
        if key not in required and key not in optional:
            raise NetworkValidationError(f"unknown key {key!r}", f"{path}.{key}" if path else key)
    for key in required:
        if key not in obj:
            raise NetworkValidationError("missing required key", f"{path}.{key}" if path else key)


def _int(value, path):
    if isinstance(value, bool) or not isinstance(value, int):
        raise NetworkValidationError(f"expected an integer, got {value!r}", path)
    return value


def _real(value, path):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise NetworkValidationError(f"expected a number, got {value!r}", path)
    return float(value)


def _list(value, path):
    if not isinstance(value, list):
        raise NetworkValidationError(f"expected an array, got {type(value).__name__}", path)
    return value


def network_from_dict(data: dict) -> NetworkSpec:
    """Parse the JSON network schema. Unknown keys are rejected."""
    _expect_keys(data, "", ("nodes", "channels"), ("stages", "rate", "name"))
    nodes = []
    for i, raw in enumerate(_list(data["nodes"], "nodes")):
        path = f"nodes[{i}]"
        _expect_keys(raw, path, ("id", "kind"), ("couplings", "passive"))
        kind = raw["kind"]
        if kind == "qubit":
            dim, kind_name = 2, "qubit"
        elif isinstance(kind, dict):
            _expect_keys(kind, f"{path}.kind", ("cavity",))
            dim, kind_name = _int(kind["cavity"], f"{path}.kind.cavity"), "cavity"
        else:
            raise NetworkValidationError(
                f"kind must be \"qubit\" or {{\"cavity\": d}}, got {kind!r}", f"{path}.kind")
        couplings = []
        for j, c in enumerate(_list(raw.get("couplings", []), f"{path}.couplings")):
            cp = f"{path}.couplings[{j}]"
            _expect_keys(c, cp, ("channel", "re", "im"))
            couplings.append(Coupling(
                _int(c["channel"], f"{cp}.channel"),
                complex(_real(c["re"], f"{cp}.re"), _real(c["im"], f"{cp}.im")),
            ))
        passive = raw.get("passive", False)
        if not isinstance(passive, bool):
            raise NetworkValidationError("expected a boolean", f"{path}.passive")
        nodes.append(NodeSpec(_int(raw["id"], f"{path}.id"), dim, kind_name, tuple(couplings), passive))

    channels = []
    for i, raw in enumerate(_list(data["channels"], "channels")):
        path = f"channels[{i}]"
        _expect_keys(raw, path, ("id",), ("occupation",))
        channels.append(ChannelSpec(
            _int(raw["id"], f"{path}.id"), _real(raw.get("occupation", 0.0), f"{path}.occupation")))

    stages = []
    for i, raw in enumerate(_list(data.get("stages", []), "stages")):
        path = f"stages[{i}]"
        _expect_keys(raw, path, ("after_node",), ("elements",))
        elements = []
        for j, el in enumerate(_list(raw.get("elements", []), f"{path}.elements")):
            ep = f"{path}.elements[{j}]"
            if not isinstance(el, dict) or len(el) != 1:
                raise NetworkValidationError('element must be {"bs": {...}} or {"ps": {...}}', ep)
            (tag, body), = el.items()
            if tag == "bs":
                _expect_keys(body, f"{ep}.bs", ("a", "b", "epsilon"))
                elements.append(BeamSplitter(
                    _int(body["a"], f"{ep}.bs.a"), _int(body["b"], f"{ep}.bs.b"),
                    _real(body["epsilon"], f"{ep}.bs.epsilon")))
            elif tag == "ps":
                _expect_keys(body, f"{ep}.ps", ("channel", "phi"))
                elements.append(PhaseShift(
                    _int(body["channel"], f"{ep}.ps.channel"), _real(body["phi"], f"{ep}.ps.phi")))
            else:
                raise NetworkValidationError(f"unknown element type {tag!r}", ep)
        stages.append(StageMap(_int(raw["after_node"], f"{path}.after_node"), tuple(elements)))

    rate = _real(data.get("rate", 1.0), "rate")
    name = data.get("name", "")
    return NetworkSpec(tuple(nodes), tuple(channels), tuple(stages), rate, name=str(name))


def load_network(source) -> NetworkSpec:
    """Load a network from a JSON file path, a JSON string or a dict."""
    if isinstance(source, dict):
        return network_from_dict(source)
    text = source
    if isinstance(source, Path) or (isinstance(source, str) and not source.lstrip().startswith("{")):
        text = Path(source).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise NetworkValidationError(f"invalid JSON: {exc.msg} (line {exc.lineno})", "$") from exc
    return network_from_dict(data)
