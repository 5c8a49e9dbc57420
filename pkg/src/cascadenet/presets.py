"""Built-in example networks."""

from __future__ import annotations

from dataclasses import dataclass

from .network import BeamSplitter, ChannelSpec, Coupling, NetworkSpec, NodeSpec, PhaseShift, StageMap

PRESETS = ("mach-zehnder", "three-node")


@dataclass(frozen=True)
class ScenarioPreset:
    name: str
    n1: float = 0.0
    n2: float = 0.0
    eps1: float = 0.5
    eps2: float = 0.5
    phi: float = 0.0
    kind: str = "qubit"
    dim: int = 2
    rate: float = 1.0

    def build(self) -> NetworkSpec:
        if self.name == "mach-zehnder":
            return mach_zehnder(self.n1, self.n2, self.eps1, self.eps2, self.phi,
                                self.kind, self.dim, self.rate)
        if self.name == "three-node":
            return three_node(self.n1, self.n2, self.eps1, self.eps2, self.phi,
                              self.kind, self.dim, self.rate)
        raise ValueError(f"unknown preset {self.name!r}; choose from {', '.join(PRESETS)}")


def _node(i, kind, dim):
    coupling = (Coupling(1, 1.0),)
    if kind == "qubit":
        return NodeSpec.qubit(i, coupling)
    if kind == "cavity":
        return NodeSpec.cavity(i, dim, coupling)
    raise ValueError(f"unknown node kind {kind!r}")


def mach_zehnder(n1=0.0, n2=0.0, eps1=0.5, eps2=0.5, phi=0.0, kind="qubit", dim=2,
                 rate=1.0) -> NetworkSpec:
    """Two nodes on channel 1, an interferometer in between mixing channel 2 in."""
    return NetworkSpec(
        nodes=(_node(1, kind, dim), _node(2, kind, dim)),
        channels=(ChannelSpec(1, n1), ChannelSpec(2, n2)),
        stages=(StageMap(1, (BeamSplitter(1, 2, eps1), PhaseShift(1, phi), BeamSplitter(1, 2, eps2))),),
        rate=rate,
        name="mach-zehnder",
    )


def three_node(n1=0.0, n2=0.0, eps1=0.5, eps2=0.5, phi=0.0, kind="qubit", dim=2,
               rate=1.0) -> NetworkSpec:
    """Three nodes on channel 1; the interferometer arms are split by node 2."""
    return NetworkSpec(
        nodes=(_node(1, kind, dim), _node(2, kind, dim), _node(3, kind, dim)),
        channels=(ChannelSpec(1, n1), ChannelSpec(2, n2)),
        stages=(
            StageMap(1, (BeamSplitter(1, 2, eps1),)),
            StageMap(2, (PhaseShift(1, phi), BeamSplitter(1, 2, eps2))),
        ),
        rate=rate,
        name="three-node",
    )
