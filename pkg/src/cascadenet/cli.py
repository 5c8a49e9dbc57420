"""Command-line entry point: ``cascadenet <subcommand> <network> [options]``.

A network is a JSON file or ``preset:mach-zehnder`` / ``preset:three-node``
configured by the preset flags. Exit status is 0 on success, 1 on invalid
input and 2 when a physicality check fails.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace

import numpy as np

from .coefficients import compute_coefficients, fmt
from .collision import CollisionConfig, collide
from .dynamics import evolve
from .errors import CascadeError, NegativeRate, PhysicalityViolation
from .gksl import assemble_gksl, build_coefficient_generator, coupling_amplitude
from .network import NetworkSpec, load_network, validate
from .operators import basis_projector, embed, number
from .presets import PRESETS, ScenarioPreset

SWEEP_PARAMS = ("phi", "eps", "eps1", "eps2", "n1", "n2")


class UsageError(CascadeError):
    pass


def _preset_args(p):
    g = p.add_argument_group("preset parameters (preset:<name> networks only)")
    g.add_argument("--phi", type=float, default=0.0)
    g.add_argument("--eps", type=float, help="sets both transmissivities")
    g.add_argument("--eps1", type=float)
    g.add_argument("--eps2", type=float)
    g.add_argument("--n1", type=float, default=0.0)
    g.add_argument("--n2", type=float, default=0.0)
    g.add_argument("--kind", choices=("qubit", "cavity"), default="qubit")
    g.add_argument("--dim", type=int, default=2, help="cavity truncation")
    g.add_argument("--rate", type=float, default=1.0)


def _preset(args, **overrides) -> ScenarioPreset:
    name = args.network.split(":", 1)[1]
    if name not in PRESETS:
        raise UsageError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    eps = 0.5 if args.eps is None else args.eps
    preset = ScenarioPreset(
        name=name, n1=args.n1, n2=args.n2,
        eps1=eps if args.eps1 is None else args.eps1,
        eps2=eps if args.eps2 is None else args.eps2,
        phi=args.phi, kind=args.kind, dim=args.dim if args.kind == "cavity" else 2, rate=args.rate,
    )
    if "eps" in overrides:
        value = overrides.pop("eps")
        overrides.update(eps1=value, eps2=value)
    return replace(preset, **overrides)


def _network(args, **overrides) -> NetworkSpec:
    if args.network.startswith("preset:"):
        net = _preset(args, **overrides).build()
    else:
        if overrides:
            raise UsageError("parameter sweeps need a preset: network")
        net = load_network(args.network)
    report = validate(net)
    if not report.ok:
        raise UsageError(str(report))
    return net


def _output(args, text: str):
    if getattr(args, "out", None):
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _observables(net: NetworkSpec, spec: str | None):
    obs = {}
    for name in filter(None, (spec or "").split(",")):
        if not (name.startswith("n") and name[1:].isdigit() and 1 <= int(name[1:]) <= net.n_nodes):
            raise UsageError(f"unknown observable {name!r}; use n1..n{net.n_nodes}")
        m = int(name[1:]) - 1
        obs[name] = embed(number(net.nodes[m].dim), net.layout, m)
    return obs


def _initial_state(net: NetworkSpec, spec: str | None):
    occ = [0] * net.n_nodes if not spec else [int(x) for x in spec.split(",")]
    if len(occ) != net.n_nodes:
        raise UsageError(f"--init needs {net.n_nodes} occupations")
    try:
        return basis_projector(net.layout, occ)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def cmd_validate(args) -> int:
    if args.network.startswith("preset:"):
        net = _preset(args).build()
    else:
        net = load_network(args.network)
    report = validate(net)
    if not report.ok:
        print(report, file=sys.stderr)
        return 1
    print("ok")
    return 0


def cmd_coefficients(args) -> int:
    net = _network(args)
    coeffs = compute_coefficients(net, args.backend, args.carrier_dim)
    _output(args, coeffs.to_csv())
    return 0


def cmd_gksl(args) -> int:
    net = _network(args)
    gen = assemble_gksl(net, compute_coefficients(net, args.backend, args.carrier_dim))
    data = gen.to_dict()
    data["eigenvalues"] = sorted(gen.eigenvalues.tolist(), reverse=True)
    _output(args, json.dumps(data, indent=2) + "\n")
    return 0


def cmd_evolve(args) -> int:
    net = _network(args)
    coeffs = compute_coefficients(net, args.backend, args.carrier_dim)
    gen = (build_coefficient_generator if args.form == "coeff" else assemble_gksl)(net, coeffs)
    obs = _observables(net, args.obs)
    traj = evolve(gen, _initial_state(net, args.init), args.t, args.dt,
                  sample_every=args.sample_every, observables=obs, keep_states=False)
    _output(args, traj.to_csv())
    return 0


def cmd_collide(args) -> int:
    net = _network(args)
    cfg = CollisionConfig.from_gdt(args.gdt, args.steps, net.rate, args.carrier_dim)
    obs = _observables(net, args.obs)
    traj = collide(net, _initial_state(net, args.init), cfg)
    _output(args, traj.to_csv(observables=obs))
    return 0


def _sweep_point(args, value):
    net = _network(args, **{args.param: value})
    gen = assemble_gksl(net, compute_coefficients(net, args.backend, args.carrier_dim))
    if args.emit == "kappas":
        return sorted(gen.eigenvalues.tolist(), reverse=True)
    if args.emit == "h13":
        if net.n_nodes < 3:
            raise UsageError("h13 needs a network with at least three nodes")
        return [abs(coupling_amplitude(net, gen.hamiltonian, 0, 2))]
    obs = _observables(net, ",".join(f"n{m + 1}" for m in range(net.n_nodes)))
    traj = evolve(gen, _initial_state(net, args.init), args.t, args.dt,
                  sample_every=max(1, int(round(args.t / args.dt))), observables=obs, keep_states=False)
    return [float(v[-1].real) for v in traj.values.values()]


def cmd_sweep(args) -> int:
    if not args.network.startswith("preset:"):
        raise UsageError("sweep needs a preset: network")
    if args.points < 1:
        raise UsageError("--points must be >= 1")
    values = np.linspace(args.start, args.stop, args.points)
    threads = int(os.environ.get("CASCADENET_THREADS", "0") or 0) or min(8, os.cpu_count() or 1)
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        rows = list(pool.map(lambda v: _sweep_point(args, float(v)), values))
    width = max(len(r) for r in rows)
    if args.emit == "kappas":
        header = [f"kappa{i + 1}" for i in range(width)]
    elif args.emit == "h13":
        header = ["h13"]
    else:
        header = [f"n{i + 1}" for i in range(width)]
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow([args.param, *header])
    for value, row in zip(values, rows):
        writer.writerow([fmt(value), *(fmt(x) for x in row)])
    _output(args, buffer.getvalue())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cascadenet", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name, func, help):
        p = sub.add_parser(name, help=help)
        p.add_argument("network", help="JSON file or preset:<name>")
        _preset_args(p)
        p.set_defaults(func=func)
        return p

    def backend(p):
        p.add_argument("--backend", choices=("gaussian", "fock"), default="gaussian")
        p.add_argument("--carrier-dim", type=int, default=None)

    command("validate", cmd_validate, "check a network description")

    p = command("coefficients", cmd_coefficients, "environment coefficients as CSV")
    backend(p)
    p.add_argument("--out")

    p = command("gksl", cmd_gksl, "Hamiltonian, Kossakowski matrix and jumps as JSON")
    backend(p)
    p.add_argument("--out")

    p = command("evolve", cmd_evolve, "integrate the master equation")
    backend(p)
    p.add_argument("--t", type=float, default=10.0)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--obs", default="")
    p.add_argument("--form", choices=("coeff", "gksl"), default="gksl")
    p.add_argument("--init", help="initial Fock occupations, e.g. 1,0")
    p.add_argument("--sample-every", type=int, default=1)
    p.add_argument("--out")

    p = command("collide", cmd_collide, "run the stroboscopic collision model")
    p.add_argument("--gdt", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--carrier-dim", type=int, default=2)
    p.add_argument("--obs", default="")
    p.add_argument("--init")
    p.add_argument("--out")

    p = command("sweep", cmd_sweep, "scan one preset parameter")
    backend(p)
    p.add_argument("--param", choices=SWEEP_PARAMS, required=True)
    p.add_argument("--from", dest="start", type=float, required=True)
    p.add_argument("--to", dest="stop", type=float, required=True)
    p.add_argument("--points", type=int, default=11)
    p.add_argument("--emit", choices=("kappas", "occupations", "h13"), required=True)
    p.add_argument("--t", type=float, default=10.0)
    p.add_argument("--dt", type=float, default=1e-2)
    p.add_argument("--init")
    p.add_argument("--out")
    return parser


def cli_main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (PhysicalityViolation, NegativeRate) as exc:
        print(f"physicality violation: {exc}", file=sys.stderr)
        return 2
    except (CascadeError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main():
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
