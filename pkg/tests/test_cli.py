import json

import numpy as np
import pytest

from cascadenet.cli import cli_main
from cascadenet.network import load_network
from cascadenet.presets import mach_zehnder


def run(argv, capsys):
    code = cli_main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_validate_preset_and_file(tmp_path, capsys):
    assert run(["validate", "preset:three-node"], capsys)[0] == 0
    path = tmp_path / "net.json"
    path.write_text(mach_zehnder(0.1, 0.2, phi=0.3).to_json())
    assert run(["validate", str(path)], capsys)[:2] == (0, "ok\n")


def test_validate_malformed(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text('{"nodes": [], "channels": [], "extra": 1}')
    code, _, err = run(["validate", str(path)], capsys)
    assert code == 1 and "extra" in err
    path.write_text("{oops")
    code, _, err = run(["validate", str(path)], capsys)
    assert code == 1 and "$" in err
    data = mach_zehnder().to_dict()
    data["stages"][0]["elements"][0]["bs"]["epsilon"] = 2.0
    path.write_text(json.dumps(data))
    code, _, err = run(["validate", str(path)], capsys)
    assert code == 1 and "stages[0].elements[0].epsilon" in err


def test_unknown_preset(capsys):
    assert run(["validate", "preset:nope"], capsys)[0] == 1


def test_gksl_decoupled_kappas(capsys):
    code, out, _ = run(["gksl", "preset:mach-zehnder", "--phi", "0", "--eps", "0.5"], capsys)
    data = json.loads(out)
    assert code == 0
    assert np.allclose(data["eigenvalues"], [1, 1, 0, 0], atol=1e-12)
    assert data["provenance"]["network_sha256"] == mach_zehnder().fingerprint()


def test_coefficients_csv_deterministic(tmp_path, capsys):
    outs = []
    for i in range(2):
        target = tmp_path / f"c{i}.csv"
        assert run(["coefficients", "preset:mach-zehnder", "--n1", "0.3", "--phi", "1", "--out", str(target)],
                   capsys)[0] == 0
        outs.append(target.read_bytes())
    assert outs[0] == outs[1]
    assert outs[0].startswith(b"kind,m,m_prime,k,k_prime,l,l_prime,re,im\n")


def test_fock_backend_guard_exit_code(capsys):
    code, _, err = run(["coefficients", "preset:mach-zehnder", "--n1", "0.5", "--backend", "fock",
                        "--carrier-dim", "8"], capsys)
    assert code == 1 and "tail" in err


def test_evolve_and_forms(capsys):
    args = ["evolve", "preset:mach-zehnder", "--phi", "1.0", "--t", "0.2", "--dt", "0.01",
            "--obs", "n1,n2", "--init", "1,0"]
    code, gksl, _ = run(args, capsys)
    assert code == 0
    code, coeff, _ = run(args + ["--form", "coeff"], capsys)
    rows_a = np.loadtxt(gksl.splitlines()[1:], delimiter=",")
    rows_b = np.loadtxt(coeff.splitlines()[1:], delimiter=",")
    assert np.allclose(rows_a[:, :3], rows_b[:, :3], atol=1e-10)
    assert gksl.splitlines()[0] == "t,n1,n2,trace_dev,herm_dev,min_eig"


def test_evolve_bad_observable(capsys):
    assert run(["evolve", "preset:mach-zehnder", "--t", "0.1", "--obs", "n3"], capsys)[0] == 1


def test_collide(capsys):
    code, out, _ = run(["collide", "preset:mach-zehnder", "--gdt", "0.1", "--steps", "3", "--obs", "n1",
                        "--init", "1,0"], capsys)
    lines = out.splitlines()
    assert code == 0 and len(lines) == 5 and lines[0].startswith("t,n1,")
    assert run(["collide", "preset:mach-zehnder", "--gdt", "0.9", "--steps", "3"], capsys)[0] == 1


def test_sweep_h13(capsys, monkeypatch):
    monkeypatch.setenv("CASCADENET_THREADS", "2")
    code, out, _ = run(["sweep", "preset:three-node", "--param", "phi", "--from", "0", "--to",
                        str(np.pi), "--points", "5", "--emit", "h13"], capsys)
    rows = np.loadtxt(out.splitlines()[1:], delimiter=",")
    assert code == 0
    assert np.allclose(rows[:, 1], np.abs(np.sin(rows[:, 0] / 2)) / 2, atol=1e-10)
    assert rows[0, 1] < 1e-12


def test_sweep_kappas_and_occupations(capsys):
    code, out, _ = run(["sweep", "preset:mach-zehnder", "--param", "n1", "--from", "0", "--to", "0.5",
                        "--points", "2", "--emit", "occupations", "--t", "12", "--dt", "0.02",
                        "--kind", "cavity", "--dim", "12"], capsys)
    assert code == 0
    rows = np.loadtxt(out.splitlines()[1:], delimiter=",")
    assert rows[1, 1] == pytest.approx(0.5, abs=1e-3)
    code, out, _ = run(["sweep", "preset:mach-zehnder", "--param", "eps", "--from", "0", "--to", "1",
                        "--points", "3", "--emit", "kappas"], capsys)
    assert code == 0 and out.splitlines()[0] == "eps,kappa1,kappa2,kappa3,kappa4"


def test_sweep_requires_preset(tmp_path, capsys):
    path = tmp_path / "net.json"
    path.write_text(mach_zehnder().to_json())
    assert run(["sweep", str(path), "--param", "phi", "--from", "0", "--to", "1", "--emit", "h13"],
               capsys)[0] == 1


def test_preset_json_round_trip(tmp_path):
    path = tmp_path / "mz.json"
    net = mach_zehnder(0.3, 0.4, 0.2, 0.7, 1.5, kind="cavity", dim=4)
    path.write_text(net.to_json())
    assert load_network(str(path)) == net


def test_unstable_step_exits_with_physicality_code(capsys):
    code, _, err = run(["evolve", "preset:mach-zehnder", "--kind", "cavity", "--dim", "6", "--n1", "1",
                        "--n2", "1", "--dt", "1.0", "--t", "5"], capsys)
    assert code == 2 and "min eigenvalue" in err
