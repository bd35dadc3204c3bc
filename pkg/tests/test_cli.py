import csv
import io
import json
import math
import subprocess
import sys

import pytest

from densepack import io as dio
from densepack.cli import dispatch
from densepack.graph import build_delaunay
from densepack.lattices import LatticeSpec, generate


def run(argv, capsys):
    code = dispatch(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def hex_files(tmp_path, capsys):
    cfg = tmp_path / "hex.json"
    cls = tmp_path / "hex_class.json"
    code, _, _ = run(["lattice", "--family", "a2", "--m", "2", "-o", str(cfg), "--class-output", str(cls)], capsys)
    assert code == 0
    return cfg, cls


def test_lattice_roundtrip(hex_files):
    cfg, cls = hex_files
    config = dio.config_from_dict(dio.load_json(cfg))
    lat = generate(LatticeSpec("A2", 2))
    assert config.n == 4 and config.radius == 0.5
    assert (config.basis.vectors == lat.basis.vectors).all()
    klass = dio.class_from_dict(dio.load_json(cls))
    assert klass.to_dict()["adjacency"] == lat.graph_class.to_dict()["adjacency"]
    assert (cfg.parent / (cfg.name + ".manifest.json")).exists()
    # re-emitting the parsed config gives the same data
    assert dio.config_to_dict(config) == {k: v for k, v in json.loads(cfg.read_text()).items() if k != "manifest"}


def test_delaunay_roundtrip(hex_files, tmp_path, capsys):
    cfg, _ = hex_files
    out = tmp_path / "graph.json"
    assert run(["delaunay", "--input", str(cfg), "-o", str(out)], capsys)[0] == 0
    g = dio.graph_from_dict(dio.load_json(out))
    config = dio.config_from_dict(dio.load_json(cfg))
    ref = build_delaunay(config.basis, config.centers, config.radius)
    assert g.n == ref.n and g.edges == ref.edges
    assert dio.graph_to_dict(g) == dio.graph_to_dict(ref)


def test_flux_csv(capsys):
    code, out, _ = run(["flux", "--d", "2", "--p", "2", "--delta", "0.01,1", "--method", "quad"], capsys)
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["delta", "value"]
    assert float(rows[2][1]) == pytest.approx(math.pi / 2, rel=1e-10)
    code, out, _ = run(["flux", "--d", "2", "--p", "2", "--delta", "0.01"], capsys)
    assert float(list(csv.reader(io.StringIO(out)))[1][1]) == pytest.approx(10 * math.pi, rel=1e-14)


def test_flux_regular_regime_is_input_error(capsys):
    code, _, err = run(["flux", "--d", "4", "--p", "2", "--delta", "0.1"], capsys)
    assert code == 1
    assert "bounded" in err


def test_energy_and_bounds(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    lat = generate(LatticeSpec("A2", 3))
    cfg.write_text(dio.dumps(dio.config_to_dict(lat.config.with_radius(0.5 - 5e-5))))
    code, out, _ = run(["energy", "--config", str(cfg), "--p", "2", "--xi", "0,1",
                        "--strength", str(2 / math.sqrt(3))], capsys)
    assert code == 0
    rep = json.loads(out)
    assert rep["sigma"] > 0
    code, out, _ = run(["energy", "--config", str(cfg), "--p", "2"], capsys)
    both = json.loads(out)
    assert len(both["reports"]) == 2
    # the hexagonal lattice is isotropic
    assert both["relative_spread"] < 1e-9
    code, out, _ = run(["bounds", "--config", str(cfg), "--p", "2", "--xi", "0,1"], capsys)
    assert code == 0
    assert abs(json.loads(out)["equality_gap"]) <= 1e-9


def test_energy_overlap_names_pair(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"basis": [[1, 0], [0, 1]], "centers": [[0, 0], [0.3, 0]], "radius": 0.2}))
    code, _, err = run(["energy", "--config", str(cfg), "--p", "2"], capsys)
    assert code == 1
    assert "0" in err and "1" in err and "overlap" in err.lower()


def test_optimize_and_errors(hex_files, tmp_path, capsys):
    _, cls = hex_files
    basis = tmp_path / "b.json"
    basis.write_text(json.dumps({"basis": [[2, 0], [1, math.sqrt(3)]]}))
    code, out, _ = run(["optimize", "--class", str(cls), "--basis", str(basis), "--restarts", "2"], capsys)
    assert code == 0
    rep = json.loads(out)
    assert rep["packing"]["density"] == pytest.approx(math.pi / (2 * math.sqrt(3)), abs=1e-12)
    assert rep["spread"]["consistent"]

    bad = tmp_path / "disconnected.json"
    bad.write_text(json.dumps({"n": 2, "adjacency": [[{"j": 0, "shift": [1, 0]}, {"j": 0, "shift": [-1, 0]}],
                                                     [{"j": 1, "shift": [0, 1]}, {"j": 1, "shift": [0, -1]}]]}))
    code, _, err = run(["optimize", "--class", str(bad), "--basis", str(basis)], capsys)
    assert code == 2
    assert "rank" in err or "disconnected" in err

    code, _, err = run(["optimize", "--class", str(tmp_path / "missing.json"), "--basis", str(basis)], capsys)
    assert code == 1


def test_pack_scan(hex_files, tmp_path, capsys):
    _, cls = hex_files
    scan = tmp_path / "scan.json"
    scan.write_text(json.dumps({"bases": [[[2, 0], [1, math.sqrt(3)]], [[2, 0], [0.8, 2.0]]]}))
    code, out, _ = run(["pack", "--class", str(cls), "--basis-scan", str(scan)], capsys)
    assert code == 0
    rep = json.loads(out)
    assert len(rep["entries"]) == 2
    assert rep["best"]["density"] == pytest.approx(math.pi / (2 * math.sqrt(3)), abs=1e-12)


def test_percolation_cli(hex_files, capsys):
    cfg, _ = hex_files
    code, out, _ = run(["percolation", "--config", str(cfg)], capsys)
    assert code == 0
    rep = json.loads(out)
    assert rep["winding"] == [True, True]
    assert rep["densify_hints"] == []


def test_bad_arguments(capsys):
    assert run(["flux", "--d", "2"], capsys)[0] == 1
    assert run(["nonsense"], capsys)[0] == 1


def test_deterministic_outputs(tmp_path, capsys):
    a, b = tmp_path / "a" / "out.json", tmp_path / "b" / "out.json"
    for path in (a, b):
        path.parent.mkdir()
        assert run(["lattice", "--family", "fcc", "-o", str(path)], capsys)[0] == 0
    assert a.read_bytes() == b.read_bytes()
    # the sidecar manifests carry the run-specific part
    assert json.loads((a.parent / "out.json.manifest.json").read_text())["command"][1] == "lattice"


def test_console_script_runs(tmp_path):
    out = tmp_path / "v.json"
    proc = subprocess.run([sys.executable, "-m", "densepack.cli", "verify", "-o", str(out)],
                          capture_output=True, text=True, timeout=300)
    assert proc.returncode == 0, proc.stdout + proc.stderr
    data = json.loads(out.read_text())
    assert all(c["passed"] for c in data["checks"])


def test_lattice_gap_option(tmp_path, capsys):
    cfg = tmp_path / "hex.json"
    assert run(["lattice", "--family", "a2", "--m", "3", "--gap", "1e-4", "-o", str(cfg)], capsys)[0] == 0
    config = dio.config_from_dict(dio.load_json(cfg))
    assert config.radius == pytest.approx(0.5 - 0.5e-4, rel=1e-15)
    code, out, _ = run(["bounds", "--config", str(cfg), "--p", "3", "--xi", "0,1"], capsys)
    assert code == 0 and abs(json.loads(out)["equality_gap"]) <= 1e-9
    assert run(["lattice", "--family", "a2", "--gap", "-1"], capsys)[0] == 1
