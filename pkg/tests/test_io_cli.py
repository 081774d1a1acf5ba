import json
import os
import subprocess
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from hilbertgeom import cli
from hilbertgeom import convexity as C
from hilbertgeom.body import BasedBody, ellipse, gauge
from hilbertgeom.errors import InvalidInputError, NumericalFailure
from hilbertgeom.io import body_from_spec, dump_body, load_body
from hilbertgeom.metrics import hilbert_distance

BODIES = Path(__file__).resolve().parents[1] / "bodies"


def run(args, capsys):
    code = cli.main([str(a) for a in args])
    out = capsys.readouterr()
    return code, out.out, out.err


# -- body files ------------------------------------------------------------------


@pytest.mark.parametrize("path", sorted(BODIES.glob("*.json")), ids=lambda p: p.stem)
def test_sample_bodies_load_and_round_trip(path, tmp_path):
    bb = load_body(path)
    dump_body(bb, tmp_path / "copy.json")
    again = load_body(tmp_path / "copy.json")
    assert np.allclose(again.basepoint, bb.basepoint)
    V = np.eye(bb.dim)
    for v in np.vstack([V, -V, V.sum(0)]):
        assert gauge(again, v) == pytest.approx(gauge(bb, v), rel=1e-12)


def test_spec_basepoint_and_transform():
    body, bp = body_from_spec({"type": "ellipse", "semi_axes": [1, 1], "basepoint": [0.5, 0],
                               "transform": {"matrix": [[2, 0], [0, 1]], "translation": [1, 0]}})
    assert np.allclose(bp, [0.5, 0])
    assert np.allclose(body.center, [1, 0])
    assert gauge(BasedBody(body, [1, 0]), [2, 0]) == pytest.approx(1.0)


def test_ellipse_shape_field_matches_semi_axes():
    a, _ = body_from_spec({"type": "ellipse", "shape": [[4, 0], [0, 1]]})
    b = ellipse((2, 1))
    assert hilbert_distance(a, [0, 0], [1, 0.5]) == pytest.approx(hilbert_distance(b, [0, 0], [1, 0.5]))


@pytest.mark.parametrize("spec", [
    {"type": "hexagon"},
    {"semi_axes": [1, 1]},
    {"type": "pball"},
    {"type": "pball", "p": 0.5},
    {"type": "polygon", "vertices": [[0, 0], [0, 1], [1, 0]]},
    {"type": "ellipse", "semi_axes": "wide"},
    {"type": "ellipse", "transform": {"matrix": [[1, 0], [1, 0]]}},
    {"type": "ellipse", "transform": [1, 2]},
    {"type": "implicit-poly", "terms": [[1, [2, 0]], [1, [0, 2]], [-1, [0, 0]]]},
    [1, 2],
])
def test_bad_specs_rejected(spec):
    with pytest.raises(InvalidInputError):
        body_from_spec(spec)


def test_load_errors(tmp_path):
    with pytest.raises(InvalidInputError):
        load_body(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(InvalidInputError):
        load_body(bad)
    outside = tmp_path / "outside.json"
    outside.write_text(json.dumps({"type": "ellipse", "basepoint": [3, 0]}))
    with pytest.raises(InvalidInputError):
        load_body(outside)


# -- CLI examples and exit codes ----------------------------------------------------------


def test_modulus_disk(capsys):
    code, out, _ = run(["modulus", "--body", BODIES / "disk.json", "--eps", "1.0"], capsys)
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "eps,delta,method"
    eps, delta, method = lines[1].split(",")
    assert float(delta) == pytest.approx(1 - np.sqrt(3) / 2, abs=1e-10) and method == "bruteforce"
    # 12 significant digits
    assert delta == f"{1 - np.sqrt(3) / 2:.12g}"


@pytest.mark.parametrize("name", ["square", "triangle"])
@pytest.mark.parametrize("cmd", ["verify-theorem", "verify-corollary"])
def test_polygons_rejected_with_exit_2(name, cmd, capsys):
    code, out, err = run([cmd, "--body", BODIES / f"{name}.json"], capsys)
    assert code == 2 and "strict-convexity" in err and out == ""


def test_dual_index(capsys):
    code, out, _ = run(["dual-index", "--alpha", "2"], capsys)
    assert code == 0 and out.splitlines()[1] == "2,2"
    code, _, err = run(["dual-index", "--alpha", "3"], capsys)
    assert code == 2 and "alpha" in err


def test_verify_pass_field(capsys, tmp_path):
    out = tmp_path / "v.json"
    code, _, _ = run(["verify-theorem", "--body", BODIES / "disk_offset.json", "--eps-steps", "5",
                      "--samples", "128", "--format", "json", "--out", out], capsys)
    doc = json.loads(out.read_text())
    assert code == 0 and doc["pass"] is True
    assert doc["columns"] == ["eps", "delta", "bound", "margin"]
    assert all(r["margin"] >= -1e-9 for r in doc["rows"])
    assert len(doc["input_digest"]) == 64


def test_verification_failure_exit_1(monkeypatch, capsys):
    real = C.theorem_constants

    def inflated(bb, *a, **k):
        tc = real(bb, *a, **k)
        return replace(tc, C=10 * tc.C0)

    monkeypatch.setattr(C, "theorem_constants", inflated)
    code, out, err = run(["verify-theorem", "--body", BODIES / "disk.json", "--eps", "0.5,1",
                          "--samples", "64"], capsys)
    assert code == 1 and "verification failed" in err
    assert all(float(line.split(",")[3]) < 0 for line in out.strip().splitlines()[1:])


def test_numerical_failure_exit_3(monkeypatch, capsys):
    def broken(*a, **k):
        raise NumericalFailure("solver diverged")

    monkeypatch.setattr(C, "modulus_curve", broken)
    code, _, err = run(["modulus", "--body", BODIES / "disk.json", "--eps", "0.5"], capsys)
    assert code == 3 and "diverged" in err


def test_invalid_inputs_exit_2(capsys, tmp_path):
    disk_json = BODIES / "disk.json"
    cases = [
        ["dist", "--body", disk_json, "--x", "0,0", "--y", "2,0"],
        ["dist", "--body", tmp_path / "none.json", "--x", "0,0", "--y", "0.1,0"],
        ["modulus", "--body", disk_json, "--eps", "2.5"],
        ["modulus", "--body", disk_json, "--eps-min", "0.5", "--eps-max", "0.1"],
        ["modulus", "--body", BODIES / "ellipsoid.json", "--eps", "0.5"],
        ["gauge", "--body", disk_json, "--vector", "1,0", "--out", tmp_path / "no" / "dir.csv"],
        ["boundary-beta", "--body", BODIES / "square.json"],
    ]
    for args in cases:
        code, _, err = run(args, capsys)
        assert code == 2, args
        assert err.startswith("error:")


def test_argparse_errors_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["modulus", "--body", "x.json", "--samples", "-3"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        cli.main(["frobnicate"])
    assert exc.value.code == 2


def test_csv_byte_identical(tmp_path, capsys):
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for p in paths:
        assert run(["ohta", "--body", BODIES / "pball4.json", "--samples", "128", "--seed", "3",
                    "--out", p], capsys)[0] == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()
    for p, w in zip(paths, ("1", "3")):
        run(["modulus", "--body", BODIES / "ellipse_rotated.json", "--eps-steps", "6", "--samples", "96",
             "--workers", w, "--out", p], capsys)
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_json_mirrors_csv(capsys):
    args = ["boundary-beta", "--body", BODIES / "disk.json", "--samples", "16"]
    _, out_csv, _ = run(args, capsys)
    _, out_json, _ = run(args + ["--format", "json"], capsys)
    doc = json.loads(out_json)
    rows = out_csv.strip().splitlines()
    assert rows[0] == "chord,dist_tangent" and len(rows) - 1 == len(doc["rows"])
    assert float(rows[1].split(",")[1]) == doc["rows"][0]["dist_tangent"]
    assert doc["summary"]["beta"] == pytest.approx(2.0, abs=1e-6)


@pytest.mark.parametrize("args,cols", [
    (["gauge", "--body", "disk_offset.json", "--vector", "1,0"], "gauge_forward,gauge_backward"),
    (["dist", "--body", "disk.json", "--x", "0,0", "--y", "0.5,0"], "distance"),
    (["finsler", "--body", "disk.json", "--x", "0.5,0", "--vector", "1,0"], "finsler,gauge_forward,gauge_backward"),
    (["fit-beta", "--body", "pball4.json", "--eps-min", "0.05", "--eps-max", "0.5", "--eps-steps", "8",
      "--samples", "128", "--method", "refined"], "beta,C,residual,n_points"),
    (["normalize", "--body", "ellipse_rotated.json", "--samples", "3"], None),
    (["normalize", "--body", "disk.json", "--xi", "0.6,0.8"], None),
    (["psi-scan", "--body", "ellipse.json", "--samples", "64"], "min_psi,max_psi,max_abs_cot,margin,flagged"),
    (["verify-corollary", "--body", "disk_offset.json", "--eps", "0.1,0.5,1.5", "--samples", "96"],
     "eps,delta,bound,margin"),
    (["ohta", "--body", "ellipse.json", "--samples", "64"], None),
    (["modulus", "--body", "ellipsoid.json", "--section", "1,0,0;0,0,1", "--eps", "1"], "eps,delta,method"),
])
def test_every_subcommand_runs(args, cols, capsys):
    args = [str(BODIES / a) if a.endswith(".json") else a for a in args]
    code, out, _ = run(args, capsys)
    assert code == 0
    header = out.splitlines()[0]
    if cols:
        assert header == cols


def test_subcommand_values(capsys):
    _, out, _ = run(["gauge", "--body", BODIES / "disk_offset.json", "--vector", "1,0"], capsys)
    assert out.splitlines()[1] == "2,0.666666666667"
    _, out, _ = run(["finsler", "--body", BODIES / "disk.json", "--x", "0.5,0", "--vector", "1,0"], capsys)
    assert out.splitlines()[1].startswith("1.33333333333,")
    _, out, _ = run(["dist", "--body", BODIES / "disk.json", "--x", "0,0", "--y", "0.5,0"], capsys)
    assert float(out.splitlines()[1]) == pytest.approx(np.log(3))
    # a planar section of the ellipsoid (4, 1, 2.25) is an ellipse: disk modulus
    _, out, _ = run(["modulus", "--body", BODIES / "ellipsoid.json", "--section", "1,0,0;0,0,1",
                     "--eps", "1"], capsys)
    assert float(out.splitlines()[1].split(",")[1]) == pytest.approx(1 - np.sqrt(3) / 2, abs=1e-9)


def test_module_entry_point():
    env = dict(os.environ, HILBERTGEOM_DISABLE_NUMBA="1")
    res = subprocess.run([sys.executable, "-m", "hilbertgeom", "dual-index", "--alpha", "1.5"],
                         capture_output=True, text=True, env=env)
    assert res.returncode == 0 and res.stdout.splitlines()[1] == "1.5,3"
