"""Manifest validation, CLI determinism, exit codes."""

import json
import math

import numpy as np
import pytest

from hml import cli
from hml.manifest import ManifestError, build_metric, validate


def write(tmp_path, name, doc):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


GOOD_SF = {"metric": {"family": "space_form", "a": 1.0, "b": 0.25, "dim": 3},
           "analysis": {"command": "curvature", "center": [0.1, 0.0, -0.2]}}


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

def test_validate_accepts_good():
    mf = validate(GOOD_SF)
    assert mf.command == "curvature"


@pytest.mark.parametrize("mutate,why", [
    (lambda d: d.pop("metric"), "metric"),
    (lambda d: d["metric"].update(extra=1), "unknown keys"),
    (lambda d: d["analysis"].update(command="fly"), "command"),
    (lambda d: d["analysis"].update(bogus=2), "unknown keys"),
    (lambda d: d.update(top=1), "unknown keys"),
])
def test_validate_rejects(mutate, why):
    doc = json.loads(json.dumps(GOOD_SF))
    mutate(doc)
    with pytest.raises(ManifestError, match=why):
        validate(doc)


def test_validate_deform_block():
    doc = {"metric": {"family": "sphere", "dim": 3,
                      "deform": {"psi": {"kind": "poly", "coeffs": [1, 0.25]}}},
           "analysis": {"command": "check_harmonic"}}
    validate(doc)
    doc["metric"]["deform"]["psi"]["kind"] = "spline"
    with pytest.raises(ManifestError, match="kind"):
        validate(doc)
    doc["metric"]["deform"]["psi"] = {"kind": "poly", "coeffs": []}
    with pytest.raises(ManifestError, match="coeffs"):
        validate(doc)


def test_build_metric_deformed_sphere():
    built = build_metric({"family": "sphere", "dim": 3,
                          "deform": {"psi": {"kind": "poly",
                                             "coeffs": [1, 0.25]}}})
    assert built.deformed
    # the sphere family interprets poly in the squared pole height:
    # at the pole (r = 0) the factor is psi(cos^2 0) = 1.25
    assert built.psi(0.0) == pytest.approx(1.25)
    assert built.psi((math.pi / 2) ** 2) == pytest.approx(1.0)


def test_build_metric_trivial_density_fs():
    built = build_metric({"family": "fubini_study", "cdim": 2,
                          "deform": {"psi": {"kind": "trivial-density"}}})
    assert built.deformed and built.trivializer_base == "fubini_study"
    assert built.psi(0.0) == pytest.approx(1.0, abs=1e-12)


# ---------------------------------------------------------------------------
# commands end-to-end
# ---------------------------------------------------------------------------

def run_cli(args):
    return cli.main(args)


def test_curvature_command_and_determinism(tmp_path):
    mpath = write(tmp_path, "m.json", GOOD_SF)
    out1, out2 = tmp_path / "o1", tmp_path / "o2"
    assert run_cli(["--manifest", mpath, "--out", str(out1)]) == 0
    assert run_cli(["--manifest", mpath, "--out", str(out2)]) == 0
    b1 = (out1 / "curvature.json").read_bytes()
    b2 = (out2 / "curvature.json").read_bytes()
    assert b1 == b2
    doc = json.loads(b1)
    assert doc["kappa_min"] == pytest.approx(1.0, abs=1e-9)
    assert doc["kappa_max"] == pytest.approx(1.0, abs=1e-9)


def test_curvature_extremes_fubini_study(tmp_path):
    doc = {"metric": {"family": "fubini_study", "cdim": 2},
           "analysis": {"command": "curvature"}}
    mpath = write(tmp_path, "fs.json", doc)
    assert run_cli(["--manifest", mpath, "--out", str(tmp_path / "ofs")]) == 0
    rep = json.loads((tmp_path / "ofs" / "curvature.json").read_text())
    assert rep["kappa_min"] == pytest.approx(1.0, abs=1e-4)
    assert rep["kappa_max"] == pytest.approx(4.0, abs=1e-4)
    assert rep["einstein_defect"] < 1e-8


def test_deform_identity_psi_deterministic(tmp_path):
    doc = {"metric": {"family": "euclidean", "dim": 3,
                      "deform": {"psi": {"kind": "poly", "coeffs": [1.0]}}},
           "analysis": {"command": "deform", "steps": 250,
                        "radii": [0.3, 0.6]}}
    mpath = write(tmp_path, "id.json", doc)
    assert run_cli(["--manifest", mpath, "--out", str(tmp_path / "o1")]) == 0
    assert run_cli(["--manifest", mpath, "--out", str(tmp_path / "o2")]) == 0
    b1 = (tmp_path / "o1" / "deform.json").read_bytes()
    assert b1 == (tmp_path / "o2" / "deform.json").read_bytes()
    rep = json.loads(b1)
    rc = np.asarray(rep["density_law"]["rc"])
    assert np.allclose(rep["density_law"]["predicted"], rc ** 2, atol=1e-11)
    assert rep["density_law"]["max_abs_error"] < 1e-10


def test_curvature_euclidean_zero_report(tmp_path):
    doc = {"metric": {"family": "euclidean", "dim": 4},
           "analysis": {"command": "curvature"}}
    mpath = write(tmp_path, "m.json", doc)
    assert run_cli(["--manifest", mpath, "--out", str(tmp_path / "o")]) == 0
    rep = json.loads((tmp_path / "o" / "curvature.json").read_text())
    assert rep["kappa_min"] == 0.0 and rep["kappa_max"] == 0.0
    assert rep["scalar_curvature"] == 0.0


def test_check_harmonic_exit_codes(tmp_path):
    harmonic = {"metric": {"family": "sphere", "dim": 3,
                           "deform": {"psi": {"kind": "poly",
                                              "coeffs": [1, 0.25]}}},
                "analysis": {"command": "check_harmonic", "directions": 8,
                             "steps": 250, "radii": [0.4, 0.8]}}
    mpath = write(tmp_path, "h.json", harmonic)
    assert run_cli(["--manifest", mpath, "--out", str(tmp_path / "oh")]) == 0
    rep = json.loads((tmp_path / "oh" / "harmonicity.json").read_text())
    assert rep["verdict"] is True
    csv = (tmp_path / "oh" / "density.csv").read_text().splitlines()
    assert csv[0].startswith("# r, direction_index, theta, xi")
    assert len(csv) == 1 + 2 * 8

    not_harm = json.loads(json.dumps(harmonic))
    not_harm["analysis"]["center"] = [0.4, 0.0, 0.0]
    mpath2 = write(tmp_path, "n.json", not_harm)
    assert run_cli(["--manifest", mpath2, "--out", str(tmp_path / "on")]) == 1

    inconc = json.loads(json.dumps(harmonic))
    inconc["analysis"]["radii"] = [2.0, 3.4]   # runs past the chart
    mpath3 = write(tmp_path, "i.json", inconc)
    assert run_cli(["--manifest", mpath3, "--out", str(tmp_path / "oi")]) == 2


def test_manifest_errors_exit_3(tmp_path, capsys):
    bad = {"metric": {"family": "wat"}, "analysis": {"command": "curvature"}}
    mpath = write(tmp_path, "b.json", bad)
    assert run_cli(["--manifest", mpath, "--out", str(tmp_path)]) == 3
    assert "unknown catalog family" in capsys.readouterr().err
    assert run_cli(["--manifest", str(tmp_path / "missing.json"),
                    "--out", str(tmp_path)]) == 3


def test_expand_two_d_family(tmp_path):
    doc = {"metric": {"family": "two_d_family", "n": 7, "b": 0.1},
           "analysis": {"command": "expand"}}
    mpath = write(tmp_path, "e.json", doc)
    assert run_cli(["--manifest", mpath, "--out", str(tmp_path / "oe")]) == 0
    rep = json.loads((tmp_path / "oe" / "expansion.json").read_text())
    assert rep["analytic"] is None
    assert rep["fitted"]["H7"] == pytest.approx(0.1, abs=1e-8)
    others = [v for k, v in rep["fitted"].items() if k != "H7"]
    assert max(abs(v) for v in others) < 1e-8


def test_expand_sphere(tmp_path):
    doc = {"metric": {"family": "sphere", "dim": 3},
           "analysis": {"command": "expand", "steps": 500}}
    mpath = write(tmp_path, "s.json", doc)
    assert run_cli(["--manifest", mpath, "--out", str(tmp_path / "os")]) == 0
    rep = json.loads((tmp_path / "os" / "expansion.json").read_text())
    assert rep["analytic"]["H2"] == pytest.approx(-1 / 3, abs=1e-10)
    assert rep["fitted"]["H2"] == pytest.approx(-1 / 3, abs=1e-6)
    assert rep["residuals"]["max_abs_difference"] < 1e-5


def test_expand_euclidean_zeros(tmp_path):
    doc = {"metric": {"family": "euclidean", "dim": 4},
           "analysis": {"command": "expand", "steps": 300, "order": 6}}
    mpath = write(tmp_path, "z.json", doc)
    assert run_cli(["--manifest", mpath, "--out", str(tmp_path / "oz")]) == 0
    rep = json.loads((tmp_path / "oz" / "expansion.json").read_text())
    assert max(abs(v) for v in rep["analytic"].values()) == 0.0
    assert max(abs(rep["fitted"][f"H{k}"]) for k in range(2, 7)) < 1e-9


def test_deform_command(tmp_path):
    doc = {"metric": {"family": "euclidean", "dim": 3,
                      "deform": {"psi": {"kind": "poly", "coeffs": [0.5, 0.5]}}},
           "analysis": {"command": "deform", "steps": 400,
                        "radii": [0.3, 0.6, 0.9]}}
    mpath = write(tmp_path, "d.json", doc)
    assert run_cli(["--manifest", mpath, "--out", str(tmp_path / "od")]) == 0
    rep = json.loads((tmp_path / "od" / "deform.json").read_text())
    assert rep["density_law"]["max_abs_error"] < 1e-5
    assert rep["kappa_probe"]["min"] == pytest.approx(1.0, abs=1e-6)
    assert rep["kappa_probe"]["max"] == pytest.approx(1.0, abs=1e-6)


def test_deform_trivial_density_fs(tmp_path):
    doc = {"metric": {"family": "fubini_study", "cdim": 2,
                      "deform": {"psi": {"kind": "trivial-density",
                                         "r_max": 1.25}}},
           "analysis": {"command": "deform", "steps": 400,
                        "radii": [0.4, 0.8, 1.1]}}
    mpath = write(tmp_path, "tf.json", doc)
    assert run_cli(["--manifest", mpath, "--out", str(tmp_path / "ot")]) == 0
    rep = json.loads((tmp_path / "ot" / "deform.json").read_text())
    # trivialized density: shooting matches the rc^(m-1) prediction
    assert rep["density_law"]["max_abs_error"] < 1e-5
    shot = np.asarray(rep["density_law"]["shot"])
    rc = np.asarray(rep["density_law"]["rc"])
    assert np.max(np.abs(shot / rc ** 3 - 1.0)) < 1e-5
    blow = rep["blowup"][0]
    assert blow["length_finite"] is True
    assert blow["exponent"] == pytest.approx(4 / 3, abs=0.05)


def test_deform_requires_deform_block(tmp_path, capsys):
    doc = {"metric": {"family": "euclidean", "dim": 3},
           "analysis": {"command": "deform"}}
    mpath = write(tmp_path, "dd.json", doc)
    assert run_cli(["--manifest", mpath, "--out", str(tmp_path)]) == 3


def test_flag_overrides(tmp_path):
    harmonic = {"metric": {"family": "euclidean", "dim": 3},
                "analysis": {"command": "check_harmonic", "directions": 4,
                             "steps": 150}}
    mpath = write(tmp_path, "f.json", harmonic)
    out = tmp_path / "of"
    assert run_cli(["--manifest", mpath, "--out", str(out),
                    "--directions", "6", "--radii", "0.2,0.5"]) == 0
    rep = json.loads((out / "harmonicity.json").read_text())
    assert rep["n_directions"] == 6
    assert rep["radii"] == [0.2, 0.5]
