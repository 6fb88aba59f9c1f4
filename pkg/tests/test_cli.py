"""Command-line dispatcher: verbs, exit codes, output formats and round trips."""

import io
import json
import subprocess
import sys
from pathlib import Path

import pytest

from sepkahler.cli import run
from sepkahler.io import canonical

EXAMPLES = Path(__file__).resolve().parent.parent / "examples"
EXAMPLE_FILES = sorted(EXAMPLES.glob("*.json"))


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run([str(a) for a in argv], stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def call_json(*argv):
    code, out, err = call(*argv)
    assert code == 0, err
    return json.loads(out)


def write(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return p


def test_example_files_present():
    names = {p.name for p in EXAMPLE_FILES}
    assert {"product_sv_3.json", "veronese2_ambitoric.json"} <= names


def test_validate_product_sv_3():
    rep = call_json("validate", EXAMPLES / "product_sv_3.json")
    assert rep["valid"] is True and rep["dimension"] == 4


@pytest.mark.parametrize("path", EXAMPLE_FILES, ids=lambda p: p.stem)
def test_every_example_validates(path):
    rep = call_json("validate", path)
    assert rep["valid"] is True
    assert rep["dimension"] == sum(rep["partition"]) + 1


def test_extremal_veronese2_ambitoric():
    rep = call_json("extremal", EXAMPLES / "veronese2_ambitoric.json")
    assert rep["extremal"] is True and "alpha" in rep


@pytest.mark.parametrize("path", EXAMPLE_FILES, ids=lambda p: p.stem)
def test_examples_are_extremal(path):
    rep = call_json("extremal", path)
    assert rep["extremal"] is True


def test_curvature_report_fields():
    rep = call_json("curvature", EXAMPLES / "veronese3_orthotoric.json")
    assert rep["extremal"] is True and "scal" in rep


def test_identities_grid_m5():
    code, out, err = call("identities", "--grid", "m<=5")
    rep = json.loads(out)
    assert code == 0 and rep["allHold"] and rep["passed"] == rep["total"] > 0


def test_identities_grid_with_spaces():
    rep = call_json("identities", "--grid", "m <= 2")
    assert rep["allHold"]


# exit codes

def test_missing_file_exit_2(tmp_path):
    code, _, err = call("validate", tmp_path / "nope.json")
    assert code == 2 and "cannot read" in err


def test_bad_json_exit_2(tmp_path):
    code, _, err = call("validate", write(tmp_path, "bad.json", "{not json"))
    assert code == 2 and "invalid JSON" in err


def test_non_object_exit_2(tmp_path):
    code, _, _ = call("validate", write(tmp_path, "list.json", [1, 2]))
    assert code == 2


def test_unknown_verb_exit_2():
    assert call("frobnicate", "x.json")[0] == 2


def test_bad_grid_exit_2():
    assert call("identities", "--grid", "n<5")[0] == 2


def test_missing_input_exit_2():
    assert call("validate")[0] == 2


def test_extremal_needs_profiles(tmp_path):
    data = json.loads((EXAMPLES / "product_sv_3.json").read_text())
    del data["profiles"]
    assert call("extremal", write(tmp_path, "np.json", data))[0] == 2


def test_invalid_custom_structure_exit_1(tmp_path):
    vals = iter(range(2, 40))
    gammas = [
        {"excluded": j, "coeffs": [{"degrees": [a, b], "c": str(next(vals) ** 2)} for a in (0, 1) for b in (0, 1)]}
        for j in (1, 2, 3)
    ]
    spec = {"kind": "custom", "partition": [1, 1, 1], "gammas": gammas}
    code, _, err = call("validate", write(tmp_path, "custom.json", spec))
    assert code == 1
    assert "rank" in err and "expected 4" in err


def test_beta_outside_image_exit_1(tmp_path):
    data = json.loads((EXAMPLES / "segre2_twisted.json").read_text())
    data["beta"] = {"coeffs": [{"degrees": [1, 1], "c": "1"}]}
    code, _, err = call("validate", write(tmp_path, "mixed.json", data))
    assert code == 1 and err


def test_vanishing_factor_exit_1(tmp_path):
    data = {"kind": "veronese", "m": 2, "beta": {"coeffs": [{"degrees": [0], "c": "1"}]},
            "profiles": [["0", "0", "0", "0", "1"], ["0", "0", "0", "0", "1"]]}
    p = write(tmp_path, "v.json", data)
    assert call("extremal", p)[0] == 0
    assert call("oracle", p, "--points", "0")[0] == 2


# formats

def test_text_output():
    code, out, _ = call("validate", EXAMPLES / "product_sv_3.json", "--text")
    assert code == 0
    assert "valid" in out and "dimension" in out and not out.lstrip().startswith("{")


def test_out_file(tmp_path):
    target = tmp_path / "rep.json"
    code, out, _ = call("validate", EXAMPLES / "product_sv_3.json", "--out", target)
    assert code == 0 and out == ""
    assert json.loads(target.read_text())["dimension"] == 4


def test_json_output_is_canonical():
    _, out, _ = call("solve", EXAMPLES / "veronese2_ambitoric.json")
    assert out == canonical(json.loads(out))


# oracle

def test_oracle_seed_determinism():
    a = call_json("oracle", EXAMPLES / "segre2_twisted.json", "--seed", 7, "--points", 5)
    b = call_json("oracle", EXAMPLES / "segre2_twisted.json", "--seed", 7, "--points", 5)
    a.pop("seconds", None)
    b.pop("seconds", None)
    assert a == b and a["seed"] == 7


@pytest.mark.parametrize("path", EXAMPLE_FILES, ids=lambda p: p.stem)
def test_oracle_on_examples(path):
    rep = call_json("oracle", path, "--points", 10)
    assert rep["points"] == 10 and rep["maxRelErr"] < 1e-3


# solve

@pytest.mark.parametrize("path", EXAMPLE_FILES, ids=lambda p: p.stem)
def test_solve_emits_families(path):
    rep = call_json("solve", path)
    assert "betaClass" in rep and "degreeProfile" in rep
    assert rep["families"] or rep.get("unsupported")


# transform

MAPS = {
    "veronese2_ambitoric.json": [[[2, 1], [1, 3]]],
    "segre2_twisted.json": [[[1, 2], [0, 1]], [[3, 0], [1, 1]]],
    "product_sv_3.json": [[[2, 1], [1, 1]], [[1, -1], [2, 3]]],
}


@pytest.mark.parametrize("name", sorted(MAPS))
def test_transform_round_trip(name, tmp_path):
    src = EXAMPLES / name
    maps = json.dumps(MAPS[name])
    fwd = tmp_path / "fwd.json"
    back = tmp_path / "back.json"
    assert call("transform", src, "--maps", maps, "--out", fwd)[0] == 0
    assert call("transform", fwd, "--maps", maps, "--inverse", "--out", back)[0] == 0
    orig = call_json("transform", src, "--maps", json.dumps([[[1, 0], [0, 1]]] * len(MAPS[name])))
    assert canonical(json.loads(back.read_text())) == canonical(orig)
    assert call_json("extremal", fwd)["extremal"] is True


def test_transform_needs_maps():
    assert call("transform", EXAMPLES / "segre2_twisted.json")[0] == 2


def test_transform_singular_exit_1():
    code, _, _ = call("transform", EXAMPLES / "veronese2_ambitoric.json", "--maps", "[[[1,2],[2,4]]]")
    assert code == 1


def test_installed_entry_point():
    proc = subprocess.run([sys.executable, "-m", "sepkahler.cli", "validate", str(EXAMPLES / "product_sv_3.json")],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["dimension"] == 4
