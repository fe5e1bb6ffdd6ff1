import json
from pathlib import Path

import jsonschema
import numpy as np
import pytest

from coupledheat import cli

SCHEMA_DIR = Path(cli.__file__).parent / "schemas"


def write_config(tmp_path, text, name="run.toml"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


KIRCHHOFF3 = """
[scenario]
preset = "kirchhoff"
m = 3

[simulation]
n_elements = 12
t_end = 0.3
n_random = 5
witness_n_random = 20
seed = 7
decay_dt = 0.01
decay_t_end = 1.5
"""

ANTIK3 = KIRCHHOFF3.replace('"kirchhoff"', '"anti_kirchhoff"')


def load_schema(name):
    return json.loads((SCHEMA_DIR / name).read_text())


# ---------------------------------------------------------------------------
# analyze


def test_analyze_kirchhoff_predictions(tmp_path):
    cfg = write_config(tmp_path, KIRCHHOFF3)
    out = tmp_path / "out"
    assert cli.main(["analyze", "--config", cfg, "--out", str(out)]) == 0
    data = json.loads((out / "predictions.json").read_text())
    jsonschema.validate(data, load_schema("predictions.schema.json"))
    by_prop = {p["property"]: p for p in data["predictions"]}
    assert by_prop["positivity"]["predicted"] is True
    assert by_prop["linf_contraction"]["predicted"] is True


def test_analyze_anti_kirchhoff_m3(tmp_path):
    cfg = write_config(tmp_path, ANTIK3)
    out = tmp_path / "out"
    assert cli.main(["analyze", "--config", cfg, "--out", str(out)]) == 0
    data = json.loads((out / "predictions.json").read_text())
    by_prop = {p["property"]: p for p in data["predictions"]}
    assert by_prop["linf_contraction"]["predicted"] is False
    assert by_prop["positivity"]["predicted"] is False


def test_malformed_config_exits_2_without_output(tmp_path):
    cfg = write_config(tmp_path, "[scenario\npreset == ???")
    out = tmp_path / "out"
    assert cli.main(["analyze", "--config", cfg, "--out", str(out)]) == 2
    assert not (out / "predictions.json").exists()


def test_invalid_field_exits_2(tmp_path):
    cfg = write_config(tmp_path, """
[scenario]
preset = "kirchhoff"
m = -3
""")
    assert cli.main(["analyze", "--config", cfg,
                     "--out", str(tmp_path / "o")]) == 2


def test_inline_scenario_roundtrip(tmp_path):
    cfg = write_config(tmp_path, """
[scenario]
m = 2
name = "coordinate"
diffusion = [[1.0, 0.0], [0.0, 1.0]]

[scenario.left]
y = [[0.0, 1.0]]
s = [[0.0, 0.0], [0.0, 0.0]]

[scenario.right]
y = [[0.0, 1.0]]

[simulation]
n_elements = 8
""")
    out = tmp_path / "out"
    assert cli.main(["analyze", "--config", cfg, "--out", str(out)]) == 0
    data = json.loads((out / "predictions.json").read_text())
    assert data["scenario"]["m"] == 2
    by_prop = {p["property"]: p for p in data["predictions"]}
    assert by_prop["positivity"]["predicted"] is True


# ---------------------------------------------------------------------------
# verify


def test_verify_kirchhoff_exit0_and_outputs(tmp_path):
    cfg = write_config(tmp_path, KIRCHHOFF3)
    out = tmp_path / "out"
    assert cli.main(["verify", "--config", cfg, "--out", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    jsonschema.validate(report, load_schema("report.schema.json"))
    assert report["summary"].get("refuted_prediction", 0) == 0
    csvs = sorted(out.glob("trajectory_*.csv"))
    assert csvs
    header = csvs[0].read_text().splitlines()[0]
    assert header == "t,node_x,component,value"
    row = csvs[0].read_text().splitlines()[1].split(",")
    assert len(row) == 4
    float(row[0]), float(row[1]), int(row[2]), float(row[3])


def test_verify_mis_specified_predictions_exit1(tmp_path):
    cfg = write_config(tmp_path, ANTIK3)
    out1 = tmp_path / "p"
    assert cli.main(["analyze", "--config", cfg, "--out", str(out1)]) == 0
    preds = json.loads((out1 / "predictions.json").read_text())
    for row in preds["predictions"]:
        if row["property"] == "linf_contraction":
            row["predicted"] = True  # deliberately wrong
    bad = tmp_path / "bad_predictions.json"
    bad.write_text(json.dumps(preds))
    out2 = tmp_path / "out"
    code = cli.main(["verify", "--config", cfg, "--out", str(out2),
                     "--predictions", str(bad)])
    assert code == 1
    report = json.loads((out2 / "report.json").read_text())
    assert report["summary"]["refuted_prediction"] >= 1


def test_verify_dirichlet_decay_csv_slope(tmp_path):
    cfg = write_config(tmp_path, """
[scenario]
preset = "dirichlet"
m = 1

[simulation]
n_elements = 64
decay_dt = 0.002
decay_t_end = 1.2

[targets]
properties = ["stability"]
""")
    out = tmp_path / "out"
    assert cli.main(["verify", "--config", cfg, "--out", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    rate = report["rows"][0]["observation"]["evidence"]["rate"]
    assert rate == pytest.approx(np.pi**2, rel=0.02)
    # the trajectory CSV reproduces the same decay
    csv = next(out.glob("trajectory_*decay.csv"))
    lines = csv.read_text().splitlines()[1:]
    data = np.array([[float(v) for v in line.split(",")]
                     for line in lines])
    times = np.unique(data[:, 0])
    norms = []
    for t in times:
        vals = data[data[:, 0] == t, 3]
        norms.append(np.linalg.norm(vals) / np.sqrt(len(vals)))
    norms = np.array(norms)
    keep = (times >= times[-1] / 2) & (norms > 1e-14)
    slope = np.polyfit(times[keep], np.log(norms[keep]), 1)[0]
    assert -slope == pytest.approx(np.pi**2, rel=0.03)


def test_verify_singular_matrix_exit3(tmp_path):
    cfg = write_config(tmp_path, """
[scenario]
m = 1
potential = -27.0

[scenario.left]
y = "zero"

[scenario.right]
y = "zero"

[simulation]
n_elements = 2
dt = 0.1
t_end = 0.4

[targets]
properties = ["positivity"]
""")
    assert cli.main(["verify", "--config", cfg,
                     "--out", str(tmp_path / "o")]) == 3


# ---------------------------------------------------------------------------
# spectrum


def test_spectrum_dirichlet_eigenvalues(tmp_path):
    cfg = write_config(tmp_path, """
[scenario]
preset = "dirichlet"
m = 1

[simulation]
n_elements = 64
mass = "consistent"
""")
    out = tmp_path / "out"
    assert cli.main(["spectrum", "--config", cfg, "--out", str(out),
                     "-k", "3"]) == 0
    lines = (out / "eigenvalues.csv").read_text().splitlines()[1:]
    lams = [float(line.split(",")[1]) for line in lines]
    for k, lam in enumerate(lams, start=1):
        assert lam == pytest.approx((k * np.pi) ** 2, rel=0.01)
    vec_lines = (out / "eigenvectors.csv").read_text().splitlines()
    assert vec_lines[0] == "node_x,component,vec_0,vec_1,vec_2"
    assert len(vec_lines) == 1 + 65


def test_spectrum_kirchhoff_interleaves(tmp_path):
    cfg = write_config(tmp_path, """
[scenario]
preset = "kirchhoff"
m = 2

[simulation]
n_elements = 16
""")
    out = tmp_path / "out"
    assert cli.main(["spectrum", "--config", cfg, "--out", str(out),
                     "-k", "5"]) == 0
    lines = (out / "eigenvalues.csv").read_text().splitlines()[1:]
    lams = np.array([float(line.split(",")[1]) for line in lines])
    # Neumann 0 mode, then the shared Neumann/Dirichlet pair near pi^2
    assert abs(lams[0]) < 1e-9
    assert lams[1] == pytest.approx(lams[2], rel=1e-9)


def test_spectrum_neumann_zero_mode(tmp_path):
    cfg = write_config(tmp_path, """
[scenario]
preset = "neumann"
m = 1
""")
    out = tmp_path / "out"
    assert cli.main(["spectrum", "--config", cfg, "--out", str(out),
                     "-k", "1"]) == 0
    line = (out / "eigenvalues.csv").read_text().splitlines()[1]
    assert abs(float(line.split(",")[1])) < 1e-9


def test_spectrum_nonsymmetric_exit4(tmp_path):
    cfg = write_config(tmp_path, """
[scenario]
m = 2

[scenario.left]
s = [[0.0, 1.0], [-1.0, 0.0]]

[scenario.right]
s = [[0.0, 0.0], [0.0, 0.0]]
""")
    assert cli.main(["spectrum", "--config", cfg,
                     "--out", str(tmp_path / "o")]) == 4


# ---------------------------------------------------------------------------
# presets and determinism


def test_presets_listing(capsys):
    assert cli.main(["presets", "--m", "2"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["kirchhoff"]["y_left_projection"] == [[0.5, 0.5],
                                                         [0.5, 0.5]]
    assert payload["dirichlet"]["y_left_projection"] == [[0.0, 0.0],
                                                         [0.0, 0.0]]


def test_byte_identical_outputs(tmp_path):
    cfg = write_config(tmp_path, KIRCHHOFF3)
    outs = []
    for sub in ("a", "b"):
        out = tmp_path / sub
        assert cli.main(["verify", "--config", cfg, "--out", str(out)]) == 0
        blobs = {p.name: p.read_bytes() for p in sorted(out.iterdir())}
        outs.append(blobs)
    assert outs[0].keys() == outs[1].keys()
    for name in outs[0]:
        assert outs[0][name] == outs[1][name], name


def test_seed_override_changes_report(tmp_path):
    cfg = write_config(tmp_path, KIRCHHOFF3)
    texts = []
    for seed in ("7", "8"):
        out = tmp_path / f"s{seed}"
        assert cli.main(["verify", "--config", cfg, "--out", str(out),
                         "--seed", seed]) == 0
        texts.append((out / "report.json").read_text())
    a = json.loads(texts[0])
    b = json.loads(texts[1])
    assert a["config"]["seed"] == 7 and b["config"]["seed"] == 8
