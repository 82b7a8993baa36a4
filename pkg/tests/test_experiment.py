import asyncio
import csv
import json

import pytest

from bornlab.config.experiment_config import load_experiment_config, parse_experiment_config
from bornlab.errors import ConfigError
from bornlab.main import BornLabCLI
from bornlab.services.experiment_service import ExperimentService

SPECTRUM = """
[experiment]
kind = "spectrum"
seed = 0

[model]
kind = "tfim"
n = 3
J = 0.7
h = 0.33
"""

TRAIN_DEPLOY = """
[experiment]
kind = "train_deploy"
seed = 3

[model]
kind = "tfim"
n = 2
J = 1.0
h = 0.5

[ansatz]
kind = "strongly_entangling"
layers = 1

[loss]
kind = "mmd"
sigma = 1.0

[train]
iterations = 3
seeds = [0, 1]

[truncation]
kind = "k_order"
orders = [1, 2]
"""

DLA = """
[experiment]
kind = "dla_check"

[dla]
kinds = ["matchgate", "haldane"]
ns = [3, 4]
"""


def run(text, out_dir, svg=None):
    config = parse_experiment_config(text)
    return asyncio.run(ExperimentService(threads=2).run(config, str(out_dir), svg))


def read_rows(path):
    with open(path, newline="") as handle:
        return list(csv.DictReader(handle))


@pytest.mark.parametrize(
    "text, key",
    [
        ('[experiment]\nkind = "spectrum"\n[model]\nkind = "tfim"\nsize = 3\n', "model.size"),
        ('[experiment]\nkind = "spectrum"\n[model]\nkind = "tfim"\nn = "three"\n', "model.n"),
        ('[experiment]\nkind = "spectrum"\n[model]\nkind = "tfim"\nn = true\n', "model.n"),
        ('[experiment]\nseed = 1\n', "experiment.kind"),
        ('[experiment]\nkind = "benchmark"\n', "experiment.kind"),
        ('[experiment]\nkind = "rmps_grid"\n', "grid"),
        ('[experiment]\nkind = "spectrum"\nthreads = 0\n[model]\nkind = "tfim"\n', "experiment.threads"),
        ('[optimizer]\nlr = 1\n', "optimizer"),
    ],
)
def test_parse_errors_name_the_key(text, key):
    with pytest.raises(ConfigError) as excinfo:
        parse_experiment_config(text)
    assert excinfo.value.key == key
    assert key in str(excinfo.value)


def test_target_requirements():
    base = TRAIN_DEPLOY.replace('[model]\nkind = "tfim"\nn = 2\nJ = 1.0\nh = 0.5\n', "")
    with pytest.raises(ConfigError) as excinfo:
        parse_experiment_config(base)
    assert excinfo.value.key == "model"
    with pytest.raises(ConfigError) as excinfo:
        parse_experiment_config(base + '\n[data]\nsource = "csv"\n')
    assert excinfo.value.key == "data.path"


def test_invalid_toml():
    with pytest.raises(ConfigError):
        parse_experiment_config("[experiment\nkind = 1")


def test_config_hash_tracks_content():
    first = parse_experiment_config(SPECTRUM)
    assert first.config_hash() == parse_experiment_config(SPECTRUM).config_hash()
    assert first.config_hash() != parse_experiment_config(SPECTRUM.replace("h = 0.33", "h = 0.34")).config_hash()
    assert first.as_dict()["experiment"]["output_dir"] == "results"


def test_spectrum_run_is_reproducible(tmp_path):
    first = run(SPECTRUM, tmp_path / "a")
    run(SPECTRUM, tmp_path / "b")
    names = sorted(p.split("/")[-1] for p in first)
    assert names == ["correlations.csv", "ground_state.csv", "metadata.json"]
    for name in names:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    rows = read_rows(tmp_path / "a" / "correlations.csv")
    assert len(rows) == 8
    assert (rows[0]["order"], rows[0]["subset_mask"]) == ("0", "0")
    assert float(rows[0]["value"]) == pytest.approx(1.0)
    ground = read_rows(tmp_path / "a" / "ground_state.csv")
    assert [r["bitstring"] for r in ground[:2]] == ["000", "001"]
    assert sum(float(r["probability"]) for r in ground) == pytest.approx(1.0)

    metadata = json.loads((tmp_path / "a" / "metadata.json").read_text())
    assert metadata["kind"] == "spectrum"
    assert metadata["config_hash"] == parse_experiment_config(SPECTRUM).config_hash()
    assert metadata["artifacts"] == names


def test_spectrum_svg_is_deterministic(tmp_path):
    run(SPECTRUM, tmp_path / "a", svg=True)
    run(SPECTRUM, tmp_path / "b", svg=True)
    first = (tmp_path / "a" / "correlations.svg").read_bytes()
    assert first.lstrip().startswith(b"<?xml")
    assert first == (tmp_path / "b" / "correlations.svg").read_bytes()


def test_train_deploy_artifacts(tmp_path):
    run(TRAIN_DEPLOY, tmp_path)
    deployed = read_rows(tmp_path / "deployed_kl.csv")
    assert list(deployed[0]) == ["k_or_D", "seed", "kl"]
    assert [(r["k_or_D"], r["seed"]) for r in deployed] == [("1", "0"), ("1", "1"), ("2", "0"), ("2", "1")]
    assert all(float(r["kl"]) >= 0 for r in deployed)
    history = read_rows(tmp_path / "loss_history_k2_s1.csv")
    assert [int(r["iteration"]) for r in history] == [0, 1, 2, 3]
    extras = json.loads((tmp_path / "metadata.json").read_text())["extras"]
    assert set(extras["deployed_kl_initial"]) == {"k1_s0", "k1_s1", "k2_s0", "k2_s1"}


def test_dla_check_artifacts(tmp_path):
    run(DLA, tmp_path)
    rows = read_rows(tmp_path / "dla.csv")
    assert [(r["kind"], r["n"], r["closure_dim"]) for r in rows] == [
        ("matchgate", "3", "15"),
        ("matchgate", "4", "28"),
        ("haldane", "3", "12"),
        ("haldane", "4", "60"),
    ]
    assert all(r["equal"] == "True" for r in rows)
    intersections = read_rows(tmp_path / "dla_intersections.csv")
    assert [r["n"] for r in intersections] == ["3", "4"]


def test_variance_grid_closed_forms(tmp_path):
    text = """
[experiment]
kind = "variance_grid"

[grid]
family = "matchgate_correlator"
ns = [4]
orders = [0, 1, 2]
"""
    run(text, tmp_path)
    rows = read_rows(tmp_path / "variance.csv")
    assert [r["order"] for r in rows] == ["1", "2"]
    assert float(rows[1]["closed_form"]) == pytest.approx(6 / 70)
    assert rows[1]["mc_mean"] == ""


def test_rmps_grid_renyi(tmp_path):
    text = """
[experiment]
kind = "rmps_grid"

[grid]
quantity = "renyi2"
ns = [8]
orders = [3]
chis = [1000000]
"""
    run(text, tmp_path)
    (row,) = read_rows(tmp_path / "variance.csv")
    assert float(row["closed_form"]) == pytest.approx(0.15625, rel=1e-3)


def test_pps_bench_error_vanishes_at_full_budget(tmp_path):
    text = """
[experiment]
kind = "pps_bench"
seed = 4

[ansatz]
kind = "iqp"
n = 3
gate_count = 5
seed = 1

[surrogate]
kind = "iqp_pps"
h_values = [0, 5]

[truncation]
k = 2
"""
    run(text, tmp_path)
    rows = read_rows(tmp_path / "mse.csv")
    assert len(rows) == 4
    for row in rows:
        if row["h_or_chi"] == "5":
            assert float(row["value"]) == pytest.approx(0.0, abs=1e-20)


def test_discrepancy_report(tmp_path):
    text = TRAIN_DEPLOY.replace('kind = "train_deploy"', 'kind = "discrepancy"').replace("orders = [1, 2]", "k = 1")
    run(text, tmp_path)
    payload = json.loads((tmp_path / "report.json").read_text())
    assert payload["classical"]["truncation"] == "1"
    assert payload["report"]["bound_satisfied"] is True


def test_cli_validate_and_exit_codes(tmp_path, capsys):
    good = tmp_path / "spectrum.toml"
    good.write_text(SPECTRUM)
    asyncio.run(BornLabCLI().run(["validate", str(good)]))
    assert "Config OK: spectrum experiment" in capsys.readouterr().out

    bad = tmp_path / "bad.toml"
    bad.write_text('[experiment]\nkind = "nope"\n')
    with pytest.raises(SystemExit) as excinfo:
        asyncio.run(BornLabCLI().run(["run", str(bad), "--out", str(tmp_path / "out")]))
    assert excinfo.value.code == 1

    broken = tmp_path / "broken.toml"
    broken.write_text('[experiment]\nkind = "spectrum"\n[model]\nkind = "tfim"\nn = 1\n')
    with pytest.raises(SystemExit) as excinfo:
        asyncio.run(BornLabCLI().run(["run", str(broken), "--out", str(tmp_path / "out")]))
    assert excinfo.value.code == 2


def test_cli_run_writes_artifacts(tmp_path, capsys):
    config = tmp_path / "spectrum.toml"
    config.write_text(SPECTRUM)
    asyncio.run(BornLabCLI().run(["run", str(config), "--out", str(tmp_path / "out"), "--threads", "1"]))
    assert (tmp_path / "out" / "correlations.csv").exists()
    assert "3 artifacts" in capsys.readouterr().out


def test_load_experiment_config_from_file(tmp_path):
    path = tmp_path / "spectrum.toml"
    path.write_text(SPECTRUM)
    config = asyncio.run(load_experiment_config(str(path)))
    assert config.kind == "spectrum"
    assert config.config_hash() == parse_experiment_config(SPECTRUM).config_hash()
    with pytest.raises(ConfigError):
        asyncio.run(load_experiment_config(str(tmp_path / "missing.toml")))
