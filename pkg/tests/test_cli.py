import io
import json

import numpy as np
import pytest

from cukpllf.cli import certify_command, main, run_command
from cukpllf.errors import ConfigError
from cukpllf.metrics import Metrics
from cukpllf.scenarios import PRESETS, load_config, preset_digest, resolve, scenario_from_dict

PINNED = {
    "fig2": "841678f2d2afa2790cd646e3fb3cffa90c52afbe147a7cf42f85bbfff5b970bc",
    "fig3": "e8ed73339bc7de4e7bc3b5b3f0e294b24c62239898e5793485da05c24c6b5704",
    "fig4": "fe7c523fb450d0850236770938a2594c3c75bbf6b1c54b140547a3d51281f99d",
    "fig5": "e0fff643bf10e1311c285b3045895b841df1d508e6bafd6bc335ab8f4faf5760",
}


def _config(**changes):
    data = PRESETS["fig4"].to_dict()
    for path, value in changes.items():
        section, key = path.split("__")
        if value is None:
            del data[section][key]
        else:
            data[section][key] = value
    return data


def _write(tmp_path, data, name="case.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return path


def test_presets_are_pinned():
    assert {name: preset_digest(s) for name, s in PRESETS.items()} == PINNED


def test_fig2_preset():
    s = resolve("fig2")
    assert s.J == (1, 2)
    assert s.k2_fraction == -0.5
    assert (s.op_spec.d, s.op_spec.T_s) == (0.5, 1e-5)
    assert s.sim.duration == 5e-3
    assert s.sim.x0 == (0.0, 0.0, 0.0, 0.0)


def test_fig5_preset():
    s = resolve("fig5")
    assert s.J == (1, 2, 3, 4)
    assert s.k2_fraction == -0.75
    assert s.k4_fraction == -0.00125


def test_config_round_trip(tmp_path):
    for name, scenario in PRESETS.items():
        loaded = load_config(_write(tmp_path, scenario.to_dict(), f"{name}.json"))
        assert loaded == scenario


def test_sim_keys_default(tmp_path):
    data = _config()
    del data["sim"]
    s = load_config(_write(tmp_path, data))
    assert s.sim == PRESETS["fig4"].sim


def test_invalid_duty_names_key(tmp_path):
    with pytest.raises(ConfigError) as info:
        load_config(_write(tmp_path, _config(op__d=1.5)))
    assert info.value.key == "op.d"


@pytest.mark.parametrize(
    "changes, key",
    [
        ({"params__C1": None}, "params.C1"),
        ({"params__R": "five"}, "params.R"),
        ({"op__T_s": None}, "op.T_s"),
        ({"polytope__J": None}, "polytope.J"),
        ({"polytope__J": [2, 3]}, "polytope.J"),
        ({"polytope__k2_fraction": 1.2}, "polytope.k2_fraction"),
        ({"sim__x0": [0.0, 0.0]}, "sim.x0"),
        ({"sim__event_tol": -1.0}, "sim.event_tol"),
        ({"sim__bogus": 1.0}, "sim.bogus"),
    ],
)
def test_config_errors_name_the_key(changes, key):
    with pytest.raises(ConfigError) as info:
        scenario_from_dict(_config(**changes))
    assert info.value.key == key


def test_unreadable_config(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(bad)


def _reports(text):
    return [json.loads(line) for line in text.strip().splitlines()]


def test_certify_fig4():
    out = io.StringIO()
    assert certify_command(resolve("fig4"), out) == 0
    reports = _reports(out.getvalue())
    assert [r["j"] for r in reports] == [1, 2, 3]
    assert all(r["pass"] for r in reports)
    assert set(reports[0]) == {"j", "LR", "LA1R", "LA2R", "pass"}


def test_certify_fig2(capsys):
    assert main(["certify", "fig2"]) == 0
    reports = _reports(capsys.readouterr().out)
    assert [r["j"] for r in reports] == [1, 2]
    assert all(r["pass"] for r in reports)


def test_certify_hand_edited_sign_fails(tmp_path, capsys):
    data = _config()
    data["polytope"]["k"] = {"3": 0.2}
    assert main(["certify", str(_write(tmp_path, data))]) == 1
    reports = {r["j"]: r for r in _reports(capsys.readouterr().out)}
    assert not reports[3]["pass"]
    assert reports[3]["LA1R"] == pytest.approx(2e5)
    assert reports[1]["pass"] and reports[2]["pass"]


def test_config_error_exit_code(tmp_path):
    assert main(["certify", str(_write(tmp_path, _config(op__d=1.5)))]) == 2
    assert main(["run", str(tmp_path / "absent.json"), "--out", str(tmp_path)]) == 2


def test_presets_list(capsys):
    assert main(["presets", "list"]) == 0
    names = [line.split("\t")[0] for line in capsys.readouterr().out.splitlines()]
    assert names == ["fig2", "fig3", "fig4", "fig5"]


def test_presets_show(capsys):
    assert main(["presets", "show", "fig3"]) == 0
    assert json.loads(capsys.readouterr().out) == PRESETS["fig3"].to_dict()


@pytest.fixture(scope="module")
def fig2_output(tmp_path_factory):
    out = tmp_path_factory.mktemp("fig2")
    assert main(["run", "fig2", "--out", str(out)]) == 0
    return out


def test_run_writes_all_outputs(fig2_output):
    names = {p.name for p in fig2_output.iterdir()}
    assert names == {"trace.csv", "events.csv", "metrics.json", "certificates.json"}
    header = (fig2_output / "trace.csv").read_text().splitlines()[0]
    assert header == "t,i_L1,i_L2,v_C1,v_C2,q,V"
    events_header = (fig2_output / "events.csv").read_text().splitlines()[0]
    assert events_header == "t,j,facet,q_before,q_after"
    metrics = json.loads((fig2_output / "metrics.json").read_text())
    assert list(metrics) == list(Metrics.__dataclass_fields__)
    assert 9.8e-6 <= metrics["period_measured"] <= 1.02e-5
    certs = json.loads((fig2_output / "certificates.json").read_text())
    assert [c["j"] for c in certs] == [1, 2]


def test_trace_rows_are_ordered_full_precision(fig2_output):
    lines = (fig2_output / "trace.csv").read_text().splitlines()
    first = lines[1].split(",")
    assert len(first) == 7
    assert "e" in first[0] and len(first[1].split("e")[0].replace("-", "")) >= 19
    table = np.loadtxt(fig2_output / "trace.csv", delimiter=",", skiprows=1)
    assert np.all(np.diff(table[:, 0]) >= 0)
    assert table[-1, 0] == pytest.approx(5e-3)
    assert set(np.unique(table[:, 5])) <= {0.0, 1.0}


def test_runs_are_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", "fig2", "--out", str(a), "--duration", "1e-3"]) == 0
    assert main(["run", "fig2", "--out", str(b), "--duration", "1e-3"]) == 0
    for name in ("trace.csv", "events.csv", "metrics.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_window_restricts_csv(tmp_path):
    out = tmp_path / "win"
    assert main(["run", "fig4", "--out", str(out), "--duration", "1e-3", "--window", "9.5e-4:1e-3"]) == 0
    table = np.loadtxt(out / "trace.csv", delimiter=",", skiprows=1)
    assert table[0, 0] >= 9.5e-4 and table[-1, 0] <= 1e-3
    assert len(table) >= 500
    events = np.loadtxt(out / "events.csv", delimiter=",", skiprows=1)
    assert np.all((events[:, 0] >= 9.5e-4) & (events[:, 0] <= 1e-3))


def test_unwritable_output_directory(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert run_command(resolve("fig2"), blocker / "sub") == 2


def test_too_little_steady_data(tmp_path):
    from cukpllf.converter import equilibrium

    data = _config()
    s = PRESETS["fig4"]
    data["sim"]["x0"] = equilibrium(s.params, s.op_spec).x_bar.tolist()
    data["sim"]["duration"] = 2.5e-5
    assert main(["run", str(_write(tmp_path, data)), "--out", str(tmp_path / "o")]) == 3


def test_chatter_exit_code(tmp_path):
    data = PRESETS["fig2"].to_dict()
    data["sim"].update(min_dwell=0.0, duration=2e-4)
    assert main(["run", str(_write(tmp_path, data)), "--out", str(tmp_path / "o")]) == 3


def test_parallel_batch(tmp_path):
    code = main(["run", "fig2", "fig4", "--out", str(tmp_path), "--duration", "1e-3", "--jobs", "2"])
    assert code == 0
    assert (tmp_path / "fig2" / "metrics.json").exists()
    assert (tmp_path / "fig4" / "metrics.json").exists()
