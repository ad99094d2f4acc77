import csv
import json
import os
import subprocess
import sys

import pytest

from oscikernel import cli
from oscikernel.cli import (
    EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, EXIT_VERIFY, TASK_COLUMNS, ConfigError, TaskConfig, main, parse_config,
)

# frozen headers: a change here is a change of the output contract
HEADERS = {
    "heat-check": "task,model,check,t,error,tol,pass",
    "partition-check": "task,J,lam_max,max_abs_error,pass",
    "ks": "task,model,p,j,I_j,integral,tail_bound,tail_ratio,pass",
    "lemma6": "task,model,part,j,q,value,compensated,slope,pass",
    "apply": "task,model,r1,r2,f,Tf_re,Tf_im,pass",
}


def _cfg(tmp_path, doc, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_minimal_config_gets_defaults():
    cfg = parse_config({"task": "lemma6"})
    assert cfg == TaskConfig(task="lemma6")
    assert cfg.j == list(range(4, 15)) and cfg.p == [2.0, 4.0] and cfg.model == "h3"


def test_every_task_has_columns_and_plot_axes():
    assert set(TASK_COLUMNS) == set(cli.TASKS) == set(cli.PLOT_AXES)
    for task, cols in TASK_COLUMNS.items():
        assert cols[-1] == "pass"
        x, y, _ = cli.PLOT_AXES[task]
        assert x in cols and y in cols


@pytest.mark.parametrize("doc,key", [
    ({"task": "lemma6", "alpha": 1.5}, "alpha"),
    ({"task": "lemma3", "j": [6], "q": [-7.0]}, "q"),
    ({"task": "lemma6", "colour": 1}, "colour"),
    ({"task": "lemma6", "model": "h4"}, "model"),
    ({"task": "lemma6", "j": "six"}, "j"),
    ({"task": "lemma5", "xi": [4.0, 8.0, 20.0]}, "xi"),
    ({"task": "lemma7", "j": [4, 6]}, "j"),
    ({"task": "lemma3", "beta": True}, "beta"),
])
def test_bad_config_raises_naming_key(doc, key):
    with pytest.raises(ConfigError) as exc:
        parse_config(doc)
    assert str(exc.value).startswith(key)


def test_alpha_out_of_range_exits_2(tmp_path, capsys):
    code = main(["lemma6", "--config", _cfg(tmp_path, {"alpha": 1.5}), "--out", str(tmp_path)])
    assert code == EXIT_CONFIG
    assert "alpha must lie in (0,1)" in capsys.readouterr().err


def test_q_below_minus_j_exits_2(tmp_path):
    doc = {"j": [6], "q": [-7.0]}
    assert main(["lemma3", "--config", _cfg(tmp_path, doc), "--out", str(tmp_path)]) == EXIT_CONFIG


def test_bad_json_and_missing_file_exit_2(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["heat-check", "--config", str(bad)]) == EXIT_CONFIG
    assert main(["heat-check", "--config", str(tmp_path / "nope.json")]) == EXIT_CONFIG


def test_task_mismatch_exits_2(tmp_path):
    assert main(["heat-check", "--config", _cfg(tmp_path, {"task": "ks"})]) == EXIT_CONFIG


@pytest.mark.parametrize("task", ["heat-check", "partition-check"])
def test_fast_tasks_pass_with_fixed_header(tmp_path, task):
    assert main([task, "--out", str(tmp_path)]) == EXIT_OK
    path = tmp_path / f"{task.replace('-', '_')}.csv"
    first = path.read_text().splitlines()[0]
    assert first == HEADERS[task]
    rows = _rows(path)
    assert rows and all(r["pass"] == "1" for r in rows)


def test_rewrite_is_bit_identical(tmp_path):
    main(["partition-check", "--out", str(tmp_path)])
    a = (tmp_path / "partition_check.csv").read_bytes()
    main(["partition-check", "--out", str(tmp_path)])
    assert (tmp_path / "partition_check.csv").read_bytes() == a


def test_write_report_round_trip(tmp_path):
    rows = [{"task": "ks", "model": "h3", "p": 2.0, "j": 3, "I_j": 1.0 / 3.0, "integral": 0.1,
             "tail_bound": 1e-300, "tail_ratio": 0.36, "pass": True}]
    (path,) = write = cli.write_report(rows, "ks", tmp_path)
    assert write[0].name == "ks.csv"
    back = _rows(path)[0]
    assert float(back["I_j"]) == 1.0 / 3.0 and float(back["tail_bound"]) == 1e-300
    assert back["pass"] == "1" and back["j"] == "3"
    assert path.read_text().splitlines()[0] == HEADERS["ks"]


def test_plot_script_emitted_and_compiles(tmp_path):
    assert main(["heat-check", "--plot", "--out", str(tmp_path)]) == EXIT_OK
    script = tmp_path / "heat_check_plot.py"
    src = script.read_text()
    compile(src, str(script), "exec")
    assert "heat_check.csv" in src


def test_ks_with_zero_kernel(tmp_path):
    doc = {"kernel": "zero", "p": [2.0]}
    assert main(["ks", "--config", _cfg(tmp_path, doc), "--out", str(tmp_path)]) == EXIT_OK
    rows = _rows(tmp_path / "ks.csv")
    assert rows and all(float(r["integral"]) == 0.0 for r in rows)


def test_numerical_failure_exits_3(tmp_path, monkeypatch):
    def boom(cfg, model):
        raise FloatingPointError("non-finite kernel")

    monkeypatch.setitem(cli._RUNNERS, "heat-check", boom)
    assert main(["heat-check", "--out", str(tmp_path)]) == EXIT_NUMERIC


def test_failed_verification_exits_1(tmp_path, monkeypatch):
    monkeypatch.setitem(cli._RUNNERS, "heat-check", lambda cfg, model: ([{"check": "mass", "pass": False}], False))
    assert main(["heat-check", "--out", str(tmp_path)]) == EXIT_VERIFY
    assert _rows(tmp_path / "heat_check.csv")[0]["pass"] == "0"


def test_unwritable_output_exits_2(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["partition-check", "--out", str(blocker / "sub")]) == EXIT_CONFIG


@pytest.mark.parametrize("value", ["0", "-2", "many"])
def test_thread_cap_validated(monkeypatch, value):
    monkeypatch.setenv("OSCIKERNEL_THREADS", value)
    assert main(["partition-check"]) == EXIT_CONFIG


def test_thread_cap_sets_blas_env():
    env = dict(os.environ, OSCIKERNEL_THREADS="2")
    env.pop("OMP_NUM_THREADS", None)
    out = subprocess.run([sys.executable, "-c", "import os, oscikernel; print(os.environ['OMP_NUM_THREADS'])"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "2"


def test_console_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "oscikernel.cli", "partition-check", "--out", str(tmp_path)],
                         capture_output=True, text=True)
    assert res.returncode == EXIT_OK and "[PASS] partition-check" in res.stdout
