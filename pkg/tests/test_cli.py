import json
from pathlib import Path

import pytest

from subshift_spectra.cli import (
    ConfigError,
    RunConfig,
    dispatch,
    fmt_num,
    load_config,
    main,
    read_intervals_csv,
)


def write_config(tmp_path: Path, payload: dict, name: str = "config.json") -> Path:
    path = tmp_path / name
    path.write_text(json.dumps(payload), encoding="utf-8")
    return path


def run(tmp_path, command, payload, out="out"):
    cfg = load_config(write_config(tmp_path, payload, f"{command}.json"))
    code = dispatch(command, cfg, tmp_path / out, quiet=True)
    return code, tmp_path / out


def test_fmt_num():
    assert fmt_num(-2.0) == "-2"
    assert fmt_num(0.5) == "0.5"
    assert fmt_num(3) == "3"
    assert fmt_num(float("inf")) == "inf"


def test_spectrum_single_site(tmp_path):
    code, out = run(tmp_path, "spectrum", {"potential": {"a": 0.0}, "spectrum": {"word": "a"}})
    assert code == 0
    assert (out / "bands.csv").read_text() == "lo,hi\n-2,2\n"
    report = json.loads((out / "spectrum.json").read_text())
    assert report["measure"] == 4.0
    assert report["tool_version"]
    assert len(report["config_sha256"]) == 64


def test_measure_union(tmp_path):
    (tmp_path / "x.csv").write_text("lo,hi\n0,1\n")
    (tmp_path / "y.csv").write_text("lo,hi\n0.5,2\n")
    code, out = run(
        tmp_path,
        "measure",
        {"measure": {"op": "union", "x": str(tmp_path / "x.csv"), "y": str(tmp_path / "y.csv")}},
    )
    assert code == 0
    assert (out / "result.csv").read_text() == "lo,hi\n0,2\n"
    assert json.loads((out / "result.json").read_text())["measure"] == 2.0


def test_measure_subset_and_dilate(tmp_path):
    (tmp_path / "x.csv").write_text("lo,hi\n0,1\n")
    (tmp_path / "y.csv").write_text("lo,hi\n-1,2\n")
    code, out = run(
        tmp_path,
        "measure",
        {"measure": {"op": "subset", "x": str(tmp_path / "x.csv"), "y": str(tmp_path / "y.csv")}},
        out="subset_out",
    )
    assert code == 0
    assert json.loads((out / "result.json").read_text())["result"] is True

    code, out = run(
        tmp_path,
        "measure",
        {"measure": {"op": "dilate", "x": str(tmp_path / "x.csv"), "y": 0.1}},
        out="dilate_out",
    )
    assert code == 0
    assert read_intervals_csv(out / "result.csv").intervals == ((-0.1, 1.1),)


def test_words_command(tmp_path):
    payload = {
        "subshift": {"kind": "substitution", "rules": {"a": "ab", "b": "a"}, "seed_letter": "a"},
        "words": {"sample_len": 256, "complexity_lengths": [1, 2, 4]},
    }
    code, out = run(tmp_path, "words", payload)
    assert code == 0
    assert (out / "sample.txt").read_text().startswith("abaab")
    lines = (out / "complexity.csv").read_text().splitlines()
    assert lines[0] == "n,p"
    assert lines[3] == "4,5"
    stats = json.loads((out / "run_stats.json").read_text())
    assert stats["max_run"] == {"a": 2, "b": 1}


def test_adz_command_and_determinism(tmp_path):
    payload = {
        "seed": 11,
        "potential": {"a": 0.0, "b": 1.0},
        "adz": {"k": 2, "eps": 0.5, "stages": 2, "n_cap": 100},
    }
    code1, out1 = run(tmp_path, "adz", payload, out="adz1")
    code2, out2 = run(tmp_path, "adz", payload, out="adz2")
    assert code1 == code2 == 0
    for name in ("adz.json", "adz.csv", "stage_1.txt", "stage_2.txt"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()
    assert (out1 / "adz.csv").read_text().splitlines()[0].startswith("stage,")
    report = json.loads((out1 / "adz.json").read_text())
    assert report["retained_half"] is True
    assert report["stages"][0]["chosen_N"] is not None


def test_adz_failure_exit_code(tmp_path):
    cfg_path = write_config(
        tmp_path,
        {
            "potential": {"a": 0.0, "b": 30.0},
            "adz": {"k": 2, "eps": 0.5, "stages": 3, "n_cap": 2},
        },
    )
    code = main(["adz", "--config", str(cfg_path), "--out", str(tmp_path / "o"), "--quiet"])
    assert code == 1


def test_decay_command_deterministic(tmp_path):
    payload = {
        "subshift": {"kind": "substitution", "rules": {"a": "ab", "b": "a"}, "seed_letter": "a"},
        "potential": {"a": 0.0, "b": 1.0},
        "decay": {"lam_list": [10.0, 20.0, 40.0], "factor_len": 6, "sample_len": 512},
    }
    code1, out1 = run(tmp_path, "decay", payload, out="d1")
    code2, out2 = run(tmp_path, "decay", payload, out="d2")
    assert code1 == code2 == 0
    assert (out1 / "decay.csv").read_bytes() == (out2 / "decay.csv").read_bytes()
    assert (out1 / "decay.json").read_bytes() == (out2 / "decay.json").read_bytes()
    table = json.loads((out1 / "decay.json").read_text())
    assert [r["lam"] for r in table["rows"]] == [10.0, 20.0, 40.0]


def test_main_exit_codes(tmp_path):
    assert main(["tower", "--config", str(tmp_path / "missing.json")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["tower", "--config", str(bad)]) == 2
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate", "--config", str(bad)])
    assert exc.value.code == 2


def test_seed_override(tmp_path):
    payload = {"potential": {"a": 0.0}, "spectrum": {"word": "a"}, "seed": 1}
    cfg_path = write_config(tmp_path, payload)
    assert main(["spectrum", "--config", str(cfg_path), "--out", str(tmp_path / "s1"),
                 "--seed", "42", "--quiet"]) == 0
    report = json.loads((tmp_path / "s1" / "spectrum.json").read_text())
    assert report["seed"] == 42


def test_config_validation():
    with pytest.raises(ConfigError):
        RunConfig([])  # not an object
    with pytest.raises(ConfigError):
        RunConfig({"refine_tol": 0.0})
    cfg = RunConfig({"potential": {"a": 0.0, "b": 1.0}})
    assert cfg.potential().value("b") == 1.0
    with pytest.raises(ConfigError):
        RunConfig({}).potential()
    with pytest.raises(ConfigError):
        RunConfig({"subshift": {"kind": "nope"}}).subshift()
