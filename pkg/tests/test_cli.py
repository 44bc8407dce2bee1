import csv
import json
import logging

import numpy as np
import pytest

from crosstriple.cli import main
from crosstriple.coaction import state_from_config, verify_contractive
from crosstriple.config import ConfigError, load_config, read_config
from crosstriple.crossed import CrossedElement, DualOperator

SMALL = {
    "schema": 1,
    "name": "small",
    "group": {"family": "Z"},
    "triple": {"builder": "two_point", "Lambda": 1.0},
    "action": {"builder": "swap"},
    "crossed_elements": [{"id": "f", "a": [[1, 0], [0, 0]], "f": [{"g": 1, "re": 1.0}]}],
    "random_crossed": {"count": 2, "support_radius": 1, "terms": 2},
    "algebra_states": [{"id": "p", "basis": 0}, {"id": "q", "basis": 1}, {"id": "m", "mixed": True}],
    "random_group_states": {"characters": 2, "vectors": 2, "mixtures": 1},
    "radii": [1, 2, 3],
    "seed": 3,
    "coaction": {"R": 4, "R_inner": 2, "mechanism_states": 2},
    "distance": {"pairs": [{"id": "pq", "states": ["p", "q"], "expected": 1.0}]},
}


def write(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def report(out):
    return json.loads((out / "report.json").read_text())


@pytest.fixture(autouse=True)
def fixed_clock(monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "1700000000")


def test_demo_run_all_passes(tmp_path):
    out = tmp_path / "out"
    assert main(["run", "--config", "demo:two_point_z", "--suite", "all", "--out", str(out), "-q"]) == 0
    rep = report(out)
    assert rep["schema"] == 1 and rep["passed"]
    assert len(rep["rows"]) > 36
    assert set(rep["summary"]) == {"spectrum", "bounds", "contractivity", "abelian-isometry",
                                   "coaction-identity", "distance"}
    for row in rep["rows"]:
        assert {"suite", "inputs", "lhs", "rhs", "pass"} <= set(row)
        assert ("slack" in row) != ("mismatch" in row)
    for name in ("rows.csv", "spectrum.csv", "compression.csv", "contractivity.csv",
                 "distance.csv", "distance_comparison.csv"):
        assert (out / name).exists()
    with open(out / "distance.csv") as fh:
        header = next(csv.reader(fh))
    assert header == ["state_pair_id", "value_or_flag", "certificate_seminorm", "iterations", "gap"]


def test_selector_only_spectrum(tmp_path):
    out = tmp_path / "o"
    assert main(["run", "--config", write(tmp_path, SMALL), "--suite", "spectrum", "--out", str(out), "-q"]) == 0
    rep = report(out)
    assert {r["suite"] for r in rep["rows"]} == {"spectrum"}
    assert list(rep["summary"]) == ["spectrum"]


def test_non_hermitian_config_exit_1(tmp_path, caplog):
    cfg = dict(SMALL, triple={"inline": {"D": [[0, 1], [2, 0]],
                                         "basis": [[[1, 0], [0, 0]], [[0, 0], [0, 1]]]}})
    with caplog.at_level(logging.ERROR, logger="crosstriple"):
        code = main(["run", "--config", write(tmp_path, cfg), "--out", str(tmp_path / "o")])
    assert code == 1
    assert "Hermitian" in caplog.text


@pytest.mark.parametrize("mutate", [
    lambda c: c.update(action={"generators": [[[1, 0, 0], [0, 1, 0], [0, 0, 1]]]}),
    lambda c: c.update(radii=[3, 2]),
    lambda c: c.update(group={"family": "Q"}),
    lambda c: c.update(crossed_elements=[{"id": "x", "a": [[0, 1], [0, 0]], "f": [{"g": 0, "re": 1}]}]),
    lambda c: c.update(schema=2),
])
def test_bad_configs_exit_1(tmp_path, mutate):
    cfg = json.loads(json.dumps(SMALL))
    mutate(cfg)
    assert main(["run", "--config", write(tmp_path, cfg), "--out", str(tmp_path / "o"), "-q"]) == 1


def test_unreadable_config_and_unknown_suite(tmp_path):
    assert main(["run", "--config", str(tmp_path / "missing.json"), "--out", str(tmp_path), "-q"]) == 1
    assert main(["run", "--config", "demo:nope", "--out", str(tmp_path), "-q"]) == 1
    assert main(["run", "--config", write(tmp_path, SMALL), "--suite", "magic", "-q",
                 "--out", str(tmp_path)]) == 1
    with pytest.raises(ConfigError):
        read_config(str(tmp_path / "missing.json"))


def test_cap_exceeded_writes_partial_report(tmp_path):
    out = tmp_path / "o"
    code = main(["run", "--config", "demo:free_scalar", "--suite", "spectrum", "--cap-dim", "100",
                 "--out", str(out), "-q"])
    assert code == 1
    rep = report(out)
    assert "exceeds cap" in rep["error"] and not rep["passed"]
    assert [r["inputs"]["R"] for r in rep["rows"] if r["check"] == "eigenvalues"] == [2]
    assert rep["summary"]["spectrum"]["note"].startswith("aborted")


def test_failed_assertion_exit_2(tmp_path):
    cfg = json.loads(json.dumps(SMALL))
    cfg["distance"]["pairs"][0]["expected"] = 0.3
    out = tmp_path / "o"
    assert main(["run", "--config", write(tmp_path, cfg), "--suite", "distance", "--out", str(out), "-q"]) == 2
    rep = report(out)
    assert rep["summary"]["distance"]["failures"] == 1
    assert not rep["passed"]


def test_rerun_is_byte_identical(tmp_path):
    paths = []
    for k, threads in enumerate(("1", "2")):
        out = tmp_path / f"o{k}"
        assert main(["run", "--config", write(tmp_path, SMALL), "--out", str(out), "-q",
                     "--threads", threads]) == 0
        paths.append(out)
    for name in ("report.json", "rows.csv", "contractivity.csv", "spectrum.csv"):
        assert (paths[0] / name).read_bytes() == (paths[1] / name).read_bytes()


def test_content_hash_ignores_timestamp(tmp_path, monkeypatch):
    hashes = []
    for k, epoch in enumerate(("1", "2000000000")):
        monkeypatch.setenv("SOURCE_DATE_EPOCH", epoch)
        out = tmp_path / f"o{k}"
        main(["run", "--config", write(tmp_path, SMALL), "--suite", "spectrum", "--out", str(out), "-q"])
        rep = report(out)
        hashes.append((rep["content_hash"], rep["metadata"]["created"]))
    assert hashes[0][0] == hashes[1][0] and hashes[0][1] != hashes[1][1]


def test_env_default_output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("CROSSTRIPLE_OUT", str(tmp_path / "envout"))
    assert main(["run", "--config", write(tmp_path, SMALL), "--suite", "spectrum", "-q"]) == 0
    assert (tmp_path / "envout" / "report.json").exists()


def test_rows_recomputable_from_report(tmp_path):
    out = tmp_path / "o"
    main(["run", "--config", write(tmp_path, SMALL), "--suite", "contractivity", "--out", str(out), "-q"])
    rep = report(out)
    cfg = load_config(rep["config"])
    group = cfg.group
    resolved = rep["resolved"]
    rows = [r for r in rep["rows"] if r["check"] == "beta_contractive"]
    assert rows
    for row in rows[::7]:
        inp = row["inputs"]
        F = CrossedElement.from_pairs(
            [(group.normalize(t["g"]),
              np.array([[complex(*z) for z in r] for r in t["matrix"]]))
             for t in resolved["crossed_elements"][inp["F"]]], 2)
        phi = state_from_config(group, resolved["group_states"][inp["phi"]])
        again = verify_contractive(F, phi, DualOperator(cfg.triple, group, inp["R"]), cfg.action)
        lhs = next(r.lhs for r in again.rows if r.sign == inp["sign"])
        assert lhs == pytest.approx(row["lhs"], rel=1e-9, abs=1e-11)


def test_sweep(tmp_path):
    out = tmp_path / "s"
    assert main(["sweep", "--config", "demo:two_point_z", "--out", str(out), "-q"]) == 0
    text = (out / "sweep.csv").read_text()
    with open(out / "sweep.csv") as fh:
        recs = list(csv.DictReader(fh))
    assert {r["R"] for r in recs} == {"2", "4", "6"}
    norms = {}
    for r in recs:
        if r["quantity"].startswith("commutator_norm"):
            norms.setdefault(r["quantity"], []).append((int(r["R"]), float(r["value"])))
    assert norms
    for series in norms.values():
        vals = [v for _, v in sorted(series)]
        assert all(b >= a - 1e-10 for a, b in zip(vals, vals[1:]))
    assert any(r["quantity"] == "spectrum_mismatch" for r in recs)
    assert any(r["quantity"].startswith("contractivity_slack") for r in recs)
    out2 = tmp_path / "s2"
    main(["sweep", "--config", "demo:two_point_z", "--out", str(out2), "-q"])
    assert (out2 / "sweep.csv").read_text() == text


def test_sweep_needs_two_radii(tmp_path):
    cfg = dict(SMALL, radii=[2])
    assert main(["sweep", "--config", write(tmp_path, cfg), "--out", str(tmp_path / "s"), "-q"]) == 1


def test_demo_configs_load():
    for name in ("two_point_z", "free_scalar", "clock_shift_z"):
        cfg = load_config(f"demo:{name}")
        assert len(cfg.crossed) >= 5
        assert len(cfg.group_states) >= 20
        assert cfg.radii == [2, 4, 6]
