"""Command-line behavior: exit codes, file outputs, reproducibility."""

import json
import subprocess
import sys

import numpy as np
import pytest

from pwhmc import zoo
from pwhmc.cli import main
from pwhmc.sampler import ChainConfig, run_chain

ONENORM = str(zoo.model_path("onenorm"))


def write_model(tmp_path, doc_text, name="model.model"):
    path = tmp_path / name
    path.write_text(doc_text)
    return str(path)


def test_validate_shipped_models_pass(capsys):
    for name in zoo.SHIPPED:
        assert main(["validate", str(zoo.model_path(name))]) == 0
        tail = capsys.readouterr().out.strip().splitlines()[-1]
        assert tail.endswith("checks passed")
        assert "FAIL" not in tail


def test_validate_broken_model_fails(tmp_path, capsys):
    doc = json.loads(zoo.model_path("onenorm").read_text())
    doc["regions"][0]["y"] = [-2.0]          # breaks cross-face continuity
    path = write_model(tmp_path, json.dumps(doc))
    assert main(["validate", path]) == 1
    assert "FAIL" in capsys.readouterr().out


def test_missing_and_malformed_files_exit_2(tmp_path, capsys):
    assert main(["validate", str(tmp_path / "nope.model")]) == 2
    bad = write_model(tmp_path, "{not json")
    assert main(["sample", bad, "--n", "5", "--out", str(tmp_path / "o.csv")]) == 2
    capsys.readouterr()


def test_sample_writes_csv_and_manifest(tmp_path):
    out = tmp_path / "draws.csv"
    code = main(["sample", ONENORM, "--n", "40", "--seed", "7",
                 "--out", str(out)])
    assert code == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "x1,x2,x3,region,iterate"
    assert len(lines) == 41
    first = lines[1].split(",")
    assert len(first) == 5
    assert int(first[4]) == 0                # iterate of first kept row

    manifest = json.loads((tmp_path / "draws.csv.manifest.json").read_text())
    assert manifest["model"] == ONENORM
    assert manifest["seed"] == [7]
    assert manifest["n_samples"] == 40
    assert manifest["region"] == 1
    assert manifest["events_path"] is None
    assert manifest["version"]


def test_sample_csv_round_trips_exactly(tmp_path):
    out = tmp_path / "draws.csv"
    assert main(["sample", ONENORM, "--n", "30", "--seed", "3",
                 "--out", str(out)]) == 0
    spec = zoo.build_shipped("onenorm")
    ref = run_chain(spec, spec.init_region, spec.init_point,
                    ChainConfig(n_samples=30, seed=np.random.SeedSequence(3)))
    rows = [line.split(",") for line in out.read_text().strip().splitlines()[1:]]
    got = np.array([[float(v) for v in r[:3]] for r in rows])
    regions = np.array([int(r[3]) for r in rows])
    assert np.array_equal(got, ref.X)        # %.17g is lossless for doubles
    assert np.array_equal(regions, ref.R)


def test_sample_reruns_are_byte_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["sample", ONENORM, "--n", "50", "--seed", "11", "--burnin", "10",
            "--thin", "2"]
    assert main(args + ["--out", str(a), "--events", str(tmp_path / "a.jsonl")]) == 0
    assert main(args + ["--out", str(b), "--events", str(tmp_path / "b.jsonl")]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()


def test_sample_iterate_column_respects_burnin_thin(tmp_path):
    out = tmp_path / "draws.csv"
    assert main(["sample", ONENORM, "--n", "5", "--burnin", "4", "--thin", "3",
                 "--out", str(out)]) == 0
    iterates = [int(l.split(",")[-1])
                for l in out.read_text().strip().splitlines()[1:]]
    assert iterates == [6, 9, 12, 15, 18]


def test_sample_events_log(tmp_path):
    out = tmp_path / "draws.csv"
    ev_path = tmp_path / "events.jsonl"
    assert main(["sample", ONENORM, "--n", "200", "--seed", "1",
                 "--out", str(out), "--events", str(ev_path)]) == 0
    events = [json.loads(l) for l in ev_path.read_text().strip().splitlines()]
    assert len(events) > 20
    keys = {"iterate", "time", "constraint", "kind", "j_from", "j_to",
            "dV", "energy_pre", "energy_post"}
    assert keys <= set(events[0])
    assert all(ev["kind"] in ("wall", "transition") for ev in events)
    manifest = json.loads((tmp_path / "draws.csv.manifest.json").read_text())
    assert manifest["events_path"] == str(ev_path)


def test_sample_multiple_chains(tmp_path):
    out = tmp_path / "draws.csv"
    assert main(["sample", ONENORM, "--n", "25", "--seed", "5",
                 "--chains", "2", "--out", str(out)]) == 0
    c0 = tmp_path / "draws.chain0.csv"
    c1 = tmp_path / "draws.chain1.csv"
    assert c0.exists() and c1.exists() and not out.exists()
    assert c0.read_bytes() != c1.read_bytes()
    m0 = json.loads((tmp_path / "draws.chain0.csv.manifest.json").read_text())
    m1 = json.loads((tmp_path / "draws.chain1.csv.manifest.json").read_text())
    assert m0["seed"] == [5, 0] and m1["seed"] == [5, 1]


def test_sample_rejects_bad_start(tmp_path, capsys):
    out = str(tmp_path / "o.csv")
    assert main(["sample", ONENORM, "--n", "5", "--out", out,
                 "--init", "0.2,0.3,0.6"]) == 1
    assert main(["sample", ONENORM, "--n", "5", "--out", out,
                 "--region", "99"]) == 1
    assert main(["sample", ONENORM, "--n", "5", "--out", out,
                 "--init", "0.5,0.5"]) == 1
    capsys.readouterr()


def test_sample_requires_some_start(tmp_path, capsys):
    doc = json.loads(zoo.model_path("onenorm").read_text())
    del doc["init"]
    path = write_model(tmp_path, json.dumps(doc))
    out = str(tmp_path / "o.csv")
    assert main(["sample", path, "--n", "5", "--out", out]) == 1
    assert main(["sample", path, "--n", "5", "--out", out,
                 "--region", "1", "--init", "0.2,0.3,0.5"]) == 0
    capsys.readouterr()


def test_sample_refuses_invalid_model(tmp_path, capsys):
    doc = json.loads(zoo.model_path("onenorm").read_text())
    doc["regions"][0]["y"] = [-2.0]
    path = write_model(tmp_path, json.dumps(doc))
    assert main(["sample", path, "--n", "5",
                 "--out", str(tmp_path / "o.csv")]) == 1
    capsys.readouterr()


def test_sample_bad_chain_settings_exit_1(tmp_path, capsys):
    out = str(tmp_path / "o.csv")
    assert main(["sample", ONENORM, "--n", "0", "--out", out]) == 1
    assert "n_samples" in capsys.readouterr().err
    assert main(["sample", ONENORM, "--n", "5", "--thin", "0", "--out", out]) == 1
    assert main(["diagnose", ONENORM, "--n", "0"]) == 1
    capsys.readouterr()


def test_sample_unwritable_output_exits_2(tmp_path, capsys):
    out = str(tmp_path / "no_such_dir" / "o.csv")
    assert main(["sample", ONENORM, "--n", "5", "--out", out]) == 2
    assert "cannot write output" in capsys.readouterr().err


def test_sample_region_init_override(tmp_path):
    path = write_model(tmp_path, zoo.dump_model(zoo.step_line_model()))
    out = tmp_path / "o.csv"
    # values starting with '-' need the --init=... form under argparse
    assert main(["sample", path, "--n", "20", "--seed", "2",
                 "--region", "2", "--init=-1,0", "--out", str(out)]) == 0
    manifest = json.loads((tmp_path / "o.csv.manifest.json").read_text())
    assert manifest["region"] == 2
    assert manifest["init"] == [-1.0, 0.0]


def test_diagnose_runs_clean(capsys):
    assert main(["diagnose", ONENORM, "--n", "300", "--seed", "4"]) == 0
    text = capsys.readouterr().out
    assert "max manifold residual" in text
    assert "max energy drift" in text
    resid = float(text.split("max manifold residual:")[1].split()[0])
    assert resid < 1e-8
    drift = float(text.split("max energy drift (rel):")[1].split()[0])
    assert drift < 1e-8
    assert "Euclidean energy" not in text       # identity mass: no caveat


def test_diagnose_step_occupancy(tmp_path, capsys):
    path = write_model(tmp_path, zoo.dump_model(zoo.step_line_model()))
    assert main(["diagnose", path, "--seed", "6"]) == 0
    text = capsys.readouterr().out
    occ = text.split("region occupancy:")[1].splitlines()[0].split()
    counts = {int(p.split(":")[0]): int(p.split(":")[1]) for p in occ}
    assert abs(counts[1] / 2000 - 2.0 / 3.0) <= 0.03


def test_diagnose_flags_non_identity_mass(capsys):
    assert main(["diagnose", str(zoo.model_path("ntop")),
                 "--n", "200", "--seed", "4"]) == 0
    assert "Euclidean energy" in capsys.readouterr().out


def test_console_script_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "pwhmc.cli", "--version"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert proc.stdout.strip()


def test_unknown_command_exits_nonzero():
    with pytest.raises(SystemExit):
        main(["bogus"])
