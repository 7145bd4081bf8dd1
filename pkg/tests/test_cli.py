import csv
import hashlib
import json
import xml.etree.ElementTree as ET

import pytest

from coordprop.cli import main
from coordprop.config import CONFIG_ENV, load_config

SCENARIO = {
    "communities": [
        {"size": 30, "rho": 0.9, "pi": 0.7, "rho_spread": 0.8, "pi_slope": 0.6, "automation_slope": 0.4},
        {"size": 25, "rho": 0.9, "pi": 0.3, "rho_spread": 0.8, "pi_slope": -0.6, "suspension_slope": 0.2},
    ],
    "crowd_users": 120,
    "seed": 7,
}

BUNDLE = {
    "ingest/corpus_summary.json",
    "network/superspreaders.csv",
    "network/similarity_edges.csv",
    "network/backbone_edges.csv",
    "network/network_summary.json",
    "communities/assignment.csv",
    "communities/coordination_scores.csv",
    "communities/community_stats.csv",
    "communities/communities_summary.json",
    "propaganda/item_scores.csv",
    "propaganda/model.json",
    "trends/trends_M1.csv",
    "trends/trends_M10.csv",
    "trends/informativeness.csv",
    "trends/informativeness_notes.json",
    "report/delta.csv",
    "report/correlation_report.csv",
    "report/correlation_report.txt",
    "report/automation_trends.csv",
    "report/suspension_trends.csv",
    "report/frame_trends.csv",
    "report/trends_M1.svg",
    "report/automation.svg",
    "report/suspensions.svg",
    "report/frames_economy.svg",
}


def digest(root):
    return {str(p.relative_to(root)): hashlib.sha256(p.read_bytes()).hexdigest() for p in sorted(root.rglob("*")) if p.is_file()}


@pytest.fixture(scope="module")
def scenario(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    (root / "sc.json").write_text(json.dumps(SCENARIO))
    assert main(["synth", str(root / "data"), "--scenario", str(root / "sc.json"), "--training-items", "200"]) == 0
    return root


@pytest.fixture(scope="module")
def bundle(scenario):
    out = scenario / "run1"
    assert main(["run", "--config", str(scenario / "data/pipeline.ini"), "--output", str(out), "--measures", "M1,M10"]) == 0
    return out


def _run(scenario, out, *extra):
    return main(["run", "--config", str(scenario / "data/pipeline.ini"), "--output", str(out), "--measures", "M1,M10", *extra])


def test_bundle_has_declared_files(bundle):
    present = set(digest(bundle))
    assert BUNDLE <= present
    assert not any(p.name.startswith(".") for p in bundle.iterdir())
    root = ET.parse(bundle / "report/trends_M1.svg").getroot()
    assert root.tag.endswith("svg")
    # axes, legend swatches and one segment per pair of defined neighbouring points
    assert len(root.findall("{http://www.w3.org/2000/svg}line")) > 10


def test_report_text_layout(bundle):
    text = (bundle / "report/correlation_report.txt").read_text()
    assert "(a) coordination" in text and "overall" in text


def test_repeat_run_identical(scenario, bundle):
    out = scenario / "run2"
    assert _run(scenario, out) == 0
    assert digest(out) == digest(bundle)


@pytest.mark.slow
def test_threads_do_not_change_bytes(scenario, bundle):
    out = scenario / "run_t8"
    assert _run(scenario, out, "--threads", "8") == 0
    assert digest(out) == digest(bundle)


@pytest.mark.slow
def test_run_equals_chained_stages(scenario, bundle):
    cfg = ["--config", str(scenario / "data/pipeline.ini"), "--output", str(scenario / "chain")]
    for cmd in (["ingest"], ["network"], ["communities"], ["propaganda", "score"]):
        assert main(cmd + cfg) == 0
    assert main(["trends"] + cfg + ["--measures", "M1,M10"]) == 0
    assert main(["report"] + cfg + ["--measures", "M1,M10"]) == 0
    assert digest(scenario / "chain") == digest(bundle)


def test_stage_network_stops_after_backbone(scenario):
    out = scenario / "net_only"
    assert _run(scenario, out, "--stage", "network") == 0
    assert sorted(p.name for p in out.iterdir()) == ["ingest", "network"]
    assert (out / "network/backbone_edges.csv").exists()


def test_missing_model_and_training(scenario, tmp_path, capsys):
    data = scenario / "data"
    ini = tmp_path / "no_model.ini"
    ini.write_text(
        f"[paths]\ntweets = {data / 'tweets.jsonl'}\narticles = {data / 'articles.jsonl'}\n"
        f"signals = {data / 'signals.csv'}\n\n[simnet]\nfraction = 1.0\n"
    )
    out = tmp_path / "out"
    assert main(["run", "--config", str(ini), "--output", str(out)]) == 2
    err = capsys.readouterr().err
    assert "propaganda" in err
    assert not (out / "propaganda").exists()
    assert not any(p.name.startswith(".") for p in out.iterdir())
    assert (out / "communities/assignment.csv").exists()


def test_missing_input_exit_code(tmp_path, capsys):
    assert main(["ingest", "--tweets", str(tmp_path / "nope.jsonl"), "--output", str(tmp_path / "o")]) == 2
    assert "ingest" in capsys.readouterr().err


def test_bad_flag_value(tmp_path):
    assert main(["network", "--alpha", "1.5", "--output", str(tmp_path)]) == 2


def test_flag_overrides_config_and_env(scenario, tmp_path, monkeypatch):
    ini = scenario / "data/pipeline.ini"
    monkeypatch.setenv(CONFIG_ENV, str(ini))
    assert load_config().fraction == 1.0
    assert load_config().tweets == scenario / "data/tweets.jsonl"
    full, half = tmp_path / "full", tmp_path / "half"
    assert main(["network", "--output", str(full)]) == 0
    assert main(["network", "--output", str(half), "--fraction", "0.5"]) == 0

    def n_super(out):
        with open(out / "network/superspreaders.csv") as fh:
            return sum(1 for _ in csv.DictReader(fh))

    assert n_super(half) == pytest.approx(n_super(full) / 2, abs=1)


def test_config_rejects_unknown_key(tmp_path):
    ini = tmp_path / "bad.ini"
    ini.write_text("[simnet]\nfractoin = 0.5\n")
    with pytest.raises(ValueError, match="fractoin"):
        load_config(ini)
    assert main(["network", "--config", str(ini)]) == 2


def test_train_then_score_with_saved_model(scenario, tmp_path):
    data = scenario / "data"
    out = tmp_path / "o"
    base = ["--config", str(data / "pipeline.ini"), "--output", str(out)]
    assert main(["propaganda", "train"] + base) == 0
    assert (out / "model/model.json").exists()
    for cmd in (["ingest"], ["network"], ["communities"]):
        assert main(cmd + base) == 0
    assert main(["propaganda", "score"] + base + ["--model", str(out / "model/model.json")]) == 0
    assert not (out / "propaganda/model.json").exists()
    assert (out / "propaganda/item_scores.csv").stat().st_size > 0
