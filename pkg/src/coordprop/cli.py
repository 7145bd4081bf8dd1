"""Command-line entry point.

Every subcommand reads an optional INI config (``--config`` or
``$COORDPROP_CONFIG``); flags given on the command line override it.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import pipeline, synth
from .config import PipelineConfig, load_config, parse_names
from .pipeline import STAGES, StageError

logger = logging.getLogger("coordprop")


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.split(",") if x.strip())


def _strings(text: str) -> list[str]:
    return [x.strip() for x in text.split(",") if x.strip()]


def _paths(text: str) -> list[Path]:
    return [Path(x) for x in _strings(text)]


# flag -> (config attribute, type, help)
_COMMON = {
    "tweets": ("tweets", Path, "tweet JSONL file"),
    "articles": ("articles", Path, "article JSONL file"),
    "signals": ("signals", Path, "user signal CSV (automation score, suspension)"),
    "output": ("output", Path, "output directory"),
    "threads": ("threads", int, "worker threads (does not change outputs)"),
}
_BY_STAGE = {
    "network": {
        "fraction": ("fraction", float, "superspreader fraction of retweeting users"),
        "alpha": ("alpha", float, "disparity filter significance level"),
    },
    "communities": {
        "resolution": ("resolution", float, "Louvain resolution"),
        "seed": ("seed", int, "Louvain visiting-order seed"),
        "names": ("names", parse_names, 'community names, e.g. "0=LAB,1=CON"'),
    },
    "propaganda": {
        "model": ("model", Path, "trained model JSON"),
        "training": ("training", Path, "labelled training JSONL (text, label)"),
        "lexicons": ("lexicons", _paths, "comma-separated lexicon files"),
        "chunk-tokens": ("chunk_tokens", int, "target tokens per tweet chunk"),
        "lambda": ("lam", float, "L2 penalty"),
        "train-seed": ("train_seed", int, "training order seed"),
        "max-iter": ("max_iter", int, "optimizer iteration cap"),
    },
    "trends": {
        "measures": ("measures", _strings, "comma-separated measure ids, e.g. M1,M2"),
        "primary": ("primary", str, "measure used in the report"),
        "k-grid": ("k_grid", _floats, "comma-separated coordination thresholds"),
    },
}
_STAGE_FLAGS = {
    "ingest": [],
    "network": ["network"],
    "communities": ["network", "communities"],
    "propaganda": ["communities", "propaganda"],
    "trends": ["communities", "trends"],
    "report": ["communities", "trends"],
    "run": ["network", "communities", "propaganda", "trends"],
}


def _add_flags(p: argparse.ArgumentParser, groups) -> None:
    p.add_argument("--config", type=Path, help="INI config file (default: $COORDPROP_CONFIG)")
    table = dict(_COMMON)
    for g in groups:
        table.update(_BY_STAGE[g])
    for flag, (attr, conv, help_) in table.items():
        p.add_argument(f"--{flag}", dest=attr, type=conv, default=None, help=help_)


def _config(args) -> PipelineConfig:
    cfg = load_config(args.config)
    cfg.update(**{k: getattr(args, k, None) for k in vars(PipelineConfig())})
    cfg.validate()
    return cfg


def _scenario(args) -> synth.ScenarioConfig:
    if args.scenario:
        with open(args.scenario, encoding="utf-8") as fh:
            d = json.load(fh)
    else:
        comms = []
        for part in args.communities.split(","):
            size, rho, pi = part.split(":")
            comms.append({"size": int(size), "rho": float(rho), "pi": float(pi)})
        d = {"communities": comms}
    if args.seed is not None:
        d["seed"] = args.seed
    return synth.ScenarioConfig.from_dict(d)


def _write_scenario_config(paths: dict, out: Path) -> Path:
    """A config that runs the pipeline on a synthetic scenario.

    Synthetic scenarios have no long tail of casual retweeters, so every
    retweeting user is kept as a superspreader.
    """
    lines = ["[paths]"]
    for key in ("tweets", "articles", "signals", "training"):
        if key in paths:
            lines.append(f"{key} = {Path(paths[key]).name}")
    lines += ["", "[simnet]", "fraction = 1.0", ""]
    path = Path(out) / "pipeline.ini"
    path.write_text("\n".join(lines), encoding="utf-8")
    return path


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coordprop", description="Coordination and propaganda analysis pipeline")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    for name in ("ingest", "network", "communities", "trends", "report"):
        _add_flags(sub.add_parser(name, help=f"run the {name} stage"), _STAGE_FLAGS[name])

    prop = sub.add_parser("propaganda", help="train the classifier or score items")
    prop_sub = prop.add_subparsers(dest="action", required=True)
    _add_flags(prop_sub.add_parser("train", help="fit the classifier on a labelled corpus"), ["propaganda"])
    _add_flags(prop_sub.add_parser("score", help="score the network users' tweet chunks and articles"), _STAGE_FLAGS["propaganda"])

    run = sub.add_parser("run", help="run the full pipeline")
    _add_flags(run, _STAGE_FLAGS["run"])
    run.add_argument("--stage", choices=STAGES, help="stop after this stage")

    sp = sub.add_parser("synth", help="generate a synthetic scenario with planted communities")
    sp.add_argument("out", type=Path, help="output directory")
    sp.add_argument("--scenario", type=Path, help="scenario JSON (ScenarioConfig fields)")
    sp.add_argument("--communities", default="80:0.9:0.9,60:0.9:0.5,50:0.9:0.1", help="size:rho:pi,... (ignored with --scenario)")
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--training-items", type=int, default=400, help="labelled training texts to write (0 for none)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "synth":
            corpus, truth = synth.generate(_scenario(args))
            paths = synth.write_scenario(corpus, truth, args.out, args.training_items)
            paths["config"] = _write_scenario_config(paths, args.out)
            for key, path in sorted(paths.items()):
                print(f"{key}: {path}")
            return 0
        cfg = _config(args)
        if args.command == "ingest":
            pipeline.stage_ingest(cfg)
        elif args.command == "network":
            pipeline.stage_network(cfg)
        elif args.command == "communities":
            pipeline.stage_communities(cfg)
        elif args.command == "propaganda":
            if args.action == "train":
                pipeline.stage_propaganda_train(cfg)
            else:
                pipeline.stage_propaganda(cfg)
        elif args.command == "trends":
            pipeline.stage_trends(cfg)
        elif args.command == "report":
            pipeline.stage_report(cfg)
        elif args.command == "run":
            pipeline.run(cfg, args.stage)
    except StageError as exc:
        print(f"coordprop: error: {exc}", file=sys.stderr)
        return exc.code
    except (ValueError, FileNotFoundError, KeyError) as exc:
        print(f"coordprop: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
