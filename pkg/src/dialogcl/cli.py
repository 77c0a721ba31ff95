"""Command-line entry point.

Subcommands: score, analyze, curriculum, train, eval. Every run writes
``manifest.json`` (resolved configuration plus version) into --out.

Exit codes: 0 success, 2 usage or bad parameter value, 3 unreadable or
malformed input, 4 degenerate data, 5 learner protocol failure, 6 other
package errors.
"""

import argparse
import csv
import json
import logging
import shlex
import subprocess
import sys
from dataclasses import asdict
from pathlib import Path

from . import __version__
from .analysis import (ATTRIBUTE_NAMES, attribute_values, correlation_table,
                       histogram, summarize)
from .attributes import (AttributeScores, BigramConfidenceProvider,
                         load_confidence_file, score_corpus)
from .corpus import load_corpus, tokenize
from .curriculum import ATTRIBUTES, build_all_curricula
from .embeddings import hashed_table, load_embeddings
from .errors import (DegenerateDataError, DialogclError, InputFormatError,
                     ProtocolError)
from .learner import (CorpusValidator, ExternalLearner, SimulatedLearner,
                      easiness_matrix)
from .metrics import METRIC_NAMES, evaluate_responses
from .scheduler import TrainConfig, train_loop

log = logging.getLogger("dialogcl")

TRAIN_DEFAULTS = {
    "gamma": 50,
    "T": 1000,
    "c0": 0.01,
    "batch_size": 32,
    "mode": "adaptive",
    "steps": 2000,
    "seed": 0,
    "policy_lr": 0.1,
    "patience": 5,
    "baseline": False,
    "learner_cmd": None,
    "learner_timeout": 60.0,
    "val_fraction": 0.1,
}


def _version_string() -> str:
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            cwd=Path(__file__).resolve().parent, capture_output=True,
            text=True, timeout=5)
        if out.returncode == 0:
            return f"{__version__}+{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def _write_manifest(out_dir: Path, subcommand: str, config: dict) -> None:
    manifest = {"subcommand": subcommand, "config": config,
                "version": _version_string()}
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _prepare_out(path: str) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _add_input_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--corpus", required=True, help="corpus file (tsv or jsonl)")
    sub.add_argument("--corpus-format", choices=["tsv", "jsonl"], default=None,
                     help="corpus format; inferred from the suffix when omitted")
    sub.add_argument("--embeddings", default=None, help="word vector text file")
    sub.add_argument("--hashed-embeddings", action="store_true",
                     help="fall back to deterministic hashed word vectors")
    sub.add_argument("--hashed-dim", type=int, default=64)
    sub.add_argument("--hashed-seed", type=int, default=0)
    sub.add_argument("--confidence", default="builtin",
                     help="'builtin' bigram proxy or a path to an id,loss file")
    sub.add_argument("--unigram-source", choices=["both", "responses"],
                     default="both")
    sub.add_argument("--threads", type=int, default=1,
                     help="scorer worker threads")
    sub.add_argument("--out", required=True, help="output directory")


def _load_inputs(args):
    corpus = load_corpus(args.corpus, args.corpus_format, args.unigram_source)
    if args.embeddings is not None:
        table = load_embeddings(args.embeddings)
    elif args.hashed_embeddings:
        log.warning("no embeddings file given; using hashed fallback vectors "
                    "(dim=%d seed=%d)", args.hashed_dim, args.hashed_seed)
        table = hashed_table(args.hashed_dim, args.hashed_seed)
    else:
        raise InputFormatError(
            "no embeddings: pass --embeddings FILE or opt into --hashed-embeddings")
    if args.confidence == "builtin":
        provider = BigramConfidenceProvider(corpus)
    else:
        provider = load_confidence_file(args.confidence)
    return corpus, table, provider


def _score_record(s: AttributeScores) -> dict:
    return {
        "id": s.sample_id,
        "specificity": s.specificity,
        "repetitiveness": s.repetitiveness,
        "query_relatedness": s.query_relatedness,
        "continuity": s.continuity,
        "model_confidence": s.model_confidence,
    }


def _write_scores(path: Path, scores: list[AttributeScores]) -> None:
    with path.open("w", encoding="utf-8") as fh:
        for s in scores:
            fh.write(json.dumps(_score_record(s)) + "\n")


def read_scores(path: str | Path) -> list[AttributeScores]:
    """Load a scores.jsonl file produced by the score subcommand."""
    out = []
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                out.append(AttributeScores(
                    sample_id=int(rec["id"]),
                    specificity=float(rec["specificity"]),
                    repetitiveness=float(rec["repetitiveness"]),
                    query_relatedness=float(rec["query_relatedness"]),
                    continuity=(None if rec["continuity"] is None
                                else float(rec["continuity"])),
                    model_confidence=float(rec["model_confidence"]),
                ))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise InputFormatError(f"{path}:{lineno}: bad score record: {exc}")
    if not out:
        raise DegenerateDataError(f"{path}: no score records")
    return out


def _input_config(args) -> dict:
    return {k: getattr(args, k) for k in
            ("corpus", "corpus_format", "embeddings", "hashed_embeddings",
             "hashed_dim", "hashed_seed", "confidence", "unigram_source",
             "threads")}


def cmd_score(args) -> None:
    out = _prepare_out(args.out)
    corpus, table, provider = _load_inputs(args)
    scores = score_corpus(corpus, table, provider, args.threads)
    _write_scores(out / "scores.jsonl", scores)
    _write_manifest(out, "score", _input_config(args))
    log.info("scored %d samples (%d rows dropped) -> %s",
             len(scores), corpus.n_dropped, out / "scores.jsonl")


def cmd_analyze(args) -> None:
    out = _prepare_out(args.out)
    if args.scores is not None:
        scores = read_scores(args.scores)
        config = {"scores": args.scores}
    else:
        corpus, table, provider = _load_inputs(args)
        scores = score_corpus(corpus, table, provider, args.threads)
        config = _input_config(args)

    distributions = {}
    for name in ATTRIBUTE_NAMES:
        values = [v for v in attribute_values(scores, name) if v is not None]
        summary = summarize(name, values)
        counts, edges = histogram(values)
        record = asdict(summary)
        record.pop("attribute")
        record["histogram"] = {"counts": counts, "edges": edges}
        distributions[name] = record
    taus = correlation_table(scores)

    report = {
        "n_samples": len(scores),
        "distributions": distributions,
        "correlations": [asdict(t) for t in taus],
    }
    (out / "analysis.json").write_text(
        json.dumps(report, indent=2) + "\n", encoding="utf-8")
    with (out / "distributions.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["attribute", "min", "q1", "median", "q3", "max",
                         "mean", "outlier_count"])
        for name in ATTRIBUTE_NAMES:
            d = distributions[name]
            writer.writerow([name, d["minimum"], d["q1"], d["median"], d["q3"],
                             d["maximum"], d["mean"], d["outlier_count"]])
    with (out / "correlations.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["attribute_a", "attribute_b", "tau", "n"])
        for t in taus:
            writer.writerow([t.attribute_a, t.attribute_b, t.tau, t.n])
    _write_manifest(out, "analyze", config)


def cmd_curriculum(args) -> None:
    out = _prepare_out(args.out)
    corpus, table, provider = _load_inputs(args)
    scores = score_corpus(corpus, table, provider, args.threads)
    curricula = build_all_curricula(scores, args.direction)
    with (out / "curricula.jsonl").open("w", encoding="utf-8") as fh:
        for cur in curricula:
            fh.write(json.dumps({
                "attribute": cur.attribute,
                "direction": cur.direction,
                "size": len(cur.order),
                "order": cur.order,
            }) + "\n")
    config = _input_config(args)
    config["direction"] = args.direction
    _write_manifest(out, "curriculum", config)


def _resolve_train_config(args) -> dict:
    resolved = dict(TRAIN_DEFAULTS)
    if args.config is not None:
        try:
            loaded = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except OSError as exc:
            raise InputFormatError(f"cannot read config {args.config}: {exc}")
        except json.JSONDecodeError as exc:
            raise InputFormatError(f"{args.config}: invalid JSON: {exc}")
        unknown = set(loaded) - set(TRAIN_DEFAULTS)
        if unknown:
            raise InputFormatError(
                f"{args.config}: unknown config keys {sorted(unknown)}")
        resolved.update(loaded)
    # explicitly passed flags win over the config file
    for key in TRAIN_DEFAULTS:
        if hasattr(args, key):
            resolved[key] = getattr(args, key)
    return resolved


def cmd_train(args) -> None:
    out = _prepare_out(args.out)
    train_cfg = _resolve_train_config(args)
    corpus, table, provider = _load_inputs(args)
    scores = score_corpus(corpus, table, provider, args.threads)

    config = TrainConfig(
        steps=int(train_cfg["steps"]),
        validate_every=int(train_cfg["gamma"]),
        duration=int(train_cfg["T"]),
        initial_fraction=float(train_cfg["c0"]),
        batch_size=int(train_cfg["batch_size"]),
        mode=str(train_cfg["mode"]),
        seed=int(train_cfg["seed"]),
        policy_lr=float(train_cfg["policy_lr"]),
        patience=(None if train_cfg["patience"] in (None, "none")
                  else int(train_cfg["patience"])),
        use_baseline=bool(train_cfg["baseline"]),
    )
    direction = "anti" if config.mode == "anti" else "easy_first"

    learner = None
    external = None
    try:
        if train_cfg["learner_cmd"] is not None:
            n_val = max(1, int(len(corpus.samples) * float(train_cfg["val_fraction"])))
            val_samples = corpus.samples[-n_val:]
            train_samples = corpus.samples[:-n_val]
            if not train_samples:
                raise DegenerateDataError("validation split leaves no training data")
            train_ids = {s.id for s in train_samples}
            train_scores = [s for s in scores if s.sample_id in train_ids]
            curricula = (build_all_curricula(train_scores, direction)
                         if config.mode != "none" else None)
            external = ExternalLearner(shlex.split(train_cfg["learner_cmd"]),
                                       timeout=float(train_cfg["learner_timeout"]))
            external.init({"seed": config.seed})
            learner = external
            validator = CorpusValidator(table, corpus, val_samples)
            samples = (corpus.samples if config.mode != "none"
                       else list(train_samples))
        else:
            curricula = (build_all_curricula(scores, direction)
                         if config.mode != "none" else None)
            learner = SimulatedLearner(easiness_matrix(scores), noise_seed=config.seed)
            validator = SimulatedLearner.validate
            samples = corpus.samples

        report = train_loop(learner, curricula, config, validator, samples)
    finally:
        if external is not None:
            try:
                external.shutdown()
            except ProtocolError:
                external.close()

    with (out / "steps.jsonl").open("w", encoding="utf-8") as fh:
        for rec in report["steps"]:
            fh.write(json.dumps(rec) + "\n")
    with (out / "validations.jsonl").open("w", encoding="utf-8") as fh:
        for rec in report["validations"]:
            fh.write(json.dumps(rec) + "\n")
    with (out / "metrics_trajectory.csv").open("w", newline="",
                                               encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", *METRIC_NAMES, "delta", "reward"])
        for rec in report["validations"]:
            writer.writerow([rec["step"],
                             *[rec["metrics"][m] for m in METRIC_NAMES],
                             rec["delta"], rec["reward"]])
    (out / "report.json").write_text(
        json.dumps({"config": report["config"], "final": report["final"]},
                   indent=2) + "\n", encoding="utf-8")
    _write_manifest(out, "train", {**_input_config(args), **train_cfg})


def _read_utterances(path: str) -> list[list[str]]:
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise InputFormatError(f"cannot read {path}: {exc}")
    return [tokenize(line) for line in lines]


def cmd_eval(args) -> None:
    out = _prepare_out(args.out)
    corpus, table, _provider = _load_inputs(args)
    queries = _read_utterances(args.queries)
    hypotheses = _read_utterances(args.hypotheses)
    references = _read_utterances(args.references)
    if not (len(queries) == len(hypotheses) == len(references)):
        raise InputFormatError(
            f"line counts differ: queries={len(queries)} "
            f"hypotheses={len(hypotheses)} references={len(references)}")
    vector = evaluate_responses(table, corpus, queries, hypotheses, references)
    (out / "eval.json").write_text(
        json.dumps(vector.as_dict(), indent=2) + "\n", encoding="utf-8")
    config = _input_config(args)
    config.update({"queries": args.queries, "hypotheses": args.hypotheses,
                   "references": args.references})
    _write_manifest(out, "eval", config)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dialogcl",
        description="Dialogue complexity scoring and adaptive multi-curricula training")
    parser.add_argument("--version", action="version", version=_version_string())
    parser.add_argument("-v", "--verbose", action="store_true")
    subs = parser.add_subparsers(dest="subcommand", required=True)

    p_score = subs.add_parser("score", help="score each sample's five attributes")
    _add_input_flags(p_score)
    p_score.set_defaults(func=cmd_score)

    p_analyze = subs.add_parser(
        "analyze", help="attribute distributions and pairwise rank correlations")
    _add_input_flags(p_analyze)
    p_analyze.add_argument("--scores", default=None,
                           help="reuse a scores.jsonl instead of rescoring")
    p_analyze.set_defaults(func=cmd_analyze)

    p_cur = subs.add_parser("curriculum", help="export per-attribute orderings")
    _add_input_flags(p_cur)
    p_cur.add_argument("--direction", choices=["easy_first", "anti"],
                       default="easy_first")
    p_cur.set_defaults(func=cmd_curriculum)

    p_train = subs.add_parser("train", help="run a scheduled training session")
    _add_input_flags(p_train)
    p_train.add_argument("--config", default=None,
                         help="JSON file with training keys; flags override it")
    p_train.add_argument("--gamma", type=int, default=argparse.SUPPRESS,
                         help=f"validation interval (default {TRAIN_DEFAULTS['gamma']})")
    p_train.add_argument("--T", type=int, default=argparse.SUPPRESS, dest="T",
                         help=f"pacing duration (default {TRAIN_DEFAULTS['T']})")
    p_train.add_argument("--c0", type=float, default=argparse.SUPPRESS,
                         help=f"initial prefix fraction (default {TRAIN_DEFAULTS['c0']})")
    p_train.add_argument("--batch-size", type=int, default=argparse.SUPPRESS)
    p_train.add_argument("--mode", default=argparse.SUPPRESS,
                         help="adaptive | random_policy | anti | none | single:<attribute>")
    p_train.add_argument("--steps", type=int, default=argparse.SUPPRESS)
    p_train.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    p_train.add_argument("--policy-lr", type=float, default=argparse.SUPPRESS)
    p_train.add_argument("--patience", type=int, default=argparse.SUPPRESS,
                         help="halt after this many consecutive negative deviations")
    p_train.add_argument("--baseline", action="store_true", default=argparse.SUPPRESS,
                         help="subtract a moving-average reward baseline")
    p_train.add_argument("--learner-cmd", default=argparse.SUPPRESS,
                         help="external learner command line (default: simulated)")
    p_train.add_argument("--learner-timeout", type=float, default=argparse.SUPPRESS)
    p_train.add_argument("--val-fraction", type=float, default=argparse.SUPPRESS,
                         help="held-out tail fraction for external-learner validation")
    p_train.set_defaults(func=cmd_train)

    p_eval = subs.add_parser("eval", help="13 response-quality metrics")
    _add_input_flags(p_eval)
    p_eval.add_argument("--queries", required=True, help="one query per line")
    p_eval.add_argument("--hypotheses", required=True, help="one response per line")
    p_eval.add_argument("--references", required=True, help="one reference per line")
    p_eval.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        args.func(args)
    except InputFormatError as exc:
        log.error("%s", exc)
        return 3
    except (DegenerateDataError, KeyError) as exc:
        log.error("%s", exc)
        return 4
    except ProtocolError as exc:
        log.error("%s", exc)
        return 5
    except DialogclError as exc:
        log.error("%s", exc)
        return 6
    except ValueError as exc:
        log.error("%s", exc)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
