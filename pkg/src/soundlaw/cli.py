"""Command-line interface.

Subcommands: tokenize, apply, derive, parse-law, datagen, bench, eval,
stats, report.  Every file-producing run writes a sidecar manifest with
hashes of its inputs and outputs so results can be reproduced exactly.

Exit codes: 0 ok, 2 parse error, 3 application error, 4 gateway error,
5 generation error, 6 schema error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from datetime import datetime, timezone
from importlib.resources import files
from pathlib import Path

from . import __version__, benchmark, datagen, dsl, evaluation, gateway, stats as stats_mod
from .phonology import (
    PhonologyError,
    SegmentInventory,
    UnsegmentableInput,
    default_inventory,
    load_feature_table_file,
    load_lexicon,
    preprocess,
)
from .rules import NonCanonicalTokenSeq, RuleError, apply_cascade, apply_to_lexicon
from .tasks import read_tasks, validate_task, word_to_str, write_tasks

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_APPLY = 3
EXIT_GATEWAY = 4
EXIT_GENERATION = 5
EXIT_SCHEMA = 6


class CliError(Exception):
    def __init__(self, message: str, code: int):
        self.code = code
        super().__init__(message)


def _classify(exc: Exception) -> int:
    if isinstance(exc, (dsl.SchemaError, evaluation.EvaluationError, benchmark.EmptyDataset)):
        return EXIT_SCHEMA
    if isinstance(exc, (dsl.DslError, UnsegmentableInput)):
        return EXIT_PARSE
    if isinstance(exc, gateway.GatewayError):
        return EXIT_GATEWAY
    if isinstance(exc, (datagen.GenerationError, benchmark.BenchmarkError)):
        return EXIT_GENERATION
    if isinstance(exc, (RuleError, NonCanonicalTokenSeq, PhonologyError)):
        return EXIT_APPLY
    if isinstance(exc, stats_mod.StatsError):
        return EXIT_SCHEMA
    return EXIT_APPLY


# ---------------------------------------------------------------------------
# shared helpers


def _inventory(args) -> SegmentInventory:
    if getattr(args, "table", None):
        return load_feature_table_file(args.table)
    return default_inventory()


def _read_words(args, inv: SegmentInventory, attr: str = "words"):
    words = []
    if getattr(args, "lexicon", None):
        words.extend(load_lexicon(args.lexicon, inv))
    for raw in getattr(args, attr, None) or []:
        words.append(inv.segment(raw))
    return words


def _load_law(args, inv: SegmentInventory):
    if getattr(args, "rule", None):
        text = args.rule
    elif getattr(args, "law_file", None):
        text = Path(args.law_file).read_text(encoding="utf-8")
    else:
        raise CliError("no rule given: use -r/--rule or --law-file", EXIT_PARSE)
    text = text.strip()
    if text.startswith("{"):
        return dsl.read_law(text)
    if "BasicAction" in text:
        parsed = dsl.parse_program_text(text, inv)
        if not parsed.laws:
            raise CliError(f"no parseable constructor: {[d.message for d in parsed.diagnostics]}", EXIT_PARSE)
        return parsed.laws[0]
    line = next(
        (ln for ln in text.splitlines() if ln.strip() and not ln.strip().startswith("#")), ""
    )
    return dsl.lower_classical(dsl.parse_classical(line), inv)


def _sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_manifest(primary_out, command: str, options: dict, inputs, outputs, started: str):
    manifest = {
        "command": command,
        "argv": sys.argv[1:],
        "package_version": __version__,
        "options": options,
        "inputs": {str(p): _sha256_file(p) for p in inputs if p and Path(p).exists()},
        "outputs": {str(p): _sha256_file(p) for p in outputs if p and Path(p).exists()},
        "started": started,
        "finished": datetime.now(timezone.utc).isoformat(),
    }
    path = str(primary_out) + ".manifest.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, ensure_ascii=False, indent=2)
    return path


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _print_or_write(text: str, out) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _load_config(args) -> dict:
    if getattr(args, "config", None):
        with open(args.config, encoding="utf-8") as fh:
            return json.load(fh)
    return {}


def _gateway_from_args(args, config: dict) -> gateway.Gateway:
    def pick(flag, key, default):
        if flag is not None:
            return flag
        return config.get(key, default)

    gw_config = gateway.GatewayConfig(
        endpoint=pick(args.endpoint, "endpoint", gateway.GatewayConfig.endpoint),
        model=pick(args.model, "model", gateway.GatewayConfig.model),
        temperature=float(pick(args.temperature, "temperature", gateway.GatewayConfig.temperature)),
        samples=int(pick(None, "samples", gateway.GatewayConfig.samples)),
        max_tokens=int(pick(None, "max_tokens", gateway.GatewayConfig.max_tokens)),
        retry_budget=int(pick(None, "retry_budget", gateway.GatewayConfig.retry_budget)),
        cache_dir=pick(args.cache_dir, "cache_dir", None),
        cache_only=bool(args.cache_only or config.get("cache_only", False)),
        max_parallel=max(1, args.jobs),
    )
    gw = gateway.Gateway(gw_config)
    for fixture_path in args.fixtures or []:
        gw.add_fixtures(fixture_path)
    return gw


# ---------------------------------------------------------------------------
# subcommands


def cmd_tokenize(args) -> int:
    inv = _inventory(args)
    lines = []
    for word in _read_words(args, inv):
        if args.preprocessed:
            lines.append(" ".join(preprocess(word)))
        else:
            lines.append(word_to_str(word))
    _print_or_write("\n".join(lines) + ("\n" if lines else ""), args.out)
    return EXIT_OK


def cmd_apply(args) -> int:
    inv = _inventory(args)
    law = _load_law(args, inv)
    words = _read_words(args, inv)
    outputs, changed = apply_to_lexicon(law, words, inv)
    lines = []
    for word, out, ch in zip(words, outputs, changed):
        if args.changed_only and not ch:
            continue
        lines.append(f"{word_to_str(word)}\t{word_to_str(out)}")
    _print_or_write("\n".join(lines) + ("\n" if lines else ""), args.out)
    return EXIT_OK


def cmd_derive(args) -> int:
    inv = _inventory(args)
    cascade = benchmark.load_cascade_file(args.cascade, inv)
    words = _read_words(args, inv)
    trace = apply_cascade(cascade, words, inv)
    lines = []
    if args.trace:
        for stage in trace.stages:
            n = sum(stage.changed)
            lines.append(f"== {stage.label} ({n} changed)")
            for w, o, ch in zip(stage.inputs, stage.outputs, stage.changed):
                if ch:
                    lines.append(f"  {word_to_str(w)}\t->\t{word_to_str(o)}")
    for word, out in zip(words, trace.final):
        lines.append(f"{word_to_str(word)}\t{word_to_str(out)}")
    _print_or_write("\n".join(lines) + ("\n" if lines else ""), args.out)
    return EXIT_OK


def cmd_parse_law(args) -> int:
    inv = _inventory(args)
    if args.rule:
        text = args.rule
    elif args.input:
        text = Path(args.input).read_text(encoding="utf-8")
    else:
        text = sys.stdin.read()
    laws = []
    if "BasicAction" in text:
        parsed = dsl.parse_program_text(text, inv)
        for diag in parsed.diagnostics:
            print(f"warning: {diag.code}: {diag.message}", file=sys.stderr)
        laws.extend(parsed.laws)
        if not laws:
            raise CliError("no parseable constructor in input", EXIT_PARSE)
    else:
        for line in text.splitlines() or [text]:
            line = line.strip()
            if line and not line.startswith("#"):
                laws.append(dsl.lower_classical(dsl.parse_classical(line), inv))
    _print_or_write("\n".join(dsl.print_law(law) for law in laws) + "\n", args.out)
    return EXIT_OK


def _bundled(name: str) -> Path:
    return files("soundlaw") / "data" / name


def cmd_datagen(args) -> int:
    started = _now()
    inv = _inventory(args)
    config = _load_config(args)
    cfg = datagen.GenConfig(
        n_examples=args.n_examples,
        seed=args.seed,
        retry_budget=args.retry_budget,
    )
    inputs_used: list[str] = []
    if args.condition == "rp-ri":
        tasks = datagen.gen_rp_ri(cfg, args.count, inv, jobs=args.jobs)
    elif args.condition in ("rp-li", "rp-pi"):
        gw = _gateway_from_args(args, config)
        if args.condition == "rp-li":
            pool_path = args.seed_lexicon or str(_bundled("nonce_words.txt"))
        else:
            pool_path = args.seed_lexicon or str(_bundled("demo_protolexicon_poc.txt"))
        inputs_used.append(pool_path)
        pool = load_lexicon(pool_path, inv)
        tasks = datagen.gen_llm_tasks(args.condition, gw, pool, cfg, args.count, inv)
    elif args.condition == "idp-pi":
        rules_path = args.rules or str(_bundled("demo_rules.txt"))
        lex_path = args.lexicon or str(_bundled("demo_protolexicon_poc.txt"))
        inputs_used.extend([rules_path, lex_path])
        db = dsl.load_rule_db_file(rules_path, inv)
        lexicon = load_lexicon(lex_path, inv)
        tasks = datagen.gen_idp_pi(db, lexicon, cfg, args.count, inv)
    else:
        raise CliError(f"unknown condition {args.condition!r}", EXIT_GENERATION)
    write_tasks(args.out, tasks)
    _write_manifest(
        args.out,
        "datagen",
        {"condition": args.condition, "count": args.count, "seed": args.seed, "n_examples": args.n_examples},
        inputs_used + (args.fixtures or []),
        [args.out],
        started,
    )
    print(f"wrote {len(tasks)} tasks to {args.out}", file=sys.stderr)
    return EXIT_OK


def cmd_bench(args) -> int:
    started = _now()
    inv = _inventory(args)
    cascade_path = args.cascade or str(_bundled("demo_cascade.rules"))
    lexicon_path = args.lexicon or str(_bundled("demo_lexicon.txt"))
    cascade = benchmark.load_cascade_file(cascade_path, inv)
    lexicon = load_lexicon(lexicon_path, inv)
    spec = benchmark.BenchmarkSpec(
        cascade=cascade,
        lexicon=tuple(lexicon),
        language_pair=args.pair,
        distractor_fraction=args.distractor_fraction,
        distractor_min=args.distractor_min,
        seed=args.seed,
    )
    tasks, warnings = benchmark.build_single_law_dataset(spec, inv)
    for warning in warnings:
        print(f"warning: {warning}", file=sys.stderr)
    write_tasks(args.out, tasks)
    stats_path = str(args.out) + ".stats.json"
    Path(stats_path).write_text(
        benchmark.stats_to_json(benchmark.dataset_stats(tasks)) + "\n", encoding="utf-8"
    )
    _write_manifest(
        args.out,
        "bench",
        {"pair": args.pair, "seed": args.seed, "distractor_fraction": args.distractor_fraction},
        [cascade_path, lexicon_path],
        [args.out, stats_path],
        started,
    )
    print(f"wrote {len(tasks)} tasks to {args.out}", file=sys.stderr)
    return EXIT_OK


def _load_samples(path, inv: SegmentInventory) -> dict[str, list]:
    """samples JSONL -> {task_id: [candidate-by-index, ...]}."""
    by_task: dict[str, dict[int, object]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                doc = json.loads(line)
                task_id = doc["task_id"]
                index = int(doc["sample_index"])
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise dsl.SchemaError(f"samples line {lineno}: {exc}")
            if "program" in doc and doc["program"] is not None:
                candidate = dsl.doc_to_law(doc["program"])
            elif "raw_text" in doc:
                laws = dsl.parse_program_text(doc["raw_text"], inv).laws
                candidate = list(laws) if laws else None
            else:
                candidate = None
            by_task.setdefault(task_id, {})[index] = candidate
    return {
        task_id: [cands[i] for i in sorted(cands)] for task_id, cands in by_task.items()
    }


def cmd_eval(args) -> int:
    started = _now()
    inv = _inventory(args)
    tasks = read_tasks(args.tasks)
    samples = _load_samples(args.samples, inv)
    scored_tasks = []
    pairs = []
    for task in tasks:
        cands = samples.get(task.id)
        if not cands:
            print(f"warning: no samples for task {task.id}, skipped", file=sys.stderr)
            continue
        pairs.append((task, cands))
        scored_tasks.append(task)
    if not pairs:
        raise evaluation.EmptyDataset("no task had samples")
    for task in scored_tasks:
        for warning in validate_task(task, inv):
            print(f"warning: {warning}", file=sys.stderr)
    reports = evaluation.evaluate_many(pairs, inv, char_level=args.char_level, jobs=args.jobs)
    doc = evaluation.summarize(reports, scored_tasks)
    json_path = f"{args.out}.json"
    md_path = f"{args.out}.md"
    Path(json_path).write_text(
        json.dumps(doc, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
    )
    md = "".join(
        evaluation.report_markdown(doc, metric) + "\n"
        for metric in ("pass_rate", "reward_at_1", "reward_at_3")
    )
    Path(md_path).write_text(md, encoding="utf-8")
    _write_manifest(
        json_path,
        "eval",
        {"char_level": args.char_level},
        [args.tasks, args.samples],
        [json_path, md_path],
        started,
    )
    agg = doc["aggregates"]
    print(
        f"pass_rate={agg['pass_rate']:.4f} reward@1={agg['reward_at_1']:.4f} over {agg['n_tasks']} tasks",
        file=sys.stderr,
    )
    return EXIT_OK


def _stats_vector(path, prop: str) -> list[float]:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if isinstance(doc, list):
        return [float(v) for v in doc]
    if "per_task" not in doc:
        raise dsl.SchemaError(f"{path}: neither a flat array nor an eval report")
    out: list[float] = []
    for entry in doc["per_task"]:
        if prop == "reward_per_program":
            out.extend(float(r) for r in entry["rewards"])
        elif prop == "passing_programs":
            out.append(float(sum(1 for r in entry["rewards"] if r == 1.0)))
        elif prop == "pass_rate":
            out.append(1.0 if entry["passed"] else 0.0)
        else:
            raise dsl.SchemaError(f"unknown property {prop!r}")
    return out


def cmd_stats(args) -> int:
    if args.test != "wilcoxon":
        raise CliError(f"unknown test {args.test!r}", EXIT_SCHEMA)
    alpha_adjusted = stats_mod.bonferroni(args.alpha, args.m)
    doc: dict = {
        "test": "wilcoxon-signed-rank",
        "alpha": args.alpha,
        "m": args.m,
        "alpha_adjusted": alpha_adjusted,
    }
    if args.x and args.y:
        x = _stats_vector(args.x, args.property)
        y = _stats_vector(args.y, args.property)
        result = stats_mod.wilcoxon_signed_rank(x, y, alternative=args.alternative)
        doc.update(
            {
                "comparison": args.name or f"{args.x} vs {args.y}",
                "property": args.property,
                "alternative": args.alternative,
                "n": result.n,
                "statistic": result.statistic,
                "p": result.pvalue,
                "method": result.method,
                "significant": result.pvalue < alpha_adjusted,
            }
        )
    _print_or_write(json.dumps(doc, ensure_ascii=False, indent=2) + "\n", args.out)
    return EXIT_OK


def cmd_report(args) -> int:
    with open(args.eval, encoding="utf-8") as fh:
        doc = json.load(fh)
    if args.format == "json":
        _print_or_write(json.dumps(doc["aggregates"], ensure_ascii=False, indent=2) + "\n", args.out)
    else:
        md = "".join(
            evaluation.report_markdown(doc, metric) + "\n"
            for metric in ("pass_rate", "reward_at_1", "reward_at_3")
        )
        _print_or_write(md, args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="soundlaw", description=__doc__)
    parser.add_argument("--version", action="version", version=f"soundlaw {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="master RNG seed")
    common.add_argument("--jobs", type=int, default=1, help="worker parallelism")
    common.add_argument("--config", help="JSON config file (flags win over it)")
    common.add_argument("--cache-only", action="store_true", help="never touch the network")
    common.add_argument("--format", choices=("json", "md"), default="md")
    common.add_argument("--table", help="feature table file (defaults to the bundled one)")
    common.add_argument("--out", help="output path (stdout when omitted)")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("tokenize", parents=[common], help="segment words into phones")
    p.add_argument("words", nargs="*", help="words to segment")
    p.add_argument("--lexicon", help="read words from a lexicon file")
    p.add_argument("--preprocessed", action="store_true", help="print boundary/separator tokens")
    p.set_defaults(func=cmd_tokenize)

    p = sub.add_parser("apply", parents=[common], help="apply one law to words")
    p.add_argument("words", nargs="*")
    p.add_argument("-r", "--rule", help="classical rule, e.g. 't > d / _ #'")
    p.add_argument("--law-file", help="law JSON or classical rule file")
    p.add_argument("--lexicon")
    p.add_argument("--changed-only", action="store_true")
    p.set_defaults(func=cmd_apply)

    p = sub.add_parser("derive", parents=[common], help="run a cascade over a lexicon")
    p.add_argument("words", nargs="*")
    p.add_argument("--cascade", required=True)
    p.add_argument("--lexicon")
    p.add_argument("--trace", action="store_true", help="print per-law diffs")
    p.set_defaults(func=cmd_derive)

    p = sub.add_parser("parse-law", parents=[common], help="parse rules to law JSON")
    p.add_argument("-r", "--rule")
    p.add_argument("--input", help="file with classical rules or constructor text")
    p.set_defaults(func=cmd_parse_law)

    p = sub.add_parser("datagen", parents=[common], help="generate synthetic PBE tasks")
    p.add_argument("--condition", required=True, choices=("rp-ri", "rp-li", "rp-pi", "idp-pi"))
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--n-examples", type=int, default=50)
    p.add_argument("--retry-budget", type=int, default=20)
    p.add_argument("--seed-lexicon", help="seed word list (rp-li nonce words / rp-pi protolexicon)")
    p.add_argument("--rules", help="rule database file (idp-pi)")
    p.add_argument("--lexicon", help="input lexicon (idp-pi)")
    p.add_argument("--fixtures", action="append", help="recorded transcript JSONL (repeatable)")
    p.add_argument("--endpoint", help="chat-completion endpoint URL")
    p.add_argument("--model")
    p.add_argument("--temperature", type=float)
    p.add_argument("--cache-dir")
    p.set_defaults(func=cmd_datagen)

    p = sub.add_parser("bench", parents=[common], help="build a single-law dataset from a cascade")
    p.add_argument("--cascade", help="cascade file (bundled demo when omitted)")
    p.add_argument("--lexicon", help="protoform lexicon (bundled demo when omitted)")
    p.add_argument("--pair", default="demo", help="language-pair label")
    p.add_argument("--distractor-fraction", type=float, default=0.15)
    p.add_argument("--distractor-min", type=int, default=2)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("eval", parents=[common], help="score candidate programs against tasks")
    p.add_argument("--tasks", required=True)
    p.add_argument("--samples", required=True, help="JSONL of {task_id, sample_index, program|raw_text}")
    p.add_argument("--char-level", action="store_true", help="character-level edit distance")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("stats", parents=[common], help="paired significance tests")
    p.add_argument("--test", default="wilcoxon")
    p.add_argument("-x", help="first sample: JSON array or eval report")
    p.add_argument("-y", help="second sample: JSON array or eval report")
    p.add_argument("--property", default="reward_per_program",
                   choices=("reward_per_program", "passing_programs", "pass_rate"))
    p.add_argument("--alternative", default="two-sided", choices=("two-sided", "less", "greater"))
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--m", type=int, default=1, help="number of comparisons (Bonferroni)")
    p.add_argument("--name", help="label for the comparison")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("report", parents=[common], help="render tables from an eval report")
    p.add_argument("--eval", required=True, help="eval report JSON")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command in ("datagen", "bench", "eval") and not args.out:
        parser.error(f"{args.command} requires --out")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except Exception as exc:  # mapped to the documented exit codes
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return _classify(exc)


if __name__ == "__main__":
    sys.exit(main())
