"""Command-line pipeline driver.

Subcommands cover the whole flow: seed-build and augment prepare synthesizer
tuning data, synthesize and filter produce surviving tasks for a target
domain, assemble writes post-training datasets, evaluate scores a backend on
a registered task, stats prints the reports a run left behind, and golden
writes byte-stable rendered fixtures for drift checks.

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 backend error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping, Sequence

from .assembler import (
    DEFAULT_POOL,
    CaptionQuestionPool,
    build_single_stage,
    build_single_stage_dataset,
    build_two_stage,
    dataset_manifest,
    load_pool,
    render_training_sequence,
)
from .backends import (
    BackendConfig,
    ChatBackend,
    HttpChatBackend,
    ScriptedBackend,
    TranscriptRecorder,
    scripted_from_replay,
)
from .corpus import (
    ImageCaptionPair,
    ImageRef,
    Reject,
    SeedRecord,
    TaskTriplet,
    load_pairs,
    read_jsonl,
    write_jsonl,
)
from .errors import BackendError, ConfigError, DataError, FractionOutOfRangeError
from .evalharness import (
    BUILTIN_TASKS,
    EvalInstance,
    format_score_report,
    load_instances,
    load_task_specs,
    render_eval_prompt,
    run_eval,
)
from .filterkit import (
    CONSISTENT,
    DEFAULT_COT_CONNECTIVE,
    DEFAULT_JUDGE_PROMPT,
    INCONSISTENT,
    OPEN,
    CotTask,
    FilterStats,
    assemble_cot,
    build_consistency_prompt,
    format_filter_stats,
    judge_triplets,
)
from .seedkit import (
    apply_blank_augmentation,
    merge_seed_sources,
    render_synthesizer_tuning,
)
from .synthclient import (
    STATUS_OK,
    SynthesisOutcome,
    synthesis_stats,
    synthesize_batch,
)
from .templates import DEFAULT_TEMPLATE, ChatTemplate, load_template

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2
EXIT_BACKEND = 3


@dataclass
class PipelineConfig:
    """Parsed pipeline configuration; relative paths resolve against the config dir."""

    root: Path
    output_dir: Path
    template: ChatTemplate
    pool: CaptionQuestionPool
    judge_prompt: str
    cot_connective: str
    blank_fraction: float
    rng_seed: int
    max_in_flight: int
    pairs_path: Path | None
    seed_tasks_path: Path | None
    seed_captions_path: Path | None
    eval_tasks: dict[str, Path]
    eval_task_specs_path: Path | None
    backend_specs: dict[str, dict[str, Any]]


def load_config(path: str | Path) -> PipelineConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    root = path.parent

    def resolve(value: Any, key: str) -> Path:
        if not isinstance(value, str) or not value:
            raise ConfigError(f"config key {key!r} must be a non-empty path string")
        candidate = Path(value)
        return candidate if candidate.is_absolute() else root / candidate

    def optional_path(key: str) -> Path | None:
        value = raw.get(key)
        return resolve(value, key) if value is not None else None

    template_path = optional_path("template_file")
    template = load_template(template_path) if template_path else DEFAULT_TEMPLATE
    pool_path = optional_path("pool_file")
    pool = load_pool(pool_path) if pool_path else DEFAULT_POOL
    judge_prompt_path = optional_path("judge_prompt_file")
    judge_prompt = (
        judge_prompt_path.read_text(encoding="utf-8") if judge_prompt_path else DEFAULT_JUDGE_PROMPT
    )
    connective = raw.get("cot_connective")
    if connective is not None and (not isinstance(connective, str) or not connective):
        raise ConfigError("cot_connective must be a non-empty string")

    fraction = raw.get("blank_fraction", 0.1)
    if not isinstance(fraction, (int, float)) or isinstance(fraction, bool) or not 0 <= fraction <= 1:
        raise FractionOutOfRangeError(f"blank_fraction must be a number in [0, 1], got {fraction!r}")
    rng_seed = raw.get("rng_seed", 0)
    if not isinstance(rng_seed, int) or isinstance(rng_seed, bool):
        raise ConfigError("rng_seed must be an integer")
    max_in_flight = raw.get("max_in_flight", 1)
    if not isinstance(max_in_flight, int) or isinstance(max_in_flight, bool) or max_in_flight < 1:
        raise ConfigError("max_in_flight must be an integer >= 1")

    seed_sources = raw.get("seed_sources") or {}
    if not isinstance(seed_sources, dict):
        raise ConfigError("seed_sources must be an object with 'tasks' and 'captions' keys")
    eval_tasks_raw = raw.get("eval_tasks") or {}
    if not isinstance(eval_tasks_raw, dict):
        raise ConfigError("eval_tasks must map task names to instance files")
    backend_specs = raw.get("backends") or {}
    if not isinstance(backend_specs, dict) or any(
        not isinstance(v, dict) for v in backend_specs.values()
    ):
        raise ConfigError("backends must map names to backend spec objects")

    cfg = PipelineConfig(
        root=root,
        output_dir=resolve(raw.get("output_dir", "out"), "output_dir"),
        template=template,
        pool=pool,
        judge_prompt=judge_prompt,
        cot_connective=connective or DEFAULT_COT_CONNECTIVE,
        blank_fraction=float(fraction),
        rng_seed=rng_seed,
        max_in_flight=max_in_flight,
        pairs_path=optional_path("pairs"),
        seed_tasks_path=(
            resolve(seed_sources["tasks"], "seed_sources.tasks") if "tasks" in seed_sources else None
        ),
        seed_captions_path=(
            resolve(seed_sources["captions"], "seed_sources.captions")
            if "captions" in seed_sources
            else None
        ),
        eval_tasks={
            name: resolve(value, f"eval_tasks.{name}") for name, value in eval_tasks_raw.items()
        },
        eval_task_specs_path=optional_path("eval_task_specs"),
        backend_specs=backend_specs,
    )

    missing = [
        str(p)
        for p in (
            [cfg.pairs_path, cfg.seed_tasks_path, cfg.seed_captions_path, cfg.eval_task_specs_path]
            + list(cfg.eval_tasks.values())
        )
        if p is not None and not p.is_file()
    ]
    if missing:
        raise ConfigError(f"config references missing files: {', '.join(missing)}")
    return cfg


def make_backend(cfg: PipelineConfig, name: str) -> ChatBackend:
    spec = cfg.backend_specs.get(name)
    if spec is None:
        raise ConfigError(f"config has no backends.{name} entry")
    kind = spec.get("type")
    if kind == "scripted":
        rules: list[tuple[Any, Any]] = []
        for rule in spec.get("rules", []):
            matcher = rule.get("contains")
            if matcher is None:
                raise ConfigError("scripted rules need a 'contains' matcher")
            if "reply" in rule:
                rules.append((matcher, rule["reply"]))
            elif "fail" in rule:
                rules.append((matcher, BackendError(rule["fail"])))
            else:
                raise ConfigError("scripted rules need a 'reply' or 'fail' outcome")
        latency_ms = spec.get("latency_ms", 0)
        latency = (0.0, latency_ms / 1000.0) if latency_ms else None
        backend: ChatBackend = ScriptedBackend(
            rules, latency=latency, latency_seed=spec.get("latency_seed", 0)
        )
    elif kind == "http":
        model = spec.get("model") or spec.get("model_name")
        if not model:
            raise ConfigError(f"backends.{name}: http backends need a 'model'")
        token = spec.get("auth_token")
        token_env = spec.get("auth_token_env")
        if not token and token_env:
            token = os.environ.get(token_env)
        backend = HttpChatBackend(
            BackendConfig.from_env(
                model_name=model,
                endpoint=spec.get("endpoint"),
                auth_token=token,
                timeout=spec.get("timeout", 60.0),
                max_retries=spec.get("max_retries", 3),
                backoff_base=spec.get("backoff_base", 0.5),
            )
        )
    elif kind == "replay":
        if "path" not in spec:
            raise ConfigError(f"backends.{name}: replay backends need a 'path'")
        backend = scripted_from_replay(_resolve_under(cfg.root, spec["path"]))
    else:
        raise ConfigError(f"backends.{name}: unknown backend type {kind!r}")
    record_to = spec.get("record_to")
    if record_to:
        backend = TranscriptRecorder(backend, _resolve_under(cfg.root, record_to))
    return backend


def _resolve_under(root: Path, value: str) -> Path:
    candidate = Path(value)
    return candidate if candidate.is_absolute() else root / candidate


def _write_json(path: Path, payload: Mapping[str, Any]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(
        json.dumps(payload, indent=2, ensure_ascii=False, sort_keys=True) + "\n",
        encoding="utf-8",
    )


def _print_rejects(rejects: Sequence[Reject], what: str) -> None:
    if not rejects:
        return
    print(f"skipped {len(rejects)} {what} line(s):", file=sys.stderr)
    for reject in rejects[:5]:
        print(f"  line {reject.line_no}: {reject.reason}", file=sys.stderr)
    if len(rejects) > 5:
        print(f"  ... and {len(rejects) - 5} more", file=sys.stderr)


def _require(cfg_value: Any, key: str) -> Any:
    if cfg_value is None:
        raise ConfigError(f"config does not set {key!r}, which this command needs")
    return cfg_value


# ---------------------------------------------------------------------------
# commands

def cmd_seed_build(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    task_rows = read_jsonl(_require(cfg.seed_tasks_path, "seed_sources.tasks"))
    caption_rows = read_jsonl(_require(cfg.seed_captions_path, "seed_sources.captions"))
    records, report = merge_seed_sources(task_rows, caption_rows)
    if args.limit is not None:
        records = records[: args.limit]
    rng_seed = args.rng_seed if args.rng_seed is not None else cfg.rng_seed
    if args.fraction is not None:
        records, chosen = apply_blank_augmentation(records, args.fraction, rng_seed)
        _write_json(
            cfg.output_dir / "augment_report.json",
            {
                "total": len(records),
                "fraction": args.fraction,
                "rng_seed": rng_seed,
                "replaced": len(chosen),
                "replaced_indices": sorted(chosen),
            },
        )
    count = write_jsonl(records, cfg.output_dir / "seed.jsonl")
    _write_json(cfg.output_dir / "join_report.json", report.to_dict())
    print(
        f"wrote {count} seed records to {cfg.output_dir / 'seed.jsonl'} "
        f"(matched {report.matched}, unmatched task {report.unmatched_task}, "
        f"unmatched caption {report.unmatched_caption})"
    )
    return EXIT_OK


def cmd_augment(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    source = cfg.output_dir / "seed.jsonl"
    records = [SeedRecord.from_dict(row) for row in read_jsonl(source)]
    if args.limit is not None:
        records = records[: args.limit]
    fraction = args.fraction if args.fraction is not None else cfg.blank_fraction
    rng_seed = args.rng_seed if args.rng_seed is not None else cfg.rng_seed
    augmented, chosen = apply_blank_augmentation(records, fraction, rng_seed)
    count = write_jsonl(augmented, cfg.output_dir / "seed_augmented.jsonl")
    _write_json(
        cfg.output_dir / "augment_report.json",
        {
            "total": count,
            "fraction": fraction,
            "rng_seed": rng_seed,
            "replaced": len(chosen),
            "replaced_indices": sorted(chosen),
        },
    )
    print(f"replaced {len(chosen)} of {count} images with blanks -> seed_augmented.jsonl")
    return EXIT_OK


def cmd_synthesize(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    pairs, rejects = load_pairs(_require(cfg.pairs_path, "pairs"), args.limit)
    _print_rejects(rejects, "pair")
    if not pairs:
        raise DataError(f"no usable pairs in {cfg.pairs_path}")
    backend = make_backend(cfg, "synthesizer")
    flight = args.max_in_flight if args.max_in_flight is not None else cfg.max_in_flight
    outcomes = synthesize_batch(pairs, backend, flight, cfg.template)
    write_jsonl(outcomes, cfg.output_dir / "outcomes.jsonl")
    stats = synthesis_stats(outcomes)
    _write_json(cfg.output_dir / "synth_stats.json", stats)
    print(
        f"synthesized {stats['ok']}/{stats['total']} triplets "
        f"({stats['parse_failures']} parse failures, "
        f"{stats['backend_failures']} backend failures)"
    )
    if stats["total"] and stats["backend_failures"] == stats["total"]:
        raise BackendError("every synthesis request failed; is the backend reachable?")
    return EXIT_OK


def cmd_filter(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    rows = read_jsonl(cfg.output_dir / "outcomes.jsonl")
    outcomes = [SynthesisOutcome.from_dict(row) for row in rows]
    if args.limit is not None:
        outcomes = outcomes[: args.limit]
    usable = [o for o in outcomes if o.status == STATUS_OK]
    backend = make_backend(cfg, "judge")
    flight = args.max_in_flight if args.max_in_flight is not None else cfg.max_in_flight
    judged = judge_triplets([o.triplet for o in usable], backend, flight, cfg.judge_prompt)
    kept_rows = []
    for outcome, result in zip(usable, judged):
        if result.label == CONSISTENT:
            task = assemble_cot(outcome.triplet, cfg.cot_connective)
            kept_rows.append({"pair_id": outcome.pair_id, "task": task.to_dict()})
    stats = FilterStats.from_counts(
        consistent=sum(1 for r in judged if r.label == CONSISTENT),
        inconsistent=sum(1 for r in judged if r.label == INCONSISTENT),
        open=sum(1 for r in judged if r.label == OPEN),
        judge_failures=sum(1 for r in judged if r.failure is not None),
    )
    write_jsonl(kept_rows, cfg.output_dir / "kept_tasks.jsonl")
    _write_json(cfg.output_dir / "filter_stats.json", stats.to_dict())
    print(format_filter_stats(stats))
    backend_failures = sum(1 for r in judged if r.failure and r.failure.startswith("backend:"))
    if judged and backend_failures == len(judged):
        raise BackendError("every judge request failed; is the backend reachable?")
    return EXIT_OK


def cmd_assemble(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    pairs, rejects = load_pairs(_require(cfg.pairs_path, "pairs"), args.limit)
    _print_rejects(rejects, "pair")
    if not pairs:
        raise DataError(f"no usable pairs in {cfg.pairs_path}")
    tasks: dict[str, CotTask] = {}
    for row in read_jsonl(cfg.output_dir / "kept_tasks.jsonl"):
        pair_id = row.get("pair_id")
        if not pair_id or not isinstance(pair_id, str):
            raise DataError("kept task row lacks a pair_id")
        if pair_id in tasks:
            raise DataError(f"duplicate kept task for pair {pair_id!r}")
        tasks[pair_id] = CotTask.from_dict(row["task"])
    if args.limit is not None:
        known = {pair.id for pair in pairs}
        tasks = {pair_id: task for pair_id, task in tasks.items() if pair_id in known}
    rng_seed = args.rng_seed if args.rng_seed is not None else cfg.rng_seed

    if args.mode == "single":
        examples = build_single_stage_dataset(pairs, tasks, cfg.pool, rng_seed)
        count = write_jsonl(examples, cfg.output_dir / "training_single.jsonl")
        manifest = dataset_manifest(examples, mode="single", rng_seed=rng_seed, pool=cfg.pool)
        _write_json(cfg.output_dir / "manifest_single.json", manifest)
        with_task = manifest["counts_by_provenance"].get("caption_plus_synthetic", 0)
        print(f"wrote {count} single-stage examples ({with_task} with a synthesized task)")
    else:
        stage1, stage2 = build_two_stage(
            pairs, tasks, cfg.pool, rng_seed, reuse_caption=args.reuse_caption
        )
        write_jsonl(stage1, cfg.output_dir / "training_stage1.jsonl")
        write_jsonl(stage2, cfg.output_dir / "training_stage2.jsonl")
        manifest = dataset_manifest(
            stage1 + stage2,
            mode="two-stage",
            rng_seed=rng_seed,
            pool=cfg.pool,
            extra={
                "stage1_total": len(stage1),
                "stage2_total": len(stage2),
                "reuse_caption": args.reuse_caption,
            },
        )
        _write_json(cfg.output_dir / "manifest_two_stage.json", manifest)
        print(f"wrote {len(stage1)} stage-one and {len(stage2)} stage-two examples")
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    specs = dict(BUILTIN_TASKS)
    if cfg.eval_task_specs_path:
        specs.update(load_task_specs(cfg.eval_task_specs_path))
    spec = specs.get(args.task)
    if spec is None:
        raise ConfigError(f"unknown eval task {args.task!r}; available: {', '.join(sorted(specs))}")
    if args.instances is not None:
        instances_path = Path(args.instances)
    elif args.task in cfg.eval_tasks:
        instances_path = cfg.eval_tasks[args.task]
    else:
        raise ConfigError(
            f"no instance file for task {args.task!r}; set eval_tasks.{args.task} or pass --instances"
        )
    instances, rejects = load_instances(instances_path, args.limit)
    _print_rejects(rejects, "instance")
    if not instances:
        raise DataError(f"no usable instances in {instances_path}")
    backend = make_backend(cfg, "eval")
    flight = args.max_in_flight if args.max_in_flight is not None else cfg.max_in_flight
    report = run_eval(spec, instances, backend, flight)
    _write_json(cfg.output_dir / f"eval_{spec.name}.json", report.to_dict())
    print(format_score_report(report))
    if report.n and report.failures == report.n:
        raise BackendError("every eval request failed; is the backend reachable?")
    return EXIT_OK


def cmd_stats(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    fixed = [
        "join_report.json",
        "augment_report.json",
        "synth_stats.json",
        "filter_stats.json",
        "manifest_single.json",
        "manifest_two_stage.json",
    ]
    paths = [cfg.output_dir / name for name in fixed]
    paths += sorted(cfg.output_dir.glob("eval_*.json"))
    found = False
    for path in paths:
        if not path.is_file():
            continue
        found = True
        print(f"== {path.name}")
        payload = json.loads(path.read_text(encoding="utf-8"))
        for key in sorted(payload):
            value = payload[key]
            if isinstance(value, (dict, list)):
                value = json.dumps(value, ensure_ascii=False)
            print(f"  {key}: {value}")
        print()
    if not found:
        print(f"no reports found in {cfg.output_dir}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# golden fixtures

_GOLDEN_PAIR = ImageCaptionPair(
    id="golden-pair",
    image=ImageRef.file("images/chest_xray_042.png"),
    caption="a chest x-ray with a small left pleural effusion",
)

_GOLDEN_TRIPLET = TaskTriplet(
    instruction="Which side of the chest shows the pleural effusion?",
    informative_response=(
        "The costophrenic angle on the left side is blunted, which indicates "
        "fluid collecting in the pleural space on that side."
    ),
    precise_response="The left side.",
)

_GOLDEN_EVAL_INSTANCES: dict[str, EvalInstance] = {
    "slake_open": EvalInstance(
        id="golden", image=ImageRef.blank(), gold="effusion",
        fields={"question": "What abnormality is visible in the image?"},
    ),
    "slake_closed": EvalInstance(
        id="golden", image=ImageRef.blank(), gold="yes",
        fields={"question": "Is there a pleural effusion?"},
    ),
    "pathvqa_open": EvalInstance(
        id="golden", image=ImageRef.blank(), gold="necrosis",
        fields={"question": "What process is shown in the tissue?"},
    ),
    "pathvqa_closed": EvalInstance(
        id="golden", image=ImageRef.blank(), gold="no",
        fields={"question": "Is the tissue normal?"},
    ),
    "vqarad_open": EvalInstance(
        id="golden", image=ImageRef.blank(), gold="chest",
        fields={"question": "What part of the body is imaged?"},
    ),
    "vqarad_closed": EvalInstance(
        id="golden", image=ImageRef.blank(), gold="yes",
        fields={"question": "Is this a frontal view?"},
    ),
    "pmcvqa": EvalInstance(
        id="golden", image=ImageRef.blank(), gold="The lungs",
        fields={"question": "Which organ is imaged?"},
        options=("The heart", "The lungs", "The liver", "The kidneys"),
    ),
    "recipe1m": EvalInstance(
        id="golden", image=ImageRef.blank(), gold="whisk the eggs and fry them in butter",
        fields={"question": "Describe the preparation steps for this dish."},
    ),
    "nutrition5k": EvalInstance(
        id="golden", image=ImageRef.blank(), gold="eggs flour butter sugar",
    ),
    "food101": EvalInstance(
        id="golden", image=ImageRef.blank(), gold="baklava",
        options=("apple pie", "baby back ribs", "baklava"),
    ),
    "foodseg103": EvalInstance(
        id="golden", image=ImageRef.blank(), gold=("egg tart",),
        options=("candy", "egg tart", "french fries", "chocolate"),
    ),
    "clrs": EvalInstance(
        id="golden", image=ImageRef.blank(), gold="beach",
        options=("airport", "beach", "forest"),
    ),
    "ucmerced": EvalInstance(
        id="golden", image=ImageRef.blank(), gold="harbor",
        options=("agricultural", "harbor", "runway"),
    ),
    "floodnet": EvalInstance(
        id="golden", image=ImageRef.blank(), gold="flooded",
        fields={"question": "Is the road in the image flooded or non-flooded?"},
        options=("flooded", "non-flooded"),
    ),
    "nwpu": EvalInstance(
        id="golden", image=ImageRef.blank(),
        gold="an airport with several planes parked near the terminal",
    ),
}


def cmd_golden(args: argparse.Namespace) -> int:
    if args.out is not None:
        out = Path(args.out)
    elif args.config is not None:
        out = load_config(args.config).output_dir / "golden"
    else:
        out = Path("golden")
    out.mkdir(parents=True, exist_ok=True)

    record = SeedRecord(pair=_GOLDEN_PAIR, triplet=_GOLDEN_TRIPLET)
    rendered = render_synthesizer_tuning(record)
    _write_text(out / "synthesizer_tuning.txt", rendered.rendered_text)
    _write_json(
        out / "synthesizer_tuning_spans.json",
        {"mask_spans": [list(span) for span in rendered.mask_spans],
         "masked_texts": rendered.masked_texts()},
    )

    _write_text(out / "consistency_prompt.txt", build_consistency_prompt(_GOLDEN_TRIPLET))

    task = assemble_cot(_GOLDEN_TRIPLET)
    example = build_single_stage(_GOLDEN_PAIR, task, DEFAULT_POOL, rng_seed=0, index=0)
    rendered_single = render_training_sequence(example)
    _write_text(out / "single_stage_example.txt", rendered_single.rendered_text)

    for name in sorted(BUILTIN_TASKS):
        request = render_eval_prompt(BUILTIN_TASKS[name], _GOLDEN_EVAL_INSTANCES[name])
        _write_text(out / f"eval_prompt_{name}.txt", request.messages[0].text)

    count = len(list(out.iterdir()))
    print(f"wrote {count} golden files to {out}")
    return EXIT_OK


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


# ---------------------------------------------------------------------------
# parser

class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; this toolkit reserves 2 for data
    # problems, so usage errors exit 1 instead.
    def error(self, message: str):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="vistruct", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="command", required=True)

    def add(name: str, func, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.set_defaults(func=func)
        return p

    p = add("seed-build", cmd_seed_build, "join the two seed sources into tuning records")
    p.add_argument("--config", required=True)
    p.add_argument("--limit", type=int)
    p.add_argument("--fraction", type=float, help="also apply blank augmentation at this fraction")
    p.add_argument("--rng-seed", type=int)

    p = add("augment", cmd_augment, "replace a fraction of seed images with blanks")
    p.add_argument("--config", required=True)
    p.add_argument("--limit", type=int)
    p.add_argument("--fraction", type=float)
    p.add_argument("--rng-seed", type=int)

    p = add("synthesize", cmd_synthesize, "synthesize task triplets for the configured pairs")
    p.add_argument("--config", required=True)
    p.add_argument("--limit", type=int)
    p.add_argument("--max-in-flight", type=int)

    p = add("filter", cmd_filter, "judge triplet consistency and keep the consistent ones")
    p.add_argument("--config", required=True)
    p.add_argument("--limit", type=int)
    p.add_argument("--max-in-flight", type=int)

    p = add("assemble", cmd_assemble, "assemble post-training datasets from pairs and kept tasks")
    p.add_argument("--config", required=True)
    p.add_argument("--limit", type=int)
    p.add_argument("--mode", choices=("single", "two-stage"), default="single")
    p.add_argument("--reuse-caption", action="store_true")
    p.add_argument("--rng-seed", type=int)

    p = add("evaluate", cmd_evaluate, "run a registered eval task against the eval backend")
    p.add_argument("--config", required=True)
    p.add_argument("--task", required=True)
    p.add_argument("--instances", help="instance file (overrides the config's eval_tasks entry)")
    p.add_argument("--limit", type=int)
    p.add_argument("--max-in-flight", type=int)

    p = add("stats", cmd_stats, "print the reports present in the output directory")
    p.add_argument("--config", required=True)

    p = add("golden", cmd_golden, "write byte-stable rendered fixtures for drift checks")
    p.add_argument("--config")
    p.add_argument("--out")

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_CONFIG
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"vistruct: error: file not found: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"vistruct: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"vistruct: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except BackendError as exc:
        print(f"vistruct: error: {exc}", file=sys.stderr)
        return EXIT_BACKEND


if __name__ == "__main__":
    sys.exit(main())
