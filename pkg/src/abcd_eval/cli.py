"""Command-line interface for the evaluation pipeline.

Subcommands mirror the pipeline stages. ``evaluate`` runs everything for a
question file; ``decompose``, ``answer``, ``verify`` and ``score`` run one
stage against the previous stage's output files; ``report`` renders stored
evaluations; ``annotate`` collects manual correctness labels; ``baseline``
asks the whole-question control question; ``build-obscureqa`` constructs the
obscure-question dataset from a raw quizbowl dump.

Exit codes: 0 success, 1 configuration or environment problem, 2 partial
failure (some questions processed), 3 total failure (none processed).

Record and report files are timestamp-free so that scripted and replay runs
are byte-for-byte reproducible; wall-clock times go only to the manifest.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Optional, Sequence

from . import records
from .answers import DEFAULT_ANSWER_MAX_TOKENS, generate_answers
from .datasets import (
    DatasetLoadError,
    QuestionFormat,
    SampleTooLargeError,
    SplitSpec,
    build_obscureqa,
    load_questions,
    parse_quizbowl_record,
    sample_questions,
)
from .decompose import (
    DEFAULT_DECOMPOSE_MAX_TOKENS,
    PromptPackError,
    decompose,
    default_pack_path,
    load_prompt_pack,
)
from .model import AggregateReport, Question, QuestionEvaluation
from .providers import (
    API_KEY_ENV_VAR,
    CachingProvider,
    CountingProvider,
    LiveProvider,
    Provider,
    ProviderError,
    ReplayProvider,
    ResponseCache,
    ScriptedProvider,
    load_script_rules,
)
from .scoring import aggregate, score_true
from .verify import (
    DEFAULT_VERIFY_MAX_TOKENS,
    MatchMode,
    VerdictParseConfig,
    baseline_whole_question,
    verify_all,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_PARTIAL = 2
EXIT_TOTAL = 3

STAGES = ("decompose", "answer", "verify", "verify_gt", "baseline")


class ConfigError(Exception):
    """Bad flags, missing files, missing credentials: exit code 1."""


# --------------------------------------------------------------------------
# run configuration and provider assembly


@dataclass
class RunConfig:
    provider_mode: str = "scripted"
    script_path: Optional[Path] = None
    cache_dir: Optional[Path] = None
    base_url: Optional[str] = None
    decompose_model: str = "default"
    answer_model: str = "default"
    verify_model: str = "default"
    match_mode: MatchMode = MatchMode.SUBSTRING
    restatement_override: bool = True
    decompose_max_tokens: int = DEFAULT_DECOMPOSE_MAX_TOKENS
    answer_max_tokens: int = DEFAULT_ANSWER_MAX_TOKENS
    verify_max_tokens: int = DEFAULT_VERIFY_MAX_TOKENS
    ground_truth: bool = False
    lenient: bool = False
    concurrency: int = 1
    limit: Optional[int] = None
    sample: Optional[int] = None
    seed: int = 0

    @property
    def parse_config(self) -> VerdictParseConfig:
        return VerdictParseConfig(
            match_mode=self.match_mode,
            restatement_override=self.restatement_override,
        )

    def validate(self) -> None:
        if self.provider_mode not in ("scripted", "live", "replay"):
            raise ConfigError(f"unknown provider mode {self.provider_mode!r}")
        if self.provider_mode == "scripted":
            if self.script_path is None:
                raise ConfigError("scripted mode needs --script")
            if not Path(self.script_path).is_file():
                raise ConfigError(f"script file not found: {self.script_path}")
        elif self.provider_mode == "live":
            if not self.base_url:
                raise ConfigError("live mode needs --base-url")
        elif self.provider_mode == "replay":
            if self.cache_dir is None:
                raise ConfigError("replay mode needs --cache-dir")
            if not Path(self.cache_dir).is_dir():
                raise ConfigError(f"cache directory not found: {self.cache_dir}")
        if self.concurrency < 1:
            raise ConfigError("--concurrency must be at least 1")
        if self.limit is not None and self.sample is not None:
            raise ConfigError("--limit and --sample are mutually exclusive")

    def to_record(self) -> dict:
        return {
            "provider_mode": self.provider_mode,
            "script": str(self.script_path) if self.script_path else None,
            "cache_dir": str(self.cache_dir) if self.cache_dir else None,
            "base_url": self.base_url,
            "models": {
                "decompose": self.decompose_model,
                "answer": self.answer_model,
                "verify": self.verify_model,
            },
            "match_mode": self.match_mode.value,
            "restatement_override": self.restatement_override,
            "max_tokens": {
                "decompose": self.decompose_max_tokens,
                "answer": self.answer_max_tokens,
                "verify": self.verify_max_tokens,
            },
            "ground_truth": self.ground_truth,
            "lenient": self.lenient,
            "concurrency": self.concurrency,
            "limit": self.limit,
            "sample": self.sample,
            "seed": self.seed,
        }


@dataclass
class ProviderBundle:
    """One provider per pipeline stage, each behind its own call counter."""

    stage_providers: dict = field(default_factory=dict)
    counters: dict = field(default_factory=dict)

    def provider(self, stage: str) -> Provider:
        return self.stage_providers[stage]

    def call_counts(self) -> dict:
        return {stage: counter.call_count for stage, counter in self.counters.items()}


def build_provider_bundle(config: RunConfig) -> ProviderBundle:
    """Assemble the per-stage provider stack for the configured mode.

    Counters sit inside the caching layer, so in caching modes they count
    upstream calls (cache misses); in replay mode they count completions
    served from the cache.
    """
    config.validate()
    cache = ResponseCache(config.cache_dir) if config.cache_dir else None

    def base_provider() -> Provider:
        if config.provider_mode == "scripted":
            return ScriptedProvider(load_script_rules(config.script_path))
        if config.provider_mode == "live":
            try:
                return LiveProvider(base_url=config.base_url)
            except ProviderError as exc:
                raise ConfigError(str(exc)) from exc
        return ReplayProvider(cache)

    bundle = ProviderBundle()
    base = base_provider()
    for stage in STAGES:
        counter = CountingProvider(base)
        bundle.counters[stage] = counter
        if cache is not None and config.provider_mode != "replay":
            bundle.stage_providers[stage] = CachingProvider(counter, cache)
        else:
            bundle.stage_providers[stage] = counter
    return bundle


# --------------------------------------------------------------------------
# pipeline for one question


@dataclass
class QuestionOutcome:
    question: Question
    evaluation: Optional[QuestionEvaluation] = None
    gt_results: Optional[list] = None
    failed_stage: Optional[str] = None
    failure_reason: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.evaluation is not None


def evaluate_question(
    question: Question,
    pack,
    bundle: ProviderBundle,
    config: RunConfig,
    labels: dict,
) -> QuestionOutcome:
    """Run decompose, answer, verify (and optionally the gold-answer
    re-verification) for one question, capturing failures per stage."""
    stage = "decompose"
    try:
        parsed = decompose(
            question,
            pack,
            bundle.provider("decompose"),
            model=config.decompose_model,
            max_tokens=config.decompose_max_tokens,
        )
        claim_set = parsed.claim_set

        stage = "answer"
        assignment = generate_answers(
            question,
            claim_set,
            bundle.provider("answer"),
            model=config.answer_model,
            max_tokens=config.answer_max_tokens,
        )

        stage = "verify"
        results = verify_all(
            claim_set,
            assignment,
            bundle.provider("verify"),
            config.parse_config,
            model=config.verify_model,
            max_tokens=config.verify_max_tokens,
            lenient=config.lenient,
        )

        gt_results = None
        gt_score = None
        if config.ground_truth:
            stage = "verify_gt"
            gt_results = verify_all(
                claim_set,
                assignment,
                bundle.provider("verify_gt"),
                config.parse_config,
                override_answer=question.gold_answer,
                model=config.verify_model,
                max_tokens=config.verify_max_tokens,
                lenient=config.lenient,
            )
            gt_score = score_true([result.verdict for result in gt_results])

        stage = "score"
        score = score_true([result.verdict for result in results])
        correct, error_category = labels.get(question.id, (None, None))
        evaluation = QuestionEvaluation(
            question=question,
            claim_set=claim_set,
            assignment=assignment,
            results=tuple(results),
            score_true=score,
            correct=correct,
            error_category=error_category,
            gt_score_true=gt_score,
        )
        return QuestionOutcome(
            question=question, evaluation=evaluation, gt_results=gt_results
        )
    except Exception as exc:
        logger.error("question %s failed at %s: %s", question.id, stage, exc)
        return QuestionOutcome(
            question=question,
            failed_stage=stage,
            failure_reason=f"{type(exc).__name__}: {exc}",
        )


def _run_over_questions(questions, worker: Callable, concurrency: int) -> list:
    """Apply *worker* to every question, preserving input order."""
    if concurrency <= 1:
        return [worker(question) for question in questions]
    with ThreadPoolExecutor(max_workers=concurrency) as pool:
        return list(pool.map(worker, questions))


# --------------------------------------------------------------------------
# report rendering


def _rational_cell(value, width: int) -> str:
    text = "-" if value is None else f"{float(value):.4f}"
    return f"{text:>{width}}"


def _float_cell(value, width: int) -> str:
    text = "-" if value is None else f"{value:.4g}"
    return f"{text:>{width}}"


def render_report_text(reports: Sequence[AggregateReport]) -> str:
    """Human-readable summary table for one or more aggregate reports."""
    lines = ["== score summary =="]
    lines.append(
        f"{'dataset':<16} {'n':>5} {'corr':>5} {'inc':>5} {'unlab':>6} "
        f"{'C':>8} {'I':>8} {'Diff':>8} {'t':>9} {'df':>8} {'p-val':>10} "
        f"{'P(C)':>7} {'P(I)':>7}"
    )
    for report in reports:
        lines.append(
            f"{report.dataset:<16} {report.n_total:>5} {report.n_correct:>5} "
            f"{report.n_incorrect:>5} {report.n_unlabeled:>6} "
            f"{_rational_cell(report.mean_correct, 8)} "
            f"{_rational_cell(report.mean_incorrect, 8)} "
            f"{_rational_cell(report.diff, 8)} "
            f"{_float_cell(report.t_stat, 9)} "
            f"{_float_cell(report.degrees_freedom, 8)} "
            f"{_float_cell(report.p_value, 10)} "
            f"{_rational_cell(report.p_correct, 7)} "
            f"{_rational_cell(report.p_incorrect, 7)}"
        )
    with_gt = [report for report in reports if report.gt_comparison is not None]
    if with_gt:
        lines.append("")
        lines.append("== gold-answer score vs predicted (labeled incorrect) ==")
        lines.append(
            f"{'dataset':<16} {'gt>pred':>8} {'gt=pred':>8} {'gt<pred':>8}"
        )
        for report in with_gt:
            comparison = report.gt_comparison
            lines.append(
                f"{report.dataset:<16} {comparison.gt_greater:>8} "
                f"{comparison.gt_equal:>8} {comparison.gt_less:>8}"
            )
    return "\n".join(lines) + "\n"


def build_reports(evaluations: Sequence[QuestionEvaluation]) -> list[AggregateReport]:
    """One aggregate report per dataset present, sorted by dataset name."""
    by_dataset: dict[str, list[QuestionEvaluation]] = {}
    for evaluation in evaluations:
        by_dataset.setdefault(evaluation.question.dataset.value, []).append(evaluation)
    return [
        aggregate(group, dataset) for dataset, group in sorted(by_dataset.items())
    ]


# --------------------------------------------------------------------------
# shared option plumbing


def _add_provider_options(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("provider")
    group.add_argument(
        "--provider",
        choices=["scripted", "live", "replay"],
        default="scripted",
        help="completion backend (default: scripted)",
    )
    group.add_argument(
        "--script", type=Path, default=None,
        help="JSONL rule file for the scripted provider",
    )
    group.add_argument(
        "--cache-dir", type=Path, default=None,
        help="response cache directory (required for replay)",
    )
    group.add_argument(
        "--base-url", default=None,
        help=f"live API root; key comes from ${API_KEY_ENV_VAR}",
    )
    group.add_argument("--decompose-model", default="default")
    group.add_argument("--answer-model", default="default")
    group.add_argument("--verify-model", default="default")
    group.add_argument(
        "--concurrency", type=int, default=1,
        help="questions processed in parallel (default: 1)",
    )


def _add_parse_options(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("verdict parsing")
    group.add_argument(
        "--match-mode",
        choices=[mode.value for mode in MatchMode],
        default=MatchMode.SUBSTRING.value,
        help="how 'true'/'false' are found in replies (default: substring)",
    )
    group.add_argument(
        "--no-restatement-override",
        action="store_true",
        help="disable the claim-restatement special case",
    )


def _add_question_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--questions", type=Path, required=True,
                        help="JSONL question file")
    parser.add_argument(
        "--format",
        choices=[fmt.value for fmt in QuestionFormat],
        default=QuestionFormat.GENERIC.value,
        help="question file format (default: generic)",
    )
    parser.add_argument("--limit", type=int, default=None,
                        help="take only the first N questions")
    parser.add_argument("--sample", type=int, default=None,
                        help="take a seeded random sample of N questions")
    parser.add_argument("--seed", type=int, default=0,
                        help="seed for --sample (default: 0)")


def config_from_args(args: argparse.Namespace) -> RunConfig:
    config = RunConfig(
        provider_mode=args.provider,
        script_path=args.script,
        cache_dir=args.cache_dir,
        base_url=args.base_url,
        decompose_model=args.decompose_model,
        answer_model=args.answer_model,
        verify_model=args.verify_model,
        concurrency=args.concurrency,
        limit=getattr(args, "limit", None),
        sample=getattr(args, "sample", None),
        seed=getattr(args, "seed", 0),
    )
    if hasattr(args, "match_mode"):
        config.match_mode = MatchMode(args.match_mode)
        config.restatement_override = not args.no_restatement_override
    if hasattr(args, "ground_truth"):
        config.ground_truth = args.ground_truth
    if hasattr(args, "lenient"):
        config.lenient = args.lenient
    for name in ("decompose_max_tokens", "answer_max_tokens", "verify_max_tokens"):
        if getattr(args, name, None) is not None:
            setattr(config, name, getattr(args, name))
    return config


def _load_questions_for_cli(args: argparse.Namespace, config: RunConfig) -> list[Question]:
    if not Path(args.questions).is_file():
        raise ConfigError(f"question file not found: {args.questions}")
    try:
        report = load_questions(args.questions, QuestionFormat(args.format))
    except DatasetLoadError as exc:
        raise ConfigError(str(exc)) from exc
    for lineno, message in report.line_errors:
        logger.warning("%s:%d: %s", args.questions, lineno, message)
    if report.skipped:
        logger.info("%s: skipped %d filtered records", args.questions, report.skipped)

    questions = report.questions
    if config.sample is not None:
        try:
            questions = sample_questions(questions, config.sample, config.seed)
        except SampleTooLargeError as exc:
            raise ConfigError(str(exc)) from exc
    elif config.limit is not None:
        questions = questions[: config.limit]
    if not questions:
        raise ConfigError("no questions selected")
    return questions


def _load_labels_for_cli(path: Optional[Path]) -> dict:
    if path is None:
        return {}
    if not Path(path).is_file():
        raise ConfigError(f"labels file not found: {path}")
    return records.load_labels(path)


def _load_pack_for_cli(path: Optional[Path]):
    try:
        return load_prompt_pack(path if path is not None else default_pack_path())
    except PromptPackError as exc:
        raise ConfigError(str(exc)) from exc


def _exit_code(n_ok: int, n_failed: int) -> int:
    if n_failed == 0:
        return EXIT_OK
    return EXIT_PARTIAL if n_ok > 0 else EXIT_TOTAL


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


# --------------------------------------------------------------------------
# subcommands


def cmd_evaluate(args: argparse.Namespace) -> int:
    config = config_from_args(args)
    questions = _load_questions_for_cli(args, config)
    labels = _load_labels_for_cli(args.labels)
    pack = _load_pack_for_cli(args.pack)
    bundle = build_provider_bundle(config)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    started_at = _utc_now()
    outcomes = _run_over_questions(
        questions,
        lambda question: evaluate_question(question, pack, bundle, config, labels),
        config.concurrency,
    )
    finished_at = _utc_now()

    evaluations = [outcome.evaluation for outcome in outcomes if outcome.ok]
    records.write_jsonl_atomic(
        out_dir / "claim_sets.jsonl",
        (records.claim_set_to_record(e.claim_set) for e in evaluations),
    )
    records.write_jsonl_atomic(
        out_dir / "assignments.jsonl",
        (
            records.assignment_to_record(e.question.id, e.assignment)
            for e in evaluations
        ),
    )
    records.write_jsonl_atomic(
        out_dir / "verifications.jsonl",
        (
            records.verifications_to_record(e.question.id, e.results)
            for e in evaluations
        ),
    )
    if config.ground_truth:
        records.write_jsonl_atomic(
            out_dir / "gt_verifications.jsonl",
            (
                records.verifications_to_record(
                    outcome.question.id, outcome.gt_results
                )
                for outcome in outcomes
                if outcome.ok and outcome.gt_results is not None
            ),
        )
    records.write_jsonl_atomic(
        out_dir / "evaluations.jsonl",
        (records.evaluation_to_record(e) for e in evaluations),
    )

    reports = build_reports(evaluations)
    records.write_json_atomic(
        out_dir / "report.json", [records.report_to_record(r) for r in reports]
    )
    report_text = render_report_text(reports)
    records.write_text_atomic(out_dir / "report.txt", report_text)

    manifest = {
        "config": config.to_record(),
        "started_at": started_at,
        "finished_at": finished_at,
        "n_questions": len(outcomes),
        "n_ok": len(evaluations),
        "n_failed": len(outcomes) - len(evaluations),
        "questions": {
            outcome.question.id: (
                {"status": "ok"}
                if outcome.ok
                else {
                    "status": "failed",
                    "stage": outcome.failed_stage,
                    "reason": outcome.failure_reason,
                }
            )
            for outcome in outcomes
        },
        "provider_calls": bundle.call_counts(),
    }
    records.write_json_atomic(out_dir / "manifest.json", manifest)

    print(report_text, end="")
    n_failed = len(outcomes) - len(evaluations)
    if n_failed:
        print(f"{n_failed} of {len(outcomes)} questions failed; see manifest.json",
              file=sys.stderr)
    return _exit_code(len(evaluations), n_failed)


def cmd_decompose(args: argparse.Namespace) -> int:
    config = config_from_args(args)
    questions = _load_questions_for_cli(args, config)
    pack = _load_pack_for_cli(args.pack)
    bundle = build_provider_bundle(config)

    def worker(question):
        try:
            parsed = decompose(
                question,
                pack,
                bundle.provider("decompose"),
                model=config.decompose_model,
                max_tokens=config.decompose_max_tokens,
            )
            return question, parsed.claim_set, None
        except Exception as exc:
            logger.error("question %s: %s", question.id, exc)
            return question, None, f"{type(exc).__name__}: {exc}"

    results = _run_over_questions(questions, worker, config.concurrency)
    claim_sets = [claim_set for _, claim_set, _ in results if claim_set is not None]
    records.write_jsonl_atomic(
        args.out, (records.claim_set_to_record(cs) for cs in claim_sets)
    )
    n_failed = len(results) - len(claim_sets)
    print(f"decomposed {len(claim_sets)}/{len(results)} questions -> {args.out}")
    return _exit_code(len(claim_sets), n_failed)


def cmd_answer(args: argparse.Namespace) -> int:
    config = config_from_args(args)
    questions = _load_questions_for_cli(args, config)
    claim_sets = {
        record["question_id"]: records.claim_set_from_record(record)
        for _, record in records.read_jsonl(args.claims)
    }
    bundle = build_provider_bundle(config)

    def worker(question):
        claim_set = claim_sets.get(question.id)
        if claim_set is None:
            logger.error("question %s: no claim set", question.id)
            return question, None
        try:
            assignment = generate_answers(
                question,
                claim_set,
                bundle.provider("answer"),
                model=config.answer_model,
                max_tokens=config.answer_max_tokens,
            )
            return question, assignment
        except Exception as exc:
            logger.error("question %s: %s", question.id, exc)
            return question, None

    results = _run_over_questions(questions, worker, config.concurrency)
    ok = [(q, a) for q, a in results if a is not None]
    records.write_jsonl_atomic(
        args.out, (records.assignment_to_record(q.id, a) for q, a in ok)
    )
    print(f"answered {len(ok)}/{len(results)} questions -> {args.out}")
    return _exit_code(len(ok), len(results) - len(ok))


def cmd_verify(args: argparse.Namespace) -> int:
    config = config_from_args(args)
    questions = _load_questions_for_cli(args, config)
    claim_sets = {
        record["question_id"]: records.claim_set_from_record(record)
        for _, record in records.read_jsonl(args.claims)
    }
    assignments = dict(
        records.assignment_from_record(record)
        for _, record in records.read_jsonl(args.assignments)
    )
    bundle = build_provider_bundle(config)

    def worker(question):
        claim_set = claim_sets.get(question.id)
        assignment = assignments.get(question.id)
        if claim_set is None or assignment is None:
            logger.error("question %s: missing claim set or assignment", question.id)
            return question, None, None
        try:
            results = verify_all(
                claim_set,
                assignment,
                bundle.provider("verify"),
                config.parse_config,
                model=config.verify_model,
                max_tokens=config.verify_max_tokens,
                lenient=config.lenient,
            )
            gt_results = None
            if config.ground_truth:
                gt_results = verify_all(
                    claim_set,
                    assignment,
                    bundle.provider("verify_gt"),
                    config.parse_config,
                    override_answer=question.gold_answer,
                    model=config.verify_model,
                    max_tokens=config.verify_max_tokens,
                    lenient=config.lenient,
                )
            return question, results, gt_results
        except Exception as exc:
            logger.error("question %s: %s", question.id, exc)
            return question, None, None

    outcomes = _run_over_questions(questions, worker, config.concurrency)
    ok = [(q, r, g) for q, r, g in outcomes if r is not None]
    records.write_jsonl_atomic(
        args.out, (records.verifications_to_record(q.id, r) for q, r, _ in ok)
    )
    if config.ground_truth:
        records.write_jsonl_atomic(
            args.gt_out,
            (
                records.verifications_to_record(q.id, g)
                for q, _, g in ok
                if g is not None
            ),
        )
    print(f"verified {len(ok)}/{len(outcomes)} questions -> {args.out}")
    return _exit_code(len(ok), len(outcomes) - len(ok))


def cmd_score(args: argparse.Namespace) -> int:
    # Scoring combines stage files; there is no provider to configure.
    config = RunConfig(limit=args.limit, sample=args.sample, seed=args.seed)
    questions = _load_questions_for_cli(args, config)
    claim_sets = {
        record["question_id"]: records.claim_set_from_record(record)
        for _, record in records.read_jsonl(args.claims)
    }
    assignments = dict(
        records.assignment_from_record(record)
        for _, record in records.read_jsonl(args.assignments)
    )
    verifications = dict(
        records.verifications_from_record(record)
        for _, record in records.read_jsonl(args.verifications)
    )
    gt_verifications = {}
    if args.gt_verifications is not None:
        gt_verifications = dict(
            records.verifications_from_record(record)
            for _, record in records.read_jsonl(args.gt_verifications)
        )
    labels = _load_labels_for_cli(args.labels)

    evaluations = []
    n_failed = 0
    for question in questions:
        claim_set = claim_sets.get(question.id)
        assignment = assignments.get(question.id)
        results = verifications.get(question.id)
        if claim_set is None or assignment is None or results is None:
            logger.error(
                "question %s: missing stage output, cannot score", question.id
            )
            n_failed += 1
            continue
        try:
            gt_results = gt_verifications.get(question.id)
            correct, error_category = labels.get(question.id, (None, None))
            evaluations.append(
                QuestionEvaluation(
                    question=question,
                    claim_set=claim_set,
                    assignment=assignment,
                    results=tuple(results),
                    score_true=score_true([r.verdict for r in results]),
                    correct=correct,
                    error_category=error_category,
                    gt_score_true=(
                        score_true([r.verdict for r in gt_results])
                        if gt_results is not None
                        else None
                    ),
                )
            )
        except Exception as exc:
            logger.error("question %s: %s", question.id, exc)
            n_failed += 1

    records.write_jsonl_atomic(
        args.out, (records.evaluation_to_record(e) for e in evaluations)
    )
    print(f"scored {len(evaluations)}/{len(questions)} questions -> {args.out}")
    return _exit_code(len(evaluations), n_failed)


def cmd_report(args: argparse.Namespace) -> int:
    if not Path(args.records).is_file():
        raise ConfigError(f"records file not found: {args.records}")
    evaluations = [
        records.evaluation_from_record(record)
        for _, record in records.read_jsonl(args.records)
    ]
    if not evaluations:
        raise ConfigError(f"{args.records}: no evaluations to report on")
    reports = build_reports(evaluations)
    if args.out_json is not None:
        records.write_json_atomic(
            args.out_json, [records.report_to_record(r) for r in reports]
        )
    text = render_report_text(reports)
    if args.out_text is not None:
        records.write_text_atomic(args.out_text, text)
    print(text, end="")
    return EXIT_OK


def cmd_annotate(
    args: argparse.Namespace,
    input_fn: Callable[[str], str] = input,
    print_fn: Callable[[str], None] = print,
) -> int:
    if not Path(args.records).is_file():
        raise ConfigError(f"records file not found: {args.records}")
    evaluations = [
        records.evaluation_from_record(record)
        for _, record in records.read_jsonl(args.records)
    ]
    labels_path = Path(args.labels)
    existing = records.load_labels(labels_path) if labels_path.is_file() else {}

    pending = [e for e in evaluations if e.question.id not in existing]
    print_fn(
        f"{len(pending)} unlabeled of {len(evaluations)} records "
        f"({len(existing)} labels already in {labels_path})"
    )
    for position, evaluation in enumerate(pending, start=1):
        question = evaluation.question
        print_fn("")
        print_fn(f"[{position}/{len(pending)}] {question.id} ({question.dataset.value})")
        print_fn(f"  question:  {question.text}")
        print_fn(f"  gold:      {question.gold_answer}")
        print_fn(f"  generated: {evaluation.assignment.answer}")
        score = evaluation.score_true
        print_fn(f"  score:     {score if score is not None else 'n/a'}")
        while True:
            try:
                choice = input_fn("  [c]orrect / [i]ncorrect / [s]kip / [q]uit: ")
            except EOFError:
                choice = "q"
            choice = choice.strip().lower()
            if choice in ("c", "i", "s", "q"):
                break
            print_fn("  please answer c, i, s or q")
        if choice == "q":
            break
        if choice == "s":
            continue
        error_category = None
        if choice == "i":
            try:
                error_category = input_fn("  error category (optional): ").strip() or None
            except EOFError:
                error_category = None
        records.append_label(
            labels_path, question.id, correct=(choice == "c"),
            error_category=error_category,
        )
    final = records.load_labels(labels_path) if labels_path.is_file() else {}
    print_fn(f"\n{len(final)} labels now in {labels_path}")
    return EXIT_OK


def cmd_baseline(args: argparse.Namespace) -> int:
    config = config_from_args(args)
    if not Path(args.records).is_file():
        raise ConfigError(f"records file not found: {args.records}")
    evaluations = [
        records.evaluation_from_record(record)
        for _, record in records.read_jsonl(args.records)
    ]
    if not evaluations:
        raise ConfigError(f"{args.records}: no evaluations to run the baseline on")
    bundle = build_provider_bundle(config)

    def worker(evaluation):
        try:
            result = baseline_whole_question(
                evaluation.question,
                evaluation.assignment.answer,
                bundle.provider("baseline"),
                model=config.verify_model,
                max_tokens=config.verify_max_tokens,
            )
            return evaluation, result
        except Exception as exc:
            logger.error("question %s: %s", evaluation.question.id, exc)
            return evaluation, None

    outcomes = _run_over_questions(evaluations, worker, config.concurrency)
    ok = [(e, r) for e, r in outcomes if r is not None]
    records.write_jsonl_atomic(
        args.out,
        (
            {
                "question_id": evaluation.question.id,
                "answer": evaluation.assignment.answer,
                "verdict": result.verdict.value,
                "raw_response": result.raw_response,
                "score_true": records.fraction_to_str(evaluation.score_true),
            }
            for evaluation, result in ok
        ),
    )
    print(f"baseline checked {len(ok)}/{len(outcomes)} questions -> {args.out}")
    return _exit_code(len(ok), len(outcomes) - len(ok))


def cmd_build_obscureqa(args: argparse.Namespace) -> int:
    if not Path(args.dump).is_file():
        raise ConfigError(f"dump file not found: {args.dump}")
    try:
        split = SplitSpec(
            train=args.train, valid=args.valid, test=args.test, seed=args.seed
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    raw_records = []
    line_errors = []
    with open(args.dump, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                raw_records.append(parse_quizbowl_record(json.loads(line)))
            except (ValueError, KeyError, TypeError) as exc:
                line_errors.append((lineno, str(exc)))
    for lineno, message in line_errors:
        logger.warning("%s:%d: %s", args.dump, lineno, message)
    if not raw_records:
        raise ConfigError(f"{args.dump}: no usable records")

    build = build_obscureqa(raw_records, split)
    if build.total_kept == 0:
        raise ConfigError(f"{args.dump}: every record was dropped during cleaning")

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, questions in (
        ("train", build.train), ("valid", build.valid), ("test", build.test)
    ):
        records.write_jsonl_atomic(
            out_dir / f"obscureqa_{name}.jsonl",
            (records.question_to_record(q) for q in questions),
        )
    stats = {
        "input_records": len(raw_records),
        "line_errors": len(line_errors),
        "dropped_moderator_notes": build.dropped_moderator_notes,
        "dropped_empty": build.dropped_empty,
        "kept": build.total_kept,
        "train": len(build.train),
        "valid": len(build.valid),
        "test": len(build.test),
        "seed": split.seed,
        "fractions": {"train": split.train, "valid": split.valid, "test": split.test},
    }
    records.write_json_atomic(out_dir / "build_stats.json", stats)
    print(
        f"kept {build.total_kept} of {len(raw_records)} records "
        f"(train {len(build.train)}, valid {len(build.valid)}, "
        f"test {len(build.test)}) -> {out_dir}"
    )
    return EXIT_OK


# --------------------------------------------------------------------------
# parser wiring


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="abcd-eval",
        description=(
            "Answer-based claim decomposition: decompose questions into "
            "tagged claims, answer them, verify each claim and score the "
            "true-claim proportion."
        ),
    )
    parser.add_argument("--verbose", action="store_true",
                        help="log per-question progress to stderr")
    commands = parser.add_subparsers(dest="command", required=True)

    evaluate = commands.add_parser(
        "evaluate", help="run the full pipeline for a question file"
    )
    _add_question_options(evaluate)
    evaluate.add_argument("--pack", type=Path, default=None,
                          help="prompt pack directory (default: bundled pack)")
    evaluate.add_argument("--labels", type=Path, default=None,
                          help="JSONL manual labels to join")
    evaluate.add_argument("--out-dir", type=Path, required=True)
    evaluate.add_argument("--ground-truth", action="store_true",
                          help="also verify claims under the gold answer")
    evaluate.add_argument("--lenient", action="store_true",
                          help="record non-response instead of failing a "
                               "question when the provider errors")
    evaluate.add_argument("--decompose-max-tokens", type=int, default=None)
    evaluate.add_argument("--answer-max-tokens", type=int, default=None)
    evaluate.add_argument("--verify-max-tokens", type=int, default=None)
    _add_provider_options(evaluate)
    _add_parse_options(evaluate)
    evaluate.set_defaults(handler=cmd_evaluate)

    decompose_cmd = commands.add_parser(
        "decompose", help="turn questions into claim templates"
    )
    _add_question_options(decompose_cmd)
    decompose_cmd.add_argument("--pack", type=Path, default=None)
    decompose_cmd.add_argument("--out", type=Path, required=True)
    decompose_cmd.add_argument("--decompose-max-tokens", type=int, default=None)
    _add_provider_options(decompose_cmd)
    decompose_cmd.set_defaults(handler=cmd_decompose)

    answer = commands.add_parser(
        "answer", help="fill claim-set tags with generated answers"
    )
    _add_question_options(answer)
    answer.add_argument("--claims", type=Path, required=True)
    answer.add_argument("--out", type=Path, required=True)
    answer.add_argument("--answer-max-tokens", type=int, default=None)
    _add_provider_options(answer)
    answer.set_defaults(handler=cmd_answer)

    verify_cmd = commands.add_parser(
        "verify", help="verify instantiated claims true or false"
    )
    _add_question_options(verify_cmd)
    verify_cmd.add_argument("--claims", type=Path, required=True)
    verify_cmd.add_argument("--assignments", type=Path, required=True)
    verify_cmd.add_argument("--out", type=Path, required=True)
    verify_cmd.add_argument("--ground-truth", action="store_true")
    verify_cmd.add_argument("--gt-out", type=Path, default=None)
    verify_cmd.add_argument("--lenient", action="store_true")
    verify_cmd.add_argument("--verify-max-tokens", type=int, default=None)
    _add_provider_options(verify_cmd)
    _add_parse_options(verify_cmd)
    verify_cmd.set_defaults(handler=cmd_verify)

    score = commands.add_parser(
        "score", help="combine stage outputs into scored evaluations"
    )
    _add_question_options(score)
    score.add_argument("--claims", type=Path, required=True)
    score.add_argument("--assignments", type=Path, required=True)
    score.add_argument("--verifications", type=Path, required=True)
    score.add_argument("--gt-verifications", type=Path, default=None)
    score.add_argument("--labels", type=Path, default=None)
    score.add_argument("--out", type=Path, required=True)
    score.set_defaults(handler=cmd_score)

    report = commands.add_parser("report", help="aggregate stored evaluations")
    report.add_argument("--records", type=Path, required=True)
    report.add_argument("--out-json", type=Path, default=None)
    report.add_argument("--out-text", type=Path, default=None)
    report.set_defaults(handler=cmd_report)

    annotate = commands.add_parser(
        "annotate", help="interactively label evaluations correct/incorrect"
    )
    annotate.add_argument("--records", type=Path, required=True)
    annotate.add_argument("--labels", type=Path, required=True)
    annotate.set_defaults(handler=cmd_annotate)

    baseline = commands.add_parser(
        "baseline", help="whole-question correctness check for comparison"
    )
    baseline.add_argument("--records", type=Path, required=True)
    baseline.add_argument("--out", type=Path, required=True)
    baseline.add_argument("--verify-max-tokens", type=int, default=None)
    _add_provider_options(baseline)
    baseline.set_defaults(handler=cmd_baseline)

    build_cmd = commands.add_parser(
        "build-obscureqa", help="construct the obscure-question dataset"
    )
    build_cmd.add_argument("--dump", type=Path, required=True,
                           help="raw quizbowl JSONL dump")
    build_cmd.add_argument("--out-dir", type=Path, required=True)
    build_cmd.add_argument("--train", type=float, default=0.7)
    build_cmd.add_argument("--valid", type=float, default=0.1)
    build_cmd.add_argument("--test", type=float, default=0.2)
    build_cmd.add_argument("--seed", type=int, default=0)
    build_cmd.set_defaults(handler=cmd_build_obscureqa)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.handler(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
