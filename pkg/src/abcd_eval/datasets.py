"""Dataset loading, cleaning and construction.

Two jobs live here: reading question files in a handful of known formats
into :class:`~abcd_eval.model.Question` records, and building the obscure-QA
dataset out of raw quizbowl-style records (the first clue of a question is
its most obscure one, and becomes a standalone question once "this X" is
rewritten to "what X").

Determinism matters throughout: shuffles are an explicit Fisher-Yates over
``random.Random(seed).random()``, whose byte-for-byte stability across
Python versions is documented, and split sizes use largest-remainder
rounding so the three parts always sum to the total.
"""

from __future__ import annotations

import json
import random
import re
import unicodedata
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional, Sequence

from .model import Dataset, Question

# --------------------------------------------------------------------------
# text cleaning

# NFKD decomposition plus an ASCII strip handles most accented letters;
# these are the common cases it cannot decompose.
_TRANSLITERATION = {
    "‘": "'", "’": "'", "‚": "'",
    "“": '"', "”": '"', "„": '"',
    "–": "-", "—": "-", "−": "-",
    "…": "...",
    "ß": "ss", "ẞ": "SS",
    "æ": "ae", "Æ": "AE",
    "œ": "oe", "Œ": "OE",
    "ø": "o", "Ø": "O",
    "đ": "d", "Đ": "D",
    "ł": "l", "Ł": "L",
    "þ": "th", "Þ": "Th",
    "ð": "d", "Ð": "D",
    " ": " ",
}

# Minimal spans, innermost-first per type because the quantifier is lazy.
_PAREN_RE = re.compile(r"\(.*?\)", re.DOTALL)
_BRACKET_RE = re.compile(r"\[.*?\]", re.DOTALL)
_ANGLE_RE = re.compile(r"<.*?>", re.DOTALL)
_WHITESPACE_RE = re.compile(r"\s+")


def transliterate(text: str) -> str:
    """Best-effort ASCII rendering of *text*.

    Characters outside ASCII go through the explicit table, then NFKD
    decomposition with combining marks dropped. Whatever survives both is
    removed.
    """
    out = []
    for char in text:
        if ord(char) < 128:
            out.append(char)
            continue
        mapped = _TRANSLITERATION.get(char)
        if mapped is not None:
            out.append(mapped)
            continue
        decomposed = unicodedata.normalize("NFKD", char)
        out.append(decomposed.encode("ascii", "ignore").decode("ascii"))
    return "".join(out)


def clean_text(text: str) -> str:
    """Normalize raw dataset text to plain single-spaced ASCII.

    Transliterates to ASCII, deletes minimal ``(...)``, ``[...]`` and
    ``<...>`` spans (brackets included, non-nested, left to right), then
    collapses whitespace and trims. Idempotent: cleaning a cleaned string
    is a no-op.
    """
    text = transliterate(text)
    text = _PAREN_RE.sub("", text)
    text = _BRACKET_RE.sub("", text)
    text = _ANGLE_RE.sub("", text)
    return _WHITESPACE_RE.sub(" ", text).strip()


_MODERATOR_NOTE_RE = re.compile(r"^\s*note to (?:the )?moderator", re.IGNORECASE)
_STANDALONE_THIS_RE = re.compile(r"\bthis\b", re.IGNORECASE)


def convert_clue_to_question(clue: str) -> Optional[str]:
    """Rewrite one (already cleaned) clue as a standalone question.

    Returns None for clues that open with a moderator note, which address
    the quiz reader rather than describing the answer. Every standalone
    "this"/"This" becomes "what"/"What" (case of the first letter is kept),
    and a terminal question mark is appended when missing.
    """
    if _MODERATOR_NOTE_RE.match(clue):
        return None

    def replace(match: re.Match) -> str:
        return "What" if match.group(0)[0].isupper() else "what"

    question = _STANDALONE_THIS_RE.sub(replace, clue).strip()
    if not question.endswith("?"):
        question += "?"
    return question


# --------------------------------------------------------------------------
# deterministic shuffling and splitting


def seeded_shuffle(items: Sequence, seed: int) -> list:
    """Fisher-Yates shuffle driven by ``random.Random(seed).random()``.

    random() is the one generator method with a documented cross-version
    reproducibility guarantee, so the permutation is pinned forever.
    """
    rng = random.Random(seed)
    out = list(items)
    for i in range(len(out) - 1, 0, -1):
        j = int(rng.random() * (i + 1))
        out[i], out[j] = out[j], out[i]
    return out


class SampleTooLargeError(ValueError):
    pass


def sample_questions(
    questions: Sequence[Question], n: int, seed: int
) -> list[Question]:
    """Uniform sample without replacement; ``n == len`` yields a permutation."""
    if n < 0:
        raise ValueError(f"sample size must be non-negative, got {n}")
    if n > len(questions):
        raise SampleTooLargeError(
            f"cannot sample {n} questions from {len(questions)}"
        )
    return seeded_shuffle(questions, seed)[:n]


@dataclass(frozen=True)
class SplitSpec:
    """Train/valid/test fractions plus the shuffle seed."""

    train: float = 0.7
    valid: float = 0.1
    test: float = 0.2
    seed: int = 0

    def __post_init__(self):
        for name, fraction in (
            ("train", self.train), ("valid", self.valid), ("test", self.test)
        ):
            if not 0.0 < fraction < 1.0:
                raise ValueError(f"{name} fraction must be in (0, 1), got {fraction}")
        if abs(self.train + self.valid + self.test - 1.0) > 1e-9:
            raise ValueError("split fractions must sum to 1")


def split_sizes(total: int, spec: SplitSpec) -> tuple[int, int, int]:
    """Largest-remainder apportionment of *total* into three parts.

    Floors first, then hands leftover items to the largest fractional
    remainders (ties broken in train, valid, test order). The parts always
    sum to *total*.
    """
    exact = [spec.train * total, spec.valid * total, spec.test * total]
    sizes = [int(value) for value in exact]
    remainders = [value - size for value, size in zip(exact, sizes)]
    leftover = total - sum(sizes)
    for position in sorted(range(3), key=lambda i: -remainders[i])[:leftover]:
        sizes[position] += 1
    return sizes[0], sizes[1], sizes[2]


# --------------------------------------------------------------------------
# obscure-QA construction


@dataclass(frozen=True)
class RawQuizbowlRecord:
    """One raw quizbowl question: clues ordered most-obscure first."""

    clues: tuple[str, ...]
    answer: str
    category: Optional[str] = None
    subcategory: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "clues", tuple(self.clues))
        if not self.clues:
            raise ValueError("quizbowl record must hold at least one clue")


@dataclass(frozen=True)
class ObscureQABuild:
    """Output of :func:`build_obscureqa`, with per-reason drop counts."""

    train: tuple[Question, ...]
    valid: tuple[Question, ...]
    test: tuple[Question, ...]
    dropped_moderator_notes: int
    dropped_empty: int

    @property
    def total_kept(self) -> int:
        return len(self.train) + len(self.valid) + len(self.test)


def build_obscureqa(
    records: Sequence[RawQuizbowlRecord],
    split: SplitSpec = SplitSpec(),
) -> ObscureQABuild:
    """Turn raw quizbowl records into a split question dataset.

    Uses only each record's first (most obscure) clue. Records whose clue
    opens with a moderator note, or whose clue or answer cleans down to
    nothing, are dropped and counted. Question ids come from the record's
    position in the input, so they are stable across runs regardless of the
    shuffle seed.
    """
    kept: list[Question] = []
    dropped_notes = 0
    dropped_empty = 0
    for position, record in enumerate(records):
        clue = clean_text(record.clues[0])
        answer = clean_text(record.answer)
        if not clue or not answer:
            dropped_empty += 1
            continue
        text = convert_clue_to_question(clue)
        if text is None:
            dropped_notes += 1
            continue
        kept.append(
            Question(
                id=f"obscureqa-{position:05d}",
                text=text,
                gold_answer=answer,
                dataset=Dataset.OBSCUREQA,
                category=record.category,
                subcategory=record.subcategory,
            )
        )

    shuffled = seeded_shuffle(kept, split.seed)
    n_train, n_valid, _ = split_sizes(len(shuffled), split)
    return ObscureQABuild(
        train=tuple(shuffled[:n_train]),
        valid=tuple(shuffled[n_train:n_train + n_valid]),
        test=tuple(shuffled[n_train + n_valid:]),
        dropped_moderator_notes=dropped_notes,
        dropped_empty=dropped_empty,
    )


def parse_quizbowl_record(row: dict) -> RawQuizbowlRecord:
    if not isinstance(row, dict):
        raise ValueError("record must be a JSON object")
    clues = row.get("clues")
    if not isinstance(clues, list) or not clues:
        raise ValueError("record needs a non-empty 'clues' list")
    return RawQuizbowlRecord(
        clues=tuple(str(clue) for clue in clues),
        answer=str(row["answer"]),
        category=row.get("category"),
        subcategory=row.get("subcategory"),
    )


# --------------------------------------------------------------------------
# question file loading


class QuestionFormat(str, Enum):
    TRIVIAQA = "triviaqa"
    HOTPOTQA = "hotpotqa"
    OBSCUREQA = "obscureqa"
    GENERIC = "generic"


class DatasetLoadError(Exception):
    """No usable questions could be read from a file."""


@dataclass
class LoadReport:
    """Questions plus everything that went wrong or was filtered."""

    questions: list[Question] = field(default_factory=list)
    line_errors: list[tuple[int, str]] = field(default_factory=list)
    skipped: int = 0


_HOTPOT_LEVELS = {
    "easy": Dataset.HOTPOTQA_EASY,
    "medium": Dataset.HOTPOTQA_MEDIUM,
}


def _parse_triviaqa(row: dict, lineno: int) -> Question:
    question_id = str(
        row.get("question_id") or row.get("QuestionId") or row.get("id")
        or f"triviaqa-{lineno:06d}"
    )
    text = row.get("question") or row.get("Question")
    answer = row.get("answer") or row.get("Answer")
    if isinstance(answer, dict):
        answer = answer.get("value") or answer.get("Value")
    if not text or not answer:
        raise ValueError("record needs question and answer fields")
    return Question(
        id=question_id,
        text=str(text),
        gold_answer=str(answer),
        dataset=Dataset.TRIVIAQA,
    )


def _parse_hotpotqa(row: dict, lineno: int) -> Optional[Question]:
    """Returns None for records filtered out (non-bridge, unknown level)."""
    if row.get("type") != "bridge":
        return None
    dataset = _HOTPOT_LEVELS.get(row.get("level"))
    if dataset is None:
        return None
    question_id = str(row.get("_id") or row.get("id") or f"hotpotqa-{lineno:06d}")
    text = row.get("question")
    answer = row.get("answer")
    if not text or not answer:
        raise ValueError("record needs question and answer fields")
    return Question(
        id=question_id, text=str(text), gold_answer=str(answer), dataset=dataset
    )


def _parse_generic(row: dict, lineno: int, fmt: QuestionFormat) -> Question:
    text = row.get("question")
    answer = row.get("answer")
    if not text or not answer:
        raise ValueError("record needs question and answer fields")
    if fmt is QuestionFormat.OBSCUREQA:
        dataset = Dataset.OBSCUREQA
    elif "dataset" in row:
        dataset = Dataset(row["dataset"])
    else:
        dataset = Dataset.CUSTOM
    question_id = str(row.get("id") or f"{fmt.value}-{lineno:06d}")
    return Question(
        id=question_id,
        text=str(text),
        gold_answer=str(answer),
        dataset=dataset,
        category=row.get("category"),
        subcategory=row.get("subcategory"),
    )


def load_questions(path: str | Path, fmt: QuestionFormat) -> LoadReport:
    """Read a JSONL question file, collecting per-line errors.

    A bad line never aborts the load; it lands in ``line_errors`` with its
    line number. Only a file from which *nothing* parses raises
    :class:`DatasetLoadError`. Duplicate ids are per-line errors (first
    occurrence wins). The hotpotqa format keeps bridge-type records at the
    easy and medium levels and counts everything else as skipped.
    """
    path = Path(path)
    report = LoadReport()
    seen_ids: set[str] = set()
    n_lines = 0
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            n_lines += 1
            try:
                row = json.loads(line)
                if not isinstance(row, dict):
                    raise ValueError("line is not a JSON object")
                if fmt is QuestionFormat.TRIVIAQA:
                    question = _parse_triviaqa(row, lineno)
                elif fmt is QuestionFormat.HOTPOTQA:
                    question = _parse_hotpotqa(row, lineno)
                    if question is None:
                        report.skipped += 1
                        continue
                else:
                    question = _parse_generic(row, lineno, fmt)
                if question.id in seen_ids:
                    raise ValueError(f"duplicate question id {question.id!r}")
            except (ValueError, KeyError, TypeError) as exc:
                report.line_errors.append((lineno, str(exc)))
                continue
            seen_ids.add(question.id)
            report.questions.append(question)

    if n_lines == 0:
        raise DatasetLoadError(f"{path}: file holds no records")
    if not report.questions and not report.skipped:
        raise DatasetLoadError(
            f"{path}: none of {n_lines} lines parsed "
            f"(first error: line {report.line_errors[0][0]}: "
            f"{report.line_errors[0][1]})"
        )
    return report
