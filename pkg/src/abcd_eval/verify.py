"""Claim verification: prompt construction and verdict parsing.

Each instantiated claim is sent as ``True or False: <claim>`` and the reply
is mapped onto a three-way verdict. Parsing is deliberately blunt string
matching (the upstream replies are short), with two knobs:

* ``match_mode`` decides whether "true"/"false" are found as raw substrings
  or only at word boundaries. Substring matching is the historical default
  and has a known hazard: words like "construed" contain "true". The
  word-boundary mode avoids it at the cost of changing historical verdicts.
* ``restatement_override`` handles verifiers that repeat the claim verbatim
  while musing about falsehood ("It is not false that ..."): if the whole
  normalized claim appears inside the reply, the reply endorses it.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

from .model import (
    AnswerAssignment,
    ClaimSet,
    Question,
    VerificationResult,
    Verdict,
)
from .providers import CompletionRequest, Provider, ProviderError
from .template import instantiate, instantiate_with_override

logger = logging.getLogger(__name__)

VERIFY_PROMPT_PREFIX = "True or False: "
DEFAULT_VERIFY_MAX_TOKENS = 64

_WHITESPACE_RE = re.compile(r"\s+")
_TRUE_WORD_RE = re.compile(r"\btrue\b")
_FALSE_WORD_RE = re.compile(r"\bfalse\b")


class MatchMode(str, Enum):
    SUBSTRING = "substring"
    WORD_BOUNDARY = "word_boundary"


@dataclass(frozen=True)
class VerdictParseConfig:
    match_mode: MatchMode = MatchMode.SUBSTRING
    restatement_override: bool = True


DEFAULT_PARSE_CONFIG = VerdictParseConfig()


def normalize(text: str) -> str:
    """Lowercase, collapse whitespace and drop terminal punctuation."""
    collapsed = _WHITESPACE_RE.sub(" ", text.lower()).strip()
    return collapsed.rstrip(".?!,;:").rstrip()


def parse_verdict(
    raw_response: str,
    claim_text: str,
    config: VerdictParseConfig = DEFAULT_PARSE_CONFIG,
) -> Verdict:
    """Map a verifier reply onto a verdict.

    Precedence: the restatement override, then "true", then "false", then
    non-response. The override fires only when "false" occurs; a reply that
    restates the claim without saying "false" resolves through the ordinary
    rules.
    """
    normalized_response = normalize(raw_response)
    if config.match_mode is MatchMode.WORD_BOUNDARY:
        has_true = _TRUE_WORD_RE.search(normalized_response) is not None
        has_false = _FALSE_WORD_RE.search(normalized_response) is not None
    else:
        has_true = "true" in normalized_response
        has_false = "false" in normalized_response

    if config.restatement_override and has_false:
        normalized_claim = normalize(claim_text)
        if normalized_claim and normalized_claim in normalized_response:
            return Verdict.TRUE
    if has_true:
        return Verdict.TRUE
    if has_false:
        return Verdict.FALSE
    return Verdict.NON_RESPONSE


def verify_claim(
    instantiated_text: str,
    provider: Provider,
    config: VerdictParseConfig = DEFAULT_PARSE_CONFIG,
    *,
    claim_index: int = 1,
    model: str = "default",
    max_tokens: int = DEFAULT_VERIFY_MAX_TOKENS,
) -> VerificationResult:
    """Send one ``True or False:`` prompt and parse the reply.

    The prompt is exactly the prefix plus the claim text, no trailing
    newline; caching and replay depend on that byte-for-byte stability.
    """
    request = CompletionRequest(
        model=model,
        prompt=VERIFY_PROMPT_PREFIX + instantiated_text,
        max_tokens=max_tokens,
        temperature=0.0,
    )
    response = provider.complete(request)
    verdict = parse_verdict(response.text, instantiated_text, config)
    return VerificationResult(
        claim_index=claim_index,
        instantiated_text=instantiated_text,
        verdict=verdict,
        raw_response=response.text,
    )


class VerificationError(Exception):
    """A claim could not be verified; carries the claim index."""

    def __init__(self, claim_index: int, message: str):
        super().__init__(f"claim {claim_index}: {message}")
        self.claim_index = claim_index


def verify_all(
    claim_set: ClaimSet,
    assignment: AnswerAssignment,
    provider: Provider,
    config: VerdictParseConfig = DEFAULT_PARSE_CONFIG,
    *,
    override_answer: Optional[str] = None,
    model: str = "default",
    max_tokens: int = DEFAULT_VERIFY_MAX_TOKENS,
    lenient: bool = False,
) -> list[VerificationResult]:
    """Verify every claim of a set, in index order.

    With ``override_answer`` the ``<answer>`` slot is re-bound (non-answer
    tags keep their assigned values), which re-verifies the same claims
    under e.g. the gold answer. With ``lenient=True`` a provider failure on
    one claim records a NON_RESPONSE instead of aborting the question.
    """
    results = []
    for claim in claim_set.claims:
        try:
            if override_answer is None:
                text = instantiate(claim, assignment)
            else:
                text = instantiate_with_override(claim, assignment, override_answer)
        except Exception as exc:
            raise VerificationError(claim.index, str(exc)) from exc
        try:
            results.append(
                verify_claim(
                    text,
                    provider,
                    config,
                    claim_index=claim.index,
                    model=model,
                    max_tokens=max_tokens,
                )
            )
        except ProviderError as exc:
            if lenient:
                logger.warning(
                    "question %s claim %d: provider failed (%s), recording "
                    "non-response",
                    claim_set.question_id,
                    claim.index,
                    exc.kind.value,
                )
                results.append(
                    VerificationResult(
                        claim_index=claim.index,
                        instantiated_text=text,
                        verdict=Verdict.NON_RESPONSE,
                        raw_response="",
                    )
                )
            else:
                raise VerificationError(claim.index, str(exc)) from exc
    return results


@dataclass(frozen=True)
class BaselineResult:
    """Whole-question correctness check, for comparison with claim scores."""

    verdict: Verdict
    raw_response: str


def build_baseline_prompt(question: Question, answer: str) -> str:
    text = question.text.strip()
    if not text.endswith("?"):
        text += "?"
    return f"Here is the question: {text} Is the answer {answer} correct?"


def baseline_whole_question(
    question: Question,
    answer: str,
    provider: Provider,
    *,
    model: str = "default",
    max_tokens: int = DEFAULT_VERIFY_MAX_TOKENS,
) -> BaselineResult:
    """Ask whether *answer* is correct for *question*, in one shot.

    Parsed with the restatement override disabled (there is no claim to
    restate). Known limitation, kept for fidelity with the claim parser: a
    reply like "No, the answer is not correct." contains neither "true" nor
    "false" and lands on NON_RESPONSE.
    """
    request = CompletionRequest(
        model=model,
        prompt=build_baseline_prompt(question, answer),
        max_tokens=max_tokens,
        temperature=0.0,
    )
    response = provider.complete(request)
    config = VerdictParseConfig(
        match_mode=DEFAULT_PARSE_CONFIG.match_mode,
        restatement_override=False,
    )
    verdict = parse_verdict(response.text, "", config)
    return BaselineResult(verdict=verdict, raw_response=response.text)
