"""Text-completion providers: live HTTP, scripted, caching, replay.

Every provider exposes a single ``complete(request) -> CompletionResponse``
method. Requests hash to a stable cache key (sha256 over a canonical JSON
encoding), which is the filename of the on-disk cache entry and the lookup
key for replay. Wrappers compose: a live run is typically
``CachingProvider(CountingProvider(LiveProvider(...)))`` and a replay run
swaps the live provider for :class:`ReplayProvider` over the same directory.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import random
import tempfile
import threading
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Callable, Optional, Protocol, Sequence

import requests

logger = logging.getLogger(__name__)

API_KEY_ENV_VAR = "ABCD_API_KEY"
DEFAULT_TIMEOUT_SECONDS = 60.0
DEFAULT_MAX_ATTEMPTS = 5
_BACKOFF_BASE_SECONDS = 1.0
_BACKOFF_CAP_SECONDS = 30.0


class FinishReason(str, Enum):
    STOP = "stop"
    LENGTH = "length"
    FILTERED = "filtered"
    OTHER = "other"


@dataclass(frozen=True)
class CompletionRequest:
    """One deterministic completion call.

    Temperature is coerced to float so that equal requests written from
    different call sites (``0`` vs ``0.0``) hash identically.
    """

    model: str
    prompt: str
    max_tokens: int
    temperature: float = 0.0

    def __post_init__(self):
        if not self.model:
            raise ValueError("request model must be non-empty")
        if self.max_tokens < 1:
            raise ValueError(f"max_tokens must be >= 1, got {self.max_tokens}")
        if self.temperature < 0:
            raise ValueError(f"temperature must be >= 0, got {self.temperature}")
        object.__setattr__(self, "temperature", float(self.temperature))


@dataclass(frozen=True)
class CompletionResponse:
    text: str
    finish_reason: FinishReason = FinishReason.STOP

    def __post_init__(self):
        if self.text == "" and self.finish_reason is FinishReason.STOP:
            raise ValueError("empty completion text requires a non-stop finish reason")


class ProviderErrorKind(str, Enum):
    RATE_LIMITED = "rate_limited"
    NETWORK = "network"
    AUTH = "auth"
    FILTERED = "filtered"
    REPLAY_MISS = "replay_miss"
    OTHER = "other"


_RETRYABLE_KINDS = frozenset(
    {ProviderErrorKind.RATE_LIMITED, ProviderErrorKind.NETWORK}
)


class ProviderError(Exception):
    """A completion call failed. ``retryable`` follows from the kind."""

    def __init__(self, kind: ProviderErrorKind, detail: str):
        super().__init__(f"{kind.value}: {detail}")
        self.kind = kind
        self.detail = detail

    @property
    def retryable(self) -> bool:
        return self.kind in _RETRYABLE_KINDS


class Provider(Protocol):
    def complete(self, request: CompletionRequest) -> CompletionResponse:
        ...


def cache_key(request: CompletionRequest) -> str:
    """Hex sha256 digest of the request's canonical JSON encoding."""
    canonical = json.dumps(
        {
            "max_tokens": request.max_tokens,
            "model": request.model,
            "prompt": request.prompt,
            "temperature": request.temperature,
        },
        sort_keys=True,
        separators=(",", ":"),
        ensure_ascii=True,
    )
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


# --------------------------------------------------------------------------
# scripted


@dataclass(frozen=True)
class ScriptRule:
    """Maps prompts to a canned response.

    ``mode`` is ``substring`` (the needle occurs anywhere in the prompt) or
    ``exact`` (the prompt equals the needle).
    """

    match: str
    response: str
    mode: str = "substring"
    finish_reason: FinishReason = FinishReason.STOP

    def __post_init__(self):
        if self.mode not in ("substring", "exact"):
            raise ValueError(f"unknown script rule mode: {self.mode!r}")

    def matches(self, prompt: str) -> bool:
        if self.mode == "exact":
            return prompt == self.match
        return self.match in prompt


class ScriptedProvider:
    """Deterministic offline provider driven by an ordered rule list.

    The first matching rule wins. A prompt no rule matches raises
    ``ProviderError(OTHER)`` so that fixture gaps fail loudly instead of
    producing silent non-responses.
    """

    def __init__(self, rules: Sequence[ScriptRule]):
        self.rules = list(rules)

    def complete(self, request: CompletionRequest) -> CompletionResponse:
        for rule in self.rules:
            if rule.matches(request.prompt):
                finish = rule.finish_reason
                if rule.response == "" and finish is FinishReason.STOP:
                    finish = FinishReason.OTHER
                return CompletionResponse(text=rule.response, finish_reason=finish)
        preview = request.prompt[:120].replace("\n", "\\n")
        raise ProviderError(
            ProviderErrorKind.OTHER,
            f"no script rule matches prompt: {preview!r}",
        )


def load_script_rules(path: str | Path) -> list[ScriptRule]:
    """Read script rules from a JSONL file of {match, response, mode?} rows."""
    rules = []
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
                rules.append(
                    ScriptRule(
                        match=row["match"],
                        response=row["response"],
                        mode=row.get("mode", "substring"),
                    )
                )
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno}: bad script rule: {exc}") from exc
    return rules


# --------------------------------------------------------------------------
# live


_FINISH_REASON_MAP = {
    "stop": FinishReason.STOP,
    "length": FinishReason.LENGTH,
    "content_filter": FinishReason.FILTERED,
}


class LiveProvider:
    """Chat-completion style HTTP provider.

    Reads the API key from the ``ABCD_API_KEY`` environment variable unless
    one is passed explicitly. Retries rate-limit and network failures with
    exponential backoff and full jitter, up to ``max_attempts`` tries total.
    """

    def __init__(
        self,
        base_url: str,
        api_key: Optional[str] = None,
        *,
        timeout: float = DEFAULT_TIMEOUT_SECONDS,
        max_attempts: int = DEFAULT_MAX_ATTEMPTS,
        session: Optional[requests.Session] = None,
        sleep_fn: Callable[[float], None] = time.sleep,
        rng: Optional[random.Random] = None,
    ):
        key = api_key if api_key is not None else os.environ.get(API_KEY_ENV_VAR)
        if not key:
            raise ProviderError(
                ProviderErrorKind.AUTH,
                f"no API key: set {API_KEY_ENV_VAR} or pass api_key",
            )
        self._api_key = key
        self._url = base_url.rstrip("/") + "/chat/completions"
        self._timeout = timeout
        self._max_attempts = max_attempts
        # One session per thread unless the caller supplies one; Session
        # objects are not safe to share across concurrent workers.
        self._explicit_session = session
        self._local = threading.local()
        self._sleep = sleep_fn
        self._rng = rng or random.Random()

    def _session(self) -> requests.Session:
        if self._explicit_session is not None:
            return self._explicit_session
        session = getattr(self._local, "session", None)
        if session is None:
            session = requests.Session()
            self._local.session = session
        return session

    def complete(self, request: CompletionRequest) -> CompletionResponse:
        last_error: Optional[ProviderError] = None
        for attempt in range(self._max_attempts):
            if attempt > 0:
                assert last_error is not None
                delay = self._rng.uniform(
                    0.0,
                    min(_BACKOFF_CAP_SECONDS, _BACKOFF_BASE_SECONDS * 2 ** (attempt - 1)),
                )
                logger.info(
                    "retrying after %s (attempt %d/%d, sleeping %.2fs)",
                    last_error.kind.value,
                    attempt + 1,
                    self._max_attempts,
                    delay,
                )
                self._sleep(delay)
            try:
                return self._attempt(request)
            except ProviderError as exc:
                if not exc.retryable:
                    raise
                last_error = exc
        assert last_error is not None
        raise last_error

    def _attempt(self, request: CompletionRequest) -> CompletionResponse:
        body = {
            "model": request.model,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
        try:
            http_response = self._session().post(
                self._url,
                json=body,
                headers={"Authorization": f"Bearer {self._api_key}"},
                timeout=self._timeout,
            )
        except requests.RequestException as exc:
            raise ProviderError(ProviderErrorKind.NETWORK, str(exc)) from exc

        status = http_response.status_code
        if status == 429:
            raise ProviderError(ProviderErrorKind.RATE_LIMITED, "HTTP 429")
        if status in (401, 403):
            raise ProviderError(ProviderErrorKind.AUTH, f"HTTP {status}")
        if status >= 500:
            raise ProviderError(ProviderErrorKind.NETWORK, f"HTTP {status}")
        if status >= 400:
            raise ProviderError(
                ProviderErrorKind.OTHER, f"HTTP {status}: {http_response.text[:200]}"
            )

        try:
            payload = http_response.json()
            choice = payload["choices"][0]
            text = choice["message"]["content"]
            raw_finish = choice.get("finish_reason", "stop")
        except (ValueError, LookupError, TypeError) as exc:
            raise ProviderError(
                ProviderErrorKind.OTHER, f"malformed response body: {exc}"
            ) from exc

        finish = _FINISH_REASON_MAP.get(raw_finish, FinishReason.OTHER)
        if finish is FinishReason.FILTERED and not text:
            raise ProviderError(ProviderErrorKind.FILTERED, "completion was filtered")
        if text == "" and finish is FinishReason.STOP:
            finish = FinishReason.OTHER
        return CompletionResponse(text=text, finish_reason=finish)


# --------------------------------------------------------------------------
# cache, replay, counting


def _request_to_record(request: CompletionRequest) -> dict:
    return {
        "model": request.model,
        "prompt": request.prompt,
        "temperature": request.temperature,
        "max_tokens": request.max_tokens,
    }


def _response_to_record(response: CompletionResponse) -> dict:
    return {"text": response.text, "finish_reason": response.finish_reason.value}


def _response_from_record(record: dict) -> CompletionResponse:
    return CompletionResponse(
        text=record["text"],
        finish_reason=FinishReason(record["finish_reason"]),
    )


class ResponseCache:
    """One JSON file per cached completion, named by the request digest.

    Writes go through a temp file plus atomic rename so a crash cannot leave
    a truncated entry behind.
    """

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def _path(self, digest: str) -> Path:
        return self.directory / f"{digest}.json"

    def get(self, digest: str) -> Optional[CompletionResponse]:
        path = self._path(digest)
        if not path.exists():
            return None
        with open(path, encoding="utf-8") as handle:
            entry = json.load(handle)
        return _response_from_record(entry["response"])

    def put(
        self,
        digest: str,
        request: CompletionRequest,
        response: CompletionResponse,
    ) -> None:
        entry = {
            "request": _request_to_record(request),
            "response": _response_to_record(response),
            "timestamp": datetime.now(timezone.utc).isoformat(),
        }
        path = self._path(digest)
        with self._lock:
            fd, temp_path = tempfile.mkstemp(
                dir=self.directory, prefix=".tmp-", suffix=".json"
            )
            try:
                with os.fdopen(fd, "w", encoding="utf-8") as handle:
                    json.dump(entry, handle, ensure_ascii=False, indent=2)
                os.replace(temp_path, path)
            except BaseException:
                try:
                    os.unlink(temp_path)
                except OSError:
                    pass
                raise

    def delete(self, digest: str) -> None:
        self._path(digest).unlink(missing_ok=True)


class CachingProvider:
    """Serve hits from a :class:`ResponseCache`, delegate misses."""

    def __init__(self, inner: Provider, cache: ResponseCache):
        self.inner = inner
        self.cache = cache

    def complete(self, request: CompletionRequest) -> CompletionResponse:
        digest = cache_key(request)
        cached = self.cache.get(digest)
        if cached is not None:
            return cached
        response = self.inner.complete(request)
        self.cache.put(digest, request, response)
        return response


class ReplayProvider:
    """Strict replay: every request must hit the cache.

    A miss raises ``ProviderError(REPLAY_MISS)`` naming the digest, so a
    stale or incomplete cache is diagnosable from the error alone.
    """

    def __init__(self, cache: ResponseCache):
        self.cache = cache

    def complete(self, request: CompletionRequest) -> CompletionResponse:
        digest = cache_key(request)
        cached = self.cache.get(digest)
        if cached is None:
            raise ProviderError(
                ProviderErrorKind.REPLAY_MISS,
                f"no cached response for request digest {digest}",
            )
        return cached


@dataclass
class CountingProvider:
    """Count completed calls that reach the wrapped provider.

    Placed *inside* a caching wrapper this counts cache misses, which is the
    number that matters for run manifests (actual upstream calls).
    """

    inner: Provider
    counts: dict = field(default_factory=dict)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def complete(self, request: CompletionRequest) -> CompletionResponse:
        response = self.inner.complete(request)
        with self._lock:
            self.counts["calls"] = self.counts.get("calls", 0) + 1
        return response

    @property
    def call_count(self) -> int:
        return self.counts.get("calls", 0)
