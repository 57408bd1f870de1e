"""Recording model responses once and replaying them forever.

Every request has a stable content digest. A CachingProvider writes each
response under that digest; a ReplayProvider later serves the same run
from disk alone and fails loudly on anything it has never seen.
"""

import tempfile
from pathlib import Path

from abcd_eval import (
    CachingProvider,
    CompletionRequest,
    CountingProvider,
    ProviderError,
    ReplayProvider,
    ResponseCache,
    ScriptRule,
    ScriptedProvider,
    cache_key,
)

request = CompletionRequest(
    model="default",
    prompt="True or False: water boils at 100 degrees Celsius at sea level",
    max_tokens=64,
    temperature=0.0,
)
print("digest:", cache_key(request))

cache_dir = Path(tempfile.mkdtemp(prefix="abcd-cache-"))
cache = ResponseCache(cache_dir)

# Stand-in for a live endpoint, wrapped in a counter so we can see how
# often it actually gets consulted.
upstream = CountingProvider(
    ScriptedProvider([ScriptRule(match="True or False:", response="True.")])
)
recording = CachingProvider(upstream, cache)

recording.complete(request)
recording.complete(request)  # second call is served from disk
print("upstream calls after two identical requests:", upstream.call_count)

other = CompletionRequest(
    model="default",
    prompt="True or False: water boils at 50 degrees Celsius at sea level",
    max_tokens=64,
    temperature=0.0,
)
recording.complete(other)
print("upstream calls after a new request:", upstream.call_count)
print("cache files:", sorted(p.name for p in cache_dir.glob("*.json")))

# Replay mode: same cache, no upstream at all.
replay = ReplayProvider(cache)
response = replay.complete(request)
print("\nreplayed:", repr(response.text))

# Anything missing from the cache is an error that names the digest, so a
# stale fixture can be regenerated instead of silently answering nothing.
cache.delete(cache_key(other))
try:
    replay.complete(other)
except ProviderError as error:
    print("replay miss:", error)
