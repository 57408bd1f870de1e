"""A tour of how raw verifier replies become verdicts.

The parser looks for "true" before "false", treats anything committing to
neither as a non-response, and has one special case: a reply that says
"false" while restating the claim verbatim counts as an affirmation.
"""

from abcd_eval import MatchMode, VerdictParseConfig, normalize, parse_verdict

claim = "the Eiffel Tower is in Paris"

# Replies are normalized before matching: lowercased, whitespace collapsed,
# terminal punctuation dropped.
print(repr(normalize("  TRUE!  ")))
print(repr(normalize("False,   I think.")))

cases = [
    "True",
    "true.",
    "The statement is true.",
    "False.",
    "False, the tower is in Lyon.",
    "I cannot verify statements about landmarks.",
    "Yes.",  # commits to neither keyword, so: non-response
]
print("\ndefault parsing:")
for reply in cases:
    print(f"  {reply!r:50} -> {parse_verdict(reply, claim).value}")

# The restatement override. Verifiers sometimes answer "False." and then
# repeat the claim word for word, which reads as agreement. That flips to
# true; actually contradicting text does not.
print("\nrestatement override:")
for reply in [
    f"False. {claim}.",
    "False. The Eiffel Tower is in Lyon.",
]:
    print(f"  {reply!r:50} -> {parse_verdict(reply, claim).value}")

no_override = VerdictParseConfig(restatement_override=False)
print("  (override disabled)")
print(f"  {f'False. {claim}.'!r:50} ->",
      parse_verdict(f"False. {claim}.", claim, no_override).value)

# Substring matching is the default and it has a known hazard: "true" hides
# inside words like "construed". Word-boundary matching avoids that at the
# cost of missing replies that inflect the keywords.
hazard = "The statement could be construed as accurate."
substring = VerdictParseConfig(match_mode=MatchMode.SUBSTRING)
word = VerdictParseConfig(match_mode=MatchMode.WORD_BOUNDARY)
print("\nmatch mode on a hazard reply:")
print("  substring     ->", parse_verdict(hazard, claim, substring).value)
print("  word_boundary ->", parse_verdict(hazard, claim, word).value)
