"""Turning raw quizbowl records into a split question dataset.

Quizbowl questions open with their most obscure clue, which makes that
first clue a good source of hard single-hop questions once it is cleaned
up and rephrased as a standalone question.
"""

from abcd_eval import (
    RawQuizbowlRecord,
    SplitSpec,
    build_obscureqa,
    clean_text,
    convert_clue_to_question,
)

# The cleaning steps, one at a time.
raw = "Antonín Dvořák composed this symphony (his ninth) [*] in America"
cleaned = clean_text(raw)
print("cleaned:  ", cleaned)
print("question: ", convert_clue_to_question(cleaned))

# Clues that address the quiz reader are unusable as questions.
print("moderator:", convert_clue_to_question("Note to moderator: read slowly"))

records = [
    RawQuizbowlRecord(
        clues=(
            "This composer's ninth symphony quotes American folk melodies",
            "He wrote the Slavonic Dances",
        ),
        answer="Antonín Dvořák",
        category="Fine Arts",
    ),
    RawQuizbowlRecord(
        clues=("Note to moderator: pause after the third clue",),
        answer="anything",
    ),
    RawQuizbowlRecord(
        clues=("(this whole clue is parenthetical)",),
        answer="nobody",
    ),
] + [
    RawQuizbowlRecord(
        clues=(f"This novelist number {i} wrote about the sea",),
        answer=f"Novelist {i}",
    )
    for i in range(9)
]

build = build_obscureqa(records, SplitSpec(seed=0))
print("\nkept:", build.total_kept)
print("dropped moderator notes:", build.dropped_moderator_notes)
print("dropped empty after cleaning:", build.dropped_empty)
print("split:", len(build.train), "/", len(build.valid), "/", len(build.test))

# Only the first (hardest) clue is used, and ids come from input position,
# so they stay stable however the shuffle seed moves records between splits.
sample = build.train[0]
print("\nsample id:    ", sample.id)
print("sample text:  ", sample.text)
print("sample answer:", sample.gold_answer)
