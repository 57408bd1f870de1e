"""From per-claim verdicts to a cohort-level significance test.

Small worked example: score a handful of questions, split them by their
correctness label, and ask whether the two groups' score means differ by
more than chance.
"""

from fractions import Fraction

from abcd_eval import Verdict, score_true, welch_t_test

T, F, N = Verdict.TRUE, Verdict.FALSE, Verdict.NON_RESPONSE

# Per-question verdict vectors. Index 0 is the entity-type claim and never
# counts toward the score; non-responses score as false.
verdict_vectors = {
    "q1": [T, T, T, T],
    "q2": [T, T, T, F],
    "q3": [T, T, N, F],
    "q4": [F, T, T, T],  # a false type claim still does not count
    "q5": [T, F, F, N],
    "q6": [T, F, F, F],
    "q7": [T, N, F, F],
    "q8": [T, T, F, F],
}
scores = {qid: score_true(v) for qid, v in verdict_vectors.items()}
for qid, score in scores.items():
    print(f"{qid}: {score}")

# Which answers were actually right, per a human label pass.
labels = {
    "q1": True, "q2": True, "q3": True, "q4": True,
    "q5": False, "q6": False, "q7": False, "q8": False,
}
correct = [scores[q] for q, ok in labels.items() if ok]
incorrect = [scores[q] for q, ok in labels.items() if not ok]

# Means stay exact rationals all the way to the report.
mean_correct = sum(correct) / len(correct)
mean_incorrect = sum(incorrect) / len(incorrect)
print("\nmean over labeled-correct:  ", mean_correct)
print("mean over labeled-incorrect:", mean_incorrect)
print("difference:                 ", mean_correct - mean_incorrect)
assert mean_correct - mean_incorrect == Fraction(2, 3)

# Welch's t-test tolerates unequal variances and group sizes. Only here do
# the exact fractions get converted to floats.
result = welch_t_test([float(s) for s in correct],
                      [float(s) for s in incorrect])
print(f"\nt = {result.t_stat:.4f}")
print(f"df = {result.degrees_freedom:.4f}")
print(f"two-sided p = {result.p_value:.4f}")

if result.p_value < 0.05:
    print("score separates right from wrong answers on this toy cohort")
else:
    print("no significant separation (expected: eight questions is tiny)")
