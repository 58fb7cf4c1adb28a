"""From critic scores to actionable feedback.

Raw rewards are clipped to [-2, 2], then classified against per-aspect
thresholds: at or above the average positive reward earns praise, at or
below the average negative reward earns a corrective, anything between
gets an improvement nudge. Each (aspect, band) pair has a fixed feedback
text, and the three texts plus the previous answer form the refinement
prompt.
"""
from citecritic import (
    ASPECT_ORDER,
    Band,
    DEFAULT_THRESHOLDS,
    Document,
    DocumentSet,
    Question,
    RewardScore,
    build_refinement_prompt,
    clip_reward,
    make_feedback,
    parse_cited_answer,
    render_feedback,
)

print("default thresholds:")
for aspect in ASPECT_ORDER:
    t = DEFAULT_THRESHOLDS.for_aspect(aspect)
    print(f"  {aspect.value:<12} praise >= {t.avg_positive:>6.2f}   corrective <= {t.avg_negative:>6.2f}")

print("\nclipping:", [(x, clip_reward(x)) for x in (-3.5, -0.93, 2.7)])

print("\nscores to bands:")
items = []
for aspect, raw in zip(ASPECT_ORDER, (-0.93, 1.25, 0.51)):
    score = RewardScore(aspect=aspect, raw=raw, clipped=clip_reward(raw))
    item = make_feedback(score, DEFAULT_THRESHOLDS)
    items.append(item)
    print(f"  {aspect.value:<12} {raw:+.2f} -> {item.band.value}")
    print(f"    {item.text}")

print("\nall nine feedback texts:")
for aspect in ASPECT_ORDER:
    for band in Band:
        print(f"  [{aspect.value}/{band.value}] {render_feedback(aspect, band)}")

question = Question(id="demo", text="How tall is the Eiffel Tower?", gold_aspects=())
docs = DocumentSet(
    [
        Document(1, "Eiffel Tower", "The Eiffel Tower is 330 meters tall. It was completed in 1889."),
        Document(2, "Paris", "Paris is the capital of France."),
    ]
)
previous = parse_cited_answer("The Eiffel Tower is 330 meters tall [1]. It was completed in 1889.")
print("\nrefinement prompt:")
print(build_refinement_prompt(question, docs, previous, items))
