"""Training the per-aspect critic heads.

Each aspect gets a linear scorer over 8 hand-designed features, fit with
full-batch gradient descent on a pairwise ranking objective: every
(negative, positive) pair contributes log(1 + exp(neg - pos)), which
falls as positives outscore negatives. Training is bit-reproducible.
"""
import tempfile
from pathlib import Path

from citecritic import (
    TrainConfig,
    build_critique_corpus,
    evaluate_critic,
    generate_corpus,
    load_params,
    save_params,
    train_critic,
)

records = generate_corpus(40, seed=7)
examples = build_critique_corpus(records, seed=1)
train, held_out = examples[: 3 * 32], examples[3 * 32 :]
print(f"{len(train)} training examples, {len(held_out)} held out")

result = train_critic(train, TrainConfig(rate=0.1, epochs=200, seed=0))

print("\nloss trajectory (fluency head):")
fluency_epochs = [r for r in result.report if r.aspect.value == "fluency"]
for record in fluency_epochs[:: len(fluency_epochs) // 5]:
    print(f"  epoch {record.epoch:>3}  loss {record.loss:.6f}  accuracy {record.accuracy:.3f}")

print("\nheld-out evaluation:")
print(f"{'aspect':<12} {'accuracy':>9} {'avg pos':>9} {'avg neg':>9}")
for aspect, ev in evaluate_critic(result.params, held_out).items():
    print(
        f"{aspect.value:<12} {ev.accuracy:>9.4f} "
        f"{ev.mean_positive_clipped:>9.4f} {ev.mean_negative_clipped:>9.4f}"
    )

with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "params.json"
    save_params(result.params, path)
    reloaded = load_params(path)
    print("\nparameters survive a save/load round trip:", reloaded == result.params)
