"""How long until a duplicate gets confirmed: targets, models, rankings.

Works directly against the library: builds log10 gap targets from the toy
pairs, fits the tree and a small MLP, and prints the predicted priority
order next to the true one.
"""

from duptriage.embed import MeanPoolEncoder, SgnsConfig, train_sgns
from duptriage.metrics import spearman_rho
from duptriage.timepred import (
    TimeMlpConfig,
    build_time_samples,
    gap_hours,
    predict_and_rank,
    split_time_pairs,
    train_time_mlp,
    train_time_tree,
)

from toy_dump import toy_corpus


def main():
    records, pairs = toy_corpus()
    by_id = {r.id: r for r in records}

    print("log10 gap targets (hours between anchor post and confirmation):")
    for pair in pairs[:4]:
        hours = gap_hours(pair, by_id)
        print(f"  {pair.anchor} -> {pair.master}: {hours:10.1f} h")

    sequences = [list(r.title_tokens) for r in records] + [list(r.body_tokens) for r in records]
    encoder = MeanPoolEncoder(train_sgns(sequences, SgnsConfig(dimension=24, epochs=3, seed=9)))

    train, validation, test = split_time_pairs(pairs, by_id)
    print(f"\nsplit by anchor date: {len(train)} train / {len(validation)} validation / {len(test)} test")

    train_samples, clamped = build_time_samples(train + validation, by_id, encoder)
    test_samples, _ = build_time_samples(test, by_id, encoder)
    print(f"{clamped} training gap(s) clamped as anomalies")

    tree = train_time_tree(train_samples, max_depth=4)
    mlp_cfg = TimeMlpConfig(input_dim=48, hidden1=16, hidden2=8, epochs=200, learning_rate=1e-2, seed=9)
    mlp, history = train_time_mlp(train_samples, mlp_cfg)
    print(f"tree depth {tree.depth()}; MLP training loss {history.train_loss[0]:.3f} -> {history.train_loss[-1]:.3f}")

    for name, model in (("tree", tree), ("mlp", mlp)):
        ranking = predict_and_rank(model, test_samples)
        rho = spearman_rho(ranking.gold(), ranking.predicted())
        print(f"\n{name}: slowest-to-confirm first (spearman rho {rho:.2f})")
        for anchor, master, predicted, gold in ranking.entries:
            print(f"  pair {anchor}->{master}  predicted {predicted:5.2f}  actual {gold:5.2f}")


if __name__ == "__main__":
    main()
