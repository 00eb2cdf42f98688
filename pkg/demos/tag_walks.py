"""Tag co-occurrence graph, biased walks, and tag vectors on the toy corpus."""

from duptriage.embed import SgnsConfig, train_sgns
from duptriage.retrieval import cosine
from duptriage.taggraph import WalkConfig, build_graph, generate_walks, top_tag

from toy_dump import toy_corpus


def main():
    records, _ = toy_corpus()
    graph = build_graph(records)

    print(f"{len(graph.nodes)} tags: {', '.join(graph.nodes)}")
    print("\nheaviest co-occurrence edges:")
    for (a, b), w in sorted(graph.edges.items(), key=lambda kv: -kv[1])[:6]:
        print(f"  {a:<12} -- {b:<12} weight {w:.3f}")

    walk_cfg = WalkConfig(p=1.3, q=0.8, walks_per_node=2, walk_length=12, seed=5)
    walks = generate_walks(graph, walk_cfg)
    print(f"\n{len(walks)} biased walks; three of them:")
    for walk in walks[:3]:
        print("  " + " -> ".join(walk))

    store = train_sgns(walks, SgnsConfig(dimension=16, window=4, epochs=3, seed=5))
    print("\nnearest tags by walk-embedding cosine:")
    for tag in ("networking", "nvidia"):
        scored = [
            (cosine(store.vectors[tag], store.vectors[other]), other)
            for other in store.vectors
            if other != tag
        ]
        scored.sort(reverse=True)
        neighbors = ", ".join(f"{t} ({s:.2f})" for s, t in scored[:3])
        print(f"  {tag:<12} {neighbors}")

    # the question's most frequent tag wins the top-tag pick
    sample = records[5]
    print(f"\nquestion {sample.id} tags {list(sample.tags)} -> top tag {top_tag(sample, graph)!r}")


if __name__ == "__main__":
    main()
