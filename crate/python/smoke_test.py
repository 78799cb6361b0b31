"""Smoke test for the `anomale` extension module.

Build first, e.g. `maturin develop -m crates/py/Cargo.toml`, then run
`python python/smoke_test.py`.
"""

import random

import anomale


def main():
    rng = random.Random(7)
    hosts = [f"10.0.0.{i}" for i in range(12)]
    src, dst, feats, attack = [], [], [], []
    for _ in range(300):
        bad = rng.random() < 0.05
        src.append(rng.choice(hosts))
        dst.append(rng.choice(hosts))
        centre = 3.0 if bad else 0.0
        feats.append([rng.gauss(centre, 1.0) for _ in range(6)])
        attack.append(bad)

    graph = anomale.FlowGraph(src, dst, feats)
    assert graph.num_edges == 600
    assert graph.feature_dim == 6

    enc = anomale.Encoder.train(graph, hidden_dim=8, epochs=20, seed=1)
    assert len(enc.loss_trace) == 20
    emb = enc.embed(graph)
    assert len(emb) == 300 and len(emb[0]) == enc.embedding_dim == 16

    for kind, param in [("pca", 3), ("iforest", 50), ("cblof", 3), ("hbos", 10)]:
        det = anomale.Detector.fit(kind, feats, param, contamination=0.05, seed=1)
        flags = det.predict(feats)
        assert len(flags) == 300
        again = anomale.Detector.from_json(det.to_json())
        assert again.predict(feats) == flags
        m = anomale.metrics(flags, attack)
        assert 0.0 <= m["macro_f1"] <= 1.0
        print(f"{kind:8s} acc={m['accuracy']:.3f} f1={m['macro_f1']:.3f} dr={m['detection_rate']:.3f}")

    assert anomale.roc_auc([2.0, 3.0], [0.0, 1.0]) == 1.0
    print("ok")


if __name__ == "__main__":
    main()
