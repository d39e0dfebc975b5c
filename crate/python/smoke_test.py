"""Smoke test for the pyactpred extension module.

Build and run:
    cargo build --release -p actpred-py --features extension-module
    cp target/release/libpyactpred.so python/pyactpred.so
    python3 python/smoke_test.py
"""

import math
import os
import sys
import tempfile

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import pyactpred as ap


def main():
    assert ap.convert_event("PersonX teaches PersonX's son") == ["I taught my son"]
    assert ap.convert_event("PersonX gives PersonY a gift") == ["I gave", "a gift"]
    assert ap.normalize("I went to the beach @bob!") == "go to the beach"
    assert ap.past_tense("stop") == "stopped"

    table = ap.EmbeddingTable.from_text("kind 1 0 0\nhelp 0 1 0\nfun 1 1 1\n")
    assert table.dim == 3 and len(table) == 3
    score = table.ddr_score("fun kind", ["kind", "help"])
    assert abs(score - 0.75 / math.sqrt(0.75)) < 1e-9

    pts = [[1.0, 0.0], [1.0, 0.1], [0.0, 1.0], [0.1, 1.0]]
    model = ap.kmeans(pts, 2, seed=1)
    labels = [a for a in model.assignments]
    assert labels[0] == labels[1] != labels[2] == labels[3]
    assert all(b <= a + 1e-12 for a, b in zip(model.trace, model.trace[1:]))
    assert ap.adjusted_rand_index(labels, [0, 0, 1, 1]) == 1.0
    assert ap.silhouette(pts, labels) > 0.5

    acc, acr = ap.random_baseline(50, [1, 2, 3, 5, 10, 25])
    assert ["%.2f" % a for a in acc] == ["2.00", "4.00", "6.00", "10.00", "20.00", "50.00"]
    assert acr == 50.0
    assert ap.per_class_accuracy([0, 1], [[0.9, 0.1], [0.2, 0.8]], 1) == 100.0
    assert ap.acr(["a", "b"], [0, 1], [[0.9, 0.1], [0.2, 0.8]], 1) == 0.0

    with tempfile.TemporaryDirectory() as d:
        assert ap.synth(d, users=30, clusters=3, seed=2) == 30
        assert ap.run_cli(["--workdir", d, "queries"]) == 0
        assert os.path.exists(os.path.join(d, "queries.jsonl"))
        assert ap.run_cli(["--workdir", d, "no-such-stage"]) == 2

    print("pyactpred smoke test passed")


if __name__ == "__main__":
    main()
