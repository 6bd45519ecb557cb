"""Alternating-view k-means: multi-view clustering with episodic encoder training."""

from avkmeans._core import (  # noqa: F401
    __version__,
    class_distribution,
    cluster_acc,
    cluster_prf,
    evaluate_clustering,
    generate_synthetic,
    hungarian,
    kmeans,
    run_avkmeans,
    write_corpus_jsonl,
)
