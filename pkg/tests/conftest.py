import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def write_dataset(dirpath, edges, features, labels, train, val, test):
    """Write a dataset directory from plain Python structures."""
    dirpath.mkdir(parents=True, exist_ok=True)
    (dirpath / "graph.edges").write_text(
        "".join(f"{u} {v}\n" if w is None else f"{u} {v} {w}\n" for u, v, w in edges)
    )
    n = len(features)
    d = len(features[0]) if n else 0
    (dirpath / "features.txt").write_text(
        f"{n} {d}\n" + "".join(" ".join(str(x) for x in row) + "\n" for row in features)
    )
    (dirpath / "labels.txt").write_text("".join(f"{v}\n" for v in labels))
    for name, idx in (("train", train), ("val", val), ("test", test)):
        (dirpath / f"{name}.idx").write_text("".join(f"{i}\n" for i in idx))
    return dirpath
