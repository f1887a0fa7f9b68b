"""Smoke test for the `cct` extension module. Build it first with

    maturin develop -m crates/py/Cargo.toml
"""

import json
import os
import tempfile

import cct


def vertical(x):
    return [[x, 0.0], [x, 1.0]]


def main():
    idx = cct.Index([vertical(0.0), vertical(4.0), vertical(10.0)], variant="exact")
    assert len(idx) == 3 and idx.node_count == 5
    q = vertical(3.0)
    assert idx.query(q, k=2)["ids"] == [0, 1]
    assert idx.query(q)["ids"] == [1]
    assert idx.query(q, tau=3.5)["ids"] == [0, 1]
    implicit = idx.query(q, k=2, implicit=True)
    assert implicit["e_add"] == 0.0 and implicit["stats"]["df_calls"] == 0
    assert abs(cct.frechet_distance(vertical(0.0), q) - 3.0) < 1e-9
    assert cct.frechet_decide(vertical(0.0), q, 3.0)
    assert json.loads(idx.quality())["compactness"] == 0.4

    ids, trajs, pool = cct.gen_synthetic(total=600, noise=60, pool=50, seed=1)
    assert len(trajs) == 600 and len(pool) == 50
    big = cct.Index(trajs, ids=ids, variant="relaxed", seed=1)
    src = trajs[ids.index(pool[0])]
    assert big.query(src)["ids"] == [pool[0]]
    big.insert(10_000, [[p[0] + 0.01, p[1]] for p in src], variant="standard")
    assert big.check_invariants()

    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "idx.json")
        big.save(path)
        again = cct.Index.load(path)
        assert len(again) == 601
        assert again.query(src, k=5)["ids"] == big.query(src, k=5)["ids"]

    try:
        idx.query(q, k=2, eadd=1.0, erel=1.0)
    except ValueError:
        pass
    else:
        raise AssertionError("conflicting error models accepted")
    print("smoke test passed")


if __name__ == "__main__":
    main()
