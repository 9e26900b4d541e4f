"""Numba/numpy kernel twins: agreement, determinism, and the env switch.

The compiled twins only exist when the current process imported with
numba enabled, so the direct comparisons skip under SCITECH_NUMBA=0.
The subprocess tests cover the flag wiring itself either way.
"""

import json
import os
import subprocess
import sys

import numpy as np
import pytest
from scipy.sparse.csgraph import minimum_spanning_tree

from scitech.accel import NUMBA_ENABLED
from scitech.kernels import layout, mst, sgns

needs_numba = pytest.mark.skipif(
    not NUMBA_ENABLED, reason="compiled twins absent under SCITECH_NUMBA=0"
)


def test_lcg_step_matches_affine_form():
    state = 12345
    expected = (state * 6364136223846793005 + 1442695040888963407) % (1 << 64)
    assert sgns.lcg_next(state) == expected
    assert 0 <= sgns.lcg_next((1 << 64) - 1) < (1 << 64)


def _sgns_workload(rng_state):
    rng = np.random.default_rng(11)
    vocab_size, dim = 20, 8
    tokens = rng.integers(0, vocab_size, size=50).astype(np.int32)
    bounds = np.array([0, 15, 32, 50], dtype=np.int64)
    cum_table = np.floor(
        np.arange(1, vocab_size + 1) / vocab_size * (1 << 31)
    ).astype(np.uint64)
    cum_table[-1] = 1 << 31
    inp = rng.normal(scale=0.1, size=(vocab_size, dim)).astype(np.float32)
    out = np.zeros((vocab_size, dim), dtype=np.float32)
    args = (tokens, bounds, 3, 4, cum_table, 500, 0.025, 0.0025, 2, rng_state)
    return inp, out, args


class TestSgnsTwins:
    @needs_numba
    @pytest.mark.parametrize(
        "rng_state",
        [
            42,
            # a state in [2**63, 2**64): regression for the uint64 boxing
            # at the dispatcher boundary
            (5 * 2862933555777941757 + 3037000493) % (1 << 64),
        ],
    )
    def test_paths_agree(self, rng_state):
        assert rng_state < (1 << 64)
        inp_a, out_a, args = _sgns_workload(rng_state)
        inp_b, out_b = inp_a.copy(), out_a.copy()
        state_py = sgns._sgns_train_python(inp_a, out_a, *args)
        state_nb = sgns._sgns_train_numba(inp_b, out_b, *args[:-1], np.uint64(args[-1]))
        # identical LCG draws, so identical final states; matrices agree
        # up to accumulation order
        assert int(state_py) == int(state_nb)
        np.testing.assert_allclose(inp_a, inp_b, rtol=1e-5, atol=1e-6)
        np.testing.assert_allclose(out_a, out_b, rtol=1e-5, atol=1e-6)

    def test_python_path_deterministic(self):
        inp_a, out_a, args = _sgns_workload(7)
        inp_b, out_b = inp_a.copy(), out_a.copy()
        sgns._sgns_train_python(inp_a, out_a, *args)
        sgns._sgns_train_python(inp_b, out_b, *args)
        assert np.array_equal(inp_a, inp_b)
        assert np.array_equal(out_a, out_b)

    def test_training_moves_vectors(self):
        inp, out, args = _sgns_workload(7)
        before = inp.copy()
        sgns._sgns_train_python(inp, out, *args)
        assert not np.array_equal(inp, before)
        assert np.all(np.isfinite(inp)) and np.all(np.isfinite(out))


def _mst_workload(seed, n=60, dim=3):
    rng = np.random.default_rng(seed)
    points = rng.normal(size=(n, dim))
    d = np.sqrt(((points[:, None, :] - points[None, :, :]) ** 2).sum(axis=2))
    core = np.sort(d, axis=1)[:, 3]  # distance to the 3rd neighbor
    return points, core, d


class TestMstTwins:
    @needs_numba
    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_identical_edge_lists(self, seed):
        points, core, _ = _mst_workload(seed)
        e_np, w_np = mst._mst_numpy(points, core)
        e_nb, w_nb = mst._mst_numba(points, core)
        assert np.array_equal(e_np, e_nb)
        assert np.array_equal(w_np, w_nb)

    @pytest.mark.parametrize("seed", [0, 5])
    def test_total_weight_matches_scipy(self, seed):
        points, core, d = _mst_workload(seed)
        mr = np.maximum(d, np.maximum(core[:, None], core[None, :]))
        np.fill_diagonal(mr, 0.0)
        _, weights = mst.mst_mutual_reachability(points, core)
        reference = minimum_spanning_tree(mr).sum()
        assert weights.sum() == pytest.approx(reference, abs=1e-9)

    def test_spanning_and_acyclic(self):
        points, core, _ = _mst_workload(3, n=40)
        edges, weights = mst.mst_mutual_reachability(points, core)
        assert edges.shape == (39, 2)
        assert weights.shape == (39,)
        # union-find: n-1 edges with no cycle span the point set
        parent = list(range(40))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for a, b in edges:
            ra, rb = find(int(a)), find(int(b))
            assert ra != rb
            parent[ra] = rb


def _layout_workload(seed=0, n=12, dim=2):
    rng = np.random.default_rng(seed)
    embedding = rng.normal(scale=5.0, size=(n, dim))
    # fully connected graph in CSR form
    head, tail = [], []
    indptr = [0]
    indices = []
    for i in range(n):
        for j in range(n):
            if i != j:
                head.append(i)
                tail.append(j)
                indices.append(j)
        indptr.append(len(indices))
    head = np.asarray(head, dtype=np.int32)
    tail = np.asarray(tail, dtype=np.int32)
    indptr = np.asarray(indptr, dtype=np.int64)
    indices = np.asarray(indices, dtype=np.int32)
    eps = np.ones(head.shape[0], dtype=np.float64)
    return embedding, head, tail, indptr, indices, eps


def _mean_pairwise(x):
    d = np.sqrt(((x[:, None, :] - x[None, :, :]) ** 2).sum(axis=2))
    return d[np.triu_indices_from(d, k=1)].mean()


class TestLayout:
    def test_deterministic_per_path(self):
        emb, head, tail, indptr, indices, eps = _layout_workload()
        a = layout.optimize_layout(
            emb.copy(), head, tail, indptr, indices, 30, eps,
            1.577, 0.895, 1.0, 0.05, 5, seed=9,
        )
        b = layout.optimize_layout(
            emb.copy(), head, tail, indptr, indices, 30, eps,
            1.577, 0.895, 1.0, 0.05, 5, seed=9,
        )
        assert np.array_equal(a, b)

    def test_attraction_contracts_fully_connected_graph(self):
        # every pair is a neighbor, so negative sampling never applies
        # and attraction alone must shrink the layout
        emb, head, tail, indptr, indices, eps = _layout_workload()
        before = _mean_pairwise(emb)
        after_emb = layout.optimize_layout(
            emb.copy(), head, tail, indptr, indices, 50, eps,
            1.577, 0.895, 1.0, 0.5, 5, seed=0,
        )
        assert _mean_pairwise(after_emb) < before
        assert np.all(np.isfinite(after_emb))

    @needs_numba
    def test_parallel_variant_runs(self):
        emb, head, tail, indptr, indices, eps = _layout_workload()
        out = layout.optimize_layout(
            emb.copy(), head, tail, indptr, indices, 10, eps,
            1.577, 0.895, 1.0, 0.05, 5, seed=0, parallel=True,
        )
        assert out.shape == emb.shape
        assert np.all(np.isfinite(out))


_PROBE = "from scitech.accel import NUMBA_ENABLED; print(NUMBA_ENABLED)"


def _run_probe(env_value):
    env = dict(os.environ)
    if env_value is None:
        env.pop("SCITECH_NUMBA", None)
    else:
        env["SCITECH_NUMBA"] = env_value
    proc = subprocess.run(
        [sys.executable, "-c", _PROBE], env=env, capture_output=True, text=True
    )
    assert proc.returncode == 0, proc.stderr
    return proc.stdout.strip()


class TestEnvSwitch:
    def test_falsy_disables(self):
        assert _run_probe("0") == "False"
        assert _run_probe("off") == "False"

    def test_truthy_requires_numba(self):
        pytest.importorskip("numba")
        assert _run_probe("1") == "True"

    def test_unset_auto_detects(self):
        try:
            import numba  # noqa: F401
            expected = "True"
        except ImportError:
            expected = "False"
        assert _run_probe(None) == expected

    def test_train_sgns_agrees_across_paths(self, tmp_path):
        pytest.importorskip("numba")
        script = tmp_path / "train_probe.py"
        script.write_text(
            "import json, sys\n"
            "import numpy as np\n"
            "from scitech.embed import train_sgns\n"
            "docs = [[f'w{(i * j) % 17}' for j in range(12)] for i in range(40)]\n"
            "emb = train_sgns(docs, dim=16, window=3, negatives=3, epochs=2,\n"
            "                 seed=5, min_count=1)\n"
            "np.save(sys.argv[1], emb.input_vectors)\n",
            encoding="utf-8",
        )
        results = {}
        for flag in ("0", "1"):
            out_path = tmp_path / f"vec_{flag}.npy"
            env = dict(os.environ, SCITECH_NUMBA=flag)
            proc = subprocess.run(
                [sys.executable, str(script), str(out_path)],
                env=env, capture_output=True, text=True,
            )
            assert proc.returncode == 0, proc.stderr
            results[flag] = np.load(out_path)
        np.testing.assert_allclose(results["0"], results["1"], rtol=1e-4, atol=1e-5)
