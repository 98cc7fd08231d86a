import numpy as np
import pytest

from dynten.io import (load_cp_model, load_dynamic_network, load_embedding_csv,
                       save_cp_model, write_dynamic_network, write_embedding_csv)
from dynten.synth import dynamic_sbm
from dynten.tensors import AlsConfig, SparseTensor3, cp_als


def test_combined_file_roundtrip(tmp_path):
    net, _ = dynamic_sbm(25, 4, seed=0)
    path = tmp_path / "net.edges"
    write_dynamic_network(path, net)
    back = load_dynamic_network(path)
    assert back.labels == net.labels
    assert back.tau == net.tau
    for a, b in zip(net.snapshots, back.snapshots):
        assert np.array_equal(a.src, b.src)
        assert np.array_equal(a.dst, b.dst)
        assert np.allclose(a.weight, b.weight)


def test_combined_file_format(tmp_path):
    path = tmp_path / "x.edges"
    path.write_text("# comment\n0 a b\n0 b c 2.5\n1 a c\n")
    net = load_dynamic_network(path)
    assert net.labels == ("a", "b", "c")
    assert net.tau == 2
    A0 = net.adjacency(0).toarray()
    assert A0[net.index_of("b"), net.index_of("c")] == 2.5
    assert A0[net.index_of("a"), net.index_of("b")] == 1.0


def test_time_column_must_be_sorted(tmp_path):
    path = tmp_path / "bad.edges"
    path.write_text("1 a b\n0 b c\n")
    with pytest.raises(ValueError, match="non-decreasing"):
        load_dynamic_network(path)


def test_directory_of_snapshots(tmp_path):
    d = tmp_path / "snaps"
    d.mkdir()
    (d / "00.txt").write_text("a b 2.0\n")
    (d / "01.txt").write_text("b c\n# nothing else\n")
    net = load_dynamic_network(d)
    assert net.tau == 2 and net.n == 3


def test_isolated_nodes_survive_roundtrip(tmp_path):
    path = tmp_path / "iso.edges"
    path.write_text("# nodes: a b c lonely\n0 a b\n")
    net = load_dynamic_network(path)
    assert "lonely" in net.labels and net.n == 4


def test_bad_line_reports_location(tmp_path):
    path = tmp_path / "bad.edges"
    path.write_text("0 a b\nnot enough\n")
    with pytest.raises(ValueError, match="bad.edges:2"):
        load_dynamic_network(path)


def test_embedding_csv_roundtrip(tmp_path):
    rng = np.random.default_rng(1)
    emb = rng.standard_normal((5, 3))
    labels = [f"v{i}" for i in range(5)]
    path = tmp_path / "emb.csv"
    write_embedding_csv(path, labels, emb)
    header = path.read_text().splitlines()[0]
    assert header == "node,dim_0,dim_1,dim_2"
    got_labels, got = load_embedding_csv(path)
    assert got_labels == labels
    assert np.array_equal(got, emb)  # repr floats round-trip exactly


def test_cp_model_roundtrip(tmp_path):
    rng = np.random.default_rng(2)
    dense = np.where(rng.random((5, 5, 3)) < 0.5, rng.standard_normal((5, 5, 3)), 0)
    Z = SparseTensor3.from_dense(dense)
    cfg = AlsConfig(rank=3, seed=7)
    model = cp_als(Z, cfg)
    save_cp_model(tmp_path / "model", model, config=cfg)
    back = load_cp_model(tmp_path / "model")
    assert back.rank == model.rank
    assert np.array_equal(back.lambdas, model.lambdas)
    assert np.array_equal(back.factor_a, model.factor_a)
    assert np.array_equal(back.factor_b, model.factor_b)
    assert np.array_equal(back.factor_c, model.factor_c)
    assert back.fit == model.fit
    meta = (tmp_path / "model" / "metadata.json").read_text()
    assert '"rank": 3' in meta and '"seed": 7' in meta
