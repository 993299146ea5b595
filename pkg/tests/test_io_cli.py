import json
import re

import numpy as np
import pytest

from riwgm import io
from riwgm.cli import main
from riwgm.core import RngStream, sample_mvn_zero
from riwgm.sampler import default_hyperparameters, run_chain, standardize
from riwgm.selection import build_path


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, (json.loads(out) if code == 0 else json.loads(err))


@pytest.fixture(scope="module")
def chain():
    om = np.eye(4)
    om[0, 1] = om[1, 0] = -0.4
    x = sample_mvn_zero(np.linalg.inv(om), 120, RngStream(1))
    return run_chain(standardize(x), default_hyperparameters(120, 4), 300, 100, RngStream(2), store_draws=True, log_every=0)


def test_matrix_csv_round_trip_full_precision(tmp_path):
    m = np.random.default_rng(0).normal(size=(3, 4)) * 1e-7 + np.pi
    io.write_matrix_csv(tmp_path / "m.csv", m)
    np.testing.assert_array_equal(io.read_matrix_csv(tmp_path / "m.csv"), m)


def test_matrix_csv_errors_name_the_line(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("1,2,3\n4,5,6\n7,8\n")
    with pytest.raises(io.ArtifactError, match="line 3"):
        io.read_matrix_csv(bad)
    bad.write_text("1,2\n3,x\n")
    with pytest.raises(io.ArtifactError, match="line 2"):
        io.read_matrix_csv(bad)


def test_edge_list_round_trip(tmp_path):
    edges = [(0, 1), (2, 4)]
    io.write_edge_list(tmp_path / "e.csv", edges)
    assert (tmp_path / "e.csv").read_text().splitlines() == ["i,j", "1,2", "3,5"]
    assert io.read_edge_list(tmp_path / "e.csv") == edges
    adj = io.edges_to_adjacency(edges, 5)
    assert adj[0, 1] and adj[1, 0] and adj.sum() == 4
    assert io.adjacency_to_edges(adj) == edges


def test_json_nan_becomes_null(tmp_path):
    io.write_json(tmp_path / "a.json", {"x": float("nan"), "y": np.float64(2.5), "z": np.arange(2)})
    assert io.read_json(tmp_path / "a.json") == {"x": None, "y": 2.5, "z": [0, 1]}


def test_draw_file_round_trip_and_header(tmp_path, chain):
    f = tmp_path / "d.bin"
    io.write_draws(f, chain.draws_omega, chain.draws_d, chain.draws_lam)
    raw = f.read_bytes()
    assert raw[:4] == b"RIWC"
    assert int.from_bytes(raw[4:8], "little") == 1
    assert int.from_bytes(raw[8:12], "little") == 4
    assert int.from_bytes(raw[12:20], "little") == len(chain.draws_omega)
    om, d, lam = io.read_draws(f)
    np.testing.assert_array_equal(om, chain.draws_omega)
    np.testing.assert_array_equal(d, chain.draws_d)
    np.testing.assert_array_equal(lam, chain.draws_lam)
    f.write_bytes(raw[:-8])
    with pytest.raises(io.ArtifactError):
        io.read_draws(f)


def test_chain_round_trip(tmp_path, chain):
    io.write_chain(tmp_path / "fit", chain, {"b": 3.0})
    back = io.read_chain(tmp_path / "fit")
    np.testing.assert_array_equal(back.omega_mean, chain.omega_mean)
    np.testing.assert_array_equal(back.coef_mean, chain.coef_mean)
    for k in range(4):
        np.testing.assert_allclose(back.beta_cov(k), chain.beta_cov(k), rtol=1e-14, atol=1e-300)
    np.testing.assert_array_equal(back.draws_omega, chain.draws_omega)


def test_path_round_trip(tmp_path, chain):
    path = build_path(chain, delta_count=12)
    io.write_path(tmp_path / "sel", path)
    back = io.read_path(tmp_path / "sel")
    np.testing.assert_array_equal(back.grid.values, path.grid.values)
    np.testing.assert_array_equal(back.supports, path.supports)


def test_pipeline(tmp_path, capsys):
    sim, fit, sel, fdr, ev = (str(tmp_path / s) for s in ("sim", "fit", "sel", "fdr", "ev"))
    code, res = run(["simulate", "--case", "sparse", "--n", "50", "--p", "5", "--extra-edges", "3", "--seed", "4", "--out", sim], capsys)
    assert code == 0 and res["shape"] == [50, 5]
    code, res = run(["fit", "--data", f"{sim}/data.csv", "--iters", "400", "--burnin", "100", "--out", fit], capsys)
    assert code == 0
    assert io.read_matrix_csv(f"{fit}/omega_mean.csv").shape == (5, 5)
    assert "fit.log" in {p.name for p in (tmp_path / "fit").iterdir()}
    code, res = run(["select", "--fit", fit, "--delta-count", "15", "--out", sel], capsys)
    assert code == 0
    and_edges = [set(io.read_edge_list(f"{sel}/edges_and/delta_{m:03d}.csv")) for m in range(1, 16)]
    or_edges = [set(io.read_edge_list(f"{sel}/edges_or/delta_{m:03d}.csv")) for m in range(1, 16)]
    assert all(a <= o for a, o in zip(and_edges, or_edges))
    assert len(and_edges[0]) == 10 and not or_edges[-1]
    code, res = run(["fdr", "--select", sel, "--fit", fit, "--out", fdr], capsys)
    assert code == 0
    dot = (tmp_path / "fdr" / "graph.dot").read_text()
    assert len(re.findall(r"^\s+\d+;$", dot, flags=re.M)) == 5
    assert len(re.findall(r"--", dot)) == res["edges"]
    code, res = run(["evaluate", "--truth", f"{sim}/omega0.csv", "--select", sel, "--estimate", f"{fdr}/edges.csv", "--out", ev], capsys)
    assert code == 0
    m = res["metrics"]["support"]
    assert 0 <= m["auc"] <= 1 and m["true_edges"] == 3


def test_fit_is_deterministic_and_iw_switch(tmp_path, capsys):
    x = sample_mvn_zero(np.eye(3), 40, RngStream(0))
    io.write_matrix_csv(tmp_path / "x.csv", x)
    for name in ("a", "b"):
        assert run(["fit", "--data", str(tmp_path / "x.csv"), "--iters", "200", "--burnin", "50", "--out", str(tmp_path / name)], capsys)[0] == 0
    assert (tmp_path / "a" / "omega_mean.csv").read_bytes() == (tmp_path / "b" / "omega_mean.csv").read_bytes()
    assert run(["fit", "--data", str(tmp_path / "x.csv"), "--iters", "200", "--burnin", "50", "--prior", "iw", "--out", str(tmp_path / "c")], capsys)[0] == 0
    meta = io.read_json(tmp_path / "c" / "meta.json")
    assert meta["hyperparameters"]["variant"] == "iw"
    d = io.read_matrix_csv(tmp_path / "c" / "d_mean.csv").ravel()
    assert np.ptp(d) == 0


def test_fit_config_file_and_overrides(tmp_path, capsys):
    x = sample_mvn_zero(np.eye(3), 40, RngStream(0))
    io.write_matrix_csv(tmp_path / "x.csv", x)
    io.write_json(tmp_path / "cfg.json", {"data_path": str(tmp_path / "x.csv"), "iters": 150, "burnin": 50, "seed": 9})
    code, res = run(["fit", "--config", str(tmp_path / "cfg.json"), "--burnin", "60", "--out", str(tmp_path / "f")], capsys)
    assert code == 0 and res["draws_used"] == 90
    cfg = io.read_json(tmp_path / "f" / "meta.json")["config"]
    assert cfg["seed"] == 9 and cfg["eta"] == 0.1 and cfg["iters"] == 150
    io.write_json(tmp_path / "bad.json", {"colour": 1})
    code, err = run(["fit", "--config", str(tmp_path / "bad.json"), "--out", str(tmp_path / "g")], capsys)
    assert code == 1 and "colour" in err["message"]


def test_errors_are_json(tmp_path, capsys):
    code, err = run(["simulate", "--n", "10", "--p", "3", "--out", str(tmp_path / "no" / "such")], capsys)
    assert code == 1 and err["command"] == "simulate" and str(tmp_path / "no") in err["message"]
    bad = tmp_path / "bad.csv"
    bad.write_text("1,2\n3\n")
    code, err = run(["fit", "--data", str(bad), "--out", str(tmp_path / "f")], capsys)
    assert code == 1 and "line 2" in err["message"]
    code, err = run(["select", "--fit", str(tmp_path / "missing"), "--out", str(tmp_path / "s")], capsys)
    assert code == 1 and err["error"] == "ArtifactError"


def test_fdr_hand_case_end_to_end(tmp_path, capsys):
    sel, fit = tmp_path / "sel", tmp_path / "fit"
    sel.mkdir()
    fit.mkdir()
    pm = np.zeros((4, 4))
    i, j = np.triu_indices(4, 1)
    pm[i, j] = [1.0, 0.9, 0.6, 0.2, 0.0, 0.0]
    io.write_matrix_csv(sel / "inclusion.csv", pm + pm.T)
    io.write_matrix_csv(fit / "omega_mean.csv", 2 * np.eye(4))
    code, res = run(["fdr", "--select", str(sel), "--fit", str(fit), "--eta", "0.2", "--out", str(tmp_path / "o")], capsys)
    assert code == 0
    assert res["zeta"] == 3 and res["c_eta"] == 0.6 and res["edges"] == 3
    assert io.read_edge_list(tmp_path / "o" / "edges.csv") == [(0, 1), (0, 2), (0, 3)]


def test_evaluate_identity_estimate_and_p_mismatch(tmp_path, capsys):
    io.write_edge_list(tmp_path / "t.csv", [(0, 1), (1, 2)])
    code, res = run(["evaluate", "--truth", str(tmp_path / "t.csv"), "--estimate", str(tmp_path / "t.csv"), "--p", "4", "--out", str(tmp_path / "e")], capsys)
    assert code == 0
    m = res["metrics"]["support"]
    assert m["sp"] == 1 and m["se"] == 1
    io.write_matrix_csv(tmp_path / "om.csv", np.eye(3))
    code, err = run(["evaluate", "--truth", str(tmp_path / "om.csv"), "--estimate", str(tmp_path / "t.csv"), "--p", "4", "--out", str(tmp_path / "e2")], capsys)
    assert code == 1 and "p=3" in err["message"]


def test_output_root_environment(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("RIWGM_OUTPUT_ROOT", str(tmp_path))
    code, res = run(["simulate", "--n", "20", "--p", "4", "--out", "rel"], capsys)
    assert code == 0 and (tmp_path / "rel" / "data.csv").is_file()


def test_simulate_fgn_case_sizes(tmp_path, capsys):
    code, _ = run(["simulate", "--case", "fgn", "--n", "300", "--p", "100", "--hurst", "0.7", "--seed", "1", "--out", str(tmp_path / "s")], capsys)
    assert code == 0
    assert io.read_matrix_csv(tmp_path / "s" / "data.csv").shape == (300, 100)
    prov = io.read_json(tmp_path / "s" / "provenance.json")
    assert prov["seed"] == 1 and prov["hurst"] == 0.7


def test_simulate_sparse_hubs(tmp_path, capsys):
    code, _ = run(["simulate", "--case", "sparse", "--n", "30", "--p", "20", "--hubs", "2", "--hub-degree", "6", "--out", str(tmp_path / "s")], capsys)
    assert code == 0
    om = io.read_matrix_csv(tmp_path / "s" / "omega0.csv")
    assert np.linalg.eigvalsh(om)[0] > 0
    hubs = io.read_json(tmp_path / "s" / "provenance.json")["hubs"]
    deg = (om != 0).sum(axis=1) - 1
    assert len(hubs) == 2 and all(deg[h - 1] >= 6 for h in hubs)


def test_benchmark_command(tmp_path, capsys):
    code, res = run(
        ["benchmark", "--n", "40", "--p", "6", "--iters", "200", "--burnin", "50", "--delta-count", "8", "--replicates", "2", "--out", str(tmp_path / "b")],
        capsys,
    )
    assert code == 0
    summ = io.read_json(tmp_path / "b" / "summary.json")
    assert summ["replicates"] == 2
