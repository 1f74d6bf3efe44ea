import numpy as np
import pytest

from nearcrit import build_domain, dense_coloring, explore
from nearcrit.cli import main, read_table, write_table
from nearcrit.lattice import Disc, Rect, SubTriangle
from nearcrit.render import render_svg


def run(args):
    return main([str(a) for a in args])


def test_enumerate_symmetric(tmp_path, capsys):
    out = tmp_path / "enum.csv"
    assert run(["enumerate", "--n", 2, "--p", 0.5, "--out", out]) == 0
    assert "R = 0.500000" in capsys.readouterr().out
    params, header, rows = read_table(out)
    assert params["experiment"] == "enumerate"
    assert rows[0][header.index("r_exact")] == 0.5


def test_crossing_deterministic_bytes(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (a, b):
        assert run(["crossing", "--n", 16, "--p", 0.5, "--samples", 500,
                    "--seed", 7, "--out", out]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_csv_round_trip(tmp_path):
    path = tmp_path / "t.csv"
    params = {"alpha": 0.1234567890123456789, "n": 64, "tag": "x"}
    rows = [(1, 0.5, "left"), (2, 1.0 / 3.0, "right")]
    write_table(str(path), "demo", params, ["i", "v", "s"], rows)
    got_params, header, got_rows = read_table(str(path))
    assert header == ["i", "v", "s"]
    assert float(got_params["alpha"]) == 0.1234567890123456789
    assert got_rows[0] == [1, 0.5, "left"]
    assert got_rows[1][1] == 1.0 / 3.0


def test_config_file_with_flag_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("p = 0.5\nn = 4\nsamples = 200\nseed = 3\n")
    out = tmp_path / "c.csv"
    assert run(["crossing", "--config", cfg, "--n", "8", "--out", out]) == 0
    params, header, rows = read_table(out)
    assert rows[0][header.index("n")] == 8      # flag wins
    assert rows[0][header.index("samples")] == 200  # config fills the rest


def test_unknown_config_key_rejected(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("nonsense = 1\n")
    out = tmp_path / "x.csv"
    rc = run(["crossing", "--config", cfg, "--n", 8, "--p", 0.5, "--out", out])
    assert rc != 0
    assert not out.exists()


def test_invalid_args_no_partial_files(tmp_path):
    out = tmp_path / "y.csv"
    assert run(["crossing", "--n", 7, "--p", 0.5, "--out", out]) != 0
    assert not out.exists()
    assert run(["enumerate", "--n", 64, "--p", 0.5, "--out", out]) != 0
    assert not out.exists()


def test_length_csv_rows_and_fit(tmp_path):
    out = tmp_path / "len.csv"
    assert run(["length", "--n-list", "8,16,32", "--samples", 60,
                "--seed", 5, "--out", out]) == 0
    params, header, rows = read_table(out)
    assert len(rows) == 3
    assert "fit_slope" in params


def test_seed_env_default(tmp_path, monkeypatch):
    monkeypatch.setenv("NEARCRIT_SEED", "99")
    out1 = tmp_path / "e1.csv"
    assert run(["crossing", "--n", 8, "--p", 0.5, "--samples", 100,
                "--out", out1]) == 0
    assert read_table(out1)[0]["master_seed"] == "99"


def test_pivotal_sweep_cli(tmp_path, capsys):
    out = tmp_path / "piv.csv"
    assert run(["pivotal-sweep", "--n", 32, "--p-hi", 0.55, "--fields", 3,
                "--disc", "0.05,0.3,0.04", "--seed", 11, "--out", out]) == 0
    params, header, rows = read_table(out)
    assert header[:2] == ["field", "p"]


def test_arms_cli(tmp_path):
    out = tmp_path / "arms.csv"
    assert run(["arms", "--pattern", "bw", "--n-list", "2,4", "--samples", 200,
                "--out", out]) == 0
    params, header, rows = read_table(out)
    assert len(rows) == 2
    assert params["pattern"] == "bw"


# -- SVG ---------------------------------------------------------------------


def test_svg_counts_hexagons(tmp_path):
    dom = build_domain(2)
    text = render_svg(dom)
    assert text.count("<polygon") == dom.n_sites


def test_svg_with_path_and_regions(tmp_path):
    dom = build_domain(8)
    col = dense_coloring(dom, np.ones(dom.n_sites, bool))
    path = explore(dom, col)
    text = render_svg(dom, col, path,
                      regions=[Disc(0.0, 0.3, 0.1), Rect(-0.1, 0.1, 0.0, 0.2),
                               SubTriangle(-0.25, 0.0, 0.5)],
                      out=str(tmp_path / "out.svg"))
    assert "<polyline" in text and "<circle" in text and "<rect" in text
    assert (tmp_path / "out.svg").exists()


def test_svg_render_cap():
    class Stub:
        n = 4096
    with pytest.raises(ValueError):
        render_svg(Stub())


def test_crossing_svg_flag(tmp_path):
    out = tmp_path / "c.csv"
    svg = tmp_path / "c.svg"
    assert run(["crossing", "--n", 8, "--p", 0.5, "--samples", 50,
                "--svg", svg, "--out", out]) == 0
    assert svg.exists() and svg.read_text().startswith("<svg")


def test_path_dump_round_trip(tmp_path):
    from nearcrit import coloring_at, sample_field, side_outcome
    from nearcrit.explorer import dump_path, parse_path_dump
    from nearcrit.render import render_svg

    dom = build_domain(16)
    col = coloring_at(sample_field(dom, 4, 2), 0.5)
    path = explore(dom, col)
    text = dump_path(path)
    lines = [l for l in text.splitlines() if l and not l.startswith("#")]
    assert len(lines) == path.ell
    got = parse_path_dump(dom, text)
    assert np.allclose(got.vertex_positions(), path.vertex_positions())
    assert (got.ell_plus, got.ell_minus, got.ell) == \
        (path.ell_plus, path.ell_minus, path.ell)
    assert got.outcome == side_outcome(path)
    # the renderer consumes the parsed dump directly
    assert "<polyline" in render_svg(dom, col, got)


def test_crossing_dump_flag(tmp_path):
    out = tmp_path / "c.csv"
    dump = tmp_path / "c.txt"
    assert run(["crossing", "--n", 8, "--p", 0.5, "--samples", 20,
                "--dump-path", dump, "--out", out]) == 0
    trailer = dump.read_text().strip().splitlines()[-1]
    assert trailer.startswith("#") and len(trailer.split()) == 5


def test_remaining_subcommands_smoke(tmp_path):
    cases = [
        ["pstar", "--n", 8, "--eps", 0.1, "--samples-per-probe", 400,
         "--tolerance", 0.05],
        ["corrlen", "--p", 0.6, "--samples-per-probe", 400, "--n-max", 32],
        ["corrlen", "--p-list", "0.6", "--scaling", "--samples-per-probe", 400,
         "--arm-samples", 300, "--n-max", 32],
        ["quasimult", "--n1", 4, "--n2", 8, "--samples", 300],
        ["dimension", "--n", 64, "--lambda-list", "2,4,8", "--samples", 40],
        ["asymmetry", "--n", 16, "--p-mode", "critical", "--samples", 100],
        ["regime-sweep", "--b-list", "0.75", "--n-list", "8,16", "--samples", 200],
        ["goodtri", "--n", 64, "--eta", 0.25, "--k-first", 2, "--samples", 20,
         "--f-hat-samples", 8],
    ]
    for i, case in enumerate(cases):
        out = tmp_path / f"s{i}.csv"
        assert run(case + ["--seed", 3, "--out", out]) == 0, case
        params, header, rows = read_table(out)
        assert rows, case
