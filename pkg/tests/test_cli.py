"""Command line behavior: exit codes, output formats, determinism."""

import json

import pytest

from deconvsim import cli

TINY_NET = {
    "name": "tiny",
    "dims": 3,
    "layers": [
        {"name": "up1", "in_channels": 2, "out_channels": 3,
         "in_size": [2, 2, 2], "kernel": 3, "stride": 2},
        {"name": "up2", "in_channels": 3, "out_channels": 2,
         "in_size": [5, 5, 5], "kernel": 3, "stride": 2},
    ],
}

FLAT_NET = {
    "name": "flat",
    "dims": 2,
    "layers": [
        {"name": "only", "in_channels": 1, "out_channels": 1,
         "in_size": [4, 4], "kernel": 3, "stride": 1},
    ],
}


@pytest.fixture
def tiny_net_path(tmp_path):
    p = tmp_path / "tiny.json"
    p.write_text(json.dumps(TINY_NET))
    return str(p)


def test_validate_prints_resources(capsys):
    assert cli.main(["validate", "--config", "table2-2d"]) == 0
    assert capsys.readouterr().out == "PEs: 2048, adders: 48\n"
    assert cli.main(["validate", "--config", "table2-3d"]) == 0
    assert capsys.readouterr().out == "PEs: 2048, adders: 128\n"


def test_validate_with_network(capsys):
    assert cli.main(["validate", "--config", "table2-2d",
                     "--network", "dcgan"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("PEs: 2048, adders: 48\n")
    assert "4 layers, ok" in out


def test_validate_bad_config_file(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({"t_n": 48}))
    assert cli.main(["validate", "--config", str(p)]) == 2
    assert "power of two" in capsys.readouterr().err


def test_unknown_builtin_network(capsys):
    assert cli.main(["simulate", "--network", "builtin:nosuch"]) == 2
    assert capsys.readouterr().err.startswith("error:")


def test_builtin_prefix_on_network_and_config(tmp_path, capsys):
    out = tmp_path / "r.json"
    rc = cli.main(["simulate", "--network", "builtin:3d-gan",
                   "--config", "builtin:table2-3d", "--out", str(out)])
    assert rc == 0
    assert json.loads(out.read_text())["networks"][0]["name"] == "3D-GAN"
    assert cli.main(["validate", "--config", "builtin:table2-3d"]) == 0
    assert capsys.readouterr().out == "PEs: 2048, adders: 128\n"
    assert cli.main(["simulate", "--network", "dcgan",
                     "--config", "builtin:nosuch"]) == 2
    capsys.readouterr()


def test_missing_network_file():
    assert cli.main(["simulate", "--network", "/nonexistent/net.json"]) == 4


def test_missing_config_file():
    assert cli.main(["validate", "--config", "/nonexistent/cfg.json"]) == 4


def test_usage_error_is_exit_2(capsys):
    assert cli.main(["simulate"]) == 2
    capsys.readouterr()


def test_simulate_csv_columns(tiny_net_path, tmp_path):
    from deconvsim.report import CSV_COLUMNS
    out = tmp_path / "rep.csv"
    rc = cli.main(["simulate", "--network", tiny_net_path,
                   "--format", "csv", "--out", str(out)])
    assert rc == 0
    lines = out.read_text().strip().split("\n")
    assert lines[0].split(",") == list(CSV_COLUMNS)
    assert len(lines) == 4  # header + 2 layers + TOTAL
    assert lines[-1].split(",")[1] == "TOTAL"


def test_simulate_deterministic_bytes(tiny_net_path, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for path in (a, b):
        assert cli.main(["simulate", "--network", tiny_net_path,
                         "--seed", "3", "--out", str(path)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_simulate_check_oracle_passes(tiny_net_path):
    assert cli.main(["simulate", "--network", tiny_net_path,
                     "--check-oracle", "--out", "/dev/null"]) == 0


def test_oracle_mismatch_is_exit_3(tiny_net_path, monkeypatch, capsys):
    real = cli.deconv_insert_conv

    def wrong(x, w, layer, fx=None):
        return real(x, w, layer, fx) + 1

    monkeypatch.setattr(cli, "deconv_insert_conv", wrong)
    rc = cli.main(["simulate", "--network", tiny_net_path,
                   "--check-oracle", "--out", "/dev/null"])
    assert rc == 3
    assert "disagrees" in capsys.readouterr().err


def test_trace_output(tiny_net_path, tmp_path):
    trace = tmp_path / "trace.txt"
    rc = cli.main(["simulate", "--network", tiny_net_path,
                   "--trace", str(trace), "--out", "/dev/null"])
    assert rc == 0
    text = trace.read_text()
    assert "# layer up1" in text
    assert "pe(" in text and ", mul, " in text


def test_trace_limit_exceeded(tiny_net_path, tmp_path):
    rc = cli.main(["simulate", "--network", tiny_net_path,
                   "--trace", str(tmp_path / "t.txt"), "--trace-limit", "2",
                   "--out", "/dev/null"])
    assert rc == 2


def test_dump_schedule(tiny_net_path, tmp_path):
    sched = tmp_path / "sched.json"
    rc = cli.main(["simulate", "--network", tiny_net_path,
                   "--dump-schedule", str(sched), "--out", "/dev/null"])
    assert rc == 0
    doc = json.loads(sched.read_text())
    assert doc["network"] == "tiny"
    assert [e["layer"] for e in doc["layers"]] == ["up1", "up2"]
    assert doc["layers"][0]["schedule"]["tile_count"] >= 1


def test_sparsity_builtin(capsys):
    assert cli.main(["sparsity", "--network", "dcgan"]) == 0
    lines = capsys.readouterr().out.strip().split("\n")
    assert lines[0] == "layer,sparsity"
    assert len(lines) == 5
    for ln in lines[1:]:
        assert 0.0 < float(ln.split(",")[1]) < 1.0


def test_sparsity_zero_for_unit_stride(tmp_path, capsys):
    p = tmp_path / "flat.json"
    p.write_text(json.dumps(FLAT_NET))
    assert cli.main(["sparsity", "--network", str(p)]) == 0
    lines = capsys.readouterr().out.strip().split("\n")
    assert lines[1] == "1,0.000000"


def test_sweep_requires_values(tiny_net_path, capsys):
    rc = cli.main(["sweep", "--network", tiny_net_path,
                   "--param", "bandwidth", "--values", ","])
    assert rc == 2
    capsys.readouterr()


def test_sweep_bandwidth_improves_utilization(tmp_path):
    out = tmp_path / "sweep.csv"
    rc = cli.main(["sweep", "--network", "dcgan", "--param", "bandwidth",
                   "--values", "6.4,12.8,25.6", "--format", "csv",
                   "--out", str(out)])
    assert rc == 0
    utils = {}
    for line in out.read_text().strip().split("\n")[1:]:
        row = line.split(",")
        if row[1] != "TOTAL":
            continue
        value = float(row[0].split("bandwidth=")[1].rstrip("]"))
        utils[value] = float(row[12])
    assert sorted(utils) == [6.4, 12.8, 25.6]
    ordered = [utils[v] for v in sorted(utils)]
    assert ordered == sorted(ordered)
    assert ordered[0] < ordered[-1]


def test_sweep_single_value_matches_simulate(tiny_net_path, tmp_path):
    sim = tmp_path / "sim.json"
    swp = tmp_path / "swp.json"
    assert cli.main(["simulate", "--network", tiny_net_path,
                     "--out", str(sim)]) == 0
    assert cli.main(["sweep", "--network", tiny_net_path, "--param",
                     "bandwidth", "--values", "25.6", "--out", str(swp)]) == 0
    assert sim.read_bytes() == swp.read_bytes()


def test_sweep_thread_cap_does_not_change_bytes(tiny_net_path, tmp_path,
                                                monkeypatch):
    outs = []
    for threads in ("1", "4"):
        monkeypatch.setenv("DECONVSIM_THREADS", threads)
        path = tmp_path / f"sweep{threads}.json"
        rc = cli.main(["sweep", "--network", tiny_net_path, "--param",
                       "bandwidth", "--values", "6.4,12.8,25.6",
                       "--out", str(path)])
        assert rc == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]


def test_sweep_invalid_point_rejected(tiny_net_path, capsys):
    rc = cli.main(["sweep", "--network", tiny_net_path, "--param", "t_n",
                   "--values", "48"])
    assert rc == 2
    assert "power of two" in capsys.readouterr().err


def test_bandwidth_override_changes_stalls(tiny_net_path, tmp_path):
    slow = tmp_path / "slow.json"
    fast = tmp_path / "fast.json"
    assert cli.main(["simulate", "--network", "dcgan",
                     "--bandwidth-gbps", "3.2", "--out", str(slow)]) == 0
    assert cli.main(["simulate", "--network", "dcgan",
                     "--out", str(fast)]) == 0
    s = json.loads(slow.read_text())["networks"][0]["summary"]
    f = json.loads(fast.read_text())["networks"][0]["summary"]
    assert s["cycles_stall"] > f["cycles_stall"]
    assert json.loads(slow.read_text())["networks"][0][
        "assumptions"]["ddr_bandwidth_gbps"] == 3.2
