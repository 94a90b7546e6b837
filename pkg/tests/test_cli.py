import csv
import io
import json
import subprocess
import sys

import pytest

from crcconv.cli import EXIT_CONFIG, EXIT_INCONCLUSIVE, EXIT_OK, main

CODE = ["--gens", "13,17"]


def read_csv(path):
    lines = path.read_text().splitlines()
    header = [l for l in lines if l.startswith("#")]
    body = [l for l in lines if not l.startswith("#")]
    config = json.loads(header[0].split(":", 1)[1])
    return config, list(csv.DictReader(io.StringIO("\n".join(body))))


def test_crc_search_rows_and_audit(tmp_path):
    out = tmp_path / "search.csv"
    rc = main(["crc-search", *CODE, "--k", "64", "--mode", "TB", "--m", "3", "--out", str(out),
               "--audit-dir", str(tmp_path / "audit"), "--cache", str(tmp_path / "cache.json")])
    assert rc == EXIT_OK
    config, rows = read_csv(out)
    assert config["code"]["mode"] == "TB" and config["seed"] == 0
    assert rows[0]["hex"] == "0xF" and rows[0]["d_min"] == "8" and rows[0]["wstar2"] == "12"
    audit = json.loads((tmp_path / "audit" / "audit_TB_m3.json").read_text())
    assert audit["crc_hex"] == "0xF" and audit["audit"][0]["survivors"] == 4
    assert json.loads((tmp_path / "cache.json").read_text())["searches"]


def test_crc_search_inconclusive_exit(tmp_path):
    with pytest.warns(RuntimeWarning, match="tie"):
        rc = main(["crc-search", *CODE, "--k", "20", "--m", "3", "--d-tilde", "4",
                   "--out", str(tmp_path / "x.csv")])
    assert rc == EXIT_INCONCLUSIVE


def test_spectrum_from_config_file(tmp_path):
    cfg = tmp_path / "code.json"
    cfg.write_text(json.dumps({"k": 10, "nu": 3, "omega": 2, "gens_octal": ["13", "17"],
                               "crc_hex": "0x2D", "mode": "ZT", "m": 5}))
    out = tmp_path / "s.json"
    assert main(["spectrum", "--config", str(cfg), "--d-tilde", "14", "--out", str(out)]) == EXIT_OK
    data = json.loads(out.read_text())
    assert data["d_min"] == 12 and data["multiplicity"] == 76
    assert data["config"]["code"]["crc_hex"] == "0x2D"


def test_spectrum_direct_bit_order(tmp_path):
    out = tmp_path / "s.json"
    main(["spectrum", *CODE, "--k", "10", "--crc", "0x37", "--bit-order", "direct",
          "--d-tilde", "14", "--out", str(out)])
    data = json.loads(out.read_text())
    assert (data["d_min"], data["multiplicity"]) == (11, 17)


def test_complexity_table(tmp_path):
    out = tmp_path / "c.csv"
    rc = main(["complexity", *CODE, "--k", "64", "--crc", "0x401", "--nu", "8", "--mode", "TB",
               "--gens", "515,677", "--el", "44.41", "--wava-nu", "11,14", "--out", str(out)])
    assert rc == EXIT_OK
    _, rows = read_csv(out)
    slvd = rows[0]
    assert slvd["m"] == "10"
    assert slvd["decoder"] == "slvd" and 1.60e5 <= float(slvd["c_total"]) <= 1.70e5
    assert [float(r["c_total"]) for r in rows[1:]] == [983040.0, 7864320.0]


def test_bounds_columns(tmp_path):
    out = tmp_path / "b.csv"
    rc = main(["bounds", *CODE, "--k", "64", "--crc", "0x43", "--snr", "1:3:1", "--d-tilde", "24",
               "--out", str(out)])
    assert rc == EXIT_OK
    config, rows = read_csv(out)
    assert list(rows[0]) == ["snr_db", "union", "tub", "nn_pe1", "nack1", "rcu", "mc"]
    assert [float(r["snr_db"]) for r in rows] == [1.0, 2.0, 3.0]
    for r in rows:
        assert float(r["tub"]) <= float(r["union"])
        assert float(r["mc"]) <= float(r["rcu"])
    assert config["d_tilde"] == 24


def test_listrank_columns(tmp_path):
    out = tmp_path / "l.csv"
    rc = main(["listrank", *CODE, "--k", "16", "--crc", "0x9", "--eta", "3,6", "--mu", "1,2",
               "--trials", "200", "--l-bar", "7.5", "--out", str(out)])
    assert rc == EXIT_OK
    config, rows = read_csv(out)
    assert list(rows[0]) == ["eta", "simulated_rank", "parametric", "onion_mu1", "onion_mu2"]
    assert config["l_bar"] == 7.5


def test_simulate_is_byte_reproducible(tmp_path):
    args = ["simulate", *CODE, "--k", "16", "--crc", "0x9", "--snr", "0,2", "--max-trials", "1000",
            "--seed", "77"]
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(args + ["--out", str(a)]) == EXIT_OK
    assert main(args + ["--out", str(b)]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()
    data = json.loads(a.read_text())
    assert data["config"]["seed"] == 77 and len(data["points"]) == 2


@pytest.mark.parametrize("argv", [
    ["spectrum", "--k", "10"],
    ["spectrum", "--gens", "19,17", "--k", "10"],
    ["bounds", "--gens", "13,17", "--k", "10"],
    ["spectrum", "--config", "/nonexistent.json"],
    ["simulate", "--gens", "13,17", "--k", "8", "--crc", "0x9", "--psi", "0"],
    ["listrank", "--gens", "13,17", "--k", "8", "--crc", "0x9", "--eta", "-1"],
    ["complexity", "--gens", "13,17", "--k", "8", "--el", "0.5"],
    ["nonsense"],
    ["spectrum", "--gens", "13,17", "--k", "8", "--seed", "-3"],
])
def test_config_errors_exit_2(argv, capsys):
    assert main(argv) == EXIT_CONFIG


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "crcconv", "complexity", "--gens", "13,17", "--k", "64",
                          "--el", "1", "--wava-nu", "11"], capture_output=True, text=True)
    assert res.returncode == 0
    assert "983040.0" in res.stdout
