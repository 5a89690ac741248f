import json
import subprocess
import sys

import pytest

from sturmband.cli import RunConfig, main, read_config_file
from sturmband.errors import ConfigError


def run(args, tmp_path):
    out = tmp_path / "out.txt"
    code = main(args + ["-o", str(out)])
    return code, out.read_text() if out.exists() else ""


def test_bands_small(tmp_path):
    code, text = run(["bands", "--alpha", "per:1", "--V", "24", "--order", "2"], tmp_path)
    assert code == 0
    recs = [json.loads(line) for line in text.splitlines()]
    assert len(recs) == 8
    assert set(recs[0]) == {"order", "kind", "level", "power", "l", "path", "lo", "hi", "parent_path"}
    assert all(isinstance(r["lo"], str) for r in recs)


def test_coupling_too_small(capsys):
    assert main(["bands", "--V", "20"]) == 2
    assert "CouplingTooSmall" in capsys.readouterr().err


def test_bad_frequency(capsys):
    assert main(["bands", "--alpha", "[0;1,2"]) == 2


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\nalpha_spec = per:2\nV = 30\norder = 3\nseed = 4\n")
    assert read_config_file(str(cfg))["order"] == 3
    code, text = run(["bands", "--config", str(cfg), "--order", "1"], tmp_path)
    assert code == 0 and len(text.splitlines()) == 2 + 4
    cfg.write_text("colour = red\n")
    assert main(["bands", "--config", str(cfg)]) == 2


def test_runconfig_fields():
    assert [f for f in RunConfig.__dataclass_fields__] == [
        "alpha_spec", "V", "order", "precision_bits", "bisect_rel_tol", "threads", "cache_path", "seed"]
    with pytest.raises(ConfigError):
        RunConfig(order=-1).validate()
    with pytest.raises(ConfigError):
        RunConfig(bisect_rel_tol="2").validate()


def test_cache_resume_and_mismatch(tmp_path, caplog):
    cache = tmp_path / "tree.cache"
    a = tmp_path / "a"
    b = tmp_path / "b"
    assert main(["bands", "--order", "4", "--cache", str(cache), "-o", str(a)]) == 0
    assert main(["bands", "--order", "6", "--cache", str(cache), "-o", str(b)]) == 0
    fresh = tmp_path / "c"
    assert main(["bands", "--order", "6", "-o", str(fresh)]) == 0
    assert b.read_bytes() == fresh.read_bytes()
    assert cache.read_text().startswith("# sturmband-cache v1")
    with caplog.at_level("WARNING"):
        assert main(["bands", "--order", "6", "--V", "25", "--cache", str(cache), "-o", str(a)]) == 0
    assert "different config" in caplog.text


def test_dims(tmp_path):
    code, text = run(["dims", "--orders", "2..8"], tmp_path)
    assert code == 0
    assert "bounds_upper: 0.656289" in text
    rows = [line.split("\t") for line in text.splitlines() if line[:1].isdigit()]
    assert [int(r[0]) for r in rows] == list(range(2, 9))
    assert all(float(r[2]) <= 1e-12 for r in rows)


def test_dims_toy(tmp_path):
    code, text = run(["dims", "--toy", "3,1/9", "--order", "4"], tmp_path)
    assert code == 0
    for line in text.splitlines()[1:]:
        assert abs(float(line.split("\t")[1]) - 0.5) < 1e-12


def test_gibbs(tmp_path):
    code, text = run(["gibbs", "--beta", "0.5", "--order", "10"], tmp_path)
    assert code == 0
    weights = [line.split()[1] for line in text.splitlines() if not line.startswith("#")]
    assert len(weights) == 178
    from fractions import Fraction
    assert abs(sum(Fraction(w) for w in weights) - 1) <= Fraction(1, 10**12)
    assert main(["gibbs", "--beta", "1.5", "--order", "4"]) == 2


def test_asym(tmp_path):
    code, text = run(["asym", "--V-list", "100,1000", "--order", "5"], tmp_path)
    assert code == 0
    lines = text.splitlines()
    assert lines[1] == "V,order,s,s_lnV,target,gap"
    assert len(lines) == 4


def test_audit_exit_codes(tmp_path):
    code, text = run(["audit", "--suite", "hard", "--order", "6"], tmp_path)
    assert code == 0 and "hard failures: 0" in text
    assert main(["audit", "--checks", "bogus"]) == 2


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "sturmband", "bands", "--order", "1"],
                          capture_output=True, text=True, check=True)
    assert len(proc.stdout.splitlines()) == 4
