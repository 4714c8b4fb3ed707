import json
import pathlib

import pytest

import skewstab

CONFIGS = pathlib.Path(__file__).resolve().parents[2] / "configs"


def test_subcommands():
    assert set(skewstab.subcommands()) == {"verify", "fixed-point", "spectral", "stability", "correlations", "clt"}


def test_wk_distance():
    assert skewstab.wk_distance([(0.0, 1.0)], [(0.25, 1.0)]) == pytest.approx(0.25)
    assert skewstab.wk_distance([(0.4, 2.0)], []) == pytest.approx(2.0)
    a = [(0.1, 0.5), (0.7, -1.2)]
    b = [(0.3, 1.0)]
    assert skewstab.wk_distance(a, b) == skewstab.wk_distance(b, a)


def test_fixed_point_norms():
    s = skewstab.fixed_point_summary(str(CONFIGS / "cantor-demo.json"))
    assert s["norm_inf"] == pytest.approx(1.0, abs=1e-6)
    assert s["norm_s_inf"] == pytest.approx(2.0, abs=1e-6)
    assert s["words"] == 64


def test_run_fixed_point(tmp_path):
    r = skewstab.run("fixed-point", str(CONFIGS / "cantor-demo.json"), out=str(tmp_path))
    assert r["pass"]
    assert r["digest"] == skewstab.config_digest(str(CONFIGS / "cantor-demo.json"))
    assert "fixed_point" in r["csv"]
    assert (tmp_path / "summary.json").exists()


def test_bad_config(tmp_path):
    p = tmp_path / "bad.json"
    doc = json.loads((CONFIGS / "cantor-demo.json").read_text())
    doc["system"]["alpha"] = 1
    p.write_text(json.dumps(doc))
    assert issubclass(skewstab.ConfigError, skewstab.SkewstabError)
    with pytest.raises(skewstab.ConfigError, match="unknown key"):
        skewstab.run("verify", str(p))
    p.write_text('{"system": {}}')
    with pytest.raises(skewstab.ConfigError, match="required key"):
        skewstab.run("verify", str(p))
    with pytest.raises(skewstab.SkewstabError):
        skewstab.run("bogus", str(CONFIGS / "cantor-demo.json"))
