"""
Tests for environment-derived settings and the step table
"""

from config import RUNTIME, STEP_ORDER, _env_int, get_step_info, validate_config


def test_env_int_reads_value(monkeypatch):
    monkeypatch.setenv("VALFRAM_WORKERS", "8")
    assert _env_int("VALFRAM_WORKERS", 4) == 8


def test_env_int_falls_back_on_text(monkeypatch, capsys):
    monkeypatch.setenv("VALFRAM_WORKERS", "many")
    assert _env_int("VALFRAM_WORKERS", 4) == 4
    assert "VALFRAM_WORKERS='many'" in capsys.readouterr().err


def test_validate_config_flags_bad_workers(monkeypatch, capsys):
    monkeypatch.setitem(RUNTIME, "log_level", "INFO")
    assert validate_config()
    monkeypatch.setitem(RUNTIME, "workers", 0)
    assert not validate_config()
    assert "VALFRAM_WORKERS" in capsys.readouterr().err


def test_step_info():
    assert [get_step_info(step)["statistics"][0] for step in STEP_ORDER] == [
        "ks_duration", "ecdf_rmse", "chi2_count", "chi2_mode_hour", "d_od", "chi2_mode_target",
    ]
    assert get_step_info("C1") == {}
