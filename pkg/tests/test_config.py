"""Configuration loading: section merging, override precedence, validation,
and hash stability."""

import pytest

from randcurv.config import (
    SEED_ENV,
    ExperimentConfig,
    canonical_text,
    config_hash,
    load_config,
    parse_grid,
)


def write(tmp_path, text):
    p = tmp_path / "exp.ini"
    p.write_text(text)
    return str(p)


class TestLoading:
    def test_defaults_without_file(self):
        cfg = load_config("bounds", None)
        assert cfg.command == "bounds"
        assert cfg.geometry == "sphere"
        assert cfg.n_dim == 4

    def test_missing_file_raises(self, tmp_path):
        with pytest.raises(ValueError, match="not found"):
            load_config("bounds", str(tmp_path / "nope.ini"))

    def test_command_section_overrides_common(self, tmp_path):
        path = write(
            tmp_path,
            "[common]\nseed = 3\nn_samples = 10\n"
            "[p2]\nn_samples = 20\namplitudes = 0.4\ngrid = fibonacci:32\n",
        )
        cfg = load_config("p2", path)
        assert cfg.seed == 3
        assert cfg.n_samples == 20
        assert cfg.amplitudes == (0.4,)

    def test_flag_overrides_file(self, tmp_path):
        path = write(tmp_path, "[common]\nseed = 3\nworkers = 2\n")
        cfg = load_config("bounds", path, seed=9, workers=4, out="elsewhere")
        assert cfg.seed == 9
        assert cfg.workers == 4
        assert cfg.out == "elsewhere"

    def test_env_seed_beats_flag(self, tmp_path, monkeypatch):
        monkeypatch.setenv(SEED_ENV, "42")
        path = write(tmp_path, "[common]\nseed = 3\n")
        cfg = load_config("bounds", path, seed=9)
        assert cfg.seed == 42

    def test_unknown_key_rejected(self, tmp_path):
        path = write(tmp_path, "[common]\nwibble = 1\n")
        with pytest.raises(ValueError, match="unknown configuration key"):
            load_config("bounds", path)

    def test_inline_comments_stripped(self, tmp_path):
        path = write(tmp_path, "[common]\nseed = 5 ; the run seed\n")
        assert load_config("bounds", path).seed == 5

    def test_bad_value_reports_key(self, tmp_path):
        path = write(tmp_path, "[common]\nrefine = maybe\n")
        with pytest.raises(ValueError, match="refine"):
            load_config("bounds", path)


class TestValidation:
    def test_p2_needs_amplitudes(self):
        with pytest.raises(ValueError, match="amplitudes"):
            load_config("p2", None)

    def test_p2_needs_nonzero_reference(self, tmp_path):
        path = write(
            tmp_path, "[p2]\namplitudes = 0.1\nreference = 0.0\n"
        )
        with pytest.raises(ValueError, match="reference"):
            load_config("p2", path)

    def test_linf_needs_matched_lists(self, tmp_path):
        path = write(
            tmp_path, "[linf]\namplitudes = 0.1, 0.2\nthresholds = 0.5\n"
        )
        with pytest.raises(ValueError, match="equal"):
            load_config("linf", path)

    def test_euler_needs_thresholds(self):
        with pytest.raises(ValueError, match="thresholds"):
            load_config("euler", None)

    def test_bounds_needs_high_dimension(self, tmp_path):
        path = write(tmp_path, "[bounds]\nn_dim = 2\n")
        with pytest.raises(ValueError, match="n > 2"):
            load_config("bounds", path)

    def test_sample_file_count_capped(self, tmp_path):
        path = write(tmp_path, "[sample]\nn_samples = 500\n")
        with pytest.raises(ValueError, match="256"):
            load_config("sample", path)

    def test_normalized_scheme_is_sphere_only(self, tmp_path):
        path = write(
            tmp_path,
            "[qsign]\ngeometry = s4\nscheme = normalized\namplitudes = 0.1\n",
        )
        with pytest.raises(ValueError, match="sphere"):
            load_config("qsign", path)

    def test_explicit_scheme_needs_values(self, tmp_path):
        path = write(tmp_path, "[common]\nscheme = explicit\n")
        with pytest.raises(ValueError, match="values"):
            load_config("bounds", path)

    def test_bad_geometry_and_command(self, tmp_path):
        path = write(tmp_path, "[common]\ngeometry = klein\n")
        with pytest.raises(ValueError, match="geometry"):
            load_config("bounds", path)
        with pytest.raises(ValueError, match="unknown command"):
            load_config("frobnicate", None)


class TestGrid:
    def test_parse_forms(self):
        assert parse_grid("fibonacci:1024") == ("fibonacci", 1024)
        assert parse_grid("icosphere:5") == ("icosphere", 5)
        assert parse_grid(" torus:16") == ("torus", 16)

    def test_rejects_malformed(self):
        for text in ("fibonacci", "cube:8", "torus:0", "icosphere:x"):
            with pytest.raises(ValueError):
                parse_grid(text)


class TestHash:
    def test_formatting_does_not_change_hash(self, tmp_path):
        a = load_config(
            "p2", write(tmp_path, "[p2]\namplitudes = 0.4,0.25\nseed = 7\n")
        )
        b = load_config(
            "p2",
            write(tmp_path, "[common]\nseed = 7\n[p2]\namplitudes = 0.40 , 0.250\n"),
        )
        assert config_hash(a) == config_hash(b)

    def test_workers_and_out_excluded(self):
        a = load_config("bounds", None)
        b = load_config("bounds", None, workers=8, out="elsewhere")
        assert config_hash(a) == config_hash(b)
        assert "workers" not in canonical_text(a)

    def test_seed_and_command_distinguish(self, tmp_path):
        a = load_config("bounds", None)
        b = load_config("bounds", None, seed=1)
        assert config_hash(a) != config_hash(b)
        c = load_config("heat", None)
        assert config_hash(a) != config_hash(c)

    def test_canonical_text_is_sorted_key_value(self):
        text = canonical_text(load_config("bounds", None))
        keys = [line.split("=", 1)[0] for line in text.splitlines()]
        assert keys == sorted(keys)
        assert "command=bounds" in text

    def test_hash_is_stable_hex(self):
        h = config_hash(ExperimentConfig(command="bounds"))
        assert len(h) == 16
        assert h == config_hash(ExperimentConfig(command="bounds"))
