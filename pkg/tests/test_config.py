import pytest

from qsdsim.config import (DEFAULTS, ExperimentConfig, parse_config_text,
                           resolve_config)
from qsdsim.configuration import Configuration
from qsdsim.errors import ConfigError
from qsdsim.rates import LogisticModel, UniformModel
from qsdsim.trait_space import TruncatedGaussianKernel, UniformKernel

UNIFORM_LINES = {
    "model.kind": "uniform",
    "model.lambda": "2.0",
    "model.b": "1.0",
    "model.rho": "0.3",
}

LOGISTIC_LINES = {
    "model.kind": "logistic",
    "model.b": "1.0",
    "model.rho": "0.3",
    "model.d": "2.0",
    "model.c": "0.5",
}


def test_parse_lines_comments_and_spacing():
    text = """
    # experiment
    model.kind = uniform   # inline comment
    model.lambda=2.0

    model.b =  1.0
    """
    assert parse_config_text(text) == {
        "model.kind": "uniform", "model.lambda": "2.0", "model.b": "1.0"}


def test_parse_rejects_malformed_lines():
    with pytest.raises(ConfigError, match="line 1"):
        parse_config_text("model.kind uniform")
    with pytest.raises(ConfigError, match="empty key or value"):
        parse_config_text("model.kind =")
    with pytest.raises(ConfigError, match="empty key or value"):
        parse_config_text("= uniform")
    with pytest.raises(ConfigError, match="duplicate key model.b"):
        parse_config_text("model.b = 1\nmodel.b = 2")


def test_unknown_key_is_named():
    with pytest.raises(ConfigError, match="unknown config key model.mu"):
        resolve_config({**UNIFORM_LINES, "model.mu": "1"})


def test_missing_model_parameters_are_named():
    missing = dict(UNIFORM_LINES)
    del missing["model.lambda"]
    with pytest.raises(ConfigError, match="model.lambda"):
        resolve_config(missing)
    with pytest.raises(ConfigError, match="expected uniform or logistic"):
        resolve_config({"model.kind": "exotic"})
    with pytest.raises(ConfigError, match="model.b given without model.kind"):
        resolve_config({"model.b": "1.0"})


def test_model_block_is_optional_until_built():
    # comparing artifacts needs no model; building one does
    cfg = resolve_config({})
    assert cfg.kind is None
    with pytest.raises(ConfigError, match="model.kind"):
        cfg.build_model()


def test_cross_kind_keys_are_rejected():
    with pytest.raises(ConfigError, match="model.d does not apply"):
        resolve_config({**UNIFORM_LINES, "model.d": "2.0"})
    with pytest.raises(ConfigError, match="model.lambda does not apply"):
        resolve_config({**LOGISTIC_LINES, "model.lambda": "2.0"})


def test_kernel_scale_rules():
    with pytest.raises(ConfigError, match="kernel.scale does not apply"):
        resolve_config({**UNIFORM_LINES, "kernel.scale": "0.1"})
    with pytest.raises(ConfigError,
                       match="kernel.scale for kernel.family = truncated_gaussian"):
        resolve_config({**UNIFORM_LINES, "kernel.family": "truncated_gaussian"})
    with pytest.raises(ConfigError, match="kernel.family"):
        resolve_config({**UNIFORM_LINES, "kernel.family": "cauchy"})
    cfg = resolve_config({**UNIFORM_LINES, "kernel.family": "truncated_gaussian",
                          "kernel.scale": "0.2"})
    assert isinstance(cfg.build_kernel(), TruncatedGaussianKernel)


def test_defaults_fill_unset_keys():
    cfg = resolve_config(UNIFORM_LINES)
    assert cfg.seed == 1
    assert cfg.replicas == 10_000
    assert cfg.horizon == 10.0
    assert cfg.particles == 2000
    assert cfg.burn_in == 20.0
    assert cfg.truncation == 60
    assert cfg.eigen_tol == 1e-10
    assert cfg.engine == "gillespie"
    assert cfg.threads == 1
    assert cfg.out_dir == "out"
    assert cfg.formats == ("csv", "json")
    assert isinstance(cfg.build_kernel(), UniformKernel)


def test_default_grid_spans_horizon():
    cfg = resolve_config({**UNIFORM_LINES, "run.horizon": "3.0"})
    assert cfg.grid == (0.5, 1.0, 1.5, 2.0, 2.5, 3.0)
    explicit = resolve_config({**UNIFORM_LINES, "run.grid": "0.5, 2.0, 7.5"})
    assert explicit.grid == (0.5, 2.0, 7.5)
    with pytest.raises(ConfigError, match="run.grid"):
        resolve_config({**UNIFORM_LINES, "run.grid": "2.0, 1.0"})
    with pytest.raises(ConfigError, match="run.grid"):
        resolve_config({**UNIFORM_LINES, "run.grid": "0.0, 1.0"})


def test_value_validation_messages():
    with pytest.raises(ConfigError, match="run.seed"):
        resolve_config({**UNIFORM_LINES, "run.seed": "-1"})
    with pytest.raises(ConfigError, match="run.seed"):
        resolve_config({**UNIFORM_LINES, "run.seed": str(2 ** 64)})
    with pytest.raises(ConfigError, match="run.replicas"):
        resolve_config({**UNIFORM_LINES, "run.replicas": "0"})
    with pytest.raises(ConfigError, match="run.horizon"):
        resolve_config({**UNIFORM_LINES, "run.horizon": "0"})
    with pytest.raises(ConfigError, match="run.particles"):
        resolve_config({**UNIFORM_LINES, "run.particles": "1"})
    with pytest.raises(ConfigError, match="run.engine"):
        resolve_config({**UNIFORM_LINES, "run.engine": "exact"})
    with pytest.raises(ConfigError, match="output.formats"):
        resolve_config({**UNIFORM_LINES, "output.formats": "csv,yaml"})
    with pytest.raises(ConfigError, match="model.b"):
        resolve_config({**UNIFORM_LINES, "model.b": "zero"})


def test_build_model_both_kinds():
    uniform = resolve_config(UNIFORM_LINES).build_model()
    assert isinstance(uniform, UniformModel)
    assert (uniform.lam, uniform.b, uniform.rho) == (2.0, 1.0, 0.3)
    logistic = resolve_config(LOGISTIC_LINES).build_model()
    assert isinstance(logistic, LogisticModel)
    assert (logistic.b, logistic.d, logistic.c) == (1.0, 2.0, 0.5)


def test_build_initial_default_and_explicit():
    cfg = resolve_config({**UNIFORM_LINES, "run.initial_mass": "4"})
    assert cfg.build_initial() == Configuration.from_pairs(((0.5, 4),))
    cfg = resolve_config({**UNIFORM_LINES, "run.initial": "2@0.25;1@0.75"})
    assert cfg.build_initial() == Configuration.from_pairs(((0.25, 2), (0.75, 1)))
    with pytest.raises(ConfigError, match="run.initial"):
        resolve_config({**UNIFORM_LINES, "run.initial": "not-a-configuration"})


def test_hash_ignores_output_plumbing():
    base = resolve_config(UNIFORM_LINES)
    moved = resolve_config({**UNIFORM_LINES, "output.directory": "elsewhere"})
    reformatted = resolve_config({**UNIFORM_LINES, "output.formats": "json"})
    assert base.config_hash() == moved.config_hash()
    assert base.config_hash() == reformatted.config_hash()


def test_hash_tracks_experiment_inputs():
    base = resolve_config(UNIFORM_LINES)
    reseeded = resolve_config({**UNIFORM_LINES, "run.seed": "2"})
    reparametrized = resolve_config({**UNIFORM_LINES, "model.rho": "0.4"})
    assert base.config_hash() != reseeded.config_hash()
    assert base.config_hash() != reparametrized.config_hash()
    assert base.config_hash() == resolve_config(dict(UNIFORM_LINES)).config_hash()
    assert len(base.config_hash()) == 64


def test_overrides_win_over_file_values():
    cfg = resolve_config({**UNIFORM_LINES, "run.seed": "5"},
                         overrides={"run.seed": "9"})
    assert cfg.seed == 9
    with pytest.raises(ConfigError, match="unknown config key"):
        resolve_config(UNIFORM_LINES, overrides={"run.bogus": "1"})


def test_defaults_are_complete_and_known():
    # every default must itself resolve cleanly
    cfg = resolve_config(LOGISTIC_LINES)
    for key in DEFAULTS:
        assert key in set(dict(cfg.canonical_items())) | {
            "output.directory", "output.formats"}
