from fractions import Fraction

import pytest

from ndmss.config import ConfigError, dump_config, parse_config_text

GOOD = """
[model]
n_sites = 4
V = 2.0
g = 0.5, 3.0   # sweep
boundary = open

[ansatz]
alpha = 1/2
beta = 2

[sampler]
n_chains = 20
seed = 99

[optimizer]
n_iterations = 10
sr_enabled = false

[run]
mode = sampled
"""


def test_parse_good():
    cfg = parse_config_text(GOOD)
    assert cfg.model.g == (0.5, 3.0) and cfg.model.boundary == "open"
    assert cfg.ansatz.alpha == Fraction(1, 2) and cfg.ansatz.beta == 2
    assert cfg.sampler.n_chains == 20 and cfg.sampler.seed == 99
    assert cfg.sampler.n_samples_per_chain == 20  # default kept
    assert cfg.optimizer.sr_enabled is False and cfg.optimizer.learning_rate == 0.005
    assert cfg.run.mode == "sampled"


def test_dump_roundtrip():
    cfg = parse_config_text(GOOD)
    assert parse_config_text(dump_config(cfg)) == cfg


@pytest.mark.parametrize(
    "text, needle",
    [
        ("[model]\nn_sites = 2\nV = abc\n", "x.ini:3: [model] V"),
        ("[model]\nn_sites = 2\ncolour = red\n", "[model] colour: unknown field"),
        ("[model]\nV = 1\n", "[model] n_sites"),
        ("[model]\nn_sites = 3\n[ansatz]\nalpha = 1/2\n", "[ansatz] alpha"),
        ("[model]\nn_sites = 2\n[run]\nmode = fast\n", "[run] mode"),
        ("[model]\nn_sites = 2\n[optimizer]\nlearning_rate = -1\n", "[optimizer] learning_rate"),
        ("[model]\nn_sites = 2\n[sampler]\nmax_flips_per_move = 3\n", "[sampler] max_flips_per_move"),
        ("[model]\nn_sites = 2\n[extras]\na = 1\n", "unknown section"),
        ("[model]\nn_sites = 2\n[optimizer]\nsr_enabled = maybe\n", "[optimizer] sr_enabled"),
        ("n_sites = 2\n", "x.ini"),
    ],
)
def test_errors_name_the_field(text, needle):
    with pytest.raises(ConfigError) as exc:
        parse_config_text(text, "x.ini")
    assert needle in str(exc.value)
