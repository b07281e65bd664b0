# pylint: disable=redefined-outer-name

import logging
import multiprocessing
import os

import pytest

from ellbranch._config import Config, RunConfig
from ellbranch._exceptions import ConfigException


@pytest.fixture(autouse=True)
def isolate_env(monkeypatch):
    for key in os.environ:
        monkeypatch.delenv(key)


def _colors(flag=None):
    return Config(0, flag, 1, 0).colors


@pytest.mark.parametrize("flag", (True, False))
def test_color_flag_wins_over_the_environment(monkeypatch, flag):
    monkeypatch.setenv("PY_COLORS", "0" if flag else "1")
    assert _colors(flag) is flag


@pytest.mark.parametrize(
    ("env", "expected"),
    (
        ({"PY_COLORS": "1"}, True),
        ({"PY_COLORS": "0", "FORCE_COLOR": "1"}, False),
        ({"NO_COLOR": "1", "GITHUB_ACTION": "1"}, False),
        ({"FORCE_COLOR": ""}, True),
        ({"GITLAB_CI": "true"}, True),
        ({}, False),
    ),
    ids=("py-colors", "py-colors-first", "no-color", "force", "ci", "no-tty"),
)
def test_colors_from_the_environment(monkeypatch, env, expected):
    monkeypatch.setattr("sys.__stdout__.isatty", lambda: False)
    for key, value in env.items():
        monkeypatch.setenv(key, value)
    assert _colors() is expected


def test_colors_need_both_streams_on_a_tty(monkeypatch):
    monkeypatch.setattr("sys.__stdout__.isatty", lambda: True)
    monkeypatch.setattr("sys.__stderr__.isatty", lambda: False)
    assert not _colors()

    monkeypatch.setattr("sys.__stderr__.isatty", lambda: True)
    assert _colors()


def test_invalid_py_colors_is_a_config_error(monkeypatch):
    monkeypatch.setenv("PY_COLORS", "sometimes")
    with pytest.raises(ConfigException, match="PY_COLORS"):
        _colors()


def test_zero_threads_uses_every_cpu():
    conf = Config(0, False, 0, 0)
    assert conf.threads == multiprocessing.cpu_count()


def test_negative_threads_are_rejected():
    with pytest.raises(ConfigException, match="--threads"):
        Config(0, False, -1, 0)


@pytest.mark.parametrize(
    ("verbosity", "level"),
    ((0, logging.INFO), (1, logging.DEBUG), (-1, logging.WARNING)),
)
def test_log_level_follows_verbosity(verbosity, level):
    assert Config(verbosity, False, 1, 0).log_level == level


def test_sampler_carries_seed_and_threads():
    sampler = Config(0, False, 3, 42).sampler(count=10)
    assert (sampler.seed, sampler.threads, sampler.count) == (42, 3, 10)


def test_run_config_rejects_unknown_commands():
    with pytest.raises(ConfigException, match="unknown command 'explode'"):
        RunConfig("explode")


def test_run_config_drops_unset_overrides():
    run = RunConfig("solve", overrides={"h": None, "tol": 1e-6})
    assert run.overrides == {"tol": 1e-6}


def test_file_values_win_over_the_command_line(caplog):
    run = RunConfig("solve", overrides={"tol": 1e-6, "h": 0.1})

    assert run.resolve({"tol": 1e-8}, "tol", 1e-10) == 1e-8
    assert "overrides the command line value" in caplog.text
    assert run.resolve({}, "h", 0.5) == 0.1
    assert run.resolve(None, "cap", 1e3) == 1e3
