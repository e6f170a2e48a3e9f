"""Python bindings for the boxtrack benchmark toolkit."""

import json

from . import _core
from ._core import BoxtrackError, ConfigError, PreconditionViolation, TransportError, wilson_interval

__version__ = _core.__version__

__all__ = [
    "BoxtrackError",
    "ConfigError",
    "PreconditionViolation",
    "TransportError",
    "build_prompt",
    "generate",
    "render",
    "replay",
    "run_pipeline",
    "score_completion",
    "validate",
    "wilson_interval",
]


def _text(record):
    return record if isinstance(record, str) else json.dumps(record)


def generate(count, seed=20230105, nouns="bnc"):
    """Sample `count` scenarios; returns a list of scenario dicts."""
    return [json.loads(s) for s in _core.generate(count, seed, nouns)]


def replay(scenario, nouns="bnc"):
    """Every prefix state (t = 0..NumOps) of a scenario as lists of box contents."""
    return _core.replay(_text(scenario), nouns)


def render(scenario, lexicon="base", max_t=None):
    """Cloze examples for one scenario, t-major."""
    return [json.loads(s) for s in _core.render(_text(scenario), lexicon, max_t)]


def build_prompt(example, mode="all-boxes", demos="matched"):
    return _core.build_prompt(_text(example), mode, demos)


def score_completion(completion, gold, box, lexicon="base"):
    """True when the completion names exactly the gold objects for `box`."""
    return _core.score_completion(completion, list(gold), box, lexicon)


def run_pipeline(config_toml="", overrides=()):
    """Run the end-to-end pipeline and return its manifest."""
    return json.loads(_core.run_pipeline(config_toml, list(overrides)))


def validate(artifact_dir, nouns="bnc"):
    return json.loads(_core.validate(str(artifact_dir), nouns))
