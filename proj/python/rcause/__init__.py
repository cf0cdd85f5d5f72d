"""Sheaf-based failure modeling and causal emergence analysis.

Thin wrapper over the compiled core: inputs may be dicts or JSON text,
results come back as dicts in the same envelope format the CLI writes.
"""

import json

from ._rcause import __version__  # noqa: F401
from ._rcause import ei as _ei
from ._rcause import emerge as _emerge
from ._rcause import generate as _generate
from ._rcause import pairwise as _pairwise
from ._rcause import sections as _sections
from ._rcause import simulate as _simulate
from ._rcause import validate as _validate

__all__ = [
    "validate",
    "sections",
    "simulate",
    "ei",
    "pairwise",
    "emerge",
    "generate",
]


def _text(doc):
    if doc is None or isinstance(doc, str):
        return doc
    return json.dumps(doc)


def validate(model):
    return json.loads(_validate(_text(model)))


def sections(model, limit=4096):
    return json.loads(_sections(_text(model), limit))


def simulate(model, scenario=None, seed=None):
    return json.loads(_simulate(_text(model), _text(scenario), seed))


def ei(model, spec, seed=None):
    return json.loads(_ei(_text(model), _text(spec), seed))


def pairwise(model, spec=None, seed=None, jobs=1):
    return json.loads(_pairwise(_text(model), _text(spec), seed, jobs))


def emerge(model, grouping=None, spec=None, search="exhaustive", seed=None, jobs=1):
    return json.loads(_emerge(_text(model), _text(grouping), _text(spec), search, seed, jobs))


def generate(template_name, size, seed=0):
    return json.loads(_generate(template_name, size, seed))
