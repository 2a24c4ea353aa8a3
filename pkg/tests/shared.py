"""Expensive analyses shared between test modules (computed once per session)."""

from functools import lru_cache

from jetcheck.corpus import CORPUS
from jetcheck.lojas import SamplerConfig
from jetcheck.verdict import cross_validate

CFG = SamplerConfig()


@lru_cache(maxsize=None)
def corpus_cross(name: str):
    e = CORPUS[name]
    return cross_validate(e.polymap(), e.r, CFG)
