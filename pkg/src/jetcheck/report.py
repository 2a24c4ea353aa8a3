"""Serializable analysis reports.

Reports are plain dataclasses mirrored one-to-one by JSON.  Non-finite floats
are written as the strings ``"inf"``, ``"-inf"`` and ``"nan"`` so that every
report survives a round trip unchanged.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from importlib import resources
from typing import Any

from . import __version__
from .lojas import ExponentEstimate, SamplerConfig, SphereMinimum
from .verdict import CrossValidation, JetProblem, SufficiencyVerdict

SCHEMA_VERSION = "jetcheck.report/1"


def encode_float(v: float) -> float | str:
    v = float(v)
    if math.isfinite(v):
        return v
    return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")


def decode_float(v) -> float:
    return float(v)


@dataclass(frozen=True)
class SampleRecord:
    radius: float
    min_value: float
    argmin_x: tuple[float, ...]
    argmin_y: tuple[float, ...] | None
    vanishing: bool
    refined: bool

    @classmethod
    def from_minimum(cls, s: SphereMinimum) -> "SampleRecord":
        return cls(float(s.radius), float(s.min_value), tuple(float(a) for a in s.argmin_x),
                   None if s.argmin_y is None else tuple(float(a) for a in s.argmin_y),
                   bool(s.vanishing), bool(s.refined))

    def to_dict(self) -> dict:
        return {
            "radius": encode_float(self.radius),
            "min_value": encode_float(self.min_value),
            "argmin_x": [encode_float(a) for a in self.argmin_x],
            "argmin_y": None if self.argmin_y is None else [encode_float(a) for a in self.argmin_y],
            "vanishing": self.vanishing,
            "refined": self.refined,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SampleRecord":
        y = d["argmin_y"]
        return cls(decode_float(d["radius"]), decode_float(d["min_value"]),
                   tuple(decode_float(a) for a in d["argmin_x"]),
                   None if y is None else tuple(decode_float(a) for a in y),
                   bool(d["vanishing"]), bool(d["refined"]))


@dataclass(frozen=True)
class EstimateRecord:
    kappa_hat: float
    intercept: float
    stderr: float
    residual_max: float
    degenerate: bool
    tail: int
    samples: tuple[SampleRecord, ...]

    @classmethod
    def from_estimate(cls, e: ExponentEstimate) -> "EstimateRecord":
        return cls(e.kappa_hat, e.intercept, e.stderr, e.residual_max, bool(e.degenerate),
                   int(e.tail), tuple(SampleRecord.from_minimum(s) for s in e.samples))

    def to_dict(self) -> dict:
        return {
            "kappa_hat": encode_float(self.kappa_hat),
            "intercept": encode_float(self.intercept),
            "stderr": encode_float(self.stderr),
            "residual_max": encode_float(self.residual_max),
            "degenerate": self.degenerate,
            "tail": self.tail,
            "samples": [s.to_dict() for s in self.samples],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EstimateRecord":
        return cls(decode_float(d["kappa_hat"]), decode_float(d["intercept"]),
                   decode_float(d["stderr"]), decode_float(d["residual_max"]),
                   bool(d["degenerate"]), int(d["tail"]),
                   tuple(SampleRecord.from_dict(s) for s in d["samples"]))


@dataclass(frozen=True)
class VerdictRecord:
    status: str
    criterion: str
    kappa_hat: float
    threshold: float
    margin: float
    tolerance: float
    witness: SampleRecord | None
    flags: tuple[str, ...]
    # only filled for cross-validation entries; the main estimate sits at report level
    estimate: EstimateRecord | None = None

    @classmethod
    def from_verdict(cls, v: SufficiencyVerdict, with_estimate: bool = False) -> "VerdictRecord":
        est = EstimateRecord.from_estimate(v.estimate) if with_estimate and v.estimate else None
        wit = SampleRecord.from_minimum(v.witness) if v.witness is not None else None
        return cls(v.status, v.criterion, v.kappa_hat, v.threshold, v.margin, v.tolerance,
                   wit, tuple(v.flags), est)

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "criterion": self.criterion,
            "kappa_hat": encode_float(self.kappa_hat),
            "threshold": encode_float(self.threshold),
            "margin": encode_float(self.margin),
            "tolerance": encode_float(self.tolerance),
            "witness": None if self.witness is None else self.witness.to_dict(),
            "flags": list(self.flags),
            "estimate": None if self.estimate is None else self.estimate.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "VerdictRecord":
        return cls(d["status"], d["criterion"], decode_float(d["kappa_hat"]),
                   decode_float(d["threshold"]), decode_float(d["margin"]),
                   decode_float(d["tolerance"]),
                   None if d["witness"] is None else SampleRecord.from_dict(d["witness"]),
                   tuple(d["flags"]),
                   None if d["estimate"] is None else EstimateRecord.from_dict(d["estimate"]))


@dataclass(frozen=True)
class ProblemRecord:
    n: int
    m: int
    r: int
    smoothness: str
    p: int
    kind: str
    input: tuple[str, ...]
    corpus: str | None = None

    @classmethod
    def from_problem(cls, pr: JetProblem, corpus: str | None = None) -> "ProblemRecord":
        return cls(pr.n, pr.m, pr.r, pr.smoothness, pr.p, pr.kind,
                   tuple(pr.f.to_strings()), corpus)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["input"] = list(self.input)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ProblemRecord":
        return cls(d["n"], d["m"], d["r"], d["smoothness"], d["p"], d["kind"],
                   tuple(d["input"]), d["corpus"])


@dataclass(frozen=True)
class CrossRecord:
    agree: bool
    verdicts: dict[str, VerdictRecord]

    @classmethod
    def from_cross(cls, cv: CrossValidation) -> "CrossRecord":
        return cls(bool(cv.agree),
                   {k: VerdictRecord.from_verdict(v, with_estimate=True) for k, v in cv.verdicts.items()})

    @property
    def statuses(self) -> dict[str, str]:
        return {k: v.status for k, v in self.verdicts.items()}

    def to_dict(self) -> dict:
        return {"agree": self.agree, "statuses": self.statuses,
                "verdicts": {k: v.to_dict() for k, v in self.verdicts.items()}}

    @classmethod
    def from_dict(cls, d: dict) -> "CrossRecord":
        return cls(bool(d["agree"]), {k: VerdictRecord.from_dict(v) for k, v in d["verdicts"].items()})


@dataclass(frozen=True)
class AnalysisReport:
    problem: ProblemRecord
    config: SamplerConfig
    estimate: EstimateRecord
    verdict: VerdictRecord
    cross_validation: CrossRecord | None = None
    timings: dict[str, float] | None = None
    tool_version: str = __version__
    schema: str = SCHEMA_VERSION

    def to_dict(self) -> dict[str, Any]:
        return {
            "schema": self.schema,
            "tool_version": self.tool_version,
            "problem": self.problem.to_dict(),
            "config": asdict(self.config),
            "estimate": self.estimate.to_dict(),
            "verdict": self.verdict.to_dict(),
            "cross_validation": None if self.cross_validation is None else self.cross_validation.to_dict(),
            "timings": None if self.timings is None else {k: encode_float(v) for k, v in self.timings.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AnalysisReport":
        cv = d.get("cross_validation")
        tm = d.get("timings")
        return cls(
            problem=ProblemRecord.from_dict(d["problem"]),
            config=SamplerConfig(**d["config"]),
            estimate=EstimateRecord.from_dict(d["estimate"]),
            verdict=VerdictRecord.from_dict(d["verdict"]),
            cross_validation=None if cv is None else CrossRecord.from_dict(cv),
            timings=None if tm is None else {k: decode_float(v) for k, v in tm.items()},
            tool_version=d["tool_version"],
            schema=d["schema"],
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, allow_nan=False) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "AnalysisReport":
        return cls.from_dict(json.loads(text))


def load_schema() -> dict:
    return json.loads(resources.files("jetcheck").joinpath("schema/report-v1.json").read_text())


def samples_csv(est: EstimateRecord) -> str:
    """Per-radius minima: ``radius,min_value`` then the argmin coordinates."""
    if not est.samples:
        return "radius,min_value\n"
    s0 = est.samples[0]
    cols = ["radius", "min_value"] + [f"x{i + 1}" for i in range(len(s0.argmin_x))]
    if s0.argmin_y is not None:
        cols += [f"y{j + 1}" for j in range(len(s0.argmin_y))]
    lines = [",".join(cols)]
    for s in est.samples:
        vals = [s.radius, s.min_value, *s.argmin_x, *(s.argmin_y or ())]
        lines.append(",".join(repr(float(v)) for v in vals))
    return "\n".join(lines) + "\n"
