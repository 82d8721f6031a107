"""Declarative pipeline configuration with auditable defaults.

The config is a nested JSON document; every stage validates its section
against the module preconditions before anything runs, and ``--print-config``
dumps the full default set so the reported constants stay auditable. All
randomness funnels through the explicit seeds here.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .clustering import DEFAULT_COLOR_GROUPS, DEFAULT_EPS_MM, DEFAULT_MIN_SAMPLES
from .coherence import (
    DEFAULT_ALPHA,
    DEFAULT_EPSILON,
    DEFAULT_ITERATIONS,
    DEFAULT_KAPPA,
    CoherenceParams,
)
from .graph import DEFAULT_GAMMA
from .metrics import DEFAULT_POISSON, DEFAULT_YOUNGS_MODULUS_MPA, MaterialParams
from .sequence import DEFAULT_MIN_OPACITY, DEFAULT_MIN_RADIUS_MM, DEFAULT_MIN_RGB_STD
from .validation import check_nonnegative, check_positive


class ConfigError(ValueError):
    """Raised for malformed or invalid configuration documents."""


@dataclass
class FilterSection:
    min_radius_mm: float = DEFAULT_MIN_RADIUS_MM
    min_opacity: float = DEFAULT_MIN_OPACITY
    min_rgb_std: float = DEFAULT_MIN_RGB_STD


@dataclass
class ClusterSection:
    color_groups: int = DEFAULT_COLOR_GROUPS
    eps_mm: float = DEFAULT_EPS_MM
    min_samples: int = DEFAULT_MIN_SAMPLES


@dataclass
class GraphSection:
    gamma: float = DEFAULT_GAMMA


@dataclass
class CoherenceSection:
    alpha: float = DEFAULT_ALPHA
    kappa: float = DEFAULT_KAPPA
    iterations: int = DEFAULT_ITERATIONS
    epsilon: float = DEFAULT_EPSILON
    enabled: bool = True

    def params(self) -> CoherenceParams:
        return CoherenceParams(
            alpha=self.alpha,
            kappa=self.kappa,
            iterations=self.iterations,
            epsilon=self.epsilon,
        )


@dataclass
class MaterialSection:
    youngs_modulus_mpa: float = DEFAULT_YOUNGS_MODULUS_MPA
    poisson: float = DEFAULT_POISSON

    def params(self) -> MaterialParams:
        return MaterialParams(
            youngs_modulus_mpa=self.youngs_modulus_mpa, poisson=self.poisson
        )


@dataclass
class EvalSection:
    tolerances_mm: list[float] = field(default_factory=lambda: [1.0, 2.0, 3.0])
    roi_aggregate: str = "mean"


@dataclass
class PipelineConfig:
    seed: int = 0
    roi_file: str | None = None
    filter: FilterSection = field(default_factory=FilterSection)
    cluster: ClusterSection = field(default_factory=ClusterSection)
    graph: GraphSection = field(default_factory=GraphSection)
    coherence: CoherenceSection = field(default_factory=CoherenceSection)
    material: MaterialSection = field(default_factory=MaterialSection)
    eval: EvalSection = field(default_factory=EvalSection)

    _SECTIONS = {
        "filter": FilterSection,
        "cluster": ClusterSection,
        "graph": GraphSection,
        "coherence": CoherenceSection,
        "material": MaterialSection,
        "eval": EvalSection,
    }

    def validate(self) -> "PipelineConfig":
        check_nonnegative(self.filter.min_radius_mm, "filter.min_radius_mm")
        check_nonnegative(self.filter.min_opacity, "filter.min_opacity")
        check_nonnegative(self.filter.min_rgb_std, "filter.min_rgb_std")
        if self.cluster.color_groups < 1:
            raise ConfigError("cluster.color_groups must be >= 1")
        check_positive(self.cluster.eps_mm, "cluster.eps_mm")
        if self.cluster.min_samples < 1:
            raise ConfigError("cluster.min_samples must be >= 1")
        check_nonnegative(self.graph.gamma, "graph.gamma")
        try:
            self.coherence.params().validate()
            self.material.params()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if not self.eval.tolerances_mm:
            raise ConfigError("eval.tolerances_mm must be non-empty")
        for tau in self.eval.tolerances_mm:
            check_positive(tau, "eval.tolerances_mm entry")
        if self.eval.roi_aggregate not in ("mean", "max"):
            raise ConfigError("eval.roi_aggregate must be 'mean' or 'max'")
        return self

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, payload: dict) -> "PipelineConfig":
        payload = dict(payload)
        kwargs = {}
        for key, section_cls in cls._SECTIONS.items():
            section_payload = payload.pop(key, {})
            if not isinstance(section_payload, dict):
                raise ConfigError(f"config section {key!r} must be an object")
            known = set(section_cls.__dataclass_fields__)
            unknown = set(section_payload) - known
            if unknown:
                raise ConfigError(f"unknown key(s) in {key!r}: {sorted(unknown)}")
            kwargs[key] = section_cls(**section_payload)
        for key in ("seed", "roi_file"):
            if key in payload:
                kwargs[key] = payload.pop(key)
        if payload:
            raise ConfigError(f"unknown top-level config key(s): {sorted(payload)}")
        return cls(**kwargs).validate()

    @classmethod
    def load(cls, path) -> "PipelineConfig":
        path = Path(path)
        try:
            payload = json.loads(path.read_text())
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
        return cls.from_dict(payload)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def save(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.dumps())
        return path
