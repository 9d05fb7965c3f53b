"""
dgiga - Domain Loader v1.0
JSON multipatch configuration files: schema, study settings and the
construction of a verified MultiPatchDomain.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .assembly import DGConfig, Scheme
from .config import SolverConfig
from .errors import ConfigError
from .geometry import (
    FaceSelector,
    GeometryPatch,
    InterfaceFace,
    MultiPatchDomain,
    box_patch,
    check_domain,
)
from .splines import KnotVector, TensorSplineSpace

logger = logging.getLogger(__name__)

CONFIG_DIR = Path(__file__).parent / "configs"


class StudyConfig(BaseModel):
    """Settings of one refinement study."""

    model_config = ConfigDict(extra="forbid")

    problem: str = "smooth"
    degree: int = Field(default=2, ge=1)
    levels: int = Field(default=4, ge=2)
    scheme: Scheme = Scheme.SIP
    mu: Optional[float] = Field(default=None, gt=0.0)
    quadrature_order: Optional[int] = Field(default=None, ge=1, le=SolverConfig.MAX_GAUSS_POINTS - 1)
    output: Optional[str] = None
    format: Literal["csv", "json"] = "csv"
    problem_params: Dict[str, Union[int, float]] = Field(default_factory=dict)
    tol: float = Field(default_factory=lambda: SolverConfig.SOLVER_TOL, gt=0.0)
    workers: int = Field(default_factory=lambda: SolverConfig.WORKERS, ge=1)
    config_path: Optional[str] = None

    def dg_config(self) -> DGConfig:
        return DGConfig(scheme=self.scheme, mu=self.mu, quadrature_order=self.quadrature_order,
                        workers=self.workers)


# ─────────────────────────────────────────────────────────────
# File schema
# ─────────────────────────────────────────────────────────────

class FaceModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    patch: int = Field(ge=0)
    axis: int = Field(ge=0, le=2)
    side: Literal[0, 1]


class InterfaceModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    left: FaceModel
    right: FaceModel
    permutation: Optional[List[int]] = None
    flips: Optional[List[bool]] = None


class BoxModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    lower: List[float]
    upper: List[float]


class PatchModel(BaseModel):
    """Either an axis-aligned ``box`` or an explicit spline control net."""
    model_config = ConfigDict(extra="forbid")

    id: int = Field(ge=0)
    box: Optional[BoxModel] = None
    degree: Optional[int] = Field(default=None, ge=1)
    knots: Optional[List[List[float]]] = None
    control_points: Optional[List[List[float]]] = None
    elements: Union[int, List[int]] = SolverConfig.BASE_ELEMENTS

    @model_validator(mode="after")
    def _one_geometry(self):
        explicit = self.degree is not None and self.knots is not None and self.control_points is not None
        if (self.box is None) == (not explicit):
            raise ValueError(f"patch {self.id}: give either 'box' or all of 'degree', 'knots', 'control_points'")
        return self


class DomainFile(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str = ""
    problem: Optional[str] = None
    problem_params: Dict[str, Union[int, float]] = Field(default_factory=dict)
    degree: Optional[int] = None
    levels: Optional[int] = None
    scheme: Optional[Scheme] = None
    mu: Optional[float] = None
    alpha: Optional[List[float]] = None
    patches: List[PatchModel]
    interfaces: List[InterfaceModel] = Field(default_factory=list)


def _build_patch(model: PatchModel) -> GeometryPatch:
    if model.box is not None:
        if len(model.box.lower) != len(model.box.upper):
            raise ConfigError(f"patch {model.id}: box corners differ in dimension")
        return box_patch(model.box.lower, model.box.upper, model.id)
    axes = tuple(KnotVector(model.degree, np.asarray(k, dtype=float)) for k in model.knots)
    return GeometryPatch(TensorSplineSpace(axes), np.asarray(model.control_points, dtype=float), model.id)


def _build_interface(model: InterfaceModel, dim: int) -> InterfaceFace:
    permutation = tuple(model.permutation) if model.permutation is not None else tuple(range(dim - 1))
    flips = tuple(model.flips) if model.flips is not None else (False,) * (dim - 1)
    return InterfaceFace(
        model.left.patch, FaceSelector(model.left.axis, model.left.side),
        model.right.patch, FaceSelector(model.right.axis, model.right.side),
        permutation, flips,
    )


def build_domain(data: DomainFile, degree: int) -> MultiPatchDomain:
    """Domain with base solution meshes of the given degree (no geometric checks)."""
    patches = sorted((_build_patch(p) for p in data.patches), key=lambda p: p.patch_id)
    dim = patches[0].dim
    spaces = []
    for model in sorted(data.patches, key=lambda p: p.id):
        spaces.append(TensorSplineSpace.uniform(degree, model.elements, dim))
    interfaces = [_build_interface(f, dim) for f in data.interfaces]
    return MultiPatchDomain.create(patches, interfaces, alpha=data.alpha, solution_spaces=spaces)


def resolve_config_path(path: Union[str, Path]) -> Path:
    """Accept a file path or the name of a bundled config."""
    candidate = Path(path)
    if candidate.exists():
        return candidate
    bundled = CONFIG_DIR / candidate.name
    if bundled.exists():
        return bundled
    raise ConfigError(f"configuration file not found: {path}")


def read_domain_file(path: Union[str, Path]) -> DomainFile:
    path = resolve_config_path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: parse error at line {exc.lineno}: {exc.msg}") from exc
    try:
        return DomainFile.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(f"{path}: invalid configuration:\n{exc}") from exc


def load_config(path: Union[str, Path], overrides: Optional[Dict[str, Any]] = None,
                verify: bool = True) -> Tuple[StudyConfig, MultiPatchDomain]:
    """Parse a multipatch config, apply CLI overrides and verify the domain.

    Raises ConfigError, AlphaError, InterfaceMismatchError, OverlapError or
    DegenerateGeometryError, each with its own diagnostic.
    """
    resolved = resolve_config_path(path)
    data = read_domain_file(resolved)

    settings: Dict[str, Any] = {"config_path": str(resolved), "problem_params": dict(data.problem_params)}
    for key in ("problem", "degree", "levels", "scheme", "mu"):
        value = getattr(data, key)
        if value is not None:
            settings[key] = value
    for key, value in (overrides or {}).items():
        if value is not None:
            settings[key] = value
    try:
        study = StudyConfig(**settings)
    except ValidationError as exc:
        raise ConfigError(f"{resolved}: invalid study settings:\n{exc}") from exc

    domain = build_domain(data, study.degree)
    if verify:
        check_domain(domain, strict=True)
    logger.info("loaded %s: %d patches, %d interfaces, %d dofs",
                resolved.name, domain.num_patches, len(domain.interfaces), domain.num_dofs)
    return study, domain


def bundled_configs() -> List[str]:
    return sorted(p.name for p in CONFIG_DIR.glob("*.json"))
