"""Project configuration: one JSON file naming every input of a batch run.

Relative paths resolve against the config file's directory, so a project
folder can be copied or mounted anywhere. The variable registry maps
snake_case identifiers to series metadata (description, unit, level,
country scope) and to the CSV file carrying the observations.
"""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError, NonNumericValue, UnknownRegion
from .hierarchy import RegionHierarchy, SpatialLevel
from .imputation import GridSpec, ImputationConfig
from .series import (
    ALL_COUNTRIES,
    ConfidenceLevel,
    Observation,
    SeriesMeta,
    VariableSeries,
    VariableStore,
    ingest_series,
)


@dataclass(frozen=True)
class RegistryEntry:
    meta: SeriesMeta
    filename: str


@dataclass(frozen=True)
class ComparisonSpec:
    target_id: str
    reference: str
    level: SpatialLevel


@dataclass
class ProjectConfig:
    root: Path
    hierarchy_path: Path
    series_dir: Path
    registry_path: Path
    pipeline_path: Path
    output_dir: Path
    proxy_assignments_path: Path | None = None
    reference_dir: Path | None = None
    comparisons: list[ComparisonSpec] = field(default_factory=list)
    seed: int = 0
    weights_on_raw: bool = False
    normalize_scope: str = "country"
    imputation_overrides: dict = field(default_factory=dict)

    def imputation_config(self, seed: int | None = None) -> ImputationConfig:
        over = self.imputation_overrides
        grid = GridSpec(
            n_estimators=tuple(over.get("n_estimators", GridSpec.n_estimators)),
            learning_rates=tuple(over.get("learning_rates", GridSpec.learning_rates)),
            max_depths=tuple(over.get("max_depths", GridSpec.max_depths)),
        )
        return ImputationConfig(
            thresholds=tuple(over.get("thresholds", (0.1, 0.5))),
            grid=grid,
            seed=self.seed if seed is None else seed,
        )


def load_project_config(path: str | Path) -> ProjectConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        with path.open(encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    root = path.parent

    def resolve(key: str, required: bool = True) -> Path | None:
        value = doc.get(key)
        if value is None:
            if required:
                raise ConfigError(f"{path}: missing required key {key!r}")
            return None
        return (root / value).resolve() if not Path(value).is_absolute() else Path(value)

    comparisons = []
    for i, entry in enumerate(doc.get("comparisons", [])):
        try:
            comparisons.append(
                ComparisonSpec(
                    target_id=entry["target_id"],
                    reference=entry["reference"],
                    level=SpatialLevel.from_token(entry["level"]),
                )
            )
        except KeyError as exc:
            raise ConfigError(f"{path}: comparison #{i} missing {exc}") from None

    flags = doc.get("flags", {})
    normalize_scope = flags.get("normalize_scope", "country")
    if normalize_scope not in ("country", "parent"):
        raise ConfigError(f"{path}: normalize_scope must be 'country' or 'parent'")
    seed = doc.get("seed", 0)
    if not isinstance(seed, int):
        raise ConfigError(f"{path}: seed must be an integer")

    return ProjectConfig(
        root=root,
        hierarchy_path=resolve("hierarchy"),
        series_dir=resolve("series_dir"),
        registry_path=resolve("registry"),
        pipeline_path=resolve("pipeline"),
        output_dir=resolve("output_dir"),
        proxy_assignments_path=resolve("proxy_assignments", required=False),
        reference_dir=resolve("reference_dir", required=False),
        comparisons=comparisons,
        seed=seed,
        weights_on_raw=bool(flags.get("weights_on_raw", False)),
        normalize_scope=normalize_scope,
        imputation_overrides=doc.get("imputation", {}),
    )


def load_registry(path: str | Path) -> list[RegistryEntry]:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"variable registry not found: {path}")
    with path.open(encoding="utf-8") as fh:
        doc = json.load(fh)
    entries = doc.get("variables", doc) if isinstance(doc, dict) else doc
    if not isinstance(entries, list):
        raise ConfigError(f"{path}: expected a list of variable entries")
    out = []
    seen = set()
    for i, entry in enumerate(entries):
        try:
            vid = entry["id"]
            level = SpatialLevel.from_token(entry["level"])
        except KeyError as exc:
            raise ConfigError(f"{path}: variable #{i} missing {exc}") from None
        # formulas can only reference snake_case identifiers
        if not re.fullmatch(r"[a-z][a-z0-9_]*", vid):
            raise ConfigError(f"{path}: variable id {vid!r} is not snake_case")
        if vid in seen:
            raise ConfigError(f"{path}: duplicate variable id {vid!r}")
        seen.add(vid)
        meta = SeriesMeta(
            variable_id=vid,
            description=entry.get("description", ""),
            unit=entry.get("unit", ""),
            level=level,
            country_scope=entry.get("country_scope", ALL_COUNTRIES),
        )
        out.append(RegistryEntry(meta, entry.get("file", f"{vid}.csv")))
    return out


def build_store(
    config: ProjectConfig,
    hierarchy: RegionHierarchy,
    registry: list[RegistryEntry] | None = None,
) -> VariableStore:
    """Ingest every registry series from the series directory."""
    registry = registry if registry is not None else load_registry(config.registry_path)
    store = VariableStore()
    for entry in registry:
        series_path = config.series_dir / entry.filename
        if not series_path.is_file():
            raise ConfigError(f"series file not found: {series_path}")
        store.add(ingest_series(series_path, entry.meta, hierarchy))
    return store


def read_reference_csv(
    path: str | Path, hierarchy: RegionHierarchy, level: SpatialLevel
) -> tuple[VariableSeries, dict[str, str]]:
    """Reference inventory CSV: ``region,value`` plus an optional free-text
    ``label`` column; joining is by region code only, never by label."""
    path = Path(path)
    labels: dict[str, str] = {}
    observations: dict[str, Observation] = {}
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [c.strip() for c in header] not in (
            ["region", "value"],
            ["region", "value", "label"],
        ):
            raise NonNumericValue(
                f"{path}: bad header {header!r}; expected region,value[,label]"
            )
        has_label = len(header) == 3
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            region = row[0].strip()
            node = hierarchy.node(region) if region in hierarchy else None
            if node is None or node.level != level:
                raise UnknownRegion(
                    f"{path}:{lineno}: region {region!r} is not a {level.name} region"
                )
            try:
                value = float(row[1])
            except ValueError:
                raise NonNumericValue(f"{path}:{lineno}: bad value {row[1]!r}") from None
            observations[region] = Observation(region, value, ConfidenceLevel.VERY_HIGH)
            if has_label and len(row) > 2 and row[2].strip():
                labels[region] = row[2].strip()
    series = VariableSeries("reference", "", "", level, ALL_COUNTRIES, observations)
    return series, labels
