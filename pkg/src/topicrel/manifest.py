"""Run manifest loading and validation.

A manifest is a JSON file naming the source taxonomies, sampling counts,
split ratios, inference endpoint, strategy, and output directory. Split
ratios are exact rationals written as strings like "7/10" (or integers);
the seed is mandatory so every run is reproducible by construction.
Relative paths are resolved against the manifest's own directory.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .graph import DIALECTS
from .adjudication import QuorumPolicy
from .inference import DIALECT_MOCK, EndpointConfig, MockScript
from .prompts import (
    STRATEGY_COT_STAGE1,
    STRATEGY_COT_STAGE2,
    STRATEGY_STANDARD,
    TemplateSet,
    default_templates,
    load_template,
)
from .splits import SplitSpec
from .strategies import STRATEGIES

SAME_AS_ADJUDICATE = "adjudicate"
SAME_AS_AUTO_ACCEPT = "auto-accept"


class ManifestError(ValueError):
    pass


@dataclass(frozen=True)
class SourceSpec:
    name: str
    path: Path
    dialect: str


@dataclass(frozen=True)
class SameAsSpec:
    mode: str = SAME_AS_ADJUDICATE
    count: int | None = None  # auto-accept only; None keeps every candidate


@dataclass(frozen=True)
class SamplingSpec:
    hierarchical_per_label: int = 0
    other: int = 0
    same_as: SameAsSpec = SameAsSpec()


@dataclass(frozen=True)
class RunManifest:
    seed: int
    output_dir: Path
    sources: tuple[SourceSpec, ...]
    sampling: dict[str, SamplingSpec]
    split: SplitSpec
    strategy: str
    endpoint: EndpointConfig | None
    mock: MockScript | None
    templates: TemplateSet
    quorum: QuorumPolicy
    merged_name: str


def _require(data: dict, key: str, context: str):
    if key not in data:
        raise ManifestError(f"{context}: missing required key {key!r}")
    return data[key]


def _reject_unknown(data: dict, allowed: set[str], context: str) -> None:
    unknown = set(data) - allowed
    if unknown:
        raise ManifestError(f"{context}: unknown key(s) {sorted(unknown)}")


def _parse_ratio(value, context: str) -> Fraction:
    try:
        if isinstance(value, str):
            return Fraction(value)
        if isinstance(value, int):
            return Fraction(value)
        if isinstance(value, float):
            # Interpret the decimal literal, not the binary float.
            return Fraction(str(value))
    except (ValueError, ZeroDivisionError) as exc:
        raise ManifestError(f"{context}: bad ratio {value!r}: {exc}") from None
    raise ManifestError(f"{context}: bad ratio {value!r}")


def _parse_source(row: dict, base: Path, index: int) -> SourceSpec:
    context = f"sources[{index}]"
    if not isinstance(row, dict):
        raise ManifestError(f"{context}: expected an object")
    _reject_unknown(row, {"name", "path", "dialect"}, context)
    name = _require(row, "name", context)
    dialect = _require(row, "dialect", context)
    if dialect not in DIALECTS:
        raise ManifestError(f"{context}: unknown dialect {dialect!r}")
    path = (base / _require(row, "path", context)).resolve()
    if not path.is_file():
        raise ManifestError(f"{context}: source file not found: {path}")
    return SourceSpec(name=name, path=path, dialect=dialect)


def _parse_same_as(data: dict, context: str) -> SameAsSpec:
    _reject_unknown(data, {"mode", "count"}, context)
    mode = data.get("mode", SAME_AS_ADJUDICATE)
    if mode not in (SAME_AS_ADJUDICATE, SAME_AS_AUTO_ACCEPT):
        raise ManifestError(f"{context}: unknown same_as mode {mode!r}")
    count = data.get("count")
    if count is not None and (not isinstance(count, int) or count < 0):
        raise ManifestError(f"{context}: count must be a non-negative integer")
    if mode == SAME_AS_ADJUDICATE and count is not None:
        raise ManifestError(f"{context}: count only applies to auto-accept")
    return SameAsSpec(mode=mode, count=count)


def _parse_sampling(data: dict, names: list[str]) -> dict[str, SamplingSpec]:
    sampling: dict[str, SamplingSpec] = {}
    for name, row in data.items():
        context = f"sampling[{name!r}]"
        if name not in names:
            raise ManifestError(f"{context}: no source with that name")
        if not isinstance(row, dict):
            raise ManifestError(f"{context}: expected an object")
        _reject_unknown(row, {"hierarchical_per_label", "other", "same_as"}, context)
        for key in ("hierarchical_per_label", "other"):
            value = row.get(key, 0)
            if not isinstance(value, int) or value < 0:
                raise ManifestError(f"{context}: {key} must be a non-negative integer")
        sampling[name] = SamplingSpec(
            hierarchical_per_label=row.get("hierarchical_per_label", 0),
            other=row.get("other", 0),
            same_as=_parse_same_as(row.get("same_as", {}), f"{context}.same_as"),
        )
    for name in names:
        sampling.setdefault(name, SamplingSpec())
    return sampling


def _parse_endpoint(
    data: dict | None, context: str
) -> tuple[EndpointConfig | None, MockScript | None]:
    if data is None:
        return None, None
    if not isinstance(data, dict):
        raise ManifestError(f"{context}: expected an object")
    allowed = {
        "dialect",
        "base_url",
        "model_name",
        "auth_env_var",
        "temperature",
        "max_new_tokens",
        "stop_sequences",
        "timeout",
        "retries",
        "backoff_base",
        "max_in_flight",
        "mock",
    }
    _reject_unknown(data, allowed, context)
    mock_data = data.get("mock")
    kwargs = {k: v for k, v in data.items() if k != "mock"}
    if "stop_sequences" in kwargs:
        kwargs["stop_sequences"] = tuple(kwargs["stop_sequences"])
    try:
        config = EndpointConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ManifestError(f"{context}: {exc}") from None

    mock = None
    if config.dialect == DIALECT_MOCK:
        if not isinstance(mock_data, dict):
            raise ManifestError(f"{context}: mock dialect requires a mock object")
        _reject_unknown(mock_data, {"mode", "script", "response"}, f"{context}.mock")
        try:
            mock = MockScript(
                mode=_require(mock_data, "mode", f"{context}.mock"),
                script=mock_data.get("script", {}),
                fixed_response=mock_data.get("response", ""),
            )
        except ValueError as exc:
            raise ManifestError(f"{context}.mock: {exc}") from None
    elif mock_data is not None:
        raise ManifestError(f"{context}: mock only applies to the mock dialect")
    return config, mock


def _parse_templates(data: dict | None, base: Path) -> TemplateSet:
    defaults = default_templates()
    if data is None:
        return defaults
    _reject_unknown(data, {"standard", "cot_stage1", "cot_stage2"}, "templates")

    def pick(key: str, strategy: str, fallback):
        value = data.get(key)
        if value is None:
            return fallback
        path = (base / value).resolve()
        if not path.is_file():
            raise ManifestError(f"templates.{key}: file not found: {path}")
        try:
            return load_template(path, strategy)
        except ValueError as exc:
            raise ManifestError(f"templates.{key}: {exc}") from None

    return TemplateSet(
        standard=pick("standard", STRATEGY_STANDARD, defaults.standard),
        cot_stage1=pick("cot_stage1", STRATEGY_COT_STAGE1, defaults.cot_stage1),
        cot_stage2=pick("cot_stage2", STRATEGY_COT_STAGE2, defaults.cot_stage2),
    )


def load_manifest(
    path: Path | str,
    *,
    seed_override: int | None = None,
    out_override: Path | str | None = None,
) -> RunManifest:
    path = Path(path)
    if not path.is_file():
        raise ManifestError(f"manifest not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ManifestError(f"manifest is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ManifestError("manifest must be a JSON object")
    allowed = {
        "seed",
        "output_dir",
        "sources",
        "sampling",
        "split",
        "strategy",
        "endpoint",
        "templates",
        "quorum",
        "merged_name",
    }
    _reject_unknown(data, allowed, "manifest")
    base = path.parent

    seed = seed_override if seed_override is not None else data.get("seed")
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ManifestError("manifest: seed is required and must be an integer")

    sources_data = _require(data, "sources", "manifest")
    if not isinstance(sources_data, list) or not sources_data:
        raise ManifestError("manifest: sources must be a non-empty array")
    sources = tuple(
        _parse_source(row, base, i) for i, row in enumerate(sources_data)
    )
    names = [s.name for s in sources]
    if len(set(names)) != len(names):
        raise ManifestError("manifest: source names must be unique")

    sampling = _parse_sampling(data.get("sampling", {}), names)

    split_data = data.get("split", {})
    if not isinstance(split_data, dict):
        raise ManifestError("split: expected an object")
    _reject_unknown(split_data, {"ratios", "seed"}, "split")
    ratios_data = split_data.get("ratios", ["7/10", "1/10", "2/10"])
    if not isinstance(ratios_data, list) or len(ratios_data) != 3:
        raise ManifestError("split.ratios: expected an array of three ratios")
    ratios = tuple(
        _parse_ratio(value, f"split.ratios[{i}]") for i, value in enumerate(ratios_data)
    )
    split_seed = split_data.get("seed", derive_seed(seed, "split"))
    if not isinstance(split_seed, int):
        raise ManifestError("split.seed must be an integer")
    try:
        split = SplitSpec(ratios=ratios, seed=split_seed)  # type: ignore[arg-type]
    except ValueError as exc:
        raise ManifestError(f"split: {exc}") from None

    strategy = data.get("strategy", "standard")
    if strategy not in STRATEGIES:
        raise ManifestError(f"manifest: unknown strategy {strategy!r}")

    endpoint, mock = _parse_endpoint(data.get("endpoint"), "endpoint")
    templates = _parse_templates(data.get("templates"), base)

    quorum_data = data.get("quorum", {})
    if not isinstance(quorum_data, dict):
        raise ManifestError("quorum: expected an object")
    _reject_unknown(
        quorum_data, {"required_accepts", "required_rejects", "panel_size"}, "quorum"
    )
    try:
        quorum = QuorumPolicy(**quorum_data)
    except (TypeError, ValueError) as exc:
        raise ManifestError(f"quorum: {exc}") from None

    output_dir = Path(out_override) if out_override else base / data.get("output_dir", "out")
    merged_name = data.get("merged_name", "merged")
    if not isinstance(merged_name, str) or not merged_name:
        raise ManifestError("manifest: merged_name must be a non-empty string")
    if merged_name in names:
        raise ManifestError("manifest: merged_name collides with a source name")

    return RunManifest(
        seed=seed,
        output_dir=Path(output_dir).resolve(),
        sources=sources,
        sampling=sampling,
        split=split,
        strategy=strategy,
        endpoint=endpoint,
        mock=mock,
        templates=templates,
        quorum=quorum,
        merged_name=merged_name,
    )


def derive_seed(master: int, *parts: str) -> int:
    """Stable per-stage seed derived from the manifest seed."""
    material = ":".join([str(master), *parts]).encode("utf-8")
    return int.from_bytes(hashlib.sha256(material).digest()[:8], "big")
