"""Pipeline configuration read from an INI file, with command-line overrides.

Relative paths are resolved against the directory holding the config file.
List values are comma- or newline-separated.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace
from pathlib import Path

from .acquisition import HOUR, SOURCE_KINDS, CaptureSpec, parse_utc
from .layout import LayoutParams


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class InputPaths:
    rib: tuple[Path, ...] = ()
    traceroutes: tuple[Path, ...] = ()
    delegated: tuple[Path, ...] = ()
    as2org: Path | None = None
    roas: Path | None = None
    geolite_blocks: tuple[Path, ...] = ()
    geolite_locations: Path | None = None
    vdem: Path | None = None
    vdem_names: Path | None = None
    state_owned: Path | None = None

    def files(self) -> list[Path]:
        out: list[Path] = []
        for value in vars(self).values():
            if isinstance(value, tuple):
                out.extend(value)
            elif value is not None:
                out.append(value)
        return sorted(out)


@dataclass(frozen=True)
class MetricToggles:
    eigencentrality: bool = True
    eccentricity: bool = True
    clustering: bool = True
    path_length: bool = True


@dataclass(frozen=True)
class AnalysisConfig:
    countries: tuple[str, ...] = ()  # empty = every country in the graph
    indicator_year: int | None = None  # defaults to the capture year
    min_observed: int = 10  # countries with fewer observed ASes stay out of correlations
    degree_curve_max: int = 20
    path_sample_size: int = 500
    path_exact_threshold: int = 2000
    eigen_tolerance: float = 1e-10


@dataclass(frozen=True)
class PipelineConfig:
    target_time: str | None = None
    sources: tuple[str, ...] = ("ris", "routeviews", "pch", "atlas", "delegated")
    rib_window: int = 4 * HOUR
    trace_window: int = 24 * HOUR
    manifest: Path | None = None
    cache_dir: Path = Path("cache")
    out_dir: Path = Path("out")
    inputs: InputPaths = field(default_factory=InputPaths)
    use_traceroutes: bool = True
    use_roas: bool = True
    metrics: MetricToggles = field(default_factory=MetricToggles)
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)
    layout: LayoutParams = field(default_factory=LayoutParams)
    strict: bool = False
    error_budget: int = 0  # record-level errors tolerated in strict mode
    parallelism: int = 4

    def capture_spec(self) -> CaptureSpec:
        if not self.target_time:
            raise ConfigError("target_time is not set (config [capture] target_time or --target-time)")
        return CaptureSpec(parse_utc(self.target_time), frozenset(self.sources), self.rib_window, self.trace_window)

    def with_overrides(
        self,
        *,
        target_time: str | None = None,
        countries: list[str] | None = None,
        out_dir: str | Path | None = None,
        seed: int | None = None,
        strict: bool | None = None,
    ) -> PipelineConfig:
        cfg = self
        if target_time is not None:
            parse_utc(target_time)
            cfg = replace(cfg, target_time=target_time)
        if countries:
            cfg = replace(cfg, analysis=replace(cfg.analysis, countries=tuple(c.upper() for c in countries)))
        if out_dir is not None:
            cfg = replace(cfg, out_dir=Path(out_dir))
        if seed is not None:
            cfg = replace(cfg, layout=replace(cfg.layout, seed=seed))
        if strict is not None:
            cfg = replace(cfg, strict=strict)
        return cfg


def _list(text: str | None) -> list[str]:
    if not text:
        return []
    return [part.strip() for part in text.replace("\n", ",").split(",") if part.strip()]


def load_config(path: str | Path) -> PipelineConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    base = path.resolve().parent

    def p(value: str | None) -> Path | None:
        if not value:
            return None
        q = Path(value).expanduser()
        return q if q.is_absolute() else base / q

    def ps(value: str | None) -> tuple[Path, ...]:
        return tuple(p(v) for v in _list(value))  # type: ignore[misc]

    def sec(name: str) -> configparser.SectionProxy:
        return parser[name] if parser.has_section(name) else parser[parser.default_section]

    try:
        capture, paths, inputs = sec("capture"), sec("paths"), sec("inputs")
        analysis, metrics, layout, run = sec("analysis"), sec("metrics"), sec("layout"), sec("run")
        sources = tuple(_list(capture.get("sources"))) or PipelineConfig.sources
        unknown = set(sources) - SOURCE_KINDS
        if unknown:
            raise ConfigError(f"unknown sources: {sorted(unknown)}")
        lp = LayoutParams()
        cfg = PipelineConfig(
            target_time=capture.get("target_time") or None,
            sources=sources,
            rib_window=int(capture.getfloat("rib_window_hours", 4) * HOUR),
            trace_window=int(capture.getfloat("trace_window_hours", 24) * HOUR),
            manifest=p(paths.get("manifest")),
            cache_dir=p(paths.get("cache_dir")) or base / "cache",
            out_dir=p(paths.get("out_dir")) or base / "out",
            inputs=InputPaths(
                rib=ps(inputs.get("rib")),
                traceroutes=ps(inputs.get("traceroutes")),
                delegated=ps(inputs.get("delegated")),
                as2org=p(inputs.get("as2org")),
                roas=p(inputs.get("roas")),
                geolite_blocks=ps(inputs.get("geolite_blocks")),
                geolite_locations=p(inputs.get("geolite_locations")),
                vdem=p(inputs.get("vdem")),
                vdem_names=p(inputs.get("vdem_names")),
                state_owned=p(inputs.get("state_owned")),
            ),
            use_traceroutes=run.getboolean("use_traceroutes", True),
            use_roas=run.getboolean("use_roas", True),
            metrics=MetricToggles(
                eigencentrality=metrics.getboolean("eigencentrality", True),
                eccentricity=metrics.getboolean("eccentricity", True),
                clustering=metrics.getboolean("clustering", True),
                path_length=metrics.getboolean("path_length", True),
            ),
            analysis=AnalysisConfig(
                countries=tuple(c.upper() for c in _list(analysis.get("countries"))),
                indicator_year=analysis.getint("indicator_year") if analysis.get("indicator_year") else None,
                min_observed=analysis.getint("min_observed", 10),
                degree_curve_max=analysis.getint("degree_curve_max", 20),
                path_sample_size=analysis.getint("path_sample_size", 500),
                path_exact_threshold=analysis.getint("path_exact_threshold", 2000),
                eigen_tolerance=analysis.getfloat("eigen_tolerance", 1e-10),
            ),
            layout=LayoutParams(
                scaling=layout.getfloat("scaling", lp.scaling),
                gravity=layout.getfloat("gravity", lp.gravity),
                barnes_hut_theta=layout.getfloat("barnes_hut_theta", lp.barnes_hut_theta),
                edge_weight_influence=layout.getfloat("edge_weight_influence", lp.edge_weight_influence),
                max_iterations=layout.getint("max_iterations", lp.max_iterations),
                epsilon=layout.getfloat("epsilon", lp.epsilon),
                seed=layout.getint("seed", lp.seed),
                jitter_tolerance=layout.getfloat("jitter_tolerance", lp.jitter_tolerance),
                lin_log=layout.getboolean("lin_log", lp.lin_log),
                strong_gravity=layout.getboolean("strong_gravity", lp.strong_gravity),
            ),
            strict=run.getboolean("strict", False),
            error_budget=run.getint("error_budget", 0),
            parallelism=run.getint("parallelism", 4),
        )
    except (ValueError, KeyError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{path}: {exc}") from None
    if cfg.target_time:
        try:
            parse_utc(cfg.target_time)
        except ValueError:
            raise ConfigError(f"{path}: target_time {cfg.target_time!r} is not ISO 8601") from None
    return cfg
