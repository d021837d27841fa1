"""Scenario files and named presets, in user-facing units.

A scenario file is YAML with these keys (all optional except ``density_per_km2``,
``alpha`` and ``radius_m``)::

    density_per_km2: 14
    alpha: 4.5
    radius_m: 300
    edge_threshold_db: 0        # or "off" for T = 0
    snr_db: 162
    fading: {type: exponential}
    cluster_size: null          # fixed K, or null for a Poisson cluster
    scheduling: FR              # FR or CS
    pilots: null                # pilot count, or null for perfect CSI

Unknown keys are rejected by name.
"""

from __future__ import annotations

import yaml

from .errors import DomainError
from .scenario import Scenario, db_to_linear, linear_to_db, per_km2
from .fading import from_dict as fading_from_dict

FILE_KEYS = {
    "density_per_km2",
    "alpha",
    "radius_m",
    "edge_threshold_db",
    "snr_db",
    "fading",
    "cluster_size",
    "scheduling",
    "pilots",
}
REQUIRED = ("density_per_km2", "alpha", "radius_m")
FADING_KEYS = {
    "exponential": set(),
    "deterministic": set(),
    "lognormal": {"sigma_db"},
    "nakagami_lognormal": {"m_shape", "sigma_db"},
}


class ConfigError(DomainError):
    """A scenario file or preset is malformed."""


def scenario_from_mapping(data):
    if not isinstance(data, dict):
        raise ConfigError("scenario must be a mapping")
    unknown = sorted(set(data) - FILE_KEYS)
    if unknown:
        raise ConfigError(f"unknown scenario key(s): {', '.join(unknown)}")
    missing = [k for k in REQUIRED if k not in data]
    if missing:
        raise ConfigError(f"missing scenario key(s): {', '.join(missing)}")
    fading_cfg = dict(data.get("fading") or {"type": "exponential"})
    kind = fading_cfg.get("type")
    if kind not in FADING_KEYS:
        raise ConfigError(f"unknown fading type: {kind!r}")
    extra = sorted(set(fading_cfg) - FADING_KEYS[kind] - {"type"})
    if extra:
        raise ConfigError(f"unknown fading key(s): {', '.join(extra)}")
    edge = data.get("edge_threshold_db", "off")
    edge_linear = 0.0 if edge in ("off", None) else db_to_linear(float(edge))
    try:
        return Scenario.from_edge_threshold(
            edge_linear,
            radius=float(data["radius_m"]),
            alpha=float(data["alpha"]),
            density=per_km2(float(data["density_per_km2"])),
            snr=db_to_linear(float(data.get("snr_db", 162.0))),
            fading=fading_from_dict(fading_cfg),
            cluster_size=data.get("cluster_size"),
            scheduling=data.get("scheduling", "FR"),
            pilots=data.get("pilots"),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def load_scenario(path):
    with open(path) as fh:
        try:
            data = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from None
    return scenario_from_mapping(data)


def scenario_to_mapping(scn):
    """Inverse of :func:`scenario_from_mapping` (user-facing units)."""
    return {
        "density_per_km2": scn.density * 1e6,
        "alpha": scn.alpha,
        "radius_m": scn.radius,
        "edge_threshold_db": "off" if scn.threshold == 0 else linear_to_db(scn.edge_threshold),
        "snr_db": linear_to_db(scn.snr),
        "fading": scn.fading.to_dict(),
        "cluster_size": scn.cluster_size,
        "scheduling": scn.scheduling,
        "pilots": scn.pilots,
    }


# Named presets. "swept" lists the parameters a preset leaves open for the user to vary.
PRESETS = {
    "fig2a": {
        "scenarios": {
            f"D{d}_T{t}": {"density_per_km2": 4, "alpha": 3, "radius_m": d, "edge_threshold_db": t, "snr_db": 162}
            for d in (450, 750)
            for t in (0, 6)
        },
        "kind": "gamma_fit",
        "swept": ["density_per_km2"],
    },
    "fig2b": {
        "scenarios": {
            f"D{d}_T{t}": {"density_per_km2": 4, "alpha": 5, "radius_m": d, "edge_threshold_db": t, "snr_db": 162}
            for d in (450, 750)
            for t in (0, 6)
        },
        "kind": "gamma_fit",
        "swept": ["density_per_km2"],
    },
    "fig4": {
        "scenarios": {
            f"a{a}": {"density_per_km2": 14, "alpha": a, "radius_m": 300, "edge_threshold_db": 0, "snr_db": 162}
            for a in (3.5, 4.5)
        },
        "kind": "sinr_cdf",
        "swept": [],
    },
    "fig5": {
        "scenarios": {
            f"a{a}": {
                "density_per_km2": 14,
                "alpha": a,
                "radius_m": 300,
                "edge_threshold_db": 0,
                "snr_db": 162,
                "cluster_size": 3,
            }
            for a in (3.5, 4.5)
        },
        "kind": "sinr_cdf",
        "swept": [],
    },
    "fig6a": {
        "scenarios": {
            name: {
                "density_per_km2": 14,
                "alpha": 4.5,
                "radius_m": 300,
                "edge_threshold_db": 0,
                "snr_db": 162,
                "fading": cfg,
            }
            for name, cfg in (
                ("deterministic", {"type": "deterministic"}),
                ("lognormal", {"type": "lognormal", "sigma_db": 6}),
                ("nakagami_lognormal", {"type": "nakagami_lognormal", "m_shape": 4, "sigma_db": 8}),
            )
        },
        "kind": "sinr_cdf",
        "swept": ["radius_m", "edge_threshold_db"],
    },
    "fig6b": {
        "scenarios": {
            "exponential": {"density_per_km2": 14, "alpha": 4.5, "radius_m": 300, "edge_threshold_db": 0, "snr_db": 162}
        },
        "kind": "rate_cdf",
        "swept": ["radius_m", "edge_threshold_db"],
    },
    "fig7a": {
        "scenarios": {
            "base": {"density_per_km2": 4, "alpha": 4, "radius_m": 282, "edge_threshold_db": "off", "snr_db": 162, "cluster_size": 1}
        },
        "kind": "avg_se",
        "k_range": list(range(1, 11)),
        "pilots": [100, 200, 400],
        "swept": ["pilots", "k_range"],
    },
    "fig8b": {
        "scenarios": {
            f"T{t}": {"density_per_km2": 14, "alpha": 3.5, "radius_m": 400, "edge_threshold_db": t, "snr_db": 162}
            for t in (-10, 0, 6)
        },
        "kind": "fr_cs",
        "swept": ["edge_threshold_db"],
    },
}


def preset_scenario(name):
    """First scenario of a figure preset, or ``figure/key`` for a specific one."""
    fig, _, key = name.partition("/")
    if fig not in PRESETS:
        raise ConfigError(f"unknown preset: {name!r}")
    scenarios = PRESETS[fig]["scenarios"]
    if key and key not in scenarios:
        raise ConfigError(f"unknown preset: {name!r}")
    return scenario_from_mapping(scenarios[key or next(iter(scenarios))])
