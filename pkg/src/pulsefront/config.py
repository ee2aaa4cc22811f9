"""Flat ``key = value`` run configuration files and scenario presets."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

from .model import (
    InvalidConfig,
    MediumModel,
    MediumSpec,
    PulsefrontError,
    PulseSpec,
    SimGrid,
    validate_config,
)
from .propagator import GridTooLarge, build_tau_grid

REQUIRED_KEYS = (
    "medium",
    "alpha0_per_cm",
    "length_cm",
    "time_unit_s",
    "pulse_peak",
    "pulse_sigma",
    "pulse_center",
    "pulse_cutoff",
    "tau_end",
)
OPTIONAL_KEYS = {
    "alpha0_tilde_per_cm": "0",
    "gamma1_ratio": "inf",
    "gamma3_ratio": "inf",
    "coarse_dtau": "1e-3",
    "fine_dtau": "1e-10",
    "refine_window": "1e-7",
    "dz": "",  # empty: length_cm / 900
    "save_slices": "",  # empty: 0 and L
    "out_dir": "",
    "table_row_dtau": "",  # empty: fine_dtau
}
KEY_ORDER = (
    "medium", "alpha0_per_cm", "alpha0_tilde_per_cm", "length_cm", "time_unit_s",
    "gamma1_ratio", "gamma3_ratio", "pulse_peak", "pulse_sigma", "pulse_center",
    "pulse_cutoff", "tau_end", "coarse_dtau", "fine_dtau", "refine_window", "dz",
    "save_slices", "out_dir", "table_row_dtau",
)
DEFAULT_NZ = 900
SCENARIOS = ("table1", "table2", "ruby-fig2", "alex-fig4")


class ParseError(PulsefrontError, ValueError):
    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.line = line
        self.column = column
        where = f"line {line}, column {column}: " if line else ""
        super().__init__(where + message)


@dataclass(frozen=True)
class RunConfig:
    pulse: PulseSpec
    medium: MediumSpec
    tau_end: float
    coarse_dtau: float = 1e-3
    fine_dtau: float = 1e-10
    refine_window: float = 1e-7
    dz: float | None = None
    save_slices: tuple[float, ...] | None = None
    out_dir: str = ""
    table_row_dtau: float | None = None

    @property
    def nz(self) -> int:
        if self.dz is None:
            return DEFAULT_NZ
        return max(1, int(round(self.medium.length_cm / self.dz)))

    @property
    def slices(self) -> tuple[float, ...]:
        if self.save_slices is None:
            return (0.0, self.medium.length_cm)
        return self.save_slices

    def build_grid(self, pulse=None) -> SimGrid:
        return build_tau_grid(
            pulse or self.pulse, self.coarse_dtau, self.fine_dtau, self.refine_window,
            self.tau_end, length_cm=self.medium.length_cm, nz=self.nz,
        )

    def with_changes(self, **changes) -> RunConfig:
        return replace(self, **changes)

    def to_text(self) -> str:
        return emit_config(self)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def emit_config(cfg: RunConfig) -> str:
    """Serialize ``cfg`` so that ``parse_config(emit_config(cfg)) == cfg``."""
    p, m = cfg.pulse, cfg.medium
    values = {
        "medium": m.model.value,
        "alpha0_per_cm": _fmt(float(m.alpha0)),
        "alpha0_tilde_per_cm": _fmt(float(m.alpha0_tilde)),
        "length_cm": _fmt(float(m.length_cm)),
        "time_unit_s": _fmt(float(m.time_unit_seconds)),
        "gamma1_ratio": _fmt(float(m.gamma1_ratio)),
        "gamma3_ratio": _fmt(float(m.gamma3_ratio)),
        "pulse_peak": _fmt(float(p.peak_amplitude)),
        "pulse_sigma": _fmt(float(p.width_sigma)),
        "pulse_center": _fmt(float(p.center_tau)),
        "pulse_cutoff": _fmt(float(p.cutoff_tau)),
        "tau_end": _fmt(float(cfg.tau_end)),
        "coarse_dtau": _fmt(float(cfg.coarse_dtau)),
        "fine_dtau": _fmt(float(cfg.fine_dtau)),
        "refine_window": _fmt(float(cfg.refine_window)),
        "dz": _fmt(cfg.dz),
        "save_slices": "" if cfg.save_slices is None else ", ".join(repr(float(z)) for z in cfg.save_slices),
        "out_dir": cfg.out_dir,
        "table_row_dtau": _fmt(cfg.table_row_dtau),
    }
    return "".join(f"{k} = {values[k]}\n" for k in KEY_ORDER)


def _float(key, raw, line, col) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ParseError(f"{key}: expected a number, got {raw!r}", line, col) from None


def parse_config(text: str) -> RunConfig:
    """Parse and validate a configuration file.

    One ``key = value`` pair per line; ``#`` starts a comment.  Unknown or
    repeated keys and missing required keys are :class:`ParseError`; values
    that break a physical invariant raise :class:`InvalidConfig`.
    """
    raw: dict[str, tuple[str, int, int]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0]
        if not body.strip():
            continue
        if "=" not in body:
            col = len(body) - len(body.lstrip()) + 1
            raise ParseError("expected 'key = value'", lineno, col)
        key_part, value_part = body.split("=", 1)
        key = key_part.strip()
        key_col = len(key_part) - len(key_part.lstrip()) + 1
        val_col = len(key_part) + 2 + (len(value_part) - len(value_part.lstrip()))
        if not key:
            raise ParseError("missing key before '='", lineno, key_col)
        if key not in REQUIRED_KEYS and key not in OPTIONAL_KEYS:
            raise ParseError(f"unknown key {key!r}", lineno, key_col)
        if key in raw:
            raise ParseError(f"duplicate key {key!r}", lineno, key_col)
        raw[key] = (value_part.strip(), lineno, val_col)

    missing = [k for k in REQUIRED_KEYS if k not in raw or raw[k][0] == ""]
    if missing:
        raise ParseError(f"missing required keys: {', '.join(missing)}")

    def num(key):
        value, line, col = raw.get(key, (OPTIONAL_KEYS.get(key, ""), 0, 0))
        return None if value == "" else _float(key, value, line, col)

    medium_raw, line, col = raw["medium"]
    try:
        model = MediumModel.parse(medium_raw)
    except ValueError as exc:
        raise ParseError(str(exc), line, col) from None

    slices = None
    if "save_slices" in raw and raw["save_slices"][0]:
        value, line, col = raw["save_slices"]
        slices = tuple(_float("save_slices", v.strip(), line, col) for v in value.split(","))

    medium = MediumSpec(
        model=model,
        alpha0=num("alpha0_per_cm"),
        alpha0_tilde=num("alpha0_tilde_per_cm"),
        gamma1_ratio=num("gamma1_ratio"),
        gamma3_ratio=num("gamma3_ratio"),
        time_unit_seconds=num("time_unit_s"),
        length_cm=num("length_cm"),
    )
    pulse = PulseSpec(num("pulse_peak"), num("pulse_sigma"), num("pulse_center"),
                      num("pulse_cutoff"))
    cfg = RunConfig(
        pulse=pulse,
        medium=medium,
        tau_end=num("tau_end"),
        coarse_dtau=num("coarse_dtau"),
        fine_dtau=num("fine_dtau"),
        refine_window=num("refine_window"),
        dz=num("dz"),
        save_slices=slices,
        out_dir=raw.get("out_dir", ("",))[0],
        table_row_dtau=num("table_row_dtau"),
    )
    check_config(cfg)
    return cfg


def check_config(cfg: RunConfig) -> RunConfig:
    """Run every invariant check, including those on the grid the config implies."""
    bad = {}
    try:
        validate_config(cfg.pulse, cfg.medium)
    except InvalidConfig as exc:
        bad.update(exc.violations)
    L = cfg.medium.length_cm
    if cfg.dz is not None:
        if not (cfg.dz > 0 and math.isfinite(cfg.dz)):
            bad["dz"] = f"must be > 0, got {cfg.dz!r}"
        elif L > 0 and not math.isclose(cfg.nz * cfg.dz, L, rel_tol=1e-6):
            bad["dz"] = f"length_cm={L!r} is not a whole number of steps dz={cfg.dz!r}"
    if cfg.save_slices is not None and L > 0:
        for z in cfg.save_slices:
            if not (0.0 <= z <= L):
                bad["save_slices"] = f"z={z!r} lies outside [0, {L!r}]"
    if cfg.table_row_dtau is not None and not cfg.table_row_dtau > 0:
        bad["table_row_dtau"] = "must be > 0"
    if bad:
        raise InvalidConfig(bad)
    try:
        grid = cfg.build_grid()
    except (ValueError, GridTooLarge) as exc:
        raise InvalidConfig({"grid": str(exc)}) from None
    validate_config(cfg.pulse, cfg.medium, grid)
    return cfg


def preset_path(name: str) -> Path:
    if name not in SCENARIOS:
        raise KeyError(f"unknown scenario {name!r}; known: {', '.join(SCENARIOS)}")
    return Path(str(resources.files("pulsefront") / "presets" / f"{name}.cfg"))


def preset_text(name: str) -> str:
    return preset_path(name).read_text(encoding="utf-8")


def load_preset(name: str) -> RunConfig:
    return parse_config(preset_text(name))


def load(name_or_path: str) -> RunConfig:
    """Scenario name or path to a config file."""
    if name_or_path in SCENARIOS:
        return load_preset(name_or_path)
    return parse_config(Path(name_or_path).read_text(encoding="utf-8"))
