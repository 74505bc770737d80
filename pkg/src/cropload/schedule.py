"""Progressive-training schedules: built-in schemes and epoch resolution.

A scheme is an ordered list of stages, each holding a resolution, masking
ratio, augmentation level, and crop scale bounds, with fractional epoch
spans summing to 1.  Built-ins cover the finetune schemes (three stages
spanning 0.3/0.3/0.4 of training) and the pretrain schemes s1..s6,
including the palindrome s5 (224 -> 192 -> 224).

Pretraining stage lengths are not specified anywhere authoritative; the
0.3/0.3/0.4 split of the finetune recipe is applied there as well (and is
configurable through custom schemes).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .cropmath import ScaleBounds
from .errors import ConfigError


class AugLevel(Enum):
    SIMPLE = "simple"
    THREE_AUG = "3aug"
    THREE_AUG_PLUS = "3aug+"


@dataclass(frozen=True)
class Stage:
    resolution: int
    masking_ratio: float
    aug: AugLevel
    scale: ScaleBounds
    span: float

    def __post_init__(self):
        if self.resolution < 16 or self.resolution % 16 != 0:
            raise ConfigError(
                f"stage resolution must be a positive multiple of 16, "
                f"got {self.resolution}")
        if not 0.0 <= self.masking_ratio <= 1.0:
            raise ConfigError(f"masking ratio out of [0, 1]: {self.masking_ratio}")
        if self.span <= 0.0:
            raise ConfigError(f"stage span must be positive: {self.span}")


@dataclass(frozen=True)
class StageParams:
    """Stage settings resolved for a concrete epoch."""

    resolution: int
    masking_ratio: float
    aug: AugLevel
    scale: ScaleBounds
    stage: int


@dataclass(frozen=True)
class ScheduleScheme:
    name: str
    stages: tuple[Stage, ...]

    def __post_init__(self):
        if not self.stages:
            raise ConfigError("scheme has no stages")
        total = sum(s.span for s in self.stages)
        if abs(total - 1.0) > 1e-9:
            raise ConfigError(f"stage spans sum to {total}, expected 1")

    def boundaries(self, total_epochs: int) -> list[int]:
        """End epoch (exclusive) of each stage; last is total_epochs."""
        out = []
        cum = 0.0
        for s in self.stages:
            cum += s.span
            out.append(int(math.floor(cum * total_epochs + 1e-6)))
        out[-1] = total_epochs
        return out


# Finetune crop bounds come straight from the published stage tables
# (sigma_lo 0.28 throughout); pretraining uses the Simple-recipe RRC
# scale range (0.2, 1.0) in area, i.e. sigma_lo = sqrt(0.2).
_FT_SIGMA_LO = 0.28
_PT_SCALE = ScaleBounds.from_area(0.2, 1.0)

_FT_SPANS = (0.3, 0.3, 0.4)


def _ft(name, augs, sigma_his):
    stages = tuple(
        Stage(res, 0.0, aug, ScaleBounds(_FT_SIGMA_LO, hi), span)
        for res, aug, hi, span in zip((160, 192, 224), augs, sigma_his, _FT_SPANS)
    )
    return ScheduleScheme(name, stages)


def _pt(name, rows):
    stages = tuple(
        Stage(res, m, AugLevel.SIMPLE, _PT_SCALE, span)
        for (res, m), span in zip(rows, _FT_SPANS)
    )
    return ScheduleScheme(name, stages)


def _fixed(name, res):
    return ScheduleScheme(name, (
        Stage(res, 0.75, AugLevel.SIMPLE, _PT_SCALE, 1.0),))


_BUILTINS = {
    "ft_s1": _ft("ft_s1",
                 (AugLevel.THREE_AUG, AugLevel.THREE_AUG, AugLevel.THREE_AUG_PLUS),
                 (1.0, 1.0, 1.0)),
    "ft_s1minus": _ft("ft_s1minus",
                      (AugLevel.THREE_AUG, AugLevel.THREE_AUG, AugLevel.THREE_AUG),
                      (1.0, 1.0, 1.0)),
    "ft_s1plus": _ft("ft_s1plus",
                     (AugLevel.THREE_AUG_PLUS, AugLevel.THREE_AUG_PLUS,
                      AugLevel.THREE_AUG_PLUS),
                     (1.0, 1.0, 1.0)),
    "ft_s3": _ft("ft_s3",
                 (AugLevel.THREE_AUG, AugLevel.THREE_AUG, AugLevel.THREE_AUG_PLUS),
                 (0.68, 0.84, 1.0)),
    "pt_s1": _pt("pt_s1", ((160, 0.50), (192, 0.66), (224, 0.75))),
    "pt_s2": _pt("pt_s2", ((160, 0.75), (192, 0.75), (224, 0.75))),
    "pt_s3": _pt("pt_s3", ((224, 0.75), (192, 0.75), (160, 0.75))),
    "pt_s4": _pt("pt_s4", ((160, 0.75), (192, 0.80), (224, 0.85))),
    "pt_s5": _pt("pt_s5", ((224, 0.75), (192, 0.75), (224, 0.75))),
    "pt_s6": _pt("pt_s6", ((224, 0.75), (192, 0.75), (224, 0.85))),
    "fixed224": _fixed("fixed224", 224),
    "fixed192": _fixed("fixed192", 192),
    "fixed160": _fixed("fixed160", 160),
}

BUILTIN_NAMES = tuple(_BUILTINS)


def builtin_scheme(name: str) -> ScheduleScheme:
    try:
        return _BUILTINS[name]
    except KeyError:
        raise ConfigError(
            f"unknown scheme {name!r}; built-ins: {', '.join(BUILTIN_NAMES)}"
        ) from None


def params_for_epoch(scheme: ScheduleScheme, epoch: int,
                     total_epochs: int) -> StageParams:
    if total_epochs < 1:
        raise ValueError("total_epochs must be >= 1")
    if not 0 <= epoch < total_epochs:
        raise ValueError(f"epoch {epoch} out of range [0, {total_epochs})")
    for i, end in enumerate(scheme.boundaries(total_epochs)):
        if epoch < end:
            s = scheme.stages[i]
            return StageParams(s.resolution, s.masking_ratio, s.aug, s.scale, i)
    # Unreachable: the last boundary is total_epochs.
    raise AssertionError("no stage covers epoch")


def _stage_doc(s: Stage) -> dict:
    return {
        "res": s.resolution,
        "m": s.masking_ratio,
        "aug": s.aug.value,
        "sigma": [s.scale.sigma_lo, s.scale.sigma_hi],
        "span": s.span,
    }


def emit_schedule(scheme: ScheduleScheme, total_epochs: int) -> str:
    """Serialize the scheme plus its resolved per-epoch table as JSON."""
    epochs = []
    for e in range(total_epochs):
        p = params_for_epoch(scheme, e, total_epochs)
        epochs.append({
            "epoch": e,
            "stage": p.stage,
            "res": p.resolution,
            "m": p.masking_ratio,
            "aug": p.aug.value,
            "sigma": [p.scale.sigma_lo, p.scale.sigma_hi],
        })
    doc = {
        "name": scheme.name,
        "total_epochs": total_epochs,
        "stages": [_stage_doc(s) for s in scheme.stages],
        "epochs": epochs,
    }
    return json.dumps(doc, indent=None, separators=(",", ":"))


def load_scheme(doc: dict | str | Path) -> ScheduleScheme:
    """Parse a scheme from a dict, JSON text, or file path.

    Accepts the same shape ``emit_schedule`` writes (the per-epoch table,
    if present, is ignored; stages are authoritative).
    """
    if isinstance(doc, Path) or (isinstance(doc, str) and not doc.lstrip().startswith("{")):
        doc = Path(doc).read_text()
    if isinstance(doc, str):
        doc = json.loads(doc)
    if not isinstance(doc, dict):
        raise ConfigError("scheme document must be a JSON object")
    try:
        name = doc["name"]
        stages = []
        for row in doc["stages"]:
            stages.append(Stage(
                int(row["res"]),
                float(row["m"]),
                AugLevel(row["aug"]),
                ScaleBounds(float(row["sigma"][0]), float(row["sigma"][1])),
                float(row["span"]),
            ))
    except (KeyError, IndexError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad scheme document: {exc}") from exc
    return ScheduleScheme(name, tuple(stages))


def scheme_by_name_or_file(name: str) -> ScheduleScheme:
    if name in _BUILTINS:
        return _BUILTINS[name]
    p = Path(name)
    if p.is_file():
        return load_scheme(p)
    raise ConfigError(
        f"unknown scheme {name!r} (not a built-in, not a file); "
        f"built-ins: {', '.join(BUILTIN_NAMES)}")
