"""Run configuration: JSON file, then the ``COMATCH_SEED`` environment variable, then flags."""

import json
import os
from dataclasses import asdict, dataclass, fields
from pathlib import Path

FEATURE_MODES = ("learned-random", "oracle")


@dataclass
class RunConfig:
    seed: int = 0
    L: int = 4
    s: int = 4
    d: int = 256
    heads: int = 8
    fusion: str = "mlp"
    theta_c: float = 0.1
    tau: float = 10.0
    alpha: float = 1.0
    beta: float = 0.25
    gamma: float = 0.25
    rel_tol: float = 0.2
    ransac_iters: int = 1000
    ransac_thresh_px: float = 0.5
    homography_thresh_px: float = 1.0
    feature_mode: str = "learned-random"
    output: str = "out"

    def __post_init__(self):
        if self.feature_mode not in FEATURE_MODES:
            raise ValueError(f"feature_mode must be one of {FEATURE_MODES}, got {self.feature_mode!r}")
        if self.tau <= 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if not 0.0 <= self.theta_c <= 1.0:
            raise ValueError(f"theta_c must lie in [0, 1], got {self.theta_c}")
        if min(self.alpha, self.beta, self.gamma) < 0:
            raise ValueError("loss weights must be non-negative")

    def to_dict(self):
        return asdict(self)


def load_config(path=None, overrides=None, env=None):
    """Build a :class:`RunConfig`; later sources win: file < ``COMATCH_SEED`` < ``overrides``.

    ``overrides`` holds flag values; ``None`` entries are ignored.
    """
    env = os.environ if env is None else env
    values = {}
    if path is not None:
        p = Path(path)
        if not p.exists():
            raise FileNotFoundError(2, "config file not found", str(p))
        data = json.loads(p.read_text())
        known = {f.name for f in fields(RunConfig)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValueError(f"{p}: unknown config keys {unknown}")
        values.update(data)
    if env.get("COMATCH_SEED"):
        try:
            values["seed"] = int(env["COMATCH_SEED"])
        except ValueError:
            raise ValueError(f"COMATCH_SEED must be an integer, got {env['COMATCH_SEED']!r}") from None
    for k, v in (overrides or {}).items():
        if v is not None:
            values[k] = v
    return RunConfig(**values)
