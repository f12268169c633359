"""Run configuration: defaults, TOML loading and validation.

Config files are TOML.  Every key is optional; unknown keys are rejected.

    seed = 0                      # unsigned 64-bit
    dims = [1, 2, 3]              # m values (spinor dimension 2^m, manifold dimension 2m)
    sigs = [1, 3]                 # n values: Hermitian directions of the pseudo-Riemannian rep
    lattice_n = [8, 16, 32, 64]   # sites per axis for the torus demos
    tau_alg = 1e-10
    slope_bounded = 0.1
    slope_unbounded = 0.8
    cutoff_scales = [0.5, 1.0, 2.0]
    cutoff = "exp"                # "exp" or "gauss"
    n_generators = 8
    n_spinors = 16
    n_points = 3                  # N of the finite matrix-model triple M_N(C) (x) S
    scheme = "central"            # "central" or "spectral"

Odd n is needed for the twist by grading; configs with even n report those
checks as skipped.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

MAX_M = 4
CUTOFFS = ("exp", "gauss")
SCHEMES = ("central", "spectral")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    dims: tuple[int, ...] = (1, 2, 3)
    sigs: tuple[int, ...] = (1, 3)
    lattice_n: tuple[int, ...] = (8, 16, 32, 64)
    tau_alg: float = 1e-10
    slope_bounded: float = 0.1
    slope_unbounded: float = 0.8
    cutoff_scales: tuple[float, ...] = (0.5, 1.0, 2.0)
    cutoff: str = "exp"
    n_generators: int = 8
    n_spinors: int = 16
    n_points: int = 3
    scheme: str = "central"

    def __post_init__(self):
        for name in ("dims", "sigs", "lattice_n", "cutoff_scales"):
            value = getattr(self, name)
            if isinstance(value, (str, bytes)) or not hasattr(value, "__iter__"):
                raise ConfigError(f"{name} must be a list")
            object.__setattr__(self, name, tuple(value))
        validate(self)

    def sigs_for(self, m: int) -> tuple[int, ...]:
        """Configured n values that fit in dimension 2m."""
        return tuple(n for n in self.sigs if n <= 2 * m)

    def to_dict(self) -> dict:
        return {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(self).items()}


def _is_int(x) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


def _is_num(x) -> bool:
    return (isinstance(x, (int, float))) and not isinstance(x, bool)


def validate(cfg: RunConfig) -> None:
    if not _is_int(cfg.seed) or not 0 <= cfg.seed < 2 ** 64:
        raise ConfigError(f"seed must be an unsigned 64-bit integer, got {cfg.seed!r}")
    if not cfg.dims or not all(_is_int(m) and 1 <= m <= MAX_M for m in cfg.dims):
        raise ConfigError(f"dims must be a nonempty list of integers in 1..{MAX_M}")
    if not cfg.sigs or not all(_is_int(n) and 0 <= n <= 2 * MAX_M for n in cfg.sigs):
        raise ConfigError("sigs must be a nonempty list of nonnegative integers")
    if not any(cfg.sigs_for(m) for m in cfg.dims):
        raise ConfigError("no configured n fits any configured dimension (need n <= 2m)")
    if (len(cfg.lattice_n) < 3 or not all(_is_int(n) and n >= 4 for n in cfg.lattice_n)
            or list(cfg.lattice_n) != sorted(set(cfg.lattice_n))):
        raise ConfigError("lattice_n must hold at least 3 ascending distinct integers >= 4")
    if not _is_num(cfg.tau_alg) or not 0 < cfg.tau_alg < 1:
        raise ConfigError("tau_alg must be in (0, 1)")
    if not (_is_num(cfg.slope_bounded) and _is_num(cfg.slope_unbounded)
            and 0 < cfg.slope_bounded < cfg.slope_unbounded):
        raise ConfigError("need 0 < slope_bounded < slope_unbounded")
    if not cfg.cutoff_scales or not all(_is_num(x) and x > 0 for x in cfg.cutoff_scales):
        raise ConfigError("cutoff_scales must be positive numbers")
    if cfg.cutoff not in CUTOFFS:
        raise ConfigError(f"cutoff must be one of {CUTOFFS}")
    for name in ("n_generators", "n_spinors"):
        if not _is_int(getattr(cfg, name)) or getattr(cfg, name) < 1:
            raise ConfigError(f"{name} must be a positive integer")
    if not _is_int(cfg.n_points) or cfg.n_points < 2:
        raise ConfigError("n_points must be an integer >= 2")
    if cfg.scheme not in SCHEMES:
        raise ConfigError(f"scheme must be one of {SCHEMES}")


def from_mapping(data: dict, base: RunConfig | None = None) -> RunConfig:
    base = base or RunConfig()
    known = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {unknown}")
    try:
        return replace(base, **data)
    except TypeError as err:
        raise ConfigError(str(err)) from err


def load_config(path: str | Path | None = None, **overrides) -> RunConfig:
    """Defaults, then the TOML file, then non-None keyword overrides."""
    data = {}
    if path is not None:
        try:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        except OSError as err:
            raise ConfigError(f"cannot read config {path}: {err}") from err
        except tomllib.TOMLDecodeError as err:
            raise ConfigError(f"invalid TOML in {path}: {err}") from err
    data.update({k: v for k, v in overrides.items() if v is not None})
    return from_mapping(data)
