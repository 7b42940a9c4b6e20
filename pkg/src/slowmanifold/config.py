"""TOML configuration: system definition plus experiment settings.

The file is plain-text nested key-value (TOML) with a mandatory ``schema = 1``
field.  The ``[system]`` table defines the problem (operator shifts, monomial
lists, epsilon, gate constant, resolution, assumption constants, working-ball
radius); the ``[split]`` table fixes zeta either directly or through a cutoff
k0; ``[experiment]`` holds sweep settings consumed by the experiments module.

Example::

    schema = 1

    [system]
    epsilon = 1e-3
    resolution = 12
    gate_c = 0.99

    [system.operators]
    a_shift = 1.0
    b_shift = 1.0

    [[system.f]]
    coefficient = 1.0
    power_u = 0
    power_v = 2

    [system.constants]
    L_f = 0.2
    L_g = 0.0
    # ...

    [split]
    k0 = 2

    [experiment]
    seed = 20210
    samples = 20
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path
from typing import Any

try:
    import tomllib  # Python >= 3.11
except ModuleNotFoundError:  # pragma: no cover - depends on interpreter
    import tomli as tomllib

from .errors import ConfigError
from .spectral import SpectralSplit, shifted_laplacian, split_cutoff, split_for_k0
from .system import AssumptionConstants, FastSlowSystem, PolynomialNonlinearity

SCHEMA_VERSION = 1

_CONSTANT_KEYS = ("L_f", "L_g", "C_A", "C_B", "M_A", "M_B",
                  "omega_A", "omega_B", "omega_f")
_OPTIONAL_CONSTANT_KEYS = ("gamma_X", "delta_X", "delta_Y", "ball_radius")


@dataclass
class LoadedConfig:
    system: FastSlowSystem
    split: SpectralSplit | None
    experiment: dict[str, Any]
    raw: dict[str, Any]
    sha256: str
    path: Path | None = None

    def require_split(self) -> SpectralSplit:
        if self.split is None:
            raise ConfigError("this command needs a [split] table (zeta or k0)")
        return self.split


def _nonlinearity(entries, label: str) -> PolynomialNonlinearity:
    monomials = []
    for ent in entries or []:
        try:
            monomials.append((float(ent["coefficient"]),
                              int(ent.get("power_u", 0)), int(ent.get("power_v", 0))))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad monomial in [[system.{label}]]: {ent!r}") from exc
    try:
        return PolynomialNonlinearity(tuple(monomials))
    except ValueError as exc:
        raise ConfigError(f"invalid nonlinearity {label}: {exc}") from exc


def parse_config(raw: dict[str, Any], sha256: str = "", path: Path | None = None) -> LoadedConfig:
    if raw.get("schema") != SCHEMA_VERSION:
        raise ConfigError(f"config must declare schema = {SCHEMA_VERSION}")
    try:
        sys_tab = raw["system"]
    except KeyError:
        raise ConfigError("missing [system] table") from None

    ops = sys_tab.get("operators", {})
    op_A = shifted_laplacian(float(ops.get("a_shift", 1.0)), "A")
    op_B = shifted_laplacian(float(ops.get("b_shift", 1.0)), "B")

    ctab = sys_tab.get("constants")
    if ctab is None:
        raise ConfigError("missing [system.constants] table")
    missing = [k for k in _CONSTANT_KEYS if k not in ctab]
    if missing:
        raise ConfigError(f"missing assumption constants: {', '.join(missing)}")
    kwargs = {k: float(ctab[k]) for k in _CONSTANT_KEYS}
    kwargs.update({k: float(ctab[k]) for k in _OPTIONAL_CONSTANT_KEYS if k in ctab})
    constants = AssumptionConstants(**kwargs)

    try:
        system = FastSlowSystem(
            op_A=op_A, op_B=op_B,
            f=_nonlinearity(sys_tab.get("f"), "f"),
            g=_nonlinearity(sys_tab.get("g"), "g"),
            epsilon=float(sys_tab.get("epsilon", 1e-3)),
            resolution=int(sys_tab.get("resolution", 8)),
            constants=constants,
            gate_c=float(sys_tab.get("gate_c", 0.9)),
            gate_ratio=(float(sys_tab["gate_ratio"])
                        if "gate_ratio" in sys_tab else None),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    split = None
    sp = raw.get("split")
    if sp:
        if "zeta" in sp:
            split = split_cutoff(float(sp["zeta"]), constants.omega_A)
        elif "k0" in sp:
            split = split_for_k0(int(sp["k0"]), constants.omega_A,
                                 position=float(sp.get("position", 1e-9)))
        else:
            raise ConfigError("[split] needs either zeta or k0")

    return LoadedConfig(system=system, split=split,
                        experiment=dict(raw.get("experiment", {})),
                        raw=raw, sha256=sha256, path=path)


def load_config(path: str | Path) -> LoadedConfig:
    path = Path(path)
    data = path.read_bytes()
    try:
        raw = tomllib.loads(data.decode("utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    return parse_config(raw, sha256=hashlib.sha256(data).hexdigest(), path=path)
