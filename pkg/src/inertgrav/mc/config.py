from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

from ..model import SCHEMES, GravParams, SystemState, new_state


@dataclass(frozen=True)
class EnsembleConfig:
    """Parameters of an ensemble run.

    Unset optional fields resolve on construction:

    * ``burn_in``: ``100 * max(1/g, 1)``
    * ``gap_tol``: ``10 * sqrt(dt)``
    * ``a0``: ``g + 1``
    * ``excursion``: ``a0 + 2``, the amplitude of ``|V + g|`` that arms the
      renewal detector.  Overriding it with a smaller value yields shorter
      (still regenerative) cycles; `a0` itself must always exceed `g`.

    Paths start from the renewal state ``x = s = 0, v = -g`` unless `v0`
    and `h0` say otherwise.
    """

    params: GravParams
    dt: float = 1e-3
    horizon: float = 1e3
    n_paths: int = 8
    master_seed: int = 0
    burn_in: Optional[float] = None
    sample_stride: float = 1.0
    gap_tol: Optional[float] = None
    a0: Optional[float] = None
    excursion: Optional[float] = None
    scheme: str = "bridge"
    v0: Optional[float] = None
    h0: float = 0.0

    def __post_init__(self):
        g = self.params.g
        set_ = lambda k, v: object.__setattr__(self, k, v)
        if self.burn_in is None:
            set_("burn_in", 100.0 * max(1.0 / g, 1.0))
        if self.gap_tol is None and math.isfinite(self.dt) and self.dt > 0:
            set_("gap_tol", 10.0 * math.sqrt(self.dt))
        if self.a0 is None:
            set_("a0", g + 1.0)
        if self.excursion is None:
            set_("excursion", self.a0 + 2.0)
        if self.v0 is None:
            set_("v0", -g)
        self.validate()

    def validate(self) -> None:
        g = self.params.g
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ValueError("dt must be positive")
        if not (math.isfinite(self.horizon) and self.horizon >= self.dt):
            raise ValueError("horizon must be at least dt")
        if int(self.n_paths) != self.n_paths or self.n_paths < 1:
            raise ValueError("n_paths must be a positive integer")
        if not 0 <= self.burn_in < self.horizon:
            raise ValueError("burn_in must satisfy 0 <= burn_in < horizon")
        if not (self.sample_stride >= self.dt):
            raise ValueError("sample_stride must be at least dt")
        k = self.sample_stride / self.dt
        if abs(k - round(k)) > 1e-6 * k:
            raise ValueError("sample_stride must be a whole number of steps")
        if not self.gap_tol > 0:
            raise ValueError("gap_tol must be positive")
        if not self.a0 > g:
            raise ValueError(f"a0 must exceed g (a0={self.a0}, g={g})")
        if not self.excursion > 0:
            raise ValueError("excursion must be positive")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}")
        if not self.h0 >= 0:
            raise ValueError("h0 must be non-negative")

    @property
    def record_stride(self) -> int:
        return int(round(self.sample_stride / self.dt))

    @property
    def initial(self) -> SystemState:
        return new_state(0.0, self.h0, self.v0)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["g"] = d.pop("params")["g"]
        return d
