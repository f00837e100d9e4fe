"""Data models for safe-admittance run outputs."""

import re
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from safe_admittance.errors import LogFormatError


@dataclass
class TrajectoryLog:
    """Time-indexed simulation output held as a DataFrame with a fixed column order."""

    frame: pd.DataFrame
    scenario: str = ""
    controller: str = "proposed"

    @classmethod
    def from_array(
        cls,
        columns: list[str],
        data: np.ndarray,
        scenario: str = "",
        controller: str = "proposed",
    ) -> "TrajectoryLog":
        data = np.atleast_2d(np.asarray(data, dtype=float))
        if data.size and data.shape[1] != len(columns):
            raise LogFormatError(f"{data.shape[1]} data columns for {len(columns)} header names")
        return cls(pd.DataFrame(data, columns=columns), scenario, controller)

    def __len__(self) -> int:
        return len(self.frame)

    @property
    def columns(self) -> list[str]:
        return list(self.frame.columns)

    @property
    def data(self) -> np.ndarray:
        return self.frame.to_numpy(dtype=float)

    def has(self, name: str) -> bool:
        return name in self.frame.columns

    def column(self, name: str) -> np.ndarray:
        if not self.has(name):
            raise LogFormatError(f"trajectory log has no column '{name}'")
        return self.frame[name].to_numpy(dtype=float)

    def block(self, prefix: str) -> np.ndarray:
        """All columns named ``<prefix>_<n>`` ordered by n, as an (N, k) array."""
        block = self.frame.filter(regex=rf"^{re.escape(prefix)}_\d+$")
        if not len(block.columns):
            raise LogFormatError(f"trajectory log has no '{prefix}_<n>' columns")
        order = sorted(block.columns, key=lambda name: int(name.rsplit("_", 1)[1]))
        return block[order].to_numpy(dtype=float)

    @property
    def t(self) -> np.ndarray:
        return self.column("t")

    @property
    def dim(self) -> int:
        return self.block("xi").shape[1]

    @property
    def dt(self) -> float:
        t = self.t
        return float(t[1] - t[0]) if len(t) > 1 else 0.0


@dataclass
class ErrorIndices:
    """Integral error indices of one error signal."""

    ise: float = 0.0
    iae: float = 0.0
    itse: float = 0.0
    itae: float = 0.0


@dataclass
class MetricsRecord:
    """Error indices, control effort and switching summary of one run."""

    channel: str
    indices: ErrorIndices
    per_axis: list[ErrorIndices] = field(default_factory=list)
    summed: ErrorIndices = field(default_factory=ErrorIndices)
    rms_u: float = 0.0
    tv_u: float = 0.0
    switches: int = 0

    def as_row(self, label: str = "") -> dict[str, float | int | str]:
        return {
            "label": label,
            "channel": self.channel,
            "ise": self.indices.ise,
            "iae": self.indices.iae,
            "itse": self.indices.itse,
            "itae": self.indices.itae,
            "rms_u": self.rms_u,
            "tv_u": self.tv_u,
            "switches": self.switches,
        }


@dataclass
class SafetyReport:
    """Constraint satisfaction of the actual pose over one run."""

    max_h: np.ndarray
    first_violation: float | None
    switches: int
    time_in_safety: float
    tolerance: float = 1e-3
    max_phi: float | None = None

    @property
    def violated(self) -> bool:
        return self.first_violation is not None

    def as_pairs(self) -> list[tuple[str, str]]:
        pairs = [(f"max_h_{i + 1}", f"{h:.17g}") for i, h in enumerate(self.max_h)]
        first = "none" if self.first_violation is None else f"{self.first_violation:.17g}"
        pairs += [
            ("first_violation", first),
            ("switch_count", str(self.switches)),
            ("time_in_p2", f"{self.time_in_safety:.17g}"),
            ("tolerance", f"{self.tolerance:g}"),
            ("violated", str(self.violated).lower()),
        ]
        if self.max_phi is not None:
            pairs.append(("max_phi", f"{self.max_phi:.17g}"))
        return pairs
