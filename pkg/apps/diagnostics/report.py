"""
DiagnosticsReport: the report.json document written by ``diagnose`` and ``run_experiment``.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from apps.core.exceptions import InvalidParameterError
from apps.core.serializers import validate_document
from apps.core.utils import json_compatible

from .serializers import DiagnosticsReportSerializer

REPORT_VERSION = "1"
IDENTITY_TOL = 1e-10


@dataclass
class DiagnosticsReport:
    metadata: dict = field(default_factory=dict)
    estimates: list = field(default_factory=list)
    ksd: list = field(default_factory=list)
    mse: list = field(default_factory=list)
    bias_sweeps: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def add_mse_tables(self, tables):
        self.mse.extend(table.to_dict() for table in tables)

    def add_bias_sweep(self, sweep):
        self.bias_sweeps.append(sweep.to_dict())

    def mse_identity_residual(self):
        """Largest |MSE - bias^2 - variance| over all MSE tables."""
        residual = 0.0
        for table in self.mse:
            bias = np.asarray(table["bias"], dtype=float)
            variance = np.asarray(table["variance"], dtype=float)
            mse = np.asarray(table["mse"], dtype=float)
            finite = np.isfinite(mse)
            if finite.any():
                residual = max(residual, float(np.max(np.abs(mse - bias**2 - variance)[finite])))
        return residual

    def to_dict(self):
        document = {
            "version": REPORT_VERSION,
            "metadata": self.metadata,
            "estimates": self.estimates,
            "ksd": self.ksd,
            "mse": self.mse,
            "bias_sweeps": self.bias_sweeps,
            "extra": self.extra,
        }
        return json_compatible(DiagnosticsReportSerializer(json_compatible(document)).data)

    def write(self, path):
        if self.mse_identity_residual() > IDENTITY_TOL:
            raise InvalidParameterError("MSE table violates MSE = bias^2 + variance")
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as handle:
            json.dump(self.to_dict(), handle, indent=2, sort_keys=True, allow_nan=False)
            handle.write("\n")
        return path

    @classmethod
    def from_dict(cls, document):
        data = validate_document(DiagnosticsReportSerializer, document)
        return cls(
            metadata=dict(data["metadata"]),
            estimates=[dict(item) for item in data["estimates"]],
            ksd=[dict(item) for item in data["ksd"]],
            mse=[dict(item) for item in data["mse"]],
            bias_sweeps=[dict(item) for item in data["bias_sweeps"]],
            extra=dict(data["extra"]),
        )

    @classmethod
    def read(cls, path):
        with open(path, encoding="utf-8") as handle:
            return cls.from_dict(json.load(handle))
