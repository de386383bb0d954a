"""Concrete composition root for the default local workflow."""

from __future__ import annotations

from .adapters.record_files import FilesystemRecordStore
from .adapters.sequence_files import SequenceFiles
from .adapters.svg_plots import MatplotlibPlotRenderer
from .application import HawkesAggApplication
from .diagnostics import DoctorApplication, RuntimeDoctor
from .experiment import ExperimentRunner


def build_default_application() -> HawkesAggApplication:
    return HawkesAggApplication(
        ExperimentRunner(),
        FilesystemRecordStore(),
        MatplotlibPlotRenderer(),
        SequenceFiles(),
    )


def build_default_doctor_application() -> DoctorApplication:
    return DoctorApplication(RuntimeDoctor())
