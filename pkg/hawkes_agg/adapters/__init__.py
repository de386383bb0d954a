"""Concrete adapters for files and plots."""

from .record_files import FilesystemRecordStore, records_frame
from .sequence_files import SequenceFiles
from .svg_plots import MatplotlibPlotRenderer, bias_ratio

__all__ = [
    "FilesystemRecordStore",
    "MatplotlibPlotRenderer",
    "SequenceFiles",
    "bias_ratio",
    "records_frame",
]
