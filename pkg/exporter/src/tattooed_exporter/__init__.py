"""Checkpoint converters for the .tnsr tensor container."""

from .convert import ExportManifest, export, import_back
from .errors import CheckpointImportError, ContainerError, ExporterError, ExportError

__version__ = "0.1.0"
