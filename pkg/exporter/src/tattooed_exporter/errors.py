class ExporterError(Exception):
    """Base class for exporter failures."""


class ExportError(ExporterError):
    """Checkpoint cannot be exported (unsupported dtype, not a tensor dict)."""


class CheckpointImportError(ExporterError):
    """Container tensors do not fit the template checkpoint."""


class ContainerError(ExporterError):
    """Malformed .tnsr container."""
