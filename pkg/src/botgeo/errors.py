"""Exception hierarchy.

IngestError covers unreadable or structurally invalid input files (CLI exit
code 3); PipelineError is the base for everything the package raises on
purpose (internal invariant failures map to exit code 4).
"""


class PipelineError(Exception):
    pass


class IngestError(PipelineError):
    pass
