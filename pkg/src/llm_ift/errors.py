"""Exception hierarchy shared across the package."""


class IFTError(Exception):
    """Base class for every error raised by llm_ift."""


class ParseError(IFTError):
    def __init__(self, message, path="<string>", line=0, col=0):
        self.path = path
        self.line = line
        self.col = col
        self.message = message
        super().__init__(f"{path}:{line}:{col}: error: {message}")


class UnsupportedConstruct(ParseError):
    """Syntactically recognised Verilog that falls outside the supported subset."""

    def __init__(self, construct, path="<string>", line=0, col=0):
        self.construct = construct
        super().__init__(f"unsupported construct '{construct}'", path, line, col)


class CycleError(IFTError):
    def __init__(self, cycle):
        self.cycle = list(cycle)
        super().__init__("instantiation cycle: " + " -> ".join(self.cycle))


class UnknownModule(IFTError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"unknown module '{name}'")


class UnknownSeed(IFTError):
    pass


class OracleScopeExceeded(IFTError):
    pass


class MissingAncestorFinding(IFTError):
    def __init__(self, module, missing):
        self.module = module
        self.missing = list(missing)
        super().__init__(
            f"cannot analyze '{module}': no finding yet for ancestor(s) {', '.join(self.missing)}"
        )


class IncompleteContext(IFTError):
    def __init__(self, missing):
        self.missing = list(missing)
        super().__init__("context has no finding for: " + ", ".join(self.missing))


class BackendError(IFTError):
    """Anything that prevents a backend from producing a reply."""


class TransportError(BackendError):
    def __init__(self, message, status=None, attempts=1):
        self.status = status
        self.attempts = attempts
        super().__init__(message)


class FixtureMiss(BackendError):
    def __init__(self, key, directory):
        self.key = key
        self.directory = directory
        super().__init__(f"no replay fixture {key}.txt in {directory}")


class SchemaError(IFTError):
    def __init__(self, message, raw):
        self.raw = raw
        self.reason = message
        super().__init__(message)


class PipelineError(IFTError):
    """A module analysis failed after the repair attempt."""

    def __init__(self, module, cause):
        self.module = module
        self.cause = cause
        super().__init__(f"analysis of module '{module}' failed: {cause}")


class ManifestError(IFTError):
    def __init__(self, message, index=None, field=None):
        self.index = index
        self.field = field
        where = ""
        if index is not None:
            where = f"entry {index}"
            if field:
                where += f", field '{field}'"
            where += ": "
        super().__init__(where + message)


class EmptyBenchmark(IFTError):
    pass


class ConfigError(IFTError):
    pass
