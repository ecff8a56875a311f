"""Exception hierarchy shared by the physics modules and the CLI.

Every error carries a short machine code and renders to the same structured
dict that ends up in ``error.json`` next to a failed run.
"""


class SivsimError(Exception):
    code = 'SIVSIM_ERROR'
    exit_code = 1

    def __init__(self, message, **context):
        super().__init__(message)
        self.message = message
        self.context = dict(context)

    def with_context(self, **context):
        self.context.update(context)
        return self

    def to_dict(self):
        data = {'code': self.code, 'message': self.message}
        if self.context:
            data['context'] = {k: _plain(v) for k, v in self.context.items()}
        return data


def _plain(value):
    if isinstance(value, (str, int, float, bool)) or value is None:
        return value
    return str(value)


# configuration / input problems -> exit 2

class ConfigError(SivsimError):
    code = 'CONFIG_ERROR'
    exit_code = 2


class UnknownKeyError(ConfigError):
    code = 'UNKNOWN_KEY'

    def __init__(self, key, suggestion=None, line=None, column=None, section=None):
        where = f" in '{section}'" if section else ''
        msg = f"unknown key '{key}'{where}"
        if suggestion:
            msg += f" (did you mean '{suggestion}'?)"
        if line is not None:
            msg += f" at line {line}, column {column}"
        super().__init__(msg, key=key, suggestion=suggestion, line=line, column=column)
        self.key = key
        self.suggestion = suggestion
        self.line = line
        self.column = column


class UnitError(ConfigError):
    code = 'UNIT_ERROR'


class ParameterError(ConfigError, ValueError):
    code = 'PARAMETER_ERROR'


class ArtifactError(SivsimError):
    code = 'ARTIFACT_ERROR'
    exit_code = 2


# physics problems -> exit 1

class PhysicsError(SivsimError):
    code = 'PHYSICS_ERROR'
    exit_code = 1


class DimensionMismatchError(PhysicsError):
    code = 'DIMENSION_MISMATCH'


class ConvergenceError(PhysicsError):
    code = 'NOT_CONVERGED'


class DegenerateSteadyStateError(PhysicsError):
    code = 'DEGENERATE_STEADY_STATE'


class NonStationaryError(PhysicsError):
    code = 'NON_STATIONARY'


class NonConvergentIntegralError(PhysicsError):
    code = 'NON_CONVERGENT_INTEGRAL'


class FitError(PhysicsError):
    code = 'FIT_FAILED'
