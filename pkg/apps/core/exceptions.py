"""
Error hierarchy shared by every simulator app.

Each error carries a category so the command line can map failures to a
stable exit status: configuration mistakes, numerical trouble, and protocol
violations inside a simulation.
"""

CONFIG = 'config'
NUMERIC = 'numeric'
PROTOCOL = 'protocol'

EXIT_CODES = {
    CONFIG: 2,
    NUMERIC: 3,
    PROTOCOL: 4,
}

VERIFICATION_FAILED_EXIT_CODE = 1


class DocoError(Exception):
    """Base class for all simulator errors"""
    category = CONFIG

    @property
    def exit_code(self):
        return EXIT_CODES[self.category]


# Configuration errors

class ConfigurationError(DocoError):
    category = CONFIG


class DisconnectedGraph(ConfigurationError):
    pass


class SelfLoop(ConfigurationError):
    pass


class BudgetTooSmall(ConfigurationError):
    pass


class InvalidPartition(ConfigurationError):
    pass


class OrphanNode(ConfigurationError):
    pass


class MissingMetadata(ConfigurationError):
    pass


class DomainViolation(ConfigurationError):
    pass


# Numerical errors

class NumericalInstability(DocoError):
    category = NUMERIC


class NormExceeded(DocoError):
    category = NUMERIC


# Protocol violations

class ProtocolViolation(DocoError):
    category = PROTOCOL


class BudgetExceeded(ProtocolViolation):
    pass


class DuplicateGradient(ProtocolViolation):
    pass


class NoCollisionFound(ProtocolViolation):
    pass
