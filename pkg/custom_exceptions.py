# custom_exceptions.py
# Date: 2026-10-19
# Version: 1.0.0

import logging

logger = logging.getLogger(__name__)

class KapLabError(Exception):
    """
    Base exception for the lab. Every subclass carries the process exit
    code the command-line front end reports for it.
    """
    exit_code = 1

    def __init__(self, message="An error occurred in the KAP lab."):
        self.message = message
        logger.warning(f"{type(self).__name__}: {self.message}")
        super().__init__(self.message)

class ParameterError(KapLabError):
    """
    Raised when an operation receives parameters outside its domain
    (p outside (0,1), k < 3, n < k, nonpositive B or s, ...).
    """
    exit_code = 1

class ResidueIndexError(ParameterError, IndexError):
    """
    Raised when a residue index does not lie in Z/nZ.
    """
    def __init__(self, t, n):
        super().__init__(f"Residue {t} is outside Z/{n}Z.")

class UnsupportedParametersError(ParameterError):
    """
    Raised when a kernel is asked for parameters it does not support,
    e.g. the convolution counter with even n or k != 3.
    """

class MultilinearityError(ParameterError):
    """
    Raised when gcd(n, (k-1)!) != 1 and the requested operation needs the
    progression entries to be distinct residues.
    """
    def __init__(self, n, k):
        message = (f"gcd({n}, ({k}-1)!) != 1: progressions may repeat residues, "
                   f"so the degree decomposition is not multilinear.")
        super().__init__(message)

class RegimeError(ParameterError):
    """
    Raised when the sandwich inclusions are requested outside the
    parameter regime in which they are claimed.
    """

class ResourceGuardError(KapLabError):
    """
    Raised when a Monte Carlo run would exceed the configured work budget.
    """
    exit_code = 2

class SelftestFailure(KapLabError):
    """
    Raised when one or more invariant checks fail during selftest.
    """
    exit_code = 3

    def __init__(self, failed_checks):
        self.failed_checks = list(failed_checks)
        message = f"{len(self.failed_checks)} selftest check(s) failed: {', '.join(self.failed_checks)}"
        super().__init__(message)

class NumericalError(KapLabError):
    """
    Custom exception for internal exactness or accuracy checks that fail
    (rounding margin of an FFT convolution, sigma brackets, ...).
    """
    exit_code = 1

    def __init__(self, message="An internal numerical check failed."):
        self.message = message
        logger.error(f"NumericalError: {self.message}")
        Exception.__init__(self, self.message)
