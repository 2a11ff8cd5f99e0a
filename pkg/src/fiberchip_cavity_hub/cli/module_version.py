# -----------------------------------------------------------------------------
# License:
# Copyright (c) 2025 Fiberchip Cavity Hub developers
#
# Name:        module_version.py
# Purpose:     installed version lookup
#
# -----------------------------------------------------------------------------
from importlib.metadata import version, PackageNotFoundError

_DISTRIBUTION = "fiberchip-cavity-hub"


def get_version():
    """
    get_version - version of the installed distribution, "unknown" when running from a checkout
    """
    try:
        return version(_DISTRIBUTION)
    except PackageNotFoundError:
        return "unknown"
