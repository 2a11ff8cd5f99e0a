# ---------------------------------------------------------------------------
# License:
# Copyright (c) 2025 Fiberchip Cavity Hub developers
#
# Name:        module_prologo.py
# Purpose:     common start/end of every command
#
# ---------------------------------------------------------------------------
import os
import sys
import logging
from ..cli.module_log import Logger
from ..cli.module_version import get_version
from ..cli.module_logo import logo
from .filesystem import now, total_seconds_from


def prologo(command, version=False, verbose=False, debug=False):
    """
    prologo - set the log level, print the banner and handle --version
    """
    t = now()

    if verbose:
        Logger.setLevel(logging.INFO)
    if debug:
        Logger.setLevel(logging.DEBUG)

    if debug:
        print(logo(), file=sys.stderr)

    if version:
        print(f"Version: {get_version()}")
        sys.exit(0)

    Logger.debug(f"Starting {command} (pid {os.getpid()})...")
    return t


def epilogo(t, command):
    """
    epilogo - log the elapsed time
    """
    Logger.info(f"{command} completed in {total_seconds_from(t):.2f}s.")
