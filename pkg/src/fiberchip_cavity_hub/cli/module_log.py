# -----------------------------------------------------------------------------
# License:
# Copyright (c) 2025 Fiberchip Cavity Hub developers
#
# The above copyright notice and this permission notice shall be
# included in all copies or substantial portions of the Software.
#
# THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND,
# EXPRESS OR IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES
# OF MERCHANTABILITY, FITNESS FOR A PARTICULAR PURPOSE AND
# NONINFRINGEMENT.
#
#
# Name:        module_log.py
# Purpose:     package-wide logger
#
# -----------------------------------------------------------------------------
import logging

# Configure the logger
logging.basicConfig(format="[%(levelname)-8s] %(message)s")

Logger = logging.getLogger("fiberchip_cavity_hub")
Logger.setLevel(logging.WARNING)


def set_log_level(level):
    """Set the logger level from a logging constant or its name ('DEBUG', 'info', ...)."""
    if isinstance(level, str):
        level = logging.getLevelName(level.upper())
    Logger.setLevel(level)
    Logger.log(level, "Logger set to %s level.", logging.getLevelName(level))

def set_log_debug():
    """Set the logger to debug level."""
    set_log_level(logging.DEBUG)

def set_log_info():
    """Set the logger to info level."""
    set_log_level(logging.INFO)

def set_log_warning():
    """Set the logger to warning level."""
    set_log_level(logging.WARNING)
