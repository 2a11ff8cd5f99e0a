# -----------------------------------------------------------------------------
# License:
# Copyright (c) 2025 Fiberchip Cavity Hub developers
#
# Name:        module_logo.py
# Purpose:     banner printed in debug mode
#
# -----------------------------------------------------------------------------
banner = r"""
          .  .  .   <- atoms falling from the MOT
           .   .
    fiber ||====(   )====|  chip mirror
          ||   w_C=4.6um |
        fiberchip-cavity-hub
    """

def logo():
    """
    logo - Return the banner
    """
    return banner
