# This file is part of ts_cherry.
#
# Developed for the Vera C. Rubin Observatory Telescope and Site Systems.
# This product includes software developed by the LSST Project
# (https://www.lsst.org).
# See the COPYRIGHT file at the top-level directory of this distribution
# for details of code ownership.
#
# This program is free software: you can redistribute it and/or modify
# it under the terms of the GNU General Public License as published by
# the Free Software Foundation, either version 3 of the License, or
# (at your option) any later version.
#
# This program is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU General Public License for more details.

"""Sphinx configuration file for an LSST stack package.

This configuration only affects single-package Sphinx documentation builds.
"""

from typing import TYPE_CHECKING

from documenteer.conf.pipelinespkg import *  # noqa

# This "if" works around a mypy problem with implicit namespaces.
# The symptom is:
# /opt/.../miniconda3-py38.../python/lsst/__init__.py:14:
#   error: Cannot determine type of "__path__"
if not TYPE_CHECKING:
    import lsst.ts.cherry  # noqa

project = "ts_cherry"
html_theme_options["logotext"] = project  # type: ignore # noqa
html_title = project
html_short_title = project

intersphinx_mapping["mpmath"] = ("https://mpmath.org/doc/current", None)  # type: ignore # noqa
