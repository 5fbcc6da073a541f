# SPDX-FileCopyrightText: 2023-present Eric T. Johnson
#
# SPDX-License-Identifier: BSD-3-Clause
import sys

from qdsat.cli import main

if __name__ == "__main__":
    sys.exit(main())
