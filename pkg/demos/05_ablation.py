"""
Six-cell ablation
=================

Every mode with and without the partial-order loss, sharing one seed so
all cells see the same cameras. The CLI writes the same table with
``consdist ablate``.
"""

import tempfile
from pathlib import Path

from consdist import cli
from consdist.config import RunConfig

with tempfile.TemporaryDirectory() as out:
    path = cli.ablate(RunConfig(), out)
    print(Path(path).read_text())

# %%
# The ordering loss only sees what the encoder sees. The default encoder
# folds front onto back, so it can fix a ring whose similarity does not
# fall off with distance, but it cannot tell a front face on the back of
# the head from the back itself. That is why L_P does not rescue the
# Baseline or PerpNeg rows here.
