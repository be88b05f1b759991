"""
Command line walkthrough: corpus, train, segment, eval
======================================================

Everything the library does is also reachable from the ``splineseg``
command. This script replays a full desk session by calling the CLI
entry point in-process, printing each command as you would type it.
"""

import sys
import tempfile
from pathlib import Path

from splineseg import cli

workdir = Path(tempfile.mkdtemp(prefix="splineseg_cli_"))


def run(*argv):
    # flushes keep stdout and the CLI's stderr in order when piped
    print(f"\n$ splineseg {' '.join(argv)}", flush=True)
    code = cli.main(list(argv))
    sys.stderr.flush()
    print(f"[exit {code}]", flush=True)
    return code


# -- make some data ---------------------------------------------------------

corpus = workdir / "corpus"
run("synth-corpus", "--out", str(corpus), "--seed", "21", "--count", "8",
    "--resolution", "128")

# -- train a model ----------------------------------------------------------
# Training reads every shape file in the directory. phi sets the variance
# share the retained modes must cover.

model = workdir / "blob_model.json"
run("train", "--shapes", str(corpus / "shapes"), "--out", str(model),
    "--phi", "0.95")

# -- segment one image ------------------------------------------------------
# The schedule file written by synth-corpus drives the pyramid. With
# --truth given the overlap score is printed; --manifest records every
# input digest and parameter so the run can be reproduced exactly.

run("segment",
    "--model", str(model),
    "--image", str(corpus / "images" / "image_006.png"),
    "--schedule", str(corpus / "schedule.json"),
    "--out-contour", str(workdir / "contour_006.json"),
    "--out-mask", str(workdir / "mask_006.png"),
    "--truth", str(corpus / "truths" / "truth_006.png"),
    "--manifest", str(workdir / "manifest_006.json"))

# -- evaluate in bulk -------------------------------------------------------
# eval accepts single files or paired directories. Scoring the corpus
# truths against themselves is the identity check: every theta is 1.

run("eval", "--pred", str(corpus / "truths"), "--truth", str(corpus / "truths"))

# and the one real prediction against its truth:
run("eval", "--pred", str(workdir / "mask_006.png"),
    "--truth", str(corpus / "truths" / "truth_006.png"))

# -- error handling ---------------------------------------------------------
# Exit codes are stable: 2 for input problems, 4 when an image does not
# fit the schedule, 3 for numeric failures. Useful in shell scripts.
# A 64px image against the 128px schedule:

tiny = workdir / "tiny"
run("synth-corpus", "--out", str(tiny), "--seed", "3", "--count", "2",
    "--resolution", "64")
run("segment", "--model", str(model),
    "--image", str(tiny / "images" / "image_000.png"),
    "--schedule", str(corpus / "schedule.json"),
    "--out-contour", str(workdir / "x.json"),
    "--out-mask", str(workdir / "x.png"))

# and a model file that does not exist:
run("segment", "--model", str(workdir / "nope.json"),
    "--image", str(corpus / "images" / "image_000.png"),
    "--schedule", str(corpus / "schedule.json"),
    "--out-contour", str(workdir / "x.json"),
    "--out-mask", str(workdir / "x.png"))
