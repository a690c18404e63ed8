import os
import subprocess
import sys

from dotenv import load_dotenv

# The solution configuration is a dictionary which contains a tuple
# The first element of the tuple is the runner module
# The second element of the tuple is the run directory under the output root

soln_config = {
    "search": ("darts_plus.runner.cli", "search"),
    "eval-genotype": ("darts_plus.runner.cli", "eval"),
    "lemma-train": ("darts_plus.runner.cli", "lemma_train"),
    "lemma-sigma0": ("darts_plus.runner.cli", "lemma_sigma0"),
    "lemma-grid": ("darts_plus.runner.cli", "lemma_grid"),
}


def _run(command: str) -> None:
    module, run_name = soln_config[command]
    subprocess.run(
        [
            sys.executable,
            "-m",
            module,
            command,
            *compose_shared_flags(run_name),
            *sys.argv[1:],
        ],
        check=True,
    )


def start_search() -> None:
    """Run an architecture search."""
    _run("search")


def start_eval_genotype() -> None:
    """Train and score a discrete genotype."""
    _run("eval-genotype")


def start_lemma_train() -> None:
    """Train the toy lemma model."""
    _run("lemma-train")


def start_lemma_sigma0() -> None:
    """Compute the sigma0(r) curve."""
    _run("lemma-sigma0")


def start_lemma_grid() -> None:
    """Sweep the (r, sigma_v) phase grid."""
    _run("lemma-grid")


def compose_shared_flags(run_name: str) -> list[str]:
    """Compose shared command-line flags for the runner."""
    load_dotenv()
    out_root = os.environ.get("DARTS_PLUS_OUT", "runs")
    return ["--out", os.path.join(out_root, run_name)]
