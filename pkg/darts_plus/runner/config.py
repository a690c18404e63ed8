OUT_ENV = "DARTS_PLUS_OUT"
DEF_OUT_DIR = "runs"

CMD_SEARCH = "search"
CMD_EVAL = "eval-genotype"
CMD_LEMMA_TRAIN = "lemma-train"
CMD_LEMMA_SIGMA0 = "lemma-sigma0"
CMD_LEMMA_GRID = "lemma-grid"
COMMANDS = (CMD_SEARCH, CMD_EVAL, CMD_LEMMA_TRAIN, CMD_LEMMA_SIGMA0, CMD_LEMMA_GRID)

CONFIG_ECHO_FILE = "config.yaml"
RESULT_FILE = "result.json"
METRICS_FILE = "metrics.csv"
EPOCHS_FILE = "epochs.jsonl"
GENOTYPE_FILE = "genotype.json"
GENOTYPE_DOT_FILE = "genotype.dot"
STOP_REPORT_FILE = "stop_report.json"
EVAL_FILE = "eval.json"
LEMMA_TRAJECTORY_FILE = "lemma_trajectory.csv"
LEMMA_DIAGNOSTICS_FILE = "lemma_diagnostics.json"
SIGMA0_FILE = "sigma0.csv"
SIGMA0_SENSITIVITY_FILE = "sigma0_sensitivity.csv"
LEMMA_GRID_FILE = "lemma_grid.csv"

METRICS_SCHEMA_VERSION = 1
METRICS_COLUMNS = [
    "epoch",
    "train_loss",
    "train_acc",
    "val_loss",
    "val_acc",
    "skip_count_normal",
    "skip_count_reduction",
    "stop_flag",
]
TRAJECTORY_COLUMNS = ["epoch", "alpha0", "w00", "w01", "w10", "w11", "wr0", "wr1", "train_loss", "val_loss"]
SIGMA0_COLUMNS = ["r", "sigma0"]
SENSITIVITY_COLUMNS = ["r", "alpha0", "sigma0"]
GRID_COLUMNS = ["r", "sigma_v", "sigma0", "g", "grad_alpha0", "phase_agrees"]

# significant digits for floats in CSV files
CSV_FLOAT_DIGITS = 12
