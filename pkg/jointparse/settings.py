# Default configuration, loaded into app.config by jointparse/__init__.py.
# Point JOINTPARSE_SETTINGS at a python file to override any of these
# (see env-config/config-local.py). Model hyperparameters are command line
# flags, not settings.

LOG_LEVEL = "INFO"
LOG_FILE = None
LOG_MAX_BYTES = 10000000
LOG_BACKUP_COUNT = 100

# Sentences are decoded in parallel over a read-only model.
PREDICT_WORKERS = 1
DEV_EVAL_WORKERS = 1

# Appended to the model path when train is not given --log.
METRIC_LOG_SUFFIX = '.log.tsv'
