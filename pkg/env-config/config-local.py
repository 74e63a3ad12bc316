# Insert any config items for local development here.
# Point JOINTPARSE_SETTINGS at this file to have it loaded by jointparse/__init__.py

LOG_LEVEL = "DEBUG"
LOG_FILE = "jointparse-local.log"
LOG_MAX_BYTES = 10000000
LOG_BACKUP_COUNT = 5

PREDICT_WORKERS = 4
DEV_EVAL_WORKERS = 4
METRIC_LOG_SUFFIX = '.log.tsv'
