# Insert any config items here.
# Loaded through JOINTPARSE_SETTINGS on training hosts.

LOG_LEVEL = "INFO"
LOG_FILE = "/var/log/jointparse/jointparse-deploy.log"
LOG_MAX_BYTES = 10000000
LOG_BACKUP_COUNT = 100

PREDICT_WORKERS = 8
DEV_EVAL_WORKERS = 8
METRIC_LOG_SUFFIX = '.log.tsv'
