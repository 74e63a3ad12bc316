"""
.. module: jointparse
    :platform: Unix

.. version:: $$VERSION$$

"""
### FLASK ###
from flask import Flask
app = Flask(__name__)
app.config.from_object("jointparse.settings")
app.config.from_envvar("JOINTPARSE_SETTINGS", silent=True)


### LOGGING ###
import logging
from logging import Formatter
from logging.handlers import RotatingFileHandler
from logging import StreamHandler
from flask.logging import default_handler

formatter = Formatter('%(asctime)s %(levelname)s: %(message)s '
                      '[in %(pathname)s:%(lineno)d]')

app.logger.removeHandler(default_handler)
app.logger.setLevel(app.config.get('LOG_LEVEL'))

handler = StreamHandler()
handler.setFormatter(formatter)
handler.setLevel(app.config.get('LOG_LEVEL'))
app.logger.addHandler(handler)

if app.config.get('LOG_FILE'):
    file_handler = RotatingFileHandler(app.config.get('LOG_FILE'),
                                       maxBytes=app.config.get('LOG_MAX_BYTES'),
                                       backupCount=app.config.get('LOG_BACKUP_COUNT'))
    file_handler.setFormatter(formatter)
    file_handler.setLevel(app.config.get('LOG_LEVEL'))
    app.logger.addHandler(file_handler)
