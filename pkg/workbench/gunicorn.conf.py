"""
Soliton Workbench - Gunicorn Configuration
Production server settings: gunicorn -c gunicorn.conf.py app:app
"""

import os

bind = f"0.0.0.0:{os.environ.get('PORT', 8080)}"
workers = int(os.environ.get('WEB_CONCURRENCY', 2))
# Verification suites run for tens of seconds
timeout = int(os.environ.get('GUNICORN_TIMEOUT', 120))
loglevel = os.environ.get('LOG_LEVEL', 'INFO').lower()
accesslog = '-'
