import os

os.environ['ERSPIN_LOG_LEVEL'] = 'WARNING'
os.environ['ERSPIN_OUTPUT_DIR'] = 'test-results'
os.environ['ERSPIN_N_JOBS'] = '1'
