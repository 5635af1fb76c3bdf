from pathlib import Path


DATA_FOLDER = Path(__file__).parent / 'data'
