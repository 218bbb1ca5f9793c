from pathlib import Path

import yaml

__version__ = "0.1.0"

CONFIG_PATH = Path(__file__).resolve().parent.parent / "configs" / "config.yml"

with CONFIG_PATH.open('r') as stream:
    try:
        config = yaml.safe_load(stream)
    except yaml.YAMLError as exc:
        print(exc)
        raise
