import sys
from pathlib import Path

# src layout: make the package importable when running pytest from the
# repository without an editable install
sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))
