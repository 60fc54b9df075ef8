import json
from pathlib import Path

import pandas as pd

from src.model.plant import PlantSpec
from src.model.tdfilter import BangOffBangProfile
from src.utils.errors import ContractViolation, DomainError

FLOAT_FORMAT = "%.12g"


def read_json(file_path: str | Path) -> dict:
    path = Path(file_path)
    if not path.is_file():
        raise DomainError(f"file not found: {path}", path=str(path))
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise DomainError(f"{path} is not valid JSON: {e}", path=str(path)) from None


def write_json(file_path: str | Path, data: dict) -> Path:
    path = Path(file_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2, default=float) + "\n", encoding="utf-8")
    return path


def write_csv(file_path: str | Path, frame: pd.DataFrame) -> Path:
    """Tableau CSV sans index, flottants à 12 chiffres significatifs (sorties rejouables à l'octet près)."""
    path = Path(file_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return path


def load_plant(file_path: str | Path, hz: bool = False, x_f: float | None = None) -> PlantSpec:
    data = read_json(file_path)
    if not isinstance(data, dict) or not isinstance(data.get("modes"), list):
        raise DomainError(f"{file_path}: plant JSON needs a 'modes' list")
    if x_f is not None:
        data = {**data, "x_f_mm": x_f}
    return PlantSpec.from_dict(data, hz=hz)


def load_profile(file_path: str | Path) -> BangOffBangProfile:
    data = read_json(file_path)
    # un DesignResult sérialisé contient le profil sous la clé "profile"
    if isinstance(data, dict) and "profile" in data:
        data = data["profile"]
    if not isinstance(data, dict):
        raise ContractViolation(f"{file_path}: profile JSON must be an object")
    return BangOffBangProfile.from_dict(data)
