import json
import os
import uuid
from datetime import datetime
from enum import Enum

from src.utils.config import DEFAULT_LOG_FILE


def log_file_path() -> str:
    # Chemin du fichier de logs (surchargeable pour les tests)
    return os.getenv("SWAYOPT_LOG_FILE", DEFAULT_LOG_FILE)


class ActionType(str, Enum):
    """
    Énumération des types d'actions journalisées, pour standardiser l'analyse des runs.
    """
    DESIGN = "PROFILE_DESIGN"     # Conception d'un profil (NLP ou forme close)
    SIMULATION = "SIMULATION"     # Propagation exacte d'une trajectoire
    SWEEP = "SWEEP"               # Balayage en x_f ou en fréquence
    ANALYSIS = "ANALYSIS"         # Zéros, transitions, coïncidences
    VALIDATION = "VALIDATION"     # Certificats PMP / robustesse


def log_run(component: str, solver: str, action: ActionType, details: dict, status: str):
    """
    Enregistre une exécution dans le journal JSON des runs.

    Args:
        component (str): Composant appelant (ex: "cli.design", "designer").
        solver (str): Méthode numérique utilisée (ex: "slsqp+kkt", "closed_form").
        action (ActionType): Le type d'action effectué (utiliser l'Enum ActionType).
        details (dict): Détails du run. DESIGN, SWEEP et VALIDATION exigent 'inputs' et 'outputs'.
        status (str): "SUCCESS", "FAILURE" ou "PARTIAL".

    Raises:
        ValueError: Si les champs obligatoires manquent dans 'details' ou si l'action est invalide.
    """

    # --- 1. VALIDATION DU TYPE D'ACTION ---
    valid_actions = [a.value for a in ActionType]
    if isinstance(action, ActionType):
        action_str = action.value
    elif action in valid_actions:
        action_str = action
    else:
        raise ValueError(f"[ERREUR] Action invalide : '{action}'. Utilisez la classe ActionType (ex: ActionType.DESIGN).")

    # --- 2. VALIDATION STRICTE DES DONNÉES ---
    # Un run de conception ou de balayage n'est rejouable qu'avec ses entrées et sorties.
    if action_str in [ActionType.DESIGN.value, ActionType.SWEEP.value, ActionType.VALIDATION.value]:
        required_keys = ["inputs", "outputs"]
        missing_keys = [key for key in required_keys if key not in details]

        if missing_keys:
            raise ValueError(
                f"[ERREUR] Erreur de Logging (Composant: {component}) : "
                f"Les champs {missing_keys} sont manquants dans le dictionnaire 'details'."
            )

    # --- 3. PRÉPARATION DE L'ENTRÉE ---
    log_file = log_file_path()
    log_dir = os.path.dirname(log_file)
    if log_dir:
        os.makedirs(log_dir, exist_ok=True)

    entry = {
        "id": str(uuid.uuid4()),
        "timestamp": datetime.now().isoformat(),
        "component": component,
        "solver": solver,
        "action": action_str,
        "details": details,
        "status": status
    }

    # --- 4. LECTURE & ÉCRITURE ROBUSTE ---
    data = []
    if os.path.exists(log_file):
        try:
            with open(log_file, 'r', encoding='utf-8') as f:
                content = f.read().strip()
                if content:
                    data = json.loads(content)
        except json.JSONDecodeError:
            print(f"[ATTENTION] Le fichier de logs {log_file} était corrompu. Une nouvelle liste a été créée.")
            data = []

    data.append(entry)

    with open(log_file, 'w', encoding='utf-8') as f:
        json.dump(data, f, indent=4, ensure_ascii=False, default=float)
    return entry
