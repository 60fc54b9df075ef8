from concurrent.futures import ProcessPoolExecutor
from typing import Any, Callable


def _run_one(func: Callable, task: Any) -> dict:
    try:
        return {
            "status": "SUCCESS",
            "result": func(task),
            "error": ""
        }
    except Exception as e:
        return {
            "status": "FAILURE",
            "result": None,
            "error": f"{type(e).__name__}: {e}"
        }


def run_tasks(func: Callable, tasks: list, workers: int = 1) -> list[dict]:
    """
    Exécute func sur chaque tâche, en parallèle si workers > 1.

    Args:
        func: Fonction de niveau module (picklable)
        tasks: Liste des arguments, un par appel
        workers: Nombre de processus

    Returns:
        Liste de dicts, dans l'ordre des tâches, avec:
        - status: "SUCCESS" ou "FAILURE"
        - result: Valeur retournée (ou None)
        - error: Message d'erreur (str)
    """
    if not tasks:
        return []

    if workers <= 1 or len(tasks) == 1:
        return [_run_one(func, task) for task in tasks]

    with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
        futures = [pool.submit(_run_one, func, task) for task in tasks]
        return [future.result() for future in futures]
