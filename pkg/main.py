#!/usr/bin/env python3
"""
Point d'entrée principal de swayopt : profils bang-off-bang à temps minimal pour ponts roulants.

Usage:
    python main.py design --model plant.json --xf 400 --closed-form
    python main.py sweep --model plant.json --xf 50 --robust
    python main.py transitions --model plant.json --x-max 700
    python main.py --repro fig4
"""

import argparse
import json
import sys
from pathlib import Path

from colorama import Fore, Style
from colorama import init as colorama_init
from dotenv import load_dotenv

# Charger les variables d'environnement
load_dotenv()

from src.cli.runner import COMMANDS, REPRO_FIGURES, RunConfig, SwayoptRunner
from src.utils.config import configure_logging, load_settings
from src.utils.errors import DomainError, SwayoptError


class _Parser(argparse.ArgumentParser):
    """Les erreurs de syntaxe deviennent des DomainError (code de sortie 3)."""

    def error(self, message):
        raise DomainError(f"{self.prog}: {message}")


def _common_options() -> argparse.ArgumentParser:
    # SUPPRESS : une option absente ne masque pas celle donnée avant la sous-commande
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--model", type=Path, help="PlantSpec JSON (fréquences en rad/s)")
    common.add_argument("--profile", type=Path, help="Profil JSON existant (design: certificat, sweep, simulate)")
    common.add_argument("--output", type=Path, help="Répertoire des artefacts (défaut: results)")
    common.add_argument("--hz", action="store_true", help="Fréquences du modèle en Hz")
    common.add_argument("--xf", dest="x_f", type=float, help="Déplacement final x_f en mm (remplace celui du modèle)")
    common.add_argument("--robust", action="store_true", help="Conception robuste (zéros doubles aux pôles)")
    common.add_argument("--max-switches", dest="max_switches", type=int, help="Nombre maximal de commutations (défaut: 8)")
    common.add_argument("--closed-form", dest="closed_form", action="store_true", help="Solution analytique (mode unique non amorti)")
    common.add_argument("--over", choices=["omega", "xf"], help="sweep: fréquence (défaut) ou déplacement")
    common.add_argument("--x-min", dest="x_min", type=float, help="Borne basse du balayage en x_f (mm)")
    common.add_argument("--x-max", dest="x_max", type=float, help="Borne haute du balayage en x_f (mm)")
    common.add_argument("--points", type=int, help="Nombre de points de grille")
    common.add_argument("--ratio-min", dest="ratio_min", type=float, help="Rapport de fréquence minimal (défaut: 0.7)")
    common.add_argument("--ratio-max", dest="ratio_max", type=float, help="Rapport de fréquence maximal (défaut: 1.3)")
    common.add_argument("--mode", type=int, help="Indice du mode perturbé (défaut: tous)")
    common.add_argument("--window", type=float, nargs=4, metavar=("RE_MIN", "RE_MAX", "IM_MIN", "IM_MAX"), help="Fenêtre de recherche des zéros (rad/s)")
    common.add_argument("--dt", type=float, help="simulate: pas de la grille uniforme (s)")
    common.add_argument("--t-end", dest="t_end", type=float, help="simulate: horizon au-delà de t_f (s)")
    common.add_argument("--augmented", action="store_true", help="simulate: états de sensibilité inclus")
    common.add_argument("--threads", type=int, help="Taille du pool de processus (remplace SWAYOPT_THREADS)")
    common.add_argument("--verbose", action="store_true", help="Affichage détaillé (mode debug)")
    return common


def parse_arguments(argv=None):
    """Parse les arguments de la ligne de commande."""
    common = _common_options()
    parser = _Parser(
        description="Profils de vitesse bang-off-bang à temps minimal, robustes ou non",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        parents=[common],
        epilog="""
Exemples d'utilisation:
  %(prog)s design --model plant.json --xf 400 --closed-form
  %(prog)s design --model plant.json --xf 100 --robust
  %(prog)s sweep --model plant.json --over xf --x-max 700 --points 200
  %(prog)s simulate --model plant.json --dt 0.001 --augmented
  %(prog)s --repro fig6 --xf 50

Codes de sortie: 0 ok, 2 infaisable, 3 entrée invalide, 4 erreur interne.
Configuration (.env): SWAYOPT_THREADS, SWAYOPT_LOG_FILE, SWAYOPT_LOG_LEVEL
        """,
    )
    parser.add_argument("--repro", choices=REPRO_FIGURES, default=None, help="Données d'une figure de référence")
    subparsers = parser.add_subparsers(dest="command")
    helps = {
        "design": "Conception d'un profil (JSON)",
        "sweep": "Balayage en fréquence ou en déplacement (CSV)",
        "loci": "Lieux des zéros du filtre (CSV)",
        "transitions": "Déplacements de fusion/naissance de commutations (CSV)",
        "simulate": "Trajectoire exacte (CSV)",
        "zones": "Balayage des zones analytiques (CSV)",
    }
    for name in COMMANDS:
        subparsers.add_parser(name, parents=[common], help=helps[name])
    return parser.parse_args(argv)


def config_from_args(args) -> RunConfig:
    fields = {name: value for name, value in vars(args).items() if name in RunConfig.__dataclass_fields__}
    if "window" in fields:
        fields["window"] = tuple(fields["window"])
    return RunConfig(**fields)


def print_banner():
    """Prints the application banner."""
    print("\n" + "=" * 70)
    print("SWAYOPT - MINIMUM-TIME ANTI-SWAY VELOCITY PROFILES")
    print("=" * 70)
    print("Design -> Exact simulation -> Costate certificate -> Filter zeros")
    print("=" * 70 + "\n")


def main(argv=None):
    """Fonction principale."""
    colorama_init()
    verbose = False
    try:
        args = parse_arguments(argv)
        verbose = getattr(args, "verbose", False)
        print_banner()
        settings = load_settings(getattr(args, "threads", None))
        configure_logging(settings, verbose)
        SwayoptRunner(config_from_args(args), settings).run()
        return 0

    except SwayoptError as e:
        print(json.dumps(e.to_dict(), default=float), file=sys.stderr)
        print(f"{Fore.RED}❌ {type(e).__name__}: {e.message}{Style.RESET_ALL}")
        return e.exit_code

    except KeyboardInterrupt:
        print("\n\n⚠️  Interruption utilisateur (Ctrl+C)")
        return 130

    except Exception as e:
        payload = {"error": type(e).__name__, "message": str(e), "exit_code": 4}
        print(json.dumps(payload), file=sys.stderr)
        print(f"\n{Fore.RED}❌ ERREUR CRITIQUE: {e}{Style.RESET_ALL}")
        if verbose:
            import traceback
            print("\n📋 Traceback complet:")
            traceback.print_exc()
        else:
            print("\n💡 Utilisez --verbose pour voir le traceback complet")
        return 4


if __name__ == "__main__":
    sys.exit(main())
