import os
import sys

# `src` est un paquet de premier niveau : la racine du dépôt doit être importable
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
