# Recherche approximative de noms (algorithmes, options, clés de configuration)

import heapq
from difflib import SequenceMatcher
from typing import Callable, Iterable, Optional

def ratio(a: str, b: str) -> int:
    """Similarité entre deux chaînes, de 0 à 100"""
    return int(round(100 * SequenceMatcher(None, a.lower(), b.lower()).ratio()))

def extract(query: str, choices: Iterable[str], *, scorer: Callable[[str, str], int] = ratio, score_cutoff: int = 0, limit: Optional[int] = 3) -> list[tuple[str, int]]:
    """Renvoie les choix les plus proches de la requête, du plus au moins similaire

    :param query: Texte recherché
    :param choices: Choix possibles
    :param scorer: Fonction de similarité, par défaut `ratio`
    :param score_cutoff: Score minimal pour être retenu
    :param limit: Nombre maximal de résultats (None = tous)
    :return: Liste de (choix, score)
    """
    scored = ((c, scorer(query, c)) for c in choices)
    matches = [m for m in scored if m[1] >= score_cutoff]
    if limit is not None:
        return heapq.nlargest(limit, matches, key=lambda m: m[1])
    return sorted(matches, key=lambda m: m[1], reverse=True)

def suggest(query: str, choices: Iterable[str], *, score_cutoff: int = 50) -> Optional[str]:
    """Renvoie le choix le plus proche de la requête, ou None si aucun n'est assez similaire"""
    matches = extract(query, choices, score_cutoff=score_cutoff, limit=1)
    return matches[0][0] if matches else None
