# Fonctions transverses d'aide à l'affichage console

from typing import Sequence

import numpy as np

# Outils d'affichage -----------------------------------------

def bargraph(value: int | float, total: int | float, *, lenght: int = 20, use_half_bar: bool = True, display_percent: bool = False) -> str:
    """Retourne un diagramme en barres

    :param value: Valeur à représenter
    :param total: Valeur maximale possible
    :param lenght: Longueur du diagramme, par défaut 20 caractères
    :param use_half_bar: S'il faut utiliser des demi-barres pour les valeurs intermédiaires, par défaut True
    :param display_percent: S'il faut afficher le pourcentage en fin de barre, par défaut False
    :return: str
    """
    if total == 0:
        return ' '
    percent = (value / total) * 100
    nb_bars = percent / (100 / lenght)
    bars = '█' * int(nb_bars)
    if (nb_bars % 1) >= 0.5 and use_half_bar:
        bars += '▌'
    if display_percent:
        bars += f' {round(percent)}%'
    return bars

def text_histogram(counts: Sequence[int], edges: Sequence[float], *, lenght: int = 20) -> str:
    """Retourne un histogramme texte, une ligne par classe

    :param counts: Effectifs des classes
    :param edges: Bornes des classes (une de plus que d'effectifs)
    :param lenght: Longueur maximale des barres
    :return: str
    """
    peak = max(counts) if len(counts) else 0
    lines = []
    for count, low, high in zip(counts, edges[:-1], edges[1:]):
        lines.append(f"{format_percent(low):>9} – {format_percent(high):<9} {bargraph(count, peak, lenght=lenght):<{lenght + 1}} {count}")
    return '\n'.join(lines)

# Nombres et durées -------------------------------------------

def format_percent(value: float | None, digits: int = 3) -> str:
    """Retourne une valeur relative en pourcentage (ex. 0.0123 → 1.23%), '—' si absente"""
    if value is None or not np.isfinite(value):
        return '—'
    return f"{value * 100:.{digits}g}%"

def humanize_duration(seconds: float) -> str:
    """Retourne une durée lisible (ex. 1 min 12 s)

    :param seconds: Durée en secondes
    :return: str
    """
    if seconds < 1:
        return f"{round(seconds * 1000)} ms"
    if seconds < 60:
        return f"{seconds:.1f} s"
    minutes, seconds = divmod(round(seconds), 60)
    if minutes < 60:
        return f"{minutes} min {seconds} s"
    hours, minutes = divmod(minutes, 60)
    return f"{hours} h {minutes} min"

def bytes_to_human_readable(size: int) -> str:
    """Retourne une chaîne de caractères représentant la taille en octets donnée

    :param size: Taille en octets
    :return: str
    """
    for unit in ('o', 'Ko', 'Mo', 'Go', 'To'):
        if size < 1024:
            return f"{size} {unit}" if unit == 'o' else f"{round(size, 2)} {unit}"
        size /= 1024 # type: ignore
    return f"{round(size, 2)} Po"
